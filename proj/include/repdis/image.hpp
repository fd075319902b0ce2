#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace repdis {

struct ImageShape {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;

  std::size_t size() const noexcept { return width * height * channels; }
  /// Flat offset of pixel (x, y), channel c. Storage is row-major HWC.
  std::size_t index(std::size_t x, std::size_t y, std::size_t c) const noexcept {
    return (y * width + x) * channels + c;
  }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

std::string to_string(const ImageShape& s);

/// Which style part and content coefficients produced an image.
struct Provenance {
  std::string style_label;
  std::vector<double> content;
};

/// A W x H x C grid of finite reals.
class SynthImage {
public:
  SynthImage() = default;
  SynthImage(ImageShape shape, std::vector<double> pixels,
             std::optional<Provenance> provenance = std::nullopt);

  static SynthImage zeros(ImageShape shape) {
    return SynthImage(shape, std::vector<double>(shape.size(), 0.0));
  }

  const ImageShape& shape() const noexcept { return shape_; }
  std::span<const double> pixels() const noexcept { return pixels_; }
  std::vector<double>& mutable_pixels() noexcept { return pixels_; }
  const std::optional<Provenance>& provenance() const noexcept { return provenance_; }

  double at(std::size_t x, std::size_t y, std::size_t c) const {
    return pixels_[shape_.index(x, y, c)];
  }

private:
  ImageShape shape_;
  std::vector<double> pixels_;
  std::optional<Provenance> provenance_;
};

/// Adds amplitude[c] * exp(-|p - center|^2 / (2 width^2)) to every channel c.
void add_gaussian_bump(std::span<double> pixels, const ImageShape& shape, double cx, double cy,
                       double width, std::span<const double> amplitude);

}  // namespace repdis
