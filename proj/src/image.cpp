#include "repdis/image.hpp"

#include <cmath>

#include "repdis/error.hpp"

namespace repdis {

std::string to_string(const ImageShape& s) {
  return std::to_string(s.width) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.channels);
}

SynthImage::SynthImage(ImageShape shape, std::vector<double> pixels,
                       std::optional<Provenance> provenance)
    : shape_(shape), pixels_(std::move(pixels)), provenance_(std::move(provenance)) {
  if (shape_.size() == 0) throw DimensionError("image shape must be non-empty");
  if (pixels_.size() != shape_.size()) {
    throw DimensionError("image of shape " + to_string(shape_) + " needs " +
                         std::to_string(shape_.size()) + " pixels, got " +
                         std::to_string(pixels_.size()));
  }
  for (std::size_t i = 0; i < pixels_.size(); ++i) {
    if (!std::isfinite(pixels_[i])) {
      throw NumericalError("non-finite pixel at flat index " + std::to_string(i));
    }
  }
}


void add_gaussian_bump(std::span<double> pixels, const ImageShape& shape, double cx, double cy,
                       double width, std::span<const double> amplitude) {
  const double inv = 1.0 / (2.0 * width * width);
  for (std::size_t y = 0; y < shape.height; ++y) {
    for (std::size_t x = 0; x < shape.width; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double w = std::exp(-(dx * dx + dy * dy) * inv);
      for (std::size_t c = 0; c < shape.channels; ++c) {
        pixels[shape.index(x, y, c)] += amplitude[c] * w;
      }
    }
  }
}

}  // namespace repdis
