#pragma once

// Synthetic ground-truth world. Images are formed additively from one style
// part and k weighted content parts,
//
//   X = style_image[s] + sum_m c_m * content_basis[m],   c ~ N(0, sigma^2 I_k),
//
// and encoded by a seeded encoder whose linear kind is exactly compositional.
// Because the true style embedding is known, every estimate made from
// embeddings alone can be scored.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "repdis/differentiable_map.hpp"
#include "repdis/embedding.hpp"
#include "repdis/image.hpp"
#include "repdis/rng.hpp"

namespace repdis {

enum class EncoderKind { Linear, LinearTanh };

std::string to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(const std::string& s);

struct EncoderSpec {
  EncoderKind kind = EncoderKind::Linear;
  std::uint64_t matrix_seed = 7;
  std::size_t out_dim = 64;
  double nonlinearity_gain = 0.1;  // linear_tanh only
};

/// Compact, serializable description of a world. Part images are
/// regenerated deterministically from `seed`.
struct WorldParams {
  std::size_t image_width = 32;
  std::size_t image_height = 32;
  std::size_t channels = 3;
  std::vector<std::string> style_labels{"sketch", "photo", "painting"};
  std::size_t content_parts = 8;
  double sigma = 1.0;
  EncoderSpec encoder{};
  std::uint64_t seed = 0;
};

struct StylePart {
  std::string label;
  std::vector<double> pixels;
};

/// r = M x for kind linear, r = M x + gain * tanh(M' x) for linear_tanh.
/// M has orthonormal rows whose span contains every style and content part,
/// followed by smooth random directions. M' is an independent smooth basis.
class WorldEncoder final : public DifferentiableMap {
public:
  WorldEncoder(EncoderSpec spec, ImageShape image, const std::vector<StylePart>& styles,
               const std::vector<std::vector<double>>& content_basis);

  std::string name() const override;
  ImageShape in_shape() const override { return image_; }
  ImageShape out_shape() const override { return vector_shape(spec_.out_dim); }
  std::vector<double> forward(std::span<const double> x) const override;
  std::vector<double> vjp(std::span<const double> x,
                          std::span<const double> cotangent) const override;

  /// Encodes each column of `images` (pixels x n). Columns are processed in
  /// fixed-width zero-padded blocks so a column's result does not depend on
  /// its position or on n.
  Eigen::MatrixXd encode_batch(const Eigen::MatrixXd& images) const;

  const EncoderSpec& spec() const noexcept { return spec_; }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  const Eigen::MatrixXd& nonlinear_matrix() const noexcept { return nonlinear_matrix_; }

  static constexpr Eigen::Index kBatchBlock = 32;

private:
  EncoderSpec spec_;
  ImageShape image_;
  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd nonlinear_matrix_;  // empty for kind linear
};

/// An embedding dataset drawn from one stylistic domain, with its ground truth.
struct SynthDataset {
  std::vector<SynthImage> images;  // empty when produced by sample_embeddings
  std::vector<EmbeddingVector> embeddings;
  std::vector<std::vector<double>> contents;
  StyleRepresentation ground_truth;
};

class World {
public:
  /// Validates every invariant: matching part shapes, full-rank content
  /// basis, sigma >= 0, and out_dim >= k + number of styles.
  World(ImageShape shape, std::vector<StylePart> styles,
        std::vector<std::vector<double>> content_basis, double sigma, EncoderSpec encoder,
        std::uint64_t seed);

  /// Builds the default part images (tinted textures for styles, smooth
  /// Gaussian bumps for content) from params.seed.
  static World from_params(const WorldParams& params);

  const ImageShape& shape() const noexcept { return shape_; }
  const std::vector<StylePart>& styles() const noexcept { return styles_; }
  const std::vector<std::vector<double>>& content_basis() const noexcept { return content_basis_; }
  std::size_t content_parts() const noexcept { return content_basis_.size(); }
  double sigma() const noexcept { return sigma_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::shared_ptr<const WorldEncoder>& encoder() const noexcept { return encoder_; }
  std::size_t embedding_dim() const noexcept { return encoder_->spec().out_dim; }

  const StylePart& style(const std::string& label) const;
  bool has_style(const std::string& label) const;

  /// k i.i.d. draws from N(0, sigma^2).
  std::vector<double> sample_content(Rng& rng) const;

  SynthImage form_image(const std::string& style_label, std::span<const double> content) const;

  EmbeddingVector encode(const SynthImage& x) const;

  /// The true style embedding of a domain: the encoding of its zero-content image.
  StyleRepresentation true_style(const std::string& style_label) const;

  /// n images with contents drawn from per-index streams (seed, i).
  SynthDataset make_dataset(const std::string& style_label, std::size_t n,
                            std::uint64_t seed) const;
  /// As make_dataset, without retaining the images.
  SynthDataset sample_embeddings(const std::string& style_label, std::size_t n,
                                 std::uint64_t seed) const;

private:
  SynthDataset generate(const std::string& style_label, std::size_t n, std::uint64_t seed,
                        bool keep_images) const;
  void form_into(const StylePart& style, std::span<const double> content,
                 std::span<double> out) const;

  ImageShape shape_;
  std::vector<StylePart> styles_;
  std::vector<std::vector<double>> content_basis_;
  double sigma_;
  std::uint64_t seed_;
  std::shared_ptr<const WorldEncoder> encoder_;
};

}  // namespace repdis
