#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "repdis/differentiable_map.hpp"
#include "repdis/embedding.hpp"
#include "repdis/image.hpp"
#include "repdis/rng.hpp"

namespace repdis {

/// Random perturbation distribution applied to images before encoding:
/// integer translation, one square cutout, then per-channel scaling.
struct AugmentationPolicy {
  int max_translate = 2;        // pixels, zero-filled
  double cutout_fraction = 0.1; // cutout area as a fraction of W*H
  double color_jitter = 0.1;    // channel scale drawn from [1 - j, 1 + j]
  std::size_t samples_per_step = 32;
  std::uint64_t seed = 0;

  static AugmentationPolicy identity(std::size_t samples = 1) {
    return AugmentationPolicy{0, 0.0, 0.0, samples, 0};
  }

  bool is_identity() const noexcept {
    return max_translate == 0 && cutout_fraction == 0.0 && color_jitter == 0.0;
  }

  /// Throws InvalidArgumentError if the policy cannot apply to `shape`.
  void validate(const ImageShape& shape) const;
};

/// Parameters of one perturbation. Each draw is a fixed linear operator.
struct AugmentationDraw {
  int shift_x = 0;
  int shift_y = 0;
  std::size_t cutout_x = 0;
  std::size_t cutout_y = 0;
  std::size_t cutout_size = 0;  // 0 means no cutout
  std::vector<double> channel_scale;  // empty means all ones
};

AugmentationDraw draw_augmentation(const AugmentationPolicy& policy, const ImageShape& shape,
                                   Rng& rng);

std::vector<double> apply_augmentation(const AugmentationDraw& draw, const ImageShape& shape,
                                       std::span<const double> pixels);
/// Transpose of apply_augmentation, used to route gradients back to the input.
std::vector<double> apply_augmentation_adjoint(const AugmentationDraw& draw,
                                               const ImageShape& shape,
                                               std::span<const double> gradient);

SynthImage perturb(const AugmentationPolicy& policy, const SynthImage& x, Rng& rng);

/// Stream used for sample k of optimisation step `step`.
inline Rng augmentation_stream(const AugmentationPolicy& policy, std::uint64_t step,
                               std::uint64_t sample) {
  return derive_stream(policy.seed, {0x617567ULL, step, sample});
}

struct AveragedGradient {
  std::vector<double> gradient;  // d/dx of the mean of -cos over samples
  double objective = 0.0;        // mean cosine similarity over samples
  std::size_t samples = 0;
};

/// Monte Carlo estimate of grad_x E_{x'~policy}[-cos(encoder(x'), target)]
/// using policy.samples_per_step draws from the streams of `step`. An
/// identity policy evaluates the single deterministic sample once.
/// With include_clean, the unperturbed image is added as one extra sample.
AveragedGradient averaged_objective_gradient(const AugmentationPolicy& policy,
                                             const ImageShape& shape,
                                             std::span<const double> x,
                                             const DifferentiableMap& encoder,
                                             const TargetRepresentation& target,
                                             std::uint64_t step = 0,
                                             bool include_clean = false);

}  // namespace repdis
