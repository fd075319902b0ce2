#include "repdis/augment.hpp"

#include <algorithm>
#include <cmath>

#include "repdis/error.hpp"

namespace repdis {

void AugmentationPolicy::validate(const ImageShape& shape) const {
  const auto min_side = static_cast<double>(std::min(shape.width, shape.height));
  if (max_translate < 0 || 2.0 * max_translate >= min_side) {
    throw InvalidArgumentError("max_translate " + std::to_string(max_translate) +
                               " must be in [0, min(W,H)/2) for shape " + to_string(shape));
  }
  if (!(cutout_fraction >= 0.0 && cutout_fraction < 1.0)) {
    throw InvalidArgumentError("cutout_fraction must be in [0, 1)");
  }
  if (!(color_jitter >= 0.0) || !std::isfinite(color_jitter)) {
    throw InvalidArgumentError("color_jitter must be finite and >= 0");
  }
  if (samples_per_step < 1) throw InvalidArgumentError("samples_per_step must be >= 1");
}

AugmentationDraw draw_augmentation(const AugmentationPolicy& policy, const ImageShape& shape,
                                   Rng& rng) {
  policy.validate(shape);
  AugmentationDraw d;
  if (policy.max_translate > 0) {
    std::uniform_int_distribution<int> shift(-policy.max_translate, policy.max_translate);
    d.shift_x = shift(rng);
    d.shift_y = shift(rng);
  }
  if (policy.cutout_fraction > 0.0) {
    const double area = policy.cutout_fraction * static_cast<double>(shape.width * shape.height);
    const auto side = std::min<std::size_t>(static_cast<std::size_t>(std::lround(std::sqrt(area))),
                                            std::min(shape.width, shape.height));
    if (side > 0) {
      std::uniform_int_distribution<std::size_t> px(0, shape.width - side);
      std::uniform_int_distribution<std::size_t> py(0, shape.height - side);
      d.cutout_size = side;
      d.cutout_x = px(rng);
      d.cutout_y = py(rng);
    }
  }
  if (policy.color_jitter > 0.0) {
    std::uniform_real_distribution<double> scale(1.0 - policy.color_jitter,
                                                 1.0 + policy.color_jitter);
    d.channel_scale.resize(shape.channels);
    for (auto& s : d.channel_scale) s = scale(rng);
  }
  return d;
}

namespace {

bool in_cutout(const AugmentationDraw& d, std::size_t x, std::size_t y) {
  return d.cutout_size > 0 && x >= d.cutout_x && x < d.cutout_x + d.cutout_size &&
         y >= d.cutout_y && y < d.cutout_y + d.cutout_size;
}

// Output pixel (x, y) reads input (x - shift_x, y - shift_y); returns false
// when that lies outside the image (zero fill).
bool source_of(const AugmentationDraw& d, const ImageShape& s, std::size_t x, std::size_t y,
               std::size_t& sx, std::size_t& sy) {
  const auto ix = static_cast<long>(x) - d.shift_x;
  const auto iy = static_cast<long>(y) - d.shift_y;
  if (ix < 0 || iy < 0 || ix >= static_cast<long>(s.width) || iy >= static_cast<long>(s.height)) {
    return false;
  }
  sx = static_cast<std::size_t>(ix);
  sy = static_cast<std::size_t>(iy);
  return true;
}

}  // namespace

std::vector<double> apply_augmentation(const AugmentationDraw& d, const ImageShape& s,
                                       std::span<const double> pixels) {
  if (pixels.size() != s.size()) throw DimensionError("augmentation: pixel count mismatch");
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      std::size_t sx, sy;
      if (in_cutout(d, x, y) || !source_of(d, s, x, y, sx, sy)) continue;
      for (std::size_t c = 0; c < s.channels; ++c) {
        const double v = pixels[s.index(sx, sy, c)];
        out[s.index(x, y, c)] = d.channel_scale.empty() ? v : v * d.channel_scale[c];
      }
    }
  }
  return out;
}

std::vector<double> apply_augmentation_adjoint(const AugmentationDraw& d, const ImageShape& s,
                                               std::span<const double> gradient) {
  if (gradient.size() != s.size()) throw DimensionError("augmentation: gradient size mismatch");
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      std::size_t sx, sy;
      if (in_cutout(d, x, y) || !source_of(d, s, x, y, sx, sy)) continue;
      for (std::size_t c = 0; c < s.channels; ++c) {
        const double g = gradient[s.index(x, y, c)];
        out[s.index(sx, sy, c)] += d.channel_scale.empty() ? g : g * d.channel_scale[c];
      }
    }
  }
  return out;
}

SynthImage perturb(const AugmentationPolicy& policy, const SynthImage& x, Rng& rng) {
  if (policy.is_identity()) {
    policy.validate(x.shape());
    return x;
  }
  const auto draw = draw_augmentation(policy, x.shape(), rng);
  return SynthImage(x.shape(), apply_augmentation(draw, x.shape(), x.pixels()), x.provenance());
}

AveragedGradient averaged_objective_gradient(const AugmentationPolicy& policy,
                                             const ImageShape& shape,
                                             std::span<const double> x,
                                             const DifferentiableMap& encoder,
                                             const TargetRepresentation& target,
                                             std::uint64_t step, bool include_clean) {
  policy.validate(shape);
  if (x.size() != shape.size()) throw DimensionError("averaged gradient: image size mismatch");
  if (encoder.in_dim() != shape.size()) {
    throw DimensionError("encoder input " + to_string(encoder.in_shape()) +
                         " does not match image " + to_string(shape));
  }
  require_same_dim(encoder.out_dim(), target.vector.dim(), "encoder output vs target");

  const auto t = target.vector.values();
  AveragedGradient out;

  auto accumulate = [&](std::span<const double> image, const AugmentationDraw* draw) {
    const auto r = encoder.forward(image);
    out.objective += cosine_similarity(r, t);
    auto g_r = cosine_gradient(r, t);
    for (auto& v : g_r) v = -v;
    auto g = encoder.vjp(image, g_r);
    if (draw != nullptr) g = apply_augmentation_adjoint(*draw, shape, g);
    if (out.samples == 0) {
      out.gradient = std::move(g);
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) out.gradient[i] += g[i];
    }
    ++out.samples;
  };

  if (policy.is_identity()) {
    accumulate(x, nullptr);
  } else {
    for (std::size_t k = 0; k < policy.samples_per_step; ++k) {
      auto rng = augmentation_stream(policy, step, k);
      const auto draw = draw_augmentation(policy, shape, rng);
      const auto xk = apply_augmentation(draw, shape, x);
      accumulate(xk, &draw);
    }
  }
  if (include_clean && !policy.is_identity()) accumulate(x, nullptr);

  if (out.samples > 1) {
    const double inv = 1.0 / static_cast<double>(out.samples);
    for (auto& g : out.gradient) g *= inv;
    out.objective *= inv;
  }
  return out;
}

}  // namespace repdis
