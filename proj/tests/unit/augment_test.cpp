#include <cmath>

#include "doctest.h"
#include "test_support.hpp"

#include "repdis/augment.hpp"
#include "repdis/differentiable_map.hpp"
#include "repdis/synthworld.hpp"

using namespace repdis;
using namespace repdis::testing;

namespace {

const World& world() {
  static const World w = World::from_params(WorldParams{});
  return w;
}

SynthImage sample_image(std::uint64_t seed) {
  auto rng = derive_stream(seed);
  return world().form_image("sketch", world().sample_content(rng));
}

TargetRepresentation sample_target(std::uint64_t seed) {
  auto rng = derive_stream(seed);
  return {world().encode(world().form_image("photo", world().sample_content(rng))), "c", "photo"};
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Mean of -cos over the draws of `step`, the function whose gradient
// averaged_objective_gradient estimates.
double averaged_loss(const AugmentationPolicy& p, std::span<const double> x,
                     const TargetRepresentation& t) {
  const auto& s = world().shape();
  double sum = 0.0;
  for (std::size_t k = 0; k < p.samples_per_step; ++k) {
    auto rng = augmentation_stream(p, 0, k);
    const auto d = draw_augmentation(p, s, rng);
    sum -= cosine_similarity(world().encoder()->forward(apply_augmentation(d, s, x)),
                             t.vector.values());
  }
  return sum / static_cast<double>(p.samples_per_step);
}

}  // namespace

TEST_SUITE("policy") {
  TEST_CASE("validation") {
    const ImageShape s{32, 32, 3};
    AugmentationPolicy p;
    CHECK_NOTHROW(p.validate(s));
    p.max_translate = 16;
    CHECK(error_category([&] { p.validate(s); }) == ErrorCategory::InvalidArgument);
    p.max_translate = 15;
    CHECK_NOTHROW(p.validate(s));
    p.cutout_fraction = 1.0;
    CHECK(error_category([&] { p.validate(s); }) == ErrorCategory::InvalidArgument);
    p.cutout_fraction = 0.5;
    p.color_jitter = -0.1;
    CHECK(error_category([&] { p.validate(s); }) == ErrorCategory::InvalidArgument);
    p.color_jitter = 0.1;
    p.samples_per_step = 0;
    CHECK(error_category([&] { p.validate(s); }) == ErrorCategory::InvalidArgument);
  }

  TEST_CASE("identity") {
    CHECK(AugmentationPolicy::identity().is_identity());
    CHECK_FALSE(AugmentationPolicy{}.is_identity());
  }
}

TEST_SUITE("perturb") {
  TEST_CASE("identity policy returns the input bitwise") {
    const auto x = sample_image(1);
    auto rng = derive_stream(4);
    const auto y = perturb(AugmentationPolicy::identity(), x, rng);
    CHECK(std::equal(x.pixels().begin(), x.pixels().end(), y.pixels().begin(), y.pixels().end()));
  }

  TEST_CASE("shift and inverse shift recover the interior") {
    const auto x = sample_image(2);
    const auto& s = x.shape();
    for (int tx : {-2, 0, 1, 3}) {
      for (int ty : {-1, 2}) {
        AugmentationDraw fwd, back;
        fwd.shift_x = tx;
        fwd.shift_y = ty;
        back.shift_x = -tx;
        back.shift_y = -ty;
        const auto y = apply_augmentation(back, s, apply_augmentation(fwd, s, x.pixels()));
        const auto ax = static_cast<std::size_t>(std::abs(tx));
        const auto ay = static_cast<std::size_t>(std::abs(ty));
        for (std::size_t py = ay; py + ay < s.height; ++py) {
          for (std::size_t px = ax; px + ax < s.width; ++px) {
            for (std::size_t c = 0; c < s.channels; ++c) {
              CHECK(y[s.index(px, py, c)] == x.at(px, py, c));
            }
          }
        }
      }
    }
  }

  TEST_CASE("deterministic given the stream, shape preserving") {
    const auto x = sample_image(3);
    AugmentationPolicy p;
    auto a = derive_stream(9), b = derive_stream(9);
    const auto ya = perturb(p, x, a), yb = perturb(p, x, b);
    CHECK(ya.shape() == x.shape());
    CHECK(std::equal(ya.pixels().begin(), ya.pixels().end(), yb.pixels().begin()));
  }

  TEST_CASE("draw parameters respect the policy") {
    AugmentationPolicy p;
    p.max_translate = 3;
    p.cutout_fraction = 0.1;
    p.color_jitter = 0.2;
    const ImageShape s{32, 32, 3};
    auto rng = derive_stream(10);
    for (int i = 0; i < 500; ++i) {
      const auto d = draw_augmentation(p, s, rng);
      CHECK(std::abs(d.shift_x) <= 3);
      CHECK(std::abs(d.shift_y) <= 3);
      CHECK(d.cutout_size == 10);  // round(sqrt(0.1 * 1024))
      CHECK(d.cutout_x + d.cutout_size <= s.width);
      CHECK(d.cutout_y + d.cutout_size <= s.height);
      REQUIRE(d.channel_scale.size() == 3);
      for (double c : d.channel_scale) {
        CHECK(c >= 0.8);
        CHECK(c <= 1.2);
      }
    }
  }

  TEST_CASE("cutout zeroes a square of the requested area") {
    AugmentationDraw d;
    d.cutout_size = 10;
    d.cutout_x = 5;
    d.cutout_y = 20;
    const ImageShape s{32, 32, 3};
    const std::vector<double> ones(s.size(), 1.0);
    const auto y = apply_augmentation(d, s, ones);
    std::size_t zeros = 0;
    for (double v : y) zeros += v == 0.0 ? 1 : 0;
    CHECK(zeros == 10 * 10 * 3);
    CHECK(y[s.index(5, 20, 0)] == 0.0);
    CHECK(y[s.index(4, 20, 0)] == 1.0);
  }

  TEST_CASE("adjoint is the transpose") {
    const ImageShape s{32, 32, 3};
    AugmentationPolicy p;
    auto rng = derive_stream(11);
    for (std::uint64_t t = 0; t < 50; ++t) {
      const auto d = draw_augmentation(p, s, rng);
      const auto x = gaussian(s.size(), 100 + t), y = gaussian(s.size(), 200 + t);
      const double lhs = dot(apply_augmentation(d, s, x), y);
      const double rhs = dot(x, apply_augmentation_adjoint(d, s, y));
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_SUITE("averaged_objective_gradient") {
  TEST_CASE("identity policy equals the plain gradient bitwise") {
    const auto x = sample_image(20);
    const auto t = sample_target(21);
    const auto& enc = *world().encoder();
    auto g_r = cosine_gradient(enc.forward(x.pixels()), t.vector.values());
    for (auto& v : g_r) v = -v;
    const auto plain = enc.vjp(x.pixels(), g_r);
    for (std::size_t k : {1u, 4u, 32u}) {
      const auto avg =
          averaged_objective_gradient(AugmentationPolicy::identity(k), x.shape(), x.pixels(), enc, t);
      CHECK(avg.gradient == plain);
      CHECK(avg.samples == 1);
      CHECK(avg.objective == cosine_similarity(enc.forward(x.pixels()), t.vector.values()));
    }
  }

  TEST_CASE("vanishes at alignment") {
    const auto x = sample_image(22);
    const auto& enc = *world().encoder();
    auto r = enc.forward(x.pixels());
    for (auto& v : r) v *= 2.5;
    const TargetRepresentation t{EmbeddingVector(r), "", ""};
    const auto g =
        averaged_objective_gradient(AugmentationPolicy::identity(), x.shape(), x.pixels(), enc, t);
    CHECK(EmbeddingVector(g.gradient).norm() <= 1e-8);
    CHECK(g.objective == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("matches finite differences for fixed draws") {
    const auto x = sample_image(23);
    const auto t = sample_target(24);
    AugmentationPolicy p;
    p.samples_per_step = 4;
    p.seed = 5;
    const auto g = averaged_objective_gradient(p, x.shape(), x.pixels(), *world().encoder(), t);
    auto rng = derive_stream(25);
    std::uniform_int_distribution<std::size_t> pick(0, x.pixels().size() - 1);
    std::vector<double> px(x.pixels().begin(), x.pixels().end());
    int checked = 0;
    while (checked < 32) {
      const auto i = pick(rng);
      const double h = 1e-5;
      const double keep = px[i];
      px[i] = keep + h;
      const double up = averaged_loss(p, px, t);
      px[i] = keep - h;
      const double dn = averaged_loss(p, px, t);
      px[i] = keep;
      const double fd = (up - dn) / (2 * h);
      if (std::abs(fd) < 1e-9 && std::abs(g.gradient[i]) < 1e-9) continue;  // pixel masked out
      CHECK(std::abs(fd - g.gradient[i]) / std::max(std::abs(fd), std::abs(g.gradient[i])) <= 1e-4);
      ++checked;
    }
  }

  TEST_CASE("include_clean adds one unperturbed sample") {
    const auto x = sample_image(26);
    const auto t = sample_target(27);
    AugmentationPolicy p;
    p.samples_per_step = 3;
    const auto& enc = *world().encoder();
    const auto with = averaged_objective_gradient(p, x.shape(), x.pixels(), enc, t, 0, true);
    const auto without = averaged_objective_gradient(p, x.shape(), x.pixels(), enc, t, 0, false);
    const auto clean = averaged_objective_gradient(AugmentationPolicy::identity(), x.shape(),
                                                   x.pixels(), enc, t);
    CHECK(with.samples == 4);
    for (std::size_t i = 0; i < x.pixels().size(); i += 97) {
      CHECK(with.gradient[i] ==
            doctest::Approx((3 * without.gradient[i] + clean.gradient[i]) / 4).epsilon(1e-12));
    }
  }

  TEST_CASE("variance falls like 1/K") {
    const auto x = sample_image(28);
    const auto t = sample_target(29);
    const auto& enc = *world().encoder();
    auto variance = [&](std::size_t k) {
      const std::size_t reps = 100;
      std::vector<std::vector<double>> gs;
      for (std::size_t r = 0; r < reps; ++r) {
        AugmentationPolicy p;
        p.samples_per_step = k;
        p.seed = 1000 + r;
        gs.push_back(averaged_objective_gradient(p, x.shape(), x.pixels(), enc, t).gradient);
      }
      std::vector<double> mean(gs[0].size(), 0.0);
      for (const auto& g : gs) {
        for (std::size_t i = 0; i < g.size(); ++i) mean[i] += g[i] / reps;
      }
      double v = 0.0;
      for (const auto& g : gs) {
        for (std::size_t i = 0; i < g.size(); ++i) v += (g[i] - mean[i]) * (g[i] - mean[i]);
      }
      return v / (reps - 1);
    };
    const double ratio = variance(1) / variance(16);
    CHECK(ratio > 8.0);
    CHECK(ratio < 32.0);
  }

  TEST_CASE("degenerate encoder output") {
    const ImageShape s{8, 8, 1};
    const LinearMap zero("zero", Eigen::MatrixXd::Zero(4, 64), s, vector_shape(4));
    const TargetRepresentation t{EmbeddingVector{1, 0, 0, 0}, "", ""};
    const std::vector<double> x(64, 1.0);
    CHECK(error_category([&] {
            averaged_objective_gradient(AugmentationPolicy::identity(), s, x, zero, t);
          }) == ErrorCategory::DegenerateVector);
  }

  TEST_CASE("shape errors") {
    const auto t = sample_target(30);
    const std::vector<double> wrong(10, 1.0);
    CHECK(error_category([&] {
            averaged_objective_gradient(AugmentationPolicy::identity(), world().shape(), wrong,
                                        *world().encoder(), t);
          }) == ErrorCategory::Dimension);
    const TargetRepresentation short_t{EmbeddingVector{1, 2}, "", ""};
    const auto x = sample_image(31);
    CHECK(error_category([&] {
            averaged_objective_gradient(AugmentationPolicy::identity(), x.shape(), x.pixels(),
                                        *world().encoder(), short_t);
          }) == ErrorCategory::Dimension);
  }
}
