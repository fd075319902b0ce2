#include <cmath>
#include <memory>
#include <numeric>

#include <Eigen/Dense>

#include "doctest.h"
#include "test_support.hpp"

#include "repdis/synthworld.hpp"

using namespace repdis;
using namespace repdis::testing;

namespace {

const World& default_world() {
  static const World w = World::from_params(WorldParams{});
  return w;
}

World world_with(double sigma, EncoderKind kind = EncoderKind::Linear, double gain = 0.1) {
  WorldParams p;
  p.sigma = sigma;
  p.encoder.kind = kind;
  p.encoder.nonlinearity_gain = gain;
  return World::from_params(p);
}

SynthImage scaled(const SynthImage& x, double a) {
  std::vector<double> px(x.pixels().begin(), x.pixels().end());
  for (auto& v : px) v *= a;
  return SynthImage(x.shape(), std::move(px));
}

double rel_error(std::span<const double> a, std::span<const double> b) {
  double scale = 0.0;
  for (double v : b) scale = std::max(scale, std::abs(v));
  return max_abs_diff(a, b) / std::max(scale, 1e-300);
}

}  // namespace

TEST_SUITE("world_construction") {
  TEST_CASE("default world shape") {
    const auto& w = default_world();
    CHECK(w.shape() == ImageShape{32, 32, 3});
    CHECK(w.content_parts() == 8);
    CHECK(w.embedding_dim() == 64);
    CHECK(w.styles().size() == 3);
    CHECK(w.has_style("sketch"));
    CHECK_FALSE(w.has_style("cat"));
  }

  TEST_CASE("encoder rows are orthonormal") {
    const auto& m = default_world().encoder()->matrix();
    const Eigen::MatrixXd gram = m * m.transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("encoder preserves content and style parts") {
    // Every part lies in the row span of M, so |M x| == |x| for each part.
    const auto& w = default_world();
    for (const auto& b : w.content_basis()) {
      const auto r = w.encoder()->forward(b);
      const double in = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
      CHECK(EmbeddingVector(r).norm() == doctest::Approx(in).epsilon(1e-12));
    }
  }

  TEST_CASE("rank check rejects dependent content bases") {
    const auto& w = default_world();
    auto basis = w.content_basis();
    basis.push_back(basis[0]);
    CHECK(error_category([&] {
            World(w.shape(), w.styles(), basis, 1.0, EncoderSpec{}, 0);
          }) == ErrorCategory::InvalidArgument);
    auto combo = w.content_basis();
    for (std::size_t i = 0; i < combo[0].size(); ++i) combo[1][i] = 2.0 * combo[0][i] - combo[2][i];
    CHECK(error_category([&] {
            World(w.shape(), w.styles(), combo, 1.0, EncoderSpec{}, 0);
          }) == ErrorCategory::InvalidArgument);
  }

  TEST_CASE("invalid parameters") {
    const auto& w = default_world();
    CHECK(error_category([&] {
            World(w.shape(), w.styles(), w.content_basis(), -1.0, EncoderSpec{}, 0);
          }) == ErrorCategory::InvalidArgument);
    EncoderSpec narrow;
    narrow.out_dim = 10;  // < 8 content parts + 3 styles
    CHECK(error_category([&] {
            World(w.shape(), w.styles(), w.content_basis(), 1.0, narrow, 0);
          }) == ErrorCategory::InvalidArgument);
    auto styles = w.styles();
    styles[1].label = styles[0].label;
    CHECK(error_category([&] {
            World(w.shape(), styles, w.content_basis(), 1.0, EncoderSpec{}, 0);
          }) == ErrorCategory::InvalidArgument);
    auto short_basis = w.content_basis();
    short_basis[0].pop_back();
    CHECK(error_category([&] {
            World(w.shape(), w.styles(), short_basis, 1.0, EncoderSpec{}, 0);
          }) == ErrorCategory::Dimension);
  }

  TEST_CASE("same params give the same world") {
    const auto a = World::from_params(WorldParams{});
    const auto& b = default_world();
    CHECK(a.content_basis() == b.content_basis());
    CHECK(a.encoder()->matrix() == b.encoder()->matrix());
    for (std::size_t i = 0; i < a.styles().size(); ++i) CHECK(a.styles()[i].pixels == b.styles()[i].pixels);
  }
}

TEST_SUITE("sample_content") {
  TEST_CASE("sigma zero gives zeros") {
    const auto w = world_with(0.0);
    auto rng = derive_stream(1);
    for (int i = 0; i < 10; ++i) CHECK(w.sample_content(rng) == std::vector<double>(8, 0.0));
  }

  TEST_CASE("sigma one moments") {
    const auto& w = default_world();
    auto rng = derive_stream(2);
    const std::size_t n = 100000, k = w.content_parts();
    std::vector<double> sum(k, 0.0), sum2(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = w.sample_content(rng);
      for (std::size_t m = 0; m < k; ++m) {
        sum[m] += c[m];
        sum2[m] += c[m] * c[m];
      }
    }
    for (std::size_t m = 0; m < k; ++m) {
      const double mean = sum[m] / n;
      const double sd = std::sqrt(sum2[m] / n - mean * mean);
      CHECK(std::abs(mean) <= 0.02);
      CHECK(std::abs(sd - 1.0) <= 0.02);
    }
  }

  TEST_CASE("deterministic per stream") {
    const auto& w = default_world();
    auto a = derive_stream(77), b = derive_stream(77);
    for (int i = 0; i < 5; ++i) CHECK(w.sample_content(a) == w.sample_content(b));
  }
}

TEST_SUITE("form_image") {
  TEST_CASE("zero content is the style part") {
    const auto& w = default_world();
    for (const auto& s : w.styles()) {
      const auto x = w.form_image(s.label, std::vector<double>(8, 0.0));
      CHECK(std::vector<double>(x.pixels().begin(), x.pixels().end()) == s.pixels);
      REQUIRE(x.provenance());
      CHECK(x.provenance()->style_label == s.label);
    }
  }

  TEST_CASE("unit content adds one basis part") {
    const auto& w = default_world();
    std::vector<double> c(8, 0.0);
    c[0] = 1.0;
    const auto x = w.form_image("photo", c);
    const auto& s = w.style("photo").pixels;
    const auto& b = w.content_basis()[0];
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(x.pixels()[i] == s[i] + b[i]);
  }

  TEST_CASE("additive in content") {
    const auto& w = default_world();
    const auto c1 = gaussian(8, 1), c2 = gaussian(8, 2);
    std::vector<double> c12(8);
    for (int m = 0; m < 8; ++m) c12[m] = c1[m] + c2[m];
    const auto a = w.form_image("sketch", c1), b = w.form_image("sketch", c2);
    const auto ab = w.form_image("sketch", c12);
    const auto& s = w.style("sketch").pixels;
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(std::abs(ab.pixels()[i] - (a.pixels()[i] + b.pixels()[i] - s[i])) <= 1e-12);
    }
  }

  TEST_CASE("errors") {
    const auto& w = default_world();
    CHECK(error_category([&] { w.form_image("cat", std::vector<double>(8, 0.0)); }) ==
          ErrorCategory::UnknownDomain);
    CHECK(error_category([&] { w.form_image("sketch", std::vector<double>(7, 0.0)); }) ==
          ErrorCategory::Dimension);
  }
}

TEST_SUITE("encode") {
  TEST_CASE("linear encoder is homogeneous and additive") {
    const auto& w = default_world();
    auto rng = derive_stream(5);
    const auto x1 = w.form_image("sketch", w.sample_content(rng));
    const auto x2 = w.form_image("painting", w.sample_content(rng));
    const auto r1 = w.encode(x1), r2 = w.encode(x2);
    for (double a : {-3.0, 0.5, 17.0}) {
      auto ra = r1.data();
      for (auto& v : ra) v *= a;
      CHECK(rel_error(w.encode(scaled(x1, a)).values(), ra) <= 1e-12);
    }
    std::vector<double> sum(x1.pixels().size());
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = x1.pixels()[i] + x2.pixels()[i];
    std::vector<double> rsum(r1.dim());
    for (std::size_t i = 0; i < rsum.size(); ++i) rsum[i] = r1[i] + r2[i];
    CHECK(rel_error(w.encode(SynthImage(w.shape(), sum)).values(), rsum) <= 1e-12);
  }

  TEST_CASE("dimension mismatch") {
    const auto& w = default_world();
    CHECK(error_category([&] { w.encode(SynthImage::zeros(ImageShape{16, 16, 3})); }) ==
          ErrorCategory::Dimension);
    CHECK(error_category([&] { w.encoder()->forward(std::vector<double>(5)); }) ==
          ErrorCategory::Dimension);
  }

  TEST_CASE("batch path matches single encodes") {
    const auto& w = default_world();
    const auto ds = w.make_dataset("photo", 70, 3);
    for (std::size_t i = 0; i < ds.images.size(); ++i) {
      CHECK(rel_error(w.encode(ds.images[i]).values(), ds.embeddings[i].values()) <= 1e-12);
    }
  }

  TEST_CASE("linear_tanh tends to linear as the gain vanishes") {
    auto rng = derive_stream(8);
    const auto& lin = default_world();
    const auto x = lin.form_image("sketch", lin.sample_content(rng));
    const auto r = lin.encode(x);
    for (double gain : {0.1, 1e-2, 1e-4}) {
      const auto nl = world_with(1.0, EncoderKind::LinearTanh, gain);
      CHECK(max_abs_diff(nl.encode(x).values(), r.values()) <= gain);
    }
    const auto zero_gain = world_with(1.0, EncoderKind::LinearTanh, 0.0);
    CHECK(zero_gain.encode(x) == r);
  }
}

TEST_SUITE("make_dataset") {
  TEST_CASE("noiseless singleton equals the ground truth") {
    const auto w = world_with(0.0);
    for (const auto& s : w.styles()) {
      const auto ds = w.make_dataset(s.label, 1, 9);
      REQUIRE(ds.embeddings.size() == 1);
      CHECK(ds.embeddings[0] == ds.ground_truth.vector);
      CHECK(ds.ground_truth.domain_label == s.label);
    }
  }

  TEST_CASE("ground truth is the encoding of the zero-content image") {
    const auto& w = default_world();
    const auto truth = w.true_style("painting");
    const auto r = w.encode(w.form_image("painting", std::vector<double>(8, 0.0)));
    CHECK(rel_error(truth.vector.values(), r.values()) <= 1e-12);
  }

  TEST_CASE("deterministic and independent of n") {
    const auto& w = default_world();
    const auto a = w.make_dataset("sketch", 2, 4);
    const auto b = w.make_dataset("sketch", 2, 4);
    CHECK(a.embeddings == b.embeddings);
    CHECK(a.contents == b.contents);
    const auto big = w.sample_embeddings("sketch", 300, 4);
    CHECK(big.embeddings[0] == a.embeddings[0]);
    CHECK(big.embeddings[1] == a.embeddings[1]);
    const auto other = w.make_dataset("sketch", 2, 5);
    CHECK_FALSE(other.embeddings == a.embeddings);
  }

  TEST_CASE("errors") {
    const auto& w = default_world();
    CHECK(error_category([&] { w.make_dataset("cat", 3, 0); }) == ErrorCategory::UnknownDomain);
    CHECK(error_category([&] { w.make_dataset("sketch", 0, 0); }) == ErrorCategory::EmptyDataset);
  }

  TEST_CASE("style estimate error bound at N=10000") {
    const auto& w = default_world();
    const double bound = 1.5 * std::sqrt(64.0 / 10000.0);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto ds = w.sample_embeddings("sketch", 10000, seed);
      const auto est = extract_style(ds.embeddings, "sketch");
      CHECK(distance(est.vector.values(), ds.ground_truth.vector.values()) <= bound);
    }
  }

  TEST_CASE("content residual is the encoded content minus the style error") {
    // With the linear encoder, r_i - style_hat = M sum_m c_m b_m + (s - style_hat).
    const auto& w = default_world();
    const auto ds = w.make_dataset("photo", 2000, 12);
    const auto est = extract_style(ds.embeddings, "photo");
    const auto& m = w.encoder()->matrix();
    std::vector<double> offset(64);
    for (std::size_t j = 0; j < 64; ++j) offset[j] = ds.ground_truth.vector[j] - est.vector[j];
    const double style_error = EmbeddingVector(offset).norm();
    CHECK(style_error <= 1.5 * std::sqrt(64.0 / 2000.0));
    for (std::size_t i = 0; i < 50; ++i) {
      Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(w.shape().size()));
      for (std::size_t k = 0; k < 8; ++k) {
        x += ds.contents[i][k] * Eigen::Map<const Eigen::VectorXd>(w.content_basis()[k].data(), x.size());
      }
      const Eigen::VectorXd analytic = m * x;
      const auto content = extract_content(ds.embeddings[i], est);
      for (std::size_t j = 0; j < 64; ++j) {
        CHECK(std::abs(content.vector[j] - (analytic[static_cast<Eigen::Index>(j)] + offset[j])) <= 1e-10);
      }
    }
  }
}
