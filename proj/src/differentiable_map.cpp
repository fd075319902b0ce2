#include "repdis/differentiable_map.hpp"

#include <algorithm>
#include <cmath>

#include "repdis/error.hpp"
#include "repdis/rng.hpp"

namespace repdis {
namespace {

void require_input(const DifferentiableMap& m, std::size_t n) {
  if (n != m.in_dim()) {
    throw DimensionError(m.name() + ": expected input of size " + std::to_string(m.in_dim()) +
                         ", got " + std::to_string(n));
  }
}

void require_cotangent(const DifferentiableMap& m, std::size_t n) {
  if (n != m.out_dim()) {
    throw DimensionError(m.name() + ": expected cotangent of size " +
                         std::to_string(m.out_dim()) + ", got " + std::to_string(n));
  }
}

Eigen::Map<const Eigen::VectorXd> as_eigen(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<double> IdentityMap::forward(std::span<const double> x) const {
  require_input(*this, x.size());
  return {x.begin(), x.end()};
}

std::vector<double> IdentityMap::vjp(std::span<const double> x,
                                     std::span<const double> cotangent) const {
  require_input(*this, x.size());
  require_cotangent(*this, cotangent.size());
  return {cotangent.begin(), cotangent.end()};
}

LinearMap::LinearMap(std::string name, Eigen::MatrixXd matrix, ImageShape in_shape,
                     ImageShape out_shape)
    : name_(std::move(name)), matrix_(std::move(matrix)), in_shape_(in_shape), out_shape_(out_shape) {
  if (static_cast<std::size_t>(matrix_.rows()) != out_shape_.size() ||
      static_cast<std::size_t>(matrix_.cols()) != in_shape_.size()) {
    throw DimensionError(name_ + ": matrix is " + std::to_string(matrix_.rows()) + "x" +
                         std::to_string(matrix_.cols()) + " but shapes are " +
                         to_string(in_shape_) + " -> " + to_string(out_shape_));
  }
}

std::vector<double> LinearMap::forward(std::span<const double> x) const {
  require_input(*this, x.size());
  return to_std(matrix_ * as_eigen(x));
}

std::vector<double> LinearMap::vjp(std::span<const double> x,
                                   std::span<const double> cotangent) const {
  require_input(*this, x.size());
  require_cotangent(*this, cotangent.size());
  return to_std(matrix_.transpose() * as_eigen(cotangent));
}

ComposedMap::ComposedMap(MapPtr inner, MapPtr outer)
    : inner_(std::move(inner)), outer_(std::move(outer)) {
  if (inner_->out_dim() != outer_->in_dim()) {
    throw DimensionError("cannot compose " + outer_->name() + " after " + inner_->name() +
                         ": " + to_string(inner_->out_shape()) + " vs " +
                         to_string(outer_->in_shape()));
  }
}

std::vector<double> ComposedMap::forward(std::span<const double> x) const {
  return outer_->forward(inner_->forward(x));
}

std::vector<double> ComposedMap::vjp(std::span<const double> x,
                                     std::span<const double> cotangent) const {
  const auto mid = inner_->forward(x);
  return inner_->vjp(x, outer_->vjp(mid, cotangent));
}

std::shared_ptr<LinearMap> make_linear_generator(std::size_t latent_dim, ImageShape image,
                                                 std::uint64_t seed) {
  if (latent_dim == 0 || latent_dim > image.size()) {
    throw DimensionError("generator latent dim must be in [1, " + std::to_string(image.size()) +
                         "], got " + std::to_string(latent_dim));
  }
  Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(image.size()),
                                               static_cast<Eigen::Index>(latent_dim));
  std::uniform_real_distribution<double> pos_x(0.0, static_cast<double>(image.width - 1));
  std::uniform_real_distribution<double> pos_y(0.0, static_cast<double>(image.height - 1));
  std::uniform_real_distribution<double> width(2.0, 5.0);
  std::normal_distribution<double> amp(0.0, 1.0);
  std::vector<double> amplitude(image.channels);
  for (std::size_t j = 0; j < latent_dim; ++j) {
    auto rng = derive_stream(seed, {0x67656eULL, j});
    std::span<double> col(cols.col(static_cast<Eigen::Index>(j)).data(), image.size());
    for (int bump = 0; bump < 3; ++bump) {
      const double cx = pos_x(rng), cy = pos_y(rng), w = width(rng);
      for (auto& a : amplitude) a = amp(rng);
      add_gaussian_bump(col, image, cx, cy, w, amplitude);
    }
    cols.col(static_cast<Eigen::Index>(j)).normalize();
  }
  return std::make_shared<LinearMap>("linear_generator", std::move(cols), vector_shape(latent_dim),
                                     image);
}

std::shared_ptr<LinearMap> make_pseudo_inverse(const LinearMap& map) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(map.matrix());
  return std::make_shared<LinearMap>(map.name() + "_pinv", cod.pseudoInverse(), map.out_shape(),
                                     map.in_shape());
}

VjpReport check_vjp(const DifferentiableMap& map, std::size_t trials, double tol,
                    std::uint64_t seed) {
  VjpReport report;
  report.map_name = map.name();
  report.trials = trials;
  report.tolerance = tol;
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = map.in_dim();
  const std::size_t m = map.out_dim();
  for (std::size_t t = 0; t < trials; ++t) {
    auto rng = derive_stream(seed, {0x766a70ULL, t});
    std::vector<double> x(n), v(n), w(m);
    for (auto& e : x) e = normal(rng);
    for (auto& e : v) e = normal(rng);
    for (auto& e : w) e = normal(rng);

    double scale = 1.0;
    for (double e : x) scale = std::max(scale, std::abs(e));
    const double h = 1e-5 * scale;

    std::vector<double> xp(n), xm(n);
    for (std::size_t i = 0; i < n; ++i) {
      xp[i] = x[i] + h * v[i];
      xm[i] = x[i] - h * v[i];
    }
    const auto fp = map.forward(xp);
    const auto fm = map.forward(xm);
    double numeric = 0.0;
    for (std::size_t i = 0; i < m; ++i) numeric += w[i] * (fp[i] - fm[i]);
    numeric /= 2.0 * h;

    const double analytic = dot(map.vjp(x, w), v);
    const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-12});
    const double err = std::abs(numeric - analytic) / denom;
    report.relative_errors.push_back(err);
    report.max_relative_error = std::max(report.max_relative_error, err);
  }
  report.passed = trials > 0 && report.max_relative_error <= tol;
  return report;
}

}  // namespace repdis
