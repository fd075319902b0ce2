#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "repdis/image.hpp"

namespace repdis {

/// A map with a reverse-mode derivative. Inputs and outputs are flat arrays
/// with an attached grid shape (plain vectors use n x 1 x 1).
class DifferentiableMap {
public:
  virtual ~DifferentiableMap() = default;

  virtual std::string name() const = 0;
  virtual ImageShape in_shape() const = 0;
  virtual ImageShape out_shape() const = 0;

  virtual std::vector<double> forward(std::span<const double> x) const = 0;
  /// J(x)^T * cotangent.
  virtual std::vector<double> vjp(std::span<const double> x,
                                  std::span<const double> cotangent) const = 0;

  std::size_t in_dim() const { return in_shape().size(); }
  std::size_t out_dim() const { return out_shape().size(); }
};

using MapPtr = std::shared_ptr<const DifferentiableMap>;

inline ImageShape vector_shape(std::size_t n) { return ImageShape{n, 1, 1}; }

class IdentityMap final : public DifferentiableMap {
public:
  explicit IdentityMap(ImageShape shape) : shape_(shape) {}

  std::string name() const override { return "identity"; }
  ImageShape in_shape() const override { return shape_; }
  ImageShape out_shape() const override { return shape_; }
  std::vector<double> forward(std::span<const double> x) const override;
  std::vector<double> vjp(std::span<const double> x,
                          std::span<const double> cotangent) const override;

private:
  ImageShape shape_;
};

/// x -> A x.
class LinearMap final : public DifferentiableMap {
public:
  LinearMap(std::string name, Eigen::MatrixXd matrix, ImageShape in_shape, ImageShape out_shape);

  std::string name() const override { return name_; }
  ImageShape in_shape() const override { return in_shape_; }
  ImageShape out_shape() const override { return out_shape_; }
  std::vector<double> forward(std::span<const double> x) const override;
  std::vector<double> vjp(std::span<const double> x,
                          std::span<const double> cotangent) const override;

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }

private:
  std::string name_;
  Eigen::MatrixXd matrix_;
  ImageShape in_shape_;
  ImageShape out_shape_;
};

/// outer(inner(x)).
class ComposedMap final : public DifferentiableMap {
public:
  ComposedMap(MapPtr inner, MapPtr outer);

  std::string name() const override { return outer_->name() + "*" + inner_->name(); }
  ImageShape in_shape() const override { return inner_->in_shape(); }
  ImageShape out_shape() const override { return outer_->out_shape(); }
  std::vector<double> forward(std::span<const double> x) const override;
  std::vector<double> vjp(std::span<const double> x,
                          std::span<const double> cotangent) const override;

private:
  MapPtr inner_;
  MapPtr outer_;
};

/// Linear generator from a latent vector to an image grid. Its columns are
/// smooth random fields so generated images survive small translations.
std::shared_ptr<LinearMap> make_linear_generator(std::size_t latent_dim, ImageShape image,
                                                 std::uint64_t seed);

/// Pseudo-inverse of a linear map. On the map's range it is a left inverse;
/// off the range, forward(inverse(x)) is the orthogonal projection of x.
std::shared_ptr<LinearMap> make_pseudo_inverse(const LinearMap& map);

struct VjpReport {
  std::string map_name;
  std::size_t trials = 0;
  double tolerance = 0.0;
  double max_relative_error = 0.0;
  std::vector<double> relative_errors;
  bool passed = false;
};

/// Compares <w, vjp(x, w)·v> against the central difference
/// <w, (f(x + h v) - f(x - h v)) / 2h> for random x, v, w.
VjpReport check_vjp(const DifferentiableMap& map, std::size_t trials, double tol,
                    std::uint64_t seed = 0);

}  // namespace repdis
