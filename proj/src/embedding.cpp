#include "repdis/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "repdis/error.hpp"

namespace repdis {
namespace {

// Error-free transformation: a + b == s + e exactly.
inline void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bb = s - a;
  e = (a - (s - bb)) + (b - bb);
}

// Running double-double accumulator.
struct DoubleDouble {
  double hi = 0.0;
  double lo = 0.0;

  void add(double x) {
    double s, e;
    two_sum(hi, x, s, e);
    e += lo;
    two_sum(s, e, hi, lo);
  }

  // (hi + lo) / n, rounded once.
  double divide(double n) const {
    const double q = hi / n;
    const double r = std::fma(-q, n, hi) + lo;
    return q + r / n;
  }
};

double dot(std::span<const double> u, std::span<const double> v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

double checked_norm(std::span<const double> u, const char* which) {
  const double n = std::sqrt(dot(u, u));
  if (!(n > kDegenerateNorm)) {
    throw DegenerateVectorError(std::string(which) + " has norm " + std::to_string(n) +
                                " <= 1e-12");
  }
  return n;
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DimensionError("embedding must have dim >= 1");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw NumericalError("non-finite embedding entry at index " + std::to_string(i));
    }
  }
}

EmbeddingVector EmbeddingVector::zeros(std::size_t dim) {
  return EmbeddingVector(std::vector<double>(dim, 0.0));
}

double EmbeddingVector::norm() const noexcept { return std::sqrt(dot(values_, values_)); }

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension mismatch " + std::to_string(a) +
                         " vs " + std::to_string(b));
  }
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u.size(), v.size(), "cosine_similarity");
  const double nu = checked_norm(u, "first argument");
  const double nv = checked_norm(v, "second argument");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
  return cosine_similarity(u.values(), v.values());
}

std::vector<double> cosine_gradient(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u.size(), v.size(), "cosine_gradient");
  const double nu = checked_norm(u, "encoder output");
  const double nv = checked_norm(v, "target");
  const double cos = dot(u, v) / (nu * nv);
  const double inv_uv = 1.0 / (nu * nv);
  const double inv_uu = cos / (nu * nu);
  std::vector<double> g(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) g[i] = v[i] * inv_uv - u[i] * inv_uu;
  return g;
}

EmbeddingVector mean_embedding(std::span<const EmbeddingVector> rs) {
  if (rs.empty()) throw EmptyDatasetError("mean of an empty set of embeddings");
  const std::size_t dim = rs.front().dim();
  std::vector<DoubleDouble> acc(dim);
  for (const auto& r : rs) {
    require_same_dim(dim, r.dim(), "mean_embedding");
    for (std::size_t i = 0; i < dim; ++i) acc[i].add(r[i]);
  }
  const auto n = static_cast<double>(rs.size());
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = acc[i].divide(n);
  return EmbeddingVector(std::move(out));
}

StyleRepresentation extract_style(std::span<const EmbeddingVector> dataset,
                                  std::string domain_label) {
  return StyleRepresentation{mean_embedding(dataset), std::move(domain_label), dataset.size()};
}

ContentRepresentation extract_content(const EmbeddingVector& r,
                                      const StyleRepresentation& style,
                                      std::string source_id) {
  require_same_dim(r.dim(), style.vector.dim(), "extract_content");
  std::vector<double> out(r.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r[i] - style.vector[i];
  return ContentRepresentation{EmbeddingVector(std::move(out)), std::move(source_id)};
}

TargetRepresentation compose_target(const ContentRepresentation& content,
                                    const StyleRepresentation& style) {
  require_same_dim(content.vector.dim(), style.vector.dim(), "compose_target");
  std::vector<double> out(content.vector.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = content.vector[i] + style.vector[i];
  EmbeddingVector v(std::move(out));
  if (!(v.norm() > kDegenerateNorm)) {
    throw DegenerateVectorError("composed target has norm <= 1e-12 (content '" +
                                content.source_id + "', style '" + style.domain_label + "')");
  }
  return TargetRepresentation{std::move(v), content.source_id, style.domain_label};
}

}  // namespace repdis
