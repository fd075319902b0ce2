#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace repdis {

/// Norms at or below this are treated as the zero vector.
inline constexpr double kDegenerateNorm = 1e-12;

/// A point in representation space. Always finite, never empty.
class EmbeddingVector {
public:
  explicit EmbeddingVector(std::vector<double> values);
  EmbeddingVector(std::initializer_list<double> values)
      : EmbeddingVector(std::vector<double>(values)) {}

  static EmbeddingVector zeros(std::size_t dim);

  std::size_t dim() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  double norm() const noexcept;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
  std::vector<double> values_;
};

/// Mean embedding of one stylistic domain.
struct StyleRepresentation {
  EmbeddingVector vector;
  std::string domain_label;
  std::size_t sample_count;
};

/// Residual of an embedding after removing its domain style.
struct ContentRepresentation {
  EmbeddingVector vector;
  std::string source_id;
};

/// Content of one input recombined with a (possibly different) style.
/// Guaranteed to have norm above kDegenerateNorm.
struct TargetRepresentation {
  EmbeddingVector vector;
  std::string content_source;
  std::string style_source;
};

/// <u,v> / (|u| |v|), clamped to [-1, 1].
/// Throws DimensionError on mismatch and DegenerateVectorError on a zero-norm argument.
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);
double cosine_similarity(std::span<const double> u, std::span<const double> v);

/// Gradient of cosine_similarity(u, v) with respect to u.
std::vector<double> cosine_gradient(std::span<const double> u, std::span<const double> v);

/// Component-wise arithmetic mean. Uses double-double accumulation so the
/// result is independent of input order to well below 1e-12 relative, and
/// the mean of identical vectors is that vector exactly.
EmbeddingVector mean_embedding(std::span<const EmbeddingVector> rs);

StyleRepresentation extract_style(std::span<const EmbeddingVector> dataset,
                                  std::string domain_label);

ContentRepresentation extract_content(const EmbeddingVector& r,
                                      const StyleRepresentation& style,
                                      std::string source_id = {});

/// content + style, without renormalization.
TargetRepresentation compose_target(const ContentRepresentation& content,
                                    const StyleRepresentation& style);

/// Throws DimensionError unless a.dim() == b.dim().
void require_same_dim(std::size_t a, std::size_t b, const char* what);

}  // namespace repdis
