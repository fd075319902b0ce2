#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "repdis/embedding.hpp"
#include "repdis/synthworld.hpp"

namespace repdis {

/// Embeddings with one label per row.
struct LabeledEmbeddings {
  std::vector<EmbeddingVector> vectors;
  std::vector<std::string> labels;

  std::size_t size() const noexcept { return vectors.size(); }
};

/// Pool drawn from a synthetic world: `per_domain` embeddings from each
/// listed domain, labelled with the domain name.
struct SyntheticPoolSource {
  std::shared_ptr<const World> world;
  std::vector<std::string> domains;
  std::size_t per_domain = 0;
  std::uint64_t seed = 0;
};

struct StylePoolSpec {
  std::variant<SyntheticPoolSource, LabeledEmbeddings> source;
  std::set<std::string> exclude_labels;
  std::size_t sample_count = 1;
  std::uint64_t seed = 0;
};

/// Materialises the source, drops excluded labels, then draws
/// `sample_count` rows without replacement. Selected rows keep their
/// original relative order; asking for every remaining row returns them all.
LabeledEmbeddings build_style_pool(const StylePoolSpec& spec);

/// Re-expresses `input` (from the source domain) in the target domain:
/// input - mean(source_pool) + mean(target_pool).
TargetRepresentation translate(const EmbeddingVector& input,
                               std::span<const EmbeddingVector> source_pool,
                               std::span<const EmbeddingVector> target_pool,
                               const std::string& source_label = "source",
                               const std::string& target_label = "target");

enum class AblationMetric { EuclideanError, CosineToTruth };
std::string to_string(AblationMetric m);
AblationMetric ablation_metric_from_string(const std::string& s);

struct AblationSpec {
  std::vector<std::size_t> sizes{2, 10, 100, 1000, 10000};
  std::size_t replicates = 50;
  std::shared_ptr<const World> world;
  std::string domain;  // empty: the world's first style
  AblationMetric metric = AblationMetric::EuclideanError;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AblationCell {
  std::size_t size;
  std::size_t replicate;
  double error;
};

struct AblationSummary {
  std::size_t size;
  double mean;
  double std;  // sample standard deviation across replicates
};

struct AblationReport {
  std::string domain;
  AblationMetric metric = AblationMetric::EuclideanError;
  std::vector<AblationCell> cells;
  std::vector<AblationSummary> summary;
  bool strictly_decreasing = false;
  /// (mean@100 - mean@1000) / (mean@10 - mean@100), when those sizes are present.
  std::optional<double> flattening_ratio;
  /// Least-squares slope of log(mean) on log(size), when every mean is > 0.
  std::optional<double> loglog_slope;
};

/// Style-estimate error against the world's ground truth for every
/// (size, replicate) cell. Each cell draws its dataset from its own stream,
/// so the report depends only on the spec.
AblationReport run_ablation(const AblationSpec& spec);

/// Least-squares slope of y on x.
double regression_slope(std::span<const double> x, std::span<const double> y);

}  // namespace repdis
