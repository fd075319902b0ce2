#include "repdis/disentangle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "repdis/error.hpp"
#include "repdis/rng.hpp"

namespace repdis {
namespace {

LabeledEmbeddings materialise(const SyntheticPoolSource& src) {
  if (!src.world) throw InvalidArgumentError("synthetic pool source has no world");
  LabeledEmbeddings out;
  for (std::size_t j = 0; j < src.domains.size(); ++j) {
    auto ds = src.world->sample_embeddings(src.domains[j], src.per_domain,
                                           derive_stream(src.seed, {0x706f6fULL, j})());
    for (auto& e : ds.embeddings) {
      out.vectors.push_back(std::move(e));
      out.labels.push_back(src.domains[j]);
    }
  }
  return out;
}

std::string join(const std::set<std::string>& s) {
  std::string out;
  for (const auto& v : s) out += (out.empty() ? "" : ",") + v;
  return out;
}

}  // namespace

LabeledEmbeddings build_style_pool(const StylePoolSpec& spec) {
  if (spec.sample_count < 1) throw InvalidArgumentError("sample_count must be >= 1");
  const LabeledEmbeddings pool = std::visit(
      [](const auto& src) -> LabeledEmbeddings {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, SyntheticPoolSource>) {
          return materialise(src);
        } else {
          return src;
        }
      },
      spec.source);
  if (pool.labels.size() != pool.vectors.size()) {
    throw InvalidArgumentError("pool has " + std::to_string(pool.vectors.size()) +
                               " vectors but " + std::to_string(pool.labels.size()) + " labels");
  }

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!spec.exclude_labels.contains(pool.labels[i])) kept.push_back(i);
  }
  if (kept.empty()) {
    throw EmptyDatasetError("style pool is empty after excluding {" + join(spec.exclude_labels) +
                            "} from " + std::to_string(pool.size()) + " embeddings");
  }
  if (spec.sample_count > kept.size()) {
    throw EmptyDatasetError("style pool has " + std::to_string(kept.size()) +
                            " embeddings after excluding {" + join(spec.exclude_labels) +
                            "}, but " + std::to_string(spec.sample_count) + " were requested");
  }
  if (spec.sample_count < kept.size()) {
    // Partial Fisher-Yates, then restore the pool order.
    auto rng = derive_stream(spec.seed, {0x73616dULL});
    for (std::size_t i = 0; i < spec.sample_count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, kept.size() - 1);
      std::swap(kept[i], kept[pick(rng)]);
    }
    kept.resize(spec.sample_count);
    std::sort(kept.begin(), kept.end());
  }

  LabeledEmbeddings out;
  out.vectors.reserve(kept.size());
  out.labels.reserve(kept.size());
  for (auto i : kept) {
    out.vectors.push_back(pool.vectors[i]);
    out.labels.push_back(pool.labels[i]);
  }
  return out;
}

TargetRepresentation translate(const EmbeddingVector& input,
                               std::span<const EmbeddingVector> source_pool,
                               std::span<const EmbeddingVector> target_pool,
                               const std::string& source_label, const std::string& target_label) {
  const auto source_style = extract_style(source_pool, source_label);
  const auto target_style = extract_style(target_pool, target_label);
  const auto content = extract_content(input, source_style, "input");
  return compose_target(content, target_style);
}

std::string to_string(AblationMetric m) {
  return m == AblationMetric::EuclideanError ? "euclidean_error" : "cosine_to_truth";
}

AblationMetric ablation_metric_from_string(const std::string& s) {
  if (s == "euclidean_error") return AblationMetric::EuclideanError;
  if (s == "cosine_to_truth") return AblationMetric::CosineToTruth;
  throw InvalidArgumentError("unknown ablation metric '" + s +
                             "' (expected euclidean_error|cosine_to_truth)");
}

void AblationSpec::validate() const {
  if (!world) throw InvalidArgumentError("ablation needs a world");
  if (sizes.empty()) throw InvalidArgumentError("ablation needs at least one size");
  if (sizes.front() < 1) throw InvalidArgumentError("ablation sizes must be >= 1");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw InvalidArgumentError("ablation sizes must be strictly increasing");
  }
  if (replicates < 1) throw InvalidArgumentError("ablation replicates must be >= 1");
}

double regression_slope(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

AblationReport run_ablation(const AblationSpec& spec) {
  spec.validate();
  AblationReport report;
  report.domain = spec.domain.empty() ? spec.world->styles().front().label : spec.domain;
  report.metric = spec.metric;
  const auto truth = spec.world->true_style(report.domain);

  for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
    const std::size_t n = spec.sizes[si];
    std::vector<double> errors;
    errors.reserve(spec.replicates);
    for (std::size_t rep = 0; rep < spec.replicates; ++rep) {
      const auto cell_seed = derive_stream(spec.seed, {0x61626cULL, si, rep})();
      const auto ds = spec.world->sample_embeddings(report.domain, n, cell_seed);
      const auto est = extract_style(ds.embeddings, report.domain);
      double err = 0.0;
      if (spec.metric == AblationMetric::EuclideanError) {
        double s = 0.0;
        for (std::size_t i = 0; i < est.vector.dim(); ++i) {
          const double d = est.vector[i] - truth.vector[i];
          s += d * d;
        }
        err = std::sqrt(s);
      } else {
        err = 1.0 - cosine_similarity(est.vector, truth.vector);
      }
      errors.push_back(err);
      report.cells.push_back({n, rep, err});
    }
    const double mean =
        std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
    double var = 0.0;
    for (double e : errors) var += (e - mean) * (e - mean);
    const double sd = errors.size() > 1 ? std::sqrt(var / static_cast<double>(errors.size() - 1)) : 0.0;
    report.summary.push_back({n, mean, sd});
  }

  report.strictly_decreasing = true;
  for (std::size_t i = 1; i < report.summary.size(); ++i) {
    if (!(report.summary[i].mean < report.summary[i - 1].mean)) report.strictly_decreasing = false;
  }

  auto mean_at = [&](std::size_t n) -> std::optional<double> {
    for (const auto& s : report.summary) {
      if (s.size == n) return s.mean;
    }
    return std::nullopt;
  };
  const auto m10 = mean_at(10), m100 = mean_at(100), m1000 = mean_at(1000);
  if (m10 && m100 && m1000 && *m10 != *m100) {
    report.flattening_ratio = (*m100 - *m1000) / (*m10 - *m100);
  }

  if (report.summary.size() >= 2 &&
      std::all_of(report.summary.begin(), report.summary.end(),
                  [](const AblationSummary& s) { return s.mean > 0.0; })) {
    std::vector<double> lx, ly;
    for (const auto& s : report.summary) {
      lx.push_back(std::log(static_cast<double>(s.size)));
      ly.push_back(std::log(s.mean));
    }
    report.loglog_slope = regression_slope(lx, ly);
  }
  return report;
}

}  // namespace repdis
