#pragma once

// JSON world and run configuration files.
//
// A world file holds WorldParams. A run file holds a master seed plus the
// sections below; every run-time random stream (pool sampling, input
// content, augmentation, latent init, ablation cells) is derived from the
// master seed, while "world" and "generator" carry their own structural
// seeds. Unknown keys are rejected.
//
//   {
//     "seed": 1,
//     "world": { ...WorldParams... } | "path/to/world.json",
//     "pools": {
//       "source": {"domains": ["sketch"], "per_domain": 1000, "sample_count": 1000,
//                  "exclude": []},
//       "target": {"embedding_file": "photos.emb", "sample_count": 100, "exclude": ["cat"]}
//     },
//     "input": {"domain": "sketch"},
//     "generator": {"kind": "linear", "latent_dim": 64, "seed": 3, "init": "inverse"},
//     "policy": {"max_translate": 2, "cutout_fraction": 0.1, "color_jitter": 0.1,
//                "samples_per_step": 32},
//     "optimizer": {"learning_rate": 0.05, ..., "gradient_clip": null},
//     "include_clean": false,
//     "ablation": {"sizes": [2, 10, 100, 1000, 10000], "replicates": 50,
//                  "metric": "euclidean_error", "domain": "sketch"},
//     "output_dir": "runs/example"
//   }

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "repdis/augment.hpp"
#include "repdis/disentangle.hpp"
#include "repdis/guidance.hpp"
#include "repdis/synthworld.hpp"

namespace repdis {

nlohmann::json to_json(const WorldParams& p);
WorldParams world_params_from_json(const nlohmann::json& j);

struct PoolConfig {
  // Exactly one of: synthetic domains of the run's world, or an embedding file.
  std::vector<std::string> domains;
  std::size_t per_domain = 1000;
  std::optional<std::filesystem::path> embedding_file;
  std::set<std::string> exclude;
  std::size_t sample_count = 1000;
};

struct GeneratorConfig {
  std::string kind = "linear";  // linear | identity
  std::size_t latent_dim = 64;
  std::uint64_t seed = 3;
  std::string init = "inverse";  // inverse | random
};

struct AblationConfig {
  std::vector<std::size_t> sizes{2, 10, 100, 1000, 10000};
  std::size_t replicates = 50;
  AblationMetric metric = AblationMetric::EuclideanError;
  std::string domain;
};

struct RunConfig {
  std::uint64_t seed = 0;
  WorldParams world{};
  PoolConfig source_pool{};
  PoolConfig target_pool{};
  std::string input_domain;  // empty: first style of the world
  GeneratorConfig generator{};
  AugmentationPolicy policy{};
  OptimizerSettings optimizer{};
  bool include_clean = false;
  AblationConfig ablation{};
  std::filesystem::path output_dir;
};

/// Relative paths inside the config resolve against `base_dir`.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json to_json(const RunConfig& c);

WorldParams load_world_params(const std::filesystem::path& path);
RunConfig load_run_config(const std::filesystem::path& path);

/// Seed precedence: explicit flag, then REPDIS_SEED, then the config value.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config_seed);

/// Seed of a named run-time stream derived from the master seed.
std::uint64_t derived_seed(std::uint64_t master, std::uint64_t tag);

/// Applies the master seed to every component that draws random numbers.
void apply_master_seed(RunConfig& c, std::uint64_t master);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace repdis
