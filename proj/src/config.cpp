#include "repdis/config.hpp"

#include <cstdlib>
#include <initializer_list>

#include "repdis/embedding_file.hpp"
#include "repdis/error.hpp"
#include "repdis/rng.hpp"

namespace repdis {
namespace {

using nlohmann::json;

void allow_keys(const json& j, const char* section, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw InvalidArgumentError(std::string(section) + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : keys) ok = ok || k == a;
    if (!ok) throw InvalidArgumentError("unknown key '" + k + "' in " + section);
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

EncoderSpec encoder_from_json(const json& j) {
  allow_keys(j, "encoder", {"kind", "matrix_seed", "out_dim", "nonlinearity_gain"});
  EncoderSpec e;
  if (j.contains("kind")) e.kind = encoder_kind_from_string(j.at("kind").get<std::string>());
  read_opt(j, "matrix_seed", e.matrix_seed);
  read_opt(j, "out_dim", e.out_dim);
  read_opt(j, "nonlinearity_gain", e.nonlinearity_gain);
  return e;
}

PoolConfig pool_from_json(const json& j, const char* name, const std::filesystem::path& base) {
  allow_keys(j, name, {"domains", "per_domain", "embedding_file", "exclude", "sample_count"});
  PoolConfig p;
  read_opt(j, "domains", p.domains);
  read_opt(j, "per_domain", p.per_domain);
  read_opt(j, "sample_count", p.sample_count);
  if (j.contains("exclude")) {
    for (const auto& l : j.at("exclude")) p.exclude.insert(l.get<std::string>());
  }
  if (j.contains("embedding_file")) {
    std::filesystem::path f = j.at("embedding_file").get<std::string>();
    p.embedding_file = f.is_absolute() ? f : base / f;
  }
  if (p.embedding_file.has_value() == !p.domains.empty()) {
    throw InvalidArgumentError(std::string(name) +
                               " pool needs exactly one of 'domains' or 'embedding_file'");
  }
  return p;
}

json pool_to_json(const PoolConfig& p) {
  json j = {{"exclude", std::vector<std::string>(p.exclude.begin(), p.exclude.end())},
            {"sample_count", p.sample_count}};
  if (p.embedding_file) {
    j["embedding_file"] = p.embedding_file->string();
  } else {
    j["domains"] = p.domains;
    j["per_domain"] = p.per_domain;
  }
  return j;
}

json parse_file(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgumentError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

json to_json(const WorldParams& p) {
  return {{"image_width", p.image_width},
          {"image_height", p.image_height},
          {"channels", p.channels},
          {"style_labels", p.style_labels},
          {"content_parts", p.content_parts},
          {"sigma", p.sigma},
          {"encoder",
           {{"kind", to_string(p.encoder.kind)},
            {"matrix_seed", p.encoder.matrix_seed},
            {"out_dim", p.encoder.out_dim},
            {"nonlinearity_gain", p.encoder.nonlinearity_gain}}},
          {"seed", p.seed}};
}

WorldParams world_params_from_json(const json& j) {
  try {
    allow_keys(j, "world", {"image_width", "image_height", "channels", "style_labels",
                            "content_parts", "sigma", "encoder", "seed"});
    WorldParams p;
    read_opt(j, "image_width", p.image_width);
    read_opt(j, "image_height", p.image_height);
    read_opt(j, "channels", p.channels);
    read_opt(j, "style_labels", p.style_labels);
    read_opt(j, "content_parts", p.content_parts);
    read_opt(j, "sigma", p.sigma);
    read_opt(j, "seed", p.seed);
    if (j.contains("encoder")) p.encoder = encoder_from_json(j.at("encoder"));
    return p;
  } catch (const json::exception& e) {
    throw InvalidArgumentError(std::string("bad world config: ") + e.what());
  }
}

RunConfig run_config_from_json(const json& j, const std::filesystem::path& base) {
  try {
    allow_keys(j, "run config", {"seed", "world", "pools", "input", "generator", "policy",
                                 "optimizer", "include_clean", "ablation", "output_dir"});
    RunConfig c;
    read_opt(j, "seed", c.seed);
    if (j.contains("world")) {
      const auto& w = j.at("world");
      if (w.is_string()) {
        std::filesystem::path f = w.get<std::string>();
        c.world = load_world_params(f.is_absolute() ? f : base / f);
      } else {
        c.world = world_params_from_json(w);
      }
    }
    if (j.contains("pools")) {
      const auto& p = j.at("pools");
      allow_keys(p, "pools", {"source", "target"});
      if (p.contains("source")) c.source_pool = pool_from_json(p.at("source"), "source", base);
      if (p.contains("target")) c.target_pool = pool_from_json(p.at("target"), "target", base);
    }
    if (c.source_pool.domains.empty() && !c.source_pool.embedding_file) {
      c.source_pool.domains = {c.world.style_labels.at(0)};
    }
    if (c.target_pool.domains.empty() && !c.target_pool.embedding_file) {
      c.target_pool.domains = {c.world.style_labels.size() > 1 ? c.world.style_labels[1]
                                                               : c.world.style_labels[0]};
    }
    if (j.contains("input")) {
      allow_keys(j.at("input"), "input", {"domain"});
      read_opt(j.at("input"), "domain", c.input_domain);
    }
    if (j.contains("generator")) {
      const auto& g = j.at("generator");
      allow_keys(g, "generator", {"kind", "latent_dim", "seed", "init"});
      read_opt(g, "kind", c.generator.kind);
      read_opt(g, "latent_dim", c.generator.latent_dim);
      read_opt(g, "seed", c.generator.seed);
      read_opt(g, "init", c.generator.init);
      if (c.generator.kind != "linear" && c.generator.kind != "identity") {
        throw InvalidArgumentError("generator kind must be linear|identity");
      }
      if (c.generator.init != "inverse" && c.generator.init != "random") {
        throw InvalidArgumentError("generator init must be inverse|random");
      }
    }
    if (j.contains("policy")) {
      const auto& p = j.at("policy");
      allow_keys(p, "policy", {"max_translate", "cutout_fraction", "color_jitter", "samples_per_step"});
      read_opt(p, "max_translate", c.policy.max_translate);
      read_opt(p, "cutout_fraction", c.policy.cutout_fraction);
      read_opt(p, "color_jitter", c.policy.color_jitter);
      read_opt(p, "samples_per_step", c.policy.samples_per_step);
    }
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      allow_keys(o, "optimizer", {"learning_rate", "beta1", "beta2", "epsilon", "max_steps",
                                  "convergence_window", "convergence_rel_tol", "gradient_clip"});
      read_opt(o, "learning_rate", c.optimizer.learning_rate);
      read_opt(o, "beta1", c.optimizer.beta1);
      read_opt(o, "beta2", c.optimizer.beta2);
      read_opt(o, "epsilon", c.optimizer.epsilon);
      read_opt(o, "max_steps", c.optimizer.max_steps);
      read_opt(o, "convergence_window", c.optimizer.convergence_window);
      read_opt(o, "convergence_rel_tol", c.optimizer.convergence_rel_tol);
      if (o.contains("gradient_clip") && !o.at("gradient_clip").is_null()) {
        c.optimizer.gradient_clip = o.at("gradient_clip").get<double>();
      }
      c.optimizer.validate();
    }
    read_opt(j, "include_clean", c.include_clean);
    if (j.contains("ablation")) {
      const auto& a = j.at("ablation");
      allow_keys(a, "ablation", {"sizes", "replicates", "metric", "domain"});
      read_opt(a, "sizes", c.ablation.sizes);
      read_opt(a, "replicates", c.ablation.replicates);
      read_opt(a, "domain", c.ablation.domain);
      if (a.contains("metric")) {
        c.ablation.metric = ablation_metric_from_string(a.at("metric").get<std::string>());
      }
    }
    if (j.contains("output_dir")) {
      std::filesystem::path o = j.at("output_dir").get<std::string>();
      c.output_dir = o.empty() || o.is_absolute() ? o : base / o;
    }
    return c;
  } catch (const json::exception& e) {
    throw InvalidArgumentError(std::string("bad run config: ") + e.what());
  }
}

json to_json(const RunConfig& c) {
  json opt = {{"learning_rate", c.optimizer.learning_rate},
              {"beta1", c.optimizer.beta1},
              {"beta2", c.optimizer.beta2},
              {"epsilon", c.optimizer.epsilon},
              {"max_steps", c.optimizer.max_steps},
              {"convergence_window", c.optimizer.convergence_window},
              {"convergence_rel_tol", c.optimizer.convergence_rel_tol},
              {"gradient_clip", nullptr}};
  if (c.optimizer.gradient_clip) opt["gradient_clip"] = *c.optimizer.gradient_clip;
  return {{"seed", c.seed},
          {"world", to_json(c.world)},
          {"pools", {{"source", pool_to_json(c.source_pool)}, {"target", pool_to_json(c.target_pool)}}},
          {"input", {{"domain", c.input_domain}}},
          {"generator",
           {{"kind", c.generator.kind},
            {"latent_dim", c.generator.latent_dim},
            {"seed", c.generator.seed},
            {"init", c.generator.init}}},
          {"policy",
           {{"max_translate", c.policy.max_translate},
            {"cutout_fraction", c.policy.cutout_fraction},
            {"color_jitter", c.policy.color_jitter},
            {"samples_per_step", c.policy.samples_per_step}}},
          {"optimizer", opt},
          {"include_clean", c.include_clean},
          {"ablation",
           {{"sizes", c.ablation.sizes},
            {"replicates", c.ablation.replicates},
            {"metric", to_string(c.ablation.metric)},
            {"domain", c.ablation.domain}}},
          {"output_dir", c.output_dir.string()}};
}

WorldParams load_world_params(const std::filesystem::path& path) {
  return world_params_from_json(parse_file(path));
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from_json(parse_file(path), path.parent_path());
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config_seed) {
  if (flag) return *flag;
  if (const char* env = std::getenv("REPDIS_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end == nullptr || *end != '\0') {
      throw InvalidArgumentError(std::string("REPDIS_SEED is not an unsigned integer: '") + env + "'");
    }
    return v;
  }
  return config_seed;
}

std::uint64_t derived_seed(std::uint64_t master, std::uint64_t tag) {
  return derive_stream(master, {0x72756eULL, tag})();
}

void apply_master_seed(RunConfig& c, std::uint64_t master) {
  c.seed = master;
  c.policy.seed = derived_seed(master, 4);
  c.optimizer.seed = derived_seed(master, 5);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace repdis
