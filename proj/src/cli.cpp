#include "repdis/cli.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "json.hpp"

#include "repdis/config.hpp"
#include "repdis/disentangle.hpp"
#include "repdis/embedding_file.hpp"
#include "repdis/error.hpp"
#include "repdis/guidance.hpp"
#include "repdis/records.hpp"
#include "repdis/synthworld.hpp"

namespace repdis {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kGradientCheckFailed = 10;

// Stream tags for seeds derived from the master seed.
constexpr std::uint64_t kTagSourcePool = 1;
constexpr std::uint64_t kTagTargetPool = 2;
constexpr std::uint64_t kTagInput = 3;
constexpr std::uint64_t kTagInit = 7;
constexpr std::uint64_t kTagAblation = 6;
constexpr std::uint64_t kTagSample = 8;
constexpr std::uint64_t kTagProbe = 9;

std::string abs_path(const fs::path& p) { return fs::absolute(p).lexically_normal().string(); }

// Records how an output was produced. `args` is a fully explicit command
// line (absolute paths, resolved seed) that `replay` can run again.
class Manifest {
public:
  Manifest(std::string command, std::string output_flag)
      : command_(std::move(command)), output_flag_(std::move(output_flag)) {}

  void arg(const std::string& flag, const std::string& value) {
    args_.push_back(flag);
    args_.push_back(value);
  }
  void input(const fs::path& p) { inputs_.push_back(p); }
  void seed(std::uint64_t s) { seed_ = s; }
  void config(const fs::path& p) { config_ = p; }

  void write(const fs::path& where) const {
    json inputs = json::array();
    for (const auto& p : inputs_) {
      inputs.push_back(json{{"path", abs_path(p)}, {"fnv1a64", fnv1a_hex(read_file(p))}});
    }
    json m = {{"tool", "repdis"},
              {"components", {{"repdis", kVersion},
                              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                            std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                            std::to_string(EIGEN_MINOR_VERSION)},
                              {"embedding_format", "EMBV1"}}},
              {"command", command_},
              {"args", args_},
              {"output_flag", output_flag_},
              {"seed", seed_ ? json(*seed_) : json(nullptr)},
              {"config_hash", config_ ? json(fnv1a_hex(read_file(*config_))) : json(nullptr)},
              {"inputs", inputs}};
    write_file_atomic(where, m.dump(2) + "\n");
  }

private:
  std::string command_;
  std::string output_flag_;
  std::vector<std::string> args_;
  std::vector<fs::path> inputs_;
  std::optional<std::uint64_t> seed_;
  std::optional<fs::path> config_;
};

fs::path manifest_for(const fs::path& out) {
  auto m = out;
  m += ".manifest.json";
  return m;
}

void ensure_parent(const fs::path& p) {
  const auto parent = p.parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw IoError("cannot create directory '" + parent.string() + "'");
  }
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  fs::path config, out;
  std::optional<fs::path> truth;
  std::string domain;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const auto params = load_world_params(a.config);
  const auto seed = resolve_seed(a.seed, params.seed);
  const auto world = World::from_params(params);
  const auto ds = world.sample_embeddings(a.domain, a.n, seed);
  const std::vector<std::string> labels(ds.embeddings.size(), a.domain);
  ensure_parent(a.out);
  write_embeddings(a.out, ds.embeddings, &labels);

  Manifest m("simulate", "--out");
  m.arg("--config", abs_path(a.config));
  m.arg("--domain", a.domain);
  m.arg("--n", std::to_string(a.n));
  m.arg("--seed", std::to_string(seed));
  m.arg("--out", abs_path(a.out));
  if (a.truth) {
    ensure_parent(*a.truth);
    const std::vector<std::string> tl{a.domain};
    write_embeddings(*a.truth, std::span(&ds.ground_truth.vector, 1), &tl);
    m.arg("--truth", abs_path(*a.truth));
  }
  m.seed(seed);
  m.config(a.config);
  m.input(a.config);
  m.write(manifest_for(a.out));
  out << "wrote " << ds.embeddings.size() << " embeddings of dim " << world.embedding_dim()
      << " to " << a.out.string() << "\n";
  return 0;
}

struct ExtractStyleArgs {
  fs::path in, out;
  std::vector<std::string> exclude;
  std::optional<std::size_t> take;
  std::optional<std::uint64_t> seed;
  std::string label = "style";
};

int cmd_extract_style(const ExtractStyleArgs& a, std::ostream& out) {
  auto table = read_embeddings(a.in);
  if (!a.exclude.empty() && !table.labels) {
    throw InvalidArgumentError("'" + a.in.string() + "' has no labels; --exclude needs them");
  }
  const auto seed = resolve_seed(a.seed, 0);
  StylePoolSpec spec;
  const std::size_t n = table.count();
  spec.source = LabeledEmbeddings{std::move(table.vectors),
                                  table.labels ? *table.labels : std::vector<std::string>(n)};
  spec.exclude_labels = {a.exclude.begin(), a.exclude.end()};
  spec.seed = derived_seed(seed, kTagSample);
  if (a.take) {
    spec.sample_count = *a.take;
  } else {
    std::size_t kept = 0;
    const auto& src = std::get<LabeledEmbeddings>(spec.source);
    for (const auto& l : src.labels) kept += spec.exclude_labels.contains(l) ? 0 : 1;
    spec.sample_count = std::max<std::size_t>(kept, 1);
  }
  const auto pool = build_style_pool(spec);
  const auto style = extract_style(pool.vectors, a.label);
  const std::vector<std::string> labels{a.label};
  ensure_parent(a.out);
  write_embeddings(a.out, std::span(&style.vector, 1), &labels);

  Manifest m("extract-style", "--out");
  m.arg("--in", abs_path(a.in));
  for (const auto& e : a.exclude) m.arg("--exclude", e);
  if (a.take) m.arg("--take", std::to_string(*a.take));
  m.arg("--seed", std::to_string(seed));
  m.arg("--label", a.label);
  m.arg("--out", abs_path(a.out));
  m.seed(seed);
  m.input(a.in);
  m.write(manifest_for(a.out));
  out << "style '" << a.label << "' from " << style.sample_count << " embeddings -> "
      << a.out.string() << "\n";
  return 0;
}

struct TranslateArgs {
  std::string input;
  fs::path source_style, target_style, out;
};

int cmd_translate(const TranslateArgs& a, std::ostream& out) {
  const auto ref = parse_embedding_ref(a.input);
  const auto input = read_embedding_at(ref);
  const auto src = read_embeddings(a.source_style);
  const auto dst = read_embeddings(a.target_style);
  const auto target = translate(input, src.vectors, dst.vectors, a.source_style.stem().string(),
                                a.target_style.stem().string());
  const std::vector<std::string> labels{"target"};
  ensure_parent(a.out);
  write_embeddings(a.out, std::span(&target.vector, 1), &labels);

  Manifest m("translate", "--out");
  m.arg("--input", abs_path(ref.path) + ":" + std::to_string(ref.index));
  m.arg("--source-style", abs_path(a.source_style));
  m.arg("--target-style", abs_path(a.target_style));
  m.arg("--out", abs_path(a.out));
  m.input(ref.path);
  m.input(a.source_style);
  m.input(a.target_style);
  m.write(manifest_for(a.out));
  out << "target representation (dim " << target.vector.dim() << ") -> " << a.out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct RunSetup {
  RunConfig config;
  std::shared_ptr<const World> world;
  MapPtr generator;
  std::shared_ptr<LinearMap> linear_generator;  // null for the identity generator
};

RunSetup setup_run(const fs::path& config_path, std::optional<std::uint64_t> seed_flag) {
  RunSetup s;
  s.config = load_run_config(config_path);
  apply_master_seed(s.config, resolve_seed(seed_flag, s.config.seed));
  s.world = std::make_shared<const World>(World::from_params(s.config.world));
  const auto& g = s.config.generator;
  if (g.kind == "identity") {
    s.generator = std::make_shared<IdentityMap>(s.world->shape());
  } else {
    s.linear_generator = make_linear_generator(g.latent_dim, s.world->shape(), g.seed);
    s.generator = s.linear_generator;
  }
  return s;
}

LabeledEmbeddings load_pool(const PoolConfig& p, const std::shared_ptr<const World>& world,
                            std::uint64_t seed) {
  StylePoolSpec spec;
  if (p.embedding_file) {
    auto t = read_embeddings(*p.embedding_file);
    const std::size_t n = t.count();
    spec.source = LabeledEmbeddings{std::move(t.vectors),
                                    t.labels ? *t.labels : std::vector<std::string>(n)};
  } else {
    spec.source = SyntheticPoolSource{world, p.domains, p.per_domain, derived_seed(seed, 0)};
  }
  spec.exclude_labels = p.exclude;
  spec.sample_count = p.sample_count;
  spec.seed = derived_seed(seed, 1);
  return build_style_pool(spec);
}

struct OptimizeArgs {
  fs::path config;
  std::optional<std::string> target;
  std::optional<fs::path> out_dir;
  std::optional<std::uint64_t> seed;
};

int cmd_optimize(const OptimizeArgs& a, std::ostream& out) {
  auto s = setup_run(a.config, a.seed);
  const auto& c = s.config;
  const fs::path out_dir = a.out_dir ? *a.out_dir : c.output_dir;
  if (out_dir.empty()) throw InvalidArgumentError("no output directory (--out-dir or output_dir)");

  const std::string input_domain =
      c.input_domain.empty() ? s.world->styles().front().label : c.input_domain;
  auto input_rng = derive_stream(derived_seed(c.seed, kTagInput));
  const auto input_image = s.world->form_image(input_domain, s.world->sample_content(input_rng));

  Manifest m("optimize", "--out-dir");
  m.arg("--config", abs_path(a.config));
  m.config(a.config);
  m.input(a.config);

  TargetRepresentation target{EmbeddingVector::zeros(1), "", ""};
  if (a.target) {
    const auto ref = parse_embedding_ref(*a.target);
    auto v = read_embedding_at(ref);
    if (!(v.norm() > kDegenerateNorm)) throw DegenerateVectorError("target embedding is zero");
    target = TargetRepresentation{std::move(v), ref.path.string(), ref.path.string()};
    m.arg("--target", abs_path(ref.path) + ":" + std::to_string(ref.index));
    m.input(ref.path);
  } else {
    const auto src = load_pool(c.source_pool, s.world, derived_seed(c.seed, kTagSourcePool));
    const auto dst = load_pool(c.target_pool, s.world, derived_seed(c.seed, kTagTargetPool));
    target = translate(s.world->encode(input_image), src.vectors, dst.vectors, "source", "target");
    if (c.source_pool.embedding_file) m.input(*c.source_pool.embedding_file);
    if (c.target_pool.embedding_file) m.input(*c.target_pool.embedding_file);
  }

  GuidanceProblem problem{.generator = s.generator,
                          .encoder = s.world->encoder(),
                          .target = target,
                          .policy = c.policy,
                          .optimizer = c.optimizer,
                          .init = {},
                          .include_clean = c.include_clean};
  if (c.generator.init == "inverse") {
    if (s.linear_generator) {
      problem.init = init_from_input(*make_pseudo_inverse(*s.linear_generator), input_image.pixels());
    } else {
      problem.init = init_from_input(IdentityMap(s.world->shape()), input_image.pixels());
    }
  } else {
    problem.init = random_init(s.generator->in_dim(), derived_seed(c.seed, kTagInit));
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "'");

  const auto trace = run(problem);
  const auto final_image = SynthImage(s.world->shape(), s.generator->forward(trace.final_state.z));
  write_file_atomic(out_dir / "trace.tsv", format_trace(trace));
  write_file_atomic(out_dir / "final_image.grid", encode_grid(final_image));
  write_file_atomic(out_dir / "input_image.grid", encode_grid(input_image));
  const std::vector<std::string> tl{"target"};
  write_embeddings(out_dir / "target.emb", std::span(&problem.target.vector, 1), &tl);
  json summary = {{"termination", to_string(trace.termination)},
                  {"steps", trace.records.size()},
                  {"final_objective", trace.final_objective},
                  {"best_objective", trace.best_objective}};
  write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n");

  m.arg("--seed", std::to_string(c.seed));
  m.arg("--out-dir", abs_path(out_dir));
  m.seed(c.seed);
  m.write(out_dir / "manifest.json");
  out << "optimize: " << to_string(trace.termination) << " after " << trace.records.size()
      << " steps, final cosine " << format_double(trace.final_objective) << "\n";
  return 0;
}

struct AblateArgs {
  fs::path config, out;
  std::optional<std::uint64_t> seed;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
  auto s = setup_run(a.config, a.seed);
  AblationSpec spec;
  spec.sizes = s.config.ablation.sizes;
  spec.replicates = s.config.ablation.replicates;
  spec.metric = s.config.ablation.metric;
  spec.domain = s.config.ablation.domain;
  spec.world = s.world;
  spec.seed = derived_seed(s.config.seed, kTagAblation);
  const auto report = run_ablation(spec);
  ensure_parent(a.out);
  write_file_atomic(a.out, format_ablation(report));

  Manifest m("ablate", "--out");
  m.arg("--config", abs_path(a.config));
  m.arg("--seed", std::to_string(s.config.seed));
  m.arg("--out", abs_path(a.out));
  m.seed(s.config.seed);
  m.config(a.config);
  m.input(a.config);
  m.write(manifest_for(a.out));
  for (const auto& row : report.summary) {
    out << "N=" << row.size << "\tmean=" << format_double(row.mean)
        << "\tstd=" << format_double(row.std) << "\n";
  }
  out << "strictly_decreasing=" << (report.strictly_decreasing ? "true" : "false") << "\n";
  return 0;
}

struct CheckGradientsArgs {
  fs::path config;
  std::size_t trials = 32;
  double tol = 1e-4;
  std::optional<std::uint64_t> seed;
};

int cmd_check_gradients(const CheckGradientsArgs& a, std::ostream& out) {
  auto s = setup_run(a.config, a.seed);
  std::vector<MapPtr> maps;
  maps.push_back(std::make_shared<IdentityMap>(s.world->shape()));
  maps.push_back(s.world->encoder());
  auto other = s.config.world;
  other.encoder.kind = other.encoder.kind == EncoderKind::Linear ? EncoderKind::LinearTanh
                                                                  : EncoderKind::Linear;
  const auto other_world = World::from_params(other);
  maps.push_back(other_world.encoder());
  maps.push_back(s.generator);
  if (s.linear_generator) maps.push_back(make_pseudo_inverse(*s.linear_generator));
  maps.push_back(std::make_shared<ComposedMap>(s.generator, s.world->encoder()));

  bool all = true;
  const auto probe_seed = derived_seed(s.config.seed, kTagProbe);
  for (const auto& map : maps) {
    const auto r = check_vjp(*map, a.trials, a.tol, probe_seed);
    all = all && r.passed;
    out << (r.passed ? "PASS" : "FAIL") << "\t" << r.map_name << "\ttrials=" << r.trials
        << "\tmax_rel_error=" << format_double(r.max_relative_error)
        << "\ttol=" << format_double(r.tolerance) << "\n";
  }
  return all ? 0 : kGradientCheckFailed;
}

struct ReplayArgs {
  fs::path manifest;
  std::optional<fs::path> out;
};

int cmd_replay(const ReplayArgs& a, std::ostream& out, std::ostream& err) {
  json m;
  try {
    m = json::parse(read_file(a.manifest));
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  for (const auto& in : m.at("inputs")) {
    const fs::path p = in.at("path").get<std::string>();
    if (fnv1a_hex(read_file(p)) != in.at("fnv1a64").get<std::string>()) {
      throw InvalidArgumentError("input '" + p.string() + "' changed since the manifest was written");
    }
  }
  std::vector<std::string> args{m.at("command").get<std::string>()};
  const auto flag = m.at("output_flag").get<std::string>();
  const auto recorded = m.at("args").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < recorded.size(); ++i) {
    args.push_back(recorded[i]);
    if (recorded[i] == flag && i + 1 < recorded.size() && a.out) {
      args.push_back(abs_path(*a.out));
      ++i;
    }
  }
  return run_cli(args, out, err);
}

std::string error_line(std::string_view category, const std::string& detail) {
  std::string d = detail;
  for (auto& ch : d) {
    if (ch == '\n') ch = ' ';
  }
  return std::string(category) + ": " + d + "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Style/content disentanglement in embedding spaces and guided synthesis", "repdis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic embedding dataset");
  simulate->add_option("--config", sim.config, "World config file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--domain", sim.domain, "Style domain label")->required();
  simulate->add_option("--n", sim.n, "Number of samples")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Sampling seed");
  simulate->add_option("--out", sim.out, "Output embedding file")->required();
  simulate->add_option("--truth", sim.truth, "Also write the true style embedding here");

  ExtractStyleArgs ext;
  auto* extract = app.add_subcommand("extract-style", "Mean embedding of a style pool");
  extract->add_option("--in", ext.in, "Input embedding file")->required();
  extract->add_option("--exclude", ext.exclude, "Labels to leave out of the pool");
  extract->add_option("--take", ext.take, "Sample this many rows")->check(CLI::PositiveNumber);
  extract->add_option("--seed", ext.seed, "Sampling seed");
  extract->add_option("--label", ext.label, "Label of the output row");
  extract->add_option("--out", ext.out, "Output embedding file")->required();

  TranslateArgs tr;
  auto* translate_cmd = app.add_subcommand("translate", "Compose content of an input with a target style");
  translate_cmd->add_option("--input", tr.input, "<file>:<index> of the input embedding")->required();
  translate_cmd->add_option("--source-style", tr.source_style, "Source style file")->required();
  translate_cmd->add_option("--target-style", tr.target_style, "Target style file")->required();
  translate_cmd->add_option("--out", tr.out, "Output embedding file")->required();

  OptimizeArgs opt;
  auto* optimize = app.add_subcommand("optimize", "Guided latent optimisation toward a target");
  optimize->add_option("--config", opt.config, "Run config file")->required()->check(CLI::ExistingFile);
  optimize->add_option("--target", opt.target, "<file>:<index> of the target embedding");
  optimize->add_option("--out-dir", opt.out_dir, "Output directory");
  optimize->add_option("--seed", opt.seed, "Master seed");

  AblateArgs abl;
  auto* ablate = app.add_subcommand("ablate", "Style-estimate error versus pool size");
  ablate->add_option("--config", abl.config, "Run config file")->required()->check(CLI::ExistingFile);
  ablate->add_option("--out", abl.out, "Output table")->required();
  ablate->add_option("--seed", abl.seed, "Master seed");

  CheckGradientsArgs chk;
  auto* check = app.add_subcommand("check-gradients", "Finite-difference check of every map");
  check->add_option("--config", chk.config, "Run config file")->required()->check(CLI::ExistingFile);
  check->add_option("--trials", chk.trials, "Probes per map")->check(CLI::PositiveNumber);
  check->add_option("--tol", chk.tol, "Relative tolerance");
  check->add_option("--seed", chk.seed, "Master seed");

  ReplayArgs rep;
  auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest");
  replay->add_option("--manifest", rep.manifest, "Manifest file")->required()->check(CLI::ExistingFile);
  replay->add_option("--out", rep.out, "Write to this output instead of the recorded one");

  std::vector<const char*> argv{"repdis"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_line("UsageError", e.what());
    return exit_code(ErrorCategory::InvalidArgument);
  }

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*extract) return cmd_extract_style(ext, out);
    if (*translate_cmd) return cmd_translate(tr, out);
    if (*optimize) return cmd_optimize(opt, out);
    if (*ablate) return cmd_ablate(abl, out);
    if (*check) return cmd_check_gradients(chk, out);
    if (*replay) return cmd_replay(rep, out, err);
  } catch (const Error& e) {
    err << error_line(category_name(e.category()), e.what());
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << error_line("InternalError", e.what());
    return 1;
  }
  return 1;
}

}  // namespace repdis
