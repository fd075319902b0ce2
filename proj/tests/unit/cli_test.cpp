#include <sstream>

#include "doctest.h"
#include "test_support.hpp"

#include "repdis/cli.hpp"
#include "repdis/config.hpp"
#include "repdis/embedding_file.hpp"

using namespace repdis;
using namespace repdis::testing;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string world_config(const TempDir& dir, double sigma) {
  WorldParams p;
  p.sigma = sigma;
  const auto path = (dir / ("world_" + std::to_string(sigma) + ".json")).string();
  write_file_atomic(path, to_json(p).dump());
  return path;
}

std::string run_config(const TempDir& dir, const json& extra) {
  json j = {{"seed", 5},
            {"world", {{"sigma", 1.0}}},
            {"pools",
             {{"source", {{"domains", {"sketch"}}, {"per_domain", 200}, {"sample_count", 200}}},
              {"target", {{"domains", {"photo"}}, {"per_domain", 200}, {"sample_count", 200}}}}},
            {"optimizer", {{"max_steps", 60}}},
            {"ablation", {{"sizes", {2, 10, 100}}, {"replicates", 20}}}};
  j.update(extra);
  const auto path = (dir / "run.json").string();
  write_file_atomic(path, j.dump());
  return path;
}

bool single_line(const std::string& s) {
  return !s.empty() && s.back() == '\n' && s.find('\n') == s.size() - 1;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("noiseless simulate then extract-style recovers the truth") {
    TempDir dir;
    const auto cfg = world_config(dir, 0.0);
    const auto data = (dir / "d.emb").string(), truth = (dir / "t.emb").string();
    const auto style = (dir / "s.emb").string();
    REQUIRE(cli({"simulate", "--config", cfg, "--domain", "painting", "--n", "50", "--seed", "3",
                 "--out", data, "--truth", truth})
                .code == 0);
    REQUIRE(cli({"extract-style", "--in", data, "--out", style}).code == 0);
    const auto got = read_embeddings(style), want = read_embeddings(truth);
    REQUIRE(got.count() == 1);
    CHECK(got.labels->at(0) == "style");
    CHECK(max_abs_diff(got.vectors[0].values(), want.vectors[0].values()) <= 1e-6);
    CHECK(read_embeddings(data).labels->at(49) == "painting");
    CHECK(std::filesystem::exists(data + ".manifest.json"));
  }

  TEST_CASE("translate between identical styles returns the input") {
    TempDir dir;
    const auto cfg = world_config(dir, 1.0);
    const auto data = (dir / "d.emb").string(), style = (dir / "s.emb").string();
    const auto out = (dir / "o.emb").string();
    REQUIRE(cli({"simulate", "--config", cfg, "--domain", "sketch", "--n", "20", "--out", data}).code == 0);
    REQUIRE(cli({"extract-style", "--in", data, "--take", "10", "--seed", "1", "--out", style}).code == 0);
    REQUIRE(cli({"translate", "--input", data + ":4", "--source-style", style, "--target-style", style,
                 "--out", out})
                .code == 0);
    CHECK(read_embeddings(out).vectors[0] == read_embeddings(data).vectors[4]);
  }

  TEST_CASE("ablate writes a decreasing table") {
    TempDir dir;
    const auto cfg = run_config(dir, json::object());
    const auto table = (dir / "abl.tsv").string();
    const auto r = cli({"ablate", "--config", cfg, "--out", table});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("strictly_decreasing=true") != std::string::npos);
    const auto text = read_file(table);
    CHECK(text.rfind("size\treplicate\terror\n", 0) == 0);
    CHECK(text.find("# strictly_decreasing\ttrue\n") != std::string::npos);
  }

  TEST_CASE("optimize writes its artifacts") {
    TempDir dir;
    const auto cfg = run_config(dir, json::object());
    const auto out_dir = dir / "run";
    const auto r = cli({"optimize", "--config", cfg, "--out-dir", out_dir.string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"trace.tsv", "final_image.grid", "input_image.grid", "target.emb",
                          "summary.json", "manifest.json"}) {
      CHECK(std::filesystem::exists(out_dir / f));
    }
    const auto summary = json::parse(read_file(out_dir / "summary.json"));
    CHECK(summary.contains("termination"));
  }

  TEST_CASE("check-gradients passes") {
    TempDir dir;
    const auto r = cli({"check-gradients", "--config", run_config(dir, json::object())});
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(r.out.find("PASS\t") != std::string::npos);
  }

  TEST_CASE("errors map to exit codes with one line on stderr") {
    TempDir dir;
    const auto cfg = world_config(dir, 1.0);
    const auto data = (dir / "d.emb").string();
    auto r = cli({"simulate", "--config", cfg, "--domain", "cubism", "--n", "5", "--out", data});
    CHECK(r.code == 9);
    CHECK(r.err.rfind("UnknownDomainError: ", 0) == 0);
    CHECK(single_line(r.err));
    CHECK_FALSE(std::filesystem::exists(data));

    REQUIRE(cli({"simulate", "--config", cfg, "--domain", "sketch", "--n", "5", "--out", data}).code == 0);
    r = cli({"translate", "--input", data + ":5", "--source-style", data, "--target-style", data,
             "--out", (dir / "o.emb").string()});
    CHECK(r.code == 4);
    CHECK(r.err.rfind("DimensionError: ", 0) == 0);
    CHECK(single_line(r.err));

    write_file_atomic(dir / "bad.emb", "EMBV1\n{}\n");
    r = cli({"extract-style", "--in", (dir / "bad.emb").string(), "--out", (dir / "s.emb").string()});
    CHECK(r.code == 3);
    CHECK(r.err.rfind("FormatError: header", 0) == 0);

    r = cli({"extract-style", "--in", data, "--exclude", "sketch", "--out", (dir / "s.emb").string()});
    CHECK(r.code == 5);

    r = cli({"extract-style", "--in", (dir / "none.emb").string(), "--out", (dir / "s.emb").string()});
    CHECK(r.code == 8);

    r = cli({"simulate", "--domain", "sketch"});
    CHECK(r.code == 2);
    CHECK(single_line(r.err));
    CHECK(cli({}).code == 2);
    CHECK(cli({"--version"}).out == std::string(kVersion) + "\n");
  }

  TEST_CASE("replay reproduces outputs byte for byte") {
    TempDir dir;
    const auto cfg = world_config(dir, 1.0);
    const auto a = (dir / "a.emb").string(), b = (dir / "b.emb").string();
    REQUIRE(cli({"simulate", "--config", cfg, "--domain", "photo", "--n", "30", "--seed", "8", "--out", a})
                .code == 0);
    REQUIRE(cli({"replay", "--manifest", a + ".manifest.json", "--out", b}).code == 0);
    CHECK(read_file(a) == read_file(b));

    const auto t1 = (dir / "t1.tsv").string(), t2 = (dir / "t2.tsv").string();
    const auto rc = run_config(dir, json::object());
    REQUIRE(cli({"ablate", "--config", rc, "--out", t1}).code == 0);
    REQUIRE(cli({"replay", "--manifest", t1 + ".manifest.json", "--out", t2}).code == 0);
    CHECK(read_file(t1) == read_file(t2));

    // A changed input invalidates the manifest.
    write_file_atomic(cfg, "{}");
    const auto r = cli({"replay", "--manifest", a + ".manifest.json", "--out", b});
    CHECK(r.code == 2);
  }

  TEST_CASE("seed comes from the environment when no flag is given") {
    TempDir dir;
    const auto cfg = world_config(dir, 1.0);
    const auto a = (dir / "a.emb").string(), b = (dir / "b.emb").string();
    ::setenv("REPDIS_SEED", "42", 1);
    REQUIRE(cli({"simulate", "--config", cfg, "--domain", "photo", "--n", "4", "--out", a}).code == 0);
    ::unsetenv("REPDIS_SEED");
    REQUIRE(cli({"simulate", "--config", cfg, "--domain", "photo", "--n", "4", "--seed", "42", "--out", b})
                .code == 0);
    CHECK(read_file(a) == read_file(b));
  }
}
