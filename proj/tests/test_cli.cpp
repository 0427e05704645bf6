#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gpfl/config.hpp"
#include "gpfl/metrics.hpp"
#include "gpfl/runner.hpp"

using namespace gpfl;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

const char* kTinyConfig = R"(
[dataset]
kind = synthetic
m = 4
n = 24
sep = 2.0
reg = 0.2

[channel]
clients = 3
antennas = 3
sigma_scale = 0.3

[run]
rounds = 5
methods = gpfl,fedavg_air
seeds = 1,2
window = 3
gibbs_sweeps = 5

[output]
dir = OUTDIR
)";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("gpfl_test_" + name);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string tiny_config(const fs::path& out_dir) {
  std::string text = kTinyConfig;
  const auto pos = text.find("OUTDIR");
  text.replace(pos, 6, out_dir.string());
  return text;
}

std::string write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path.string();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.6789, -2.5e17}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("config parse, validate and canonical round-trip") {
  const RunConfig config = parse_config_text(tiny_config("out"));
  config.validate();
  CHECK(config.synth_dim == 4);
  CHECK(config.methods == std::vector<std::string>{"gpfl", "fedavg_air"});
  CHECK(config.seeds == std::vector<std::uint64_t>{1, 2});

  const RunConfig again = parse_config_text(config.resolved());
  CHECK(again.resolved() == config.resolved());
}

TEST_CASE("unknown keys are rejected by name") {
  try {
    parse_config_text("[run]\nspeed = 9\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("run.speed") != std::string::npos);
  }
}

TEST_CASE("validation failures") {
  RunConfig config = parse_config_text(tiny_config("out"));
  SUBCASE("bad method") {
    config.methods = {"sgd"};
    CHECK_THROWS_AS(config.validate(), ConfigError);
  }
  SUBCASE("no seeds") {
    config.seeds.clear();
    CHECK_THROWS_AS(config.validate(), ConfigError);
  }
  SUBCASE("negative rounds") {
    config.rounds = -1;
    CHECK_THROWS_AS(config.validate(), ConfigError);
  }
  SUBCASE("libsvm without path") {
    config.dataset_kind = "libsvm";
    CHECK_THROWS_AS(config.validate(), ConfigError);
  }
}

TEST_CASE("run command writes the full artifact set deterministically") {
  TempDir tmp("run");
  const fs::path out_a = tmp.path / "a";
  const fs::path out_b = tmp.path / "b";
  const std::string config_a =
      write_file(tmp.path / "a.cfg", tiny_config(out_a));
  const std::string config_b =
      write_file(tmp.path / "b.cfg", tiny_config(out_b));

  REQUIRE(run_command(config_a) == 0);
  REQUIRE(run_command(config_b) == 0);

  const std::string metrics_a = read_file(out_a / "metrics.csv");
  CHECK(metrics_a == read_file(out_b / "metrics.csv"));
  CHECK(read_file(out_a / "bounds.csv") == read_file(out_b / "bounds.csv"));

  // 6 rows per (method, seed) for T = 5, plus one header line.
  int lines = 0;
  for (char c : metrics_a) lines += c == '\n';
  CHECK(lines == 1 + 6 * 2 * 2);
  CHECK(metrics_a.rfind("method,seed,round,loss,accuracy,dist_to_opt,"
                        "g_tilde_norm,eta,alpha,c_norm,delta_probe,wall_ms",
                        0) == 0);

  // Replaying config.resolved reproduces the metrics byte for byte.
  const fs::path out_c = tmp.path / "c";
  RunConfig replay = load_config_file((out_a / "config.resolved").string());
  replay.output_dir = out_c.string();
  const std::string config_c =
      write_file(tmp.path / "c.cfg", replay.resolved());
  REQUIRE(run_command(config_c) == 0);
  CHECK(metrics_a == read_file(out_c / "metrics.csv"));
}

TEST_CASE("invalid configs exit with code 2") {
  TempDir tmp("bad");
  const std::string bad =
      write_file(tmp.path / "bad.cfg", "[run]\nbogus_key = 1\n");
  CHECK(run_command(bad) == 2);
  CHECK(run_command((tmp.path / "missing.cfg").string()) == 2);
}

TEST_CASE("sweep command produces per-value directories and a summary") {
  TempDir tmp("sweep");
  const fs::path out = tmp.path / "sweep_out";
  std::string text = tiny_config(out);
  // Sweeping stays cheap with a single method/seed.
  const auto pos = text.find("methods = gpfl,fedavg_air");
  text.replace(pos, std::string("methods = gpfl,fedavg_air").size(),
               "methods = gpfl");
  const std::string config = write_file(tmp.path / "s.cfg", text);

  REQUIRE(sweep_command(config, "r", {"0", "2"}) == 0);
  CHECK(fs::exists(out / "r=0" / "metrics.csv"));
  CHECK(fs::exists(out / "r=2" / "metrics.csv"));
  const std::string summary = read_file(out / "summary.csv");
  CHECK(summary.find("param,value,method") == 0);
  CHECK(summary.find("r,0,gpfl") != std::string::npos);
  CHECK(summary.find("r,2,gpfl") != std::string::npos);

  CHECK(sweep_command(config, "r", {}) == 2);
  CHECK(sweep_command(config, "does_not_exist", {"1"}) == 2);
}

TEST_CASE("output root override applies to relative directories") {
  TempDir tmp("root");
  // Restore any prior value on exit.
  const char* old = std::getenv("GPFL_OUTPUT_ROOT");
  setenv("GPFL_OUTPUT_ROOT", tmp.path.c_str(), 1);
  CHECK(resolve_output_dir("out") == (tmp.path / "out").string());
  CHECK(resolve_output_dir("/abs/path") == "/abs/path");
  if (old)
    setenv("GPFL_OUTPUT_ROOT", old, 1);
  else
    unsetenv("GPFL_OUTPUT_ROOT");
}

TEST_SUITE_END();
