#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bsdp/cli.hpp"
#include "bsdp/json_io.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("bsdp_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

// The CLI prints usage text and error reports to the standard streams;
// capture both so test output stays quiet and the JSON can be inspected.
struct StreamCapture {
  std::stringstream out, err;
  std::streambuf* old_out;
  std::streambuf* old_err;
  StreamCapture()
      : old_out(std::cout.rdbuf(out.rdbuf())),
        old_err(std::cerr.rdbuf(err.rdbuf())) {}
  ~StreamCapture() {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
  }
};

int run_quiet(std::vector<std::string> args, std::string* err_text = nullptr) {
  StreamCapture cap;
  const int rc = bsdp::cli::run(std::move(args));
  if (err_text) *err_text = cap.err.str();
  return rc;
}

fs::path write_config(const TempDir& dir, const std::string& extra = "") {
  const fs::path out = dir.path / "out";
  const fs::path cfg = dir.path / "city.cfg";
  std::ofstream f(cfg);
  f << "out = " << out.string() << "\n"
    << "seed = 5\n"
    << "synth.n_stations = 5\n"
    << "synth.capacity_min = 8\n"
    << "synth.capacity_max = 12\n"
    << "synth.rides_per_period = 120\n"
    << "synth.n_periods = 3\n"
    << "synth.noise_sigma_km = 0.01\n"
    << extra;
  return cfg;
}

nlohmann::json parse_error(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  REQUIRE(j.contains("error"));
  return j["error"];
}

}  // namespace

TEST_CASE("help and version exit zero") {
  CHECK(run_quiet({"--help"}) == 0);
  CHECK(run_quiet({"--version"}) == 0);
  CHECK(run_quiet({"synth", "--help"}) == 0);
}

TEST_CASE("usage errors exit with code two") {
  CHECK(run_quiet({}) == 2);
  CHECK(run_quiet({"frobnicate"}) == 2);
  CHECK(run_quiet({"synth", "--no-such-flag"}) == 2);
  CHECK(run_quiet({"--seed", "not-a-number", "synth"}) == 2);
}

TEST_CASE("synth subcommand writes the corpus files") {
  TempDir dir;
  const auto cfg = write_config(dir);
  CHECK(run_quiet({"-c", cfg.string(), "synth"}) == 0);
  const fs::path out = dir.path / "out";
  CHECK(fs::exists(out / "trajectories.csv"));
  CHECK(fs::exists(out / "legal_positions.csv"));
  CHECK(fs::exists(out / "regions.json"));
  CHECK(fs::exists(out / "groundtruth.json"));
}

TEST_CASE("stage failures report a json error on stderr and exit one") {
  std::string err;
  const int rc = run_quiet({"-c", "/nonexistent/city.cfg", "synth"}, &err);
  CHECK(rc == 1);
  const auto e = parse_error(err);
  CHECK(e["type"] == "InvalidInputError");
  CHECK(e["message"].get<std::string>().find("cannot open file") !=
        std::string::npos);
}

TEST_CASE("set rejects unknown keys and malformed assignments") {
  TempDir dir;
  const auto cfg = write_config(dir);
  std::string err;
  CHECK(run_quiet({"-c", cfg.string(), "--set", "sytnh.n_stations=7", "synth"},
                  &err) == 1);
  auto e = parse_error(err);
  CHECK(e["type"] == "ConfigError");
  CHECK(e["message"].get<std::string>().find("unknown config key") !=
        std::string::npos);

  CHECK(run_quiet({"-c", cfg.string(), "--set", "no-equals-sign", "synth"},
                  &err) == 1);
  e = parse_error(err);
  CHECK(e["type"] == "ConfigError");
}

TEST_CASE("set overrides values from the config file") {
  TempDir dir;
  const auto cfg = write_config(dir);
  const fs::path out2 = dir.path / "out2";
  CHECK(run_quiet({"-c", cfg.string(), "--set", "synth.n_stations=7", "--out",
                   out2.string(), "synth"}) == 0);
  const auto truth =
      bsdp::ground_truth_from_json(bsdp::read_json_file(out2 / "groundtruth.json"));
  CHECK(truth.stations.size() == 7);
}

TEST_CASE("seed flag controls synthesis determinism") {
  TempDir dir;
  const auto cfg = write_config(dir);
  const auto run_to = [&](const std::string& out, const std::string& seed) {
    CHECK(run_quiet({"-c", cfg.string(), "--out", (dir.path / out).string(),
                     "--seed", seed, "synth"}) == 0);
    return bsdp::read_text_file(dir.path / out / "trajectories.csv");
  };
  const auto a = run_to("a", "9");
  const auto b = run_to("b", "9");
  const auto c = run_to("c", "10");
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("config path falls back to the BSDP_CONFIG variable") {
  TempDir dir;
  const auto cfg = write_config(dir);
  REQUIRE(::setenv("BSDP_CONFIG", cfg.string().c_str(), 1) == 0);
  const int rc = run_quiet({"synth"});
  ::unsetenv("BSDP_CONFIG");
  CHECK(rc == 0);
  CHECK(fs::exists(dir.path / "out" / "trajectories.csv"));
}

TEST_CASE("cluster before synth fails with a typed error") {
  TempDir dir;
  const auto cfg = write_config(dir);
  std::string err;
  CHECK(run_quiet({"-c", cfg.string(), "cluster"}, &err) == 1);
  CHECK(parse_error(err)["type"] == "InvalidInputError");
}
