#include "bsdp/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bsdp/error.hpp"
#include "bsdp/pipeline.hpp"

namespace bsdp::cli {
namespace {

const char* error_type(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return "ConfigError";
  if (dynamic_cast<const InvalidInputError*>(&e) != nullptr) {
    return "InvalidInputError";
  }
  if (dynamic_cast<const ContractError*>(&e) != nullptr) return "ContractError";
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) {
    return "NumericalError";
  }
  if (dynamic_cast<const Error*>(&e) != nullptr) return "Error";
  return "InternalError";
}

int report(const std::exception& e) {
  nlohmann::json body;
  body["error"]["type"] = error_type(e);
  body["error"]["message"] = e.what();
  std::cerr << body.dump() << '\n';
  return 1;
}

std::string trimmed(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

struct StageDef {
  const char* name;
  const char* help;
  void (*fn)(const StageContext&);
};

constexpr StageDef kStages[] = {
    {"synth", "generate a synthetic trajectory corpus", &run_synth},
    {"cluster", "cluster drop-off points for each region and period",
     &run_cluster},
    {"graph", "build station graphs from clusters and ride records",
     &run_graph},
    {"sequence", "assemble per-region graph sequences with a shared grid codec",
     &run_sequence},
    {"train", "train the prediction model on each region's sequence",
     &run_train},
    {"predict", "predict the next-period station graph", &run_predict},
    {"recommend", "fine-tune predicted stations onto legal parking positions",
     &run_recommend},
    {"eval", "cross-validate the model and score clustering quality",
     &run_eval},
    {"pipeline", "run every stage in order", &run_pipeline},
};

}  // namespace

int run(std::vector<std::string> args) {
  CLI::App app{"bicycle station dynamic planning pipeline"};
  app.set_version_flag("--version", "bsdp 0.1.0");
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::int64_t> seed;
  std::optional<int> jobs;
  bool strict = false;
  std::string out;

  app.add_option("-c,--config", config_path,
                 "pipeline config file (key = value lines)")
      ->envname("BSDP_CONFIG");
  app.add_option("--set", overrides, "override one config key, as key=value")
      ->type_name("KEY=VALUE");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--jobs", jobs, "worker thread count");
  app.add_flag("--strict", strict, "reject inputs with malformed rows");
  app.add_option("--out", out, "artifact output directory");

  for (const StageDef& stage : kStages) {
    app.add_subcommand(stage.name, stage.help)->fallthrough();
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = PipelineConfig::from_file(config_path);
    for (const std::string& item : overrides) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + item + "'");
      }
      cfg.set(trimmed(item.substr(0, eq)), trimmed(item.substr(eq + 1)));
    }
    if (seed) cfg.set("seed", std::to_string(*seed));
    if (jobs) cfg.set("jobs", std::to_string(*jobs));
    if (strict) cfg.set("strict", "true");
    if (!out.empty()) cfg.set("out", out);

    const std::string chosen = app.get_subcommands().front()->get_name();
    for (const StageDef& stage : kStages) {
      if (chosen == stage.name) {
        stage.fn(StageContext::from_config(std::move(cfg)));
        return 0;
      }
    }
    throw ContractError("no handler for subcommand '" + chosen + "'");
  } catch (const std::exception& e) {
    return report(e);
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  args.reserve(argc > 0 ? static_cast<std::size_t>(argc) - 1 : 0);
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(std::move(args));
}

}  // namespace bsdp::cli
