// Command-line driver for the sampling benchmarks.
//
//   brwp run <config.json>         one experiment
//   brwp compare <a.json> <b.json> ...   paired methods, merged table
//   brwp analytic <config.json>    closed-form study
//   brwp preset <name>             a shipped configuration bundle
//
// Summaries go to stdout as JSON; CSV tables and particle snapshots are
// written only under --out-dir. Exit code 0 on success, 2 for configuration
// errors, 3 for numeric failures.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "brwp/brwp.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Options {
  std::optional<std::uint64_t> seed;
  std::optional<long> snapshot_stride;
  std::string out_dir;
  int threads = 1;
  bool dump = false;
};

void apply(const Options& o, brwp::ExperimentConfig& cfg) {
  if (o.seed) cfg.sampler.seed = *o.seed;
  if (o.snapshot_stride) {
    if (*o.snapshot_stride < 1)
      throw std::invalid_argument("config: snapshot stride override must be >= 1");
    cfg.snapshot_stride = *o.snapshot_stride;
  }
}

void emit(const brwp::Json& j) { std::cout << j.dump(2) << "\n"; }

int run_one(const std::string& path, const Options& o) {
  brwp::ExperimentConfig cfg = brwp::parse_experiment_config(slurp(path));
  apply(o, cfg);
  if (o.dump) {
    emit(brwp::to_json(cfg));
    return 0;
  }
  emit(brwp::summary_json(brwp::run_experiment(cfg, o.threads, o.out_dir)));
  return 0;
}

int run_compare(const std::string& name, const std::vector<std::string>& paths,
                const Options& o) {
  std::vector<brwp::ExperimentConfig> configs;
  configs.reserve(paths.size());
  for (const std::string& path : paths) {
    configs.push_back(brwp::parse_experiment_config(slurp(path)));
    apply(o, configs.back());
  }
  if (o.dump) {
    brwp::Json j = brwp::Json::array();
    for (const auto& c : configs) j.push_back(brwp::to_json(c));
    emit(j);
    return 0;
  }
  const brwp::CompareReport report = brwp::compare_methods(name, configs, o.threads, o.out_dir);
  brwp::Json j;
  j["name"] = report.name;
  brwp::Json runs = brwp::Json::array();
  for (const auto& r : report.runs) runs.push_back(brwp::summary_json(r));
  j["runs"] = runs;
  emit(j);
  return 0;
}

int run_analytic_cmd(const std::string& path, const Options& o) {
  brwp::AnalyticConfig cfg = brwp::parse_analytic_config(slurp(path));
  if (o.seed && cfg.analysis == "ode") cfg.init_seed = *o.seed;
  if (o.dump) {
    emit(brwp::to_json(cfg));
    return 0;
  }
  emit(brwp::run_analytic(cfg, o.out_dir).summary);
  return 0;
}

int run_preset(const std::string& name, const Options& o) {
  const brwp::Preset& preset = brwp::find_preset(name);
  if (preset.analytic) {
    brwp::AnalyticConfig cfg = *preset.analytic;
    if (o.seed && cfg.analysis == "ode") cfg.init_seed = *o.seed;
    if (o.dump) {
      emit(brwp::to_json(cfg));
      return 0;
    }
    emit(brwp::run_analytic(cfg, o.out_dir).summary);
    return 0;
  }
  std::vector<brwp::ExperimentConfig> configs = preset.experiments;
  for (auto& c : configs) apply(o, c);
  if (o.dump) {
    brwp::Json j = brwp::Json::array();
    for (const auto& c : configs) j.push_back(brwp::to_json(c));
    emit(j);
    return 0;
  }
  if (configs.size() == 1) {
    emit(brwp::summary_json(brwp::run_experiment(configs.front(), o.threads, o.out_dir)));
    return 0;
  }
  const brwp::CompareReport report =
      brwp::compare_methods(preset.name, configs, o.threads, o.out_dir);
  brwp::Json j;
  j["name"] = report.name;
  brwp::Json runs = brwp::Json::array();
  for (const auto& r : report.runs) runs.push_back(brwp::summary_json(r));
  j["runs"] = runs;
  emit(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic particle sampling benchmarks (brwp, ula, mala)"};
  app.require_subcommand(1);

  Options opt;
  std::string run_path, analytic_path, preset_name, compare_name = "compare";
  std::vector<std::string> compare_paths;
  bool list_presets = false;

  const auto add_common = [&](CLI::App* cmd, bool with_run_knobs) {
    cmd->add_option("--seed", opt.seed, "override the configured seed");
    cmd->add_option("--out-dir", opt.out_dir, "write CSV and JSON files under this directory");
    if (with_run_knobs) {
      cmd->add_option("--snapshot-stride", opt.snapshot_stride, "override the snapshot stride");
      cmd->add_option("--threads", opt.threads,
                      "worker threads; results are identical for every count");
    }
    cmd->add_flag("--dump", opt.dump, "print the canonical config instead of running");
  };

  CLI::App* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("config", run_path, "experiment JSON file")->required();
  add_common(run, true);

  CLI::App* compare = app.add_subcommand("compare", "run paired configs and merge their metrics");
  compare->add_option("configs", compare_paths, "two or more experiment JSON files")->required();
  compare->add_option("--name", compare_name, "base name for the merged table");
  add_common(compare, true);

  CLI::App* analytic = app.add_subcommand("analytic", "run a closed-form study config");
  analytic->add_option("config", analytic_path, "analytic JSON file")->required();
  add_common(analytic, false);

  CLI::App* preset = app.add_subcommand("preset", "run a shipped configuration bundle");
  preset->add_option("name", preset_name, "preset name");
  preset->add_flag("--list", list_presets, "list preset names and exit");
  add_common(preset, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return run_one(run_path, opt);
    if (compare->parsed()) return run_compare(compare_name, compare_paths, opt);
    if (analytic->parsed()) return run_analytic_cmd(analytic_path, opt);
    if (list_presets) {
      for (const brwp::Preset& p : brwp::presets())
        std::cout << p.name << "  " << p.note << "\n";
      return 0;
    }
    if (preset_name.empty())
      throw std::invalid_argument("preset: name required (use --list to see options)");
    return run_preset(preset_name, opt);
  } catch (const brwp::numeric_error& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
