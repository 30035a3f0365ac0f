#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qtd/errors.hpp"
#include "report.hpp"

#ifndef QTD_VERSION
#define QTD_VERSION "unknown"
#endif

namespace {

using namespace qtd::cli;

int list_suites() {
  for (const auto& s : suite_catalog()) std::printf("%s → %s  %s\n", s.name, s.anchor, s.description);
  for (const auto& [group, members] : suite_groups()) {
    std::string line = group + " =";
    for (const auto& m : members) line += " " + m;
    std::printf("%s\n", line.c_str());
  }
  std::printf("all = every suite above\n");
  return 0;
}

int run(const std::string& config_path, const std::string& suite, const std::string& out_dir, int threads,
        std::optional<std::uint64_t> seed) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string text;
  ExperimentConfig cfg;
  std::vector<std::string> names;
  try {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + config_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    cfg = parse_config(text);
    if (!suite.empty()) cfg.suite = suite;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) cfg.seed = *seed;
    if (threads < 1) throw ConfigError("--threads must be at least 1");
    names = resolve_suites(cfg.suite);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }

  RunOptions opt;
  opt.threads = threads;
  std::vector<SuiteOutcome> outcomes;
  try {
    outcomes = run_suites(cfg, names, opt);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const qtd::PreconditionError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  const int status = exit_status(outcomes);

  try {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    write_text(dir / "results.csv", format_csv(outcomes));
    write_text(dir / "report.json", report_json(cfg, outcomes, status).dump(2) + "\n");
    ManifestInfo info;
    info.config_path = config_path;
    info.config_sha256 = sha256_hex(text);
    info.version = QTD_VERSION;
    info.threads = threads;
    info.seed = cfg.seed;
    info.exit_status = status;
    info.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(dir / "manifest.json", manifest_json(info, outcomes).dump(2) + "\n");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  for (const auto& o : outcomes)
    std::printf("%-22s %-12s %8.2fs%s%s\n", o.name.c_str(), o.verdict.c_str(), o.wall_seconds,
                o.note.empty() ? "" : "  ", o.note.c_str());
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qtd: sojourn-time and time-delay experiments on lattice quantum walks"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "run the suites selected by a config file");
  std::string config_path, suite, out_dir;
  int threads = 1;
  std::uint64_t seed_value = 0;
  run_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
  run_cmd->add_option("--suite", suite, "suite or group name; overrides the config");
  run_cmd->add_option("--out", out_dir, "output directory; overrides the config");
  run_cmd->add_option("--threads", threads, "worker threads for per-scale jobs");
  auto* seed_opt = run_cmd->add_option("--seed", seed_value, "probe seed; overrides the config");

  app.add_subcommand("list-suites", "print the suite catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (app.got_subcommand("list-suites")) return list_suites();
    std::optional<std::uint64_t> seed;
    if (seed_opt->count() > 0) seed = seed_value;
    return run(config_path, suite, out_dir, threads, seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}
