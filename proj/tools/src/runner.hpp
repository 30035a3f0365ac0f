#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace qtd::cli {

struct Row {
  std::string suite;
  std::string model;
  std::optional<double> r;
  std::string quantity;
  double value = 0.0;
  std::optional<double> tail;
  std::string verdict;  // pass | fail | inconclusive | info | skipped
};

struct SuiteOutcome {
  std::string name;
  std::string verdict;
  std::string note;
  nlohmann::json details;
  std::vector<Row> rows;
  double wall_seconds = 0.0;
};

struct SuiteInfo {
  const char* name;
  const char* anchor;
  const char* description;
};

// Stable catalog order.
const std::vector<SuiteInfo>& suite_catalog();
const std::vector<std::pair<std::string, std::vector<std::string>>>& suite_groups();
// Expands a group or single suite name; throws ConfigError for unknown names.
std::vector<std::string> resolve_suites(const std::string& selection);

struct RunOptions {
  int threads = 1;
};

std::vector<SuiteOutcome> run_suites(const ExperimentConfig& cfg, const std::vector<std::string>& names,
                                     const RunOptions& opt = {});

// 0 pass, 1 failed verdict, 3 inconclusive.
int exit_status(const std::vector<SuiteOutcome>& outcomes);

}  // namespace qtd::cli
