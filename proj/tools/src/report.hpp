#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "runner.hpp"

namespace qtd::cli {

inline constexpr const char* kCsvHeader = "suite,model,r,quantity,value,tail,verdict";

std::string format_csv(const std::vector<SuiteOutcome>& outcomes);
nlohmann::json report_json(const ExperimentConfig& cfg, const std::vector<SuiteOutcome>& outcomes, int status);

struct ManifestInfo {
  std::string config_path;
  std::string config_sha256;
  std::string version;
  int threads = 1;
  std::uint64_t seed = 0;
  double total_seconds = 0.0;
  int exit_status = 0;
};

nlohmann::json manifest_json(const ManifestInfo& info, const std::vector<SuiteOutcome>& outcomes);

std::string sha256_hex(const std::string& bytes);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace qtd::cli
