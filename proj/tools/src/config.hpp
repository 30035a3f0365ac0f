#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qtd/hilbert.hpp"

namespace qtd::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WellConfig {
  double depth = 0.0;
  double width = 1.0;
  std::vector<double> center;
};

struct DefectConfig {
  double theta = 0.0;
  std::vector<std::vector<int>> sites;
};

struct ModelConfig {
  std::string kind;               // shift | laplacian | coined_walk
  std::vector<double> velocity;   // shift only
  std::string coin = "hadamard";  // coined_walk only: hadamard | identity
  std::optional<WellConfig> well;
  std::optional<DefectConfig> defect;
};

struct GridConfig {
  int d = 1;
  int n = 1024;
  double h = 1.0;
  double guard_fraction = 0.9;
};

struct Tolerances {
  double tol_w = 1e-9;
  double tol_s = 1e-6;
  long horizon = 4000;
  double tail = 1e-9;
  double v_min = 0.1;
  double transport = 1e-10;
  double canonical = 1e-8;
  double summation_rel = 5e-2;
  double mourre_slack = 1e-9;
  double smooth_rel = 1e-6;
  double isometry = 1e-8;
  double commutation = 1e-8;
  double identity_s = 1e-12;
  double tau_rel = 5e-2;
  double tau_abs = 0.0;
  double ew_rel = 2e-2;
  double ew_abs = 5e-4;
  double ew_stability = 1e-2;
  int delta_bins = 4;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::string name;
  ModelConfig model;
  GridConfig grid;
  WavepacketSpec state;
  // packet for the summation suite when it differs from the scattering packet
  std::optional<WavepacketSpec> summation_state;
  double w = 1.0;
  std::vector<double> r_list;
  Tolerances tol;
  std::string suite = "all";
  std::string out_dir = "qtd_out";
  std::uint64_t seed = 1;
  int probes = 20;
  int max_shift = 16;
  int windows = 10;
};

inline constexpr int kSchemaVersion = 1;

// Throws ConfigError on any malformed, unknown or out-of-range field.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace qtd::cli
