#include "report.hpp"

#include <cstdio>
#include <fstream>

#include <openssl/evp.h>

namespace qtd::cli {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_csv(const std::vector<SuiteOutcome>& outcomes) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& o : outcomes) {
    for (const auto& r : o.rows) {
      out += field(r.suite) + "," + field(r.model) + "," + (r.r ? num(*r.r) : "") + "," + field(r.quantity) + "," +
             num(r.value) + "," + (r.tail ? num(*r.tail) : "") + "," + r.verdict + "\n";
    }
    if (o.rows.empty())
      out += field(o.name) + ",,," + "verdict" + ",," + "," + o.verdict + "\n";
  }
  return out;
}

nlohmann::json report_json(const ExperimentConfig& cfg, const std::vector<SuiteOutcome>& outcomes, int status) {
  nlohmann::json suites = nlohmann::json::array();
  for (const auto& o : outcomes) {
    nlohmann::json s = {{"name", o.name}, {"verdict", o.verdict}, {"details", o.details}};
    if (!o.note.empty()) s["note"] = o.note;
    suites.push_back(s);
  }
  return {{"name", cfg.name},
          {"schema_version", cfg.schema_version},
          {"model", cfg.model.kind},
          {"seed", cfg.seed},
          {"r_list", cfg.r_list},
          {"suites", suites},
          {"exit_status", status}};
}

nlohmann::json manifest_json(const ManifestInfo& info, const std::vector<SuiteOutcome>& outcomes) {
  nlohmann::json walls = nlohmann::json::object();
  for (const auto& o : outcomes) walls[o.name] = o.wall_seconds;
  return {{"config", info.config_path},     {"config_sha256", info.config_sha256},
          {"version", info.version},        {"threads", info.threads},
          {"seed", info.seed},              {"wall_seconds", walls},
          {"total_seconds", info.total_seconds}, {"exit_status", info.exit_status}};
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace qtd::cli
