// report.cpp

#include "fiberbell/report.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fiberbell {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw OutputError("write failed for " + path.string());
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string_view library_version() { return FIBERBELL_VERSION; }

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

// The output directory does not change what is simulated, so it is left out.
std::string config_hash(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.output_path.clear();
  return sha256_hex(to_config_text(c));
}

std::vector<std::pair<std::string, std::string>> reproducibility_block(const ExperimentConfig& config) {
  return {
      {"repro.config_sha256", config_hash(config)},
      {"repro.seed", std::to_string(config.seed)},
      {"repro.workers", std::to_string(config.workers)},
      {"repro.version", std::string(library_version())},
      {"repro.compiler", __VERSION__},
      {"repro.rng", "mt19937_64 seeded by seed_seq(seed, worker, setting, stream)"},
  };
}

std::string format_summary(const ExperimentConfig& config, const ExperimentOutput& output) {
  std::ostringstream out;
  for (const auto& [k, v] : reproducibility_block(config)) out << k << " = " << v << '\n';
  for (const auto& [k, v] : output.summary) out << k << " = " << v << '\n';
  return out.str();
}

std::string format_table(const Table& table) {
  std::string text = table.header + '\n';
  for (const std::string& row : table.rows) text += row + '\n';
  return text;
}

std::vector<std::pair<std::string, std::string>> parse_summary(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find(" = ");
    if (eq == std::string::npos) throw std::invalid_argument("summary line without ' = ': " + t);
    out.emplace_back(t.substr(0, eq), t.substr(eq + 3));
  }
  return out;
}

void write_output(const std::filesystem::path& dir, const ExperimentConfig& config,
                  const ExperimentOutput& output) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "config.txt", to_config_text(config));
  for (const Table& t : output.tables) write_file(dir / (t.name + ".csv"), format_table(t));
  write_file(dir / "summary.txt", format_summary(config, output));
}

}  // namespace fiberbell
