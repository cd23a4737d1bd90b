// report.hpp
// Output directory layout and the reproducibility block.
//
//   <dir>/config.txt      canonical config (what the hash covers)
//   <dir>/summary.txt     flat "key = value" lines, reproducibility first
//   <dir>/<table>.csv     one file per table, header line first

#pragma once

#include "fiberbell/config.hpp"
#include "fiberbell/experiments.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fiberbell {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string_view library_version();

// Lowercase hex SHA-256 of the canonical config text.
std::string sha256_hex(std::string_view data);
std::string config_hash(const ExperimentConfig& config);

std::vector<std::pair<std::string, std::string>> reproducibility_block(const ExperimentConfig& config);

std::string format_summary(const ExperimentConfig& config, const ExperimentOutput& output);
std::string format_table(const Table& table);

// Parses "key = value" lines back into pairs (comments and blanks skipped).
std::vector<std::pair<std::string, std::string>> parse_summary(std::string_view text);

// All file writes go through here, sequentially. Throws OutputError.
void write_output(const std::filesystem::path& dir, const ExperimentConfig& config,
                  const ExperimentOutput& output);

}  // namespace fiberbell
