// config.hpp
// Experiment configuration and its text format.
//
// Grammar (one statement per line, '#' starts a comment):
//
//   key = value            top-level keys before the first section
//   [section]              source | detector | loop | scan
//   key = value [unit]
//
// Values are scalars. Numeric fields accept an optional unit suffix, with or
// without a space: frequencies Hz/kHz/MHz/GHz, times s/ms/us/ns/ps,
// wavelengths m/um/nm, angles rad/deg, dimensionless fractions '%'. A bare
// number is read in the field's native unit (listed by `fiberbell defaults`).
// Unknown sections or keys, repeated keys and out-of-range values are errors.

#pragma once

#include "fiberbell/detection.hpp"
#include "fiberbell/source.hpp"
#include "fiberbell/stabilization.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fiberbell {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::string field = {}, int line = 0);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

enum class ExperimentKind {
  kFringePhaseScan,
  kAnalyzerScan,
  kPumpPolScan,
  kChsh,
  kStabilize,
  kCalibrateDelta,
};

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view text);
std::vector<std::string_view> experiment_names();

struct ScanConfig {
  int points = 32;
  double start = 0.0;            // phi_ref scans: rad; analyzer scans: idler angle, rad
  double stop = 4.0 * kPi;       // exclusive
  double signal_angle_deg = 45.0;
  double idler_angle_deg = 45.0;  // fixed idler angle for phi_ref scans
  double grating_eff_h = 0.90;
  double grating_eff_v = 0.86;
};

struct LoopConfig {
  PhaseLoopParams params;
  double delta = 0.0;           // dispersion offset, phi_p = phi_ref + delta
  double initial_offset = 0.3;  // rad away from the lock point at start
  std::uint64_t steps = 10000;
  int ensemble = 16;            // independent trajectories for loop statistics
  bool lock_during_acquisition = false;
  std::uint64_t gates_per_step = 10000;
  double reference_noise = 0.01;  // std of reference-detector samples in scans
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kChsh;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::uint64_t gates_per_point = 1'000'000;
  bool corrected = true;
  BellState bell_state = BellState::kPsiPlus;
  std::string output_path = "fiberbell_out";

  SourceParams source;
  // When set, bg_signal = bg_idler are derived so that the accidental
  // probability equals this multiple of alpha_s alpha_i mu / 2 (the peak true
  // coincidence probability of an ideal fringe).
  std::optional<double> accidental_to_true = 1.0;
  DetectorParams detector;
  LoopConfig loop;
  ScanConfig scan;
};

// Parses and validates; throws ConfigError. `experiment` and `seed` are
// mandatory unless supplied through `preset`, which holds flag overrides
// applied as if they appeared on top of the text (key -> value, keys written
// as "key" or "section.key").
ExperimentConfig parse_config(std::string_view text,
                              const std::vector<std::pair<std::string, std::string>>& overrides = {});

// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const ExperimentConfig& config);

// Field reference: one line per key with its native unit and default.
std::string describe_config_fields();

// Background means per pulse giving accidental = ratio * alpha_s alpha_i mu / 2
// at first order; 0 when the pair and dark singles alone already exceed it.
double background_for_accidental_ratio(const SourceParams& source, const DetectorParams& det,
                                       double ratio);

// Applies accidental_to_true (if set) and validates everything.
ExperimentConfig resolve(ExperimentConfig config);

}  // namespace fiberbell
