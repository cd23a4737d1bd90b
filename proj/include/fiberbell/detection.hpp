// detection.hpp
// Gated single-photon detection: Monte-Carlo tallies of singles,
// coincidences and delayed-gate accidentals, plus the first-order
// closed-form rates they converge to.

#pragma once

#include "fiberbell/quantum_state.hpp"
#include "fiberbell/random.hpp"
#include "fiberbell/source.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace fiberbell {

struct DetectorParams {
  double alpha_signal = 0.09;  // total detection efficiency
  double alpha_idler = 0.07;
  double dark_signal = 5e-5;   // dark-count probability per gate
  double dark_idler = 5e-5;
  double gate_rate = 588e3;    // Hz
  double gate_duration = 1e-9; // s, informational
  int pulses_per_gate = 128;   // pump pulses per detector gate, informational
};

void validate(const DetectorParams& det);

struct AnalyzerPair {
  AnalyzerSetting signal = AnalyzerSetting::signal(0.0);
  AnalyzerSetting idler = AnalyzerSetting::idler(0.0);

  static AnalyzerPair at(double theta_signal_deg, double theta_idler_deg) {
    return {AnalyzerSetting::signal(theta_signal_deg), AnalyzerSetting::idler(theta_idler_deg)};
  }
  friend bool operator==(const AnalyzerPair&, const AnalyzerPair&) = default;
};

struct CountRecord {
  std::uint64_t gates = 0;
  std::uint64_t singles_signal = 0;
  std::uint64_t singles_idler = 0;
  std::uint64_t coincidences = 0;
  // Signal click in gate n paired with idler click in gate n+1 (cyclic).
  std::uint64_t accidentals_delayed = 0;
  AnalyzerPair setting;
  double duration = 0.0;  // s, gates / gate_rate

  // Adds another record taken at the same setting.
  CountRecord& operator+=(const CountRecord& other);
  friend bool operator==(const CountRecord&, const CountRecord&) = default;
};

// Checks the tally invariants; throws std::logic_error on violation.
void check_invariants(const CountRecord& record, double gate_rate);

// Single random stream, gates processed in order.
CountRecord run_acquisition(const SourceParams& source, const DetectorParams& det,
                            const AnalyzerPair& settings, std::uint64_t gates, RandomStream& rng);

// Shards the gates over `workers` threads. Worker w draws from
// make_stream(seed, w, setting_index). Results depend only on
// (inputs, seed, setting_index, workers).
CountRecord run_acquisition_sharded(const SourceParams& source, const DetectorParams& det,
                                    const AnalyzerPair& settings, std::uint64_t gates,
                                    std::uint64_t seed, std::uint64_t setting_index,
                                    unsigned workers);

// Two-photon projection probability in closed form for the state
// (|a> + r e^{i phi}|b>)/sqrt(1+r^2) with coherence gamma.
double coincidence_bracket(StateFamily family, double phase_phi, double amplitude_ratio,
                           double coherence_gamma, double theta_signal_rad,
                           double theta_idler_rad);

// Closed-form single-channel analyzer transmission for the same state.
double marginal_bracket(StateFamily family, double amplitude_ratio, Channel channel,
                        double theta_rad);

// Per-gate probabilities, first order in the photon means.
struct ExpectedRates {
  double singles_signal = 0.0;
  double singles_idler = 0.0;
  double coincidence = 0.0;  // true (pair) coincidences
  double accidental = 0.0;   // product of uncorrelated click probabilities
};

ExpectedRates expected_rates(const SourceParams& source, const DetectorParams& det,
                             const AnalyzerPair& settings);

struct CorrectedCoincidences {
  double value = 0.0;
  double uncertainty = 0.0;
  bool negative = false;  // value < 0; not clamped
};

CorrectedCoincidences subtract_accidentals(const CountRecord& record);

// CSV row: theta_signal_deg,theta_idler_deg,gates,singles_signal,
// singles_idler,coincidences,accidentals_delayed,duration_s
std::string_view count_record_csv_header();
std::string to_csv_row(const CountRecord& record);
// Throws std::invalid_argument on malformed rows.
CountRecord parse_count_record_row(std::string_view row);

}  // namespace fiberbell
