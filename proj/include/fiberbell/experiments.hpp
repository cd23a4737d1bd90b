// experiments.hpp
// Named experiments: each takes a resolved ExperimentConfig, runs the
// simulation and analysis, and returns typed results plus a tabular form.

#pragma once

#include "fiberbell/analysis.hpp"
#include "fiberbell/config.hpp"
#include "fiberbell/detection.hpp"
#include "fiberbell/stabilization.hpp"

#include <string>
#include <utility>
#include <vector>

namespace fiberbell {

// Domain failures during a run (fits that do not converge, empty counts).
class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scan of phi_ref with both analyzers fixed; phi_p = phi_ref + loop.delta.
// Two-photon fits use k = 2 in phi_ref, the reference fringe k = 1.
struct PhaseScanResult {
  std::vector<double> phi_ref;
  std::vector<double> reference;  // normalized photocurrent, with noise
  std::vector<CountRecord> records;
  FringeFit corrected;       // k fixed at 2
  FringeFit raw;             // k fixed at 2
  FringeFit corrected_free;  // k free
  FringeFit reference_fit;   // k fixed at 1
  FringeFit reference_free;  // k free
  double period_ratio = 0.0;         // two-photon / reference period, free fits
  double accidental_fraction = 0.0;  // sum accidentals / sum raw coincidences
};

PhaseScanResult run_phase_scan(const ExperimentConfig& config);

// Idler analyzer scanned over [scan.start, scan.stop) with the signal
// analyzer at scan.signal_angle, source locked to config.bell_state.
// Fits use k = 2 in the idler angle (radians).
struct AnalyzerScanResult {
  std::vector<double> idler_deg;
  std::vector<CountRecord> records;
  FringeFit corrected;
  FringeFit raw;
  double singles_variation = 0.0;  // max over channels of (max - min) / mean
  double accidental_fraction = 0.0;
};

AnalyzerScanResult run_analyzer_scan(const ExperimentConfig& config);

// First half-wave plate scanned over [scan.start, scan.stop) (radians of
// plate angle); pump polarization is twice the plate angle.
struct PumpScanResult {
  std::vector<PumpScanPoint> points;
  double singles_ripple = 0.0;
  double coincidence_ripple = 0.0;
  double closed_form_ripple = 0.0;
};

PumpScanResult run_pump_pol_scan(const ExperimentConfig& config);

// 16-setting CHSH run on the state locked by lock_bell_state(bell_state,
// loop.delta). With loop.lock_during_acquisition the phase loop is stepped
// once per batch of loop.gates_per_step gates and each batch is acquired at
// the loop's current pump phase.
struct ChshRun {
  LockConfiguration lock;
  std::vector<CountRecord> records;  // chsh_settings() order
  ChshResult result;
  std::vector<LoopTraceRow> trace;   // empty unless locked during acquisition
};

ChshRun run_chsh(const ExperimentConfig& config);

// loop.ensemble independent trajectories with and without feedback. The
// statistic is the RMS of the unwrapped phi_ref - target over all steps and
// trajectories.
struct StabilizeResult {
  double target = 0.0;
  double locked_rms = 0.0;
  double unlocked_rms = 0.0;
  double final_error = 0.0;  // |phi_ref - target| at the end of the first locked run
  LoopRun locked_first;
  LoopRun unlocked_first;
};

StabilizeResult run_stabilize(const ExperimentConfig& config);

struct CalibrationResult {
  PhaseScanResult scan;
  DeltaEstimate delta;
};

CalibrationResult run_calibrate_delta(const ExperimentConfig& config);

struct Table {
  std::string name;  // file stem
  std::string header;
  std::vector<std::string> rows;
};

struct ExperimentOutput {
  std::vector<CountRecord> records;
  std::vector<Table> tables;  // the count table first, when there is one
  std::vector<std::pair<std::string, std::string>> summary;
};

// Runs config.experiment and converts the result to tables and a summary.
ExperimentOutput run_experiment(const ExperimentConfig& config);

// Corrected (C - A, sqrt(C + A)) or raw (C, sqrt(max(C, 1))) fringe point.
FringePoint fringe_point(double x, const CountRecord& record, bool corrected);

}  // namespace fiberbell
