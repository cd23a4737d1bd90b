// stabilization.hpp
// Reference-interferometer phase monitor and the PZT feedback loop that holds
// phi_ref (and through phi_p = phi_ref + delta, the prepared Bell state).

#pragma once

#include "fiberbell/analysis.hpp"
#include "fiberbell/quantum_state.hpp"
#include "fiberbell/random.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fiberbell {

// One-photon reference fringe, (1 + cos phi_ref) / 2.
double reference_current(double phi_ref);

// Discrete PI loop e[n+1] = (1 - kp - ki) e[n] + kp e[n-1] is stable for
// 0 <= kp < 1 and 0 < ki < 2 (1 - kp).
bool loop_gains_stable(double kp, double ki);

struct PhaseLoopParams {
  double kp = 0.2;
  double ki = 0.6;
  double drift_rate = 0.0;     // rad / sqrt(step), Gaussian random walk
  double dither = 0.05;        // rad, PZT dither amplitude seen by the phase detector
  double current_noise = 0.0;  // std of additive noise per photocurrent sample
};

void validate(const PhaseLoopParams& params);

// Lock point: the setpoint current fixes |phi| through the fringe, and the
// sign of dI/dphi at the lock point (the lock slope) picks the branch.
// slope_sign = -1 selects phi in [0, pi], +1 selects (-pi, 0).
struct LockPoint {
  double setpoint_current = 1.0;
  int slope_sign = -1;

  static LockPoint at_phase(double phi_ref);
  double phase() const;
};

struct PhaseLoopState {
  double phi_ref = 0.0;  // unwrapped
  double delta = 0.0;    // phi_p = phi_ref + delta
  LockPoint lock;
  double pzt_position = 0.0;  // rad equivalent
  double integrator = 0.0;
  double error = 0.0;          // last phase error, rad
  double error_current = 0.0;  // last reference_current - setpoint
  std::uint64_t step = 0;
  bool locked = true;
  PhaseLoopParams params;

  // Loop starting `offset` radians away from its lock point, PZT at rest.
  static PhaseLoopState starting_at(const LockPoint& lock, double offset, double delta,
                                    const PhaseLoopParams& params, bool locked = true);

  double wrapped_phi_ref() const;
  double pump_phase() const { return phi_ref + delta; }
};

// Adds drift, measures the phase error through the dithered reference
// detector and applies the PI correction through the PZT.
PhaseLoopState step_loop(const PhaseLoopState& state, RandomStream& rng);

struct LoopTraceRow {
  std::uint64_t step = 0;
  double phi_ref = 0.0;
  double error = 0.0;
  double pzt_position = 0.0;
};

struct LoopRun {
  PhaseLoopState final_state;
  std::vector<LoopTraceRow> trace;
  double rms_deviation = 0.0;  // RMS of (phi_ref - lock phase), unwrapped
};

LoopRun run_loop(const PhaseLoopState& initial, std::uint64_t steps, RandomStream& rng);

// Loop traces: step,phi_ref_rad,error_rad,pzt_position_rad
std::string_view loop_trace_csv_header();
std::string to_csv_row(const LoopTraceRow& row);
LoopTraceRow parse_loop_trace_row(std::string_view row);

struct LockConfiguration {
  BellState target = BellState::kPsiPlus;
  double pump_phase = 0.0;  // phi_p
  double phi_ref = 0.0;     // (-pi, pi]
  LockPoint lock;
  bool idler_hwp = false;
};

LockConfiguration lock_bell_state(BellState target, double delta);

struct DeltaEstimate {
  double value = 0.0;        // (-pi/2, pi/2]
  double uncertainty = 0.0;
};

// The two-photon fringe (k = 2 in phi_ref, constructive at phi_p = 0) and the
// reference fringe (k = 1) must come from the same phi_ref scan.
DeltaEstimate calibrate_delta(const FringeFit& two_photon, const FringeFit& reference);

}  // namespace fiberbell
