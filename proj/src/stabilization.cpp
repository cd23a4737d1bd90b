// stabilization.cpp

#include "fiberbell/stabilization.hpp"

#include "fiberbell/source.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <random>
#include <stdexcept>

namespace fiberbell {

namespace {

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

template <typename T>
T parse_field(std::string_view text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument("bad loop trace field '" + std::string(text) + "'");
  return value;
}

}  // namespace

double reference_current(double phi_ref) { return 0.5 * (1.0 + std::cos(phi_ref)); }

bool loop_gains_stable(double kp, double ki) {
  return kp >= 0.0 && kp < 1.0 && ki > 0.0 && ki < 2.0 * (1.0 - kp);
}

void validate(const PhaseLoopParams& p) {
  if (!std::isfinite(p.kp) || !std::isfinite(p.ki))
    throw std::invalid_argument("loop.kp/ki: gains must be finite");
  if (!(p.drift_rate >= 0.0) || !std::isfinite(p.drift_rate))
    throw std::invalid_argument("loop.drift_rate: must be finite and >= 0");
  if (!(p.dither > 0.0 && p.dither < kPi / 2.0))
    throw std::invalid_argument("loop.dither: must lie in (0, pi/2)");
  if (!(p.current_noise >= 0.0) || !std::isfinite(p.current_noise))
    throw std::invalid_argument("loop.current_noise: must be finite and >= 0");
}

LockPoint LockPoint::at_phase(double phi_ref) {
  const double wrapped = wrap_phase(phi_ref);
  LockPoint lp;
  lp.setpoint_current = reference_current(wrapped);
  // Fringe extrema (slope zero) fall on the [0, pi] branch.
  lp.slope_sign = wrapped < 0.0 && wrapped > -kPi ? +1 : -1;
  return lp;
}

double LockPoint::phase() const {
  const double c = std::clamp(2.0 * setpoint_current - 1.0, -1.0, 1.0);
  const double magnitude = std::acos(c);
  return slope_sign < 0 ? magnitude : -magnitude;
}

PhaseLoopState PhaseLoopState::starting_at(const LockPoint& lock, double offset, double delta,
                                           const PhaseLoopParams& params, bool locked) {
  validate(params);
  if (!(lock.setpoint_current >= 0.0 && lock.setpoint_current <= 1.0))
    throw std::invalid_argument("loop.setpoint_current: must lie in [0, 1]");
  if (lock.slope_sign != 1 && lock.slope_sign != -1)
    throw std::invalid_argument("loop.slope_sign: must be +1 or -1");
  PhaseLoopState s;
  s.lock = lock;
  s.phi_ref = lock.phase() + offset;
  s.delta = delta;
  s.params = params;
  s.locked = locked;
  s.error = wrap_phase(offset);
  s.error_current = reference_current(s.phi_ref) - lock.setpoint_current;
  return s;
}

double PhaseLoopState::wrapped_phi_ref() const { return wrap_phase(phi_ref); }

PhaseLoopState step_loop(const PhaseLoopState& state, RandomStream& rng) {
  PhaseLoopState next = state;
  const PhaseLoopParams& p = state.params;
  std::normal_distribution<double> gauss(0.0, 1.0);

  if (p.drift_rate > 0.0) next.phi_ref += p.drift_rate * gauss(rng);

  // Two samples at +-dither give the fringe in quadrature:
  //   I+ + I- - 1 = cos(phi) cos(d),  I- - I+ = sin(phi) sin(d).
  double i_plus = reference_current(next.phi_ref + p.dither);
  double i_minus = reference_current(next.phi_ref - p.dither);
  if (p.current_noise > 0.0) {
    i_plus += p.current_noise * gauss(rng);
    i_minus += p.current_noise * gauss(rng);
  }
  const double phase_estimate =
      std::atan2((i_minus - i_plus) / std::sin(p.dither), (i_plus + i_minus - 1.0) / std::cos(p.dither));

  next.error_current = 0.5 * (i_plus + i_minus) - state.lock.setpoint_current;
  next.error = wrap_phase(phase_estimate - state.lock.phase());

  if (state.locked) {
    next.integrator += next.error;
    const double pzt = -(p.kp * next.error + p.ki * next.integrator);
    next.phi_ref += pzt - state.pzt_position;
    next.pzt_position = pzt;
  }
  ++next.step;
  return next;
}

LoopRun run_loop(const PhaseLoopState& initial, std::uint64_t steps, RandomStream& rng) {
  LoopRun run;
  run.trace.reserve(steps);
  PhaseLoopState state = initial;
  const double target = initial.lock.phase();
  double sum_sq = 0.0;
  for (std::uint64_t n = 0; n < steps; ++n) {
    state = step_loop(state, rng);
    run.trace.push_back({state.step, state.phi_ref, state.error, state.pzt_position});
    const double dev = state.phi_ref - target;
    sum_sq += dev * dev;
  }
  run.final_state = state;
  run.rms_deviation = steps > 0 ? std::sqrt(sum_sq / static_cast<double>(steps)) : 0.0;
  return run;
}

std::string_view loop_trace_csv_header() { return "step,phi_ref_rad,error_rad,pzt_position_rad"; }

std::string to_csv_row(const LoopTraceRow& row) {
  return std::to_string(row.step) + ',' + format_double(row.phi_ref) + ',' +
         format_double(row.error) + ',' + format_double(row.pzt_position);
}

LoopTraceRow parse_loop_trace_row(std::string_view row) {
  std::array<std::string_view, 4> f;
  std::size_t start = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    const std::size_t comma = row.find(',', start);
    if ((comma == std::string_view::npos) != (k == 3))
      throw std::invalid_argument("loop trace row needs 4 fields");
    f[k] = row.substr(start, comma == std::string_view::npos ? row.npos : comma - start);
    start = comma + 1;
  }
  return {parse_field<std::uint64_t>(f[0]), parse_field<double>(f[1]), parse_field<double>(f[2]),
          parse_field<double>(f[3])};
}

LockConfiguration lock_bell_state(BellState target, double delta) {
  if (!std::isfinite(delta)) throw std::invalid_argument("delta must be finite");
  const PumpSetting pump = pump_setting_for(target);
  LockConfiguration cfg;
  cfg.target = target;
  cfg.pump_phase = pump.pump_phase;
  cfg.idler_hwp = pump.idler_hwp;
  cfg.phi_ref = wrap_phase(pump.pump_phase - delta);
  cfg.lock = LockPoint::at_phase(cfg.phi_ref);
  return cfg;
}

DeltaEstimate calibrate_delta(const FringeFit& two_photon, const FringeFit& reference) {
  if (!two_photon.converged || !reference.converged)
    throw std::invalid_argument("calibrate_delta needs converged fits");
  if (std::abs(two_photon.frequency - 2.0) > 0.05 || std::abs(reference.frequency - 1.0) > 0.05)
    throw std::invalid_argument("calibrate_delta expects k = 2 (two-photon) and k = 1 (reference)");
  // Two-photon: cos(2 phi_ref + 2 delta); reference: cos(phi_ref + p_ref).
  double delta = wrap_phase(two_photon.phase_offset / 2.0 - reference.phase_offset);
  // Half-period ambiguity: fold into (-pi/2, pi/2].
  while (delta > kPi / 2.0) delta -= kPi;
  while (delta <= -kPi / 2.0) delta += kPi;
  DeltaEstimate out;
  out.value = delta;
  out.uncertainty = std::hypot(0.5 * two_photon.phase_uncertainty, reference.phase_uncertainty);
  return out;
}

}  // namespace fiberbell
