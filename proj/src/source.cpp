// source.cpp

#include "fiberbell/source.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fiberbell {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("source.") + field + ": " + what);
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

double energy_mismatch(const SourceParams& p) {
  const double pump = 2.0 / p.pump_wavelength_nm;
  return std::abs(pump - 1.0 / p.signal_wavelength_nm - 1.0 / p.idler_wavelength_nm) / pump;
}

void validate(const SourceParams& p) {
  require(finite_nonneg(p.mu_pair), "mu_pair", "must be finite and >= 0");
  require(std::isfinite(p.pump_phase), "pump_phase", "must be finite");
  require(finite_nonneg(p.pump_power_ratio), "pump_power_ratio", "must be finite and >= 0");
  require(p.coherence_gamma >= 0.0 && p.coherence_gamma <= 1.0, "coherence_gamma",
          "must lie in [0, 1]");
  require(finite_nonneg(p.bg_signal), "bg_signal", "must be finite and >= 0");
  require(finite_nonneg(p.bg_idler), "bg_idler", "must be finite and >= 0");
  require(p.cross_pol_fraction >= 0.0 && p.cross_pol_fraction <= 1.0, "cross_pol_fraction",
          "must lie in [0, 1]");
  require(p.pump_wavelength_nm > 0.0 && std::isfinite(p.pump_wavelength_nm), "pump_wavelength",
          "must be positive");
  require(p.signal_wavelength_nm > 0.0 && std::isfinite(p.signal_wavelength_nm),
          "signal_wavelength", "must be positive");
  require(p.idler_wavelength_nm > 0.0 && std::isfinite(p.idler_wavelength_nm), "idler_wavelength",
          "must be positive");
  require(finite_nonneg(p.wavelength_tolerance), "wavelength_tolerance", "must be >= 0");
  require(energy_mismatch(p) <= p.wavelength_tolerance, "signal_wavelength",
          "pump, signal and idler wavelengths violate 2/lp = 1/ls + 1/li");
}

TwoPhotonState state_from_pump(const SourceParams& params, bool idler_hwp) {
  validate(params);
  const TwoPhotonState base = make_state(2.0 * params.pump_phase, params.pump_power_ratio,
                                         params.coherence_gamma, StateFamily::kParallel);
  if (!idler_hwp) return base;
  return apply_waveplate(base, WaveplateElement::half_wave(45.0), Channel::kIdler);
}

PumpSetting pump_setting_for(BellState target) {
  switch (target) {
    case BellState::kPsiPlus: return {0.0, false};
    case BellState::kPsiMinus: return {kPi / 2.0, false};
    case BellState::kPhiPlus: return {0.0, true};
    case BellState::kPhiMinus: return {kPi / 2.0, true};
  }
  return {};
}

PulseEmitter::PulseEmitter(const SourceParams& params)
    : state_(state_from_pump(params)),
      statistics_(params.statistics),
      mu_pair_(params.mu_pair),
      mean_bg_signal_(params.bg_signal),
      mean_bg_idler_(params.bg_idler),
      poisson_pairs_(params.mu_pair > 0.0 ? params.mu_pair : 1.0),
      thermal_pairs_(1.0 / (1.0 + params.mu_pair)),
      bg_signal_(params.bg_signal > 0.0 ? params.bg_signal : 1.0),
      bg_idler_(params.bg_idler > 0.0 ? params.bg_idler : 1.0) {}

int PulseEmitter::draw_pairs(RandomStream& rng) {
  if (mu_pair_ == 0.0) return 0;
  return statistics_ == PairStatistics::kPoisson ? poisson_pairs_(rng) : thermal_pairs_(rng);
}

int PulseEmitter::draw_background_signal(RandomStream& rng) {
  return mean_bg_signal_ > 0.0 ? bg_signal_(rng) : 0;
}

int PulseEmitter::draw_background_idler(RandomStream& rng) {
  return mean_bg_idler_ > 0.0 ? bg_idler_(rng) : 0;
}

PulseEmission PulseEmitter::emit(RandomStream& rng) {
  PulseEmission out;
  out.n_pairs = draw_pairs(rng);
  if (out.n_pairs > 0) out.pair_state = state_;
  out.n_bg_signal = draw_background_signal(rng);
  out.n_bg_idler = draw_background_idler(rng);
  return out;
}

PulseEmission emit_pulse(const SourceParams& params, RandomStream& rng) {
  PulseEmitter emitter(params);
  return emitter.emit(rng);
}

double grating_transmission(double polarization_rad, double grating_eff_h, double grating_eff_v) {
  const double c = std::cos(polarization_rad);
  const double s = std::sin(polarization_rad);
  return grating_eff_h * grating_eff_h * c * c + grating_eff_v * grating_eff_v * s * s;
}

std::vector<PumpScanPoint> pump_polarization_scan(const SourceParams& params,
                                                  std::span<const double> hwp1_angles_deg,
                                                  double grating_eff_h, double grating_eff_v) {
  validate(params);
  if (!(grating_eff_h >= 0.0 && grating_eff_h <= 1.0 && grating_eff_v >= 0.0 &&
        grating_eff_v <= 1.0))
    throw std::invalid_argument("grating efficiencies must lie in [0, 1]");

  const double c = params.cross_pol_fraction;
  const double co_share = 1.0 / (1.0 + c);
  const double cross_share = c / (1.0 + c);

  std::vector<PumpScanPoint> out;
  out.reserve(hwp1_angles_deg.size());
  for (double angle : hwp1_angles_deg) {
    if (!std::isfinite(angle)) throw std::invalid_argument("scan angles must be finite");
    const double pump_pol = 2.0 * degrees_to_radians(angle);
    const double t_co = grating_transmission(pump_pol, grating_eff_h, grating_eff_v);
    const double t_cross = grating_transmission(pump_pol + kPi / 2.0, grating_eff_h, grating_eff_v);

    PumpScanPoint point;
    point.hwp_angle_deg = angle;
    point.pump_polarization_deg = 2.0 * angle;
    point.scattering_rate = params.mu_pair;
    point.singles = params.mu_pair * (co_share * t_co + cross_share * t_cross);
    point.coincidences = params.mu_pair * (co_share * t_co * t_co + cross_share * t_cross * t_cross);
    out.push_back(point);
  }
  return out;
}

double peak_to_peak_ripple(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("ripple of an empty series");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*hi + *lo == 0.0) return 0.0;
  return (*hi - *lo) / (*hi + *lo);
}

double singles_ripple_closed_form(double grating_eff_h, double grating_eff_v,
                                  double cross_pol_fraction) {
  const double h2 = grating_eff_h * grating_eff_h;
  const double v2 = grating_eff_v * grating_eff_v;
  return std::abs(h2 - v2) / (h2 + v2) * (1.0 - cross_pol_fraction) / (1.0 + cross_pol_fraction);
}

}  // namespace fiberbell
