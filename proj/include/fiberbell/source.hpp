// source.hpp
// Per-pulse output of the pumped fiber loop: pair number, pair polarization
// state, uncorrelated background photons, and the pump-phase link.

#pragma once

#include "fiberbell/quantum_state.hpp"
#include "fiberbell/random.hpp"

#include <optional>
#include <random>
#include <span>
#include <vector>

namespace fiberbell {

enum class PairStatistics { kPoisson, kThermal };

struct SourceParams {
  double mu_pair = 0.1;             // mean pairs per pulse
  double pump_phase = 0.0;          // phi_p, radians; the state phase is 2 phi_p
  double pump_power_ratio = 1.0;    // second pump pulse / first
  double coherence_gamma = 0.945;
  double bg_signal = 0.0;           // mean background photons per pulse at each detector
  double bg_idler = 0.0;
  double cross_pol_fraction = 0.0;
  bool idler_hwp = false;           // 45 degree half-wave plate in the idler arm
  PairStatistics statistics = PairStatistics::kPoisson;
  double pump_wavelength_nm = 1536.0;
  double signal_wavelength_nm = 1547.1;
  double idler_wavelength_nm = 1525.1;
  double wavelength_tolerance = 1e-3;  // relative, on 2/lp = 1/ls + 1/li
};

// Throws std::invalid_argument naming the offending field.
void validate(const SourceParams& params);

// Relative mismatch |2/lp - 1/ls - 1/li| / (2/lp).
double energy_mismatch(const SourceParams& params);

struct PulseEmission {
  int n_pairs = 0;
  std::optional<TwoPhotonState> pair_state;  // set iff n_pairs > 0
  int n_bg_signal = 0;
  int n_bg_idler = 0;
};

// make_state(2 phi_p, ratio, gamma, HH/VV), followed by a 45 degree idler
// half-wave plate when requested (giving the HV/VH family).
TwoPhotonState state_from_pump(const SourceParams& params, bool idler_hwp);
inline TwoPhotonState state_from_pump(const SourceParams& params) {
  return state_from_pump(params, params.idler_hwp);
}

// Pump phase phi_p (in [0, pi)) and idler-plate flag that prepare an ideal
// Bell state.
struct PumpSetting {
  double pump_phase = 0.0;
  bool idler_hwp = false;
};
PumpSetting pump_setting_for(BellState target);

// Holds the pair state and pre-built distributions so per-gate sampling is
// cheap. Photon numbers are independent between pair and background
// processes.
class PulseEmitter {
 public:
  explicit PulseEmitter(const SourceParams& params);

  const TwoPhotonState& pair_state() const { return state_; }
  int draw_pairs(RandomStream& rng);
  int draw_background_signal(RandomStream& rng);
  int draw_background_idler(RandomStream& rng);
  PulseEmission emit(RandomStream& rng);

 private:
  TwoPhotonState state_;
  PairStatistics statistics_;
  double mu_pair_;
  double mean_bg_signal_;
  double mean_bg_idler_;
  std::poisson_distribution<int> poisson_pairs_;
  std::geometric_distribution<int> thermal_pairs_;
  std::poisson_distribution<int> bg_signal_;
  std::poisson_distribution<int> bg_idler_;
};

PulseEmission emit_pulse(const SourceParams& params, RandomStream& rng);

struct PumpScanPoint {
  double hwp_angle_deg = 0.0;
  double pump_polarization_deg = 0.0;  // from horizontal, 2x the plate angle
  double scattering_rate = 0.0;        // pairs per pulse, angle independent
  double singles = 0.0;                // photons per pulse leaving the grating filter, per arm
  double coincidences = 0.0;           // pairs per pulse with both photons transmitted
};

// Double-pass transmission of the grating filter for light polarized at
// psi from horizontal: eff_H^2 cos^2 psi + eff_V^2 sin^2 psi.
double grating_transmission(double polarization_rad, double grating_eff_h, double grating_eff_v);

std::vector<PumpScanPoint> pump_polarization_scan(const SourceParams& params,
                                                  std::span<const double> hwp1_angles_deg,
                                                  double grating_eff_h = 0.90,
                                                  double grating_eff_v = 0.86);

// (max - min) / (max + min) of the given series.
double peak_to_peak_ripple(std::span<const double> values);

// Closed-form singles ripple of the pump polarization scan.
double singles_ripple_closed_form(double grating_eff_h, double grating_eff_v,
                                  double cross_pol_fraction);

}  // namespace fiberbell
