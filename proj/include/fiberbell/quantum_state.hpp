// quantum_state.hpp
// Two-photon polarization states, waveplates and linear analyzers.
//
// Basis order is fixed to {|HH>, |HV>, |VH>, |VV>} with the signal photon as
// the first factor. Analyzer and waveplate angles are measured from the
// vertical axis, so a linear polarizer at angle theta passes the Jones vector
// (sin theta, cos theta) written in the (H, V) basis.
//
// Bell-state names follow the source's own labelling, which swaps the usual
// Psi/Phi letters:
//   Psi+- = |HH> +- |VV>      Phi+- = |HV> +- |VH>

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <string_view>

namespace fiberbell {

using Complex = std::complex<double>;
using DensityMatrix = Eigen::Matrix4cd;
using JonesMatrix = Eigen::Matrix2cd;

inline constexpr double kPi = 3.14159265358979323846;

enum class Channel { kSignal, kIdler };

// Which pair of two-photon amplitudes carries the entanglement.
enum class StateFamily {
  kParallel,        // HH / VV
  kPerpendicular,   // HV / VH
};

enum class BellState { kPsiPlus, kPsiMinus, kPhiPlus, kPhiMinus };

std::string_view to_string(Channel channel);
std::string_view to_string(StateFamily family);
std::string_view to_string(BellState state);
BellState parse_bell_state(std::string_view text);

double degrees_to_radians(double degrees);

// Maps any finite angle onto [-90, 90) degrees. Linear polarizers are
// periodic in 180 degrees.
double normalize_analyzer_angle(double degrees);

struct AnalyzerSetting {
  double theta_deg = 0.0;
  Channel channel = Channel::kSignal;

  static AnalyzerSetting signal(double theta_deg);
  static AnalyzerSetting idler(double theta_deg);
  // Analyzer rotated by 90 degrees on the same channel.
  AnalyzerSetting orthogonal() const;
  double theta_rad() const;

  friend bool operator==(const AnalyzerSetting&, const AnalyzerSetting&) = default;
};

enum class WaveplateKind { kHalfWave, kQuarterWave };

struct WaveplateElement {
  WaveplateKind kind = WaveplateKind::kHalfWave;
  double axis_angle_deg = 0.0;  // fast axis, from vertical

  static WaveplateElement half_wave(double axis_angle_deg);
  static WaveplateElement quarter_wave(double axis_angle_deg);

  double retardance() const;  // pi or pi/2
  JonesMatrix jones() const;
};

// Projector onto linear polarization at theta (radians) from vertical.
Eigen::Matrix2d linear_projector(double theta_rad);

class TwoPhotonState {
 public:
  // Validates Hermiticity, unit trace and positivity; throws
  // std::invalid_argument on violation.
  static TwoPhotonState from_density_matrix(const DensityMatrix& rho);
  static TwoPhotonState from_amplitudes(const Eigen::Vector4cd& psi);

  const DensityMatrix& density() const { return rho_; }
  Complex element(int row, int col) const { return rho_(row, col); }

  double purity() const;
  // Fidelity with a pure state, <psi|rho|psi> for normalized psi.
  double overlap(const Eigen::Vector4cd& psi) const;

  // Largest elementwise deviation of the two density matrices.
  double distance(const TwoPhotonState& other) const;

 private:
  explicit TwoPhotonState(DensityMatrix rho) : rho_(std::move(rho)) {}
  DensityMatrix rho_;
};

// Basis indices.
inline constexpr int kHH = 0;
inline constexpr int kHV = 1;
inline constexpr int kVH = 2;
inline constexpr int kVV = 3;

// Builds (|a> + r e^{i phi} |b>)/sqrt(1 + r^2) with the a-b coherence scaled
// by gamma. (a, b) = (HH, VV) or (HV, VH) depending on the family.
TwoPhotonState make_state(double phase_phi, double amplitude_ratio, double coherence_gamma,
                          StateFamily family);

// Ideal Bell state in the source's labelling.
TwoPhotonState bell_state(BellState which);
Eigen::Vector4cd bell_vector(BellState which);

TwoPhotonState apply_waveplate(const TwoPhotonState& state, const WaveplateElement& plate,
                               Channel channel);

// Tr(rho P(theta_s) (x) P(theta_i)). Throws std::invalid_argument when the
// two settings are not on opposite channels.
double projection_probability(const TwoPhotonState& state, const AnalyzerSetting& signal_setting,
                              const AnalyzerSetting& idler_setting);

// Probability that the photon in one channel passes its analyzer, ignoring
// the partner.
double marginal_probability(const TwoPhotonState& state, const AnalyzerSetting& setting);

// True when a and b agree up to a global phase (density matrices agree).
bool equal_up_to_global_phase(const JonesMatrix& a, const JonesMatrix& b, double tol);

}  // namespace fiberbell
