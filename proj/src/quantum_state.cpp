// quantum_state.cpp

#include "fiberbell/quantum_state.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace fiberbell {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kTraceTol = 1e-12;
constexpr double kPositivityTol = 1e-10;

const JonesMatrix& identity2() {
  static const JonesMatrix id = JonesMatrix::Identity();
  return id;
}

// Signal is the first tensor factor.
DensityMatrix kron(const JonesMatrix& a, const JonesMatrix& b) {
  DensityMatrix out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) out(2 * i + k, 2 * j + l) = a(i, j) * b(k, l);
  return out;
}

Eigen::Vector2d polarizer_axis(double theta_rad) {
  return {std::sin(theta_rad), std::cos(theta_rad)};
}

}  // namespace

std::string_view to_string(Channel channel) {
  return channel == Channel::kSignal ? "signal" : "idler";
}

std::string_view to_string(StateFamily family) {
  return family == StateFamily::kParallel ? "HH/VV" : "HV/VH";
}

std::string_view to_string(BellState state) {
  switch (state) {
    case BellState::kPsiPlus: return "psi+";
    case BellState::kPsiMinus: return "psi-";
    case BellState::kPhiPlus: return "phi+";
    case BellState::kPhiMinus: return "phi-";
  }
  return "?";
}

BellState parse_bell_state(std::string_view text) {
  if (text == "psi+" || text == "HH+VV") return BellState::kPsiPlus;
  if (text == "psi-" || text == "HH-VV") return BellState::kPsiMinus;
  if (text == "phi+" || text == "HV+VH") return BellState::kPhiPlus;
  if (text == "phi-" || text == "HV-VH") return BellState::kPhiMinus;
  throw std::invalid_argument("unknown Bell state '" + std::string(text) +
                              "' (expected psi+, psi-, phi+, phi-)");
}

double degrees_to_radians(double degrees) { return degrees * kPi / 180.0; }

double normalize_analyzer_angle(double degrees) {
  if (!std::isfinite(degrees)) throw std::invalid_argument("analyzer angle must be finite");
  double wrapped = std::fmod(degrees + 90.0, 180.0);
  if (wrapped < 0.0) wrapped += 180.0;
  return wrapped - 90.0;
}

AnalyzerSetting AnalyzerSetting::signal(double theta_deg) {
  return {normalize_analyzer_angle(theta_deg), Channel::kSignal};
}

AnalyzerSetting AnalyzerSetting::idler(double theta_deg) {
  return {normalize_analyzer_angle(theta_deg), Channel::kIdler};
}

AnalyzerSetting AnalyzerSetting::orthogonal() const {
  return {normalize_analyzer_angle(theta_deg + 90.0), channel};
}

double AnalyzerSetting::theta_rad() const { return degrees_to_radians(theta_deg); }

WaveplateElement WaveplateElement::half_wave(double axis_angle_deg) {
  return {WaveplateKind::kHalfWave, axis_angle_deg};
}

WaveplateElement WaveplateElement::quarter_wave(double axis_angle_deg) {
  return {WaveplateKind::kQuarterWave, axis_angle_deg};
}

double WaveplateElement::retardance() const {
  return kind == WaveplateKind::kHalfWave ? kPi : kPi / 2.0;
}

JonesMatrix WaveplateElement::jones() const {
  if (!std::isfinite(axis_angle_deg)) throw std::invalid_argument("waveplate angle must be finite");
  // Fast axis f, slow axis s (orthogonal); the slow component lags by the
  // retardance.
  const Eigen::Vector2cd fast = polarizer_axis(degrees_to_radians(axis_angle_deg)).cast<Complex>();
  const Eigen::Vector2cd slow =
      polarizer_axis(degrees_to_radians(axis_angle_deg + 90.0)).cast<Complex>();
  const Complex lag = std::polar(1.0, retardance());
  return fast * fast.adjoint() + lag * (slow * slow.adjoint());
}

Eigen::Matrix2d linear_projector(double theta_rad) {
  const Eigen::Vector2d a = polarizer_axis(theta_rad);
  return a * a.transpose();
}

TwoPhotonState TwoPhotonState::from_density_matrix(const DensityMatrix& rho) {
  if (!rho.allFinite()) throw std::invalid_argument("density matrix has non-finite entries");
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermitianTol)
    throw std::invalid_argument("density matrix is not Hermitian (deviation " +
                                std::to_string(herm) + ")");
  const Complex trace = rho.trace();
  if (std::abs(trace - 1.0) > kTraceTol)
    throw std::invalid_argument("density matrix trace differs from 1");
  DensityMatrix hermitian = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<DensityMatrix> solver(hermitian, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -kPositivityTol)
    throw std::invalid_argument("density matrix has a negative eigenvalue");
  return TwoPhotonState(std::move(hermitian));
}

TwoPhotonState TwoPhotonState::from_amplitudes(const Eigen::Vector4cd& psi) {
  const double norm = psi.norm();
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw std::invalid_argument("state vector must be finite and non-zero");
  const Eigen::Vector4cd unit = psi / norm;
  return from_density_matrix(unit * unit.adjoint());
}

double TwoPhotonState::purity() const { return (rho_ * rho_).trace().real(); }

double TwoPhotonState::overlap(const Eigen::Vector4cd& psi) const {
  const Eigen::Vector4cd unit = psi.normalized();
  return (unit.adjoint() * rho_ * unit)(0, 0).real();
}

double TwoPhotonState::distance(const TwoPhotonState& other) const {
  return (rho_ - other.rho_).cwiseAbs().maxCoeff();
}

TwoPhotonState make_state(double phase_phi, double amplitude_ratio, double coherence_gamma,
                          StateFamily family) {
  if (!std::isfinite(phase_phi)) throw std::invalid_argument("phase must be finite");
  if (!(amplitude_ratio >= 0.0) || !std::isfinite(amplitude_ratio))
    throw std::invalid_argument("amplitude ratio must be finite and >= 0");
  if (!(coherence_gamma >= 0.0 && coherence_gamma <= 1.0))
    throw std::invalid_argument("coherence must lie in [0, 1]");

  const int a = family == StateFamily::kParallel ? kHH : kHV;
  const int b = family == StateFamily::kParallel ? kVV : kVH;
  const double norm = 1.0 + amplitude_ratio * amplitude_ratio;

  DensityMatrix rho = DensityMatrix::Zero();
  rho(a, a) = 1.0 / norm;
  rho(b, b) = amplitude_ratio * amplitude_ratio / norm;
  // rho = |psi><psi| with psi_b = r e^{i phi} psi_a, so rho(b, a) carries +phi.
  const Complex coherence = std::polar(coherence_gamma * amplitude_ratio / norm, phase_phi);
  rho(b, a) = coherence;
  rho(a, b) = std::conj(coherence);
  return TwoPhotonState::from_density_matrix(rho);
}

Eigen::Vector4cd bell_vector(BellState which) {
  Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
  const double s = 1.0 / std::sqrt(2.0);
  switch (which) {
    case BellState::kPsiPlus: psi(kHH) = s; psi(kVV) = s; break;
    case BellState::kPsiMinus: psi(kHH) = s; psi(kVV) = -s; break;
    case BellState::kPhiPlus: psi(kHV) = s; psi(kVH) = s; break;
    case BellState::kPhiMinus: psi(kHV) = s; psi(kVH) = -s; break;
  }
  return psi;
}

TwoPhotonState bell_state(BellState which) {
  return TwoPhotonState::from_amplitudes(bell_vector(which));
}

TwoPhotonState apply_waveplate(const TwoPhotonState& state, const WaveplateElement& plate,
                               Channel channel) {
  const JonesMatrix u = plate.jones();
  const DensityMatrix full =
      channel == Channel::kSignal ? kron(u, identity2()) : kron(identity2(), u);
  return TwoPhotonState::from_density_matrix(full * state.density() * full.adjoint());
}

double projection_probability(const TwoPhotonState& state, const AnalyzerSetting& signal_setting,
                              const AnalyzerSetting& idler_setting) {
  if (signal_setting.channel != Channel::kSignal || idler_setting.channel != Channel::kIdler)
    throw std::invalid_argument("projection needs one signal and one idler analyzer");
  const JonesMatrix ps = linear_projector(signal_setting.theta_rad()).cast<Complex>();
  const JonesMatrix pi = linear_projector(idler_setting.theta_rad()).cast<Complex>();
  return (state.density() * kron(ps, pi)).trace().real();
}

double marginal_probability(const TwoPhotonState& state, const AnalyzerSetting& setting) {
  const JonesMatrix p = linear_projector(setting.theta_rad()).cast<Complex>();
  const DensityMatrix op = setting.channel == Channel::kSignal ? kron(p, identity2())
                                                                : kron(identity2(), p);
  return (state.density() * op).trace().real();
}

bool equal_up_to_global_phase(const JonesMatrix& a, const JonesMatrix& b, double tol) {
  // Align on the largest entry of a, then compare.
  Eigen::Index r = 0, c = 0;
  a.cwiseAbs().maxCoeff(&r, &c);
  if (std::abs(b(r, c)) < tol) return a.cwiseAbs().maxCoeff() < tol;
  const Complex phase = a(r, c) / b(r, c);
  if (std::abs(std::abs(phase) - 1.0) > tol) return false;
  return (a - phase * b).cwiseAbs().maxCoeff() < tol;
}

}  // namespace fiberbell
