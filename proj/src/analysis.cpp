// analysis.cpp

#include "fiberbell/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace fiberbell {

namespace {

// counts = c0 + c1 cos(kx) + c2 sin(kx); linear in c for fixed k.
struct LinearSolution {
  Eigen::Vector3d coeffs;
  Eigen::Matrix3d covariance;
  double chi2 = 0.0;
};

std::optional<LinearSolution> solve_linear(std::span<const FringePoint> points, double k) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const FringePoint& p = points[static_cast<std::size_t>(i)];
    const double w = 1.0 / p.uncertainty;
    design(i, 0) = w;
    design(i, 1) = w * std::cos(k * p.x);
    design(i, 2) = w * std::sin(k * p.x);
    target(i) = w * p.counts;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) return std::nullopt;
  LinearSolution sol;
  sol.coeffs = qr.solve(target);
  sol.covariance = (design.transpose() * design).inverse();
  sol.chi2 = (design * sol.coeffs - target).squaredNorm();
  return sol;
}

double model_value(const Eigen::Vector4d& p, double x) {
  return p(0) + p(1) * std::cos(p(3) * x) + p(2) * std::sin(p(3) * x);
}

double weighted_chi2(std::span<const FringePoint> points, const Eigen::Vector4d& p) {
  double chi2 = 0.0;
  for (const FringePoint& pt : points) {
    const double r = (pt.counts - model_value(p, pt.x)) / pt.uncertainty;
    chi2 += r * r;
  }
  return chi2;
}

struct NonlinearSolution {
  Eigen::Vector4d params;
  Eigen::Matrix4d covariance;
  double chi2 = 0.0;
  int iterations = 0;
};

// Levenberg-Marquardt over (c0, c1, c2, k).
NonlinearSolution refine_frequency(std::span<const FringePoint> points, Eigen::Vector4d params,
                                   int max_iterations) {
  const auto n = static_cast<Eigen::Index>(points.size());
  auto jacobian = [&](const Eigen::Vector4d& p, Eigen::MatrixXd& jac, Eigen::VectorXd& res) {
    jac.resize(n, 4);
    res.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const FringePoint& pt = points[static_cast<std::size_t>(i)];
      const double w = 1.0 / pt.uncertainty;
      const double c = std::cos(p(3) * pt.x), s = std::sin(p(3) * pt.x);
      jac(i, 0) = w;
      jac(i, 1) = w * c;
      jac(i, 2) = w * s;
      jac(i, 3) = w * pt.x * (-p(1) * s + p(2) * c);
      res(i) = w * (pt.counts - model_value(p, pt.x));
    }
  };

  double lambda = 1e-3;
  double chi2 = weighted_chi2(points, params);
  Eigen::MatrixXd jac;
  Eigen::VectorXd res;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    jacobian(params, jac, res);
    const Eigen::Matrix4d normal = jac.transpose() * jac;
    const Eigen::Vector4d gradient = jac.transpose() * res;
    bool accepted = false;
    while (lambda < 1e12) {
      Eigen::Matrix4d damped = normal;
      damped.diagonal() *= 1.0 + lambda;
      const Eigen::Vector4d step = damped.ldlt().solve(gradient);
      const Eigen::Vector4d trial = params + step;
      const double trial_chi2 = weighted_chi2(points, trial);
      if (std::isfinite(trial_chi2) && trial_chi2 <= chi2) {
        const double drop = chi2 - trial_chi2;
        params = trial;
        chi2 = trial_chi2;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (drop <= 1e-12 * (1.0 + chi2)) {
          jacobian(params, jac, res);
          return {params, (jac.transpose() * jac).inverse(), chi2, iter};
        }
        break;
      }
      lambda *= 10.0;
    }
    // No downhill step at any damping: already at the minimum.
    if (!accepted) return {params, normal.inverse(), chi2, iter};
  }
  throw FitError("fringe fit did not converge within " + std::to_string(max_iterations) +
                 " iterations");
}

void check_points(std::span<const FringePoint> points, double k) {
  if (points.size() < 5) throw FitError("fringe fit needs at least 5 points");
  if (!(k > 0.0) || !std::isfinite(k)) throw FitError("fringe frequency must be positive");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const FringePoint& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.counts))
      throw FitError("fringe points must be finite");
    if (!(p.uncertainty > 0.0) || !std::isfinite(p.uncertainty))
      throw FitError("fringe point uncertainties must be positive");
    lo = std::min(lo, p.x);
    hi = std::max(hi, p.x);
  }
  // A uniform grid of n samples covering one period spans (n-1)/n of it.
  const double n = static_cast<double>(points.size());
  const double coverage = (hi - lo) * n / (n - 1.0);
  if (coverage < (2.0 * kPi / k) * (1.0 - 1e-9))
    throw FitError("fringe scan spans less than one period");
}

FringeFit finish(std::span<const FringePoint> points, const Eigen::Vector3d& c,
                 const Eigen::Matrix3d& cov, double k) {
  if (!(c(0) > 0.0)) throw FitError("fitted fringe baseline is not positive");
  FringeFit fit;
  fit.frequency = k;
  fit.baseline = c(0);
  fit.amplitude = std::hypot(c(1), c(2));
  fit.visibility = fit.amplitude / fit.baseline;
  fit.phase_offset = fit.amplitude > 0.0 ? wrap_phase(std::atan2(-c(2), c(1))) : 0.0;
  fit.baseline_uncertainty = std::sqrt(cov(0, 0));

  const double a = fit.amplitude;
  if (a > 0.0) {
    Eigen::Vector3d grad_a(0.0, c(1) / a, c(2) / a);
    Eigen::Vector3d grad_phase(0.0, c(2) / (a * a), -c(1) / (a * a));
    Eigen::Vector3d grad_v(-a / (c(0) * c(0)), c(1) / (a * c(0)), c(2) / (a * c(0)));
    fit.amplitude_uncertainty = std::sqrt(grad_a.dot(cov * grad_a));
    fit.phase_uncertainty = std::sqrt(grad_phase.dot(cov * grad_phase));
    fit.visibility_uncertainty = std::sqrt(grad_v.dot(cov * grad_v));
  } else {
    fit.amplitude_uncertainty = std::sqrt(0.5 * (cov(1, 1) + cov(2, 2)));
    fit.phase_uncertainty = kPi;
    fit.visibility_uncertainty = fit.amplitude_uncertainty / c(0);
  }

  const Eigen::Vector4d p(c(0), c(1), c(2), k);
  fit.residuals.reserve(points.size());
  for (const FringePoint& pt : points) {
    const double r = (pt.counts - model_value(p, pt.x)) / pt.uncertainty;
    fit.residuals.push_back(r);
    fit.chi2 += r * r;
  }
  fit.converged = true;
  return fit;
}

struct Term {
  double signal_deg;
  double idler_deg;
};

std::array<Term, 4> chsh_terms(const ChshConvention& c) {
  return {{{c.a, c.b}, {c.a, c.b_prime}, {c.a_prime, c.b}, {c.a_prime, c.b_prime}}};
}

bool same_angle(double x_deg, double y_deg) {
  double d = std::fmod(std::abs(x_deg - y_deg), 180.0);
  return std::min(d, 180.0 - d) < 1e-9;
}

const CoincidenceTally& find_tally(std::span<const CoincidenceTally> tallies, double signal_deg,
                                   double idler_deg) {
  for (const CoincidenceTally& t : tallies)
    if (same_angle(t.setting.signal.theta_deg, signal_deg) &&
        same_angle(t.setting.idler.theta_deg, idler_deg))
      return t;
  throw std::invalid_argument("missing CHSH setting (" + std::to_string(signal_deg) + ", " +
                              std::to_string(idler_deg) + ") deg");
}

std::array<CoincidenceTally, 4> quartet(std::span<const CoincidenceTally> tallies, double t1,
                                        double t2) {
  return {find_tally(tallies, t1, t2), find_tally(tallies, t1, t2 + 90.0),
          find_tally(tallies, t1 + 90.0, t2), find_tally(tallies, t1 + 90.0, t2 + 90.0)};
}

}  // namespace

double wrap_phase(double radians) {
  double w = std::remainder(radians, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

double FringeFit::period() const { return 2.0 * kPi / frequency; }

double FringeFit::model(double x) const {
  return baseline + amplitude * std::cos(frequency * x + phase_offset);
}

FringeFit fit_fringe(std::span<const FringePoint> points, const FringeFitOptions& options) {
  check_points(points, options.frequency);
  if (options.max_iterations < 1) throw FitError("max_iterations must be >= 1");

  if (!options.free_frequency) {
    const auto sol = solve_linear(points, options.frequency);
    if (!sol) throw FitError("degenerate fringe scan: design matrix is rank deficient");
    FringeFit fit = finish(points, sol->coeffs, sol->covariance, options.frequency);
    fit.dof = static_cast<int>(points.size()) - 3;
    fit.iterations = 1;
    return fit;
  }

  // Profile the linear solution over a grid of k, then refine all four
  // parameters from the best grid point.
  constexpr int kGrid = 401;
  const double k0 = options.frequency;
  double best_chi2 = std::numeric_limits<double>::infinity();
  std::optional<Eigen::Vector4d> start;
  for (int j = 0; j < kGrid; ++j) {
    const double k = k0 * (1.0 + options.frequency_search * (2.0 * j / (kGrid - 1.0) - 1.0));
    if (!(k > 0.0)) continue;
    const auto sol = solve_linear(points, k);
    if (sol && sol->chi2 < best_chi2) {
      best_chi2 = sol->chi2;
      start = Eigen::Vector4d(sol->coeffs(0), sol->coeffs(1), sol->coeffs(2), k);
    }
  }
  if (!start) throw FitError("degenerate fringe scan: no usable frequency in search window");

  const NonlinearSolution sol = refine_frequency(points, *start, options.max_iterations);
  if (!sol.covariance.allFinite()) throw FitError("fringe fit covariance is singular");
  FringeFit fit = finish(points, sol.params.head<3>(), sol.covariance.topLeftCorner<3, 3>(),
                         sol.params(3));
  fit.frequency_uncertainty = std::sqrt(sol.covariance(3, 3));
  fit.dof = static_cast<int>(points.size()) - 4;
  fit.iterations = sol.iterations;
  return fit;
}

CoincidenceTally CoincidenceTally::from_record(const CountRecord& record) {
  return {record.setting, static_cast<double>(record.coincidences),
          static_cast<double>(record.accidentals_delayed)};
}

Correlation correlation(std::span<const CoincidenceTally, 4> t, bool corrected) {
  const double t1 = t[0].setting.signal.theta_deg;
  const double t2 = t[0].setting.idler.theta_deg;
  const bool layout_ok =
      same_angle(t[1].setting.signal.theta_deg, t1) && same_angle(t[1].setting.idler.theta_deg, t2 + 90.0) &&
      same_angle(t[2].setting.signal.theta_deg, t1 + 90.0) && same_angle(t[2].setting.idler.theta_deg, t2) &&
      same_angle(t[3].setting.signal.theta_deg, t1 + 90.0) &&
      same_angle(t[3].setting.idler.theta_deg, t2 + 90.0);
  if (!layout_ok)
    throw std::invalid_argument(
        "correlation needs settings (t1,t2), (t1,t2+90), (t1+90,t2), (t1+90,t2+90)");

  constexpr std::array<double, 4> sign{+1.0, -1.0, -1.0, +1.0};
  std::array<double, 4> value{}, variance{};
  double total = 0.0, numerator = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    value[i] = corrected ? t[i].coincidences - t[i].accidentals : t[i].coincidences;
    variance[i] = corrected ? t[i].coincidences + t[i].accidentals : t[i].coincidences;
    total += value[i];
    numerator += sign[i] * value[i];
  }
  if (!(total > 0.0)) throw std::invalid_argument("correlation of zero total coincidences");

  Correlation out;
  out.value = numerator / total;
  double var = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double d = (sign[i] - out.value) / total;
    var += d * d * variance[i];
  }
  out.uncertainty = std::sqrt(var);
  return out;
}

Correlation correlation(std::span<const CountRecord, 4> records, bool corrected) {
  std::array<CoincidenceTally, 4> t;
  for (std::size_t i = 0; i < 4; ++i) t[i] = CoincidenceTally::from_record(records[i]);
  return correlation(std::span<const CoincidenceTally, 4>(t), corrected);
}

ChshConvention chsh_convention_for(BellState target) {
  ChshConvention c;
  switch (target) {
    case BellState::kPsiPlus: c.signs = {+1, -1, +1, +1}; break;
    case BellState::kPsiMinus: c.signs = {-1, +1, +1, +1}; break;
    case BellState::kPhiPlus: c.signs = {+1, -1, -1, -1}; break;
    case BellState::kPhiMinus: c.signs = {-1, +1, -1, -1}; break;
  }
  return c;
}

std::vector<AnalyzerPair> chsh_settings(const ChshConvention& c) {
  std::vector<AnalyzerPair> out;
  for (double t1 : {c.a, c.a + 90.0, c.a_prime, c.a_prime + 90.0})
    for (double t2 : {c.b, c.b + 90.0, c.b_prime, c.b_prime + 90.0})
      out.push_back(AnalyzerPair::at(t1, t2));
  return out;
}

double chsh_value(const std::array<double, 4>& E, const std::array<int, 4>& signs) {
  double s = 0.0;
  for (std::size_t k = 0; k < 4; ++k) s += signs[k] * E[k];
  return s;
}

ChshResult chsh_S(std::span<const CoincidenceTally> tallies, const ChshConvention& convention,
                  bool corrected) {
  for (int s : convention.signs)
    if (s != 1 && s != -1) throw std::invalid_argument("CHSH signs must be +1 or -1");

  ChshResult result;
  result.convention = convention;
  result.corrected = corrected;
  const auto terms = chsh_terms(convention);
  double var = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto q = quartet(tallies, terms[k].signal_deg, terms[k].idler_deg);
    const Correlation e = correlation(std::span<const CoincidenceTally, 4>(q), corrected);
    result.E[k] = e.value;
    result.E_uncertainty[k] = e.uncertainty;
    var += e.uncertainty * e.uncertainty;
  }
  result.S = chsh_value(result.E, convention.signs);
  result.sigma_S = std::sqrt(var);
  result.n_sigma_violation = violation_significance(result.S, result.sigma_S);

  for (const AnalyzerPair& setting : chsh_settings(convention)) {
    const CoincidenceTally& t = find_tally(tallies, setting.signal.theta_deg, setting.idler.theta_deg);
    ChshSettingValue v;
    v.setting = setting;
    v.counts = corrected ? t.coincidences - t.accidentals : t.coincidences;
    v.uncertainty = std::sqrt(corrected ? t.coincidences + t.accidentals : t.coincidences);
    result.per_setting.push_back(v);
  }
  return result;
}

ChshResult chsh_S(std::span<const CountRecord> records, const ChshConvention& convention,
                  bool corrected) {
  std::vector<CoincidenceTally> tallies;
  tallies.reserve(records.size());
  for (const CountRecord& r : records) tallies.push_back(CoincidenceTally::from_record(r));
  return chsh_S(std::span<const CoincidenceTally>(tallies), convention, corrected);
}

double violation_significance(double S, double sigma_S) {
  if (!(sigma_S > 0.0)) throw std::invalid_argument("sigma_S must be positive");
  return (std::abs(S) - 2.0) / sigma_S;
}

double violation_significance(const ChshResult& result) {
  return violation_significance(result.S, result.sigma_S);
}

}  // namespace fiberbell
