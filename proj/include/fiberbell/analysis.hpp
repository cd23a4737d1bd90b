// analysis.hpp
// Fringe fitting, polarization correlations and the CHSH combination.

#pragma once

#include "fiberbell/detection.hpp"

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fiberbell {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FringePoint {
  double x = 0.0;            // scan coordinate, radians
  double counts = 0.0;
  double uncertainty = 1.0;  // one standard deviation, > 0
};

struct FringeFitOptions {
  double frequency = 1.0;        // k in cos(k x + phase); initial guess when free
  bool free_frequency = false;
  double frequency_search = 0.25;  // relative half-width of the k search window
  int max_iterations = 200;
};

// counts = baseline * (1 + visibility * cos(k x + phase_offset))
struct FringeFit {
  double baseline = 0.0;
  double amplitude = 0.0;  // baseline * visibility
  double phase_offset = 0.0;  // (-pi, pi]
  double visibility = 0.0;
  double frequency = 1.0;
  double baseline_uncertainty = 0.0;
  double amplitude_uncertainty = 0.0;
  double phase_uncertainty = 0.0;
  double visibility_uncertainty = 0.0;
  double frequency_uncertainty = 0.0;  // 0 when k was fixed
  double chi2 = 0.0;
  int dof = 0;
  std::vector<double> residuals;  // (data - model) / uncertainty
  bool converged = false;
  int iterations = 0;

  double period() const;
  double model(double x) const;
};

// Weighted least squares. Needs >= 5 points covering at least one period of
// cos(k x). Throws FitError on degenerate input or non-convergence.
FringeFit fit_fringe(std::span<const FringePoint> points, const FringeFitOptions& options);

// Coincidence tally of one analyzer setting, as real numbers so exact
// probabilities can stand in for counts.
struct CoincidenceTally {
  AnalyzerPair setting;
  double coincidences = 0.0;
  double accidentals = 0.0;

  static CoincidenceTally from_record(const CountRecord& record);
};

struct Correlation {
  double value = 0.0;
  double uncertainty = 0.0;
};

// E = (C1 - C2 - C3 + C4) / (C1 + C2 + C3 + C4) over the records at
// (t1, t2), (t1, t2+90), (t1+90, t2), (t1+90, t2+90). With `corrected` the
// delayed-gate accidentals are subtracted first and Var(C - A) = C + A.
Correlation correlation(std::span<const CoincidenceTally, 4> tallies, bool corrected);
Correlation correlation(std::span<const CountRecord, 4> records, bool corrected);

// S = sum_k sign_k E(signal_k, idler_k) over the terms
//   E(a, b), E(a, b'), E(a', b), E(a', b').
// The frozen default is a = -45, a' = 0, b = -22.5, b' = 22.5 degrees with
// signs (+, -, +, +), i.e. S = E(a,b) - E(a,b') + E(a',b) + E(a',b'), which
// gives +2 sqrt 2 on |HH> + |VV>. The other Bell states use the same angles
// with the sign pattern returned by chsh_convention_for(); pairing a state
// with a different convention is the caller's choice.
struct ChshConvention {
  double a = -45.0, a_prime = 0.0;
  double b = -22.5, b_prime = 22.5;
  std::array<int, 4> signs{+1, -1, +1, +1};
};

ChshConvention chsh_convention_for(BellState target);

// The 16 analyzer settings {a, a+90, a', a'+90} x {b, b+90, b', b'+90}.
std::vector<AnalyzerPair> chsh_settings(const ChshConvention& convention);

struct ChshSettingValue {
  AnalyzerPair setting;
  double counts = 0.0;       // corrected when the analysis was corrected
  double uncertainty = 0.0;
};

struct ChshResult {
  std::array<double, 4> E{};
  std::array<double, 4> E_uncertainty{};
  double S = 0.0;
  double sigma_S = 0.0;
  double n_sigma_violation = 0.0;
  bool corrected = true;
  ChshConvention convention;
  std::vector<ChshSettingValue> per_setting;  // 16 entries, chsh_settings() order
};

// Throws std::invalid_argument when a setting of the grid is missing.
ChshResult chsh_S(std::span<const CoincidenceTally> tallies, const ChshConvention& convention,
                  bool corrected = true);
ChshResult chsh_S(std::span<const CountRecord> records, const ChshConvention& convention,
                  bool corrected = true);

// S recomputed from the stored correlations and signs.
double chsh_value(const std::array<double, 4>& E, const std::array<int, 4>& signs);

// (|S| - 2) / sigma_S; negative when there is no violation.
double violation_significance(double S, double sigma_S);
double violation_significance(const ChshResult& result);

// Wraps an angle to (-pi, pi].
double wrap_phase(double radians);

}  // namespace fiberbell
