// Independent reference formulas shared by the tests.

#pragma once

#include "fiberbell/detection.hpp"

#include <cmath>

namespace oracle {

// Tr(rho P1 x P2) with plain loops; u(t) = (sin t, cos t) in the (H, V) basis.
inline double projection(const fiberbell::DensityMatrix& rho, double t1, double t2) {
  const double u1[2] = {std::sin(t1), std::cos(t1)};
  const double u2[2] = {std::sin(t2), std::cos(t2)};
  double w[4];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) w[2 * a + b] = u1[a] * u2[b];
  std::complex<double> sum = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) sum += w[i] * rho(i, j) * w[j];
  return sum.real();
}

struct GateProbabilities {
  double signal = 0.0;
  double idler = 0.0;
  double coincidence = 0.0;
  double delayed = 0.0;  // signal click in one gate, idler click in the next
};

// Exact per-gate click probabilities for Poisson or thermal pair numbers,
// Poisson backgrounds thinned by alpha/2, and independent dark counts.
inline GateProbabilities gate_probabilities(const fiberbell::SourceParams& src,
                                            const fiberbell::DetectorParams& det, double t1_deg,
                                            double t2_deg) {
  using namespace fiberbell;
  const DensityMatrix rho = state_from_pump(src).density();
  const double t1 = t1_deg * kPi / 180.0, t2 = t2_deg * kPi / 180.0;
  const double both = projection(rho, t1, t2);
  const double ps = both + projection(rho, t1, t2 + kPi / 2);
  const double pi = both + projection(rho, t1 + kPi / 2, t2);
  const double q11 = det.alpha_signal * det.alpha_idler * both;
  const double q10 = det.alpha_signal * ps - q11;
  const double q01 = det.alpha_idler * pi - q11;

  auto no_pair_click = [&](double q) {
    if (src.statistics == PairStatistics::kPoisson) return std::exp(-src.mu_pair * q);
    return 1.0 / (1.0 + src.mu_pair * q);
  };
  const double noise_s = std::exp(-src.bg_signal * det.alpha_signal / 2) * (1 - det.dark_signal);
  const double noise_i = std::exp(-src.bg_idler * det.alpha_idler / 2) * (1 - det.dark_idler);
  const double a = no_pair_click(q11 + q10) * noise_s;
  const double b = no_pair_click(q11 + q01) * noise_i;
  const double none = no_pair_click(q11 + q10 + q01) * noise_s * noise_i;

  GateProbabilities g;
  g.signal = 1 - a;
  g.idler = 1 - b;
  g.coincidence = 1 - a - b + none;
  g.delayed = (1 - a) * (1 - b);
  return g;
}

// |observed - n p| within k binomial standard deviations.
inline bool within_sigma(double observed, double n, double p, double k) {
  const double sigma = std::sqrt(n * p * (1 - p));
  return std::abs(observed - n * p) <= k * std::max(sigma, 1.0);
}

}  // namespace oracle
