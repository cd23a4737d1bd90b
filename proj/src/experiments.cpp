// experiments.cpp

#include "fiberbell/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

namespace fiberbell {

namespace {

std::string fmt(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::vector<double> scan_grid(const ScanConfig& scan) {
  std::vector<double> x(static_cast<std::size_t>(scan.points));
  const double step = (scan.stop - scan.start) / scan.points;
  for (int i = 0; i < scan.points; ++i) x[static_cast<std::size_t>(i)] = scan.start + i * step;
  return x;
}

FringeFit fit_or_throw(const std::vector<FringePoint>& points, double k, bool free_k,
                       const char* what) {
  FringeFitOptions opt;
  opt.frequency = k;
  opt.free_frequency = free_k;
  try {
    return fit_fringe(points, opt);
  } catch (const FitError& e) {
    throw ExperimentError(std::string(what) + " fit failed: " + e.what());
  }
}

double accidental_fraction(const std::vector<CountRecord>& records) {
  double c = 0.0, a = 0.0;
  for (const CountRecord& r : records) {
    c += static_cast<double>(r.coincidences);
    a += static_cast<double>(r.accidentals_delayed);
  }
  return c > 0.0 ? a / c : 0.0;
}

double relative_spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return mean > 0.0 ? (*hi - *lo) / mean : 0.0;
}

void add_fit(std::vector<std::pair<std::string, std::string>>& out, const std::string& prefix,
             const FringeFit& f) {
  out.emplace_back(prefix + ".visibility", fmt(f.visibility));
  out.emplace_back(prefix + ".visibility_uncertainty", fmt(f.visibility_uncertainty));
  out.emplace_back(prefix + ".baseline", fmt(f.baseline));
  out.emplace_back(prefix + ".phase_offset_rad", fmt(f.phase_offset));
  out.emplace_back(prefix + ".phase_uncertainty_rad", fmt(f.phase_uncertainty));
  out.emplace_back(prefix + ".frequency", fmt(f.frequency));
  out.emplace_back(prefix + ".frequency_uncertainty", fmt(f.frequency_uncertainty));
  out.emplace_back(prefix + ".chi2_per_dof", fmt(f.dof > 0 ? f.chi2 / f.dof : 0.0));
}

Table count_table(const std::vector<CountRecord>& records) {
  Table t{"counts", std::string(count_record_csv_header()), {}};
  for (const CountRecord& r : records) t.rows.push_back(to_csv_row(r));
  return t;
}

Table trace_table(const std::string& name, const std::vector<LoopTraceRow>& trace) {
  Table t{name, std::string(loop_trace_csv_header()), {}};
  t.rows.reserve(trace.size());
  for (const LoopTraceRow& row : trace) t.rows.push_back(to_csv_row(row));
  return t;
}

void add_phase_scan(ExperimentOutput& out, const PhaseScanResult& r, bool corrected) {
  out.records = r.records;
  out.tables.push_back(count_table(r.records));
  Table scan{"scan", "index,phi_ref_rad,reference_current,corrected,corrected_uncertainty", {}};
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const FringePoint p = fringe_point(r.phi_ref[i], r.records[i], true);
    scan.rows.push_back(std::to_string(i) + ',' + fmt(r.phi_ref[i]) + ',' + fmt(r.reference[i]) +
                        ',' + fmt(p.counts) + ',' + fmt(p.uncertainty));
  }
  out.tables.push_back(std::move(scan));
  out.summary.emplace_back("analysis", corrected ? "corrected" : "raw");
  out.summary.emplace_back("visibility",
                           fmt(corrected ? r.corrected.visibility : r.raw.visibility));
  out.summary.emplace_back("visibility_uncertainty", fmt(corrected ? r.corrected.visibility_uncertainty
                                                                   : r.raw.visibility_uncertainty));
  add_fit(out.summary, "fit.corrected", r.corrected);
  add_fit(out.summary, "fit.raw", r.raw);
  add_fit(out.summary, "fit.corrected_free", r.corrected_free);
  add_fit(out.summary, "fit.reference", r.reference_fit);
  add_fit(out.summary, "fit.reference_free", r.reference_free);
  out.summary.emplace_back("period_ratio", fmt(r.period_ratio));
  out.summary.emplace_back("accidental_fraction", fmt(r.accidental_fraction));
}

}  // namespace

FringePoint fringe_point(double x, const CountRecord& record, bool corrected) {
  const double c = static_cast<double>(record.coincidences);
  const double a = static_cast<double>(record.accidentals_delayed);
  if (corrected) return {x, c - a, std::sqrt(std::max(c + a, 1.0))};
  return {x, c, std::sqrt(std::max(c, 1.0))};
}

PhaseScanResult run_phase_scan(const ExperimentConfig& config) {
  PhaseScanResult r;
  r.phi_ref = scan_grid(config.scan);
  const AnalyzerPair settings = AnalyzerPair::at(config.scan.signal_angle_deg, config.scan.idler_angle_deg);
  RandomStream noise_rng = make_stream(config.seed, 0, 0, StreamTag::kReferenceNoise);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<FringePoint> corrected, raw, reference;
  for (std::size_t i = 0; i < r.phi_ref.size(); ++i) {
    const double phi_ref = r.phi_ref[i];
    SourceParams source = config.source;
    source.pump_phase = phi_ref + config.loop.delta;
    CountRecord rec = run_acquisition_sharded(source, config.detector, settings,
                                              config.gates_per_point, config.seed, i, config.workers);
    double current = reference_current(phi_ref);
    if (config.loop.reference_noise > 0.0) current += config.loop.reference_noise * gauss(noise_rng);
    r.reference.push_back(current);
    corrected.push_back(fringe_point(phi_ref, rec, true));
    raw.push_back(fringe_point(phi_ref, rec, false));
    reference.push_back({phi_ref, current, std::max(config.loop.reference_noise, 1e-6)});
    r.records.push_back(rec);
  }

  r.corrected = fit_or_throw(corrected, 2.0, false, "two-photon (corrected)");
  r.raw = fit_or_throw(raw, 2.0, false, "two-photon (raw)");
  r.corrected_free = fit_or_throw(corrected, 2.0, true, "two-photon (free k)");
  r.reference_fit = fit_or_throw(reference, 1.0, false, "reference");
  r.reference_free = fit_or_throw(reference, 1.0, true, "reference (free k)");
  r.period_ratio = r.corrected_free.period() / r.reference_free.period();
  r.accidental_fraction = accidental_fraction(r.records);
  return r;
}

AnalyzerScanResult run_analyzer_scan(const ExperimentConfig& config) {
  AnalyzerScanResult r;
  const LockConfiguration lock = lock_bell_state(config.bell_state, config.loop.delta);
  SourceParams source = config.source;
  source.pump_phase = lock.pump_phase;
  source.idler_hwp = lock.idler_hwp;

  std::vector<FringePoint> corrected, raw;
  std::vector<double> singles_s, singles_i;
  const std::vector<double> grid = scan_grid(config.scan);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double theta = grid[i] * 180.0 / kPi;
    const CountRecord rec =
        run_acquisition_sharded(source, config.detector, AnalyzerPair::at(config.scan.signal_angle_deg, theta),
                                config.gates_per_point, config.seed, i, config.workers);
    r.idler_deg.push_back(theta);
    corrected.push_back(fringe_point(grid[i], rec, true));
    raw.push_back(fringe_point(grid[i], rec, false));
    singles_s.push_back(static_cast<double>(rec.singles_signal));
    singles_i.push_back(static_cast<double>(rec.singles_idler));
    r.records.push_back(rec);
  }
  r.corrected = fit_or_throw(corrected, 2.0, false, "analyzer (corrected)");
  r.raw = fit_or_throw(raw, 2.0, false, "analyzer (raw)");
  r.singles_variation = std::max(relative_spread(singles_s), relative_spread(singles_i));
  r.accidental_fraction = accidental_fraction(r.records);
  return r;
}

PumpScanResult run_pump_pol_scan(const ExperimentConfig& config) {
  std::vector<double> angles = scan_grid(config.scan);
  for (double& a : angles) a *= 180.0 / kPi;
  PumpScanResult r;
  r.points = pump_polarization_scan(config.source, angles, config.scan.grating_eff_h,
                                    config.scan.grating_eff_v);
  std::vector<double> singles, coinc;
  for (const PumpScanPoint& p : r.points) {
    singles.push_back(p.singles);
    coinc.push_back(p.coincidences);
  }
  r.singles_ripple = peak_to_peak_ripple(singles);
  r.coincidence_ripple = peak_to_peak_ripple(coinc);
  r.closed_form_ripple = singles_ripple_closed_form(config.scan.grating_eff_h, config.scan.grating_eff_v,
                                                    config.source.cross_pol_fraction);
  return r;
}

ChshRun run_chsh(const ExperimentConfig& config) {
  ChshRun run;
  run.lock = lock_bell_state(config.bell_state, config.loop.delta);
  const ChshConvention convention = chsh_convention_for(config.bell_state);
  const std::vector<AnalyzerPair> settings = chsh_settings(convention);

  SourceParams source = config.source;
  source.pump_phase = run.lock.pump_phase;
  source.idler_hwp = run.lock.idler_hwp;

  if (!config.loop.lock_during_acquisition) {
    for (std::size_t i = 0; i < settings.size(); ++i)
      run.records.push_back(run_acquisition_sharded(source, config.detector, settings[i],
                                                    config.gates_per_point, config.seed, i,
                                                    config.workers));
  } else {
    // Phase handoff: the loop advances one step per batch and the batch is
    // acquired at the pump phase the loop holds at that moment.
    RandomStream loop_rng = make_stream(config.seed, 0, 0, StreamTag::kPhaseLoop);
    PhaseLoopState state = PhaseLoopState::starting_at(run.lock.lock, config.loop.initial_offset,
                                                       config.loop.delta, config.loop.params, true);
    const std::uint64_t batch = config.loop.gates_per_step;
    for (std::size_t i = 0; i < settings.size(); ++i) {
      CountRecord total;
      total.setting = settings[i];
      std::uint64_t done = 0;
      for (std::uint64_t b = 0; done < config.gates_per_point; ++b) {
        state = step_loop(state, loop_rng);
        run.trace.push_back({state.step, state.phi_ref, state.error, state.pzt_position});
        const std::uint64_t n = std::min(batch, config.gates_per_point - done);
        source.pump_phase = state.pump_phase();
        total += run_acquisition_sharded(source, config.detector, settings[i], n, config.seed,
                                         (static_cast<std::uint64_t>(i) << 32) | b, config.workers);
        done += n;
      }
      run.records.push_back(total);
    }
  }
  try {
    run.result = chsh_S(std::span<const CountRecord>(run.records), convention, config.corrected);
  } catch (const std::invalid_argument& e) {
    throw ExperimentError(std::string("CHSH analysis failed: ") + e.what());
  }
  return run;
}

StabilizeResult run_stabilize(const ExperimentConfig& config) {
  StabilizeResult r;
  const LockConfiguration lock = lock_bell_state(config.bell_state, config.loop.delta);
  r.target = lock.lock.phase();
  double sum_locked = 0.0, sum_unlocked = 0.0;
  for (int t = 0; t < config.loop.ensemble; ++t) {
    const auto traj = static_cast<std::uint64_t>(t);
    for (bool locked : {true, false}) {
      RandomStream rng = make_stream(config.seed, traj, locked ? 0 : 1, StreamTag::kPhaseLoop);
      const PhaseLoopState start = PhaseLoopState::starting_at(
          lock.lock, config.loop.initial_offset, config.loop.delta, config.loop.params, locked);
      LoopRun run = run_loop(start, config.loop.steps, rng);
      const double sq = run.rms_deviation * run.rms_deviation;
      (locked ? sum_locked : sum_unlocked) += sq;
      if (t == 0) {
        if (locked) {
          r.final_error = std::abs(run.final_state.phi_ref - r.target);
          r.locked_first = std::move(run);
        } else {
          r.unlocked_first = std::move(run);
        }
      }
    }
  }
  r.locked_rms = std::sqrt(sum_locked / config.loop.ensemble);
  r.unlocked_rms = std::sqrt(sum_unlocked / config.loop.ensemble);
  return r;
}

CalibrationResult run_calibrate_delta(const ExperimentConfig& config) {
  CalibrationResult r;
  r.scan = run_phase_scan(config);
  try {
    r.delta = calibrate_delta(r.scan.corrected, r.scan.reference_fit);
  } catch (const std::invalid_argument& e) {
    throw ExperimentError(std::string("delta calibration failed: ") + e.what());
  }
  return r;
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
  ExperimentOutput out;
  out.summary.emplace_back("experiment", std::string(to_string(config.experiment)));
  switch (config.experiment) {
    case ExperimentKind::kFringePhaseScan:
      add_phase_scan(out, run_phase_scan(config), config.corrected);
      break;
    case ExperimentKind::kCalibrateDelta: {
      const CalibrationResult r = run_calibrate_delta(config);
      add_phase_scan(out, r.scan, config.corrected);
      out.summary.emplace_back("delta_injected_rad", fmt(config.loop.delta));
      out.summary.emplace_back("delta_estimate_rad", fmt(r.delta.value));
      out.summary.emplace_back("delta_uncertainty_rad", fmt(r.delta.uncertainty));
      break;
    }
    case ExperimentKind::kAnalyzerScan: {
      const AnalyzerScanResult r = run_analyzer_scan(config);
      out.records = r.records;
      out.tables.push_back(count_table(r.records));
      Table scan{"scan", "index,theta_idler_deg,corrected,corrected_uncertainty", {}};
      for (std::size_t i = 0; i < r.records.size(); ++i) {
        const FringePoint p = fringe_point(0.0, r.records[i], true);
        scan.rows.push_back(std::to_string(i) + ',' + fmt(r.idler_deg[i]) + ',' + fmt(p.counts) + ',' +
                            fmt(p.uncertainty));
      }
      out.tables.push_back(std::move(scan));
      out.summary.emplace_back("bell_state", std::string(to_string(config.bell_state)));
      out.summary.emplace_back("analysis", config.corrected ? "corrected" : "raw");
      const FringeFit& main = config.corrected ? r.corrected : r.raw;
      out.summary.emplace_back("visibility", fmt(main.visibility));
      out.summary.emplace_back("visibility_uncertainty", fmt(main.visibility_uncertainty));
      add_fit(out.summary, "fit.corrected", r.corrected);
      add_fit(out.summary, "fit.raw", r.raw);
      out.summary.emplace_back("singles_variation", fmt(r.singles_variation));
      out.summary.emplace_back("accidental_fraction", fmt(r.accidental_fraction));
      break;
    }
    case ExperimentKind::kPumpPolScan: {
      const PumpScanResult r = run_pump_pol_scan(config);
      Table t{"pump_scan", "hwp_angle_deg,pump_polarization_deg,scattering_rate,singles,coincidences", {}};
      for (const PumpScanPoint& p : r.points)
        t.rows.push_back(fmt(p.hwp_angle_deg) + ',' + fmt(p.pump_polarization_deg) + ',' +
                         fmt(p.scattering_rate) + ',' + fmt(p.singles) + ',' + fmt(p.coincidences));
      out.tables.push_back(std::move(t));
      out.summary.emplace_back("singles_ripple", fmt(r.singles_ripple));
      out.summary.emplace_back("coincidence_ripple", fmt(r.coincidence_ripple));
      out.summary.emplace_back("closed_form_ripple", fmt(r.closed_form_ripple));
      break;
    }
    case ExperimentKind::kChsh: {
      const ChshRun run = run_chsh(config);
      out.records = run.records;
      out.tables.push_back(count_table(run.records));
      const ChshResult& res = run.result;
      Table settings{"chsh_settings", "theta_signal_deg,theta_idler_deg,counts,uncertainty", {}};
      for (const ChshSettingValue& v : res.per_setting)
        settings.rows.push_back(fmt(v.setting.signal.theta_deg) + ',' + fmt(v.setting.idler.theta_deg) +
                                ',' + fmt(v.counts) + ',' + fmt(v.uncertainty));
      out.tables.push_back(std::move(settings));
      Table terms{"chsh_terms", "term,theta_signal_deg,theta_idler_deg,sign,E,E_uncertainty", {}};
      const ChshConvention& c = res.convention;
      const double sig[4] = {c.a, c.a, c.a_prime, c.a_prime};
      const double idl[4] = {c.b, c.b_prime, c.b, c.b_prime};
      for (std::size_t k = 0; k < 4; ++k)
        terms.rows.push_back(std::to_string(k) + ',' + fmt(sig[k]) + ',' + fmt(idl[k]) + ',' +
                             std::to_string(c.signs[k]) + ',' + fmt(res.E[k]) + ',' +
                             fmt(res.E_uncertainty[k]));
      out.tables.push_back(std::move(terms));
      if (!run.trace.empty()) out.tables.push_back(trace_table("loop_trace", run.trace));
      out.summary.emplace_back("bell_state", std::string(to_string(config.bell_state)));
      out.summary.emplace_back("analysis", res.corrected ? "corrected" : "raw");
      out.summary.emplace_back("S", fmt(res.S));
      out.summary.emplace_back("sigma_S", fmt(res.sigma_S));
      out.summary.emplace_back("n_sigma_violation", fmt(res.n_sigma_violation));
      out.summary.emplace_back("uncertainty_model", "poisson counting only");
      out.summary.emplace_back("pump_phase_rad", fmt(run.lock.pump_phase));
      out.summary.emplace_back("idler_hwp", run.lock.idler_hwp ? "true" : "false");
      out.summary.emplace_back("locked_during_acquisition", run.trace.empty() ? "false" : "true");
      break;
    }
    case ExperimentKind::kStabilize: {
      const StabilizeResult r = run_stabilize(config);
      out.tables.push_back(trace_table("loop_locked", r.locked_first.trace));
      out.tables.push_back(trace_table("loop_unlocked", r.unlocked_first.trace));
      out.summary.emplace_back("target_phi_ref_rad", fmt(r.target));
      out.summary.emplace_back("locked_rms_rad", fmt(r.locked_rms));
      out.summary.emplace_back("unlocked_rms_rad", fmt(r.unlocked_rms));
      out.summary.emplace_back("final_error_rad", fmt(r.final_error));
      out.summary.emplace_back("ensemble", std::to_string(config.loop.ensemble));
      break;
    }
  }
  return out;
}

}  // namespace fiberbell
