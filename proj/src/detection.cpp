// detection.cpp

#include "fiberbell/detection.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fiberbell {

namespace {

bool unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("detector.") + field + ": " + what);
}

StateFamily family_of(const SourceParams& source) {
  return source.idler_hwp ? StateFamily::kPerpendicular : StateFamily::kParallel;
}

// Everything the per-gate loop needs, precomputed once per setting.
struct GateModel {
  explicit GateModel(const SourceParams& source, const DetectorParams& det,
                     const AnalyzerPair& settings)
      : emitter(source) {
    const TwoPhotonState& state = emitter.pair_state();
    const double both = projection_probability(state, settings.signal, settings.idler);
    const double pass_s = marginal_probability(state, settings.signal);
    const double pass_i = marginal_probability(state, settings.idler);
    // Analyzer outcome and detection folded into one draw per pair:
    // P(det_s, det_i), P(det_s only), P(det_i only).
    const double d11 = det.alpha_signal * det.alpha_idler * both;
    const double d10 = det.alpha_signal * pass_s - d11;
    const double d01 = det.alpha_idler * pass_i - d11;
    cum11 = d11;
    cum10 = cum11 + std::max(d10, 0.0);
    cum01 = cum10 + std::max(d01, 0.0);
    // Background photons are unpolarized: analyzer passes half of them.
    bg_detect_signal = 0.5 * det.alpha_signal;
    bg_detect_idler = 0.5 * det.alpha_idler;
    dark_signal = det.dark_signal;
    dark_idler = det.dark_idler;

    // Poisson pairs and backgrounds thin into independent Poisson counts per
    // outcome class, so a gate reduces to five independent Bernoulli events:
    // pair hits both, pair hits signal only, pair hits idler only, noise
    // click on signal, noise click on idler. Same distribution as the
    // photon-by-photon path, far fewer draws.
    poisson = source.statistics == PairStatistics::kPoisson;
    const double mu = source.mu_pair;
    event_p = {-std::expm1(-mu * d11), -std::expm1(-mu * std::max(d10, 0.0)),
               -std::expm1(-mu * std::max(d01, 0.0)),
               1.0 - std::exp(-source.bg_signal * bg_detect_signal) * (1.0 - dark_signal),
               1.0 - std::exp(-source.bg_idler * bg_detect_idler) * (1.0 - dark_idler)};
    double none_from_k = 1.0;
    for (std::size_t k = event_p.size(); k-- > 0;) {
      none_from_k *= 1.0 - event_p[k];
      const double any = 1.0 - none_from_k;
      // P(event k | at least one of k.. fires)
      event_given_any[k] = any > 0.0 ? event_p[k] / any : 0.0;
    }
    p_none = none_from_k;
  }

  PulseEmitter emitter;
  double cum11 = 0.0, cum10 = 0.0, cum01 = 0.0;
  double bg_detect_signal = 0.0, bg_detect_idler = 0.0;
  double dark_signal = 0.0, dark_idler = 0.0;

  bool poisson = true;
  std::array<double, 5> event_p{};
  std::array<double, 5> event_given_any{};
  double p_none = 1.0;
};

struct ShardTally {
  std::uint64_t gates = 0;
  std::uint64_t singles_signal = 0;
  std::uint64_t singles_idler = 0;
  std::uint64_t coincidences = 0;
  std::uint64_t accidentals_internal = 0;  // delayed pairs inside the shard
  bool first_idler_click = false;
  bool last_signal_click = false;
};

ShardTally run_shard(GateModel& model, std::uint64_t gates, RandomStream& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  ShardTally tally;
  tally.gates = gates;
  bool prev_signal = false;

  for (std::uint64_t g = 0; g < gates; ++g) {
    bool click_s = false;
    bool click_i = false;

    if (model.poisson) {
      if (uniform(rng) >= model.p_none) {
        // At least one event fires: draw them in order, conditioning on
        // "some event from here on" until the first one fires.
        bool fired[5];
        bool pending = true;
        for (std::size_t k = 0; k < 5; ++k) {
          fired[k] = uniform(rng) < (pending ? model.event_given_any[k] : model.event_p[k]);
          if (fired[k]) pending = false;
        }
        click_s = fired[0] || fired[1] || fired[3];
        click_i = fired[0] || fired[2] || fired[4];
      }
    } else {
      const int pairs = model.emitter.draw_pairs(rng);
      for (int p = 0; p < pairs; ++p) {
        const double u = uniform(rng);
        if (u < model.cum11) {
          click_s = click_i = true;
        } else if (u < model.cum10) {
          click_s = true;
        } else if (u < model.cum01) {
          click_i = true;
        }
      }
      const int bg_s = model.emitter.draw_background_signal(rng);
      for (int k = 0; k < bg_s && !click_s; ++k) click_s = uniform(rng) < model.bg_detect_signal;
      const int bg_i = model.emitter.draw_background_idler(rng);
      for (int k = 0; k < bg_i && !click_i; ++k) click_i = uniform(rng) < model.bg_detect_idler;
      if (!click_s && model.dark_signal > 0.0) click_s = uniform(rng) < model.dark_signal;
      if (!click_i && model.dark_idler > 0.0) click_i = uniform(rng) < model.dark_idler;
    }

    tally.singles_signal += click_s;
    tally.singles_idler += click_i;
    tally.coincidences += click_s && click_i;
    if (g == 0) {
      tally.first_idler_click = click_i;
    } else {
      tally.accidentals_internal += prev_signal && click_i;
    }
    prev_signal = click_s;
  }
  tally.last_signal_click = prev_signal;
  return tally;
}

// Joins shards in order; the last shard wraps onto the first.
CountRecord merge_shards(const std::vector<ShardTally>& shards, const AnalyzerPair& settings,
                         double gate_rate) {
  CountRecord record;
  record.setting = settings;
  std::vector<const ShardTally*> active;
  for (const ShardTally& s : shards)
    if (s.gates > 0) active.push_back(&s);
  for (std::size_t k = 0; k < active.size(); ++k) {
    const ShardTally& s = *active[k];
    const ShardTally& next = *active[(k + 1) % active.size()];
    record.gates += s.gates;
    record.singles_signal += s.singles_signal;
    record.singles_idler += s.singles_idler;
    record.coincidences += s.coincidences;
    record.accidentals_delayed += s.accidentals_internal + (s.last_signal_click && next.first_idler_click);
  }
  record.duration = static_cast<double>(record.gates) / gate_rate;
  return record;
}

void check_settings(const AnalyzerPair& settings) {
  if (settings.signal.channel != Channel::kSignal || settings.idler.channel != Channel::kIdler)
    throw std::invalid_argument("acquisition needs one signal and one idler analyzer");
  if (!std::isfinite(settings.signal.theta_deg) || !std::isfinite(settings.idler.theta_deg))
    throw std::invalid_argument("analyzer angles must be finite");
}

template <typename T>
T parse_field(std::string_view text, const char* name) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument(std::string("bad value for ") + name + ": '" + std::string(text) + "'");
  return value;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace

void validate(const DetectorParams& det) {
  require(unit_interval(det.alpha_signal), "alpha_signal", "must lie in [0, 1]");
  require(unit_interval(det.alpha_idler), "alpha_idler", "must lie in [0, 1]");
  require(unit_interval(det.dark_signal), "dark_signal", "must lie in [0, 1]");
  require(unit_interval(det.dark_idler), "dark_idler", "must lie in [0, 1]");
  require(det.gate_rate > 0.0 && std::isfinite(det.gate_rate), "gate_rate", "must be > 0");
  require(det.gate_duration >= 0.0 && std::isfinite(det.gate_duration), "gate_duration",
          "must be >= 0");
  require(det.pulses_per_gate >= 1, "pulses_per_gate", "must be >= 1");
}

CountRecord& CountRecord::operator+=(const CountRecord& other) {
  if (!(setting == other.setting)) throw std::invalid_argument("cannot add records of different settings");
  gates += other.gates;
  singles_signal += other.singles_signal;
  singles_idler += other.singles_idler;
  coincidences += other.coincidences;
  accidentals_delayed += other.accidentals_delayed;
  duration += other.duration;
  return *this;
}

void check_invariants(const CountRecord& r, double gate_rate) {
  if (r.coincidences > std::min(r.singles_signal, r.singles_idler))
    throw std::logic_error("coincidences exceed singles");
  if (r.singles_signal > r.gates || r.singles_idler > r.gates || r.accidentals_delayed > r.gates)
    throw std::logic_error("tally exceeds gate count");
  const double expected = static_cast<double>(r.gates) / gate_rate;
  if (std::abs(r.duration - expected) > 1e-9 * std::max(1.0, expected))
    throw std::logic_error("duration inconsistent with gate count");
}

CountRecord run_acquisition(const SourceParams& source, const DetectorParams& det,
                            const AnalyzerPair& settings, std::uint64_t gates, RandomStream& rng) {
  if (gates == 0) throw std::invalid_argument("acquisition needs at least one gate");
  validate(source);
  validate(det);
  check_settings(settings);
  GateModel model(source, det, settings);
  const std::vector<ShardTally> shards{run_shard(model, gates, rng)};
  return merge_shards(shards, settings, det.gate_rate);
}

CountRecord run_acquisition_sharded(const SourceParams& source, const DetectorParams& det,
                                    const AnalyzerPair& settings, std::uint64_t gates,
                                    std::uint64_t seed, std::uint64_t setting_index,
                                    unsigned workers) {
  if (gates == 0) throw std::invalid_argument("acquisition needs at least one gate");
  if (workers == 0) throw std::invalid_argument("workers must be >= 1");
  validate(source);
  validate(det);
  check_settings(settings);

  std::vector<ShardTally> shards(workers);
  auto work = [&](unsigned w) {
    const std::uint64_t begin = gates * w / workers;
    const std::uint64_t end = gates * (w + 1) / workers;
    GateModel model(source, det, settings);
    RandomStream rng = make_stream(seed, w, setting_index);
    shards[w] = run_shard(model, end - begin, rng);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work, w);
  }
  return merge_shards(shards, settings, det.gate_rate);
}

double coincidence_bracket(StateFamily family, double phase_phi, double r, double gamma,
                           double theta_signal_rad, double theta_idler_rad) {
  const double s1 = std::sin(theta_signal_rad), c1 = std::cos(theta_signal_rad);
  const double s2 = std::sin(theta_idler_rad), c2 = std::cos(theta_idler_rad);
  const double interference = 2.0 * gamma * r * std::cos(phase_phi) * s1 * c1 * s2 * c2;
  const double norm = 1.0 + r * r;
  if (family == StateFamily::kParallel)
    return (s1 * s1 * s2 * s2 + r * r * c1 * c1 * c2 * c2 + interference) / norm;
  return (s1 * s1 * c2 * c2 + r * r * c1 * c1 * s2 * s2 + interference) / norm;
}

double marginal_bracket(StateFamily family, double r, Channel channel, double theta_rad) {
  const double s = std::sin(theta_rad), c = std::cos(theta_rad);
  const double norm = 1.0 + r * r;
  // The first amplitude carries H on the signal side in both families; the
  // idler is H in HH and V in HV.
  const bool idler_first_is_h = family == StateFamily::kParallel;
  if (channel == Channel::kSignal || idler_first_is_h) return (s * s + r * r * c * c) / norm;
  return (c * c + r * r * s * s) / norm;
}

ExpectedRates expected_rates(const SourceParams& source, const DetectorParams& det,
                             const AnalyzerPair& settings) {
  validate(source);
  validate(det);
  check_settings(settings);
  const StateFamily family = family_of(source);
  const double phi = 2.0 * source.pump_phase;
  const double r = source.pump_power_ratio;

  const double pass_s = marginal_bracket(family, r, Channel::kSignal, settings.signal.theta_rad());
  const double pass_i = marginal_bracket(family, r, Channel::kIdler, settings.idler.theta_rad());
  const double both = coincidence_bracket(family, phi, r, source.coherence_gamma,
                                          settings.signal.theta_rad(), settings.idler.theta_rad());
  ExpectedRates out;
  out.singles_signal =
      det.alpha_signal * (source.mu_pair * pass_s + 0.5 * source.bg_signal) + det.dark_signal;
  out.singles_idler =
      det.alpha_idler * (source.mu_pair * pass_i + 0.5 * source.bg_idler) + det.dark_idler;
  out.coincidence = det.alpha_signal * det.alpha_idler * source.mu_pair * both;
  out.accidental = out.singles_signal * out.singles_idler;
  return out;
}

CorrectedCoincidences subtract_accidentals(const CountRecord& record) {
  const double c = static_cast<double>(record.coincidences);
  const double a = static_cast<double>(record.accidentals_delayed);
  CorrectedCoincidences out;
  out.value = c - a;
  out.uncertainty = std::sqrt(c + a);
  out.negative = out.value < 0.0;
  return out;
}

std::string_view count_record_csv_header() {
  return "theta_signal_deg,theta_idler_deg,gates,singles_signal,singles_idler,coincidences,"
         "accidentals_delayed,duration_s";
}

std::string to_csv_row(const CountRecord& r) {
  std::string row;
  row += format_double(r.setting.signal.theta_deg) + ',';
  row += format_double(r.setting.idler.theta_deg) + ',';
  row += std::to_string(r.gates) + ',';
  row += std::to_string(r.singles_signal) + ',';
  row += std::to_string(r.singles_idler) + ',';
  row += std::to_string(r.coincidences) + ',';
  row += std::to_string(r.accidentals_delayed) + ',';
  row += format_double(r.duration);
  return row;
}

CountRecord parse_count_record_row(std::string_view row) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = row.find(',', start);
    fields.push_back(row.substr(start, comma == std::string_view::npos ? row.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (fields.size() != 8)
    throw std::invalid_argument("count record row needs 8 fields, got " + std::to_string(fields.size()));
  CountRecord r;
  r.setting = AnalyzerPair::at(parse_field<double>(fields[0], "theta_signal_deg"),
                               parse_field<double>(fields[1], "theta_idler_deg"));
  r.gates = parse_field<std::uint64_t>(fields[2], "gates");
  r.singles_signal = parse_field<std::uint64_t>(fields[3], "singles_signal");
  r.singles_idler = parse_field<std::uint64_t>(fields[4], "singles_idler");
  r.coincidences = parse_field<std::uint64_t>(fields[5], "coincidences");
  r.accidentals_delayed = parse_field<std::uint64_t>(fields[6], "accidentals_delayed");
  r.duration = parse_field<double>(fields[7], "duration_s");
  return r;
}

}  // namespace fiberbell
