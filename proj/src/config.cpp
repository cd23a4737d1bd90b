// config.cpp

#include "fiberbell/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace fiberbell {

namespace {

enum class Kind {
  kNumber,      // dimensionless, '%' allowed
  kRadians,     // native rad; deg allowed
  kDegrees,     // native deg; rad allowed
  kFrequency,   // native Hz
  kTime,        // native s
  kWavelength,  // native nm
  kCount,       // unsigned integer, scientific notation allowed if integral
  kInt,
  kBool,
  kText,
};

struct Value {
  double number = 0.0;
  std::string text;
};

struct FieldSpec {
  std::string section;  // "" for top level
  std::string key;
  Kind kind;
  std::function<void(ExperimentConfig&, const Value&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
  std::string doc;

  std::string name() const { return section.empty() ? key : section + "." + key; }
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string fmt(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string_view native_unit(Kind kind) {
  switch (kind) {
    case Kind::kRadians: return "rad";
    case Kind::kDegrees: return "deg";
    case Kind::kFrequency: return "Hz";
    case Kind::kTime: return "s";
    case Kind::kWavelength: return "nm";
    default: return "";
  }
}

double unit_scale(Kind kind, const std::string& unit, const std::string& field, int line) {
  if (unit.empty()) return 1.0;
  static const std::map<std::string, double> frequency{
      {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}};
  static const std::map<std::string, double> time{
      {"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}, {"ps", 1e-12}};
  static const std::map<std::string, double> wavelength{{"m", 1e9}, {"um", 1e3}, {"nm", 1.0}};
  const std::map<std::string, double>* table = nullptr;
  switch (kind) {
    case Kind::kNumber:
      if (unit == "%") return 0.01;
      break;
    case Kind::kRadians:
      if (unit == "rad") return 1.0;
      if (unit == "deg") return kPi / 180.0;
      break;
    case Kind::kDegrees:
      if (unit == "deg") return 1.0;
      if (unit == "rad") return 180.0 / kPi;
      break;
    case Kind::kFrequency: table = &frequency; break;
    case Kind::kTime: table = &time; break;
    case Kind::kWavelength: table = &wavelength; break;
    default: break;
  }
  if (table) {
    const auto it = table->find(unit);
    if (it != table->end()) return it->second;
  }
  throw ConfigError("unit '" + unit + "' not valid for " + field, field, line);
}

Value parse_value(const FieldSpec& spec, const std::string& raw, int line) {
  const std::string field = spec.name();
  if (raw.empty()) throw ConfigError(field + " has an empty value", field, line);
  Value v;
  v.text = raw;
  switch (spec.kind) {
    case Kind::kText: return v;
    case Kind::kBool: {
      std::string lower = raw;
      std::transform(lower.begin(), lower.end(), lower.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (lower == "true" || lower == "yes" || lower == "on" || lower == "1") v.number = 1.0;
      else if (lower == "false" || lower == "no" || lower == "off" || lower == "0") v.number = 0.0;
      else throw ConfigError(field + " expects true/false, got '" + raw + "'", field, line);
      return v;
    }
    default: break;
  }
  double number = 0.0;
  const char* begin = raw.data();
  const char* end = raw.data() + raw.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, number);
  if (ec != std::errc() || ptr == begin)
    throw ConfigError(field + " expects a number, got '" + raw + "'", field, line);
  const std::string unit = trim(std::string_view(ptr, static_cast<std::size_t>(end - ptr)));
  if (!std::isfinite(number)) throw ConfigError(field + " must be finite", field, line);

  if (spec.kind == Kind::kCount || spec.kind == Kind::kInt) {
    if (!unit.empty()) throw ConfigError(field + " takes no unit", field, line);
    if (number != std::floor(number))
      throw ConfigError(field + " must be an integer, got '" + raw + "'", field, line);
    if (spec.kind == Kind::kCount && number < 0.0)
      throw ConfigError(field + " must be >= 0", field, line);
    if (number > 1.8e19) throw ConfigError(field + " is too large", field, line);
    v.number = number;
    return v;
  }
  v.number = number * unit_scale(spec.kind, unit, field, line);
  return v;
}

std::uint64_t parse_seed(const std::string& raw, int line) {
  std::uint64_t seed = 0;
  const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), seed);
  if (ec != std::errc() || ptr != raw.data() + raw.size())
    throw ConfigError("seed must be an unsigned 64-bit integer, got '" + raw + "'", "seed", line);
  return seed;
}

#define FB_NUM(SEC, KEY, KIND, MEMBER, DOC)                                            \
  FieldSpec {                                                                          \
    SEC, KEY, KIND, [](ExperimentConfig& c, const Value& v) { c.MEMBER = v.number; }, \
        [](const ExperimentConfig& c) { return fmt(c.MEMBER); }, DOC                   \
  }

const std::vector<FieldSpec>& field_specs() {
  static const std::vector<FieldSpec> specs = [] {
    std::vector<FieldSpec> s;
    s.push_back({"", "experiment", Kind::kText,
                 [](ExperimentConfig& c, const Value& v) {
                   const auto kind = parse_experiment_kind(v.text);
                   if (!kind) throw ConfigError("experiment: unknown experiment '" + v.text + "'", "experiment");
                   c.experiment = *kind;
                 },
                 [](const ExperimentConfig& c) { return std::string(to_string(c.experiment)); },
                 "fringe-phase-scan | analyzer-scan | pump-pol-scan | chsh | stabilize | calibrate-delta"});
    s.push_back({"", "seed", Kind::kText,
                 [](ExperimentConfig& c, const Value& v) { c.seed = parse_seed(v.text, 0); },
                 [](const ExperimentConfig& c) { return std::to_string(c.seed); },
                 "mandatory unsigned 64-bit seed"});
    s.push_back({"", "workers", Kind::kInt,
                 [](ExperimentConfig& c, const Value& v) {
                   if (v.number < 1 || v.number > 1024) throw ConfigError("workers: must lie in [1, 1024]", "workers");
                   c.workers = static_cast<unsigned>(v.number);
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.workers); },
                 "acquisition threads; results depend on this count"});
    s.push_back({"", "gates_per_point", Kind::kCount,
                 [](ExperimentConfig& c, const Value& v) {
                   if (v.number < 1) throw ConfigError("gates_per_point: must be >= 1", "gates_per_point");
                   c.gates_per_point = static_cast<std::uint64_t>(v.number);
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.gates_per_point); },
                 "detector gates per scan point or analyzer setting"});
    s.push_back({"", "corrected", Kind::kBool,
                 [](ExperimentConfig& c, const Value& v) { c.corrected = v.number != 0.0; },
                 [](const ExperimentConfig& c) { return std::string(c.corrected ? "true" : "false"); },
                 "subtract delayed-gate accidentals in the analysis"});
    s.push_back({"", "bell_state", Kind::kText,
                 [](ExperimentConfig& c, const Value& v) {
                   try {
                     c.bell_state = parse_bell_state(v.text);
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(std::string("bell_state: ") + e.what(), "bell_state");
                   }
                 },
                 [](const ExperimentConfig& c) { return std::string(to_string(c.bell_state)); },
                 "psi+ (HH+VV) | psi- (HH-VV) | phi+ (HV+VH) | phi- (HV-VH)"});
    s.push_back({"", "output", Kind::kText,
                 [](ExperimentConfig& c, const Value& v) { c.output_path = v.text; },
                 [](const ExperimentConfig& c) { return c.output_path; }, "output directory"});

    s.push_back(FB_NUM("source", "mu_pair", Kind::kNumber, source.mu_pair, "mean pairs per pulse"));
    s.push_back(FB_NUM("source", "pump_phase", Kind::kRadians, source.pump_phase,
                       "phi_p (experiments that lock a Bell state override it)"));
    s.push_back(FB_NUM("source", "pump_power_ratio", Kind::kNumber, source.pump_power_ratio,
                       "second / first pump pulse"));
    s.push_back(FB_NUM("source", "coherence_gamma", Kind::kNumber, source.coherence_gamma,
                       "HH-VV coherence, equals the ideal fringe visibility"));
    s.push_back({"source", "accidental_to_true", Kind::kNumber,
                 [](ExperimentConfig& c, const Value& v) { c.accidental_to_true = v.number; },
                 [](const ExperimentConfig& c) { return fmt(c.accidental_to_true.value_or(0.0)); },
                 "derive equal backgrounds: accidental = ratio * alpha_s alpha_i mu / 2"});
    s.push_back({"source", "bg_signal", Kind::kNumber,
                 [](ExperimentConfig& c, const Value& v) { c.source.bg_signal = v.number; },
                 [](const ExperimentConfig& c) { return fmt(c.source.bg_signal); },
                 "background photons per pulse (fixed mode)"});
    s.push_back({"source", "bg_idler", Kind::kNumber,
                 [](ExperimentConfig& c, const Value& v) { c.source.bg_idler = v.number; },
                 [](const ExperimentConfig& c) { return fmt(c.source.bg_idler); },
                 "background photons per pulse (fixed mode)"});
    s.push_back(FB_NUM("source", "cross_pol_fraction", Kind::kNumber, source.cross_pol_fraction,
                       "cross-polarized scattering share"));
    s.push_back({"source", "idler_hwp", Kind::kBool,
                 [](ExperimentConfig& c, const Value& v) { c.source.idler_hwp = v.number != 0.0; },
                 [](const ExperimentConfig& c) { return std::string(c.source.idler_hwp ? "true" : "false"); },
                 "45 deg half-wave plate in the idler arm"});
    s.push_back({"source", "statistics", Kind::kText,
                 [](ExperimentConfig& c, const Value& v) {
                   if (v.text == "poisson") c.source.statistics = PairStatistics::kPoisson;
                   else if (v.text == "thermal") c.source.statistics = PairStatistics::kThermal;
                   else throw ConfigError("source.statistics: expected poisson or thermal", "source.statistics");
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.source.statistics == PairStatistics::kPoisson ? "poisson" : "thermal");
                 },
                 "pair-number distribution: poisson | thermal"});
    s.push_back(FB_NUM("source", "pump_wavelength", Kind::kWavelength, source.pump_wavelength_nm, ""));
    s.push_back(FB_NUM("source", "signal_wavelength", Kind::kWavelength, source.signal_wavelength_nm, ""));
    s.push_back(FB_NUM("source", "idler_wavelength", Kind::kWavelength, source.idler_wavelength_nm, ""));
    s.push_back(FB_NUM("source", "wavelength_tolerance", Kind::kNumber, source.wavelength_tolerance,
                       "relative tolerance on 2/lp = 1/ls + 1/li"));

    s.push_back(FB_NUM("detector", "alpha_signal", Kind::kNumber, detector.alpha_signal,
                       "total detection efficiency"));
    s.push_back(FB_NUM("detector", "alpha_idler", Kind::kNumber, detector.alpha_idler,
                       "total detection efficiency"));
    s.push_back(FB_NUM("detector", "dark_signal", Kind::kNumber, detector.dark_signal,
                       "dark-count probability per gate"));
    s.push_back(FB_NUM("detector", "dark_idler", Kind::kNumber, detector.dark_idler,
                       "dark-count probability per gate"));
    s.push_back(FB_NUM("detector", "gate_rate", Kind::kFrequency, detector.gate_rate, ""));
    s.push_back(FB_NUM("detector", "gate_duration", Kind::kTime, detector.gate_duration, "informational"));
    s.push_back({"detector", "pulses_per_gate", Kind::kInt,
                 [](ExperimentConfig& c, const Value& v) { c.detector.pulses_per_gate = static_cast<int>(v.number); },
                 [](const ExperimentConfig& c) { return std::to_string(c.detector.pulses_per_gate); },
                 "pump pulses per gate, informational"});

    s.push_back(FB_NUM("loop", "kp", Kind::kNumber, loop.params.kp, "proportional gain"));
    s.push_back(FB_NUM("loop", "ki", Kind::kNumber, loop.params.ki, "integral gain"));
    s.push_back(FB_NUM("loop", "drift_rate", Kind::kRadians, loop.params.drift_rate, "per sqrt(step)"));
    s.push_back(FB_NUM("loop", "dither", Kind::kRadians, loop.params.dither, "phase-detector dither"));
    s.push_back(FB_NUM("loop", "current_noise", Kind::kNumber, loop.params.current_noise,
                       "loop detector noise per sample"));
    s.push_back(FB_NUM("loop", "delta", Kind::kRadians, loop.delta, "phi_p = phi_ref + delta"));
    s.push_back(FB_NUM("loop", "initial_offset", Kind::kRadians, loop.initial_offset,
                       "start distance from the lock point"));
    s.push_back({"loop", "steps", Kind::kCount,
                 [](ExperimentConfig& c, const Value& v) { c.loop.steps = static_cast<std::uint64_t>(v.number); },
                 [](const ExperimentConfig& c) { return std::to_string(c.loop.steps); }, ""});
    s.push_back({"loop", "ensemble", Kind::kInt,
                 [](ExperimentConfig& c, const Value& v) { c.loop.ensemble = static_cast<int>(v.number); },
                 [](const ExperimentConfig& c) { return std::to_string(c.loop.ensemble); },
                 "independent trajectories for loop statistics"});
    s.push_back({"loop", "lock_during_acquisition", Kind::kBool,
                 [](ExperimentConfig& c, const Value& v) { c.loop.lock_during_acquisition = v.number != 0.0; },
                 [](const ExperimentConfig& c) { return std::string(c.loop.lock_during_acquisition ? "true" : "false"); },
                 "chsh: step the loop once per gate batch and use its phase"});
    s.push_back({"loop", "gates_per_step", Kind::kCount,
                 [](ExperimentConfig& c, const Value& v) { c.loop.gates_per_step = static_cast<std::uint64_t>(v.number); },
                 [](const ExperimentConfig& c) { return std::to_string(c.loop.gates_per_step); }, ""});
    s.push_back(FB_NUM("loop", "reference_noise", Kind::kNumber, loop.reference_noise,
                       "reference-detector noise in phase scans"));

    s.push_back({"scan", "points", Kind::kInt,
                 [](ExperimentConfig& c, const Value& v) { c.scan.points = static_cast<int>(v.number); },
                 [](const ExperimentConfig& c) { return std::to_string(c.scan.points); }, ""});
    s.push_back(FB_NUM("scan", "start", Kind::kRadians, scan.start,
                       "first phi_ref (phase scans) or idler angle (analyzer scan)"));
    s.push_back(FB_NUM("scan", "stop", Kind::kRadians, scan.stop, "exclusive end of the scan"));
    s.push_back(FB_NUM("scan", "signal_angle", Kind::kDegrees, scan.signal_angle_deg, ""));
    s.push_back(FB_NUM("scan", "idler_angle", Kind::kDegrees, scan.idler_angle_deg,
                       "idler analyzer for phase scans"));
    s.push_back(FB_NUM("scan", "grating_eff_h", Kind::kNumber, scan.grating_eff_h, ""));
    s.push_back(FB_NUM("scan", "grating_eff_v", Kind::kNumber, scan.grating_eff_v, ""));
    return s;
  }();
  return specs;
}

#undef FB_NUM

const FieldSpec* find_spec(const std::string& section, const std::string& key) {
  for (const FieldSpec& f : field_specs())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

void check_ranges(const ExperimentConfig& c, const std::map<std::string, int>& lines) {
  auto rethrow = [&](const std::invalid_argument& e) {
    const std::string msg = e.what();
    const std::string field = msg.substr(0, msg.find(':'));
    const auto it = lines.find(field);
    throw ConfigError(msg, field, it == lines.end() ? 0 : it->second);
  };
  try {
    validate(c.source);
    validate(c.detector);
    validate(c.loop.params);
    if (c.accidental_to_true && !(*c.accidental_to_true >= 0.0))
      throw std::invalid_argument("source.accidental_to_true: must be >= 0");
    if (c.scan.points < 5) throw std::invalid_argument("scan.points: must be >= 5");
    if (!(c.scan.stop > c.scan.start)) throw std::invalid_argument("scan.stop: must exceed scan.start");
    if (c.scan.grating_eff_h < 0 || c.scan.grating_eff_h > 1)
      throw std::invalid_argument("scan.grating_eff_h: must lie in [0, 1]");
    if (c.scan.grating_eff_v < 0 || c.scan.grating_eff_v > 1)
      throw std::invalid_argument("scan.grating_eff_v: must lie in [0, 1]");
    if (c.loop.ensemble < 1) throw std::invalid_argument("loop.ensemble: must be >= 1");
    if (c.loop.steps < 1) throw std::invalid_argument("loop.steps: must be >= 1");
    if (c.loop.gates_per_step < 1) throw std::invalid_argument("loop.gates_per_step: must be >= 1");
    if (!(c.loop.reference_noise >= 0.0))
      throw std::invalid_argument("loop.reference_noise: must be >= 0");
    if (c.output_path.empty()) throw std::invalid_argument("output: must not be empty");
  } catch (const std::invalid_argument& e) {
    rethrow(e);
  }
}

}  // namespace

ConfigError::ConfigError(const std::string& message, std::string field, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      field_(std::move(field)),
      line_(line) {}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kFringePhaseScan: return "fringe-phase-scan";
    case ExperimentKind::kAnalyzerScan: return "analyzer-scan";
    case ExperimentKind::kPumpPolScan: return "pump-pol-scan";
    case ExperimentKind::kChsh: return "chsh";
    case ExperimentKind::kStabilize: return "stabilize";
    case ExperimentKind::kCalibrateDelta: return "calibrate-delta";
  }
  return "?";
}

std::vector<std::string_view> experiment_names() {
  return {"fringe-phase-scan", "analyzer-scan", "pump-pol-scan", "chsh", "stabilize", "calibrate-delta"};
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view text) {
  for (auto kind : {ExperimentKind::kFringePhaseScan, ExperimentKind::kAnalyzerScan,
                    ExperimentKind::kPumpPolScan, ExperimentKind::kChsh, ExperimentKind::kStabilize,
                    ExperimentKind::kCalibrateDelta})
    if (to_string(kind) == text) return kind;
  return std::nullopt;
}

double background_for_accidental_ratio(const SourceParams& source, const DetectorParams& det,
                                       double ratio) {
  // (as/2 b + ks)(ai/2 b + ki) = T with kx = ax mu/2 + dx.
  const double target = ratio * det.alpha_signal * det.alpha_idler * source.mu_pair / 2.0;
  const double ks = det.alpha_signal * source.mu_pair / 2.0 + det.dark_signal;
  const double ki = det.alpha_idler * source.mu_pair / 2.0 + det.dark_idler;
  const double qa = det.alpha_signal * det.alpha_idler / 4.0;
  const double qb = (det.alpha_signal * ki + det.alpha_idler * ks) / 2.0;
  const double qc = ks * ki - target;
  if (qc >= 0.0 || qa == 0.0) return 0.0;
  return (-qb + std::sqrt(qb * qb - 4.0 * qa * qc)) / (2.0 * qa);
}

ExperimentConfig resolve(ExperimentConfig config) {
  if (config.accidental_to_true) {
    const double bg = background_for_accidental_ratio(config.source, config.detector,
                                                      *config.accidental_to_true);
    config.source.bg_signal = bg;
    config.source.bg_idler = bg;
  }
  check_ranges(config, {});
  return config;
}

ExperimentConfig parse_config(std::string_view text,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
  ExperimentConfig config;
  std::map<std::string, std::string> values;  // field name -> raw value
  std::map<std::string, int> lines;
  static const std::set<std::string> sections{"source", "detector", "loop", "scan"};

  std::istringstream in{std::string(text)};
  std::string raw_line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    const std::string line = trim(std::string_view(raw_line).substr(0, raw_line.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", "", line_no);
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!sections.count(section)) throw ConfigError("unknown section [" + section + "]", section, line_no);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value' or '[section]'", "", line_no);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", "", line_no);
    const FieldSpec* spec = find_spec(section, key);
    const std::string name = section.empty() ? key : section + "." + key;
    if (!spec) throw ConfigError("unknown key '" + name + "'", name, line_no);
    if (values.count(name)) throw ConfigError("repeated key '" + name + "'", name, line_no);
    values[name] = value;
    lines[name] = line_no;
  }

  for (const auto& [key, value] : overrides) {
    const std::size_t dot = key.find('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string k = dot == std::string::npos ? key : key.substr(dot + 1);
    if (!find_spec(sec, k)) throw ConfigError("unknown key '" + key + "'", key);
    values[key] = trim(value);
    lines.erase(key);
  }

  for (const char* required : {"experiment", "seed"}) {
    const auto it = values.find(required);
    if (it == values.end())
      throw ConfigError(std::string(required) + " is required", required);
    if (it->second.empty())
      throw ConfigError(std::string(required) + " must not be empty", required,
                        lines.count(required) ? lines[required] : 0);
  }

  const bool fixed_background = values.count("source.bg_signal") || values.count("source.bg_idler");
  if (fixed_background) {
    if (values.count("source.accidental_to_true"))
      throw ConfigError("source.accidental_to_true conflicts with explicit bg_signal/bg_idler",
                        "source.accidental_to_true", lines["source.accidental_to_true"]);
    config.accidental_to_true.reset();
  }

  for (const FieldSpec& spec : field_specs()) {
    const auto it = values.find(spec.name());
    if (it == values.end()) continue;
    const int line = lines.count(spec.name()) ? lines[spec.name()] : 0;
    try {
      spec.set(config, parse_value(spec, it->second, line));
    } catch (const ConfigError& e) {
      if (e.line() == 0 && line > 0) throw ConfigError(e.what(), e.field(), line);
      throw;
    }
  }

  // Scan range defaults follow the scanned quantity: phi_ref over two
  // periods, the idler analyzer over 180 deg, the pump plate over 90 deg.
  if (!values.count("scan.stop")) {
    if (config.experiment == ExperimentKind::kAnalyzerScan) config.scan.stop = kPi;
    if (config.experiment == ExperimentKind::kPumpPolScan) config.scan.stop = kPi / 2.0;
  }

  if (config.accidental_to_true) {
    const double bg = background_for_accidental_ratio(config.source, config.detector,
                                                      *config.accidental_to_true);
    config.source.bg_signal = bg;
    config.source.bg_idler = bg;
  }
  check_ranges(config, lines);
  return config;
}

std::string to_config_text(const ExperimentConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const FieldSpec& spec : field_specs()) {
    const bool bg_key = spec.section == "source" && (spec.key == "bg_signal" || spec.key == "bg_idler");
    if (bg_key && config.accidental_to_true) continue;
    if (spec.section == "source" && spec.key == "accidental_to_true" && !config.accidental_to_true) continue;
    if (spec.section != section) {
      section = spec.section;
      out << "\n[" << section << "]\n";
    }
    out << spec.key << " = " << spec.get(config);
    const std::string_view unit = native_unit(spec.kind);
    if (!unit.empty()) out << ' ' << unit;
    out << '\n';
  }
  return out.str();
}

std::string describe_config_fields() {
  ExperimentConfig defaults;
  defaults.source.bg_signal = defaults.source.bg_idler = 0.0;
  std::ostringstream out;
  for (const FieldSpec& spec : field_specs()) {
    out << spec.name();
    const std::string_view unit = native_unit(spec.kind);
    if (!unit.empty()) out << " [" << unit << "]";
    if (spec.key != "experiment" && spec.key != "seed") out << " = " << spec.get(defaults);
    if (!spec.doc.empty()) out << "    # " << spec.doc;
    out << '\n';
  }
  return out.str();
}

}  // namespace fiberbell
