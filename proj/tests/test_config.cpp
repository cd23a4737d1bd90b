#include "fiberbell/config.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace fiberbell;

namespace {

ConfigError config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a ConfigError");
  return ConfigError("");
}

}  // namespace

TEST_CASE("minimal config yields the published parameter set") {
  const ExperimentConfig c = parse_config("experiment = chsh\nseed = 1\n");
  CHECK(c.experiment == ExperimentKind::kChsh);
  CHECK(c.seed == 1);
  CHECK(c.source.mu_pair == 0.1);
  CHECK(c.detector.alpha_signal == 0.09);
  CHECK(c.detector.alpha_idler == 0.07);
  CHECK(c.detector.gate_rate == 588e3);
  CHECK(c.detector.pulses_per_gate == 128);
  CHECK(c.detector.gate_duration == 1e-9);
  CHECK(c.source.pump_wavelength_nm == 1536.0);
  CHECK(c.source.signal_wavelength_nm == 1547.1);
  CHECK(c.source.idler_wavelength_nm == 1525.1);
  CHECK(c.corrected);
  CHECK(c.gates_per_point == 1'000'000);
  CHECK(c.workers == 1);
  CHECK(c.source.bg_signal > 0.0);
  CHECK(c.source.bg_signal == c.source.bg_idler);
}

TEST_CASE("derived background makes accidentals equal the fringe-peak true rate") {
  const ExperimentConfig c = parse_config("experiment = chsh\nseed = 1\n");
  const SourceParams& s = c.source;
  const DetectorParams& d = c.detector;
  const double ps = d.alpha_signal * (s.mu_pair / 2 + s.bg_signal / 2) + d.dark_signal;
  const double pi = d.alpha_idler * (s.mu_pair / 2 + s.bg_idler / 2) + d.dark_idler;
  CHECK(ps * pi == doctest::Approx(d.alpha_signal * d.alpha_idler * s.mu_pair / 2).epsilon(1e-12));
  CHECK(background_for_accidental_ratio(s, d, 0.0) == 0.0);
  CHECK(background_for_accidental_ratio(s, d, 2.0) > s.bg_signal);
}

TEST_CASE("experiment and seed are mandatory") {
  ConfigError e = config_error("seed = 1\n");
  CHECK(e.field() == "experiment");
  e = config_error("experiment =\nseed = 1\n");
  CHECK(e.field() == "experiment");
  CHECK(e.line() == 1);
  e = config_error("experiment = chsh\n");
  CHECK(e.field() == "seed");
  e = config_error("experiment = chsh\nseed = -3\n");
  CHECK(e.field() == "seed");
  e = config_error("experiment = tomography\nseed = 1\n");
  CHECK(e.field() == "experiment");
}

TEST_CASE("range errors name the field and line") {
  const ConfigError e = config_error("experiment = chsh\nseed = 1\n[source]\nmu_pair = -1\n");
  CHECK(e.field() == "source.mu_pair");
  CHECK(e.line() == 4);
  CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  CHECK(config_error("experiment = chsh\nseed = 1\n[detector]\nalpha_idler = 1.2\n").field() ==
        "detector.alpha_idler");
  CHECK(config_error("experiment = chsh\nseed = 1\n[scan]\npoints = 3\n").field() == "scan.points");
}

TEST_CASE("syntax errors carry line numbers") {
  CHECK(config_error("experiment = chsh\nseed = 1\n[source\n").line() == 3);
  CHECK(config_error("experiment = chsh\nseed 1\n").line() == 2);
  CHECK(config_error("experiment = chsh\nseed = 1\n[lasers]\n").line() == 3);
  ConfigError e = config_error("experiment = chsh\nseed = 1\n[source]\nmu = 0.1\n");
  CHECK(e.line() == 4);
  CHECK(e.field() == "source.mu");
  e = config_error("experiment = chsh\nseed = 1\nseed = 2\n");
  CHECK(e.line() == 3);
  e = config_error("experiment = chsh\nseed = 1\n[source]\nmu_pair = lots\n");
  CHECK(e.field() == "source.mu_pair");
  CHECK(config_error("experiment = chsh\nseed = 1\n[detector]\ngate_rate = 5 parsecs\n").field() ==
        "detector.gate_rate");
  CHECK(config_error("experiment = chsh\nseed = 1\ngates_per_point = 1.5\n").field() == "gates_per_point");
}

TEST_CASE("unit suffixes convert to native units") {
  const ExperimentConfig c = parse_config(
      "experiment = fringe-phase-scan  # comment\n"
      "seed = 9\n"
      "gates_per_point = 2e5\n"
      "[source]\n"
      "pump_phase = 90 deg\n"
      "coherence_gamma = 93%\n"
      "signal_wavelength = 1.5471um\n"
      "[detector]\n"
      "gate_rate = 0.588 MHz\n"
      "gate_duration = 1ns\n"
      "[scan]\n"
      "signal_angle = 0.5 rad\n");
  CHECK(c.gates_per_point == 200000);
  CHECK(c.source.pump_phase == doctest::Approx(kPi / 2));
  CHECK(c.source.coherence_gamma == doctest::Approx(0.93));
  CHECK(c.source.signal_wavelength_nm == doctest::Approx(1547.1));
  CHECK(c.detector.gate_rate == doctest::Approx(588e3));
  CHECK(c.detector.gate_duration == doctest::Approx(1e-9));
  CHECK(c.scan.signal_angle_deg == doctest::Approx(0.5 * 180 / kPi));
}

TEST_CASE("explicit backgrounds and the accidental ratio are exclusive") {
  const ExperimentConfig c =
      parse_config("experiment = chsh\nseed = 1\n[source]\nbg_signal = 0\nbg_idler = 0.2\n");
  CHECK_FALSE(c.accidental_to_true.has_value());
  CHECK(c.source.bg_signal == 0.0);
  CHECK(c.source.bg_idler == 0.2);
  const ConfigError e = config_error("experiment = chsh\nseed = 1\n[source]\nbg_signal = 0\naccidental_to_true = 1\n");
  CHECK(e.field() == "source.accidental_to_true");
}

TEST_CASE("overrides apply on top of the text") {
  const ExperimentConfig c = parse_config("experiment = chsh\nseed = 1\n[source]\nmu_pair = 0.2\n",
                                          {{"source.mu_pair", "0.05"}, {"seed", "77"}, {"bell_state", "phi-"}});
  CHECK(c.source.mu_pair == 0.05);
  CHECK(c.seed == 77);
  CHECK(c.bell_state == BellState::kPhiMinus);
  CHECK_THROWS_AS(parse_config("experiment = chsh\nseed = 1\n", {{"source.nope", "1"}}), ConfigError);
  // Seed and experiment may come from overrides alone.
  CHECK(parse_config("", {{"experiment", "stabilize"}, {"seed", "5"}}).experiment == ExperimentKind::kStabilize);
}

TEST_CASE("scan ranges default to the scanned quantity") {
  CHECK(parse_config("experiment = fringe-phase-scan\nseed = 1\n").scan.stop == doctest::Approx(4 * kPi));
  CHECK(parse_config("experiment = analyzer-scan\nseed = 1\n").scan.stop == doctest::Approx(kPi));
  CHECK(parse_config("experiment = pump-pol-scan\nseed = 1\n").scan.stop == doctest::Approx(kPi / 2));
  CHECK(parse_config("experiment = analyzer-scan\nseed = 1\n[scan]\nstop = 90 deg\n").scan.stop ==
        doctest::Approx(kPi / 2));
}

TEST_CASE("canonical text round-trips") {
  const char* inputs[] = {
      "experiment = chsh\nseed = 18446744073709551615\n",
      "experiment = analyzer-scan\nseed = 3\nbell_state = phi-\ncorrected = false\n[source]\n"
      "accidental_to_true = 0.37\nmu_pair = 0.0123456789\n[loop]\ndelta = 0.3\nlock_during_acquisition = yes\n",
      "experiment = stabilize\nseed = 4\nworkers = 3\n[source]\nbg_signal = 0.1\nbg_idler = 0.3\n"
      "statistics = thermal\n[loop]\ndrift_rate = 0.01\nsteps = 777\n",
  };
  for (const char* text : inputs) {
    const ExperimentConfig c = parse_config(text);
    const std::string canonical = to_config_text(c);
    const ExperimentConfig again = parse_config(canonical);
    CHECK(to_config_text(again) == canonical);
    CHECK(again.source.bg_signal == c.source.bg_signal);
    CHECK(again.source.mu_pair == c.source.mu_pair);
    CHECK(again.loop.delta == c.loop.delta);
    CHECK(again.seed == c.seed);
  }
}

TEST_CASE("field reference lists every section") {
  const std::string d = describe_config_fields();
  for (const char* key : {"experiment", "seed", "source.mu_pair", "detector.gate_rate [Hz]", "loop.kp",
                          "scan.points", "source.pump_phase [rad]"})
    CHECK(d.find(key) != std::string::npos);
}

TEST_CASE("experiment names") {
  for (auto name : experiment_names()) {
    const auto kind = parse_experiment_kind(name);
    REQUIRE(kind.has_value());
    CHECK(to_string(*kind) == name);
  }
  CHECK_FALSE(parse_experiment_kind("bell").has_value());
}
