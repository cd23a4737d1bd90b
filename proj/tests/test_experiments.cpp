#include "fiberbell/experiments.hpp"
#include "fiberbell/report.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace fiberbell;
namespace fs = std::filesystem;

namespace {

ExperimentConfig quick(const std::string& experiment, std::uint64_t gates = 20000) {
  ExperimentConfig c = parse_config("experiment = " + experiment + "\nseed = 2024\n");
  c.gates_per_point = gates;
  c.scan.points = 12;
  c.loop.steps = 500;
  c.loop.ensemble = 2;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fiberbell_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FIBERBELL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("identical config, seed and workers give identical tallies") {
  for (const char* name : {"fringe-phase-scan", "analyzer-scan", "chsh"}) {
    for (unsigned workers : {1u, 2u}) {
      ExperimentConfig c = quick(name);
      c.workers = workers;
      const ExperimentOutput a = run_experiment(c);
      const ExperimentOutput b = run_experiment(c);
      CAPTURE(name);
      REQUIRE_FALSE(a.records.empty());
      CHECK(a.records == b.records);
      CHECK(format_table(a.tables.front()) == format_table(b.tables.front()));
    }
  }
  ExperimentConfig c = quick("chsh");
  const auto base = run_experiment(c).records;
  c.seed += 1;
  CHECK_FALSE(run_experiment(c).records == base);
}

TEST_CASE("ideal phase scan without background has visibility above 0.99") {
  ExperimentConfig c = quick("fringe-phase-scan", 200000);
  c.scan.points = 24;
  c.source.coherence_gamma = 1.0;
  c.accidental_to_true.reset();
  c.source.bg_signal = c.source.bg_idler = 0.0;
  c.detector.dark_signal = c.detector.dark_idler = 0.0;
  const PhaseScanResult r = run_phase_scan(c);
  CHECK(r.corrected.visibility > 0.99);
  CHECK(r.records.size() == 24);
  CHECK(r.reference.size() == 24);
}

TEST_CASE("pump polarization experiment reports the ripple") {
  const PumpScanResult r = run_pump_pol_scan(quick("pump-pol-scan"));
  CHECK(r.singles_ripple == doctest::Approx(r.closed_form_ripple).epsilon(1e-3));
  CHECK(r.coincidence_ripple > r.singles_ripple);
}

TEST_CASE("stabilize compares locked and free-running loops") {
  ExperimentConfig c = quick("stabilize");
  c.loop.params.drift_rate = 0.01;
  c.loop.steps = 2000;
  c.loop.ensemble = 4;
  const StabilizeResult r = run_stabilize(c);
  CHECK(r.locked_rms < r.unlocked_rms);
  CHECK(r.locked_first.trace.size() == 2000);
}

TEST_CASE("locked CHSH runs violate the inequality for all four Bell states") {
  for (auto state : {BellState::kPsiPlus, BellState::kPsiMinus, BellState::kPhiPlus, BellState::kPhiMinus}) {
    ExperimentConfig c = quick("chsh", 4'000'000);
    c.bell_state = state;
    c.loop.delta = 0.35;
    c.loop.lock_during_acquisition = true;
    c.loop.gates_per_step = 200000;
    c.loop.params.drift_rate = 0.01;
    const ChshRun run = run_chsh(c);
    CAPTURE(to_string(state));
    CHECK(std::abs(run.result.S) > 2.0);
    CHECK(run.trace.size() == 16 * 20);
    CHECK(run.lock.idler_hwp == (state == BellState::kPhiPlus || state == BellState::kPhiMinus));
  }
}

TEST_CASE("output directory holds config, summary and round-trippable tables") {
  ExperimentConfig c = quick("chsh");
  const fs::path dir = scratch("chsh");
  const ExperimentOutput out = run_experiment(c);
  write_output(dir, c, out);

  const std::string counts = slurp(dir / "counts.csv");
  std::istringstream lines(counts);
  std::string line;
  std::getline(lines, line);
  CHECK(line == count_record_csv_header());
  std::size_t i = 0;
  while (std::getline(lines, line)) CHECK(parse_count_record_row(line) == out.records.at(i++));
  CHECK(i == 16);

  const std::string terms = slurp(dir / "chsh_terms.csv");
  CHECK(terms.rfind("term,theta_signal_deg,theta_idler_deg,sign,E,E_uncertainty\n", 0) == 0);

  const auto summary = parse_summary(slurp(dir / "summary.txt"));
  bool has_hash = false, has_s = false;
  for (const auto& [k, v] : summary) {
    if (k == "repro.config_sha256") has_hash = v == config_hash(c) && v.size() == 64;
    if (k == "S") has_s = true;
  }
  CHECK(has_hash);
  CHECK(has_s);
  CHECK(parse_config(slurp(dir / "config.txt")).seed == c.seed);
  fs::remove_all(dir);
}

TEST_CASE("stabilize writes loop traces that parse back") {
  ExperimentConfig c = quick("stabilize");
  const fs::path dir = scratch("loop");
  write_output(dir, c, run_experiment(c));
  std::istringstream lines(slurp(dir / "loop_locked.csv"));
  std::string line;
  std::getline(lines, line);
  CHECK(line == loop_trace_csv_header());
  int rows = 0;
  while (std::getline(lines, line)) {
    CHECK_NOTHROW(parse_loop_trace_row(line));
    ++rows;
  }
  CHECK(rows == 500);
  fs::remove_all(dir);
}

TEST_CASE("SHA-256 matches the standard test vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  ExperimentConfig a = quick("chsh"), b = quick("chsh");
  CHECK(config_hash(a) == config_hash(b));
  b.source.mu_pair = 0.11;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("unwritable output is an output error") {
  const fs::path file = scratch("file");
  std::ofstream(file) << "x";
  ExperimentConfig c = quick("pump-pol-scan");
  CHECK_THROWS_AS(write_output(file / "sub", c, run_experiment(c)), OutputError);
  fs::remove_all(file);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("cli");
  const std::string out = " -o " + dir.string();
  CHECK(run_cli("defaults") == 0);
  CHECK(run_cli("pump-pol-scan --seed 1" + out) == 0);
  CHECK(fs::exists(dir / "pump_scan.csv"));
  CHECK(run_cli("chsh") == 2);                                  // seed missing
  CHECK(run_cli("chsh --seed 1 --set source.mu_pair=-1") == 2);  // range error
  CHECK(run_cli("chsh --seed 1 --bogus") == 2);
  CHECK(run_cli("chsh --seed 1 --config /nonexistent/run.cfg") == 3);
  CHECK(run_cli("pump-pol-scan --seed 1 -o /proc/fiberbell_forbidden") == 3);
  CHECK(run_cli("analyzer-scan --seed 1 --gates 2 --set scan.points=5" + out) == 4);  // no counts to fit
  fs::remove_all(dir);
}

TEST_CASE("CLI runs are byte-identical across repeats") {
  const fs::path a = scratch("cli_a"), b = scratch("cli_b");
  const std::string args = "fringe-phase-scan --seed 5 --gates 20000 --set scan.points=10 --workers 2";
  REQUIRE(run_cli(args + " -o " + a.string()) == 0);
  REQUIRE(run_cli(args + " -o " + b.string()) == 0);
  CHECK(slurp(a / "counts.csv") == slurp(b / "counts.csv"));
  CHECK(slurp(a / "summary.txt") == slurp(b / "summary.txt"));
  fs::remove_all(a);
  fs::remove_all(b);
}
