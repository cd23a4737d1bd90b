// fiberbell: run a named experiment from a config file plus flag overrides.
//
//   fiberbell chsh --config run.cfg --seed 7 --set source.mu_pair=0.05
//   fiberbell defaults
//
// Exit codes: 0 ok, 2 usage or config error, 3 I/O error, 4 run failure.

#include "fiberbell/config.hpp"
#include "fiberbell/experiments.hpp"
#include "fiberbell/report.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitRun = 4;

struct RunOptions {
  std::string config_path;
  std::string seed;
  std::vector<std::string> sets;
  std::string output;
  unsigned workers = 0;
  std::string gates;
  std::string state;
  bool raw = false;
  bool dry_run = false;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

int run(const std::string& experiment, const RunOptions& opt) {
  using namespace fiberbell;
  ExperimentConfig config;
  try {
    const std::string text = opt.config_path.empty() ? std::string() : read_file(opt.config_path);
    std::vector<std::pair<std::string, std::string>> overrides{{"experiment", experiment}};
    for (const std::string& s : opt.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!opt.seed.empty()) overrides.emplace_back("seed", opt.seed);
    if (!opt.output.empty()) overrides.emplace_back("output", opt.output);
    if (opt.workers > 0) overrides.emplace_back("workers", std::to_string(opt.workers));
    if (!opt.gates.empty()) overrides.emplace_back("gates_per_point", opt.gates);
    if (!opt.state.empty()) overrides.emplace_back("bell_state", opt.state);
    if (opt.raw) overrides.emplace_back("corrected", "false");
    config = parse_config(text, overrides);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (opt.dry_run) {
    std::cout << to_config_text(config);
    return kExitOk;
  }

  ExperimentOutput output;
  try {
    output = run_experiment(config);
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kExitRun;
  }
  try {
    write_output(config.output_path, config, output);
  } catch (const OutputError& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return kExitIo;
  }
  std::cout << format_summary(config, output);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fiber-loop polarization-entanglement simulator"};
  app.set_version_flag("--version", std::string(fiberbell::library_version()));
  app.require_subcommand(1);

  RunOptions opt;
  std::string chosen;
  for (std::string_view name : fiberbell::experiment_names()) {
    CLI::App* sub = app.add_subcommand(std::string(name), "run the " + std::string(name) + " experiment");
    sub->add_option("-c,--config", opt.config_path, "config file");
    sub->add_option("-s,--seed", opt.seed, "random seed (required here or in the config)");
    sub->add_option("--set", opt.sets, "override a field, section.key=value (repeatable)");
    sub->add_option("-o,--output", opt.output, "output directory");
    sub->add_option("-w,--workers", opt.workers, "acquisition threads")->check(CLI::Range(1u, 1024u));
    sub->add_option("-g,--gates", opt.gates, "gates per scan point or analyzer setting");
    sub->add_option("--state", opt.state, "psi+, psi-, phi+ or phi-");
    sub->add_flag("--raw", opt.raw, "analyze without accidental subtraction");
    sub->add_flag("--dry-run", opt.dry_run, "print the resolved config and exit");
    sub->callback([&chosen, name] { chosen = std::string(name); });
  }
  app.add_subcommand("defaults", "list config fields with units and defaults")->callback([&chosen] {
    chosen = "defaults";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (chosen == "defaults") {
    std::cout << fiberbell::describe_config_fields();
    return kExitOk;
  }
  return run(chosen, opt);
}
