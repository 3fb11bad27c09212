// qloewner: batch experiments and verification sweeps over JSON inputs.
//
//   qloewner flow --field f.json --level 2 --from 0 --to 1 --samples 5 --seed 7
//   qloewner verify lemma-calc --seed 7 --n 1000
//   qloewner convolve --mu a.json --nu b.json --N 8 --format json --out r.json
//
// Exit codes: 0 all checks pass, 1 a mathematical check failed, 2 bad input.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>

#include "qloewner/cli/runner.hpp"

namespace {

using qloewner::json_io::Json;
namespace cli = qloewner::cli;

/// CLI spelling of a parameter key.
std::string flag_for(const std::string& key) {
  std::string f = "--";
  for (char c : key) f += (c == '_') ? '-' : c;
  return f;
}

struct Globals {
  std::string seed;
  std::string tol_scale;
  std::string format;
  std::string out;
  std::string plot;
  std::string config;
};

void add_globals(CLI::App& app, Globals& g) {
  app.add_option("--seed", g.seed, "seed for randomized sampling (required by sweeps)");
  app.add_option("--tol-scale", g.tol_scale, "multiplier applied to every default threshold");
  app.add_option("--format", g.format, "report format: csv or json");
  app.add_option("--out", g.out, "report path (stdout when omitted)");
  app.add_option("--plot", g.plot, "write long-format plot data (series,x,y_re,y_im) here");
  app.add_option("--config", g.config, "JSON file with params and global settings");
}

/// Reads {"seed", "tol_scale", "format", "out", "plot", "params"} from a config file.
void apply_config_file(const std::string& path, cli::ExperimentConfig& cfg) {
  const Json j = qloewner::json_io::read_file(path);
  qloewner::json_io::require_keys(j, {"command", "seed", "tol_scale", "format", "out", "plot", "params"}, {}, "config");
  if (j.contains("command") && j["command"] != cfg.command)
    throw qloewner::InputError("config: command \"" + j["command"].dump() + "\" does not match subcommand");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw qloewner::InputError("config: seed must be a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("tol_scale")) cfg.tol_scale = qloewner::json_io::get_number(j["tol_scale"], "tol_scale");
  if (j.contains("format")) cfg.format = j["format"].get<std::string>();
  if (j.contains("out")) cfg.out = j["out"].get<std::string>();
  if (j.contains("plot")) cfg.plot = j["plot"].get<std::string>();
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw qloewner::InputError("config: params must be an object");
    for (const auto& [k, v] : j["params"].items()) cfg.params[k] = v;
  }
}

std::uint64_t parse_seed(const std::string& s) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size() || s.front() == '-') throw qloewner::InputError("");
    return v;
  } catch (const std::exception&) {
    throw qloewner::InputError("--seed must be a nonnegative integer");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator-valued transforms, monotone convolution and Loewner flows on matrix balls"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals globals;
  add_globals(app, globals);

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, CLI::App*> subs;
  CLI::App* verify = app.add_subcommand("verify", "property sweeps");
  verify->require_subcommand(1);
  verify->fallthrough();
  for (const auto& [command, keys] : cli::command_keys()) {
    CLI::App* parent = &app;
    std::string name = command;
    if (command.rfind("verify ", 0) == 0) {
      parent = verify;
      name = command.substr(7);
    }
    CLI::App* sub = parent->add_subcommand(name, command);
    sub->fallthrough();
    subs[command] = sub;
    for (const auto& key : keys) sub->add_option(flag_for(key), values[command][key], key);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitInputError;
  }

  cli::ExperimentConfig cfg;
  for (const auto& [command, sub] : subs)
    if (sub->parsed()) cfg.command = command;

  try {
    if (!globals.config.empty()) apply_config_file(globals.config, cfg);
    for (const auto& [key, value] : values[cfg.command])
      if (subs[cfg.command]->count(flag_for(key)) > 0) cfg.params[key] = value;
    if (!globals.seed.empty()) cfg.seed = parse_seed(globals.seed);
    if (!globals.tol_scale.empty()) {
      try {
        cfg.tol_scale = std::stod(globals.tol_scale);
      } catch (const std::exception&) {
        throw qloewner::InputError("--tol-scale must be a number");
      }
    }
    if (!globals.format.empty()) cfg.format = globals.format;
    if (!globals.out.empty()) cfg.out = globals.out;
    if (!globals.plot.empty()) cfg.plot = globals.plot;
  } catch (const qloewner::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitInputError;
  }

  const cli::RunOutcome outcome = cli::run(cfg);
  if (outcome.exit_code == cli::kExitInputError) {
    std::cerr << "error: " << outcome.error << "\n";
    return outcome.exit_code;
  }
  try {
    if (cfg.out.empty())
      std::cout << outcome.rendered;
    else
      qloewner::write_text(cfg.out, outcome.rendered);
    if (!cfg.plot.empty()) qloewner::emit_plotdata(outcome.report, cfg.plot);
  } catch (const qloewner::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitInputError;
  }
  std::size_t passed = 0;
  for (const auto& c : outcome.report.checks) passed += c.passed() ? 1 : 0;
  std::cerr << cfg.command << ": " << passed << "/" << outcome.report.checks.size() << " checks passed\n";
  return outcome.exit_code;
}
