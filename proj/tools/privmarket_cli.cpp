// SPDX-License-Identifier: Apache-2.0
//
// Batch front door for the privmarket engine. Talks to the engine through
// the C API only; files and manifests are handled here.
//
// Exit codes: 0 success, 1 semantic failure (violations, infeasibility,
// deviation gain over threshold), 2 usage/parse, 3 capacity.
#include <chrono>
#include <cstdio>
#include <memory>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "privmarket.h"

namespace {

struct InstanceDeleter {
  void operator()(pm_instance* p) const { pm_instance_free(p); }
};
struct RulesDeleter {
  void operator()(pm_rules* p) const { pm_rules_free(p); }
};
using InstancePtr = std::unique_ptr<pm_instance, InstanceDeleter>;
using RulesPtr = std::unique_ptr<pm_rules, RulesDeleter>;

namespace fs = std::filesystem;
using nlohmann::json;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
  }
};

std::string take(char* s) {
  std::string out = s ? s : "";
  pm_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot open '" << path << "'\n";
    std::exit(2);
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << content;
}

[[noreturn]] void fail(int code) {
  std::cerr << "error: " << pm_last_error() << "\n";
  std::exit(code == PM_OK ? 1 : code);
}

struct Run {
  std::string instance_path;
  std::string command;
  fs::path out_dir = "out";
  uint64_t seed = 1;
  json overrides = json::object();
  Timer timer;

  InstancePtr load() const {
    pm_instance* inst = nullptr;
    const int rc = pm_instance_load_file(instance_path.c_str(), &inst);
    if (rc != PM_OK) fail(rc);
    return InstancePtr(inst);
  }

  void manifest(const std::vector<std::string>& outputs) const {
    json j{{"instance", instance_path},
           {"command", command},
           {"overrides", overrides},
           {"seed", seed},
           {"out_dir", out_dir.string()},
           {"tool_version", pm_version()},
           {"outputs", outputs},
           {"wall_seconds", timer.seconds()},
           {"finished_unix", static_cast<long>(std::time(nullptr))}};
    write_file(out_dir / "manifest.json", j.dump(2) + "\n");
  }
};

// --sigma accepts a spec file or the shorthand constant:<eps>
std::string sigma_spec_json(const std::string& arg) {
  if (arg.rfind("constant:", 0) == 0) {
    const double eps = std::atof(arg.substr(9).c_str());
    json j{{"family", "separable"}, {"eps", {eps}}};
    return j.dump();
  }
  return read_file(arg);
}

RulesPtr rules_from_args(pm_instance* inst, const std::string& rules_path,
                         const std::string& sigma_arg, Run& run,
                         std::vector<std::string>* outputs) {
  pm_rules* rules = nullptr;
  if (!rules_path.empty()) {
    const int rc = pm_rules_load_file(inst, rules_path.c_str(), &rules);
    if (rc != PM_OK) fail(rc);
    return RulesPtr(rules);
  }
  if (sigma_arg.empty()) {
    std::cerr << "either --rules or --sigma is required\n";
    std::exit(2);
  }
  const std::string sj = sigma_spec_json(sigma_arg);
  char* info = nullptr;
  const int rc =
      pm_rules_synthesize(inst, sj.c_str(), nullptr, &rules, &info);
  if (rc != PM_OK) fail(rc);
  if (outputs) {
    write_file(run.out_dir / "synthesis_info.json", take(info));
    outputs->push_back("synthesis_info.json");
  } else {
    pm_string_free(info);
  }
  return RulesPtr(rules);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privmarket — dynamic data-privacy market engine"};
  app.require_subcommand(1);

  Run run;
  std::string rules_path, sigma_arg, kappa_arg, config_path;
  uint64_t trials = 1000;
  long keep_traces = 0;
  double fail_on_gain = -1.0;
  bool multi_period = false;

  if (const char* env = std::getenv("PRIVMARKET_OUT")) run.out_dir = env;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("instance", run.instance_path, "instance JSON file")
        ->required();
    cmd->add_option("--out", run.out_dir, "output directory");
    cmd->add_option("--seed", run.seed, "random seed");
  };

  auto* validate = app.add_subcommand("validate", "check instance assumptions");
  add_common(validate);

  auto* solve = app.add_subcommand("solve", "backward-induction solve");
  add_common(solve);
  solve->add_option("--rules", rules_path, "mechanism rules JSON");
  solve->add_option("--sigma", sigma_arg, "sigma spec file or constant:<eps>");

  auto* synth = app.add_subcommand("synthesize", "payments from sigma");
  add_common(synth);
  synth->add_option("--sigma", sigma_arg, "sigma spec file or constant:<eps>")
      ->required();
  synth->add_option("--kappa", kappa_arg, "threshold profile file or 'auto'");

  auto* verify = app.add_subcommand("verify", "brute-force deviation search");
  add_common(verify);
  verify->add_option("--rules", rules_path, "mechanism rules JSON");
  verify->add_option("--sigma", sigma_arg, "sigma spec file or constant:<eps>");
  verify->add_flag("--multi-period", multi_period,
                   "also enumerate multi-period strategies (desk scale)");
  verify->add_option("--fail-on-gain", fail_on_gain,
                     "exit 1 when the max gain exceeds this threshold");

  auto* certify = app.add_subcommand("certify", "delta-DIC certificate");
  add_common(certify);
  certify->add_option("--rules", rules_path, "mechanism rules JSON");
  certify->add_option("--sigma", sigma_arg, "sigma spec file or constant:<eps>");

  auto* optimize = app.add_subcommand("optimize", "relaxed buyer design");
  add_common(optimize);
  optimize->add_option("--config", config_path, "optimizer config JSON file");

  auto* simulate = app.add_subcommand("simulate", "seeded Monte Carlo");
  add_common(simulate);
  simulate->add_option("--rules", rules_path, "mechanism rules JSON");
  simulate->add_option("--sigma", sigma_arg, "sigma spec file or constant:<eps>");
  simulate->add_option("--kappa", kappa_arg, "threshold profile file or 'auto'");
  simulate->add_option("--trials", trials, "number of trials");
  simulate->add_option("--keep-traces", keep_traces,
                       "retain this many traces as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // usage errors map onto the parse exit code
  }
  CLI::App* cmd = app.get_subcommands().front();
  run.command = cmd->get_name();
  for (const auto* opt : cmd->get_options())
    if (opt->count() && opt->get_name() != "instance")
      run.overrides[opt->get_name()] = opt->results().front();

  InstancePtr inst_ptr = run.load();
  pm_instance* inst = inst_ptr.get();
  std::vector<std::string> outputs;

  if (cmd == validate) {
    char* report = nullptr;
    const int rc = pm_instance_validate(inst, &report);
    const std::string rep = take(report);
    write_file(run.out_dir / "validation.json", rep);
    outputs.push_back("validation.json");
    run.manifest(outputs);
    if (rc == PM_OK) {
      std::cout << "instance valid\n";
      return 0;
    }
    std::cout << rep << "\n";
    std::cerr << "validation failed: " << pm_last_error() << "\n";
    return rc;
  }

  if (cmd == solve) {
    RulesPtr rules = rules_from_args(inst, rules_path, sigma_arg, run, &outputs);
    char *j = nullptr, *csv = nullptr;
    const int rc = pm_solve(inst, rules.get(), &j, &csv);
    if (rc != PM_OK) fail(rc);
    write_file(run.out_dir / "solution.json", take(j));
    write_file(run.out_dir / "solution.csv", take(csv));
    outputs.insert(outputs.end(), {"solution.json", "solution.csv"});
    run.manifest(outputs);
    std::cout << "solved; outputs in " << run.out_dir.string() << "\n";
    return 0;
  }

  if (cmd == synth) {
    const std::string sj = sigma_spec_json(sigma_arg);
    std::string kappa_json;
    if (!kappa_arg.empty() && kappa_arg != "auto")
      kappa_json = read_file(kappa_arg);
    pm_rules* rules_raw = nullptr;
    char* info = nullptr;
    const int rc = pm_rules_synthesize(
        inst, sj.c_str(), kappa_json.empty() ? nullptr : kappa_json.c_str(),
        &rules_raw, &info);
    if (rc != PM_OK) fail(rc);
    RulesPtr rules(rules_raw);
    const std::string info_s = take(info);
    if (!json::parse(info_s).value("converged", true))
      std::cerr << "warning: threshold fixed point did not converge\n";
    char* rj = nullptr;
    pm_rules_to_json(rules.get(), &rj);
    write_file(run.out_dir / "rules.json", take(rj));
    write_file(run.out_dir / "synthesis_info.json", info_s);
    outputs.insert(outputs.end(), {"rules.json", "synthesis_info.json"});
    run.manifest(outputs);
    std::cout << "rules written to "
              << (run.out_dir / "rules.json").string() << "\n";
    return 0;
  }

  if (cmd == verify) {
    RulesPtr rules = rules_from_args(inst, rules_path, sigma_arg, run, &outputs);
    char* report = nullptr;
    const int rc = pm_verify(inst, rules.get(), multi_period ? 1 : 0, &report);
    if (rc != PM_OK) fail(rc);
    const std::string rep = take(report);
    write_file(run.out_dir / "deviation_report.json", rep);
    outputs.push_back("deviation_report.json");
    run.manifest(outputs);
    const double max_gain = json::parse(rep)["max_gain"].get<double>();
    std::cout << "max deviation gain: " << max_gain << "\n";
    if (fail_on_gain >= 0.0 && max_gain > fail_on_gain) {
      std::cerr << "gain exceeds --fail-on-gain threshold\n";
      return 1;
    }
    return 0;
  }

  if (cmd == certify) {
    RulesPtr rules = rules_from_args(inst, rules_path, sigma_arg, run, &outputs);
    char* cert = nullptr;
    const int rc = pm_certify(inst, rules.get(), &cert);
    if (rc != PM_OK) fail(rc);
    const std::string cj = take(cert);
    write_file(run.out_dir / "certificate.json", cj);
    outputs.push_back("certificate.json");
    run.manifest(outputs);
    std::cout << "verdict: " << json::parse(cj)["certificate"]["verdict"]
              << "\n";
    return 0;
  }

  if (cmd == optimize) {
    std::string cfg;
    if (!config_path.empty()) cfg = read_file(config_path);
    char *result = nullptr, *log = nullptr;
    const int rc = pm_optimize(inst, cfg.empty() ? nullptr : cfg.c_str(),
                               &result, &log);
    if (rc != PM_OK) fail(rc);
    write_file(run.out_dir / "optimization.json", take(result));
    write_file(run.out_dir / "optimizer_log.csv", take(log));
    outputs.insert(outputs.end(), {"optimization.json", "optimizer_log.csv"});
    run.manifest(outputs);
    std::cout << "optimization written to " << run.out_dir.string() << "\n";
    return 0;
  }

  if (cmd == simulate) {
    RulesPtr rules = rules_from_args(inst, rules_path, sigma_arg, run, &outputs);
    std::string kappa_json;
    if (!kappa_arg.empty() && kappa_arg != "auto")
      kappa_json = read_file(kappa_arg);
    char *summary = nullptr, *traces = nullptr;
    const int rc = pm_simulate(
        inst, rules.get(), kappa_json.empty() ? nullptr : kappa_json.c_str(),
        trials, run.seed, static_cast<int>(keep_traces), &summary,
        keep_traces > 0 ? &traces : nullptr);
    if (rc != PM_OK) fail(rc);
    write_file(run.out_dir / "summary.json", take(summary));
    outputs.push_back("summary.json");
    if (keep_traces > 0) {
      write_file(run.out_dir / "traces.csv", take(traces));
      outputs.push_back("traces.csv");
    }
    run.manifest(outputs);
    std::cout << "simulation written to " << run.out_dir.string() << "\n";
    return 0;
  }

  return 2;
}
