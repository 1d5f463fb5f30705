// SPDX-License-Identifier: Apache-2.0
#include "privmarket.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "buyer.hpp"
#include "io.hpp"
#include "oracle.hpp"

struct pm_instance_s {
  privm::MarketInstance m;
};
struct pm_rules_s {
  privm::MechanismRules r;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const privm::ParseError& e) {
    g_last_error = e.what();
    return PM_E_PARSE;
  } catch (const privm::CapacityError& e) {
    g_last_error = e.what();
    return PM_E_CAPACITY;
  } catch (const privm::ValidationError& e) {
    g_last_error = e.what();
    return PM_E_SEMANTIC;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PM_E_INTERNAL;
  }
}

privm::ThresholdProfile parse_kappa(const privm::MarketInstance& m,
                                    const char* kappa_json) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(kappa_json);
  } catch (const json::exception& e) {
    throw privm::ParseError(std::string("kappa parse error: ") + e.what());
  }
  const json owners = j.is_array() ? j : j.at("owners");
  if (static_cast<int>(owners.size()) != m.n())
    throw privm::ParseError("kappa profile must cover every owner");
  privm::ThresholdProfile p = privm::never_stop_profile(m);
  for (int i = 0; i < m.n(); ++i) {
    const json& kl = owners[i].at("kl");
    if (static_cast<int>(kl.size()) != m.horizon + 1)
      throw privm::ParseError("kappa profile must cover every period");
    for (int t = 0; t <= m.horizon; ++t)
      if (!kl[t].is_null()) p[i].kl[t] = kl[t].get<double>();
  }
  return p;
}

nlohmann::json sim_kappa_info(const privm::ThresholdProfile& p) {
  nlohmann::json owners = nlohmann::json::array();
  for (const auto& o : p) {
    nlohmann::json kl = nlohmann::json::array();
    for (const auto& k : o.kl)
      kl.push_back(k.has_value() ? nlohmann::json(*k) : nlohmann::json());
    owners.push_back({{"kl", kl}});
  }
  return owners;
}

}  // namespace

extern "C" {

const char* pm_version(void) { return privm::kToolVersion; }

const char* pm_last_error(void) { return g_last_error.c_str(); }

void pm_string_free(char* s) { ::free(s); }

int pm_instance_load_file(const char* path, pm_instance** out) {
  return guarded([&] {
    auto* inst = new pm_instance_s{privm::MarketInstance::from_file(path)};
    *out = inst;
    return PM_OK;
  });
}

int pm_instance_load_json(const char* json_text, pm_instance** out) {
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
      throw privm::ParseError(std::string("instance is not valid JSON: ") +
                              e.what());
    }
    *out = new pm_instance_s{privm::MarketInstance::from_json(j)};
    return PM_OK;
  });
}

void pm_instance_free(pm_instance* inst) { delete inst; }

int pm_instance_validate(const pm_instance* inst, char** report_json) {
  return guarded([&] {
    const auto reports = inst->m.validate_kernels();
    bool ok = true;
    for (const auto& r : reports) ok = ok && r.ok();
    if (report_json)
      *report_json =
          dup_string(privm::kernel_reports_to_json(reports).dump(2));
    if (!ok) {
      g_last_error = "kernel assumption violations found";
      return PM_E_SEMANTIC;
    }
    return PM_OK;
  });
}

int pm_rules_load_file(const pm_instance* inst, const char* path,
                       pm_rules** out) {
  return guarded([&] {
    *out = new pm_rules_s{privm::MechanismRules::from_file(inst->m, path)};
    return PM_OK;
  });
}

int pm_rules_load_json(const pm_instance* inst, const char* json_text,
                       pm_rules** out) {
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
      throw privm::ParseError(std::string("rules are not valid JSON: ") +
                              e.what());
    }
    *out = new pm_rules_s{privm::MechanismRules::from_json(inst->m, j)};
    return PM_OK;
  });
}

int pm_rules_to_json(const pm_rules* rules, char** out_json) {
  return guarded([&] {
    *out_json = dup_string(rules->r.to_json().dump(2));
    return PM_OK;
  });
}

void pm_rules_free(pm_rules* rules) { delete rules; }

int pm_rules_synthesize(const pm_instance* inst, const char* sigma_json,
                        const char* kappa_json, pm_rules** out,
                        char** info_json) {
  return guarded([&] {
    nlohmann::json sj;
    try {
      sj = nlohmann::json::parse(sigma_json);
    } catch (const nlohmann::json::exception& e) {
      throw privm::ParseError(std::string("sigma is not valid JSON: ") +
                              e.what());
    }
    const auto spec = privm::SigmaSpec::from_json(inst->m, sj);
    const auto sigma = privm::decode_sigma(inst->m, spec);
    std::optional<privm::ThresholdProfile> kappa;
    if (kappa_json) kappa = parse_kappa(inst->m, kappa_json);
    privm::SynthesisResult synth =
        privm::synthesize_mechanism(inst->m, sigma, kappa);
    *out = new pm_rules_s{synth.rules};
    if (info_json) {
      nlohmann::json info{{"converged", synth.converged},
                          {"iterations", synth.iterations},
                          {"warnings", synth.warnings},
                          {"kappa", sim_kappa_info(synth.thresholds)}};
      *info_json = dup_string(info.dump(2));
    }
    return PM_OK;
  });
}

int pm_solve(const pm_instance* inst, const pm_rules* rules,
             char** solution_json, char** solution_csv) {
  return guarded([&] {
    privm::BeliefModel beliefs;
    privm::ValueSolution sol =
        privm::solve_fixed_point(inst->m, rules->r, &beliefs);
    if (solution_json)
      *solution_json = dup_string(
          privm::thresholds_to_json(inst->m, sol, beliefs).dump(2));
    if (solution_csv)
      *solution_csv = dup_string(privm::solution_to_csv(inst->m, sol));
    return PM_OK;
  });
}

int pm_verify(const pm_instance* inst, const pm_rules* rules,
              int multi_period, char** report_json) {
  return guarded([&] {
    privm::OracleOptions opts;
    opts.multi_period = multi_period != 0;
    const auto report = privm::max_deviation_gain(inst->m, rules->r, opts);
    if (report_json) *report_json = dup_string(report.to_json().dump(2));
    return PM_OK;
  });
}

int pm_certify(const pm_instance* inst, const pm_rules* rules,
               char** certificate_json) {
  return guarded([&] {
    privm::SynthesisResult synth =
        privm::synthesize_mechanism(inst->m, rules->r.sigma);
    const auto cert = privm::delta_dic_certificate(inst->m, synth);
    const auto suff = privm::check_sufficient(inst->m, synth);
    const auto nec = privm::check_necessary(inst->m, synth);
    nlohmann::json j{{"certificate", cert.to_json()},
                     {"sufficient", suff.to_json()},
                     {"necessary", nec.to_json()},
                     {"converged", synth.converged},
                     {"warnings", synth.warnings}};
    if (certificate_json) *certificate_json = dup_string(j.dump(2));
    return PM_OK;
  });
}

int pm_optimize(const pm_instance* inst, const char* config_json,
                char** result_json, char** log_csv) {
  return guarded([&] {
    privm::OptimizerConfig cfg = inst->m.optimizer;
    nlohmann::json spec_json{{"family", cfg.family}};
    if (config_json) {
      nlohmann::json cj;
      try {
        cj = nlohmann::json::parse(config_json);
      } catch (const nlohmann::json::exception& e) {
        throw privm::ParseError(
            std::string("optimizer config is not valid JSON: ") + e.what());
      }
      if (cj.contains("family")) cfg.family = cj["family"].get<std::string>();
      if (cj.contains("starts")) cfg.starts = cj["starts"].get<int>();
      if (cj.contains("sweeps")) cfg.sweeps = cj["sweeps"].get<int>();
      if (cj.contains("seed")) cfg.seed = cj["seed"].get<std::uint64_t>();
      if (cj.contains("tolerance"))
        cfg.tolerance = cj["tolerance"].get<double>();
      if (cj.contains("candidates")) cfg.candidates = cj["candidates"];
    }
    privm::SigmaSpec family;
    if (cfg.family == "separable") {
      family.family = privm::SigmaSpec::Family::Separable;
    } else if (cfg.family == "full-table") {
      family.family = privm::SigmaSpec::Family::FullTable;
    } else if (cfg.family == "candidates") {
      family.family = privm::SigmaSpec::Family::Candidates;
      for (const auto& c : cfg.candidates)
        family.candidates.push_back(
            c.get<std::vector<std::vector<int>>>());
    } else {
      throw privm::ParseError("unknown optimizer family '" + cfg.family + "'");
    }
    const auto result = privm::optimize(inst->m, family, cfg);
    if (result_json) *result_json = dup_string(result.to_json().dump(2));
    if (log_csv)
      *log_csv = dup_string(privm::optimizer_log_to_csv(result.log));
    return PM_OK;
  });
}

int pm_simulate(const pm_instance* inst, const pm_rules* rules,
                const char* kappa_json, uint64_t trials, uint64_t seed,
                int keep_traces, char** summary_json, char** traces_csv) {
  return guarded([&] {
    privm::ThresholdProfile kappa;
    if (kappa_json) {
      kappa = parse_kappa(inst->m, kappa_json);
    } else {
      privm::BeliefModel beliefs;
      privm::ValueSolution sol =
          privm::solve_fixed_point(inst->m, rules->r, &beliefs);
      kappa = privm::collapse_thresholds(inst->m, sol, beliefs);
    }
    const auto stats = privm::monte_carlo(
        inst->m, rules->r, kappa, privm::StrategyOverrides::none(), trials,
        seed, keep_traces);
    if (summary_json) {
      nlohmann::json j = stats.to_json();
      j["kappa"] = sim_kappa_info(kappa);
      j["seed"] = seed;
      *summary_json = dup_string(j.dump(2));
    }
    if (traces_csv) {
      std::string all;
      for (const auto& tr : stats.kept_traces)
        all += privm::trace_to_csv(tr);
      *traces_csv = dup_string(all);
    }
    return PM_OK;
  });
}

int pm_compose_epsilons(const double* eps, size_t count, double eps_cap,
                        double* out_total) {
  return guarded([&] {
    std::vector<double> h(eps, eps + count);
    *out_total = privm::compose_epsilons(h, eps_cap);
    return PM_OK;
  });
}

int pm_indistinguishability_factor(double eps, long hamming_distance,
                                   double* out_factor) {
  return guarded([&] {
    *out_factor = privm::indistinguishability_factor(eps, hamming_distance);
    return PM_OK;
  });
}

int pm_commitment_period(const double* eps, size_t count, double eps_cap,
                         double budget, long* out_period) {
  return guarded([&] {
    std::vector<double> h(eps, eps + count);
    const auto p = privm::commitment_period(h, eps_cap, budget);
    *out_period = p.has_value() ? *p : -1;
    return PM_OK;
  });
}

}  // extern "C"
