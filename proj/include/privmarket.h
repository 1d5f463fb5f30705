/* SPDX-License-Identifier: Apache-2.0
 *
 * privmarket — dynamic data-privacy market engine.
 *
 * C API over the solver core: opaque handles, integer status codes, and
 * JSON/CSV payloads returned as malloc'd strings (release them with
 * pm_string_free). All functions are safe to call from multiple threads as
 * long as each handle is used from one thread at a time; the last-error
 * message is thread local.
 */
#ifndef PRIVMARKET_H
#define PRIVMARKET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; the CLI maps them one-to-one onto exit codes. */
#define PM_OK 0
#define PM_E_SEMANTIC 1   /* validation failure, infeasibility */
#define PM_E_PARSE 2      /* malformed file / JSON / arguments */
#define PM_E_CAPACITY 3   /* request beyond the supported desk scale */
#define PM_E_INTERNAL 5

typedef struct pm_instance_s pm_instance;
typedef struct pm_rules_s pm_rules;

const char* pm_version(void);

/* Message for the most recent failure on this thread ("" if none). */
const char* pm_last_error(void);

void pm_string_free(char* s);

/* ---- instances ------------------------------------------------------- */

int pm_instance_load_file(const char* path, pm_instance** out);
int pm_instance_load_json(const char* json_text, pm_instance** out);
void pm_instance_free(pm_instance* inst);

/* Kernel assumption checks (full support, FOSD). PM_OK when clean,
 * PM_E_SEMANTIC when violations are found; *report_json gets the details
 * either way. */
int pm_instance_validate(const pm_instance* inst, char** report_json);

/* ---- mechanism rules -------------------------------------------------- */

int pm_rules_load_file(const pm_instance* inst, const char* path,
                       pm_rules** out);
int pm_rules_load_json(const pm_instance* inst, const char* json_text,
                       pm_rules** out);
int pm_rules_to_json(const pm_rules* rules, char** out_json);
void pm_rules_free(pm_rules* rules);

/* Synthesize beta/theta/rho from an assignment rule. sigma_json follows the
 * sigma-spec schema ({"family":"separable","eps":[...]} etc.);
 * kappa_json optionally pins the threshold profile
 * ([{"kl":[...,null,...]}...]), otherwise the equilibrium fixed point is
 * used. info_json reports thresholds, convergence and warnings. */
int pm_rules_synthesize(const pm_instance* inst, const char* sigma_json,
                        const char* kappa_json, pm_rules** out,
                        char** info_json);

/* ---- pipeline commands ------------------------------------------------ */

/* Backward induction under the rules (threshold/belief fixed point).
 * solution_json gets thresholds and diagnostics; solution_csv the full
 * value-function table. Either output pointer may be NULL. */
int pm_solve(const pm_instance* inst, const pm_rules* rules,
             char** solution_json, char** solution_csv);

/* Brute-force deviation search. multi_period != 0 also enumerates
 * state-contingent multi-period strategies (desk scale only). */
int pm_verify(const pm_instance* inst, const pm_rules* rules,
              int multi_period, char** report_json);

/* delta-DIC certificate plus the sufficient/necessary condition margins for
 * the mechanism synthesized from the rules' assignment table. */
int pm_certify(const pm_instance* inst, const pm_rules* rules,
               char** certificate_json);

/* Relaxed-design search. config_json overrides the instance's optimizer
 * block. log_csv may be NULL. */
int pm_optimize(const pm_instance* inst, const char* config_json,
                char** result_json, char** log_csv);

/* Seeded Monte Carlo. kappa_json as in pm_rules_synthesize (NULL = solved
 * fixed point). traces_csv receives up to keep_traces concatenated traces
 * and may be NULL. */
int pm_simulate(const pm_instance* inst, const pm_rules* rules,
                const char* kappa_json, uint64_t trials, uint64_t seed,
                int keep_traces, char** summary_json, char** traces_csv);

/* ---- epsilon arithmetic ------------------------------------------------ */

int pm_compose_epsilons(const double* eps, size_t count, double eps_cap,
                        double* out_total);
int pm_indistinguishability_factor(double eps, long hamming_distance,
                                   double* out_factor);
/* *out_period = first period whose cumulative loss reaches the budget,
 * or -1 when the budget is never reached. */
int pm_commitment_period(const double* eps, size_t count, double eps_cap,
                         double budget, long* out_period);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PRIVMARKET_H */
