/*
 * raremeta C interface.
 *
 * Every fallible call returns an rm_status; on failure a description of the
 * problem is available from rm_last_error() on the same thread until the next
 * failing call. Objects are opaque handles created by rm_* functions and
 * released with the matching rm_*_free. Handles are immutable after creation
 * and may be shared between threads.
 */
#ifndef RAREMETA_H
#define RAREMETA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define RM_API __declspec(dllexport)
#else
#  define RM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rm_status {
  RM_OK = 0,
  RM_ERR_INVALID_ARGUMENT = 1,
  RM_ERR_PARSE = 2,
  RM_ERR_DIMENSION = 3,
  RM_ERR_SAMPLER = 4,
  RM_ERR_IO = 5,
  RM_ERR_BUFFER_TOO_SMALL = 6,
  RM_ERR_INTERNAL = 99
} rm_status;

typedef enum rm_tau_prior {
  RM_TAU_HALF_NORMAL = 1,
  RM_TAU_UNIFORM = 2,
  RM_TAU_HALF_CAUCHY = 3
} rm_tau_prior;

typedef enum rm_method { RM_METHOD_WIP = 0, RM_METHOD_VAGUE = 1, RM_METHOD_MLE = 2 } rm_method;

typedef enum rm_grid_kind { RM_GRID_RARE = 0, RM_GRID_HIGH_BASELINE = 1 } rm_grid_kind;

typedef struct rm_dataset rm_dataset;
typedef struct rm_posterior rm_posterior;
typedef struct rm_mle rm_mle;
typedef struct rm_report rm_report;

RM_API const char* rm_version(void);
RM_API const char* rm_last_error(void);
RM_API const char* rm_status_name(rm_status status);

RM_API const char* rm_method_name(rm_method method);
RM_API rm_status rm_method_parse(const char* name, rm_method* out);
RM_API const char* rm_tau_prior_name(rm_tau_prior dist);
RM_API rm_status rm_tau_prior_parse(const char* name, rm_tau_prior* out);
RM_API const char* rm_grid_kind_name(rm_grid_kind kind);
RM_API rm_status rm_grid_kind_parse(const char* name, rm_grid_kind* out);

/* ---- datasets ---------------------------------------------------------- */

/* CSV with header study,r_ctrl,n_ctrl,r_trt,n_trt. */
RM_API rm_status rm_dataset_read_csv(const char* path, rm_dataset** out);
RM_API rm_status rm_dataset_parse_csv(const char* text, rm_dataset** out);
RM_API rm_status rm_dataset_create(size_t studies, const char* const* labels, const int64_t* r_ctrl,
                                   const int64_t* n_ctrl, const int64_t* r_trt,
                                   const int64_t* n_trt, rm_dataset** out);
RM_API size_t rm_dataset_size(const rm_dataset* data);
/* NULL when out of range. */
RM_API const char* rm_dataset_label(const rm_dataset* data, size_t index);
/* counts = {r_ctrl, n_ctrl, r_trt, n_trt} */
RM_API rm_status rm_dataset_study(const rm_dataset* data, size_t index, int64_t counts[4]);
RM_API void rm_dataset_free(rm_dataset* data);

/* ---- priors ------------------------------------------------------------ */

typedef struct rm_prior_config {
  double mu_mean;
  double mu_sd;
  double theta_mean;
  double theta_sd;
  rm_tau_prior tau_dist;
  double tau_scale;
} rm_prior_config;

RM_API void rm_prior_config_default(rm_prior_config* out);
RM_API rm_status rm_prior_config_wip(double delta, rm_prior_config* out);
RM_API void rm_prior_config_vague(rm_prior_config* out);
RM_API rm_status rm_wip_sigma(double delta, double* sigma);
RM_API rm_status rm_unit_information_ess(double sigma, double* ess);
RM_API rm_status rm_tau_prior_quantile(rm_tau_prior dist, double scale, double prob, double* out);

/* ---- Bayesian fit ------------------------------------------------------ */

typedef struct rm_sampler_config {
  uint32_t chains;
  uint32_t iterations; /* per chain, warmup included */
  uint32_t warmup;
  uint64_t seed;
  double target_acceptance;
  int32_t max_tree_depth;
  int32_t parallel_chains;
} rm_sampler_config;

RM_API void rm_sampler_config_default(rm_sampler_config* out);

typedef struct rm_effect_summary {
  rm_method method;
  double point_log_or;
  double low_log_or;
  double high_log_or;
  double point_or;
  double low_or;
  double high_or;
  double tau_hat;
  int32_t has_interval;
} rm_effect_summary;

typedef struct rm_posterior_diagnostics {
  uint64_t draws;
  uint64_t divergences;
  double rhat_theta;
  double rhat_tau;
  double mean_accept_stat;
} rm_posterior_diagnostics;

RM_API rm_status rm_fit_bayes(const rm_dataset* data, const rm_prior_config* priors,
                              const rm_sampler_config* sampler, rm_posterior** out);
RM_API rm_status rm_posterior_summary(const rm_posterior* fit, rm_method method, double mass,
                                      rm_effect_summary* out);
RM_API rm_status rm_posterior_diagnostics_get(const rm_posterior* fit,
                                              rm_posterior_diagnostics* out);
/* Merged post-warmup draws, chain after chain. */
RM_API rm_status rm_posterior_theta_draws(const rm_posterior* fit, double* out, size_t capacity);
RM_API rm_status rm_posterior_tau_draws(const rm_posterior* fit, double* out, size_t capacity);
RM_API void rm_posterior_free(rm_posterior* fit);

/* ---- maximum likelihood ------------------------------------------------ */

typedef struct rm_mle_summary {
  double theta_hat;
  double tau_hat;
  double se_theta; /* NaN when absent */
  double ci_low;   /* NaN when absent */
  double ci_high;
  double log_likelihood;
  int32_t converged;
  const char* failure_reason; /* static string */
  uint32_t gh_order;
  uint32_t warning_count;
} rm_mle_summary;

RM_API rm_status rm_fit_mle(const rm_dataset* data, uint32_t gh_order, rm_mle** out);
RM_API rm_status rm_mle_summary_get(const rm_mle* fit, rm_mle_summary* out);
RM_API rm_status rm_mle_effect_summary(const rm_mle* fit, rm_effect_summary* out);
RM_API rm_status rm_mle_mu_hat(const rm_mle* fit, double* out, size_t capacity);
/* NULL when out of range; valid for the lifetime of the handle. */
RM_API const char* rm_mle_warning(const rm_mle* fit, size_t index);
RM_API void rm_mle_free(rm_mle* fit);

RM_API rm_status rm_marginal_log_likelihood(const rm_dataset* data, const double* mu, double theta,
                                            double tau, uint32_t gh_order, double* out);

/* ---- summaries --------------------------------------------------------- */

RM_API rm_status rm_hdi(const double* samples, size_t n, double mass, double* low, double* high);

typedef struct rm_forest_row {
  double log_or;
  double se;
  double ci_low;
  double ci_high;
  int32_t correction_applied;
} rm_forest_row;

RM_API rm_status rm_forest_row_get(const rm_dataset* data, size_t index, rm_forest_row* out);

/* ---- simulation -------------------------------------------------------- */

typedef struct rm_scenario_spec {
  uint64_t scenario_id;
  uint32_t k;
  double theta_true;
  double tau_true;
  double baseline_low;
  double baseline_high;
  double size_meanlog;
  double size_sdlog;
  uint32_t replications;
  uint64_t seed;
} rm_scenario_spec;

typedef struct rm_simulation_options {
  rm_sampler_config sampler;
  uint32_t gh_order;
  double delta;
  uint32_t threads; /* 0: one per hardware thread */
} rm_simulation_options;

typedef struct rm_method_metrics {
  rm_method method;
  uint64_t replications_used;
  uint64_t failures;
  double bias_theta;
  double coverage;
  double mean_interval_length;
  double bias_tau;
} rm_method_metrics;

typedef struct rm_report_summary {
  double fraction_single_zero;
  double fraction_double_zero;
  double mle_failure_fraction; /* NaN when MLE was not run */
} rm_report_summary;

RM_API void rm_simulation_options_default(rm_simulation_options* out);
/* Writes up to `capacity` specs and returns the size of the grid. */
RM_API size_t rm_scenario_grid(rm_grid_kind kind, uint32_t replications, uint64_t seed,
                               rm_scenario_spec* out, size_t capacity);
RM_API rm_status rm_generate_dataset(const rm_scenario_spec* spec, uint64_t replicate,
                                     rm_dataset** out);
RM_API rm_status rm_zero_fractions(const rm_dataset* data, double* single_zero,
                                   double* double_zero);
RM_API rm_status rm_run_scenario(const rm_scenario_spec* spec, const rm_method* methods,
                                 size_t method_count, const rm_simulation_options* options,
                                 rm_report** out);
RM_API size_t rm_report_method_count(const rm_report* report);
RM_API rm_status rm_report_method(const rm_report* report, size_t index, rm_method_metrics* out);
RM_API rm_status rm_report_summary_get(const rm_report* report, rm_report_summary* out);
RM_API void rm_report_free(rm_report* report);

#ifdef __cplusplus
}
#endif

#endif /* RAREMETA_H */
