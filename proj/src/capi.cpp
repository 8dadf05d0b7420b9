#include "raremeta/raremeta.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <new>
#include <string>
#include <vector>

#include "raremeta/dataset.hpp"
#include "raremeta/error.hpp"
#include "raremeta/inference.hpp"
#include "raremeta/mle.hpp"
#include "raremeta/priors.hpp"
#include "raremeta/sampler.hpp"
#include "raremeta/simulation.hpp"

struct rm_dataset {
  raremeta::MetaDataset value;
};

struct rm_posterior {
  raremeta::PosteriorDraws draws;
};

struct rm_mle {
  raremeta::MleResult result;
};

struct rm_report {
  raremeta::ScenarioReport report;
};

namespace {

thread_local std::string g_last_error;

rm_status fail(rm_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

rm_status to_status(raremeta::ErrorCode code) {
  switch (code) {
    case raremeta::ErrorCode::invalid_argument: return RM_ERR_INVALID_ARGUMENT;
    case raremeta::ErrorCode::parse: return RM_ERR_PARSE;
    case raremeta::ErrorCode::dimension_mismatch: return RM_ERR_DIMENSION;
    case raremeta::ErrorCode::sampler_failure: return RM_ERR_SAMPLER;
    case raremeta::ErrorCode::io: return RM_ERR_IO;
  }
  return RM_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
rm_status guarded(F&& body) {
  try {
    body();
    return RM_OK;
  } catch (const raremeta::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(RM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(RM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(RM_ERR_INTERNAL, "unknown error");
  }
}

#define RM_REQUIRE(ptr)                                                 \
  do {                                                                  \
    if ((ptr) == nullptr) return fail(RM_ERR_INVALID_ARGUMENT, #ptr " is null"); \
  } while (0)

raremeta::PriorConfig to_cpp(const rm_prior_config& c) {
  raremeta::PriorConfig p;
  p.mu = {c.mu_mean, c.mu_sd};
  p.theta = {c.theta_mean, c.theta_sd};
  p.tau_dist = static_cast<raremeta::TauPrior>(c.tau_dist);
  p.tau_scale = c.tau_scale;
  if (c.tau_dist < RM_TAU_HALF_NORMAL || c.tau_dist > RM_TAU_HALF_CAUCHY) {
    raremeta::throw_invalid("unknown tau prior code " + std::to_string(c.tau_dist));
  }
  return p;
}

rm_prior_config to_c(const raremeta::PriorConfig& p) {
  return {p.mu.mean, p.mu.sd, p.theta.mean, p.theta.sd, static_cast<rm_tau_prior>(p.tau_dist),
          p.tau_scale};
}

raremeta::SamplerConfig to_cpp(const rm_sampler_config& c) {
  raremeta::SamplerConfig s;
  s.chains = c.chains;
  s.iterations = c.iterations;
  s.warmup = c.warmup;
  s.seed = c.seed;
  s.target_acceptance = c.target_acceptance;
  s.max_tree_depth = c.max_tree_depth;
  s.parallel_chains = c.parallel_chains != 0;
  return s;
}

rm_sampler_config to_c(const raremeta::SamplerConfig& s) {
  return {static_cast<uint32_t>(s.chains), static_cast<uint32_t>(s.iterations),
          static_cast<uint32_t>(s.warmup), s.seed, s.target_acceptance, s.max_tree_depth,
          s.parallel_chains ? 1 : 0};
}

raremeta::ScenarioSpec to_cpp(const rm_scenario_spec& c) {
  raremeta::ScenarioSpec s;
  s.scenario_id = c.scenario_id;
  s.k = c.k;
  s.theta_true = c.theta_true;
  s.tau_true = c.tau_true;
  s.baseline_low = c.baseline_low;
  s.baseline_high = c.baseline_high;
  s.size_meanlog = c.size_meanlog;
  s.size_sdlog = c.size_sdlog;
  s.replications = c.replications;
  s.seed = c.seed;
  return s;
}

rm_scenario_spec to_c(const raremeta::ScenarioSpec& s) {
  return {s.scenario_id, static_cast<uint32_t>(s.k), s.theta_true, s.tau_true, s.baseline_low,
          s.baseline_high, s.size_meanlog, s.size_sdlog, static_cast<uint32_t>(s.replications),
          s.seed};
}

rm_effect_summary to_c(const raremeta::EffectSummary& s) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rm_effect_summary out{};
  out.method = static_cast<rm_method>(s.method);
  out.point_log_or = s.point_log_or;
  out.point_or = s.point_or;
  out.tau_hat = s.tau_hat;
  out.has_interval = s.has_interval ? 1 : 0;
  out.low_log_or = s.has_interval ? s.interval_log_or.low : nan;
  out.high_log_or = s.has_interval ? s.interval_log_or.high : nan;
  out.low_or = s.has_interval ? s.interval_or.low : nan;
  out.high_or = s.has_interval ? s.interval_or.high : nan;
  return out;
}

rm_status copy_out(const std::vector<double>& values, double* out, size_t capacity) {
  if (capacity < values.size()) {
    return fail(RM_ERR_BUFFER_TOO_SMALL,
                "buffer holds " + std::to_string(capacity) + " values, need " +
                    std::to_string(values.size()));
  }
  std::copy(values.begin(), values.end(), out);
  return RM_OK;
}

}  // namespace

extern "C" {

const char* rm_version(void) { return RAREMETA_VERSION; }

const char* rm_last_error(void) { return g_last_error.c_str(); }

const char* rm_status_name(rm_status status) {
  switch (status) {
    case RM_OK: return "ok";
    case RM_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case RM_ERR_PARSE: return "parse-error";
    case RM_ERR_DIMENSION: return "dimension-mismatch";
    case RM_ERR_SAMPLER: return "sampler-failure";
    case RM_ERR_IO: return "io-error";
    case RM_ERR_BUFFER_TOO_SMALL: return "buffer-too-small";
    case RM_ERR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* rm_method_name(rm_method method) {
  return raremeta::to_string(static_cast<raremeta::Method>(method));
}

rm_status rm_method_parse(const char* name, rm_method* out) {
  RM_REQUIRE(name);
  RM_REQUIRE(out);
  return guarded([&] { *out = static_cast<rm_method>(raremeta::parse_method(name)); });
}

const char* rm_tau_prior_name(rm_tau_prior dist) {
  return raremeta::to_string(static_cast<raremeta::TauPrior>(dist));
}

rm_status rm_tau_prior_parse(const char* name, rm_tau_prior* out) {
  RM_REQUIRE(name);
  RM_REQUIRE(out);
  return guarded([&] { *out = static_cast<rm_tau_prior>(raremeta::parse_tau_prior(name)); });
}

const char* rm_grid_kind_name(rm_grid_kind kind) {
  return raremeta::to_string(static_cast<raremeta::GridKind>(kind));
}

rm_status rm_grid_kind_parse(const char* name, rm_grid_kind* out) {
  RM_REQUIRE(name);
  RM_REQUIRE(out);
  return guarded([&] { *out = static_cast<rm_grid_kind>(raremeta::parse_grid_kind(name)); });
}

rm_status rm_dataset_read_csv(const char* path, rm_dataset** out) {
  RM_REQUIRE(path);
  RM_REQUIRE(out);
  return guarded([&] { *out = new rm_dataset{raremeta::read_dataset_csv(path)}; });
}

rm_status rm_dataset_parse_csv(const char* text, rm_dataset** out) {
  RM_REQUIRE(text);
  RM_REQUIRE(out);
  return guarded([&] { *out = new rm_dataset{raremeta::parse_dataset_csv(text)}; });
}

rm_status rm_dataset_create(size_t studies, const char* const* labels, const int64_t* r_ctrl,
                            const int64_t* n_ctrl, const int64_t* r_trt, const int64_t* n_trt,
                            rm_dataset** out) {
  RM_REQUIRE(out);
  if (studies > 0) {
    RM_REQUIRE(labels);
    RM_REQUIRE(r_ctrl);
    RM_REQUIRE(n_ctrl);
    RM_REQUIRE(r_trt);
    RM_REQUIRE(n_trt);
  }
  return guarded([&] {
    std::vector<raremeta::Study> list;
    for (size_t i = 0; i < studies; ++i) {
      if (labels[i] == nullptr) raremeta::throw_invalid("study label is null");
      list.push_back({labels[i], {r_ctrl[i], n_ctrl[i]}, {r_trt[i], n_trt[i]}});
    }
    *out = new rm_dataset{raremeta::MetaDataset(std::move(list))};
  });
}

size_t rm_dataset_size(const rm_dataset* data) { return data ? data->value.size() : 0; }

const char* rm_dataset_label(const rm_dataset* data, size_t index) {
  if (data == nullptr || index >= data->value.size()) return nullptr;
  return data->value[index].label.c_str();
}

rm_status rm_dataset_study(const rm_dataset* data, size_t index, int64_t counts[4]) {
  RM_REQUIRE(data);
  RM_REQUIRE(counts);
  if (index >= data->value.size()) return fail(RM_ERR_INVALID_ARGUMENT, "study index out of range");
  const auto& s = data->value[index];
  counts[0] = s.control.events;
  counts[1] = s.control.total;
  counts[2] = s.experimental.events;
  counts[3] = s.experimental.total;
  return RM_OK;
}

void rm_dataset_free(rm_dataset* data) { delete data; }

void rm_prior_config_default(rm_prior_config* out) {
  if (out) *out = to_c(raremeta::default_priors());
}

rm_status rm_prior_config_wip(double delta, rm_prior_config* out) {
  RM_REQUIRE(out);
  return guarded([&] { *out = to_c(raremeta::wip_priors(delta)); });
}

void rm_prior_config_vague(rm_prior_config* out) {
  if (out) *out = to_c(raremeta::vague_priors());
}

rm_status rm_wip_sigma(double delta, double* sigma) {
  RM_REQUIRE(sigma);
  return guarded([&] { *sigma = raremeta::wip_sigma(delta); });
}

rm_status rm_unit_information_ess(double sigma, double* ess) {
  RM_REQUIRE(ess);
  return guarded([&] { *ess = raremeta::unit_information_ess(sigma); });
}

rm_status rm_tau_prior_quantile(rm_tau_prior dist, double scale, double prob, double* out) {
  RM_REQUIRE(out);
  return guarded([&] {
    if (dist < RM_TAU_HALF_NORMAL || dist > RM_TAU_HALF_CAUCHY) {
      raremeta::throw_invalid("unknown tau prior code");
    }
    *out = raremeta::tau_prior_quantile(static_cast<raremeta::TauPrior>(dist), scale, prob);
  });
}

void rm_sampler_config_default(rm_sampler_config* out) {
  if (out) *out = to_c(raremeta::SamplerConfig{});
}

rm_status rm_fit_bayes(const rm_dataset* data, const rm_prior_config* priors,
                       const rm_sampler_config* sampler, rm_posterior** out) {
  RM_REQUIRE(data);
  RM_REQUIRE(priors);
  RM_REQUIRE(sampler);
  RM_REQUIRE(out);
  return guarded([&] {
    *out = new rm_posterior{raremeta::run_chains(data->value, to_cpp(*priors), to_cpp(*sampler))};
  });
}

rm_status rm_posterior_summary(const rm_posterior* fit, rm_method method, double mass,
                               rm_effect_summary* out) {
  RM_REQUIRE(fit);
  RM_REQUIRE(out);
  return guarded([&] {
    *out = to_c(raremeta::summarize_fit(fit->draws, static_cast<raremeta::Method>(method), mass));
  });
}

rm_status rm_posterior_diagnostics_get(const rm_posterior* fit, rm_posterior_diagnostics* out) {
  RM_REQUIRE(fit);
  RM_REQUIRE(out);
  double accept = 0.0;
  for (const auto& c : fit->draws.chains) accept += c.mean_accept_stat;
  if (!fit->draws.chains.empty()) accept /= static_cast<double>(fit->draws.chains.size());
  *out = {fit->draws.total_draws(), fit->draws.divergences, fit->draws.rhat_theta,
          fit->draws.rhat_tau, accept};
  return RM_OK;
}

rm_status rm_posterior_theta_draws(const rm_posterior* fit, double* out, size_t capacity) {
  RM_REQUIRE(fit);
  RM_REQUIRE(out);
  return copy_out(fit->draws.merged_theta(), out, capacity);
}

rm_status rm_posterior_tau_draws(const rm_posterior* fit, double* out, size_t capacity) {
  RM_REQUIRE(fit);
  RM_REQUIRE(out);
  return copy_out(fit->draws.merged_tau(), out, capacity);
}

void rm_posterior_free(rm_posterior* fit) { delete fit; }

rm_status rm_fit_mle(const rm_dataset* data, uint32_t gh_order, rm_mle** out) {
  RM_REQUIRE(data);
  RM_REQUIRE(out);
  return guarded([&] {
    raremeta::MleOptions options;
    options.gh_order = gh_order;
    if (gh_order < 1) raremeta::throw_invalid("Gauss-Hermite order must be >= 1");
    *out = new rm_mle{raremeta::fit_mle(data->value, options)};
  });
}

rm_status rm_mle_summary_get(const rm_mle* fit, rm_mle_summary* out) {
  RM_REQUIRE(fit);
  RM_REQUIRE(out);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const auto& r = fit->result;
  out->theta_hat = r.theta_hat;
  out->tau_hat = r.tau_hat;
  out->se_theta = r.se_theta.value_or(nan);
  out->ci_low = r.ci_95 ? r.ci_95->first : nan;
  out->ci_high = r.ci_95 ? r.ci_95->second : nan;
  out->log_likelihood = r.log_likelihood;
  out->converged = r.converged ? 1 : 0;
  out->failure_reason = raremeta::to_string(r.failure_reason);
  out->gh_order = static_cast<uint32_t>(r.gh_order);
  out->warning_count = static_cast<uint32_t>(r.warnings.size());
  return RM_OK;
}

rm_status rm_mle_effect_summary(const rm_mle* fit, rm_effect_summary* out) {
  RM_REQUIRE(fit);
  RM_REQUIRE(out);
  *out = to_c(raremeta::summarize_fit(fit->result));
  return RM_OK;
}

rm_status rm_mle_mu_hat(const rm_mle* fit, double* out, size_t capacity) {
  RM_REQUIRE(fit);
  RM_REQUIRE(out);
  const auto& mu = fit->result.mu_hat;
  return copy_out(std::vector<double>(mu.data(), mu.data() + mu.size()), out, capacity);
}

const char* rm_mle_warning(const rm_mle* fit, size_t index) {
  if (fit == nullptr || index >= fit->result.warnings.size()) return nullptr;
  return fit->result.warnings[index].c_str();
}

void rm_mle_free(rm_mle* fit) { delete fit; }

rm_status rm_marginal_log_likelihood(const rm_dataset* data, const double* mu, double theta,
                                     double tau, uint32_t gh_order, double* out) {
  RM_REQUIRE(data);
  RM_REQUIRE(mu);
  RM_REQUIRE(out);
  return guarded([&] {
    const Eigen::Map<const Eigen::VectorXd> mu_vec(mu, static_cast<Eigen::Index>(data->value.size()));
    *out = raremeta::marginal_log_likelihood(data->value, mu_vec, theta, tau, gh_order);
  });
}

rm_status rm_hdi(const double* samples, size_t n, double mass, double* low, double* high) {
  RM_REQUIRE(low);
  RM_REQUIRE(high);
  if (n > 0) RM_REQUIRE(samples);
  return guarded([&] {
    const auto interval = raremeta::hdi(std::span<const double>(samples, n), mass);
    *low = interval.low;
    *high = interval.high;
  });
}

rm_status rm_forest_row_get(const rm_dataset* data, size_t index, rm_forest_row* out) {
  RM_REQUIRE(data);
  RM_REQUIRE(out);
  if (index >= data->value.size()) return fail(RM_ERR_INVALID_ARGUMENT, "study index out of range");
  return guarded([&] {
    const auto& s = data->value[index];
    const auto row = raremeta::observed_log_or(s.control, s.experimental);
    *out = {row.log_or, row.se, row.ci.low, row.ci.high, row.correction_applied ? 1 : 0};
  });
}

void rm_simulation_options_default(rm_simulation_options* out) {
  if (out == nullptr) return;
  const raremeta::SimulationOptions o;
  out->sampler = to_c(o.sampler);
  out->gh_order = static_cast<uint32_t>(o.gh_order);
  out->delta = o.delta;
  out->threads = static_cast<uint32_t>(o.threads);
}

size_t rm_scenario_grid(rm_grid_kind kind, uint32_t replications, uint64_t seed,
                        rm_scenario_spec* out, size_t capacity) {
  const auto grid =
      raremeta::scenario_grid(static_cast<raremeta::GridKind>(kind), replications, seed);
  for (size_t i = 0; out != nullptr && i < grid.size() && i < capacity; ++i) out[i] = to_c(grid[i]);
  return grid.size();
}

rm_status rm_generate_dataset(const rm_scenario_spec* spec, uint64_t replicate, rm_dataset** out) {
  RM_REQUIRE(spec);
  RM_REQUIRE(out);
  return guarded([&] {
    *out = new rm_dataset{raremeta::generate_dataset(to_cpp(*spec), replicate).data};
  });
}

rm_status rm_zero_fractions(const rm_dataset* data, double* single_zero, double* double_zero) {
  RM_REQUIRE(data);
  RM_REQUIRE(single_zero);
  RM_REQUIRE(double_zero);
  const auto z = raremeta::zero_fractions(data->value);
  *single_zero = z.single_zero;
  *double_zero = z.double_zero;
  return RM_OK;
}

rm_status rm_run_scenario(const rm_scenario_spec* spec, const rm_method* methods,
                          size_t method_count, const rm_simulation_options* options,
                          rm_report** out) {
  RM_REQUIRE(spec);
  RM_REQUIRE(out);
  if (method_count > 0) RM_REQUIRE(methods);
  return guarded([&] {
    std::vector<raremeta::Method> list;
    for (size_t i = 0; i < method_count; ++i) {
      if (methods[i] < RM_METHOD_WIP || methods[i] > RM_METHOD_MLE) {
        raremeta::throw_invalid("unknown method code");
      }
      list.push_back(static_cast<raremeta::Method>(methods[i]));
    }
    raremeta::SimulationOptions o;
    if (options != nullptr) {
      o.sampler = to_cpp(options->sampler);
      o.gh_order = options->gh_order;
      o.delta = options->delta;
      o.threads = options->threads;
    }
    *out = new rm_report{raremeta::run_scenario(to_cpp(*spec), list, o)};
  });
}

size_t rm_report_method_count(const rm_report* report) {
  return report ? report->report.methods.size() : 0;
}

rm_status rm_report_method(const rm_report* report, size_t index, rm_method_metrics* out) {
  RM_REQUIRE(report);
  RM_REQUIRE(out);
  if (index >= report->report.methods.size()) {
    return fail(RM_ERR_INVALID_ARGUMENT, "method index out of range");
  }
  const auto& m = report->report.methods[index];
  *out = {static_cast<rm_method>(m.method), m.replications_used, m.failures, m.bias_theta,
          m.coverage, m.mean_interval_length, m.bias_tau};
  return RM_OK;
}

rm_status rm_report_summary_get(const rm_report* report, rm_report_summary* out) {
  RM_REQUIRE(report);
  RM_REQUIRE(out);
  const auto& r = report->report;
  *out = {r.fraction_single_zero, r.fraction_double_zero,
          r.mle_failure_fraction.value_or(std::numeric_limits<double>::quiet_NaN())};
  return RM_OK;
}

void rm_report_free(rm_report* report) { delete report; }

}  // extern "C"
