#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "raremeta/raremeta.h"

namespace {

rm_dataset* load(const char* name) {
  rm_dataset* d = nullptr;
  const std::string path = std::string(RAREMETA_DATA_DIR) + "/" + name;
  REQUIRE(rm_dataset_read_csv(path.c_str(), &d) == RM_OK);
  return d;
}

}  // namespace

TEST_CASE("dataset handles") {
  rm_dataset* d = load("crins_ptld.csv");
  CHECK(rm_dataset_size(d) == 3);
  CHECK(std::string(rm_dataset_label(d, 0)) == "Schuller");
  CHECK(rm_dataset_label(d, 3) == nullptr);
  int64_t c[4];
  REQUIRE(rm_dataset_study(d, 1, c) == RM_OK);
  CHECK(c[0] == 0);
  CHECK(c[1] == 54);
  CHECK(c[2] == 1);
  CHECK(c[3] == 54);
  CHECK(rm_dataset_study(d, 9, c) == RM_ERR_INVALID_ARGUMENT);
  double single = 0, both = 0;
  REQUIRE(rm_zero_fractions(d, &single, &both) == RM_OK);
  CHECK(single == doctest::Approx(1.0 / 3.0));
  rm_forest_row row{};
  REQUIRE(rm_forest_row_get(d, 1, &row) == RM_OK);
  CHECK(row.log_or == doctest::Approx(1.1172).epsilon(1e-4));
  CHECK(row.correction_applied == 1);
  rm_dataset_free(d);
}

TEST_CASE("error reporting") {
  rm_dataset* d = nullptr;
  CHECK(rm_dataset_parse_csv("study,r_ctrl,n_ctrl,r_trt,n_trt\na,5,4,1,1\n", &d) == RM_ERR_PARSE);
  CHECK(d == nullptr);
  CHECK(std::string(rm_last_error()).find("events <= total") != std::string::npos);
  CHECK(rm_dataset_read_csv("/no/such/file.csv", &d) == RM_ERR_IO);
  CHECK(rm_dataset_read_csv(nullptr, &d) == RM_ERR_INVALID_ARGUMENT);
  double s = 0;
  CHECK(rm_wip_sigma(1.0, &s) == RM_ERR_INVALID_ARGUMENT);
  CHECK(std::string(rm_status_name(RM_ERR_SAMPLER)) == "sampler-failure");
  rm_method m{};
  CHECK(rm_method_parse("bogus", &m) == RM_ERR_INVALID_ARGUMENT);
  REQUIRE(rm_method_parse("vague", &m) == RM_OK);
  CHECK(m == RM_METHOD_VAGUE);
  CHECK(std::strlen(rm_version()) > 0);
}

TEST_CASE("dataset from arrays") {
  const char* labels[] = {"a", "b"};
  const int64_t r0[] = {1, 0}, n0[] = {10, 12}, r1[] = {2, 0}, n1[] = {11, 13};
  rm_dataset* d = nullptr;
  REQUIRE(rm_dataset_create(2, labels, r0, n0, r1, n1, &d) == RM_OK);
  CHECK(rm_dataset_size(d) == 2);
  rm_dataset_free(d);
  const char* dup[] = {"a", "a"};
  CHECK(rm_dataset_create(2, dup, r0, n0, r1, n1, &d) == RM_ERR_INVALID_ARGUMENT);
  CHECK(rm_dataset_create(0, nullptr, nullptr, nullptr, nullptr, nullptr, &d) ==
        RM_ERR_INVALID_ARGUMENT);
}

TEST_CASE("priors through the c api") {
  double sigma = 0, ess = 0, q = 0;
  REQUIRE(rm_wip_sigma(250.0, &sigma) == RM_OK);
  REQUIRE(rm_unit_information_ess(sigma, &ess) == RM_OK);
  CHECK(std::abs(ess - 2.0) < 0.05);
  REQUIRE(rm_tau_prior_quantile(RM_TAU_HALF_NORMAL, 0.5, 0.5, &q) == RM_OK);
  CHECK(std::abs(q - 0.337) < 1e-3);
  rm_prior_config p{};
  rm_prior_config_vague(&p);
  CHECK(p.theta_sd == 100.0);
  CHECK(rm_prior_config_wip(0.5, &p) == RM_ERR_INVALID_ARGUMENT);
}

TEST_CASE("bayesian and mle fits") {
  rm_dataset* d = load("crins_death.csv");
  rm_prior_config p{};
  REQUIRE(rm_prior_config_wip(250.0, &p) == RM_OK);
  rm_sampler_config c{};
  rm_sampler_config_default(&c);
  c.iterations = 600;
  c.warmup = 300;
  c.seed = 3;
  rm_posterior* fit = nullptr;
  REQUIRE(rm_fit_bayes(d, &p, &c, &fit) == RM_OK);
  rm_posterior_diagnostics diag{};
  REQUIRE(rm_posterior_diagnostics_get(fit, &diag) == RM_OK);
  CHECK(diag.draws == 1200);
  std::vector<double> theta(diag.draws);
  CHECK(rm_posterior_theta_draws(fit, theta.data(), 10) == RM_ERR_BUFFER_TOO_SMALL);
  REQUIRE(rm_posterior_theta_draws(fit, theta.data(), theta.size()) == RM_OK);
  double lo = 0, hi = 0;
  REQUIRE(rm_hdi(theta.data(), theta.size(), 0.95, &lo, &hi) == RM_OK);
  rm_effect_summary s{};
  REQUIRE(rm_posterior_summary(fit, RM_METHOD_WIP, 0.95, &s) == RM_OK);
  CHECK(s.low_log_or == lo);
  CHECK(s.high_log_or == hi);
  CHECK(s.point_or == doctest::Approx(std::exp(s.point_log_or)));
  rm_posterior_free(fit);

  c.warmup = 600;
  CHECK(rm_fit_bayes(d, &p, &c, &fit) == RM_ERR_INVALID_ARGUMENT);

  rm_mle* mle = nullptr;
  REQUIRE(rm_fit_mle(d, 7, &mle) == RM_OK);
  rm_mle_summary ms{};
  REQUIRE(rm_mle_summary_get(mle, &ms) == RM_OK);
  CHECK(ms.converged == 1);
  CHECK(std::string(ms.failure_reason) == "none");
  CHECK(std::abs(ms.tau_hat) <= 0.01);
  CHECK(ms.ci_high - ms.theta_hat == doctest::Approx(1.96 * ms.se_theta));
  double mu[4];
  REQUIRE(rm_mle_mu_hat(mle, mu, 4) == RM_OK);
  double ll = 0;
  REQUIRE(rm_marginal_log_likelihood(d, mu, ms.theta_hat, ms.tau_hat, 7, &ll) == RM_OK);
  CHECK(ll == doctest::Approx(ms.log_likelihood).epsilon(1e-12));
  rm_mle_free(mle);
  rm_dataset_free(d);
}

TEST_CASE("simulation through the c api") {
  const size_t n = rm_scenario_grid(RM_GRID_RARE, 4, 9, nullptr, 0);
  REQUIRE(n == 39);
  std::vector<rm_scenario_spec> grid(n);
  rm_scenario_grid(RM_GRID_RARE, 4, 9, grid.data(), grid.size());
  rm_dataset* d = nullptr;
  REQUIRE(rm_generate_dataset(&grid[0], 0, &d) == RM_OK);
  CHECK(rm_dataset_size(d) == grid[0].k);
  rm_dataset_free(d);

  rm_simulation_options opt{};
  rm_simulation_options_default(&opt);
  CHECK(opt.sampler.chains == 2);
  opt.sampler.iterations = 200;
  opt.sampler.warmup = 100;
  const rm_method methods[] = {RM_METHOD_WIP, RM_METHOD_MLE};
  rm_report* report = nullptr;
  REQUIRE(rm_run_scenario(&grid[20], methods, 2, &opt, &report) == RM_OK);
  CHECK(rm_report_method_count(report) == 2);
  rm_method_metrics m{};
  REQUIRE(rm_report_method(report, 1, &m) == RM_OK);
  CHECK(m.method == RM_METHOD_MLE);
  CHECK(m.replications_used + m.failures == 4);
  rm_report_summary sum{};
  REQUIRE(rm_report_summary_get(report, &sum) == RM_OK);
  CHECK(std::isfinite(sum.mle_failure_fraction));
  rm_report_free(report);
}
