#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "raremeta/error.hpp"
#include "raremeta/mle.hpp"
#include "raremeta/model.hpp"

using namespace raremeta;

namespace {

MetaDataset crins_death() {
  return MetaDataset({{"Heffron", {3, 20}, {4, 61}},
                      {"Ganschow", {3, 54}, {1, 54}},
                      {"Spada", {3, 36}, {4, 36}},
                      {"Gras", {3, 34}, {2, 50}}});
}

MetaDataset crins_ptld() {
  return MetaDataset({{"Schuller", {0, 12}, {0, 18}},
                      {"Ganschow", {0, 54}, {1, 54}},
                      {"Spada", {1, 36}, {1, 36}}});
}

double expect(const GaussHermiteRule& r, double (*f)(double)) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * f(r.nodes[i]);
  return s;
}

Eigen::VectorXd random_mu(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(-4.0, 0.0);
  Eigen::VectorXd mu(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < mu.size(); ++i) mu(i) = u(rng);
  return mu;
}

}  // namespace

TEST_CASE("gauss hermite rules") {
  const auto r7 = gh_nodes(7);
  CHECK(r7.nodes.size() == 7);
  CHECK(std::abs(expect(r7, [](double) { return 1.0; }) - 1.0) < 1e-12);
  CHECK(std::abs(expect(r7, [](double z) { return z * z; }) - 1.0) < 1e-12);
  CHECK(std::abs(expect(r7, [](double z) { return z * z * z * z; }) - 3.0) < 1e-12);
  CHECK(std::abs(expect(r7, [](double z) { return std::pow(z, 12); }) - 10395.0) < 1e-8);
  CHECK(std::abs(expect(gh_nodes(2), [](double z) { return z * z; }) - 1.0) < 1e-12);
  const auto r1 = gh_nodes(1);
  REQUIRE(r1.nodes.size() == 1);
  CHECK(r1.nodes[0] == 0.0);
  CHECK(r1.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(gh_nodes(0), Error);
}

TEST_CASE("marginal likelihood at tau zero is the plug-in likelihood") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 30; ++rep) {
    const auto data = oracle::random_dataset(rng, 3);
    ParameterVector p(3);
    p.mu = random_mu(rng, 3);
    p.theta = 0.3 * rep / 10.0 - 0.5;
    p.log_tau = -1.0;  // zeta is zero, so tau is irrelevant
    const double ll = log_likelihood(data, p);
    CHECK(std::abs(marginal_log_likelihood(data, p.mu, p.theta, 0.0, 7) - ll) <= 1e-12 * std::abs(ll));
  }
}

TEST_CASE("order 7 agrees with order 41 and the dense oracle") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> tau_u(0.0, 1.0);
  std::uniform_real_distribution<double> theta_u(-2.0, 2.0);
  double worst41 = 0.0;
  double worst_dense = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto data = oracle::random_dataset(rng, 2 + rep % 4, 10, 400);
    const auto mu = random_mu(rng, data.size());
    const double theta = theta_u(rng);
    const double tau = tau_u(rng);
    const double v7 = marginal_log_likelihood(data, mu, theta, tau, 7);
    const double v41 = marginal_log_likelihood(data, mu, theta, tau, 41);
    const double dense = static_cast<double>(oracle::marginal_log_likelihood(data, mu, theta, tau));
    worst41 = std::max(worst41, std::abs(v7 - v41) / std::abs(v41));
    worst_dense = std::max(worst_dense, std::abs(v7 - dense) / std::abs(dense));
  }
  CHECK(worst41 < 1e-6);
  CHECK(worst_dense < 1e-6);
}

TEST_CASE("marginal gradient matches finite differences") {
  std::mt19937_64 rng(33);
  const auto rule = gh_nodes(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto data = oracle::random_dataset(rng, 3, 10, 200);
    Eigen::VectorXd x(5);
    x.head(3) = random_mu(rng, 3);
    x(3) = 0.4;
    x(4) = 0.2 + 0.05 * rep;
    const auto ev = evaluate_marginal(data, x, rule, true);
    const auto fd = oracle::finite_difference_gradient(
        [&](const Eigen::VectorXd& y) { return evaluate_marginal(data, y, rule, false).value; }, x);
    for (Eigen::Index i = 0; i < 5; ++i) {
      CHECK(std::abs(ev.gradient(i) - fd(i)) / std::max(1.0, std::abs(fd(i))) < 1e-6);
    }
    CHECK(ev.hessian.rows() == 5);
  }
}

TEST_CASE("balanced single study") {
  const MetaDataset data({{"one", {50, 100}, {50, 100}}});
  const auto fit = fit_mle(data);
  CHECK(fit.converged);
  CHECK(std::abs(fit.theta_hat) < 1e-4);
  CHECK(fit.tau_hat == 0.0);
  REQUIRE(fit.se_theta.has_value());
  REQUIRE(fit.ci_95.has_value());
  CHECK(fit.ci_95->first == doctest::Approx(fit.theta_hat - 1.96 * *fit.se_theta));
  CHECK(fit.ci_95->second == doctest::Approx(fit.theta_hat + 1.96 * *fit.se_theta));
  // Known closed form for the log odds ratio standard error of one table.
  CHECK(*fit.se_theta == doctest::Approx(std::sqrt(4.0 / 50.0)).epsilon(1e-6));
}

TEST_CASE("crins datasets give a boundary heterogeneity estimate") {
  const auto death = fit_mle(crins_death());
  CHECK(death.converged);
  CHECK(std::abs(death.tau_hat) <= 0.01);
  CHECK(death.warnings.empty());

  const auto ptld = fit_mle(crins_ptld());
  CHECK(std::abs(ptld.tau_hat) <= 0.01);
  CHECK(std::isfinite(ptld.theta_hat));
}

TEST_CASE("reported optimum survives a local perturbation audit") {
  std::mt19937_64 rng(44);
  int audited = 0;
  for (int rep = 0; rep < 15; ++rep) {
    const auto data = oracle::random_dataset(rng, 4, 30, 300);
    const auto fit = fit_mle(data);
    if (!fit.converged) continue;
    ++audited;
    const double best = marginal_log_likelihood(data, fit.mu_hat, fit.theta_hat, fit.tau_hat, 7);
    CHECK(best == doctest::Approx(fit.log_likelihood).epsilon(1e-12));
    Eigen::VectorXd x(6);
    x << fit.mu_hat, fit.theta_hat, fit.tau_hat;
    for (Eigen::Index i = 0; i < 6; ++i) {
      for (double d : {-1e-3, 1e-3}) {
        Eigen::VectorXd y = x;
        y(i) += d;
        if (y(5) < 0.0) continue;
        const double v = marginal_log_likelihood(data, y.head(4), y(4), y(5), 7);
        CHECK(v - best <= 1e-6);
      }
    }
  }
  CHECK(audited > 10);
}

TEST_CASE("sparse and separated data never throw") {
  const MetaDataset zeros({{"a", {0, 20}, {0, 25}}, {"b", {0, 30}, {0, 31}}});
  MleResult fit;
  CHECK_NOTHROW(fit = fit_mle(zeros));
  CHECK((!fit.converged || std::isfinite(fit.log_likelihood)));

  // All events in the treatment arm: theta runs off to infinity.
  const MetaDataset separated({{"a", {0, 20}, {8, 20}}, {"b", {0, 30}, {5, 31}}});
  CHECK_NOTHROW(fit = fit_mle(separated));
  CHECK_FALSE(fit.converged);
  CHECK(fit.failure_reason != MleFailure::none);
  CHECK_FALSE(fit.ci_95.has_value());
}

TEST_CASE("failure names") {
  CHECK(std::string(to_string(MleFailure::optimizer_no_convergence)) == "optimizer-no-convergence");
  CHECK(std::string(to_string(MleFailure::hessian_not_positive_definite)) ==
        "hessian-not-positive-definite");
  CHECK(std::string(to_string(MleFailure::non_finite_se)) == "non-finite-se");
  CHECK(std::string(to_string(MleFailure::theta_out_of_range)) == "theta-out-of-range");
}
