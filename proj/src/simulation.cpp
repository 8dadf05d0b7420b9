#include "raremeta/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>

#include "raremeta/error.hpp"
#include "raremeta/mle.hpp"
#include "raremeta/priors.hpp"

namespace raremeta {
namespace {

constexpr std::uint64_t kDataStream = 0;

std::uint64_t method_stream(Method m) { return static_cast<std::uint64_t>(m) + 1; }

std::int64_t draw_study_size(Rng& rng, const ScenarioSpec& spec) {
  std::lognormal_distribution<double> size(spec.size_meanlog, spec.size_sdlog);
  const double rounded = std::round(size(rng));
  return std::max<std::int64_t>(2, static_cast<std::int64_t>(rounded));
}

MethodEstimate fit_bayes(const MetaDataset& data, const PriorConfig& priors,
                         const SamplerConfig& sampler) {
  const PosteriorDraws draws = run_chains(data, priors, sampler);
  const EffectSummary s = summarize_fit(draws, Method::wip);
  return {true, s.point_log_or, s.interval_log_or, s.tau_hat};
}

}  // namespace

void ScenarioSpec::validate() const {
  if (k < 2) throw_invalid("scenario: k must be >= 2");
  if (!(tau_true >= 0.0) || !std::isfinite(tau_true)) throw_invalid("scenario: tau must be >= 0");
  if (!std::isfinite(theta_true)) throw_invalid("scenario: theta must be finite");
  if (!(baseline_low > 0.0 && baseline_low <= baseline_high && baseline_high < 1.0)) {
    throw_invalid("scenario: baseline risk range must satisfy 0 < low <= high < 1");
  }
  if (!(size_sdlog >= 0.0)) throw_invalid("scenario: size sdlog must be >= 0");
  if (replications < 1) throw_invalid("scenario: replications must be >= 1");
}

const char* to_string(GridKind kind) {
  return kind == GridKind::rare ? "rare" : "high-baseline";
}

GridKind parse_grid_kind(std::string_view name) {
  if (name == "rare") return GridKind::rare;
  if (name == "high-baseline") return GridKind::high_baseline;
  throw_invalid("unknown grid kind '" + std::string(name) + "' (expected rare or high-baseline)");
}

std::vector<ScenarioSpec> scenario_grid(GridKind kind, std::size_t replications,
                                        std::uint64_t seed) {
  static constexpr std::size_t kStudies[] = {2, 3, 5};
  static constexpr double kEffects[] = {-5, -4, -3, -2, -1, -0.5, 0, 0.5, 1, 2, 3, 4, 5};
  std::vector<ScenarioSpec> grid;
  for (const auto k : kStudies) {
    for (const double theta : kEffects) {
      ScenarioSpec spec;
      spec.scenario_id = grid.size();
      spec.k = k;
      spec.theta_true = theta;
      spec.tau_true = 0.28;
      if (kind == GridKind::high_baseline) {
        spec.baseline_low = 0.05;
        spec.baseline_high = 0.2;
      }
      spec.replications = replications;
      spec.seed = seed;
      grid.push_back(spec);
    }
  }
  return grid;
}

GeneratedDataset generate_dataset(const ScenarioSpec& spec, std::size_t replicate_index) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, {spec.scenario_id, replicate_index, kDataStream}));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  TrueParameters truth;
  truth.theta = spec.theta_true;
  truth.tau = spec.tau_true;
  std::vector<Study> studies;
  studies.reserve(spec.k);
  for (std::size_t i = 0; i < spec.k; ++i) {
    const std::int64_t size = draw_study_size(rng, spec);
    std::binomial_distribution<std::int64_t> allocation(size, 0.5);
    std::int64_t n_trt = allocation(rng);
    while (n_trt < 1 || n_trt > size - 1) n_trt = allocation(rng);
    const std::int64_t n_ctrl = size - n_trt;

    const double risk =
        spec.baseline_low + (spec.baseline_high - spec.baseline_low) * unit(rng);
    const double effect = spec.theta_true + spec.tau_true * normal(rng);
    const double p_ctrl = risk;
    const double p_trt = logistic(logit(risk) + effect);

    std::binomial_distribution<std::int64_t> events_ctrl(n_ctrl, p_ctrl);
    std::binomial_distribution<std::int64_t> events_trt(n_trt, p_trt);
    Study s;
    s.label = "study-" + std::to_string(i + 1);
    s.control = {events_ctrl(rng), n_ctrl};
    s.experimental = {events_trt(rng), n_trt};
    studies.push_back(std::move(s));

    truth.baseline_risk.push_back(risk);
    truth.mu.push_back(logit(risk) + 0.5 * spec.theta_true);
    truth.study_effect.push_back(effect);
    truth.p_control.push_back(p_ctrl);
    truth.p_treatment.push_back(p_trt);
  }
  return {MetaDataset(std::move(studies)), std::move(truth)};
}

ZeroFractions zero_fractions(const MetaDataset& data) {
  std::size_t single = 0;
  std::size_t both = 0;
  for (const auto& s : data) {
    const bool zero_ctrl = s.control.events == 0;
    const bool zero_trt = s.experimental.events == 0;
    if (zero_ctrl && zero_trt) {
      ++both;
    } else if (zero_ctrl || zero_trt) {
      ++single;
    }
  }
  const double n = static_cast<double>(data.size());
  return {static_cast<double>(single) / n, static_cast<double>(both) / n};
}

MethodMetrics aggregate_method(Method method, std::span<const MethodEstimate> estimates,
                               double theta_true, double tau_true) {
  MethodMetrics m;
  m.method = method;
  double bias = 0.0, covered = 0.0, length = 0.0, bias_tau = 0.0;
  for (const auto& e : estimates) {
    if (!e.ok) {
      ++m.failures;
      continue;
    }
    ++m.replications_used;
    bias += e.point - theta_true;
    covered += (e.interval.low <= theta_true && theta_true <= e.interval.high) ? 1.0 : 0.0;
    length += e.interval.high - e.interval.low;
    bias_tau += e.tau_hat - tau_true;
  }
  if (m.replications_used == 0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    m.bias_theta = m.coverage = m.mean_interval_length = m.bias_tau = nan;
    return m;
  }
  const double used = static_cast<double>(m.replications_used);
  m.bias_theta = bias / used;
  m.coverage = covered / used;
  m.mean_interval_length = length / used;
  m.bias_tau = bias_tau / used;
  return m;
}

ReplicateOutcome run_replicate(const ScenarioSpec& spec, std::size_t replicate_index,
                               std::span<const Method> methods, const SimulationOptions& options) {
  const GeneratedDataset generated = generate_dataset(spec, replicate_index);
  ReplicateOutcome out;
  out.zeros = zero_fractions(generated.data);
  for (const Method method : methods) {
    MethodEstimate estimate;
    if (method == Method::mle) {
      MleOptions mle_options;
      mle_options.gh_order = options.gh_order;
      const MleResult fit = fit_mle(generated.data, mle_options);
      if (fit.converged) {
        estimate = {true, fit.theta_hat, {fit.ci_95->first, fit.ci_95->second}, fit.tau_hat};
      }
    } else {
      SamplerConfig sampler = options.sampler;
      sampler.seed =
          derive_seed(spec.seed, {spec.scenario_id, replicate_index, method_stream(method)});
      const PriorConfig priors =
          method == Method::wip ? wip_priors(options.delta) : vague_priors();
      try {
        estimate = fit_bayes(generated.data, priors, sampler);
      } catch (const Error&) {
        estimate.ok = false;
      }
    }
    out.estimates[static_cast<std::size_t>(method)] = estimate;
  }
  return out;
}

ScenarioReport run_scenario(const ScenarioSpec& spec, std::span<const Method> methods,
                            const SimulationOptions& options) {
  spec.validate();
  options.sampler.validate();
  std::vector<Method> ordered(methods.begin(), methods.end());
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

  std::vector<ReplicateOutcome> outcomes(spec.replications);
  std::size_t threads = options.threads;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, spec.replications);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t rep = next.fetch_add(1);
      if (rep >= spec.replications) return;
      try {
        outcomes[rep] = run_replicate(spec, rep, ordered, options);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  ScenarioReport report;
  report.spec = spec;
  for (const auto& o : outcomes) {
    report.fraction_single_zero += o.zeros.single_zero;
    report.fraction_double_zero += o.zeros.double_zero;
  }
  report.fraction_single_zero /= static_cast<double>(spec.replications);
  report.fraction_double_zero /= static_cast<double>(spec.replications);

  for (const Method method : ordered) {
    std::vector<MethodEstimate> estimates;
    estimates.reserve(outcomes.size());
    for (const auto& o : outcomes) estimates.push_back(*o.estimates[static_cast<std::size_t>(method)]);
    MethodMetrics metrics = aggregate_method(method, estimates, spec.theta_true, spec.tau_true);
    if (method == Method::mle) {
      report.mle_failure_fraction =
          static_cast<double>(metrics.failures) / static_cast<double>(spec.replications);
    }
    report.methods.push_back(metrics);
  }
  return report;
}

}  // namespace raremeta
