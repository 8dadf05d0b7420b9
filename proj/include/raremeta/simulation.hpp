#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "raremeta/dataset.hpp"
#include "raremeta/inference.hpp"
#include "raremeta/sampler.hpp"

namespace raremeta {

struct ScenarioSpec {
  std::size_t scenario_id = 0;  // position in its grid; keys the random streams
  std::size_t k = 3;
  double theta_true = 0.0;
  double tau_true = 0.28;
  double baseline_low = 0.005;
  double baseline_high = 0.05;
  double size_meanlog = 5.0;
  double size_sdlog = 1.0;
  std::size_t replications = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

enum class GridKind { rare, high_baseline };
const char* to_string(GridKind kind);
GridKind parse_grid_kind(std::string_view name);

/// k in {2, 3, 5} crossed with 13 true effects from -5 to 5.
std::vector<ScenarioSpec> scenario_grid(GridKind kind, std::size_t replications = 100,
                                        std::uint64_t seed = 1);

struct TrueParameters {
  double theta = 0.0;
  double tau = 0.0;
  std::vector<double> baseline_risk;  // control-arm event probability
  std::vector<double> mu;             // baseline log odds in the model's parametrisation
  std::vector<double> study_effect;   // study-level log odds ratio
  std::vector<double> p_control;
  std::vector<double> p_treatment;
};

struct GeneratedDataset {
  MetaDataset data;
  TrueParameters truth;
};

/// Deterministic in (spec.seed, spec.scenario_id, replicate_index).
GeneratedDataset generate_dataset(const ScenarioSpec& spec, std::size_t replicate_index);

struct ZeroFractions {
  double single_zero = 0.0;
  double double_zero = 0.0;
};

ZeroFractions zero_fractions(const MetaDataset& data);

struct MethodEstimate {
  bool ok = false;
  double point = 0.0;
  Interval interval;
  double tau_hat = 0.0;
};

struct MethodMetrics {
  Method method = Method::wip;
  std::size_t replications_used = 0;
  std::size_t failures = 0;
  double bias_theta = 0.0;
  double coverage = 0.0;
  double mean_interval_length = 0.0;
  double bias_tau = 0.0;
};

/// Metrics over the successful estimates; failed ones are counted, not averaged.
MethodMetrics aggregate_method(Method method, std::span<const MethodEstimate> estimates,
                               double theta_true, double tau_true);

struct ScenarioReport {
  ScenarioSpec spec;
  std::vector<MethodMetrics> methods;
  double fraction_single_zero = 0.0;
  double fraction_double_zero = 0.0;
  std::optional<double> mle_failure_fraction;
};

struct SimulationOptions {
  SamplerConfig sampler = desk_sampler();
  std::size_t gh_order = 7;
  double delta = 250.0;
  std::size_t threads = 0;  // 0: one per hardware thread

  static SamplerConfig desk_sampler() {
    SamplerConfig cfg;
    cfg.chains = 2;
    cfg.iterations = 1500;
    cfg.warmup = 500;
    cfg.parallel_chains = false;
    return cfg;
  }
};

struct ReplicateOutcome {
  ZeroFractions zeros;
  std::array<std::optional<MethodEstimate>, 3> estimates;  // indexed by Method
};

ReplicateOutcome run_replicate(const ScenarioSpec& spec, std::size_t replicate_index,
                               std::span<const Method> methods, const SimulationOptions& options);

/// Runs every replicate (concurrently) and reduces in replicate order, so the
/// report does not depend on the thread count.
ScenarioReport run_scenario(const ScenarioSpec& spec, std::span<const Method> methods,
                            const SimulationOptions& options = {});

}  // namespace raremeta
