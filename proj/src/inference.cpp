#include "raremeta/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "raremeta/error.hpp"

namespace raremeta {

Interval hdi(std::span<const double> samples, double mass) {
  if (!(mass > 0.0 && mass < 1.0)) throw_invalid("hdi mass must lie in (0, 1)");
  const auto n = samples.size();
  // The 1e-9 slack absorbs representation error in e.g. 1 / (1 - 0.8).
  const auto needed = static_cast<std::size_t>(std::ceil(1.0 / (1.0 - mass) - 1e-9));
  if (n < needed) {
    throw_invalid("hdi needs at least " + std::to_string(needed) + " samples for mass " +
                  std::to_string(mass) + ", got " + std::to_string(n));
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto window = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9)));

  std::size_t best = 0;
  double best_width = sorted[window - 1] - sorted[0];
  for (std::size_t start = 1; start + window <= n; ++start) {
    const double width = sorted[start + window - 1] - sorted[start];
    if (width < best_width) {
      best_width = width;
      best = start;
    }
  }
  return {sorted[best], sorted[best + window - 1]};
}

double median(std::span<const double> samples) {
  if (samples.empty()) throw_invalid("median of an empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();
  return n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

ForestRow observed_log_or(const StudyArm& control, const StudyArm& experimental) {
  validate_arm(control, "control arm");
  validate_arm(experimental, "experimental arm");
  double a = static_cast<double>(experimental.events);
  double b = static_cast<double>(experimental.total - experimental.events);
  double c = static_cast<double>(control.events);
  double d = static_cast<double>(control.total - control.events);
  ForestRow row;
  if (a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0) {
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
    row.correction_applied = true;
  }
  row.log_or = std::log((a * d) / (b * c));
  row.se = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
  row.ci = {row.log_or - 1.96 * row.se, row.log_or + 1.96 * row.se};
  return row;
}

std::vector<ForestRow> forest_table(const MetaDataset& data) {
  std::vector<ForestRow> rows;
  rows.reserve(data.size());
  for (const auto& s : data) {
    ForestRow row = observed_log_or(s.control, s.experimental);
    row.label = s.label;
    rows.push_back(std::move(row));
  }
  return rows;
}

const char* to_string(Method method) {
  switch (method) {
    case Method::wip: return "wip";
    case Method::vague: return "vague";
    case Method::mle: return "mle";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "wip") return Method::wip;
  if (name == "vague") return Method::vague;
  if (name == "mle") return Method::mle;
  throw_invalid("unknown method '" + std::string(name) + "' (expected wip, vague or mle)");
}

EffectSummary summarize_fit(const PosteriorDraws& draws, Method method, double mass) {
  const std::vector<double> theta = draws.merged_theta();
  const std::vector<double> tau = draws.merged_tau();
  if (theta.empty()) throw_invalid("cannot summarise a fit without draws");
  EffectSummary out;
  out.method = method;
  out.point_log_or = median(theta);
  out.interval_log_or = hdi(theta, mass);
  out.point_or = std::exp(out.point_log_or);
  out.interval_or = {std::exp(out.interval_log_or.low), std::exp(out.interval_log_or.high)};
  out.tau_hat = median(tau);
  return out;
}

EffectSummary summarize_fit(const MleResult& fit) {
  EffectSummary out;
  out.method = Method::mle;
  out.point_log_or = fit.theta_hat;
  out.point_or = std::exp(fit.theta_hat);
  out.tau_hat = fit.tau_hat;
  out.has_interval = fit.ci_95.has_value();
  if (out.has_interval) {
    out.interval_log_or = {fit.ci_95->first, fit.ci_95->second};
    out.interval_or = {std::exp(fit.ci_95->first), std::exp(fit.ci_95->second)};
  }
  return out;
}

}  // namespace raremeta
