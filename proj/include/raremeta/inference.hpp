#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "raremeta/dataset.hpp"
#include "raremeta/mle.hpp"
#include "raremeta/sampler.hpp"

namespace raremeta {

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Shortest window of sorted samples that holds ceil(mass * n) of them;
/// among equally short windows the one starting lowest wins.
/// Needs at least ceil(1 / (1 - mass)) samples.
Interval hdi(std::span<const double> samples, double mass = 0.95);

double median(std::span<const double> samples);

/// Observed log odds ratio of one study and its 95% Wald interval.
struct ForestRow {
  std::string label;
  double log_or = 0.0;
  double se = 0.0;
  Interval ci;
  bool correction_applied = false;
};

/// Adds 0.5 to every cell of the 2x2 table when any cell is zero.
ForestRow observed_log_or(const StudyArm& control, const StudyArm& experimental);
std::vector<ForestRow> forest_table(const MetaDataset& data);

enum class Method { wip, vague, mle };
const char* to_string(Method method);
Method parse_method(std::string_view name);

struct EffectSummary {
  Method method = Method::wip;
  double point_log_or = 0.0;
  Interval interval_log_or;
  double point_or = 1.0;
  Interval interval_or;
  double tau_hat = 0.0;
  bool has_interval = true;
};

/// Median and HDI of theta, median of tau.
EffectSummary summarize_fit(const PosteriorDraws& draws, Method method, double mass = 0.95);
/// Point estimate, Wald interval (absent when the fit failed) and tau estimate.
EffectSummary summarize_fit(const MleResult& fit);

}  // namespace raremeta
