#include "raremeta/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "raremeta/error.hpp"

namespace raremeta {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Dual averaging of log step size.
class StepSizeAdaptation {
 public:
  explicit StepSizeAdaptation(double delta) : delta_(delta) {}

  void set_mu(double mu) { mu_ = mu; }
  void restart() {
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }

  double learn(double accept_stat) {
    ++counter_;
    accept_stat = std::min(accept_stat, 1.0);
    const double n = static_cast<double>(counter_);
    const double eta = 1.0 / (n + t0_);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(n) / gamma_;
    const double x_eta = std::pow(n, -kappa_);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }

  double final_step_size() const { return std::exp(x_bar_); }

 private:
  double delta_;
  double mu_ = 0.0;
  double gamma_ = 0.05;
  double t0_ = 10.0;
  double kappa_ = 0.75;
  std::size_t counter_ = 0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

// Windowed variance estimation: an initial fast buffer, doubling slow
// windows, and a terminal fast buffer.
class MetricAdaptation {
 public:
  MetricAdaptation(std::size_t warmup, std::size_t dim) : warmup_(warmup), dim_(dim) {
    if (warmup < 20) {
      enabled_ = false;
      return;
    }
    if (init_buffer_ + base_window_ + term_buffer_ > warmup) {
      init_buffer_ = static_cast<std::size_t>(0.15 * static_cast<double>(warmup));
      term_buffer_ = static_cast<std::size_t>(0.1 * static_cast<double>(warmup));
      base_window_ = warmup - (init_buffer_ + term_buffer_);
    }
    window_size_ = base_window_;
    next_window_ = init_buffer_ + window_size_ - 1;
    restart_estimator();
  }

  // Returns true and writes a new inverse metric at the end of a slow window.
  bool learn(const Eigen::VectorXd& q, Eigen::VectorXd& inv_metric) {
    if (!enabled_) return false;
    if (in_window()) add_sample(q);
    if (counter_ == next_window_ && counter_ != warmup_) {
      compute_next_window();
      const double n = static_cast<double>(samples_);
      Eigen::VectorXd var = m2_ / (n - 1.0);
      inv_metric = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
      restart_estimator();
      ++counter_;
      return true;
    }
    ++counter_;
    return false;
  }

 private:
  bool in_window() const {
    return counter_ >= init_buffer_ && counter_ < warmup_ - term_buffer_ && counter_ != warmup_;
  }

  void compute_next_window() {
    const std::size_t last = warmup_ - term_buffer_ - 1;
    if (next_window_ == last) return;
    window_size_ *= 2;
    next_window_ = counter_ + window_size_;
    if (next_window_ != last && next_window_ + 2 * window_size_ >= warmup_ - term_buffer_) {
      next_window_ = last;
    }
  }

  void restart_estimator() {
    samples_ = 0;
    mean_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
    m2_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  }

  void add_sample(const Eigen::VectorXd& q) {
    ++samples_;
    const Eigen::VectorXd delta = q - mean_;
    mean_ += delta / static_cast<double>(samples_);
    m2_ += delta.cwiseProduct(q - mean_);
  }

  std::size_t warmup_;
  std::size_t dim_;
  bool enabled_ = true;
  std::size_t init_buffer_ = 75;
  std::size_t term_buffer_ = 50;
  std::size_t base_window_ = 25;
  std::size_t window_size_ = 0;
  std::size_t next_window_ = 0;
  std::size_t counter_ = 0;
  std::size_t samples_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

struct Transition {
  PhasePoint point;
  double accept_stat = 0.0;
  int depth = 0;
  bool divergent = false;
  double energy_error = 0.0;
};

// Multinomial No-U-Turn transition with the generalised U-turn criterion
// checked across subtrees as well as at the full trajectory.
class Nuts {
 public:
  Nuts(const LogDensity& target, Rng& rng, int max_depth, double max_energy_error)
      : target_(target),
        rng_(rng),
        max_depth_(max_depth),
        max_energy_error_(max_energy_error),
        inv_metric_(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(target.dimension()))) {}

  double step_size = 1.0;

  Eigen::VectorXd& inv_metric() { return inv_metric_; }

  Transition transition(const PhasePoint& current) {
    z_ = current;
    sample_momentum(z_);
    const Eigen::Index dim = z_.q.size();

    PhasePoint z_fwd = z_;
    PhasePoint z_bck = z_;
    Eigen::VectorXd p_sharp_fwd_fwd = sharp(z_.p);
    Eigen::VectorXd p_sharp_fwd_bck = p_sharp_fwd_fwd;
    Eigen::VectorXd p_sharp_bck_fwd = p_sharp_fwd_fwd;
    Eigen::VectorXd p_sharp_bck_bck = p_sharp_fwd_fwd;
    Eigen::VectorXd p_fwd_fwd = z_.p;
    Eigen::VectorXd p_fwd_bck = z_.p;
    Eigen::VectorXd p_bck_fwd = z_.p;
    Eigen::VectorXd p_bck_bck = z_.p;
    Eigen::VectorXd rho = z_.p;

    double log_sum_weight = 0.0;
    const double h0 = hamiltonian(z_);
    int n_leapfrog = 0;
    double sum_metro_prob = 0.0;
    PhasePoint z_sample = z_;
    PhasePoint z_propose = z_;
    int depth = 0;
    divergent_ = false;

    while (depth < max_depth_) {
      Eigen::VectorXd rho_fwd = Eigen::VectorXd::Zero(dim);
      Eigen::VectorXd rho_bck = Eigen::VectorXd::Zero(dim);
      double log_sum_weight_subtree = -kInf;
      bool valid_subtree = false;

      if (uniform_(rng_) > 0.5) {
        z_ = z_fwd;
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        valid_subtree = build_tree(depth, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd,
                                   p_fwd_bck, p_fwd_fwd, h0, 1.0, n_leapfrog,
                                   log_sum_weight_subtree, sum_metro_prob);
        z_fwd = z_;
      } else {
        z_ = z_bck;
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        valid_subtree = build_tree(depth, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck,
                                   p_bck_fwd, p_bck_bck, h0, -1.0, n_leapfrog,
                                   log_sum_weight_subtree, sum_metro_prob);
        z_bck = z_;
      }
      if (!valid_subtree) break;
      ++depth;

      if (log_sum_weight_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (uniform_(rng_) < std::exp(log_sum_weight_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = no_u_turn(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      Eigen::VectorXd rho_extended = rho_bck + p_fwd_bck;
      persist = persist && no_u_turn(p_sharp_bck_bck, p_sharp_fwd_bck, rho_extended);
      rho_extended = rho_fwd + p_bck_fwd;
      persist = persist && no_u_turn(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_extended);
      if (!persist) break;
    }

    Transition t;
    t.accept_stat = n_leapfrog > 0 ? sum_metro_prob / n_leapfrog : 0.0;
    t.depth = depth;
    t.divergent = divergent_;
    t.energy_error = hamiltonian(z_sample) - h0;
    t.point = std::move(z_sample);
    return t;
  }

  // Doubles or halves the step size until one leapfrog step crosses an
  // acceptance probability of 0.8.
  void init_step_size(const PhasePoint& start) {
    PhasePoint z = start;
    sample_momentum(z);
    double h0 = hamiltonian(z);
    leapfrog(z, step_size, inv_metric_, target_);
    double h = hamiltonian(z);
    if (!std::isfinite(h)) h = kInf;
    const int direction = (h0 - h) > std::log(0.8) ? 1 : -1;

    while (true) {
      z = start;
      sample_momentum(z);
      h0 = hamiltonian(z);
      leapfrog(z, step_size, inv_metric_, target_);
      h = hamiltonian(z);
      if (!std::isfinite(h)) h = kInf;
      const double delta_h = h0 - h;
      if (direction == 1 && !(delta_h > std::log(0.8))) break;
      if (direction == -1 && !(delta_h < std::log(0.8))) break;
      step_size = direction == 1 ? 2.0 * step_size : 0.5 * step_size;
      if (step_size > 1e7) {
        throw Error(ErrorCode::sampler_failure,
                    "step size search diverged to infinity; the target may be improper");
      }
      if (step_size == 0.0) {
        throw Error(ErrorCode::sampler_failure,
                    "step size search collapsed to zero; no acceptable step exists");
      }
    }
  }

 private:
  double hamiltonian(const PhasePoint& z) const {
    return -z.log_density + 0.5 * (z.p.array().square() * inv_metric_.array()).sum();
  }

  Eigen::VectorXd sharp(const Eigen::VectorXd& p) const { return inv_metric_.cwiseProduct(p); }

  void sample_momentum(PhasePoint& z) {
    z.p.resize(z.q.size());
    for (Eigen::Index i = 0; i < z.q.size(); ++i) {
      z.p(i) = normal_(rng_) / std::sqrt(inv_metric_(i));
    }
  }

  static bool no_u_turn(const Eigen::VectorXd& p_sharp_minus, const Eigen::VectorXd& p_sharp_plus,
                        const Eigen::VectorXd& rho) {
    return p_sharp_plus.dot(rho) > 0.0 && p_sharp_minus.dot(rho) > 0.0;
  }

  bool build_tree(int depth, PhasePoint& z_propose, Eigen::VectorXd& p_sharp_beg,
                  Eigen::VectorXd& p_sharp_end, Eigen::VectorXd& rho, Eigen::VectorXd& p_beg,
                  Eigen::VectorXd& p_end, double h0, double sign, int& n_leapfrog,
                  double& log_sum_weight, double& sum_metro_prob) {
    if (depth == 0) {
      const bool finite = leapfrog(z_, sign * step_size, inv_metric_, target_);
      ++n_leapfrog;
      double h = finite ? hamiltonian(z_) : kInf;
      if (!std::isfinite(h)) h = kInf;
      if (std::abs(h - h0) > max_energy_error_) divergent_ = true;

      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro_prob += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);

      z_propose = z_;
      p_sharp_beg = sharp(z_.p);
      p_sharp_end = p_sharp_beg;
      rho += z_.p;
      p_beg = z_.p;
      p_end = p_beg;
      return !divergent_;
    }

    const Eigen::Index dim = z_.q.size();

    double log_sum_weight_init = -kInf;
    Eigen::VectorXd p_init_end(dim);
    Eigen::VectorXd p_sharp_init_end(dim);
    Eigen::VectorXd rho_init = Eigen::VectorXd::Zero(dim);
    if (!build_tree(depth - 1, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg,
                    p_init_end, h0, sign, n_leapfrog, log_sum_weight_init, sum_metro_prob)) {
      return false;
    }

    PhasePoint z_propose_final = z_;
    double log_sum_weight_final = -kInf;
    Eigen::VectorXd p_final_beg(dim);
    Eigen::VectorXd p_sharp_final_beg(dim);
    Eigen::VectorXd rho_final = Eigen::VectorXd::Zero(dim);
    if (!build_tree(depth - 1, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final,
                    p_final_beg, p_end, h0, sign, n_leapfrog, log_sum_weight_final,
                    sum_metro_prob)) {
      return false;
    }

    const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = z_propose_final;
    } else if (uniform_(rng_) < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
      z_propose = z_propose_final;
    }

    const Eigen::VectorXd rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = no_u_turn(p_sharp_beg, p_sharp_end, rho_subtree);
    Eigen::VectorXd rho_extended = rho_init + p_final_beg;
    persist = persist && no_u_turn(p_sharp_beg, p_sharp_final_beg, rho_extended);
    rho_extended = rho_final + p_init_end;
    persist = persist && no_u_turn(p_sharp_init_end, p_sharp_end, rho_extended);
    return persist;
  }

  const LogDensity& target_;
  Rng& rng_;
  int max_depth_;
  double max_energy_error_;
  Eigen::VectorXd inv_metric_;
  PhasePoint z_;
  bool divergent_ = false;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

double mean_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(const std::vector<double>& x) {
  const double m = mean_of(x);
  double ss = 0.0;
  for (const double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

}  // namespace

void SamplerConfig::validate() const {
  if (chains < 1) throw_invalid("sampler: chains must be >= 1");
  if (iterations < 1) throw_invalid("sampler: iterations must be >= 1");
  if (warmup >= iterations) throw_invalid("sampler: warmup must be < iterations");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw_invalid("sampler: target acceptance must lie in (0, 1)");
  }
  if (max_tree_depth < 1) throw_invalid("sampler: max tree depth must be >= 1");
  if (!(max_energy_error > 0.0)) throw_invalid("sampler: divergence threshold must be > 0");
}

void refresh(PhasePoint& z, const LogDensity& target) {
  z.log_density = target.evaluate(z.q, z.grad);
}

bool leapfrog(PhasePoint& z, double step_size, const Eigen::VectorXd& inv_metric,
              const LogDensity& target) {
  z.p += 0.5 * step_size * z.grad;
  z.q += step_size * inv_metric.cwiseProduct(z.p);
  refresh(z, target);
  z.p += 0.5 * step_size * z.grad;
  return std::isfinite(z.log_density) && z.grad.allFinite();
}

ChainOutput sample_chain(const LogDensity& target, const Eigen::VectorXd& init,
                         const SamplerConfig& cfg, std::size_t chain_id) {
  cfg.validate();
  const std::size_t dim = target.dimension();
  if (static_cast<std::size_t>(init.size()) != dim) {
    throw Error(ErrorCode::dimension_mismatch, "initial point has the wrong dimension");
  }
  Rng rng(derive_seed(cfg.seed, {chain_id}));

  PhasePoint z;
  z.q = init;
  refresh(z, target);
  if (!std::isfinite(z.log_density) || !z.grad.allFinite()) {
    throw Error(ErrorCode::sampler_failure,
                "chain " + std::to_string(chain_id) + ": log density not finite at the initial point");
  }

  Nuts nuts(target, rng, cfg.max_tree_depth, cfg.max_energy_error);
  StepSizeAdaptation step_adapt(cfg.target_acceptance);
  MetricAdaptation metric_adapt(cfg.warmup, dim);

  nuts.init_step_size(z);
  step_adapt.set_mu(std::log(10.0 * nuts.step_size));
  step_adapt.restart();

  ChainOutput out;
  out.chain_id = chain_id;
  const std::size_t kept = cfg.iterations - cfg.warmup;
  out.draws.resize(static_cast<Eigen::Index>(kept), static_cast<Eigen::Index>(dim));
  out.energy_error.reserve(kept);
  out.accept_stat.reserve(kept);
  out.tree_depth.reserve(kept);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    Transition t = nuts.transition(z);
    z = std::move(t.point);

    if (it < cfg.warmup) {
      if (t.divergent) ++out.warmup_divergences;
      nuts.step_size = step_adapt.learn(t.accept_stat);
      if (metric_adapt.learn(z.q, nuts.inv_metric())) {
        nuts.init_step_size(z);
        step_adapt.set_mu(std::log(10.0 * nuts.step_size));
        step_adapt.restart();
      }
      if (it + 1 == cfg.warmup) {
        if (out.warmup_divergences == cfg.warmup) {
          throw Error(ErrorCode::sampler_failure,
                      "chain " + std::to_string(chain_id) + ": all " +
                          std::to_string(cfg.warmup) + " warmup transitions diverged");
        }
        nuts.step_size = step_adapt.final_step_size();
      }
      continue;
    }

    const auto row = static_cast<Eigen::Index>(it - cfg.warmup);
    out.draws.row(row) = z.q.transpose();
    out.energy_error.push_back(t.energy_error);
    out.accept_stat.push_back(t.accept_stat);
    out.tree_depth.push_back(t.depth);
    if (t.divergent) ++out.divergences;
  }
  out.step_size = nuts.step_size;
  out.inv_metric = nuts.inv_metric();
  return out;
}

double rhat(std::span<const std::vector<double>> chains) {
  if (chains.size() < 2) throw_invalid("rhat needs at least 2 chains");
  std::size_t n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  if (n < 4) throw_invalid("rhat needs at least 4 draws per chain");

  const std::size_t half = n / 2;
  std::vector<std::vector<double>> split;
  split.reserve(2 * chains.size());
  for (const auto& c : chains) {
    split.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    split.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(n - half),
                       c.begin() + static_cast<std::ptrdiff_t>(n));
  }

  std::vector<double> means;
  double within = 0.0;
  for (const auto& s : split) {
    means.push_back(mean_of(s));
    within += sample_variance(s);
  }
  within /= static_cast<double>(split.size());
  if (within == 0.0) return 1.0;

  const double len = static_cast<double>(half);
  const double between_over_n = sample_variance(means);  // B / n
  const double var_plus = (len - 1.0) / len * within + between_over_n;
  return std::sqrt(var_plus / within);
}

double effective_sample_size(std::span<const std::vector<double>> chains) {
  if (chains.empty()) throw_invalid("effective sample size needs at least one chain");
  std::size_t n = chains.front().size();
  for (const auto& c : chains) n = std::min(n, c.size());
  const std::size_t m = chains.size();
  const double total = static_cast<double>(n * m);
  if (n < 4) return total;

  std::vector<double> means(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = std::accumulate(chains[c].begin(), chains[c].begin() + static_cast<std::ptrdiff_t>(n),
                               0.0) / static_cast<double>(n);
  }
  // Autocovariance at `lag`, averaged over chains (1/n normalisation).
  auto acov = [&](std::size_t lag) {
    double sum = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) {
        s += (chains[c][i] - means[c]) * (chains[c][i + lag] - means[c]);
      }
      sum += s / static_cast<double>(n);
    }
    return sum / static_cast<double>(m);
  };

  const double nd = static_cast<double>(n);
  const double mean_var = acov(0) * nd / (nd - 1.0);
  double var_plus = mean_var * (nd - 1.0) / nd;
  if (m > 1) var_plus += sample_variance(means);
  if (!(var_plus > 0.0)) return total;

  std::vector<double> rho(n, 0.0);
  rho[0] = 1.0;
  double rho_even = 1.0;
  double rho_odd = 1.0 - (mean_var - acov(1)) / var_plus;
  rho[1] = rho_odd;
  std::size_t t = 1;
  while (t + 5 < n && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - acov(t + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - acov(t + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[t + 1] = rho_even;
      rho[t + 2] = rho_odd;
    }
    t += 2;
  }
  const std::size_t max_t = t;
  if (rho_even > 0.0 && max_t + 1 < n) rho[max_t + 1] = rho_even;

  for (std::size_t s = 1; s + 3 <= max_t; s += 2) {
    if (rho[s + 1] + rho[s + 2] > rho[s - 1] + rho[s]) {
      rho[s + 1] = 0.5 * (rho[s - 1] + rho[s]);
      rho[s + 2] = rho[s + 1];
    }
  }
  double tau_hat = -1.0;
  for (std::size_t s = 0; s <= max_t && s < n; ++s) tau_hat += 2.0 * rho[s];
  if (max_t + 1 < n) tau_hat += rho[max_t + 1];
  tau_hat = std::max(tau_hat, 1.0 / std::log10(total));
  return total / tau_hat;
}

std::size_t PosteriorDraws::total_draws() const {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.theta.size();
  return n;
}

std::vector<double> PosteriorDraws::merged_theta() const {
  std::vector<double> out;
  out.reserve(total_draws());
  for (const auto& c : chains) out.insert(out.end(), c.theta.begin(), c.theta.end());
  return out;
}

std::vector<double> PosteriorDraws::merged_tau() const {
  std::vector<double> out;
  out.reserve(total_draws());
  for (const auto& c : chains) out.insert(out.end(), c.tau.begin(), c.tau.end());
  return out;
}

Eigen::VectorXd initial_point(const MetaDataset& data, Rng& rng) {
  ParameterVector p(data.size());
  std::normal_distribution<double> jitter(0.0, 0.1);
  for (std::size_t s = 0; s < data.size(); ++s) {
    const auto& st = data[s];
    const double p_ctrl = (static_cast<double>(st.control.events) + 0.5) /
                          (static_cast<double>(st.control.total) + 1.0);
    const double p_trt = (static_cast<double>(st.experimental.events) + 0.5) /
                         (static_cast<double>(st.experimental.total) + 1.0);
    p.mu(static_cast<Eigen::Index>(s)) = 0.5 * (logit(p_ctrl) + logit(p_trt));
  }
  p.theta = 0.0;
  p.log_tau = std::log(0.1);
  Eigen::VectorXd flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) += jitter(rng);
  return flat;
}

ChainDraws run_chain(const MetaDataset& data, const PriorConfig& priors, const SamplerConfig& cfg,
                     std::size_t chain_id) {
  const PosteriorDensity target(data, priors);
  // Offset 0x1417 keeps the initialisation stream apart from the transition stream.
  Rng init_rng(derive_seed(cfg.seed, {chain_id, 0x1417}));
  Eigen::VectorXd init = initial_point(data, init_rng);

  const ChainOutput raw = sample_chain(target, init, cfg, chain_id);

  const auto k = static_cast<Eigen::Index>(data.size());
  const Eigen::Index n = raw.draws.rows();
  ChainDraws out;
  out.chain_id = chain_id;
  out.mu = raw.draws.leftCols(k);
  out.zeta = raw.draws.middleCols(k + 1, k);
  out.theta.resize(static_cast<std::size_t>(n));
  out.tau.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    out.theta[static_cast<std::size_t>(i)] = raw.draws(i, k);
    out.tau[static_cast<std::size_t>(i)] = std::exp(raw.draws(i, 2 * k + 1));
  }
  out.divergences = raw.divergences;
  out.mean_accept_stat =
      raw.accept_stat.empty() ? 0.0 : mean_of(raw.accept_stat);
  out.step_size = raw.step_size;
  return out;
}

PosteriorDraws run_chains(const MetaDataset& data, const PriorConfig& priors,
                          const SamplerConfig& cfg) {
  cfg.validate();
  priors.validate();
  PosteriorDraws out;
  out.chains.resize(cfg.chains);

  if (cfg.parallel_chains && cfg.chains > 1) {
    std::vector<std::exception_ptr> errors(cfg.chains);
    std::vector<std::thread> workers;
    workers.reserve(cfg.chains);
    for (std::size_t c = 0; c < cfg.chains; ++c) {
      workers.emplace_back([&, c] {
        try {
          out.chains[c] = run_chain(data, priors, cfg, c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  } else {
    for (std::size_t c = 0; c < cfg.chains; ++c) out.chains[c] = run_chain(data, priors, cfg, c);
  }

  std::vector<std::vector<double>> theta;
  std::vector<std::vector<double>> tau;
  for (const auto& c : out.chains) {
    out.divergences += c.divergences;
    theta.push_back(c.theta);
    tau.push_back(c.tau);
  }
  if (cfg.chains >= 2 && cfg.iterations - cfg.warmup >= 4) {
    out.rhat_theta = rhat(theta);
    out.rhat_tau = rhat(tau);
  } else {
    out.rhat_theta = std::numeric_limits<double>::quiet_NaN();
    out.rhat_tau = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace raremeta
