// raremeta command-line driver. Talks to the library only through raremeta.h.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "raremeta/raremeta.h"

using json = nlohmann::ordered_json;

namespace {

struct CommandError : std::runtime_error {
  CommandError(int status, const std::string& message)
      : std::runtime_error(message), status(status) {}
  int status;
};

void check(rm_status status, const std::string& context) {
  if (status != RM_OK) {
    throw CommandError(static_cast<int>(status), context + ": " + rm_last_error());
  }
}

[[noreturn]] void config_error(const std::string& message) {
  throw CommandError(static_cast<int>(RM_ERR_INVALID_ARGUMENT), message);
}

// Reads a JSON object of flag values. Nested objects named after a subcommand
// apply to that subcommand; plain keys apply to the one being run.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(std::function<std::string()> active) : active_(std::move(active)) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json doc;
    try {
      doc = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::ConversionError("config", "config must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    const std::string active = active_();
    for (const auto& [key, value] : doc.items()) {
      if (value.is_object()) {
        for (const auto& [sub_key, sub_value] : value.items()) {
          items.push_back(make_item({key}, sub_key, sub_value));
        }
      } else {
        std::vector<std::string> parents;
        if (!active.empty()) parents.push_back(active);
        items.push_back(make_item(parents, key, value));
      }
    }
    return items;
  }

 private:
  static std::string scalar(const json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
    if (value.is_object()) throw CLI::ConversionError("config", "nested objects are not supported");
    return value.dump();
  }

  static CLI::ConfigItem make_item(std::vector<std::string> parents, const std::string& name,
                                   const json& value) {
    CLI::ConfigItem item;
    item.parents = std::move(parents);
    item.name = name;
    if (value.is_array()) {
      for (const auto& v : value) item.inputs.push_back(scalar(v));
    } else {
      item.inputs.push_back(scalar(value));
    }
    return item;
  }

  std::function<std::string()> active_;
};

std::string fmt(double value) {
  if (std::isnan(value)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

json number_or_null(double value) {
  if (!std::isfinite(value)) return nullptr;
  return value;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CommandError(static_cast<int>(RM_ERR_IO), "cannot open output file '" + path + "'");
  out << text;
  if (!out) throw CommandError(static_cast<int>(RM_ERR_IO), "failed writing '" + path + "'");
}

struct Dataset {
  rm_dataset* handle = nullptr;
  explicit Dataset(const std::string& path) {
    check(rm_dataset_read_csv(path.c_str(), &handle), "dataset '" + path + "'");
  }
  explicit Dataset(rm_dataset* h) : handle(h) {}
  Dataset(const Dataset&) = delete;
  Dataset& operator=(const Dataset&) = delete;
  ~Dataset() { rm_dataset_free(handle); }
};

std::vector<rm_method> parse_methods(const std::vector<std::string>& names) {
  std::vector<rm_method> methods;
  for (const auto& name : names) {
    rm_method m{};
    check(rm_method_parse(name.c_str(), &m), "--method");
    for (rm_method seen : methods) {
      if (seen == m) config_error("--method: '" + name + "' given more than once");
    }
    methods.push_back(m);
  }
  if (methods.empty()) config_error("--method: at least one method is required");
  return methods;
}

// Options shared by the commands that run the sampler.
struct SamplerFlags {
  uint32_t chains = 4;
  uint32_t iterations = 2000;
  uint32_t warmup = 1000;
  double target_accept = 0.8;
  int32_t max_depth = 10;
  uint32_t gh_order = 7;

  void add(CLI::App* cmd) {
    cmd->add_option("--chains", chains, "Number of chains")->capture_default_str();
    cmd->add_option("--iter", iterations, "Iterations per chain, warmup included")
        ->capture_default_str();
    cmd->add_option("--warmup", warmup, "Warmup iterations per chain")->capture_default_str();
    cmd->add_option("--target-accept", target_accept, "Target acceptance statistic")
        ->capture_default_str();
    cmd->add_option("--max-depth", max_depth, "Maximum tree depth")->capture_default_str();
    cmd->add_option("--gh-order", gh_order, "Gauss-Hermite order for the MLE")
        ->capture_default_str();
  }

  rm_sampler_config config(uint64_t seed, bool parallel) const {
    rm_sampler_config c{};
    rm_sampler_config_default(&c);
    c.chains = chains;
    c.iterations = iterations;
    c.warmup = warmup;
    c.seed = seed;
    c.target_acceptance = target_accept;
    c.max_tree_depth = max_depth;
    c.parallel_chains = parallel ? 1 : 0;
    return c;
  }
};

struct PriorFlags {
  double delta = 250.0;
  std::pair<double, double> theta_prior{0.0, 2.82};
  std::pair<double, double> mu_prior{0.0, 10.0};
  std::string tau_dist = "half-normal";
  double tau_scale = 0.5;
  CLI::Option* delta_opt = nullptr;
  CLI::Option* theta_opt = nullptr;

  void add(CLI::App* cmd, bool allow_theta_prior) {
    delta_opt = cmd->add_option("--delta", delta, "Plausible odds-ratio range for the WIP")
                    ->capture_default_str();
    if (allow_theta_prior) {
      theta_opt = cmd->add_option("--theta-prior", theta_prior, "Explicit theta prior as mean,sd")
                      ->delimiter(',');
    }
    cmd->add_option("--mu-prior", mu_prior, "Baseline log-odds prior as mean,sd")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--tau-prior-dist", tau_dist, "half-normal, uniform or half-cauchy")
        ->capture_default_str();
    cmd->add_option("--tau-prior", tau_scale, "Scale of the tau prior")->capture_default_str();
  }

  void check_exclusive() const {
    if (theta_opt != nullptr && delta_opt->count() > 0 && theta_opt->count() > 0) {
      config_error("--delta and --theta-prior are mutually exclusive: give exactly one");
    }
  }

  rm_tau_prior tau() const {
    rm_tau_prior d{};
    check(rm_tau_prior_parse(tau_dist.c_str(), &d), "--tau-prior-dist");
    return d;
  }

  // Priors for a Bayesian method, and whether delta determined theta's sd.
  rm_prior_config priors(rm_method method, bool* from_delta) const {
    rm_prior_config p{};
    *from_delta = false;
    if (method == RM_METHOD_VAGUE) {
      rm_prior_config_vague(&p);
    } else if (theta_opt != nullptr && theta_opt->count() > 0) {
      rm_prior_config_default(&p);
      p.theta_mean = theta_prior.first;
      p.theta_sd = theta_prior.second;
    } else {
      check(rm_prior_config_wip(delta, &p), "--delta");
      *from_delta = true;
    }
    p.mu_mean = mu_prior.first;
    p.mu_sd = mu_prior.second;
    p.tau_dist = tau();
    p.tau_scale = tau_scale;
    return p;
  }
};

json prior_json(const rm_prior_config& p) {
  return json{{"mu", {{"mean", p.mu_mean}, {"sd", p.mu_sd}}},
              {"theta", {{"mean", p.theta_mean}, {"sd", p.theta_sd}}},
              {"tau", {{"dist", rm_tau_prior_name(p.tau_dist)}, {"scale", p.tau_scale}}}};
}

json effect_json(const rm_effect_summary& s) {
  json j;
  j["point_log_or"] = number_or_null(s.point_log_or);
  j["interval_log_or"] = s.has_interval ? json::array({number_or_null(s.low_log_or),
                                                       number_or_null(s.high_log_or)})
                                        : json(nullptr);
  j["point_or"] = number_or_null(s.point_or);
  j["interval_or"] = s.has_interval
                         ? json::array({number_or_null(s.low_or), number_or_null(s.high_or)})
                         : json(nullptr);
  j["tau_hat"] = number_or_null(s.tau_hat);
  return j;
}

// ---- fit ------------------------------------------------------------------

struct FitCommand {
  std::string data;
  std::vector<std::string> methods{"wip"};
  PriorFlags prior;
  SamplerFlags sampler;
  double mass = 0.95;

  void add(CLI::App* cmd) {
    cmd->add_option("--data", data, "CSV dataset (study,r_ctrl,n_ctrl,r_trt,n_trt)")->required();
    cmd->add_option("--method", methods, "wip, vague or mle; repeat or comma-separate")
        ->delimiter(',')
        ->capture_default_str();
    prior.add(cmd, true);
    sampler.add(cmd);
    cmd->add_option("--hdi-mass", mass, "Posterior mass of the reported interval")
        ->capture_default_str();
  }

  struct Row {
    rm_method method;
    rm_effect_summary effect;
    json record;
  };

  std::vector<Row> run(uint64_t seed) const {
    prior.check_exclusive();
    const auto list = parse_methods(methods);
    Dataset ds(data);
    std::vector<Row> rows;
    for (rm_method m : list) {
      Row row{m, {}, json::object()};
      row.record["method"] = rm_method_name(m);
      if (m == RM_METHOD_MLE) {
        rm_mle* fit = nullptr;
        check(rm_fit_mle(ds.handle, sampler.gh_order, &fit), "mle");
        rm_mle_summary s{};
        rm_mle_summary_get(fit, &s);
        rm_mle_effect_summary(fit, &row.effect);
        row.record.update(effect_json(row.effect));
        row.record["se_theta"] = number_or_null(s.se_theta);
        row.record["converged"] = s.converged != 0;
        row.record["failure_reason"] = s.failure_reason ? json(s.failure_reason) : json(nullptr);
        row.record["log_likelihood"] = number_or_null(s.log_likelihood);
        row.record["gh_order"] = s.gh_order;
        json warnings = json::array();
        for (uint32_t i = 0; i < s.warning_count; ++i) warnings.push_back(rm_mle_warning(fit, i));
        row.record["warnings"] = warnings;
        rm_mle_free(fit);
      } else {
        bool from_delta = false;
        const rm_prior_config p = prior.priors(m, &from_delta);
        const rm_sampler_config c = sampler.config(seed, true);
        rm_posterior* fit = nullptr;
        check(rm_fit_bayes(ds.handle, &p, &c, &fit), rm_method_name(m));
        const rm_status st = rm_posterior_summary(fit, m, mass, &row.effect);
        rm_posterior_diagnostics d{};
        rm_posterior_diagnostics_get(fit, &d);
        rm_posterior_free(fit);
        check(st, "posterior summary");
        row.record.update(effect_json(row.effect));
        row.record["hdi_mass"] = mass;
        row.record["priors"] = prior_json(p);
        row.record["delta"] = from_delta ? json(prior.delta) : json(nullptr);
        row.record["rhat_theta"] = number_or_null(d.rhat_theta);
        row.record["rhat_tau"] = number_or_null(d.rhat_tau);
        row.record["divergences"] = d.divergences;
        row.record["draws"] = d.draws;
        row.record["mean_accept_stat"] = number_or_null(d.mean_accept_stat);
      }
      rows.push_back(std::move(row));
    }
    return rows;
  }

  std::string render(const std::vector<Row>& rows, uint64_t seed, const std::string& format) const {
    if (format == "csv") {
      std::ostringstream out;
      out << "method,point_log_or,low_log_or,high_log_or,point_or,low_or,high_or,tau_hat,"
             "theta_prior_sd,rhat_theta,divergences,converged,failure_reason,seed\n";
      for (const auto& r : rows) {
        const auto& e = r.effect;
        const auto& j = r.record;
        const bool bayes = r.method != RM_METHOD_MLE;
        out << rm_method_name(r.method) << ',' << fmt(e.point_log_or) << ','
            << fmt(e.has_interval ? e.low_log_or : NAN) << ','
            << fmt(e.has_interval ? e.high_log_or : NAN) << ',' << fmt(e.point_or) << ','
            << fmt(e.has_interval ? e.low_or : NAN) << ','
            << fmt(e.has_interval ? e.high_or : NAN) << ',' << fmt(e.tau_hat) << ','
            << (bayes ? fmt(j["priors"]["theta"]["sd"].get<double>()) : "NA") << ','
            << (bayes && j["rhat_theta"].is_number() ? fmt(j["rhat_theta"].get<double>()) : "NA")
            << ',' << (bayes ? std::to_string(j["divergences"].get<uint64_t>()) : "NA") << ','
            << (bayes ? "NA" : (j["converged"].get<bool>() ? "true" : "false")) << ','
            << (bayes || j["failure_reason"].is_null()
                    ? "NA"
                    : csv_field(j["failure_reason"].get<std::string>()))
            << ',' << seed << '\n';
      }
      return out.str();
    }
    json doc;
    doc["command"] = "fit";
    doc["version"] = rm_version();
    doc["data"] = data;
    doc["seed"] = seed;
    doc["sampler"] = {{"chains", sampler.chains},
                      {"iter", sampler.iterations},
                      {"warmup", sampler.warmup},
                      {"target_accept", sampler.target_accept},
                      {"max_depth", sampler.max_depth}};
    json results = json::array();
    for (const auto& r : rows) results.push_back(r.record);
    doc["results"] = results;
    return doc.dump(2) + "\n";
  }
};

// ---- simulate -------------------------------------------------------------

struct SimulateCommand {
  std::string kind = "rare";
  std::vector<uint32_t> ks;
  std::vector<double> thetas;
  uint32_t replications = 100;
  std::vector<std::string> methods{"wip", "vague", "mle"};
  uint32_t threads = 0;
  double delta = 250.0;
  SamplerFlags sampler;
  bool quiet = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--kind", kind, "Scenario grid: rare or high-baseline")->capture_default_str();
    cmd->add_option("--k", ks, "Keep scenarios with these study counts")->delimiter(',');
    cmd->add_option("--theta", thetas, "Keep scenarios with these true log odds ratios")
        ->delimiter(',');
    cmd->add_option("--replications", replications, "Replicates per scenario")
        ->capture_default_str();
    cmd->add_option("--methods,--method", methods, "Methods to compare")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--threads", threads, "Worker threads, 0 for all cores")->capture_default_str();
    cmd->add_option("--delta", delta, "Plausible odds-ratio range for the WIP")
        ->capture_default_str();
    sampler.chains = 2;
    sampler.iterations = 1500;
    sampler.warmup = 500;
    sampler.add(cmd);
    cmd->add_flag("--quiet", quiet, "No progress on stderr");
  }

  std::string run(uint64_t seed, const std::string& format) const {
    rm_grid_kind grid_kind{};
    check(rm_grid_kind_parse(kind.c_str(), &grid_kind), "--kind");
    if (replications < 1) config_error("--replications must be >= 1");
    const auto list = parse_methods(methods);
    const size_t n = rm_scenario_grid(grid_kind, replications, seed, nullptr, 0);
    std::vector<rm_scenario_spec> grid(n);
    rm_scenario_grid(grid_kind, replications, seed, grid.data(), grid.size());

    std::vector<rm_scenario_spec> selected;
    for (const auto& s : grid) {
      bool keep_k = ks.empty();
      for (uint32_t k : ks) keep_k = keep_k || s.k == k;
      bool keep_theta = thetas.empty();
      for (double t : thetas) keep_theta = keep_theta || std::abs(s.theta_true - t) < 1e-9;
      if (keep_k && keep_theta) selected.push_back(s);
    }
    if (selected.empty()) config_error("--k/--theta select no scenario of the " + kind + " grid");

    rm_simulation_options options{};
    rm_simulation_options_default(&options);
    options.sampler = sampler.config(seed, false);
    options.gh_order = sampler.gh_order;
    options.delta = delta;
    options.threads = threads;
    double wip_sd = 0.0;
    check(rm_wip_sigma(delta, &wip_sd), "--delta");

    json rows = json::array();
    std::ostringstream csv;
    csv << "scenario_id,kind,k,theta_true,tau_true,baseline_low,baseline_high,replications,"
           "method,theta_prior_sd,replications_used,failures,bias_theta,coverage,"
           "mean_interval_length,bias_tau,fraction_single_zero,fraction_double_zero,"
           "mle_failure_fraction,seed\n";
    for (size_t i = 0; i < selected.size(); ++i) {
      const auto& spec = selected[i];
      if (!quiet) {
        std::fprintf(stderr, "scenario %zu/%zu: k=%u theta=%g\n", i + 1, selected.size(), spec.k,
                     spec.theta_true);
      }
      rm_report* report = nullptr;
      check(rm_run_scenario(&spec, list.data(), list.size(), &options, &report),
            "scenario " + std::to_string(spec.scenario_id));
      rm_report_summary summary{};
      rm_report_summary_get(report, &summary);
      for (size_t m = 0; m < rm_report_method_count(report); ++m) {
        rm_method_metrics mm{};
        rm_report_method(report, m, &mm);
        const double prior_sd = mm.method == RM_METHOD_WIP     ? wip_sd
                                : mm.method == RM_METHOD_VAGUE ? 100.0
                                                               : NAN;
        rows.push_back({{"scenario_id", spec.scenario_id},
                        {"kind", kind},
                        {"k", spec.k},
                        {"theta_true", spec.theta_true},
                        {"tau_true", spec.tau_true},
                        {"baseline_low", spec.baseline_low},
                        {"baseline_high", spec.baseline_high},
                        {"replications", spec.replications},
                        {"method", rm_method_name(mm.method)},
                        {"theta_prior_sd", number_or_null(prior_sd)},
                        {"replications_used", mm.replications_used},
                        {"failures", mm.failures},
                        {"bias_theta", number_or_null(mm.bias_theta)},
                        {"coverage", number_or_null(mm.coverage)},
                        {"mean_interval_length", number_or_null(mm.mean_interval_length)},
                        {"bias_tau", number_or_null(mm.bias_tau)},
                        {"fraction_single_zero", summary.fraction_single_zero},
                        {"fraction_double_zero", summary.fraction_double_zero},
                        {"mle_failure_fraction", number_or_null(summary.mle_failure_fraction)},
                        {"seed", spec.seed}});
        csv << spec.scenario_id << ',' << kind << ',' << spec.k << ',' << fmt(spec.theta_true)
            << ',' << fmt(spec.tau_true) << ',' << fmt(spec.baseline_low) << ','
            << fmt(spec.baseline_high) << ',' << spec.replications << ','
            << rm_method_name(mm.method) << ',' << fmt(prior_sd) << ',' << mm.replications_used
            << ',' << mm.failures << ',' << fmt(mm.bias_theta) << ',' << fmt(mm.coverage) << ','
            << fmt(mm.mean_interval_length) << ',' << fmt(mm.bias_tau) << ','
            << fmt(summary.fraction_single_zero) << ',' << fmt(summary.fraction_double_zero)
            << ',' << fmt(summary.mle_failure_fraction) << ',' << spec.seed << '\n';
      }
      rm_report_free(report);
    }
    if (format == "csv") return csv.str();
    json doc;
    doc["command"] = "simulate";
    doc["version"] = rm_version();
    doc["seed"] = seed;
    doc["sampler"] = {{"chains", sampler.chains},
                      {"iter", sampler.iterations},
                      {"warmup", sampler.warmup},
                      {"target_accept", sampler.target_accept},
                      {"max_depth", sampler.max_depth}};
    doc["rows"] = rows;
    return doc.dump(2) + "\n";
  }
};

// ---- forest ---------------------------------------------------------------

std::string run_forest(const std::string& path, const std::string& format) {
  Dataset ds(path);
  const size_t n = rm_dataset_size(ds.handle);
  json rows = json::array();
  std::ostringstream csv;
  csv << "study,log_or,se,ci_low,ci_high,correction_applied\n";
  for (size_t i = 0; i < n; ++i) {
    rm_forest_row r{};
    check(rm_forest_row_get(ds.handle, i, &r), "forest");
    const std::string label = rm_dataset_label(ds.handle, i);
    rows.push_back({{"study", label},
                    {"log_or", r.log_or},
                    {"se", r.se},
                    {"ci", {r.ci_low, r.ci_high}},
                    {"correction_applied", r.correction_applied != 0}});
    csv << csv_field(label) << ',' << fmt(r.log_or) << ',' << fmt(r.se) << ',' << fmt(r.ci_low)
        << ',' << fmt(r.ci_high) << ',' << (r.correction_applied ? "true" : "false") << '\n';
  }
  if (format == "csv") return csv.str();
  json doc;
  doc["command"] = "forest";
  doc["version"] = rm_version();
  doc["data"] = path;
  doc["rows"] = rows;
  return doc.dump(2) + "\n";
}

// ---- wip-sigma ------------------------------------------------------------

std::string run_wip_sigma(double delta, const std::string& format) {
  double sigma = 0.0;
  double ess = 0.0;
  check(rm_wip_sigma(delta, &sigma), "wip-sigma");
  check(rm_unit_information_ess(sigma, &ess), "wip-sigma");
  if (format == "csv") return "delta,sigma,ess\n" + fmt(delta) + ',' + fmt(sigma) + ',' + fmt(ess) + '\n';
  json doc{{"command", "wip-sigma"}, {"delta", delta}, {"sigma", sigma}, {"ess", ess}};
  return doc.dump(2) + "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-effects meta-analysis of rare events"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rm_version()));

  uint64_t seed = 1;
  std::string output;
  std::string format = "json";
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Base random seed")->envname("RAREMETA_SEED")
        ->capture_default_str();
    cmd->add_option("--output,-o", output, "Write to this file instead of stdout");
    cmd->add_option("--format", format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
  };

  auto* fit_cmd = app.add_subcommand("fit", "Fit WIP, vague and/or MLE models to a dataset");
  FitCommand fit;
  fit.add(fit_cmd);
  add_common(fit_cmd);

  auto* sim_cmd = app.add_subcommand("simulate", "Run the simulation grid");
  SimulateCommand sim;
  sim.add(sim_cmd);
  add_common(sim_cmd);

  auto* forest_cmd = app.add_subcommand("forest", "Per-study observed log odds ratios");
  std::string forest_data;
  forest_cmd->add_option("--data", forest_data, "CSV dataset")->required();
  add_common(forest_cmd);

  auto* wip_cmd = app.add_subcommand("wip-sigma", "Theta prior sd and its effective sample size");
  double wip_delta = 250.0;
  wip_cmd->add_option("delta,--delta", wip_delta, "Plausible odds-ratio range")
      ->capture_default_str();
  add_common(wip_cmd);

  for (auto* cmd : {fit_cmd, sim_cmd, forest_cmd, wip_cmd}) cmd->fallthrough();
  app.set_config("--config", "", "JSON file with flag values");
  app.config_formatter(std::make_shared<JsonConfig>([&app]() -> std::string {
    const auto subs = app.get_subcommands();
    return subs.empty() ? std::string() : subs.front()->get_name();
  }));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    std::string text;
    if (fit_cmd->parsed()) {
      text = fit.render(fit.run(seed), seed, format);
    } else if (sim_cmd->parsed()) {
      text = sim.run(seed, format);
    } else if (forest_cmd->parsed()) {
      text = run_forest(forest_data, format);
    } else {
      text = run_wip_sigma(wip_delta, format);
    }
    emit(text, output);
  } catch (const CommandError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(RM_ERR_INTERNAL);
  }
  return 0;
}
