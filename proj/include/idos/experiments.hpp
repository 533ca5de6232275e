#pragma once

// Reproducible experiments over a base scenario: learning convergence and the
// cost / frequency / feint / attention sweeps, attack-budget arithmetic, and
// the closed-form vs. simulation validation harness. Artifacts are CSV text
// with a '#' metadata header that embeds the effective config, so a file can
// be regenerated from its own header.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "idos/analytics.hpp"
#include "idos/config.hpp"
#include "idos/engine.hpp"

namespace idos {

// ---------------------------------------------------------------------------
// Attack budget

struct BudgetModel {
  double c_fe = 0.004;  // dollars per feint
  double c_re = 0.04;   // dollars per real attack
  double c_max = 270.0; // dollars per shift
  double shift_seconds = 86400.0;

  void validate() const {
    if (!(c_fe > 0.0 && c_fe < c_re)) throw ConfigError("budget", "need 0 < c_fe < c_re");
    if (!(c_max > 0.0)) throw ConfigError("budget.c_max", "must be positive");
    if (!(shift_seconds > 0.0)) throw ConfigError("budget.shift_seconds", "must be positive");
  }
};

inline double attack_cost_per_shift(const BudgetModel& b, double rate, double eta_fe) {
  if (!(eta_fe >= 0.0 && eta_fe <= 1.0)) throw std::invalid_argument("eta_fe must lie in [0,1]");
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  return b.shift_seconds * rate * (eta_fe * b.c_fe + (1.0 - eta_fe) * b.c_re);
}

/// Rate at which the budget is spent exactly.
inline double solve_rate(const BudgetModel& b, double eta_fe) {
  if (!(eta_fe >= 0.0 && eta_fe <= 1.0)) throw std::invalid_argument("eta_fe must lie in [0,1]");
  const double denom = b.shift_seconds * (eta_fe * b.c_fe + (1.0 - eta_fe) * b.c_re);
  if (!(denom > 0.0)) throw std::invalid_argument("solve_rate: zero cost per attack");
  return b.c_max / denom;
}

/// Expected attack spend per shift for a general renewal process:
/// shift * E[cost per attack] / E[inter-arrival time], both under the stationary law.
inline double expected_attack_cost(const AttackModel& proc, const BudgetModel& b) {
  const auto st = stationary_distribution(proc.kernel);
  double cost = 0.0;
  double gap = 0.0;
  for (std::size_t p = 0; p < st.size(); ++p) {
    cost += st[p] * (proc.hidden.type_of(p) == AttackType::Feint ? b.c_fe : b.c_re);
    for (std::size_t q = 0; q < st.size(); ++q) gap += st[p] * proc.kernel(p, q) * proc.arrivals.mean(p, q);
  }
  return b.shift_seconds * cost / gap;
}

// ---------------------------------------------------------------------------
// Scenario variants

inline void set_incomplete_cost(Scenario& sc, double cost) {
  auto& t = sc.costs.table();
  for (std::size_t s = 0; s < t.cols(); ++s) {
    t(static_cast<std::size_t>(AlertResponse::Incomplete), s) = cost;
    t(static_cast<std::size_t>(AlertResponse::NotInspected), s) = cost;
  }
  sc.costs.validate();
}

inline void set_attention_threshold(Scenario& sc, double n0) {
  std::fill(sc.op.attention_threshold.begin(), sc.op.attention_threshold.end(), n0);
  sc.op.validate();
}

/// i.i.d. types with Pr(feint) = eta, the base scenario's target marginal,
/// and Poisson arrivals at the budget-exhausting rate.
inline void set_feint_mix(Scenario& sc, double eta, const BudgetModel& b) {
  const auto& h = sc.process.hidden;
  const auto st = stationary_distribution(sc.process.kernel);
  std::vector<double> weights(h.num_targets(), 0.0);
  for (std::size_t p = 0; p < st.size(); ++p) weights[h.target_of(p)] += st[p];
  sc.process.kernel = TypeTargetKernel::independent(h, eta, weights);
  sc.process.arrivals = InterArrivalModel::single(h, solve_rate(b, eta));
}

// ---------------------------------------------------------------------------
// Risk summaries

/// Risk averaged over the inspected-label distribution (every return, batch
/// means over episodes).
inline Estimate estimate_average_risk(const std::vector<EpisodeLog>& logs, double gamma) {
  std::vector<double> samples;
  for (const auto& log : logs) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : discounted_returns(log, gamma))
      if (r) {
        sum += *r;
        ++n;
      }
    if (n) samples.push_back(sum / static_cast<double>(n));
  }
  if (samples.empty()) throw InsufficientData("no complete returns in the logs");
  return detail::mean_and_se(samples);
}

struct PolicyRisk {
  std::vector<Estimate> per_label;
  Estimate average;
};

inline PolicyRisk policy_risk(const Scenario& sc, const Policy& policy, std::size_t episodes, std::uint64_t seed) {
  const auto logs = evaluate_policy(sc, policy, episodes, seed);
  PolicyRisk out;
  for (std::size_t s = 0; s < sc.labels().size(); ++s) {
    try {
      out.per_label.push_back(estimate_risk(logs, sc.am.gamma, s));
    } catch (const InsufficientData&) {
      out.per_label.push_back({std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), 0});
    }
  }
  out.average = estimate_average_risk(logs, sc.am.gamma);
  return out;
}

// ---------------------------------------------------------------------------
// Experiment specification

inline constexpr const char* kExperimentNames[] = {"convergence", "cost_sweep", "freq_sweep", "feint_sweep",
                                                   "attention_sweep"};

struct SweepSpec {
  std::string name;
  std::vector<double> grid;
  std::size_t episodes = 20;            // evaluation shifts per policy and point
  std::uint64_t seed = 1;
  std::uint64_t learn_inspections = 400000;
  std::size_t seeds = 10;               // convergence: independent learning runs
  std::size_t checkpoints = 40;
  std::vector<int> fixed_actions;       // extra constant policies a_m to evaluate
  std::vector<double> feint_costs;      // feint_sweep: one block of rows per c_fe
  BudgetModel budget;
  unsigned threads = 0;                 // 0 = hardware concurrency; never affects output

  void validate() const {
    bool known = false;
    for (auto n : kExperimentNames) known = known || name == n;
    if (!known) throw ConfigError("sweep", "unknown experiment '" + name + "'");
    if (name != "convergence" && grid.empty()) throw ConfigError("sweep.grid", "grid must be non-empty");
    for (double v : grid) {
      if (name == "cost_sweep" && !(v >= 0.0)) throw ConfigError("sweep.grid", "costs must be >= 0");
      if (name == "freq_sweep" && !(v > 0.0)) throw ConfigError("sweep.grid", "rho must be > 0");
      if (name == "feint_sweep" && !(v >= 0.0 && v <= 1.0)) throw ConfigError("sweep.grid", "eta_fe must lie in [0,1]");
      if (name == "attention_sweep" && !(v >= 0.0)) throw ConfigError("sweep.grid", "n0 must be >= 0");
    }
    if (episodes < 2) throw ConfigError("sweep.episodes", "need at least 2 episodes for standard errors");
    if (name == "convergence" && seeds < 1) throw ConfigError("sweep.seeds", "need at least one seed");
    budget.validate();
    for (double c : feint_costs)
      if (!(c > 0.0 && c < budget.c_re)) throw ConfigError("sweep.feint_costs", "need 0 < c_fe < c_re");
  }
};

inline std::vector<double> arange(double lo, double hi, double step) {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  // Rounded to 12 decimals so 0.1-steps print as 0.3, not 0.30000000000000004.
  for (long i = 0; i <= n; ++i) out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
  return out;
}

/// Default grids and settings per experiment.
inline SweepSpec default_sweep(const std::string& name, const Scenario& sc) {
  SweepSpec spec;
  spec.name = name;
  spec.episodes = sc.sim.episodes;
  spec.seed = sc.sim.seed;
  spec.learn_inspections = sc.am.explore_inspections;
  if (name == "cost_sweep") spec.grid = arange(0.0, 1000.0, 100.0);
  if (name == "freq_sweep") spec.grid = arange(0.25, 2.5, 0.25);
  if (name == "feint_sweep") spec.grid = arange(0.0, 1.0, 0.1);
  if (name == "attention_sweep") spec.grid = arange(0.0, 6.0, 1.0);
  if (name == "feint_sweep") spec.feint_costs = {spec.budget.c_re / 10.0, spec.budget.c_re / 2.0};
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// CSV helpers

namespace detail {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  return format_number(v);
}

inline std::string join_numbers(const std::vector<double>& xs) {
  std::string out;
  for (double x : xs) out += (out.empty() ? "" : " ") + num(x);
  return out;
}

inline std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (int x : xs) out += (out.empty() ? "" : " ") + std::to_string(x);
  return out;
}

/// Runs f(i) for i in [0, n) on a few threads; results are written by index.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < n; i = next++) f(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

struct Artifact {
  std::string filename;
  std::string text;
};

inline constexpr std::string_view kArtifactHeader = "# idos-artifact v1";

/// Metadata block: everything needed to rebuild the artifact.
inline std::string artifact_header(const std::string& experiment, const std::string& effective_config,
                                   const std::string& digest, const SweepSpec& spec, const Scenario& sc) {
  std::ostringstream os;
  os << kArtifactHeader << '\n';
  os << "# experiment=" << experiment << '\n';
  os << "# config_digest=" << digest << '\n';
  os << "# seed=" << spec.seed << '\n';
  os << "# episodes=" << spec.episodes << '\n';
  os << "# learn_inspections=" << spec.learn_inspections << '\n';
  os << "# seeds=" << spec.seeds << '\n';
  os << "# checkpoints=" << spec.checkpoints << '\n';
  os << "# grid=" << detail::join_numbers(spec.grid) << '\n';
  os << "# fixed_actions=" << detail::join_ints(spec.fixed_actions) << '\n';
  os << "# feint_costs=" << detail::join_numbers(spec.feint_costs) << '\n';
  os << "# budget=" << detail::num(spec.budget.c_fe) << ' ' << detail::num(spec.budget.c_re) << ' '
     << detail::num(spec.budget.c_max) << ' ' << detail::num(spec.budget.shift_seconds) << '\n';
  os << "# gamma=" << detail::num(sc.am.gamma) << " epsilon=" << detail::num(sc.am.epsilon)
     << " kc=" << detail::num(sc.am.kc) << " max_m=" << sc.am.max_m << '\n';
  os << "# warm_start=0\n";
  std::istringstream cfg(effective_config);
  std::string line;
  while (std::getline(cfg, line)) os << "# config: " << line << '\n';
  return os.str();
}

struct ArtifactMetadata {
  std::string experiment;
  std::string digest;
  std::string config_text;
  SweepSpec spec;
};

inline ArtifactMetadata parse_artifact_header(const std::string& text) {
  ArtifactMetadata meta;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kArtifactHeader) throw ConfigError("artifact", "missing '# idos-artifact v1' header");
  std::map<std::string, std::string> kv;
  while (std::getline(is, line) && line.rfind("#", 0) == 0) {
    if (line.rfind("# config: ", 0) == 0) {
      meta.config_text += line.substr(10) + '\n';
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(2, eq - 2)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw ConfigError("artifact", "header lacks '" + k + "'");
    return it->second;
  };
  auto numbers = [](const std::string& s) {
    std::vector<double> out;
    for (const auto& w : split_words(s)) out.push_back(std::stod(w));
    return out;
  };
  meta.experiment = get("experiment");
  meta.digest = get("config_digest");
  auto& spec = meta.spec;
  spec.name = meta.experiment;
  spec.seed = std::stoull(get("seed"));
  spec.episodes = std::stoull(get("episodes"));
  spec.learn_inspections = std::stoull(get("learn_inspections"));
  spec.seeds = std::stoull(get("seeds"));
  spec.checkpoints = std::stoull(get("checkpoints"));
  spec.grid = numbers(get("grid"));
  for (double a : numbers(get("fixed_actions"))) spec.fixed_actions.push_back(static_cast<int>(a));
  spec.feint_costs = numbers(get("feint_costs"));
  const auto b = numbers(get("budget"));
  if (b.size() != 4) throw ConfigError("artifact", "budget needs 4 values");
  spec.budget = {b[0], b[1], b[2], b[3]};
  return meta;
}

// ---------------------------------------------------------------------------
// Experiments

namespace detail {

struct PointResult {
  double value = 0.0;
  double extra = 0.0;  // c_fe for feint rows
  double attack_cost = std::numeric_limits<double>::quiet_NaN();
  Policy greedy;
  bool converged = true;
  PolicyRisk optimal;
  PolicyRisk fallback;  // default policy
  std::vector<PolicyRisk> fixed;
};

inline PointResult run_point(const Scenario& sc, const SweepSpec& spec, std::uint64_t learn_seed) {
  PointResult r;
  LearnOptions lo;
  lo.inspections = spec.learn_inspections;
  lo.checkpoints = spec.checkpoints;
  const auto learned = learn(sc, learn_seed, lo);
  r.greedy = greedy_policy(learned.q);
  r.converged = learned.converged;
  // Common evaluation seeds across policies and grid points.
  const std::uint64_t eval_seed = derive_seed(spec.seed, 0xe7a1);
  r.optimal = policy_risk(sc, r.greedy, spec.episodes, eval_seed);
  r.fallback = policy_risk(sc, default_policy(sc.labels().size()), spec.episodes, eval_seed);
  for (int m : spec.fixed_actions) {
    if (m < 0 || m > sc.am.max_m) throw ConfigError("sweep.fixed_actions", "action outside 0..M");
    r.fixed.push_back(policy_risk(sc, constant_policy(sc.labels().size(), m), spec.episodes, eval_seed));
  }
  return r;
}

inline std::string sweep_csv(const Scenario& sc, const SweepSpec& spec, const std::string& value_column,
                             bool with_extra, const std::vector<PointResult>& points) {
  std::ostringstream os;
  const auto& labels = sc.labels();
  os << value_column;
  if (with_extra) os << ",c_fe";
  os << ",attack_cost,converged";
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const std::string n = labels.name(s);
    os << ",greedy[" << n << "],risk_optimal[" << n << "],se_optimal[" << n << "],risk_default[" << n
       << "],se_default[" << n << "],margin[" << n << "],se_margin[" << n << "]";
    for (int m : spec.fixed_actions) os << ",risk_a" << m << "[" << n << "],se_a" << m << "[" << n << "]";
  }
  os << ",risk_optimal[avg],se_optimal[avg],risk_default[avg],se_default[avg],margin[avg],se_margin[avg]\n";
  for (const auto& p : points) {
    os << num(p.value);
    if (with_extra) os << ',' << num(p.extra);
    os << ',' << num(p.attack_cost) << ',' << (p.converged ? 1 : 0);
    for (std::size_t s = 0; s < labels.size(); ++s) {
      const auto& o = p.optimal.per_label[s];
      const auto& d = p.fallback.per_label[s];
      os << ',' << p.greedy[s].m << ',' << num(o.value) << ',' << num(o.std_error) << ',' << num(d.value) << ','
         << num(d.std_error) << ',' << num(d.value - o.value) << ','
         << num(std::hypot(o.std_error, d.std_error));
      for (const auto& f : p.fixed) os << ',' << num(f.per_label[s].value) << ',' << num(f.per_label[s].std_error);
    }
    const auto& o = p.optimal.average;
    const auto& d = p.fallback.average;
    os << ',' << num(o.value) << ',' << num(o.std_error) << ',' << num(d.value) << ',' << num(d.std_error) << ','
       << num(d.value - o.value) << ',' << num(std::hypot(o.std_error, d.std_error)) << '\n';
  }
  return os.str();
}

inline std::vector<Artifact> run_convergence(const Scenario& sc, const SweepSpec& spec, const std::string& header) {
  struct SeedResult {
    LearnResult learned;
    PolicyRisk optimal;
    PolicyRisk fallback;
  };
  std::vector<SeedResult> results(spec.seeds);
  parallel_for(spec.seeds, spec.threads, [&](std::size_t i) {
    LearnOptions lo;
    lo.inspections = spec.learn_inspections;
    lo.checkpoints = spec.checkpoints;
    lo.keep_snapshots = true;
    auto& r = results[i];
    r.learned = learn(sc, derive_seed(spec.seed, i), lo);
    const std::uint64_t eval_seed = derive_seed(spec.seed, 0xe7a1);
    r.optimal = policy_risk(sc, greedy_policy(r.learned.q), spec.episodes, eval_seed);
    r.fallback = policy_risk(sc, default_policy(sc.labels().size()), spec.episodes, eval_seed);
  });

  const auto& labels = sc.labels();
  std::ostringstream traj;
  traj << header << "run,inspections,label";
  for (int m = 0; m <= sc.am.max_m; ++m) traj << ",q_a" << m;
  for (int m = 0; m <= sc.am.max_m; ++m) traj << ",trials_a" << m;
  traj << ",greedy\n";
  std::ostringstream summary;
  summary << header << "run,label,greedy,converged,q_min,risk_optimal,se_optimal,risk_default,se_default,reduction\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    for (std::size_t c = 0; c < r.learned.snapshots.size(); ++c) {
      const QTable& q = r.learned.snapshots[c];
      for (std::size_t s = 0; s < labels.size(); ++s) {
        traj << i << ',' << r.learned.checkpoint_at[c] << ',' << labels.name(s);
        for (int m = 0; m <= sc.am.max_m; ++m) traj << ',' << num(q(s, AmAction{m}));
        for (int m = 0; m <= sc.am.max_m; ++m) traj << ',' << q.trials(s, AmAction{m});
        traj << ',' << q.argmin(s).m << '\n';
      }
    }
    for (std::size_t s = 0; s < labels.size(); ++s) {
      const auto& o = r.optimal.per_label[s];
      const auto& d = r.fallback.per_label[s];
      summary << i << ',' << labels.name(s) << ',' << r.learned.q.argmin(s).m << ',' << (r.learned.converged ? 1 : 0)
              << ',' << num(r.learned.q.row_min(s)) << ',' << num(o.value) << ',' << num(o.std_error) << ','
              << num(d.value) << ',' << num(d.std_error) << ',' << num((d.value - o.value) / d.value) << '\n';
    }
  }
  return {{"convergence.csv", traj.str()}, {"convergence_summary.csv", summary.str()}};
}

}  // namespace detail

/// Runs one named experiment. `effective_config` is the loader's echo of the
/// base scenario and is embedded in the artifact header.
inline std::vector<Artifact> run_experiment(const LoadedScenario& base, const SweepSpec& spec) {
  spec.validate();
  const Scenario& sc = base.scenario;
  const std::string header = artifact_header(spec.name, base.effective_config, sc.digest, spec, sc);
  if (spec.name == "convergence") return detail::run_convergence(sc, spec, header);

  struct Job {
    double value;
    double extra;
  };
  std::vector<Job> jobs;
  if (spec.name == "feint_sweep") {
    const auto costs = spec.feint_costs.empty() ? std::vector<double>{spec.budget.c_fe} : spec.feint_costs;
    for (double c : costs)
      for (double v : spec.grid) jobs.push_back({v, c});
  } else {
    for (double v : spec.grid) jobs.push_back({v, 0.0});
  }

  std::vector<detail::PointResult> points(jobs.size());
  detail::parallel_for(jobs.size(), spec.threads, [&](std::size_t i) {
    Scenario local = sc;
    const double v = jobs[i].value;
    double attack_cost = std::numeric_limits<double>::quiet_NaN();
    if (spec.name == "cost_sweep") {
      set_incomplete_cost(local, v);
    } else if (spec.name == "freq_sweep") {
      local.process.arrivals = sc.process.arrivals.scaled(v);
      attack_cost = expected_attack_cost(local.process, spec.budget);
    } else if (spec.name == "feint_sweep") {
      BudgetModel b = spec.budget;
      b.c_fe = jobs[i].extra;
      set_feint_mix(local, v, b);
      attack_cost = attack_cost_per_shift(b, solve_rate(b, v), v);
    } else if (spec.name == "attention_sweep") {
      set_attention_threshold(local, v);
    }
    auto r = detail::run_point(local, spec, derive_seed(spec.seed, i));
    r.value = v;
    r.extra = jobs[i].extra;
    r.attack_cost = attack_cost;
    points[i] = std::move(r);
  });

  const std::map<std::string, std::string> columns = {
      {"cost_sweep", "incomplete_cost"}, {"freq_sweep", "rho"}, {"feint_sweep", "eta_fe"}, {"attention_sweep", "n0"}};
  return {{spec.name + ".csv",
           header + detail::sweep_csv(sc, spec, columns.at(spec.name), spec.name == "feint_sweep", points)}};
}

/// Re-runs an artifact from its own header (config text + spec).
inline std::vector<Artifact> regenerate(const std::string& artifact_text, unsigned threads = 0) {
  auto meta = parse_artifact_header(artifact_text);
  const auto base = load_scenario(meta.config_text);
  if (base.scenario.digest != meta.digest)
    throw ConfigError("artifact", "embedded config digest " + base.scenario.digest + " does not match header " +
                                      meta.digest);
  meta.spec.threads = threads;
  return run_experiment(base, meta.spec);
}

// ---------------------------------------------------------------------------
// Closed form vs. simulation

struct ValidationRow {
  std::size_t label = 0;
  int m = 0;
  std::size_t inspections = 0;
  double adl_closed = 0.0;
  Estimate adl_sim;
  bool adl_pass = false;
  double coc_closed = 0.0;
  Estimate coc_sim;
  bool coc_pass = false;
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  std::vector<char> lemma1;  // per label: closed-form ADL strictly decreasing over the m grid
  std::vector<char> prop3;   // per label: ECoC inside [c_min, c_max] for grid m >= m_lower
  double adl_tolerance = 0.01;
  double coc_sigmas = 2.0;

  bool passed() const {
    for (const auto& r : rows)
      if (!r.adl_pass || !r.coc_pass) return false;
    for (char ok : lemma1)
      if (!ok) return false;
    for (char ok : prop3)
      if (!ok) return false;
    return true;
  }
};

struct ValidationOptions {
  std::vector<int> m_grid = {0, 1, 2, 3};
  std::size_t inspections = 100000;  // per (label, m) cell
  double adl_tolerance = 0.01;
  double coc_sigmas = 2.0;
  double eps0 = 0.01;
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

/// Simulates the constant policy a_m until every label has at least
/// `inspections` closed inspections, then compares with the closed forms.
inline ValidationReport validate_closed_forms(const Scenario& sc, const ValidationOptions& opt) {
  if (sc.op.switching.kind != SwitchingModel::Kind::Ambitious)
    throw ConfigError("operator.switching", "validation needs an ambitious operator");
  if (sc.op.idle_pickup != 0.0)
    throw ConfigError("operator.idle_pickup", "validation needs idle_pickup = 0 (windows of exactly m+1 alerts)");
  const auto ctx = ClosedFormContext::from_scenario(sc);
  const std::size_t ns = sc.labels().size();
  ValidationReport rep;
  rep.adl_tolerance = opt.adl_tolerance;
  rep.coc_sigmas = opt.coc_sigmas;

  std::vector<std::vector<ValidationRow>> per_m(opt.m_grid.size());
  detail::parallel_for(opt.m_grid.size(), opt.threads, [&](std::size_t mi) {
    const int m = opt.m_grid[mi];
    Scenario local = sc;
    local.am.max_m = std::max(local.am.max_m, m);
    const Policy policy = constant_policy(ns, m);
    std::vector<std::size_t> counts(ns, 0);
    std::vector<std::size_t> un(ns, 0);
    std::vector<double> sum(ns, 0.0), sum2(ns, 0.0);
    for (std::uint64_t e = 0;; ++e) {
      bool enough = true;
      for (std::size_t s = 0; s < ns; ++s)
        if (!ctx.posterior[s].empty() && counts[s] < opt.inspections) enough = false;
      if (enough) break;
      if (e > 100000) throw InsufficientData("validation: label counts do not grow");
      const auto log = run_episode(local, policy, derive_seed(derive_seed(opt.seed, static_cast<std::uint64_t>(m)), e), {false});
      for (const auto& r : log.inspections) {
        ++counts[r.label];
        if (r.outcome == AlertResponse::Incomplete) ++un[r.label];
        sum[r.label] += r.coc;
        sum2[r.label] += r.coc * r.coc;
      }
    }
    for (std::size_t s = 0; s < ns; ++s) {
      if (ctx.posterior[s].empty()) continue;
      ValidationRow row;
      row.label = s;
      row.m = m;
      const double n = static_cast<double>(counts[s]);
      row.inspections = counts[s];
      row.adl_closed = adl_closed_form(ctx, s, m);
      row.adl_sim.value = static_cast<double>(un[s]) / n;
      row.adl_sim.std_error = std::sqrt(row.adl_sim.value * (1.0 - row.adl_sim.value) / n);
      row.adl_sim.samples = counts[s];
      row.adl_pass = std::abs(row.adl_sim.value - row.adl_closed) <= opt.adl_tolerance;
      row.coc_closed = ecoc_closed_form(ctx, s, m).value;
      row.coc_sim.value = sum[s] / n;
      const double var = std::max(0.0, (sum2[s] - n * row.coc_sim.value * row.coc_sim.value) / (n - 1.0));
      row.coc_sim.std_error = std::sqrt(var / n);
      row.coc_sim.samples = counts[s];
      row.coc_pass = std::abs(row.coc_sim.value - row.coc_closed) <= opt.coc_sigmas * row.coc_sim.std_error;
      per_m[mi].push_back(row);
    }
  });
  for (auto& rows : per_m)
    for (auto& r : rows) rep.rows.push_back(r);

  auto grid = opt.m_grid;
  std::sort(grid.begin(), grid.end());
  for (std::size_t s = 0; s < ns; ++s) {
    if (ctx.posterior[s].empty()) {
      rep.lemma1.push_back(1);
      rep.prop3.push_back(1);
      continue;
    }
    bool dec = true;
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (!(adl_closed_form(ctx, s, grid[i]) < adl_closed_form(ctx, s, grid[i - 1]))) dec = false;
    rep.lemma1.push_back(dec);
    bool inside = true;
    for (int m : grid) {
      const auto b = ecoc_bounds(ctx, s, opt.eps0, m);
      if (m < b.m_lower) continue;
      const double c = ecoc_closed_form(ctx, s, m).value;
      const double tol = 1e-9 * std::max(1.0, std::abs(c));
      if (c < b.c_min - tol || c > b.c_max + tol) inside = false;
    }
    rep.prop3.push_back(inside);
  }
  return rep;
}

inline std::string validation_csv(const ValidationReport& rep, const LabelSpace& labels) {
  std::ostringstream os;
  os << "label,m,inspections,adl_closed,adl_sim,adl_se,adl_pass,coc_closed,coc_sim,coc_se,coc_pass\n";
  for (const auto& r : rep.rows)
    os << labels.name(r.label) << ',' << r.m << ',' << r.inspections << ',' << detail::num(r.adl_closed) << ','
       << detail::num(r.adl_sim.value) << ',' << detail::num(r.adl_sim.std_error) << ',' << (r.adl_pass ? 1 : 0) << ','
       << detail::num(r.coc_closed) << ',' << detail::num(r.coc_sim.value) << ',' << detail::num(r.coc_sim.std_error)
       << ',' << (r.coc_pass ? 1 : 0) << '\n';
  for (std::size_t s = 0; s < rep.lemma1.size(); ++s)
    os << "# " << labels.name(s) << " lemma1_strictly_decreasing=" << (rep.lemma1[s] ? 1 : 0)
       << " ecoc_within_bounds=" << (rep.prop3[s] ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace idos
