#pragma once

// Event-driven simulation of the operator under an IDoS attack with
// attention management, plus Monte-Carlo estimators over its logs.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "idos/attention.hpp"
#include "idos/operator.hpp"
#include "idos/process.hpp"
#include "idos/random.hpp"
#include "idos/types.hpp"

namespace idos {

struct AttackModel {
  HiddenSpace hidden;
  LabelSpace labels;
  TypeTargetKernel kernel;
  InterArrivalModel arrivals;
  RevelationKernel revelation;
  std::size_t initial_pair = 0;
};

enum class LearningRateIndex { Label, LabelAction };

struct AmSettings {
  int max_m = 3;                       // M
  double gamma = 0.95;
  double kc = 10.0;
  double epsilon = 1.0;                // exploration probability while learning
  std::uint64_t explore_inspections = 400000;
  LearningRateIndex rate_index = LearningRateIndex::Label;

  std::size_t num_actions() const noexcept { return static_cast<std::size_t>(max_m) + 1; }
};

struct SimSettings {
  std::size_t horizon = 12000;         // K, alerts per episode
  double shift_seconds = 86400.0;
  std::size_t episodes = 20;
  std::uint64_t seed = 1;
};

struct Scenario {
  AttackModel process;
  OperatorProfile op;
  StageCostTable costs;
  AmSettings am;
  SimSettings sim;
  std::string digest;

  const LabelSpace& labels() const noexcept { return process.labels; }

  void validate() const {
    op.validate();
    costs.validate();
    if (sim.horizon < 1) throw ConfigError("sim.horizon", "K must be >= 1");
    if (!(sim.shift_seconds > 0.0)) throw ConfigError("sim.shift_seconds", "must be positive");
    if (am.max_m < 0) throw ConfigError("am.max_m", "M must be >= 0");
    if (!(am.gamma >= 0.0 && am.gamma < 1.0)) throw ConfigError("am.gamma", "must lie in [0,1)");
    if (!(am.kc > 0.0)) throw ConfigError("am.kc", "must be positive");
    if (!(am.epsilon >= 0.0 && am.epsilon <= 1.0)) throw ConfigError("am.epsilon", "must lie in [0,1]");
    const std::size_t ns = process.labels.size();
    if (op.mean_inspection.rows() != ns || op.mean_inspection.cols() != process.hidden.size())
      throw ConfigError("operator.mean_inspection", "shape must be labels x (type, target) pairs");
    if (costs.table().cols() != ns) throw ConfigError("costs", "one column per label");
  }
};

struct LearnMode {
  double epsilon = 1.0;
};
struct EvaluateMode {
  Policy policy;
};
using RunMode = std::variant<LearnMode, EvaluateMode>;

struct StageRecord {
  std::size_t stage = 0;
  double time = 0.0;
  AttackType type = AttackType::Feint;
  std::size_t target = 0;
  std::size_t label = 0;
  bool emphasized = true;
  AlertResponse response = AlertResponse::NotInspected;
  friend bool operator==(const StageRecord&, const StageRecord&) = default;
};

/// One closed inspection h: alert I_h was inspected under a^h and the window
/// [I_h, I_{h+1}) accumulated consolidated cost `coc`.
struct InspectionRecord {
  std::size_t h = 0;
  std::size_t stage = 0;
  double start = 0.0;
  double end = 0.0;  // arrival time of I_{h+1}
  std::size_t label = 0;
  AmAction action;
  AlertResponse outcome = AlertResponse::Incomplete;
  double coc = 0.0;
  std::size_t next_label = 0;
  double q_before = 0.0;
  double q_after = 0.0;
  friend bool operator==(const InspectionRecord&, const InspectionRecord&) = default;
};

struct EpisodeLog {
  std::uint64_t seed = 0;
  std::string digest;
  std::vector<StageRecord> stages;
  std::vector<InspectionRecord> inspections;
  std::size_t num_stages = 0;
  std::array<std::size_t, kNumResponses> response_counts{};
  double end_time = 0.0;
  friend bool operator==(const EpisodeLog&, const EpisodeLog&) = default;
};

struct EpisodeOptions {
  bool keep_stages = true;
};

namespace detail {

class EpisodeRunner {
 public:
  EpisodeRunner(const Scenario& sc, const RunMode& mode, QTable* q, std::uint64_t seed, const EpisodeOptions& opt)
      : sc_(sc), mode_(mode), q_(q), rng_(seed), opt_(opt) {
    log_.seed = seed;
    log_.digest = sc.digest;
  }

  EpisodeLog run() {
    const auto& proc = sc_.process;
    AttackGenerator gen(proc.kernel, proc.arrivals, proc.initial_pair);

    AttackEvent ev = gen.next(rng_);
    std::size_t label = proc.revelation.sample(ev.pair, rng_);
    if (ev.time > sc_.sim.shift_seconds) {
      log_.end_time = sc_.sim.shift_seconds;
      return std::move(log_);
    }
    push_stage(ev, label, true);
    start_inspection(ev, label, initial_action(label));

    double end = 0.0;
    for (std::size_t k = 1;; ++k) {
      if (k >= sc_.sim.horizon) {
        end = last_time_;
        break;
      }
      ev = gen.next(rng_);
      if (ev.time > sc_.sim.shift_seconds) {
        end = sc_.sim.shift_seconds;
        break;
      }
      label = proc.revelation.sample(ev.pair, rng_);
      const std::size_t dk = k - cur_.stage;
      const bool emphasized = dk > static_cast<std::size_t>(action_.m);
      push_stage(ev, label, emphasized);
      cur_.advance_to(ev.time);

      if (idle_ || cur_.finished()) {
        if (!idle_) {
          set_response(cur_.stage, resolve_response(cur_, sc_.op, rng_));
          coc_ = accumulate_coc(coc_, sc_.costs, outcome_, cur_.label);
          idle_ = true;
        }
        // An idle operator picks up any emphasized alert; a de-emphasized one
        // with probability idle_pickup.
        const bool take = emphasized || (sc_.op.idle_pickup > 0.0 && rng_.bernoulli(sc_.op.idle_pickup));
        if (take) {
          hand_off(ev, label);
        } else {
          not_inspected(k, label);
        }
        continue;
      }

      const bool mad_reached = ev.time - cur_.start_time >= sc_.op.mad[cur_.label];
      const bool switched = !mad_reached && switch_decision(sc_.op, {cur_.label, dk, label, emphasized}, rng_) ==
                                                SwitchChoice::Switch;
      if (mad_reached || switched) {
        set_response(cur_.stage, AlertResponse::Incomplete);
        coc_ = accumulate_coc(coc_, sc_.costs, AlertResponse::Incomplete, cur_.label);
        hand_off(ev, label);
      } else {
        not_inspected(k, label);
        if (emphasized) {
          ++cur_.distractions;
          cur_.loe = loe(cur_.distractions, sc_.op, cur_.label);
        }
      }
    }

    // No further arrivals: the open inspection runs undisturbed until the
    // shift ends, is resolved for the record, and is not a closed inspection
    // (no learning update).
    if (!idle_) {
      cur_.advance_to(sc_.sim.shift_seconds);
      set_response(cur_.stage, resolve_response(cur_, sc_.op, rng_));
    }
    log_.end_time = end;
    return std::move(log_);
  }

 private:
  AmAction initial_action(std::size_t label) {
    if (const auto* ev = std::get_if<EvaluateMode>(&mode_)) return ev->policy.at(label);
    return AmAction{static_cast<int>(rng_.uniform_index(sc_.am.num_actions()))};
  }

  AmAction next_action(std::size_t label) {
    if (const auto* ev = std::get_if<EvaluateMode>(&mode_)) return ev->policy.at(label);
    return select_action(*q_, label, std::get<LearnMode>(mode_).epsilon, rng_);
  }

  void push_stage(const AttackEvent& ev, std::size_t label, bool emphasized) {
    ++log_.num_stages;
    last_time_ = ev.time;
    if (opt_.keep_stages)
      log_.stages.push_back({ev.stage, ev.time, ev.type, ev.target, label, emphasized, AlertResponse::NotInspected});
  }

  void set_response(std::size_t stage, AlertResponse w) {
    outcome_ = w;
    ++log_.response_counts[static_cast<std::size_t>(w)];
    if (opt_.keep_stages) log_.stages[stage].response = w;
  }

  void not_inspected(std::size_t stage, std::size_t label) {
    ++log_.response_counts[static_cast<std::size_t>(AlertResponse::NotInspected)];
    if (opt_.keep_stages) log_.stages[stage].response = AlertResponse::NotInspected;
    coc_ = accumulate_coc(coc_, sc_.costs, AlertResponse::NotInspected, label);
  }

  void start_inspection(const AttackEvent& ev, std::size_t label, AmAction action) {
    cur_ = AttentionState{};
    cur_.stage = ev.stage;
    cur_.label = label;
    cur_.pair = ev.pair;
    cur_.type = ev.type;
    cur_.start_time = ev.time;
    cur_.last_time = ev.time;
    cur_.aitn = sample_aitn(sc_.op, label, ev.pair, rng_);
    cur_.loe = loe(0, sc_.op, label);
    action_ = action;
    coc_ = 0.0;
    idle_ = false;
  }

  void hand_off(const AttackEvent& ev, std::size_t next_label) {
    InspectionRecord rec;
    rec.h = h_;
    rec.stage = cur_.stage;
    rec.start = cur_.start_time;
    rec.end = ev.time;
    rec.label = cur_.label;
    rec.action = action_;
    rec.outcome = outcome_;
    rec.coc = coc_;
    rec.next_label = next_label;
    if (q_ && std::holds_alternative<LearnMode>(mode_)) {
      QTable& q = *q_;
      rec.q_before = q(cur_.label, action_);
      const std::uint64_t visits = sc_.am.rate_index == LearningRateIndex::Label ? q.label_visits(cur_.label) + 1
                                                                                  : q.trials(cur_.label, action_) + 1;
      q_update(q, cur_.label, action_, coc_, next_label, learning_rate(sc_.am.kc, visits), sc_.am.gamma);
      rec.q_after = q(cur_.label, action_);
    }
    log_.inspections.push_back(rec);
    ++h_;
    start_inspection(ev, next_label, next_action(next_label));
  }

  const Scenario& sc_;
  const RunMode& mode_;
  QTable* q_;
  Rng rng_;
  EpisodeOptions opt_;
  EpisodeLog log_;

  AttentionState cur_;
  AmAction action_;
  AlertResponse outcome_ = AlertResponse::Incomplete;
  double coc_ = 0.0;
  bool idle_ = false;
  std::size_t h_ = 0;
  double last_time_ = 0.0;
};

}  // namespace detail

/// Runs one episode (one shift or K alerts, whichever ends first).
/// In learn mode `q` is updated in place at every hand-off.
inline EpisodeLog run_episode(const Scenario& sc, const RunMode& mode, QTable& q, std::uint64_t seed,
                              const EpisodeOptions& opt = {}) {
  if (q.num_labels() != sc.labels().size() || q.num_actions() != sc.am.num_actions())
    throw ConfigError("qtable", "Q-table shape does not match the scenario");
  return detail::EpisodeRunner(sc, mode, &q, seed, opt).run();
}

inline EpisodeLog run_episode(const Scenario& sc, const Policy& policy, std::uint64_t seed,
                              const EpisodeOptions& opt = {}) {
  const RunMode mode = EvaluateMode{policy};
  return detail::EpisodeRunner(sc, mode, nullptr, seed, opt).run();
}

// ---------------------------------------------------------------------------
// Estimators

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

enum class RiskEstimator { FirstVisit, EveryVisit };

/// Number of trailing inspections whose discounted return would be truncated
/// by more than `tol` relative weight.
inline std::size_t return_horizon(double gamma, double tol = 1e-6) {
  if (gamma <= 0.0) return 1;
  return static_cast<std::size_t>(std::ceil(std::log(tol) / std::log(gamma)));
}

/// Discounted return from every closed inspection; entries too close to the
/// end of the episode are std::nullopt.
inline std::vector<std::optional<double>> discounted_returns(const EpisodeLog& log, double gamma) {
  const auto& ins = log.inspections;
  const std::size_t n = ins.size();
  const std::size_t horizon = return_horizon(gamma);
  std::vector<std::optional<double>> out(n);
  double g = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    g = ins[i].coc + gamma * g;
    if (n - i >= horizon) out[i] = g;
  }
  return out;
}

namespace detail {
inline Estimate mean_and_se(const std::vector<double>& xs) {
  Estimate e;
  e.samples = xs.size();
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.value = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.value) * (x - e.value);
    e.std_error = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  } else {
    e.std_error = std::numeric_limits<double>::quiet_NaN();
  }
  return e;
}
}  // namespace detail

/// Monte-Carlo estimate of the risk u(s, sigma) from logs produced under a
/// stationary policy. EveryVisit averages all returns from label s inside an
/// episode and uses episodes as independent batches; FirstVisit takes the
/// first return from s in each episode.
inline Estimate estimate_risk(const std::vector<EpisodeLog>& logs, double gamma, std::size_t label,
                              RiskEstimator method = RiskEstimator::EveryVisit) {
  std::vector<double> samples;
  for (const auto& log : logs) {
    const auto returns = discounted_returns(log, gamma);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < returns.size(); ++i) {
      if (log.inspections[i].label != label || !returns[i]) continue;
      sum += *returns[i];
      ++count;
      if (method == RiskEstimator::FirstVisit) break;
    }
    if (count) samples.push_back(sum / static_cast<double>(count));
  }
  if (samples.empty()) throw InsufficientData("no inspection starts at this label; risk not estimable");
  return detail::mean_and_se(samples);
}

/// Empirical ADL: fraction of closed inspections at (s, a) ending in w_UN.
inline Estimate estimate_adl(const std::vector<EpisodeLog>& logs, std::size_t label, AmAction action) {
  std::size_t n = 0;
  std::size_t un = 0;
  for (const auto& log : logs)
    for (const auto& r : log.inspections)
      if (r.label == label && r.action == action) {
        ++n;
        if (r.outcome == AlertResponse::Incomplete) ++un;
      }
  if (n == 0) throw InsufficientData("no inspections at this (label, action)");
  Estimate e;
  e.samples = n;
  e.value = static_cast<double>(un) / static_cast<double>(n);
  e.std_error = std::sqrt(e.value * (1.0 - e.value) / static_cast<double>(n));
  return e;
}

/// Mean consolidated cost per closed inspection at (s, a).
inline Estimate estimate_mean_coc(const std::vector<EpisodeLog>& logs, std::size_t label, AmAction action) {
  std::vector<double> xs;
  for (const auto& log : logs)
    for (const auto& r : log.inspections)
      if (r.label == label && r.action == action) xs.push_back(r.coc);
  if (xs.empty()) throw InsufficientData("no inspections at this (label, action)");
  return detail::mean_and_se(xs);
}

// ---------------------------------------------------------------------------
// Learning and evaluation drivers

struct LearnResult {
  QTable q;
  std::uint64_t inspections = 0;
  std::size_t episodes = 0;
  bool converged = true;
  std::vector<std::uint64_t> checkpoint_at;  // inspection count at each snapshot
  std::vector<QTable> snapshots;
  std::vector<Policy> greedy_history;
};

struct LearnOptions {
  std::uint64_t inspections = 400000;
  std::size_t checkpoints = 40;
  bool keep_snapshots = false;
  std::optional<QTable> warm_start;
};

/// Explores with the scenario's epsilon until the inspection budget is spent.
/// The greedy policy is sampled at evenly spaced checkpoints; learning is
/// flagged unconverged if it still changes over the final quarter of them.
inline LearnResult learn(const Scenario& sc, std::uint64_t seed, const LearnOptions& opt) {
  LearnResult out;
  out.q = opt.warm_start ? *opt.warm_start : QTable(sc.labels().size(), sc.am.num_actions());
  const RunMode mode = LearnMode{sc.am.epsilon};
  const std::uint64_t every = std::max<std::uint64_t>(1, opt.inspections / std::max<std::size_t>(1, opt.checkpoints));
  std::uint64_t next_checkpoint = every;
  const EpisodeOptions eopt{false};
  while (out.inspections < opt.inspections) {
    const EpisodeLog log = run_episode(sc, mode, out.q, derive_seed(seed, out.episodes), eopt);
    ++out.episodes;
    out.inspections += log.inspections.size();
    if (log.inspections.empty() && out.episodes > 1000)
      throw ConfigError("sim", "episodes produce no closed inspections; nothing to learn");
    while (out.inspections >= next_checkpoint) {
      out.checkpoint_at.push_back(out.inspections);
      out.greedy_history.push_back(greedy_policy(out.q));
      if (opt.keep_snapshots) out.snapshots.push_back(out.q);
      next_checkpoint += every;
    }
  }
  const std::size_t n = out.greedy_history.size();
  for (std::size_t i = n - std::max<std::size_t>(1, n / 4); i + 1 < n; ++i)
    if (out.greedy_history[i] != out.greedy_history.back()) out.converged = false;
  return out;
}

inline std::vector<EpisodeLog> evaluate_policy(const Scenario& sc, const Policy& policy, std::size_t episodes,
                                               std::uint64_t seed) {
  std::vector<EpisodeLog> logs;
  logs.reserve(episodes);
  const EpisodeOptions eopt{false};
  for (std::size_t e = 0; e < episodes; ++e) logs.push_back(run_episode(sc, policy, derive_seed(seed, e), eopt));
  return logs;
}

// ---------------------------------------------------------------------------
// Line-delimited log format, version 1.
//   S <k> <time> <type> <target> <label> <emphasized 0|1> <response>
//   I <h> <stage> <start> <end> <label> <m> <outcome> <coc> <next_label> <q_before> <q_after>

inline constexpr std::string_view kEpisodeLogHeader = "# idos-episode-log v1";

inline void write_episode_log(std::ostream& os, const EpisodeLog& log, const AttackModel& proc) {
  os << kEpisodeLogHeader << '\n';
  os << "# seed=" << log.seed << " digest=" << log.digest << " stages=" << log.num_stages
     << " inspections=" << log.inspections.size() << '\n';
  os << "# S k time type target label emphasized response\n";
  os << "# I h stage start end label m outcome coc next_label q_before q_after\n";
  const auto old_prec = os.precision(17);
  for (const auto& r : log.stages)
    os << "S\t" << r.stage << '\t' << r.time << '\t' << to_string(r.type) << '\t' << proc.hidden.targets()[r.target]
       << '\t' << proc.labels.name(r.label) << '\t' << (r.emphasized ? 1 : 0) << '\t' << to_string(r.response) << '\n';
  for (const auto& r : log.inspections)
    os << "I\t" << r.h << '\t' << r.stage << '\t' << r.start << '\t' << r.end << '\t' << proc.labels.name(r.label)
       << '\t' << r.action.m << '\t' << to_string(r.outcome) << '\t' << r.coc << '\t'
       << proc.labels.name(r.next_label) << '\t' << r.q_before << '\t' << r.q_after << '\n';
  os.precision(old_prec);
}

}  // namespace idos
