#pragma once

// Attention management: de-emphasis actions, stage costs, consolidated cost,
// the tabular Q-learner and policy extraction.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "idos/operator.hpp"
#include "idos/random.hpp"
#include "idos/types.hpp"

namespace idos {

/// a_m: de-emphasize the next m alerts after an inspection starts.
struct AmAction {
  int m = 0;
  friend auto operator<=>(const AmAction&, const AmAction&) = default;
};

using Policy = std::vector<AmAction>;  // indexed by label

inline Policy default_policy(std::size_t num_labels) { return Policy(num_labels, AmAction{0}); }
inline Policy constant_policy(std::size_t num_labels, int m) { return Policy(num_labels, AmAction{m}); }

/// c-bar(w, s). Complete responses are rewards (<= 0), the others costs (>= 0).
class StageCostTable {
 public:
  StageCostTable() = default;
  StageCostTable(LabelSpace labels, Table costs) : labels_(std::move(labels)), costs_(std::move(costs)) {
    if (costs_.rows() != kNumResponses || costs_.cols() != labels_.size())
      throw ConfigError("costs", "table must be responses x labels");
    validate();
  }

  void validate() const {
    for (AlertResponse w : kResponses)
      for (std::size_t s = 0; s < labels_.size(); ++s) {
        const double c = costs_(static_cast<std::size_t>(w), s);
        const std::string where = "costs." + std::string(to_string(w)) + "." + labels_.name(s);
        if (!std::isfinite(c)) throw ConfigError(where, "cost must be finite");
        const bool reward = w == AlertResponse::Dismiss || w == AlertResponse::Escalate;
        if (reward && c > 0.0)
          throw ConfigError(where, "sign convention violated: complete responses are rewards and must be <= 0");
        if (!reward && c < 0.0)
          throw ConfigError(where, "sign convention violated: incomplete/uninspected costs must be >= 0");
      }
  }

  double operator()(AlertResponse w, std::size_t s) const {
    if (s >= costs_.cols()) throw ConfigError("costs", "no entry for label index " + std::to_string(s));
    return costs_(static_cast<std::size_t>(w), s);
  }

  const LabelSpace& labels() const noexcept { return labels_; }
  const Table& table() const noexcept { return costs_; }
  Table& table() noexcept { return costs_; }

 private:
  LabelSpace labels_;
  Table costs_;
};

inline double stage_cost(const StageCostTable& table, AlertResponse w, std::size_t s) { return table(w, s); }

inline double accumulate_coc(double running, const StageCostTable& table, AlertResponse w, std::size_t s) {
  return running + table(w, s);
}

/// alpha = k_c / (k_TI - 1 + k_c).
inline double learning_rate(double kc, std::uint64_t visits) {
  return kc / (static_cast<double>(visits) - 1.0 + kc);
}

/// Estimated discounted cost-to-go per (label, action), with trial counts.
class QTable {
 public:
  QTable() = default;
  QTable(std::size_t num_labels, std::size_t num_actions, double init = 0.0)
      : values_(num_labels, num_actions, init), trials_(num_labels * num_actions, 0) {}

  std::size_t num_labels() const noexcept { return values_.rows(); }
  std::size_t num_actions() const noexcept { return values_.cols(); }

  double operator()(std::size_t s, AmAction a) const { return values_(s, static_cast<std::size_t>(a.m)); }
  double& operator()(std::size_t s, AmAction a) { return values_(s, static_cast<std::size_t>(a.m)); }

  std::uint64_t trials(std::size_t s, AmAction a) const { return trials_[s * num_actions() + static_cast<std::size_t>(a.m)]; }
  std::uint64_t& trials(std::size_t s, AmAction a) { return trials_[s * num_actions() + static_cast<std::size_t>(a.m)]; }

  /// k_TI(s): number of updates made from label s.
  std::uint64_t label_visits(std::size_t s) const {
    std::uint64_t n = 0;
    for (std::size_t a = 0; a < num_actions(); ++a) n += trials_[s * num_actions() + a];
    return n;
  }

  double row_min(std::size_t s) const {
    double best = std::numeric_limits<double>::infinity();
    for (double v : values_.row(s)) best = std::min(best, v);
    return best;
  }

  /// argmin over actions; ties go to the smallest m.
  AmAction argmin(std::size_t s) const {
    std::size_t best = 0;
    for (std::size_t a = 1; a < num_actions(); ++a)
      if (values_(s, a) < values_(s, best)) best = a;
    return AmAction{static_cast<int>(best)};
  }

  const Table& values() const noexcept { return values_; }
  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  Table values_;
  std::vector<std::uint64_t> trials_;
};

inline void q_update(QTable& q, std::size_t s, AmAction a, double coc, std::size_t next_label, double alpha,
                     double gamma) {
  const double target = coc + gamma * q.row_min(next_label);
  q(s, a) = (1.0 - alpha) * q(s, a) + alpha * target;
  ++q.trials(s, a);
}

inline AmAction select_action(const QTable& q, std::size_t s, double epsilon, Rng& rng) {
  if (epsilon >= 1.0 || (epsilon > 0.0 && rng.uniform() < epsilon))
    return AmAction{static_cast<int>(rng.uniform_index(q.num_actions()))};
  return q.argmin(s);
}

inline Policy greedy_policy(const QTable& q) {
  Policy p(q.num_labels());
  for (std::size_t s = 0; s < q.num_labels(); ++s) p[s] = q.argmin(s);
  return p;
}

// Tab-separated text: "label action value visits", '#' lines are comments.
inline constexpr std::string_view kQTableHeader = "# idos-qtable v1";

inline void write_qtable(std::ostream& os, const QTable& q, const LabelSpace& labels) {
  os << kQTableHeader << '\n' << "label\taction\tvalue\tvisits\n";
  char buf[64];
  for (std::size_t s = 0; s < q.num_labels(); ++s)
    for (std::size_t a = 0; a < q.num_actions(); ++a) {
      const AmAction act{static_cast<int>(a)};
      auto res = std::to_chars(buf, buf + sizeof buf, q(s, act));
      os << labels.name(s) << '\t' << a << '\t' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf))
         << '\t' << q.trials(s, act) << '\n';
    }
}

inline QTable read_qtable(std::istream& is, const LabelSpace& labels, std::size_t num_actions) {
  QTable q(labels.size(), num_actions);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("label", 0) == 0) continue;
    }
    std::istringstream ls(line);
    std::string name;
    std::size_t a = 0;
    std::string value_text;
    std::uint64_t visits = 0;
    if (!(ls >> name >> a >> value_text >> visits))
      throw ConfigError("qtable line " + std::to_string(lineno), "expected: label action value visits");
    double value = 0.0;
    auto res = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
    if (res.ec != std::errc{}) throw ConfigError("qtable line " + std::to_string(lineno), "bad value");
    if (a >= num_actions) throw ConfigError("qtable line " + std::to_string(lineno), "action out of range");
    const std::size_t s = labels.find(name);
    q(s, AmAction{static_cast<int>(a)}) = value;
    q.trials(s, AmAction{static_cast<int>(a)}) = visits;
  }
  return q;
}

}  // namespace idos
