#pragma once

// Attack-side stochastic model: the feint/real Markov renewal process and the
// triage objects derived from it (stationary law, label kernel, posterior).

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "idos/random.hpp"
#include "idos/types.hpp"

namespace idos {

/// kappa_AT: row = current (type, target) pair, column = next pair.
class TypeTargetKernel {
 public:
  TypeTargetKernel() = default;
  TypeTargetKernel(HiddenSpace space, Table rows) : space_(std::move(space)), rows_(std::move(rows)) {
    if (rows_.rows() != space_.size() || rows_.cols() != space_.size())
      throw ConfigError("process.kernel", "kernel must be square over (type, target) pairs");
    require_stochastic(rows_, "process.kernel");
  }

  /// Types drawn i.i.d. with Pr(feint) = eta_fe, targets i.i.d. from
  /// `target_weights` (uniform when empty). Every row is identical.
  static TypeTargetKernel independent(const HiddenSpace& space, double eta_fe,
                                      std::vector<double> target_weights = {}) {
    if (!(eta_fe >= 0.0 && eta_fe <= 1.0)) throw ConfigError("process.eta_fe", "must lie in [0,1]");
    if (target_weights.empty()) target_weights.assign(space.num_targets(), 1.0 / space.num_targets());
    if (target_weights.size() != space.num_targets())
      throw ConfigError("process.target_weights", "one weight per target required");
    Table t(space.size(), space.size());
    for (std::size_t from = 0; from < space.size(); ++from)
      for (AttackType ty : kAttackTypes)
        for (std::size_t tg = 0; tg < space.num_targets(); ++tg)
          t(from, space.index(ty, tg)) = (ty == AttackType::Feint ? eta_fe : 1.0 - eta_fe) * target_weights[tg];
    return {space, std::move(t)};
  }

  const HiddenSpace& space() const noexcept { return space_; }
  const Table& table() const noexcept { return rows_; }
  double operator()(std::size_t from, std::size_t to) const { return rows_(from, to); }

 private:
  HiddenSpace space_;
  Table rows_;
};

/// Inter-arrival law z: exponential with a rate indexed by the (from, to)
/// pairs. `Single` is the Poisson (Condition-1) case with one rate.
class InterArrivalModel {
 public:
  enum class Mode { Single, TypePair, Full };

  InterArrivalModel() = default;

  static InterArrivalModel single(const HiddenSpace& space, double rate) {
    check_rate(rate, "process.rate");
    return InterArrivalModel(Mode::Single, Table(space.size(), space.size(), rate));
  }

  /// rates(from_type, to_type), targets ignored.
  static InterArrivalModel type_pair(const HiddenSpace& space, const Table& rates) {
    if (rates.rows() != kNumAttackTypes || rates.cols() != kNumAttackTypes)
      throw ConfigError("process.mean", "type-pair table must be 2x2");
    Table full(space.size(), space.size());
    for (std::size_t a = 0; a < space.size(); ++a)
      for (std::size_t b = 0; b < space.size(); ++b) {
        const double r = rates(static_cast<std::size_t>(space.type_of(a)), static_cast<std::size_t>(space.type_of(b)));
        check_rate(r, "process.mean." + std::string(to_string(space.type_of(a))) + "." +
                          std::string(to_string(space.type_of(b))));
        full(a, b) = r;
      }
    return InterArrivalModel(Mode::TypePair, std::move(full));
  }

  static InterArrivalModel full(const HiddenSpace& space, Table rates) {
    if (rates.rows() != space.size() || rates.cols() != space.size())
      throw ConfigError("process.rates", "full rate table must be square over (type, target) pairs");
    for (std::size_t a = 0; a < rates.rows(); ++a)
      for (std::size_t b = 0; b < rates.cols(); ++b) check_rate(rates(a, b), "process.rates");
    return InterArrivalModel(Mode::Full, std::move(rates));
  }

  Mode mode() const noexcept { return mode_; }
  double rate(std::size_t from, std::size_t to) const { return rates_(from, to); }
  double mean(std::size_t from, std::size_t to) const { return 1.0 / rates_(from, to); }
  const Table& rates() const noexcept { return rates_; }

  /// Poisson rate when the model is in Condition-1 mode.
  std::optional<double> single_rate() const {
    if (mode_ != Mode::Single) return std::nullopt;
    return rates_(0, 0);
  }

  /// Every mean inter-arrival time multiplied by `rho`.
  InterArrivalModel scaled(double rho) const {
    if (!(rho > 0.0)) throw ConfigError("process.rho", "scaling factor must be positive");
    InterArrivalModel out = *this;
    for (std::size_t a = 0; a < rates_.rows(); ++a)
      for (std::size_t b = 0; b < rates_.cols(); ++b) out.rates_(a, b) = rates_(a, b) / rho;
    return out;
  }

  double sample(std::size_t from, std::size_t to, Rng& rng) const { return rng.exponential(rates_(from, to)); }

 private:
  InterArrivalModel(Mode m, Table r) : mode_(m), rates_(std::move(r)) {}

  static void check_rate(double r, const std::string& where) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError(where, "arrival rate must be positive and finite");
  }

  Mode mode_ = Mode::Single;
  Table rates_;
};

struct AttackEvent {
  std::size_t stage = 0;
  double time = 0.0;
  AttackType type = AttackType::Feint;
  std::size_t target = 0;
  std::size_t pair = 0;  // flattened (type, target)
  friend bool operator==(const AttackEvent&, const AttackEvent&) = default;
};

/// Incremental sampler of the renewal process. The initial pair acts as the
/// virtual predecessor of event 0, so event 0 uses the same laws as the rest.
class AttackGenerator {
 public:
  AttackGenerator(const TypeTargetKernel& kernel, const InterArrivalModel& arrivals, std::size_t initial_pair)
      : kernel_(&kernel), arrivals_(&arrivals), prev_pair_(initial_pair) {
    if (initial_pair >= kernel.space().size()) throw ConfigError("process.initial", "initial pair out of range");
    if (arrivals.rates().rows() != kernel.space().size())
      throw ConfigError("process", "arrival model and kernel disagree on the (type, target) space");
  }

  AttackEvent next(Rng& rng) {
    const std::size_t pair = rng.categorical(kernel_->table().row(prev_pair_));
    const double tau = arrivals_->sample(prev_pair_, pair, rng);
    now_ += tau;
    AttackEvent ev{stage_++, now_, kernel_->space().type_of(pair), kernel_->space().target_of(pair), pair};
    prev_pair_ = pair;
    return ev;
  }

 private:
  const TypeTargetKernel* kernel_;
  const InterArrivalModel* arrivals_;
  std::size_t prev_pair_;
  std::size_t stage_ = 0;
  double now_ = 0.0;
};

inline std::vector<AttackEvent> sample_attack_sequence(const TypeTargetKernel& kernel,
                                                       const InterArrivalModel& arrivals,
                                                       std::size_t initial_pair, std::size_t horizon,
                                                       Rng& rng) {
  AttackGenerator gen(kernel, arrivals, initial_pair);
  std::vector<AttackEvent> out;
  out.reserve(horizon);
  for (std::size_t k = 0; k < horizon; ++k) out.push_back(gen.next(rng));
  return out;
}

/// o(s | type, target): row = hidden pair, column = label.
class RevelationKernel {
 public:
  RevelationKernel() = default;
  RevelationKernel(HiddenSpace hidden, LabelSpace labels, Table rows)
      : hidden_(std::move(hidden)), labels_(std::move(labels)), rows_(std::move(rows)) {
    if (rows_.rows() != hidden_.size() || rows_.cols() != labels_.size())
      throw ConfigError("triage", "revelation kernel shape must be pairs x labels");
    require_stochastic(rows_, "triage.revelation");
  }

  /// Product form: each label dimension is drawn independently given the
  /// hidden pair. factors[d] has one row per hidden pair over that dimension's values.
  static RevelationKernel separable(const HiddenSpace& hidden, const LabelSpace& labels,
                                    const std::vector<Table>& factors) {
    const auto& dims = labels.dimensions();
    if (factors.size() != dims.size()) throw ConfigError("triage", "one factor table per label dimension");
    for (std::size_t d = 0; d < dims.size(); ++d) {
      if (factors[d].rows() != hidden.size() || factors[d].cols() != dims[d].values.size())
        throw ConfigError("triage." + dims[d].name, "factor table has the wrong shape");
      require_stochastic(factors[d], "triage." + dims[d].name);
    }
    Table t(hidden.size(), labels.size());
    for (std::size_t p = 0; p < hidden.size(); ++p)
      for (std::size_t s = 0; s < labels.size(); ++s) {
        double v = 1.0;
        for (std::size_t d = 0; d < dims.size(); ++d) v *= factors[d](p, labels.component(s, d));
        t(p, s) = v;
      }
    return {hidden, labels, std::move(t)};
  }

  const HiddenSpace& hidden() const noexcept { return hidden_; }
  const LabelSpace& labels() const noexcept { return labels_; }
  const Table& table() const noexcept { return rows_; }
  double operator()(std::size_t label, std::size_t pair) const { return rows_(pair, label); }

  std::size_t sample(std::size_t pair, Rng& rng) const { return rng.categorical(rows_.row(pair)); }

 private:
  HiddenSpace hidden_;
  LabelSpace labels_;
  Table rows_;
};

using StationaryDistribution = std::vector<double>;

namespace detail {

// Recurrent classes of the support graph; a unique stationary law exists
// iff there is exactly one.
inline std::vector<std::vector<std::size_t>> recurrent_classes(const Table& p) {
  const std::size_t n = p.rows();
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    reach[i][i] = 1;
    for (std::size_t j = 0; j < n; ++j)
      if (p(i, j) > 0.0) reach[i][j] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = 1;

  std::vector<char> assigned(n, 0);
  std::vector<std::vector<std::size_t>> classes;
  for (std::size_t i = 0; i < n; ++i) {
    if (assigned[i]) continue;
    bool recurrent = true;
    for (std::size_t j = 0; j < n && recurrent; ++j)
      if (reach[i][j] && !reach[j][i]) recurrent = false;
    if (!recurrent) continue;
    std::vector<std::size_t> cls;
    for (std::size_t j = 0; j < n; ++j)
      if (reach[i][j] && reach[j][i]) {
        cls.push_back(j);
        assigned[j] = 1;
      }
    classes.push_back(std::move(cls));
  }
  return classes;
}

}  // namespace detail

/// Solves b = b * kappa_AT, sum(b) = 1. Throws when the chain has more than
/// one closed class (the stationary law would not be unique).
inline StationaryDistribution stationary_distribution(const TypeTargetKernel& kernel) {
  const Table& p = kernel.table();
  const std::size_t n = p.rows();
  const auto classes = detail::recurrent_classes(p);
  if (classes.size() != 1) {
    std::string msg = "stationary distribution is not unique: " + std::to_string(classes.size()) +
                      " closed classes";
    for (const auto& c : classes) {
      msg += " {";
      for (std::size_t i = 0; i < c.size(); ++i) msg += (i ? "," : "") + kernel.space().pair_name(c[i]);
      msg += "}";
    }
    throw ConfigError("process.kernel", msg);
  }

  Eigen::MatrixXd a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p(j, i) - (i == j ? 1.0 : 0.0);
  a.row(static_cast<Eigen::Index>(n - 1)).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  rhs(static_cast<Eigen::Index>(n - 1)) = 1.0;
  const Eigen::VectorXd x = a.fullPivLu().solve(rhs);

  StationaryDistribution b(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    b[i] = std::max(0.0, x(static_cast<Eigen::Index>(i)));
    total += b[i];
  }
  for (double& v : b) v /= total;
  return b;
}

/// kappa_CL. Rows for labels with zero marginal probability are undefined and
/// throw on access.
class CategoryKernel {
 public:
  CategoryKernel(Table rows, std::vector<char> defined) : rows_(std::move(rows)), defined_(std::move(defined)) {}

  std::size_t size() const noexcept { return rows_.rows(); }
  bool defined(std::size_t s) const { return defined_.at(s) != 0; }

  std::span<const double> row(std::size_t s) const {
    if (!defined(s)) throw InsufficientData("label " + std::to_string(s) + " has zero probability; kappa_CL row undefined");
    return rows_.row(s);
  }
  double operator()(std::size_t from, std::size_t to) const { return row(from)[to]; }

 private:
  Table rows_;
  std::vector<char> defined_;
};

/// Pr(s', s) = sum kappa_AT(p'|p) o(s|p) o(s'|p') b(p), normalised over s'.
inline CategoryKernel category_transition_kernel(const TypeTargetKernel& kernel, const RevelationKernel& reveal,
                                                 const StationaryDistribution& b) {
  const std::size_t np = kernel.space().size();
  const std::size_t ns = reveal.labels().size();
  Table joint(ns, ns);
  for (std::size_t p = 0; p < np; ++p) {
    if (b[p] == 0.0) continue;
    for (std::size_t q = 0; q < np; ++q) {
      const double kp = kernel(p, q) * b[p];
      if (kp == 0.0) continue;
      for (std::size_t s = 0; s < ns; ++s) {
        const double left = kp * reveal(s, p);
        if (left == 0.0) continue;
        for (std::size_t s2 = 0; s2 < ns; ++s2) joint(s, s2) += left * reveal(s2, q);
      }
    }
  }
  std::vector<char> defined(ns, 0);
  for (std::size_t s = 0; s < ns; ++s) {
    const double tot = row_sum(joint.row(s));
    if (tot <= 0.0) continue;
    defined[s] = 1;
    for (double& v : joint.row(s)) v /= tot;
  }
  return {std::move(joint), std::move(defined)};
}

/// Marginal Pr(s) under the stationary law.
inline double label_probability(const RevelationKernel& reveal, const StationaryDistribution& b, std::size_t s) {
  double z = 0.0;
  for (std::size_t p = 0; p < b.size(); ++p) z += reveal(s, p) * b[p];
  return z;
}

/// Bayes posterior Pr(type, target | s) over flattened pairs.
inline std::vector<double> posterior(const RevelationKernel& reveal, const StationaryDistribution& b, std::size_t s) {
  if (s >= reveal.labels().size()) throw ConfigError("label", "label index out of range");
  const double z = label_probability(reveal, b, s);
  if (!(z > 0.0))
    throw InsufficientData("label '" + reveal.labels().name(s) + "' has zero probability; posterior undefined");
  std::vector<double> post(b.size());
  for (std::size_t p = 0; p < b.size(); ++p) post[p] = reveal(s, p) * b[p] / z;
  return post;
}

}  // namespace idos
