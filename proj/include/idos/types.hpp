#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace idos {

/// Raised for any invalid scenario input. `where` names the offending
/// section/key (or structure) so the message can point at the config line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& what)
      : std::runtime_error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// Raised when an estimator is asked about a cell it has no samples for.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AttackType : std::uint8_t { Feint = 0, Real = 1 };
inline constexpr std::size_t kNumAttackTypes = 2;
inline constexpr AttackType kAttackTypes[] = {AttackType::Feint, AttackType::Real};

constexpr std::string_view to_string(AttackType t) noexcept {
  return t == AttackType::Feint ? "feint" : "real";
}

inline AttackType parse_attack_type(std::string_view s) {
  if (s == "feint" || s == "FE") return AttackType::Feint;
  if (s == "real" || s == "RE") return AttackType::Real;
  throw ConfigError(std::string(s), "unknown attack type (expected 'feint' or 'real')");
}

/// Dense row-major table of doubles; rows are usually distributions.
class Table {
 public:
  Table() = default;
  Table(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  friend bool operator==(const Table&, const Table&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline constexpr double kRowSumTolerance = 1e-9;

inline double row_sum(std::span<const double> row) {
  double s = 0.0;
  for (double v : row) s += v;
  return s;
}

/// Throws unless every row is a probability distribution.
inline void require_stochastic(const Table& t, const std::string& what) {
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      const double v = t(r, c);
      if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError(what + " row " + std::to_string(r),
                          "entry " + std::to_string(c) + " = " + std::to_string(v) + " outside [0,1]");
    }
    const double s = row_sum(t.row(r));
    if (std::abs(s - 1.0) > kRowSumTolerance)
      throw ConfigError(what + " row " + std::to_string(r),
                        "sums to " + std::to_string(s) + ", expected 1");
  }
}

/// Hidden (type, target) pairs, flattened as type * |targets| + target.
class HiddenSpace {
 public:
  HiddenSpace() = default;
  explicit HiddenSpace(std::vector<std::string> targets) : targets_(std::move(targets)) {
    if (targets_.empty()) throw ConfigError("targets", "target set must be non-empty");
  }

  std::size_t num_targets() const noexcept { return targets_.size(); }
  std::size_t size() const noexcept { return kNumAttackTypes * targets_.size(); }
  const std::vector<std::string>& targets() const noexcept { return targets_; }

  std::size_t index(AttackType type, std::size_t target) const noexcept {
    return static_cast<std::size_t>(type) * targets_.size() + target;
  }
  AttackType type_of(std::size_t pair) const noexcept {
    return static_cast<AttackType>(pair / targets_.size());
  }
  std::size_t target_of(std::size_t pair) const noexcept { return pair % targets_.size(); }

  std::size_t target_index(std::string_view name) const {
    auto it = std::find(targets_.begin(), targets_.end(), name);
    if (it == targets_.end()) throw ConfigError(std::string(name), "unknown target");
    return static_cast<std::size_t>(it - targets_.begin());
  }

  std::string pair_name(std::size_t pair) const {
    return std::string(to_string(type_of(pair))) + "/" + targets_[target_of(pair)];
  }

 private:
  std::vector<std::string> targets_;
};

/// Observable category labels: the product of named dimensions
/// (source, criticality, and optionally time-sensitivity etc.).
/// Label index is mixed-radix with the first dimension most significant.
class LabelSpace {
 public:
  struct Dimension {
    std::string name;
    std::vector<std::string> values;
  };

  LabelSpace() = default;
  explicit LabelSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw ConfigError("triage.dimensions", "at least one label dimension required");
    size_ = 1;
    for (const auto& d : dims_) {
      if (d.values.empty()) throw ConfigError("triage." + d.name, "dimension has no values");
      size_ *= d.values.size();
    }
  }

  std::size_t size() const noexcept { return size_; }
  const std::vector<Dimension>& dimensions() const noexcept { return dims_; }

  std::size_t dimension_index(std::string_view name) const {
    for (std::size_t i = 0; i < dims_.size(); ++i)
      if (dims_[i].name == name) return i;
    throw ConfigError(std::string(name), "unknown label dimension");
  }

  /// Value index of dimension `dim` within `label`.
  std::size_t component(std::size_t label, std::size_t dim) const noexcept {
    std::size_t stride = 1;
    for (std::size_t i = dims_.size(); i-- > dim + 1;) stride *= dims_[i].values.size();
    return (label / stride) % dims_[dim].values.size();
  }

  std::size_t compose(std::span<const std::size_t> components) const noexcept {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i) idx = idx * dims_[i].values.size() + components[i];
    return idx;
  }

  std::string name(std::size_t label) const {
    std::string out;
    for (std::size_t d = 0; d < dims_.size(); ++d) {
      if (d) out += '/';
      out += dims_[d].values[component(label, d)];
    }
    return out;
  }

  std::size_t find(std::string_view label_name) const {
    for (std::size_t i = 0; i < size_; ++i)
      if (name(i) == label_name) return i;
    throw ConfigError(std::string(label_name), "unknown category label");
  }

 private:
  std::vector<Dimension> dims_;
  std::size_t size_ = 0;
};

}  // namespace idos
