#pragma once

// Tier-1 operator: inspection demand (AITN), stress -> efficiency (LOE),
// effective inspection time (EIT), switching and response resolution.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "idos/random.hpp"
#include "idos/types.hpp"

namespace idos {

enum class AlertResponse : std::uint8_t { Dismiss = 0, Escalate = 1, Incomplete = 2, NotInspected = 3 };
inline constexpr std::size_t kNumResponses = 4;
inline constexpr AlertResponse kResponses[] = {AlertResponse::Dismiss, AlertResponse::Escalate,
                                               AlertResponse::Incomplete, AlertResponse::NotInspected};

constexpr std::string_view to_string(AlertResponse w) noexcept {
  switch (w) {
    case AlertResponse::Dismiss: return "FE";
    case AlertResponse::Escalate: return "RE";
    case AlertResponse::Incomplete: return "UN";
    case AlertResponse::NotInspected: return "NI";
  }
  return "?";
}

inline AlertResponse parse_response(std::string_view s) {
  for (AlertResponse w : kResponses)
    if (s == to_string(w)) return w;
  throw ConfigError(std::string(s), "unknown alert response (expected FE, RE, UN or NI)");
}

constexpr AlertResponse complete_response_for(AttackType t) noexcept {
  return t == AttackType::Feint ? AlertResponse::Dismiss : AlertResponse::Escalate;
}

/// How the operator reacts to a new alert while busy.
///   Ambitious: switch to every emphasized alert, never to a de-emphasized one.
///   Tabular:   per-arrival switch probability q(new label | current label, dk);
///              entries past the end of the table reuse the last one.
///              De-emphasized alerts use q scaled by `deemphasized_scale`.
struct SwitchingModel {
  enum class Kind { Ambitious, Tabular };

  Kind kind = Kind::Ambitious;
  std::vector<Table> hazard;  // hazard[dk - 1](current label, new label)
  double deemphasized_scale = 0.0;

  static SwitchingModel ambitious() { return {}; }

  static SwitchingModel tabular(std::vector<Table> hazard, double deemphasized_scale = 0.0) {
    SwitchingModel m{Kind::Tabular, std::move(hazard), deemphasized_scale};
    m.validate();
    return m;
  }

  void validate() const {
    if (kind == Kind::Ambitious) return;
    if (hazard.empty()) throw ConfigError("operator.switch", "tabular switching needs at least one dk row");
    for (std::size_t i = 0; i < hazard.size(); ++i)
      for (std::size_t r = 0; r < hazard[i].rows(); ++r)
        for (std::size_t c = 0; c < hazard[i].cols(); ++c) {
          const double v = hazard[i](r, c);
          if (!(v >= 0.0 && v <= 1.0))
            throw ConfigError("operator.switch dk=" + std::to_string(i + 1),
                              "switch probability " + std::to_string(v) + " outside [0,1]");
        }
    if (!(deemphasized_scale >= 0.0 && deemphasized_scale <= 1.0))
      throw ConfigError("operator.switch_deemphasized", "scale must lie in [0,1]");
  }

  double probability(std::size_t current, std::size_t dk, std::size_t incoming) const {
    const Table& t = hazard[std::min(dk, hazard.size()) - 1];
    return t(current, incoming);
  }
};

struct LoeCurve {
  double threshold = 0.0;  // n-bar: distractions absorbed at full efficiency
  double slope = 0.25;     // efficiency lost per distraction beyond the threshold
  double floor = 0.0;

  double operator()(double n) const {
    if (n <= threshold) return 1.0;
    return std::max(floor, 1.0 - slope * (n - threshold));
  }
};

struct OperatorProfile {
  std::string expertise = "tier1";
  Table mean_inspection;              // d-bar(label, pair), seconds
  double aitn_noise = 5.0;            // half-width of uniform noise on d-bar
  double aitn_min = 0.1;
  std::vector<double> attention_threshold;  // n-bar per inspected label
  double loe_slope = 0.25;
  double loe_floor = 0.0;
  Table success_prob;                 // p_SP(label, pair)
  SwitchingModel switching;
  std::vector<double> mad;            // D_max per label, seconds
  double idle_pickup = 0.0;           // Pr(a finished operator takes a de-emphasized alert)

  void validate() const {
    const std::size_t ns = mean_inspection.rows();
    if (ns == 0) throw ConfigError("operator.mean_inspection", "table is empty");
    if (success_prob.rows() != ns || success_prob.cols() != mean_inspection.cols())
      throw ConfigError("operator.success_prob", "shape does not match mean_inspection");
    if (attention_threshold.size() != ns) throw ConfigError("operator.attention_threshold", "one value per label");
    if (mad.size() != ns) throw ConfigError("operator.mad", "one value per label");
    for (std::size_t s = 0; s < ns; ++s) {
      for (std::size_t p = 0; p < mean_inspection.cols(); ++p) {
        if (!(mean_inspection(s, p) > 0.0))
          throw ConfigError("operator.mean_inspection", "mean inspection time must be positive");
        const double sp = success_prob(s, p);
        if (!(sp >= 0.0 && sp <= 1.0)) throw ConfigError("operator.success_prob", "probability outside [0,1]");
      }
      if (!(mad[s] > 0.0)) throw ConfigError("operator.mad", "maximum allowable delay must be positive");
      if (!(attention_threshold[s] >= 0.0)) throw ConfigError("operator.attention_threshold", "must be >= 0");
    }
    if (!(aitn_noise >= 0.0)) throw ConfigError("operator.aitn_noise", "must be >= 0");
    if (!(aitn_min > 0.0)) throw ConfigError("operator.aitn_min", "must be > 0");
    if (!(loe_slope >= 0.0)) throw ConfigError("operator.loe_slope", "must be >= 0");
    if (!(loe_floor >= 0.0 && loe_floor <= 1.0)) throw ConfigError("operator.loe_floor", "must lie in [0,1]");
    if (!(idle_pickup >= 0.0 && idle_pickup <= 1.0)) throw ConfigError("operator.idle_pickup", "must lie in [0,1]");
    if (switching.kind == SwitchingModel::Kind::Tabular) {
      switching.validate();
      for (const auto& t : switching.hazard)
        if (t.rows() != ns || t.cols() != ns) throw ConfigError("operator.switch", "tables must be labels x labels");
    }
  }

  double capacity_gap(std::size_t s, std::size_t pair) const { return 1.0 - success_prob(s, pair); }
  LoeCurve loe_curve(std::size_t s) const { return {attention_threshold[s], loe_slope, loe_floor}; }
};

/// Book-keeping for the inspection currently in progress.
struct AttentionState {
  std::size_t stage = 0;     // attack stage I_h of the inspected alert
  std::size_t label = 0;
  std::size_t pair = 0;      // hidden (type, target), used only for resolution
  AttackType type = AttackType::Feint;
  double start_time = 0.0;
  double aitn = 0.0;
  double eit = 0.0;
  int distractions = 0;
  double loe = 1.0;
  double last_time = 0.0;

  bool finished() const noexcept { return eit >= aitn; }

  /// Integrates the current (constant) LOE up to time t.
  void advance_to(double t) noexcept {
    if (t > last_time) {
      eit += loe * (t - last_time);
      last_time = t;
    }
  }
};

inline double sample_aitn(const OperatorProfile& profile, std::size_t s, std::size_t pair, Rng& rng) {
  const double mean = profile.mean_inspection(s, pair);
  const double noise = profile.aitn_noise > 0.0 ? rng.uniform(-profile.aitn_noise, profile.aitn_noise) : 0.0;
  return std::max(profile.aitn_min, mean + noise);
}

inline double loe(int distractions, const OperatorProfile& profile, std::size_t s) {
  return profile.loe_curve(s)(static_cast<double>(distractions));
}

struct LoeSegment {
  double loe;
  double duration;
};

/// Exact EIT increment for a piecewise-constant LOE.
inline double accumulate_eit(double eit, std::span<const LoeSegment> segments) {
  for (const auto& seg : segments) eit += seg.loe * seg.duration;
  return eit;
}

inline void accumulate_eit(AttentionState& state, std::span<const LoeSegment> segments) {
  state.eit = accumulate_eit(state.eit, segments);
}

struct SwitchContext {
  std::size_t current_label = 0;
  std::size_t elapsed_stages = 1;  // dk = k - I_h
  std::size_t new_label = 0;
  bool emphasized = true;
};

enum class SwitchChoice { Stay, Switch };

inline SwitchChoice switch_decision(const OperatorProfile& profile, const SwitchContext& ctx, Rng& rng) {
  const auto& sw = profile.switching;
  if (sw.kind == SwitchingModel::Kind::Ambitious) return ctx.emphasized ? SwitchChoice::Switch : SwitchChoice::Stay;
  double p = sw.probability(ctx.current_label, ctx.elapsed_stages, ctx.new_label);
  if (!ctx.emphasized) p *= sw.deemphasized_scale;
  if (p <= 0.0) return SwitchChoice::Stay;
  return rng.bernoulli(p) ? SwitchChoice::Switch : SwitchChoice::Stay;
}

/// Prudent operator: a complete response is always the correct one.
inline AlertResponse resolve_response(const AttentionState& state, const OperatorProfile& profile, Rng& rng) {
  if (!state.finished()) return AlertResponse::Incomplete;
  const double p = profile.success_prob(state.label, state.pair);
  if (p >= 1.0 || rng.bernoulli(p)) return complete_response_for(state.type);
  return AlertResponse::Incomplete;
}

/// Implied kappa_SW row mass: probability that the next inspection happens at
/// dk (summed over incoming labels) when incoming labels are i.i.d. with
/// `label_probs`. Entry `max_dk` holds the mass not spent within max_dk stages.
inline std::vector<double> switch_measure(const SwitchingModel& sw, std::size_t current,
                                          std::span<const double> label_probs, std::size_t max_dk,
                                          bool emphasized = true) {
  std::vector<double> mass(max_dk + 1, 0.0);
  double survive = 1.0;
  for (std::size_t dk = 1; dk <= max_dk; ++dk) {
    double hazard = 0.0;
    if (sw.kind == SwitchingModel::Kind::Ambitious) {
      hazard = emphasized ? 1.0 : 0.0;
    } else {
      for (std::size_t s = 0; s < label_probs.size(); ++s)
        hazard += label_probs[s] * sw.probability(current, dk, s) * (emphasized ? 1.0 : sw.deemphasized_scale);
    }
    mass[dk - 1] = survive * hazard;
    survive *= 1.0 - hazard;
  }
  mass[max_dk] = survive;
  return mass;
}

}  // namespace idos
