#pragma once

// Closed forms for an ambitious operator under Poisson arrivals: inspection
// time under a_m is Erlang(m + 1, beta), so completion odds, ADL, ECoC and
// their limits have explicit expressions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "idos/attention.hpp"
#include "idos/engine.hpp"
#include "idos/process.hpp"
#include "idos/types.hpp"

namespace idos {

/// Pr(Erlang(m+1, beta) >= d) = sum_{n<=m} e^{-beta d} (beta d)^n / n!,
/// accumulated in log space so beta*d up to ~1e3 stays accurate.
inline double erlang_completion(int m, double beta, double d) {
  if (m < 0) throw std::invalid_argument("erlang_completion: m must be >= 0");
  const double x = beta * d;
  if (x <= 0.0) return 1.0;
  const double log_x = std::log(x);
  // Largest term is at n = min(m, floor(x)); scale by it before summing.
  const int peak = static_cast<int>(std::min<double>(m, std::floor(x)));
  const double log_peak = -x + peak * log_x - std::lgamma(peak + 1.0);
  double sum = 0.0;
  for (int n = 0; n <= m; ++n) {
    const double log_term = -x + n * log_x - std::lgamma(n + 1.0);
    sum += std::exp(log_term - log_peak);
  }
  return std::min(1.0, std::exp(log_peak + std::log(sum)));
}

/// Inputs for the closed forms. d is the mean inspection time (AITN taken
/// equal to its mean), costs follow the stage-cost sign convention.
struct ClosedFormContext {
  HiddenSpace hidden;
  LabelSpace labels;
  double beta = 0.0;
  std::vector<std::vector<double>> posterior;  // [label][pair]; empty row = label never observed
  Table d;                                     // [label][pair]
  Table success_prob;                          // [label][pair]
  StageCostTable costs;
  double gamma = 0.95;

  /// Requires the scenario to be in Condition-1 (single Poisson rate) mode.
  static ClosedFormContext from_scenario(const Scenario& sc) {
    const auto rate = sc.process.arrivals.single_rate();
    if (!rate)
      throw ConfigError("process.arrival_mode",
                        "closed forms need a single Poisson rate; mixed per-pair rates are refused");
    ClosedFormContext ctx;
    ctx.hidden = sc.process.hidden;
    ctx.labels = sc.process.labels;
    ctx.beta = *rate;
    const auto b = stationary_distribution(sc.process.kernel);
    ctx.posterior.resize(ctx.labels.size());
    for (std::size_t s = 0; s < ctx.labels.size(); ++s) {
      if (label_probability(sc.process.revelation, b, s) > 0.0) ctx.posterior[s] = idos::posterior(sc.process.revelation, b, s);
    }
    ctx.d = sc.op.mean_inspection;
    ctx.success_prob = sc.op.success_prob;
    ctx.costs = sc.costs;
    ctx.gamma = sc.am.gamma;
    return ctx;
  }

  const std::vector<double>& post(std::size_t s) const {
    if (s >= posterior.size() || posterior[s].empty())
      throw InsufficientData("label '" + (s < labels.size() ? labels.name(s) : std::to_string(s)) +
                             "' has zero probability; closed forms undefined");
    return posterior[s];
  }
};

/// p_UN(s, a_m) = sum_p Pr(p|s) [1 - p_SP E(m, beta, d)].
inline double adl_closed_form(const ClosedFormContext& ctx, std::size_t s, int m) {
  const auto& post = ctx.post(s);
  double p = 0.0;
  for (std::size_t pair = 0; pair < post.size(); ++pair) {
    if (post[pair] == 0.0) continue;
    p += post[pair] * (1.0 - ctx.success_prob(s, pair) * erlang_completion(m, ctx.beta, ctx.d(s, pair)));
  }
  return std::clamp(p, 0.0, 1.0);
}

/// lambda(s, m, phi): expected reward of complete responses for target phi.
inline double expected_reward(const ClosedFormContext& ctx, std::size_t s, int m, std::size_t target) {
  const auto& post = ctx.post(s);
  double lam = 0.0;
  for (AttackType t : kAttackTypes) {
    const std::size_t pair = ctx.hidden.index(t, target);
    lam += ctx.costs(complete_response_for(t), s) * post[pair] * ctx.success_prob(s, pair) *
           erlang_completion(m, ctx.beta, ctx.d(s, pair));
  }
  return lam;
}

/// ECoC and its split into ADL impact, inattention impact and reward.
struct EcocBreakdown {
  double value = 0.0;        // simplified prudent-operator form
  double adl_term = 0.0;     // p_UN * c(w_UN, s)
  double inattention = 0.0;  // m * c(w_NI, s)
  double reward = 0.0;       // sum_phi lambda(s, m, phi)
};

inline EcocBreakdown ecoc_closed_form(const ClosedFormContext& ctx, std::size_t s, int m) {
  const auto& post = ctx.post(s);
  const double c_un = ctx.costs(AlertResponse::Incomplete, s);
  const double c_ni = ctx.costs(AlertResponse::NotInspected, s);
  EcocBreakdown out;
  double gain = 0.0;
  for (std::size_t pair = 0; pair < post.size(); ++pair) {
    if (post[pair] == 0.0) continue;
    const AlertResponse w = complete_response_for(ctx.hidden.type_of(pair));
    const double p_complete = ctx.success_prob(s, pair) * erlang_completion(m, ctx.beta, ctx.d(s, pair));
    gain += post[pair] * p_complete * (ctx.costs(w, s) - c_un);
  }
  out.value = gain + m * c_ni + c_un;
  out.adl_term = adl_closed_form(ctx, s, m) * c_un;
  out.inattention = m * c_ni;
  for (std::size_t tg = 0; tg < ctx.hidden.num_targets(); ++tg) out.reward += expected_reward(ctx, s, m, tg);
  return out;
}

/// Minimum achievable ADL: posterior-weighted capacity gap.
inline double adl_limit(const ClosedFormContext& ctx, std::size_t s) {
  const auto& post = ctx.post(s);
  double p = 0.0;
  for (std::size_t pair = 0; pair < post.size(); ++pair) p += post[pair] * (1.0 - ctx.success_prob(s, pair));
  return std::clamp(p, 0.0, 1.0);
}

/// Smallest m with E(m, beta, d) >= 1 - eps0 for every pair in the posterior support.
inline int min_deemphasis(const ClosedFormContext& ctx, std::size_t s, double eps0) {
  if (!(eps0 > 0.0 && eps0 <= 1.0)) throw std::invalid_argument("eps0 must lie in (0, 1]");
  const auto& post = ctx.post(s);
  int m = 0;
  for (std::size_t pair = 0; pair < post.size(); ++pair) {
    if (post[pair] == 0.0) continue;
    while (erlang_completion(m, ctx.beta, ctx.d(s, pair)) < 1.0 - eps0) ++m;
  }
  return m;
}

struct BoundReport {
  int m = 0;
  double eps0 = 0.0;
  double p_lower = 0.0;                 // adl_limit
  std::vector<double> lambda;           // lambda(s, m, phi)
  std::vector<double> lambda_min;       // per target
  std::vector<double> lambda_max;       // (1 - eps0) lambda_min
  double c_min = 0.0;
  double c_max = 0.0;
  int m_lower = 0;                      // smallest m for which the bounds hold
  double risk_min = 0.0;                // c_min / (1 - gamma) under constant a_m
  double risk_max = 0.0;
};

/// ECoC bounds at de-emphasis length m. For m >= m_lower the closed-form
/// ECoC lies in [c_min, c_max]; both bounds grow by c(w_NI, s) per unit m.
inline BoundReport ecoc_bounds(const ClosedFormContext& ctx, std::size_t s, double eps0, int m) {
  BoundReport r;
  r.m = m;
  r.eps0 = eps0;
  r.p_lower = adl_limit(ctx, s);
  r.m_lower = min_deemphasis(ctx, s, eps0);
  const auto& post = ctx.post(s);
  const double c_un = ctx.costs(AlertResponse::Incomplete, s);
  const double c_ni = ctx.costs(AlertResponse::NotInspected, s);
  double sum_min = 0.0;
  double sum_max = 0.0;
  for (std::size_t tg = 0; tg < ctx.hidden.num_targets(); ++tg) {
    double lmin = 0.0;
    for (AttackType t : kAttackTypes) {
      const std::size_t pair = ctx.hidden.index(t, tg);
      lmin += ctx.costs(complete_response_for(t), s) * post[pair] * ctx.success_prob(s, pair);
    }
    r.lambda.push_back(expected_reward(ctx, s, m, tg));
    r.lambda_min.push_back(lmin);
    r.lambda_max.push_back((1.0 - eps0) * lmin);
    sum_min += lmin;
    sum_max += (1.0 - eps0) * lmin;
  }
  r.c_min = sum_min + r.p_lower * c_un + m * c_ni;
  r.c_max = sum_max + (r.p_lower + eps0 * (1.0 - r.p_lower)) * c_un + m * c_ni;
  r.risk_min = r.c_min / (1.0 - ctx.gamma);
  r.risk_max = r.c_max / (1.0 - ctx.gamma);
  return r;
}

class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct PpoaRow {
  double product = 0.0;  // beta * posterior-mean d
  double beta = 0.0;
  double adl = 0.0;
  double ecoc = 0.0;
};

/// Sweeps the attention demand/supply product at fixed m. For each grid
/// value x the rate is set to x / dbar(s), dbar the posterior-mean AITN, so
/// every pair keeps its relative inspection time. Monotonicity in x is
/// checked on the output (a violation means a formula bug).
inline std::vector<PpoaRow> ppoa_curve(const ClosedFormContext& ctx, std::size_t s, int m,
                                       const std::vector<double>& products) {
  const auto& post = ctx.post(s);
  double dbar = 0.0;
  double reward_mass = 0.0;
  for (std::size_t pair = 0; pair < post.size(); ++pair) {
    dbar += post[pair] * ctx.d(s, pair);
    reward_mass += post[pair] * ctx.success_prob(s, pair);
  }
  std::vector<PpoaRow> rows;
  ClosedFormContext local = ctx;
  for (double x : products) {
    if (!(x > 0.0)) throw std::invalid_argument("ppoa_curve: products must be positive");
    local.beta = x / dbar;
    rows.push_back({x, local.beta, adl_closed_form(local, s, m), ecoc_closed_form(local, s, m).value});
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].product > rows[i - 1].product)) throw std::invalid_argument("ppoa_curve: grid must be ascending");
    const bool resolvable = reward_mass > 0.0 && erlang_completion(m, rows[i - 1].beta, dbar) > 1e-12;
    const bool adl_bad = resolvable ? !(rows[i].adl > rows[i - 1].adl) : rows[i].adl < rows[i - 1].adl;
    const bool ecoc_bad = rows[i].ecoc < rows[i - 1].ecoc - 1e-9 * std::max(1.0, std::abs(rows[i - 1].ecoc));
    if (adl_bad || ecoc_bad)
      throw ConsistencyError("ppoa_curve: monotonicity violated between products " +
                             std::to_string(rows[i - 1].product) + " and " + std::to_string(rows[i].product));
  }
  return rows;
}

}  // namespace idos
