// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include "idos/experiments.hpp"
#include "oracles.hpp"

using namespace idos;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("%s %2d  %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

/// Data rows of an artifact keyed by column name.
struct Csv {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  explicit Csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> cells;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (columns.empty())
        columns = cells;
      else
        rows.push_back(cells);
    }
  }
  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw std::runtime_error("missing column " + name);
  }
  double num(std::size_t r, const std::string& name) const { return std::stod(rows[r][col(name)]); }
  std::string str(std::size_t r, const std::string& name) const { return rows[r][col(name)]; }
};

std::vector<std::string> label_columns(const Scenario& sc) {
  std::vector<std::string> out;
  for (std::size_t s = 0; s < sc.labels().size(); ++s) out.push_back(sc.labels().name(s));
  out.push_back("avg");
  return out;
}

/// r[i+1] <= r[i] + 2 * hypot(se) for every consecutive pair in [lo, hi).
bool non_increasing(const Csv& csv, const std::string& label, const std::string& policy, std::size_t lo,
                    std::size_t hi, std::string& where) {
  for (std::size_t i = lo + 1; i < hi; ++i) {
    const double a = csv.num(i - 1, "risk_" + policy + "[" + label + "]");
    const double b = csv.num(i, "risk_" + policy + "[" + label + "]");
    const double se = std::hypot(csv.num(i - 1, "se_" + policy + "[" + label + "]"),
                                 csv.num(i, "se_" + policy + "[" + label + "]"));
    if (b > a + 2.0 * se) {
      where = policy + "[" + label + "] row " + std::to_string(i);
      return false;
    }
  }
  return true;
}

void criterion1() {
  const auto sc = oracle::condition1().scenario;
  ValidationOptions vo;
  const auto t0 = Clock::now();
  const auto rep = validate_closed_forms(sc, vo);
  const double per_cell = seconds_since(t0) / static_cast<double>(rep.rows.size());
  double max_adl = 0.0, chi2 = 0.0;
  std::size_t coc_ok = 0;
  std::string failed;
  for (const auto& r : rep.rows) {
    max_adl = std::max(max_adl, std::abs(r.adl_sim.value - r.adl_closed));
    const double z = (r.coc_sim.value - r.coc_closed) / r.coc_sim.std_error;
    chi2 += z * z;
    if (r.coc_pass)
      ++coc_ok;
    else
      failed += " " + sc.labels().name(r.label) + "/m=" + std::to_string(r.m) + fmt("(z=%.2f)", z);
  }
  const double p = oracle::chi_square_pvalue(chi2, static_cast<double>(rep.rows.size()));
  std::ostringstream d;
  d << "oracle equivalence: max |ADL gap| " << fmt("%.4f", max_adl) << " (<= 0.01), CoC within 2 SE in " << coc_ok
    << "/" << rep.rows.size() << " cells" << (failed.empty() ? "" : ";" + failed) << "; joint chi2 "
    << fmt("%.1f", chi2) << " on " << rep.rows.size() << " df (p=" << fmt("%.2f", p) << "); "
    << fmt("%.2f", per_cell) << " s per cell";
  report(1, rep.passed() && per_cell <= 120.0, d.str());
}

void criterion2() {
  const auto c = ClosedFormContext::from_scenario(oracle::condition1().scenario);
  bool ok = true;
  double worst = 0.0;
  int m_big = 0;
  for (std::size_t s = 0; s < c.labels.size(); ++s) {
    double dmax = 0.0;
    for (std::size_t p = 0; p < c.hidden.size(); ++p) dmax = std::max(dmax, c.d(s, p));
    // Beyond this m the Erlang tail drops below double resolution and ADL
    // equals p_lower bit-for-bit, so strictness is checked up to here.
    const int mb = static_cast<int>(std::ceil(10.0 * c.beta * dmax));
    m_big = std::max(m_big, mb);
    for (int m = 0; m < mb; ++m) ok = ok && adl_closed_form(c, s, m + 1) < adl_closed_form(c, s, m);
    const double gap = std::abs(adl_closed_form(c, s, mb) - adl_limit(c, s));
    worst = std::max(worst, gap);
    ok = ok && gap <= 1e-6;
  }
  report(2, ok, "ADL strictly decreasing in m for every label; |ADL(m=" + std::to_string(m_big) + ") - p_lower| max " +
                    fmt("%.2e", worst) + " (<= 1e-6)");
}

void criterion3() {
  const auto c = ClosedFormContext::from_scenario(oracle::condition1().scenario);
  std::vector<double> grid;
  for (int i = 0; i <= 60; ++i) grid.push_back(0.1 * std::pow(100.0, i / 60.0));
  bool ok = true;
  double worst = 0.0;
  for (std::size_t s = 0; s < c.labels.size(); ++s)
    for (int m = 0; m <= 3; ++m) {
      std::vector<PpoaRow> rows;
      try {
        rows = ppoa_curve(c, s, m, grid);
      } catch (const ConsistencyError&) {
        ok = false;
        continue;
      }
      for (std::size_t i = 1; i < rows.size(); ++i) ok = ok && rows[i].adl > rows[i - 1].adl;
      for (double k : {0.25, 0.5, 3.0, 7.0}) {
        auto c2 = c;
        c2.beta = c.beta * k;
        for (std::size_t p = 0; p < c.hidden.size(); ++p) c2.d(s, p) = c.d(s, p) / k;
        const double gap = std::abs(adl_closed_form(c2, s, m) - adl_closed_form(c, s, m));
        worst = std::max(worst, gap);
        ok = ok && gap <= 1e-12;
      }
    }
  report(3, ok, "ADL strictly increasing over 61 products in [0.1, 10] for all labels and m=0..3; reciprocal "
                "beta/d rescaling max gap " + fmt("%.1e", worst) + " (<= 1e-12)");
}

void criterion4() {
  const auto c = ClosedFormContext::from_scenario(oracle::condition1().scenario);
  bool ok = true;
  double worst_slope = 0.0;
  for (std::size_t s = 0; s < c.labels.size(); ++s) {
    const int ml = min_deemphasis(c, s, 0.01);
    const double c_ni = c.costs(AlertResponse::NotInspected, s);
    for (int m = ml; m <= ml + 20; ++m) {
      const auto b = ecoc_bounds(c, s, 0.01, m);
      const double e = ecoc_closed_form(c, s, m).value;
      const double tol = 1e-9 * std::max(1.0, std::abs(e));
      ok = ok && e >= b.c_min - tol && e <= b.c_max + tol;
      const auto b1 = ecoc_bounds(c, s, 0.01, m + 1);
      for (double diff : {b1.c_min - b.c_min, b1.c_max - b.c_max})
        worst_slope = std::max(worst_slope, std::abs(diff - c_ni) / c_ni);
    }
  }
  ok = ok && worst_slope <= 1e-9;
  report(4, ok, "ECoC inside [c_min, c_max] for m in [m_lower, m_lower+20], eps0=0.01; bound step vs c(NI) max rel "
                "error " + fmt("%.1e", worst_slope));
}

void criterion5() {
  oracle::Mdp mdp;
  mdp.cost = {{1.0, 3.0}, {4.0, 0.5}};
  mdp.next = {{{0.9, 0.1}, {0.2, 0.8}}, {{0.5, 0.5}, {0.7, 0.3}}};
  const double gamma = 0.8;
  const auto qstar = oracle::value_iteration(mdp, gamma);
  const auto t0 = Clock::now();
  QTable q(2, 2);
  Rng rng(derive_seed(1, 5));
  std::size_t s = 0;
  for (int h = 0; h < 100000; ++h) {
    const auto a = select_action(q, s, 1.0, rng);
    const auto ai = static_cast<std::size_t>(a.m);
    const std::size_t next = rng.categorical(mdp.next[s][ai]);
    q_update(q, s, a, mdp.cost[s][ai], next, learning_rate(10.0, q.label_visits(s) + 1), gamma);
    s = next;
  }
  const double secs = seconds_since(t0);
  double worst = 0.0;
  for (std::size_t i = 0; i < 2; ++i)
    for (int a = 0; a < 2; ++a) worst = std::max(worst, std::abs(q(i, AmAction{a}) - qstar[i][a]) / std::abs(qstar[i][a]));
  report(5, worst <= 0.01 && secs <= 30.0,
         "2-state/2-action chain, 1e5 updates, gamma 0.8: max rel error vs value iteration " + fmt("%.4f", worst) +
             "; " + fmt("%.2f", secs) + " s");
}

void criterion6() {
  const auto base = oracle::benchmark();
  auto spec = default_sweep("convergence", base.scenario);
  spec.seeds = 10;
  const auto t0 = Clock::now();
  const auto arts = run_experiment(base, spec);
  const double per_seed = seconds_since(t0) / 10.0;
  const Csv csv(arts[1].text);
  const auto& labels = base.scenario.labels();
  std::vector<std::size_t> high;
  for (std::size_t s = 0; s < labels.size(); ++s)
    if (labels.name(s).find("high") != std::string::npos) high.push_back(s);
  const std::string top = std::to_string(base.scenario.am.max_m);
  std::map<std::string, int> top_count;
  std::map<std::string, double> reduction;
  int seeds_all_high = 0;
  bool below = true;
  for (std::size_t run = 0; run < spec.seeds; ++run) {
    bool all_high = true;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
      if (csv.str(r, "run") != std::to_string(run)) continue;
      const auto name = csv.str(r, "label");
      const bool is_high = name.find("high") != std::string::npos;
      if (is_high && csv.str(r, "greedy") != top) all_high = false;
      below = below && csv.num(r, "risk_optimal") < csv.num(r, "risk_default");
      reduction[name] += csv.num(r, "reduction") / static_cast<double>(spec.seeds);
    }
    if (all_high) ++seeds_all_high;
  }
  bool in_band = true;
  std::string red;
  for (const auto& [name, v] : reduction) {
    in_band = in_band && v >= 0.05 && v <= 0.30;
    red += " " + name + "=" + fmt("%.1f%%", 100.0 * v);
  }
  report(6, seeds_all_high >= 8 && below && in_band && per_seed <= 600.0,
         "greedy a_" + top + " on both high-criticality labels in " + std::to_string(seeds_all_high) +
             "/10 seeds; optimal < default for every label and seed: " + (below ? "yes" : "no") +
             "; mean reduction" + red + "; " + fmt("%.1f", per_seed) + " s per seed");
}

void criterion7() {
  const auto base = oracle::benchmark();
  const auto spec = default_sweep("freq_sweep", base.scenario);
  const Csv csv(run_experiment(base, spec)[0].text);
  bool ok = true;
  std::string where;
  for (const auto& l : label_columns(base.scenario))
    for (const char* p : {"optimal", "default"})
      if (!non_increasing(csv, l, p, 0, csv.rows.size(), where)) ok = false;
  double worst = 0.0;
  const double k0 = csv.num(0, "attack_cost") * csv.num(0, "rho");
  for (std::size_t i = 0; i < csv.rows.size(); ++i)
    worst = std::max(worst, std::abs(csv.num(i, "attack_cost") * csv.num(i, "rho") - k0) / k0);
  ok = ok && worst <= 1e-12;
  report(7, ok, "risks non-increasing in rho within 2 SE (both policies, all labels and average)" +
                    (where.empty() ? std::string() : "; first breach " + where) +
                    "; attack_cost*rho max rel spread " + fmt("%.1e", worst));
}

void criterion8() {
  const auto base = oracle::benchmark();
  const auto spec = default_sweep("feint_sweep", base.scenario);
  const Csv csv(run_experiment(base, spec)[0].text);
  const std::size_t n = spec.grid.size();
  bool low_ok = true;
  std::string where;
  for (const auto& l : label_columns(base.scenario))
    for (std::size_t i = 1; i < n; ++i) {
      const std::string c = "[" + l + "]";
      const double a = csv.num(i - 1, "risk_default" + c), b = csv.num(i, "risk_default" + c);
      const double se = std::hypot(csv.num(i - 1, "se_default" + c), csv.num(i, "se_default" + c));
      if (b < a - 2.0 * se) {
        low_ok = false;
        if (where.empty()) where = l + " eta " + csv.str(i, "eta_fe");
      }
    }
  bool high_ok = true;
  std::string argmax;
  for (const auto& l : label_columns(base.scenario)) {
    std::size_t best = n;
    for (std::size_t i = n; i < 2 * n; ++i)
      if (best == n || csv.num(i, "risk_default[" + l + "]") > csv.num(best, "risk_default[" + l + "]")) best = i;
    high_ok = high_ok && best != n && best != 2 * n - 1;
    argmax += " " + l + "=" + csv.str(best, "eta_fe");
  }
  report(8, low_ok && high_ok,
         std::string("low-cost feints: default risk non-decreasing in eta within 2 SE: ") + (low_ok ? "yes" : "no") +
             (where.empty() ? "" : " (breach " + where + ")") + "; high-cost feints: argmax eta" + argmax +
             " (interior required)");
}

void criterion9() {
  const auto base = oracle::benchmark();
  const auto spec = default_sweep("attention_sweep", base.scenario);
  const Csv csv(run_experiment(base, spec)[0].text);
  bool ok = true;
  std::string where;
  for (std::size_t s = 0; s < base.scenario.labels().size(); ++s)
    for (const char* p : {"optimal", "default"})
      if (!non_increasing(csv, base.scenario.labels().name(s), p, 0, csv.rows.size(), where)) ok = false;
  bool margin = true;
  std::string margins;
  for (const auto& l : label_columns(base.scenario)) {
    const double m = csv.num(0, "margin[" + l + "]");
    margin = margin && m > 0.0;
    margins += " " + l + "=" + fmt("%.0f", m);
  }
  report(9, ok && margin, "per-label risks non-increasing in n0 within 2 SE" +
                              (where.empty() ? std::string() : " (breach " + where + ")") + "; margin at n0=0:" +
                              margins);
}

void criterion10() {
  const auto sc = oracle::condition1().scenario;
  const double beta = *sc.process.arrivals.single_rate();
  bool ok = true;
  std::string detail;
  for (int m = 0; m <= 3; ++m) {
    std::vector<double> gaps;
    const Policy policy = constant_policy(sc.labels().size(), m);
    for (std::uint64_t e = 0; gaps.size() < 10000; ++e) {
      const auto log = run_episode(sc, policy, derive_seed(derive_seed(10, static_cast<std::uint64_t>(m)), e));
      for (const auto& r : log.inspections) {
        if (gaps.size() == 10000) break;
        gaps.push_back(r.end - r.start);
      }
    }
    const double d = oracle::ks_statistic(gaps, [&](double t) { return oracle::erlang_cdf(m, beta, t); });
    const double p = oracle::ks_pvalue(d, gaps.size());
    ok = ok && p > 0.001;
    detail += " m=" + std::to_string(m) + ":p=" + fmt("%.3f", p);
  }
  // Arrivals per fixed window of 60 s against Poisson(60 beta).
  const double window = 60.0;
  std::vector<double> counts(64, 0.0);
  std::size_t windows = 0;
  for (std::uint64_t e = 0; windows < 10000; ++e) {
    const auto log = run_episode(sc, default_policy(sc.labels().size()), derive_seed(11, e));
    const auto nw = static_cast<std::size_t>(std::floor(log.stages.back().time / window));
    std::vector<std::size_t> per(nw, 0);
    for (const auto& st : log.stages) {
      const auto w = static_cast<std::size_t>(std::floor(st.time / window));
      if (w < nw) ++per[w];
    }
    for (std::size_t w = 0; w < nw && windows < 10000; ++w, ++windows) counts[std::min<std::size_t>(per[w], 63)] += 1.0;
  }
  const boost::math::poisson_distribution<double> pois(beta * window);
  std::vector<double> probs(64);
  for (std::size_t k = 0; k < 63; ++k) probs[k] = boost::math::pdf(pois, static_cast<double>(k));
  probs[63] = boost::math::cdf(boost::math::complement(pois, 62.0));
  const auto chi = oracle::chi_square(counts, probs);
  ok = ok && chi.pvalue > 0.001;
  report(10, ok, "inspection gaps vs Erlang(m+1, beta), KS on 1e4 samples:" + detail +
                     "; 60 s window counts vs Poisson, chi2 p=" + fmt("%.3f", chi.pvalue) + " (all > 0.001)");
}

void criterion11() {
  const auto base = oracle::benchmark();
  auto spec = default_sweep("cost_sweep", base.scenario);
  spec.grid = {0.0, 500.0};
  spec.episodes = 4;
  spec.learn_inspections = 50000;
  const auto first = run_experiment(base, spec);
  const auto meta = parse_artifact_header(first[0].text);
  const auto again = regenerate(first[0].text, 2);
  bool ok = meta.digest == base.scenario.digest && again.size() == 1 && again[0].text == first[0].text;
  std::ostringstream a, b;
  const auto log_a = run_episode(base.scenario, default_policy(4), 77);
  const auto log_b = run_episode(base.scenario, default_policy(4), 77);
  write_episode_log(a, log_a, base.scenario.process);
  write_episode_log(b, log_b, base.scenario.process);
  ok = ok && a.str() == b.str() && log_a == log_b;
  report(11, ok, "cost_sweep artifact regenerated from its header (digest " + meta.digest +
                     ") is byte-identical; episode logs from equal seeds identical");
}

}  // namespace

int main() {
  const std::vector<void (*)()> criteria = {criterion1, criterion2, criterion3, criterion4,  criterion5, criterion6,
                                            criterion7, criterion8, criterion9, criterion10, criterion11};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, std::string("exception: ") + e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
