// Command-line front end: simulate, learn, analyze, sweep <name>, validate.
// Exit status: 0 success, 1 configuration error, 2 validation failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "idos/analytics.hpp"
#include "idos/config.hpp"
#include "idos/experiments.hpp"

namespace fs = std::filesystem;
using namespace idos;

namespace {

struct Common {
  std::string config = "configs/benchmark.cfg";
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> episodes;
  std::optional<double> gamma, epsilon, kc;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LoadedScenario load(const Common& c) {
  std::vector<std::tuple<std::string, std::string, std::string>> ov;
  if (c.seed) ov.emplace_back("sim", "seed", std::to_string(*c.seed));
  if (c.episodes) ov.emplace_back("sim", "episodes", std::to_string(*c.episodes));
  if (c.gamma) ov.emplace_back("am", "gamma", format_number(*c.gamma));
  if (c.epsilon) ov.emplace_back("am", "epsilon", format_number(*c.epsilon));
  if (c.kc) ov.emplace_back("am", "kc", format_number(*c.kc));
  return load_scenario(slurp(c.config), ov);
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  std::cout << "wrote " << path.string() << '\n';
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "scenario file")->capture_default_str();
  app->add_option("-o,--out", c.out, "output directory")->capture_default_str();
  app->add_option("--seed", c.seed, "master seed (overrides sim.seed)");
  app->add_option("--episodes", c.episodes, "evaluation shifts (overrides sim.episodes)");
  app->add_option("--gamma", c.gamma, "discount factor");
  app->add_option("--epsilon", c.epsilon, "exploration probability");
  app->add_option("--kc", c.kc, "learning-rate constant k_c");
}

Policy parse_policy(const std::string& spec, const Scenario& sc) {
  if (spec == "default") return default_policy(sc.labels().size());
  if (spec.rfind("a", 0) == 0) return constant_policy(sc.labels().size(), std::stoi(spec.substr(1)));
  std::ifstream in(spec);
  if (!in) throw ConfigError("--policy", "expected 'default', 'a<m>' or a Q-table file");
  return greedy_policy(read_qtable(in, sc.labels(), sc.am.num_actions()));
}

std::string risk_table(const Scenario& sc, const std::vector<EpisodeLog>& logs) {
  std::ostringstream os;
  os << "label,risk,se,episodes\n";
  for (std::size_t s = 0; s < sc.labels().size(); ++s) {
    try {
      const auto r = estimate_risk(logs, sc.am.gamma, s);
      os << sc.labels().name(s) << ',' << format_number(r.value) << ',' << format_number(r.std_error) << ','
         << r.samples << '\n';
    } catch (const InsufficientData&) {
      os << sc.labels().name(s) << ",nan,nan,0\n";
    }
  }
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IDoS attention-management simulator"};
  app.require_subcommand(1);

  Common c;
  std::string policy = "default";
  bool logs = false;
  auto* sim = app.add_subcommand("simulate", "run shifts under a fixed policy and write episode logs");
  add_common(sim, c);
  sim->add_option("--policy", policy, "default | a<m> | path to a Q-table")->capture_default_str();
  sim->add_flag("--logs", logs, "write one event log per episode");

  std::optional<std::uint64_t> inspections;
  auto* lrn = app.add_subcommand("learn", "Q-learning under exploration, then greedy evaluation");
  add_common(lrn, c);
  lrn->add_option("--inspections", inspections, "exploration budget (overrides am.explore_inspections)");

  std::vector<double> products;
  double eps0 = 0.01;
  int max_m = -1;
  auto* ana = app.add_subcommand("analyze", "closed-form ADL, ECoC and bounds (single-rate scenarios)");
  add_common(ana, c);
  ana->add_option("--eps0", eps0, "tolerance for the ECoC bounds")->capture_default_str();
  ana->add_option("--max-m", max_m, "largest m to tabulate (default: M)");
  ana->add_option("--ppoa", products, "beta*d grid for the attention product curve");

  std::string sweep_name, from;
  std::vector<double> grid;
  unsigned threads = 0;
  std::optional<std::size_t> seeds;
  auto* swp = app.add_subcommand("sweep", "run an experiment and write its CSV");
  add_common(swp, c);
  swp->add_option("name", sweep_name, "convergence | cost_sweep | freq_sweep | feint_sweep | attention_sweep");
  swp->add_option("--grid", grid, "override the swept values");
  swp->add_option("--seeds", seeds, "learning runs for convergence");
  swp->add_option("--inspections", inspections, "exploration budget per learning run");
  swp->add_option("--threads", threads, "worker threads (0 = all cores)");
  swp->add_option("--from", from, "regenerate an artifact from its own header");

  std::size_t cell = 100000;
  auto* val = app.add_subcommand("validate", "closed forms vs. simulation; exit 2 on any breach");
  add_common(val, c);
  val->add_option("--inspections", cell, "inspections per (label, m) cell")->capture_default_str();
  val->add_option("--threads", threads, "worker threads (0 = all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out(c.out);
    if (*sim) {
      const auto base = load(c);
      const auto& sc = base.scenario;
      const Policy pol = parse_policy(policy, sc);
      std::vector<EpisodeLog> all;
      for (std::size_t e = 0; e < sc.sim.episodes; ++e) {
        all.push_back(run_episode(sc, pol, derive_seed(sc.sim.seed, e), {logs}));
        if (logs) {
          std::ostringstream os;
          write_episode_log(os, all.back(), sc.process);
          write_file(out / ("episode_" + std::to_string(e) + ".log"), os.str());
        }
      }
      std::cout << "# digest=" << sc.digest << " seed=" << sc.sim.seed << " episodes=" << sc.sim.episodes << '\n'
                << risk_table(sc, all);
    } else if (*lrn) {
      auto base = load(c);
      auto& sc = base.scenario;
      LearnOptions lo;
      lo.inspections = inspections.value_or(sc.am.explore_inspections);
      const auto r = learn(sc, sc.sim.seed, lo);
      std::ostringstream q;
      q << "# digest=" << sc.digest << " seed=" << sc.sim.seed << " inspections=" << r.inspections << '\n';
      write_qtable(q, r.q, sc.labels());
      write_file(out / "qtable.tsv", q.str());
      const auto pol = greedy_policy(r.q);
      const auto opt = policy_risk(sc, pol, sc.sim.episodes, derive_seed(sc.sim.seed, 0xe7a1));
      const auto def = policy_risk(sc, default_policy(sc.labels().size()), sc.sim.episodes, derive_seed(sc.sim.seed, 0xe7a1));
      std::cout << "converged=" << (r.converged ? 1 : 0) << " episodes=" << r.episodes << '\n';
      std::cout << "label,greedy,risk_optimal,se_optimal,risk_default,se_default\n";
      for (std::size_t s = 0; s < sc.labels().size(); ++s)
        std::cout << sc.labels().name(s) << ",a" << pol[s].m << ',' << format_number(opt.per_label[s].value) << ','
                  << format_number(opt.per_label[s].std_error) << ',' << format_number(def.per_label[s].value) << ','
                  << format_number(def.per_label[s].std_error) << '\n';
    } else if (*ana) {
      const auto base = load(c);
      const auto ctx = ClosedFormContext::from_scenario(base.scenario);
      const int top = max_m >= 0 ? max_m : base.scenario.am.max_m;
      std::ostringstream os;
      os << "# digest=" << base.scenario.digest << " beta=" << format_number(ctx.beta) << " eps0=" << format_number(eps0)
         << '\n';
      os << "label,m,adl,adl_limit,ecoc,adl_term,inattention,reward,c_min,c_max,m_lower,risk_min,risk_max\n";
      for (std::size_t s = 0; s < ctx.labels.size(); ++s) {
        if (ctx.posterior[s].empty()) continue;
        for (int m = 0; m <= top; ++m) {
          const auto e = ecoc_closed_form(ctx, s, m);
          const auto b = ecoc_bounds(ctx, s, eps0, m);
          os << ctx.labels.name(s) << ',' << m << ',' << format_number(adl_closed_form(ctx, s, m)) << ','
             << format_number(b.p_lower) << ',' << format_number(e.value) << ',' << format_number(e.adl_term) << ','
             << format_number(e.inattention) << ',' << format_number(e.reward) << ',' << format_number(b.c_min) << ','
             << format_number(b.c_max) << ',' << b.m_lower << ',' << format_number(b.risk_min) << ','
             << format_number(b.risk_max) << '\n';
        }
      }
      write_file(out / "analyze.csv", os.str());
      if (!products.empty()) {
        std::ostringstream pp;
        pp << "label,m,product,beta,adl,ecoc\n";
        for (std::size_t s = 0; s < ctx.labels.size(); ++s) {
          if (ctx.posterior[s].empty()) continue;
          for (int m = 0; m <= top; ++m)
            for (const auto& r : ppoa_curve(ctx, s, m, products))
              pp << ctx.labels.name(s) << ',' << m << ',' << format_number(r.product) << ',' << format_number(r.beta)
                 << ',' << format_number(r.adl) << ',' << format_number(r.ecoc) << '\n';
        }
        write_file(out / "ppoa.csv", pp.str());
      }
    } else if (*swp) {
      std::vector<Artifact> arts;
      if (!from.empty()) {
        arts = regenerate(slurp(from), threads);
      } else {
        const auto base = load(c);
        auto spec = default_sweep(sweep_name, base.scenario);
        if (!grid.empty()) spec.grid = grid;
        if (seeds) spec.seeds = *seeds;
        if (inspections) spec.learn_inspections = *inspections;
        spec.threads = threads;
        arts = run_experiment(base, spec);
      }
      for (const auto& a : arts) write_file(out / a.filename, a.text);
    } else if (*val) {
      if (val->count("--config") == 0) c.config = "configs/condition1.cfg";
      const auto base = load(c);
      ValidationOptions vo;
      vo.inspections = cell;
      vo.seed = base.scenario.sim.seed;
      vo.threads = threads;
      const auto rep = validate_closed_forms(base.scenario, vo);
      const std::string csv = "# digest=" + base.scenario.digest + " seed=" + std::to_string(vo.seed) + '\n' +
                              validation_csv(rep, base.scenario.labels());
      write_file(out / "validate.csv", csv);
      for (const auto& r : rep.rows)
        if (!r.adl_pass || !r.coc_pass)
          std::cerr << "breach: " << base.scenario.labels().name(r.label) << " m=" << r.m
                    << (r.adl_pass ? "" : " adl") << (r.coc_pass ? "" : " coc") << '\n';
      if (!rep.passed()) return 2;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const InsufficientData& e) {
    std::cerr << "insufficient data: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
