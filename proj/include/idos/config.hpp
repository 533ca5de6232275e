#pragma once

// Scenario configuration: INI-style sections (process, triage, operator,
// costs, am, sim). Every key that is read, or defaulted, is echoed back in
// canonical form; the digest of that echo identifies the scenario.
// The format is documented in docs/config-format.md.

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "idos/attention.hpp"
#include "idos/engine.hpp"
#include "idos/operator.hpp"
#include "idos/process.hpp"
#include "idos/types.hpp"

namespace idos {

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

inline std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != ',') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

/// Key/value store over the parsed INI text that tracks which keys were used.
class ConfigReader {
 public:
  static constexpr std::string_view kRequiredSections[] = {"process", "triage", "operator", "costs", "am", "sim"};

  explicit ConfigReader(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream is(text);
    try {
      pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError("line " + std::to_string(e.line()), e.message());
    }
    for (const auto& [section, body] : tree) {
      if (!body.data().empty() && body.empty())
        throw ConfigError(section, "key outside of any section");
      for (const auto& [key, node] : body) sections_[section][key] = Entry{strip_comment(node.data()), false};
    }
    std::string missing;
    for (auto sec : kRequiredSections)
      if (!sections_.count(std::string(sec))) missing += (missing.empty() ? "" : ", ") + std::string(sec);
    if (!missing.empty()) throw ConfigError("config", "missing required sections: " + missing);
  }

  /// Replaces (or adds) a value, e.g. from a command-line override.
  void set(const std::string& section, const std::string& key, const std::string& value) {
    sections_[section][key] = Entry{value, false};
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key);
  }

  std::string text(const std::string& section, const std::string& key) { return raw(section, key); }

  std::string text(const std::string& section, const std::string& key, const std::string& fallback) {
    if (!has(section, key)) {
      echo_[section][key] = fallback;
      return fallback;
    }
    return raw(section, key);
  }

  double number(const std::string& section, const std::string& key) { return parse_number(section, key, raw(section, key)); }

  double number(const std::string& section, const std::string& key, double fallback) {
    if (!has(section, key)) {
      echo_[section][key] = format_number(fallback);
      return fallback;
    }
    return number(section, key);
  }

  std::optional<double> maybe_number(const std::string& section, const std::string& key) {
    if (!has(section, key)) return std::nullopt;
    return number(section, key);
  }

  std::vector<double> numbers(const std::string& section, const std::string& key) {
    std::vector<double> out;
    for (const auto& w : split_words(raw(section, key))) out.push_back(parse_number(section, key, w));
    return out;
  }

  std::vector<std::string> words(const std::string& section, const std::string& key) {
    return split_words(raw(section, key));
  }

  /// Throws on any key that no builder consumed (typos, stale options).
  void reject_unused() const {
    for (const auto& [sec, keys] : sections_)
      for (const auto& [key, entry] : keys)
        if (!entry.used) throw ConfigError(sec + "." + key, "unknown key");
  }

  /// Canonical echo of every consumed or defaulted value.
  std::string effective() const {
    std::ostringstream os;
    bool first = true;
    for (auto sec : kRequiredSections) {
      auto it = echo_.find(std::string(sec));
      if (!first) os << '\n';
      first = false;
      os << '[' << sec << "]\n";
      if (it == echo_.end()) continue;
      for (const auto& [key, value] : it->second) os << key << " = " << value << '\n';
    }
    return os.str();
  }

 private:
  struct Entry {
    std::string value;
    bool used = false;
  };

  static std::string strip_comment(const std::string& v) {
    std::string out = v;
    for (std::string_view marker : {" ;", "\t;", " #", "\t#"}) {
      auto pos = out.find(marker);
      if (pos != std::string::npos) out.erase(pos);
    }
    while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) out.pop_back();
    return out;
  }

  std::string raw(const std::string& section, const std::string& key) {
    auto s = sections_.find(section);
    if (s == sections_.end()) throw ConfigError(section, "missing section");
    auto k = s->second.find(key);
    if (k == s->second.end()) throw ConfigError(section + "." + key, "missing required key");
    k->second.used = true;
    std::string normalized;
    for (const auto& w : split_words(k->second.value)) normalized += (normalized.empty() ? "" : " ") + w;
    echo_[section][key] = normalized;
    return k->second.value;
  }

  static double parse_number(const std::string& section, const std::string& key, std::string_view text) {
    auto words = split_words(text);
    if (words.size() != 1) throw ConfigError(section + "." + key, "expected a single number, got '" + std::string(text) + "'");
    double v = 0.0;
    const auto& w = words.front();
    auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (res.ec != std::errc{} || res.ptr != w.data() + w.size())
      throw ConfigError(section + "." + key, "not a number: '" + w + "'");
    return v;
  }

  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, std::map<std::string, std::string>> echo_;
};

namespace detail {

inline Table read_rows(ConfigReader& cfg, const std::string& section, const std::string& prefix,
                       const std::vector<std::string>& row_names, std::size_t cols) {
  Table t(row_names.size(), cols);
  for (std::size_t r = 0; r < row_names.size(); ++r) {
    const std::string key = prefix + "." + row_names[r];
    const auto row = cfg.numbers(section, key);
    if (row.size() != cols)
      throw ConfigError(section + "." + key, "expected " + std::to_string(cols) + " values, got " + std::to_string(row.size()));
    for (std::size_t c = 0; c < cols; ++c) t(r, c) = row[c];
  }
  return t;
}

inline std::vector<std::string> pair_names(const HiddenSpace& h) {
  std::vector<std::string> names;
  for (std::size_t p = 0; p < h.size(); ++p) names.push_back(h.pair_name(p));
  return names;
}

inline std::size_t parse_pair(const HiddenSpace& h, const std::string& where, const std::string& name) {
  auto slash = name.find('/');
  if (slash == std::string::npos) throw ConfigError(where, "expected <type>/<target>, got '" + name + "'");
  return h.index(parse_attack_type(name.substr(0, slash)), h.target_index(name.substr(slash + 1)));
}

// Most specific key wins: prefix.<label>.<type>.<target>, prefix.<label>.<type>,
// prefix.<label>, prefix.<dimvalue>.<type>, prefix.<type>, prefix.
inline Table read_label_pair_table(ConfigReader& cfg, const std::string& section, const std::string& prefix,
                                   const HiddenSpace& hidden, const LabelSpace& labels,
                                   std::optional<std::size_t> dim, std::optional<double> fallback) {
  Table t(labels.size(), hidden.size());
  for (std::size_t s = 0; s < labels.size(); ++s)
    for (std::size_t p = 0; p < hidden.size(); ++p) {
      const std::string lab = labels.name(s);
      const std::string ty(to_string(hidden.type_of(p)));
      const std::string tg = hidden.targets()[hidden.target_of(p)];
      std::vector<std::string> candidates = {prefix + "." + lab + "." + ty + "." + tg, prefix + "." + lab + "." + ty,
                                             prefix + "." + lab};
      if (dim) candidates.push_back(prefix + "." + labels.dimensions()[*dim].values[labels.component(s, *dim)] + "." + ty);
      candidates.push_back(prefix + "." + ty);
      candidates.push_back(prefix);
      std::optional<double> v;
      for (const auto& key : candidates)
        if (cfg.has(section, key)) {
          v = cfg.number(section, key);
          break;
        }
      if (!v) {
        if (!fallback) throw ConfigError(section + "." + prefix, "no value for label " + lab + ", pair " + ty + "/" + tg);
        v = cfg.number(section, prefix, *fallback);
      }
      t(s, p) = *v;
    }
  return t;
}

inline std::vector<double> read_label_vector(ConfigReader& cfg, const std::string& section, const std::string& prefix,
                                             const LabelSpace& labels, double fallback) {
  std::vector<double> out(labels.size());
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const std::string key = prefix + "." + labels.name(s);
    out[s] = cfg.has(section, key) ? cfg.number(section, key) : cfg.number(section, prefix, fallback);
  }
  return out;
}

}  // namespace detail

struct LoadedScenario {
  Scenario scenario;
  std::string effective_config;
};

/// Parses and validates a scenario. `overrides` are (section, key, value)
/// triples applied before validation (CLI flags).
inline LoadedScenario load_scenario(const std::string& text,
                                    const std::vector<std::tuple<std::string, std::string, std::string>>& overrides = {}) {
  ConfigReader cfg(text);
  for (const auto& [sec, key, value] : overrides) cfg.set(sec, key, value);
  Scenario sc;

  // --- process
  HiddenSpace hidden(cfg.words("process", "targets"));
  const std::string chain = cfg.text("process", "type_chain", "independent");
  TypeTargetKernel kernel;
  if (chain == "independent") {
    const double eta = cfg.number("process", "eta_fe");
    std::vector<double> weights;
    if (cfg.has("process", "target_weights")) weights = cfg.numbers("process", "target_weights");
    kernel = TypeTargetKernel::independent(hidden, eta, weights);
  } else if (chain == "matrix") {
    kernel = TypeTargetKernel(hidden, detail::read_rows(cfg, "process", "kernel", detail::pair_names(hidden), hidden.size()));
  } else {
    throw ConfigError("process.type_chain", "expected 'independent' or 'matrix'");
  }

  const std::string mode = cfg.text("process", "arrival_mode", "type_pair");
  InterArrivalModel arrivals;
  if (mode == "single") {
    arrivals = InterArrivalModel::single(hidden, 1.0 / cfg.number("process", "mean"));
  } else if (mode == "type_pair") {
    Table rates(kNumAttackTypes, kNumAttackTypes);
    for (AttackType a : kAttackTypes)
      for (AttackType b : kAttackTypes) {
        const std::string key = "mean." + std::string(to_string(a)) + "." + std::string(to_string(b));
        const double mean = cfg.number("process", key);
        if (!(mean > 0.0)) throw ConfigError("process." + key, "mean inter-arrival time must be positive");
        rates(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) = 1.0 / mean;
      }
    arrivals = InterArrivalModel::type_pair(hidden, rates);
  } else if (mode == "full") {
    const auto names = detail::pair_names(hidden);
    Table rates(hidden.size(), hidden.size());
    for (std::size_t a = 0; a < names.size(); ++a)
      for (std::size_t b = 0; b < names.size(); ++b) {
        const std::string key = "mean." + names[a] + "." + names[b];
        const double mean = cfg.number("process", key);
        if (!(mean > 0.0)) throw ConfigError("process." + key, "mean inter-arrival time must be positive");
        rates(a, b) = 1.0 / mean;
      }
    arrivals = InterArrivalModel::full(hidden, rates);
  } else {
    throw ConfigError("process.arrival_mode", "expected 'single', 'type_pair' or 'full'");
  }
  const double rho = cfg.number("process", "rho", 1.0);
  if (rho != 1.0) arrivals = arrivals.scaled(rho);
  const std::size_t initial =
      detail::parse_pair(hidden, "process.initial", cfg.text("process", "initial", "feint/" + hidden.targets().front()));

  // --- triage
  std::vector<LabelSpace::Dimension> dims;
  for (const auto& name : cfg.words("triage", "dimensions")) dims.push_back({name, cfg.words("triage", name)});
  LabelSpace labels(dims);
  RevelationKernel reveal;
  const std::string rmode = cfg.text("triage", "revelation", "separable");
  if (rmode == "separable") {
    std::vector<Table> factors;
    for (const auto& dim : labels.dimensions()) {
      const std::string given = cfg.text("triage", dim.name + ".given");
      const std::size_t nv = dim.values.size();
      Table f(hidden.size(), nv);
      for (std::size_t p = 0; p < hidden.size(); ++p) {
        std::string key;
        if (given == "target") key = dim.name + "." + hidden.targets()[hidden.target_of(p)];
        else if (given == "type") key = dim.name + "." + std::string(to_string(hidden.type_of(p)));
        else if (given == "pair") key = dim.name + "." + hidden.pair_name(p);
        else if (given == "none") key = dim.name + ".probs";
        else throw ConfigError("triage." + dim.name + ".given", "expected target, type, pair or none");
        const auto row = cfg.numbers("triage", key);
        if (row.size() != nv) throw ConfigError("triage." + key, "expected " + std::to_string(nv) + " values");
        for (std::size_t v = 0; v < nv; ++v) f(p, v) = row[v];
      }
      factors.push_back(std::move(f));
    }
    reveal = RevelationKernel::separable(hidden, labels, factors);
  } else if (rmode == "full") {
    reveal = RevelationKernel(hidden, labels, detail::read_rows(cfg, "triage", "o", detail::pair_names(hidden), labels.size()));
  } else {
    throw ConfigError("triage.revelation", "expected 'separable' or 'full'");
  }

  // --- operator
  OperatorProfile op;
  op.expertise = cfg.text("operator", "expertise", "tier1");
  std::optional<std::size_t> dim;
  if (cfg.has("operator", "inspection_dimension")) dim = labels.dimension_index(cfg.text("operator", "inspection_dimension"));
  op.mean_inspection = detail::read_label_pair_table(cfg, "operator", "mean_inspection", hidden, labels, dim, std::nullopt);
  op.aitn_noise = cfg.number("operator", "aitn_noise", 5.0);
  op.aitn_min = cfg.number("operator", "aitn_min", 0.1);
  op.attention_threshold = detail::read_label_vector(cfg, "operator", "attention_threshold", labels, 0.0);
  op.loe_slope = cfg.number("operator", "loe_slope", 0.25);
  op.loe_floor = cfg.number("operator", "loe_floor", 0.0);
  op.success_prob = detail::read_label_pair_table(cfg, "operator", "success_prob", hidden, labels, dim, 0.9);
  op.mad = detail::read_label_vector(cfg, "operator", "mad", labels, 60.0);
  const std::string sw = cfg.text("operator", "switching", "ambitious");
  if (sw == "ambitious") {
    op.switching = SwitchingModel::ambitious();
  } else if (sw == "tabular") {
    std::vector<Table> hazard;
    for (std::size_t dk = 1;; ++dk) {
      const std::string base = "switch." + std::to_string(dk);
      bool any = cfg.has("operator", base);
      for (std::size_t s = 0; s < labels.size() && !any; ++s) any = cfg.has("operator", base + "." + labels.name(s));
      if (!any) break;
      Table t(labels.size(), labels.size());
      for (std::size_t s = 0; s < labels.size(); ++s) {
        const std::string key = cfg.has("operator", base + "." + labels.name(s)) ? base + "." + labels.name(s) : base;
        const auto row = cfg.numbers("operator", key);
        if (row.size() != labels.size())
          throw ConfigError("operator." + key, "expected " + std::to_string(labels.size()) + " values (one per label)");
        for (std::size_t s2 = 0; s2 < labels.size(); ++s2) t(s, s2) = row[s2];
      }
      hazard.push_back(std::move(t));
    }
    op.switching = SwitchingModel::tabular(std::move(hazard), cfg.number("operator", "switch_deemphasized", 0.0));
  } else {
    throw ConfigError("operator.switching", "expected 'ambitious' or 'tabular'");
  }
  op.idle_pickup = cfg.number("operator", "idle_pickup", sw == "tabular" ? 1.0 : 0.0);

  // --- costs
  Table costs(kNumResponses, labels.size());
  std::optional<std::size_t> cost_dim;
  if (cfg.has("costs", "key_dimension")) cost_dim = labels.dimension_index(cfg.text("costs", "key_dimension"));
  for (AlertResponse w : kResponses) {
    const std::string base(to_string(w));
    for (std::size_t s = 0; s < labels.size(); ++s) {
      std::vector<std::string> candidates = {base + "." + labels.name(s)};
      if (cost_dim) candidates.push_back(base + "." + labels.dimensions()[*cost_dim].values[labels.component(s, *cost_dim)]);
      candidates.push_back(base);
      bool found = false;
      for (const auto& key : candidates)
        if (cfg.has("costs", key)) {
          costs(static_cast<std::size_t>(w), s) = cfg.number("costs", key);
          found = true;
          break;
        }
      if (!found) throw ConfigError("costs." + base, "no stage cost for label " + labels.name(s));
    }
  }

  // --- am / sim
  sc.am.max_m = static_cast<int>(cfg.number("am", "max_m", 3));
  sc.am.gamma = cfg.number("am", "gamma", 0.95);
  sc.am.kc = cfg.number("am", "kc", 10.0);
  sc.am.epsilon = cfg.number("am", "epsilon", 1.0);
  sc.am.explore_inspections = static_cast<std::uint64_t>(cfg.number("am", "explore_inspections", 400000));
  const std::string ri = cfg.text("am", "rate_index", "label");
  if (ri == "label") sc.am.rate_index = LearningRateIndex::Label;
  else if (ri == "label_action") sc.am.rate_index = LearningRateIndex::LabelAction;
  else throw ConfigError("am.rate_index", "expected 'label' or 'label_action'");

  sc.sim.horizon = static_cast<std::size_t>(cfg.number("sim", "horizon", 12000));
  sc.sim.shift_seconds = cfg.number("sim", "shift_seconds", 86400.0);
  sc.sim.episodes = static_cast<std::size_t>(cfg.number("sim", "episodes", 20));
  sc.sim.seed = static_cast<std::uint64_t>(cfg.number("sim", "seed", 1));

  cfg.reject_unused();

  sc.process = AttackModel{hidden, labels, kernel, arrivals, reveal, initial};
  sc.op = std::move(op);
  sc.costs = StageCostTable(labels, std::move(costs));
  sc.validate();
  (void)stationary_distribution(sc.process.kernel);

  LoadedScenario out{std::move(sc), cfg.effective()};
  out.scenario.digest = fnv1a_hex(out.effective_config);
  return out;
}

}  // namespace idos
