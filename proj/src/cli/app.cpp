#include "nbelnet/cli/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "nbelnet/cli/io.hpp"
#include "nbelnet/debias.hpp"
#include "nbelnet/model.hpp"
#include "nbelnet/selection.hpp"
#include "nbelnet/simulate.hpp"
#include "nbelnet/solver.hpp"
#include "nbelnet/theory.hpp"

namespace nbelnet::cli {

using json = nlohmann::json;

json default_config() {
  return json{
      {"data", ""},
      {"truth", ""},
      {"theta", 2.0},
      {"penalty", {{"lambda1", 0.1}, {"lambda2", 0.0}, {"lambda1_rate", 0.0}, {"lambda2_ratio", 0.0}}},
      {"solver", {{"tol", 1e-8}, {"max_iter", 10000}}},
      {"sim",
       {{"n", 200},
        {"p", 50},
        {"d_star", 3},
        {"beta_min", 1.0},
        {"beta_max", 1.0},
        {"design", "iid_gaussian"},
        {"rho", 0.0},
        {"clamp_L", 5.0},
        {"random_signs", false}}},
      {"theory",
       {{"B", 1.0}, {"epsilon_n", 0.0}, {"zeta", 3.0}, {"samples", 16}, {"stabil_budget", 16}, {"q", 2.0}}},
      {"run", {{"replicates", 20}, {"seed", 0}}},
      {"select", {{"zero_tol", 0.0}, {"h", 0.5}, {"L1", 1.0}, {"L2", 1.0}}},
      {"debias", {{"lambda_node", -1.0}, {"level", 0.95}, {"target", 0}}},
      {"disp", {{"variant", "quadratic"}}},
      {"grouping", {{"pairs", "all"}}},
      {"sign", {{"n_grid", json::array()}, {"eta", 0.5}}},
  };
}

namespace {

enum class Kind { Real, Int, Bool, Text, RealList };

struct FlagSpec {
  const char* flag;
  const char* pointer;
  Kind kind;
  const char* help;
};

const std::vector<FlagSpec>& flag_specs() {
  static const std::vector<FlagSpec> specs = {
      {"--data", "/data", Kind::Text, "input CSV with a header and a 'y' column"},
      {"--truth", "/truth", Kind::Text, "JSON file with a 'beta_star' array (e.g. simulate output)"},
      {"--theta", "/theta", Kind::Real, "NB dispersion theta"},
      {"--lambda1", "/penalty/lambda1", Kind::Real, "l1 penalty"},
      {"--lambda2", "/penalty/lambda2", Kind::Real, "squared l2 penalty"},
      {"--lambda1-rate", "/penalty/lambda1_rate", Kind::Real, "if > 0, lambda1 = rate * sqrt(log p / n)"},
      {"--lambda2-ratio", "/penalty/lambda2_ratio", Kind::Real, "if > 0, lambda2 = ratio * lambda1"},
      {"--tol", "/solver/tol", Kind::Real, "KKT tolerance"},
      {"--max-iter", "/solver/max_iter", Kind::Int, "iteration cap"},
      {"--n", "/sim/n", Kind::Int, "sample size"},
      {"--p", "/sim/p", Kind::Int, "number of covariates"},
      {"--d-star", "/sim/d_star", Kind::Int, "number of nonzero coefficients"},
      {"--beta-min", "/sim/beta_min", Kind::Real, "smallest signal magnitude"},
      {"--beta-max", "/sim/beta_max", Kind::Real, "largest signal magnitude"},
      {"--design", "/sim/design", Kind::Text, "iid_gaussian | ar1 | equicorrelated | duplicated_pairs"},
      {"--rho", "/sim/rho", Kind::Real, "design correlation"},
      {"--clamp-L", "/sim/clamp_L", Kind::Real, "raw design entries are truncated to [-L, L]"},
      {"--random-signs", "/sim/random_signs", Kind::Bool, "random instead of alternating signs"},
      {"--B", "/theory/B", Kind::Real, "sup-norm bound on the truth"},
      {"--epsilon-n", "/theory/epsilon_n", Kind::Real, "slack of the restricted set"},
      {"--zeta", "/theory/zeta", Kind::Real, "cone slope (> 1)"},
      {"--samples", "/theory/samples", Kind::Int, "restarts of the compatibility searches"},
      {"--stabil-budget", "/theory/stabil_budget", Kind::Int, "restarts of the Stabil search"},
      {"--q", "/theory/q", Kind::Real, "exponent of the weak CIF"},
      {"--replicates", "/run/replicates", Kind::Int, "Monte Carlo replicates"},
      {"--seed", "/run/seed", Kind::Int, "master seed (overrides NBELNET_SEED)"},
      {"--zero-tol", "/select/zero_tol", Kind::Real, "support threshold"},
      {"--h-const", "/select/h", Kind::Real, "design-condition constant h"},
      {"--L1", "/select/L1", Kind::Real, "weighted correlation constant L1"},
      {"--L2", "/select/L2", Kind::Real, "weighted correlation constant L2"},
      {"--lambda-node", "/debias/lambda_node", Kind::Real, "nodewise penalty (< 0: sqrt(log p / n))"},
      {"--level", "/debias/level", Kind::Real, "confidence level"},
      {"--target", "/debias/target", Kind::Int, "0-based coordinate tracked for coverage"},
      {"--variant", "/disp/variant", Kind::Text, "linear | quadratic"},
      {"--pairs", "/grouping/pairs", Kind::Text, "all | adjacent | duplicated"},
      {"--n-grid", "/sign/n_grid", Kind::RealList, "comma-separated sample sizes"},
      {"--eta", "/sign/eta", Kind::Real, "split of lambda1 between the E2 and E3 events"},
  };
  return specs;
}

struct CommandSpec {
  const char* name;
  const char* help;
  std::vector<std::string> keys;
};

const std::vector<CommandSpec>& command_specs() {
  static const std::vector<CommandSpec> specs = {
      {"fit", "fit the elastic-net NB model to a CSV", {"data", "theta", "penalty", "solver"}},
      {"simulate", "draw a dataset from the simulation design", {"theta", "sim", "run"}},
      {"oracle-check", "Monte Carlo check of the oracle bounds",
       {"theta", "penalty", "solver", "sim", "theory", "run"}},
      {"grouping", "grouping-effect bound for pairs of coefficients",
       {"data", "theta", "penalty", "solver", "sim", "run", "grouping"}},
      {"sign-consistency", "sign recovery frequency over replicates",
       {"theta", "penalty", "solver", "sim", "run", "select", "sign"}},
      {"select", "support recovery on a CSV, or honest selection over replicates",
       {"data", "truth", "theta", "penalty", "solver", "sim", "theory", "run", "select"}},
      {"debias", "de-biased estimates and intervals, or their coverage over replicates",
       {"data", "theta", "penalty", "solver", "sim", "run", "debias"}},
      {"disp-test", "Cameron-Trivedi overdispersion test",
       {"data", "theta", "penalty", "solver", "disp"}},
  };
  return specs;
}

std::string top_key(const char* pointer) {
  std::string s(pointer + 1);
  return s.substr(0, s.find('/'));
}

json parse_flag_value(const FlagSpec& spec, const std::string& raw) {
  const std::string where = std::string(spec.flag) + ": ";
  auto real = [&](const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
      throw InputError(where + "cannot parse '" + s + "' as a number");
    }
    return v;
  };
  switch (spec.kind) {
    case Kind::Real:
      return real(raw);
    case Kind::Int: {
      if (!raw.empty() && raw[0] == '-') {
        errno = 0;
        char* end = nullptr;
        const long long v = std::strtoll(raw.c_str(), &end, 10);
        if (end != raw.c_str() + raw.size() || errno == ERANGE) {
          throw InputError(where + "cannot parse '" + raw + "' as an integer");
        }
        return v;
      }
      errno = 0;
      char* end = nullptr;
      const unsigned long long v = std::strtoull(raw.c_str(), &end, 10);
      if (raw.empty() || end != raw.c_str() + raw.size() || errno == ERANGE) {
        throw InputError(where + "cannot parse '" + raw + "' as an integer");
      }
      return v;
    }
    case Kind::Bool:
      if (raw == "true" || raw == "1") return true;
      if (raw == "false" || raw == "0") return false;
      throw InputError(where + "expected true or false, got '" + raw + "'");
    case Kind::Text:
      return raw;
    case Kind::RealList: {
      json arr = json::array();
      std::stringstream ss(raw);
      std::string item;
      while (std::getline(ss, item, ',')) arr.push_back(real(item));
      return arr;
    }
  }
  return nullptr;
}

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

void merge_into(json& target, const json& source, const std::string& path) {
  if (!source.is_object()) throw InputError("config: " + (path.empty() ? "root" : path) + " must be an object");
  for (auto it = source.begin(); it != source.end(); ++it) {
    const std::string key_path = path + "/" + it.key();
    if (!target.contains(it.key())) throw InputError("config: unknown key " + key_path);
    json& slot = target[it.key()];
    if (slot.is_object()) {
      merge_into(slot, it.value(), key_path);
    } else {
      if (!same_kind(slot, it.value())) throw InputError("config: wrong type for " + key_path);
      slot = it.value();
    }
  }
}

// Typed access to the resolved configuration.
struct Config {
  json all;

  const json& at(const char* pointer) const {
    const json::json_pointer ptr(pointer);
    if (!all.contains(ptr)) throw InputError(std::string("config: missing ") + pointer);
    return all.at(ptr);
  }
  double real(const char* pointer) const {
    const json& v = at(pointer);
    if (!v.is_number()) throw InputError(std::string("config: ") + pointer + " must be a number");
    return v.get<double>();
  }
  long long integer(const char* pointer) const {
    const json& v = at(pointer);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float() && v.get<double>() == std::floor(v.get<double>())) {
      return static_cast<long long>(v.get<double>());
    }
    throw InputError(std::string("config: ") + pointer + " must be an integer");
  }
  std::uint64_t seed() const {
    const json& v = at("/run/seed");
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    throw InputError("config: /run/seed must be a nonnegative integer");
  }
  bool boolean(const char* pointer) const {
    const json& v = at(pointer);
    if (!v.is_boolean()) throw InputError(std::string("config: ") + pointer + " must be a boolean");
    return v.get<bool>();
  }
  std::string text(const char* pointer) const {
    const json& v = at(pointer);
    if (!v.is_string()) throw InputError(std::string("config: ") + pointer + " must be a string");
    return v.get<std::string>();
  }
  int positive_int(const char* pointer) const {
    const long long v = integer(pointer);
    if (v < 1 || v > 1'000'000'000) throw InputError(std::string("config: ") + pointer + " must be a positive integer");
    return static_cast<int>(v);
  }
};

ExperimentParams experiment_params(const Config& c) {
  ExperimentParams p;
  p.penalty.lambda1 = c.real("/penalty/lambda1");
  p.penalty.lambda2 = c.real("/penalty/lambda2");
  p.lambda1_rate = c.real("/penalty/lambda1_rate");
  p.lambda2_ratio = c.real("/penalty/lambda2_ratio");
  if (p.lambda1_rate < 0.0 || p.lambda2_ratio < 0.0) {
    throw InputError("config: lambda1_rate and lambda2_ratio must be nonnegative");
  }
  p.penalty.validate();
  p.solver.tol = c.real("/solver/tol");
  p.solver.max_iter = c.positive_int("/solver/max_iter");
  p.solver.validate();
  p.theory.B = c.real("/theory/B");
  p.theory.epsilon_n = c.real("/theory/epsilon_n");
  p.theory.zeta = c.real("/theory/zeta");
  p.theory.samples = c.positive_int("/theory/samples");
  p.theory.seed = c.seed();
  p.theory.validate();
  p.stabil_budget = c.positive_int("/theory/stabil_budget");
  p.eta = c.real("/sign/eta");
  if (!(p.eta > 0.0 && p.eta < 1.0)) throw InputError("config: /sign/eta must lie in (0, 1)");
  p.zero_tol = c.real("/select/zero_tol");
  if (!(p.zero_tol >= 0.0)) throw InputError("config: /select/zero_tol must be nonnegative");
  p.lambda_node = c.real("/debias/lambda_node");
  p.level = c.real("/debias/level");
  if (!(p.level > 0.0 && p.level < 1.0)) throw InputError("config: /debias/level must lie in (0, 1)");
  p.target = static_cast<Index>(c.integer("/debias/target"));
  return p;
}

SimSpec sim_spec(const Config& c) {
  SimSpec s;
  s.n = static_cast<Index>(c.integer("/sim/n"));
  s.p = static_cast<Index>(c.integer("/sim/p"));
  s.d_star = static_cast<Index>(c.integer("/sim/d_star"));
  s.beta_min = c.real("/sim/beta_min");
  s.beta_max = c.real("/sim/beta_max");
  s.design = parse_design(c.text("/sim/design"));
  s.rho = c.real("/sim/rho");
  s.clamp_L = c.real("/sim/clamp_L");
  s.theta = c.real("/theta");
  s.seed = c.seed();
  s.random_signs = c.boolean("/sim/random_signs");
  s.validate();
  return s;
}

json to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json to_json(const IndexSet& s) {
  json arr = json::array();
  for (Index i : s) arr.push_back(static_cast<long long>(i));
  return arr;
}

json metrics_json(const ReplicationSummary& s) {
  json m = json::object();
  for (const auto& [k, v] : s.metrics) m[k] = v;
  return m;
}

struct Output {
  json doc = json::object();
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  int code = kExitOk;
};

void put_summary(Output& o, const ReplicationSummary& s) {
  o.doc["experiment"] = s.experiment;
  o.doc["replicates"] = s.replicates;
  o.doc["metrics"] = metrics_json(s);
  o.doc["columns"] = s.columns;
  o.header = {"replicate"};
  o.header.insert(o.header.end(), s.columns.begin(), s.columns.end());
  for (std::size_t r = 0; r < s.rows.size(); ++r) {
    std::vector<double> row{static_cast<double>(r)};
    row.insert(row.end(), s.rows[r].begin(), s.rows[r].end());
    o.rows.push_back(std::move(row));
  }
}

struct Instance {
  Dataset data;
  std::optional<Vector> beta_star;
  std::vector<std::string> covariates;
  std::vector<double> mu;
  std::string source;
};

Instance load_instance(const Config& c, bool allow_sim) {
  const std::string path = c.text("/data");
  const double theta = c.real("/theta");
  if (!path.empty()) {
    LoadedData ld = load_dataset(path, theta);
    return Instance{std::move(ld.data), std::nullopt, std::move(ld.covariates), std::move(ld.mu), "csv"};
  }
  if (!allow_sim) throw InputError("--data is required");
  SimInstance si = simulate(sim_spec(c), c.seed());
  std::vector<std::string> names;
  for (Index j = 0; j < si.data.p(); ++j) names.push_back("x" + std::to_string(j + 1));
  return Instance{std::move(si.data), std::move(si.beta_star), std::move(names), {}, "simulated"};
}

void put_fit(json& doc, const Fit& f) {
  doc["beta"] = to_json(f.beta);
  doc["objective"] = f.objective_value;
  doc["iterations"] = f.iterations;
  doc["converged"] = f.converged;
  doc["kkt_max_violation"] = f.kkt.max_violation;
  doc["support"] = to_json(support_of(f.beta));
  doc["lambda1"] = f.penalty.lambda1;
  doc["lambda2"] = f.penalty.lambda2;
  doc["warnings"] = f.warnings;
}

Output cmd_fit(const Config& c, int) {
  const Instance in = load_instance(c, false);
  const ExperimentParams prm = experiment_params(c);
  const Penalty pen = prm.resolve(in.data.n(), in.data.p());
  const Fit f = fit(in.data, pen, prm.solver);
  Output o;
  put_fit(o.doc, f);
  o.doc["theta"] = in.data.theta();
  o.doc["n"] = static_cast<long long>(in.data.n());
  o.doc["p"] = static_cast<long long>(in.data.p());
  o.doc["covariates"] = in.covariates;
  o.header = {"j", "beta"};
  for (Index j = 0; j < f.beta.size(); ++j) o.rows.push_back({static_cast<double>(j), f.beta[j]});
  o.code = f.converged ? kExitOk : kExitNotConverged;
  return o;
}

Output cmd_simulate(const Config& c, int) {
  const SimSpec spec = sim_spec(c);
  const SimInstance si = simulate(spec, c.seed());
  const Dataset& d = si.data;
  Output o;
  o.doc["beta_star"] = to_json(si.beta_star);
  o.doc["n"] = static_cast<long long>(d.n());
  o.doc["p"] = static_cast<long long>(d.p());
  o.doc["mean_y"] = d.y().mean();
  o.doc["max_y"] = d.y().maxCoeff();
  o.doc["zero_fraction"] = (d.y().array() == 0.0).cast<double>().mean();
  o.doc["max_abs_x"] = d.max_abs_x();
  for (Index j = 0; j < d.p(); ++j) o.header.push_back("x" + std::to_string(j + 1));
  o.header.push_back("y");
  for (Index i = 0; i < d.n(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(d.p() + 1));
    for (Index j = 0; j < d.p(); ++j) row[static_cast<std::size_t>(j)] = d.X()(i, j);
    row.back() = d.y()[i];
    o.rows.push_back(std::move(row));
  }
  return o;
}

Output cmd_oracle_check(const Config& c, int threads) {
  const ReplicationSummary s = run_replications(sim_spec(c), "oracle-check",
                                                c.positive_int("/run/replicates"), c.seed(),
                                                experiment_params(c), threads);
  Output o;
  put_summary(o, s);
  if (s.metrics.at("t32_applicable_count") == 0.0) o.code = kExitInapplicable;
  return o;
}

Output cmd_grouping(const Config& c, int) {
  const Instance in = load_instance(c, true);
  const ExperimentParams prm = experiment_params(c);
  const Penalty pen = prm.resolve(in.data.n(), in.data.p());
  if (!(pen.lambda2 > 0.0)) throw InputError("grouping needs lambda2 > 0");
  const Fit f = fit(in.data, pen, prm.solver);
  const std::string mode = c.text("/grouping/pairs");
  std::vector<std::pair<Index, Index>> pairs;
  const Index p = in.data.p();
  if (mode == "all") {
    for (Index k = 0; k < p; ++k)
      for (Index l = k + 1; l < p; ++l) pairs.emplace_back(k, l);
  } else if (mode == "adjacent") {
    for (Index k = 0; k + 1 < p; ++k) pairs.emplace_back(k, k + 1);
  } else if (mode == "duplicated") {
    for (Index k = 0; k + 1 < p; k += 2) pairs.emplace_back(k, k + 1);
  } else {
    throw InputError("--pairs must be all, adjacent or duplicated");
  }
  const double slack = 10.0 * prm.solver.tol;
  Output o;
  json list = json::array();
  bool all_hold = true;
  double max_excess = -std::numeric_limits<double>::infinity();
  o.header = {"k", "l", "rho", "lhs", "rhs", "holds"};
  for (const auto& [k, l] : pairs) {
    const GroupingBound g = grouping_bound(f.beta, in.data, pen, k, l);
    const bool holds = g.holds(slack);
    all_hold = all_hold && holds;
    max_excess = std::max(max_excess, g.lhs - g.rhs);
    list.push_back({{"k", static_cast<long long>(k)},
                    {"l", static_cast<long long>(l)},
                    {"rho", g.rho},
                    {"lhs", g.lhs},
                    {"rhs", g.rhs},
                    {"holds", holds}});
    o.rows.push_back({static_cast<double>(k), static_cast<double>(l), g.rho, g.lhs, g.rhs, holds ? 1.0 : 0.0});
  }
  o.doc["source"] = in.source;
  o.doc["pairs"] = std::move(list);
  o.doc["pair_count"] = static_cast<long long>(pairs.size());
  o.doc["all_hold"] = all_hold;
  o.doc["max_excess"] = pairs.empty() ? 0.0 : max_excess;
  o.doc["slack"] = slack;
  o.doc["converged"] = f.converged;
  o.doc["lambda1"] = pen.lambda1;
  o.doc["lambda2"] = pen.lambda2;
  o.code = f.converged ? kExitOk : kExitNotConverged;
  return o;
}

Output cmd_sign_consistency(const Config& c, int threads) {
  SimSpec spec = sim_spec(c);
  const ExperimentParams prm = experiment_params(c);
  std::vector<Index> grid;
  for (const auto& v : c.at("/sign/n_grid")) {
    if (!v.is_number() || v.get<double>() < 2.0 || v.get<double>() != std::floor(v.get<double>())) {
      throw InputError("config: /sign/n_grid entries must be integers >= 2");
    }
    grid.push_back(static_cast<Index>(v.get<double>()));
  }
  if (grid.empty()) grid.push_back(spec.n);
  Output o;
  json curve = json::array();
  o.header = {"n", "replicate"};
  int inversions = 0;
  double largest_drop = 0.0;
  double prev = -1.0;
  for (Index n : grid) {
    spec.n = n;
    const ReplicationSummary s = sign_consistency_experiment(spec, prm.penalty, c.positive_int("/run/replicates"),
                                                             c.seed(), prm, threads);
    if (o.header.size() == 2) o.header.insert(o.header.end(), s.columns.begin(), s.columns.end());
    const double rate = s.metrics.at("sign_match_rate");
    if (prev >= 0.0 && rate < prev) {
      ++inversions;
      largest_drop = std::max(largest_drop, prev - rate);
    }
    prev = rate;
    json point = metrics_json(s);
    point["n"] = static_cast<long long>(n);
    curve.push_back(std::move(point));
    for (std::size_t r = 0; r < s.rows.size(); ++r) {
      std::vector<double> row{static_cast<double>(n), static_cast<double>(r)};
      row.insert(row.end(), s.rows[r].begin(), s.rows[r].end());
      o.rows.push_back(std::move(row));
    }
  }
  o.doc["experiment"] = "sign-consistency";
  o.doc["curve"] = std::move(curve);
  o.doc["inversions"] = inversions;
  o.doc["largest_drop"] = largest_drop;
  return o;
}

Vector read_truth(const std::string& path, Index p) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InputError(path + ": invalid JSON: " + e.what());
  }
  if (!doc.contains("beta_star") || !doc["beta_star"].is_array()) {
    throw InputError(path + ": expected a 'beta_star' array");
  }
  const json& arr = doc["beta_star"];
  if (static_cast<Index>(arr.size()) != p) {
    throw InputError(path + ": beta_star has " + std::to_string(arr.size()) + " entries, data has p = " +
                     std::to_string(p));
  }
  Vector b(p);
  for (Index j = 0; j < p; ++j) {
    if (!arr[static_cast<std::size_t>(j)].is_number()) throw InputError(path + ": beta_star entries must be numbers");
    b[j] = arr[static_cast<std::size_t>(j)].get<double>();
  }
  return b;
}

Matrix sample_gram(const Dataset& d) { return d.X().transpose() * d.X() / static_cast<double>(d.n()); }

Output cmd_select(const Config& c, int threads) {
  const ExperimentParams prm = experiment_params(c);
  Output o;
  if (c.text("/data").empty()) {
    const SimSpec spec = sim_spec(c);
    const ReplicationSummary s = honest_selection_experiment(spec, prm.penalty, c.positive_int("/run/replicates"),
                                                             c.seed(), prm, threads);
    put_summary(o, s);
    o.doc["P_union_bound_ok"] =
        1.0 - s.metrics.at("P_equals_H") <=
        (1.0 - s.metrics.at("P_contains_H")) + (1.0 - s.metrics.at("P_subset_of_H")) + 1e-12;
    return o;
  }
  const Instance in = load_instance(c, false);
  const Dataset& d = in.data;
  const Penalty pen = prm.resolve(d.n(), d.p());
  const Fit f = fit(d, pen, prm.solver);
  SelectionReport sel = support_and_signs(f.beta, prm.zero_tol);
  o.doc["H_hat"] = to_json(sel.H_hat);
  o.doc["signs"] = to_json(sel.signs);
  o.doc["beta"] = to_json(f.beta);
  o.doc["converged"] = f.converged;
  o.doc["lambda1"] = pen.lambda1;
  o.doc["lambda2"] = pen.lambda2;
  o.header = {"j", "beta", "sign"};
  for (Index j = 0; j < d.p(); ++j) o.rows.push_back({static_cast<double>(j), f.beta[j], sel.signs[j]});

  const std::string truth = c.text("/truth");
  if (!truth.empty()) {
    const Vector beta_star = read_truth(truth, d.p());
    compare_to_truth(sel, beta_star);
    const IndexSet H = support_of(beta_star);
    o.doc["contains_H"] = sel.contains_H;
    o.doc["subset_of_H"] = sel.subset_of_H;
    o.doc["equals_H"] = sel.equals_H;
    o.doc["sign_match"] = sel.sign_match;
    o.doc["min_signal"] = sel.min_signal;
    if (!H.empty()) {
      TheoryConfig cfg = prm.theory;
      cfg.L_or_K = d.max_abs_x();
      const double a = a_constant(d.theta(), cfg.L_or_K, cfg.B, cfg.epsilon_n);
      const StabilEstimate st = stabil_constant(sample_gram(d), ConeSpec{3.5, H, cfg.epsilon_n},
                                                cfg.stabil_radius(), prm.stabil_budget, cfg.seed);
      const DetectionThresholds th = detection_thresholds(pen, cfg, static_cast<Index>(H.size()), st.k, a);
      double ussc_bound = std::numeric_limits<double>::infinity();
      try {
        ussc_bound = oracle_bounds_t32(nb_hessian(beta_star, d), ConeSpec{cfg.zeta, H, 0.0}, pen, cfg,
                                       c.real("/theory/q"))
                         .l1_bound;
      } catch (const InapplicableBound&) {
      }
      const ConditionReport cr =
          check_design_conditions(d, f.beta, beta_star, H, c.real("/select/h"), d.theta(),
                                  c.real("/select/L1"), c.real("/select/L2"), ussc_bound);
      o.doc["threshold_B0"] = th.B0;
      o.doc["threshold_free"] = th.free_threshold;
      o.doc["stabil_k"] = st.k;
      o.doc["a_const"] = a;
      o.doc["ussc_bound"] = ussc_bound;
      o.doc["conditions"] = {{"identifiable_ok", cr.identifiable_ok},
                             {"max_offdiag_rho", cr.max_offdiag_rho},
                             {"wcc1_ok", cr.wcc1_ok},
                             {"wcc1_offdiag", cr.wcc1_offdiag},
                             {"wcc1_diag", cr.wcc1_diag},
                             {"wcc2_ok", cr.wcc2_ok},
                             {"wcc2_offdiag", cr.wcc2_offdiag},
                             {"wcc2_diag", cr.wcc2_diag},
                             {"irrepresentable_I", cr.irrepresentable_I},
                             {"ussc_ok", cr.ussc_ok},
                             {"endpoint_approximation", cr.endpoint_approximation}};
    }
  }
  o.code = f.converged ? kExitOk : kExitNotConverged;
  return o;
}

Output cmd_debias(const Config& c, int threads) {
  const ExperimentParams prm = experiment_params(c);
  Output o;
  if (c.text("/data").empty()) {
    const ReplicationSummary s = run_replications(sim_spec(c), "debias-coverage", c.positive_int("/run/replicates"),
                                                  c.seed(), prm, threads);
    put_summary(o, s);
    return o;
  }
  const Instance in = load_instance(c, false);
  const Dataset& d = in.data;
  const Penalty pen = prm.resolve(d.n(), d.p());
  const Fit f = fit(d, pen, prm.solver);
  const double lam_node = prm.lambda_node >= 0.0 ? prm.lambda_node : default_lambda_node(d.n(), d.p());
  const Matrix theta_hat = nodewise_inverse(d, f.beta, lam_node, threads);
  const DebiasResult r = debias(f.beta, d, theta_hat, prm.level);
  const Vector kkt_form = debias_kkt_form(f.beta, d, pen, theta_hat);
  o.doc["beta"] = to_json(f.beta);
  o.doc["b_hat"] = to_json(r.b_hat);
  o.doc["se"] = to_json(r.se);
  o.doc["ci_low"] = to_json(r.ci_low);
  o.doc["ci_high"] = to_json(r.ci_high);
  o.doc["level"] = r.level;
  o.doc["lambda_node"] = lam_node;
  o.doc["form_gap"] = (r.b_hat - kkt_form).lpNorm<Eigen::Infinity>();
  o.doc["form_tol"] = debias_form_tolerance(theta_hat, prm.solver.tol);
  o.doc["converged"] = f.converged;
  o.doc["lambda1"] = pen.lambda1;
  o.doc["lambda2"] = pen.lambda2;
  o.header = {"j", "beta", "b_hat", "se", "ci_low", "ci_high"};
  for (Index j = 0; j < d.p(); ++j) {
    o.rows.push_back({static_cast<double>(j), f.beta[j], r.b_hat[j], r.se[j], r.ci_low[j], r.ci_high[j]});
  }
  o.code = f.converged ? kExitOk : kExitNotConverged;
  return o;
}

Output cmd_disp_test(const Config& c, int) {
  const Instance in = load_instance(c, false);
  const std::string variant_name = c.text("/disp/variant");
  DispersionVariant variant;
  if (variant_name == "linear") {
    variant = DispersionVariant::Linear;
  } else if (variant_name == "quadratic") {
    variant = DispersionVariant::Quadratic;
  } else {
    throw InputError("--variant must be linear or quadratic");
  }
  Output o;
  Vector mu;
  if (!in.mu.empty()) {
    mu = Eigen::Map<const Vector>(in.mu.data(), static_cast<Index>(in.mu.size()));
    o.doc["mu_source"] = "column";
  } else {
    const ExperimentParams prm = experiment_params(c);
    const Penalty pen = prm.resolve(in.data.n(), in.data.p());
    const Fit f = fit(in.data, pen, prm.solver);
    mu = kernel::linear_predictor(f.beta, in.data).array().exp().matrix();
    o.doc["mu_source"] = "fit";
    o.doc["converged"] = f.converged;
    if (!f.converged) o.code = kExitNotConverged;
  }
  const DispersionTest t = cameron_trivedi_test(in.data.y(), mu, variant);
  o.doc["alpha_hat"] = t.alpha_hat;
  o.doc["se"] = t.se;
  o.doc["t_stat"] = t.t_stat;
  o.doc["p_value"] = t.p_value;
  o.doc["variant"] = variant_name;
  o.doc["n"] = static_cast<long long>(in.data.n());
  o.header = {"alpha_hat", "se", "t_stat", "p_value"};
  o.rows.push_back({t.alpha_hat, t.se, t.t_stat, t.p_value});
  return o;
}

using Handler = Output (*)(const Config&, int);

Handler handler_for(const std::string& name) {
  if (name == "fit") return cmd_fit;
  if (name == "simulate") return cmd_simulate;
  if (name == "oracle-check") return cmd_oracle_check;
  if (name == "grouping") return cmd_grouping;
  if (name == "sign-consistency") return cmd_sign_consistency;
  if (name == "select") return cmd_select;
  if (name == "debias") return cmd_debias;
  if (name == "disp-test") return cmd_disp_test;
  throw std::logic_error("no handler for " + name);
}

struct SubcommandState {
  const CommandSpec* spec = nullptr;
  CLI::App* app = nullptr;
  std::vector<std::pair<const FlagSpec*, CLI::Option*>> flags;
  std::vector<std::unique_ptr<std::string>> values;
  std::string config_path;
  std::string out_path;
  std::string table_path;
  std::string data_out;
  std::string format = "json";
  int threads = 1;
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"nbelnet: elastic-net penalized negative binomial regression and its theory toolkit"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<SubcommandState>> subs;
  for (const auto& cs : command_specs()) {
    auto st = std::make_unique<SubcommandState>();
    st->spec = &cs;
    st->app = app.add_subcommand(cs.name, cs.help);
    st->app->add_option("--config", st->config_path, "JSON configuration file");
    st->app->add_option("--out", st->out_path, "output file (default: stdout)");
    st->app->add_option("--format", st->format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    st->app->add_option("--table", st->table_path, "also write the per-row table as CSV");
    st->app->add_option("--threads", st->threads, "worker threads (results do not depend on it)")
        ->check(CLI::Range(1, 1024));
    if (std::string(cs.name) == "simulate") {
      st->app->add_option("--data-out", st->data_out, "write the simulated dataset as CSV");
    }
    for (const auto& fs : flag_specs()) {
      const std::string key = top_key(fs.pointer);
      if (std::find(cs.keys.begin(), cs.keys.end(), key) == cs.keys.end()) continue;
      st->values.push_back(std::make_unique<std::string>());
      CLI::Option* opt = st->app->add_option(fs.flag, *st->values.back(), fs.help);
      st->flags.emplace_back(&fs, opt);
    }
    subs.push_back(std::move(st));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  SubcommandState* active = nullptr;
  for (auto& st : subs) {
    if (st->app->parsed()) active = st.get();
  }
  if (active == nullptr) {
    err << "nbelnet: error: no command given\n";
    return kExitInputError;
  }

  try {
    json cfg = default_config();
    if (!active->config_path.empty()) {
      std::ifstream in(active->config_path);
      if (!in) throw InputError("cannot open config '" + active->config_path + "'");
      json file;
      try {
        in >> file;
      } catch (const json::exception& e) {
        throw InputError(active->config_path + ": invalid JSON: " + e.what());
      }
      merge_into(cfg, file, "");
    }
    if (const char* env = std::getenv("NBELNET_SEED"); env != nullptr && *env != '\0') {
      static const FlagSpec seed_spec{"NBELNET_SEED", "/run/seed", Kind::Int, ""};
      cfg[json::json_pointer("/run/seed")] = parse_flag_value(seed_spec, env);
    }
    for (std::size_t i = 0; i < active->flags.size(); ++i) {
      const auto& [fs, opt] = active->flags[i];
      if (opt->count() == 0) continue;
      cfg[json::json_pointer(fs->pointer)] = parse_flag_value(*fs, *active->values[i]);
    }

    const Config conf{cfg};
    Output o = handler_for(active->spec->name)(conf, active->threads);

    json record = json::object();
    for (const auto& key : active->spec->keys) record[key] = cfg[key];
    o.doc["schema_version"] = kSchemaVersion;
    o.doc["command"] = active->spec->name;
    o.doc["config"] = std::move(record);

    std::string primary;
    if (active->format == "csv") {
      std::ostringstream os;
      write_csv(os, o.header, o.rows);
      primary = os.str();
    } else {
      primary = format_json(o.doc);
    }
    if (active->out_path.empty()) {
      out << primary;
    } else {
      write_text_file(active->out_path, primary);
    }
    if (!active->table_path.empty()) {
      std::ostringstream os;
      write_csv(os, o.header, o.rows);
      write_text_file(active->table_path, os.str());
    }
    if (!active->data_out.empty()) {
      std::ostringstream os;
      write_csv(os, o.header, o.rows);
      write_text_file(active->data_out, os.str());
    }
    if (o.code == kExitNotConverged) err << "nbelnet: warning: solver did not reach the KKT tolerance\n";
    if (o.code == kExitInapplicable) err << "nbelnet: note: tau exceeded e^{-1}/2 in every replicate\n";
    return o.code;
  } catch (const InputError& e) {
    err << "nbelnet: error: " << e.what() << "\n";
  } catch (const DomainError& e) {
    err << "nbelnet: error: " << e.what() << "\n";
  } catch (const std::invalid_argument& e) {
    err << "nbelnet: error: " << e.what() << "\n";
  } catch (const std::out_of_range& e) {
    err << "nbelnet: error: " << e.what() << "\n";
  } catch (const json::exception& e) {
    err << "nbelnet: error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "nbelnet: error: " << e.what() << "\n";
  }
  return kExitInputError;
}

}  // namespace nbelnet::cli
