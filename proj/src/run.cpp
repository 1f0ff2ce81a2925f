#include "tcdp/run.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "tcdp/analysis.hpp"
#include "tcdp/archive.hpp"
#include "tcdp/ntr.hpp"

namespace tcdp {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::NoConsumption: return "no_consumption";
    case ModelKind::Consumption: return "consumption";
    case ModelKind::Option: return "option";
    case ModelKind::OptionEZ: return "option_ez";
  }
  return "?";
}

namespace {

ModelKind parse_kind(const std::string& s) {
  for (auto k : {ModelKind::NoConsumption, ModelKind::Consumption, ModelKind::Option, ModelKind::OptionEZ}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown model kind '" + s + "'");
}

// Object reader that remembers which keys were read so leftovers can be
// rejected.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& raw(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError("missing " + where(key));
    return j_.at(key);
  }

  template <class T>
  T need(const char* key) {
    const json& v = raw(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError("wrong type for " + where(key));
    }
  }

  template <class T>
  T get(const char* key, T def) {
    if (!has(key)) {
      seen_.insert(key);
      return def;
    }
    return need<T>(key);
  }

  Section child(const char* key) {
    if (!has(key)) {
      seen_.insert(key);
      static const json empty = json::object();
      return Section(empty, where(key));
    }
    return Section(raw(key), where(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key " + where(it.key().c_str()));
    }
  }

  std::string where(const char* key) const { return path_.empty() ? std::string(key) : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> per_asset(const json& v, std::size_t k, const std::string& what) {
  if (v.is_number()) return std::vector<double>(k, v.get<double>());
  if (!v.is_array()) throw ConfigError(what + " must be a number or an array");
  auto out = v.get<std::vector<double>>();
  if (out.size() != k) throw ConfigError(what + " has the wrong length");
  return out;
}

Eigen::MatrixXd matrix(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) throw ConfigError(what + " must be a nonempty array of rows");
  const auto rows = v.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(v[0].size()));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != v[0].size()) throw ConfigError(what + " rows differ in length");
    for (std::size_t j = 0; j < v[i].size(); ++j) {
      if (!v[i][j].is_number()) throw ConfigError(what + " must be numeric");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
    }
  }
  return m;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    a.push_back(r);
  }
  return a;
}

MarketParams parse_params(Section& s) {
  MarketParams p;
  p.r = s.need<double>("r");
  const json& mu = s.raw("mu");
  p.mu = mu.is_array() ? mu.get<std::vector<double>>() : std::vector<double>{mu.get<double>()};
  const std::size_t k = p.mu.size();
  p.sigma = per_asset(s.raw("sigma"), k, s.where("sigma"));
  p.corr = s.has("corr") ? matrix(s.raw("corr"), s.where("corr")) : Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  s.get<json>("corr", json());
  p.tau = per_asset(s.raw("tau"), k, s.where("tau"));
  return p;
}

json params_json(const MarketParams& p) {
  return json{{"r", p.r}, {"mu", p.mu}, {"sigma", p.sigma}, {"corr", matrix_json(p.corr)}, {"tau", p.tau}};
}

ParameterChain parse_chain(Section& m) {
  ParameterChain chain;
  if (m.has("states")) {
    const json& st = m.raw("states");
    if (!st.is_array() || st.empty()) throw ConfigError("market.states must be a nonempty array");
    for (std::size_t i = 0; i < st.size(); ++i) {
      Section s(st[i], "market.states[" + std::to_string(i) + "]");
      chain.states.push_back(parse_params(s));
      s.finish();
    }
    chain.transition = m.has("transition") ? matrix(m.raw("transition"), "market.transition")
                                           : Eigen::MatrixXd::Identity(1, 1);
    m.get<json>("transition", json());
    return chain;
  }
  const MarketParams base = parse_params(m);
  chain.states = {base};
  chain.transition = Eigen::MatrixXd::Identity(1, 1);
  if (!m.has("factors")) {
    m.get<json>("factors", json());
    return chain;
  }
  const json& fs_ = m.raw("factors");
  if (!fs_.is_array()) throw ConfigError("market.factors must be an array");
  for (std::size_t f = 0; f < fs_.size(); ++f) {
    Section s(fs_[f], "market.factors[" + std::to_string(f) + "]");
    const auto param = s.need<std::string>("param");
    const auto values = s.need<std::vector<double>>("values");
    const Eigen::MatrixXd P = matrix(s.raw("transition"), s.where("transition"));
    int asset = s.get<int>("asset", -1);
    s.finish();
    if (param != "r" && param != "mu" && param != "sigma") throw ConfigError(s.where("param") + " must be r, mu or sigma");
    if (param != "r" && (asset < 0 || static_cast<std::size_t>(asset) >= base.k())) {
      throw ConfigError(s.where("asset") + " must index a risky asset");
    }
    if (values.empty() || P.rows() != static_cast<Eigen::Index>(values.size())) {
      throw ConfigError(s.where("transition") + " must match the number of values");
    }
    std::vector<MarketParams> next;
    for (const auto& st : chain.states) {
      for (double v : values) {
        MarketParams q = st;
        if (param == "r") q.r = v;
        else if (param == "mu") q.mu[static_cast<std::size_t>(asset)] = v;
        else q.sigma[static_cast<std::size_t>(asset)] = v;
        next.push_back(std::move(q));
      }
    }
    chain.states = std::move(next);
    chain.transition = kronecker(chain.transition, P);
  }
  return chain;
}

void read_time_grid(Section& d, double* horizon, double* dt, bool horizon_required) {
  if (d.has("dt") && d.has("steps_per_year")) throw ConfigError("give only one of discretization.dt and steps_per_year");
  if (d.has("steps_per_year")) {
    *dt = 1.0 / d.need<double>("steps_per_year");
    d.get<json>("dt", json());
  } else {
    *dt = d.need<double>("dt");
    d.get<json>("steps_per_year", json());
  }
  if (!(*dt > 0.0)) throw ConfigError("discretization.dt must be positive");
  if (d.has("horizon") && d.has("periods")) throw ConfigError("give only one of discretization.horizon and periods");
  if (d.has("periods")) {
    *horizon = d.need<int>("periods") * *dt;
    d.get<json>("horizon", json());
  } else if (horizon_required || d.has("horizon")) {
    *horizon = d.need<double>("horizon");
    d.get<json>("periods", json());
  } else {
    d.get<json>("horizon", json());
    d.get<json>("periods", json());
  }
}

}  // namespace

RunConfig parse_config(const json& j) {
  Section top(j, "");
  RunConfig cfg;
  cfg.run_id = top.get<std::string>("run_id", "run");
  cfg.kind = parse_kind(top.need<std::string>("model"));

  Section m = top.child("market");
  Section p = top.child("preferences");
  Section d = top.child("discretization");
  Section o = top.child("option");
  Section out = top.child("output");
  Section g = top.child("diagnostics");
  Section n = top.child("nlp");

  NlpOptions nlp;
  nlp.tolerance = n.get<double>("tolerance", nlp.tolerance);
  nlp.max_iterations = n.get<int>("max_iterations", nlp.max_iterations);
  const bool multistart = n.get<bool>("multistart", true);
  n.finish();

  if (!cfg.is_option()) {
    auto& pm = cfg.portfolio;
    pm.chain = parse_chain(m);
    pm.consumption = cfg.kind == ModelKind::Consumption;
    pm.gamma = p.need<double>("gamma");
    pm.rho = p.get<double>("rho", pm.rho);
    read_time_grid(d, &pm.horizon, &pm.dt, true);
    pm.degree = d.need<int>("degree");
    pm.nodes_per_dim = d.get<int>("nodes_per_dim", 0);
    pm.quadrature_order = d.get<int>("quadrature_order", 0);
    pm.consumption_guess = p.get<double>("consumption_guess", pm.consumption_guess);
    pm.nlp = nlp;
    pm.multistart = multistart;
    try {
      pm.validate();
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  } else {
    auto& om = cfg.option;
    om.r = m.need<double>("r");
    om.mu = m.need<double>("mu");
    om.sigma = m.need<double>("sigma");
    om.tau_stock = m.need<double>("tau");
    om.gamma = p.need<double>("gamma");
    om.rho = p.get<double>("rho", om.rho);
    om.consumption = cfg.kind == ModelKind::OptionEZ || p.get<bool>("consumption", false);
    om.preference = cfg.kind == ModelKind::OptionEZ ? Preference::EpsteinZin : Preference::CRRA;
    om.psi = cfg.kind == ModelKind::OptionEZ ? p.need<double>("psi") : p.get<double>("psi", om.gamma);
    om.consumption_guess = p.get<double>("consumption_guess", om.consumption_guess);
    om.option.kind = parse_option_kind(o.need<std::string>("kind"));
    om.option.expiration = o.need<double>("expiration");
    om.option.tau = o.need<double>("tau");
    om.prune = o.get<double>("prune", om.prune);
    om.option_enabled = o.get<bool>("enabled", true);
    double horizon = 0.0;
    read_time_grid(d, &horizon, &om.dt, false);
    if (d.has("h") && d.has("sub_periods")) throw ConfigError("give only one of discretization.h and sub_periods");
    if (d.has("sub_periods")) {
      om.h = om.dt / d.need<int>("sub_periods");
      d.get<json>("h", json());
    } else {
      om.h = d.get<double>("h", om.h);
      d.get<json>("sub_periods", json());
    }
    om.degree = d.need<int>("degree");
    om.nodes_per_dim = d.get<int>("nodes_per_dim", 0);
    d.get<int>("quadrature_order", 0);
    if (o.has("rounds")) {
      om.rounds = o.need<int>("rounds");
      if (horizon > 0.0) {
        int r = 0;
        if (!integer_periods(horizon, om.option.expiration, &r) || r != om.rounds) {
          throw ConfigError("horizon disagrees with option.rounds * option.expiration");
        }
      }
    } else if (horizon > 0.0) {
      if (!integer_periods(horizon, om.option.expiration, &om.rounds)) {
        throw ConfigError("horizon not integer periods");
      }
    } else {
      o.get<int>("rounds", 1);
    }
    om.nlp = nlp;
    om.multistart = multistart;
    try {
      om.validate();
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }

  cfg.output_dir = out.get<std::string>("dir", cfg.output_dir);
  cfg.workers = out.get<int>("workers", 0);
  cfg.seed = out.get<std::uint64_t>("seed", 1);
  if (cfg.workers < 0) throw ConfigError("output.workers must be nonnegative");

  auto& dg = cfg.diagnostics;
  dg.ntr = g.get<bool>("ntr", dg.ntr);
  dg.ntr_resolution = g.get<int>("ntr_resolution", dg.ntr_resolution);
  dg.ntr_zoom = g.get<bool>("ntr_zoom", dg.ntr_zoom);
  dg.ntr_tol = g.get<double>("ntr_tol", dg.ntr_tol);
  dg.policy_error = g.get<bool>("policy_error", dg.policy_error);
  dg.policy_probes = g.get<int>("policy_probes", dg.policy_probes);
  dg.ce_points = g.get<std::vector<double>>("ce_points", {});
  dg.all_policies = g.get<bool>("all_policies", !cfg.is_option());
  dg.all_surfaces = g.get<bool>("all_surfaces", true);
  if (dg.ntr_resolution < 2) throw ConfigError("diagnostics.ntr_resolution must be at least 2");
  if (dg.policy_error && dg.policy_probes < 100) throw ConfigError("diagnostics.policy_probes must be at least 100");

  for (auto* s : {&m, &p, &d, &o, &out, &g}) s->finish();
  top.finish();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

json RunConfig::to_json() const {
  json j;
  j["run_id"] = run_id;
  j["model"] = to_string(kind);
  NlpOptions nlp;
  bool multistart = true;
  if (!is_option()) {
    const auto& pm = portfolio;
    if (pm.chain.size() == 1) {
      j["market"] = params_json(pm.chain.states.front());
    } else {
      json st = json::array();
      for (const auto& s : pm.chain.states) st.push_back(params_json(s));
      j["market"] = {{"states", st}, {"transition", matrix_json(pm.chain.transition)}};
    }
    j["preferences"] = {{"gamma", pm.gamma}, {"rho", pm.rho}, {"consumption_guess", pm.consumption_guess}};
    j["discretization"] = {{"horizon", pm.horizon},
                           {"dt", pm.dt},
                           {"degree", pm.degree},
                           {"nodes_per_dim", pm.nodes()},
                           {"quadrature_order", pm.order()}};
    nlp = pm.nlp;
    multistart = pm.multistart;
  } else {
    const auto& om = option;
    j["market"] = {{"r", om.r}, {"mu", om.mu}, {"sigma", om.sigma}, {"tau", om.tau_stock}};
    j["preferences"] = {{"gamma", om.gamma}, {"rho", om.rho}, {"psi", om.psi}, {"consumption_guess", om.consumption_guess}};
    if (kind == ModelKind::Option) j["preferences"]["consumption"] = om.consumption;
    j["discretization"] = {{"dt", om.dt}, {"h", om.h}, {"degree", om.degree}, {"nodes_per_dim", om.nodes()}};
    j["option"] = {{"kind", tcdp::to_string(om.option.kind)},
                   {"expiration", om.option.expiration},
                   {"tau", om.option.tau},
                   {"rounds", om.rounds},
                   {"prune", om.prune},
                   {"enabled", om.option_enabled}};
    nlp = om.nlp;
    multistart = om.multistart;
  }
  j["nlp"] = {{"tolerance", nlp.tolerance}, {"max_iterations", nlp.max_iterations}, {"multistart", multistart}};
  j["output"] = {{"dir", output_dir}, {"workers", workers}, {"seed", seed}};
  const auto& dg = diagnostics;
  j["diagnostics"] = {{"ntr", dg.ntr},
                      {"ntr_resolution", dg.ntr_resolution},
                      {"ntr_zoom", dg.ntr_zoom},
                      {"ntr_tol", dg.ntr_tol},
                      {"policy_error", dg.policy_error},
                      {"policy_probes", dg.policy_probes},
                      {"ce_points", dg.ce_points},
                      {"all_policies", dg.all_policies},
                      {"all_surfaces", dg.all_surfaces}};
  return j;
}

namespace {

std::string period_name(const char* prefix, int t, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%04d%s", prefix, t, ext);
  return buf;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

void write_surfaces(const fs::path& dir, const ValueSurface& vs, int first_index) {
  json j;
  j["t"] = vs.t;
  j["first_index"] = first_index;
  j["states"] = json::array();
  for (const auto& s : vs.states) j["states"].push_back(surface_to_json(s));
  write_text(dir / period_name("t", vs.t, ".json"), j.dump() + "\n");
}

void write_policy(const fs::path& dir, const StagePolicy& pol, const TensorNodeGrid& grid, int first_index) {
  if (pol.states.empty()) return;
  std::ostringstream os;
  os << std::setprecision(17);
  const std::size_t k = grid.dimension();
  const bool cons = !pol.states.front().empty() && pol.states.front().front().has_consumption();
  os << "t,state";
  for (std::size_t i = 0; i < k; ++i) os << ",x" << i + 1;
  for (std::size_t i = 0; i < k; ++i) os << ",buy" << i + 1;
  for (std::size_t i = 0; i < k; ++i) os << ",sell" << i + 1;
  if (cons) os << ",c";
  os << ",value,status\n";
  std::vector<double> x(k);
  for (std::size_t s = 0; s < pol.states.size(); ++s) {
    for (std::size_t i = 0; i < pol.states[s].size(); ++i) {
      const auto& d = pol.states[s][i];
      grid.point(i, x);
      os << pol.t << ',' << static_cast<int>(s) + first_index;
      for (double v : x) os << ',' << v;
      for (double v : d.buy) os << ',' << v;
      for (double v : d.sell) os << ',' << v;
      if (cons) os << ',' << d.consumption;
      os << ',' << d.value << ',' << to_string(d.status) << '\n';
    }
  }
  write_text(dir / period_name("policy_t", pol.t, ".csv"), os.str());
}

json solver_stats(const std::vector<StagePolicy>& pols) {
  long long nodes = 0, iters = 0;
  std::map<std::string, long long> status;
  for (const auto& p : pols) {
    for (const auto& st : p.states) {
      for (const auto& d : st) {
        ++nodes;
        iters += d.iterations;
        ++status[to_string(d.status)];
      }
    }
  }
  json j{{"recorded_nodes", nodes}, {"mean_iterations", nodes ? static_cast<double>(iters) / nodes : 0.0}};
  j["status"] = status;
  return j;
}

json decision_json(const Decision& d) {
  json j{{"buy", d.buy}, {"sell", d.sell}, {"post", d.post}, {"value", d.value}, {"status", to_string(d.status)}};
  if (d.has_consumption()) j["consumption"] = d.consumption;
  return j;
}

json region_json(const NoTradeRegion& r) {
  json j{{"state", r.state}, {"tol", r.tol}, {"step", r.step}, {"no_trade_points", r.no_trade_points}};
  j["polygon"] = r.polygon;
  if (!r.empty()) {
    j["lower"] = r.lower;
    j["upper"] = r.upper;
  }
  if (r.polygon.size() >= 3) {
    j["centroid"] = centroid(r);
    j["width"] = {region_width(r, 0), region_width(r, 1)};
  }
  return j;
}

NoTradeRegion trace_region(const PointSolver& solver, const Diagnostics& dg, double dt, const HyperRectangle& dom) {
  TraceOptions to;
  to.resolution = dg.ntr_resolution;
  to.tol = dg.ntr_tol;
  to.dt = dt;
  to.window = dom;
  return trace_no_trade_region(solver, to, dg.ntr_zoom);
}

std::vector<std::vector<double>> ce_states(const std::vector<double>& pts, std::size_t k, bool option) {
  std::vector<std::vector<double>> out;
  for (double p : pts) {
    if (option) out.push_back({p, 0.0});
    else out.push_back(std::vector<double>(k, p));
  }
  return out;
}

}  // namespace

json run(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir / "surfaces");
  fs::create_directories(dir / "policies");
  write_text(dir / "config.json", cfg.to_json().dump(2) + "\n");
  if (cfg.workers > 0) omp_set_num_threads(cfg.workers);
  const int workers = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
  const auto& dg = cfg.diagnostics;

  RunOptions ro;
  ro.workers = cfg.workers;
  ro.retain_policy = [&](int t) { return dg.all_policies || t == 0; };

  json diag;
  diag["run_id"] = cfg.run_id;
  diag["model"] = to_string(cfg.kind);
  std::ofstream ntr_csv;
  json ntr_regions = json::array();
  auto open_ntr = [&]() {
    ntr_csv.open(dir / "ntr_t0.csv", std::ios::binary);
    if (!ntr_csv) throw std::runtime_error("cannot write ntr_t0.csv");
  };

  if (!cfg.is_option()) {
    const auto& pm = cfg.portfolio;
    const auto sol = solve_horizon(pm, ro);
    const TensorNodeGrid grid(pm.nodes(), pm.domain());
    for (const auto& vs : sol.surfaces) {
      if (dg.all_surfaces || vs.t == 0) write_surfaces(dir / "surfaces", vs, 0);
    }
    for (const auto& pol : sol.policies) write_policy(dir / "policies", pol, grid, 0);
    diag["periods"] = pm.periods();
    diag["solver"] = solver_stats(sol.policies);
    json merton = json::array();
    for (const auto& s : pm.chain.states) {
      try {
        merton.push_back(merton_point(s, pm.gamma));
      } catch (const std::exception&) {
        merton.push_back(nullptr);
      }
    }
    diag["merton"] = merton;
    const double map_dt = pm.consumption ? pm.dt : 0.0;
    json states = json::array();
    if (dg.ntr && pm.k() == 2) open_ntr();
    for (std::size_t s = 0; s < pm.chain.size(); ++s) {
      const auto solver = make_point_solver(pm, sol.surfaces[1], 0, s);
      json st{{"state", s}};
      json ce = json::array();
      for (const auto& x0 : ce_states(dg.ce_points, pm.k(), false)) {
        const Decision d = solver(x0);
        json e{{"x", x0}, {"decision", decision_json(d)}};
        if (!pm.consumption) e["certainty_equivalent"] = certainty_equivalent(d.value, pm.gamma);
        ce.push_back(e);
      }
      if (!ce.empty()) st["initial_points"] = ce;
      if (dg.ntr) {
        if (pm.k() == 2) {
          NoTradeRegion r = trace_region(solver, dg, map_dt, pm.domain());
          r.state = s;
          write_region_csv(ntr_csv, r, 0.0);
          ntr_regions.push_back(region_json(r));
          st["ntr"] = ntr_regions.back();
          st["ntr"].erase("polygon");
        } else {
          std::vector<double> c(pm.k(), 0.0);
          if (!merton[s].is_null()) {
            c = merton[s].get<std::vector<double>>();
            double sum = 0.0;
            for (double& v : c) {
              v = std::clamp(v, 0.0, 1.0);
              sum += v;
            }
            if (sum > 0.95) {
              for (double& v : c) v *= 0.95 / sum;
            }
          }
          const auto fp = probe_faces(solver, c, dg.ntr_tol, 30, map_dt);
          json f{{"state", s}, {"center", fp.center}, {"center_inside", fp.center_inside}};
          if (fp.center_inside) {
            f["lower"] = fp.lower;
            f["upper"] = fp.upper;
          }
          ntr_regions.push_back(f);
          st["ntr"] = f;
        }
      }
      if (dg.policy_error && !sol.policies[0].states.empty()) {
        const auto rep = policy_approx_error(sol.policies[0].states[s], grid, pm.degree, solver,
                                             static_cast<std::size_t>(dg.policy_probes), cfg.seed);
        st["policy_error"] = {{"l1", rep.l1},           {"linf", rep.linf},     {"samples", rep.samples},
                              {"failures", rep.failures}, {"degree", rep.degree}, {"seed", rep.seed}, {"region", "budget"}};
      }
      states.push_back(st);
    }
    diag["states"] = states;
  } else {
    const auto& om = cfg.option;
    const auto sol = solve_option_horizon(om, ro);
    const TensorNodeGrid grid(om.nodes(), HyperRectangle::unit_cube(2));
    for (int t = 0; t <= om.periods(); ++t) {
      const auto& vs = sol.surfaces[static_cast<std::size_t>(t)];
      const int first = t < om.periods() ? sol.first_index(t) : 0;
      if (dg.all_surfaces || t == 0) write_surfaces(dir / "surfaces", vs, first);
    }
    for (int t = 0; t < om.periods(); ++t) {
      write_policy(dir / "policies", sol.policies[static_cast<std::size_t>(t)], grid, sol.first_index(t));
    }
    {
      std::ostringstream os;
      write_price_csv(os, sol.lattice, om.dt);
      write_text(dir / "prices.csv", os.str());
    }
    diag["periods"] = om.periods();
    diag["solver"] = solver_stats(sol.policies);
    json lat{{"n", sol.lattice.n}, {"u", sol.lattice.u}, {"p", sol.lattice.p}, {"q", sol.lattice.q}};
    long long visited = 0;
    for (int t = 0; t < sol.lattice.periods; ++t) visited += sol.lattice.retained(t);
    lat["terminal_layer_size"] = sol.lattice.layer_size(sol.lattice.periods);
    lat["retained_states_per_round"] = visited;
    lat["initial_price"] = sol.lattice.price.front().front();
    diag["lattice"] = lat;
    diag["merton"] = om.merton();
    const auto solver = make_option_point_solver(om, sol, 0, 0);
    json st{{"state", 0}};
    json ce = json::array();
    for (const auto& x0 : ce_states(dg.ce_points, 2, true)) {
      const Decision d = solver(x0);
      json e{{"x", x0}, {"decision", decision_json(d)}};
      if (!om.consumption) e["certainty_equivalent"] = certainty_equivalent(d.value, om.gamma);
      ce.push_back(e);
    }
    if (!ce.empty()) st["initial_points"] = ce;
    if (dg.ntr) {
      open_ntr();
      NoTradeRegion r = trace_region(solver, dg, om.consumption ? om.dt : 0.0, HyperRectangle::unit_cube(2));
      write_region_csv(ntr_csv, r, 0.0);
      ntr_regions.push_back(region_json(r));
      st["ntr"] = ntr_regions.back();
      st["ntr"].erase("polygon");
      if (r.samples.size() >= 2) st["ntr"]["principal_slope"] = principal_slope(r);
    }
    if (dg.policy_error && !sol.policies[0].states.empty()) {
      const auto rep = policy_approx_error(sol.policies[0].states[0], grid, om.degree, solver,
                                           static_cast<std::size_t>(dg.policy_probes), cfg.seed);
      st["policy_error"] = {{"l1", rep.l1},           {"linf", rep.linf},     {"samples", rep.samples},
                            {"failures", rep.failures}, {"degree", rep.degree}, {"seed", rep.seed}, {"region", "budget"}};
    }
    diag["states"] = json::array({st});
  }
  if (dg.ntr) {
    write_text(dir / "ntr_t0.json", json{{"time", 0.0}, {"regions", ntr_regions}}.dump(2) + "\n");
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  diag["run"] = {{"seed", cfg.seed}, {"workers", workers}, {"wall_time_seconds", wall}};
  write_text(dir / "diagnostics.json", diag.dump(2) + "\n");
  return diag;
}

int run_main(const fs::path& config_path, const RunOverrides& ov) {
  std::string out_dir = ov.output_dir.value_or("");
  if (out_dir.empty()) {
    // Best effort so that config errors still land next to the intended run.
    out_dir = RunConfig{}.output_dir;
    std::ifstream in(config_path);
    const json raw = json::parse(in, nullptr, false);
    if (raw.is_object() && raw.contains("output") && raw["output"].is_object() && raw["output"].contains("dir") &&
        raw["output"]["dir"].is_string()) {
      out_dir = raw["output"]["dir"].get<std::string>();
    }
  }
  auto fail = [&](int code, const std::string& kind, const std::string& msg) {
    const json e{{"status", kind}, {"exit_code", code}, {"message", msg}};
    std::cerr << e.dump() << "\n";
    if (!out_dir.empty()) {
      std::error_code ec;
      fs::create_directories(out_dir, ec);
      std::ofstream f(fs::path(out_dir) / "error.json");
      if (f) f << e.dump(2) << "\n";
    }
    return code;
  };
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
    if (ov.output_dir) cfg.output_dir = *ov.output_dir;
    if (ov.workers) {
      if (*ov.workers < 0) throw ConfigError("workers must be nonnegative");
      cfg.workers = *ov.workers;
    }
    if (ov.seed) cfg.seed = *ov.seed;
    out_dir = cfg.output_dir;
  } catch (const ConfigError& e) {
    return fail(2, "config_error", e.what());
  } catch (const std::exception& e) {
    return fail(2, "config_error", e.what());
  }
  try {
    run(cfg);
  } catch (const ConfigError& e) {
    return fail(2, "config_error", e.what());
  } catch (const std::exception& e) {
    return fail(3, "numerical_failure", e.what());
  }
  return 0;
}

namespace {

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read " + p.string());
  json j;
  in >> j;
  return j;
}

ValueSurface read_surfaces(const fs::path& p) {
  const json j = read_json(p);
  ValueSurface vs;
  vs.t = j.at("t").get<int>();
  for (const auto& s : j.at("states")) vs.states.push_back(surface_from_json(s));
  return vs;
}

// Max and mean absolute difference of the numeric control columns of two
// policy CSVs over identical node sets; nullopt when the shapes differ.
std::optional<std::pair<double, double>> policy_difference(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a), fb(b);
  std::string la, lb;
  std::getline(fa, la);
  std::getline(fb, lb);
  if (la != lb) return std::nullopt;
  std::vector<std::string> head;
  {
    std::stringstream ss(la);
    std::string c;
    while (std::getline(ss, c, ',')) head.push_back(c);
  }
  double mx = 0.0, sum = 0.0;
  long long cnt = 0;
  while (true) {
    const bool ga = static_cast<bool>(std::getline(fa, la));
    const bool gb = static_cast<bool>(std::getline(fb, lb));
    if (ga != gb) return std::nullopt;
    if (!ga) break;
    std::stringstream sa(la), sb(lb);
    std::string ca, cb;
    for (const auto& h : head) {
      std::getline(sa, ca, ',');
      std::getline(sb, cb, ',');
      const bool control = h.rfind("buy", 0) == 0 || h.rfind("sell", 0) == 0 || h == "c";
      const bool coord = h.rfind("x", 0) == 0 || h == "state" || h == "t";
      if (coord && ca != cb) return std::nullopt;
      if (!control) continue;
      const double d = std::abs(std::stod(ca) - std::stod(cb));
      mx = std::max(mx, d);
      sum += d;
      ++cnt;
    }
  }
  return std::make_pair(cnt ? sum / cnt : 0.0, mx);
}

}  // namespace

json compare_runs(const fs::path& a, const fs::path& b) {
  const json ca = read_json(a / "config.json"), cb = read_json(b / "config.json");
  if (ca.at("model") != cb.at("model")) throw ConfigError("runs use different model kinds");
  json out{{"run_a", a.string()}, {"run_b", b.string()}, {"model", ca.at("model")}};

  json periods = json::array();
  double l1_max = 0.0, linf_max = 0.0;
  std::size_t matched = 0;
  const std::uint64_t seed = ca.at("output").at("seed").get<std::uint64_t>();
  if (fs::exists(a / "surfaces")) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a / "surfaces")) files.push_back(e.path().filename());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      if (!fs::exists(b / "surfaces" / f)) continue;
      const auto sa = read_surfaces(a / "surfaces" / f);
      const auto sb = read_surfaces(b / "surfaces" / f);
      if (sa.states.empty() || sa.states.front().dimension() != sb.states.front().dimension() ||
          !(sa.states.front().domain() == sb.states.front().domain())) {
        throw ConfigError("runs use different approximation domains");
      }
      if (sa.states.size() != sb.states.size()) continue;
      const auto d = surface_distance(sa, sb, 1000, seed);
      periods.push_back({{"t", sa.t}, {"l1", d.l1}, {"linf", d.linf}});
      l1_max = std::max(l1_max, d.l1);
      linf_max = std::max(linf_max, d.linf);
      ++matched;
    }
  }
  out["surfaces"] = {{"matched_periods", matched}, {"max_l1", l1_max}, {"max_linf", linf_max}, {"periods", periods},
                     {"seed", seed}};

  json pol = json::array();
  if (fs::exists(a / "policies")) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(a / "policies")) files.push_back(e.path().filename());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      if (!fs::exists(b / "policies" / f)) continue;
      const auto d = policy_difference(a / "policies" / f, b / "policies" / f);
      if (d) pol.push_back({{"file", f.string()}, {"mean_abs", d->first}, {"max_abs", d->second}});
    }
  }
  out["policies"] = pol;

  if (fs::exists(a / "ntr_t0.json") && fs::exists(b / "ntr_t0.json")) {
    const json na = read_json(a / "ntr_t0.json"), nb = read_json(b / "ntr_t0.json");
    json v = json::array();
    const auto& ra = na.at("regions");
    const auto& rb = nb.at("regions");
    for (std::size_t i = 0; i < std::min(ra.size(), rb.size()); ++i) {
      if (!ra[i].contains("polygon") || !rb[i].contains("polygon")) continue;
      NoTradeRegion x, y;
      x.polygon = ra[i].at("polygon").get<std::vector<std::vector<double>>>();
      y.polygon = rb[i].at("polygon").get<std::vector<std::vector<double>>>();
      if (x.polygon.size() < 3 || y.polygon.size() < 3) continue;
      const double cell = std::max(ra[i].at("step").get<double>(), rb[i].at("step").get<double>());
      const double ab = containment_excess(x, y), ba = containment_excess(y, x);
      std::string verdict = "overlapping";
      if (ab <= cell && ba <= cell) verdict = "equal";
      else if (ab <= cell) verdict = "contained";
      else if (ba <= cell) verdict = "contains";
      v.push_back({{"state", i}, {"a_outside_b", ab}, {"b_outside_a", ba}, {"cell", cell}, {"verdict", verdict},
                   {"hausdorff", hausdorff(x.polygon, y.polygon)}});
    }
    out["ntr_nesting"] = v;
  }
  return out;
}

}  // namespace tcdp
