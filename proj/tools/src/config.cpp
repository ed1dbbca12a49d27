#include "polaron_cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <polaron/errors.hpp>

namespace polaron::cli {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> k = {
      {"model", {"dimension", "alpha", "c0"}},
      {"epsilon", {"kind", "eps0", "mass", "shift", "table-path"}},
      {"coupling", {"kind", "width", "amplitude", "modulation-scale"}},
      {"quadrature", {"radial-nodes", "angular-degree", "rmax", "mode"}},
      {"grid", {"lambda", "points-per-axis"}},
      {"run",
       {"p-max", "p-points", "direction", "p", "q-max", "q-points", "kappa-rule", "kappa",
        "kappa-list", "lambda2-margin", "lambda2-margin-factor", "alpha-ladder", "neumann-order",
        "deltas", "boundary-rmax", "tol", "margin", "method", "seed", "validate-budget", "n-max",
        "oracle-q", "oracle-dump", "k-max", "k-points", "gamma-q", "gamma-shift"}},
  };
  return k;
}

std::string trim(std::string s) {
  auto sp = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), sp));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), sp).base(), s.end());
  return s;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& t) : t_(t) {}

  std::optional<std::string> str(const std::string& sec, const std::string& key) const {
    auto s = t_.get_child_optional(sec);
    if (!s) return std::nullopt;
    auto v = s->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  double num(const std::string& sec, const std::string& key, double def) const {
    auto s = str(sec, key);
    return s ? to_double(*s, sec, key) : def;
  }
  std::optional<double> opt_num(const std::string& sec, const std::string& key) const {
    auto s = str(sec, key);
    if (!s) return std::nullopt;
    return to_double(*s, sec, key);
  }
  long long integer(const std::string& sec, const std::string& key, long long def) const {
    auto s = str(sec, key);
    if (!s) return def;
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc() || ptr != s->data() + s->size())
      throw InputError(where(sec, key) + ": expected an integer, got '" + *s + "'");
    return v;
  }
  std::vector<double> list(const std::string& sec, const std::string& key,
                           std::vector<double> def) const {
    auto s = str(sec, key);
    if (!s) return def;
    std::vector<double> out;
    std::stringstream ss(*s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      out.push_back(to_double(item, sec, key));
    }
    return out;
  }

 private:
  static std::string where(const std::string& sec, const std::string& key) {
    return "config [" + sec + "] " + key;
  }
  static double to_double(const std::string& s, const std::string& sec, const std::string& key) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw InputError(where(sec, key) + ": expected a number, got '" + s + "'");
    return v;
  }
  const pt::ptree& t_;
};

Dispersion read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("epsilon table: cannot open " + path);
  std::vector<double> r, v;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a = 0.0, b = 0.0;
    bool parsed = static_cast<bool>(ls >> a >> b);
    if (!parsed && r.empty() && !std::isdigit(static_cast<unsigned char>(line[0])) && line[0] != '-' &&
        line[0] != '.')
      continue;  // header row
    if (!parsed)
      throw InputError("epsilon table " + path + ": bad line " + std::to_string(lineno));
    r.push_back(a);
    v.push_back(b);
  }
  return Dispersion::tabulated(std::move(r), std::move(v));
}

Vec check_vector(std::vector<double> v, int dim, const std::string& key) {
  if (!v.empty() && static_cast<int>(v.size()) != dim)
    throw InputError("config [run] " + key + ": expected " + std::to_string(dim) + " components");
  return v;
}

}  // namespace

DiscreteMeasure RunConfig::measure() const {
  return grid_measure(grid_lambda, grid_points, model.dim);
}

BranchOptions RunConfig::branch_options() const {
  BranchOptions o;
  o.tol = run.tol;
  o.margin = run.margin;
  o.lambda2_margin = run.lambda2_margin;
  o.lambda2_margin_factor = run.lambda2_margin_factor;
  o.neumann_order = run.neumann_order;
  o.method = run.method;
  return o;
}

Vec RunConfig::direction() const {
  return run.direction.empty() ? direction_or_e1(Vec(model.dim, 0.0)) : direction_or_e1(run.direction);
}

Vec RunConfig::fixed_p() const { return run.p.empty() ? Vec(model.dim, 0.0) : run.p; }

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  RunConfig cfg;
  for (const auto& [sec, body] : tree) {
    auto it = known_keys().find(sec);
    if (it == known_keys().end()) throw InputError("config: unknown section [" + sec + "]");
    for (const auto& [key, val] : body) {
      if (!it->second.count(key)) throw InputError("config: unknown key [" + sec + "] " + key);
      cfg.raw[sec][key] = trim(val.data());
    }
  }
  Reader r(tree);

  ModelParams& m = cfg.model;
  m.dim = static_cast<int>(r.integer("model", "dimension", 3));
  m.alpha = r.num("model", "alpha", 0.0);
  m.c0 = r.num("model", "c0", 1.0);

  const std::string ek = r.str("epsilon", "kind").value_or("constant");
  if (ek == "constant") {
    m.eps = Dispersion::constant(r.num("epsilon", "eps0", 1.0));
  } else if (ek == "relativistic") {
    m.eps = Dispersion::relativistic(r.num("epsilon", "mass", 1.0), r.num("epsilon", "shift", 0.5));
  } else if (ek == "tabulated") {
    auto tp = r.str("epsilon", "table-path");
    if (!tp) throw InputError("config [epsilon] table-path is required for kind = tabulated");
    std::filesystem::path p(*tp);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    m.eps = read_table(p.string());
  } else {
    throw InputError("config [epsilon] kind: expected constant, relativistic or tabulated, got '" +
                     ek + "'");
  }

  const std::string ck = r.str("coupling", "kind").value_or("gaussian");
  const double amp = r.num("coupling", "amplitude", 1.0);
  const double width = r.num("coupling", "width", 1.0);
  if (ck == "gaussian") {
    m.coupling = Coupling::gaussian(amp, width);
  } else if (ck == "modulated") {
    m.coupling = Coupling::gaussian_modulated(amp, width, r.num("coupling", "modulation-scale", 1.0));
  } else {
    throw InputError("config [coupling] kind: expected gaussian or modulated, got '" + ck + "'");
  }
  m.check();

  cfg.quad.radial_nodes = static_cast<int>(r.integer("quadrature", "radial-nodes", 64));
  cfg.quad.angular_degree = static_cast<int>(r.integer("quadrature", "angular-degree", 17));
  cfg.quad.rmax = r.num("quadrature", "rmax", 0.0);
  if (cfg.quad.radial_nodes < 8) throw InputError("config [quadrature] radial-nodes must be >= 8");
  if (cfg.quad.angular_degree < 1) throw InputError("config [quadrature] angular-degree must be >= 1");
  const std::string mode = r.str("quadrature", "mode").value_or("continuum");
  if (mode != "continuum" && mode != "discrete")
    throw InputError("config [quadrature] mode: expected continuum or discrete, got '" + mode + "'");
  cfg.grid_lambda = r.num("grid", "lambda", 3.0);
  cfg.grid_points = static_cast<int>(r.integer("grid", "points-per-axis", 5));
  cfg.discrete = mode == "discrete";
  if (cfg.discrete) cfg.quad = QuadratureSpec::on_measure(cfg.measure());

  RunSection& rs = cfg.run;
  rs.p_max = r.num("run", "p-max", rs.p_max);
  rs.p_points = static_cast<int>(r.integer("run", "p-points", rs.p_points));
  rs.direction = check_vector(r.list("run", "direction", {}), m.dim, "direction");
  if (!rs.direction.empty() && norm(rs.direction) == 0.0)
    throw InputError("config [run] direction must be nonzero");
  rs.p = check_vector(r.list("run", "p", {}), m.dim, "p");
  rs.q_max = r.num("run", "q-max", rs.q_max);
  rs.q_points = static_cast<int>(r.integer("run", "q-points", rs.q_points));
  const std::string kr = r.str("run", "kappa-rule").value_or("fraction");
  const double kv = r.num("run", "kappa", 0.9);
  if (kr == "fraction")
    rs.kappa_rule = KappaRule::fraction(kv);
  else if (kr == "absolute")
    rs.kappa_rule = KappaRule::absolute(kv);
  else
    throw InputError("config [run] kappa-rule: expected fraction or absolute, got '" + kr + "'");
  rs.kappa_list = r.list("run", "kappa-list", {});
  rs.lambda2_margin = r.opt_num("run", "lambda2-margin");
  rs.lambda2_margin_factor = r.num("run", "lambda2-margin-factor", rs.lambda2_margin_factor);
  rs.alpha_ladder = r.list("run", "alpha-ladder", rs.alpha_ladder);
  rs.neumann_order = static_cast<int>(r.integer("run", "neumann-order", rs.neumann_order));
  rs.deltas = r.list("run", "deltas", rs.deltas);
  rs.boundary_rmax = r.num("run", "boundary-rmax", rs.boundary_rmax);
  rs.tol = r.num("run", "tol", rs.tol);
  rs.margin = r.num("run", "margin", rs.margin);
  if (auto s = r.str("run", "method")) {
    try {
      rs.method = root_method_from_string(*s);
    } catch (const std::exception& e) {
      throw InputError(std::string("config [run] method: ") + e.what());
    }
  }
  rs.seed = static_cast<std::uint64_t>(r.integer("run", "seed", 0));
  rs.validate_budget = static_cast<int>(r.integer("run", "validate-budget", rs.validate_budget));
  rs.n_max = static_cast<int>(r.integer("run", "n-max", rs.n_max));
  for (double x : r.list("run", "oracle-q", {})) {
    if (x < 0 || x != static_cast<int>(x))
      throw InputError("config [run] oracle-q: lattice rows must be non-negative integers");
    rs.oracle_q.push_back(static_cast<int>(x));
  }
  rs.oracle_dump = r.str("run", "oracle-dump").value_or("");
  rs.k_max = r.num("run", "k-max", rs.k_max);
  rs.k_points = static_cast<int>(r.integer("run", "k-points", rs.k_points));
  rs.gamma_q = check_vector(r.list("run", "gamma-q", {}), m.dim, "gamma-q");
  rs.gamma_shift = check_vector(r.list("run", "gamma-shift", {}), m.dim, "gamma-shift");

  if (rs.p_points < 1 || rs.q_points < 1 || rs.k_points < 1)
    throw InputError("config [run] point counts must be >= 1");
  if (!(rs.tol > 0.0)) throw InputError("config [run] tol must be positive");
  if (!(rs.margin > 0.0)) throw InputError("config [run] margin must be positive");
  if (rs.neumann_order < 0) throw InputError("config [run] neumann-order must be >= 0");
  if (rs.n_max < 1 || rs.n_max > 2) throw InputError("config [run] n-max must be 1 or 2");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  RunConfig cfg = parse_config(ss.str(), base.empty() ? "." : base.string());
  cfg.path = path;
  return cfg;
}

}  // namespace polaron::cli
