#include "polaron_cli/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <polaron/errors.hpp>
#include <polaron/oracle.hpp>
#include <polaron/selfenergy.hpp>

#include "polaron_cli/pool.hpp"

namespace polaron::cli {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return x;
}

// Unit vector orthogonal to u, or empty in one dimension.
Vec perpendicular(const Vec& u) {
  if (u.size() < 2) return {};
  Vec e(u.size(), 0.0);
  e[std::abs(u[0]) < 0.9 ? 0 : 1] = 1.0;
  double c = dot(e, u);
  for (std::size_t i = 0; i < u.size(); ++i) e[i] -= c * u[i];
  return direction_or_e1(e);
}

std::vector<std::string> vec_columns(const std::string& stem, int d) {
  std::vector<std::string> c;
  for (int i = 1; i <= d; ++i) c.push_back(stem + "_" + std::to_string(i));
  return c;
}

void append(std::vector<Cell>& row, VecView v) {
  for (double x : v) row.emplace_back(x);
}

std::vector<std::string> cols(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

BranchSolver make_solver(const RunConfig& cfg) {
  return BranchSolver(cfg.model, cfg.quad, cfg.branch_options());
}

// Checks the cap rule at every p before any branch solve.
std::vector<Cap> resolve_caps(const BranchSolver& bs, const std::vector<Vec>& ps,
                              const KappaRule& rule) {
  std::vector<Cap> caps;
  caps.reserve(ps.size());
  for (const Vec& p : ps) caps.push_back(bs.cap(p, rule));
  return caps;
}

std::vector<Vec> p_ray(const RunConfig& cfg) {
  std::vector<Vec> ps;
  const Vec u = cfg.direction();
  for (double r : linspace(0.0, cfg.run.p_max, cfg.run.p_points)) ps.push_back(scaled(u, r));
  return ps;
}

std::string status_of(BranchStatus s) { return to_string(s); }

// ---------------------------------------------------------------------------

std::vector<Table> cmd_validate(const RunConfig& cfg, int) {
  ValidationReport rep = validate_model(cfg.model, cfg.run.validate_budget, cfg.run.seed);
  Table t{"validate", {"check", "passed", "informational", "detail", "alpha", "tol", "status"}, {}};
  for (const auto& c : rep.checks)
    t.add({c.name, c.passed, c.informational, c.detail, cfg.model.alpha, cfg.run.tol,
           std::string(c.passed ? "pass" : (c.informational ? "note" : "fail"))});
  // the cap rule over the requested momenta
  BranchSolver bs = make_solver(cfg);
  std::vector<Vec> ps = p_ray(cfg);
  ps.push_back(cfg.fixed_p());
  bool ok = true;
  std::ostringstream detail;
  detail.precision(17);
  for (const Vec& p : ps) {
    try {
      bs.cap(p, cfg.run.kappa_rule);
    } catch (const DomainError& e) {
      if (ok) detail << e.what();
      ok = false;
    }
  }
  if (ok) detail << "kappa rule " << cfg.run.kappa_rule.describe() << " feasible on " << ps.size()
                 << " momenta";
  t.add({std::string("kappa-cap"), ok, false, detail.str(), cfg.model.alpha, cfg.run.tol,
         std::string(ok ? "pass" : "fail")});
  return {t};
}

std::vector<Table> cmd_thresholds(const RunConfig& cfg, int workers) {
  BranchSolver bs = make_solver(cfg);
  std::vector<Vec> ps = p_ray(cfg);
  Table t{"thresholds",
          {"p_norm", "lambda0_1", "lambda0_2", "lambda0_3", "gap_21", "gap_32", "c0", "alpha",
           "kappa", "lambda2_proxy", "lambda2_margin", "tol", "status"},
          {}};
  auto rows = parallel_map<std::vector<Cell>>(ps.size(), workers, [&](std::size_t i) {
    const Vec& p = ps[i];
    double l1 = threshold(cfg.model, 1, p, cfg.run.tol);
    double l2 = threshold(cfg.model, 2, p, cfg.run.tol);
    double l3 = threshold(cfg.model, 3, p, cfg.run.tol);
    double kappa = nan;
    std::string status = "converged";
    Lambda2Proxy lp = bs.lambda2(p);
    try {
      kappa = bs.cap(p, cfg.run.kappa_rule).kappa;
    } catch (const DomainError&) {
      status = "kappa-above-lambda2";
    }
    return std::vector<Cell>{norm(p), l1,       l2,       l3,        l2 - l1,      l3 - l2, cfg.model.c0,
                             cfg.model.alpha, kappa, lp.value, lp.margin, cfg.run.tol, status};
  });
  for (auto& r : rows) t.add(std::move(r));
  return {t};
}

std::vector<Table> cmd_ground_scan(const RunConfig& cfg, int workers) {
  BranchSolver bs = make_solver(cfg);
  std::vector<Vec> ps = p_ray(cfg);
  std::vector<Cap> caps = resolve_caps(bs, ps, cfg.run.kappa_rule);
  Table t{"ground-scan",
          {"p_norm", "alpha", "kappa", "lambda2_proxy", "lambda2_margin", "tol", "neumann_order",
           "lambda1", "xi0", "free_energy", "gap", "residual", "eigen_residual", "iterations",
           "status"},
          {}};
  auto rows = parallel_map<std::vector<Cell>>(ps.size(), workers, [&](std::size_t i) {
    const Vec& p = ps[i];
    GroundState gs = bs.ground_state(p, caps[i].kappa);
    return std::vector<Cell>{norm(p),
                             cfg.model.alpha,
                             caps[i].kappa,
                             caps[i].lambda2.value,
                             caps[i].lambda2.margin,
                             cfg.run.tol,
                             std::int64_t(cfg.run.neumann_order),
                             gs.lambda1,
                             gs.point.xi,
                             0.5 * norm2(p),
                             gs.lambda1 - gs.point.xi,
                             gs.point.status == BranchStatus::none ? nan : gs.point.residual,
                             gs.eigen_residual,
                             std::int64_t(gs.point.iterations),
                             status_of(gs.point.status)};
  });
  for (auto& r : rows) t.add(std::move(r));

  BoundaryResult br = bs.g0_boundary(cfg.direction(), cfg.run.kappa_rule, cfg.run.deltas,
                                     cfg.run.boundary_rmax);
  Table b{"ground-scan-boundary",
          {"radius", "conclusive", "evaluations", "delta", "p_norm", "alpha", "kappa",
           "lambda2_proxy", "tol", "lambda1", "xi0", "gap", "closed_form_free_gap", "status",
           "note"},
          {}};
  auto free_gap = [](double dl) { return std::sqrt(2.0) * dl - 0.5 * dl * dl; };
  if (br.ladder.empty()) {
    b.add({br.radius, br.conclusive, std::int64_t(br.evaluations), nan, nan, cfg.model.alpha, nan,
           nan, cfg.run.tol, nan, nan, nan, nan, std::string(br.conclusive ? "converged" : "none"),
           br.note});
  }
  for (const GapSample& s : br.ladder) {
    Vec p = scaled(cfg.direction(), s.radius);
    Cap c = bs.cap(p, cfg.run.kappa_rule);
    b.add({br.radius, br.conclusive, std::int64_t(br.evaluations), s.delta, s.radius,
           cfg.model.alpha, c.kappa, c.lambda2.value, cfg.run.tol, s.lambda1, s.xi0, s.gap,
           free_gap(s.delta), status_of(s.status), br.note});
  }
  return {t, b};
}

std::vector<Table> cmd_dispersion_scan(const RunConfig& cfg, int workers) {
  BranchSolver bs = make_solver(cfg);
  const int d = cfg.model.dim;
  const Vec p = cfg.fixed_p();
  const Cap cap = bs.cap(p, cfg.run.kappa_rule);
  const Vec u = cfg.direction();
  std::vector<double> ts = linspace(-cfg.run.q_max, cfg.run.q_max, cfg.run.q_points);
  Table t{"dispersion-scan",
          cols({{"t"},
                vec_columns("q", d),
                {"p_norm", "alpha", "kappa", "lambda2_proxy", "lambda2_margin", "tol", "member",
                 "xi", "e1", "gamma", "residual", "iterations", "status"}}),
          {}};
  auto rows = parallel_map<std::vector<Cell>>(ts.size(), workers, [&](std::size_t i) {
    Vec q = scaled(u, ts[i]);
    BranchPoint bp = bs.dispersion_point(p, q, cap.kappa);
    std::vector<Cell> row{ts[i]};
    append(row, q);
    const bool member = bp.status != BranchStatus::none;
    row.insert(row.end(),
               {norm(p), cfg.model.alpha, cap.kappa, cap.lambda2.value, cap.lambda2.margin,
                cfg.run.tol, member, bp.xi, bs.selfenergy().e1(p, q),
                member ? gamma_of(cfg.model, bp) : nan, member ? bp.residual : nan,
                std::int64_t(bp.iterations), status_of(bp.status)});
    return row;
  });
  for (auto& r : rows) t.add(std::move(r));

  Table b{"dispersion-scan-boundary",
          cols({{"ray"},
                vec_columns("direction", d),
                vec_columns("center", d),
                {"radius", "lambda1", "p_norm", "alpha", "kappa", "lambda2_proxy", "tol",
                 "status"}}),
          {}};
  std::string status = "converged";
  double l1 = nan;
  try {
    l1 = bs.lambda1(p, cap.kappa).value;
  } catch (const DomainError&) {
    status = "none";
  }
  DomainMap dm = bs.one_boson_domain(p, cap.kappa, {});
  for (std::size_t k = 0; k < dm.directions.size(); ++k) {
    std::vector<Cell> row{std::int64_t(k)};
    append(row, dm.directions[k]);
    append(row, dm.center);
    row.insert(row.end(), {status == "none" ? nan : dm.boundary[k], l1, norm(p), cfg.model.alpha,
                           cap.kappa, cap.lambda2.value, cfg.run.tol, status});
    b.add(std::move(row));
  }
  return {t, b};
}

std::vector<Table> cmd_domain_map(const RunConfig& cfg, int workers) {
  BranchSolver bs = make_solver(cfg);
  const Vec u = cfg.direction();
  const Vec e = perpendicular(u);
  const Vec p = cfg.fixed_p();
  const Cap cap = bs.cap(p, cfg.run.kappa_rule);

  struct Task {
    bool g0;
    double x, y;
  };
  std::vector<Task> tasks;
  auto grid = [&](bool g0, double half, int n) {
    std::vector<double> xs = linspace(-half, half, n);
    std::vector<double> ys = e.empty() ? std::vector<double>{0.0} : xs;
    for (double y : ys)
      for (double x : xs) tasks.push_back({g0, x, y});
  };
  grid(false, cfg.run.q_max, cfg.run.q_points);
  grid(true, cfg.run.p_max, cfg.run.p_points);
  auto point = [&](const Task& t) {
    Vec v = scaled(u, t.x);
    if (!e.empty())
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += t.y * e[i];
    return v;
  };
  // G^(0) caps are resolved up front so an infeasible rule fails before solving
  std::vector<Vec> g0_points;
  for (const Task& t : tasks)
    if (t.g0) g0_points.push_back(point(t));
  resolve_caps(bs, g0_points, cfg.run.kappa_rule);

  Table t{"domain-map",
          {"set", "x", "y", "p_norm", "alpha", "kappa", "lambda2_proxy", "tol", "criterion",
           "member", "status"},
          {}};
  auto rows = parallel_map<std::vector<Cell>>(tasks.size(), workers, [&](std::size_t i) {
    const Task& tk = tasks[i];
    Vec v = point(tk);
    if (!tk.g0) {
      double crit = bs.selfenergy().a_eff(p, cap.kappa, v) - cap.kappa;
      bool member = crit < 0.0;
      return std::vector<Cell>{std::string("G1"), tk.x, tk.y, norm(p), cfg.model.alpha, cap.kappa,
                               cap.lambda2.value, cfg.run.tol, crit, member,
                               std::string(member ? "converged" : "none")};
    }
    Cap c = bs.cap(v, cfg.run.kappa_rule);
    double crit = nan;
    std::string status;
    try {
      crit = bs.ground_criterion(v, c.kappa);
      status = crit < 0.0 ? "converged" : "none";
    } catch (const DomainError&) {
      status = "none";  // empty one-boson domain
    }
    return std::vector<Cell>{std::string("G0"), tk.x,         tk.y,  norm(v),
                             cfg.model.alpha,   c.kappa,      c.lambda2.value, cfg.run.tol,
                             crit,              crit < 0.0,   status};
  });
  for (auto& r : rows) t.add(std::move(r));
  return {t};
}

std::vector<Table> cmd_gamma(const RunConfig& cfg, int workers) {
  BranchSolver bs = make_solver(cfg);
  const int d = cfg.model.dim;
  const Vec u = cfg.direction();
  const Vec q = cfg.run.gamma_q.empty() ? Vec(d, 0.0) : cfg.run.gamma_q;
  Vec shift = cfg.run.gamma_shift;
  if (shift.empty()) {
    Vec e = perpendicular(u);
    shift = scaled(e.empty() ? u : e, 0.3);
  }
  std::vector<double> ks = linspace(0.0, cfg.run.k_max, cfg.run.k_points);
  std::vector<Vec> ps;
  for (double k : ks) {
    Vec kv = scaled(u, k);
    ps.push_back(add(kv, q));
    ps.push_back(add(add(kv, q), shift));
    ps.push_back(kv);
  }
  resolve_caps(bs, ps, cfg.run.kappa_rule);
  Table t{"gamma",
          cols({{"k_norm"},
                vec_columns("k", d),
                {"alpha", "kappa", "kappa_alt", "lambda2_proxy", "tol", "gamma", "gamma_alt",
                 "factorization_residual", "xi0_k", "ground_status", "status"}}),
          {}};
  auto rows = parallel_map<std::vector<Cell>>(ks.size(), workers, [&](std::size_t i) {
    Vec kv = scaled(u, ks[i]);
    Vec p = add(kv, q);
    GammaResult g = bs.gamma_factor(p, q, shift, cfg.run.kappa_rule);
    Cap c1 = bs.cap(p, cfg.run.kappa_rule);
    Cap c2 = bs.cap(g.p_alt, cfg.run.kappa_rule);
    Cap ck = bs.cap(kv, cfg.run.kappa_rule);
    double xi0 = nan;
    std::string gst = "none";
    try {
      GroundState gs = bs.ground_state(kv, ck.kappa);
      xi0 = gs.point.xi;
      gst = status_of(gs.point.status);
    } catch (const DomainError&) {
    }
    std::vector<Cell> row{ks[i]};
    append(row, kv);
    row.insert(row.end(), {cfg.model.alpha, c1.kappa, c2.kappa, c1.lambda2.value, cfg.run.tol,
                           g.gamma, g.gamma_alt, g.residual, xi0, gst, status_of(g.status)});
    return row;
  });
  for (auto& r : rows) t.add(std::move(r));
  return {t};
}

std::vector<Table> cmd_alpha0(const RunConfig& cfg, int) {
  BranchSolver bs = make_solver(cfg);
  const Vec p = cfg.fixed_p();
  const Lambda2Proxy lp = bs.lambda2(p);
  const double l1 = threshold(cfg.model, 1, p, cfg.run.tol);
  std::vector<double> kappas;
  std::vector<double> values = cfg.run.kappa_list;
  if (values.empty()) values.push_back(cfg.run.kappa_rule.value);
  for (double v : values) {
    KappaRule r = cfg.run.kappa_rule;
    r.value = v;
    kappas.push_back(r.kind == KappaRule::Kind::absolute ? v : l1 + v * (lp.value - l1));
  }
  Table t{"alpha0",
          {"kappa", "lambda1_free", "lambda2_proxy", "lambda2_margin", "h_norm", "c0", "alpha",
           "bound_q", "bound_gamma", "alpha0_q", "alpha0_gamma", "alpha_exceeds_q",
           "alpha_exceeds_gamma", "tol", "status"},
          {}};
  for (double k : kappas) {
    ContractionReport r = contraction_bounds(cfg.model, p, k, lp.margin);
    const bool ok = k <= lp.value - cfg.run.margin;
    t.add({k, l1, r.lambda2, lp.margin, r.h_norm, cfg.model.c0, cfg.model.alpha, r.bound_q,
           r.bound_gamma, r.alpha0_q, r.alpha0_gamma, r.alpha_exceeds_q, r.alpha_exceeds_gamma,
           cfg.run.tol, std::string(ok ? "converged" : "kappa-above-lambda2")});
  }
  return {t};
}

std::vector<Table> cmd_oracle_check(const RunConfig& cfg, int) {
  const int d = cfg.model.dim;
  const DiscreteMeasure m = cfg.measure();
  const Vec p = cfg.fixed_p();
  const BranchOptions opts = cfg.branch_options();
  GroundComparison gc =
      compare_ground(cfg.model, p, m, cfg.run.kappa_rule, cfg.run.alpha_ladder, opts);
  // the fiber form needs no momentum conservation on the lattice, so an
  // off-lattice p is legal; it is only reported
  bool on_lattice = true;
  for (int a = 0; a < d; ++a) {
    bool hit = false;
    for (std::size_t i = 0; i < m.size() && !hit; ++i)
      hit = std::abs(m.point(i)[a] - p[a]) <= 1e-12 * (1.0 + std::abs(p[a]));
    on_lattice = on_lattice && hit;
  }
  Table g{"oracle-ground",
          {"alpha", "kappa", "lambda2_proxy", "tol", "n_max", "sector_dim", "asymmetry", "oracle",
           "solver", "difference", "ratio_alpha4", "reduction_factor", "p_on_lattice", "status"},
          {}};
  for (std::size_t k = 0; k < gc.rows.size(); ++k) {
    const auto& r = gc.rows[k];
    double factor = k ? gc.rows[k - 1].difference / r.difference : nan;
    double asym = build(cfg.model.with_alpha(r.alpha), p, m, 2).max_asymmetry();
    g.add({r.alpha, r.kappa, r.lambda2, cfg.run.tol, std::int64_t(2), std::int64_t(r.sector_dim),
           asym, r.oracle, r.solver, r.difference, r.ratio, factor, on_lattice, status_of(r.status)});
  }

  std::vector<int> qs = cfg.run.oracle_q;
  if (qs.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < m.size(); ++i)
      if (norm2(m.point(i)) < norm2(m.point(best))) best = i;
    qs.push_back(static_cast<int>(best));
  }
  BranchSolver bs(cfg.model, QuadratureSpec::on_measure(m), opts);
  Cap cap = bs.cap(p, cfg.run.kappa_rule);
  Table dt{"oracle-dispersion",
           cols({{"q_index"},
                 vec_columns("q", d),
                 {"alpha", "kappa", "lambda2_proxy", "tol", "n_max", "xi", "nearest", "gap",
                  "window_lo", "window_hi", "occupancy", "matched", "status"}}),
           {}};
  for (int qi : qs) {
    if (qi >= static_cast<int>(m.size()))
      throw InputError("config [run] oracle-q: row " + std::to_string(qi) + " is outside the lattice");
    DispersionComparison dc = compare_dispersion(cfg.model, p, m, cap.kappa, qi, cfg.run.n_max, opts);
    std::vector<Cell> row{std::int64_t(qi)};
    append(row, m.point(qi));
    row.insert(row.end(), {cfg.model.alpha, cap.kappa, cap.lambda2.value, cfg.run.tol,
                           std::int64_t(cfg.run.n_max), dc.xi, dc.nearest, dc.gap, dc.window_lo,
                           dc.window_hi, std::int64_t(dc.occupancy), dc.matched,
                           status_of(dc.status)});
    dt.add(std::move(row));
  }
  if (!cfg.run.oracle_dump.empty())
    write_matrix_dump(build(cfg.model, p, m, cfg.run.n_max), cfg.run.oracle_dump);
  return {g, dt};
}

using Handler = std::vector<Table> (*)(const RunConfig&, int);

Handler handler_for(const std::string& name) {
  if (name == "validate") return cmd_validate;
  if (name == "thresholds") return cmd_thresholds;
  if (name == "ground-scan") return cmd_ground_scan;
  if (name == "dispersion-scan") return cmd_dispersion_scan;
  if (name == "domain-map") return cmd_domain_map;
  if (name == "gamma") return cmd_gamma;
  if (name == "alpha0") return cmd_alpha0;
  if (name == "oracle-check") return cmd_oracle_check;
  throw InputError("unknown command '" + name + "'");
}

nlohmann::ordered_json error_record(const std::string& kind, const std::string& msg,
                                    const std::string& command, int code) {
  nlohmann::ordered_json j;
  j["status"] = "error";
  j["error"] = {{"kind", kind}, {"message", msg}, {"command", command}, {"exit_code", code}};
  return j;
}

}  // namespace

const std::vector<CommandInfo>& commands() {
  static const std::vector<CommandInfo> c = {
      {"validate", "model condition report",
       "validate.csv: check,passed,informational,detail,alpha,tol,status"},
      {"thresholds", "free thresholds lambda_n^0(p), n = 1..3, over a |p| grid",
       "thresholds.csv: p_norm,lambda0_1,lambda0_2,lambda0_3,gap_21,gap_32,c0,alpha,kappa,"
       "lambda2_proxy,lambda2_margin,tol,status"},
      {"ground-scan", "ground branch xi_p^(0) over a |p| grid and the G^(0) boundary radius",
       "ground-scan.csv: p_norm,alpha,kappa,lambda2_proxy,lambda2_margin,tol,neumann_order,"
       "lambda1,xi0,free_energy,gap,residual,eigen_residual,iterations,status\n"
       "ground-scan-boundary.csv: radius,conclusive,evaluations,delta,p_norm,alpha,kappa,"
       "lambda2_proxy,tol,lambda1,xi0,gap,closed_form_free_gap,status,note"},
      {"dispersion-scan", "one-boson dispersion xi_p(q) along a q ray at fixed p",
       "dispersion-scan.csv: t,q_1..q_d,p_norm,alpha,kappa,lambda2_proxy,lambda2_margin,tol,"
       "member,xi,e1,gamma,residual,iterations,status\n"
       "dispersion-scan-boundary.csv: ray,direction_1..d,center_1..d,radius,lambda1,p_norm,"
       "alpha,kappa,lambda2_proxy,tol,status"},
      {"domain-map", "membership grids for G^(0) (over p) and G_p^(1) (over q)",
       "domain-map.csv: set,x,y,p_norm,alpha,kappa,lambda2_proxy,tol,criterion,member,status"},
      {"gamma", "factorization xi_p(q) = eps(q) + gamma(p - q), with xi_k^(0) alongside",
       "gamma.csv: k_norm,k_1..k_d,alpha,kappa,kappa_alt,lambda2_proxy,tol,gamma,gamma_alt,"
       "factorization_residual,xi0_k,ground_status,status"},
      {"alpha0", "contraction bounds and alpha_0 estimates over kappa",
       "alpha0.csv: kappa,lambda1_free,lambda2_proxy,lambda2_margin,h_norm,c0,alpha,bound_q,"
       "bound_gamma,alpha0_q,alpha0_gamma,alpha_exceeds_q,alpha_exceeds_gamma,tol,status"},
      {"oracle-check", "solver against truncated-Fock diagonalization on the [grid] lattice",
       "oracle-ground.csv: alpha,kappa,lambda2_proxy,tol,n_max,sector_dim,asymmetry,oracle,"
       "solver,difference,ratio_alpha4,reduction_factor,p_on_lattice,status\n"
       "oracle-dispersion.csv: q_index,q_1..q_d,alpha,kappa,lambda2_proxy,tol,n_max,xi,nearest,"
       "gap,window_lo,window_hi,occupancy,matched,status"},
  };
  return c;
}

std::vector<Table> run_tables(const std::string& command, const RunConfig& cfg, int workers) {
  Handler h = handler_for(command);
  if (command != "validate") {
    ValidationReport rep = validate_model(cfg.model, cfg.run.validate_budget, cfg.run.seed);
    if (!rep.all_passed()) {
      std::string failed;
      for (const auto& c : rep.checks)
        if (!c.passed && !c.informational) failed += (failed.empty() ? "" : ", ") + c.name;
      throw DomainError("model validation failed: " + failed);
    }
  }
  return h(cfg, workers);
}

int run(const std::string& command, const RunOptions& opts, std::ostream& err) {
  std::string kind;
  std::string message;
  int code = 0;
  try {
    RunConfig cfg = load_config(opts.config_path);
    if (opts.tol) {
      if (!(*opts.tol > 0.0)) throw InputError("--tol must be positive");
      cfg.run.tol = *opts.tol;
    }
    std::vector<Table> tables = run_tables(command, cfg, opts.workers);
    std::filesystem::create_directories(opts.out_dir);
    nlohmann::ordered_json rec;
    rec["command"] = command;
    rec["status"] = "ok";
    rec["config"] = cfg.raw;
    rec["resolved"] = {{"dimension", cfg.model.dim},
                       {"alpha", cfg.model.alpha},
                       {"c0", cfg.model.c0},
                       {"epsilon", cfg.model.eps.describe()},
                       {"coupling", cfg.model.coupling.describe()},
                       {"mode", cfg.discrete ? "discrete" : "continuum"},
                       {"kappa_rule", cfg.run.kappa_rule.describe()},
                       {"tol", cfg.run.tol},
                       {"margin", cfg.run.margin},
                       {"method", to_string(cfg.run.method)},
                       {"neumann_order", cfg.run.neumann_order},
                       {"seed", cfg.run.seed}};
    rec["tables"] = nlohmann::ordered_json::array();
    for (const Table& t : tables) {
      write_csv(t, (std::filesystem::path(opts.out_dir) / (t.name + ".csv")).string());
      rec["tables"].push_back(to_json(t));
    }
    if (command == "validate") {
      bool ok = true;
      for (const Table& t : tables)
        for (const auto& row : t.rows)
          if (std::get<std::string>(row.back()) == "fail") ok = false;
      if (!ok) {
        rec["status"] = "failed";
        kind = "validation";
        message = "model validation failed; see validate.csv";
        code = 3;
      }
    }
    std::ofstream js((std::filesystem::path(opts.out_dir) / (command + ".json")).string(),
                     std::ios::binary);
    js << rec.dump(2) << "\n";
    if (code == 0) return 0;
  } catch (const InputError& e) {
    kind = "input", message = e.what(), code = 2;
  } catch (const DomainError& e) {
    kind = "domain", message = e.what(), code = 3;
  } catch (const NumericError& e) {
    kind = "numeric", message = e.what(), code = 4;
  } catch (const ResourceError& e) {
    kind = "resource", message = e.what(), code = 5;
  } catch (const std::exception& e) {
    kind = "internal", message = e.what(), code = 1;
  }
  nlohmann::ordered_json j = error_record(kind, message, command, code);
  err << j.dump() << "\n";
  try {
    std::filesystem::create_directories(opts.out_dir);
    std::ofstream f((std::filesystem::path(opts.out_dir) / "error.json").string(), std::ios::binary);
    f << j.dump(2) << "\n";
  } catch (...) {
  }
  return code;
}

}  // namespace polaron::cli
