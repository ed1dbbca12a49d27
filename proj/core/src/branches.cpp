#include "polaron/branches.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "polaron/errors.hpp"

namespace polaron {

std::string KappaRule::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (kind == Kind::absolute)
    os << "absolute:" << value;
  else
    os << "fraction:" << value;
  return os.str();
}

std::string to_string(BranchStatus s) {
  switch (s) {
    case BranchStatus::converged:
      return "converged";
    case BranchStatus::none:
      return "none";
    case BranchStatus::capped:
      return "capped";
  }
  return "none";
}

BranchSolver::BranchSolver(const ModelParams& params, const QuadratureSpec& quad, BranchOptions opts)
    : params_(params), opts_(opts) {
  params_.check();
  if (opts_.neumann_order < 0) throw InputError("BranchSolver: Neumann order must be >= 0");
  se_ = std::make_shared<const SelfEnergy>(params_, quad, opts_.margin);
}

Lambda2Proxy BranchSolver::lambda2(VecView p) const {
  double m = opts_.lambda2_margin ? *opts_.lambda2_margin
                                  : default_lambda2_margin(params_, opts_.lambda2_margin_factor);
  return lambda2_proxy(params_, p, m);
}

Cap BranchSolver::cap(VecView p, const KappaRule& rule) const {
  Cap c;
  c.lambda2 = lambda2(p);
  c.lambda1_free = threshold(params_, 1, p);
  if (rule.kind == KappaRule::Kind::absolute)
    c.kappa = rule.value;
  else
    c.kappa = c.lambda1_free + rule.value * (c.lambda2.value - c.lambda1_free);
  check_cap(p, c.kappa);
  return c;
}

void BranchSolver::check_cap(VecView p, double kappa) const {
  Lambda2Proxy l2 = lambda2(p);
  if (!(kappa <= l2.value - opts_.margin) || !std::isfinite(kappa)) {
    std::ostringstream os;
    os.precision(17);
    os << "cap kappa = " << kappa << " exceeds lambda2_proxy - margin = " << l2.value << " - "
       << opts_.margin << " at |p| = " << norm(p) << " (lambda2_margin = " << l2.margin << ")";
    throw DomainError(os.str());
  }
}

BranchPoint BranchSolver::dispersion_point(VecView p, VecView q, double kappa) const {
  check_cap(p, kappa);
  BranchPoint bp;
  bp.q.assign(q.begin(), q.end());
  const SelfEnergy& se = *se_;
  auto g = [&](double xi) { return se.a_eff(p, xi, q) - xi; };
  const double gk = g(kappa);
  if (!(gk < 0.0)) {
    bp.status = BranchStatus::none;
    bp.residual = gk;
    return bp;
  }
  // a_eff decreases in xi, so g(a_eff(kappa)) >= 0
  const double x0 = std::min(gk + kappa, kappa);
  Expansion lo = expand_down(g, x0, std::max(1.0, std::abs(gk)), [](double v) { return v >= 0.0; },
                             200, "dispersion_point");
  RootResult r = bracketed_root(g, lo.x, kappa, lo.fx, gk, opts_.method, opts_.tol, 300,
                                "dispersion_point");
  bp.xi = r.x;
  bp.residual = std::abs(r.fx);
  bp.iterations = r.iterations + lo.steps;
  bp.status = bp.residual <= opts_.tol * (1.0 + std::abs(bp.xi)) ? BranchStatus::converged
                                                                  : BranchStatus::capped;
  return bp;
}

double BranchSolver::axis_minimizer(VecView p, double kappa, double* value) const {
  const Vec u = direction_or_e1(p);
  const SelfEnergy& se = *se_;
  auto h = [&](double t) { return se.a_eff(p, kappa, scaled(u, t)); };
  const double L = norm(p) + 3.0;
  const int n = 60;
  int best = 0;
  double bv = h(-L);
  for (int i = 1; i <= n; ++i) {
    double v = h(-L + 2.0 * L * i / n);
    if (v < bv) {
      bv = v;
      best = i;
    }
  }
  double lo = -L + 2.0 * L * std::max(best - 1, 0) / n;
  double hi = -L + 2.0 * L * std::min(best + 1, n) / n;
  std::uintmax_t it = 200;
  auto [t, v] = boost::math::tools::brent_find_minima(h, lo, hi, 26, it);
  if (bv < v) {
    v = bv;
    t = -L + 2.0 * L * best / n;
  }
  // Brent only locates t to about sqrt(eps); prefer the origin on ties
  if (double v0 = h(0.0); std::abs(t) < 1e-6 && v0 <= v) {
    t = 0.0;
    v = v0;
  }
  if (value) *value = v;
  return t;
}

Lambda1Result BranchSolver::lambda1(VecView p, double kappa) const {
  check_cap(p, kappa);
  Lambda1Result res;
  const SelfEnergy& se = *se_;
  if (quad().discrete()) {
    const DiscreteMeasure& m = *quad().measure;
    bool any = false;
    for (std::size_t i = 0; i < m.size(); ++i) {
      BranchPoint bp = dispersion_point(p, m.point(i), kappa);
      ++res.evaluations;
      if (bp.status == BranchStatus::none) continue;
      if (!any || bp.xi < res.value) {
        res.value = bp.xi;
        res.argmin = bp.q;
      }
      any = true;
    }
    if (!any) {
      std::ostringstream os;
      os << "lambda1: no lattice point lies in the one-boson domain at kappa = " << kappa
         << "; raise kappa";
      throw DomainError(os.str());
    }
    return res;
  }

  const Vec u = direction_or_e1(p);
  double hv = 0.0;
  const double tc = axis_minimizer(p, kappa, &hv);
  if (!(hv < kappa)) {
    std::ostringstream os;
    os.precision(17);
    os << "lambda1: one-boson domain is empty at kappa = " << kappa << " (min a_eff = " << hv
       << "); raise kappa";
    throw DomainError(os.str());
  }
  auto h = [&](double t) { return se.a_eff(p, kappa, scaled(u, t)) - kappa; };
  auto chord_end = [&](double sign) {
    double s = 0.5;
    double fs = h(tc + sign * s);
    double prev = 0.0, fprev = hv - kappa;
    for (int k = 0; fs < 0.0; ++k) {
      if (k > 60) throw NumericError("lambda1: one-boson domain is unbounded along p");
      prev = s;
      fprev = fs;
      s *= 2.0;
      fs = h(tc + sign * s);
    }
    RootResult r = bracketed_root([&](double x) { return h(tc + sign * x); }, prev, s, fprev, fs,
                                  RootMethod::toms748, 0.0, 300, "lambda1 boundary");
    return tc + sign * r.x;
  };
  const double t_lo = chord_end(-1.0);
  const double t_hi = chord_end(1.0);
  auto xi_at = [&](double t) {
    Vec q = scaled(u, t);
    BranchPoint bp = dispersion_point(p, q, kappa);
    ++res.evaluations;
    if (bp.status == BranchStatus::none) return se.a_eff(p, kappa, q);
    return bp.xi;
  };
  std::uintmax_t it = 200;
  auto [t, v] = boost::math::tools::brent_find_minima(xi_at, t_lo, t_hi, 26, it);
  double vc = xi_at(tc);
  if (vc < v) {
    v = vc;
    t = tc;
  }
  res.value = v;
  res.argmin = scaled(u, t);
  return res;
}

FriedrichsData BranchSolver::reduced_operator(VecView p, double xi, double edge) const {
  FriedrichsData fd;
  auto se = se_;
  Vec pv(p.begin(), p.end());
  fd.dim = params_.dim;
  fd.e0 = 0.5 * norm2(p);
  fd.alpha = params_.alpha;
  fd.axis = direction_or_e1(p);
  fd.margin = opts_.margin;
  fd.edge = edge;
  fd.v = [se, pv](VecView q) { return se->channel(pv, q); };
  fd.a = [se, pv, xi](VecView q) { return se->a_eff(pv, xi, q); };
  if (opts_.neumann_order > 0) {
    fd.kernel = [se, pv, xi](VecView q, VecView qp) { return se->d2_leading(pv, xi, q, qp); };
    fd.reduced = [se, pv, xi](const NodeSet& ns) { return se->reduced_kernel(pv, xi, ns); };
  }
  const Coupling c = params_.coupling;
  fd.envelope = [c](VecView q) { return c.envelope(norm(q)); };
  return fd;
}

double BranchSolver::ground_function(VecView p, double xi, double edge) const {
  FriedrichsSolver fs(reduced_operator(p, xi, edge), quad());
  return fs.delta(xi, opts_.neumann_order);
}

double BranchSolver::ground_top(VecView p, double lambda1, double* ftop) const {
  FriedrichsSolver fs(reduced_operator(p, lambda1, lambda1), quad());
  double top = fs.edge_probe();
  *ftop = fs.delta(top, opts_.neumann_order);
  return top;
}

double BranchSolver::ground_criterion(VecView p, double kappa) const {
  Lambda1Result l1 = lambda1(p, kappa);
  double f = 0.0;
  ground_top(p, l1.value, &f);
  return f;
}

GroundState BranchSolver::ground_state(VecView p, double kappa) const {
  check_cap(p, kappa);
  GroundState gs;
  gs.p.assign(p.begin(), p.end());
  gs.kappa = kappa;
  Lambda1Result l1 = lambda1(p, kappa);
  gs.lambda1 = l1.value;
  double ftop = 0.0;
  const double top = ground_top(p, l1.value, &ftop);
  gs.top = top;
  if (!(ftop < 0.0)) {
    gs.point.status = BranchStatus::none;
    gs.point.residual = ftop;
    return gs;
  }
  const double edge = l1.value;
  auto F = [&](double xi) { return ground_function(p, xi, edge); };
  const double x0 = std::min(0.5 * norm2(p) - 1.0, top);
  Expansion lo;
  try {
    lo = expand_down(F, x0, 1.0, [](double v) { return v > 0.0; }, 200, "ground_state");
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " [xi trace: top = " + std::to_string(top) + "]");
  }
  RootResult r;
  try {
    r = bracketed_root(F, lo.x, top, lo.fx, ftop, opts_.method, opts_.tol, 300, "ground_state");
  } catch (const NumericError& e) {
    std::ostringstream os;
    os.precision(17);
    os << e.what() << " [xi trace: bracket " << lo.x << " .. " << top << "]";
    throw NumericError(os.str());
  }
  gs.point.xi = r.x;
  gs.point.residual = std::abs(r.fx);
  gs.point.iterations = r.iterations + lo.steps;
  gs.point.status = gs.point.residual <= opts_.tol * (1.0 + std::abs(r.x)) ? BranchStatus::converged
                                                                           : BranchStatus::capped;
  FriedrichsSolver at(reduced_operator(p, r.x, edge), quad());
  auto e = at.ground_eigenvalue(opts_.neumann_order, opts_.tol, opts_.method);
  if (e) gs.eigen_residual = std::abs(e->value - r.x);
  return gs;
}

BoundaryResult BranchSolver::g0_boundary(VecView direction, const KappaRule& rule,
                                         const std::vector<double>& deltas, double r_max) const {
  BoundaryResult br;
  const Vec u = direction_or_e1(direction);
  auto phi = [&](double r) {
    Vec p = scaled(u, r);
    Cap c = cap(p, rule);
    ++br.evaluations;
    return ground_criterion(p, c.kappa);
  };
  const double f0 = phi(0.0);
  if (!(f0 < 0.0)) {
    br.note = "no ground state at p = 0";
    return br;
  }
  double lo = 0.0, flo = f0, hi = 0.0, fhi = 0.0;
  if (r_max > 0.0) {
    hi = r_max;
    fhi = phi(hi);
    if (fhi < 0.0) {
      br.note = "ground state exists up to the probed radius";
      return br;
    }
  } else {
    double r = 0.5;
    for (;;) {
      double f = phi(r);
      if (!(f < 0.0)) {
        hi = r;
        fhi = f;
        break;
      }
      lo = r;
      flo = f;
      r *= 2.0;
      if (r > 64.0) {
        br.note = "ground state exists up to the probed radius";
        return br;
      }
    }
  }
  RootResult rr = bracketed_root(phi, lo, hi, flo, fhi, RootMethod::toms748, 0.0, 300,
                                 "g0_boundary");
  // the indicator is "phi < 0"; keep the radius on the outside
  br.radius = rr.fx < 0.0 ? std::nextafter(rr.x, hi) : rr.x;
  br.conclusive = true;
  for (double dl : deltas) {
    GapSample s;
    s.delta = dl;
    s.radius = br.radius - dl;
    if (s.radius < 0.0) continue;
    Vec p = scaled(u, s.radius);
    Cap c = cap(p, rule);
    GroundState gs = ground_state(p, c.kappa);
    s.lambda1 = gs.lambda1;
    s.xi0 = gs.point.xi;
    s.status = gs.point.status;
    s.gap = gs.lambda1 - gs.point.xi;
    br.ladder.push_back(s);
  }
  return br;
}

GammaResult BranchSolver::gamma_factor(VecView p, VecView q, VecView shift,
                                       const KappaRule& rule) const {
  GammaResult g;
  g.k = sub(p, q);
  g.p_alt = add(p, shift);
  g.q_alt = add(q, shift);
  Cap c1 = cap(p, rule);
  Cap c2 = cap(g.p_alt, rule);
  g.first = dispersion_point(p, q, c1.kappa);
  g.second = dispersion_point(g.p_alt, g.q_alt, c2.kappa);
  if (g.first.status == BranchStatus::none || g.second.status == BranchStatus::none) {
    g.status = BranchStatus::none;
    return g;
  }
  g.gamma = g.first.xi - params_.eps(norm(q));
  g.gamma_alt = g.second.xi - params_.eps(norm(g.q_alt));
  g.residual = std::abs(g.gamma - g.gamma_alt);
  g.status = (g.first.status == BranchStatus::converged && g.second.status == BranchStatus::converged)
                 ? BranchStatus::converged
                 : BranchStatus::capped;
  return g;
}

DomainMap BranchSolver::one_boson_domain(VecView p, double kappa, const std::vector<Vec>& probes,
                                         std::vector<Vec> rays) const {
  check_cap(p, kappa);
  DomainMap dm;
  dm.kappa = kappa;
  dm.grid = probes;
  const SelfEnergy& se = *se_;
  const int d = params_.dim;
  for (const Vec& q : probes) {
    bool member = se.a_eff(p, kappa, q) < kappa;
    dm.membership.push_back(member);
    if (member) {
      dm.table.push_back(dispersion_point(p, q, kappa));
    } else {
      BranchPoint bp;
      bp.q = q;
      dm.table.push_back(bp);
    }
  }
  const Vec u = direction_or_e1(p);
  if (rays.empty()) {
    rays.push_back(u);
    rays.push_back(scaled(u, -1.0));
    if (d >= 2) {
      Vec e(d, 0.0);
      e[std::abs(u[0]) < 0.9 ? 0 : 1] = 1.0;
      double c = dot(e, u);
      for (int i = 0; i < d; ++i) e[i] -= c * u[i];
      rays.push_back(direction_or_e1(e));
    }
  }
  double hv = 0.0;
  const double tc = axis_minimizer(p, kappa, &hv);
  dm.center = scaled(u, tc);
  for (Vec dir : rays) {
    dir = direction_or_e1(dir);
    dm.directions.push_back(dir);
    if (!(hv < kappa)) {
      dm.boundary.push_back(0.0);
      continue;
    }
    auto h = [&](double s) {
      Vec q = dm.center;
      for (int i = 0; i < d; ++i) q[i] += s * dir[i];
      return se.a_eff(p, kappa, q) - kappa;
    };
    double prev = 0.0, fprev = hv - kappa, s = 0.5, fs = h(s);
    for (int k = 0; fs < 0.0; ++k) {
      if (k > 60) throw NumericError("one_boson_domain: domain unbounded along a ray");
      prev = s;
      fprev = fs;
      s *= 2.0;
      fs = h(s);
    }
    RootResult r = bracketed_root(h, prev, s, fprev, fs, opts_.method, 0.0, 300,
                                  "one_boson_domain boundary");
    dm.boundary.push_back(r.x);
  }
  return dm;
}

BranchPoint dispersion_point(const ModelParams& params, VecView p, VecView q, double kappa,
                             const QuadratureSpec& quad, double tol) {
  BranchOptions o;
  o.tol = tol;
  return BranchSolver(params, quad, o).dispersion_point(p, q, kappa);
}

double lambda1(const ModelParams& params, VecView p, double kappa, const QuadratureSpec& quad,
               double tol) {
  BranchOptions o;
  o.tol = tol;
  return BranchSolver(params, quad, o).lambda1(p, kappa).value;
}

GroundState ground_state(const ModelParams& params, VecView p, double kappa, int neumann_order,
                         const QuadratureSpec& quad, double tol) {
  BranchOptions o;
  o.tol = tol;
  o.neumann_order = neumann_order;
  return BranchSolver(params, quad, o).ground_state(p, kappa);
}

double gamma_of(const ModelParams& params, const BranchPoint& pt) {
  return pt.xi - params.eps(norm(pt.q));
}

}  // namespace polaron
