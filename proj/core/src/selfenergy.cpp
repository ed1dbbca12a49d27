#include "polaron/selfenergy.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "polaron/errors.hpp"
#include "polaron/lambda2.hpp"

namespace polaron {

SelfEnergy::SelfEnergy(const ModelParams& params, const QuadratureSpec& quad, double margin)
    : params_(params), quad_(quad), margin_(margin) {
  params_.check();
  const Coupling& c = params_.coupling;
  if (quad_.discrete()) {
    const DiscreteMeasure& m = *quad_.measure;
    if (m.dim != params_.dim) throw InputError("SelfEnergy: measure dimension does not match model");
    for (std::size_t j = 0; j < m.size(); ++j) {
      double q2 = norm2(m.point(j));
      double g = c.profile_sq(q2);
      d_q2_.push_back(q2);
      d_g2_.push_back(g * g);
      d_eps_.push_back(params_.eps.of_sq(q2));
    }
    return;
  }
  quad_ = resolve_cutoff(quad_, c);
  auto fill = [&](Radial& rad, const QuadratureSpec& s) {
    rad.rule = axial_rule(params_.dim, s);
    for (double r : rad.rule.r) {
      double g = c.profile_sq(r * r);
      rad.g2.push_back(g * g);
      rad.eps.push_back(params_.eps(r));
      rad.r2.push_back(r * r);
    }
  };
  fill(fine_, quad_);
  fill(coarse_, quad_.coarsened());
}

void SelfEnergy::margin_violation(const char* what, double den) const {
  std::ostringstream os;
  os << what << ": two-boson denominator e2 - xi = " << den << " below safety margin " << margin_
     << " (xi too close to the two-boson threshold)";
  throw DomainError(os.str());
}

double SelfEnergy::sum_continuum(double k2, double eq, double xi, bool coarse) const {
  const Radial& rad = coarse ? coarse_ : fine_;
  const AxialRule& ar = rad.rule;
  const double K = std::sqrt(k2);
  const double shift = eq - xi;
  const bool sep = params_.coupling.separable();
  const Coupling& c = params_.coupling;
  double acc = 0.0;
  for (std::size_t a = 0; a < ar.r.size(); ++a) {
    const double base = k2 + rad.r2[a];
    const double kr = 2.0 * K * ar.r[a];
    const double e = rad.eps[a] + shift;
    double inner = 0.0;
    for (std::size_t b = 0; b < ar.x.size(); ++b) {
      double s2 = base - kr * ar.x[b];
      double den = 0.5 * s2 + e;
      if (!(den >= margin_)) margin_violation("m2", den);
      double num = ar.wx[b];
      if (!sep) {
        double chi = c.modulation_sq(s2);
        num *= chi * chi;
      }
      inner += num / den;
    }
    acc += ar.wr[a] * rad.g2[a] * inner;
  }
  return acc;
}

double SelfEnergy::sum_discrete(VecView k, double k2, double eq, double xi) const {
  const DiscreteMeasure& m = *quad_.measure;
  const double shift = eq - xi;
  const bool sep = params_.coupling.separable();
  const Coupling& c = params_.coupling;
  const int d = m.dim;
  double acc = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    const double* qj = m.coords.data() + j * d;
    double kq = 0.0;
    for (int i = 0; i < d; ++i) kq += k[i] * qj[i];
    double s2 = k2 + d_q2_[j] - 2.0 * kq;
    double den = 0.5 * s2 + d_eps_[j] + shift;
    if (!(den >= margin_)) margin_violation("m2", den);
    double num = d_g2_[j];
    if (!sep) {
      double chi = c.modulation_sq(s2);
      num *= chi * chi;
    }
    acc += num / den;
  }
  return m.weight * acc;
}

double SelfEnergy::m2(VecView p, double xi, VecView q) const {
  Vec k = sub(p, q);
  double k2 = norm2(k);
  double eq = params_.eps(norm(q));
  double s = quad_.discrete() ? sum_discrete(k, k2, eq, xi) : sum_continuum(k2, eq, xi, false);
  return -(params_.alpha * params_.alpha) * s;
}

SelfEnergyPoint SelfEnergy::m2_point(VecView p, double xi, VecView q) const {
  SelfEnergyPoint pt;
  pt.p.assign(p.begin(), p.end());
  pt.q.assign(q.begin(), q.end());
  pt.xi = xi;
  pt.m = m2(p, xi, q);
  const double a2 = params_.alpha * params_.alpha;
  const std::size_t n = quad_.discrete() ? quad_.measure->size()
                                         : fine_.rule.r.size() * fine_.rule.x.size();
  pt.error = roundoff_floor(std::abs(pt.m), n);
  if (!quad_.discrete()) {
    Vec k = sub(p, q);
    double coarse = -a2 * sum_continuum(norm2(k), params_.eps(norm(q)), xi, true);
    pt.error += std::abs(pt.m - coarse);
  }
  return pt;
}

double SelfEnergy::e1(VecView p, VecView q) const {
  Vec k = sub(p, q);
  return 0.5 * norm2(k) + params_.eps(norm(q));
}

double SelfEnergy::a_eff(VecView p, double xi, VecView q) const { return e1(p, q) + m2(p, xi, q); }

double SelfEnergy::channel(VecView p, VecView q) const {
  Vec k = sub(p, q);
  return params_.coupling(k, q);
}

double SelfEnergy::b2_leading(VecView p, double z, VecView q1, VecView q) const {
  Vec P = sub(sub(p, q1), q);
  double den = 0.5 * norm2(P) + params_.eps(norm(q1)) + params_.eps(norm(q)) - z;
  if (!(den >= margin_)) margin_violation("b2_leading", den);
  return -params_.alpha * params_.coupling(P, q1) / den;
}

double SelfEnergy::d2_leading(VecView p, double xi, VecView q, VecView qp) const {
  Vec P = sub(sub(p, q), qp);
  double den = 0.5 * norm2(P) + params_.eps(norm(q)) + params_.eps(norm(qp)) - xi;
  if (!(den >= margin_)) margin_violation("d2_leading", den);
  // couplings are real
  return -params_.coupling(P, qp) * params_.coupling(P, q) / den;
}

Eigen::MatrixXd SelfEnergy::reduced_kernel(VecView p, double xi, const NodeSet& nodes) const {
  const int d = nodes.dim();
  const std::size_t n = nodes.size();
  const std::size_t R = nodes.orbits();
  const Coupling& c = params_.coupling;
  const bool sep = c.separable();
  std::vector<double> s(n), e(n), g(n);
  const double p2 = norm2(p);
  for (std::size_t j = 0; j < n; ++j) {
    VecView q = nodes.node(j);
    double q2 = norm2(q);
    s[j] = q2 - 2.0 * dot(p, q);
    e[j] = params_.eps.of_sq(q2) - xi;
    g[j] = c.profile_sq(q2);
  }
  const double* X = nodes.coords().data();
  const std::vector<double>& w = nodes.weights();
  Eigen::MatrixXd K(R, R);
  for (std::size_t a = 0; a < R; ++a) {
    const std::size_t i = nodes.orbit_begin(a);
    const double* qi = X + i * d;
    const double si = p2 + s[i];
    const double ei = params_.eps.of_sq(norm2(nodes.node(i)));
    const double wi = g[i];
    for (std::size_t b = 0; b < R; ++b) {
      double acc = 0.0;
      for (std::size_t j = nodes.orbit_begin(b); j < nodes.orbit_end(b); ++j) {
        const double* qj = X + j * d;
        double qq = 0.0;
        for (int t = 0; t < d; ++t) qq += qi[t] * qj[t];
        double P2 = si + s[j] + 2.0 * qq;
        double den = 0.5 * P2 + ei + e[j];
        if (!(den >= margin_)) margin_violation("d2_leading", den);
        double num = wi * g[j];
        if (!sep) {
          double chi = c.modulation_sq(P2);
          num *= chi * chi;
        }
        acc += w[j] * num / den;
      }
      K(a, b) = -acc;
    }
  }
  return K;
}

SelfEnergyPoint m2(const ModelParams& params, VecView p, double xi, VecView q,
                   const QuadratureSpec& quad) {
  return SelfEnergy(params, quad).m2_point(p, xi, q);
}

double a_eff(const ModelParams& params, VecView p, double xi, VecView q, const QuadratureSpec& quad) {
  return SelfEnergy(params, quad).a_eff(p, xi, q);
}

double b2_leading(const ModelParams& params, VecView p, double z, VecView q1, VecView q) {
  QuadratureSpec none;
  none.rmax = 1.0;
  none.radial_nodes = 1;
  none.angular_degree = 1;
  return SelfEnergy(params, none).b2_leading(p, z, q1, q);
}

double d2_leading(const ModelParams& params, VecView p, double xi, VecView q, VecView qp) {
  QuadratureSpec none;
  none.rmax = 1.0;
  none.radial_nodes = 1;
  none.angular_degree = 1;
  return SelfEnergy(params, none).d2_leading(p, xi, q, qp);
}

ContractionReport contraction_bounds(double alpha, double h_norm, double c0, double lambda2,
                                     double kappa) {
  if (!(kappa < lambda2)) {
    std::ostringstream os;
    os << "contraction_bounds: kappa = " << kappa << " must lie below lambda2 = " << lambda2;
    throw DomainError(os.str());
  }
  ContractionReport r;
  r.kappa = kappa;
  r.lambda2 = lambda2;
  r.h_norm = h_norm;
  const double gap = lambda2 - kappa;
  const double cq = h_norm * std::sqrt(3.0) * (1.0 / (c0 + gap) + 1.0 / gap);
  const double cg = (3.0 + h_norm * h_norm) / gap;
  r.bound_q = alpha * cq;
  r.bound_gamma = alpha * cg;
  r.alpha0_q = cq > 0.0 ? 0.5 / cq : std::numeric_limits<double>::infinity();
  r.alpha0_gamma = 0.5 / cg;
  r.alpha_exceeds_q = alpha >= r.alpha0_q;
  r.alpha_exceeds_gamma = alpha >= r.alpha0_gamma;
  return r;
}

ContractionReport contraction_bounds(const ModelParams& params, VecView p, double kappa,
                                     std::optional<double> lambda2_margin) {
  Lambda2Proxy l2 = lambda2_proxy(params, p, lambda2_margin);
  double h = std::sqrt(params.coupling.envelope_norm_sq(params.dim));
  return contraction_bounds(params.alpha, h, params.c0, l2.value, kappa);
}

}  // namespace polaron
