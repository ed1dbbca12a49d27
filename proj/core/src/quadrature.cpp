#include "polaron/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/gamma.hpp>

#include "polaron/errors.hpp"

namespace polaron {

int DiscreteMeasure::axis_index(std::size_t i, int axis) const {
  // row-major over axes, last axis fastest
  std::size_t stride = 1;
  for (int a = dim - 1; a > axis; --a) stride *= points_per_axis;
  return static_cast<int>((i / stride) % points_per_axis);
}

std::size_t DiscreteMeasure::row_of(const std::vector<int>& idx) const {
  std::size_t row = 0;
  for (int a = 0; a < dim; ++a) row = row * points_per_axis + idx[a];
  return row;
}

DiscreteMeasure grid_measure(double half_width, int points_per_axis, int dim,
                             std::size_t max_points) {
  if (dim < 1) throw InputError("grid_measure: dimension must be >= 1");
  if (points_per_axis < 1) throw InputError("grid_measure: need at least one point per axis");
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw InputError("grid_measure: half-width must be > 0");
  double count = std::pow(static_cast<double>(points_per_axis), dim);
  if (count > static_cast<double>(max_points)) {
    std::ostringstream os;
    os << "grid_measure: " << points_per_axis << "^" << dim << " points exceeds budget of "
       << max_points;
    throw ResourceError(os.str());
  }
  DiscreteMeasure m;
  m.dim = dim;
  m.half_width = half_width;
  m.points_per_axis = points_per_axis;
  const double h = 2.0 * half_width / points_per_axis;
  m.weight = std::pow(h, dim);
  const std::size_t n = static_cast<std::size_t>(count);
  m.coords.resize(n * dim);
  std::vector<double> axis(points_per_axis);
  for (int j = 0; j < points_per_axis; ++j) {
    // symmetric about 0 by construction: index j and M-1-j are negatives
    axis[j] = h * (j - 0.5 * (points_per_axis - 1));
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rest = i;
    for (int a = dim - 1; a >= 0; --a) {
      m.coords[i * dim + a] = axis[rest % points_per_axis];
      rest /= points_per_axis;
    }
  }
  return m;
}

QuadratureSpec QuadratureSpec::on_measure(DiscreteMeasure m) {
  QuadratureSpec s;
  s.measure = std::make_shared<const DiscreteMeasure>(std::move(m));
  return s;
}

QuadratureSpec QuadratureSpec::coarsened() const {
  QuadratureSpec s = *this;
  s.radial_nodes = std::max(4, radial_nodes / 2);
  s.angular_degree = std::max(1, (angular_degree - 1) / 2);
  return s;
}

double envelope_cutoff(const Coupling& c) {
  const double h0 = c.envelope(0.0);
  if (h0 == 0.0) return c.width();
  const double target = 1e-14 * h0 * h0;
  auto above = [&](double r) {
    double h = c.envelope(r);
    return h * h > target;
  };
  double lo = 0.0, hi = 1.0;
  while (above(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw NumericError("envelope_cutoff: envelope does not decay");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    (above(mid) ? lo : hi) = mid;
  }
  return hi;
}

QuadratureSpec resolve_cutoff(QuadratureSpec spec, const Coupling& c) {
  if (spec.rmax <= 0.0) spec.rmax = envelope_cutoff(c);
  return spec;
}

namespace {

// Golub-Welsch on a symmetric Jacobi matrix with zero diagonal.
Rule1D golub_welsch(int n, const std::vector<double>& beta, double mu0) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(beta[k]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NumericError("golub_welsch: eigensolver failed");
  Rule1D r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    r.x[i] = es.eigenvalues()[i];
    double v = es.eigenvectors()(0, i);
    r.w[i] = mu0 * v * v;
  }
  // enforce exact reflection symmetry of nodes and weights
  for (int i = 0; i < n / 2; ++i) {
    int j = n - 1 - i;
    double x = 0.5 * (r.x[j] - r.x[i]);
    double w = 0.5 * (r.w[i] + r.w[j]);
    r.x[i] = -x;
    r.x[j] = x;
    r.w[i] = r.w[j] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return r;
}

}  // namespace

Rule1D gauss_gegenbauer(int n, double a) {
  if (n < 1) throw InputError("gauss_gegenbauer: need n >= 1");
  if (!(a > -1.0)) throw InputError("gauss_gegenbauer: exponent must be > -1");
  if (a == -0.5) {
    Rule1D r;
    for (int k = n - 1; k >= 0; --k) {
      r.x.push_back(std::cos((2.0 * k + 1.0) * std::numbers::pi / (2.0 * n)));
      r.w.push_back(std::numbers::pi / n);
    }
    for (int i = 0; i < n / 2; ++i) r.x[i] = -r.x[n - 1 - i];
    if (n % 2 == 1) r.x[n / 2] = 0.0;
    return r;
  }
  std::vector<double> beta(n, 0.0);
  for (int k = 1; k < n; ++k) {
    double s = 2.0 * k + 2.0 * a;
    beta[k] = k * (k + 2.0 * a) / ((s + 1.0) * (s - 1.0));
  }
  double mu0 = std::sqrt(std::numbers::pi) * boost::math::tgamma(a + 1.0) /
               boost::math::tgamma(a + 1.5);
  return golub_welsch(n, beta, mu0);
}

Rule1D gauss_legendre(int n, double a, double b) {
  Rule1D r = gauss_gegenbauer(n, 0.0);
  const double h = 0.5 * (b - a), c = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    r.x[i] = c + h * r.x[i];
    r.w[i] *= h;
  }
  return r;
}

SphereRule sphere_rule(int dim, int degree) {
  if (dim < 1) throw InputError("sphere_rule: dimension must be >= 1");
  SphereRule s;
  s.dim = dim;
  if (dim == 1) {
    s.points = {-1.0, 1.0};
    s.weights = {1.0, 1.0};
    return s;
  }
  const int n = std::max(1, (degree + 2) / 2);
  Rule1D polar = gauss_gegenbauer(n, 0.5 * (dim - 3));
  SphereRule rest = sphere_rule(dim - 1, degree);
  for (std::size_t b = 0; b < polar.size(); ++b) {
    double x = polar.x[b];
    double y = std::sqrt(std::max(0.0, 1.0 - x * x));
    for (std::size_t k = 0; k < rest.size(); ++k) {
      s.points.push_back(x);
      for (int j = 0; j < dim - 1; ++j) s.points.push_back(y * rest.points[k * (dim - 1) + j]);
      s.weights.push_back(polar.w[b] * rest.weights[k]);
    }
  }
  return s;
}

AxialRule axial_rule(int dim, const QuadratureSpec& spec) {
  if (spec.rmax <= 0.0) throw InputError("axial_rule: radial cutoff unresolved");
  if (spec.radial_nodes < 1) throw InputError("axial_rule: need radial nodes");
  AxialRule ar;
  ar.dim = dim;
  Rule1D rad = gauss_legendre(spec.radial_nodes, 0.0, spec.rmax);
  ar.r = rad.x;
  ar.wr = rad.w;
  for (std::size_t a = 0; a < ar.r.size(); ++a) ar.wr[a] *= std::pow(ar.r[a], dim - 1);
  if (dim == 1) {
    ar.x = {-1.0, 1.0};
    ar.wx = {1.0, 1.0};
    return ar;
  }
  const int n = std::max(1, (spec.angular_degree + 2) / 2);
  Rule1D polar = gauss_gegenbauer(n, 0.5 * (dim - 3));
  const double rest = dim == 2 ? 2.0 : sphere_area(dim - 1);
  ar.x = polar.x;
  ar.wx = polar.w;
  for (double& w : ar.wx) w *= rest;
  return ar;
}

NodeSet NodeSet::build(const QuadratureSpec& spec, int dim, VecView axis) {
  NodeSet ns;
  ns.dim_ = dim;
  ns.offsets_.push_back(0);
  if (spec.discrete()) {
    const DiscreteMeasure& m = *spec.measure;
    if (m.dim != dim) throw InputError("NodeSet: measure dimension does not match model");
    ns.discrete_ = true;
    ns.axis_ = direction_or_e1(axis);
    ns.coords_ = m.coords;
    ns.weights_.assign(m.size(), m.weight);
    ns.orbit_weights_ = ns.weights_;
    for (std::size_t i = 0; i < m.size(); ++i) {
      ns.offsets_.push_back(i + 1);
      ns.orbit_index_.push_back(i);
    }
    return ns;
  }
  if (spec.rmax <= 0.0) throw InputError("NodeSet: radial cutoff unresolved");
  if (static_cast<int>(axis.size()) != dim) throw InputError("NodeSet: axis has wrong dimension");
  ns.axis_ = direction_or_e1(axis);
  const Vec& u = ns.axis_;

  // orthonormal basis of the complement of u
  std::vector<Vec> perp;
  for (int j = 0; j < dim && static_cast<int>(perp.size()) < dim - 1; ++j) {
    Vec e(dim, 0.0);
    e[j] = 1.0;
    double c = dot(e, u);
    for (int i = 0; i < dim; ++i) e[i] -= c * u[i];
    for (const Vec& f : perp) {
      double cf = dot(e, f);
      for (int i = 0; i < dim; ++i) e[i] -= cf * f[i];
    }
    double n = norm(e);
    if (n < 1e-8) continue;
    for (double& x : e) x /= n;
    perp.push_back(e);
  }

  AxialRule ar = axial_rule(dim, spec);
  SphereRule rest;
  if (dim >= 2) {
    rest = sphere_rule(dim - 1, spec.angular_degree);
  } else {
    rest.dim = 0;
    rest.weights = {1.0};
  }
  double rest_total = 0.0;
  for (double w : rest.weights) rest_total += w;

  for (std::size_t a = 0; a < ar.r.size(); ++a) {
    for (std::size_t b = 0; b < ar.x.size(); ++b) {
      const double r = ar.r[a], x = ar.x[b];
      const double y = std::sqrt(std::max(0.0, 1.0 - x * x));
      // wx already includes the rest-sphere area; split it over members
      const double ring = ar.wr[a] * ar.wx[b];
      for (std::size_t k = 0; k < rest.size(); ++k) {
        for (int i = 0; i < dim; ++i) {
          double c = x * u[i];
          for (int j = 0; j < dim - 1; ++j) c += y * rest.points[k * (dim - 1) + j] * perp[j][i];
          ns.coords_.push_back(r * c);
        }
        ns.weights_.push_back(ring * rest.weights[k] / rest_total);
        ns.orbit_index_.push_back(ns.orbit_weights_.size());
      }
      ns.orbit_weights_.push_back(ring);
      ns.offsets_.push_back(ns.weights_.size());
    }
  }
  return ns;
}

double roundoff_floor(double abs_sum, std::size_t terms) {
  return static_cast<double>(std::max<std::size_t>(terms, 1)) *
         std::numeric_limits<double>::epsilon() * abs_sum;
}

namespace {

double sum_rule(const ScalarField& f, const NodeSet& ns, double* abs_sum) {
  double s = 0.0, a = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    double v = f(ns.node(i));
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "integrate: non-finite integrand " << v << " at node " << i << " (";
      for (int j = 0; j < ns.dim(); ++j) os << (j ? ", " : "") << ns.node(i)[j];
      os << ")";
      throw NumericError(os.str());
    }
    double t = ns.weight(i) * v;
    s += t;
    a += std::abs(t);
  }
  if (abs_sum) *abs_sum = a;
  return s;
}

}  // namespace

Integral integrate(const ScalarField& f, int dim, const QuadratureSpec& spec) {
  Vec axis(dim, 0.0);
  axis[0] = 1.0;
  NodeSet fine = NodeSet::build(spec, dim, axis);
  double abs_sum = 0.0;
  Integral out;
  out.value = sum_rule(f, fine, &abs_sum);
  out.error = roundoff_floor(abs_sum, fine.size());
  if (!spec.discrete()) {
    NodeSet coarse = NodeSet::build(spec.coarsened(), dim, axis);
    out.error += std::abs(out.value - sum_rule(f, coarse, nullptr));
  }
  return out;
}

}  // namespace polaron
