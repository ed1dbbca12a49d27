#include "polaron/friedrichs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>

#include "polaron/errors.hpp"
#include "polaron/model.hpp"

namespace polaron {

FriedrichsSolver::FriedrichsSolver(FriedrichsData data, const QuadratureSpec& quad)
    : data_(std::move(data)), quad_(quad) {
  if (data_.dim < 1) throw InputError("FriedrichsData: dimension must be >= 1");
  if (!data_.v || !data_.a) throw InputError("FriedrichsData: v and a are required");
  if (data_.axis.empty()) {
    data_.axis.assign(data_.dim, 0.0);
    data_.axis[0] = 1.0;
  }
  data_.axis = direction_or_e1(data_.axis);
  if (!quad_.discrete() && quad_.rmax <= 0.0)
    throw InputError("FriedrichsSolver: continuum rule needs a resolved radial cutoff");
  rmax_ = quad_.discrete() ? quad_.measure->half_width * std::sqrt(double(data_.dim)) : quad_.rmax;
  nodes_ = NodeSet::build(quad_, data_.dim, data_.axis);

  const std::size_t R = nodes_.orbits();
  v_.resize(R);
  a_.resize(R);
  w_.resize(R);
  for (std::size_t k = 0; k < R; ++k) {
    VecView q = nodes_.representative(k);
    v_[k] = data_.v(q);
    a_[k] = data_.a(q);
    w_[k] = nodes_.orbit_weight(k);
    if (!std::isfinite(v_[k]) || !std::isfinite(a_[k])) {
      std::ostringstream os;
      os << "FriedrichsData: non-finite v or a at ring " << k << " (|q| = " << norm(q) << ")";
      throw NumericError(os.str());
    }
  }
  if (std::isnan(data_.edge)) locate_edge();
  if (data_.edge_point.empty()) data_.edge_point.assign(data_.dim, 0.0);
}

void FriedrichsSolver::locate_edge() {
  double node_min = *std::min_element(a_.begin(), a_.end());
  std::size_t node_arg = std::min_element(a_.begin(), a_.end()) - a_.begin();
  if (quad_.discrete()) {
    data_.edge = node_min;
    VecView q = nodes_.representative(node_arg);
    data_.edge_point.assign(q.begin(), q.end());
    return;
  }
  const Vec& u = data_.axis;
  auto along = [&](double t) {
    Vec q = scaled(u, t);
    return data_.a(q);
  };
  const int n = 400;
  const double T = rmax_;
  int best = 0;
  double bestv = along(-T);
  for (int i = 1; i <= n; ++i) {
    double v = along(-T + 2.0 * T * i / n);
    if (v < bestv) {
      bestv = v;
      best = i;
    }
  }
  double lo = -T + 2.0 * T * std::max(best - 1, 0) / n;
  double hi = -T + 2.0 * T * std::min(best + 1, n) / n;
  std::uintmax_t it = 200;
  auto [t, v] = boost::math::tools::brent_find_minima(along, lo, hi, 26, it);
  if (bestv < v) {
    v = bestv;
    t = -T + 2.0 * T * best / n;
  }
  data_.edge_point = scaled(u, t);
  data_.edge = v;
  if (node_min < v) {
    // the ring values are what Delta sees; never let a node sit below the edge
    data_.edge = node_min;
    VecView q = nodes_.representative(node_arg);
    data_.edge_point.assign(q.begin(), q.end());
  }
}

double FriedrichsSolver::min_node_gap() const {
  return *std::min_element(a_.begin(), a_.end()) - data_.edge;
}

double FriedrichsSolver::edge_probe() const {
  if (!quad_.discrete() && min_node_gap() >= data_.margin) return data_.edge;
  return data_.edge - data_.margin;
}

const Eigen::MatrixXd& FriedrichsSolver::ring_kernel() const {
  std::call_once(kernel_once_, [&] {
    const std::size_t R = nodes_.orbits();
    if (data_.reduced) {
      kernel_ = data_.reduced(nodes_);
      if (kernel_.rows() != static_cast<Eigen::Index>(R) ||
          kernel_.cols() != static_cast<Eigen::Index>(R))
        throw InputError("FriedrichsData: reduced kernel has wrong shape");
      return;
    }
    kernel_.setZero(R, R);
    if (!data_.kernel) return;
    for (std::size_t a = 0; a < R; ++a) {
      VecView qa = nodes_.representative(a);
      for (std::size_t b = 0; b < R; ++b) {
        double acc = 0.0;
        for (std::size_t j = nodes_.orbit_begin(b); j < nodes_.orbit_end(b); ++j)
          acc += nodes_.weight(j) * data_.kernel(qa, nodes_.node(j));
        kernel_(a, b) = acc;
      }
    }
  });
  return kernel_;
}

void FriedrichsSolver::check_z(double z, const char* what) const {
  if (!(z <= data_.edge) || !std::isfinite(z)) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": z = " << z << " is on the cut [" << data_.edge << ", inf)";
    throw DomainError(os.str());
  }
}

double FriedrichsSolver::delta(double z, int order) const {
  check_z(z, "delta");
  if (order < 0) throw InputError("delta: Neumann order must be >= 0");
  const std::size_t R = nodes_.orbits();
  Eigen::VectorXd u(R), t(R);
  double s0 = 0.0;
  for (std::size_t k = 0; k < R; ++k) {
    double den = a_[k] - z;
    if (!(den > 0.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "delta: node with a - z = " << den << " at z = " << z << " (edge " << data_.edge << ")";
      throw DomainError(os.str());
    }
    t[k] = 1.0 / den;
    u[k] = v_[k] * t[k];
    s0 += w_[k] * v_[k] * u[k];
  }
  const double a2 = data_.alpha * data_.alpha;
  double series = 0.0;
  const bool has_kernel = data_.kernel || data_.reduced;
  if (order > 0 && has_kernel && a2 != 0.0) {
    const Eigen::MatrixXd& K = ring_kernel();
    Eigen::Map<const Eigen::VectorXd> W(w_.data(), R);
    Eigen::VectorXd y = u;
    double scale = 1.0;
    double sign = 1.0;
    for (int n = 1; n <= order; ++n) {
      if (n > 1) y = t.cwiseProduct(y);
      y = K * y;
      scale *= a2;
      sign = -sign;
      series += sign * scale * W.dot(u.cwiseProduct(y));
    }
  }
  return data_.e0 - z - a2 * (s0 + series);
}

std::optional<EigenvalueResult> FriedrichsSolver::ground_eigenvalue(int order, double tol,
                                                                    RootMethod method) const {
  const double top = edge_probe();
  const double ftop = delta(top, order);
  if (!(ftop < 0.0)) return std::nullopt;
  auto f = [&](double z) { return delta(z, order); };
  double x0 = std::min(data_.e0 - 1.0, top);
  Expansion lo = expand_down(f, x0, 1.0, [](double v) { return v > 0.0; }, 200,
                             "ground_eigenvalue");
  RootResult r = bracketed_root(f, lo.x, top, lo.fx, ftop, method, tol, 300, "ground_eigenvalue");
  return EigenvalueResult{r.x, std::abs(r.fx), r.iterations + lo.steps};
}

double FriedrichsSolver::im_delta_edge(double x) const {
  if (!(x > data_.edge)) {
    std::ostringstream os;
    os << "im_delta_edge: x = " << x << " must lie above the edge " << data_.edge;
    throw DomainError(os.str());
  }
  if (norm(data_.edge_point) > 1e-6 * (1.0 + rmax_))
    throw InputError("im_delta_edge: a must be radial with its minimum at the origin");
  const Vec& u = data_.axis;
  auto ar = [&](double r) { return data_.a(scaled(u, r)); };
  double lo = norm(data_.edge_point), hi = std::max(1.0, 2.0 * lo);
  double fhi = ar(hi) - x;
  for (int k = 0; fhi <= 0.0; ++k) {
    if (k > 200) throw NumericError("im_delta_edge: level set not bracketed");
    lo = hi;
    hi *= 2.0;
    fhi = ar(hi) - x;
  }
  double flo = ar(lo) - x;
  RootResult rr = bracketed_root([&](double r) { return ar(r) - x; }, lo, hi, flo, fhi,
                                 RootMethod::toms748, 0.0, 300, "im_delta_edge");
  const double r = rr.x;
  const double h = 1e-5 * std::max(1.0, r);
  const double da = (ar(r + h) - ar(r - h)) / (2.0 * h);
  if (std::abs(da) < data_.margin) {
    std::ostringstream os;
    os << "im_delta_edge: |a'(r)| = " << std::abs(da) << " below margin (too close to the edge)";
    throw DomainError(os.str());
  }
  const double v = data_.v(scaled(u, r));
  const int d = data_.dim;
  const double area = sphere_area(d);
  return data_.alpha * data_.alpha * std::numbers::pi * area * std::pow(r, d - 1) * v * v / std::abs(da);
}

FriedrichsDiagnostics FriedrichsSolver::diagnostics(int samples) const {
  FriedrichsDiagnostics dg;
  const int d = data_.dim;
  const Vec& q0 = data_.edge_point;
  const double h = 1e-4;
  Eigen::MatrixXd H(d, d);
  auto at = [&](int i, double si, int j, double sj) {
    Vec q = q0;
    q[i] += si;
    q[j] += sj;
    return data_.a(q);
  };
  const double a0 = data_.a(q0);
  for (int i = 0; i < d; ++i) {
    H(i, i) = (at(i, h, i, 0.0) - 2.0 * a0 + at(i, -h, i, 0.0)) / (h * h);
    for (int j = i + 1; j < d; ++j) {
      double v = (at(i, h, j, h) - at(i, h, j, -h) - at(i, -h, j, h) + at(i, -h, j, -h)) /
                 (4.0 * h * h);
      H(i, j) = H(j, i) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  dg.hessian_min_eigenvalue = es.eigenvalues().minCoeff();
  dg.hessian_positive = dg.hessian_min_eigenvalue > 0.0;
  dg.envelope_dominates = true;
  if (data_.envelope) {
    const std::size_t n = nodes_.size();
    const std::size_t stride = std::max<std::size_t>(1, n / std::max(samples, 1));
    for (std::size_t i = 0; i < n; i += stride) {
      VecView q = nodes_.node(i);
      double hq = data_.envelope(q);
      double ratio = hq > 0.0 ? std::abs(data_.v(q)) / hq : (data_.v(q) == 0.0 ? 0.0 : INFINITY);
      dg.worst_envelope_ratio = std::max(dg.worst_envelope_ratio, ratio);
    }
    dg.envelope_dominates = dg.worst_envelope_ratio <= 1.0 + 1e-12;
  }
  return dg;
}

NeumannKernel FriedrichsSolver::neumann_kernel(double z, int n, double budget) const {
  return NeumannKernel(*this, z, n, budget);
}

NeumannKernel::NeumannKernel(const FriedrichsSolver& s, double z, int n, double budget)
    : s_(&s), z_(z), n_(n), budget_(budget) {
  if (n < 1) throw InputError("neumann_kernel: order must be >= 1");
  s.check_z(z, "neumann_kernel");
  if (!(z < s.edge())) throw DomainError("neumann_kernel: z must lie strictly below the edge");
  t_.resize(s.a_.size());
  for (std::size_t k = 0; k < t_.size(); ++k) t_[k] = 1.0 / (s.a_[k] - z);
  const Vec& u = s.data_.axis;
  for (double t : {0.0, 0.5, 1.0}) probes_.push_back(scaled(u, t));
  for (const Vec& q : probes_) {
    for (const Vec& qp : probes_) {
      double h = 1.0;
      if (s.data_.envelope) h = s.data_.envelope(q) * s.data_.envelope(qp);
      double val = std::abs((*this)(q, qp));
      if (h > 0.0) norm_sample_ = std::max(norm_sample_, val / h);
    }
  }
}

std::vector<double> NeumannKernel::left_chain(VecView q) const {
  // l_1(x) = D(q, x); l_{k+1}(x) = int l_k(y) D(y, x) / (a(y) - z) dy
  const FriedrichsSolver& s = *s_;
  const NodeSet& ns = s.nodes_;
  const PointKernel& D = s.data_.kernel;
  const Vec& u = s.data_.axis;
  double along = dot(q, u);
  double perp2 = std::max(0.0, norm2(q) - along * along);
  const bool ring = std::sqrt(perp2) <= 1e-12 * (1.0 + norm(q));

  std::lock_guard<std::mutex> lock(mu_);
  if (cache_ && cache_->ring == ring && cache_->q.size() == q.size() &&
      std::equal(q.begin(), q.end(), cache_->q.begin()))
    return cache_->chain;

  std::vector<double> l;
  if (ring) {
    const std::size_t R = ns.orbits();
    Eigen::VectorXd y(R);
    for (std::size_t k = 0; k < R; ++k) y[k] = D(q, ns.representative(k));
    const Eigen::MatrixXd& K = s.ring_kernel();
    for (int k = 1; k < n_ - 1; ++k) {
      Eigen::VectorXd ty(R);
      for (std::size_t i = 0; i < R; ++i) ty[i] = t_[i] * y[i];
      y = K * ty;
    }
    l.assign(y.data(), y.data() + R);
  } else {
    const std::size_t N = ns.size();
    double cost = static_cast<double>(n_ - 2) * N * N + N;
    if (cost > budget_) {
      std::ostringstream os;
      os << "neumann_kernel: off-axis left argument needs " << cost
         << " kernel evaluations, budget " << budget_;
      throw ResourceError(os.str());
    }
    l.resize(N);
    for (std::size_t j = 0; j < N; ++j) l[j] = D(q, ns.node(j));
    for (int k = 1; k < n_ - 1; ++k) {
      std::vector<double> next(N, 0.0);
      for (std::size_t i = 0; i < N; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < N; ++j)
          acc += ns.weight(j) * l[j] * t_[ns.orbit_of(j)] * D(ns.node(j), ns.node(i));
        next[i] = acc;
      }
      l.swap(next);
    }
  }
  auto c = std::make_shared<Cache>();
  c->q.assign(q.begin(), q.end());
  c->chain = l;
  c->ring = ring;
  cache_ = c;
  return l;
}

double NeumannKernel::operator()(VecView q, VecView qp) const {
  const FriedrichsSolver& s = *s_;
  const double a2 = s.data_.alpha * s.data_.alpha;
  const PointKernel& D = s.data_.kernel;
  if (!D) return 0.0;
  if (n_ == 1) return a2 * D(q, qp);
  const NodeSet& ns = s.nodes_;
  std::vector<double> l = left_chain(q);
  const bool ring = l.size() == ns.orbits() && ns.orbits() != ns.size();
  double acc = 0.0;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    std::size_t r = ns.orbit_of(j);
    double lj = ring ? l[r] : l[j];
    acc += ns.weight(j) * lj * t_[r] * D(ns.node(j), qp);
  }
  return std::pow(a2, n_) * acc;
}

double delta(const FriedrichsData& data, double z, int order, const QuadratureSpec& quad) {
  return FriedrichsSolver(data, quad).delta(z, order);
}

std::optional<EigenvalueResult> ground_eigenvalue(const FriedrichsData& data, int order,
                                                  const QuadratureSpec& quad, double tol) {
  return FriedrichsSolver(data, quad).ground_eigenvalue(order, tol);
}

double im_delta_edge(const FriedrichsData& data, double x, const QuadratureSpec& quad) {
  return FriedrichsSolver(data, quad).im_delta_edge(x);
}

}  // namespace polaron
