#include "polaron/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

// pchip.hpp calls isnan unqualified
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>

#include "polaron/errors.hpp"

namespace polaron {

struct Dispersion::Table {
  std::vector<double> x, y;
  boost::math::interpolators::pchip<std::vector<double>> spline;
  double x0, x1, y0, y1, s0, s1;

  Table(std::vector<double> xs, std::vector<double> ys)
      : x(xs), y(ys), spline(std::move(xs), std::move(ys)) {
    x0 = x.front();
    x1 = x.back();
    y0 = y.front();
    y1 = y.back();
    s0 = spline.prime(x0);
    s1 = spline.prime(x1);
  }
};

Dispersion Dispersion::constant(double eps0) {
  if (!std::isfinite(eps0)) throw InputError("epsilon: eps0 must be finite");
  Dispersion d;
  d.kind_ = Kind::constant;
  d.a_ = eps0;
  return d;
}

Dispersion Dispersion::relativistic(double mass, double shift) {
  if (!std::isfinite(mass) || !std::isfinite(shift))
    throw InputError("epsilon: mass and shift must be finite");
  Dispersion d;
  d.kind_ = Kind::relativistic;
  d.a_ = mass;
  d.b_ = shift;
  return d;
}

Dispersion Dispersion::tabulated(std::vector<double> radii, std::vector<double> values) {
  if (radii.size() != values.size())
    throw InputError("epsilon table: radii and values differ in length");
  if (radii.size() < 4) throw InputError("epsilon table: need at least four knots");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!std::isfinite(radii[i]) || !std::isfinite(values[i]))
      throw InputError("epsilon table: non-finite entry at row " + std::to_string(i));
    if (radii[i] < 0.0) throw InputError("epsilon table: negative radius");
    if (i > 0 && !(radii[i] > radii[i - 1]))
      throw InputError("epsilon table: radii must be strictly increasing");
  }
  Dispersion d;
  d.kind_ = Kind::tabulated;
  d.table_ = std::make_shared<const Table>(std::move(radii), std::move(values));
  return d;
}

double Dispersion::operator()(double r) const {
  switch (kind_) {
    case Kind::constant:
      return a_;
    case Kind::relativistic:
      return std::sqrt(r * r + a_ * a_) + b_;
    case Kind::tabulated: {
      const Table& t = *table_;
      if (r <= t.x0) return t.y0 + t.s0 * (r - t.x0);
      if (r >= t.x1) return t.y1 + t.s1 * (r - t.x1);
      return t.spline(r);
    }
  }
  return 0.0;
}

double Dispersion::of_sq(double r2) const {
  switch (kind_) {
    case Kind::constant:
      return a_;
    case Kind::relativistic:
      return std::sqrt(r2 + a_ * a_) + b_;
    case Kind::tabulated:
      return (*this)(std::sqrt(r2));
  }
  return 0.0;
}

double Dispersion::derivative(double r) const {
  switch (kind_) {
    case Kind::constant:
      return 0.0;
    case Kind::relativistic:
      return r / std::sqrt(r * r + a_ * a_);
    case Kind::tabulated: {
      const Table& t = *table_;
      if (r <= t.x0) return t.s0;
      if (r >= t.x1) return t.s1;
      return t.spline.prime(r);
    }
  }
  return 0.0;
}

const std::vector<double>& Dispersion::knots() const {
  static const std::vector<double> empty;
  return table_ ? table_->x : empty;
}

const std::vector<double>& Dispersion::knot_values() const {
  static const std::vector<double> empty;
  return table_ ? table_->y : empty;
}

std::string Dispersion::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::constant:
      os << "constant(eps0=" << a_ << ")";
      break;
    case Kind::relativistic:
      os << "relativistic(mass=" << a_ << ", shift=" << b_ << ")";
      break;
    case Kind::tabulated:
      os << "tabulated(" << table_->x.size() << " knots)";
      break;
  }
  return os.str();
}

Coupling Coupling::gaussian(double amplitude, double width) {
  if (!std::isfinite(amplitude)) throw InputError("coupling: amplitude must be finite");
  if (!(width > 0.0) || !std::isfinite(width)) throw InputError("coupling: width must be > 0");
  Coupling c;
  c.kind_ = Kind::gaussian;
  c.amp_ = amplitude;
  c.width_ = width;
  return c;
}

Coupling Coupling::gaussian_modulated(double amplitude, double width, double scale) {
  Coupling c = gaussian(amplitude, width);
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw InputError("coupling: modulation scale must be > 0");
  c.kind_ = Kind::gaussian_modulated;
  c.scale_ = scale;
  return c;
}

double Coupling::profile_sq(double q2) const {
  return amp_ * std::exp(-q2 / (2.0 * width_ * width_));
}

double Coupling::modulation_sq(double p2) const {
  if (kind_ == Kind::gaussian) return 1.0;
  return 1.0 / (1.0 + p2 / (scale_ * scale_));
}

double Coupling::operator()(VecView P, VecView Q) const {
  return profile_sq(norm2(Q)) * modulation_sq(norm2(P));
}

double Coupling::envelope(double r) const { return std::abs(profile_sq(r * r)); }

double Coupling::envelope_norm_sq(int dim) const {
  // integral of A^2 exp(-r^2/w^2) over R^d
  return amp_ * amp_ * std::pow(std::numbers::pi * width_ * width_, 0.5 * dim);
}

std::string Coupling::describe() const {
  std::ostringstream os;
  os << (kind_ == Kind::gaussian ? "gaussian" : "gaussian-modulated") << "(amplitude=" << amp_
     << ", width=" << width_;
  if (kind_ == Kind::gaussian_modulated) os << ", scale=" << scale_;
  os << ")";
  return os.str();
}

void ModelParams::check() const {
  if (dim < 1) throw InputError("model: dimension must be >= 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InputError("model: alpha must be >= 0");
  if (!(c0 > 0.0) || !std::isfinite(c0)) throw InputError("model: c0 must be > 0");
}

double sphere_area(int dim) {
  double h = 0.5 * dim;
  return 2.0 * std::pow(std::numbers::pi, h) / boost::math::tgamma(h);
}

double free_energy(const ModelParams& params, VecView p, const std::vector<Vec>& qs) {
  const std::size_t d = static_cast<std::size_t>(params.dim);
  if (p.size() != d) throw InputError("free_energy: p has wrong dimension");
  Vec k(p.begin(), p.end());
  double e = 0.0;
  for (const Vec& q : qs) {
    if (q.size() != d) throw InputError("free_energy: boson momentum has wrong dimension");
    for (std::size_t i = 0; i < d; ++i) k[i] -= q[i];
    e += params.eps(norm(q));
  }
  return 0.5 * norm2(k) + e;
}

double threshold(const ModelParams& params, int n, VecView p, double tol) {
  if (n < 0) throw InputError("threshold: n must be >= 0");
  if (p.size() != static_cast<std::size_t>(params.dim))
    throw InputError("threshold: p has wrong dimension");
  const double P = norm(p);
  if (n == 0) return 0.5 * P * P;
  // All n momenta equal to t p^ by symmetry and convexity.
  auto f = [&](double t) {
    double k = P - n * t;
    return 0.5 * k * k + n * params.eps(t);
  };
  if (P == 0.0) return f(0.0);
  const double hi = P / n;
  std::uintmax_t max_iter = 500;
  auto [t, v] = boost::math::tools::brent_find_minima(f, 0.0, hi, 26, max_iter);
  if (max_iter >= 500) {
    std::ostringstream os;
    os << "threshold: minimizer did not converge (n=" << n << ", |p|=" << P
       << ", last t=" << t << ", value=" << v << ", iterations=" << max_iter << ")";
    throw NumericError(os.str());
  }
  // Brent may stop a hair inside an interval whose minimum sits at an end.
  v = std::min({v, f(0.0), f(hi)});
  (void)tol;
  return v;
}

bool ValidationReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.informational && !c.passed) return false;
  return true;
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

Vec random_in_ball(std::mt19937_64& rng, int d, double radius) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec v(d);
  for (double& x : v) x = gauss(rng);
  double n = norm(v);
  double r = radius * std::pow(unif(rng), 1.0 / d);
  for (double& x : v) x *= (n > 0.0 ? r / n : 0.0);
  return v;
}

}  // namespace

ValidationReport validate_model(const ModelParams& params, int budget, std::uint64_t seed) {
  ValidationReport rep;
  const double rmax = 10.0;
  const double tol = 1e-10;
  budget = std::max(budget, 16);
  std::mt19937_64 rng(seed);

  {
    ValidationCheck c{"parameters", true, false, ""};
    try {
      params.check();
    } catch (const InputError& e) {
      c.passed = false;
      c.detail = e.what();
    }
    rep.checks.push_back(c);
  }
  {
    ValidationCheck c{"dimension-covered-by-theory", params.dim >= 3, true,
                      params.dim >= 3 ? "" : "results are only established for d >= 3"};
    rep.checks.push_back(c);
  }

  {
    ValidationCheck c{"epsilon-positive", true, false, ""};
    for (int i = 0; i < budget; ++i) {
      double r = rmax * i / (budget - 1);
      double e = params.eps(r);
      if (!(e > 0.0) || !std::isfinite(e)) {
        c.passed = false;
        c.detail = "eps(" + std::to_string(r) + ") = " + std::to_string(e);
        break;
      }
    }
    rep.checks.push_back(c);
  }

  {
    ValidationCheck mono{"epsilon-monotone", true, false, ""};
    ValidationCheck conv{"epsilon-convex", true, false, ""};
    const int n = budget;
    const double h = rmax / n;
    double scale = 1.0;
    for (int i = 0; i <= n; ++i) scale = std::max(scale, std::abs(params.eps(i * h)));
    for (int i = 0; i < n; ++i) {
      double e0 = params.eps(i * h), e1 = params.eps((i + 1) * h);
      if (mono.passed && e1 - e0 < -tol * scale) {
        mono.passed = false;
        mono.detail = "decrease at r=" + std::to_string(i * h);
      }
      if (i > 0) {
        double em = params.eps((i - 1) * h);
        if (conv.passed && e1 - 2.0 * e0 + em < -tol * scale) {
          conv.passed = false;
          conv.detail = "negative second difference at r=" + std::to_string(i * h);
        }
      }
    }
    rep.checks.push_back(mono);
    rep.checks.push_back(conv);
  }

  {
    ValidationCheck c{"gap-inequality", true, false, ""};
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < budget; ++i) {
      Vec q1 = random_in_ball(rng, params.dim, rmax);
      Vec q2 = random_in_ball(rng, params.dim, rmax);
      Vec s = add(q1, q2);
      double slack = params.eps(norm(q1)) + params.eps(norm(q2)) - params.eps(norm(s)) - params.c0;
      worst = std::min(worst, slack);
    }
    // pair at the origin is where constant-like dispersions are tightest
    {
      double e = params.eps(0.0);
      worst = std::min(worst, e - params.c0);
    }
    if (worst < -tol) {
      c.passed = false;
      std::ostringstream os;
      os << "min of eps(q1)+eps(q2)-eps(q1+q2)-c0 = " << worst;
      c.detail = os.str();
    }
    rep.checks.push_back(c);
  }

  {
    ValidationCheck c{"envelope-domination", true, false, ""};
    for (int i = 0; i < budget; ++i) {
      Vec P = random_in_ball(rng, params.dim, rmax);
      Vec Q = random_in_ball(rng, params.dim, rmax);
      double v = std::abs(params.coupling(P, Q));
      double h = params.coupling.envelope(norm(Q));
      if (v > h * (1.0 + 1e-12)) {
        c.passed = false;
        c.detail = "|c| exceeds h at |Q|=" + std::to_string(norm(Q));
        break;
      }
    }
    rep.checks.push_back(c);
  }

  {
    ValidationCheck c{"envelope-monotone", true, false, ""};
    const int n = budget;
    for (int i = 0; i < n; ++i) {
      double r0 = rmax * i / n, r1 = rmax * (i + 1) / n;
      if (params.coupling.envelope(r1) > params.coupling.envelope(r0) * (1.0 + 1e-14)) {
        c.passed = false;
        c.detail = "increase at r=" + std::to_string(r0);
        break;
      }
    }
    rep.checks.push_back(c);
  }

  {
    ValidationCheck c{"envelope-l2-finite", true, false, ""};
    const int d = params.dim;
    auto f = [&](double r) {
      double h = params.coupling.envelope(r);
      return std::pow(r, d - 1) * h * h;
    };
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-12, &err);
    v *= sphere_area(d);
    if (!std::isfinite(v) || err > 1e-6) {
      c.passed = false;
      c.detail = "radial integral of h^2 did not converge";
    } else {
      std::ostringstream os;
      os.precision(17);
      os << "||h||^2 = " << v;
      c.detail = os.str();
    }
    rep.checks.push_back(c);
  }

  return rep;
}

}  // namespace polaron
