#include "polaron/roots.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "polaron/errors.hpp"

namespace polaron {

namespace {

bool narrow(double a, double b) {
  return std::abs(b - a) <=
         4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)) +
             std::numeric_limits<double>::min();
}

}  // namespace

RootResult bracketed_root(const std::function<double(double)>& f, double lo, double hi, double flo,
                          double fhi, RootMethod method, double ftol, int max_iter,
                          const std::string& what) {
  if (lo > hi) {
    std::swap(lo, hi);
    std::swap(flo, fhi);
  }
  RootResult res;
  if (flo == 0.0) return {lo, 0.0, 0};
  if (fhi == 0.0) return {hi, 0.0, 0};
  if ((flo > 0.0) == (fhi > 0.0)) {
    std::ostringstream os;
    os << what << ": no sign change on [" << lo << ", " << hi << "], f = " << flo << ", " << fhi;
    throw NumericError(os.str());
  }
  auto good = [&](double x, double fx) { return ftol > 0.0 && std::abs(fx) <= ftol * (1.0 + std::abs(x)); };

  if (method == RootMethod::toms748) {
    // The bracket itself is what we trust; the tolerance only decides when to stop.
    std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
    double last_x = lo, last_f = flo;
    auto g = [&](double x) {
      double v = f(x);
      last_x = x;
      last_f = v;
      return v;
    };
    auto tol = [&](double a, double b) {
      return narrow(a, b) || (good(last_x, last_f) && std::abs(b - a) <= 1e-12 * (1.0 + std::abs(a)));
    };
    std::pair<double, double> br;
    try {
      br = boost::math::tools::toms748_solve(g, lo, hi, flo, fhi, tol, iters);
    } catch (const std::exception& e) {
      throw NumericError(what + ": " + e.what());
    }
    res.iterations = static_cast<int>(iters);
    // report the endpoint with the smaller residual
    double fa = (br.first == last_x) ? last_f : f(br.first);
    double fb = (br.second == last_x) ? last_f : f(br.second);
    if (std::abs(fa) <= std::abs(fb)) {
      res.x = br.first;
      res.fx = fa;
    } else {
      res.x = br.second;
      res.fx = fb;
    }
    if (iters >= static_cast<std::uintmax_t>(max_iter) && !good(res.x, res.fx)) {
      std::ostringstream os;
      os << what << ": iteration limit reached, bracket [" << br.first << ", " << br.second << "]";
      throw NumericError(os.str());
    }
    return res;
  }

  double a = lo, b = hi, fa = flo;
  for (int it = 1; it <= max_iter; ++it) {
    double m = 0.5 * (a + b);
    double fm = f(m);
    res = {m, fm, it};
    if (fm == 0.0 || narrow(a, b)) return res;
    if ((fm > 0.0) == (fa > 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
    if (good(m, fm) && std::abs(b - a) <= 1e-12 * (1.0 + std::abs(a))) return res;
  }
  if (good(res.x, res.fx) || narrow(a, b)) return res;
  std::ostringstream os;
  os << what << ": bisection did not converge, bracket [" << a << ", " << b << "]";
  throw NumericError(os.str());
}

Expansion expand_down(const std::function<double(double)>& f, double x0, double step,
                      const std::function<bool(double)>& pred, int max_steps,
                      const std::string& what) {
  double x = x0;
  double h = step;
  for (int k = 0; k <= max_steps; ++k) {
    double fx = f(x);
    if (pred(fx)) return {x, fx, k};
    x -= h;
    h *= 2.0;
  }
  std::ostringstream os;
  os << what << ": bracket expansion failed after " << max_steps << " steps (last x = " << x << ")";
  throw NumericError(os.str());
}

std::string to_string(RootMethod m) { return m == RootMethod::bisection ? "bisection" : "toms748"; }

RootMethod root_method_from_string(const std::string& s) {
  if (s == "bisection") return RootMethod::bisection;
  if (s == "toms748") return RootMethod::toms748;
  throw InputError("unknown root method '" + s + "' (bisection | toms748)");
}

}  // namespace polaron
