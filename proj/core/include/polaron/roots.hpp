#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace polaron {

enum class RootMethod {
  bisection,  // plain halving, the baseline
  toms748,    // bracketed inverse-cubic steps with bisection fallback
};

struct RootResult {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
};

// Root of f on [lo, hi] with f(lo) >= 0 >= f(hi) or the reverse.
// Stops when the bracket is a few ulps wide, f hits zero, or
// |f| <= ftol * (1 + |x|) with the bracket below xtol.
RootResult bracketed_root(const std::function<double(double)>& f, double lo, double hi, double flo,
                          double fhi, RootMethod method, double ftol = 0.0,
                          int max_iter = 200, const std::string& what = "root");

// Extend a bracket downward from x0 in steps step, 2 step, 4 step, ...
// until pred(f(x)) holds. Returns x and f(x).
struct Expansion {
  double x = 0.0;
  double fx = 0.0;
  int steps = 0;
};
Expansion expand_down(const std::function<double(double)>& f, double x0, double step,
                      const std::function<bool(double)>& pred, int max_steps,
                      const std::string& what);

std::string to_string(RootMethod m);
RootMethod root_method_from_string(const std::string& s);

}  // namespace polaron
