#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace polaron {

using Vec = std::vector<double>;
using VecView = std::span<const double>;

inline double dot(VecView a, VecView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(VecView a) { return dot(a, a); }
inline double norm(VecView a) { return std::sqrt(norm2(a)); }

inline Vec sub(VecView a, VecView b) {
  Vec r(a.begin(), a.end());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

inline Vec add(VecView a, VecView b) {
  Vec r(a.begin(), a.end());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

inline Vec scaled(VecView a, double s) {
  Vec r(a.begin(), a.end());
  for (double& x : r) x *= s;
  return r;
}

// Unit vector along a, or e_1 when a vanishes.
inline Vec direction_or_e1(VecView a) {
  Vec u(a.size(), 0.0);
  double n = norm(a);
  if (n > 0.0) {
    for (std::size_t i = 0; i < a.size(); ++i) u[i] = a[i] / n;
  } else if (!u.empty()) {
    u[0] = 1.0;
  }
  return u;
}

}  // namespace polaron
