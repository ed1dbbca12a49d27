#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "polaron/vec.hpp"

namespace polaron {

// Boson dispersion, radial in q.
class Dispersion {
 public:
  enum class Kind { constant, relativistic, tabulated };

  static Dispersion constant(double eps0);
  // sqrt(|q|^2 + mass^2) + shift
  static Dispersion relativistic(double mass, double shift);
  // Monotone cubic through (radius, value) knots, at least four of them.
  // Outside the knot range the end slope is continued linearly.
  static Dispersion tabulated(std::vector<double> radii, std::vector<double> values);

  Kind kind() const { return kind_; }
  double operator()(double r) const;
  double of_sq(double r2) const;
  double derivative(double r) const;

  double eps0() const { return a_; }
  double mass() const { return a_; }
  double shift() const { return b_; }
  const std::vector<double>& knots() const;
  const std::vector<double>& knot_values() const;

  std::string describe() const;

 private:
  struct Table;
  Kind kind_ = Kind::constant;
  double a_ = 1.0;
  double b_ = 0.0;
  std::shared_ptr<const Table> table_;
};

// c(P;Q) = g(|Q|) chi(|P|), g(r) = amplitude exp(-r^2 / (2 width^2)).
// The separable kind has chi = 1; the modulated kind has
// chi(P) = 1 / (1 + |P|^2 / scale^2), so |c| <= h := |g| in both cases.
class Coupling {
 public:
  enum class Kind { gaussian, gaussian_modulated };

  static Coupling gaussian(double amplitude, double width);
  static Coupling gaussian_modulated(double amplitude, double width, double scale);

  Kind kind() const { return kind_; }
  bool separable() const { return kind_ == Kind::gaussian; }
  double amplitude() const { return amp_; }
  double width() const { return width_; }
  double scale() const { return scale_; }

  double profile_sq(double q2) const;     // g as a function of |Q|^2
  double modulation_sq(double p2) const;  // chi as a function of |P|^2
  double operator()(VecView P, VecView Q) const;
  double envelope(double r) const;
  // Closed form of the integral of h^2 over R^d.
  double envelope_norm_sq(int dim) const;

  std::string describe() const;

 private:
  Kind kind_ = Kind::gaussian;
  double amp_ = 1.0;
  double width_ = 1.0;
  double scale_ = 1.0;
};

struct ModelParams {
  int dim = 3;
  double alpha = 0.0;
  double c0 = 1.0;
  Dispersion eps = Dispersion::constant(1.0);
  Coupling coupling = Coupling::gaussian(1.0, 1.0);

  // Throws InputError unless dim >= 1, alpha >= 0, c0 > 0.
  void check() const;
  ModelParams with_alpha(double a) const {
    ModelParams m = *this;
    m.alpha = a;
    return m;
  }
};

// 1/2 (p - sum q)^2 + sum eps(q_i)
double free_energy(const ModelParams& params, VecView p, const std::vector<Vec>& qs);

// Minimum of free_energy over n boson momenta.
double threshold(const ModelParams& params, int n, VecView p, double tol = 1e-12);

struct ValidationCheck {
  std::string name;
  bool passed = false;
  bool informational = false;  // reported but not part of the verdict
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_passed() const;
  const ValidationCheck* find(const std::string& name) const;
};

ValidationReport validate_model(const ModelParams& params, int budget = 10000,
                                std::uint64_t seed = 0);

// Surface area of the unit sphere in R^dim.
double sphere_area(int dim);

}  // namespace polaron
