#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "polaron/friedrichs.hpp"
#include "polaron/lambda2.hpp"
#include "polaron/model.hpp"
#include "polaron/quadrature.hpp"
#include "polaron/roots.hpp"
#include "polaron/selfenergy.hpp"

namespace polaron {

// An absolute cap, or lambda_1^0 + f (lambda2_proxy - lambda_1^0).
struct KappaRule {
  enum class Kind { absolute, gap_fraction };
  Kind kind = Kind::gap_fraction;
  double value = 0.9;

  static KappaRule absolute(double k) { return {Kind::absolute, k}; }
  static KappaRule fraction(double f) { return {Kind::gap_fraction, f}; }
  std::string describe() const;
};

struct BranchOptions {
  double tol = 1e-12;     // residual tolerance, relative to 1 + |xi|
  double margin = 1e-6;   // lower bound on two-boson denominators
  std::optional<double> lambda2_margin;  // empty: default rule
  double lambda2_margin_factor = 10.0;   // the 10 in max(10 alpha^2 ||h||^2, 1e-3)
  int neumann_order = 1;
  RootMethod method = RootMethod::toms748;
};

enum class BranchStatus { converged, none, capped };
std::string to_string(BranchStatus s);

struct BranchPoint {
  Vec q;
  double xi = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  BranchStatus status = BranchStatus::none;
};

// Cap data resolved at one total momentum.
struct Cap {
  double kappa = 0.0;
  double lambda1_free = 0.0;
  Lambda2Proxy lambda2;
};

struct DomainMap {
  std::vector<Vec> grid;
  std::vector<bool> membership;
  std::vector<Vec> directions;
  std::vector<double> boundary;  // one radius per direction, measured from `center`
  Vec center;
  std::optional<double> kappa;
  std::vector<BranchPoint> table;  // solved points for members, aligned with grid
};

struct Lambda1Result {
  double value = 0.0;
  Vec argmin;
  int evaluations = 0;
};

struct GroundState {
  Vec p;
  BranchPoint point;        // q unused; residual is |Delta_xi(xi)|
  double lambda1 = 0.0;
  double top = 0.0;         // highest xi tried
  double eigen_residual = std::numeric_limits<double>::quiet_NaN();  // |e_p(xi) - xi|
  double kappa = 0.0;
};

struct GapSample {
  double delta = 0.0;
  double radius = 0.0;
  double lambda1 = 0.0;
  double xi0 = 0.0;
  double gap = 0.0;
  BranchStatus status = BranchStatus::none;
};

struct BoundaryResult {
  bool conclusive = false;
  std::string note;
  double radius = std::numeric_limits<double>::quiet_NaN();
  int evaluations = 0;
  std::vector<GapSample> ladder;
};

struct GammaResult {
  Vec k;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double gamma_alt = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  BranchStatus status = BranchStatus::none;
  BranchPoint first, second;
  Vec p_alt, q_alt;
};

// Branch computations for one model and one rule. Immutable after
// construction; const member functions may run concurrently.
class BranchSolver {
 public:
  BranchSolver(const ModelParams& params, const QuadratureSpec& quad, BranchOptions opts = {});

  const ModelParams& params() const { return params_; }
  const QuadratureSpec& quad() const { return se_->quad(); }
  const BranchOptions& options() const { return opts_; }
  const SelfEnergy& selfenergy() const { return *se_; }

  Lambda2Proxy lambda2(VecView p) const;
  // Resolves the rule at p and checks kappa <= lambda2_proxy - margin.
  Cap cap(VecView p, const KappaRule& rule) const;

  BranchPoint dispersion_point(VecView p, VecView q, double kappa) const;
  DomainMap one_boson_domain(VecView p, double kappa, const std::vector<Vec>& probes,
                             std::vector<Vec> rays = {}) const;
  Lambda1Result lambda1(VecView p, double kappa) const;
  GroundState ground_state(VecView p, double kappa) const;
  // Delta_xi(xi) at the top of the ground-state search; negative exactly
  // when the ground state exists at p.
  double ground_criterion(VecView p, double kappa) const;
  BoundaryResult g0_boundary(VecView direction, const KappaRule& rule,
                             const std::vector<double>& deltas = {0.1, 0.03, 0.01},
                             double r_max = 0.0) const;
  GammaResult gamma_factor(VecView p, VecView q, VecView shift, const KappaRule& rule) const;

  // The reduced operator A_p(xi): e0 = p^2/2, v = c(p-q;q), a = a_eff(xi;.),
  // kernel d2_leading(xi). `edge` is a known lower bound for min a, or NaN.
  FriedrichsData reduced_operator(VecView p, double xi,
                                  double edge = std::numeric_limits<double>::quiet_NaN()) const;

 private:
  void check_cap(VecView p, double kappa) const;
  double axis_minimizer(VecView p, double kappa, double* value) const;
  // Highest xi for the ground-state search and Delta_xi(xi) there.
  double ground_top(VecView p, double lambda1, double* ftop) const;
  double ground_function(VecView p, double xi, double edge) const;

  ModelParams params_;
  BranchOptions opts_;
  std::shared_ptr<const SelfEnergy> se_;
};

// Free-function forms.
BranchPoint dispersion_point(const ModelParams& params, VecView p, VecView q, double kappa,
                             const QuadratureSpec& quad, double tol = 1e-12);
double lambda1(const ModelParams& params, VecView p, double kappa, const QuadratureSpec& quad,
               double tol = 1e-12);
GroundState ground_state(const ModelParams& params, VecView p, double kappa, int neumann_order,
                         const QuadratureSpec& quad, double tol = 1e-12);
double gamma_of(const ModelParams& params, const BranchPoint& pt);

}  // namespace polaron
