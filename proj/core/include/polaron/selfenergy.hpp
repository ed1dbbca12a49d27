#pragma once

#include <optional>

#include <Eigen/Core>

#include "polaron/model.hpp"
#include "polaron/quadrature.hpp"
#include "polaron/vec.hpp"

namespace polaron {

struct SelfEnergyPoint {
  Vec p, q;
  double xi = 0.0;
  double m = 0.0;
  int order = 2;
  double error = 0.0;  // quadrature error estimate
};

// Leading self-energy m2, effective energy a_eff and the kernels b2, d2
// for one model and one integration rule. Tables for the rule are built
// once; all queries are const and safe to share between threads.
class SelfEnergy {
 public:
  SelfEnergy(const ModelParams& params, const QuadratureSpec& quad, double margin = 1e-6);

  const ModelParams& params() const { return params_; }
  const QuadratureSpec& quad() const { return quad_; }
  double margin() const { return margin_; }

  // -alpha^2 int |c(p-q-q';q')|^2 / (e2(q,q') - xi) dq'
  double m2(VecView p, double xi, VecView q) const;
  SelfEnergyPoint m2_point(VecView p, double xi, VecView q) const;
  double a_eff(VecView p, double xi, VecView q) const;

  double b2_leading(VecView p, double z, VecView q1, VecView q) const;
  double d2_leading(VecView p, double xi, VecView q, VecView qp) const;
  // c(p - q; q), the channel function of the reduced operator
  double channel(VecView p, VecView q) const;
  double e1(VecView p, VecView q) const;

  // K(R, R') = sum over nodes j of ring R' of w_j d2_leading(rep_R, q_j).
  // Exact ring reduction of the kernel integral for axially symmetric
  // right-hand sides when the node set is built around p.
  Eigen::MatrixXd reduced_kernel(VecView p, double xi, const NodeSet& nodes) const;

 private:
  double sum_continuum(double k2, double eq, double xi, bool coarse) const;
  double sum_discrete(VecView k, double k2, double eq, double xi) const;
  [[noreturn]] void margin_violation(const char* what, double den) const;

  ModelParams params_;
  QuadratureSpec quad_;
  double margin_;

  struct Radial {
    AxialRule rule;
    std::vector<double> g2, eps, r2;
  };
  Radial fine_, coarse_;
  std::vector<double> d_g2_, d_eps_, d_q2_;
};

// Free-function forms; each builds a temporary evaluator.
SelfEnergyPoint m2(const ModelParams& params, VecView p, double xi, VecView q,
                   const QuadratureSpec& quad);
double a_eff(const ModelParams& params, VecView p, double xi, VecView q, const QuadratureSpec& quad);
double b2_leading(const ModelParams& params, VecView p, double z, VecView q1, VecView q);
double d2_leading(const ModelParams& params, VecView p, double xi, VecView q, VecView qp);

struct ContractionReport {
  double kappa = 0.0;
  double lambda2 = 0.0;  // the proxy used in place of lambda_2(p)
  double h_norm = 0.0;
  double bound_q = 0.0;
  double bound_gamma = 0.0;
  double alpha0_q = 0.0;
  double alpha0_gamma = 0.0;
  bool alpha_exceeds_q = false;
  bool alpha_exceeds_gamma = false;
};

ContractionReport contraction_bounds(double alpha, double h_norm, double c0, double lambda2,
                                     double kappa);
// lambda_2 replaced by lambda2_proxy(params, p, margin)
ContractionReport contraction_bounds(const ModelParams& params, VecView p, double kappa,
                                     std::optional<double> lambda2_margin = std::nullopt);

}  // namespace polaron
