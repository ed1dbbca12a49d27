#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>

#include <Eigen/Core>

#include "polaron/quadrature.hpp"
#include "polaron/roots.hpp"
#include "polaron/vec.hpp"

namespace polaron {

using PointFunction = std::function<double(VecView)>;
using PointKernel = std::function<double(VecView, VecView)>;
// Tabulates K(R, R') = sum_{j in R'} w_j D(rep_R, q_j) on a node set.
using ReducedKernel = std::function<Eigen::MatrixXd(const NodeSet&)>;

// Scalar level e0 coupled through alpha v to the multiplication operator a
// plus alpha^2 times the kernel D. All functions must be invariant under
// rotations about `axis`; the edge is searched along it.
struct FriedrichsData {
  int dim = 3;
  double e0 = 0.0;
  double alpha = 0.0;
  PointFunction v;
  PointFunction a;
  PointKernel kernel;      // empty: zero kernel
  ReducedKernel reduced;   // optional fast path for the ring tabulation
  PointFunction envelope;  // h for the kernel norm sample; empty: 1
  Vec axis;                // empty: e_1
  double edge = std::numeric_limits<double>::quiet_NaN();  // NaN: locate min of a
  Vec edge_point;
  double margin = 1e-6;
};

struct EigenvalueResult {
  double value = 0.0;
  double residual = 0.0;  // |Delta(value)|
  int iterations = 0;
};

struct FriedrichsDiagnostics {
  bool hessian_positive = false;
  double hessian_min_eigenvalue = 0.0;
  bool envelope_dominates = false;
  double worst_envelope_ratio = 0.0;
};

class NeumannKernel;

class FriedrichsSolver {
 public:
  FriedrichsSolver(FriedrichsData data, const QuadratureSpec& quad);

  const FriedrichsData& data() const { return data_; }
  const NodeSet& nodes() const { return nodes_; }
  double edge() const { return data_.edge; }
  VecView edge_point() const { return data_.edge_point; }
  // Highest z at which Delta is evaluated: the edge itself when every node
  // stays at least `margin` above it, otherwise edge - margin.
  double edge_probe() const;
  double min_node_gap() const;

  double delta(double z, int order = 1) const;
  std::optional<EigenvalueResult> ground_eigenvalue(int order = 1, double tol = 1e-12,
                                                    RootMethod method = RootMethod::toms748) const;
  NeumannKernel neumann_kernel(double z, int n, double budget = 1e10) const;
  double im_delta_edge(double x) const;
  FriedrichsDiagnostics diagnostics(int samples = 200) const;

  // Ring values, exposed for tests and benchmarks.
  const std::vector<double>& ring_v() const { return v_; }
  const std::vector<double>& ring_a() const { return a_; }
  const Eigen::MatrixXd& ring_kernel() const;

 private:
  friend class NeumannKernel;
  void locate_edge();
  void check_z(double z, const char* what) const;

  FriedrichsData data_;
  QuadratureSpec quad_;
  NodeSet nodes_;
  std::vector<double> v_, a_, w_;
  double rmax_ = 0.0;
  mutable std::once_flag kernel_once_;
  mutable Eigen::MatrixXd kernel_;
};

// L_n(z; q, q') of the Neumann expansion of (B - z)^{-1}, B = a + alpha^2 D.
class NeumannKernel {
 public:
  double operator()(VecView q, VecView qp) const;
  int order() const { return n_; }
  double z() const { return z_; }
  // max over a fixed probe set of |L_n(q, q')| / (h(q) h(q'))
  double norm_sample() const { return norm_sample_; }
  const std::vector<Vec>& probes() const { return probes_; }

 private:
  friend class FriedrichsSolver;
  NeumannKernel(const FriedrichsSolver& s, double z, int n, double budget);
  std::vector<double> left_chain(VecView q) const;

  const FriedrichsSolver* s_;
  double z_;
  int n_;
  double budget_;
  std::vector<double> t_;  // 1 / (a - z) on rings
  std::vector<Vec> probes_;
  double norm_sample_ = 0.0;
  struct Cache {
    Vec q;
    std::vector<double> chain;
    bool ring = false;
  };
  mutable std::mutex mu_;
  mutable std::shared_ptr<Cache> cache_;
};

// Free-function forms.
double delta(const FriedrichsData& data, double z, int order, const QuadratureSpec& quad);
std::optional<EigenvalueResult> ground_eigenvalue(const FriedrichsData& data, int order,
                                                  const QuadratureSpec& quad, double tol = 1e-12);
double im_delta_edge(const FriedrichsData& data, double x, const QuadratureSpec& quad);

}  // namespace polaron
