#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "polaron/model.hpp"
#include "polaron/vec.hpp"

namespace polaron {

// Uniform centered lattice in [-L, L]^d with M points per axis.
struct DiscreteMeasure {
  int dim = 0;
  double half_width = 0.0;
  int points_per_axis = 0;
  double weight = 0.0;
  std::vector<double> coords;  // size() rows of dim entries

  std::size_t size() const { return dim > 0 ? coords.size() / dim : 0; }
  VecView point(std::size_t i) const { return VecView(coords.data() + i * dim, dim); }
  double total_weight() const { return weight * static_cast<double>(size()); }
  // Even M leaves q = 0 off the lattice.
  bool excludes_origin() const { return points_per_axis % 2 == 0; }
  // Coordinate index along one axis of lattice row i.
  int axis_index(std::size_t i, int axis) const;
  // Row of the point with the given per-axis indices.
  std::size_t row_of(const std::vector<int>& idx) const;
};

DiscreteMeasure grid_measure(double half_width, int points_per_axis, int dim,
                             std::size_t max_points = std::size_t(1) << 22);

struct QuadratureSpec {
  int radial_nodes = 64;
  int angular_degree = 17;
  double rmax = 0.0;  // 0 means "from the coupling envelope"
  std::shared_ptr<const DiscreteMeasure> measure;

  bool discrete() const { return static_cast<bool>(measure); }
  static QuadratureSpec on_measure(DiscreteMeasure m);
  // Roughly half the nodes in every direction; used for error estimates.
  QuadratureSpec coarsened() const;
};

// Radius where h^2 has dropped to 1e-14 of h(0)^2.
double envelope_cutoff(const Coupling& c);
QuadratureSpec resolve_cutoff(QuadratureSpec spec, const Coupling& c);

struct Rule1D {
  std::vector<double> x, w;
  std::size_t size() const { return x.size(); }
};

Rule1D gauss_legendre(int n, double a, double b);
// Nodes and weights for the weight (1 - x^2)^a on [-1, 1], a > -1.
Rule1D gauss_gegenbauer(int n, double a);

// Rule on the unit sphere S^{dim-1} in R^dim; points stored row-major.
struct SphereRule {
  int dim = 0;
  std::vector<double> points;
  std::vector<double> weights;
  std::size_t size() const { return weights.size(); }
};
SphereRule sphere_rule(int dim, int degree);

// Radial times polar-angle rule for integrands that depend only on |q| and
// the angle to one axis. wr carries r^{d-1}; wx carries |S^{d-2}|.
struct AxialRule {
  int dim = 0;
  std::vector<double> r, wr;
  std::vector<double> x, wx;
};
AxialRule axial_rule(int dim, const QuadratureSpec& spec);

// Concrete nodes of a rule. In continuum mode the nodes come in rings
// (fixed radius and polar angle about `axis`); an axially symmetric
// function is constant on each ring. In discrete mode every lattice point
// is its own ring.
class NodeSet {
 public:
  static NodeSet build(const QuadratureSpec& spec, int dim, VecView axis);

  int dim() const { return dim_; }
  std::size_t size() const { return weights_.size(); }
  VecView node(std::size_t i) const { return VecView(coords_.data() + i * dim_, dim_); }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& coords() const { return coords_; }
  const std::vector<double>& weights() const { return weights_; }

  std::size_t orbits() const { return offsets_.size() - 1; }
  std::size_t orbit_begin(std::size_t k) const { return offsets_[k]; }
  std::size_t orbit_end(std::size_t k) const { return offsets_[k + 1]; }
  std::size_t orbit_of(std::size_t i) const { return orbit_index_[i]; }
  double orbit_weight(std::size_t k) const { return orbit_weights_[k]; }
  VecView representative(std::size_t k) const { return node(offsets_[k]); }
  const Vec& axis() const { return axis_; }
  bool discrete() const { return discrete_; }

 private:
  int dim_ = 0;
  bool discrete_ = false;
  Vec axis_;
  std::vector<double> coords_, weights_, orbit_weights_;
  std::vector<std::size_t> offsets_, orbit_index_;
};

struct Integral {
  double value = 0.0;
  double error = 0.0;
};

using ScalarField = std::function<double(VecView)>;

Integral integrate(const ScalarField& f, int dim, const QuadratureSpec& spec);

// Worst-case summation roundoff for `terms` addends of total magnitude abs_sum.
double roundoff_floor(double abs_sum, std::size_t terms);

}  // namespace polaron
