#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "polaron/branches.hpp"
#include "polaron/model.hpp"
#include "polaron/quadrature.hpp"

namespace polaron {

// Occupancy state on the lattice: vacuum, one boson in mode i, or two
// bosons in modes i <= j.
struct FockState {
  int n = 0;
  int i = -1;
  int j = -1;
};

// H_p restricted to at most n_max bosons, in the orthonormal occupancy
// basis. Rows are assembled independently, so the stored matrix is only
// symmetric if the amplitudes are consistent.
class TruncatedHamiltonian {
 public:
  struct Entry {
    std::size_t col;
    double value;
  };

  Vec p;
  std::shared_ptr<const DiscreteMeasure> measure;
  int n_max = 2;
  std::vector<FockState> basis;
  std::vector<double> diagonal;
  std::vector<std::vector<Entry>> rows;  // off-diagonal entries per row

  std::size_t dim() const { return basis.size(); }
  Eigen::MatrixXd dense(std::size_t max_bytes = std::size_t(1) << 30) const;
  // max |H_ij - H_ji| / max |H|
  double max_asymmetry() const;
  std::size_t index_of(const FockState& s) const;
};

TruncatedHamiltonian build(const ModelParams& params, VecView p, const DiscreteMeasure& measure,
                           int n_max = 2, std::size_t max_states = 200000);

// k lowest eigenvalues, ascending. The matrix is split into one block per
// character of the reflection group that fixes p, so no block is larger
// than about dim / 2^(number of axes with p_a = 0).
std::vector<double> low_spectrum(const TruncatedHamiltonian& h, std::size_t k,
                                 std::size_t max_bytes = std::size_t(1) << 30);

// Lowest eigenvalue. With nonnegative couplings only the symmetric block
// is diagonalized (sector_dim is its size); otherwise the minimum over all
// blocks is taken and sector_dim is 0.
struct GroundEnergy {
  double value = 0.0;
  std::size_t sector_dim = 0;
  int group_order = 1;
  bool reduced = false;
};
GroundEnergy ground_energy(const TruncatedHamiltonian& h,
                           std::size_t max_bytes = std::size_t(1) << 30);

// Row-major float64 with a header of two little-endian uint64 (rows, cols).
void write_matrix_dump(const TruncatedHamiltonian& h, const std::string& path,
                       std::size_t max_bytes = std::size_t(1) << 30);
Eigen::MatrixXd read_matrix_dump(const std::string& path);

struct GroundComparisonRow {
  double alpha = 0.0;
  double oracle = 0.0;
  double solver = 0.0;
  double difference = 0.0;
  double ratio = 0.0;  // difference / alpha^4
  BranchStatus status = BranchStatus::none;
  double kappa = 0.0;
  double lambda2 = 0.0;
  std::size_t sector_dim = 0;
};

struct GroundComparison {
  std::vector<GroundComparisonRow> rows;
  // successive difference ratios d(alpha_k) / d(alpha_{k+1})
  std::vector<double> reduction_factors() const;
};

GroundComparison compare_ground(const ModelParams& params, VecView p, const DiscreteMeasure& measure,
                                const KappaRule& rule, const std::vector<double>& alphas,
                                BranchOptions opts = {});

struct DispersionComparison {
  double xi = 0.0;
  double nearest = 0.0;
  double gap = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t occupancy = 0;
  bool matched = false;
  BranchStatus status = BranchStatus::none;
};

DispersionComparison compare_dispersion(const ModelParams& params, VecView p,
                                        const DiscreteMeasure& measure, double kappa,
                                        std::size_t q_index, int n_max = 2,
                                        BranchOptions opts = {});

}  // namespace polaron
