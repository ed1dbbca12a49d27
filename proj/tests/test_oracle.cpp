#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include <Eigen/Eigenvalues>

#include <polaron/errors.hpp>
#include <polaron/friedrichs.hpp>
#include <polaron/oracle.hpp>

using namespace polaron;

namespace {

ModelParams constant_model(int dim, double alpha) {
  ModelParams m;
  m.dim = dim;
  m.alpha = alpha;
  return m;
}

ModelParams skewed_model(int dim, double alpha) {
  ModelParams m = constant_model(dim, alpha);
  m.c0 = 0.5;
  m.eps = Dispersion::relativistic(1.0, 0.5);
  m.coupling = Coupling::gaussian_modulated(1.0, 0.9, 1.5);
  return m;
}

std::vector<double> dense_spectrum(const TruncatedHamiltonian& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense(), Eigen::EigenvaluesOnly);
  Eigen::VectorXd v = es.eigenvalues();
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

TEST(Build, FreeMatrixIsDiagonal) {
  ModelParams m = constant_model(1, 0.0);
  DiscreteMeasure g = grid_measure(2.0, 3, 1);
  TruncatedHamiltonian h = build(m, Vec{0.0}, g, 2);
  EXPECT_EQ(h.dim(), 1u + 3u + 6u);
  Eigen::MatrixXd d = h.dense();
  EXPECT_EQ((d - Eigen::MatrixXd(d.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(d(0, 0), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double q = g.point(i)[0];
    std::size_t k = h.index_of(FockState{1, int(i), -1});
    EXPECT_DOUBLE_EQ(d(k, k), 0.5 * q * q + 1.0);
  }
  for (std::size_t k = 0; k < h.dim(); ++k) {
    const FockState& s = h.basis[k];
    std::vector<Vec> qs;
    if (s.n >= 1) qs.emplace_back(g.point(s.i).begin(), g.point(s.i).end());
    if (s.n >= 2) qs.emplace_back(g.point(s.j).begin(), g.point(s.j).end());
    EXPECT_EQ(h.diagonal[k], free_energy(m, Vec{0.0}, qs));
  }
  std::vector<double> diag(h.diagonal);
  std::sort(diag.begin(), diag.end());
  EXPECT_EQ(low_spectrum(h, h.dim()), diag);
}

TEST(Build, Hermitian) {
  ModelParams m = skewed_model(2, 0.3);
  TruncatedHamiltonian h = build(m, Vec{0.3, -0.1}, grid_measure(2.5, 5, 2), 2);
  EXPECT_LE(h.max_asymmetry(), 1e-12);
  Eigen::MatrixXd d = h.dense();
  EXPECT_LE((d - d.transpose()).cwiseAbs().maxCoeff(), 1e-12 * d.cwiseAbs().maxCoeff());
}

TEST(Build, SingleModeTwoByTwo) {
  const double alpha = 0.1;
  DiscreteMeasure g = grid_measure(1.0, 1, 1);
  TruncatedHamiltonian h = build(constant_model(1, alpha), Vec{0.0}, g, 1);
  Eigen::MatrixXd d = h.dense();
  ASSERT_EQ(d.rows(), 2);
  EXPECT_EQ(d(0, 0), 0.0);
  EXPECT_EQ(d(1, 1), 1.0);
  EXPECT_NEAR(d(0, 1), alpha * std::sqrt(2.0), 1e-16);
  EXPECT_NEAR(d(1, 0), alpha * std::sqrt(2.0), 1e-16);
  std::vector<double> e = low_spectrum(h, 2);
  EXPECT_NEAR(e[0], (1.0 - std::sqrt(1.08)) / 2.0, 1e-15);
  EXPECT_NEAR(e[0], -0.0196152423, 1e-10);
  EXPECT_NEAR(e[1], (1.0 + std::sqrt(1.08)) / 2.0, 1e-15);
}

TEST(Build, Budget) {
  EXPECT_THROW(build(constant_model(3, 0.1), Vec{0, 0, 0}, grid_measure(3.0, 5, 3), 2, 1000),
               ResourceError);
  TruncatedHamiltonian h = build(constant_model(2, 0.1), Vec{0, 0}, grid_measure(1.0, 3, 2), 2);
  EXPECT_THROW(h.dense(16), ResourceError);
}

TEST(Spectrum, SectorsMatchDenseSolve) {
  for (const Vec& p : {Vec{0.0, 0.0}, Vec{0.4, 0.0}, Vec{0.4, -0.2}}) {
    TruncatedHamiltonian h = build(skewed_model(2, 0.4), p, grid_measure(2.0, 5, 2), 2);
    std::vector<double> all = dense_spectrum(h);
    std::vector<double> low = low_spectrum(h, 12);
    ASSERT_EQ(low.size(), 12u);
    for (std::size_t k = 0; k < low.size(); ++k) EXPECT_NEAR(low[k], all[k], 1e-12) << k;
    GroundEnergy g = ground_energy(h);
    EXPECT_NEAR(g.value, all[0], 1e-12);
  }
}

TEST(Spectrum, SymmetricBlockForPositiveCoupling) {
  TruncatedHamiltonian h = build(constant_model(2, 0.3), Vec{0.0, 0.0}, grid_measure(2.0, 5, 2), 2);
  GroundEnergy g = ground_energy(h);
  EXPECT_TRUE(g.reduced);
  EXPECT_EQ(g.group_order, 4);
  EXPECT_LT(g.sector_dim, h.dim());
  EXPECT_NEAR(g.value, dense_spectrum(h)[0], 1e-12);
}

TEST(Spectrum, FreeGroundAtRest) {
  TruncatedHamiltonian h = build(constant_model(3, 0.0), Vec{0, 0, 0}, grid_measure(2.0, 3, 3), 2);
  EXPECT_EQ(ground_energy(h).value, 0.0);
}

TEST(Spectrum, VariationalInTruncation) {
  ModelParams m = skewed_model(2, 0.5);
  DiscreteMeasure g = grid_measure(2.0, 5, 2);
  double e1 = ground_energy(build(m, Vec{0.2, 0.0}, g, 1)).value;
  double e2 = ground_energy(build(m, Vec{0.2, 0.0}, g, 2)).value;
  EXPECT_LE(e2, e1);
  EXPECT_LT(e2, e1 - 1e-6);
}

TEST(Spectrum, ReflectedMomentum) {
  ModelParams m = skewed_model(2, 0.4);
  DiscreteMeasure g = grid_measure(2.0, 5, 2);
  std::vector<double> a = low_spectrum(build(m, Vec{0.4, 0.2}, g, 2), 8);
  std::vector<double> b = low_spectrum(build(m, Vec{-0.4, -0.2}, g, 2), 8);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(Dump, RoundTrip) {
  TruncatedHamiltonian h = build(skewed_model(1, 0.3), Vec{0.5}, grid_measure(2.0, 5, 1), 2);
  std::filesystem::path f = std::filesystem::temp_directory_path() / "polaron_dump_test.bin";
  write_matrix_dump(h, f.string());
  EXPECT_EQ(std::filesystem::file_size(f), 16u + 8u * h.dim() * h.dim());
  Eigen::MatrixXd back = read_matrix_dump(f.string());
  EXPECT_EQ(back, h.dense());
  std::filesystem::remove(f);
}

TEST(CompareGround, FreeTheoryIsExact) {
  DiscreteMeasure g = grid_measure(3.0, 3, 3);
  GroundComparison c =
      compare_ground(constant_model(3, 0.0), Vec{0, 0, 0}, g, KappaRule::fraction(0.9), {0.0});
  ASSERT_EQ(c.rows.size(), 1u);
  EXPECT_EQ(c.rows[0].difference, 0.0);
  EXPECT_EQ(c.rows[0].oracle, 0.0);
  EXPECT_EQ(c.rows[0].solver, 0.0);
}

TEST(CompareGround, SingleModeRankOneIdentity) {
  // one mode, at most one boson: the 2x2 ground energy solves the same
  // quadratic as the rank-one determinant with a = 1
  DiscreteMeasure g = grid_measure(1.0, 1, 1);
  for (double alpha : {0.05, 0.1, 0.2, 0.4}) {
    ModelParams m = constant_model(1, alpha);
    double oracle = ground_energy(build(m, Vec{0.0}, g, 1)).value;
    FriedrichsData d;
    d.dim = 1;
    d.e0 = 0.0;
    d.alpha = alpha;
    d.v = [](VecView) { return 1.0; };
    d.a = [](VecView) { return 1.0; };
    d.edge = 1.0;
    d.edge_point = Vec{0.0};
    auto e = ground_eigenvalue(d, 0, QuadratureSpec::on_measure(g), 1e-15);
    ASSERT_TRUE(e.has_value());
    double closed = (1.0 - std::sqrt(1.0 + 8.0 * alpha * alpha)) / 2.0;
    EXPECT_NEAR(oracle, closed, 1e-15);
    EXPECT_NEAR(e->value, closed, 1e-14);
  }
}

TEST(CompareDispersion, FreeTheoryMatchesDiagonal) {
  DiscreteMeasure g = grid_measure(2.0, 3, 2);
  ModelParams m = constant_model(2, 0.0);
  std::size_t qi = g.row_of({2, 1});
  DispersionComparison c = compare_dispersion(m, Vec{0.0, 0.0}, g, 1.9, qi, 2);
  EXPECT_TRUE(c.matched);
  EXPECT_EQ(c.status, BranchStatus::converged);
  EXPECT_EQ(c.gap, 0.0);
  EXPECT_EQ(c.xi, 0.5 * norm2(g.point(qi)) + 1.0);
}

TEST(CompareDispersion, SingleModeClosedForm) {
  DiscreteMeasure g = grid_measure(1.0, 1, 1);
  for (double alpha : {0.05, 0.1}) {
    DispersionComparison c = compare_dispersion(constant_model(1, alpha), Vec{0.0}, g, 1.5, 0, 2);
    ASSERT_EQ(c.status, BranchStatus::converged);
    EXPECT_NEAR(c.xi, (3.0 - std::sqrt(1.0 + 8.0 * alpha * alpha)) / 2.0, 1e-12);
    TruncatedHamiltonian h = build(constant_model(1, alpha), Vec{0.0}, g, 2);
    std::vector<double> e = dense_spectrum(h);
    EXPECT_TRUE(c.matched);
    EXPECT_NEAR(c.nearest, e[1], 1e-14);
    EXPECT_LE(c.gap, 2.0 * alpha * alpha);
  }
}

TEST(CompareDispersion, GapLadder) {
  DiscreteMeasure g = grid_measure(3.0, 3, 3);
  std::size_t qi = g.row_of({1, 1, 1});
  std::vector<double> gaps;
  for (double alpha : {0.1, 0.05}) {
    DispersionComparison c =
        compare_dispersion(constant_model(3, alpha), Vec{0, 0, 0}, g, 1.4, qi, 2);
    ASSERT_TRUE(c.matched);
    gaps.push_back(c.gap);
  }
  EXPECT_LE(gaps[1], 1.5 * gaps[0] / 4.0);
}
