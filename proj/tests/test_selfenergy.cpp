#include <gtest/gtest.h>

#include <cmath>

#include <polaron/errors.hpp>
#include <polaron/selfenergy.hpp>

#include "reference.hpp"

using namespace polaron;

namespace {

ModelParams gaussian_model(double alpha) {
  ModelParams m;
  m.dim = 3;
  m.alpha = alpha;
  return m;
}

ModelParams relativistic_model(double alpha) {
  ModelParams m = gaussian_model(alpha);
  m.c0 = 0.5;
  m.eps = Dispersion::relativistic(1.0, 0.5);
  m.coupling = Coupling::gaussian_modulated(1.0, 1.0, 2.0);
  return m;
}

const Vec zero{0, 0, 0};

}  // namespace

TEST(M2, VanishesWithoutCoupling) {
  EXPECT_EQ(m2(gaussian_model(0.0), zero, 0.0, zero, QuadratureSpec{}).m, 0.0);
  ModelParams m = gaussian_model(0.1);
  m.coupling = Coupling::gaussian(0.0, 1.0);
  EXPECT_EQ(m2(m, zero, 0.0, zero, QuadratureSpec{}).m, 0.0);
}

TEST(M2, OriginMatchesRadialReference) {
  SelfEnergyPoint pt = m2(gaussian_model(0.1), zero, 0.0, zero, QuadratureSpec{});
  EXPECT_NEAR(pt.m, -0.01 * ref::gauss_over_quadratic, 1e-13);
  EXPECT_EQ(pt.order, 2);
  EXPECT_LE(std::abs(pt.m + 0.01 * ref::gauss_over_quadratic), pt.error + 1e-15);
}

TEST(M2, GenericPointMatchesAngularClosedForm) {
  SelfEnergy se(gaussian_model(0.1), QuadratureSpec{});
  Vec p{0.4, 0.3, -0.2}, q{-0.5, 0.1, 0.6};
  double k = norm(sub(p, q));
  for (double xi : {-0.5, 0.3, 1.2}) {
    SelfEnergyPoint pt = se.m2_point(p, xi, q);
    double want = ref::m2_constant_gaussian(0.1, k, xi);
    EXPECT_NEAR(pt.m, want, 1e-9) << xi;
    EXPECT_LE(std::abs(pt.m - want), pt.error) << xi;
  }
}

TEST(M2, NonPositiveAndMonotone) {
  SelfEnergy se(relativistic_model(0.1), QuadratureSpec{});
  Vec p{0.5, 0, 0};
  for (double qx : {-1.0, 0.0, 0.7}) {
    Vec q{qx, 0.2, 0};
    double prev = se.m2(p, -1.0, q);
    EXPECT_LE(prev, 0.0);
    for (double xi = -0.8; xi <= 2.0; xi += 0.2) {
      double cur = se.m2(p, xi, q);
      EXPECT_LE(cur, prev);
      prev = cur;
    }
  }
}

TEST(M2, AlphaSquaredScalingIsExact) {
  QuadratureSpec s;
  Vec p{0.2, 0, 0}, q{0.1, -0.3, 0.4};
  double a = m2(gaussian_model(0.125), p, 0.4, q, s).m;
  double b = m2(gaussian_model(0.25), p, 0.4, q, s).m;
  EXPECT_EQ(4.0 * a, b);
}

TEST(M2, TranslationCovariance) {
  ModelParams m = relativistic_model(0.1);
  SelfEnergy se(m, QuadratureSpec{});
  Vec p{1.0, 0, 0}, q{0.3, 0, 0};
  Vec p2{1.2, 0.1, 0}, q2{0.5, 0.1, 0};
  double xi = 0.9;
  double xi2 = xi + m.eps(norm(q2)) - m.eps(norm(q));
  EXPECT_NEAR(se.m2(p, xi, q), se.m2(p2, xi2, q2), 1e-12);
}

TEST(M2, MarginViolation) {
  SelfEnergy se(gaussian_model(0.1), QuadratureSpec{});
  EXPECT_THROW(se.m2(zero, 2.5, zero), DomainError);
  try {
    se.m2(zero, 2.1, zero);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("margin"), std::string::npos);
  }
}

TEST(M2, DiscreteModeIsLatticeSum) {
  ModelParams m = relativistic_model(0.2);
  DiscreteMeasure g = grid_measure(2.0, 5, 3);
  SelfEnergy se(m, QuadratureSpec::on_measure(g));
  Vec p{0.4, 0, 0}, q{0.8, -0.8, 0};
  double xi = 0.7;
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    VecView qp = g.point(j);
    Vec P = sub(sub(p, q), qp);
    double c = m.coupling(P, qp);
    double e2 = 0.5 * norm2(P) + m.eps(norm(q)) + m.eps(norm(qp));
    s += g.weight * c * c / (e2 - xi);
  }
  EXPECT_NEAR(se.m2(p, xi, q), -0.04 * s, 1e-14 * s);
}

TEST(AEff, FreeAndDecreasing) {
  Vec p{0.3, 0, 0}, q{-0.2, 0.5, 0};
  EXPECT_EQ(a_eff(gaussian_model(0.0), p, 0.3, q, QuadratureSpec{}),
            0.5 * norm2(sub(p, q)) + 1.0);
  SelfEnergy se(gaussian_model(0.1), QuadratureSpec{});
  EXPECT_GT(se.a_eff(p, 0.0, q), se.a_eff(p, 0.5, q));
  EXPECT_NEAR(se.a_eff(p, 0.5, q), se.e1(p, q) + se.m2(p, 0.5, q), 1e-15);
}

TEST(AEff, ShiftIsOnlyThroughFreeEnergy) {
  ModelParams m = relativistic_model(0.1);
  SelfEnergy se(m, QuadratureSpec{});
  Vec p{0.6, 0, 0}, q{0.1, 0, 0}, s{0.3, -0.2, 0};
  Vec p2 = add(p, s), q2 = add(q, s);
  double xi = 0.8, xi2 = xi + m.eps(norm(q2)) - m.eps(norm(q));
  double lhs = se.a_eff(p2, xi2, q2) - se.a_eff(p, xi, q);
  EXPECT_NEAR(lhs, se.e1(p2, q2) - se.e1(p, q), 1e-12);
}

TEST(Kernels, LeadingB2) {
  EXPECT_EQ(b2_leading(gaussian_model(0.0), zero, 0.0, zero, zero), 0.0);
  EXPECT_NEAR(b2_leading(gaussian_model(0.1), zero, 0.0, zero, zero), -0.05, 1e-16);
  ModelParams m = relativistic_model(0.1);
  Vec p{0.5, 0.1, 0}, q1{0.2, -0.4, 0.3}, q{-0.6, 0.2, 0.1};
  double z = 0.4;
  Vec P = sub(sub(p, q1), q);
  double e2 = 0.5 * norm2(P) + m.eps(norm(q1)) + m.eps(norm(q));
  double hand = -0.1 * m.coupling(P, q1) / (e2 - z);
  EXPECT_NEAR(b2_leading(m, p, z, q1, q), hand, 1e-16);
}

TEST(Kernels, LeadingD2) {
  ModelParams m = gaussian_model(0.1);
  m.coupling = Coupling::gaussian(0.0, 1.0);
  EXPECT_EQ(d2_leading(m, zero, 0.0, zero, zero), 0.0);
  EXPECT_NEAR(d2_leading(gaussian_model(0.1), zero, 0.0, zero, zero), -0.5, 1e-16);
  ModelParams r = relativistic_model(0.1);
  Vec p{0.5, 0.1, 0}, q{0.2, -0.4, 0.3}, qp{-0.6, 0.2, 0.1};
  EXPECT_NEAR(d2_leading(r, p, 0.7, q, qp), d2_leading(r, p, 0.7, qp, q), 1e-15);
  EXPECT_THROW(d2_leading(gaussian_model(0.1), zero, 2.0, zero, zero), DomainError);
}

TEST(Kernels, ReducedKernelSumsRings) {
  ModelParams m = relativistic_model(0.1);
  QuadratureSpec s;
  s.rmax = 5.0;
  s.radial_nodes = 8;
  s.angular_degree = 5;
  SelfEnergy se(m, s);
  Vec p{0.7, 0, 0};
  NodeSet ns = NodeSet::build(se.quad(), 3, p);
  Eigen::MatrixXd K = se.reduced_kernel(p, 0.5, ns);
  ASSERT_EQ(static_cast<std::size_t>(K.rows()), ns.orbits());
  for (std::size_t a : {std::size_t(0), ns.orbits() / 2, ns.orbits() - 1})
    for (std::size_t b : {std::size_t(1), ns.orbits() / 3}) {
      double want = 0.0;
      for (std::size_t j = ns.orbit_begin(b); j < ns.orbit_end(b); ++j)
        want += ns.weight(j) * se.d2_leading(p, 0.5, ns.representative(a), ns.node(j));
      EXPECT_NEAR(K(a, b), want, 1e-13 * (1.0 + std::abs(want)));
    }
}

TEST(Contraction, HandArithmetic) {
  ContractionReport r = contraction_bounds(0.1, 1.0, 1.0, 2.0, 1.0);
  EXPECT_NEAR(r.bound_q, 0.1 * std::sqrt(3.0) * 1.5, 1e-15);
  EXPECT_NEAR(r.bound_q, 0.2598076211, 1e-10);
  EXPECT_NEAR(r.bound_gamma, 0.4, 1e-15);
  EXPECT_NEAR(r.alpha0_gamma, 0.125, 1e-15);
  EXPECT_FALSE(r.alpha_exceeds_q);
}

TEST(Contraction, ZeroCoupling) {
  ContractionReport r = contraction_bounds(0.0, std::pow(ref::pi, 0.75), 1.0, 2.0, 1.5);
  EXPECT_EQ(r.bound_q, 0.0);
  EXPECT_EQ(r.bound_gamma, 0.0);
  EXPECT_GT(r.alpha0_q, 0.0);
  EXPECT_GT(r.alpha0_gamma, 0.0);
  EXPECT_TRUE(std::isfinite(r.alpha0_q));
}

TEST(Contraction, AlphaZeroShrinksTowardEdge) {
  double prev_q = INFINITY, prev_g = INFINITY;
  for (double k : {0.5, 1.0, 1.5, 1.9}) {
    ContractionReport r = contraction_bounds(0.1, 1.3, 1.0, 2.0, k);
    EXPECT_LT(r.alpha0_q, prev_q);
    EXPECT_LT(r.alpha0_gamma, prev_g);
    prev_q = r.alpha0_q;
    prev_g = r.alpha0_gamma;
  }
}

TEST(Contraction, ModelFormUsesEnvelopeNorm) {
  ModelParams m = gaussian_model(0.1);
  ContractionReport r = contraction_bounds(m, zero, 1.5, 0.01);
  EXPECT_NEAR(r.h_norm * r.h_norm, std::pow(ref::pi, 1.5), 1e-12);
  EXPECT_NEAR(r.lambda2, 1.99, 1e-12);
}
