#include <gtest/gtest.h>

#include <random>

#include "hypergauss/local.hpp"
#include "support.hpp"

using namespace hypergauss;
using support::random_cov;

namespace {

double quad_value(const Matrix& q, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) s += v[i] * q(i, j) * v[j];
  return s;
}

std::vector<std::vector<double>> positive_grid(int n) {
  return default_grid(std::vector<std::pair<double, double>>(n, {0.0, std::numeric_limits<double>::infinity()}), 5, 30);
}

}  // namespace

TEST(ComplexLocal, BecknerPoint) {
  const double p = 1.5, q = 3.0;
  const auto hp = HyperParams::complex_mode({cplx(0, std::sqrt(p - 1))}, {p}, q / p);
  const ConditionReport r = check_complex_local(hp, BlockCovariance::identity({1}));
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.margin, 0.0, 1e-12);
}

TEST(ComplexLocal, IdentityOperator) {
  const auto hp = HyperParams::complex_mode({cplx(0.0)}, {1.0}, 1.0);
  const ConditionReport r = check_complex_local(hp, BlockCovariance::identity({1}));
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.margin, 0.0, 1e-14);
  // equality along real w
  EXPECT_NEAR(std::abs(r.witness_w[0].imag()), 0.0, 1e-12);
}

TEST(ComplexLocal, CorrelatedCriticalExponents) {
  const double rho = 0.3, p = 2.0, lmin = 1 - rho, lmax = 1 + rho;
  const double q = 1.0 / (lmax * (1.0 - 1.0 / (p * lmin)));
  const cplx z(0, std::sqrt(p * lmin - 1));
  const auto hp = HyperParams::complex_mode({z, z}, {p, p}, q / p);
  const ConditionReport r = check_complex_local(hp, BlockCovariance::correlated_pair(1, rho));
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.margin, 0.0, 1e-9);
}

TEST(ComplexLocal, Errors) {
  EXPECT_THROW(check_complex_local(HyperParams::complex_mode({0.5}, {-1.0}, 1.0), BlockCovariance::identity({1})), DomainError);
  EXPECT_THROW(check_complex_local(HyperParams::complex_mode({0.5, 0.5}, {1.0, 2.0}, 1.0), BlockCovariance::identity({1})),
               DimensionError);
}

TEST(ComplexLocal, ParityAndAlphaMonotone) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pd(0.5, 3.0);
  for (int t = 0; t < 30; ++t) {
    const BlockCovariance cov = random_cov(rng, {1, 2});
    std::vector<cplx> z{cplx(u(rng), u(rng)), cplx(u(rng), u(rng))};
    std::vector<double> p{pd(rng), pd(rng)};
    auto hp = HyperParams::complex_mode(z, p, 1.0);
    const Matrix q = complex_local_matrix(hp, cov);
    const ConditionReport r = check_complex_local(hp, cov);
    std::vector<double> neg = r.witness;
    for (double& x : neg) x = -x;
    EXPECT_DOUBLE_EQ(quad_value(q, r.witness), quad_value(q, neg));
    EXPECT_NEAR(quad_value(q, r.witness), r.margin, 1e-10 * (1 + r.scale));
    double prev = r.margin;
    for (double a = 1.5; a <= 4.0; a += 0.5) {
      hp.alpha = a;
      const double m = check_complex_local(hp, cov).margin;
      EXPECT_LE(m, prev + 1e-12);
      prev = m;
    }
  }
}

TEST(ImaginarySandwich, Examples) {
  const double p = 1.5;
  const auto hp = HyperParams::imaginary_mode({std::sqrt(p - 1)}, {p}, 2.0);
  const ConditionReport r = check_imaginary_sandwich(hp, BlockCovariance::identity({1}));
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.margin, 0.0, 1e-12);

  const auto big = HyperParams::imaginary_mode({0.0, 0.0}, {50.0, 80.0}, 1.0);
  const ConditionReport rb = check_imaginary_sandwich(big, BlockCovariance::identity({1, 1}));
  EXPECT_TRUE(rb.holds);
  EXPECT_GT(rb.margin, 0.9);
  EXPECT_FALSE(rb.note.empty());

  const double rho = 0.4, lmin = 1 - rho, lmax = 1 + rho, pc = 2.5;
  const double q = 1.0 / (lmax * (1.0 - 1.0 / (pc * lmin)));
  const double s = std::sqrt(pc * lmin - 1);
  const ConditionReport rc = check_imaginary_sandwich(HyperParams::imaginary_mode({s, s}, {pc, pc}, q / pc),
                                                      BlockCovariance::correlated_pair(1, rho));
  EXPECT_TRUE(rc.holds);
  EXPECT_NEAR(rc.margin, 0.0, 1e-9);
}

TEST(ImaginarySandwich, AgreesWithComplexForm) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> su(0.1, 1.5), pd(1.0, 4.0), ad(1.0, 2.0);
  int agree = 0, holds = 0;
  for (int t = 0; t < 100; ++t) {
    const BlockCovariance cov = random_cov(rng, {1, 1}, 0.5);
    std::vector<double> s{su(rng), su(rng)}, p{pd(rng), pd(rng)};
    const double alpha = ad(rng);
    const ConditionReport a = check_imaginary_sandwich(HyperParams::imaginary_mode(s, p, alpha), cov);
    const ConditionReport b = check_complex_local(HyperParams::complex_mode({cplx(0, s[0]), cplx(0, s[1])}, p, alpha), cov);
    agree += a.holds == b.holds && (a.margin >= 0) == (b.margin >= 0);
    holds += a.holds;
  }
  EXPECT_EQ(agree, 100);
  EXPECT_GT(holds, 0);
}

TEST(RealLocal, Examples) {
  std::mt19937_64 rng(5);
  const BlockCovariance cov = random_cov(rng, {1, 2});
  // r = 0: cov ⪰ diag(1/p)
  const auto hp0 = HyperParams::real_mode({0.0, 0.0}, {3.0, 4.0}, 2.5);
  Matrix m = cov.matrix();
  m(0, 0) -= 1 / 3.0;
  m(1, 1) -= 1 / 4.0;
  m(2, 2) -= 1 / 4.0;
  EXPECT_NEAR(check_real_local(hp0, cov).margin, min_eigenvalue(m), 1e-12);

  const double p = 1.7, q = 4.2, r = std::sqrt((p - 1) / (q - 1));
  const ConditionReport bn = check_real_local(HyperParams::real_mode({r}, {p}, q / p), BlockCovariance::identity({1}));
  EXPECT_TRUE(bn.holds);
  EXPECT_NEAR(bn.margin, 0.0, 1e-12);
  EXPECT_FALSE(check_real_local(HyperParams::real_mode({r * 1.01}, {p}, q / p), BlockCovariance::identity({1})).holds);

  // p = q: any r passes once pλ_min > 1
  const BlockCovariance pair = BlockCovariance::correlated_pair(1, 0.5);
  for (double rr : {-1.0, -0.3, 0.8, 1.0})
    EXPECT_TRUE(check_real_local(HyperParams::real_mode({rr, rr}, {3.0, 3.0}, 1.0), pair).holds);
}

TEST(RealLocal, AlphaRange) {
  const auto cov = BlockCovariance::identity({1});
  EXPECT_THROW(check_real_local(HyperParams::real_mode({0.3}, {2.0}, 0.5), cov, Direction::forward), HypothesisError);
  EXPECT_THROW(check_real_local(HyperParams::real_mode({0.3}, {2.0}, 2.0), cov, Direction::reverse), HypothesisError);
  EXPECT_NO_THROW(check_real_local(HyperParams::real_mode({0.3}, {-2.0}, -1.0), cov, Direction::forward));
  EXPECT_THROW(HyperParams::real_mode({1.3}, {2.0}, 2.0), DomainError);
}

TEST(CorrelatedBound, Examples) {
  const BlockCovariance cov = BlockCovariance::correlated_pair(1, 0.5);
  EXPECT_NEAR(check_correlated_r_bound(4, 8, 0.0, cov).details[0].second, std::sqrt(1.0 / 3.0), 1e-15);
  EXPECT_EQ(check_correlated_r_bound(3, 3, 0.9, cov).details[0].second, 1.0);
  EXPECT_TRUE(check_correlated_r_bound(4, 8, 0.0, cov).holds);
  EXPECT_THROW(check_correlated_r_bound(1.5, 8, 0.0, cov), HypothesisError);
}

TEST(CorrelatedBound, MatchesRealLocal) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const BlockCovariance cov = random_cov(rng, {1, 1, 1}, 0.5);
    const double p = 1.0 / cov.lambda_min() + 3 * u(rng), q = p + 5 * u(rng);
    const double r = u(rng);
    const bool a = check_correlated_r_bound(p, q, r, cov).margin >= 0;
    const bool b = check_real_local(HyperParams::real_mode({r, r, r}, {p, p, p}, q / p), cov).margin >= -1e-12;
    EXPECT_EQ(a, b) << t;
  }
}

TEST(FbComplex, PowerPairReproducesComplexLocal) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pd(0.5, 3.0), ad(1.0, 3.0);
  for (int t = 0; t < 20; ++t) {
    const BlockCovariance cov = random_cov(rng, {1, 2});
    std::vector<double> p{pd(rng), pd(rng)};
    const double alpha = ad(rng);
    const auto hp = HyperParams::complex_mode({cplx(u(rng), u(rng)), cplx(u(rng), u(rng))}, p, alpha);
    const FunctionPair pair{power_F(alpha), product_of_powers_B(p)};
    const ConditionReport ref = check_complex_local(hp, cov);
    const auto grid = positive_grid(2);
    for (std::size_t i = 0; i < grid.size(); i += 7) {
      const ConditionReport one = check_fb_complex_local(pair, hp, cov, {grid[i]});
      EXPECT_NEAR(one.margin, ref.margin, 1e-9 * (1 + ref.scale));
    }
    const ConditionReport all = check_fb_complex_local(pair, hp, cov, grid);
    EXPECT_EQ(all.holds, ref.holds);
    EXPECT_TRUE(all.convexity_ok);
  }
}

TEST(FbComplex, JensenSideAndConvexity) {
  const auto hp = HyperParams::complex_mode({0.0, 0.0}, {1.0, 1.0}, 1.0);
  const FunctionPair sq{identity_F(), sum_of_squares_B(2)};
  const ConditionReport r = check_fb_complex_local(sq, hp, BlockCovariance::correlated_pair(1, 0.6), positive_grid(2));
  EXPECT_TRUE(r.holds);
  EXPECT_TRUE(r.convexity_ok);
  const FunctionPair concave{power_F(0.5), product_of_powers_B({1.0, 1.0})};
  EXPECT_FALSE(check_fb_complex_local(concave, hp, BlockCovariance::identity({1, 1}), positive_grid(2)).convexity_ok);
}

TEST(FbComplex, RejectsBadDerivatives) {
  InnerFn bad = product_of_powers_B({2.0});
  bad.grad = [](std::span<const double> c) { return std::vector<double>{3.0 * c[0]}; };
  const FunctionPair pair{power_F(2.0), bad};
  EXPECT_THROW(check_fb_complex_local(pair, HyperParams::complex_mode({0.5}, {2.0}, 2.0), BlockCovariance::identity({1}),
                                      positive_grid(1)),
               HypothesisError);
}

TEST(FbReal, PowerPairReproducesRealLocal) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pd(0.5, 3.0), ad(1.0, 3.0);
  for (int t = 0; t < 20; ++t) {
    const BlockCovariance cov = random_cov(rng, {2, 1});
    std::vector<double> p{pd(rng), (t % 3 == 0 ? -1.0 : 1.0) * pd(rng)};
    const double alpha = t % 4 == 0 ? -ad(rng) : ad(rng);
    const auto hp = HyperParams::real_mode({u(rng), u(rng)}, p, alpha);
    const FunctionPair pair{power_F(alpha), product_of_powers_B(p)};
    const ConditionReport ref = check_real_local(hp, cov);
    const auto grid = positive_grid(2);
    for (std::size_t i = 0; i < grid.size(); i += 11)
      EXPECT_NEAR(check_fb_real_local(pair, hp, cov, {grid[i]}).margin, ref.margin, 1e-9 * (1 + ref.scale));
    const ConditionReport all = check_fb_real_local(pair, hp, cov, grid);
    EXPECT_EQ(all.holds, ref.holds);
    EXPECT_TRUE(all.convexity_ok);
  }
}

TEST(FbReal, IdentityIsNoisyJensen) {
  const FunctionPair pair{identity_F(), bilinear_B()};
  const BlockCovariance cov = BlockCovariance::correlated_pair(1, 0.4);
  const auto grid = default_grid({{-1.0, 1.0}, {-1.0, 1.0}}, 5, 20);
  for (double r1 : {0.0, 0.5})
    for (double r2 : {0.0, -0.5, 0.5}) {
      const auto hp = HyperParams::real_mode({r1, r2}, {1.0, 1.0}, 1.0);
      const ConditionReport a = check_fb_real_local(pair, hp, cov, grid);
      const ConditionReport b = check_gaussian_jensen(pair.B, cov, {r1, r2}, grid);
      EXPECT_EQ(a.holds, b.holds);
    }
}

TEST(FbReal, BorellMatrixInequality) {
  for (double s : {0.2, 0.5, 0.8}) {
    const FunctionPair pair{identity_F(), borell_B(s)};
    const auto hp = HyperParams::real_mode({0.0, 0.0}, {1.0, 1.0}, 1.0);
    const auto grid = default_grid({{0.0, 1.0}, {0.0, 1.0}});
    const ConditionReport r = check_fb_real_local(pair, hp, BlockCovariance::correlated_pair(1, s), grid, Direction::reverse);
    EXPECT_TRUE(r.holds) << s << " " << r.margin;
    EXPECT_FALSE(check_fb_real_local(pair, hp, BlockCovariance::correlated_pair(1, s), grid, Direction::forward).holds);
  }
}

TEST(GaussianJensen, Examples) {
  const auto grid = default_grid({{0.0, 2.0}, {0.0, 2.0}}, 4, 10);
  EXPECT_TRUE(check_gaussian_jensen(sum_of_squares_B(2), BlockCovariance::identity({1, 1}), {0, 0}, grid).holds);
  for (double rho : {0.0, 0.3, -0.6}) {
    const ConditionReport r = check_gaussian_jensen(bilinear_B(), BlockCovariance::correlated_pair(1, rho), {0, 0}, grid);
    EXPECT_NEAR(r.margin, -std::abs(rho), 1e-14);
    EXPECT_EQ(r.holds, rho == 0.0);
  }
}

TEST(GaussianJensen, NoisyBorellSubstitution) {
  const double r1 = 0.4, r2 = -0.3;
  for (double s : {-0.6, 0.6}) {
    const double rho = s * std::sqrt((1 - r1 * r1) * (1 - r2 * r2)) / (1 - r1 * r2);
    const auto d = s > 0 ? Direction::reverse : Direction::forward;
    const ConditionReport r = check_gaussian_jensen(borell_B(s), BlockCovariance::correlated_pair(1, rho), {r1, r2},
                                                    default_grid({{0.0, 1.0}, {0.0, 1.0}}), d);
    EXPECT_TRUE(r.holds) << r.margin;
  }
}
