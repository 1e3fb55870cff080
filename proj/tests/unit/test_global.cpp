#include <gtest/gtest.h>

#include <random>

#include "hypergauss/global.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace hypergauss;
using support::random_cov;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

HermitePoly one(int dim) { return HermitePoly::constant(dim, 1.0); }

HermitePoly linear(int dim, int coord, cplx c0, cplx c1) {
  HermitePoly f(dim, Basis::hermite);
  f.add_term(MultiIndex::zero(dim), c0);
  std::vector<int> e(dim, 0);
  e[coord] = 1;
  f.add_term(MultiIndex(e), c1);
  return f;
}

HermitePoly hermite_1d(int d) {
  HermitePoly f(1, Basis::hermite);
  f.add_term(MultiIndex{d}, 1.0);
  return f;
}

// Simpson rule for E h(X), X ~ N(0,1), on [−14, 14].
double simpson_normal(const std::function<double(double)>& h, int panels = 40000) {
  const double lo = -14.0, hi = 14.0, w = (hi - lo) / panels;
  double s = 0.0;
  for (int i = 0; i <= panels; ++i) {
    const double x = lo + i * w;
    const double c = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += c * h(x) * norm_pdf(x);
  }
  return s * w / 3.0;
}

}  // namespace

TEST(Comparison, VerdictRules) {
  Comparison c;
  c.method = Method::mc;
  c.lhs = 1.0;
  c.rhs = 1.01;
  c.stderr_ = 0.01;
  settle(c, 1e-9);
  EXPECT_EQ(c.verdict, Verdict::inconclusive);
  c.stderr_ = 0.001;
  settle(c, 1e-9);
  EXPECT_EQ(c.verdict, Verdict::holds);
  c.relation = ">=";
  settle(c, 1e-9);
  EXPECT_EQ(c.verdict, Verdict::violated);
  EXPECT_NEAR(c.margin, -0.01, 1e-15);
  c.method = Method::quadrature;
  c.tainted = true;
  settle(c, 1e-9);
  EXPECT_EQ(c.verdict, Verdict::inconclusive);
}

TEST(ComplexHc, ConstantsGiveEquality) {
  std::mt19937_64 rng(3);
  const BlockCovariance cov = random_cov(rng, {1, 2});
  const HyperParams hp = HyperParams::complex_mode({cplx(0.2, 0.5), cplx(-0.3, 0.1)}, {1.2, 0.7}, 1.6);
  const Comparison c = verify_complex_hc({one(1), one(2)}, hp, cov);
  EXPECT_NEAR(c.lhs, 1.0, 1e-12);
  EXPECT_NEAR(c.rhs, 1.0, 1e-12);
  EXPECT_EQ(c.verdict, Verdict::holds);
}

TEST(ComplexHc, BecknerPointHoldsForRandomPolynomials) {
  std::mt19937_64 rng(17);
  const BlockCovariance cov = BlockCovariance::identity({1});
  const HyperParams hp = HyperParams::complex_mode({cplx(0.0, std::sqrt(0.5))}, {1.5}, 2.0);
  for (int i = 0; i < 10; ++i) {
    const HermitePoly f = oracle::random_poly(rng, 1, 4);
    const Comparison c = verify_complex_hc({f}, hp, cov);
    EXPECT_EQ(c.method, Method::quadrature);
    EXPECT_GE(c.margin, -1e-8) << to_text(f);
  }
}

TEST(ComplexHc, OneDimensionalNormsMatchDirectIntegration) {
  std::mt19937_64 rng(5);
  const HermitePoly f = oracle::random_poly(rng, 1, 3);
  const cplx z(0.1, 0.6);
  const HermitePoly tf = mehler_transform(f, z);
  const HyperParams hp = HyperParams::complex_mode({z}, {1.3}, 1.7);
  const Comparison c = verify_complex_hc({f}, hp, BlockCovariance::identity({1}));
  const double a = simpson_normal([&](double x) { return std::pow(std::abs(evaluate(tf, {cplx(x)})), 1.3 * 1.7); });
  const double b = simpson_normal([&](double x) { return std::pow(std::abs(evaluate(f, {cplx(x)})), 1.3); });
  EXPECT_NEAR(c.lhs, std::pow(a, 1.0 / 1.7), 1e-8);
  EXPECT_NEAR(c.rhs, b, 1e-8);
}

TEST(ComplexHc, CorrelatedBecknerMarginVanishesAtEquality) {
  const double rho = 0.3, p = 2.0;
  const double t = p * (1.0 - rho);
  const double q = 1.0 / ((1.0 - 1.0 / t) * (1.0 + rho));
  const BlockCovariance cov = BlockCovariance::correlated_pair(1, rho);
  const double s = std::sqrt(t - 1.0);
  const HyperParams hp = HyperParams::imaginary_mode({s, s}, {p, p}, q / p);
  std::vector<double> m;
  for (double eps : {0.04, 0.02, 0.01}) {
    const HermitePoly f = linear(1, 0, 1.0, eps);
    const Comparison c = verify_complex_hc({f, f}, hp, cov);
    EXPECT_GE(c.margin, -1e-12) << eps;
    m.push_back(c.margin);
  }
  // second order at the equality point
  EXPECT_NEAR(m[1] / m[0], 0.25, 0.01);
  EXPECT_NEAR(m[2] / m[1], 0.25, 0.01);
}

TEST(ComplexHc, NormsAreMonotoneInAlpha) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 6; ++i) {
    const BlockCovariance cov = random_cov(rng, {1, 1});
    const HermitePoly f = oracle::random_poly(rng, 1, 3), g = oracle::random_poly(rng, 1, 3);
    const std::vector<cplx> z{cplx(0.3, 0.4), cplx(-0.2, 0.5)};
    const double a = 1.0 + 0.5 * i;
    const Comparison lo = verify_complex_hc({f, g}, HyperParams::complex_mode(z, {1.0, 0.8}, a), cov);
    const Comparison hi = verify_complex_hc({f, g}, HyperParams::complex_mode(z, {1.0, 0.8}, a + 0.5), cov);
    EXPECT_LE(lo.lhs, hi.lhs * (1 + 1e-10));
    EXPECT_NEAR(lo.rhs, hi.rhs, 1e-10);
  }
}

TEST(ComplexHc, RejectsBadHypotheses) {
  const BlockCovariance cov = BlockCovariance::identity({1});
  EXPECT_THROW(verify_complex_hc({one(1)}, HyperParams::complex_mode({0.5}, {-1.0}, 2.0), cov), DomainError);
  EXPECT_THROW(verify_complex_hc({one(1)}, HyperParams::complex_mode({0.5}, {1.0}, 0.5), cov), HypothesisError);
  EXPECT_THROW(verify_complex_hc({one(2)}, HyperParams::complex_mode({0.5}, {1.0}, 2.0), cov), DimensionError);
}

TEST(ComplexHc, McAgreesWithQuadrature) {
  std::mt19937_64 rng(29);
  const BlockCovariance cov = random_cov(rng, {1, 1});
  const HermitePoly f = oracle::random_poly(rng, 1, 2), g = oracle::random_poly(rng, 1, 2);
  const HyperParams hp = HyperParams::complex_mode({cplx(0.3, 0.3), cplx(0.5, 0.0)}, {1.0, 1.0}, 1.5);
  const Comparison q = verify_complex_hc({f, g}, hp, cov);
  Budget b;
  b.force_mc = true;
  b.samples = 200000;
  b.seed = 9;
  const Comparison m = verify_complex_hc({f, g}, hp, cov, b);
  EXPECT_EQ(m.method, Method::mc);
  EXPECT_GT(m.stderr_, 0.0);
  EXPECT_LT(std::abs(m.margin - q.margin), 5.0 * m.stderr_);
  const Comparison again = verify_complex_hc({f, g}, hp, cov, b);
  EXPECT_EQ(again.lhs, m.lhs);
}

TEST(RealHc, ZeroNoiseIsReverseHolderProduct) {
  std::mt19937_64 rng(31);
  const BlockCovariance cov = BlockCovariance::correlated_pair(1, 0.3);
  const HermitePoly h1 = oracle::random_poly(rng, 1, 2, false), h2 = oracle::random_poly(rng, 1, 2, false);
  const std::vector<TestFunction> fs{make_shifted_positive(h1, 0.5), make_shifted_positive(h2, 0.3)};
  const std::vector<double> p{3.0, 2.5};
  const Comparison c = verify_real_hc(fs, HyperParams::real_mode({0.0, 0.0}, p, 1.0), cov);
  double lhs = 1.0;
  for (int j = 0; j < 2; ++j) {
    const double mean = simpson_normal([&](double x) { return evaluate_function(fs[j], std::vector<double>{x}).real(); });
    lhs *= std::pow(mean, p[j]);
  }
  EXPECT_NEAR(c.lhs, lhs, 1e-8);
  EXPECT_EQ(c.verdict, Verdict::holds);
}

TEST(RealHc, ConstantsGiveEqualityInBothDirections) {
  std::mt19937_64 rng(37);
  const BlockCovariance cov = random_cov(rng, {1, 2});
  const std::vector<TestFunction> fs{make_exp_linear({0.0}, 2.0), make_exp_linear({0.0, 0.0}, 0.5)};
  const Comparison fwd = verify_real_hc(fs, HyperParams::real_mode({0.3, 0.7}, {1.5, 2.0}, 2.0), cov, Direction::forward);
  const Comparison rev = verify_real_hc(fs, HyperParams::real_mode({0.3, 0.7}, {-1.5, 2.0}, 0.5), cov, Direction::reverse);
  EXPECT_NEAR(fwd.margin, 0.0, 1e-14);
  EXPECT_NEAR(rev.margin, 0.0, 1e-14);
  EXPECT_EQ(rev.relation, ">=");
}

TEST(RealHc, ExpLinearClosedFormMatchesLocalQuadraticForm) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    const BlockCovariance cov = random_cov(rng, {1, 2});
    const std::vector<TestFunction> fs{make_exp_linear({0.4 * g(rng)}, 1.3), make_exp_linear({0.4 * g(rng), 0.4 * g(rng)}, 0.8)};
    std::uniform_real_distribution<double> ur(-0.9, 0.9);
    const HyperParams hp = HyperParams::real_mode({ur(rng), ur(rng)}, {1.0 + std::abs(g(rng)), 0.5 + std::abs(g(rng))}, 1.5);
    const Comparison c = verify_real_hc(fs, hp, cov);
    const auto& a1 = std::get<ExpLinear>(fs[0]).a;
    const auto& a2 = std::get<ExpLinear>(fs[1]).a;
    const std::vector<double> v{hp.p[0] * a1[0], hp.p[1] * a2[0], hp.p[1] * a2[1]};
    const Matrix M = real_local_matrix(hp, cov);
    double quad = 0.0;
    for (int r = 0; r < 3; ++r)
      for (int s = 0; s < 3; ++s) quad += v[r] * M(r, s) * v[s];
    EXPECT_NEAR(std::log(c.rhs) - std::log(c.lhs), quad / 2.0, 1e-9);
  }
}

TEST(RealHc, ExpLinearClosedFormMatchesDirectIntegration) {
  const double a = 0.7, r = 0.6, p = 1.4, alpha = 2.5;
  const Comparison c =
      verify_real_hc({make_exp_linear({a}, 1.0)}, HyperParams::real_mode({r}, {p}, alpha), BlockCovariance::identity({1}));
  const double shift = a * a * (1 - r * r) / 2;
  const double lhs = std::pow(simpson_normal([&](double x) { return std::exp(alpha * p * (r * a * x + shift)); }), 1 / alpha);
  const double rhs = simpson_normal([&](double x) { return std::exp(p * a * x); });
  EXPECT_NEAR(c.lhs, lhs, 1e-10 * lhs);
  EXPECT_NEAR(c.rhs, rhs, 1e-10 * rhs);
}

TEST(RealHc, AdmissibleConfigHoldsForShiftedPositive) {
  std::mt19937_64 rng(43);
  const BlockCovariance cov = BlockCovariance::correlated_pair(1, 0.3);
  const HyperParams hp = HyperParams::real_mode({0.4, 0.4}, {2.5, 2.5}, 1.0);
  ASSERT_TRUE(check_real_local(hp, cov).holds);
  for (int i = 0; i < 5; ++i) {
    const std::vector<TestFunction> fs{make_shifted_positive(oracle::random_poly(rng, 1, 2, false), 0.2),
                                       make_shifted_positive(oracle::random_poly(rng, 1, 2, false), 0.2)};
    EXPECT_EQ(verify_real_hc(fs, hp, cov).verdict, Verdict::holds);
  }
}

TEST(HausdorffYoung, GaussiansGiveRatioOne) {
  const GaussPoly g{one(1), 2.5};
  const Comparison c = verify_hausdorff_young({g, g}, {1.2, 0.8}, 1.3, BlockCovariance::correlated_pair(1, 0.4));
  EXPECT_NEAR(c.lhs, 1.0, 1e-12);
  EXPECT_NEAR(c.rhs, 1.0, 1e-12);
}

TEST(HausdorffYoung, FourierCrossCheckIsTight) {
  std::mt19937_64 rng(47);
  const GaussPoly g{oracle::random_poly(rng, 1, 3), 1.5};
  const Comparison c = verify_hausdorff_young({g}, {1.5}, 2.0, BlockCovariance::identity({1}));
  EXPECT_LT(c.detail("fourier_crosscheck"), 1e-7);
  EXPECT_EQ(c.verdict, Verdict::holds);
}

TEST(HausdorffYoung, OneFunctionFormEqualsBecknerForm) {
  std::mt19937_64 rng(53);
  const HermitePoly f = oracle::random_poly(rng, 1, 4);
  const double p = 1.5, q = 3.0;
  const Comparison hy = verify_hausdorff_young({GaussPoly{f, p}}, {p}, q / p, BlockCovariance::identity({1}));
  const Comparison bk =
      verify_complex_hc({f}, HyperParams::complex_mode({cplx(0.0, std::sqrt(p - 1))}, {p}, q / p), BlockCovariance::identity({1}));
  EXPECT_DOUBLE_EQ(hy.lhs, bk.lhs);
  EXPECT_DOUBLE_EQ(hy.rhs, bk.rhs);
  EXPECT_EQ(hy.verdict, Verdict::holds);
}

TEST(PqHausdorffYoung, SharpConstantIsAttained) {
  const double rho = 0.3, p = 2.0;
  const BlockCovariance cov = BlockCovariance::correlated_pair(1, rho);
  const double t = p * cov.lambda_min();
  const double q = 1.0 / ((1.0 - 1.0 / t) * cov.lambda_max());
  const GaussPoly g{one(1), t};
  const Comparison c = verify_pq_hausdorff_young({g, g}, p, q, cov);
  EXPECT_NEAR(c.detail("ratio"), 1.0, 1e-6);
  EXPECT_NEAR(c.detail("constant"), t, 1e-15);
}

TEST(PqHausdorffYoung, RandomPolynomialsHold) {
  std::mt19937_64 rng(59);
  const double rho = 0.3, p = 2.0;
  const BlockCovariance cov = BlockCovariance::correlated_pair(1, rho);
  const double t = p * cov.lambda_min();
  const double q = 1.0 / ((1.0 - 1.0 / t) * cov.lambda_max());
  for (int i = 0; i < 4; ++i) {
    const Comparison c = verify_pq_hausdorff_young({GaussPoly{oracle::random_poly(rng, 1, 2), t}, GaussPoly{oracle::random_poly(rng, 1, 2), t}}, p, q, cov);
    EXPECT_NE(c.verdict, Verdict::violated);
  }
}

TEST(RhoHausdorffYoung, GaussianEqualityCase) {
  for (double rho : {0.0, 0.3}) {
    const double p = 2.0;
    const double t = p * (1 - rho);
    const double q = 1.0 / ((1.0 - 1.0 / t) * (1 + rho));
    const GaussPoly e{one(1), t};
    const Comparison c = verify_rho_hy(e, e, rho, p, q);
    EXPECT_NEAR(c.detail("ratio"), 1.0, 1e-6) << rho;
  }
}

TEST(RhoHausdorffYoung, HomogeneityKeepsVerdict) {
  std::mt19937_64 rng(61);
  const double rho = 0.2, p = 2.0, t = p * (1 - rho);
  const double q = 1.0 / ((1.0 - 1.0 / t) * (1 + rho));
  const HermitePoly h = oracle::random_poly(rng, 1, 2);
  const GaussPoly f{h, t}, f3{scale(h, 3.0), t};
  const Comparison a = verify_rho_hy(f, f, rho, p, q), b = verify_rho_hy(f3, f3, rho, p, q);
  EXPECT_NEAR(b.lhs / a.lhs, 9.0, 1e-9);
  EXPECT_NEAR(b.rhs / a.rhs, 9.0, 1e-9);
  EXPECT_EQ(a.verdict, b.verdict);
  EXPECT_EQ(a.verdict, Verdict::holds);
}

TEST(RhoHausdorffYoung, NegativeRhoRejected) {
  const GaussPoly e{one(1), 2.0};
  EXPECT_THROW(verify_rho_hy(e, e, -0.2, 2.0, 2.0), DomainError);
}

TEST(LogSobolev, ConstantsGiveZeroOnBothSides) {
  const BlockCovariance cov = BlockCovariance::correlated_pair(1, 0.3);
  const Comparison c = verify_log_sobolev({make_exp_linear({0.0}, 2.0), make_exp_linear({0.0}, 1.0)}, 2.0, cov);
  EXPECT_NEAR(c.lhs, 0.0, 1e-15);
  EXPECT_NEAR(c.rhs, 0.0, 1e-15);
}

TEST(LogSobolev, PrintedFormFailsForNonconstantExponentials) {
  // at a single standard coordinate the generator term is −a²(p−1)e^{p²a²/2}
  const double a = 0.3, p = 2.0;
  const Comparison c = verify_log_sobolev({make_exp_linear({a})}, p, BlockCovariance::identity({1}));
  EXPECT_NEAR(c.detail("generator_term"), -a * a * (p - 1) * std::exp(p * p * a * a / 2), 1e-14);
  EXPECT_EQ(c.verdict, Verdict::violated);
}

TEST(LogSobolev, CorrectedFormDeficitIsFourthOrderAtGrossPoint) {
  for (double a : {0.2, 0.1, 0.05}) {
    const Comparison c =
        verify_log_sobolev({make_exp_linear({a})}, 2.0, BlockCovariance::identity({1}), {}, LogSobolevForm::corrected);
    EXPECT_LE(std::abs(c.margin), 10 * std::pow(a, 4));
    EXPECT_EQ(c.verdict, Verdict::holds);
  }
}

TEST(LogSobolev, IndependentBlocksAddUp) {
  const BlockCovariance cov = BlockCovariance::identity({1, 1});
  const double p = 2.0, a1 = 0.3, a2 = -0.2;
  const Comparison joint =
      verify_log_sobolev({make_exp_linear({a1}), make_exp_linear({a2})}, p, cov, {}, LogSobolevForm::corrected);
  const Comparison s1 = verify_log_sobolev({make_exp_linear({a1})}, p, BlockCovariance::identity({1}), {}, LogSobolevForm::corrected);
  const Comparison s2 = verify_log_sobolev({make_exp_linear({a2})}, p, BlockCovariance::identity({1}), {}, LogSobolevForm::corrected);
  // Ent(XY) = Ent(X)E Y + E X Ent(Y) for independent factors
  const double m1 = std::exp(p * p * a1 * a1 / 2), m2 = std::exp(p * p * a2 * a2 / 2);
  EXPECT_NEAR(joint.lhs, s1.lhs * m2 + s2.lhs * m1, 1e-13);
  EXPECT_NEAR(joint.rhs, s1.rhs * m2 + s2.rhs * m1, 1e-13);
}

TEST(LogSobolev, ShiftedPositiveQuadratureMatchesExactEntropy) {
  std::mt19937_64 rng(67);
  const HermitePoly h = oracle::random_poly(rng, 1, 2, false);
  const TestFunction f = make_shifted_positive(h, 0.5);
  const double p = 2.0;
  const Comparison c = verify_log_sobolev({f}, p, BlockCovariance::identity({1}), {}, LogSobolevForm::corrected);
  auto val = [&](double x) { return evaluate_function(f, std::vector<double>{x}).real(); };
  const double m0 = simpson_normal([&](double x) { return std::pow(val(x), p); });
  const double m1 = simpson_normal([&](double x) { return std::pow(val(x), p) * p * std::log(val(x)); });
  EXPECT_NEAR(c.lhs, m1 - m0 * std::log(m0), 1e-8);
  EXPECT_THROW(verify_log_sobolev({make_polynomial(h)}, p, BlockCovariance::identity({1})), DomainError);
}

TEST(ChaosMoments, FirstChaosMatchesGaussianMoments) {
  const Comparison c = verify_chaos_moments({hermite_1d(1)}, 2.0, 4.0, BlockCovariance::identity({1}), ChaosVariant::real);
  const double expected = std::pow(oracle::abs_moment(4.0), 0.25) / std::pow(oracle::abs_moment(2.0), 0.5);
  EXPECT_NEAR(c.lhs, expected, 1e-8);
  EXPECT_EQ(c.verdict, Verdict::holds);
}

TEST(ChaosMoments, EqualExponentsGiveRatioOne) {
  const Comparison c = verify_chaos_moments({hermite_1d(2)}, 2.0, 2.0, BlockCovariance::identity({1}), ChaosVariant::real);
  EXPECT_NEAR(c.lhs, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(c.rhs, 1.0);
  EXPECT_EQ(c.verdict, Verdict::holds);
}

TEST(ChaosMoments, DegenerateComplexBoundIsFlagged) {
  const Comparison c = verify_chaos_moments({hermite_1d(2)}, 1.0, 3.0, BlockCovariance::identity({1}), ChaosVariant::complex);
  EXPECT_TRUE(std::isinf(c.rhs));
  EXPECT_EQ(c.verdict, Verdict::holds);
  EXPECT_FALSE(c.note.empty());
}

TEST(ChaosMoments, BothBoundsDominateNearGrossRegime) {
  for (double delta : {0.5, 1.0})
    for (int d : {1, 2}) {
      const auto cx = verify_chaos_moments({hermite_1d(d)}, 1 + delta, 2.0, BlockCovariance::identity({1}), ChaosVariant::complex);
      const auto re = verify_chaos_moments({hermite_1d(d)}, 1 + delta, 2.0, BlockCovariance::identity({1}), ChaosVariant::real);
      EXPECT_EQ(cx.verdict, Verdict::holds);
      EXPECT_EQ(re.verdict, Verdict::holds);
    }
}

TEST(ChaosMoments, CorrelatedPairWithinBounds) {
  const BlockCovariance cov = BlockCovariance::correlated_pair(1, 0.5);
  for (int d1 : {1, 2})
    for (int d2 : {1, 2})
      for (auto variant : {ChaosVariant::complex, ChaosVariant::real}) {
        const auto c = verify_chaos_moments({hermite_1d(d1), hermite_1d(d2)}, 2.0, 4.0, cov, variant);
        EXPECT_EQ(c.verdict, Verdict::holds) << d1 << d2;
      }
}

TEST(ChaosMoments, NonHomogeneousRejected) {
  EXPECT_THROW(verify_chaos_moments({linear(1, 0, 1.0, 1.0)}, 2.0, 4.0, BlockCovariance::identity({1}), ChaosVariant::real),
               DomainError);
}

TEST(NoisyBorell, HalfLinesGiveEquality) {
  const IntervalUnion A{{{-kInf, 0.3}}}, B{{{-kInf, -0.5}}};
  const Comparison c = verify_noisy_borell(A, B, 0.4, -0.3, 0.6);
  EXPECT_NEAR(c.margin, 0.0, 1e-6);
}

TEST(NoisyBorell, NoNoiseIsBorellNoiseStability) {
  const IntervalUnion A{{{-1.0, 0.5}, {1.2, 2.0}}}, B{{{-0.3, 0.9}}};
  const Comparison c = verify_noisy_borell(A, B, 0.0, 0.0, 0.5);
  double ga = 0.0, gb = 0.0;
  for (const auto& [a, b] : A.intervals) ga += norm_cdf(b) - norm_cdf(a);
  for (const auto& [a, b] : B.intervals) gb += norm_cdf(b) - norm_cdf(a);
  EXPECT_NEAR(c.rhs, borell_M(ga, gb, 0.5), 1e-12);
  EXPECT_EQ(c.verdict, Verdict::holds);
}

TEST(NoisyBorell, WholeLineGivesOne) {
  const IntervalUnion R{{{-kInf, kInf}}};
  const Comparison c = verify_noisy_borell(R, R, 0.3, 0.2, -0.4);
  EXPECT_NEAR(c.lhs, 1.0, 1e-12);
  EXPECT_NEAR(c.rhs, 1.0, 1e-9);
}

TEST(NoisyBorell, DirectionFollowsSignOfS) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 5; ++i) {
    double a = u(rng), b = u(rng), c = u(rng);
    if (a > b) std::swap(a, b);
    const IntervalUnion A{{{a, b}}}, B{{{-kInf, c}}};
    const Comparison pos = verify_noisy_borell(A, B, 0.3, 0.5, 0.5);
    const Comparison neg = verify_noisy_borell(A, B, 0.3, 0.5, -0.5);
    EXPECT_EQ(pos.relation, "<=");
    EXPECT_EQ(neg.relation, ">=");
    EXPECT_EQ(pos.verdict, Verdict::holds);
    EXPECT_EQ(neg.verdict, Verdict::holds);
  }
}

TEST(Perturbation, ComplexWitnessReproducesLocalFailure) {
  const BlockCovariance cov = BlockCovariance::identity({1});
  const HyperParams hp = HyperParams::complex_mode({cplx(0.0, std::sqrt(0.8))}, {1.5}, 2.0);
  const ConditionReport local = check_complex_local(hp, cov);
  ASSERT_FALSE(local.holds);
  const PerturbationResult r = perturbation_witness(hp, cov, local);
  EXPECT_LT(r.fitted, 0.0);
  EXPECT_LE(r.relative_error, 0.2);
  EXPECT_TRUE(r.certified);
  EXPECT_EQ(r.verdict, Verdict::violated);
}

TEST(Perturbation, RealWitnessReproducesLocalFailure) {
  const BlockCovariance cov = BlockCovariance::correlated_pair(1, 0.5);
  const HyperParams hp = HyperParams::real_mode({0.9, 0.8}, {2.0, 1.5}, 3.0);
  const ConditionReport local = check_real_local(hp, cov);
  ASSERT_FALSE(local.holds);
  const PerturbationResult r = perturbation_witness(hp, cov, local);
  EXPECT_LE(r.relative_error, 0.2);
  EXPECT_TRUE(r.certified);
}

TEST(Perturbation, PositiveDirectionShowsNoViolation) {
  const BlockCovariance cov = BlockCovariance::identity({1});
  const HyperParams hp = HyperParams::complex_mode({cplx(0.0, std::sqrt(0.3))}, {1.5}, 2.0);
  const ConditionReport local = check_complex_local(hp, cov);
  ASSERT_TRUE(local.holds);
  const PerturbationResult r = perturbation_witness(hp, cov, local);
  EXPECT_GE(r.fitted, 0.0);
  EXPECT_EQ(r.verdict, Verdict::holds);
  EXPECT_FALSE(r.certified);
  EXPECT_TRUE(r.matches_local);
}

TEST(Perturbation, GaussianJensenBilinear) {
  const double rho = 0.4;
  const BlockCovariance cov = BlockCovariance::correlated_pair(1, rho);
  const FunctionPair pair{identity_F(), bilinear_B()};
  const HyperParams hp = HyperParams::real_mode({0.0, 0.0}, {1.0, 1.0}, 1.0);
  const auto grid = default_grid(pair.B.box, 5, 10);
  const ConditionReport local = check_fb_real_local(pair, hp, cov, grid);
  ASSERT_FALSE(local.holds);
  const PerturbationResult r = perturbation_witness_fb(pair, hp, cov, local);
  // E(a₁+εω₁ξ₁)(a₂+εω₂ξ₂) − a₁a₂ = ε²ρω₁ω₂
  const auto& c0 = local.witness_c;
  std::vector<double> d = detail::normalizer(pair.B.value(c0), pair.B.grad(c0));
  const double expected = rho * d[0] * local.witness[0] * d[1] * local.witness[1];
  EXPECT_NEAR(r.fitted, expected, 1e-6 * std::abs(expected));
  EXPECT_TRUE(r.certified);
  EXPECT_EQ(r.verdict, Verdict::violated);
}
