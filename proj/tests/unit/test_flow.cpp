#include <gtest/gtest.h>

#include <random>

#include "hypergauss/flow.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace hypergauss;

namespace {

FlowSpec small(FlowSpec s, int nodes = 24) {
  s.budget.nodes = nodes;
  s.budget.inner_nodes = nodes;
  return s;
}

FlowSpec reverse_power_flow(double rho, std::vector<double> p, std::vector<double> r, double alpha,
                            std::vector<TestFunction> fs) {
  return real_flow(FunctionPair{power_F(alpha), product_of_powers_B(p)}, HyperParams::real_mode(r, p, alpha),
                   BlockCovariance::correlated_pair(1, rho), std::move(fs));
}

}  // namespace

TEST(RealFlow, AdmissibleConfigIsNonincreasing) {
  const FlowSpec spec = small(reverse_power_flow(0.4, {0.5, 0.7}, {0.5, -0.3}, 0.8,
                                                 {make_exp_linear({0.4}, 0.6), make_exp_linear({-0.3}, 0.9)}));
  ASSERT_TRUE(check_real_local(spec.params, spec.cov, Direction::reverse).holds);
  const FlowReport rep = certify_monotone(spec);
  EXPECT_TRUE(rep.monotone);
  EXPECT_EQ(rep.direction, "nonincreasing");
  EXPECT_TRUE(rep.endpoints_match) << rep.endpoint_lhs_diff << " " << rep.endpoint_rhs_diff;
  EXPECT_GE(rep.gap, 0.0);
  EXPECT_TRUE(rep.gap_consistent);
  EXPECT_EQ(rep.verdict, Verdict::holds);
}

TEST(RealFlow, EndpointsAreTheHypercontractiveNorms) {
  const std::vector<TestFunction> fs{make_exp_linear({0.4}, 0.6), make_exp_linear({-0.3}, 0.9)};
  const FlowSpec spec = small(reverse_power_flow(0.4, {0.5, 0.7}, {0.5, -0.3}, 0.8, fs));
  const Comparison hc = verify_real_hc(fs, spec.params, spec.cov, Direction::reverse);
  EXPECT_NEAR(real_flow_value(spec, 0.0), std::pow(hc.lhs, 0.8), 1e-9);
  EXPECT_NEAR(real_flow_value(spec, 1.0), std::pow(hc.rhs, 0.8), 1e-9);
}

TEST(RealFlow, LinearBAndIdentityFIsConstant) {
  std::mt19937_64 rng(3);
  const TestFunction f = make_shifted_positive(oracle::random_poly(rng, 1, 2, false), 0.5);
  const FlowSpec spec = small(real_flow(FunctionPair{identity_F(), product_of_powers_B({1.0})}, HyperParams::real_mode({0.6}, {1.0}, 1.0),
                                        BlockCovariance::identity({1}), {f}));
  const FlowProfile prof = flow_profile(spec);
  double mean = 0.0;
  const HermitePoly h = to_hermite(shifted_positive_polynomial(std::get<ShiftedPositive>(f)));
  for (const auto& [b, c] : h.terms())
    if (b.degree() == 0) mean = c.real();
  for (double v : prof.value) EXPECT_NEAR(v, mean, 1e-11);
}

TEST(RealFlow, IndicatorMassIsConserved) {
  const FlowSpec spec = small(real_flow(FunctionPair{identity_F(), product_of_powers_B({1.0})}, HyperParams::real_mode({0.6}, {1.0}, 1.0),
                                        BlockCovariance::identity({1}), {make_interval_union({{-0.5, 1.0}, {1.5, 2.5}})}));
  const FlowProfile prof = flow_profile(spec);
  const double mass = norm_cdf(1.0) - norm_cdf(-0.5) + norm_cdf(2.5) - norm_cdf(1.5);
  for (std::size_t k = 0; k < prof.s.size(); ++k) EXPECT_NEAR(prof.value[k], mass, 1e-10) << prof.s[k];
}

TEST(RealFlow, ConstantFunctionsGiveFlatProfile) {
  const FlowSpec spec = small(reverse_power_flow(0.3, {0.5, 0.5}, {0.2, 0.2}, 0.5,
                                                 {make_exp_linear({0.0}, 0.25), make_exp_linear({0.0}, 0.64)}));
  const FlowReport rep = certify_monotone(spec);
  for (double v : rep.profile.value) EXPECT_NEAR(v, std::pow(0.5 * 0.8, 0.5), 1e-13);
  EXPECT_NEAR(rep.gap, 0.0, 1e-13);
}

TEST(RealFlow, ShiftedPositivePolynomialsMonotone) {
  std::mt19937_64 rng(5);
  const std::vector<TestFunction> fs{make_shifted_positive(oracle::random_poly(rng, 1, 1, false, Basis::hermite, 0.3), 0.5),
                                     make_shifted_positive(oracle::random_poly(rng, 1, 1, false, Basis::hermite, 0.3), 0.5)};
  const FlowSpec spec = small(reverse_power_flow(0.2, {0.5, 0.5}, {0.4, 0.4}, 1.0, fs));
  ASSERT_TRUE(check_real_local(spec.params, spec.cov, Direction::reverse).holds);
  const FlowReport rep = certify_monotone(spec);
  EXPECT_TRUE(rep.monotone);
  EXPECT_TRUE(rep.endpoints_match);
}

TEST(RealFlow, RangeCheckRejectsValuesOutsideTheBox) {
  HermitePoly x(1, Basis::hermite);
  x.add_term(MultiIndex{1}, 1.0);
  const FlowSpec spec = reverse_power_flow(0.3, {0.5, 0.5}, {0.2, 0.2}, 0.5, {make_polynomial(x), make_exp_linear({0.1})});
  EXPECT_THROW(flow_profile(spec), DomainError);
}

TEST(RealFlow, BoundedBoxRecordsAffineMap) {
  const InnerFn B = custom_B(
      "shifted", 1, {{1.0, 3.0}}, [](std::span<const double> c) { return c[0]; },
      [](std::span<const double>) { return std::vector<double>{1.0}; },
      [](std::span<const double>) { return Matrix(1, 1); });
  FlowSpec spec = small(real_flow(FunctionPair{identity_F(), B}, HyperParams::real_mode({0.5}, {1.0}, 1.0),
                                  BlockCovariance::identity({1}), {make_exp_linear({0.0}, 2.0)}));
  const FlowProfile prof = flow_profile(spec);
  ASSERT_EQ(prof.affine.size(), 1u);
  EXPECT_DOUBLE_EQ(prof.affine[0].shift, 1.0);
  EXPECT_DOUBLE_EQ(prof.affine[0].scale, 2.0);
}

TEST(ComplexFlow, BecknerPointIsNondecreasing) {
  std::mt19937_64 rng(11);
  const double p = 1.5, q = 3.0;
  const auto [F, M] = complex_power_pair({p}, q / p);
  const HyperParams hp = HyperParams::complex_mode({cplx(0.0, std::sqrt(p - 1))}, {p}, q / p);
  for (int i = 0; i < 3; ++i) {
    const FlowSpec spec = complex_flow(F, M, hp, BlockCovariance::identity({1}), {oracle::random_poly(rng, 1, 3)});
    const FlowReport rep = certify_monotone(spec);
    EXPECT_TRUE(rep.monotone);
    EXPECT_EQ(rep.direction, "nondecreasing");
    EXPECT_TRUE(rep.endpoints_match) << rep.endpoint_lhs_diff << " " << rep.endpoint_rhs_diff;
    EXPECT_LE(rep.gap, 1e-9);
  }
}

TEST(ComplexFlow, EndpointsMatchComplexHypercontractivity) {
  std::mt19937_64 rng(13);
  const std::vector<double> p{1.2, 0.9};
  const double alpha = 1.4;
  const auto [F, M] = complex_power_pair(p, alpha);
  const HyperParams hp = HyperParams::complex_mode({cplx(0.3, 0.3), cplx(0.0, 0.4)}, p, alpha);
  const BlockCovariance cov = BlockCovariance::correlated_pair(1, 0.3);
  const std::vector<HermitePoly> fs{oracle::random_poly(rng, 1, 2), oracle::random_poly(rng, 1, 2)};
  FlowSpec spec = small(complex_flow(F, M, hp, cov, fs), 60);
  spec.s_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  const Comparison hc = verify_complex_hc(fs, hp, cov);
  const FlowProfile prof = flow_profile(spec);
  // fractional powers of |q| limit the tensor rule; the two-level estimate must cover the gap
  EXPECT_NEAR(prof.value.front(), std::pow(hc.lhs, alpha), 1e-7 + prof.error.front());
  EXPECT_NEAR(prof.value.back(), std::pow(hc.rhs, alpha), 1e-7 + prof.error.back());
  EXPECT_LT(prof.error.back(), 1e-3 * prof.value.back());
}

TEST(ComplexFlow, UnitNoiseWithLinearMIsConstant) {
  std::mt19937_64 rng(17);
  const FlowSpec spec = small(complex_flow(identity_F(), product_of_powers_B({1.0}), HyperParams::complex_mode({1.0}, {2.0}, 1.0),
                                           BlockCovariance::identity({1}), {oracle::random_poly(rng, 1, 3)}));
  const FlowProfile prof = flow_profile(spec);
  for (double v : prof.value) EXPECT_NEAR(v, prof.value.front(), 1e-9 * (1 + std::abs(v)));
}

TEST(ComplexFlow, ConstantPolynomialsGiveFlatProfile) {
  const auto [F, M] = complex_power_pair({1.5, 2.0}, 1.3);
  const FlowSpec spec = small(complex_flow(F, M, HyperParams::complex_mode({cplx(0.2, 0.5), cplx(-0.4, 0.1)}, {1.5, 2.0}, 1.3),
                                           BlockCovariance::correlated_pair(1, 0.5),
                                           {HermitePoly::constant(1, cplx(0.5, 0.5)), HermitePoly::constant(1, 2.0)}),
                              12);
  const FlowReport rep = certify_monotone(spec);
  for (double v : rep.profile.value) EXPECT_NEAR(v, rep.profile.value.front(), 1e-12);
  EXPECT_NEAR(rep.gap, 0.0, 1e-12);
}

TEST(ComplexFlow, FailingLocalConditionBreaksMonotonicityConsistently) {
  const double p = 1.5;
  const auto [F, M] = complex_power_pair({p}, 2.0);
  const HyperParams hp = HyperParams::complex_mode({cplx(0.0, std::sqrt(0.8))}, {p}, 2.0);
  ASSERT_FALSE(check_complex_local(hp, BlockCovariance::identity({1})).holds);
  HermitePoly f = HermitePoly::constant(1, 1.0);
  f.add_term(MultiIndex{1}, cplx(0.0, 0.3));
  const FlowReport rep = certify_monotone(complex_flow(F, M, hp, BlockCovariance::identity({1}), {f}));
  EXPECT_FALSE(rep.monotone);
  EXPECT_GT(rep.gap, 0.0);
  EXPECT_EQ(rep.global.verdict, Verdict::violated);
  EXPECT_TRUE(rep.gap_consistent);
  EXPECT_TRUE(rep.endpoints_match);
}

TEST(FlowNumerics, DoublingNodesIsStable) {
  std::mt19937_64 rng(19);
  // p = 2 and α = 2 keep every stage polynomial, so the rule is exact once it has enough nodes
  const std::vector<double> p{2.0, 2.0};
  const auto [F, M] = complex_power_pair(p, 2.0);
  const HyperParams hp = HyperParams::imaginary_mode({0.4, 0.4}, p, 2.0);
  FlowSpec spec = complex_flow(F, M, hp, BlockCovariance::correlated_pair(1, 0.3),
                               {oracle::random_poly(rng, 1, 2), oracle::random_poly(rng, 1, 2)});
  spec.s_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  spec.budget.estimate_error = false;
  FlowSpec fine = spec;
  spec = small(spec, 20);
  fine = small(fine, 40);
  const FlowProfile a = flow_profile(spec), b = flow_profile(fine);
  for (std::size_t k = 0; k < a.s.size(); ++k) EXPECT_LT(std::abs(a.value[k] - b.value[k]), 1e-6) << a.s[k];
}

TEST(FlowNumerics, PairedSamplingReducesVariance) {
  const std::vector<TestFunction> fs{make_exp_linear({0.4}, 0.6), make_exp_linear({-0.3}, 0.9)};
  FlowSpec spec = reverse_power_flow(0.4, {0.5, 0.7}, {0.5, -0.3}, 0.8, fs);
  spec.budget.force_mc = true;
  spec.budget.samples = 4000;
  spec.budget.inner_nodes = 16;
  const FlowProfile prof = flow_profile(spec);
  EXPECT_EQ(prof.method, Method::mc);
  for (std::size_t k = 0; k + 1 < prof.s.size(); ++k) {
    const double independent = std::hypot(prof.stderr_[k], prof.stderr_[k + 1]);
    EXPECT_LT(prof.pair_stderr[k], independent) << prof.s[k];
  }
  const FlowReport rep = certify_monotone(spec);
  EXPECT_TRUE(rep.monotone);
  EXPECT_TRUE(rep.endpoints_match);
}

TEST(FlowNumerics, RejectsBadGrids) {
  FlowSpec spec = reverse_power_flow(0.3, {0.5, 0.5}, {0.2, 0.2}, 0.5, {make_exp_linear({0.0}), make_exp_linear({0.0})});
  spec.s_grid = {0.0, 0.5, 1.0};
  EXPECT_THROW(flow_profile(spec), DomainError);
  spec.s_grid = {0.0, 0.5, 0.4, 0.8, 1.0};
  EXPECT_THROW(flow_profile(spec), DomainError);
}
