#include <array>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mixbound/cantor_blocks.hpp"
#include "mixbound/process_lab.hpp"

using namespace mixbound;
using namespace mixbound::lab;

TEST(Simulate, RademacherSupportAndDeterminism) {
  const auto spec = ProcessSpec::rademacher();
  const auto a = simulate(spec, 500, 42);
  const auto b = simulate(spec, 500, 42);
  const auto c = simulate(spec, 500, 43);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  for (const double v : a.values)
    EXPECT_TRUE(v == 1.0 || v == -1.0);
  EXPECT_EQ(a.seed, 42u);
}

TEST(Simulate, ChainAutocorrelation) {
  const auto path = simulate(ProcessSpec::chain(0.3, 0.3), 400000, 9);
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i + 1 < path.n(); ++i) {
    s0 += path.values[i] * path.values[i];
    s1 += path.values[i] * path.values[i + 1];
  }
  EXPECT_NEAR(s1 / s0, 0.4, 0.01);
}

TEST(Simulate, BoundedAndCentered) {
  const ProcessSpec specs[] = {ProcessSpec::chain(0.2, 0.5, 0.0, 3.0), ProcessSpec::ar1(0.6, 1.0, 0.7),
                               ProcessSpec::uniform(2.0)};
  for (const auto& spec : specs) {
    const auto path = simulate(spec, 20000, 5);
    double mean = 0.0;
    for (const double v : path.values) {
      EXPECT_LE(std::abs(v), spec.bound() + 1e-12) << spec.name();
      mean += v;
    }
    EXPECT_NEAR(mean / double(path.n()), 0.0, 0.08) << spec.name();
  }
  const auto ch = ProcessSpec::chain(0.2, 0.5, 0.0, 3.0);
  EXPECT_NEAR(ch.raw_mean(), 3.0 * 0.2 / 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(ProcessSpec::ar1(0.6, 1.0, 0.7).raw_mean(), 0.0);
  EXPECT_THROW(ProcessSpec::chain(1.2, 0.3), std::invalid_argument);
  EXPECT_THROW(ProcessSpec::ar1(1.0, 1.0, 0.5), std::invalid_argument);
}

TEST(IntervalSum, Embedding) {
  SamplePath p;
  p.values = {1.0, -2.0, 4.0, 0.5};
  EXPECT_DOUBLE_EQ(interval_sum(p, IntervalUnion({{0.0, 4.0}})), 3.5);
  EXPECT_DOUBLE_EQ(interval_sum(p, IntervalUnion({{0.5, 1.5}})), 0.5 * 1.0 + 0.5 * -2.0);
  EXPECT_DOUBLE_EQ(p.at(0.2), 1.0);
  EXPECT_DOUBLE_EQ(p.at(1.0), -2.0);
  EXPECT_THROW(interval_sum(p, IntervalUnion({{0.0, 4.5}})), std::invalid_argument);
  EXPECT_THROW(interval_sum(p, IntervalUnion({{-0.5, 1.0}})), std::invalid_argument);
}

TEST(IntervalSum, AdditiveOverBlockPlanProperty) {
  for (const std::size_t n : {1000u, 10000u, 54321u}) {
    const auto plan = cantor::choose_mdp_blocking(n, std::pow(double(n), -0.25));
    const auto path = simulate(ProcessSpec::chain(0.3, 0.3), n, n);
    double total = 0.0;
    for (const double v : path.values)
      total += v;
    const double blocks = interval_sum(path, plan.blocks);
    const double rest = interval_sum(path, plan.remainder);
    EXPECT_NEAR(blocks + rest, total, 1e-10) << n;
    double per_block = 0.0;
    for (const auto& b : plan.blocks)
      per_block += interval_sum(path, IntervalUnion({b}));
    EXPECT_NEAR(per_block, blocks, 1e-9) << n;
  }
}

TEST(Wilson, Basics) {
  const auto w = wilson_interval(50, 100, 0.95);
  EXPECT_NEAR(w.low, 0.4038, 1e-3);
  EXPECT_NEAR(w.high, 0.5962, 1e-3);
  const auto z = wilson_interval(0, 1000, 0.99);
  EXPECT_DOUBLE_EQ(z.low, 0.0);
  EXPECT_GT(z.high, 0.0);
  EXPECT_LT(z.high, 0.01);
  EXPECT_DOUBLE_EQ(wilson_interval(1000, 1000, 0.99).high, 1.0);
}

TEST(McTail, Examples) {
  const auto spec = ProcessSpec::rademacher();
  const auto zero = mc_tail(spec, 4, 0.0, 1000, 3);
  EXPECT_DOUBLE_EQ(zero.p_hat, 1.0);
  const auto imp = mc_tail(spec, 4, 4.5, 1000, 3);
  EXPECT_DOUBLE_EQ(imp.p_hat, 0.0);
  const auto e = mc_tail(spec, 4, 4.0, 200000, 3);
  EXPECT_LE(e.ci_low, 0.125);
  EXPECT_GE(e.ci_high, 0.125);
  EXPECT_LE(e.ci_low, e.p_hat);
  EXPECT_LE(e.p_hat, e.ci_high);
  EXPECT_THROW(mc_tail(spec, 4, 1.0, 50, 3), std::invalid_argument);
}

TEST(McTail, JobsDoNotChangeTallies) {
  const auto spec = ProcessSpec::chain(0.3, 0.3);
  McOptions one, four;
  four.jobs = 4;
  const auto a = mc_tail(spec, 64, 8.0, 20000, 77, one);
  const auto b = mc_tail(spec, 64, 8.0, 20000, 77, four);
  EXPECT_EQ(a.hits, b.hits);
  const std::array<double, 3> xs{4.0, 8.0, 16.0};
  const auto grid = mc_tail_grid(spec, 64, xs, 20000, 77, four);
  EXPECT_EQ(grid[1].hits, a.hits);
  EXPECT_GE(grid[0].hits, grid[1].hits);
  EXPECT_GE(grid[1].hits, grid[2].hits);
}

TEST(ExactTail, Pins) {
  const auto rad = ProcessSpec::rademacher();
  EXPECT_DOUBLE_EQ(exact_tail_small(rad, 4, 4.0), 0.125);
  EXPECT_DOUBLE_EQ(exact_tail_small(rad, 7, 0.0), 1.0);
  const auto ch = ProcessSpec::chain(0.3, 0.3);
  EXPECT_NEAR(exact_tail_small(ch, 2, 2.0), 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(exact_tail_small(ch, 5, 0.0), 1.0);
  const double n4[] = {0.763, 0.763, 0.343, 0.0};
  const double n8[] = {0.8235115, 0.8235115, 0.4976587, 0.2437015};
  const double n12[] = {0.85361995726, 0.85361995726, 0.5775727951, 0.34697631325};
  const double xs[] = {1.0, 2.0, 4.0, 6.0};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(exact_tail_small(ch, 4, xs[i]), n4[i], 1e-12);
    EXPECT_NEAR(exact_tail_small(ch, 8, xs[i]), n8[i], 1e-12);
    EXPECT_NEAR(exact_tail_small(ch, 12, xs[i]), n12[i], 1e-11);
  }
  EXPECT_THROW(exact_tail_small(ch, 17, 1.0), std::length_error);
  ExactOptions big;
  big.max_chain_n = 18;
  EXPECT_NO_THROW(exact_tail_small(ch, 17, 1.0, big));
  EXPECT_THROW(exact_tail_small(ProcessSpec::uniform(1.0), 4, 1.0), std::invalid_argument);
}

TEST(ExactTail, OneSided) {
  const auto rad = ProcessSpec::rademacher();
  ExactOptions up;
  up.side = TailSide::upper;
  EXPECT_DOUBLE_EQ(exact_tail_small(rad, 4, 4.0, up), 0.0625);
  EXPECT_NEAR(std::exp(rademacher_log_upper_tail(4, 2.0)), 5.0 / 16.0, 1e-15);
  // Log-space tail agrees with the uint64 path where both apply.
  for (const std::size_t n : {10u, 40u, 62u})
    for (const double s : {0.0, 2.0, 10.0, double(n)})
      EXPECT_NEAR(rademacher_log_upper_tail(n, s), std::log(exact_tail_small(rad, n, s, up)), 1e-12);
}

TEST(ExactTail, MatchesMonteCarloCi) {
  const auto ch = ProcessSpec::chain(0.3, 0.3);
  for (const std::size_t n : {4u, 8u, 12u}) {
    const std::vector<double> xs{1.0, 2.0, 4.0, 6.0};
    const auto est = mc_tail_grid(ch, n, xs, 40000, 1000 + n);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double p = exact_tail_small(ch, n, xs[i]);
      EXPECT_LE(est[i].ci_low, p + 1e-12) << n << " " << xs[i];
      EXPECT_GE(est[i].ci_high, p - 1e-12) << n << " " << xs[i];
    }
  }
}

TEST(FiniteAlpha, IndependentAndDependent) {
  const std::vector<double> ind{0.25, 0.25, 0.25, 0.25};
  EXPECT_NEAR(finite_alpha(ind, 2, 2), 0.0, 1e-16);
  const std::vector<double> same{0.5, 0.0, 0.0, 0.5};
  EXPECT_NEAR(finite_alpha(same, 2, 2), 0.25, 1e-16);
}

TEST(ChainAlpha, EnumerationMatchesClosedForm) {
  const TwoStateChain ch{0.3, 0.3};
  for (std::size_t k = 1; k <= 6; ++k)
    EXPECT_NEAR(chain_alpha_enumerated(ch, k, 2), 0.25 * std::pow(0.4, double(k)), 1e-14) << k;
}

TEST(Ibragimov, Examples) {
  const TwoStateChain ch{0.3, 0.3};
  const std::vector<TrajectoryFunctional> f{
      [](std::span<const int> s) { return s[0] == 1 ? 1.0 : 0.0; },
      [](std::span<const int> s) { return s[1] == 1 ? 1.0 : 0.0; }};
  const auto rep = verify_ibragimov(ch, 2, f);
  EXPECT_FALSE(rep.violated);
  EXPECT_NEAR(rep.alpha, 0.25 * 0.4, 1e-14);
  EXPECT_GE(rep.upper_slack, 0.0);
  EXPECT_NEAR(rep.mean_of_product - rep.product_of_means, 0.5 * 0.7 - 0.25, 1e-14);

  const std::vector<TrajectoryFunctional> consts{[](std::span<const int>) { return 2.0; },
                                                 [](std::span<const int>) { return 3.0; }};
  const auto cr = verify_ibragimov(ch, 3, consts);
  EXPECT_NEAR(cr.mean_of_product, cr.product_of_means, 1e-14);
  EXPECT_FALSE(cr.violated);

  const TwoStateChain iid{0.5, 0.5};
  const auto ir = verify_ibragimov(iid, 2, f);
  EXPECT_NEAR(ir.alpha, 0.0, 1e-15);
  EXPECT_NEAR(ir.mean_of_product, ir.product_of_means, 1e-15);
}

TEST(Ibragimov, IndicatorLawMatchesEnumeration) {
  const TwoStateChain ch{0.2, 0.45};
  const std::vector<IndicatorBlock> blocks{{1, {1, 0}}, {4, {1}}, {6, {0, 0}}};
  const auto law = indicator_law(ch, blocks);
  const std::vector<TrajectoryFunctional> f{
      [](std::span<const int> s) { return s[0] == 1 && s[1] == 0 ? 1.0 : 0.0; },
      [](std::span<const int> s) { return s[3] == 1 ? 1.0 : 0.0; },
      [](std::span<const int> s) { return s[5] == 0 && s[6] == 0 ? 1.0 : 0.0; }};
  const auto via_paths = verify_ibragimov(ch, 7, f);
  const auto via_law = verify_ibragimov(law);
  EXPECT_NEAR(via_law.mean_of_product, via_paths.mean_of_product, 1e-14);
  EXPECT_NEAR(via_law.product_of_means, via_paths.product_of_means, 1e-14);
  EXPECT_NEAR(via_law.alpha, via_paths.alpha, 1e-14);
}

TEST(Ibragimov, SmallExhaustiveSweep) {
  const TwoStateChain ch{0.3, 0.3};
  const std::array<std::size_t, 3> ps{2, 3, 4};
  const auto sweep = ibragimov_exhaustive(ch, 6, ps);
  EXPECT_GT(sweep.instances, 0u);
  EXPECT_EQ(sweep.violations, 0u);
  EXPECT_GE(sweep.worst_slack, -1e-12);
}

TEST(Arcones, Examples) {
  // Rademacher blocks of length L: second moment L.
  const std::size_t L = 5, blocks = 8;
  std::vector<DiscreteLaw> laws(blocks, rademacher_sum_law(L));
  EXPECT_NEAR(laws[0].second_moment(), double(L), 1e-13);
  EXPECT_NEAR(laws[0].mean(), 0.0, 1e-15);
  const double sigma = std::sqrt(double(L * blocks));
  const auto rep = arcones_check(laws, sigma, 0.5, 1.0);
  EXPECT_NEAR(rep.variance_sum, 1.0, 1e-12);
  EXPECT_NEAR(rep.max_scaled, double(L) / (sigma * std::sqrt(0.5)), 1e-12);
  // eps sqrt(a_n) above the scaled block bound: Lindeberg sum vanishes.
  EXPECT_DOUBLE_EQ(arcones_check(laws, sigma, 1.0, 2.0).lindeberg_sum, 0.0);

  std::vector<DiscreteLaw> zeros(3, DiscreteLaw{{0.0}, {1.0}});
  const auto z = arcones_check(zeros, 0.0, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(z.variance_sum, 0.0);
  EXPECT_DOUBLE_EQ(z.max_scaled, 0.0);
  EXPECT_DOUBLE_EQ(z.lindeberg_sum, 0.0);
}

TEST(Arcones, EmpiricalLaw) {
  const std::vector<double> s{1.0, -1.0, 3.0, -3.0};
  const auto law = empirical_law(s);
  EXPECT_DOUBLE_EQ(law.mean(), 0.0);
  EXPECT_DOUBLE_EQ(law.second_moment(), 5.0);
  EXPECT_DOUBLE_EQ(law.sup_abs(), 3.0);
}
