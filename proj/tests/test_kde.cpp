#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "mixbound/kde_app.hpp"

using namespace mixbound;
using namespace mixbound::kde;

namespace {

// Mehler-series cross-check of int g: f(x)^2 sum_{m >= 1} He_m(z)^2 / (m m! theta),
// z = x / s, normalized recursively.
double mehler_integral(double theta, double sigma, double x, std::size_t terms) {
  const double s2 = sigma * sigma / (2.0 * theta);
  const double z = x / std::sqrt(s2);
  const double f = std::exp(-z * z / 2.0) / std::sqrt(2.0 * std::numbers::pi * s2);
  // h_m = He_m(z) / sqrt(m!) satisfies h_{m+1} = (z h_m - sqrt(m) h_{m-1}) / sqrt(m + 1).
  double hm1 = 1.0, h = z, sum = 0.0;
  for (std::size_t m = 1; m <= terms; ++m) {
    sum += h * h / double(m);
    const double next = (z * h - std::sqrt(double(m)) * hm1) / std::sqrt(double(m + 1));
    hm1 = h;
    h = next;
  }
  return f * f * sum / theta;
}

} // namespace

TEST(Kernel, Values) {
  const Kernel g{KernelKind::gaussian};
  EXPECT_NEAR(g(0.0), 0.3989422804014327, 1e-16);
  EXPECT_DOUBLE_EQ(Kernel{KernelKind::epanechnikov}(0.0), 0.75);
  EXPECT_DOUBLE_EQ(Kernel{KernelKind::epanechnikov}(1.5), 0.0);
  EXPECT_DOUBLE_EQ(Kernel{KernelKind::triangular}(0.5), 0.5);
  EXPECT_EQ(kernel_from_string("triangular"), KernelKind::triangular);
  EXPECT_EQ(to_string(KernelKind::epanechnikov), "epanechnikov");
  EXPECT_THROW(kernel_from_string("box"), std::invalid_argument);
}

TEST(Ou, ExactTransitions) {
  DiffusionSpec spec;
  spec.T = 20000.0;
  spec.dt = 0.5;
  const auto path = simulate_ou(spec, 3);
  EXPECT_EQ(path.values.size(), 40001u);
  double m = 0.0, v = 0.0, c = 0.0;
  const auto& x = path.values;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    m += x[i];
    v += x[i] * x[i];
    c += x[i] * x[i + 1];
  }
  const double n = double(x.size() - 1);
  EXPECT_NEAR(m / n, 0.0, 0.05);
  EXPECT_NEAR(v / n, spec.stationary_variance(), 0.05);
  EXPECT_NEAR(c / v, std::exp(-0.5), 0.02);
  EXPECT_EQ(simulate_ou(spec, 3).values, path.values);
  DiffusionSpec bad;
  bad.theta = 0.0;
  EXPECT_THROW(simulate_ou(bad, 1), std::invalid_argument);
}

TEST(Kde, ConstantPathAndErrors) {
  OuPath p;
  p.dt = 0.01;
  p.values.assign(1001, 0.0);
  const double h = 0.3;
  EXPECT_NEAR(kde::kde(p, 0.0, h).f_hat, Kernel{}(0.0) / h, 1e-13);
  EXPECT_THROW(kde::kde(p, 0.0, 0.0), std::invalid_argument);
  OuPath short_path;
  short_path.dt = 0.01;
  short_path.values.assign(50, 0.0);
  EXPECT_THROW(kde::kde(short_path, 0.0, 0.2), std::domain_error);
}

TEST(InterpolantIntegral, PiecewiseLinear) {
  const std::vector<double> g{0.0, 1.0, 0.0, 2.0};
  EXPECT_NEAR(interpolant_integral(g, 1.0, 0.0, 3.0), 0.5 + 0.5 + 1.0, 1e-15);
  EXPECT_NEAR(interpolant_integral(g, 1.0, 0.5, 1.5), 0.375 + 0.375, 1e-15);
  EXPECT_NEAR(interpolant_integral(g, 1.0, 2.25, 2.75), 0.5 * (0.5 + 1.5) * 0.5, 1e-15);
  EXPECT_THROW(interpolant_integral(g, 1.0, 0.0, 3.5), std::invalid_argument);
}

TEST(TriangularArrayTest, SumIdentity) {
  DiffusionSpec spec;
  spec.T = 37.5;
  const auto path = simulate_ou(spec, 8);
  const double mean_rate = exact_mean_rate_gaussian(spec, 0.3, 0.25);
  const auto arr = discretize_array(path, 0.3, 0.25, mean_rate);
  EXPECT_EQ(arr.n, 37u);
  EXPECT_NEAR(arr.delta, 37.5 / 37.0, 1e-15);
  EXPECT_NEAR(arr.sum, arr.centered_total / std::sqrt(arr.delta), 1e-10);
  const auto f = kde::kde(path, 0.3, 0.25);
  EXPECT_NEAR(arr.centered_total, spec.T * (f.f_hat - mean_rate / 0.25), 1e-9);

  DiffusionSpec whole = spec;
  whole.T = 40.0;
  const auto p2 = simulate_ou(whole, 9);
  const auto a2 = discretize_array(p2, 0.0, 0.2, exact_mean_rate_gaussian(whole, 0.0, 0.2));
  EXPECT_DOUBLE_EQ(a2.delta, 1.0);
  EXPECT_NEAR(a2.sum, a2.centered_total, 1e-10);
}

TEST(TriangularArrayTest, ZeroPathExactCentering) {
  OuPath p;
  p.dt = 0.01;
  p.values.assign(1201, 0.0);
  const Kernel k;
  const double h = 0.2;
  const auto arr = discretize_array(p, 0.0, h, k(0.0), k);
  for (const double v : arr.values)
    EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(CalibrationMean, CloseToExact) {
  DiffusionSpec spec;
  spec.T = 200.0;
  const double est = calibration_mean_rate(spec, 0.0, 0.2, Kernel{}, 4);
  EXPECT_NEAR(est, exact_mean_rate_gaussian(spec, 0.0, 0.2), 0.02);
}

TEST(PairDensity, ClosedFormAndOracles) {
  const double s2 = std::sqrt(2.0);
  const auto zero = g_integral_ou(1.0, s2, 0.0);
  EXPECT_NEAR(zero.value, std::log(2.0) / (2.0 * std::numbers::pi), 1e-12);
  EXPECT_NEAR(zero.value, 0.110317800076326, 1e-13);
  EXPECT_NEAR(g_integral_ou(1.0, s2, 0.5).value, 0.118238450550101, 1e-12);
  EXPECT_NEAR(g_integral_ou(1.0, s2, 1.0).value, 0.110345695102641, 1e-12);
  EXPECT_NEAR(g_integral_ou(1.0, s2, 2.0).value, 0.028265103339473, 1e-12);
  // theta scaling at fixed stationary variance.
  EXPECT_NEAR(g_integral_ou(2.0, 2.0, 0.5).value, 0.118238450550101 / 2.0, 1e-12);
  EXPECT_NEAR(mehler_integral(1.0, s2, 0.5, 200000), 0.118238450550101, 2e-3);
  EXPECT_THROW(g_integral_ou(0.0, 1.0, 0.0), std::invalid_argument);
}

TEST(PairDensity, RateReadings) {
  const auto g = g_integral_ou(1.0, std::sqrt(2.0), 0.0);
  EXPECT_NEAR(kde_rate_function(g, 1.0), 1.0 / (4.0 * g.value), 1e-12);
  EXPECT_NEAR(kde_rate_function(g, 2.0, RateReading::literal), 16.0 * g.value, 1e-12);
  EXPECT_DOUBLE_EQ(kde_rate_function(g, 0.0), 0.0);
  PairDensityIntegral bad;
  EXPECT_THROW(kde_rate_function(bad, 1.0), std::domain_error);
}

TEST(KdeReplicas, MeanNearDensity) {
  DiffusionSpec spec;
  spec.T = 500.0;
  const auto r = kde_replicas(spec, 0.0, 0.2, Kernel{}, 20, 11, 2);
  EXPECT_NEAR(r.mean, 0.3911950908777134, 5.0 * r.std_error + 1e-3);
  const auto again = kde_replicas(spec, 0.0, 0.2, Kernel{}, 20, 11, 1);
  EXPECT_EQ(r.values, again.values);
}

TEST(BiasCheck, ShapeAndErrors) {
  DiffusionSpec spec;
  spec.T = 100.0;
  const std::vector<double> hs{0.4, 0.2};
  const auto rep = bias_check(spec, 0.0, hs, Kernel{}, 10, 5, 1);
  ASSERT_EQ(rep.rows.size(), 2u);
  EXPECT_NEAR(rep.f_true, 0.3989422804014327, 1e-15);
  for (const auto& row : rep.rows)
    EXPECT_NE(row.bias, row.raw_bias);
  ControlVariate off;
  off.enabled = false;
  const auto plain = bias_check(spec, 0.0, hs, Kernel{}, 10, 5, 1, off);
  for (std::size_t j = 0; j < hs.size(); ++j) {
    EXPECT_EQ(plain.rows[j].bias, plain.rows[j].raw_bias);
    EXPECT_EQ(plain.rows[j].raw_bias, rep.rows[j].raw_bias);
  }
  EXPECT_EQ(plain.slope, plain.raw_slope);
  const std::vector<double> one{0.2};
  EXPECT_THROW(bias_check(spec, 0.0, one, Kernel{}, 10, 5, 1), std::invalid_argument);
}

TEST(BiasCheck, ControlVariateShrinksError) {
  // Exact E f_hat for the Gaussian kernel: N(0, s^2 + h^2) at x.
  DiffusionSpec spec;
  spec.T = 300.0;
  const std::vector<double> hs{0.4, 0.2};
  const auto rep = bias_check(spec, 0.0, hs, Kernel{}, 40, 77, 1);
  for (const auto& row : rep.rows) {
    const double truth = exact_mean_rate_gaussian(spec, 0.0, row.h) / row.h - rep.f_true;
    EXPECT_NEAR(row.bias, truth, 5.0 * row.std_error);
  }
  ControlVariate off;
  off.enabled = false;
  const auto plain = bias_check(spec, 0.0, hs, Kernel{}, 40, 77, 1, off);
  EXPECT_LT(rep.rows[1].std_error, plain.rows[1].std_error);
}

TEST(KdeSpeed, Diagnostics) {
  const double T = 1e6;
  const double a = std::pow(T, -0.2), af = a, h = std::pow(T, -0.22);
  const auto d = kde_speed_check(T, a, af, h);
  const double l = std::log(T);
  EXPECT_NEAR(d.variance_term, a * T * h * h / std::pow(l, 4), 1e-9);
  EXPECT_NEAR(d.bias_term, a * T * std::pow(h, 4), 1e-12);
  EXPECT_FALSE(kde_speed_check(T, 2.0, 2.0, h).pass);
  EXPECT_THROW(kde_speed_check(2.0, a, af, h), std::domain_error);
}
