#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mixbound::kde {

//! Stationary Ornstein-Uhlenbeck process dX = -theta X dt + sigma dW,
//! observed on the grid k dt, k = 0..round(T / dt).
//!
//! The stationary law is N(0, sigma^2 / (2 theta)) and, being Gaussian with
//! correlation exp(-theta u), the process is alpha-mixing with
//! alpha_u <= exp(-theta u), so c = theta.
struct DiffusionSpec {
  double theta = 1.0;
  double sigma = 1.4142135623730951;
  double dt = 0.01;
  double T = 2000.0;

  void validate() const;
  double stationary_variance() const { return sigma * sigma / (2.0 * theta); }
  double mixing_rate() const { return theta; }
  //! Stationary density at x.
  double density(double x) const;
  std::size_t steps() const;
};

struct OuPath {
  double dt = 0.01;
  std::vector<double> values;  // X at 0, dt, 2 dt, ...
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  double horizon() const { return dt * double(values.size() - 1); }
};

//! Exact Gaussian transitions from a stationary start.
OuPath simulate_ou(const DiffusionSpec& spec, std::uint64_t seed, std::uint64_t stream = 0);

enum class KernelKind { gaussian, epanechnikov, triangular };

std::string to_string(KernelKind kind);
KernelKind kernel_from_string(const std::string& name);

struct Kernel {
  KernelKind kind = KernelKind::gaussian;

  double operator()(double u) const;
  double second_moment() const;  // int u^2 K(u) du
};

struct KdeEstimate {
  double x = 0.0;
  double h = 0.0;
  double f_hat = 0.0;
  double T = 0.0;
  std::uint64_t seed = 0;
};

//! f_T(x) = (1 / (T h)) int_0^T K((x - X_t) / h) dt by the trapezoid rule.
//! Throws std::invalid_argument for h <= 0 and std::domain_error for T < 1.
KdeEstimate kde(const OuPath& path, double x, double h, Kernel kernel = {});

//! Integral over [a, b] of the piecewise-linear interpolant of g sampled
//! every dt from 0.
double interpolant_integral(std::span<const double> g, double dt, double a, double b);

struct TriangularArray {
  std::size_t n = 0;     // floor(T)
  double delta = 1.0;    // T / n, in [1, 2)
  double mean_rate = 0.0;  // E K((x - X_0) / h)
  std::vector<double> values;  // X_{n,i}, i = 1..n
  double sum = 0.0;
  //! T (f_T(x) - E-hat f_T(x)) with E-hat f_T = mean_rate / h.
  double centered_total = 0.0;
};

//! X_{n,i} = (delta^{-1/2} / h) (int_{(i-1) delta}^{i delta} K((x - X_t)/h) dt
//! - delta * mean_rate). The values sum to delta^{-1/2} * centered_total.
TriangularArray discretize_array(const OuPath& path, double x, double h, double mean_rate,
                                 Kernel kernel = {});

//! Time average of K((x - X_t) / h) over an independent run of length
//! `factor` * T (substream `stream` of `seed`).
double calibration_mean_rate(const DiffusionSpec& spec, double x, double h, Kernel kernel,
                             std::uint64_t seed, double factor = 10.0,
                             std::uint64_t stream = 0xca11b);

//! E K((x - X) / h) in closed form for the Gaussian kernel: h N(0, s^2 + h^2) density at x.
double exact_mean_rate_gaussian(const DiffusionSpec& spec, double x, double h);

struct QuadratureConfig {
  double tolerance = 1e-10;
  std::size_t max_refinements = 15;
};

struct PairDensityIntegral {
  double x = 0.0;
  double value = 0.0;
  double error_estimate = 0.0;
};

//! int_0^inf g_u(x, x) du with g_u the bivariate normal pair density minus
//! f(x)^2, integrated in rho = exp(-theta u) by tanh-sinh quadrature.
//! Throws std::runtime_error when the error estimate misses the tolerance.
PairDensityIntegral g_integral_ou(double theta, double sigma, double x,
                                  const QuadratureConfig& config = {});

enum class RateReading { inverse, literal };

//! t^2 / (4 int g) by default; the literal reading gives t^2 * 4 int g.
double kde_rate_function(const PairDensityIntegral& integral, double t,
                         RateReading reading = RateReading::inverse);

struct BiasRow {
  double h = 0.0;
  double mean_f_hat = 0.0;
  double raw_bias = 0.0;  // mean_f_hat - f(x)
  double bias = 0.0;      // control-variate adjusted, equal to raw_bias when disabled
  double std_error = 0.0;
  double beta = 0.0;      // regression coefficient on the control
};

//! Control: Gaussian-kernel KDE at a wide bandwidth, whose mean under the
//! stationary normal law is known in closed form.
struct ControlVariate {
  bool enabled = true;
  double bandwidth = 0.6;
};

struct BiasReport {
  double x = 0.0;
  double f_true = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  ControlVariate control;
  std::vector<BiasRow> rows;
  double slope = 0.0;      // least-squares slope of log|bias| on log h
  double raw_slope = 0.0;  // same fit on raw_bias
};

//! Replicas share paths across the h grid (common random numbers).
BiasReport bias_check(const DiffusionSpec& spec, double x, std::span<const double> h_grid,
                      Kernel kernel, std::size_t reps, std::uint64_t seed, unsigned jobs = 1,
                      const ControlVariate& control = {});

//! Mean KDE over replicas at one (x, h).
struct ReplicaSummary {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> values;
};

ReplicaSummary kde_replicas(const DiffusionSpec& spec, double x, double h, Kernel kernel,
                            std::size_t reps, std::uint64_t seed, unsigned jobs = 1);

struct KdeSpeedDiagnostic {
  double a_ratio = 0.0;     // a_[T] / a_T, should tend to 1
  double variance_term = 0.0;  // a_T T h_T^2 / (log T)^4, should tend to infinity
  double bias_term = 0.0;      // a_T T h_T^4, should tend to 0
  bool a_small = false;
  bool pass = false;
};

KdeSpeedDiagnostic kde_speed_check(double T, double a_T, double a_floor_T, double h_T,
                                   double variance_threshold = 1.0,
                                   double bias_threshold = 1.0,
                                   double ratio_tolerance = 0.05);

} // namespace mixbound::kde
