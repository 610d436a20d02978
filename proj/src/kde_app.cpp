#include "mixbound/kde_app.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "mixbound/interval_union.hpp"
#include "mixbound/rng.hpp"

namespace mixbound::kde {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_density(double x, double var) {
  return std::exp(-x * x / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

// Runs body(r) for r in [0, reps) over `jobs` threads with a static split.
template <typename Body>
void parallel_for(std::size_t reps, unsigned jobs, Body body) {
  jobs = std::max(1u, std::min<unsigned>(jobs, unsigned(std::max<std::size_t>(reps, 1))));
  if (jobs == 1) {
    for (std::size_t r = 0; r < reps; ++r)
      body(r);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (unsigned j = 0; j < jobs; ++j)
    pool.emplace_back([&, j] {
      for (std::size_t r = j; r < reps; r += jobs)
        body(r);
    });
  for (auto& t : pool)
    t.join();
}

std::vector<double> kernel_values(const OuPath& path, double x, double h, Kernel kernel) {
  std::vector<double> g(path.values.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    g[k] = kernel((x - path.values[k]) / h);
  return g;
}

void check_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h))
    throw std::invalid_argument("bandwidth must be positive");
}

} // namespace

void DiffusionSpec::validate() const {
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw std::invalid_argument("OU theta must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("OU sigma must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("OU dt must be positive");
  if (!(T > 0.0) || !std::isfinite(T))
    throw std::invalid_argument("OU horizon must be positive");
  if (std::llround(T / dt) < 1)
    throw std::invalid_argument("OU horizon shorter than one step");
}

double DiffusionSpec::density(double x) const { return normal_density(x, stationary_variance()); }

std::size_t DiffusionSpec::steps() const { return std::size_t(std::llround(T / dt)); }

OuPath simulate_ou(const DiffusionSpec& spec, std::uint64_t seed, std::uint64_t stream) {
  spec.validate();
  const std::size_t steps = spec.steps();
  const double rho = std::exp(-spec.theta * spec.dt);
  const double s = std::sqrt(spec.stationary_variance());
  const double innov = s * std::sqrt(-std::expm1(-2.0 * spec.theta * spec.dt));
  auto eng = make_engine(seed, stream);
  OuPath path;
  path.dt = spec.dt;
  path.seed = seed;
  path.stream = stream;
  path.values.resize(steps + 1);
  double v = s * standard_normal(eng);
  path.values[0] = v;
  for (std::size_t k = 1; k <= steps; ++k) {
    v = rho * v + innov * standard_normal(eng);
    path.values[k] = v;
  }
  return path;
}

std::string to_string(KernelKind kind) {
  switch (kind) {
  case KernelKind::gaussian: return "gaussian";
  case KernelKind::epanechnikov: return "epanechnikov";
  case KernelKind::triangular: return "triangular";
  }
  return "gaussian";
}

KernelKind kernel_from_string(const std::string& name) {
  if (name == "gaussian")
    return KernelKind::gaussian;
  if (name == "epanechnikov")
    return KernelKind::epanechnikov;
  if (name == "triangular")
    return KernelKind::triangular;
  throw std::invalid_argument("unknown kernel: " + name);
}

double Kernel::operator()(double u) const {
  switch (kind) {
  case KernelKind::gaussian: return kInvSqrt2Pi * std::exp(-0.5 * u * u);
  case KernelKind::epanechnikov: return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  case KernelKind::triangular: return std::abs(u) < 1.0 ? 1.0 - std::abs(u) : 0.0;
  }
  return 0.0;
}

double Kernel::second_moment() const {
  switch (kind) {
  case KernelKind::gaussian: return 1.0;
  case KernelKind::epanechnikov: return 0.2;
  case KernelKind::triangular: return 1.0 / 6.0;
  }
  return 1.0;
}

double interpolant_integral(std::span<const double> g, double dt, double a, double b) {
  if (g.size() < 2)
    throw std::invalid_argument("interpolant needs two samples");
  const double horizon = dt * double(g.size() - 1);
  if (a < 0.0 || b > horizon * (1.0 + 1e-12) || a > b)
    throw std::invalid_argument("integration range escapes the sampled path");
  b = std::min(b, horizon);
  // Partial trapezoid from the left end of the cell containing t to t.
  auto partial = [&](std::size_t k, double frac) {
    const double slope = g[k + 1] - g[k];
    return dt * frac * (g[k] + 0.5 * frac * slope);
  };
  auto locate = [&](double t) {
    auto k = std::size_t(std::floor(t / dt));
    k = std::min(k, g.size() - 2);
    return std::pair{k, std::clamp(t / dt - double(k), 0.0, 1.0)};
  };
  const auto [ka, fa] = locate(a);
  const auto [kb, fb] = locate(b);
  CompensatedSum acc;
  for (std::size_t k = ka; k < kb; ++k)
    acc.add(0.5 * dt * (g[k] + g[k + 1]));
  acc.add(partial(kb, fb));
  acc.add(-partial(ka, fa));
  return acc.value();
}

KdeEstimate kde(const OuPath& path, double x, double h, Kernel kernel) {
  check_bandwidth(h);
  if (path.values.size() < 2)
    throw std::domain_error("KDE needs a path with at least two samples");
  const double T = path.horizon();
  if (T < 1.0)
    throw std::domain_error("KDE needs T >= 1");
  const auto g = kernel_values(path, x, h, kernel);
  CompensatedSum acc;
  for (std::size_t k = 0; k + 1 < g.size(); ++k)
    acc.add(0.5 * (g[k] + g[k + 1]));
  KdeEstimate est;
  est.x = x;
  est.h = h;
  est.T = T;
  est.seed = path.seed;
  est.f_hat = acc.value() * path.dt / (T * h);
  return est;
}

TriangularArray discretize_array(const OuPath& path, double x, double h, double mean_rate,
                                 Kernel kernel) {
  check_bandwidth(h);
  if (path.values.size() < 2)
    throw std::domain_error("array needs a path with at least two samples");
  const double T = path.horizon();
  if (T < 1.0)
    throw std::domain_error("array needs T >= 1");
  TriangularArray arr;
  arr.n = std::size_t(std::floor(T + 1e-9));
  arr.delta = T / double(arr.n);
  arr.mean_rate = mean_rate;
  const auto g = kernel_values(path, x, h, kernel);
  const double scale = 1.0 / (std::sqrt(arr.delta) * h);
  arr.values.resize(arr.n);
  CompensatedSum sum, total;
  for (std::size_t i = 0; i < arr.n; ++i) {
    const double lo = double(i) * arr.delta;
    const double hi = i + 1 == arr.n ? T : double(i + 1) * arr.delta;
    const double block = interpolant_integral(g, path.dt, lo, hi);
    total.add(block);
    arr.values[i] = scale * (block - arr.delta * mean_rate);
    sum.add(arr.values[i]);
  }
  arr.sum = sum.value();
  arr.centered_total = (total.value() - T * mean_rate) / h;
  return arr;
}

double calibration_mean_rate(const DiffusionSpec& spec, double x, double h, Kernel kernel,
                             std::uint64_t seed, double factor, std::uint64_t stream) {
  check_bandwidth(h);
  if (!(factor > 0.0))
    throw std::invalid_argument("calibration factor must be positive");
  DiffusionSpec longer = spec;
  longer.T = spec.T * factor;
  const auto path = simulate_ou(longer, seed, stream);
  return kde(path, x, h, kernel).f_hat * h;
}

double exact_mean_rate_gaussian(const DiffusionSpec& spec, double x, double h) {
  check_bandwidth(h);
  return h * normal_density(x, spec.stationary_variance() + h * h);
}

PairDensityIntegral g_integral_ou(double theta, double sigma, double x,
                                  const QuadratureConfig& config) {
  if (!(theta > 0.0) || !(sigma > 0.0))
    throw std::invalid_argument("OU parameters must be positive");
  const double s2 = sigma * sigma / (2.0 * theta);
  const double f2 = std::exp(-x * x / s2) / (2.0 * std::numbers::pi * s2);
  const double z = x * x / s2;
  // g(rho) / rho with g = f2 (exp(z rho / (1 + rho)) / sqrt(1 - rho^2) - 1);
  // xc is the signed distance to the nearer endpoint.
  auto integrand = [&](double rho, double xc) {
    if (rho <= 0.0)
      return f2 * z;
    const double one_minus = xc > 0.0 ? xc : 1.0 - rho;
    const double log_r = z * rho / (1.0 + rho) - 0.5 * std::log(one_minus * (1.0 + rho));
    return f2 * std::expm1(log_r) / rho;
  };
  boost::math::quadrature::tanh_sinh<double> integrator(config.max_refinements);
  double error = 0.0, l1 = 0.0;
  std::size_t levels = 0;
  const double value = integrator.integrate(integrand, 0.0, 1.0, config.tolerance, &error, &l1, &levels);
  PairDensityIntegral out;
  out.x = x;
  out.value = value / theta;
  out.error_estimate = error / theta;
  if (!std::isfinite(out.value) || error > 100.0 * config.tolerance * std::max(1.0, l1))
    throw std::runtime_error("pair-density quadrature did not converge (residual " +
                             std::to_string(out.error_estimate) + ")");
  return out;
}

double kde_rate_function(const PairDensityIntegral& integral, double t, RateReading reading) {
  if (!(integral.value > 0.0))
    throw std::domain_error("rate function needs a positive pair-density integral");
  const double four_g = 4.0 * integral.value;
  return reading == RateReading::inverse ? t * t / four_g : t * t * four_g;
}

namespace {

double loglog_slope(const std::vector<BiasRow>& rows, double BiasRow::*field) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t used = 0;
  for (const auto& row : rows) {
    if (row.*field == 0.0)
      continue;
    const double lx = std::log(row.h), ly = std::log(std::abs(row.*field));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++used;
  }
  if (used < 2)
    return 0.0;
  const double k = double(used);
  const double den = k * sxx - sx * sx;
  return den != 0.0 ? (k * sxy - sx * sy) / den : 0.0;
}

double mean_of(std::span<const double> v) {
  CompensatedSum s;
  for (const double a : v)
    s.add(a);
  return s.value() / double(v.size());
}

} // namespace

BiasReport bias_check(const DiffusionSpec& spec, double x, std::span<const double> h_grid,
                      Kernel kernel, std::size_t reps, std::uint64_t seed, unsigned jobs,
                      const ControlVariate& control) {
  spec.validate();
  if (h_grid.size() < 2)
    throw std::invalid_argument("bias check needs at least two bandwidths");
  if (reps < 2)
    throw std::invalid_argument("bias check needs reps >= 2");
  for (const double h : h_grid)
    check_bandwidth(h);
  if (control.enabled)
    check_bandwidth(control.bandwidth);
  const std::size_t m = h_grid.size();
  std::vector<std::vector<double>> values(m, std::vector<double>(reps));
  std::vector<double> ctrl(reps, 0.0);
  parallel_for(reps, jobs, [&](std::size_t r) {
    const auto path = simulate_ou(spec, seed, r);
    for (std::size_t j = 0; j < m; ++j)
      values[j][r] = kde(path, x, h_grid[j], kernel).f_hat;
    if (control.enabled)
      ctrl[r] = kde(path, x, control.bandwidth, Kernel{KernelKind::gaussian}).f_hat;
  });
  BiasReport rep;
  rep.x = x;
  rep.f_true = spec.density(x);
  rep.reps = reps;
  rep.seed = seed;
  rep.control = control;
  const double ctrl_mean = mean_of(ctrl);
  const double ctrl_expect =
      control.enabled ? exact_mean_rate_gaussian(spec, x, control.bandwidth) / control.bandwidth : 0.0;
  double ctrl_ss = 0.0;
  for (const double c : ctrl)
    ctrl_ss += (c - ctrl_mean) * (c - ctrl_mean);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& v = values[j];
    const double mean = mean_of(v);
    BiasRow row;
    row.h = h_grid[j];
    row.mean_f_hat = mean;
    row.raw_bias = mean - rep.f_true;
    double cov = 0.0;
    for (std::size_t r = 0; r < reps; ++r)
      cov += (v[r] - mean) * (ctrl[r] - ctrl_mean);
    row.beta = control.enabled && ctrl_ss > 0.0 ? cov / ctrl_ss : 0.0;
    double ss = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double d = (v[r] - mean) - row.beta * (ctrl[r] - ctrl_mean);
      ss += d * d;
    }
    row.bias = row.raw_bias - row.beta * (ctrl_mean - ctrl_expect);
    row.std_error = std::sqrt(ss / double(reps - 1) / double(reps));
    rep.rows.push_back(row);
  }
  rep.slope = loglog_slope(rep.rows, &BiasRow::bias);
  rep.raw_slope = loglog_slope(rep.rows, &BiasRow::raw_bias);
  return rep;
}

ReplicaSummary kde_replicas(const DiffusionSpec& spec, double x, double h, Kernel kernel,
                            std::size_t reps, std::uint64_t seed, unsigned jobs) {
  spec.validate();
  check_bandwidth(h);
  if (reps < 2)
    throw std::invalid_argument("replicas need reps >= 2");
  ReplicaSummary out;
  out.values.resize(reps);
  parallel_for(reps, jobs, [&](std::size_t r) {
    out.values[r] = kde(simulate_ou(spec, seed, r), x, h, kernel).f_hat;
  });
  CompensatedSum s;
  for (const double v : out.values)
    s.add(v);
  out.mean = s.value() / double(reps);
  double ss = 0.0;
  for (const double v : out.values)
    ss += (v - out.mean) * (v - out.mean);
  out.std_error = std::sqrt(ss / double(reps - 1) / double(reps));
  return out;
}

KdeSpeedDiagnostic kde_speed_check(double T, double a_T, double a_floor_T, double h_T,
                                   double variance_threshold, double bias_threshold,
                                   double ratio_tolerance) {
  if (!(T > std::numbers::e))
    throw std::domain_error("KDE speed check needs T > e");
  if (!(a_T > 0.0) || !(h_T > 0.0))
    throw std::invalid_argument("KDE speed check needs a_T, h_T > 0");
  const double l = std::log(T);
  KdeSpeedDiagnostic d;
  d.a_ratio = a_floor_T / a_T;
  d.variance_term = a_T * T * h_T * h_T / (l * l * l * l);
  d.bias_term = a_T * T * std::pow(h_T, 4.0);
  d.a_small = a_T < 1.0;
  d.pass = d.a_small && std::abs(d.a_ratio - 1.0) <= ratio_tolerance &&
           d.variance_term >= variance_threshold && d.bias_term <= bias_threshold;
  return d;
}

} // namespace mixbound::kde
