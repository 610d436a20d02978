#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mixbound/cantor_blocks.hpp"
#include "mixbound/process_lab.hpp"

namespace mixbound::mdp {

struct SpeedDiagnostic {
  double value = 0.0;
  double threshold = 1.0;
  bool a_small = false;  // a_n < 1
  bool pass = false;
};

//! n a_n / ((log n)^2 (log log n)^2); pass when value >= threshold and a_n < 1.
//! Needs n >= 16.
SpeedDiagnostic speed_condition_ok(std::size_t n, double a_n, double threshold = 1.0);

struct TriangularDiagnostic : SpeedDiagnostic {
  double M_over_sqrt_n = 0.0;
  bool M_small = false;  // M_n / sqrt(n) < m_threshold
};

//! n a_n / (M_n^2 (log n)^4) with the M_n = o(sqrt n) proxy M_n / sqrt(n) < m_threshold.
TriangularDiagnostic speed_condition_triangular(std::size_t n, double a_n, double M_n,
                                                double threshold = 1.0,
                                                double m_threshold = 0.1);

//! I(t) = t^2 / 2, or t^2 / (2 sigma^2).
struct RateFunction {
  enum class Form { half_square, scaled };
  Form form = Form::half_square;
  double sigma2 = 1.0;

  static RateFunction half_square() { return {}; }
  static RateFunction scaled(double sigma2);

  double operator()(double t) const;
};

//! a_n = scale * n^exponent.
struct ARule {
  double scale = 1.0;
  double exponent = -1.0 / 3.0;

  double operator()(std::size_t n) const;
};

enum class Method { exact, monte_carlo };

std::string to_string(Method method);

struct MdpCell {
  std::size_t n = 0;
  double t = 0.0;
  double a_n = 0.0;
  double sigma_n = 0.0;
  double x = 0.0;           // deviation level t sigma_n / sqrt(a_n)
  double probability = 0.0;
  double estimate = 0.0;    // a_n log P; -inf when P-hat = 0
  double target = 0.0;      // -I(t)
  double gap = 0.0;         // estimate - target
  double ci_low = 0.0;      // Monte Carlo only, on the estimate scale
  double ci_high = 0.0;
  std::string note;
  SpeedDiagnostic speed;
};

struct MdpExperiment {
  lab::ProcessSpec spec = lab::ProcessSpec::rademacher();
  std::vector<std::size_t> n_grid;
  ARule a_rule;
  std::vector<double> t_grid;
  Method method = Method::exact;
  bool two_sided = false;
  RateFunction rate;
  std::size_t reps = 10000;
  std::uint64_t seed = 1;
  double confidence = 0.99;
  unsigned jobs = 1;
  std::size_t max_chain_n = 16;

  std::vector<MdpCell> estimates;
};

//! Fills experiment.estimates (n-major). One-sided events use S_n >= x for
//! t >= 0 and S_n <= -x for t < 0; two_sided uses |S_n| >= |x|.
void empirical_rate(MdpExperiment& experiment);

struct SigmaOptions {
  std::size_t reps = 4000;
  std::uint64_t seed = 7;
};

//! Var(S_n) / n: closed form for chains and i.i.d. laws, simulation for AR(1).
double sigma_ratio(const lab::ProcessSpec& spec, std::size_t n, const SigmaOptions& options = {});

//! Exact autocovariance gamma_k of a closed-form spec; throws for AR(1).
double autocovariance(const lab::ProcessSpec& spec, std::size_t k);

struct BlockVarianceOptions {
  Method method = Method::exact;
  std::size_t reps = 2000;
  std::uint64_t seed = 11;
};

struct BlockVarianceReport {
  Method method = Method::exact;
  double ratio = 1.0;       // Var(sum S_i) / sum Var(S_i)
  double var_total = 0.0;
  double var_sum = 0.0;
  double cross_sum = 0.0;   // var_total - var_sum
  double tail_bound = 0.0;  // bound on |ratio - 1| from gamma_k and min_gap
  double series_cov_bound = 0.0;  // 4 2^k M^2 n a_n sum_j exp(-c j delta sqrt(n a_n))
};

BlockVarianceReport block_variance_ratio(const lab::ProcessSpec& spec,
                                         const cantor::BlockPlan& plan,
                                         const BlockVarianceOptions& options = {});

} // namespace mixbound::mdp
