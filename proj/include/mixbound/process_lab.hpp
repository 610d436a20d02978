#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mixbound/interval_union.hpp"
#include "mixbound/mixing_model.hpp"

namespace mixbound::lab {

//! Stationary two-state chain with P(0 -> 1) = p, P(1 -> 0) = q, taking the
//! value `a` in state 0 and `b` in state 1.
struct TwoStateChain {
  double p = 0.3;
  double q = 0.3;
  double a = -1.0;
  double b = 1.0;

  double pi1() const noexcept { return p / (p + q); }
  double pi0() const noexcept { return q / (p + q); }
  double lambda() const noexcept { return 1.0 - p - q; }
};

//! X_t = clip(phi X_{t-1} + e_t, -M, M) with e_t uniform on [-w, w].
struct BoundedAr1 {
  double phi = 0.5;
  double M = 1.0;
  double innovation_half_width = 0.5;
  std::size_t burn_in = 0;  // 0 picks ceil(10 / (1 - |phi|))

  std::size_t effective_burn_in() const;
};

struct Iid {
  enum class Law { rademacher, uniform_centered };
  Law law = Law::rademacher;
  double M = 1.0;  // half-width for uniform_centered
};

struct ProcessSpec {
  std::variant<TwoStateChain, BoundedAr1, Iid> kind = Iid{};
  bool center = true;

  static ProcessSpec chain(double p, double q, double a = -1.0, double b = 1.0);
  static ProcessSpec ar1(double phi, double M, double half_width);
  static ProcessSpec rademacher();
  static ProcessSpec uniform(double M);

  //! Throws std::invalid_argument on bad parameters.
  void validate() const;
  //! Exact stationary mean of the raw values.
  double raw_mean() const;
  //! Offset subtracted from raw values (raw_mean() when centering).
  double offset() const { return center ? raw_mean() : 0.0; }
  //! Uniform bound on |X_i| after centering.
  double bound() const;
  //! Mixing profile: the chain's eigenvalue profile, independent for iid,
  //! and geometric with c = -log|phi| / 2 for AR(1) (documented, not proven).
  mixing::MixingProfile profile() const;
  std::string name() const;
};

struct SamplePath {
  std::vector<double> values;  // X_1 .. X_n
  double M = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::size_t n() const noexcept { return values.size(); }
  //! X_t = X_{floor(t + 1)} for t in [0, n).
  double at(double t) const;
};

SamplePath simulate(const ProcessSpec& spec, std::size_t n, std::uint64_t seed,
                    std::uint64_t stream = 0);

//! Integral of the piecewise-constant embedding over a region of (0, n].
//! Throws std::invalid_argument when the region escapes (0, n].
double interval_sum(const SamplePath& path, const IntervalUnion& region);
double interval_sum(std::span<const double> values, const IntervalUnion& region);

//! |S_n| >= x, S_n >= x, or S_n <= -x.
enum class TailSide { two_sided, upper, lower };

struct McOptions {
  double confidence = 0.99;
  unsigned jobs = 1;
  TailSide side = TailSide::two_sided;
};

struct McTailEstimate {
  double x = 0.0;
  double p_hat = 0.0;
  std::size_t reps = 0;
  std::size_t hits = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double confidence = 0.99;
  std::uint64_t seed = 0;
};

struct WilsonInterval {
  double low = 0.0;
  double high = 1.0;
};

WilsonInterval wilson_interval(std::size_t hits, std::size_t reps, double confidence);

//! Tolerance used when comparing |S_n| against x (sums of +-1 values are
//! exact integers, so ties must count).
double tie_tolerance(double x) noexcept;

//! P(|S_n| >= x) (or P(S_n >= x)) over `reps` replicas; replica r uses
//! substream r of `seed`. Needs reps >= 100.
McTailEstimate mc_tail(const ProcessSpec& spec, std::size_t n, double x, std::size_t reps,
                       std::uint64_t seed, const McOptions& options = {});

//! Same replicas shared across every x of the grid.
std::vector<McTailEstimate> mc_tail_grid(const ProcessSpec& spec, std::size_t n,
                                         std::span<const double> xs, std::size_t reps,
                                         std::uint64_t seed, const McOptions& options = {});

struct ExactOptions {
  std::size_t max_chain_n = 16;
  TailSide side = TailSide::two_sided;
};

//! Exact tail by trajectory enumeration (chain) or binomial summation
//! (Rademacher). Throws std::length_error past the chain budget and
//! std::invalid_argument for continuous-state specs.
double exact_tail_small(const ProcessSpec& spec, std::size_t n, double x,
                        const ExactOptions& options = {});

//! log P(S_n >= s) for i.i.d. Rademacher summands, in log space.
double rademacher_log_upper_tail(std::size_t n, double s);

//! Exact alpha between two finite partitions given their joint law
//! joint[i * cols + j]: max over events A of sum_j (P(A, j) - P(A) P(j))^+.
//! Subsets are enumerated on the smaller side, which must have at most 20
//! atoms of positive mass (std::length_error otherwise).
double finite_alpha(std::span<const double> joint, std::size_t rows, std::size_t cols);

//! alpha between sigma(X_1..X_w) and sigma(X_{w+lag}..X_{w+lag+w-1}) of the
//! stationary chain, by enumerating both windows.
double chain_alpha_enumerated(const TwoStateChain& chain, std::size_t lag, std::size_t window = 2);

//! Joint law of a finite random vector.
struct VectorLaw {
  std::vector<std::vector<double>> outcomes;
  std::vector<double> probs;
};

struct IbragimovReport {
  std::size_t p = 0;
  double alpha = 0.0;
  double product_of_means = 0.0;
  double mean_of_product = 0.0;
  double norm_product = 0.0;
  double upper_slack = 0.0;  // rhs - (E prod - prod E)
  double lower_slack = 0.0;  // rhs - (prod E - E prod)
  bool violated = false;
};

//! Both inequalities of Ibragimov's product lemma for a nonnegative bounded
//! vector (Z_1, ..., Z_p) with alpha = max_k alpha(sigma(Z_i, i <= k), sigma(Z_i, i > k)).
IbragimovReport verify_ibragimov(const VectorLaw& law, double tolerance = 1e-12);

using TrajectoryFunctional = std::function<double(std::span<const int> states)>;

//! Joint law of functionals evaluated on every trajectory of the stationary
//! chain of the given length, then the lemma check.
IbragimovReport verify_ibragimov(const TwoStateChain& chain, std::size_t length,
                                 std::span<const TrajectoryFunctional> functionals);

//! Z_i = 1{X_j = pattern_i[j - first_i] for j in block i}, blocks disjoint
//! and ordered, 1-based positions.
struct IndicatorBlock {
  std::size_t first = 1;
  std::vector<int> pattern;
};

//! Joint law of the indicator vector from cylinder probabilities by
//! inclusion-exclusion (no trajectory enumeration).
VectorLaw indicator_law(const TwoStateChain& chain, std::span<const IndicatorBlock> blocks);

struct IbragimovSweep {
  std::size_t instances = 0;
  std::size_t violations = 0;
  double worst_slack = 0.0;
};

//! Every layout of p disjoint ordered blocks in {1..length} (gaps allowed)
//! with every state pattern, for each p in `p_values`.
IbragimovSweep ibragimov_exhaustive(const TwoStateChain& chain, std::size_t length,
                                    std::span<const std::size_t> p_values);

struct DiscreteLaw {
  std::vector<double> values;
  std::vector<double> probs;

  double mean() const;
  double second_moment() const;
  double sup_abs() const;
};

//! Equal-weight law of observed samples.
DiscreteLaw empirical_law(std::span<const double> samples);

//! Exact law of a sum of L i.i.d. Rademacher variables.
DiscreteLaw rademacher_sum_law(std::size_t L);

struct ArconesReport {
  std::vector<double> second_moments;  // E S_j^2 per block
  double max_abs_mean = 0.0;           // max |E S_j| / sigma_n
  double variance_sum = 0.0;           // sum E (S_j / sigma_n)^2
  double max_scaled = 0.0;             // max |S_j| / (sigma_n sqrt(a_n))
  double lindeberg_sum = 0.0;          // sum E (S_j/sigma_n)^2 1{|S_j/sigma_n| > eps sqrt(a_n)}
};

//! Conditions (i)-(iii) for the array X_{n,j} = S_j / sigma_n. With
//! sigma_n = 0 the scaled quantities are reported as 0.
ArconesReport arcones_check(std::span<const DiscreteLaw> blocks, double sigma_n, double a_n,
                            double eps);

} // namespace mixbound::lab
