#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace mixbound::mixing {

//! Strong mixing coefficients alpha(k) of a sequence.
//!
//! Either geometric, alpha(k) = min(1/4, exp(-2ck)), or tabulated from
//! alpha(1), alpha(2), ... with the last value held beyond the table.
//! alpha(0) is 1/4 for every profile. A geometric profile with c = +inf
//! is the independent profile (alpha(k) = 0 for k >= 1).
class MixingProfile {
public:
  enum class Kind { geometric, tabulated };

  static MixingProfile geometric(double c);
  static MixingProfile tabulated(std::vector<double> values);
  static MixingProfile independent();

  Kind kind() const noexcept { return kind_; }
  bool is_independent() const noexcept;

  //! The geometric rate; for tabulated profiles the largest c with
  //! alpha(k) <= exp(-2ck) on every tabulated k.
  double c_effective() const noexcept { return c_; }

  //! alpha(k) for k = 1, 2, ...; empty for geometric profiles.
  std::span<const double> table() const noexcept { return values_; }

  //! Second eigenvalue of the transition matrix, for profiles built from a
  //! two-state chain.
  std::optional<double> eigenvalue() const noexcept { return eigenvalue_; }
  MixingProfile with_eigenvalue(double lambda) const;

  double alpha(std::size_t k) const noexcept;

private:
  MixingProfile() = default;

  Kind kind_ = Kind::geometric;
  double c_ = std::numeric_limits<double>::infinity();
  std::vector<double> values_;
  std::optional<double> eigenvalue_;
};

double alpha_at(const MixingProfile& profile, std::size_t k) noexcept;

//! K = 1 + 8 * sum_{i >= 1} alpha(i). Throws std::domain_error for a
//! tabulated profile whose held last value is positive.
double k_constant(const MixingProfile& profile);

//! A bounded sequence: sup_i ||X_i||_inf <= M, mixing profile, and an
//! optional dependent-variance proxy v^2 <= K M^2.
struct SequenceSpec {
  double M = 1.0;
  MixingProfile profile = MixingProfile::independent();
  std::optional<double> v_squared;
  bool stationary = true;

  //! Throws std::invalid_argument on M <= 0 or v^2 outside [0, K M^2].
  void validate() const;

  //! v^2 when set, otherwise its universal majorant K M^2.
  double v_squared_or_bound() const;
};

//! Geometric profile of a stationary two-state chain with
//! P(0 -> 1) = p and P(1 -> 0) = q.
//!
//! The second eigenvalue is lambda = 1 - p - q and the chain satisfies
//! alpha(k) = pi0 pi1 |lambda|^k <= exp(-2ck) with c = -log|lambda| / 2.
MixingProfile markov2_mixing(double p, double q);

struct SeriesOptions {
  double tolerance = 1e-12;
  std::size_t max_terms = 10'000'000;
};

//! Cov(X_i, X_j) for i <= j (1-based).
using CovarianceOracle = std::function<double(std::size_t, std::size_t)>;

//! Optional majorant for covariances the oracle is not asked about:
//! |Cov(X_i, X_j)| <= 4 alpha(j - i) M^2.
struct CovarianceTail {
  const MixingProfile* profile = nullptr;
  double M = 0.0;
};

//! v^2 = sup_i ( Var X_i + 2 sum_{j > i} |Cov(X_i, X_j)| ).
//!
//! The supremum runs over 1 <= i <= horizon and the oracle is evaluated for
//! lags j - i <= horizon. Lags beyond the horizon are bounded with the
//! mixing majorant when `tail` carries a profile, and dropped otherwise.
double v_squared_general(const CovarianceOracle& cov, std::size_t horizon,
                         CovarianceTail tail = {});

//! A nonincreasing map u -> Q(u) on (0, 1].
class QuantileFunction {
public:
  explicit QuantileFunction(std::function<double(double)> q);

  //! Step function: Q(u) = values[i] for u in (u[i-1], u[i]], with
  //! u = breakpoints, which must be increasing and end at 1.
  static QuantileFunction from_table(std::vector<double> breakpoints,
                                     std::vector<double> values);

  double operator()(double u) const { return q_(u); }

private:
  std::function<double(double)> q_;
};

//! v^2 = Var X_1 + 4 sum_{i >= 1} E[X_1^2 1{|X_1| >= Q(2 alpha_i)}] for a
//! stationary sequence.
//!
//! Terms with 2 alpha_i below the series tolerance are treated as zero (the
//! mixing has died out), and the sum stops early once a term vanishes since
//! terms are nonincreasing in i.
double v_squared_stationary(double var_x1,
                            const std::function<double(double)>& second_moment_tail,
                            const QuantileFunction& q, const MixingProfile& profile,
                            SeriesOptions options = {});

} // namespace mixbound::mixing
