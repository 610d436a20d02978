#include "mixbound/mixing_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mixbound::mixing {

namespace {

constexpr double kAlphaMax = 0.25;

// sum_{m >= from} alpha(m), from >= 1. Infinite for a tabulated profile that
// holds a positive last value.
double alpha_tail_sum(const MixingProfile& profile, std::size_t from) {
  if (profile.kind() == MixingProfile::Kind::tabulated) {
    const auto table = profile.table();
    if (!table.empty() && table.back() > 0.0)
      return std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (std::size_t k = from; k <= table.size(); ++k)
      sum += table[k - 1];
    return sum;
  }
  const double c = profile.c_effective();
  if (std::isinf(c))
    return 0.0;
  // First lag at which exp(-2ck) drops below the 1/4 clamp.
  auto unclamped_from = static_cast<std::size_t>(
      std::max(1.0, std::ceil(std::log(4.0) / (2.0 * c))));
  while (unclamped_from > 1 && std::exp(-2.0 * c * double(unclamped_from - 1)) <= kAlphaMax)
    --unclamped_from;
  while (std::exp(-2.0 * c * double(unclamped_from)) > kAlphaMax)
    ++unclamped_from;
  const std::size_t start = std::max(from, unclamped_from);
  double clamped = 0.0;
  if (from < unclamped_from)
    clamped = kAlphaMax * double(unclamped_from - from);
  const double geometric_tail = std::exp(-2.0 * c * double(start)) / -std::expm1(-2.0 * c);
  return clamped + geometric_tail;
}

} // namespace

MixingProfile MixingProfile::geometric(double c) {
  if (!(c > 0.0))
    throw std::invalid_argument("geometric mixing rate must be positive");
  MixingProfile p;
  p.kind_ = Kind::geometric;
  p.c_ = c;
  return p;
}

MixingProfile MixingProfile::independent() {
  return geometric(std::numeric_limits<double>::infinity());
}

MixingProfile MixingProfile::tabulated(std::vector<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double a = values[i];
    if (!(a >= 0.0 && a <= kAlphaMax))
      throw std::invalid_argument("tabulated alpha must lie in [0, 1/4]");
    if (i > 0 && a > values[i - 1])
      throw std::invalid_argument("tabulated alpha must be nonincreasing");
  }
  MixingProfile p;
  p.kind_ = Kind::tabulated;
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] > 0.0)
      c = std::min(c, -std::log(values[i]) / (2.0 * double(i + 1)));
  p.c_ = c;
  p.values_ = std::move(values);
  return p;
}

bool MixingProfile::is_independent() const noexcept {
  if (kind_ == Kind::geometric)
    return std::isinf(c_);
  return std::all_of(values_.begin(), values_.end(), [](double a) { return a == 0.0; });
}

MixingProfile MixingProfile::with_eigenvalue(double lambda) const {
  MixingProfile p = *this;
  p.eigenvalue_ = lambda;
  return p;
}

double MixingProfile::alpha(std::size_t k) const noexcept {
  if (k == 0)
    return kAlphaMax;
  if (kind_ == Kind::tabulated) {
    if (values_.empty())
      return 0.0;
    return k <= values_.size() ? values_[k - 1] : values_.back();
  }
  return std::min(kAlphaMax, std::exp(-2.0 * c_ * double(k)));
}

double alpha_at(const MixingProfile& profile, std::size_t k) noexcept {
  return profile.alpha(k);
}

double k_constant(const MixingProfile& profile) {
  const double tail = alpha_tail_sum(profile, 1);
  if (std::isinf(tail))
    throw std::domain_error("non-summable profile");
  return 1.0 + 8.0 * tail;
}

void SequenceSpec::validate() const {
  if (!(M > 0.0))
    throw std::invalid_argument("M must be positive");
  if (v_squared) {
    const double bound = k_constant(profile) * M * M;
    if (!(*v_squared >= 0.0) || *v_squared > bound * (1.0 + 1e-12))
      throw std::invalid_argument("v^2 must lie in [0, K M^2]");
  }
}

double SequenceSpec::v_squared_or_bound() const {
  return v_squared ? *v_squared : k_constant(profile) * M * M;
}

MixingProfile markov2_mixing(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("transition probabilities must lie in [0, 1]");
  const double lambda = 1.0 - p - q;
  if (std::abs(lambda) >= 1.0)
    throw std::domain_error("non-mixing chain");
  if (lambda == 0.0)
    return MixingProfile::independent().with_eigenvalue(0.0);
  return MixingProfile::geometric(-std::log(std::abs(lambda)) / 2.0).with_eigenvalue(lambda);
}

double v_squared_general(const CovarianceOracle& cov, std::size_t horizon, CovarianceTail tail) {
  if (horizon == 0)
    throw std::invalid_argument("horizon must be positive");
  double mixing_tail = 0.0;
  if (tail.profile != nullptr)
    mixing_tail = 8.0 * tail.M * tail.M * alpha_tail_sum(*tail.profile, horizon + 1);

  double best = 0.0;
  for (std::size_t i = 1; i <= horizon; ++i) {
    const double var = cov(i, i);
    if (var < 0.0)
      throw std::domain_error("covariance oracle returned a negative variance at i = " +
                              std::to_string(i));
    double cross = 0.0;
    for (std::size_t j = i + 1; j <= i + horizon; ++j)
      cross += std::abs(cov(i, j));
    best = std::max(best, var + 2.0 * cross + mixing_tail);
  }
  return best;
}

QuantileFunction::QuantileFunction(std::function<double(double)> q) : q_(std::move(q)) {
  if (!q_)
    throw std::invalid_argument("empty quantile function");
}

QuantileFunction QuantileFunction::from_table(std::vector<double> breakpoints,
                                              std::vector<double> values) {
  if (breakpoints.empty() || breakpoints.size() != values.size())
    throw std::invalid_argument("quantile table needs matching nonempty columns");
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > 0.0) || (i > 0 && breakpoints[i] <= breakpoints[i - 1]))
      throw std::invalid_argument("quantile breakpoints must increase within (0, 1]");
    if (values[i] < 0.0 || (i > 0 && values[i] > values[i - 1]))
      throw std::invalid_argument("quantile values must be nonnegative and nonincreasing");
  }
  if (breakpoints.back() != 1.0)
    throw std::invalid_argument("quantile breakpoints must end at 1");
  return QuantileFunction([b = std::move(breakpoints), v = std::move(values)](double u) {
    const auto it = std::lower_bound(b.begin(), b.end(), u);
    if (it == b.end())
      return v.back();
    return v[std::size_t(it - b.begin())];
  });
}

double v_squared_stationary(double var_x1, const std::function<double(double)>& second_moment_tail,
                            const QuantileFunction& q, const MixingProfile& profile,
                            SeriesOptions options) {
  if (var_x1 < 0.0)
    throw std::domain_error("negative variance");
  if (var_x1 == 0.0)
    return 0.0;
  double sum = 0.0;
  for (std::size_t i = 1;; ++i) {
    const double a = profile.alpha(i);
    if (2.0 * a < options.tolerance)
      break;
    const double term = second_moment_tail(q(std::min(1.0, 2.0 * a)));
    if (term < 0.0)
      throw std::domain_error("negative truncated second moment");
    if (term == 0.0)
      break;
    sum += term;
    if (i >= options.max_terms)
      throw std::domain_error("non-summable profile");
  }
  return var_x1 + 4.0 * sum;
}

} // namespace mixbound::mixing
