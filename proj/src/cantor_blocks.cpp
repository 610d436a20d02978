#include "mixbound/cantor_blocks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <type_traits>

namespace mixbound::cantor {

namespace {

template <class T>
T ipow(T base, std::size_t k) {
  T out{1};
  for (std::size_t i = 0; i < k; ++i)
    out *= base;
  return out;
}

constexpr std::size_t kMaxLevels = 28;

template <class T>
std::size_t level_for(const T& A, const T& delta) {
  const T ratio = (T{1} - delta) / T{2};
  std::size_t k = 0;
  T scaled = A;  // A * ratio^k
  while (scaled * ratio >= T{1}) {
    scaled *= ratio;
    ++k;
  }
  return k;
}

template <class T>
BasicCantorScheme<T> construct(const T& A, const T& delta, std::size_t levels) {
  if (levels > kMaxLevels)
    throw std::length_error("Cantor construction deeper than 28 levels");
  const T ratio = (T{1} - delta) / T{2};
  if constexpr (std::is_same_v<T, double>) {
    // Both endpoints are rounded from the exact address, so the stored
    // lengths do not share one rounding error.
    std::vector<double> shift(levels);
    for (std::size_t j = 1; j <= levels; ++j)
      shift[j - 1] = A * ipow(ratio, j - 1) - A * ipow(ratio, j);
    const double leaf = A * ipow(ratio, levels);
    const std::size_t count = std::size_t{1} << levels;
    std::vector<Interval> leaves;
    leaves.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      CompensatedSum lo;
      for (std::size_t j = 1; j <= levels; ++j)
        if ((i >> (levels - j)) & 1u)
          lo.add(shift[j - 1]);
      CompensatedSum hi = lo;
      hi.add(leaf);
      leaves.push_back({lo.value(), std::min(A, hi.value())});
    }
    return BasicCantorScheme<T>{A, delta, levels, IntervalUnion(std::move(leaves))};
  }
  std::vector<BasicInterval<T>> current{{T{0}, A}};
  T child = A;
  for (std::size_t j = 1; j <= levels; ++j) {
    child *= ratio;
    std::vector<BasicInterval<T>> next;
    next.reserve(current.size() * 2);
    for (const auto& p : current) {
      next.push_back({p.lo, p.lo + child});
      next.push_back({p.hi - child, p.hi});
    }
    current = std::move(next);
  }
  BasicCantorScheme<T> scheme{A, delta, levels, BasicIntervalUnion<T>(std::move(current))};
  return scheme;
}

void check_scheme_args(double A, double delta) {
  if (!(A >= 2.0))
    throw std::domain_error("Cantor scheme needs A >= 2");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("Cantor scheme needs 0 < delta < 1");
}

} // namespace

template <class T>
T BasicCantorScheme<T>::leaf_length() const {
  return A * ipow((T{1} - delta) / T{2}, k);
}

template <class T>
T BasicCantorScheme<T>::closed_form_measure() const {
  return A * ipow(T{1} - delta, k);
}

template <class T>
T BasicCantorScheme<T>::gap_length(std::size_t level) const {
  if (level == 0 || level > k)
    throw std::out_of_range("gap level must lie in [1, k]");
  return A * delta * ipow((T{1} - delta) / T{2}, level - 1);
}

template struct BasicCantorScheme<double>;
template struct BasicCantorScheme<Rational>;

double default_delta(double A) {
  if (!(A >= 2.0))
    throw std::domain_error("default_delta needs A >= 2");
  return std::numbers::ln2 / (2.0 * std::log(A));
}

std::size_t cantor_level(double A, double delta) {
  check_scheme_args(A, delta);
  return level_for(A, delta);
}

CantorScheme build_cantor(double A, double delta) {
  check_scheme_args(A, delta);
  return construct(A, delta, level_for(A, delta));
}

CantorScheme build_cantor_levels(double A, double delta, std::size_t levels) {
  if (!(A > 0.0))
    throw std::domain_error("Cantor scheme needs A > 0");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::domain_error("Cantor scheme needs 0 < delta < 1");
  return construct(A, delta, levels);
}

ExactCantorScheme build_cantor_exact(const Rational& A, const Rational& delta) {
  if (A < 2)
    throw std::domain_error("Cantor scheme needs A >= 2");
  if (delta <= 0 || delta >= 1)
    throw std::domain_error("Cantor scheme needs 0 < delta < 1");
  return construct(A, delta, level_for(A, delta));
}

std::vector<IntervalUnion> group(const CantorScheme& scheme, std::size_t level) {
  if (level > scheme.k)
    throw std::out_of_range("group level exceeds the scheme level k");
  const std::size_t per_group = std::size_t{1} << (scheme.k - level);
  const std::size_t groups = std::size_t{1} << level;
  std::vector<IntervalUnion> out;
  out.reserve(groups);
  const auto leaves = scheme.leaves.parts();
  for (std::size_t j = 0; j < groups; ++j)
    out.emplace_back(std::vector<Interval>(leaves.begin() + std::ptrdiff_t(j * per_group),
                                           leaves.begin() + std::ptrdiff_t((j + 1) * per_group)));
  return out;
}

GapMap::GapMap(const CantorScheme& scheme)
    : A_(scheme.A), gaps_(complement_within(scheme.leaves, 0.0, scheme.A)) {
  offsets_.reserve(gaps_.size());
  CompensatedSum acc;
  for (const auto& g : gaps_) {
    offsets_.push_back(acc.value());
    acc.add(g.length());
  }
  total_ = acc.value();
}

double GapMap::operator()(double t) const {
  t = std::clamp(t, 0.0, A_);
  const auto parts = gaps_.parts();
  const auto it = std::partition_point(parts.begin(), parts.end(),
                                       [t](const Interval& g) { return g.lo < t; });
  if (it == parts.begin())
    return 0.0;
  const auto g = std::size_t(it - parts.begin()) - 1;
  return offsets_[g] + std::min(t, parts[g].hi) - parts[g].lo;
}

double GapMap::inverse(double s) const {
  if (s >= total_)
    return A_;
  s = std::max(s, 0.0);
  const auto parts = gaps_.parts();
  std::size_t g = std::size_t(
      std::partition_point(offsets_.begin(), offsets_.end(), [s](double off) { return off <= s; }) -
      offsets_.begin());
  g = g == 0 ? 0 : g - 1;
  return parts[g].lo + (s - offsets_[g]);
}

IntervalUnion GapMap::pull_back(const IntervalUnion& region) const {
  std::vector<Interval> pieces;
  const auto parts = gaps_.parts();
  std::size_t g = 0;
  for (const auto& r : region) {
    if (r.lo < -1e-9 * (1.0 + total_) || r.hi > total_ * (1.0 + 1e-12) + 1e-12)
      throw std::invalid_argument("region escapes the gap-map range");
    while (g < parts.size() && offsets_[g] + parts[g].length() <= r.lo)
      ++g;
    for (std::size_t h = g; h < parts.size() && offsets_[h] < r.hi; ++h) {
      const double lo = std::max(r.lo, offsets_[h]);
      const double hi = std::min(r.hi, offsets_[h] + parts[h].length());
      const double a = parts[h].lo + (lo - offsets_[h]);
      const double b = parts[h].lo + (hi - offsets_[h]);
      if (!(a < b))
        continue;
      // Consecutive region parts may touch inside one gap.
      if (!pieces.empty() && a <= pieces.back().hi)
        pieces.back().hi = std::max(pieces.back().hi, b);
      else
        pieces.push_back({a, b});
    }
  }
  return IntervalUnion(std::move(pieces));
}

PeelSequence peel(std::size_t n, PeelStop stop, double c) {
  if (n < 4)
    throw std::domain_error("peel needs n >= 4");
  if (!(c > 0.0))
    throw std::invalid_argument("mixing rate must be positive");
  const double dn = double(n);
  PeelSequence seq;
  seq.n = n;
  seq.stop = stop;
  seq.c = c;
  seq.threshold = stop == PeelStop::relative ? dn / std::log(dn) : 2.0 * std::max(c, 10.0);
  if (stop == PeelStop::relative) {
    seq.count_bound = std::size_t(std::floor(std::log(std::log(dn)) / std::numbers::ln2)) + 1;
  } else {
    const double ratio = (std::log(dn) - std::log(seq.threshold)) / std::numbers::ln2;
    seq.count_bound = std::size_t(std::max(0.0, std::floor(ratio))) + 1;
  }

  seq.A_values.push_back(dn);
  while (true) {
    const double A = seq.A_values.back();
    CantorScheme scheme = build_cantor(A, default_delta(A));
    const double next = GapMap(scheme).total();
    seq.schemes.push_back(std::move(scheme));
    seq.A_values.push_back(next);
    if (next <= seq.threshold)
      break;
  }
  seq.L = seq.schemes.size();

  seq.halving_ok = true;
  for (std::size_t j = 0; j < seq.A_values.size(); ++j)
    if (seq.A_values[j] > dn / std::ldexp(1.0, int(j)) * (1.0 + 1e-12))
      seq.halving_ok = false;
  seq.count_bound_ok = seq.L <= seq.count_bound;
  return seq;
}

PeelRegions peel_regions(const PeelSequence& seq) {
  std::vector<GapMap> maps;
  maps.reserve(seq.schemes.size());
  for (const auto& s : seq.schemes)
    maps.emplace_back(s);

  // A region expressed at level i is pulled back through levels i-1 .. 0.
  auto to_original = [&maps](IntervalUnion region, std::size_t level) {
    for (std::size_t i = level; i-- > 0;)
      region = maps[i].pull_back(region);
    return region;
  };

  PeelRegions out;
  for (std::size_t i = 0; i < seq.schemes.size(); ++i)
    out.blocks.push_back(to_original(seq.schemes[i].leaves, i));
  const double last = seq.A_values.back();
  if (last > 0.0)
    out.remainder = to_original(IntervalUnion({{0.0, last}}), seq.schemes.size());
  return out;
}

std::string to_string(BlockBranch branch) {
  switch (branch) {
  case BlockBranch::a_branch:
    return "A";
  case BlockBranch::b_branch:
    return "B";
  case BlockBranch::triangular:
    return "triangular";
  }
  return "?";
}

namespace {

void check_plan_args(std::size_t n, double a_n) {
  if (n < 16)
    throw std::domain_error("blocking plan needs n >= 16");
  if (!(a_n > 0.0 && a_n < 1.0))
    throw std::domain_error("blocking plan needs 0 < a_n < 1");
  if (double(n) * a_n <= 1.0)
    throw std::domain_error("speed too small");
}

BlockPlan finish_plan(BlockPlan plan) {
  const double dn = double(plan.n);
  const double cap = std::numbers::ln2 * (1.0 - 1e-9);
  plan.epsilon_capped = plan.epsilon_raw >= std::numbers::ln2;
  plan.epsilon = plan.epsilon_capped ? cap : plan.epsilon_raw;
  plan.delta = plan.epsilon / std::log(dn);

  const double target = std::sqrt(dn * plan.a_n);
  const double ratio = (1.0 - plan.delta) / 2.0;
  std::size_t k = 1;
  double scaled = dn * plan.block_scale() * ratio;
  while (scaled > target) {
    scaled *= ratio;
    ++k;
  }
  plan.k = k;
  CantorScheme scheme = build_cantor_levels(dn, plan.delta, k);
  plan.blocks = std::move(scheme.leaves);
  plan.remainder = complement_within(plan.blocks, 0.0, dn);
  plan.min_gap = plan.blocks.min_gap();
  return plan;
}

} // namespace

BlockPlan choose_mdp_blocking(std::size_t n, double a_n) {
  check_plan_args(n, a_n);
  const double dn = double(n);
  const double log_n = std::log(dn);
  const double root = std::sqrt(dn * a_n);
  BlockPlan plan;
  plan.n = n;
  plan.a_n = a_n;
  if (dn * a_n >= std::pow(log_n, 5)) {
    plan.branch = BlockBranch::a_branch;
    plan.epsilon_raw = 1.0 / std::sqrt(root / (log_n * log_n));
  } else {
    plan.branch = BlockBranch::b_branch;
    plan.epsilon_raw = 1.0 / std::sqrt(root / (log_n * std::log(log_n)));
  }
  return finish_plan(std::move(plan));
}

BlockPlan choose_mdp_blocking_triangular(std::size_t n, double a_n, double M_n) {
  check_plan_args(n, a_n);
  if (!(M_n > 0.0))
    throw std::domain_error("triangular plan needs M_n > 0");
  const double dn = double(n);
  const double log_n = std::log(dn);
  BlockPlan plan;
  plan.n = n;
  plan.a_n = a_n;
  plan.M_n = M_n;
  plan.branch = BlockBranch::triangular;
  plan.epsilon_raw = 1.0 / std::sqrt(std::sqrt(dn * a_n) / (M_n * log_n * log_n));
  return finish_plan(std::move(plan));
}

std::vector<std::string> BlockPlan::invariant_violations() const {
  std::vector<std::string> bad;
  const double dn = double(n);
  const double root = std::sqrt(dn * a_n);
  const double scale = block_scale();
  const double ratio = (1.0 - delta) / 2.0;
  const double tol = 1e-12;

  if (std::abs(delta - epsilon / std::log(dn)) > tol * delta)
    bad.emplace_back("delta = epsilon / log n");
  if (!(epsilon < std::numbers::ln2))
    bad.emplace_back("epsilon < log 2");
  if (dn * scale * std::pow(ratio, double(k)) > root * (1.0 + tol) ||
      (k > 1 && dn * scale * std::pow(ratio, double(k - 1)) <= root * (1.0 - tol)))
    bad.emplace_back("k_n is the first level meeting the block-length rule");
  if (blocks.size() != (std::size_t{1} << k))
    bad.emplace_back("2^k blocks");
  for (const auto& b : blocks)
    if (scale * b.length() > root * (1.0 + tol)) {
      bad.emplace_back("block length <= sqrt(n a_n) / (M_n v 1)");
      break;
    }
  if (min_gap < delta * root / scale * (1.0 - tol))
    bad.emplace_back("min_gap >= delta sqrt(n a_n) / (M_n v 1)");
  if (remainder.measure() > delta * dn * double(k) * (1.0 + tol))
    bad.emplace_back("measure(R_n) <= delta n k");
  if (std::ldexp(1.0, int(k)) > 2.0 * scale * std::sqrt(dn / a_n) * (1.0 + tol))
    bad.emplace_back("2^k <= 2 (M_n v 1) sqrt(n / a_n)");
  if (!blocks.empty() && (blocks[0].lo < 0.0 || blocks.parts().back().hi > dn))
    bad.emplace_back("blocks within (0, n]");
  if (std::abs(blocks.measure() + remainder.measure() - dn) > 1e-9 * dn)
    bad.emplace_back("blocks and remainder partition (0, n]");
  return bad;
}

} // namespace mixbound::cantor
