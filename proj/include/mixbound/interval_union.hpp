#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace mixbound {

using Rational = boost::multiprecision::cpp_rational;

//! Half-open interval (lo, hi] with lo < hi.
template <class T>
struct BasicInterval {
  T lo;
  T hi;

  T length() const { return hi - lo; }
  friend bool operator==(const BasicInterval&, const BasicInterval&) = default;
};

//! Sorted union of pairwise disjoint half-open intervals.
template <class T>
class BasicIntervalUnion {
public:
  using interval_type = BasicInterval<T>;

  BasicIntervalUnion() = default;

  //! Throws std::invalid_argument unless the intervals are nonempty, sorted
  //! and pairwise disjoint (touching endpoints are allowed).
  explicit BasicIntervalUnion(std::vector<interval_type> parts) : parts_(std::move(parts)) {
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (!(parts_[i].lo < parts_[i].hi))
        throw std::invalid_argument("interval (lo, hi] needs lo < hi");
      if (i > 0 && parts_[i].lo < parts_[i - 1].hi)
        throw std::invalid_argument("intervals must be sorted and disjoint");
    }
  }

  //! Appends an interval to the right of all current parts.
  void push_back(interval_type part) {
    if (!(part.lo < part.hi))
      throw std::invalid_argument("interval (lo, hi] needs lo < hi");
    if (!parts_.empty() && part.lo < parts_.back().hi)
      throw std::invalid_argument("intervals must be appended in order");
    parts_.push_back(part);
  }

  std::span<const interval_type> parts() const noexcept { return parts_; }
  std::size_t size() const noexcept { return parts_.size(); }
  bool empty() const noexcept { return parts_.empty(); }
  const interval_type& operator[](std::size_t i) const { return parts_[i]; }
  auto begin() const noexcept { return parts_.begin(); }
  auto end() const noexcept { return parts_.end(); }

  T measure() const;

  //! Smallest distance between consecutive parts; zero with fewer than two.
  T min_gap() const {
    T best{};
    for (std::size_t i = 1; i < parts_.size(); ++i) {
      const T gap = parts_[i].lo - parts_[i - 1].hi;
      if (i == 1 || gap < best)
        best = gap;
    }
    return best;
  }

  friend bool operator==(const BasicIntervalUnion&, const BasicIntervalUnion&) = default;

private:
  std::vector<interval_type> parts_;
};

template <class T>
T BasicIntervalUnion<T>::measure() const {
  T sum{};
  for (const auto& p : parts_)
    sum += p.length();
  return sum;
}

// Compensated (Neumaier) summation keeps the measure identities of large
// Cantor schemes within 1e-12 relative.
template <>
double BasicIntervalUnion<double>::measure() const;

using Interval = BasicInterval<double>;
using IntervalUnion = BasicIntervalUnion<double>;
using ExactInterval = BasicInterval<Rational>;
using ExactIntervalUnion = BasicIntervalUnion<Rational>;

//! Complement of `set` inside (lo, hi]; `set` must lie within (lo, hi].
IntervalUnion complement_within(const IntervalUnion& set, double lo, double hi);

//! Running Neumaier-compensated sum.
class CompensatedSum {
public:
  void add(double v) noexcept;
  double value() const noexcept { return sum_ + carry_; }

private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

double compensated_sum(std::span<const double> values) noexcept;

} // namespace mixbound
