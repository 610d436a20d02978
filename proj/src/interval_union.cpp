#include "mixbound/interval_union.hpp"

#include <cmath>

namespace mixbound {

void CompensatedSum::add(double v) noexcept {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v))
    carry_ += (sum_ - t) + v;
  else
    carry_ += (v - t) + sum_;
  sum_ = t;
}

double compensated_sum(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (const double v : values)
    acc.add(v);
  return acc.value();
}

template <>
double BasicIntervalUnion<double>::measure() const {
  CompensatedSum acc;
  for (const auto& p : parts_)
    acc.add(p.length());
  return acc.value();
}

IntervalUnion complement_within(const IntervalUnion& set, double lo, double hi) {
  IntervalUnion out;
  double cursor = lo;
  for (const auto& p : set) {
    if (p.lo < lo || p.hi > hi)
      throw std::invalid_argument("set escapes the enclosing interval");
    if (p.lo > cursor)
      out.push_back({cursor, p.lo});
    cursor = p.hi;
  }
  if (hi > cursor)
    out.push_back({cursor, hi});
  return out;
}

} // namespace mixbound
