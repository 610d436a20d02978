#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mixbound/interval_union.hpp"

namespace mixbound::cantor {

//! delta = log 2 / (2 log A), the middle-deletion ratio that keeps at least
//! half of [0, A]. Requires A >= 2.
double default_delta(double A);

//! Middle-deletion Cantor-like subset of [0, A].
//!
//! Starting from (0, A], each of `k` rounds removes the central fraction
//! `delta` of every current interval, leaving 2^k leaves of length
//! A ((1 - delta) / 2)^k. When built by `build_cantor`, k is the largest
//! integer with ((1 - delta) / 2)^k >= 1 / A.
template <class T>
struct BasicCantorScheme {
  T A;
  T delta;
  std::size_t k = 0;
  BasicIntervalUnion<T> leaves;

  //! A ((1 - delta) / 2)^k.
  T leaf_length() const;
  //! A (1 - delta)^k.
  T closed_form_measure() const;
  //! Width of the gaps created in round `level` (1-based):
  //! A delta ((1 - delta) / 2)^(level - 1).
  T gap_length(std::size_t level) const;
};

using CantorScheme = BasicCantorScheme<double>;
using ExactCantorScheme = BasicCantorScheme<Rational>;

//! Largest k with ((1 - delta) / 2)^k >= 1 / A.
std::size_t cantor_level(double A, double delta);

CantorScheme build_cantor(double A, double delta);
CantorScheme build_cantor_levels(double A, double delta, std::size_t levels);

//! Same construction in exact rational arithmetic.
ExactCantorScheme build_cantor_exact(const Rational& A, const Rational& delta);

//! Groups K_{A,level,j}, j = 1..2^level: consecutive runs of 2^(k - level)
//! leaves. Throws std::out_of_range unless level <= k.
std::vector<IntervalUnion> group(const CantorScheme& scheme, std::size_t level);

//! F_A(t) = Lebesgue measure of [0, t] minus the Cantor set.
//!
//! F_A has slope 0 on the leaves and slope 1 on the gaps, so it maps [0, A]
//! onto [0, A - measure(K_A)]. `inverse` is the right-continuous inverse
//! s -> sup{t : F_A(t) <= s}.
class GapMap {
public:
  explicit GapMap(const CantorScheme& scheme);

  double domain() const noexcept { return A_; }
  //! A - measure(K_A), as the total gap length.
  double total() const noexcept { return total_; }
  const IntervalUnion& gaps() const noexcept { return gaps_; }

  double operator()(double t) const;
  double inverse(double s) const;

  //! Preimage of a region of [0, total()] inside the gaps. Used to carry a
  //! region of the gap-collapsed process back to original coordinates.
  IntervalUnion pull_back(const IntervalUnion& region) const;

private:
  double A_;
  double total_ = 0.0;
  IntervalUnion gaps_;
  std::vector<double> offsets_;  // F_A at the left end of each gap
};

enum class PeelStop {
  relative,  // stop once A_j <= n / log n
  absolute,  // stop once A_j <= 2 max(c, 10)
};

//! Repeated removal of Cantor sets: A_0 = n, A_{i+1} = A_i - measure(K_{A_i}),
//! every level using default_delta(A_i).
struct PeelSequence {
  std::size_t n = 0;
  PeelStop stop = PeelStop::relative;
  double c = 1.0;
  double threshold = 0.0;
  std::vector<double> A_values;        // A_0 .. A_L
  std::vector<CantorScheme> schemes;   // levels 0 .. L-1
  std::size_t L = 0;
  std::size_t count_bound = 0;         // closed-form bound on L
  bool halving_ok = false;             // A_j <= n / 2^j for all j
  bool count_bound_ok = false;         // L <= count_bound
};

//! `c` only enters the absolute stopping rule.
PeelSequence peel(std::size_t n, PeelStop stop, double c = 1.0);

//! Regions of (0, n] integrated by each peel level: blocks[i] carries Y_i,
//! remainder carries Z_L. Together they partition (0, n].
struct PeelRegions {
  std::vector<IntervalUnion> blocks;
  IntervalUnion remainder;
};

PeelRegions peel_regions(const PeelSequence& seq);

enum class BlockBranch { a_branch, b_branch, triangular };

std::string to_string(BlockBranch branch);

//! Blocking parameters for the moderate-deviation argument on (0, n].
struct BlockPlan {
  std::size_t n = 0;
  double a_n = 0.0;
  double M_n = 1.0;             // 1 for the non-triangular rule
  BlockBranch branch = BlockBranch::b_branch;
  double epsilon_raw = 0.0;     // before the cap below log 2
  double epsilon = 0.0;
  bool epsilon_capped = false;  // warning: the formula reached log 2
  double delta = 0.0;
  std::size_t k = 0;
  IntervalUnion blocks;         // the 2^k leaves, one block per part
  IntervalUnion remainder;      // (0, n] minus the blocks
  double min_gap = 0.0;

  double block_scale() const noexcept { return M_n > 1.0 ? M_n : 1.0; }

  //! Names of violated plan invariants; empty when the plan is sound.
  std::vector<std::string> invariant_violations() const;
};

//! Requires n >= 16 and 0 < a_n < 1; throws std::domain_error
//! ("speed too small") when n a_n <= 1.
BlockPlan choose_mdp_blocking(std::size_t n, double a_n);

//! Triangular-array variant: epsilon = (sqrt(n a_n) / (M_n (log n)^2))^(-1/2)
//! and k_n uses the (M_n v 1)-scaled rule.
BlockPlan choose_mdp_blocking_triangular(std::size_t n, double a_n, double M_n);

} // namespace mixbound::cantor
