#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixbound/mixing_model.hpp"

namespace mixbound::bounds {

//! Constants C1, C2, C3 of a bound family that depend only on c.
//!
//! Laplace form: log E exp(t S_n) <= C2 t^2 D / (1 - C1 t M L), tail form:
//! P(|S_n| >= x) <= exp(-C3 x^2 / (D + x M L)), where (D, L) is
//! (n M^2, log n log log n) for bern1 and (n v^2 + M^2, (log n)^2) for
//! bern2.
struct TheoremConstants {
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
};

enum class ConstantsSource { explicit_replay, user, calibrated };

std::string to_string(ConstantsSource source);

struct BoundConstants {
  double c = 1.0;
  double c0 = 0.0;       // (c / 8) min sqrt(c log 2 / 8)
  double K = 1.0;        // 1 + 8 sum alpha_i
  double C_bc = 0.0;     // 6.2 K + (1/c + 8/c^2) + 2/(c log 2)
  double C_prime = 0.0;  // Cantor-set fraction constant
  std::optional<TheoremConstants> bern1;
  std::optional<TheoremConstants> bern2;
  ConstantsSource source = ConstantsSource::explicit_replay;
};

struct ConstantOverrides {
  std::optional<TheoremConstants> bern1;
  std::optional<TheoremConstants> bern2;
  std::optional<double> C_prime;
};

double c0_constant(double c);
double explicit_constant(double c, double K);

//! Smallest C' with 6.2 v^2 t^2 A + (c+1) A^-1 exp(-c/(4tM)) <= C' t^2 A (v + M/A)^2,
//! obtained from exp(-y) <= 2 / y^2: max(6.2, 32 (c+1) / c^2).
double default_c_prime(double c);

//! Explicit parts always computed; bern1/bern2 constants from the overrides
//! (source = user) or by replaying the proof aggregation over an n grid
//! (source = explicit_replay). Throws std::invalid_argument on c <= 0 or a
//! nonpositive override.
BoundConstants make_constants(double c, const mixing::MixingProfile& profile,
                              const ConstantOverrides& overrides = {});

//! Composite sub-gamma parameters of S_n from the proof replay, for M = 1.
struct ReplayPoint {
  double n = 0.0;
  double v2 = 0.0;
  double sigma2 = 0.0;
  double kappa = 0.0;
  std::size_t levels = 0;
};

ReplayPoint replay_bern1(double n, double c, double K, double C_prime, double C_bc);
ReplayPoint replay_bern2(double n, double v2, double c, double C_prime);

// Probability bounds. nullopt marks an inapplicable bound (precondition
// failed or constants missing). Results are clamped to <= 1. The log_ forms
// return the exponent and never underflow. x < 0 or M <= 0 throw
// std::invalid_argument.

std::optional<double> log_bern1_bound(double n, double x, double M, const BoundConstants& k);
std::optional<double> log_bern2_bound(double n, double x, double M, double v2,
                                      const BoundConstants& k);
std::optional<double> log_bern3_bound(double n, double x, double M, const BoundConstants& k);

//! exp(-C3 x^2 / (n M^2 + M x log n log log n)); needs n >= 4 and bern1.
std::optional<double> bern1_bound(double n, double x, double M, const BoundConstants& k);
//! exp(-C3 x^2 / (v^2 n + M^2 + x M (log n)^2)); needs n >= 2 and bern2.
std::optional<double> bern2_bound(double n, double x, double M, double v2,
                                  const BoundConstants& k);
//! exp(-x^2 / (4 C_bc n log n M^2 + 4 M x / (c min 1))); needs n >= 2 (c max 2).
std::optional<double> bern3_bound(double n, double x, double M, const BoundConstants& k);

//! B (6.2 t^2 v^2 + (M t / 2) exp(-c / (2 t M))) for 0 < tM <= 1/2 min sqrt(c/(2B)).
//! Violations throw std::domain_error naming the constraint.
double laplace_small_t(double B, double t, double M, double v2, double c);

enum class CantorVariant { cantor_set, full_interval };

//! cantor_set: 6.2 v^2 t^2 A + (c+1) A^-1 exp(-c/(4tM)), A >= 2 (c max 10),
//! 0 <= tM <= c0 / log A. full_interval: C_bc t^2 M^2 A log A,
//! A >= 4 max 2c, 0 <= tM < (c min 1) / 2.
double laplace_cantor(double A, double t, double M, double v2, const BoundConstants& k,
                      CantorVariant variant);

enum class FractionForm { block, block_log, bern1, bern2 };

std::string to_string(FractionForm form);

//! t -> sigma2 t^2 / (1 - kappa t) on [0, valid_t_max).
struct LaplaceBound {
  double sigma2 = 0.0;
  double kappa = 0.0;
  double valid_t_max = 0.0;

  //! Throws std::domain_error outside [0, valid_t_max).
  double operator()(double t) const;
};

//! Fraction forms as LaplaceBound parameters. `size` is A for block/block_log and
//! n for bern1/bern2.
//!   block:  C' t^2 A (v + M/A)^2 / (1 - t M log A / c0)
//!   block_log: C_bc t^2 A M^2 log A / (1 - 2 t M / (c min 1))
//!   bern1:  C2 t^2 n M^2 / (1 - C1 t M log n log log n)
//!   bern2:  C2 t^2 (n v^2 + M^2) / (1 - C1 t M (log n)^2)
LaplaceBound fraction_parameters(FractionForm form, double size, double M, double v2,
                                 const BoundConstants& k);

//! Evaluates a fraction form; t at or beyond the pole throws std::domain_error.
double laplace_fraction(FractionForm form, double size, double t, double M, double v2,
                        const BoundConstants& k);

struct BretaResult {
  LaplaceBound composite;
  double value = 0.0;
};

//! (sigma t)^2 / (1 - kappa t) with sigma = sum sqrt(sigma2_i), kappa = sum kappa_i.
//! Throws std::domain_error when t is outside the composite range and
//! std::invalid_argument on an empty part list.
BretaResult aggregate_breta(std::span<const LaplaceBound> parts, double t);

//! Composite parameters only.
LaplaceBound aggregate_breta(std::span<const LaplaceBound> parts);

//! Chernoff bound from a Laplace bound: exp(-x^2 / (4 sigma2 + 2 kappa x)).
double log_chernoff_tail(const LaplaceBound& bound, double x);

struct TailReport {
  double n = 0.0;
  double x = 0.0;
  double M = 0.0;
  double v2 = 0.0;
  std::optional<double> bern1;
  std::optional<double> bern2;
  std::optional<double> bern3;
  std::optional<double> log_bern1;
  std::optional<double> log_bern2;
  std::optional<double> log_bern3;
  double best = 1.0;
  double log_best = 0.0;
  std::string best_label;
};

//! Minimum of the applicable bounds. Throws std::domain_error when none apply.
TailReport best_bound(double n, double x, const mixing::SequenceSpec& spec,
                      const BoundConstants& k);

//! Exact or trusted tail P(|S_n| >= x) for calibration.
using TailOracle = std::function<double(std::size_t n, double x)>;

struct CalibrationGrid {
  std::vector<std::size_t> n_values;
  std::vector<double> x_values;
  double M = 1.0;
  double v2 = 0.0;  // used by the bern2 denominator
};

//! Largest C3 whose bound stays above the oracle on the grid, the minimum
//! of -log P * D / x^2 over points with x > 0 and P > 0. bern1 and bern2 C3 are replaced, C1/C2 kept, and
//! source becomes calibrated. Throws std::domain_error when a grid point has
//! x > 0 and P >= 1 (no positive C3 exists).
BoundConstants calibrate_constants(const BoundConstants& base, const TailOracle& oracle,
                                   const CalibrationGrid& grid);

} // namespace mixbound::bounds
