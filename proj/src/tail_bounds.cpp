#include "mixbound/tail_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mixbound/cantor_blocks.hpp"

namespace mixbound::bounds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_x_M(double x, double M) {
  if (!(x >= 0.0))
    throw std::invalid_argument("deviation x must be nonnegative");
  if (!(M > 0.0))
    throw std::invalid_argument("M must be positive");
}

void check_t(double t) {
  if (!(t >= 0.0))
    throw std::domain_error("t must be nonnegative");
}

void check_theorem(const TheoremConstants& t, const char* name) {
  if (!(t.C1 > 0.0 && t.C2 > 0.0 && t.C3 > 0.0))
    throw std::invalid_argument(std::string(name) + " constants must be positive");
}

double loglog_factor(double n) { return std::log(n) * std::log(std::log(n)); }

// Closed-form peel values A_0 = n, ..., A_L for a threshold stopping rule.
std::vector<double> peel_values(double n, double threshold) {
  std::vector<double> A{n};
  while (A.back() > threshold && A.back() >= 2.0) {
    const double a = A.back();
    const double delta = cantor::default_delta(a);
    const auto k = cantor::cantor_level(a, delta);
    A.push_back(a - a * std::pow(1.0 - delta, double(k)));
  }
  return A;
}

struct Composite {
  double sigma = 0.0;
  double kappa = 0.0;
  void add(double sigma2, double kappa_part) {
    sigma += std::sqrt(sigma2);
    kappa += kappa_part;
  }
};

// A stretch of length B with |S| <= B, E S^2 <= B min(B, v2) and tB <= 4
// (M = 1): log E exp(tS) <= 3.1 B min(B, v2) t^2 <= that over (1 - tB/4).
void add_small_stretch(Composite& acc, double B, double v2) {
  acc.add(3.1 * B * std::min(B, v2), B / 4.0);
}

// Y_j of a peel level: block parameters for M = 1.
void add_cantor_level(Composite& acc, double A, double v2, double c, double C_prime) {
  if (A < 2.0 * std::max(c, 10.0)) {
    add_small_stretch(acc, A, v2);
    return;
  }
  const double v = std::sqrt(v2);
  const double sigma = std::sqrt(C_prime) * (v * std::sqrt(A) + 1.0 / std::sqrt(A));
  acc.add(sigma * sigma, std::log(A) / c0_constant(c));
}

} // namespace

std::string to_string(ConstantsSource source) {
  switch (source) {
  case ConstantsSource::explicit_replay:
    return "explicit";
  case ConstantsSource::user:
    return "user";
  case ConstantsSource::calibrated:
    return "calibrated";
  }
  return "?";
}

std::string to_string(FractionForm form) {
  switch (form) {
  case FractionForm::block:
    return "block";
  case FractionForm::block_log:
    return "block_log";
  case FractionForm::bern1:
    return "bern1";
  case FractionForm::bern2:
    return "bern2";
  }
  return "?";
}

double c0_constant(double c) {
  if (!(c > 0.0))
    throw std::invalid_argument("mixing rate must be positive");
  return std::min(c / 8.0, std::sqrt(c * std::numbers::ln2 / 8.0));
}

double explicit_constant(double c, double K) {
  if (!(c > 0.0))
    throw std::invalid_argument("mixing rate must be positive");
  return 6.2 * K + (1.0 / c + 8.0 / (c * c)) + 2.0 / (c * std::numbers::ln2);
}

double default_c_prime(double c) {
  if (!(c > 0.0))
    throw std::invalid_argument("mixing rate must be positive");
  return std::max(6.2, 32.0 * (c + 1.0) / (c * c));
}

ReplayPoint replay_bern1(double n, double c, double K, double C_prime, double C_bc) {
  ReplayPoint pt;
  pt.n = n;
  pt.v2 = K;
  Composite acc;
  const double big = std::max(c, 10.0);
  if (n <= 16.0 * big * big) {
    add_small_stretch(acc, n, K);
  } else {
    const auto A = peel_values(n, n / std::log(n));
    pt.levels = A.size() - 1;
    for (std::size_t j = 0; j + 1 < A.size(); ++j)
      add_cantor_level(acc, A[j], K, c, C_prime);
    const double last = A.back();
    if (last >= std::max(4.0, 2.0 * c))
      acc.add(C_bc * last * std::log(last), 2.0 / std::min(c, 1.0));
    else
      add_small_stretch(acc, last, K);
  }
  pt.sigma2 = acc.sigma * acc.sigma;
  pt.kappa = acc.kappa;
  return pt;
}

ReplayPoint replay_bern2(double n, double v2, double c, double C_prime) {
  ReplayPoint pt;
  pt.n = n;
  pt.v2 = v2;
  Composite acc;
  const double threshold = 2.0 * std::max(c, 10.0);
  if (n <= threshold) {
    add_small_stretch(acc, n, v2);
  } else {
    const auto A = peel_values(n, threshold);
    pt.levels = A.size() - 1;
    for (std::size_t j = 0; j + 1 < A.size(); ++j)
      add_cantor_level(acc, A[j], v2, c, C_prime);
    add_small_stretch(acc, A.back(), v2);
  }
  pt.sigma2 = acc.sigma * acc.sigma;
  pt.kappa = acc.kappa;
  return pt;
}

namespace {

std::vector<double> replay_grid(double first) {
  std::vector<double> grid;
  for (double n = first; n <= 4000.0; n += 1.0)
    grid.push_back(n);
  const int steps = 600;
  const double lo = std::log(4000.0), hi = std::log(1e15);
  for (int i = 1; i <= steps; ++i)
    grid.push_back(std::exp(lo + (hi - lo) * i / steps));
  return grid;
}

TheoremConstants replay_constants_bern1(double c, double K, double C_prime, double C_bc) {
  TheoremConstants out{0.0, 0.0, kInf};
  for (const double n : replay_grid(4.0)) {
    const auto pt = replay_bern1(n, c, K, C_prime, C_bc);
    const double L = loglog_factor(n);
    out.C2 = std::max(out.C2, pt.sigma2 / n);
    out.C1 = std::max(out.C1, pt.kappa / L);
    out.C3 = std::min(out.C3, std::min(n / (4.0 * pt.sigma2), L / (2.0 * pt.kappa)));
  }
  return out;
}

TheoremConstants replay_constants_bern2(double c, double K, double C_prime) {
  TheoremConstants out{0.0, 0.0, kInf};
  const int v_steps = 40;
  const double threshold = 2.0 * std::max(c, 10.0);
  for (const double n : replay_grid(2.0)) {
    // The peel does not depend on v; replay it once per n.
    const auto A = n <= threshold ? std::vector<double>{n} : peel_values(n, threshold);
    const double L = std::log(n) * std::log(n);
    // Levels above the threshold contribute sqrt(C') (v sqrt(A) + 1/sqrt(A)) to sigma.
    double root_sum = 0.0, inv_root_sum = 0.0, level_kappa = 0.0;
    for (std::size_t j = 0; j + 1 < A.size(); ++j) {
      root_sum += std::sqrt(A[j]);
      inv_root_sum += 1.0 / std::sqrt(A[j]);
      level_kappa += std::log(A[j]) / c0_constant(c);
    }
    const double B = A.back();
    for (int i = 0; i <= v_steps; ++i) {
      const double v2 = K * double(i * i) / double(v_steps * v_steps);
      Composite acc;
      acc.sigma = std::sqrt(C_prime) * (std::sqrt(v2) * root_sum + inv_root_sum);
      acc.kappa = level_kappa;
      add_small_stretch(acc, B, v2);
      const double sigma2 = acc.sigma * acc.sigma;
      const double D = n * v2 + 1.0;
      out.C2 = std::max(out.C2, sigma2 / D);
      out.C1 = std::max(out.C1, acc.kappa / L);
      out.C3 = std::min(out.C3, std::min(D / (4.0 * sigma2), L / (2.0 * acc.kappa)));
    }
  }
  return out;
}

} // namespace

BoundConstants make_constants(double c, const mixing::MixingProfile& profile,
                              const ConstantOverrides& overrides) {
  if (!(c > 0.0) || std::isinf(c))
    throw std::invalid_argument("mixing rate must be positive and finite");
  BoundConstants k;
  k.c = c;
  k.c0 = c0_constant(c);
  k.K = mixing::k_constant(profile);
  k.C_bc = explicit_constant(c, k.K);
  if (overrides.C_prime && !(*overrides.C_prime > 0.0))
    throw std::invalid_argument("C' must be positive");
  k.C_prime = overrides.C_prime.value_or(default_c_prime(c));

  if (overrides.bern1)
    check_theorem(*overrides.bern1, "bern1");
  if (overrides.bern2)
    check_theorem(*overrides.bern2, "bern2");
  k.bern1 = overrides.bern1 ? *overrides.bern1 : replay_constants_bern1(c, k.K, k.C_prime, k.C_bc);
  k.bern2 = overrides.bern2 ? *overrides.bern2 : replay_constants_bern2(c, k.K, k.C_prime);
  k.source = (overrides.bern1 || overrides.bern2 || overrides.C_prime)
                 ? ConstantsSource::user
                 : ConstantsSource::explicit_replay;
  return k;
}

std::optional<double> log_bern1_bound(double n, double x, double M, const BoundConstants& k) {
  check_x_M(x, M);
  if (!(n >= 4.0) || !k.bern1)
    return std::nullopt;
  if (x == 0.0)
    return 0.0;
  return -k.bern1->C3 * x * x / (n * M * M + M * x * loglog_factor(n));
}

std::optional<double> log_bern2_bound(double n, double x, double M, double v2,
                                      const BoundConstants& k) {
  check_x_M(x, M);
  if (!(v2 >= 0.0))
    throw std::invalid_argument("v^2 must be nonnegative");
  if (!(n >= 2.0) || !k.bern2)
    return std::nullopt;
  if (x == 0.0)
    return 0.0;
  const double log_n = std::log(n);
  return -k.bern2->C3 * x * x / (v2 * n + M * M + x * M * log_n * log_n);
}

std::optional<double> log_bern3_bound(double n, double x, double M, const BoundConstants& k) {
  check_x_M(x, M);
  if (!(n >= 2.0 * std::max(k.c, 2.0)))
    return std::nullopt;
  if (x == 0.0)
    return 0.0;
  return -x * x / (n * std::log(n) * 4.0 * k.C_bc * M * M + 4.0 * M * x / std::min(k.c, 1.0));
}

namespace {

std::optional<double> to_probability(std::optional<double> log_value) {
  if (!log_value)
    return std::nullopt;
  return std::min(1.0, std::exp(*log_value));
}

} // namespace

std::optional<double> bern1_bound(double n, double x, double M, const BoundConstants& k) {
  return to_probability(log_bern1_bound(n, x, M, k));
}

std::optional<double> bern2_bound(double n, double x, double M, double v2,
                                  const BoundConstants& k) {
  return to_probability(log_bern2_bound(n, x, M, v2, k));
}

std::optional<double> bern3_bound(double n, double x, double M, const BoundConstants& k) {
  return to_probability(log_bern3_bound(n, x, M, k));
}

double laplace_small_t(double B, double t, double M, double v2, double c) {
  if (!(B >= 2.0))
    throw std::domain_error("laplace_small_t needs B >= 2");
  if (!(M > 0.0) || !(c > 0.0) || !(v2 >= 0.0))
    throw std::invalid_argument("laplace_small_t needs M > 0, c > 0, v^2 >= 0");
  check_t(t);
  if (t * M > 0.5)
    throw std::domain_error("laplace_small_t needs tM <= 1/2");
  if (t * M > std::sqrt(c / (2.0 * B)))
    throw std::domain_error("laplace_small_t needs tM <= sqrt(c / (2B))");
  if (t == 0.0)
    return 0.0;
  return B * (6.2 * t * t * v2 + (M * t / 2.0) * std::exp(-c / (2.0 * t * M)));
}

double laplace_cantor(double A, double t, double M, double v2, const BoundConstants& k,
                      CantorVariant variant) {
  if (!(M > 0.0) || !(v2 >= 0.0))
    throw std::invalid_argument("laplace_cantor needs M > 0 and v^2 >= 0");
  check_t(t);
  const double c = k.c;
  if (variant == CantorVariant::cantor_set) {
    if (!(A >= 2.0 * std::max(c, 10.0)))
      throw std::domain_error("cantor_set bound needs A >= 2 (c max 10)");
    if (t * M > k.c0 / std::log(A))
      throw std::domain_error("cantor_set bound needs tM <= c0 / log A");
    if (t == 0.0)
      return 0.0;
    return 6.2 * v2 * t * t * A + (c + 1.0) / A * std::exp(-c / (4.0 * t * M));
  }
  if (!(A >= std::max(4.0, 2.0 * c)))
    throw std::domain_error("full_interval bound needs A >= 4 max 2c");
  if (!(t * M < std::min(c, 1.0) / 2.0))
    throw std::domain_error("full_interval bound needs tM < (c min 1) / 2");
  return k.C_bc * t * t * M * M * A * std::log(A);
}

double LaplaceBound::operator()(double t) const {
  check_t(t);
  if (!(t < valid_t_max))
    throw std::domain_error("t outside the Laplace bound's range");
  if (t == 0.0)
    return 0.0;
  return sigma2 * t * t / (1.0 - kappa * t);
}

LaplaceBound fraction_parameters(FractionForm form, double size, double M, double v2,
                                 const BoundConstants& k) {
  if (!(M > 0.0) || !(v2 >= 0.0))
    throw std::invalid_argument("fraction bound needs M > 0 and v^2 >= 0");
  LaplaceBound b;
  switch (form) {
  case FractionForm::block: {
    if (!(size >= 2.0 * std::max(k.c, 10.0)))
      throw std::domain_error("block needs A >= 2 (c max 10)");
    const double s = std::sqrt(v2) + M / size;
    b.sigma2 = k.C_prime * size * s * s;
    b.kappa = M * std::log(size) / k.c0;
    break;
  }
  case FractionForm::block_log:
    if (!(size >= std::max(4.0, 2.0 * k.c)))
      throw std::domain_error("block_log needs A >= 4 max 2c");
    b.sigma2 = k.C_bc * size * M * M * std::log(size);
    b.kappa = 2.0 * M / std::min(k.c, 1.0);
    break;
  case FractionForm::bern1:
    if (!k.bern1)
      throw std::domain_error("bern1 constants are not set");
    if (!(size >= 4.0))
      throw std::domain_error("bern1 needs n >= 4");
    b.sigma2 = k.bern1->C2 * size * M * M;
    b.kappa = k.bern1->C1 * M * loglog_factor(size);
    break;
  case FractionForm::bern2: {
    if (!k.bern2)
      throw std::domain_error("bern2 constants are not set");
    if (!(size >= 2.0))
      throw std::domain_error("bern2 needs n >= 2");
    const double log_n = std::log(size);
    b.sigma2 = k.bern2->C2 * (size * v2 + M * M);
    b.kappa = k.bern2->C1 * M * log_n * log_n;
    break;
  }
  }
  b.valid_t_max = b.kappa > 0.0 ? 1.0 / b.kappa : kInf;
  return b;
}

double laplace_fraction(FractionForm form, double size, double t, double M, double v2,
                        const BoundConstants& k) {
  const auto b = fraction_parameters(form, size, M, v2, k);
  check_t(t);
  if (!(t < b.valid_t_max))
    throw std::domain_error(to_string(form) + ": t at or beyond the pole");
  return b(t);
}

LaplaceBound aggregate_breta(std::span<const LaplaceBound> parts) {
  if (parts.empty())
    throw std::invalid_argument("aggregate_breta needs at least one part");
  double sigma = 0.0, kappa = 0.0, valid = kInf;
  for (const auto& p : parts) {
    if (!(p.sigma2 >= 0.0 && p.kappa >= 0.0))
      throw std::invalid_argument("Laplace parts need sigma2, kappa >= 0");
    sigma += std::sqrt(p.sigma2);
    kappa += p.kappa;
    valid = std::min(valid, p.valid_t_max);
  }
  LaplaceBound out;
  out.sigma2 = sigma * sigma;
  out.kappa = kappa;
  out.valid_t_max = kappa > 0.0 ? std::min(valid, 1.0 / kappa) : valid;
  return out;
}

BretaResult aggregate_breta(std::span<const LaplaceBound> parts, double t) {
  BretaResult r;
  r.composite = aggregate_breta(parts);
  r.value = r.composite(t);
  return r;
}

double log_chernoff_tail(const LaplaceBound& bound, double x) {
  if (!(x >= 0.0))
    throw std::invalid_argument("deviation x must be nonnegative");
  if (x == 0.0)
    return 0.0;
  return -x * x / (4.0 * bound.sigma2 + 2.0 * bound.kappa * x);
}

TailReport best_bound(double n, double x, const mixing::SequenceSpec& spec,
                      const BoundConstants& k) {
  spec.validate();
  TailReport r;
  r.n = n;
  r.x = x;
  r.M = spec.M;
  r.v2 = spec.v_squared_or_bound();
  r.log_bern1 = log_bern1_bound(n, x, r.M, k);
  r.log_bern2 = log_bern2_bound(n, x, r.M, r.v2, k);
  r.log_bern3 = log_bern3_bound(n, x, r.M, k);
  r.bern1 = to_probability(r.log_bern1);
  r.bern2 = to_probability(r.log_bern2);
  r.bern3 = to_probability(r.log_bern3);

  const std::pair<const char*, const std::optional<double>*> candidates[] = {
      {"bern1", &r.log_bern1}, {"bern2", &r.log_bern2}, {"bern3", &r.log_bern3}};
  bool any = false;
  for (const auto& [label, value] : candidates) {
    if (!*value)
      continue;
    if (!any || **value < r.log_best) {
      r.log_best = **value;
      r.best_label = label;
    }
    any = true;
  }
  if (!any)
    throw std::domain_error("no bound applies at n = " + std::to_string(n));
  r.log_best = std::min(0.0, r.log_best);
  r.best = std::exp(r.log_best);
  return r;
}

BoundConstants calibrate_constants(const BoundConstants& base, const TailOracle& oracle,
                                   const CalibrationGrid& grid) {
  if (!(grid.M > 0.0) || !(grid.v2 >= 0.0))
    throw std::invalid_argument("calibration grid needs M > 0 and v^2 >= 0");
  double c3_1 = kInf, c3_2 = kInf;
  for (const std::size_t n : grid.n_values) {
    const double dn = double(n);
    for (const double x : grid.x_values) {
      if (!(x > 0.0))
        continue;
      const double p = oracle(n, x);
      if (!(p > 0.0))
        continue;
      if (p >= 1.0 - 1e-12)
        throw std::domain_error("P(|S_n| >= x) = 1 at n = " + std::to_string(n) +
                                ", x = " + std::to_string(x) + ": no positive C3");
      const double log_p = std::log(p);
      const double M = grid.M;
      if (dn >= 4.0)
        c3_1 = std::min(c3_1, -log_p * (dn * M * M + M * x * loglog_factor(dn)) / (x * x));
      if (dn >= 2.0) {
        const double log_n = std::log(dn);
        c3_2 = std::min(c3_2,
                        -log_p * (grid.v2 * dn + M * M + x * M * log_n * log_n) / (x * x));
      }
    }
  }
  BoundConstants out = base;
  if (std::isfinite(c3_1)) {
    TheoremConstants t = base.bern1.value_or(TheoremConstants{});
    t.C3 = c3_1;
    out.bern1 = t;
  }
  if (std::isfinite(c3_2)) {
    TheoremConstants t = base.bern2.value_or(TheoremConstants{});
    t.C3 = c3_2;
    out.bern2 = t;
  }
  out.source = ConstantsSource::calibrated;
  return out;
}

} // namespace mixbound::bounds
