#include "mixbound/mdp_verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mixbound/rng.hpp"

namespace mixbound::mdp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// Sum_{k,l} w_k w_l lambda^|k-l| by the first-order recursion
// r_k = lambda (r_{k-1} + w_{k-1}).
double geometric_quadratic(const std::vector<double>& w, double lambda) {
  double total = 0.0, r = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (k > 0)
      r = lambda * (r + prev);
    total += w[k] * w[k] + 2.0 * w[k] * r;
    prev = w[k];
  }
  return total;
}

// Cell weights of an interval: w[j] for cell first + j (cells 1-based,
// cell k covers (k-1, k]).
std::pair<std::size_t, std::vector<double>> cell_weights(const Interval& iv) {
  const auto first = std::size_t(std::floor(iv.lo)) + 1;
  const auto last = std::max(first, std::size_t(std::ceil(iv.hi)));
  std::vector<double> w;
  w.reserve(last - first + 1);
  for (std::size_t k = first; k <= last; ++k)
    w.push_back(std::max(0.0, std::min(iv.hi, double(k)) - std::max(iv.lo, double(k - 1))));
  return {first, std::move(w)};
}

double lambda_of(const lab::ProcessSpec& spec) {
  if (const auto* ch = std::get_if<lab::TwoStateChain>(&spec.kind))
    return ch->lambda();
  if (std::holds_alternative<lab::Iid>(spec.kind))
    return 0.0;
  throw std::invalid_argument("closed-form covariances need a chain or i.i.d. spec");
}

} // namespace

SpeedDiagnostic speed_condition_ok(std::size_t n, double a_n, double threshold) {
  if (n < 16)
    throw std::domain_error("speed checks need n >= 16");
  const double dn = double(n);
  const double l = std::log(dn), ll = std::log(l);
  SpeedDiagnostic d;
  d.value = dn * a_n / (l * l * ll * ll);
  d.threshold = threshold;
  d.a_small = a_n < 1.0;
  d.pass = d.value >= threshold && d.a_small;
  return d;
}

TriangularDiagnostic speed_condition_triangular(std::size_t n, double a_n, double M_n,
                                                double threshold, double m_threshold) {
  if (n < 16)
    throw std::domain_error("speed checks need n >= 16");
  if (!(M_n > 0.0))
    throw std::domain_error("speed check needs M_n > 0");
  const double dn = double(n);
  const double l = std::log(dn);
  TriangularDiagnostic d;
  d.value = dn * a_n / (M_n * M_n * l * l * l * l);
  d.threshold = threshold;
  d.a_small = a_n < 1.0;
  d.M_over_sqrt_n = M_n / std::sqrt(dn);
  d.M_small = d.M_over_sqrt_n < m_threshold;
  d.pass = d.value >= threshold && d.a_small && d.M_small;
  return d;
}

RateFunction RateFunction::scaled(double sigma2) {
  if (!(sigma2 > 0.0))
    throw std::invalid_argument("rate function needs sigma^2 > 0");
  return {Form::scaled, sigma2};
}

double RateFunction::operator()(double t) const {
  return form == Form::half_square ? t * t / 2.0 : t * t / (2.0 * sigma2);
}

double ARule::operator()(std::size_t n) const {
  if (!(scale > 0.0))
    throw std::invalid_argument("a_n rule needs a positive scale");
  return scale * std::pow(double(n), exponent);
}

std::string to_string(Method method) {
  return method == Method::exact ? "exact" : "monte_carlo";
}

double autocovariance(const lab::ProcessSpec& spec, std::size_t k) {
  if (const auto* ch = std::get_if<lab::TwoStateChain>(&spec.kind)) {
    const double d = ch->b - ch->a;
    return ch->pi0() * ch->pi1() * d * d * std::pow(ch->lambda(), double(k));
  }
  if (const auto* iid = std::get_if<lab::Iid>(&spec.kind)) {
    if (k > 0)
      return 0.0;
    if (iid->law == lab::Iid::Law::rademacher)
      return 1.0;
    return iid->M * iid->M / 3.0;
  }
  throw std::invalid_argument("closed-form covariances need a chain or i.i.d. spec");
}

double sigma_ratio(const lab::ProcessSpec& spec, std::size_t n, const SigmaOptions& options) {
  spec.validate();
  if (n == 0)
    throw std::invalid_argument("sigma_ratio needs n >= 1");
  if (std::holds_alternative<lab::BoundedAr1>(spec.kind)) {
    if (options.reps < 2)
      throw std::invalid_argument("sigma_ratio simulation needs reps >= 2");
    double mean = 0.0, m2 = 0.0;
    for (std::size_t r = 0; r < options.reps; ++r) {
      const auto path = lab::simulate(spec, n, options.seed, r);
      double s = 0.0;
      for (const double v : path.values)
        s += v;
      const double d = s - mean;
      mean += d / double(r + 1);
      m2 += d * (s - mean);
    }
    return m2 / double(options.reps - 1) / double(n);
  }
  const double g0 = autocovariance(spec, 0);
  const double lambda = lambda_of(spec);
  double cross = 0.0, lk = 1.0;
  for (std::size_t k = 1; k < n; ++k) {
    lk *= lambda;
    if (std::abs(lk) < 1e-300)
      break;
    cross += (1.0 - double(k) / double(n)) * lk;
  }
  return g0 * (1.0 + 2.0 * cross);
}

void empirical_rate(MdpExperiment& ex) {
  ex.spec.validate();
  if (ex.n_grid.empty() || ex.t_grid.empty())
    throw std::invalid_argument("MDP experiment needs nonempty n and t grids");
  ex.estimates.clear();
  std::uint64_t cell_index = 0;
  for (const std::size_t n : ex.n_grid) {
    const double a = ex.a_rule(n);
    if (!(a > 0.0))
      throw std::invalid_argument("a_n must be positive");
    const double sigma = std::sqrt(sigma_ratio(ex.spec, n) * double(n));
    SpeedDiagnostic speed;
    if (n >= 16)
      speed = speed_condition_ok(n, a);
    for (const double t : ex.t_grid) {
      MdpCell cell;
      cell.n = n;
      cell.t = t;
      cell.a_n = a;
      cell.sigma_n = sigma;
      cell.x = std::abs(t) * sigma / std::sqrt(a);
      cell.target = -ex.rate(t);
      cell.speed = speed;
      const lab::TailSide side = ex.two_sided ? lab::TailSide::two_sided
                                 : t >= 0.0   ? lab::TailSide::upper
                                              : lab::TailSide::lower;
      if (ex.method == Method::exact) {
        if (std::holds_alternative<lab::Iid>(ex.spec.kind) &&
            std::get<lab::Iid>(ex.spec.kind).law == lab::Iid::Law::rademacher && n > 62) {
          double log_p = lab::rademacher_log_upper_tail(n, cell.x);
          if (side == lab::TailSide::two_sided)
            log_p = cell.x <= 0.0 ? 0.0 : std::min(0.0, log_p + std::log(2.0));
          cell.probability = std::exp(log_p);
          cell.estimate = a * log_p;
        } else {
          lab::ExactOptions opt;
          opt.side = side;
          opt.max_chain_n = ex.max_chain_n;
          cell.probability = lab::exact_tail_small(ex.spec, n, cell.x, opt);
          cell.estimate = a * safe_log(cell.probability);
        }
        cell.ci_low = cell.ci_high = cell.estimate;
      } else {
        lab::McOptions opt;
        opt.side = side;
        opt.confidence = ex.confidence;
        opt.jobs = ex.jobs;
        const auto est = lab::mc_tail(ex.spec, n, cell.x, ex.reps, derive_seed(ex.seed, cell_index), opt);
        cell.probability = est.p_hat;
        cell.estimate = a * safe_log(est.p_hat);
        cell.ci_low = a * safe_log(est.ci_low);
        cell.ci_high = a * safe_log(est.ci_high);
        if (est.hits == 0)
          cell.note = "p_hat = 0; estimate is -inf, ci_high bounds the rate";
      }
      if (std::isinf(cell.estimate) && cell.note.empty())
        cell.note = "probability is 0";
      cell.gap = cell.estimate - cell.target;
      ex.estimates.push_back(std::move(cell));
      ++cell_index;
    }
  }
}

BlockVarianceReport block_variance_ratio(const lab::ProcessSpec& spec,
                                         const cantor::BlockPlan& plan,
                                         const BlockVarianceOptions& options) {
  spec.validate();
  const double n = double(plan.n);
  for (const auto& b : plan.blocks)
    if (b.lo < 0.0 || b.hi > n * (1.0 + 1e-12))
      throw std::invalid_argument("plan blocks escape (0, n]");
  BlockVarianceReport rep;
  rep.method = options.method;
  const std::size_t blocks = plan.blocks.size();

  if (options.method == Method::exact) {
    const double lambda = lambda_of(spec);
    const double g0 = autocovariance(spec, 0);
    std::vector<double> total(plan.n + 1, 0.0);
    CompensatedSum var_sum;
    for (const auto& b : plan.blocks) {
      auto [first, w] = cell_weights(b);
      var_sum.add(g0 * geometric_quadratic(w, lambda));
      for (std::size_t j = 0; j < w.size() && first + j <= plan.n; ++j)
        total[first + j - 1] += w[j];
    }
    rep.var_sum = var_sum.value();
    rep.var_total = g0 * geometric_quadratic(total, lambda);
  } else {
    if (options.reps < 2)
      throw std::invalid_argument("Monte Carlo block variance needs reps >= 2");
    std::vector<double> mean(blocks, 0.0), m2(blocks, 0.0);
    double tmean = 0.0, tm2 = 0.0;
    for (std::size_t r = 0; r < options.reps; ++r) {
      const auto path = lab::simulate(spec, plan.n, options.seed, r);
      double s_total = 0.0;
      for (std::size_t i = 0; i < blocks; ++i) {
        const double s = lab::interval_sum(path, IntervalUnion({plan.blocks[i]}));
        s_total += s;
        const double d = s - mean[i];
        mean[i] += d / double(r + 1);
        m2[i] += d * (s - mean[i]);
      }
      const double d = s_total - tmean;
      tmean += d / double(r + 1);
      tm2 += d * (s_total - tmean);
    }
    CompensatedSum var_sum;
    for (std::size_t i = 0; i < blocks; ++i)
      var_sum.add(m2[i] / double(options.reps - 1));
    rep.var_sum = var_sum.value();
    rep.var_total = tm2 / double(options.reps - 1);
  }
  rep.cross_sum = rep.var_total - rep.var_sum;
  rep.ratio = rep.var_sum > 0.0 ? rep.var_total / rep.var_sum : 1.0;

  // Closed-form tail and the covariance-inequality bound, where available.
  if (!std::holds_alternative<lab::BoundedAr1>(spec.kind) && blocks > 0) {
    const double g0 = autocovariance(spec, 0);
    const double l = std::abs(lambda_of(spec));
    const double m0 = std::floor(plan.min_gap);
    const double tail = 2.0 * double(blocks - 1) * g0 * std::pow(l, m0) / ((1.0 - l) * (1.0 - l));
    rep.tail_bound = rep.var_sum > 0.0 ? tail / rep.var_sum : 0.0;
  }
  const double c = spec.profile().c_effective();
  const double M = spec.bound();
  const double g = plan.delta * std::sqrt(n * plan.a_n);
  if (std::isfinite(c) && g > 0.0) {
    const double e = std::exp(-c * g);
    rep.series_cov_bound =
        4.0 * std::ldexp(1.0, int(plan.k)) * M * M * n * plan.a_n * e / (1.0 - e);
  }
  return rep;
}

} // namespace mixbound::mdp
