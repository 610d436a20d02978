#include "mixbound/process_lab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "mixbound/rng.hpp"

namespace mixbound::lab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Streams X_1, X_2, ... of a spec from one engine.
class Sampler {
public:
  Sampler(const ProcessSpec& spec, Engine engine) : spec_(spec), engine_(std::move(engine)) {
    offset_ = spec.offset();
    if (const auto* ar = std::get_if<BoundedAr1>(&spec_.kind)) {
      for (std::size_t i = 0; i < ar->effective_burn_in(); ++i)
        ar_step(*ar);
    }
  }

  double next() {
    return std::visit(
        overloaded{
            [this](const TwoStateChain& ch) {
              const double u = uniform01(engine_);
              if (first_) {
                state_ = u < ch.pi1() ? 1 : 0;
                first_ = false;
              } else if (state_ == 0) {
                state_ = u < ch.p ? 1 : 0;
              } else {
                state_ = u < ch.q ? 0 : 1;
              }
              return (state_ == 1 ? ch.b : ch.a) - offset_;
            },
            [this](const BoundedAr1& ar) { return ar_step(ar) - offset_; },
            [this](const Iid& iid) {
              const double u = uniform01(engine_);
              if (iid.law == Iid::Law::rademacher)
                return (u < 0.5 ? -1.0 : 1.0) - offset_;
              return iid.M * (2.0 * u - 1.0) - offset_;
            }},
        spec_.kind);
  }

private:
  double ar_step(const BoundedAr1& ar) {
    const double e = ar.innovation_half_width * (2.0 * uniform01(engine_) - 1.0);
    ar_x_ = std::clamp(ar.phi * ar_x_ + e, -ar.M, ar.M);
    return ar_x_;
  }

  const ProcessSpec& spec_;
  Engine engine_;
  double offset_ = 0.0;
  bool first_ = true;
  int state_ = 0;
  double ar_x_ = 0.0;
};

void check_region(const IntervalUnion& region, double n) {
  for (const auto& r : region)
    if (r.lo < 0.0 || r.hi > n * (1.0 + 1e-12))
      throw std::invalid_argument("region escapes (0, n]");
}

double log_add(double a, double b) {
  if (a == kNegInf)
    return b;
  if (b == kNegInf)
    return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double log_binomial(std::size_t n, std::size_t k) {
  return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
         std::lgamma(double(n - k) + 1.0);
}

// Exact binomial coefficients for n <= 62.
std::vector<std::uint64_t> binomial_row(std::size_t n) {
  std::vector<std::uint64_t> row(n + 1, 0);
  row[0] = 1;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t k = i; k > 0; --k)
      row[k] += row[k - 1];
  return row;
}

// P^k of the chain.
struct Power {
  double p00, p01, p10, p11;
};

Power chain_power(const TwoStateChain& ch, std::size_t k) {
  const double lk = std::pow(ch.lambda(), double(k));
  const double pi0 = ch.pi0(), pi1 = ch.pi1();
  return {pi0 + pi1 * lk, pi1 * (1.0 - lk), pi0 * (1.0 - lk), pi1 + pi0 * lk};
}

double transition(const Power& P, int from, int to) {
  if (from == 0)
    return to == 0 ? P.p00 : P.p01;
  return to == 0 ? P.p10 : P.p11;
}

double trajectory_probability(const TwoStateChain& ch, std::uint64_t mask, std::size_t n) {
  int s = int(mask & 1U);
  double prob = s == 1 ? ch.pi1() : ch.pi0();
  for (std::size_t i = 1; i < n; ++i) {
    const int t = int((mask >> i) & 1U);
    if (s == 0)
      prob *= t == 1 ? ch.p : 1.0 - ch.p;
    else
      prob *= t == 0 ? ch.q : 1.0 - ch.q;
    s = t;
  }
  return prob;
}

// Lemma check on a law over bit masks of p binary-valued coordinates scaled
// by `scale[i]` (outcome z_i = scale[i] * bit_i).
IbragimovReport check_binary_law(std::span<const double> probs, std::size_t p,
                                 std::span<const double> scale, double tolerance) {
  IbragimovReport r;
  r.p = p;
  const std::size_t count = std::size_t{1} << p;
  std::vector<double> means(p, 0.0);
  double mean_prod = 0.0;
  std::vector<bool> reachable(p, false);
  for (std::size_t z = 0; z < count; ++z) {
    if (probs[z] <= 0.0)
      continue;
    double prod = 1.0;
    for (std::size_t i = 0; i < p; ++i) {
      const bool bit = (z >> i) & 1U;
      if (bit) {
        means[i] += probs[z] * scale[i];
        reachable[i] = true;
      }
      prod *= bit ? scale[i] : 0.0;
    }
    mean_prod += probs[z] * prod;
  }
  r.mean_of_product = mean_prod;
  r.product_of_means = 1.0;
  r.norm_product = 1.0;
  for (std::size_t i = 0; i < p; ++i) {
    r.product_of_means *= means[i];
    r.norm_product *= reachable[i] ? scale[i] : 0.0;
  }
  for (std::size_t k = 1; k < p; ++k) {
    const std::size_t rows = std::size_t{1} << k, cols = std::size_t{1} << (p - k);
    std::vector<double> joint(rows * cols, 0.0);
    for (std::size_t z = 0; z < count; ++z)
      joint[(z & (rows - 1)) * cols + (z >> k)] += std::max(0.0, probs[z]);
    r.alpha = std::max(r.alpha, finite_alpha(joint, rows, cols));
  }
  const double rhs = double(p - 1) * r.alpha * r.norm_product;
  r.upper_slack = rhs - (r.mean_of_product - r.product_of_means);
  r.lower_slack = rhs - (r.product_of_means - r.mean_of_product);
  r.violated = r.upper_slack < -tolerance || r.lower_slack < -tolerance;
  return r;
}

} // namespace

std::size_t BoundedAr1::effective_burn_in() const {
  if (burn_in > 0)
    return burn_in;
  return std::size_t(std::ceil(10.0 / (1.0 - std::abs(phi))));
}

ProcessSpec ProcessSpec::chain(double p, double q, double a, double b) {
  ProcessSpec s;
  s.kind = TwoStateChain{p, q, a, b};
  s.validate();
  return s;
}

ProcessSpec ProcessSpec::ar1(double phi, double M, double half_width) {
  ProcessSpec s;
  s.kind = BoundedAr1{phi, M, half_width, 0};
  s.validate();
  return s;
}

ProcessSpec ProcessSpec::rademacher() {
  ProcessSpec s;
  s.kind = Iid{Iid::Law::rademacher, 1.0};
  return s;
}

ProcessSpec ProcessSpec::uniform(double M) {
  ProcessSpec s;
  s.kind = Iid{Iid::Law::uniform_centered, M};
  s.validate();
  return s;
}

void ProcessSpec::validate() const {
  std::visit(overloaded{[](const TwoStateChain& ch) {
                          if (!(ch.p > 0.0 && ch.p < 1.0 && ch.q > 0.0 && ch.q < 1.0))
                            throw std::invalid_argument("chain needs p, q in (0, 1)");
                          if (!std::isfinite(ch.a) || !std::isfinite(ch.b))
                            throw std::invalid_argument("chain values must be finite");
                        },
                        [](const BoundedAr1& ar) {
                          if (!(std::abs(ar.phi) < 1.0))
                            throw std::invalid_argument("AR(1) needs |phi| < 1");
                          if (!(ar.M > 0.0) || !(ar.innovation_half_width > 0.0))
                            throw std::invalid_argument(
                                "AR(1) needs positive clip bound and innovation width");
                        },
                        [](const Iid& iid) {
                          if (!(iid.M > 0.0))
                            throw std::invalid_argument("uniform law needs M > 0");
                        }},
             kind);
}

double ProcessSpec::raw_mean() const {
  return std::visit(overloaded{[](const TwoStateChain& ch) { return ch.pi0() * ch.a + ch.pi1() * ch.b; },
                               // symmetric innovations and clipping: the invariant law is symmetric
                               [](const BoundedAr1&) { return 0.0; },
                               [](const Iid&) { return 0.0; }},
                    kind);
}

double ProcessSpec::bound() const {
  const double off = offset();
  return std::visit(overloaded{[off](const TwoStateChain& ch) {
                                 return std::max(std::abs(ch.a - off), std::abs(ch.b - off));
                               },
                               [off](const BoundedAr1& ar) { return ar.M + std::abs(off); },
                               [off](const Iid& iid) {
                                 return (iid.law == Iid::Law::rademacher ? 1.0 : iid.M) +
                                        std::abs(off);
                               }},
                    kind);
}

mixing::MixingProfile ProcessSpec::profile() const {
  return std::visit(overloaded{[](const TwoStateChain& ch) { return mixing::markov2_mixing(ch.p, ch.q); },
                               [](const BoundedAr1& ar) {
                                 if (ar.phi == 0.0)
                                   return mixing::MixingProfile::independent();
                                 return mixing::MixingProfile::geometric(
                                     -std::log(std::abs(ar.phi)) / 2.0);
                               },
                               [](const Iid&) { return mixing::MixingProfile::independent(); }},
                    kind);
}

std::string ProcessSpec::name() const {
  return std::visit(overloaded{[](const TwoStateChain&) { return std::string("two_state_chain"); },
                               [](const BoundedAr1&) { return std::string("bounded_ar1"); },
                               [](const Iid& iid) {
                                 return std::string(iid.law == Iid::Law::rademacher
                                                        ? "rademacher"
                                                        : "uniform_centered");
                               }},
                    kind);
}

double SamplePath::at(double t) const {
  if (!(t >= 0.0 && t < double(values.size())))
    throw std::out_of_range("embedding time outside [0, n)");
  return values[std::size_t(std::floor(t))];
}

SamplePath simulate(const ProcessSpec& spec, std::size_t n, std::uint64_t seed,
                    std::uint64_t stream) {
  spec.validate();
  if (n == 0)
    throw std::invalid_argument("simulate needs n >= 1");
  Sampler sampler(spec, make_engine(seed, stream));
  SamplePath path;
  path.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    path.values.push_back(sampler.next());
  path.M = spec.bound();
  path.seed = seed;
  path.stream = stream;
  return path;
}

double interval_sum(std::span<const double> values, const IntervalUnion& region) {
  const double n = double(values.size());
  check_region(region, n);
  CompensatedSum acc;
  for (const auto& r : region) {
    const double hi = std::min(r.hi, n);
    auto k = std::size_t(std::floor(r.lo)) + 1;
    const auto last = std::size_t(std::ceil(hi));
    for (; k <= last; ++k) {
      const double overlap = std::min(hi, double(k)) - std::max(r.lo, double(k - 1));
      if (overlap > 0.0)
        acc.add(overlap * values[k - 1]);
    }
  }
  return acc.value();
}

double interval_sum(const SamplePath& path, const IntervalUnion& region) {
  return interval_sum(std::span<const double>(path.values), region);
}

WilsonInterval wilson_interval(std::size_t hits, std::size_t reps, double confidence) {
  if (reps == 0 || hits > reps)
    throw std::invalid_argument("Wilson interval needs 0 <= hits <= reps, reps > 0");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("confidence must lie in (0, 1)");
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 1.0 - (1.0 - confidence) / 2.0);
  const double n = double(reps);
  const double p = double(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  WilsonInterval w;
  w.low = hits == 0 ? 0.0 : std::clamp(center - half, 0.0, p);
  w.high = hits == reps ? 1.0 : std::clamp(center + half, p, 1.0);
  return w;
}

double tie_tolerance(double x) noexcept { return 1e-9 * (1.0 + std::abs(x)); }

std::vector<McTailEstimate> mc_tail_grid(const ProcessSpec& spec, std::size_t n,
                                         std::span<const double> xs, std::size_t reps,
                                         std::uint64_t seed, const McOptions& options) {
  spec.validate();
  if (reps < 100)
    throw std::invalid_argument("mc_tail needs reps >= 100");
  if (n == 0)
    throw std::invalid_argument("mc_tail needs n >= 1");
  const unsigned jobs = std::max(1U, std::min<unsigned>(options.jobs, unsigned(reps)));
  std::vector<std::vector<std::size_t>> hits(jobs, std::vector<std::size_t>(xs.size(), 0));

  auto work = [&](unsigned job) {
    const std::size_t begin = reps * job / jobs, end = reps * (job + 1) / jobs;
    for (std::size_t r = begin; r < end; ++r) {
      Sampler sampler(spec, make_engine(seed, r));
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        s += sampler.next();
      const double stat = options.side == TailSide::two_sided ? std::abs(s)
                          : options.side == TailSide::upper   ? s
                                                              : -s;
      for (std::size_t j = 0; j < xs.size(); ++j)
        if (stat >= xs[j] - tie_tolerance(xs[j]))
          ++hits[job][j];
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned j = 0; j < jobs; ++j)
      threads.emplace_back(work, j);
    for (auto& t : threads)
      t.join();
  }

  std::vector<McTailEstimate> out;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    std::size_t h = 0;
    for (unsigned job = 0; job < jobs; ++job)
      h += hits[job][j];
    McTailEstimate e;
    e.x = xs[j];
    e.reps = reps;
    e.hits = h;
    e.p_hat = double(h) / double(reps);
    const auto w = wilson_interval(h, reps, options.confidence);
    e.ci_low = w.low;
    e.ci_high = w.high;
    e.confidence = options.confidence;
    e.seed = seed;
    out.push_back(e);
  }
  return out;
}

McTailEstimate mc_tail(const ProcessSpec& spec, std::size_t n, double x, std::size_t reps,
                       std::uint64_t seed, const McOptions& options) {
  const double xs[] = {x};
  return mc_tail_grid(spec, n, xs, reps, seed, options).front();
}

double rademacher_log_upper_tail(std::size_t n, double s) {
  if (n == 0)
    return s <= tie_tolerance(s) ? 0.0 : kNegInf;
  // S = 2k - n >= s  <=>  k >= (n + s) / 2
  const double kmin_real = std::ceil((double(n) + s - tie_tolerance(s)) / 2.0);
  if (kmin_real <= 0.0)
    return 0.0;
  if (kmin_real > double(n))
    return kNegInf;
  const auto kmin = std::size_t(kmin_real);
  const double log_half_n = -double(n) * std::log(2.0);
  // Terms from k = kmin up, accumulated relative to the first term.
  double log_term = log_binomial(n, kmin);
  double acc = kNegInf;
  for (std::size_t k = kmin; k <= n; ++k) {
    acc = log_add(acc, log_term);
    if (k < n)
      log_term += std::log(double(n - k)) - std::log(double(k + 1));
    if (log_term < acc - 60.0)
      break;
  }
  return std::min(0.0, acc + log_half_n);
}

double exact_tail_small(const ProcessSpec& spec, std::size_t n, double x,
                        const ExactOptions& options) {
  spec.validate();
  if (n == 0)
    throw std::invalid_argument("exact_tail_small needs n >= 1");
  const double tol = tie_tolerance(x);
  const bool two = options.side == TailSide::two_sided;
  const double sign = options.side == TailSide::lower ? -1.0 : 1.0;
  if (x <= 0.0 && two)
    return 1.0;

  if (const auto* iid = std::get_if<Iid>(&spec.kind)) {
    if (iid->law != Iid::Law::rademacher)
      throw std::invalid_argument("exact enumeration needs a finite state space");
    if (spec.offset() != 0.0)
      throw std::invalid_argument("exact Rademacher path needs zero offset");
    if (n <= 62) {
      const auto row = binomial_row(n);
      std::uint64_t count = 0;
      for (std::size_t k = 0; k <= n; ++k) {
        const double s = 2.0 * double(k) - double(n);
        const double stat = two ? std::abs(s) : sign * s;
        if (stat >= x - tol)
          count += row[k];
      }
      return std::ldexp(double(count), -int(n));
    }
    const double upper = std::exp(rademacher_log_upper_tail(n, x));
    // symmetric law: P(S <= -x) = P(S >= x)
    if (!two)
      return upper;
    return std::min(1.0, 2.0 * upper);
  }

  const auto* ch = std::get_if<TwoStateChain>(&spec.kind);
  if (ch == nullptr)
    throw std::invalid_argument("exact enumeration needs a finite state space");
  if (n > options.max_chain_n || n > 30)
    throw std::length_error("exact enumeration budget exceeded: n = " + std::to_string(n) +
                            " > " + std::to_string(std::min<std::size_t>(options.max_chain_n, 30)));
  const double off = spec.offset();
  const double va = ch->a - off, vb = ch->b - off;
  long double total = 0.0L;
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    const int ones = std::popcount(mask);
    const double s = double(ones) * vb + double(int(n) - ones) * va;
    const double stat = two ? std::abs(s) : sign * s;
    if (stat >= x - tol)
      total += trajectory_probability(*ch, mask, n);
  }
  return std::clamp(double(total), 0.0, 1.0);
}

double finite_alpha(std::span<const double> joint, std::size_t rows, std::size_t cols) {
  if (joint.size() != rows * cols)
    throw std::invalid_argument("joint law size mismatch");
  std::vector<double> pr(rows, 0.0), pc(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      pr[i] += joint[i * cols + j];
      pc[j] += joint[i * cols + j];
    }
  std::vector<std::size_t> live_r, live_c;
  for (std::size_t i = 0; i < rows; ++i)
    if (pr[i] > 0.0)
      live_r.push_back(i);
  for (std::size_t j = 0; j < cols; ++j)
    if (pc[j] > 0.0)
      live_c.push_back(j);
  const bool by_rows = live_r.size() <= live_c.size();
  const auto& side = by_rows ? live_r : live_c;
  const auto& other = by_rows ? live_c : live_r;
  if (side.size() > 20)
    throw std::length_error("finite_alpha: more than 20 atoms on the smaller side");
  auto cell = [&](std::size_t s, std::size_t o) {
    return by_rows ? joint[s * cols + o] : joint[o * cols + s];
  };
  const auto& p_side = by_rows ? pr : pc;
  const auto& p_other = by_rows ? pc : pr;

  // Gray-code walk over subsets of `side`, updating P(A, o) incrementally.
  std::vector<double> pa_o(other.size(), 0.0);
  double pa = 0.0, best = 0.0;
  const std::uint64_t subsets = std::uint64_t{1} << side.size();
  std::uint64_t gray = 0;
  for (std::uint64_t step = 1; step < subsets; ++step) {
    const auto bit = std::size_t(std::countr_zero(step));
    const std::uint64_t next = gray ^ (std::uint64_t{1} << bit);
    const double sign = (next >> bit) & 1U ? 1.0 : -1.0;
    const std::size_t s = side[bit];
    pa += sign * p_side[s];
    double value = 0.0;
    for (std::size_t o = 0; o < other.size(); ++o) {
      pa_o[o] += sign * cell(s, other[o]);
      value += std::max(0.0, pa_o[o] - pa * p_other[other[o]]);
    }
    best = std::max(best, value);
    gray = next;
  }
  return best;
}

double chain_alpha_enumerated(const TwoStateChain& chain, std::size_t lag, std::size_t window) {
  if (lag == 0 || window == 0 || window > 4)
    throw std::invalid_argument("chain_alpha_enumerated needs lag >= 1 and 1 <= window <= 4");
  const std::size_t atoms = std::size_t{1} << window;
  const Power P = chain_power(chain, lag);
  std::vector<double> joint(atoms * atoms, 0.0);
  for (std::size_t x = 0; x < atoms; ++x) {
    const double px = trajectory_probability(chain, x, window);
    const int last = int((x >> (window - 1)) & 1U);
    for (std::size_t y = 0; y < atoms; ++y) {
      const int first = int(y & 1U);
      // P(y | y_1) = P(trajectory y) / pi(y_1)
      const double py = trajectory_probability(chain, y, window) /
                        (first == 1 ? chain.pi1() : chain.pi0());
      joint[x * atoms + y] = px * transition(P, last, first) * py;
    }
  }
  return finite_alpha(joint, atoms, atoms);
}

IbragimovReport verify_ibragimov(const VectorLaw& law, double tolerance) {
  if (law.outcomes.size() != law.probs.size() || law.outcomes.empty())
    throw std::invalid_argument("vector law needs matching nonempty outcomes and probs");
  const std::size_t p = law.outcomes.front().size();
  if (p == 0)
    throw std::invalid_argument("vector law needs at least one coordinate");
  for (const auto& z : law.outcomes) {
    if (z.size() != p)
      throw std::invalid_argument("vector law outcomes differ in dimension");
    for (const double v : z)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("Ibragimov lemma needs nonnegative bounded Z_i");
  }

  IbragimovReport r;
  r.p = p;
  std::vector<double> means(p, 0.0), norms(p, 0.0);
  for (std::size_t o = 0; o < law.outcomes.size(); ++o) {
    const double pr = law.probs[o];
    if (pr <= 0.0)
      continue;
    double prod = 1.0;
    for (std::size_t i = 0; i < p; ++i) {
      means[i] += pr * law.outcomes[o][i];
      norms[i] = std::max(norms[i], law.outcomes[o][i]);
      prod *= law.outcomes[o][i];
    }
    r.mean_of_product += pr * prod;
  }
  r.product_of_means = 1.0;
  r.norm_product = 1.0;
  for (std::size_t i = 0; i < p; ++i) {
    r.product_of_means *= means[i];
    r.norm_product *= norms[i];
  }

  for (std::size_t k = 1; k < p; ++k) {
    std::map<std::vector<double>, std::size_t> prefixes, suffixes;
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (const auto& z : law.outcomes) {
      std::vector<double> a(z.begin(), z.begin() + std::ptrdiff_t(k));
      std::vector<double> b(z.begin() + std::ptrdiff_t(k), z.end());
      const auto ia = prefixes.try_emplace(std::move(a), prefixes.size()).first->second;
      const auto ib = suffixes.try_emplace(std::move(b), suffixes.size()).first->second;
      cells.emplace_back(ia, ib);
    }
    std::vector<double> joint(prefixes.size() * suffixes.size(), 0.0);
    for (std::size_t o = 0; o < cells.size(); ++o)
      joint[cells[o].first * suffixes.size() + cells[o].second] += std::max(0.0, law.probs[o]);
    r.alpha = std::max(r.alpha, finite_alpha(joint, prefixes.size(), suffixes.size()));
  }
  const double rhs = double(p - 1) * r.alpha * r.norm_product;
  r.upper_slack = rhs - (r.mean_of_product - r.product_of_means);
  r.lower_slack = rhs - (r.product_of_means - r.mean_of_product);
  r.violated = r.upper_slack < -tolerance || r.lower_slack < -tolerance;
  return r;
}

IbragimovReport verify_ibragimov(const TwoStateChain& chain, std::size_t length,
                                 std::span<const TrajectoryFunctional> functionals) {
  if (length == 0 || length > 20)
    throw std::length_error("trajectory enumeration needs 1 <= length <= 20");
  if (functionals.empty())
    throw std::invalid_argument("need at least one functional");
  std::map<std::vector<double>, double> law;
  std::vector<int> states(length);
  const std::uint64_t count = std::uint64_t{1} << length;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    for (std::size_t i = 0; i < length; ++i)
      states[i] = int((mask >> i) & 1U);
    std::vector<double> z;
    z.reserve(functionals.size());
    for (const auto& f : functionals)
      z.push_back(f(states));
    law[std::move(z)] += trajectory_probability(chain, mask, length);
  }
  VectorLaw v;
  for (auto& [z, pr] : law) {
    v.outcomes.push_back(z);
    v.probs.push_back(pr);
  }
  return verify_ibragimov(v);
}

VectorLaw indicator_law(const TwoStateChain& chain, std::span<const IndicatorBlock> blocks) {
  const std::size_t p = blocks.size();
  if (p == 0 || p > 16)
    throw std::invalid_argument("indicator_law needs 1..16 blocks");
  for (std::size_t i = 0; i < p; ++i) {
    if (blocks[i].first == 0 || blocks[i].pattern.empty())
      throw std::invalid_argument("indicator blocks need first >= 1 and a nonempty pattern");
    if (i > 0 && blocks[i].first < blocks[i - 1].first + blocks[i - 1].pattern.size())
      throw std::invalid_argument("indicator blocks must be disjoint and ordered");
  }
  const std::size_t count = std::size_t{1} << p;
  const std::size_t span_end = blocks.back().first + blocks.back().pattern.size();
  std::vector<Power> powers;
  for (std::size_t lag = 0; lag <= span_end; ++lag)
    powers.push_back(chain_power(chain, lag));
  // q[U] = P(all blocks in U match)
  std::vector<double> q(count, 1.0);
  for (std::size_t U = 1; U < count; ++U) {
    double prob = 1.0;
    bool started = false;
    int last_state = 0;
    std::size_t last_pos = 0;
    for (std::size_t i = 0; i < p; ++i) {
      if (!((U >> i) & 1U))
        continue;
      for (std::size_t j = 0; j < blocks[i].pattern.size(); ++j) {
        const int s = blocks[i].pattern[j];
        const std::size_t pos = blocks[i].first + j;
        if (!started) {
          prob = s == 1 ? chain.pi1() : chain.pi0();
          started = true;
        } else {
          prob *= transition(powers[pos - last_pos], last_state, s);
        }
        last_state = s;
        last_pos = pos;
      }
    }
    q[U] = prob;
  }
  // Moebius inversion over supersets: P(Z = 1_T) = sum_{U >= T} (-1)^{|U - T|} q[U].
  std::vector<double> f = q;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t U = 0; U < count; ++U)
      if (!((U >> i) & 1U))
        f[U] -= f[U | (std::size_t{1} << i)];
  VectorLaw law;
  for (std::size_t z = 0; z < count; ++z) {
    std::vector<double> out(p);
    for (std::size_t i = 0; i < p; ++i)
      out[i] = double((z >> i) & 1U);
    law.outcomes.push_back(std::move(out));
    law.probs.push_back(std::abs(f[z]) < 1e-15 ? 0.0 : std::max(0.0, f[z]));
  }
  return law;
}

IbragimovSweep ibragimov_exhaustive(const TwoStateChain& chain, std::size_t length,
                                    std::span<const std::size_t> p_values) {
  IbragimovSweep sweep;
  sweep.worst_slack = std::numeric_limits<double>::infinity();
  std::vector<IndicatorBlock> blocks;

  auto check = [&]() {
    const auto law = indicator_law(chain, blocks);
    const std::size_t p = blocks.size();
    const std::vector<double> ones(p, 1.0);
    // Outcome z of indicator_law is the bit mask z.
    const auto r = check_binary_law(law.probs, p, ones, 1e-12);
    ++sweep.instances;
    if (r.violated)
      ++sweep.violations;
    sweep.worst_slack = std::min({sweep.worst_slack, r.upper_slack, r.lower_slack});
  };

  // Layout recursion, then every pattern of the layout.
  std::function<void(std::size_t, std::size_t)> patterns = [&](std::size_t i, std::size_t) {
    if (i == blocks.size()) {
      check();
      return;
    }
    const std::size_t len = blocks[i].pattern.size();
    for (std::size_t m = 0; m < (std::size_t{1} << len); ++m) {
      for (std::size_t j = 0; j < len; ++j)
        blocks[i].pattern[j] = int((m >> j) & 1U);
      patterns(i + 1, 0);
    }
  };
  std::function<void(std::size_t, std::size_t)> layout = [&](std::size_t start, std::size_t p) {
    if (blocks.size() == p) {
      patterns(0, 0);
      return;
    }
    for (std::size_t first = start; first <= length; ++first)
      for (std::size_t last = first; last <= length; ++last) {
        blocks.push_back({first, std::vector<int>(last - first + 1, 0)});
        layout(last + 1, p);
        blocks.pop_back();
      }
  };
  for (const std::size_t p : p_values) {
    if (p == 0 || p > length)
      throw std::invalid_argument("p must lie in [1, length]");
    layout(1, p);
  }
  if (sweep.instances == 0)
    sweep.worst_slack = 0.0;
  return sweep;
}

double DiscreteLaw::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    m += probs[i] * values[i];
  return m;
}

double DiscreteLaw::second_moment() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    m += probs[i] * values[i] * values[i];
  return m;
}

double DiscreteLaw::sup_abs() const {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (probs[i] > 0.0)
      s = std::max(s, std::abs(values[i]));
  return s;
}

DiscreteLaw empirical_law(std::span<const double> samples) {
  if (samples.empty())
    throw std::invalid_argument("empirical law needs samples");
  DiscreteLaw law;
  law.values.assign(samples.begin(), samples.end());
  law.probs.assign(samples.size(), 1.0 / double(samples.size()));
  return law;
}

DiscreteLaw rademacher_sum_law(std::size_t L) {
  DiscreteLaw law;
  for (std::size_t k = 0; k <= L; ++k) {
    law.values.push_back(2.0 * double(k) - double(L));
    law.probs.push_back(std::exp(log_binomial(L, k) - double(L) * std::log(2.0)));
  }
  return law;
}

ArconesReport arcones_check(std::span<const DiscreteLaw> blocks, double sigma_n, double a_n,
                            double eps) {
  if (!(sigma_n >= 0.0) || !(a_n > 0.0) || !(eps > 0.0))
    throw std::invalid_argument("arcones_check needs sigma_n >= 0, a_n > 0, eps > 0");
  ArconesReport r;
  const double cut = eps * std::sqrt(a_n);
  for (const auto& b : blocks) {
    if (b.values.size() != b.probs.size())
      throw std::invalid_argument("block law columns differ in length");
    r.second_moments.push_back(b.second_moment());
    if (sigma_n == 0.0)
      continue;
    r.max_abs_mean = std::max(r.max_abs_mean, std::abs(b.mean()) / sigma_n);
    r.variance_sum += b.second_moment() / (sigma_n * sigma_n);
    r.max_scaled = std::max(r.max_scaled, b.sup_abs() / (sigma_n * std::sqrt(a_n)));
    for (std::size_t i = 0; i < b.values.size(); ++i) {
      const double z = b.values[i] / sigma_n;
      if (std::abs(z) > cut)
        r.lindeberg_sum += b.probs[i] * z * z;
    }
  }
  return r;
}

} // namespace mixbound::lab
