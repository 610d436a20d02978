#include "cli.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "mixbound/cantor_blocks.hpp"
#include "mixbound/json_io.hpp"
#include "mixbound/kde_app.hpp"
#include "mixbound/mdp_verify.hpp"
#include "mixbound/process_lab.hpp"
#include "mixbound/rng.hpp"
#include "mixbound/tail_bounds.hpp"

namespace mixbound::cli {

namespace {

using io::ConfigError;
using io::CsvWriter;
using io::format_double;
using io::json;

enum class Kind { number, integer, boolean, string, number_list, integer_list, object };

struct Param {
  std::string key;
  Kind kind;
  json fallback;  // null means "unset" unless the command fills it in
  std::string help;
};

struct Outcome {
  json result;
  std::string csv;
  bool violation = false;
};

struct Command {
  std::string name;
  std::string help;
  std::vector<Param> params;
  bool csv_primary = false;
  std::function<Outcome(const json& cfg, const json& meta, unsigned jobs)> body;
};

std::string flag_name(const std::string& key) {
  std::string s = key;
  for (auto& ch : s)
    if (ch == '_')
      ch = '-';
  return "--" + s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, ','))
    if (!cur.empty())
      parts.push_back(cur);
  return parts;
}

double parse_number(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty())
    throw CLI::ValidationError(flag_name(key), "expected a number, got '" + s + "'");
  return v;
}

std::int64_t parse_integer(const std::string& key, const std::string& s) {
  const double v = parse_number(key, s);
  if (v != std::floor(v) || std::abs(v) > 9.0e15)
    throw CLI::ValidationError(flag_name(key), "expected an integer, got '" + s + "'");
  return std::int64_t(v);
}

// Converts a raw flag value according to the parameter kind.
json flag_value(const Param& p, const std::string& raw) {
  switch (p.kind) {
  case Kind::number: return parse_number(p.key, raw);
  case Kind::integer: return parse_integer(p.key, raw);
  case Kind::boolean:
    if (raw == "true" || raw == "1")
      return true;
    if (raw == "false" || raw == "0")
      return false;
    throw CLI::ValidationError(flag_name(p.key), "expected true or false");
  case Kind::string: return raw;
  case Kind::number_list: {
    json arr = json::array();
    for (const auto& s : split_list(raw))
      arr.push_back(parse_number(p.key, s));
    return arr;
  }
  case Kind::integer_list: {
    json arr = json::array();
    for (const auto& s : split_list(raw))
      arr.push_back(parse_integer(p.key, s));
    return arr;
  }
  case Kind::object:
    try {
      return json::parse(raw);
    } catch (const json::parse_error&) {
      throw CLI::ValidationError(flag_name(p.key), "expected inline JSON");
    }
  }
  return raw;
}

bool kind_matches(Kind k, const json& v) {
  if (v.is_null())
    return true;
  switch (k) {
  case Kind::number: return v.is_number();
  case Kind::integer: return v.is_number_integer() || (v.is_number() && v.get<double>() == std::floor(v.get<double>()));
  case Kind::boolean: return v.is_boolean();
  case Kind::string: return v.is_string();
  case Kind::number_list:
    if (!v.is_array())
      return false;
    for (const auto& e : v)
      if (!e.is_number())
        return false;
    return true;
  case Kind::integer_list:
    if (!v.is_array())
      return false;
    for (const auto& e : v)
      if (!e.is_number_integer() || e.get<std::int64_t>() < 0)
        return false;
    return true;
  case Kind::object: return v.is_object();
  }
  return false;
}

double num(const json& cfg, const char* key) { return cfg.at(key).get<double>(); }

std::size_t count(const json& cfg, const char* key) {
  const double v = cfg.at(key).get<double>();
  if (v < 0.0)
    throw std::invalid_argument(fmt::format("{} must be nonnegative", key));
  return std::size_t(v);
}

std::string fd(double v) { return format_double(v); }

std::string opt_cell(const std::optional<double>& v) { return v ? fd(*v) : ""; }

// ---------------------------------------------------------------------------

bounds::BoundConstants constants_for(const json& cfg, double c, const mixing::MixingProfile& profile) {
  bounds::ConstantOverrides o;
  const auto& file = cfg.at("constants_file").get<std::string>();
  if (!file.empty())
    o = io::overrides_from_json(io::read_json_file(file));
  if (!cfg.at("constants").is_null()) {
    const auto inline_o = io::overrides_from_json(cfg.at("constants"));
    if (inline_o.bern1)
      o.bern1 = inline_o.bern1;
    if (inline_o.bern2)
      o.bern2 = inline_o.bern2;
    if (inline_o.C_prime)
      o.C_prime = inline_o.C_prime;
  }
  return bounds::make_constants(c, profile, o);
}

Outcome cmd_bound(const json& cfg, const json& meta, unsigned) {
  const double n = num(cfg, "n"), M = num(cfg, "M");
  const double c = num(cfg, "c");
  const auto profile = cfg.at("profile").is_null() ? mixing::MixingProfile::geometric(c)
                                                   : io::profile_from_json(cfg.at("profile"));
  const auto k = constants_for(cfg, c, profile);
  mixing::SequenceSpec spec;
  spec.M = M;
  spec.profile = profile;
  if (!cfg.at("v2").is_null())
    spec.v_squared = num(cfg, "v2");
  spec.validate();

  Outcome o;
  o.result["constants"] = io::constants_to_json(k);
  const auto grid = cfg.at("grid").get<std::vector<double>>();
  if (grid.empty()) {
    const auto rep = bounds::best_bound(n, num(cfg, "x"), spec, k);
    o.result["report"] = io::tail_report_to_json(rep);
    CsvWriter w(meta, {"bound", "applicable", "value", "log_value"});
    const std::pair<const char*, std::pair<std::optional<double>, std::optional<double>>> rows[] = {
        {"bern1", {rep.bern1, rep.log_bern1}},
        {"bern2", {rep.bern2, rep.log_bern2}},
        {"bern3", {rep.bern3, rep.log_bern3}}};
    for (const auto& [name, vals] : rows)
      w.row({name, vals.first ? "true" : "false", opt_cell(vals.first), opt_cell(vals.second)});
    w.row({"best:" + rep.best_label, "true", fd(rep.best), fd(rep.log_best)});
    o.csv = w.str();
  } else {
    json reports = json::array();
    CsvWriter w(meta, {"x", "bern1", "bern2", "bern3", "log_bern1", "log_bern2", "log_bern3", "best",
                       "best_label"});
    for (const double x : grid) {
      const auto rep = bounds::best_bound(n, x, spec, k);
      reports.push_back(io::tail_report_to_json(rep));
      w.row({fd(x), opt_cell(rep.bern1), opt_cell(rep.bern2), opt_cell(rep.bern3),
             opt_cell(rep.log_bern1), opt_cell(rep.log_bern2), opt_cell(rep.log_bern3), fd(rep.best),
             rep.best_label});
    }
    o.result["reports"] = reports;
    o.csv = w.str();
  }
  return o;
}

Outcome cmd_cantor(const json& cfg, const json& meta, unsigned) {
  const double A = num(cfg, "A");
  const double delta = cfg.at("delta").is_null() ? cantor::default_delta(A) : num(cfg, "delta");
  const auto scheme = cantor::build_cantor(A, delta);
  Outcome o;
  o.result["scheme"] = io::scheme_to_json(scheme, cfg.at("leaves").get<bool>());
  o.result["gap_total"] = cantor::GapMap(scheme).total();
  if (cfg.at("exact").get<bool>()) {
    const auto ex = cantor::build_cantor_exact(Rational(A), Rational(delta));
    o.result["exact"] = {{"k", ex.k},
                         {"leaf_length", ex.leaf_length().str()},
                         {"measure", ex.leaves.measure().str()},
                         {"closed_form_measure", ex.closed_form_measure().str()}};
  }
  CsvWriter w(meta, {"level", "count", "leaf_length", "measure"});
  const double r = (1.0 - delta) / 2.0;
  for (std::size_t l = 0; l <= scheme.k; ++l)
    w.row({std::to_string(l), std::to_string(std::size_t{1} << l), fd(A * std::pow(r, double(l))),
           fd(A * std::pow(1.0 - delta, double(l)))});
  if (!cfg.at("plan_n").is_null()) {
    const auto n = count(cfg, "plan_n");
    const double a = cfg.at("plan_a").is_null() ? std::pow(double(n), -0.25) : num(cfg, "plan_a");
    const auto plan = cfg.at("plan_M").is_null()
                          ? cantor::choose_mdp_blocking(n, a)
                          : cantor::choose_mdp_blocking_triangular(n, a, num(cfg, "plan_M"));
    o.result["plan"] = io::plan_to_json(plan);
  }
  o.csv = w.str();
  return o;
}

lab::ProcessSpec process_of(const json& cfg) { return io::process_from_json(cfg.at("process")); }

Outcome cmd_simulate(const json& cfg, const json& meta, unsigned) {
  const auto spec = process_of(cfg);
  const auto n = count(cfg, "n");
  const auto reps = count(cfg, "reps");
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  if (n == 0 || reps == 0)
    throw std::invalid_argument("simulate needs n >= 1 and reps >= 1");
  Outcome o;
  json paths = json::array();
  CsvWriter w(meta, {"stream", "t", "value"});
  for (std::size_t r = 0; r < reps; ++r) {
    const auto path = lab::simulate(spec, n, seed, r);
    CompensatedSum s;
    for (std::size_t i = 0; i < path.n(); ++i) {
      s.add(path.values[i]);
      w.row({std::to_string(r), std::to_string(i + 1), fd(path.values[i])});
    }
    paths.push_back({{"stream", r}, {"sum", s.value()}, {"values", path.values}});
  }
  o.result = {{"process", io::process_to_json(spec)},
              {"M", spec.bound()},
              {"seed", seed},
              {"n", n},
              {"paths", paths}};
  o.csv = w.str();
  return o;
}

Outcome cmd_verify(const json& cfg, const json& meta, unsigned jobs) {
  const auto spec = process_of(cfg);
  const auto profile = spec.profile();
  double c = cfg.at("c").is_null() ? profile.c_effective() : num(cfg, "c");
  if (!std::isfinite(c))
    throw std::invalid_argument("verify needs a finite mixing rate; pass --c for independent specs");
  auto k = bounds::make_constants(c, profile);
  if (!cfg.at("C_bc").is_null()) {
    if (!(num(cfg, "C_bc") > 0.0))
      throw std::invalid_argument("C_bc must be positive");
    k.C_bc = num(cfg, "C_bc");
  }
  const double M = spec.bound();
  const auto reps = count(cfg, "reps");
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  lab::McOptions opt;
  opt.confidence = num(cfg, "confidence");
  opt.jobs = jobs;
  Outcome o;
  json rows = json::array();
  std::size_t violations = 0;
  CsvWriter w(meta, {"n", "x", "p_hat", "ci_low", "ci_high", "bern3", "slack", "violation"});
  for (const auto n : cfg.at("n_grid").get<std::vector<std::size_t>>()) {
    std::vector<double> xs;
    for (const double m : cfg.at("x_factors").get<std::vector<double>>())
      xs.push_back(m * std::sqrt(double(n)));
    const auto est = lab::mc_tail_grid(spec, n, xs, reps, derive_seed(seed, n), opt);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto b = bounds::bern3_bound(double(n), xs[i], M, k);
      if (!b)
        throw std::invalid_argument(fmt::format("bern3 does not apply at n = {}", n));
      const bool bad = est[i].ci_high > *b;
      violations += bad;
      json row = io::estimate_to_json(est[i]);
      row["n"] = n;
      row["bern3"] = *b;
      row["slack"] = *b - est[i].ci_high;
      row["violation"] = bad;
      rows.push_back(row);
      w.row({std::to_string(n), fd(xs[i]), fd(est[i].p_hat), fd(est[i].ci_low), fd(est[i].ci_high), fd(*b),
             fd(*b - est[i].ci_high), bad ? "true" : "false"});
    }
  }
  o.result = {{"process", io::process_to_json(spec)},
              {"constants", io::constants_to_json(k)},
              {"rows", rows},
              {"violations", violations}};
  o.violation = violations > 0;
  o.csv = w.str();
  return o;
}

Outcome cmd_mdp(const json& cfg, const json& meta, unsigned jobs) {
  mdp::MdpExperiment ex;
  ex.spec = process_of(cfg);
  ex.n_grid = cfg.at("n_grid").get<std::vector<std::size_t>>();
  ex.t_grid = cfg.at("t_grid").get<std::vector<double>>();
  ex.a_rule = {num(cfg, "a_scale"), num(cfg, "a_exponent")};
  const auto method = cfg.at("method").get<std::string>();
  if (method == "exact")
    ex.method = mdp::Method::exact;
  else if (method == "monte_carlo")
    ex.method = mdp::Method::monte_carlo;
  else
    throw ConfigError("method must be 'exact' or 'monte_carlo'");
  const auto rate = cfg.at("rate").get<std::string>();
  if (rate == "half_square")
    ex.rate = mdp::RateFunction::half_square();
  else if (rate == "scaled")
    ex.rate = mdp::RateFunction::scaled(num(cfg, "sigma2"));
  else
    throw ConfigError("rate must be 'half_square' or 'scaled'");
  ex.two_sided = cfg.at("two_sided").get<bool>();
  ex.reps = count(cfg, "reps");
  ex.seed = cfg.at("seed").get<std::uint64_t>();
  ex.confidence = num(cfg, "confidence");
  ex.max_chain_n = count(cfg, "max_chain_n");
  ex.jobs = jobs;
  mdp::empirical_rate(ex);

  Outcome o;
  json cells = json::array();
  CsvWriter w(meta, {"n", "t", "a_n", "estimate", "target", "gap", "probability", "ci_low", "ci_high",
                     "speed_value", "speed_pass", "note"});
  for (const auto& c : ex.estimates) {
    cells.push_back(io::mdp_cell_to_json(c));
    w.row({std::to_string(c.n), fd(c.t), fd(c.a_n), fd(c.estimate), fd(c.target), fd(c.gap), fd(c.probability),
           fd(c.ci_low), fd(c.ci_high), fd(c.speed.value), c.speed.pass ? "true" : "false", c.note});
  }
  o.result = {{"process", io::process_to_json(ex.spec)}, {"method", mdp::to_string(ex.method)}, {"cells", cells}};
  if (cfg.at("block_variance").get<bool>()) {
    json bv = json::array();
    for (const auto n : ex.n_grid) {
      const auto plan = cantor::choose_mdp_blocking(n, ex.a_rule(n));
      const auto rep = mdp::block_variance_ratio(ex.spec, plan);
      bv.push_back({{"n", n},
                    {"plan", io::plan_to_json(plan)},
                    {"ratio", rep.ratio},
                    {"tail_bound", rep.tail_bound},
                    {"series_cov_bound", rep.series_cov_bound},
                    {"within_tail_bound", std::abs(rep.ratio - 1.0) <= rep.tail_bound}});
    }
    o.result["block_variance"] = bv;
  }
  o.csv = w.str();
  return o;
}

Outcome cmd_kde(const json& cfg, const json& meta, unsigned jobs) {
  kde::DiffusionSpec spec;
  spec.theta = num(cfg, "theta");
  spec.sigma = num(cfg, "sigma");
  spec.T = num(cfg, "T");
  spec.dt = num(cfg, "dt");
  spec.validate();
  const double x = num(cfg, "x"), h = num(cfg, "h");
  const kde::Kernel kernel{kde::kernel_from_string(cfg.at("kernel").get<std::string>())};
  const auto seed = cfg.at("seed").get<std::uint64_t>();
  const auto reading_s = cfg.at("rate_reading").get<std::string>();
  if (reading_s != "inverse" && reading_s != "literal")
    throw ConfigError("rate_reading must be 'inverse' or 'literal'");
  const auto reading = reading_s == "inverse" ? kde::RateReading::inverse : kde::RateReading::literal;

  const auto path = kde::simulate_ou(spec, seed, 0);
  const auto est = kde::kde(path, x, h, kernel);
  const auto g = kde::g_integral_ou(spec.theta, spec.sigma, x);
  Outcome o;
  o.result = {{"diffusion", io::diffusion_to_json(spec)},
              {"kernel", kde::to_string(kernel.kind)},
              {"estimate", io::kde_estimate_to_json(est)},
              {"density", spec.density(x)},
              {"pair_density_integral", {{"value", g.value}, {"error_estimate", g.error_estimate}}},
              {"variance_limit", 2.0 * g.value},
              {"rate_reading", reading_s}};
  json rates = json::array();
  for (const double t : cfg.at("t_grid").get<std::vector<double>>())
    rates.push_back({{"t", t}, {"I", kde::kde_rate_function(g, t, reading)}});
  o.result["rate"] = rates;

  CsvWriter w(meta, {"h", "mean_f_hat", "raw_bias", "bias", "std_error"});
  const auto hs = cfg.at("bias_h").get<std::vector<double>>();
  if (hs.size() >= 2) {
    kde::ControlVariate cv;
    cv.enabled = !cfg.at("no_control_variate").get<bool>();
    cv.bandwidth = num(cfg, "control_h");
    const auto rep =
        kde::bias_check(spec, x, hs, kernel, count(cfg, "bias_reps"), derive_seed(seed, 1), jobs, cv);
    o.result["bias"] = io::bias_report_to_json(rep);
    for (const auto& r : rep.rows)
      w.row({fd(r.h), fd(r.mean_f_hat), fd(r.raw_bias), fd(r.bias), fd(r.std_error)});
  }
  o.csv = w.str();
  return o;
}

// ---------------------------------------------------------------------------

std::vector<Command> commands() {
  const json chain = {{"kind", "chain"}, {"p", 0.3}, {"q", 0.3}};
  const std::vector<Param> constants_params = {
      {"constants", Kind::object, nullptr, "inline constants JSON {bern1, bern2, C_prime}"},
      {"constants_file", Kind::string, "", "constants JSON file"}};
  std::vector<Command> cmds;

  Command bound{"bound", "Evaluate the Bernstein-type tail bounds", {}, false, cmd_bound};
  bound.params = {{"n", Kind::number, 100.0, "sample size"},
                  {"x", Kind::number, 50.0, "deviation level"},
                  {"M", Kind::number, 1.0, "uniform bound"},
                  {"v2", Kind::number, nullptr, "variance proxy (default K M^2)"},
                  {"c", Kind::number, 1.0, "mixing rate"},
                  {"profile", Kind::object, nullptr, "mixing profile JSON (default geometric c)"},
                  {"grid", Kind::number_list, json::array(), "x values to sweep"}};
  bound.params.insert(bound.params.end(), constants_params.begin(), constants_params.end());
  cmds.push_back(bound);

  Command cant{"cantor", "Summarize a Cantor-like scheme", {}, true, cmd_cantor};
  cant.params = {{"A", Kind::number, 16.0, "interval length"},
                 {"delta", Kind::number, nullptr, "deletion ratio (default log 2 / (2 log A))"},
                 {"exact", Kind::boolean, false, "also build in rational arithmetic"},
                 {"leaves", Kind::boolean, false, "include leaf endpoints in JSON"},
                 {"plan_n", Kind::integer, nullptr, "also build a blocking plan for this n"},
                 {"plan_a", Kind::number, nullptr, "a_n for the plan (default n^-1/4)"},
                 {"plan_M", Kind::number, nullptr, "M_n for the triangular plan"}};
  cmds.push_back(cant);

  Command sim{"simulate", "Simulate sample paths", {}, false, cmd_simulate};
  sim.params = {{"process", Kind::object, chain, "process spec JSON"},
                {"n", Kind::integer, 100, "path length"},
                {"reps", Kind::integer, 1, "number of paths"}};
  cmds.push_back(sim);

  Command ver{"verify", "Compare Monte Carlo tails against bern3", {}, false, cmd_verify};
  ver.params = {{"process", Kind::object, chain, "process spec JSON"},
                {"n_grid", Kind::integer_list, json::array({64, 256}), "sample sizes"},
                {"x_factors", Kind::number_list, json::array({0.5, 1.0, 1.5, 2.0}), "x / sqrt(n) values"},
                {"reps", Kind::integer, 100000, "replications"},
                {"confidence", Kind::number, 0.99, "Wilson confidence"},
                {"c", Kind::number, nullptr, "mixing rate override"},
                {"C_bc", Kind::number, nullptr, "override of the explicit bern3 constant"}};
  cmds.push_back(ver);

  Command md{"mdp", "Moderate-deviation rate diagnostics", {}, true, cmd_mdp};
  md.params = {{"process", Kind::object, json{{"kind", "rademacher"}}, "process spec JSON"},
               {"n_grid", Kind::integer_list, json::array({1024, 2048, 4096, 8192, 16384, 32768, 65536}),
                "sample sizes"},
               {"t_grid", Kind::number_list, json::array({1.0}), "t values"},
               {"a_scale", Kind::number, 1.0, "a_n = scale n^exponent"},
               {"a_exponent", Kind::number, -1.0 / 3.0, "a_n exponent"},
               {"method", Kind::string, "exact", "exact or monte_carlo"},
               {"rate", Kind::string, "half_square", "half_square or scaled"},
               {"sigma2", Kind::number, 1.0, "sigma^2 of the scaled rate"},
               {"two_sided", Kind::boolean, false, "use |S_n| events"},
               {"reps", Kind::integer, 10000, "Monte Carlo replications"},
               {"confidence", Kind::number, 0.99, "Wilson confidence"},
               {"max_chain_n", Kind::integer, 16, "exact enumeration cap for chains"},
               {"block_variance", Kind::boolean, false, "also report block-variance ratios"}};
  cmds.push_back(md);

  Command kd{"kde", "Kernel density estimation on an OU path", {}, false, cmd_kde};
  kd.params = {{"theta", Kind::number, 1.0, "OU mean reversion"},
               {"sigma", Kind::number, std::sqrt(2.0), "OU diffusion coefficient"},
               {"T", Kind::number, 2000.0, "horizon"},
               {"dt", Kind::number, 0.01, "time step"},
               {"x", Kind::number, 0.0, "evaluation point"},
               {"h", Kind::number, 0.2, "bandwidth"},
               {"kernel", Kind::string, "gaussian", "gaussian, epanechnikov or triangular"},
               {"rate_reading", Kind::string, "inverse", "inverse: t^2/(4 int g); literal: t^2 4 int g"},
               {"t_grid", Kind::number_list, json::array({1.0}), "t values for the rate"},
               {"bias_h", Kind::number_list, json::array({0.4, 0.2, 0.1}), "bandwidths for the bias study"},
               {"bias_reps", Kind::integer, 50, "replicas for the bias study"},
               {"control_h", Kind::number, 0.6, "bandwidth of the Gaussian control variate"},
               {"no_control_variate", Kind::boolean, false, "report plain Monte Carlo bias only"}};
  cmds.push_back(kd);
  return cmds;
}

void emit(const std::string& content, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-")
    out << content;
  else
    io::atomic_write(path, content);
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"mixbound: tail bounds and diagnostics for mixing sequences"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(io::kToolVersion));

  struct Bound {
    Command cmd;
    CLI::App* sub = nullptr;
    std::map<std::string, std::string> raw;
    std::map<std::string, bool> flags;
    std::string config, out_path, csv_path, format;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
  };
  std::vector<Bound> bound;
  for (auto& c : commands()) {
    bound.emplace_back();
    bound.back().cmd = std::move(c);
  }

  for (auto& b : bound) {
    b.sub = app.add_subcommand(b.cmd.name, b.cmd.help);
    b.sub->set_help_flag("--help", "print this help and exit");
    for (const auto& p : b.cmd.params) {
      if (p.kind == Kind::boolean)
        b.sub->add_flag(flag_name(p.key), b.flags[p.key], p.help);
      else
        b.sub->add_option(flag_name(p.key), b.raw[p.key], p.help);
    }
    b.sub->add_option("--config", b.config, "JSON config file");
    b.sub->add_option("--seed", b.seed, "seed (default MIXBOUND_SEED)");
    b.sub->add_option("--jobs", b.jobs, "worker threads")->check(CLI::PositiveNumber);
    b.sub->add_option("--out", b.out_path, "JSON output path");
    b.sub->add_option("--csv", b.csv_path, "CSV output path");
    b.sub->add_option("--format", b.format, "stdout format")->check(CLI::IsMember({"json", "csv", "none"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::ostringstream o, e2;
    app.exit(e, o, e2);
    out << o.str();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    std::ostringstream o, e2;
    app.exit(e, o, e2);
    out << o.str();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << io::kToolVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  for (auto& b : bound) {
    if (!b.sub->parsed())
      continue;
    try {
      json resolved = json::object();
      for (const auto& p : b.cmd.params)
        resolved[p.key] = p.fallback;
      std::uint64_t seed = default_seed();
      if (!b.config.empty()) {
        const auto file = io::read_json_file(b.config);
        if (!file.is_object())
          throw ConfigError("config must be a JSON object");
        for (const auto& [key, value] : file.items()) {
          if (key == "command") {
            if (value != b.cmd.name)
              throw ConfigError("config is for command '" + value.dump() + "'");
            continue;
          }
          if (key == "seed") {
            if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
              throw ConfigError("seed must be a nonnegative integer");
            seed = value.get<std::uint64_t>();
            continue;
          }
          if (!resolved.contains(key))
            throw ConfigError("unknown key '" + key + "' for " + b.cmd.name);
          resolved[key] = value;
        }
      }
      for (const auto& p : b.cmd.params) {
        if (p.kind == Kind::boolean) {
          if (b.sub->count(flag_name(p.key)) > 0)
            resolved[p.key] = b.flags[p.key];
        } else if (b.sub->count(flag_name(p.key)) > 0) {
          try {
            resolved[p.key] = flag_value(p, b.raw[p.key]);
          } catch (const CLI::ValidationError& e) {
            err << "usage error: " << e.what() << "\n";
            return kUsage;
          }
        }
        if (!kind_matches(p.kind, resolved[p.key]))
          throw ConfigError("field '" + p.key + "' has the wrong type");
      }
      if (b.seed)
        seed = *b.seed;
      resolved["seed"] = seed;
      resolved["command"] = b.cmd.name;

      const json meta = io::metadata(resolved);
      auto outcome = b.cmd.body(resolved, meta, b.jobs);
      json doc = {{"metadata", meta}, {"result", std::move(outcome.result)}};
      const std::string json_text = doc.dump(2) + "\n";

      if (!b.out_path.empty())
        io::atomic_write(b.out_path, json_text);
      if (!b.csv_path.empty())
        io::atomic_write(b.csv_path, outcome.csv);
      std::string fmt_choice = b.format;
      if (fmt_choice.empty())
        fmt_choice = (!b.out_path.empty() || !b.csv_path.empty()) ? "none"
                     : b.cmd.csv_primary                         ? "csv"
                                                                 : "json";
      if (fmt_choice == "json")
        emit(json_text, "", out);
      else if (fmt_choice == "csv")
        emit(outcome.csv, "", out);
      if (outcome.violation) {
        err << fmt::format("{}: inequality violation detected\n", b.cmd.name);
        return kViolation;
      }
      return kOk;
    } catch (const ConfigError& e) {
      err << "schema error: " << e.what() << "\n";
      return kSchema;
    } catch (const io::IoError& e) {
      err << "i/o error: " << e.what() << "\n";
      return kIo;
    } catch (const json::exception& e) {
      err << "schema error: " << e.what() << "\n";
      return kSchema;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kUsage;
    }
  }
  return kUsage;
}

} // namespace mixbound::cli
