#include "mixbound/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

namespace mixbound::io {

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json intervals_to_json(const IntervalUnion& u) {
  json arr = json::array();
  for (const auto& p : u)
    arr.push_back({p.lo, p.hi});
  return arr;
}

json theorem_to_json(const std::optional<bounds::TheoremConstants>& t) {
  if (!t)
    return nullptr;
  return {{"C1", t->C1}, {"C2", t->C2}, {"C3", t->C3}};
}

bounds::TheoremConstants theorem_from_json(const json& j, const char* where) {
  if (!j.is_object())
    throw ConfigError(std::string(where) + " must be an object");
  require_keys(j, {"C1", "C2", "C3"}, where);
  bounds::TheoremConstants t;
  t.C1 = get_or(j, "C1", 0.0);
  t.C2 = get_or(j, "C2", 0.0);
  t.C3 = get_or(j, "C3", 0.0);
  return t;
}

std::string kind_of(const json& j, const char* where) {
  if (!j.is_object())
    throw ConfigError(std::string(where) + " must be an object");
  if (!j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError(std::string(where) + " needs a string 'kind'");
  return j.at("kind").get<std::string>();
}

} // namespace

void require_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where) {
  if (!j.is_object())
    throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const auto& a : allowed)
      ok = ok || a == key;
    if (!ok)
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

json profile_to_json(const mixing::MixingProfile& profile) {
  if (profile.is_independent())
    return {{"kind", "independent"}};
  if (profile.kind() == mixing::MixingProfile::Kind::geometric) {
    json j = {{"kind", "geometric"}, {"c", profile.c_effective()}};
    if (profile.eigenvalue())
      j["eigenvalue"] = *profile.eigenvalue();
    return j;
  }
  const auto t = profile.table();
  return {{"kind", "tabulated"}, {"values", std::vector<double>(t.begin(), t.end())}};
}

mixing::MixingProfile profile_from_json(const json& j) {
  const auto kind = kind_of(j, "profile");
  try {
    if (kind == "independent") {
      require_keys(j, {"kind"}, "profile");
      return mixing::MixingProfile::independent();
    }
    if (kind == "geometric") {
      require_keys(j, {"kind", "c", "eigenvalue"}, "profile");
      if (!j.contains("c"))
        throw ConfigError("geometric profile needs 'c'");
      auto p = mixing::MixingProfile::geometric(get_or(j, "c", 0.0));
      if (j.contains("eigenvalue"))
        p = p.with_eigenvalue(get_or(j, "eigenvalue", 0.0));
      return p;
    }
    if (kind == "tabulated") {
      require_keys(j, {"kind", "values"}, "profile");
      return mixing::MixingProfile::tabulated(get_or(j, "values", std::vector<double>{}));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("profile: ") + e.what());
  }
  throw ConfigError("unknown profile kind '" + kind + "'");
}

json scheme_to_json(const cantor::CantorScheme& s, bool with_leaves) {
  json j = {{"A", s.A},
            {"delta", s.delta},
            {"k", s.k},
            {"leaf_count", s.leaves.size()},
            {"leaf_length", s.leaf_length()},
            {"measure", s.leaves.measure()},
            {"closed_form_measure", s.closed_form_measure()}};
  if (with_leaves)
    j["leaves"] = intervals_to_json(s.leaves);
  return j;
}

json plan_to_json(const cantor::BlockPlan& p, bool with_blocks) {
  json j = {{"n", p.n},
            {"a_n", p.a_n},
            {"M_n", p.M_n},
            {"branch", cantor::to_string(p.branch)},
            {"epsilon_raw", p.epsilon_raw},
            {"epsilon", p.epsilon},
            {"epsilon_capped", p.epsilon_capped},
            {"delta", p.delta},
            {"k", p.k},
            {"block_count", p.blocks.size()},
            {"block_measure", p.blocks.measure()},
            {"remainder_measure", p.remainder.measure()},
            {"min_gap", p.min_gap},
            {"invariant_violations", p.invariant_violations()}};
  if (with_blocks) {
    j["blocks"] = intervals_to_json(p.blocks);
    j["remainder"] = intervals_to_json(p.remainder);
  }
  return j;
}

json peel_to_json(const cantor::PeelSequence& s) {
  return {{"n", s.n},
          {"stop", s.stop == cantor::PeelStop::relative ? "relative" : "absolute"},
          {"c", s.c},
          {"threshold", s.threshold},
          {"A_values", s.A_values},
          {"L", s.L},
          {"count_bound", s.count_bound},
          {"halving_ok", s.halving_ok},
          {"count_bound_ok", s.count_bound_ok}};
}

json constants_to_json(const bounds::BoundConstants& k) {
  return {{"c", k.c},
          {"c0", k.c0},
          {"K", k.K},
          {"C_bc", k.C_bc},
          {"C_prime", k.C_prime},
          {"bern1", theorem_to_json(k.bern1)},
          {"bern2", theorem_to_json(k.bern2)},
          {"source", bounds::to_string(k.source)}};
}

bounds::ConstantOverrides overrides_from_json(const json& j) {
  require_keys(j, {"bern1", "bern2", "C_prime"}, "constants");
  bounds::ConstantOverrides o;
  if (j.contains("bern1") && !j.at("bern1").is_null())
    o.bern1 = theorem_from_json(j.at("bern1"), "constants.bern1");
  if (j.contains("bern2") && !j.at("bern2").is_null())
    o.bern2 = theorem_from_json(j.at("bern2"), "constants.bern2");
  if (j.contains("C_prime") && !j.at("C_prime").is_null())
    o.C_prime = get_or(j, "C_prime", 0.0);
  return o;
}

json tail_report_to_json(const bounds::TailReport& r) {
  return {{"n", r.n},
          {"x", r.x},
          {"M", r.M},
          {"v2", r.v2},
          {"bern1", opt(r.bern1)},
          {"bern2", opt(r.bern2)},
          {"bern3", opt(r.bern3)},
          {"log_bern1", opt(r.log_bern1)},
          {"log_bern2", opt(r.log_bern2)},
          {"log_bern3", opt(r.log_bern3)},
          {"best", r.best},
          {"log_best", r.log_best},
          {"best_label", r.best_label}};
}

json process_to_json(const lab::ProcessSpec& spec) {
  json j;
  if (const auto* ch = std::get_if<lab::TwoStateChain>(&spec.kind)) {
    j = {{"kind", "chain"}, {"p", ch->p}, {"q", ch->q}, {"a", ch->a}, {"b", ch->b}};
  } else if (const auto* ar = std::get_if<lab::BoundedAr1>(&spec.kind)) {
    j = {{"kind", "ar1"},
         {"phi", ar->phi},
         {"M", ar->M},
         {"half_width", ar->innovation_half_width},
         {"burn_in", ar->effective_burn_in()}};
  } else {
    const auto& iid = std::get<lab::Iid>(spec.kind);
    if (iid.law == lab::Iid::Law::rademacher)
      j = {{"kind", "rademacher"}};
    else
      j = {{"kind", "uniform"}, {"M", iid.M}};
  }
  j["center"] = spec.center;
  return j;
}

lab::ProcessSpec process_from_json(const json& j) {
  const auto kind = kind_of(j, "process");
  lab::ProcessSpec s;
  if (kind == "chain") {
    require_keys(j, {"kind", "p", "q", "a", "b", "center"}, "process");
    s.kind = lab::TwoStateChain{get_or(j, "p", 0.3), get_or(j, "q", 0.3), get_or(j, "a", -1.0),
                                get_or(j, "b", 1.0)};
  } else if (kind == "ar1") {
    require_keys(j, {"kind", "phi", "M", "half_width", "burn_in", "center"}, "process");
    lab::BoundedAr1 ar;
    ar.phi = get_or(j, "phi", 0.5);
    ar.M = get_or(j, "M", 1.0);
    ar.innovation_half_width = get_or(j, "half_width", 0.5);
    ar.burn_in = get_or<std::size_t>(j, "burn_in", 0);
    s.kind = ar;
  } else if (kind == "rademacher") {
    require_keys(j, {"kind", "center"}, "process");
    s.kind = lab::Iid{lab::Iid::Law::rademacher, 1.0};
  } else if (kind == "uniform") {
    require_keys(j, {"kind", "M", "center"}, "process");
    s.kind = lab::Iid{lab::Iid::Law::uniform_centered, get_or(j, "M", 1.0)};
  } else {
    throw ConfigError("unknown process kind '" + kind + "'");
  }
  s.center = get_or(j, "center", true);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("process: ") + e.what());
  }
  return s;
}

json estimate_to_json(const lab::McTailEstimate& e) {
  return {{"x", e.x},       {"p_hat", e.p_hat},     {"reps", e.reps},
          {"hits", e.hits}, {"ci_low", e.ci_low},   {"ci_high", e.ci_high},
          {"confidence", e.confidence}, {"seed", e.seed}};
}

json mdp_cell_to_json(const mdp::MdpCell& c) {
  return {{"n", c.n},
          {"t", c.t},
          {"a_n", c.a_n},
          {"sigma_n", c.sigma_n},
          {"x", c.x},
          {"probability", c.probability},
          {"estimate", format_double(c.estimate)},
          {"target", c.target},
          {"gap", format_double(c.gap)},
          {"note", c.note},
          {"speed_value", c.speed.value},
          {"speed_pass", c.speed.pass}};
}

json kde_estimate_to_json(const kde::KdeEstimate& e) {
  return {{"x", e.x}, {"h", e.h}, {"f_hat", e.f_hat}, {"T", e.T}, {"seed", e.seed}};
}

json bias_report_to_json(const kde::BiasReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"h", row.h},
                    {"mean_f_hat", row.mean_f_hat},
                    {"raw_bias", row.raw_bias},
                    {"bias", row.bias},
                    {"std_error", row.std_error},
                    {"beta", row.beta}});
  return {{"x", r.x},
          {"f_true", r.f_true},
          {"reps", r.reps},
          {"seed", r.seed},
          {"control", {{"enabled", r.control.enabled}, {"bandwidth", r.control.bandwidth}}},
          {"rows", rows},
          {"slope", r.slope},
          {"raw_slope", r.raw_slope}};
}

json diffusion_to_json(const kde::DiffusionSpec& s) {
  return {{"theta", s.theta}, {"sigma", s.sigma}, {"dt", s.dt}, {"T", s.T}};
}

kde::DiffusionSpec diffusion_from_json(const json& j) {
  require_keys(j, {"theta", "sigma", "dt", "T"}, "diffusion");
  kde::DiffusionSpec s;
  s.theta = get_or(j, "theta", s.theta);
  s.sigma = get_or(j, "sigma", s.sigma);
  s.dt = get_or(j, "dt", s.dt);
  s.T = get_or(j, "T", s.T);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("diffusion: ") + e.what());
  }
  return s;
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json metadata(const json& resolved_config) {
  return {{"tool", kToolName},
          {"version", kToolVersion},
          {"config_hash", config_hash(resolved_config)},
          {"config", resolved_config}};
}

std::string format_double(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out)
      throw IoError("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

CsvWriter::CsvWriter(const json& meta, std::vector<std::string> header) : width_(header.size()) {
  out_ += "# tool=" + meta.value("tool", std::string(kToolName)) + "\n";
  out_ += "# version=" + meta.value("version", std::string(kToolVersion)) + "\n";
  out_ += "# config_hash=" + meta.value("config_hash", std::string()) + "\n";
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_)
    throw std::invalid_argument("CSV row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i)
      out_ += ',';
    out_ += cells[i];
  }
  out_ += '\n';
}

} // namespace mixbound::io
