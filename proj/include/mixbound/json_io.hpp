#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mixbound/cantor_blocks.hpp"
#include "mixbound/kde_app.hpp"
#include "mixbound/mdp_verify.hpp"
#include "mixbound/mixing_model.hpp"
#include "mixbound/process_lab.hpp"
#include "mixbound/tail_bounds.hpp"

namespace mixbound::io {

using nlohmann::json;

inline constexpr const char* kToolName = "mixbound";
inline constexpr const char* kToolVersion = "0.3.0";

//! Malformed or out-of-schema configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! File read/write failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json profile_to_json(const mixing::MixingProfile& profile);
mixing::MixingProfile profile_from_json(const json& j);

json scheme_to_json(const cantor::CantorScheme& scheme, bool with_leaves = true);
json plan_to_json(const cantor::BlockPlan& plan, bool with_blocks = false);
json peel_to_json(const cantor::PeelSequence& seq);

json constants_to_json(const bounds::BoundConstants& k);
//! {"bern1": {"C1":..,"C2":..,"C3":..}, "bern2": {...}, "C_prime": ...}, all optional.
bounds::ConstantOverrides overrides_from_json(const json& j);

json tail_report_to_json(const bounds::TailReport& report);

json process_to_json(const lab::ProcessSpec& spec);
//! {"kind": "chain"|"ar1"|"rademacher"|"uniform", ...}; validates the result.
lab::ProcessSpec process_from_json(const json& j);

json estimate_to_json(const lab::McTailEstimate& e);
json mdp_cell_to_json(const mdp::MdpCell& cell);
json kde_estimate_to_json(const kde::KdeEstimate& e);
json bias_report_to_json(const kde::BiasReport& r);
json diffusion_to_json(const kde::DiffusionSpec& spec);
kde::DiffusionSpec diffusion_from_json(const json& j);

//! Field lookup with a default; wrong types raise ConfigError naming the key.
template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null())
    return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

//! Rejects keys outside `allowed`.
void require_keys(const json& j, const std::vector<std::string>& allowed, const std::string& where);

//! FNV-1a 64 of the compact dump, as 16 hex digits.
std::string config_hash(const json& config);

//! {"tool", "version", "config_hash", "config"}.
json metadata(const json& resolved_config);

//! 17 significant digits; "inf", "-inf", "nan" for non-finite values.
std::string format_double(double v);

//! Writes via a temporary sibling then rename. Throws IoError.
void atomic_write(const std::filesystem::path& path, const std::string& content);

//! Throws IoError when unreadable, ConfigError when not JSON.
json read_json_file(const std::filesystem::path& path);

//! Rows of a CSV with leading "# key=value" metadata lines.
class CsvWriter {
public:
  CsvWriter(const json& meta, std::vector<std::string> header);

  void row(const std::vector<std::string>& cells);
  std::string str() const { return out_; }

private:
  std::size_t width_;
  std::string out_;
};

} // namespace mixbound::io
