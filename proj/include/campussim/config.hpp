#pragma once

// Scenario configuration: INI-style text with fixed sections, every key
// optional with a default. One field table drives parsing, validation,
// canonical output and the JSON form used by the service.

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "campussim/engine.hpp"
#include "campussim/error.hpp"
#include "campussim/policy.hpp"
#include "campussim/synthetic.hpp"
#include "campussim/text.hpp"

namespace campussim {

enum class NetworkSource { synthetic, file };

struct NetworkConfig {
  NetworkSource source = NetworkSource::synthetic;
  std::string enrollment_file;
  SyntheticCampusOptions synthetic{};
  double attendance = 1.0;  // chance an enrolled student shows up to a session
};

struct EngineConfig {
  int runs = 1000;
  std::uint64_t seed = 0;
  int parallel = 1;
  bool common_random_numbers = true;
};

struct ScenarioConfig {
  NetworkConfig network;
  ModelParams model;
  PolicyConfig policy;
  EngineConfig engine;
};

inline constexpr const char* kConfigSections[] = {"network",    "transmission", "progression",
                                                  "testing",    "policy",       "engine"};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Value codecs. Parsers throw std::invalid_argument with a short reason.
inline double to_double(std::string_view v) {
  double x{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(x))
    throw std::invalid_argument("expected a number, got '" + std::string(v) + "'");
  return x;
}

template <typename T>
T to_integer(std::string_view v) {
  T x{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
    throw std::invalid_argument("expected an integer, got '" + std::string(v) + "'");
  return x;
}

inline bool to_bool(std::string_view v) {
  const std::string s = lower(v);
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(v) + "'");
}

inline std::string_view mask_name(MaskType m) {
  switch (m) {
    case MaskType::none: return "none";
    case MaskType::cloth: return "cloth";
    case MaskType::medical: return "medical";
    case MaskType::n95: return "n95";
  }
  return "none";
}

inline MaskType to_mask(std::string_view v) {
  const std::string s = lower(v);
  for (MaskType m : {MaskType::none, MaskType::cloth, MaskType::medical, MaskType::n95})
    if (s == mask_name(m)) return m;
  throw std::invalid_argument("expected none, cloth, medical or n95, got '" + std::string(v) + "'");
}

inline std::string cap_text(const std::optional<int>& cap) {
  return cap ? std::to_string(*cap) : "inf";
}

inline std::optional<int> to_cap(std::string_view v) {
  const std::string s = lower(v);
  if (s == "inf" || s == "none" || s == "unlimited") return std::nullopt;
  return to_integer<int>(v);
}

inline std::string bool_text(bool b) { return b ? "true" : "false"; }

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, std::string_view)> set;
};

#define CAMPUSSIM_DOUBLE(sec, name, member)                                               \
  Field {                                                                                 \
    sec, name, [](const ScenarioConfig& c) { return format_double(c.member); },           \
        [](ScenarioConfig& c, std::string_view v) { c.member = to_double(v); }            \
  }
#define CAMPUSSIM_INT(sec, name, member, type)                                             \
  Field {                                                                                 \
    sec, name, [](const ScenarioConfig& c) { return std::to_string(c.member); },          \
        [](ScenarioConfig& c, std::string_view v) { c.member = to_integer<type>(v); }     \
  }
#define CAMPUSSIM_BOOL(sec, name, member)                                                 \
  Field {                                                                                 \
    sec, name, [](const ScenarioConfig& c) { return bool_text(c.member); },               \
        [](ScenarioConfig& c, std::string_view v) { c.member = to_bool(v); }              \
  }
#define CAMPUSSIM_MASK(sec, name, member)                                                 \
  Field {                                                                                 \
    sec, name, [](const ScenarioConfig& c) { return std::string(mask_name(c.member)); },  \
        [](ScenarioConfig& c, std::string_view v) { c.member = to_mask(v); }              \
  }

inline const std::vector<Field>& config_fields() {
  static const std::vector<Field> fields = {
      {"network", "source",
       [](const ScenarioConfig& c) {
         return std::string(c.network.source == NetworkSource::file ? "file" : "synthetic");
       },
       [](ScenarioConfig& c, std::string_view v) {
         const std::string s = lower(v);
         if (s == "synthetic") c.network.source = NetworkSource::synthetic;
         else if (s == "file") c.network.source = NetworkSource::file;
         else throw std::invalid_argument("expected synthetic or file, got '" + std::string(v) + "'");
       }},
      {"network", "enrollment_file",
       [](const ScenarioConfig& c) { return c.network.enrollment_file; },
       [](ScenarioConfig& c, std::string_view v) { c.network.enrollment_file = std::string(v); }},
      CAMPUSSIM_DOUBLE("network", "scale", network.synthetic.scale),
      CAMPUSSIM_INT("network", "departments", network.synthetic.departments, int),
      CAMPUSSIM_INT("network", "levels", network.synthetic.levels, int),
      CAMPUSSIM_DOUBLE("network", "p1", network.synthetic.campus.p1),
      CAMPUSSIM_DOUBLE("network", "p2", network.synthetic.campus.p2),
      CAMPUSSIM_DOUBLE("network", "p3", network.synthetic.campus.p3),
      CAMPUSSIM_INT("network", "min_degree", network.synthetic.campus.min_degree, int),
      CAMPUSSIM_INT("network", "max_degree", network.synthetic.campus.max_degree, int),
      CAMPUSSIM_INT("network", "meetings_per_week", network.synthetic.meetings_per_week, int),
      CAMPUSSIM_DOUBLE("network", "meeting_hours", network.synthetic.meeting_hours),
      CAMPUSSIM_INT("network", "teaching_days", network.synthetic.teaching_days, int),
      CAMPUSSIM_DOUBLE("network", "capacity_sigma", network.synthetic.capacity_sigma),
      CAMPUSSIM_DOUBLE("network", "capacity_slack", network.synthetic.capacity_slack),
      CAMPUSSIM_INT("network", "min_capacity", network.synthetic.min_capacity, int),
      CAMPUSSIM_DOUBLE("network", "attendance", network.attendance),
      CAMPUSSIM_INT("network", "seed", network.synthetic.seed, std::uint64_t),

      CAMPUSSIM_DOUBLE("transmission", "pulmonary_rate", model.transmission.pulmonary_rate),
      CAMPUSSIM_DOUBLE("transmission", "quanta_rate", model.transmission.quanta_rate),
      CAMPUSSIM_DOUBLE("transmission", "air_changes_per_hour", model.transmission.air_changes),
      CAMPUSSIM_DOUBLE("transmission", "ceiling_height_m", model.transmission.ceiling_height),
      {"transmission", "model",
       [](const ScenarioConfig& c) {
         return std::string(c.model.transmission.model == ProbabilityModel::exact ? "exact"
                                                                                  : "linear");
       },
       [](ScenarioConfig& c, std::string_view v) {
         const std::string s = lower(v);
         if (s == "linear") c.model.transmission.model = ProbabilityModel::linear;
         else if (s == "exact") c.model.transmission.model = ProbabilityModel::exact;
         else throw std::invalid_argument("expected linear or exact, got '" + std::string(v) + "'");
       }},
      CAMPUSSIM_DOUBLE("transmission", "cloth_efficiency", model.masks.cloth),
      CAMPUSSIM_DOUBLE("transmission", "medical_efficiency", model.masks.medical),
      CAMPUSSIM_DOUBLE("transmission", "n95_efficiency", model.masks.n95),

      CAMPUSSIM_DOUBLE("progression", "incubation_shape", model.progression.incubation_shape),
      CAMPUSSIM_DOUBLE("progression", "incubation_scale", model.progression.incubation_scale),
      CAMPUSSIM_DOUBLE("progression", "symptomatic_prob", model.progression.symptomatic_prob),
      CAMPUSSIM_DOUBLE("progression", "contagious_shape", model.progression.contagious_shape),
      CAMPUSSIM_DOUBLE("progression", "contagious_scale", model.progression.contagious_scale),
      CAMPUSSIM_DOUBLE("progression", "severe_prob", model.progression.severe_prob),
      CAMPUSSIM_DOUBLE("progression", "outside_infections_per_day",
                       model.progression.outside_infections_per_day),
      CAMPUSSIM_DOUBLE("progression", "outside_reference_population",
                       model.outside_reference_population),
      CAMPUSSIM_DOUBLE("progression", "initial_infected_fraction",
                       model.progression.initial_infected_fraction),
      CAMPUSSIM_INT("progression", "initial_infection_age_max_days",
                    model.progression.initial_infection_age_max_days, int),

      CAMPUSSIM_BOOL("testing", "enabled", policy.testing.enabled),
      CAMPUSSIM_DOUBLE("testing", "daily_capacity", policy.testing.daily_capacity),
      CAMPUSSIM_DOUBLE("testing", "sensitivity", policy.testing.sensitivity),
      CAMPUSSIM_DOUBLE("testing", "specificity", policy.testing.specificity),
      CAMPUSSIM_INT("testing", "gap_days", policy.testing.gap_days, int),
      CAMPUSSIM_INT("testing", "trace_window", policy.testing.trace_window, int),
      CAMPUSSIM_BOOL("testing", "contact_tracing", policy.testing.contact_tracing),
      CAMPUSSIM_INT("testing", "false_positive_isolation_days",
                    policy.testing.false_positive_isolation_days, int),
      CAMPUSSIM_DOUBLE("testing", "capacity_reference_population",
                       policy.testing.capacity_reference_population),

      CAMPUSSIM_MASK("policy", "student_mask_type", policy.student_mask_type),
      CAMPUSSIM_DOUBLE("policy", "student_mask_compliance", policy.student_mask_compliance),
      CAMPUSSIM_MASK("policy", "instructor_mask_type", policy.instructor_mask_type),
      CAMPUSSIM_DOUBLE("policy", "instructor_mask_compliance", policy.instructor_mask_compliance),
      CAMPUSSIM_DOUBLE("policy", "distancing_feet", policy.distancing_feet),
      {"policy", "modality_cap",
       [](const ScenarioConfig& c) { return cap_text(c.policy.modality_cap); },
       [](ScenarioConfig& c, std::string_view v) { c.policy.modality_cap = to_cap(v); }},
      CAMPUSSIM_INT("policy", "online_until_day", policy.online_until_day, int),

      CAMPUSSIM_INT("engine", "horizon", model.horizon, int),
      CAMPUSSIM_INT("engine", "runs", engine.runs, int),
      CAMPUSSIM_INT("engine", "seed", engine.seed, std::uint64_t),
      CAMPUSSIM_INT("engine", "parallel", engine.parallel, int),
      CAMPUSSIM_BOOL("engine", "include_instructors", model.include_instructors),
      CAMPUSSIM_BOOL("engine", "common_random_numbers", engine.common_random_numbers),
  };
  return fields;
}

#undef CAMPUSSIM_DOUBLE
#undef CAMPUSSIM_INT
#undef CAMPUSSIM_BOOL
#undef CAMPUSSIM_MASK

inline const Field* find_field(std::string_view section, std::string_view key) {
  for (const Field& f : config_fields())
    if (section == f.section && key == f.key) return &f;
  return nullptr;
}

}  // namespace detail

/// Sets one `section.key` from text; the shared entry point for INI and JSON.
/// Throws ConfigError naming the key.
inline void set_config_value(ScenarioConfig& cfg, std::string_view section, std::string_view key,
                             std::string_view value, int line = 0) {
  const std::string full = std::string(section) + "." + std::string(key);
  const detail::Field* f = detail::find_field(section, key);
  if (!f) throw ConfigError("unknown key '" + full + "'", line, full);
  try {
    f->set(cfg, detail::trim(value));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(full + ": " + e.what(), line, full);
  }
}

inline std::string get_config_value(const ScenarioConfig& cfg, std::string_view section,
                                    std::string_view key) {
  const detail::Field* f = detail::find_field(section, key);
  if (!f) throw ConfigError("unknown key '" + std::string(section) + "." + std::string(key) + "'", 0);
  return f->get(cfg);
}

/// Semantic checks. `line_of` maps "section.key" to its source line (may be
/// empty) so errors point at the offending line.
inline void validate_config(const ScenarioConfig& c,
                            const std::map<std::string, int>& line_of = {}) {
  auto fail = [&](const std::string& key, const std::string& why) {
    auto it = line_of.find(key);
    throw ConfigError(key + ": " + why, it == line_of.end() ? 0 : it->second, key);
  };
  auto frac = [](double v) { return v >= 0.0 && v <= 1.0; };
  const auto& n = c.network;
  const auto& s = n.synthetic;
  if (n.source == NetworkSource::file && n.enrollment_file.empty())
    fail("network.enrollment_file", "required when source = file");
  if (!(s.scale > 0.0 && s.scale <= 1.0)) fail("network.scale", "must be in (0, 1]");
  if (s.departments < 1) fail("network.departments", "must be at least 1");
  if (s.levels < 1) fail("network.levels", "must be at least 1");
  for (auto [key, v] : {std::pair{"network.p1", s.campus.p1}, std::pair{"network.p2", s.campus.p2},
                        std::pair{"network.p3", s.campus.p3}})
    if (!frac(v)) fail(key, "must be in [0, 1]");
  if (std::abs(s.campus.p1 + s.campus.p2 + s.campus.p3 - 1.0) > 1e-9)
    fail("network.p3", "p1 + p2 + p3 must equal 1");
  if (s.campus.min_degree < 1) fail("network.min_degree", "must be at least 1");
  if (s.campus.max_degree < s.campus.min_degree) fail("network.max_degree", "must be >= min_degree");
  if (s.teaching_days < 1 || s.teaching_days > kDaysPerWeek)
    fail("network.teaching_days", "must be within [1, 7]");
  if (s.meetings_per_week < 0 || s.meetings_per_week > s.teaching_days)
    fail("network.meetings_per_week", "must be within [0, teaching_days]");
  if (!(s.meeting_hours > 0.0)) fail("network.meeting_hours", "must be positive");
  if (s.capacity_sigma < 0.0) fail("network.capacity_sigma", "must be >= 0");
  if (s.capacity_slack < 0.0) fail("network.capacity_slack", "must be >= 0");
  if (s.min_capacity < 1) fail("network.min_capacity", "must be at least 1");
  if (!frac(n.attendance)) fail("network.attendance", "must be in [0, 1]");

  const auto& t = c.model.transmission;
  if (!(t.pulmonary_rate > 0.0)) fail("transmission.pulmonary_rate", "must be positive");
  if (t.quanta_rate < 0.0) fail("transmission.quanta_rate", "must be >= 0");
  if (!(t.air_changes > 0.0)) fail("transmission.air_changes_per_hour", "must be positive");
  if (!(t.ceiling_height > 0.0)) fail("transmission.ceiling_height_m", "must be positive");
  if (!frac(c.model.masks.cloth)) fail("transmission.cloth_efficiency", "must be in [0, 1]");
  if (!frac(c.model.masks.medical)) fail("transmission.medical_efficiency", "must be in [0, 1]");
  if (!frac(c.model.masks.n95)) fail("transmission.n95_efficiency", "must be in [0, 1]");

  const auto& p = c.model.progression;
  if (!(p.incubation_shape > 0.0)) fail("progression.incubation_shape", "must be positive");
  if (!(p.incubation_scale > 0.0)) fail("progression.incubation_scale", "must be positive");
  if (!frac(p.symptomatic_prob)) fail("progression.symptomatic_prob", "must be in [0, 1]");
  if (!(p.contagious_shape > 0.0)) fail("progression.contagious_shape", "must be positive");
  if (!(p.contagious_scale > 0.0)) fail("progression.contagious_scale", "must be positive");
  if (!frac(p.severe_prob)) fail("progression.severe_prob", "must be in [0, 1]");
  if (p.outside_infections_per_day < 0.0)
    fail("progression.outside_infections_per_day", "must be >= 0");
  if (c.model.outside_reference_population < 0.0)
    fail("progression.outside_reference_population", "must be >= 0");
  if (!frac(p.initial_infected_fraction))
    fail("progression.initial_infected_fraction", "must be in [0, 1]");
  if (p.initial_infection_age_max_days < 0)
    fail("progression.initial_infection_age_max_days", "must be >= 0");

  const auto& ts = c.policy.testing;
  if (ts.daily_capacity < 0.0) fail("testing.daily_capacity", "must be >= 0");
  if (!frac(ts.sensitivity)) fail("testing.sensitivity", "must be in [0, 1]");
  if (!frac(ts.specificity)) fail("testing.specificity", "must be in [0, 1]");
  if (ts.gap_days < 0) fail("testing.gap_days", "must be >= 0");
  if (ts.trace_window < 1) fail("testing.trace_window", "must be at least 1");
  if (ts.false_positive_isolation_days < 1)
    fail("testing.false_positive_isolation_days", "must be at least 1");
  if (ts.capacity_reference_population < 0.0)
    fail("testing.capacity_reference_population", "must be >= 0");

  const auto& pol = c.policy;
  if (!frac(pol.student_mask_compliance)) fail("policy.student_mask_compliance", "must be in [0, 1]");
  if (!frac(pol.instructor_mask_compliance))
    fail("policy.instructor_mask_compliance", "must be in [0, 1]");
  if (!(pol.distancing_feet >= 2.0 && pol.distancing_feet <= 6.0))
    fail("policy.distancing_feet", "must be within [2, 6]");
  if (pol.modality_cap && *pol.modality_cap < 0) fail("policy.modality_cap", "must be >= 0 or inf");

  if (c.model.horizon < 1) fail("engine.horizon", "must be at least 1");
  if (pol.online_until_day < 0 || pol.online_until_day > c.model.horizon)
    fail("policy.online_until_day", "must be within [0, horizon]");
  if (c.engine.runs < 1) fail("engine.runs", "must be at least 1");
  if (c.engine.parallel < 1) fail("engine.parallel", "must be at least 1");
}

/// Parses INI text: `[section]` headers, `key = value` lines, `#` or `;`
/// comments. Unknown sections and keys, repeated keys and invalid values
/// are ConfigErrors carrying the line number.
inline ScenarioConfig parse_config(std::istream& in) {
  ScenarioConfig cfg;
  std::map<std::string, int> line_of;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (line_no == 1 && raw.starts_with("\xEF\xBB\xBF")) raw.erase(0, 3);
    const std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (std::find_if(std::begin(kConfigSections), std::end(kConfigSections),
                       [&](const char* s) { return section == s; }) == std::end(kConfigSections))
        throw ConfigError("unknown section [" + section + "]", line_no, section);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
    const std::string key(detail::trim(line.substr(0, eq)));
    if (section.empty()) throw ConfigError("key '" + key + "' outside any section", line_no, key);
    const std::string full = section + "." + key;
    auto [it, fresh] = line_of.emplace(full, line_no);
    if (!fresh)
      throw ConfigError("duplicate key '" + full + "' (first on line " +
                            std::to_string(it->second) + ")",
                        line_no, full);
    set_config_value(cfg, section, key, line.substr(eq + 1), line_no);
  }
  validate_config(cfg, line_of);
  return cfg;
}

inline ScenarioConfig parse_config(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_config(in);
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'", 0);
  return parse_config(in);
}

/// Canonical text: every key in table order with its current value.
inline std::string to_ini(const ScenarioConfig& cfg) {
  std::ostringstream os;
  std::string_view section;
  for (const auto& f : detail::config_fields()) {
    if (section != f.section) {
      if (!section.empty()) os << '\n';
      section = f.section;
      os << '[' << section << "]\n";
    }
    os << f.key << " = " << f.get(cfg) << '\n';
  }
  return os.str();
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

/// Content hash of the canonical config, and of the enrollment file's bytes
/// when the campus comes from a file.
inline std::string scenario_id(const ScenarioConfig& cfg) {
  std::string text = to_ini(cfg);
  if (cfg.network.source == NetworkSource::file) {
    std::ifstream in(cfg.network.enrollment_file, std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    text += "\n# enrollment " + sha256_hex(bytes.str()) + "\n";
  }
  return sha256_hex(text);
}

inline void apply_preset(ScenarioConfig& cfg, const ScenarioPreset& preset) {
  cfg.policy = preset.policy;
}

}  // namespace campussim
