#pragma once

#include <optional>
#include <string>
#include <vector>

#include "campussim/network.hpp"
#include "campussim/rng.hpp"
#include "campussim/testing.hpp"

namespace campussim {

struct PolicyConfig {
  MaskType student_mask_type = MaskType::none;
  double student_mask_compliance = 0.0;
  MaskType instructor_mask_type = MaskType::none;
  double instructor_mask_compliance = 0.0;
  double distancing_feet = 2.0;
  std::optional<int> modality_cap;  // nullopt = no cap
  TestingConfig testing{};
  int online_until_day = 0;

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

/// Throws ContractViolation describing the first invalid field.
inline void validate(const PolicyConfig& p, int horizon) {
  auto frac = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!frac(p.student_mask_compliance) || !frac(p.instructor_mask_compliance))
    throw ContractViolation("mask compliance must be in [0,1]");
  if (!(p.distancing_feet > 0.0)) throw ContractViolation("distancing must be positive");
  if (p.modality_cap && *p.modality_cap < 0) throw ContractViolation("modality cap must be >= 0");
  if (p.online_until_day < 0 || p.online_until_day > horizon)
    throw ContractViolation("online_until_day must be within [0, horizon]");
  const auto& t = p.testing;
  if (t.daily_capacity < 0 || !frac(t.sensitivity) || !frac(t.specificity) || t.gap_days < 0 ||
      t.trace_window < 1 || t.false_positive_isolation_days < 1)
    throw ContractViolation("invalid testing configuration");
}

/// Fixes who wears a mask for the whole replication.
inline void resolve_mask_wearing(std::vector<Person>& people, const PolicyConfig& policy, Rng& rng) {
  for (Person& p : people) {
    const bool student = p.role == Role::student;
    const MaskType type = student ? policy.student_mask_type : policy.instructor_mask_type;
    const double compliance =
        student ? policy.student_mask_compliance : policy.instructor_mask_compliance;
    const bool wears = type != MaskType::none && bernoulli(rng, compliance);
    p.wears_mask = wears;
    p.mask_type = wears ? type : MaskType::none;
  }
}

struct ScenarioPreset {
  std::string name;
  std::string label;  // short row label as reported (e.g. "PD + M")
  PolicyConfig policy;
};

inline TestingConfig symptomatic_only_testing(double capacity = 2000.0) {
  TestingConfig t;
  t.enabled = true;
  t.daily_capacity = capacity;
  t.contact_tracing = false;
  t.capacity_reference_population = kReferenceStudents;
  return t;
}

inline TestingConfig traced_testing(double capacity) {
  TestingConfig t = symptomatic_only_testing(capacity);
  t.contact_tracing = true;
  return t;
}

/// Default capacity for the staged-plan testing row (tests/day at full scale).
inline constexpr double kSunriseTestingCapacity = 5000.0;

/// The six cumulative stages of the staged reopening plan, in order.
inline std::vector<ScenarioPreset> sunrise_presets(int horizon = 84) {
  std::vector<ScenarioPreset> out;
  PolicyConfig p;
  out.push_back({"no-policy", "No Policy", p});

  p.student_mask_type = p.instructor_mask_type = MaskType::cloth;
  p.student_mask_compliance = p.instructor_mask_compliance = 1.0;
  out.push_back({"m", "M", p});

  p.distancing_feet = 6.0;
  out.push_back({"pd-m", "PD + M", p});

  p.modality_cap = 30;
  out.push_back({"cm-pd-m", "CM + PD + M", p});

  p.testing = traced_testing(kSunriseTestingCapacity);
  out.push_back({"t-cm-pd-m", "T + CM + PD + M", p});

  p.online_until_day = std::min(14, horizon);
  out.push_back({"rcm-t-pd-m", "RCM + T + PD + M", p});
  return out;
}

/// Single-dimension sweeps; every other dimension stays at its pre-pandemic
/// setting and only symptomatic people are tested.
inline std::vector<ScenarioPreset> experiment_presets() {
  std::vector<ScenarioPreset> out;
  PolicyConfig base;
  base.testing = symptomatic_only_testing();

  for (int pct : {0, 25, 50, 75, 100}) {
    PolicyConfig p = base;
    p.student_mask_type = p.instructor_mask_type = MaskType::cloth;
    p.instructor_mask_compliance = 1.0;
    p.student_mask_compliance = pct / 100.0;
    out.push_back({"mask-compliance-" + std::to_string(pct),
                   "Cloth, " + std::to_string(pct) + "% students", p});
  }
  const std::pair<const char*, MaskType> types[] = {
      {"cloth", MaskType::cloth}, {"medical", MaskType::medical}, {"n95", MaskType::n95}};
  for (const auto& [name, type] : types) {
    PolicyConfig p = base;
    p.student_mask_type = type;
    p.instructor_mask_type = MaskType::cloth;
    p.student_mask_compliance = p.instructor_mask_compliance = 1.0;
    out.push_back({std::string("mask-type-") + name, std::string("Students in ") + name, p});
  }
  for (int feet = 2; feet <= 6; ++feet) {
    PolicyConfig p = base;
    p.distancing_feet = feet;
    out.push_back({"distancing-" + std::to_string(feet), std::to_string(feet) + " ft", p});
  }
  for (std::optional<int> cap : {std::optional<int>{}, std::optional<int>{60}, std::optional<int>{30}}) {
    PolicyConfig p = base;
    p.modality_cap = cap;
    const std::string tag = cap ? std::to_string(*cap) : std::string("all");
    out.push_back({"modality-cap-" + tag, cap ? "Cap " + tag : "All in person", p});
  }
  for (int cap : {2000, 5000, 10000}) {
    PolicyConfig p = base;
    p.testing = traced_testing(cap);
    out.push_back({"testing-" + std::to_string(cap), std::to_string(cap) + " tests/day", p});
  }
  return out;
}

inline std::optional<ScenarioPreset> find_preset(const std::string& name, int horizon = 84) {
  for (auto& p : sunrise_presets(horizon))
    if (p.name == name) return p;
  for (auto& p : experiment_presets())
    if (p.name == name) return p;
  return std::nullopt;
}

}  // namespace campussim
