#pragma once

// Airborne transmission within a single class session (Wells-Riley).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "campussim/network.hpp"
#include "campussim/rng.hpp"

namespace campussim {

inline constexpr double kMetersPerFoot = 0.3048;

enum class ProbabilityModel { linear, exact };

struct TransmissionParams {
  double pulmonary_rate = 0.48;  // m^3/h
  double quanta_rate = 20.0;     // quanta/h per infector
  double air_changes = 4.0;      // 1/h
  double ceiling_height = 3.0;   // m
  double distancing_feet = 2.0;
  ProbabilityModel model = ProbabilityModel::linear;
};

/// Fraction of aerosol filtered, per mask type.
struct MaskEfficiencies {
  double cloth = 0.38;
  double medical = 0.55;
  double n95 = 0.95;

  double operator()(MaskType t) const {
    switch (t) {
      case MaskType::cloth: return cloth;
      case MaskType::medical: return medical;
      case MaskType::n95: return n95;
      case MaskType::none: break;
    }
    return 0.0;
  }
};

/// Breathing volume allotted to a session: every attendee gets a circle of
/// the distancing radius, times the ceiling height. The only place feet are
/// converted to meters.
inline double room_volume(int attendee_count, double distancing_feet, double ceiling_height) {
  const double r = distancing_feet * kMetersPerFoot;
  return attendee_count * std::numbers::pi * r * r * ceiling_height;
}

inline double infection_probability_exact(double infectors, double pulmonary, double quanta,
                                          double hours, double ventilation) {
  return 1.0 - std::exp(-infectors * pulmonary * quanta * hours / ventilation);
}

/// First-order expansion of the exact form, clamped to 1.
inline double infection_probability_linear(double infectors, double pulmonary, double quanta,
                                           double hours, double ventilation) {
  return std::min(infectors * pulmonary * quanta * hours / ventilation, 1.0);
}

struct EffectiveRates {
  double pulmonary;  // susceptible intake after its own mask
  double quanta_sum; // total emission after each infector's mask
};

struct MaskWear {
  bool wears = false;
  MaskType type = MaskType::none;
};

/// Per-infector emission summed, so heterogeneous masks are handled; with no
/// masks this is (p, I*q).
inline EffectiveRates effective_rates(std::span<const MaskWear> infectors, MaskWear susceptible,
                                      double pulmonary, double quanta,
                                      const MaskEfficiencies& eff = {}) {
  EffectiveRates r{pulmonary, 0.0};
  if (susceptible.wears) r.pulmonary *= 1.0 - eff(susceptible.type);
  for (const MaskWear& m : infectors) r.quanta_sum += quanta * (m.wears ? 1.0 - eff(m.type) : 1.0);
  return r;
}

enum class SessionHealth { susceptible, infectious, other };

struct SessionAttendee {
  PersonIndex person = 0;
  SessionHealth health = SessionHealth::other;
  MaskWear mask;
};

struct SessionContext {
  std::vector<SessionAttendee> attendees;
  double duration_hours = 1.0;
};

/// Per-susceptible infection probability for a susceptible wearing `mask`,
/// given the session's summed emission.
inline double susceptible_probability(const SessionContext& ctx, double quanta_sum, MaskWear mask,
                                      const TransmissionParams& params,
                                      const MaskEfficiencies& eff) {
  const double volume = room_volume(static_cast<int>(ctx.attendees.size()),
                                    params.distancing_feet, params.ceiling_height);
  const double ventilation = params.air_changes * volume;
  const double pulmonary = params.pulmonary_rate * (mask.wears ? 1.0 - eff(mask.type) : 1.0);
  // quanta_sum already carries the infector count, so pass infectors = 1.
  return params.model == ProbabilityModel::exact
             ? infection_probability_exact(1.0, pulmonary, quanta_sum, ctx.duration_hours, ventilation)
             : infection_probability_linear(1.0, pulmonary, quanta_sum, ctx.duration_hours, ventilation);
}

/// Newly infected attendees of one session (ascending person index). The
/// infector set is fixed at session start; each susceptible is an independent
/// Bernoulli trial.
inline std::vector<PersonIndex> class_session_infections(const SessionContext& ctx,
                                                         const TransmissionParams& params,
                                                         Rng& rng,
                                                         const MaskEfficiencies& eff = {}) {
  std::vector<PersonIndex> infected;
  if (ctx.attendees.empty()) return infected;
  double quanta_sum = 0.0;
  for (const auto& a : ctx.attendees)
    if (a.health == SessionHealth::infectious)
      quanta_sum += params.quanta_rate * (a.mask.wears ? 1.0 - eff(a.mask.type) : 1.0);
  if (quanta_sum <= 0.0) return infected;

  // Only two distinct susceptible probabilities exist per mask type, so cache them.
  double cache[5] = {-1, -1, -1, -1, -1};
  for (const auto& a : ctx.attendees) {
    if (a.health != SessionHealth::susceptible) continue;
    const int slot = a.mask.wears ? 1 + static_cast<int>(a.mask.type) : 0;
    if (cache[slot] < 0) cache[slot] = susceptible_probability(ctx, quanta_sum, a.mask, params, eff);
    if (bernoulli(rng, cache[slot])) infected.push_back(a.person);
  }
  std::sort(infected.begin(), infected.end());
  return infected;
}

}  // namespace campussim
