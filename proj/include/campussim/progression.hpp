#pragma once

// Per-agent disease progression on a daily clock.
//
//   susceptible -> incubating -> transmitting (presymptomatic)
//     -> {asymptomatic, symptomatic} -> {recovered, quarantined}
//   quarantined -> {recovered, removed_severe}
//
// Durations are sampled once at infection and turned into integer transition
// days by threshold crossing: a transition at continuous time x happens on the
// first day index >= x.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "campussim/error.hpp"
#include "campussim/network.hpp"
#include "campussim/rng.hpp"

namespace campussim {

enum class HealthState : std::uint8_t {
  susceptible,
  incubating,
  transmitting_presymptomatic,
  asymptomatic,
  symptomatic,
  quarantined,
  removed_severe,
  recovered,
};
inline constexpr std::size_t kHealthStateCount = 8;

enum class InfectionSource : std::uint8_t { none, campus, outside, seed };

inline constexpr std::string_view to_string(HealthState s) {
  constexpr std::array<std::string_view, kHealthStateCount> names = {
      "susceptible", "incubating", "transmitting_presymptomatic", "asymptomatic",
      "symptomatic", "quarantined", "removed_severe",             "recovered"};
  return names[static_cast<std::size_t>(s)];
}

inline constexpr std::string_view to_string(InfectionSource s) {
  constexpr std::array<std::string_view, 4> names = {"none", "campus", "outside", "seed"};
  return names[static_cast<std::size_t>(s)];
}

struct ProgressionParams {
  double incubation_shape = 1.97;
  double incubation_scale = 9.35;  // days
  double symptomatic_prob = 0.65;
  double contagious_shape = 3.0;
  double contagious_scale = 2.6;   // days
  double severe_prob = 0.0;
  double outside_infections_per_day = 5.0;
  double initial_infected_fraction = 0.01;
  int initial_infection_age_max_days = 5;
};

struct AgentHealth {
  HealthState state = HealthState::susceptible;
  InfectionSource source = InfectionSource::none;
  std::optional<int> infection_day;
  double incubation_days = 0.0;
  int infectious_lead_days = 0;
  double contagious_days = 0.0;
  bool will_be_symptomatic = false;

  // Integer transition days derived from the sampled durations.
  int transmit_day = 0;
  int resolve_day = 0;  // incubation ends; symptoms (if any) start
  int recover_day = 0;  // contagious period ends

  std::optional<int> quarantine_until;
  int quarantine_from = 0;
  bool severe = false;               // drawn once on quarantine entry
  bool false_positive_hold = false;  // quarantined without being infectious

  bool ever_infected() const { return infection_day.has_value(); }
};

inline double sample_incubation(const ProgressionParams& params, Rng& rng) {
  return std::weibull_distribution<double>(params.incubation_shape, params.incubation_scale)(rng);
}

inline double sample_contagious_duration(const ProgressionParams& params, Rng& rng) {
  return std::gamma_distribution<double>(params.contagious_shape, params.contagious_scale)(rng);
}

namespace detail {
inline int first_day_at_or_after(double t) { return static_cast<int>(std::ceil(t)); }
}  // namespace detail

/// State implied by the infection clocks alone (ignores quarantine).
inline HealthState clock_state(const AgentHealth& a, int day) {
  if (!a.infection_day) return HealthState::susceptible;
  if (day >= a.recover_day) return HealthState::recovered;
  if (day >= a.resolve_day)
    return a.will_be_symptomatic ? HealthState::symptomatic : HealthState::asymptomatic;
  if (day >= a.transmit_day) return HealthState::transmitting_presymptomatic;
  return HealthState::incubating;
}

/// Starts an infection with explicit durations. `lead` must be below `incubation`.
inline AgentHealth schedule_infection(AgentHealth agent, int day, InfectionSource source,
                                      double incubation, int lead, double contagious,
                                      bool symptomatic) {
  if (agent.state != HealthState::susceptible || agent.ever_infected())
    throw ContractViolation("only susceptible, never-infected agents can be infected");
  if (!(incubation > lead) || lead < 1 || !(contagious > 0.0))
    throw ContractViolation("inconsistent infection durations");
  agent.state = HealthState::incubating;
  agent.source = source;
  agent.infection_day = day;
  agent.incubation_days = incubation;
  agent.infectious_lead_days = lead;
  agent.contagious_days = contagious;
  agent.will_be_symptomatic = symptomatic;
  agent.transmit_day = std::max(day + 1, detail::first_day_at_or_after(day + incubation - lead));
  agent.resolve_day = std::max(agent.transmit_day + 1,
                               detail::first_day_at_or_after(day + incubation));
  // At least one day in the symptomatic/asymptomatic state, so daily steps
  // never skip a state.
  agent.recover_day = std::max(agent.resolve_day + 1,
                               detail::first_day_at_or_after(day + incubation + contagious));
  return agent;
}

/// Samples durations and starts an infection. Throws ContractViolation unless
/// the agent is susceptible (recovered agents are immune).
inline AgentHealth infect(AgentHealth agent, int day, InfectionSource source,
                          const ProgressionParams& params, Rng& rng) {
  if (agent.state != HealthState::susceptible || agent.ever_infected())
    throw ContractViolation("only susceptible, never-infected agents can be infected");
  double incubation = sample_incubation(params, rng);
  // No lead in {1,2,3} fits an incubation of a day or less.
  while (!(incubation > 1.0)) incubation = sample_incubation(params, rng);
  const int max_lead = std::min(3, static_cast<int>(std::ceil(incubation)) - 1);
  int lead = std::uniform_int_distribution<int>(1, 3)(rng);
  while (lead > max_lead) lead = std::uniform_int_distribution<int>(1, 3)(rng);
  const double contagious = sample_contagious_duration(params, rng);
  const bool symptomatic = bernoulli(rng, params.symptomatic_prob);
  return schedule_infection(std::move(agent), day, source, incubation, lead, contagious,
                            symptomatic);
}

/// Brings the agent to its state for `day`.
inline AgentHealth advance_day(AgentHealth agent, int day) {
  switch (agent.state) {
    case HealthState::susceptible:
    case HealthState::recovered:
    case HealthState::removed_severe:
      return agent;
    case HealthState::quarantined:
      if (agent.severe && day > agent.quarantine_from) {
        agent.state = HealthState::removed_severe;
        agent.quarantine_until.reset();
      } else if (agent.quarantine_until && day >= *agent.quarantine_until) {
        agent.state = agent.false_positive_hold ? clock_state(agent, day) : HealthState::recovered;
        agent.quarantine_until.reset();
        agent.false_positive_hold = false;
      }
      return agent;
    default:
      agent.state = clock_state(agent, day);
      return agent;
  }
}

inline bool is_infectious(const AgentHealth& a) {
  return a.state == HealthState::transmitting_presymptomatic ||
         a.state == HealthState::asymptomatic || a.state == HealthState::symptomatic;
}

/// Edges of the progression machine. False-positive releases return the agent
/// to whatever its clocks say, so they are checked separately.
inline bool is_legal_transition(HealthState from, HealthState to) {
  using S = HealthState;
  if (from == to) return true;
  switch (from) {
    case S::susceptible: return to == S::incubating || to == S::quarantined;
    case S::incubating: return to == S::transmitting_presymptomatic || to == S::quarantined;
    case S::transmitting_presymptomatic:
      return to == S::asymptomatic || to == S::symptomatic || to == S::quarantined;
    case S::asymptomatic:
    case S::symptomatic: return to == S::recovered || to == S::quarantined;
    case S::quarantined: return to == S::recovered || to == S::removed_severe;
    case S::recovered:
    case S::removed_severe: return false;
  }
  return false;
}

/// Quarantines an agent that tested positive on `day`. True positives stay
/// until their contagious period ends; everyone else is held for
/// `false_positive_days` and then resumes their clock state. No-op when the
/// agent is already quarantined.
inline AgentHealth quarantine(AgentHealth agent, int day, const ProgressionParams& params,
                              Rng& rng, int false_positive_days = 14) {
  if (agent.state == HealthState::quarantined || agent.state == HealthState::removed_severe ||
      agent.state == HealthState::recovered)
    return agent;
  const bool truly_infectious = is_infectious(agent);
  agent.state = HealthState::quarantined;
  agent.quarantine_from = day;
  if (truly_infectious) {
    agent.quarantine_until = std::max(day + 1, agent.recover_day);
    agent.false_positive_hold = false;
    agent.severe = bernoulli(rng, params.severe_prob);
  } else {
    agent.quarantine_until = day + false_positive_days;
    agent.false_positive_hold = true;
    agent.severe = false;
  }
  return agent;
}

using StateCounts = std::array<std::size_t, kHealthStateCount>;

inline StateCounts count_states(std::span<const AgentHealth> agents) {
  StateCounts counts{};
  for (const auto& a : agents) ++counts[static_cast<std::size_t>(a.state)];
  return counts;
}

/// Infects floor(fraction * #students) distinct students, with infection ages
/// spread uniformly over {0, ..., max_age} days before day 0, and brings their
/// clocks to day 0. Returns the chosen person indices.
inline std::vector<PersonIndex> seed_initial_infections(std::span<AgentHealth> agents,
                                                        std::span<const Person> people,
                                                        const ProgressionParams& params,
                                                        Rng& rng) {
  std::vector<PersonIndex> students;
  for (PersonIndex i = 0; i < people.size(); ++i)
    if (people[i].role == Role::student && agents[i].state == HealthState::susceptible)
      students.push_back(i);
  const auto n_students = static_cast<std::size_t>(std::count_if(
      people.begin(), people.end(), [](const Person& p) { return p.role == Role::student; }));
  const auto target = std::min(
      students.size(),
      static_cast<std::size_t>(std::floor(params.initial_infected_fraction * static_cast<double>(n_students) + 1e-9)));
  std::vector<PersonIndex> chosen;
  chosen.reserve(target);
  std::uniform_int_distribution<int> age(0, std::max(0, params.initial_infection_age_max_days));
  for (std::size_t k = 0; k < target; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, students.size() - 1);
    std::swap(students[k], students[pick(rng)]);
    const PersonIndex p = students[k];
    const int day = -age(rng);
    agents[p] = advance_day(infect(agents[p], day, InfectionSource::seed, params, rng), 0);
    chosen.push_back(p);
  }
  return chosen;
}

/// Daily community infections from off campus: `expected_count` students
/// (floor plus a Bernoulli draw on the fractional part), chosen uniformly
/// without replacement among susceptible students. Quarantined agents are not
/// in the susceptible state and so are never chosen; instructors never are.
inline std::vector<PersonIndex> apply_outside_infection(std::span<AgentHealth> agents,
                                                        std::span<const Person> people, int day,
                                                        double expected_count,
                                                        const ProgressionParams& params, Rng& rng) {
  std::vector<PersonIndex> infected;
  if (expected_count <= 0.0) return infected;
  const double whole = std::floor(expected_count);
  std::size_t count = static_cast<std::size_t>(whole);
  if (bernoulli(rng, expected_count - whole)) ++count;
  if (count == 0) return infected;

  std::vector<PersonIndex> eligible;
  for (PersonIndex i = 0; i < people.size(); ++i)
    if (people[i].role == Role::student && agents[i].state == HealthState::susceptible)
      eligible.push_back(i);
  count = std::min(count, eligible.size());
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, eligible.size() - 1);
    std::swap(eligible[k], eligible[pick(rng)]);
    const PersonIndex p = eligible[k];
    agents[p] = infect(agents[p], day, InfectionSource::outside, params, rng);
    infected.push_back(p);
  }
  std::sort(infected.begin(), infected.end());
  return infected;
}

}  // namespace campussim
