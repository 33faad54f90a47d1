#pragma once

// Daily simulation loop for one replication, plus seeded Monte Carlo
// ensembles and preset comparisons.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "campussim/network.hpp"
#include "campussim/policy.hpp"
#include "campussim/progression.hpp"
#include "campussim/rng.hpp"
#include "campussim/testing.hpp"
#include "campussim/transmission.hpp"

namespace campussim {

struct ModelParams {
  TransmissionParams transmission;
  MaskEfficiencies masks;
  ProgressionParams progression;
  // Outside infections per day are given at this many students and scaled
  // linearly to the simulated campus; 0 disables scaling.
  double outside_reference_population = kReferenceStudents;
  int horizon = 84;
  bool include_instructors = false;  // count instructors in the reported series
};

struct SimulationResult {
  std::vector<int> cumulative_campus;  // infected in class sessions
  std::vector<int> cumulative_all;     // campus + outside + initial seeds
  std::vector<int> new_campus;         // campus infections per day
  StateCounts final_state_counts{};
  std::vector<TestRecord> test_log;    // filled when requested

  friend bool operator==(const SimulationResult& a, const SimulationResult& b) {
    auto same_log = [](const std::vector<TestRecord>& x, const std::vector<TestRecord>& y) {
      return std::equal(x.begin(), x.end(), y.begin(), y.end(), [](const auto& r, const auto& s) {
        return r.person == s.person && r.day == s.day && r.result == s.result &&
               r.symptomatic_trigger == s.symptomatic_trigger && r.ct_class == s.ct_class;
      });
    };
    return a.cumulative_campus == b.cumulative_campus && a.cumulative_all == b.cumulative_all &&
           a.new_campus == b.new_campus && a.final_state_counts == b.final_state_counts &&
           same_log(a.test_log, b.test_log);
  }
};

/// Hooks for auditing a replication; all default to no-ops.
struct RunObserver {
  virtual ~RunObserver() = default;
  /// A session as held: `attendees` excludes quarantined/removed agents;
  /// `agents` is the state at session start.
  virtual void on_session(int /*day*/, const Visit& /*held*/,
                          std::span<const AgentHealth> /*agents*/,
                          std::span<const PersonIndex> /*newly_infected*/) {}
  virtual void on_infection(int /*day*/, PersonIndex, InfectionSource) {}
  virtual void on_transition(int /*day*/, PersonIndex, const AgentHealth& /*before*/,
                             const AgentHealth& /*after*/) {}
  virtual void on_day_end(int /*day*/, std::span<const AgentHealth>) {}
};

struct RunOptions {
  bool record_test_log = false;
  RunObserver* observer = nullptr;
  InfectabilityWeight ct_weight = log_infectability_weight;
};

inline std::vector<MaskWear> resolve_masks(std::span<const Person> people,
                                           const PolicyConfig& policy, Rng& rng) {
  std::vector<Person> copy(people.begin(), people.end());
  resolve_mask_wearing(copy, policy, rng);
  std::vector<MaskWear> out(copy.size());
  for (std::size_t i = 0; i < copy.size(); ++i) out[i] = {copy[i].wears_mask, copy[i].mask_type};
  return out;
}

/// One replication. `net` must already carry the policy's modality (see
/// apply_modality_cap); `events` may include visits of classes that are now
/// online, which are skipped. Daily phases: outside infections, class
/// sessions, testing, then every agent advances to the next day.
inline SimulationResult run_single(const BipartiteNetwork& net, const EventSequence& events,
                                   const PolicyConfig& policy, const ModelParams& params,
                                   std::uint64_t seed, const RunOptions& opt = {}) {
  const int horizon = params.horizon;
  if (events.horizon() < horizon) throw ContractViolation("event sequence shorter than horizon");
  validate(policy, horizon);

  const auto& people = net.people();
  const std::size_t n = people.size();
  const std::size_t n_students = net.student_count();

  Rng mask_rng = make_stream(seed, {stream::kMasks});
  const std::vector<MaskWear> masks = resolve_masks(people, policy, mask_rng);

  TransmissionParams tp = params.transmission;
  tp.distancing_feet = policy.distancing_feet;

  std::vector<AgentHealth> agents(n);
  {
    Rng r = make_stream(seed, {stream::kSeeding});
    seed_initial_infections(agents, people, params.progression, r);
  }

  const double outside_per_day =
      params.outside_reference_population > 0.0
          ? params.progression.outside_infections_per_day * static_cast<double>(n_students) /
                params.outside_reference_population
          : params.progression.outside_infections_per_day;
  const int test_capacity = policy.testing.effective_capacity(n_students);
  const bool tracing = policy.testing.enabled && policy.testing.contact_tracing;

  TestingState testing_state(n);
  AttendanceHistory history(std::max(1, policy.testing.trace_window));

  SimulationResult result;
  result.cumulative_campus.assign(static_cast<std::size_t>(horizon), 0);
  result.cumulative_all.assign(static_cast<std::size_t>(horizon), 0);
  result.new_campus.assign(static_cast<std::size_t>(horizon), 0);

  auto counted = [&](PersonIndex p) {
    return params.include_instructors || people[p].role == Role::student;
  };
  int cum_campus = 0, cum_all = 0;
  for (PersonIndex p = 0; p < n; ++p)
    if (agents[p].ever_infected() && counted(p)) ++cum_all;

  SessionContext ctx;
  std::vector<std::pair<PersonIndex, ClassIndex>> pending;
  std::vector<Visit> held_today;

  for (int day = 0; day < horizon; ++day) {
    int new_campus = 0;

    {
      Rng r = make_stream(seed, {stream::kOutside, static_cast<std::uint64_t>(day)});
      for (PersonIndex p :
           apply_outside_infection(agents, people, day, outside_per_day, params.progression, r)) {
        if (counted(p)) ++cum_all;
        if (opt.observer) opt.observer->on_infection(day, p, InfectionSource::outside);
      }
    }

    pending.clear();
    held_today.clear();
    if (day >= policy.online_until_day) {
      for (const Visit& visit : events.visits(day)) {
        if (net.classes()[visit.cls].modality == Modality::online) continue;
        Visit held{visit.cls, visit.duration_hours, {}};
        held.attendees.reserve(visit.attendees.size());
        ctx.attendees.clear();
        ctx.duration_hours = visit.duration_hours;
        for (PersonIndex p : visit.attendees) {
          const HealthState s = agents[p].state;
          if (s == HealthState::quarantined || s == HealthState::removed_severe) continue;
          held.attendees.push_back(p);
          const SessionHealth h = is_infectious(agents[p])          ? SessionHealth::infectious
                                  : s == HealthState::susceptible ? SessionHealth::susceptible
                                                                  : SessionHealth::other;
          ctx.attendees.push_back({p, h, masks[p]});
        }
        Rng r = make_stream(seed, {stream::kSession, static_cast<std::uint64_t>(day), visit.cls});
        const auto infected = class_session_infections(ctx, tp, r, params.masks);
        for (PersonIndex p : infected) pending.emplace_back(p, visit.cls);
        if (opt.observer) opt.observer->on_session(day, held, agents, infected);
        if (tracing) held_today.push_back(std::move(held));
      }
    }
    // Commit after every session of the day was evaluated against the
    // start-of-day states; a person infected in two sessions counts once.
    {
      Rng r = make_stream(seed, {stream::kSession, static_cast<std::uint64_t>(day), ~0ULL});
      for (const auto& [p, cls] : pending) {
        if (agents[p].state != HealthState::susceptible) continue;
        agents[p] = infect(agents[p], day, InfectionSource::campus, params.progression, r);
        if (counted(p)) {
          ++cum_campus;
          ++cum_all;
          ++new_campus;
        }
        if (opt.observer) opt.observer->on_infection(day, p, InfectionSource::campus);
      }
    }
    if (tracing) history.record_day(day, std::move(held_today));

    if (policy.testing.enabled) {
      Rng r = make_stream(seed, {stream::kTesting, static_cast<std::uint64_t>(day)});
      auto outcome = run_daily_testing(agents, net, history, policy.testing, test_capacity, day,
                                       testing_state, params.progression, r, opt.ct_weight);
      if (opt.record_test_log)
        result.test_log.insert(result.test_log.end(), outcome.records.begin(),
                               outcome.records.end());
    }

    const auto d = static_cast<std::size_t>(day);
    result.cumulative_campus[d] = cum_campus;
    result.cumulative_all[d] = cum_all;
    result.new_campus[d] = new_campus;
    if (opt.observer) opt.observer->on_day_end(day, agents);

    for (PersonIndex p = 0; p < n; ++p) {
      if (opt.observer) {
        const AgentHealth before = agents[p];
        agents[p] = advance_day(std::move(agents[p]), day + 1);
        if (before.state != agents[p].state) opt.observer->on_transition(day + 1, p, before, agents[p]);
      } else {
        agents[p] = advance_day(std::move(agents[p]), day + 1);
      }
    }
  }
  result.final_state_counts = count_states(agents);
  return result;
}

// ---------------------------------------------------------------------------
// Ensembles

struct EnsembleResult {
  std::vector<double> mean_campus;
  std::vector<double> ci_campus;  // 1.96 * sd / sqrt(n); zero when n < 2
  std::vector<double> mean_all;
  std::vector<double> ci_all;
  int run_count = 0;
  std::vector<int> final_campus;  // per run, last day
  std::vector<int> final_all;

  friend bool operator==(const EnsembleResult&, const EnsembleResult&) = default;
};

inline std::uint64_t replication_seed(std::uint64_t base_seed, int index) {
  return derive_seed(base_seed, {stream::kReplication, static_cast<std::uint64_t>(index)});
}

namespace detail {
inline void mean_and_ci(const std::vector<SimulationResult>& runs,
                        std::vector<int> SimulationResult::*series, std::vector<double>& mean,
                        std::vector<double>& ci) {
  const std::size_t days = (runs.front().*series).size();
  const double n = static_cast<double>(runs.size());
  mean.assign(days, 0.0);
  ci.assign(days, 0.0);
  for (std::size_t d = 0; d < days; ++d) {
    double s = 0.0;
    for (const auto& r : runs) s += (r.*series)[d];
    const double m = s / n;
    mean[d] = m;
    if (runs.size() < 2) continue;
    double ss = 0.0;
    for (const auto& r : runs) {
      const double x = (r.*series)[d] - m;
      ss += x * x;
    }
    ci[d] = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
}
}  // namespace detail

/// Aggregates runs in index order, so the result does not depend on how the
/// runs were scheduled.
inline EnsembleResult aggregate(const std::vector<SimulationResult>& runs) {
  EnsembleResult e;
  e.run_count = static_cast<int>(runs.size());
  if (runs.empty()) return e;
  detail::mean_and_ci(runs, &SimulationResult::cumulative_campus, e.mean_campus, e.ci_campus);
  detail::mean_and_ci(runs, &SimulationResult::cumulative_all, e.mean_all, e.ci_all);
  for (const auto& r : runs) {
    e.final_campus.push_back(r.cumulative_campus.empty() ? 0 : r.cumulative_campus.back());
    e.final_all.push_back(r.cumulative_all.empty() ? 0 : r.cumulative_all.back());
  }
  return e;
}

using ProgressCallback = std::function<void(int completed, int total)>;

/// Runs `n_runs` replications on `parallelism` threads. Replication i uses
/// replication_seed(base_seed, i).
inline std::vector<SimulationResult> run_replications(const BipartiteNetwork& net,
                                                      const EventSequence& events,
                                                      const PolicyConfig& policy,
                                                      const ModelParams& params, int n_runs,
                                                      std::uint64_t base_seed, int parallelism = 1,
                                                      const ProgressCallback& progress = {}) {
  if (n_runs < 1) throw ContractViolation("an ensemble needs at least one run");
  std::vector<SimulationResult> runs(static_cast<std::size_t>(n_runs));
  std::atomic<int> next{0}, done{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < n_runs; i = next++) {
      try {
        runs[static_cast<std::size_t>(i)] =
            run_single(net, events, policy, params, replication_seed(base_seed, i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_runs;
        return;
      }
      const int c = ++done;
      if (progress) progress(c, n_runs);
    }
  };
  const int threads = std::clamp(parallelism, 1, n_runs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return runs;
}

/// Ensemble over a base (uncapped) network; the policy's modality cap is
/// applied here.
inline EnsembleResult run_ensemble(const BipartiteNetwork& base_net, const EventSequence& events,
                                   const PolicyConfig& policy, const ModelParams& params,
                                   int n_runs, std::uint64_t base_seed, int parallelism = 1,
                                   const ProgressCallback& progress = {}) {
  const BipartiteNetwork net = apply_modality_cap(base_net, policy.modality_cap);
  return aggregate(
      run_replications(net, events, policy, params, n_runs, base_seed, parallelism, progress));
}

/// Week-end days reported in comparison tables (1-based day numbers).
inline constexpr int kWeekEndDays[] = {7, 14, 21, 28, 42, 56, 70, 84};

struct ComparisonRow {
  std::string name;
  std::string label;
  std::vector<double> mean;  // per week-end column
  std::vector<double> ci;
  EnsembleResult ensemble;
};

struct ComparisonTable {
  std::vector<int> week_days;
  std::vector<ComparisonRow> rows;
};

/// Runs every preset on the same campus. With common random numbers every
/// preset sees the same replication seeds.
inline ComparisonTable compare_scenarios(std::span<const ScenarioPreset> presets,
                                         const BipartiteNetwork& base_net,
                                         const EventSequence& events, const ModelParams& params,
                                         int n_runs, std::uint64_t base_seed, int parallelism = 1,
                                         bool common_random_numbers = true,
                                         const ProgressCallback& progress = {}) {
  ComparisonTable table;
  for (int d : kWeekEndDays)
    if (d <= params.horizon) table.week_days.push_back(d);
  int completed_before = 0;
  const int total = n_runs * static_cast<int>(presets.size());
  for (std::size_t i = 0; i < presets.size(); ++i) {
    const std::uint64_t seed =
        common_random_numbers ? base_seed : derive_seed(base_seed, {stream::kPreset, i});
    ProgressCallback inner;
    if (progress)
      inner = [&, completed_before](int c, int) { progress(completed_before + c, total); };
    ComparisonRow row{presets[i].name, presets[i].label, {}, {},
                      run_ensemble(base_net, events, presets[i].policy, params, n_runs, seed,
                                   parallelism, inner)};
    for (int d : table.week_days) {
      row.mean.push_back(row.ensemble.mean_campus[static_cast<std::size_t>(d - 1)]);
      row.ci.push_back(row.ensemble.ci_campus[static_cast<std::size_t>(d - 1)]);
    }
    table.rows.push_back(std::move(row));
    completed_before += n_runs;
  }
  return table;
}

}  // namespace campussim
