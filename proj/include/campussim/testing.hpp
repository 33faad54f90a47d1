#pragma once

// Daily test allocation: symptomatic agents first, then contact-traced
// sampling, with test error, gap days and quarantine of positives.

#include <algorithm>
#include <climits>
#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "campussim/network.hpp"
#include "campussim/progression.hpp"
#include "campussim/rng.hpp"

namespace campussim {

struct TestingConfig {
  bool enabled = false;
  double daily_capacity = 0.0;  // tests/day at the reference population
  double sensitivity = 0.967;
  double specificity = 1.0;
  int gap_days = 3;
  int trace_window = 3;
  bool contact_tracing = true;
  int false_positive_isolation_days = 14;
  // Capacity is scaled by #students / reference; 0 disables scaling.
  double capacity_reference_population = kReferenceStudents;

  int effective_capacity(std::size_t n_students) const {
    if (!enabled) return 0;
    const double scale = capacity_reference_population > 0.0
                             ? static_cast<double>(n_students) / capacity_reference_population
                             : 1.0;
    return static_cast<int>(std::llround(daily_capacity * scale));
  }

  friend bool operator==(const TestingConfig&, const TestingConfig&) = default;
};

enum class TestResult : std::uint8_t { positive, negative };

struct TestRecord {
  PersonIndex person = 0;
  int day = 0;
  TestResult result = TestResult::negative;
  bool truly_infectious = false;
  bool symptomatic_trigger = false;
  std::optional<ClassIndex> ct_class;
};

/// Sessions actually held, kept for the last few days.
class AttendanceHistory {
 public:
  explicit AttendanceHistory(int days_kept = 3) : days_kept_(std::max(1, days_kept)) {}

  void record_day(int day, std::vector<Visit> held) {
    std::sort(held.begin(), held.end(), [](const Visit& a, const Visit& b) { return a.cls < b.cls; });
    days_.push_back({day, std::move(held)});
    while (static_cast<int>(days_.size()) > days_kept_) days_.pop_front();
  }

  /// Sessions of `day` (empty when not retained).
  std::span<const Visit> sessions(int day) const {
    for (const auto& d : days_)
      if (d.day == day) return d.visits;
    return {};
  }

  const Visit* find(int day, ClassIndex cls) const {
    auto s = sessions(day);
    auto it = std::lower_bound(s.begin(), s.end(), cls,
                               [](const Visit& v, ClassIndex c) { return v.cls < c; });
    return it != s.end() && it->cls == cls ? &*it : nullptr;
  }

 private:
  struct Day {
    int day;
    std::vector<Visit> visits;
  };
  int days_kept_;
  std::deque<Day> days_;
};

struct ContactTraceSet {
  std::vector<ClassIndex> classes;        // sorted, unique
  std::vector<const Visit*> exposures;    // sessions shared with a positive
};

inline bool attended(const Visit& v, PersonIndex p) {
  return std::binary_search(v.attendees.begin(), v.attendees.end(), p);
}

/// Classes attended by positive-tested people within `window` days up to and
/// including their test day.
inline ContactTraceSet contact_trace(std::span<const TestRecord> positives,
                                     const AttendanceHistory& history,
                                     const BipartiteNetwork& net, int window) {
  ContactTraceSet out;
  for (const TestRecord& r : positives) {
    if (r.result != TestResult::positive) continue;
    for (int day = r.day - window + 1; day <= r.day; ++day) {
      for (ClassIndex c : net.classes_of(r.person)) {
        const Visit* v = history.find(day, c);
        if (v && attended(*v, r.person)) {
          out.classes.push_back(c);
          out.exposures.push_back(v);
        }
      }
    }
  }
  std::sort(out.classes.begin(), out.classes.end());
  out.classes.erase(std::unique(out.classes.begin(), out.classes.end()), out.classes.end());
  std::sort(out.exposures.begin(), out.exposures.end());
  out.exposures.erase(std::unique(out.exposures.begin(), out.exposures.end()), out.exposures.end());
  return out;
}

/// Sampling weight from infectability (1 + shared sessions with positives).
using InfectabilityWeight = std::function<double(int infectability)>;

inline double log_infectability_weight(int infectability) {
  return std::log1p(static_cast<double>(infectability));
}

/// Weighted sampling without replacement (sequential-draw semantics) via
/// exponential keys; returns indices into `weights`, in draw order.
inline std::vector<std::size_t> weighted_sample_without_replacement(std::span<const double> weights,
                                                                    std::size_t k, Rng& rng) {
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) continue;
    // Smaller key = drawn earlier; Exp(w) arrival times.
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    keys.emplace_back(-std::log1p(-u) / weights[i], i);
  }
  k = std::min(k, keys.size());
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k), keys.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = keys[i].second;
  return out;
}

/// Per-replication testing bookkeeping.
struct TestingState {
  explicit TestingState(std::size_t population = 0) : last_test_day(population, INT_MIN / 2) {}
  std::vector<int> last_test_day;
  std::deque<PersonIndex> symptomatic_queue;
  std::deque<TestRecord> recent_positives;
};

struct DailyTestingOutcome {
  std::vector<TestRecord> records;
  std::vector<PersonIndex> quarantined;
};

inline bool gap_ok(const TestingState& st, PersonIndex p, int day, int gap_days) {
  const int last = st.last_test_day[p];
  return last != day && day - last >= gap_days;
}

/// One day of testing. Agents that turned symptomatic yesterday join a FIFO
/// queue that is served first (overflow rolls to the next day); leftover
/// capacity samples students enrolled in contact-traced classes with weight
/// `weight(1 + sessions shared with a positive)`. Positives are quarantined
/// immediately.
inline DailyTestingOutcome run_daily_testing(std::span<AgentHealth> agents,
                                             const BipartiteNetwork& net,
                                             const AttendanceHistory& history,
                                             const TestingConfig& config, int capacity, int day,
                                             TestingState& st, const ProgressionParams& prog,
                                             Rng& rng,
                                             const InfectabilityWeight& weight = log_infectability_weight) {
  DailyTestingOutcome out;
  if (!config.enabled) return out;
  const auto& people = net.people();

  for (PersonIndex p = 0; p < agents.size(); ++p)
    if (agents[p].state == HealthState::symptomatic && agents[p].resolve_day == day - 1)
      st.symptomatic_queue.push_back(p);

  auto run_test = [&](PersonIndex p, bool symptomatic, std::optional<ClassIndex> via) {
    const bool infectious = is_infectious(agents[p]);
    const bool positive =
        infectious ? bernoulli(rng, config.sensitivity) : bernoulli(rng, 1.0 - config.specificity);
    st.last_test_day[p] = day;
    TestRecord rec{p, day, positive ? TestResult::positive : TestResult::negative, infectious,
                   symptomatic, via};
    out.records.push_back(rec);
    if (positive) {
      agents[p] = quarantine(agents[p], day, prog, rng, config.false_positive_isolation_days);
      out.quarantined.push_back(p);
      st.recent_positives.push_back(rec);
    }
  };

  int remaining = std::max(0, capacity);
  std::deque<PersonIndex> deferred;
  while (!st.symptomatic_queue.empty()) {
    const PersonIndex p = st.symptomatic_queue.front();
    st.symptomatic_queue.pop_front();
    if (agents[p].state != HealthState::symptomatic) continue;
    if (remaining == 0 || !gap_ok(st, p, day, config.gap_days)) {
      deferred.push_back(p);
      continue;
    }
    run_test(p, true, std::nullopt);
    --remaining;
  }
  st.symptomatic_queue = std::move(deferred);

  while (!st.recent_positives.empty() &&
         st.recent_positives.front().day <= day - config.trace_window)
    st.recent_positives.pop_front();

  if (!config.contact_tracing || remaining == 0 || st.recent_positives.empty()) return out;

  const std::vector<TestRecord> positives(st.recent_positives.begin(), st.recent_positives.end());
  const ContactTraceSet trace = contact_trace(positives, history, net, config.trace_window);
  if (trace.classes.empty()) return out;

  std::vector<int> shared(agents.size(), 0);
  for (const Visit* v : trace.exposures)
    for (PersonIndex p : v->attendees) ++shared[p];

  std::vector<PersonIndex> candidates;
  std::vector<ClassIndex> via;
  std::vector<char> seen(agents.size(), 0);
  for (ClassIndex c : trace.classes) {
    for (PersonIndex p : net.members_of(c)) {
      if (seen[p] || people[p].role != Role::student) continue;
      seen[p] = 1;
      const HealthState s = agents[p].state;
      if (s == HealthState::quarantined || s == HealthState::removed_severe) continue;
      if (!gap_ok(st, p, day, config.gap_days)) continue;
      candidates.push_back(p);
      via.push_back(c);
    }
  }
  std::vector<double> w(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) w[i] = weight(1 + shared[candidates[i]]);
  for (std::size_t i :
       weighted_sample_without_replacement(w, static_cast<std::size_t>(remaining), rng))
    run_test(candidates[i], false, via[i]);
  return out;
}

inline void write_test_log_header(std::ostream& os) {
  os << "day,person_id,result,symptomatic_trigger,ct_class_id\n";
}

inline void write_test_log(std::ostream& os, std::span<const TestRecord> records,
                           const BipartiteNetwork& net) {
  for (const auto& r : records) {
    os << r.day << ',' << net.people()[r.person].id << ','
       << (r.result == TestResult::positive ? "positive" : "negative") << ','
       << (r.symptomatic_trigger ? 1 : 0) << ',';
    if (r.ct_class) os << net.classes()[*r.ct_class].id;
    os << '\n';
  }
}

}  // namespace campussim
