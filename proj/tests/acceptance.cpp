// One PASS/FAIL line per primary acceptance criterion; exits nonzero if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>

#include "campussim/engine.hpp"
#include "campussim/policy.hpp"
#include "campussim/scenario.hpp"
#include "campussim/synthetic.hpp"

using namespace campussim;

namespace {

// Tolerances and sample sizes.
constexpr int kMomentDraws = 100000;
constexpr double kMomentTol = 0.1;
constexpr double kSymptomaticTol = 0.005;
constexpr double kFalseNegativeTol = 0.002;
constexpr double kWellsRileyDecimals = 5e-7;
constexpr int kNetworkInstances = 1000;
constexpr int kUniformitySeeds = 10000;
constexpr double kUniformityTol = 0.02;
constexpr double kCategoryTol = 0.02;
constexpr int kEnsembleRuns = 100;
constexpr std::uint64_t kEnsembleSeed = 2020;
constexpr double kMaskReduction = 0.15;
constexpr double kDistancingReduction = 0.50;
constexpr double kModalityReduction = 0.50;
constexpr double kTestingReduction = 0.20;
constexpr double kSeparationSigmas = 2.0;
constexpr int kAuditRunsPerPreset = 20;
constexpr double kFullScaleSeconds = 10.0;
constexpr double kDeskBatchSeconds = 60.0;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  failures += !ok;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void distribution_moments() {
  ProgressionParams prog;
  Rng rng(1);
  std::vector<double> inc(kMomentDraws), con(kMomentDraws);
  int symptomatic = 0;
  for (int i = 0; i < kMomentDraws; ++i) {
    inc[static_cast<std::size_t>(i)] = sample_incubation(prog, rng);
    con[static_cast<std::size_t>(i)] = sample_contagious_duration(prog, rng);
    symptomatic += infect({}, 0, InfectionSource::seed, prog, rng).will_be_symptomatic;
  }
  const double inc_mean = std::accumulate(inc.begin(), inc.end(), 0.0) / kMomentDraws;
  std::nth_element(inc.begin(), inc.begin() + kMomentDraws / 2, inc.end());
  const double inc_median = inc[kMomentDraws / 2];
  const double con_mean = std::accumulate(con.begin(), con.end(), 0.0) / kMomentDraws;
  const double sym = static_cast<double>(symptomatic) / kMomentDraws;

  // Ten infectious, symptomatic students tested on one day, repeated.
  std::vector<Person> people(10);
  std::vector<ClassSection> classes;
  const BipartiteNetwork net(people, classes, {});
  std::vector<AgentHealth> base(10);
  for (auto& a : base)
    a = advance_day(schedule_infection({}, -4, InfectionSource::campus, 8.0, 2, 6.0, true), 4);
  TestingConfig cfg;
  cfg.enabled = true;
  cfg.daily_capacity = 10;
  cfg.capacity_reference_population = 0;
  AttendanceHistory history;
  long long tested = 0, negatives = 0;
  for (int rep = 0; tested < kMomentDraws; ++rep) {
    auto agents = base;
    TestingState st(agents.size());
    Rng r = make_stream(31, {static_cast<std::uint64_t>(rep)});
    for (const auto& t : run_daily_testing(agents, net, history, cfg, 10, 5, st, prog, r).records) {
      ++tested;
      negatives += t.result == TestResult::negative;
    }
  }
  const double fn = static_cast<double>(negatives) / static_cast<double>(tested);

  const bool ok = std::abs(inc_mean - 8.29) <= kMomentTol && std::abs(inc_median - 7.76) <= kMomentTol &&
                  std::abs(con_mean - 7.8) <= kMomentTol && std::abs(sym - 0.65) <= kSymptomaticTol &&
                  std::abs(fn - 0.033) <= kFalseNegativeTol;
  report(ok, "distribution moments",
         fmt("incubation mean %.3f median %.3f, contagious mean %.3f, symptomatic %.4f, "
             "false negative %.4f",
             inc_mean, inc_median, con_mean, sym, fn));
}

void wells_riley() {
  double worst_low = 0, worst_high = 0;
  bool grid_ok = true;
  for (int i = 0; i <= 5000; ++i) {
    const double x = i / 10000.0;
    const double gap = infection_probability_linear(1, x, 1, 1, 1) - infection_probability_exact(1, x, 1, 1, 1);
    grid_ok &= gap >= -1e-15 && gap <= x * x / 2 + 1e-15;
    worst_low = std::min(worst_low, gap);
    worst_high = std::max(worst_high, gap - x * x / 2);
  }
  const double exact = infection_probability_exact(1, 0.48, 20, 1, 500);
  const double linear = infection_probability_linear(1, 0.48, 20, 1, 500);
  const bool ok = grid_ok && std::abs(exact - 0.019017) < kWellsRileyDecimals &&
                  std::abs(linear - 0.0192) < kWellsRileyDecimals;
  report(ok, "wells-riley",
         fmt("grid 0..0.5 gap within [0, x^2/2] (min gap %.2e, max excess %.2e); exact %.6f, linear %.6f",
             worst_low, worst_high, exact, linear));
}

std::vector<ClassSection> departmental_classes() {
  std::vector<ClassSection> classes;
  int id = 0;
  for (const char* dept : {"A", "B", "C"})
    for (int diff = 1; diff <= 4; ++diff)
      for (int k = 0; k < 5; ++k) {
        ClassSection c;
        c.id = "C" + std::to_string(id++);
        c.department = dept;
        c.difficulty = diff;
        c.capacity = 400;
        c.meetings = {{0, 1.0}};
        classes.push_back(c);
      }
  return classes;
}

void network_properties() {
  Rng gen(11);
  int exact_failures = 0;
  for (int trial = 0; trial < kNetworkInstances; ++trial) {
    // Campus-like sparsity: a person takes few of many locations.
    const std::size_t np = std::uniform_int_distribution<std::size_t>(20, 80)(gen);
    const std::size_t nl = std::uniform_int_distribution<std::size_t>(30, 80)(gen);
    DegreeSequence d(np), w(nl);
    for (auto& v : d) v = std::uniform_int_distribution<int>(1, 5)(gen);
    for (auto& v : w) v = std::uniform_int_distribution<int>(0, static_cast<int>(np / 4))(gen);
    if (std::accumulate(w.begin(), w.end(), 0) == 0) w[0] = 1;
    auto [db, wb] = balance_degree_sequences(d, w, gen);
    const auto edges = configuration_edges(db, wb, gen);
    std::vector<int> dp(np, 0), wl(nl, 0);
    std::vector<std::pair<PersonIndex, ClassIndex>> keys;
    for (const auto& e : edges) {
      ++dp[e.person];
      ++wl[e.cls];
      keys.emplace_back(e.person, e.cls);
    }
    std::sort(keys.begin(), keys.end());
    const bool simple = std::adjacent_find(keys.begin(), keys.end()) == keys.end();
    exact_failures += !(dp == db && wl == wb && simple);
  }

  int identity = 0;
  for (int s = 0; s < kUniformitySeeds; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    auto edges = configuration_edges({1, 1}, {1, 1}, rng);
    std::sort(edges.begin(), edges.end());
    identity += edges[0] == Edge{0, 0};
  }
  const double uniform = static_cast<double>(identity) / kUniformitySeeds;

  auto classes = departmental_classes();
  std::vector<Person> students(3000);
  for (std::size_t i = 0; i < students.size(); ++i) {
    students[i].id = "S" + std::to_string(i);
    students[i].department = std::string(1, static_cast<char>('A' + i % 3));
    students[i].academic_level = 1 + static_cast<int>(i % 4);
  }
  std::vector<Person> instructors(classes.size());
  for (std::size_t i = 0; i < instructors.size(); ++i) {
    instructors[i].id = "I" + std::to_string(i);
    instructors[i].role = Role::instructor;
  }
  Rng rng(21);
  const auto campus = generate_campus(students, instructors, classes, rng);
  std::array<double, 3> freq{};
  const auto& net = campus.network;
  double total = 0;
  for (const auto& e : net.edges()) {
    const auto& p = net.people()[e.person];
    if (p.role != Role::student) continue;
    const auto& c = net.classes()[e.cls];
    freq[c.department != p.department ? 2 : c.difficulty == *p.academic_level ? 0 : 1] += 1;
    total += 1;
  }
  for (auto& f : freq) f /= total;
  const CampusOptions opt;
  const bool cats = std::abs(freq[0] - opt.p1) <= kCategoryTol && std::abs(freq[1] - opt.p2) <= kCategoryTol &&
                    std::abs(freq[2] - opt.p3) <= kCategoryTol;
  const bool ok = exact_failures == 0 && std::abs(uniform - 0.5) <= kUniformityTol && cats;
  report(ok, "network properties",
         fmt("%d/%d instances exact and simple; forced matching %.4f; categories %.4f/%.4f/%.4f",
             kNetworkInstances - exact_failures, kNetworkInstances, uniform, freq[0], freq[1], freq[2]));
}

double week12(const Campus& campus, const ScenarioPreset& preset, const ModelParams& params) {
  return run_ensemble(campus.network, campus.events, preset.policy, params, kEnsembleRuns, kEnsembleSeed)
      .mean_campus.back();
}

void directional_effects(const Campus& campus, const ModelParams& params) {
  struct Pair {
    const char* what;
    const char* base;
    const char* treat;
    double min_reduction;
  };
  const Pair pairs[] = {
      {"mask compliance 0->100%", "mask-compliance-0", "mask-compliance-100", kMaskReduction},
      {"distancing 2->6 ft", "distancing-2", "distancing-6", kDistancingReduction},
      {"modality cap inf->30", "modality-cap-all", "modality-cap-30", kModalityReduction},
      {"testing 2000->10000", "testing-2000", "testing-10000", kTestingReduction},
  };
  for (const auto& p : pairs) {
    const double a = week12(campus, *find_preset(p.base), params);
    const double b = week12(campus, *find_preset(p.treat), params);
    const double reduction = a > 0 ? (a - b) / a : 0.0;
    report(reduction >= p.min_reduction, std::string("directional effect, ") + p.what,
           fmt("week-12 mean %.2f -> %.2f, reduction %.1f%% (need >= %.0f%%)", a, b, 100 * reduction,
               100 * p.min_reduction));
  }
}

void sunrise_stacking(const Campus& campus, const ModelParams& params) {
  const auto presets = sunrise_presets(params.horizon);
  const auto table = compare_scenarios(presets, campus.network, campus.events, params, kEnsembleRuns,
                                       kEnsembleSeed);
  std::vector<double> mean, se;
  for (const auto& row : table.rows) {
    mean.push_back(row.mean.back());
    se.push_back(row.ci.back() / 1.96);
  }
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    detail << (i ? " | " : "") << table.rows[i].label << ' ' << fmt("%.2f", mean[i]);
    if (i == 0) continue;
    if (i <= 3) {
      const double sigma = std::sqrt(se[i - 1] * se[i - 1] + se[i] * se[i]);
      ok &= mean[i - 1] - mean[i] >= kSeparationSigmas * sigma && mean[i - 1] > mean[i];
    } else {
      ok &= mean[i - 1] >= mean[i];
    }
  }
  report(ok, "sunrise stacking", detail.str());
}

struct Audit : RunObserver {
  explicit Audit(std::size_t n) : infected(n, false), population(n) {}
  std::vector<bool> infected;
  std::size_t population;
  int illegal = 0, reinfected = 0, quarantine_leaks = 0, conservation = 0;

  void on_session(int, const Visit& held, std::span<const AgentHealth> agents,
                  std::span<const PersonIndex> newly) override {
    bool source = false;
    for (PersonIndex p : held.attendees) {
      quarantine_leaks += agents[p].state == HealthState::quarantined;
      source |= is_infectious(agents[p]);
    }
    quarantine_leaks += !newly.empty() && !source;
  }
  void on_infection(int, PersonIndex p, InfectionSource) override {
    reinfected += infected[p];
    infected[p] = true;
  }
  void on_transition(int, PersonIndex, const AgentHealth& before, const AgentHealth& after) override {
    const bool release = before.state == HealthState::quarantined && before.false_positive_hold;
    illegal += !release && !is_legal_transition(before.state, after.state);
  }
  void on_day_end(int, std::span<const AgentHealth> agents) override {
    const auto c = count_states(agents);
    conservation += std::accumulate(c.begin(), c.end(), std::size_t{0}) != population;
  }
};

void hard_invariants(const Campus& campus, const ModelParams& params) {
  int runs = 0, monotone = 0, illegal = 0, reinfected = 0, leaks = 0, conservation = 0;
  for (const auto& preset : sunrise_presets(params.horizon)) {
    const auto net = apply_modality_cap(campus.network, preset.policy.modality_cap);
    for (int i = 0; i < kAuditRunsPerPreset; ++i) {
      Audit audit(net.people().size());
      RunOptions opt;
      opt.observer = &audit;
      const auto r = run_single(net, campus.events, preset.policy, params, replication_seed(kEnsembleSeed, i), opt);
      ++runs;
      for (std::size_t d = 1; d < r.cumulative_campus.size(); ++d)
        monotone += r.cumulative_campus[d] < r.cumulative_campus[d - 1] || r.cumulative_all[d] < r.cumulative_all[d - 1];
      illegal += audit.illegal;
      reinfected += audit.reinfected;
      leaks += audit.quarantine_leaks;
      conservation += audit.conservation;
    }
  }
  const auto policy = sunrise_presets(params.horizon)[4].policy;
  const auto serial = run_ensemble(campus.network, campus.events, policy, params, kEnsembleRuns, kEnsembleSeed, 1);
  const auto parallel = run_ensemble(campus.network, campus.events, policy, params, kEnsembleRuns, kEnsembleSeed, 8);
  const bool deterministic = serial == parallel;
  const bool ok = monotone + illegal + reinfected + leaks + conservation == 0 && deterministic;
  report(ok, "hard invariants",
         fmt("%d audited runs: %d monotonicity, %d conservation, %d illegal transitions, %d quarantine "
             "leaks, %d reinfections; parallel 1 vs 8 %s",
             runs, monotone, conservation, illegal, leaks, reinfected, deterministic ? "identical" : "DIFFER"));
}

void performance(const ModelParams& params) {
  auto t0 = std::chrono::steady_clock::now();
  SyntheticCampusOptions full;
  full.scale = 1.0;
  NetworkConfig net_cfg;
  net_cfg.synthetic = full;
  const Campus campus = build_campus(net_cfg, params.horizon);
  const double build = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  const auto r = run_single(campus.network, campus.events, {}, params, 1);
  const double single = seconds_since(t0);
  const bool full_ok = build + single <= kFullScaleSeconds;
  report(full_ok, "performance, full scale",
         fmt("%zu students: campus build %.2f s + one replication %.2f s (limit %.0f s), %d campus infections",
             campus.network.student_count(), build, single, kFullScaleSeconds, r.cumulative_campus.back()));

  const Campus desk = build_campus(NetworkConfig{}, params.horizon);
  t0 = std::chrono::steady_clock::now();
  run_ensemble(desk.network, desk.events, {}, params, kEnsembleRuns, kEnsembleSeed);
  const double batch = seconds_since(t0);
  report(batch <= kDeskBatchSeconds, "performance, desk scale",
         fmt("%d replications in %.2f s (limit %.0f s)", kEnsembleRuns, batch, kDeskBatchSeconds));
}

}  // namespace

int main() {
  const ModelParams params;
  distribution_moments();
  wells_riley();
  network_properties();
  const Campus desk = build_campus(NetworkConfig{}, params.horizon);
  directional_effects(desk, params);
  sunrise_stacking(desk, params);
  hard_invariants(desk, params);
  performance(params);
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criterion line(s) failed"
                         : std::string("acceptance: all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
