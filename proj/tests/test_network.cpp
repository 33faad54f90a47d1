#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "campussim/enrollment.hpp"
#include "campussim/network.hpp"
#include "campussim/synthetic.hpp"

using namespace campussim;

namespace {

std::vector<Person> people_named(const std::string& prefix, std::size_t n, Role role = Role::student) {
  std::vector<Person> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].id = prefix + std::to_string(i);
    out[i].role = role;
    out[i].department = "D";
    out[i].academic_level = 1;
  }
  return out;
}

std::vector<ClassSection> classes_named(std::size_t n, int capacity = 100) {
  std::vector<ClassSection> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].id = "C" + std::to_string(i);
    out[i].department = "D";
    out[i].capacity = capacity;
    out[i].meetings = {{0, 1.0}};
  }
  return out;
}

// Smallest total edit |d - d'| + |w - w'| over all balanced non-negative pairs
// with entries bounded by `bound`, found by enumerating every candidate.
long long brute_force_min_edit(const DegreeSequence& d, const DegreeSequence& w, int bound) {
  std::vector<int> all(d);
  all.insert(all.end(), w.begin(), w.end());
  std::vector<int> cur(all.size(), 0);
  long long best = -1;
  for (;;) {
    long long sd = 0, sw = 0, edit = 0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      (i < d.size() ? sd : sw) += cur[i];
      edit += std::abs(cur[i] - all[i]);
    }
    if (sd == sw && sd > 0 && (best < 0 || edit < best)) best = edit;
    std::size_t k = 0;
    while (k < cur.size() && ++cur[k] > bound) cur[k++] = 0;
    if (k == cur.size()) break;
  }
  return best;
}

long long edit_distance(const DegreeSequence& a, const DegreeSequence& b) {
  long long e = 0;
  for (std::size_t i = 0; i < a.size(); ++i) e += std::abs(a[i] - b[i]);
  return e;
}

}  // namespace

TEST(Balance, AlreadyBalancedIsUnchanged) {
  Rng rng(1);
  auto [d, w] = balance_degree_sequences({1, 2}, {2, 1}, rng);
  EXPECT_EQ(d, (DegreeSequence{1, 2}));
  EXPECT_EQ(w, (DegreeSequence{2, 1}));
}

TEST(Balance, SurplusRemovedFromLocationSide) {
  Rng rng(1);
  auto [d, w] = balance_degree_sequences({1, 1}, {3}, rng);
  EXPECT_EQ(d, (DegreeSequence{1, 1}));
  EXPECT_EQ(w, (DegreeSequence{2}));
  EXPECT_EQ(edit_distance({1, 1}, d) + edit_distance({3}, w), brute_force_min_edit({1, 1}, {3}, 6));
}

TEST(Balance, EmptySideIsInfeasible) {
  Rng rng(1);
  EXPECT_THROW(balance_degree_sequences({}, {1}, rng), InfeasibleError);
  EXPECT_THROW(balance_degree_sequences({1}, {}, rng), InfeasibleError);
}

TEST(Balance, MatchesExhaustiveMinimalEdit) {
  Rng gen(42);
  std::uniform_int_distribution<int> len(1, 3), val(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    DegreeSequence d(static_cast<std::size_t>(len(gen))), w(static_cast<std::size_t>(len(gen)));
    for (auto& v : d) v = val(gen);
    for (auto& v : w) v = val(gen);
    if (std::accumulate(d.begin(), d.end(), 0) == 0) d[0] = 1;
    if (std::accumulate(w.begin(), w.end(), 0) == 0) w[0] = 1;
    // A simple bipartite graph needs every person degree <= #locations.
    bool feasible = std::all_of(d.begin(), d.end(), [&](int v) { return v <= static_cast<int>(w.size()); }) &&
                    std::accumulate(d.begin(), d.end(), 0) <=
                        static_cast<int>(d.size() * w.size());
    Rng rng(static_cast<std::uint64_t>(trial));
    if (!feasible) {
      EXPECT_THROW(balance_degree_sequences(d, w, rng), InfeasibleError);
      continue;
    }
    auto [d2, w2] = balance_degree_sequences(d, w, rng);
    EXPECT_EQ(std::accumulate(d2.begin(), d2.end(), 0), std::accumulate(w2.begin(), w2.end(), 0));
    EXPECT_EQ(d2, d);
    EXPECT_EQ(edit_distance(d, d2) + edit_distance(w, w2), brute_force_min_edit(d, w, 9))
        << "trial " << trial;
  }
}

TEST(Balance, RespectsFloor) {
  Rng rng(3);
  const std::vector<int> floor{3, 0, 0};
  auto [d, w] = balance_degree_sequences({1, 1, 1, 1}, {5, 2, 2}, rng, floor);
  EXPECT_EQ(std::accumulate(w.begin(), w.end(), 0), 4);
  EXPECT_GE(w[0], 3);
}

TEST(Configuration, SingleForcedEdge) {
  Rng rng(5);
  auto net = generate_configuration(people_named("a", 1), classes_named(1), {1}, {1}, rng);
  ASSERT_EQ(net.edges().size(), 1u);
  EXPECT_EQ(net.edges()[0], (Edge{0, 0}));
}

TEST(Configuration, DoubleEdgeOnlyPairingFails) {
  Rng rng(5);
  EXPECT_THROW(generate_configuration(people_named("a", 1), classes_named(1), {2}, {2}, rng),
               InfeasibleError);
}

TEST(Configuration, TwoByTwoMatchingIsUniform) {
  const int n = 10000;
  int identity = 0;
  for (int s = 0; s < n; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    auto edges = configuration_edges({1, 1}, {1, 1}, rng);
    std::sort(edges.begin(), edges.end());
    if (edges[0] == Edge{0, 0}) ++identity;
  }
  const double freq = static_cast<double>(identity) / n;
  EXPECT_NEAR(freq, 0.5, 0.02);
  // Pearson chi-square against the uniform oracle, 1 dof, alpha = 0.001.
  const double e = n / 2.0;
  const double chi2 = (identity - e) * (identity - e) / e + (n - identity - e) * (n - identity - e) / e;
  EXPECT_LT(chi2, 10.828);
}

TEST(Configuration, DegreesAreExactAndGraphIsSimple) {
  Rng gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    // Campus-like sparsity: a person takes few of many locations.
    const std::size_t np = std::uniform_int_distribution<std::size_t>(20, 80)(gen);
    const std::size_t nl = std::uniform_int_distribution<std::size_t>(30, 80)(gen);
    DegreeSequence d(np);
    for (auto& v : d) v = std::uniform_int_distribution<int>(1, 5)(gen);
    DegreeSequence w(nl);
    for (auto& v : w) v = std::uniform_int_distribution<int>(0, static_cast<int>(np / 4))(gen);
    if (std::accumulate(w.begin(), w.end(), 0) == 0) w[0] = 1;
    auto [db, wb] = balance_degree_sequences(d, w, gen);
    auto net = generate_configuration(people_named("p", np), classes_named(nl), db, wb, gen);
    for (PersonIndex p = 0; p < np; ++p) EXPECT_EQ(net.degree(p), db[p]);
    for (ClassIndex c = 0; c < nl; ++c) EXPECT_EQ(net.members_of(c).size(), static_cast<std::size_t>(wb[c]));
    std::set<std::pair<PersonIndex, ClassIndex>> seen;
    for (const auto& e : net.edges()) EXPECT_TRUE(seen.emplace(e.person, e.cls).second);
  }
}

TEST(Configuration, DeterministicForSeed) {
  auto build = [] {
    Rng rng(99);
    return configuration_edges({2, 3, 1, 4}, {3, 3, 2, 2}, rng);
  };
  EXPECT_EQ(build(), build());
}

namespace {
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
}  // namespace

TEST(Campus, DegenerateProbabilitiesStayInDepartmentAndLevel) {
  auto classes = departmental_classes();
  auto students = people_named("S", 200);
  for (std::size_t i = 0; i < students.size(); ++i) {
    students[i].department = "A";
    students[i].academic_level = 1 + static_cast<int>(i % 4);
  }
  auto instructors = people_named("I", classes.size(), Role::instructor);
  Rng rng(8);
  CampusOptions opt;
  opt.p1 = 1.0;
  opt.p2 = opt.p3 = 0.0;
  auto campus = generate_campus(students, instructors, classes, rng, opt);
  const auto& net = campus.network;
  for (const auto& e : net.edges()) {
    const auto& p = net.people()[e.person];
    if (p.role != Role::student) continue;
    EXPECT_EQ(net.classes()[e.cls].department, "A");
    EXPECT_EQ(net.classes()[e.cls].difficulty, *p.academic_level);
  }
  EXPECT_EQ(campus.category_picks[1] + campus.category_picks[2], 0u);
}

TEST(Campus, CategoryFrequenciesFollowProbabilities) {
  auto classes = departmental_classes();
  auto students = people_named("S", 3000);
  for (std::size_t i = 0; i < students.size(); ++i) {
    students[i].department = std::string(1, static_cast<char>('A' + i % 3));
    students[i].academic_level = 1 + static_cast<int>(i % 4);
  }
  auto instructors = people_named("I", classes.size(), Role::instructor);
  Rng rng(21);
  auto campus = generate_campus(students, instructors, classes, rng);
  const auto& picks = campus.category_picks;
  const double total = static_cast<double>(picks[0] + picks[1] + picks[2]);
  ASSERT_GE(total, 10000.0);
  // Recount categories from the edges themselves.
  std::array<std::size_t, 3> recount{};
  const auto& net = campus.network;
  for (const auto& e : net.edges()) {
    const auto& p = net.people()[e.person];
    if (p.role != Role::student) continue;
    const auto& c = net.classes()[e.cls];
    recount[c.department != p.department ? 2 : c.difficulty == *p.academic_level ? 0 : 1]++;
  }
  EXPECT_EQ(recount, picks);
  EXPECT_NEAR(picks[0] / total, 0.7, 0.02);
  EXPECT_NEAR(picks[1] / total, 0.2, 0.02);
  EXPECT_NEAR(picks[2] / total, 0.1, 0.02);
}

TEST(Campus, CapacityExhaustion) {
  auto classes = classes_named(2, 0);
  classes[0].capacity = 10;
  classes[1].capacity = 9;
  auto students = people_named("S", 10);
  auto instructors = people_named("I", 2, Role::instructor);
  Rng rng(1);
  CampusOptions opt;
  opt.min_degree = opt.max_degree = 2;
  EXPECT_THROW(generate_campus(students, instructors, classes, rng, opt), InfeasibleError);
}

TEST(Campus, InvariantsHoldOnSyntheticCampus) {
  const auto net = generate_synthetic_campus({});
  EXPECT_TRUE(net.campus_violations().empty());
  for (ClassIndex c = 0; c < net.classes().size(); ++c)
    EXPECT_LE(net.enrolled_students(c), net.classes()[c].capacity);
}

TEST(Events, FullAttendanceEqualsSchedule) {
  const auto net = generate_synthetic_campus({});
  Rng rng(4);
  const auto seq = sample_event_sequence(net, 1.0, 14, rng);
  for (int day = 0; day < 14; ++day) {
    std::size_t expected = 0;
    for (const auto& c : net.classes())
      for (const auto& m : c.meetings) expected += m.day_of_week == day % 7;
    ASSERT_EQ(seq.visits(day).size(), expected);
    for (const auto& v : seq.visits(day)) {
      const auto members = net.members_of(v.cls);
      EXPECT_TRUE(std::equal(members.begin(), members.end(), v.attendees.begin(), v.attendees.end()));
    }
  }
}

TEST(Events, ZeroAttendanceKeepsOnlyInstructors) {
  const auto net = generate_synthetic_campus({});
  Rng rng(4);
  const auto seq = sample_event_sequence(net, 0.0, 7, rng);
  for (int day = 0; day < 7; ++day)
    for (const auto& v : seq.visits(day)) {
      ASSERT_EQ(v.attendees.size(), 1u);
      EXPECT_EQ(net.people()[v.attendees[0]].role, Role::instructor);
    }
}

TEST(Events, PartialAttendanceConcentrates) {
  SyntheticCampusOptions opt;
  opt.meetings_per_week = 3;
  const auto net = generate_synthetic_campus(opt);
  Rng rng(17);
  const auto seq = sample_event_sequence(net, 0.8, 84, rng);
  std::vector<int> scheduled(net.people().size()), attended(net.people().size());
  for (int day = 0; day < 84; ++day)
    for (const auto& v : seq.visits(day)) {
      for (PersonIndex p : net.members_of(v.cls)) ++scheduled[p];
      for (PersonIndex p : v.attendees) {
        ++attended[p];
        EXPECT_TRUE(net.has_edge(p, v.cls));
      }
    }
  // Per student the binomial spread at ~100 meetings is about 0.04, so each
  // student is held to 4.5 sigma and the pooled fraction to the 3% band.
  int checked = 0;
  long long sa = 0, ss = 0;
  for (PersonIndex p = 0; p < net.people().size(); ++p) {
    if (net.people()[p].role != Role::student || scheduled[p] < 50) continue;
    ++checked;
    sa += attended[p];
    ss += scheduled[p];
    const double sigma = std::sqrt(0.8 * 0.2 / scheduled[p]);
    EXPECT_NEAR(static_cast<double>(attended[p]) / scheduled[p], 0.8, 4.5 * sigma);
  }
  ASSERT_GT(checked, 100);
  EXPECT_NEAR(static_cast<double>(sa) / static_cast<double>(ss), 0.8, 0.03);
}

TEST(Events, OnlineClassesProduceNothing) {
  auto net = apply_modality_cap(generate_synthetic_campus({}), 0);
  Rng rng(2);
  const auto seq = sample_event_sequence(net, 1.0, 14, rng);
  for (int day = 0; day < 14; ++day) EXPECT_TRUE(seq.visits(day).empty());
}

TEST(Events, DeterministicForSeed) {
  const auto net = generate_synthetic_campus({});
  Rng a(9), b(9);
  const auto s1 = sample_event_sequence(net, 0.7, 21, a);
  const auto s2 = sample_event_sequence(net, 0.7, 21, b);
  for (int day = 0; day < 21; ++day) {
    ASSERT_EQ(s1.visits(day).size(), s2.visits(day).size());
    for (std::size_t i = 0; i < s1.visits(day).size(); ++i)
      EXPECT_EQ(s1.visits(day)[i].attendees, s2.visits(day)[i].attendees);
  }
}

TEST(ModalityCap, BoundaryIsInclusive) {
  std::vector<int> sizes{10, 30, 31};
  auto classes = classes_named(3);
  std::vector<Person> people = people_named("S", 31);
  std::vector<Edge> edges;
  for (ClassIndex c = 0; c < 3; ++c)
    for (int k = 0; k < sizes[c]; ++k) edges.push_back({static_cast<PersonIndex>(k), c});
  BipartiteNetwork net(people, classes, edges);
  EXPECT_EQ(apply_modality_cap(net, std::nullopt).classes()[2].modality, Modality::in_person);
  const auto capped = apply_modality_cap(net, 30);
  EXPECT_EQ(capped.classes()[0].modality, Modality::in_person);
  EXPECT_EQ(capped.classes()[1].modality, Modality::in_person);
  EXPECT_EQ(capped.classes()[2].modality, Modality::online);
  EXPECT_EQ(capped.edges(), net.edges());
}

TEST(Synthetic, FullScaleCounts) {
  SyntheticCampusOptions opt;
  opt.scale = 1.0;
  const auto s = summarize(generate_synthetic_campus(opt));
  EXPECT_EQ(s.students, 46782u);
  EXPECT_EQ(s.classes, 5570u);
  EXPECT_EQ(s.instructors, 5570u);
}

TEST(Synthetic, DeskScaleShape) {
  const auto net = generate_synthetic_campus({});
  const auto s = summarize(net);
  EXPECT_NEAR(static_cast<double>(s.students), 2000.0, 25.0);
  EXPECT_NEAR(static_cast<double>(s.classes), 238.0, 3.0);
  EXPECT_NEAR(s.students_per_class(), 8.4, 0.2);
  int large = 0;
  for (ClassIndex c = 0; c < net.classes().size(); ++c) large += net.enrolled_students(c) > 100;
  EXPECT_GT(large, 0);
}

TEST(Synthetic, RoundTripsThroughEnrollmentFile) {
  const auto net = generate_synthetic_campus({});
  std::stringstream ss;
  write_enrollment(ss, net);
  const auto back = load_enrollment(ss);
  EXPECT_TRUE(back.warnings.empty());
  std::ostringstream a, b;
  net.write_edge_list(a);
  back.network.write_edge_list(b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Enrollment, TwoStudentFixture) {
  std::istringstream in(
      "kind,id,ref,dept,level,capacity,meetings_per_week,duration_hours,days\n"
      "student,S1,,CS,1,,,,\n"
      "student,S2,,CS,2,,,,\n"
      "class,C1,,CS,1,40,2,1.5,0;2\n"
      "class,C2,,CS,2,40,1,1,\n"
      "instructor,I1,C1,CS,,,,,\n"
      "instructor,I2,C2,CS,,,,,\n"
      "enrollment,S1,C1,,,,,,\n"
      "enrollment,S2,C1,,,,,,\n"
      "enrollment,S2,C2,,,,,,\n");
  const auto data = load_enrollment(in);
  std::ostringstream edges;
  data.network.write_edge_list(edges);
  EXPECT_EQ(edges.str(), "person_id,class_id\nI1,C1\nI2,C2\nS1,C1\nS2,C1\nS2,C2\n");
  EXPECT_EQ(data.network.classes()[0].meetings.size(), 2u);
  EXPECT_EQ(data.network.classes()[0].meetings[1].day_of_week, 2);
  EXPECT_DOUBLE_EQ(data.network.classes()[0].meetings[0].duration_hours, 1.5);
  // S1 has degree 1, which the campus rules flag but do not reject.
  EXPECT_FALSE(data.warnings.empty());
}

TEST(Enrollment, DuplicateRowNamesTheLine) {
  std::istringstream in(
      "kind,id,ref,dept,level,capacity,meetings_per_week,duration_hours,days\n"
      "student,S1,,CS,1,,,,\n"
      "class,C1,,CS,1,40,2,1,\n"
      "enrollment,S1,C1,,,,,,\n"
      "enrollment,S1,C1,,,,,,\n");
  try {
    load_enrollment(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 5);
    EXPECT_NE(std::string(e.what()).find("S1, C1"), std::string::npos);
  }
}

TEST(Enrollment, UnknownReferenceAndBadHeader) {
  std::istringstream bad_header("kind,id\n");
  EXPECT_THROW(load_enrollment(bad_header), ParseError);
  std::istringstream unknown(
      "kind,id,ref,dept,level,capacity,meetings_per_week,duration_hours,days\n"
      "student,S1,,CS,1,,,,\n"
      "enrollment,S1,C9,,,,,,\n");
  EXPECT_THROW(load_enrollment(unknown), ParseError);
}

TEST(Enrollment, SummaryRecountsRecords) {
  // 84 students over 10 classes, each student in 3 classes.
  std::ostringstream text;
  text << kEnrollmentHeader << '\n';
  for (int i = 0; i < 84; ++i) text << "student,S" << i << ",,CS,1,,,,\n";
  for (int c = 0; c < 10; ++c) text << "class,C" << c << ",,CS,1,60,2,1,\n";
  for (int c = 0; c < 10; ++c) text << "instructor,I" << c << ",C" << c << ",,,,,,\n";
  int rows = 0;
  for (int i = 0; i < 84; ++i)
    for (int k = 0; k < 3; ++k, ++rows) text << "enrollment,S" << i << ",C" << (i + k) % 10 << ",,,,,,\n";
  std::istringstream in(text.str());
  const auto s = summarize(load_enrollment(in).network);
  EXPECT_EQ(s.students, 84u);
  EXPECT_EQ(s.classes, 10u);
  EXPECT_EQ(s.instructors, 10u);
  EXPECT_EQ(s.enrollments, static_cast<std::size_t>(rows));
  EXPECT_NEAR(s.students_per_class(), 8.4, 1e-12);
}
