#pragma once

// Person-class bipartite contact network: degree-sequence balancing, the
// stub-matching configuration model, the campus enrollment generator, and
// per-day attendance (event sequence) sampling.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "campussim/error.hpp"
#include "campussim/rng.hpp"

namespace campussim {

using PersonIndex = std::uint32_t;
using ClassIndex = std::uint32_t;

enum class Role : std::uint8_t { student, instructor };
enum class MaskType : std::uint8_t { none, cloth, medical, n95 };
enum class Modality : std::uint8_t { in_person, online };

inline constexpr int kDaysPerWeek = 7;
/// Full-scale campus size that absolute per-day rates (tests, outside
/// infections) refer to.
inline constexpr double kReferenceStudents = 46782.0;

struct Person {
  std::string id;
  Role role = Role::student;
  std::string department;
  std::optional<int> academic_level;  // students only
  MaskType mask_type = MaskType::none;
  bool wears_mask = false;
};

struct Meeting {
  int day_of_week = 0;  // 0 = Monday
  double duration_hours = 1.0;
};

struct ClassSection {
  std::string id;
  std::string department;
  int difficulty = 1;
  int capacity = 1;
  std::vector<Meeting> meetings;
  Modality modality = Modality::in_person;
};

using DegreeSequence = std::vector<int>;

struct Edge {
  PersonIndex person;
  ClassIndex cls;
  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

namespace detail {
inline std::uint64_t edge_key(PersonIndex p, ClassIndex c) {
  return (static_cast<std::uint64_t>(p) << 32) | c;
}
}  // namespace detail

class BipartiteNetwork {
 public:
  BipartiteNetwork() = default;

  /// Throws ContractViolation on out-of-range endpoints or duplicate edges.
  BipartiteNetwork(std::vector<Person> people, std::vector<ClassSection> classes,
                   std::vector<Edge> edges)
      : people_(std::move(people)), classes_(std::move(classes)), edges_(std::move(edges)) {
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
      throw ContractViolation("duplicate (person, class) edge");
    for (const Edge& e : edges_) {
      if (e.person >= people_.size() || e.cls >= classes_.size())
        throw ContractViolation("edge endpoint out of range");
    }
    build_adjacency();
  }

  const std::vector<Person>& people() const { return people_; }
  const std::vector<ClassSection>& classes() const { return classes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const ClassIndex> classes_of(PersonIndex p) const {
    return {person_adj_.data() + person_off_[p], person_adj_.data() + person_off_[p + 1]};
  }
  /// Sorted by person index.
  std::span<const PersonIndex> members_of(ClassIndex c) const {
    return {class_adj_.data() + class_off_[c], class_adj_.data() + class_off_[c + 1]};
  }
  int degree(PersonIndex p) const { return static_cast<int>(person_off_[p + 1] - person_off_[p]); }
  int enrolled_students(ClassIndex c) const { return student_count_[c]; }
  bool has_edge(PersonIndex p, ClassIndex c) const {
    auto cs = classes_of(p);
    return std::find(cs.begin(), cs.end(), c) != cs.end();
  }

  std::size_t student_count() const {
    return static_cast<std::size_t>(std::count_if(people_.begin(), people_.end(),
                                                  [](const Person& x) { return x.role == Role::student; }));
  }

  /// Mutable access for attributes that do not affect topology (modality, masks).
  std::vector<ClassSection>& mutable_classes() { return classes_; }
  std::vector<Person>& mutable_people() { return people_; }

  /// Human-readable list of campus-invariant violations (empty when valid).
  std::vector<std::string> campus_violations(int min_degree = 2, int max_degree = 5) const {
    std::vector<std::string> out;
    for (PersonIndex p = 0; p < people_.size(); ++p) {
      const int d = degree(p);
      if (people_[p].role == Role::student && (d < min_degree || d > max_degree))
        out.push_back("student " + people_[p].id + " has degree " + std::to_string(d));
      if (people_[p].role == Role::instructor && d != 1)
        out.push_back("instructor " + people_[p].id + " has degree " + std::to_string(d));
    }
    for (ClassIndex c = 0; c < classes_.size(); ++c) {
      if (student_count_[c] > classes_[c].capacity)
        out.push_back("class " + classes_[c].id + " over capacity (" +
                      std::to_string(student_count_[c]) + " > " +
                      std::to_string(classes_[c].capacity) + ")");
      const auto members = members_of(c);
      const auto instructors = std::count_if(members.begin(), members.end(), [&](PersonIndex p) {
        return people_[p].role == Role::instructor;
      });
      if (instructors != 1)
        out.push_back("class " + classes_[c].id + " has " + std::to_string(instructors) +
                      " instructors");
    }
    return out;
  }

  /// Canonical edge list: one "personId,classId" line per edge, sorted by
  /// person id then class id (string order).
  void write_edge_list(std::ostream& os) const {
    std::vector<std::pair<const std::string*, const std::string*>> rows;
    rows.reserve(edges_.size());
    for (const Edge& e : edges_) rows.emplace_back(&people_[e.person].id, &classes_[e.cls].id);
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return std::tie(*a.first, *a.second) < std::tie(*b.first, *b.second);
    });
    os << "person_id,class_id\n";
    for (const auto& [p, c] : rows) os << *p << ',' << *c << '\n';
  }

 private:
  void build_adjacency() {
    const std::size_t np = people_.size(), nc = classes_.size();
    person_off_.assign(np + 1, 0);
    class_off_.assign(nc + 1, 0);
    for (const Edge& e : edges_) {
      ++person_off_[e.person + 1];
      ++class_off_[e.cls + 1];
    }
    std::partial_sum(person_off_.begin(), person_off_.end(), person_off_.begin());
    std::partial_sum(class_off_.begin(), class_off_.end(), class_off_.begin());
    person_adj_.resize(edges_.size());
    class_adj_.resize(edges_.size());
    auto pcur = person_off_;
    auto ccur = class_off_;
    // edges_ is sorted by (person, class) so both adjacency lists come out sorted.
    for (const Edge& e : edges_) {
      person_adj_[pcur[e.person]++] = e.cls;
      class_adj_[ccur[e.cls]++] = e.person;
    }
    student_count_.assign(nc, 0);
    for (const Edge& e : edges_)
      if (people_[e.person].role == Role::student) ++student_count_[e.cls];
  }

  std::vector<Person> people_;
  std::vector<ClassSection> classes_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> person_off_, class_off_;
  std::vector<ClassIndex> person_adj_;
  std::vector<PersonIndex> class_adj_;
  std::vector<int> student_count_;
};

// ---------------------------------------------------------------------------
// Degree sequences

/// Makes the location side sum to the people side by unit steps on uniformly
/// chosen location entries. The people side is never modified, so the total
/// edit |sum(d) - sum(w)| is the minimum possible. Location entries stay within
/// [floor_j, #people] (a simple graph cannot exceed #people per location).
inline std::pair<DegreeSequence, DegreeSequence> balance_degree_sequences(
    const DegreeSequence& people, const DegreeSequence& locations, Rng& rng,
    std::span<const int> location_floor = {}) {
  auto positive = [](const DegreeSequence& s) {
    return std::any_of(s.begin(), s.end(), [](int v) { return v > 0; });
  };
  if (people.empty() || locations.empty() || !positive(people) || !positive(locations))
    throw InfeasibleError("degree sequences need at least one positive entry on each side");
  for (int v : people)
    if (v < 0) throw ContractViolation("negative people-side degree");
  for (int v : locations)
    if (v < 0) throw ContractViolation("negative location-side degree");
  if (!location_floor.empty() && location_floor.size() != locations.size())
    throw ContractViolation("location floor size mismatch");

  const long long n_people = static_cast<long long>(people.size());
  const long long target = std::accumulate(people.begin(), people.end(), 0LL);
  for (int v : people)
    if (v > static_cast<long long>(locations.size()))
      throw InfeasibleError("a person's degree exceeds the number of locations");
  long long floor_total = 0;
  for (std::size_t j = 0; j < locations.size(); ++j)
    floor_total += location_floor.empty() ? 0 : location_floor[j];
  if (target < floor_total)
    throw InfeasibleError("people-side total is below the location-side floor total");
  if (target > n_people * static_cast<long long>(locations.size()))
    throw InfeasibleError("location-side capacity total is below the people-side total");

  DegreeSequence w = locations;
  auto floor_of = [&](std::size_t j) { return location_floor.empty() ? 0 : location_floor[j]; };
  long long diff = target - std::accumulate(w.begin(), w.end(), 0LL);
  std::vector<std::size_t> eligible;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const bool ok = diff > 0 ? w[j] < n_people : w[j] > floor_of(j);
    if (ok) eligible.push_back(j);
  }
  while (diff != 0) {
    if (eligible.empty()) throw InfeasibleError("no location entry can absorb the imbalance");
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    const std::size_t k = pick(rng);
    const std::size_t j = eligible[k];
    if (diff > 0) {
      ++w[j];
      --diff;
      if (w[j] >= n_people) {
        eligible[k] = eligible.back();
        eligible.pop_back();
      }
    } else {
      --w[j];
      ++diff;
      if (w[j] <= floor_of(j)) {
        eligible[k] = eligible.back();
        eligible.pop_back();
      }
    }
  }
  return {people, std::move(w)};
}

struct ConfigurationOptions {
  int max_consecutive_rejections = 100;
  int max_restarts = 10;
};

/// Stub matching: repeatedly pair one uniformly chosen free people-side stub
/// with one uniformly chosen free location-side stub. A pair that duplicates
/// an existing edge is rejected and redrawn; too many consecutive rejections
/// restart the matching on a fresh sub-stream.
inline std::vector<Edge> configuration_edges(const DegreeSequence& d, const DegreeSequence& w,
                                             Rng& rng, ConfigurationOptions opt = {}) {
  const long long sd = std::accumulate(d.begin(), d.end(), 0LL);
  const long long sw = std::accumulate(w.begin(), w.end(), 0LL);
  if (sd != sw) throw ContractViolation("degree sequences are not balanced");
  for (int v : d)
    if (v < 0) throw ContractViolation("negative degree");
  for (int v : w)
    if (v < 0) throw ContractViolation("negative degree");

  const std::uint64_t root = rng();
  for (int attempt = 0; attempt <= opt.max_restarts; ++attempt) {
    Rng sub = make_stream(root, {static_cast<std::uint64_t>(attempt)});
    std::vector<PersonIndex> pstubs;
    std::vector<ClassIndex> lstubs;
    pstubs.reserve(static_cast<std::size_t>(sd));
    lstubs.reserve(static_cast<std::size_t>(sd));
    for (std::size_t i = 0; i < d.size(); ++i) pstubs.insert(pstubs.end(), d[i], static_cast<PersonIndex>(i));
    for (std::size_t j = 0; j < w.size(); ++j) lstubs.insert(lstubs.end(), w[j], static_cast<ClassIndex>(j));

    std::vector<Edge> edges;
    edges.reserve(pstubs.size());
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(pstubs.size() * 2);
    bool failed = false;
    int rejections = 0;
    while (!pstubs.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, pstubs.size() - 1);
      const std::size_t i = pick(sub);
      const std::size_t j = pick(sub);
      const auto key = detail::edge_key(pstubs[i], lstubs[j]);
      if (seen.contains(key)) {
        if (++rejections >= opt.max_consecutive_rejections) {
          failed = true;
          break;
        }
        continue;
      }
      rejections = 0;
      seen.insert(key);
      edges.push_back({pstubs[i], lstubs[j]});
      pstubs[i] = pstubs.back();
      pstubs.pop_back();
      lstubs[j] = lstubs.back();
      lstubs.pop_back();
    }
    if (!failed) return edges;
  }
  throw InfeasibleError("configuration model could not produce a simple graph after " +
                        std::to_string(opt.max_restarts) + " restarts");
}

/// Configuration-model network over the given people and classes.
inline BipartiteNetwork generate_configuration(std::vector<Person> people,
                                               std::vector<ClassSection> classes,
                                               const DegreeSequence& d, const DegreeSequence& w,
                                               Rng& rng, ConfigurationOptions opt = {}) {
  if (d.size() != people.size() || w.size() != classes.size())
    throw ContractViolation("degree sequence length does not match node count");
  auto edges = configuration_edges(d, w, rng, opt);
  return BipartiteNetwork(std::move(people), std::move(classes), std::move(edges));
}

// ---------------------------------------------------------------------------
// Campus generator

namespace detail {

// Fenwick tree over non-negative integer weights with prefix search.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t i, long long delta) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
  }
  long long prefix(std::size_t end) const {  // sum of [0, end)
    long long s = 0;
    for (std::size_t i = end; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }
  long long range(std::size_t a, std::size_t b) const { return a < b ? prefix(b) - prefix(a) : 0; }
  // Smallest index i with prefix(i + 1) > target.
  std::size_t find(long long target) const {
    std::size_t pos = 0;
    std::size_t step = 1;
    while (step * 2 < tree_.size()) step *= 2;
    for (; step > 0; step /= 2) {
      if (pos + step < tree_.size() && tree_[pos + step] <= target) {
        pos += step;
        target -= tree_[pos];
      }
    }
    return pos;
  }

 private:
  std::vector<long long> tree_;
};

}  // namespace detail

struct CampusOptions {
  double p1 = 0.7;  // own department, difficulty matches level
  double p2 = 0.2;  // own department, other difficulty
  double p3 = 0.1;  // other department
  int min_degree = 2;
  int max_degree = 5;
};

struct CampusNetwork {
  BipartiteNetwork network;
  std::array<std::size_t, 3> category_picks{};  // realised picks per category
};

/// Builds the student/instructor-class network. Instructors are mapped onto
/// classes by a random bijection. Each student draws a degree uniformly from
/// [min_degree, max_degree] and fills it one pick at a time: a category is
/// drawn with (p1, p2, p3), renormalised over the categories that still have
/// free seats for this student, then a free seat within the category is drawn
/// uniformly (so classes are chosen in proportion to remaining capacity).
inline CampusNetwork generate_campus(std::vector<Person> students,
                                     std::vector<Person> instructors,
                                     std::vector<ClassSection> classes, Rng& rng,
                                     const CampusOptions& opt = {}) {
  if (instructors.size() != classes.size())
    throw ContractViolation("need exactly one instructor per class");
  const double ps[3] = {opt.p1, opt.p2, opt.p3};
  for (double p : ps)
    if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("category probability out of [0,1]");
  if (std::abs(opt.p1 + opt.p2 + opt.p3 - 1.0) > 1e-9)
    throw ContractViolation("category probabilities must sum to 1");
  if (opt.min_degree < 0 || opt.max_degree < opt.min_degree)
    throw ContractViolation("invalid student degree range");

  const std::size_t ns = students.size();
  const std::size_t nc = classes.size();

  std::uniform_int_distribution<int> degree_dist(opt.min_degree, opt.max_degree);
  std::vector<int> degree(ns);
  long long demand = 0;
  for (auto& d : degree) demand += (d = degree_dist(rng));
  long long supply = 0;
  for (const auto& c : classes) {
    if (c.capacity < 0) throw ContractViolation("negative class capacity");
    supply += c.capacity;
  }
  if (supply < demand)
    throw InfeasibleError("total class capacity " + std::to_string(supply) +
                          " is below total student demand " + std::to_string(demand));

  // Order classes by (department, difficulty) so every category is a union of
  // at most two contiguous position ranges.
  std::vector<ClassIndex> order(nc);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](ClassIndex a, ClassIndex b) {
    return std::tie(classes[a].department, classes[a].difficulty, a) <
           std::tie(classes[b].department, classes[b].difficulty, b);
  });
  std::vector<std::size_t> position(nc);
  for (std::size_t i = 0; i < nc; ++i) position[order[i]] = i;

  auto lower = [&](const std::string& dept, int diff) {
    return static_cast<std::size_t>(
        std::lower_bound(order.begin(), order.end(), std::make_pair(&dept, diff),
                         [&](ClassIndex c, const auto& key) {
                           return std::tie(classes[c].department, classes[c].difficulty) <
                                  std::tie(*key.first, key.second);
                         }) -
        order.begin());
  };

  detail::Fenwick free_seats(nc);
  std::vector<long long> remaining(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    remaining[i] = classes[order[i]].capacity;
    free_seats.add(i, remaining[i]);
  }

  using Range = std::pair<std::size_t, std::size_t>;
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(demand) + nc);
  CampusNetwork out;

  std::vector<std::size_t> chosen;
  for (std::size_t s = 0; s < ns; ++s) {
    const Person& st = students[s];
    const int level = st.academic_level.value_or(0);
    const std::size_t dept_lo = lower(st.department, std::numeric_limits<int>::min());
    const std::size_t dept_hi = lower(st.department, std::numeric_limits<int>::max());
    const std::size_t lvl_lo = lower(st.department, level);
    const std::size_t lvl_hi = lower(st.department, level + 1);
    const std::array<std::array<Range, 2>, 3> cats = {{
        {{{lvl_lo, lvl_hi}, {0, 0}}},
        {{{dept_lo, lvl_lo}, {lvl_hi, dept_hi}}},
        {{{0, dept_lo}, {dept_hi, nc}}},
    }};

    chosen.clear();
    for (int k = 0; k < degree[s]; ++k) {
      std::array<long long, 3> weight{};
      for (int c = 0; c < 3; ++c)
        for (const Range& r : cats[c]) weight[c] += free_seats.range(r.first, r.second);
      double total_p = 0.0;
      // Zero-probability categories are never used, even when they have seats.
      for (int c = 0; c < 3; ++c)
        if (weight[c] > 0) total_p += ps[c];
      int cat = -1;
      if (total_p > 0.0) {
        double u = uniform01(rng) * total_p;
        for (int c = 0; c < 3; ++c) {
          if (weight[c] <= 0 || ps[c] <= 0.0) continue;
          cat = c;
          if (u < ps[c]) break;
          u -= ps[c];
        }
      }
      if (cat < 0)
        throw InfeasibleError("capacity exhausted while enrolling student " + st.id);

      std::uniform_int_distribution<long long> seat(0, weight[cat] - 1);
      long long target = seat(rng);
      std::size_t pos = 0;
      for (const Range& r : cats[cat]) {
        const long long w = free_seats.range(r.first, r.second);
        if (target < w) {
          pos = free_seats.find(free_seats.prefix(r.first) + target);
          break;
        }
        target -= w;
      }
      ++out.category_picks[cat];
      edges.push_back({static_cast<PersonIndex>(s), order[pos]});
      chosen.push_back(pos);
      --remaining[pos];
      // Hide the class from this student's later picks.
      free_seats.add(pos, -(remaining[pos] + 1));
    }
    for (std::size_t pos : chosen) free_seats.add(pos, remaining[pos]);
  }

  std::vector<std::size_t> perm(nc);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Person> people = std::move(students);
  people.reserve(ns + instructors.size());
  for (std::size_t i = 0; i < instructors.size(); ++i) {
    people.push_back(std::move(instructors[i]));
    people.back().academic_level.reset();
    edges.push_back({static_cast<PersonIndex>(ns + i), static_cast<ClassIndex>(perm[i])});
  }
  out.network = BipartiteNetwork(std::move(people), std::move(classes), std::move(edges));
  return out;
}

// ---------------------------------------------------------------------------
// Event sequences

struct Visit {
  ClassIndex cls = 0;
  double duration_hours = 0.0;
  std::vector<PersonIndex> attendees;  // sorted
};

struct EventSequence {
  std::vector<std::vector<Visit>> days;
  int horizon() const { return static_cast<int>(days.size()); }
  const std::vector<Visit>& visits(int day) const { return days.at(static_cast<std::size_t>(day)); }
};

/// Each scheduled (student, class) meeting is kept independently with
/// probability `attendance`; instructors always attend; online classes
/// produce no visits. Every (day, class) pair draws from its own sub-stream,
/// so changing one class's modality leaves all other visits unchanged.
inline EventSequence sample_event_sequence(const BipartiteNetwork& net, double attendance,
                                           int horizon, Rng& rng) {
  if (!(attendance >= 0.0 && attendance <= 1.0))
    throw ContractViolation("attendance probability out of [0,1]");
  if (horizon < 0) throw ContractViolation("negative horizon");
  const std::uint64_t root = rng();
  EventSequence seq;
  seq.days.resize(static_cast<std::size_t>(horizon));
  const auto& people = net.people();
  for (int day = 0; day < horizon; ++day) {
    const int dow = day % kDaysPerWeek;
    auto& visits = seq.days[static_cast<std::size_t>(day)];
    for (ClassIndex c = 0; c < net.classes().size(); ++c) {
      const ClassSection& cls = net.classes()[c];
      if (cls.modality == Modality::online) continue;
      for (const Meeting& m : cls.meetings) {
        if (m.day_of_week != dow) continue;
        Visit v{c, m.duration_hours, {}};
        const auto members = net.members_of(c);
        v.attendees.reserve(members.size());
        Rng sub = make_stream(root, {static_cast<std::uint64_t>(day), c});
        for (PersonIndex p : members) {
          if (people[p].role == Role::instructor || attendance >= 1.0 ||
              bernoulli(sub, attendance))
            v.attendees.push_back(p);
        }
        visits.push_back(std::move(v));
      }
    }
  }
  return seq;
}

/// Classes with more than `cap` enrolled students move online. Topology is
/// unchanged. `std::nullopt` means no cap.
inline BipartiteNetwork apply_modality_cap(BipartiteNetwork net, std::optional<int> cap) {
  if (!cap) return net;
  auto& classes = net.mutable_classes();
  for (ClassIndex c = 0; c < classes.size(); ++c)
    if (net.enrolled_students(c) > *cap) classes[c].modality = Modality::online;
  return net;
}

}  // namespace campussim
