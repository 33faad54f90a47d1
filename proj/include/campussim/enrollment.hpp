#pragma once

// Enrollment file: CSV with a fixed header and one record per row.
//
//   kind,id,ref,dept,level,capacity,meetings_per_week,duration_hours,days
//   student,S1,,CS,2,,,,
//   class,C1,,CS,2,40,2,1.0,0;3
//   instructor,I1,C1,,,,,,
//   enrollment,S1,C1,,,,,,
//
// `level` is the academic level for students and the difficulty for classes.
// `days` lists the meeting weekdays (0 = Monday) separated by ';'; when empty
// the meetings are spread over the five weekdays starting from the class's
// row position. Lines starting with '#' and blank lines are ignored.

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "campussim/error.hpp"
#include "campussim/network.hpp"
#include "campussim/text.hpp"

namespace campussim {

inline constexpr std::string_view kEnrollmentHeader =
    "kind,id,ref,dept,level,capacity,meetings_per_week,duration_hours,days";
inline constexpr int kTeachingDays = 5;

struct EnrollmentData {
  BipartiteNetwork network;
  std::vector<std::string> warnings;
};

struct EnrollmentSummary {
  std::size_t students = 0, instructors = 0, classes = 0, enrollments = 0;
  double students_per_class() const {
    return classes ? static_cast<double>(students) / static_cast<double>(classes) : 0.0;
  }
};

inline EnrollmentSummary summarize(const BipartiteNetwork& net) {
  EnrollmentSummary s;
  for (const auto& p : net.people()) (p.role == Role::student ? s.students : s.instructors)++;
  s.classes = net.classes().size();
  for (const auto& e : net.edges())
    if (net.people()[e.person].role == Role::student) ++s.enrollments;
  return s;
}

namespace detail {

inline std::vector<Meeting> default_meetings(std::size_t class_position, int per_week,
                                             double hours) {
  std::vector<Meeting> m;
  const int start = static_cast<int>(class_position % kTeachingDays);
  for (int k = 0; k < per_week; ++k)
    m.push_back({(start + k * kTeachingDays / per_week) % kTeachingDays, hours});
  return m;
}

}  // namespace detail

/// Parses an enrollment file into a deterministic network. Campus-invariant
/// violations (degree outside [2,5], over capacity, classes without exactly
/// one instructor) are reported as warnings; malformed rows, unknown
/// references and duplicate rows are ParseErrors with the line number.
inline EnrollmentData load_enrollment(std::istream& in) {
  std::vector<Person> students, instructors;
  std::vector<ClassSection> classes;
  struct InstructorRow {
    std::size_t slot;
    std::string cls;
    int line;
  };
  std::vector<InstructorRow> instructor_class;
  std::unordered_map<std::string, std::size_t> instructor_slot;
  std::vector<std::tuple<std::string, std::string, int>> enrollments;
  std::unordered_map<std::string, int> person_line, class_line;

  std::string raw;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kEnrollmentHeader)
        throw ParseError("expected header '" + std::string(kEnrollmentHeader) + "'", line_no);
      header_seen = true;
      continue;
    }
    auto f = detail::split(line, ',');
    if (f.size() > 9) throw ParseError("too many fields", line_no);
    f.resize(9);
    const std::string_view kind = f[0];
    const std::string id(f[1]);
    if (id.empty()) throw ParseError("missing id", line_no);

    auto new_person = [&](const char* what) {
      auto [it, fresh] = person_line.emplace(id, line_no);
      if (!fresh)
        throw ParseError(std::string("duplicate ") + what + " '" + id + "' (first on line " +
                             std::to_string(it->second) + ")",
                         line_no);
    };

    if (kind == "student") {
      new_person("person");
      if (f[3].empty()) throw ParseError("student needs a department", line_no);
      students.push_back({id, Role::student, std::string(f[3]),
                          detail::parse_number<int>(f[4], "academic level", line_no)});
    } else if (kind == "instructor") {
      if (f[2].empty()) throw ParseError("instructor needs a class id", line_no);
      // Repeated instructor rows add further classes to the same person.
      auto known = instructor_slot.find(id);
      if (known == instructor_slot.end()) {
        new_person("person");
        known = instructor_slot.emplace(id, instructors.size()).first;
        instructors.push_back({id, Role::instructor, std::string(f[3]), std::nullopt});
      }
      instructor_class.push_back({known->second, std::string(f[2]), line_no});
    } else if (kind == "class") {
      auto [it, fresh] = class_line.emplace(id, line_no);
      if (!fresh)
        throw ParseError("duplicate class '" + id + "' (first on line " +
                             std::to_string(it->second) + ")",
                         line_no);
      ClassSection c;
      c.id = id;
      c.department = std::string(f[3]);
      c.difficulty = detail::parse_number<int>(f[4], "difficulty", line_no);
      c.capacity = detail::parse_number<int>(f[5], "capacity", line_no);
      if (c.capacity < 1) throw ParseError("capacity must be at least 1", line_no);
      const int per_week = detail::parse_number<int>(f[6], "meetings per week", line_no);
      const double hours = detail::parse_number<double>(f[7], "duration", line_no);
      if (per_week < 0 || per_week > kTeachingDays)
        throw ParseError("meetings per week must be within [0, 5]", line_no);
      if (!(hours > 0.0)) throw ParseError("duration must be positive", line_no);
      if (f[8].empty()) {
        c.meetings = detail::default_meetings(classes.size(), per_week, hours);
      } else {
        std::vector<bool> used(kDaysPerWeek, false);
        for (auto d : detail::split(f[8], ';')) {
          const int dow = detail::parse_number<int>(d, "meeting day", line_no);
          if (dow < 0 || dow >= kDaysPerWeek) throw ParseError("meeting day out of range", line_no);
          if (used[static_cast<std::size_t>(dow)]) throw ParseError("repeated meeting day", line_no);
          used[static_cast<std::size_t>(dow)] = true;
          c.meetings.push_back({dow, hours});
        }
        if (static_cast<int>(c.meetings.size()) != per_week)
          throw ParseError("meeting days do not match meetings per week", line_no);
      }
      classes.push_back(std::move(c));
    } else if (kind == "enrollment") {
      if (f[2].empty()) throw ParseError("enrollment needs a class id", line_no);
      enrollments.emplace_back(id, std::string(f[2]), line_no);
    } else {
      throw ParseError("unknown record kind '" + std::string(kind) + "'", line_no);
    }
  }
  if (!header_seen) throw ParseError("missing header row", line_no);

  std::unordered_map<std::string, PersonIndex> person_index;
  std::unordered_map<std::string, ClassIndex> class_index;
  std::vector<Person> people = std::move(students);
  const std::size_t n_students = people.size();
  for (auto& p : instructors) people.push_back(std::move(p));
  for (PersonIndex i = 0; i < people.size(); ++i) person_index.emplace(people[i].id, i);
  for (ClassIndex i = 0; i < classes.size(); ++i) class_index.emplace(classes[i].id, i);

  std::vector<Edge> edges;
  edges.reserve(enrollments.size() + instructor_class.size());
  std::unordered_map<std::uint64_t, int> seen;
  for (const auto& row : instructor_class) {
    auto c = class_index.find(row.cls);
    if (c == class_index.end()) throw ParseError("unknown class '" + row.cls + "'", row.line);
    const auto p = static_cast<PersonIndex>(n_students + row.slot);
    if (!seen.emplace(detail::edge_key(p, c->second), row.line).second)
      throw ParseError("duplicate instructor row for class '" + row.cls + "'", row.line);
    edges.push_back({p, c->second});
  }
  for (const auto& [student, cls, line] : enrollments) {
    auto p = person_index.find(student);
    if (p == person_index.end() || people[p->second].role != Role::student)
      throw ParseError("unknown student '" + student + "'", line);
    auto c = class_index.find(cls);
    if (c == class_index.end()) throw ParseError("unknown class '" + cls + "'", line);
    auto [it, fresh] = seen.emplace(detail::edge_key(p->second, c->second), line);
    if (!fresh)
      throw ParseError("duplicate enrollment row (" + student + ", " + cls +
                           "), first on line " + std::to_string(it->second),
                       line);
    edges.push_back({p->second, c->second});
  }

  EnrollmentData out;
  out.network = BipartiteNetwork(std::move(people), std::move(classes), std::move(edges));
  out.warnings = out.network.campus_violations();
  return out;
}

inline void write_enrollment(std::ostream& os, const BipartiteNetwork& net) {
  os << kEnrollmentHeader << '\n';
  const auto& people = net.people();
  for (const auto& p : people)
    if (p.role == Role::student)
      os << "student," << p.id << ",," << p.department << ',' << p.academic_level.value_or(0)
         << ",,,,\n";
  for (const auto& c : net.classes()) {
    os << "class," << c.id << ",," << c.department << ',' << c.difficulty << ',' << c.capacity
       << ',' << c.meetings.size() << ','
       << format_double(c.meetings.empty() ? 1.0 : c.meetings.front().duration_hours)
       << ',';
    for (std::size_t k = 0; k < c.meetings.size(); ++k)
      os << (k ? ";" : "") << c.meetings[k].day_of_week;
    os << '\n';
  }
  for (PersonIndex p = 0; p < people.size(); ++p) {
    if (people[p].role != Role::instructor) continue;
    for (ClassIndex c : net.classes_of(p))
      os << "instructor," << people[p].id << ',' << net.classes()[c].id << ','
         << people[p].department << ",,,,,\n";
  }
  for (const Edge& e : net.edges())
    if (people[e.person].role == Role::student)
      os << "enrollment," << people[e.person].id << ',' << net.classes()[e.cls].id << ",,,,,,\n";
}

}  // namespace campussim
