#pragma once

// Synthetic campus with the aggregate shape of a large university: students
// to classes about 8.4 : 1, one instructor per class, students and classes
// spread over departments, and log-normal class capacities (many small
// classes, a few lectures well above 100 seats).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "campussim/network.hpp"
#include "campussim/rng.hpp"

namespace campussim {

inline constexpr int kFullScaleStudents = 46782;
inline constexpr int kFullScaleClasses = 5570;
/// About 2,000 students and 238 classes.
inline constexpr double kDeskScale = 0.0428;

struct SyntheticCampusOptions {
  double scale = kDeskScale;
  int departments = 20;
  int levels = 4;
  CampusOptions campus{};
  int meetings_per_week = 2;
  double meeting_hours = 1.0;
  int teaching_days = 5;
  double capacity_sigma = 1.0;   // log-normal shape of class capacity
  double capacity_slack = 0.15;  // spare seats over expected demand
  int min_capacity = 5;
  std::uint64_t seed = 1;
};

namespace detail {
inline std::string padded_id(char prefix, std::size_t i, std::size_t count) {
  const std::string digits = std::to_string(i + 1);
  const std::size_t width = std::to_string(count).size();
  return prefix + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}
inline std::string department_name(int d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "D%02d", d + 1);
  return buf;
}
}  // namespace detail

inline BipartiteNetwork generate_synthetic_campus(const SyntheticCampusOptions& opt) {
  if (!(opt.scale > 0.0 && opt.scale <= 1.0)) throw ContractViolation("scale must be in (0, 1]");
  if (opt.departments < 1 || opt.levels < 1) throw ContractViolation("need departments and levels");
  if (opt.meetings_per_week < 0 || opt.meetings_per_week > opt.teaching_days ||
      opt.teaching_days > kDaysPerWeek)
    throw ContractViolation("meetings per week exceed teaching days");

  Rng rng = make_stream(opt.seed, {stream::kNetwork});
  const auto n_students = static_cast<std::size_t>(std::llround(kFullScaleStudents * opt.scale));
  const auto n_classes =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(kFullScaleClasses * opt.scale)));

  std::uniform_int_distribution<int> dept(0, opt.departments - 1);
  std::uniform_int_distribution<int> level(1, opt.levels);

  std::vector<Person> students(n_students);
  for (std::size_t i = 0; i < n_students; ++i) {
    students[i].id = detail::padded_id('S', i, n_students);
    students[i].role = Role::student;
    students[i].department = detail::department_name(dept(rng));
    students[i].academic_level = level(rng);
  }

  const double mean_degree = 0.5 * (opt.campus.min_degree + opt.campus.max_degree);
  const double required =
      std::ceil(mean_degree * static_cast<double>(n_students) * (1.0 + opt.capacity_slack));
  const double mean_capacity = required / static_cast<double>(n_classes);
  const double mu = std::log(mean_capacity) - 0.5 * opt.capacity_sigma * opt.capacity_sigma;
  std::lognormal_distribution<double> capacity(mu, opt.capacity_sigma);

  std::vector<int> days(static_cast<std::size_t>(opt.teaching_days));
  std::iota(days.begin(), days.end(), 0);
  std::vector<ClassSection> classes(n_classes);
  long long total = 0;
  for (std::size_t i = 0; i < n_classes; ++i) {
    auto& c = classes[i];
    c.id = detail::padded_id('C', i, n_classes);
    c.department = detail::department_name(dept(rng));
    c.difficulty = level(rng);
    c.capacity = std::max(opt.min_capacity, static_cast<int>(std::lround(capacity(rng))));
    total += c.capacity;
    std::shuffle(days.begin(), days.end(), rng);
    std::vector<int> chosen(days.begin(), days.begin() + opt.meetings_per_week);
    std::sort(chosen.begin(), chosen.end());
    for (int d : chosen) c.meetings.push_back({d, opt.meeting_hours});
  }
  // Seats must cover the largest possible demand.
  const long long worst = static_cast<long long>(opt.campus.max_degree) * static_cast<long long>(n_students);
  const long long floor_total = std::min(worst, static_cast<long long>(required));
  std::uniform_int_distribution<std::size_t> any_class(0, n_classes - 1);
  while (total < floor_total) {
    ++classes[any_class(rng)].capacity;
    ++total;
  }

  std::vector<Person> instructors(n_classes);
  for (std::size_t i = 0; i < n_classes; ++i) {
    instructors[i].id = detail::padded_id('I', i, n_classes);
    instructors[i].role = Role::instructor;
  }
  auto campus = generate_campus(std::move(students), std::move(instructors), std::move(classes),
                                rng, opt.campus);
  // Instructors belong to the department of the class they teach.
  auto& people = campus.network.mutable_people();
  for (PersonIndex p = 0; p < people.size(); ++p)
    if (people[p].role == Role::instructor)
      for (ClassIndex c : campus.network.classes_of(p))
        people[p].department = campus.network.classes()[c].department;
  return std::move(campus.network);
}

/// Share of enrolled seats in classes with more than `cap` students.
inline double seat_share_above(const BipartiteNetwork& net, int cap) {
  long long above = 0, total = 0;
  for (ClassIndex c = 0; c < net.classes().size(); ++c) {
    const int n = net.enrolled_students(c);
    total += n;
    if (n > cap) above += n;
  }
  return total ? static_cast<double>(above) / static_cast<double>(total) : 0.0;
}

}  // namespace campussim
