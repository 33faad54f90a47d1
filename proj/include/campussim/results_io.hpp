#pragma once

// Ensemble export. JSON document (schema "campussim-ensemble/1"):
//
//   {
//     "schema": "campussim-ensemble/1",
//     "metadata": {"scenario_id": "...", "seed": 7, "runs": 100, "horizon": 84,
//                  "label": "..."},
//     "series": {"day": [1, ...], "mean_campus": [...], "ci_campus": [...],
//                "mean_all": [...], "ci_all": [...]},
//     "runs": {"final_campus": [...], "final_all": [...]}
//   }
//
// CSV: `<stem>_days.csv` (day,mean_campus,ci_campus,mean_all,ci_all) and
// `<stem>_runs.csv` (run,final_campus,final_all). Days are 1-based.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "campussim/engine.hpp"
#include "campussim/error.hpp"
#include "campussim/text.hpp"

namespace campussim {

inline constexpr const char* kEnsembleSchema = "campussim-ensemble/1";

struct EnsembleMetadata {
  std::string scenario_id;
  std::uint64_t seed = 0;
  int runs = 0;
  int horizon = 0;
  std::string label;

  friend bool operator==(const EnsembleMetadata&, const EnsembleMetadata&) = default;
};

struct EnsembleExport {
  EnsembleMetadata metadata;
  EnsembleResult result;

  friend bool operator==(const EnsembleExport&, const EnsembleExport&) = default;
};

inline nlohmann::json to_json(const EnsembleExport& e) {
  const auto& r = e.result;
  std::vector<int> days(r.mean_campus.size());
  for (std::size_t d = 0; d < days.size(); ++d) days[d] = static_cast<int>(d) + 1;
  return {
      {"schema", kEnsembleSchema},
      {"metadata",
       {{"scenario_id", e.metadata.scenario_id},
        {"seed", e.metadata.seed},
        {"runs", e.metadata.runs},
        {"horizon", e.metadata.horizon},
        {"label", e.metadata.label}}},
      {"series",
       {{"day", days},
        {"mean_campus", r.mean_campus},
        {"ci_campus", r.ci_campus},
        {"mean_all", r.mean_all},
        {"ci_all", r.ci_all}}},
      {"runs", {{"final_campus", r.final_campus}, {"final_all", r.final_all}}},
  };
}

inline EnsembleExport ensemble_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kEnsembleSchema)
      throw ParseError("unsupported schema '" + j.at("schema").get<std::string>() + "'", 0);
    EnsembleExport e;
    const auto& m = j.at("metadata");
    e.metadata.scenario_id = m.at("scenario_id").get<std::string>();
    e.metadata.seed = m.at("seed").get<std::uint64_t>();
    e.metadata.runs = m.at("runs").get<int>();
    e.metadata.horizon = m.at("horizon").get<int>();
    e.metadata.label = m.value("label", "");
    const auto& s = j.at("series");
    e.result.mean_campus = s.at("mean_campus").get<std::vector<double>>();
    e.result.ci_campus = s.at("ci_campus").get<std::vector<double>>();
    e.result.mean_all = s.at("mean_all").get<std::vector<double>>();
    e.result.ci_all = s.at("ci_all").get<std::vector<double>>();
    e.result.final_campus = j.at("runs").at("final_campus").get<std::vector<int>>();
    e.result.final_all = j.at("runs").at("final_all").get<std::vector<int>>();
    e.result.run_count = static_cast<int>(e.result.final_campus.size());
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("malformed ensemble document: ") + ex.what(), 0);
  }
}

inline void write_days_csv(std::ostream& os, const EnsembleResult& r) {
  os << "day,mean_campus,ci_campus,mean_all,ci_all\n";
  for (std::size_t d = 0; d < r.mean_campus.size(); ++d)
    os << d + 1 << ',' << format_double(r.mean_campus[d]) << ',' << format_double(r.ci_campus[d])
       << ',' << format_double(r.mean_all[d]) << ',' << format_double(r.ci_all[d]) << '\n';
}

inline void write_runs_csv(std::ostream& os, const EnsembleResult& r) {
  os << "run,final_campus,final_all\n";
  for (std::size_t i = 0; i < r.final_campus.size(); ++i)
    os << i << ',' << r.final_campus[i] << ',' << r.final_all[i] << '\n';
}

/// Per-run daily series: run,day,cumulative_campus,cumulative_all.
inline void write_run_series_csv(std::ostream& os, const std::vector<SimulationResult>& runs) {
  os << "run,day,cumulative_campus,cumulative_all\n";
  for (std::size_t i = 0; i < runs.size(); ++i)
    for (std::size_t d = 0; d < runs[i].cumulative_campus.size(); ++d)
      os << i << ',' << d + 1 << ',' << runs[i].cumulative_campus[d] << ','
         << runs[i].cumulative_all[d] << '\n';
}

namespace detail {
inline std::vector<std::vector<std::string_view>> read_csv_rows(std::string_view text,
                                                                std::string_view header,
                                                                std::size_t columns) {
  std::vector<std::vector<std::string_view>> rows;
  int line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != header) throw ParseError("expected header '" + std::string(header) + "'", line_no);
      header_seen = true;
      continue;
    }
    auto f = split(line, ',');
    if (f.size() != columns) throw ParseError("expected " + std::to_string(columns) + " fields", line_no);
    rows.push_back(std::move(f));
  }
  return rows;
}
}  // namespace detail

/// Inverse of write_days_csv + write_runs_csv.
inline EnsembleResult read_ensemble_csv(std::string_view days_csv, std::string_view runs_csv) {
  EnsembleResult r;
  int line = 1;
  for (const auto& f :
       detail::read_csv_rows(days_csv, "day,mean_campus,ci_campus,mean_all,ci_all", 5)) {
    ++line;
    r.mean_campus.push_back(detail::parse_number<double>(f[1], "mean", line));
    r.ci_campus.push_back(detail::parse_number<double>(f[2], "ci", line));
    r.mean_all.push_back(detail::parse_number<double>(f[3], "mean", line));
    r.ci_all.push_back(detail::parse_number<double>(f[4], "ci", line));
  }
  line = 1;
  for (const auto& f : detail::read_csv_rows(runs_csv, "run,final_campus,final_all", 3)) {
    ++line;
    r.final_campus.push_back(detail::parse_number<int>(f[1], "final count", line));
    r.final_all.push_back(detail::parse_number<int>(f[2], "final count", line));
  }
  r.run_count = static_cast<int>(r.final_campus.size());
  return r;
}

inline nlohmann::json to_json(const ComparisonTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"name", r.name}, {"label", r.label}, {"mean", r.mean}, {"ci", r.ci}});
  return {{"week_days", t.week_days}, {"rows", rows}};
}

/// Fixed-width table: one row per preset, one column per week-end day.
inline void print_comparison(std::ostream& os, const ComparisonTable& t) {
  std::size_t width = 8;
  for (const auto& r : t.rows) width = std::max(width, r.label.size());
  os << std::left << std::setw(static_cast<int>(width)) << "Scenario" << std::right;
  for (int d : t.week_days) os << std::setw(11) << ("day " + std::to_string(d));
  os << '\n';
  const auto flags = os.flags();
  for (const auto& r : t.rows) {
    os << std::left << std::setw(static_cast<int>(width)) << r.label << std::right << std::fixed
       << std::setprecision(2);
    for (double m : r.mean) os << std::setw(11) << m;
    os << '\n';
  }
  os.flags(flags);
}

/// Writes `<stem>.json`, `<stem>_days.csv` and `<stem>_runs.csv` in `dir`.
inline void write_ensemble_files(const std::filesystem::path& dir, const std::string& stem,
                                 const EnsembleExport& e) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name);
    if (!f) throw Error("cannot write " + (dir / name).string());
    return f;
  };
  open(stem + ".json") << to_json(e).dump(2) << '\n';
  auto days = open(stem + "_days.csv");
  write_days_csv(days, e.result);
  auto runs = open(stem + "_runs.csv");
  write_runs_csv(runs, e.result);
}

}  // namespace campussim
