#pragma once

// Local scenario service over HTTP. Every response body is JSON.
//
//   GET  /health
//   GET  /presets                         preset names, labels and policies
//   POST /scenarios                       INI text, or JSON {"preset"?, "config"?}
//                                         -> 201 {"id", "createdAt", "config"}
//   GET  /scenarios/{id}
//   POST /scenarios/{id}/runs             {"runs", "seed"} -> 202 {"runId", ...}
//   POST /scenarios/{id}/compare          {"runs", "seed", "presets"?} -> 202
//   GET  /runs/{runId}                    {"runId", "scenarioId", "kind", "state",
//                                          "completedRuns", "totalRuns", "error"?}
//   GET  /runs/{runId}/result             ensemble or comparison document
//
// Run ids hash (kind, scenario id, seed, runs[, presets]); a finished result
// is stored under that id and returned again instead of recomputed. Starting
// a run that is already queued or running answers 409.

#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "campussim/config.hpp"
#include "campussim/policy.hpp"
#include "campussim/results_io.hpp"
#include "campussim/scenario.hpp"

namespace campussim {

using nlohmann::json;

inline constexpr const char* kComparisonSchema = "campussim-comparison/1";

/// Config as nested JSON: {"section": {"key": value}}. Booleans and numbers
/// are typed; everything else stays text.
inline json config_to_json(const ScenarioConfig& cfg) {
  json out = json::object();
  for (const auto& f : detail::config_fields()) {
    const std::string text = f.get(cfg);
    json& slot = out[f.section][f.key];
    if (text == "true" || text == "false") {
      slot = text == "true";
    } else if (text == "inf") {
      slot = nullptr;
    } else if (std::string_view(f.key) == "enrollment_file" || text.empty()) {
      slot = text;
    } else {
      double d{};
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), d);
      if (ec != std::errc{} || ptr != text.data() + text.size()) {
        slot = text;
      } else if (std::uint64_t u{}; text.find_first_of(".eE-") == std::string::npos &&
                                    std::from_chars(text.data(), text.data() + text.size(), u).ec ==
                                        std::errc{}) {
        slot = u;
      } else {
        slot = d;
      }
    }
  }
  return out;
}

/// Applies nested JSON values through the same setters and validator as the
/// INI path. Unknown sections or keys are ConfigErrors.
inline void apply_config_json(ScenarioConfig& cfg, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be an object", 0);
  for (const auto& [section, keys] : j.items()) {
    if (!keys.is_object())
      throw ConfigError("section '" + section + "' must be an object", 0, section);
    for (const auto& [key, v] : keys.items()) {
      std::string text;
      if (v.is_string()) text = v.get<std::string>();
      else if (v.is_boolean()) text = v.get<bool>() ? "true" : "false";
      else if (v.is_number_unsigned()) text = std::to_string(v.get<std::uint64_t>());
      else if (v.is_number_integer()) text = std::to_string(v.get<std::int64_t>());
      else if (v.is_number_float()) text = format_double(v.get<double>());
      else if (v.is_null()) text = "inf";
      else throw ConfigError(section + "." + key + ": unsupported value", 0, section + "." + key);
      set_config_value(cfg, section, key, text);
    }
  }
}

inline json policy_to_json(const PolicyConfig& p) {
  ScenarioConfig c;
  c.policy = p;
  const json full = config_to_json(c);
  return {{"policy", full.at("policy")}, {"testing", full.at("testing")}};
}

inline json presets_json(int horizon = 84) {
  auto list = [](const std::vector<ScenarioPreset>& presets) {
    json a = json::array();
    for (const auto& p : presets)
      a.push_back({{"name", p.name}, {"label", p.label}, {"config", policy_to_json(p.policy)}});
    return a;
  };
  return {{"sunrise", list(sunrise_presets(horizon))}, {"experiments", list(experiment_presets())}};
}

inline json comparison_document(const ComparisonTable& t, const EnsembleMetadata& meta) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    EnsembleMetadata m = meta;
    m.label = r.label;
    rows.push_back({{"name", r.name},
                    {"label", r.label},
                    {"mean", r.mean},
                    {"ci", r.ci},
                    {"ensemble", to_json(EnsembleExport{m, r.ensemble})}});
  }
  return {{"schema", kComparisonSchema},
          {"metadata",
           {{"scenario_id", meta.scenario_id},
            {"seed", meta.seed},
            {"runs", meta.runs},
            {"horizon", meta.horizon}}},
          {"week_days", t.week_days},
          {"rows", rows}};
}

enum class RunState { queued, running, done, failed };

inline const char* to_string(RunState s) {
  switch (s) {
    case RunState::queued: return "queued";
    case RunState::running: return "running";
    case RunState::done: return "done";
    case RunState::failed: return "failed";
  }
  return "failed";
}

struct ServiceOptions {
  std::filesystem::path data_dir = "campussim-data";
  int parallelism = 1;
};

/// Data directory from CAMPUSSIM_DATA_DIR, else `fallback`.
inline std::filesystem::path data_dir_from_env(std::filesystem::path fallback = "campussim-data") {
  if (const char* env = std::getenv("CAMPUSSIM_DATA_DIR"); env && *env) return env;
  return fallback;
}

class ScenarioService {
 public:
  struct Reply {
    int status = 200;
    json body;
  };

  explicit ScenarioService(ServiceOptions opt) : opt_(std::move(opt)) {
    std::filesystem::create_directories(opt_.data_dir / "scenarios");
    std::filesystem::create_directories(opt_.data_dir / "results");
    worker_ = std::jthread([this](std::stop_token st) { work(st); });
  }

  ~ScenarioService() {
    worker_.request_stop();
    cv_.notify_all();
  }

  ScenarioService(const ScenarioService&) = delete;
  ScenarioService& operator=(const ScenarioService&) = delete;

  Reply create_scenario(const std::string& body, const std::string& content_type) {
    ScenarioConfig cfg;
    try {
      if (content_type.find("json") != std::string::npos) {
        const json j = json::parse(body);
        if (j.contains("preset")) {
          const auto name = j.at("preset").get<std::string>();
          auto preset = find_preset(name);
          if (!preset) return error(400, "unknown preset '" + name + "'");
          apply_preset(cfg, *preset);
        }
        if (j.contains("config")) apply_config_json(cfg, j.at("config"));
        validate_config(cfg);
      } else {
        cfg = parse_config(std::string_view(body));
      }
    } catch (const ConfigError& e) {
      return {400, {{"error", e.what()}, {"key", e.key}, {"line", e.line}}};
    } catch (const json::exception& e) {
      return error(400, std::string("invalid JSON: ") + e.what());
    }
    const std::string id = scenario_id(cfg);
    const auto path = scenario_path(id);
    json doc;
    std::lock_guard lock(mutex_);
    if (std::filesystem::exists(path)) {
      doc = read_json(path);
    } else {
      doc = {{"id", id}, {"createdAt", now_iso()}, {"config", config_to_json(cfg)},
             {"ini", to_ini(cfg)}};
      write_atomic(path, doc.dump(2));
    }
    doc.erase("ini");
    return {201, doc};
  }

  Reply get_scenario(const std::string& id) {
    std::lock_guard lock(mutex_);
    if (!valid_id(id) || !std::filesystem::exists(scenario_path(id)))
      return error(404, "unknown scenario");
    json doc = read_json(scenario_path(id));
    doc.erase("ini");
    return {200, doc};
  }

  Reply start_run(const std::string& id, const std::string& body) {
    return start(id, body, false);
  }
  Reply start_compare(const std::string& id, const std::string& body) {
    return start(id, body, true);
  }

  Reply status(const std::string& run_id) {
    std::lock_guard lock(mutex_);
    if (auto it = jobs_.find(run_id); it != jobs_.end()) return {200, status_json(*it->second)};
    if (valid_id(run_id) && std::filesystem::exists(result_path(run_id))) {
      const json r = read_json(result_path(run_id));
      const int total = r.value("totalRuns", 0);
      return {200,
              {{"runId", run_id},
               {"scenarioId", r.at("metadata").at("scenario_id")},
               {"kind", r.at("schema") == kComparisonSchema ? "compare" : "run"},
               {"state", "done"},
               {"completedRuns", total},
               {"totalRuns", total}}};
    }
    return error(404, "unknown run");
  }

  Reply result(const std::string& run_id) {
    std::lock_guard lock(mutex_);
    if (valid_id(run_id) && std::filesystem::exists(result_path(run_id))) {
      json r = read_json(result_path(run_id));
      r.erase("totalRuns");
      return {200, r};
    }
    if (auto it = jobs_.find(run_id); it != jobs_.end())
      return {409, {{"error", "run not finished"}, {"state", to_string(it->second->state)}}};
    return error(404, "unknown run");
  }

  /// Registers every route on `server`.
  void mount(httplib::Server& server) {
    auto send = [](httplib::Response& res, const Reply& r) {
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    server.Get("/health", [send](const httplib::Request&, httplib::Response& res) {
      send(res, {200, {{"status", "ok"}}});
    });
    server.Get("/presets", [send](const httplib::Request&, httplib::Response& res) {
      send(res, {200, presets_json()});
    });
    server.Post("/scenarios", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, create_scenario(req.body, req.get_header_value("Content-Type")));
    });
    server.Get(R"(/scenarios/([0-9a-f]+))",
               [this, send](const httplib::Request& req, httplib::Response& res) {
                 send(res, get_scenario(req.matches[1]));
               });
    server.Post(R"(/scenarios/([0-9a-f]+)/runs)",
                [this, send](const httplib::Request& req, httplib::Response& res) {
                  send(res, start_run(req.matches[1], req.body));
                });
    server.Post(R"(/scenarios/([0-9a-f]+)/compare)",
                [this, send](const httplib::Request& req, httplib::Response& res) {
                  send(res, start_compare(req.matches[1], req.body));
                });
    server.Get(R"(/runs/([0-9a-f]+))",
               [this, send](const httplib::Request& req, httplib::Response& res) {
                 send(res, status(req.matches[1]));
               });
    server.Get(R"(/runs/([0-9a-f]+)/result)",
               [this, send](const httplib::Request& req, httplib::Response& res) {
                 send(res, result(req.matches[1]));
               });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty())
        res.set_content(json{{"error", httplib::status_message(res.status)}}.dump(),
                        "application/json");
    });
    server.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          std::string what = "internal error";
          try {
            std::rethrow_exception(ep);
          } catch (const std::exception& e) {
            what = e.what();
          } catch (...) {
          }
          res.status = 500;
          res.set_content(json{{"error", what}}.dump(), "application/json");
        });
  }

  const ServiceOptions& options() const { return opt_; }

 private:
  struct Job {
    std::string run_id;
    std::string scenario_id;
    bool compare = false;
    std::vector<std::string> presets;
    int runs = 0;
    std::uint64_t seed = 0;
    RunState state = RunState::queued;
    int completed = 0;
    int total = 0;
    std::string error;
  };

  static Reply error(int status, const std::string& what) { return {status, {{"error", what}}}; }

  static bool valid_id(const std::string& id) {
    return !id.empty() && id.size() <= 64 &&
           id.find_first_not_of("0123456789abcdef") == std::string::npos;
  }

  std::filesystem::path scenario_path(const std::string& id) const {
    return opt_.data_dir / "scenarios" / (id + ".json");
  }
  std::filesystem::path result_path(const std::string& run_id) const {
    return opt_.data_dir / "results" / (run_id + ".json");
  }

  static json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    return json::parse(in);
  }

  static void write_atomic(const std::filesystem::path& p, const std::string& text) {
    auto tmp = p;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out << text;
      if (!out) throw Error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, p);
  }

  static std::string now_iso() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  json status_json(const Job& j) const {
    json s = {{"runId", j.run_id},          {"scenarioId", j.scenario_id},
              {"kind", j.compare ? "compare" : "run"},
              {"state", to_string(j.state)}, {"completedRuns", j.completed},
              {"totalRuns", j.total}};
    if (!j.error.empty()) s["error"] = j.error;
    return s;
  }

  Reply start(const std::string& id, const std::string& body, bool compare) {
    int runs = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> presets;
    try {
      const json j = body.empty() ? json::object() : json::parse(body);
      runs = j.value("runs", 0);
      seed = j.value("seed", std::uint64_t{0});
      if (compare) {
        presets = j.value("presets", std::vector<std::string>{"sunrise-all"});
        if (presets == std::vector<std::string>{"sunrise-all"}) {
          presets.clear();
          for (const auto& p : sunrise_presets()) presets.push_back(p.name);
        }
        for (const auto& p : presets)
          if (!find_preset(p)) return error(400, "unknown preset '" + p + "'");
        if (presets.empty()) return error(400, "no presets given");
      }
    } catch (const json::exception& e) {
      return error(400, std::string("invalid JSON: ") + e.what());
    }

    std::lock_guard lock(mutex_);
    if (!valid_id(id) || !std::filesystem::exists(scenario_path(id)))
      return error(404, "unknown scenario");
    if (runs == 0) runs = parse_config(read_json(scenario_path(id)).at("ini").get<std::string>()).engine.runs;
    if (runs < 1) return error(400, "runs must be at least 1");

    std::string key = std::string(compare ? "compare" : "run") + "\n" + id + "\n" +
                      std::to_string(seed) + "\n" + std::to_string(runs);
    for (const auto& p : presets) key += "\n" + p;
    const std::string run_id = sha256_hex(key);

    if (auto it = jobs_.find(run_id); it != jobs_.end()) {
      const Job& job = *it->second;
      if (job.state == RunState::queued || job.state == RunState::running)
        return {409, status_json(job)};
      if (job.state == RunState::done) return {200, status_json(job)};
      // failed: allow a retry below
    } else if (std::filesystem::exists(result_path(run_id))) {
      json s = {{"runId", run_id}, {"scenarioId", id}, {"kind", compare ? "compare" : "run"},
                {"state", "done"}, {"completedRuns", 0}, {"totalRuns", 0}, {"cached", true}};
      const int total = read_json(result_path(run_id)).value("totalRuns", 0);
      s["completedRuns"] = s["totalRuns"] = total;
      return {200, s};
    }
    auto job = std::make_shared<Job>();
    job->run_id = run_id;
    job->scenario_id = id;
    job->compare = compare;
    job->presets = presets;
    job->runs = runs;
    job->seed = seed;
    job->total = runs * static_cast<int>(compare ? presets.size() : 1);
    jobs_[run_id] = job;
    queue_.push_back(job);
    cv_.notify_all();
    return {202, status_json(*job)};
  }

  void work(std::stop_token st) {
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, st, [&] { return !queue_.empty(); });
        if (st.stop_requested()) return;
        job = queue_.front();
        queue_.pop_front();
        job->state = RunState::running;
        job->completed = 0;
        job->error.clear();
      }
      try {
        execute(*job);
        std::lock_guard lock(mutex_);
        job->completed = job->total;
        job->state = RunState::done;
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex_);
        job->state = RunState::failed;
        job->error = e.what();
      }
    }
  }

  std::shared_ptr<const Campus> campus_for(const std::string& id, const ScenarioConfig& cfg) {
    {
      std::lock_guard lock(mutex_);
      if (auto it = campuses_.find(id); it != campuses_.end()) return it->second;
    }
    auto campus = std::make_shared<const Campus>(build_campus(cfg));
    std::lock_guard lock(mutex_);
    return campuses_.emplace(id, std::move(campus)).first->second;
  }

  void execute(Job& job) {
    std::string ini;
    {
      std::lock_guard lock(mutex_);
      ini = read_json(scenario_path(job.scenario_id)).at("ini").get<std::string>();
    }
    const ScenarioConfig cfg = parse_config(std::string_view(ini));
    const auto campus = campus_for(job.scenario_id, cfg);
    auto progress = [this, &job](int done, int) {
      std::lock_guard lock(mutex_);
      job.completed = std::max(job.completed, done);
    };
    const EnsembleMetadata meta{job.scenario_id, job.seed, job.runs, cfg.model.horizon, {}};
    json doc;
    if (job.compare) {
      std::vector<ScenarioPreset> presets;
      for (const auto& name : job.presets) presets.push_back(*find_preset(name, cfg.model.horizon));
      const auto table =
          compare_scenarios(presets, campus->network, campus->events, cfg.model, job.runs,
                            job.seed, opt_.parallelism, cfg.engine.common_random_numbers, progress);
      doc = comparison_document(table, meta);
    } else {
      const auto e = run_scenario(cfg, *campus, job.runs, job.seed, opt_.parallelism, progress);
      doc = to_json(EnsembleExport{meta, e});
    }
    doc["totalRuns"] = job.total;
    std::lock_guard lock(mutex_);
    write_atomic(result_path(job.run_id), doc.dump());
  }

  ServiceOptions opt_;
  std::mutex mutex_;
  std::condition_variable_any cv_;
  std::deque<std::shared_ptr<Job>> queue_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::map<std::string, std::shared_ptr<const Campus>> campuses_;
  std::jthread worker_;
};

}  // namespace campussim
