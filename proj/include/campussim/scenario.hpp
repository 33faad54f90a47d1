#pragma once

// From a parsed scenario config to a campus and ensemble results.

#include <fstream>
#include <string>
#include <vector>

#include "campussim/config.hpp"
#include "campussim/engine.hpp"
#include "campussim/enrollment.hpp"
#include "campussim/synthetic.hpp"

namespace campussim {

/// Base network (no modality cap applied) and the visit schedule shared by
/// every replication and preset of a scenario.
struct Campus {
  BipartiteNetwork network;
  EventSequence events;
  std::vector<std::string> warnings;
};

inline Campus build_campus(const NetworkConfig& cfg, int horizon) {
  Campus campus;
  if (cfg.source == NetworkSource::file) {
    std::ifstream in(cfg.enrollment_file);
    if (!in) throw ConfigError("cannot open enrollment file '" + cfg.enrollment_file + "'", 0,
                               "network.enrollment_file");
    auto data = load_enrollment(in);
    campus.network = std::move(data.network);
    campus.warnings = std::move(data.warnings);
  } else {
    campus.network = generate_synthetic_campus(cfg.synthetic);
  }
  Rng rng = make_stream(cfg.synthetic.seed, {stream::kAttendance});
  campus.events = sample_event_sequence(campus.network, cfg.attendance, horizon, rng);
  return campus;
}

inline Campus build_campus(const ScenarioConfig& cfg) {
  return build_campus(cfg.network, cfg.model.horizon);
}

inline EnsembleResult run_scenario(const ScenarioConfig& cfg, const Campus& campus, int runs,
                                   std::uint64_t seed, int parallelism,
                                   const ProgressCallback& progress = {}) {
  return run_ensemble(campus.network, campus.events, cfg.policy, cfg.model, runs, seed,
                      parallelism, progress);
}

}  // namespace campussim
