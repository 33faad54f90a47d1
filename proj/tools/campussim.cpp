// campussim command-line front end.
//
// Exit codes: 0 success, 1 other failure, 2 invalid scenario or input file,
// 3 infeasible network.

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "campussim/config.hpp"
#include "campussim/enrollment.hpp"
#include "campussim/results_io.hpp"
#include "campussim/scenario.hpp"
#include "campussim/service.hpp"
#include "campussim/synthetic.hpp"

namespace cs = campussim;
namespace fs = std::filesystem;

namespace {

struct RunArgs {
  std::string scenario;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallel;
  std::string out = "results";
  std::string preset;
  std::string campus;
  std::string enrollment;
  std::string test_log;
  bool quiet = false;
};

cs::ScenarioConfig load_scenario(const RunArgs& a) {
  cs::ScenarioConfig cfg = a.scenario.empty() ? cs::ScenarioConfig{} : cs::load_config(a.scenario);
  if (!a.campus.empty()) cs::set_config_value(cfg, "network", "source", a.campus);
  if (!a.enrollment.empty()) cfg.network.enrollment_file = a.enrollment;
  if (a.runs) cfg.engine.runs = *a.runs;
  if (a.seed) cfg.engine.seed = *a.seed;
  if (a.parallel) cfg.engine.parallel = *a.parallel;
  if (!a.preset.empty() && a.preset != "sunrise-all") {
    auto preset = cs::find_preset(a.preset, cfg.model.horizon);
    if (!preset) throw cs::ConfigError("unknown preset '" + a.preset + "'", 0, "--preset");
    cs::apply_preset(cfg, *preset);
  }
  cs::validate_config(cfg);
  return cfg;
}

cs::ProgressCallback progress_printer(bool quiet) {
  if (quiet) return {};
  return [](int done, int total) {
    if (done == total || done % std::max(1, total / 20) == 0)
      std::cerr << "\r" << done << "/" << total << " runs" << (done == total ? "\n" : "")
                << std::flush;
  };
}

int cmd_run(const RunArgs& a) {
  const cs::ScenarioConfig cfg = load_scenario(a);
  const cs::Campus campus = cs::build_campus(cfg);
  for (const auto& w : campus.warnings) std::cerr << "warning: " << w << '\n';
  const std::string id = cs::scenario_id(cfg);
  const fs::path out = a.out;
  const auto progress = progress_printer(a.quiet);
  cs::EnsembleMetadata meta{id, cfg.engine.seed, cfg.engine.runs, cfg.model.horizon, {}};

  if (a.preset == "sunrise-all") {
    const auto presets = cs::sunrise_presets(cfg.model.horizon);
    const auto table = cs::compare_scenarios(presets, campus.network, campus.events, cfg.model,
                                             cfg.engine.runs, cfg.engine.seed, cfg.engine.parallel,
                                             cfg.engine.common_random_numbers, progress);
    fs::create_directories(out);
    for (const auto& row : table.rows) {
      meta.label = row.label;
      cs::write_ensemble_files(out, row.name, {meta, row.ensemble});
    }
    meta.label.clear();
    std::ofstream(out / "comparison.json") << cs::comparison_document(table, meta).dump(2) << '\n';
    cs::print_comparison(std::cout, table);
    return 0;
  }

  const cs::BipartiteNetwork net = cs::apply_modality_cap(campus.network, cfg.policy.modality_cap);
  const auto runs = cs::run_replications(net, campus.events, cfg.policy, cfg.model,
                                         cfg.engine.runs, cfg.engine.seed, cfg.engine.parallel,
                                         progress);
  const auto ensemble = cs::aggregate(runs);
  const std::string stem = a.preset.empty() ? "ensemble" : a.preset;
  meta.label = a.preset;
  cs::write_ensemble_files(out, stem, {meta, ensemble});
  {
    std::ofstream f(out / (stem + "_series.csv"));
    cs::write_run_series_csv(f, runs);
  }
  if (!a.test_log.empty()) {
    cs::RunOptions opt;
    opt.record_test_log = true;
    const auto first = cs::run_single(net, campus.events, cfg.policy, cfg.model,
                                      cs::replication_seed(cfg.engine.seed, 0), opt);
    std::ofstream f(a.test_log);
    cs::write_test_log_header(f);
    cs::write_test_log(f, first.test_log, net);
  }

  cs::ComparisonTable table;
  cs::ComparisonRow row{stem, a.preset.empty() ? "Scenario" : a.preset, {}, {}, ensemble};
  for (int d : cs::kWeekEndDays) {
    if (d > cfg.model.horizon) continue;
    table.week_days.push_back(d);
    row.mean.push_back(ensemble.mean_campus[static_cast<std::size_t>(d - 1)]);
    row.ci.push_back(ensemble.ci_campus[static_cast<std::size_t>(d - 1)]);
  }
  table.rows.push_back(std::move(row));
  cs::print_comparison(std::cout, table);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Campus class-contact epidemic simulator"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a Monte Carlo ensemble for a scenario");
  run_cmd->add_option("scenario", run.scenario, "Scenario INI file (defaults when omitted)");
  run_cmd->add_option("--runs", run.runs, "Replications");
  run_cmd->add_option("--seed", run.seed, "Base seed");
  run_cmd->add_option("--parallel", run.parallel, "Worker threads");
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--preset", run.preset, "Policy preset, or sunrise-all for the staged plan");
  run_cmd->add_option("--campus", run.campus, "synthetic or file")
      ->check(CLI::IsMember({"synthetic", "file"}));
  run_cmd->add_option("--enrollment", run.enrollment, "Enrollment file for --campus file");
  run_cmd->add_option("--test-log", run.test_log, "Write the first replication's test log here");
  run_cmd->add_flag("--quiet", run.quiet, "No progress output");

  cs::SyntheticCampusOptions gen;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("generate-campus", "Write a synthetic enrollment file");
  gen_cmd->add_option("--scale", gen.scale, "Fraction of the full-size campus")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--departments", gen.departments)->capture_default_str();
  gen_cmd->add_option("--meetings-per-week", gen.meetings_per_week)->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Output file (stdout when omitted)");

  std::string export_scenario, export_out;
  auto* export_cmd = app.add_subcommand("export-network", "Write the scenario's edge list");
  export_cmd->add_option("scenario", export_scenario, "Scenario INI file");
  export_cmd->add_option("--out", export_out, "Output file (stdout when omitted)");

  app.add_subcommand("presets", "List policy presets");
  app.add_subcommand("config", "Print the default scenario file");

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;
  int serve_parallel = 1;
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP scenario service");
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();
  serve_cmd->add_option("--data-dir", data_dir, "Results directory (default $CAMPUSSIM_DATA_DIR)");
  serve_cmd->add_option("--parallel", serve_parallel)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*gen_cmd) {
      const auto net = cs::generate_synthetic_campus(gen);
      const auto s = cs::summarize(net);
      std::cerr << s.students << " students, " << s.classes << " classes, " << s.instructors
                << " instructors, " << s.enrollments << " enrollments\n";
      if (gen_out.empty()) {
        cs::write_enrollment(std::cout, net);
      } else {
        std::ofstream f(gen_out);
        cs::write_enrollment(f, net);
      }
      return 0;
    }
    if (*export_cmd) {
      RunArgs a;
      a.scenario = export_scenario;
      const auto campus = cs::build_campus(load_scenario(a));
      if (export_out.empty()) {
        campus.network.write_edge_list(std::cout);
      } else {
        std::ofstream f(export_out);
        campus.network.write_edge_list(f);
      }
      return 0;
    }
    if (app.got_subcommand("presets")) {
      for (const auto& p : cs::sunrise_presets()) std::cout << p.name << '\t' << p.label << '\n';
      for (const auto& p : cs::experiment_presets()) std::cout << p.name << '\t' << p.label << '\n';
      std::cout << "sunrise-all\tAll six staged-plan presets\n";
      return 0;
    }
    if (app.got_subcommand("config")) {
      std::cout << cs::to_ini(cs::ScenarioConfig{});
      return 0;
    }
    if (*serve_cmd) {
      cs::ServiceOptions opt;
      opt.data_dir = data_dir.empty() ? cs::data_dir_from_env() : fs::path(data_dir);
      opt.parallelism = serve_parallel;
      cs::ScenarioService service(opt);
      httplib::Server server;
      service.mount(server);
      std::cerr << "listening on " << host << ':' << port << ", data in " << opt.data_dir << '\n';
      return server.listen(host, port) ? 0 : 1;
    }
  } catch (const cs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const cs::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const cs::InfeasibleError& e) {
    std::cerr << "infeasible network: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
