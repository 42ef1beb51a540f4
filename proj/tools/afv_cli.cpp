// Operator harness: synthetic allocation sweeps, scenario uptime studies,
// release validation, and wire-format utilities.
//
// Exit codes: 0 success, 1 run failure (criteria or simulation), 2 bad
// configuration (flags, files, schemas).

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "afv/afv.hpp"

#ifndef AFV_DATA_DIR
#define AFV_DATA_DIR "data"
#endif
#ifndef AFV_SCENARIO_DIR
#define AFV_SCENARIO_DIR "scenarios"
#endif
#ifndef AFV_TEST_DATA_DIR
#define AFV_TEST_DATA_DIR "tests/data"
#endif

namespace {

namespace fs = std::filesystem;

std::string default_catalog() {
  if (const char* env = std::getenv("AFV_CATALOG")) return env;
  return AFV_DATA_DIR "/energy_catalog.json";
}

// --out accepts either a .csv file path or a directory to drop the default
// file name into.
std::ofstream open_csv(const std::string& out, const std::string& default_name) {
  fs::path p(out);
  if (p.extension() != ".csv") {
    fs::create_directories(p);
    p /= default_name;
  } else if (p.has_parent_path()) {
    fs::create_directories(p.parent_path());
  }
  std::ofstream f(p);
  if (!f) throw afv::ParseError("cannot write " + p.string());
  std::fprintf(stderr, "wrote %s\n", p.string().c_str());
  return f;
}

std::string read_all(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double uptime_h(const afv::DeviceOutcome& d) { return d.uptime_s / 3600.0; }

double system_uptime_h(const afv::SimResult& r) {
  double t = std::numeric_limits<double>::infinity();
  for (const afv::DeviceOutcome& d : r.devices) t = std::min(t, d.uptime_s);
  return r.devices.empty() ? 0.0 : t / 3600.0;
}

int run_uptime(const std::string& catalog_path, const std::string& scenario_path,
               const std::vector<std::string>& baseline_paths, const std::string& out_dir,
               bool with_traces) {
  afv::EnergyCatalog catalog = afv::load_energy_catalog(catalog_path);
  afv::Scenario scenario = afv::load_scenario(scenario_path);
  afv::SimResult main_run = afv::simulate(scenario, catalog);

  nlohmann::json summary;
  summary["scenario"] = main_run.scenario_name;
  summary["system_uptime_h"] = system_uptime_h(main_run);
  for (const afv::DeviceOutcome& d : main_run.devices) {
    summary["devices"].push_back({{"device_id", d.device_id}, {"uptime_h", uptime_h(d)}});
  }
  summary["baselines"] = nlohmann::json::array();

  std::ostringstream csv;
  csv << "scenario,baseline,metric,uptime_h,baseline_uptime_h,gain_h,gain_pct\n";
  auto csv_row = [&](const std::string& baseline, const std::string& metric, double up,
                     double base) {
    double gain = up - base;
    double pct = base > 0.0 ? gain / base * 100.0 : 0.0;
    csv << main_run.scenario_name << ',' << baseline << ',' << metric << ',' << up << ',' << base
        << ',' << gain << ',' << pct << '\n';
  };

  std::vector<std::pair<std::string, afv::SimResult>> runs = {{scenario_path, main_run}};
  for (const std::string& bp : baseline_paths) {
    afv::Scenario base_scn = afv::load_scenario(bp);
    afv::SimResult base_run = afv::simulate(base_scn, catalog);

    nlohmann::json b;
    b["scenario"] = base_run.scenario_name;
    b["system_uptime_h"] = system_uptime_h(base_run);
    b["system_gain_h"] = system_uptime_h(main_run) - system_uptime_h(base_run);
    double base_sys = system_uptime_h(base_run);
    b["system_gain_pct"] =
        base_sys > 0.0 ? (system_uptime_h(main_run) - base_sys) / base_sys * 100.0 : 0.0;
    csv_row(base_run.scenario_name, "system", system_uptime_h(main_run), base_sys);
    for (const afv::DeviceOutcome& d : main_run.devices) {
      for (const afv::DeviceOutcome& bd : base_run.devices) {
        if (bd.device_id != d.device_id) continue;
        b["devices"].push_back({{"device_id", d.device_id},
                                {"uptime_h", uptime_h(d)},
                                {"baseline_uptime_h", uptime_h(bd)},
                                {"gain_h", uptime_h(d) - uptime_h(bd)}});
        csv_row(base_run.scenario_name, "device:" + std::to_string(d.device_id), uptime_h(d),
                uptime_h(bd));
      }
    }
    summary["baselines"].push_back(std::move(b));
    runs.emplace_back(bp, std::move(base_run));
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    {
      std::ofstream f(fs::path(out_dir) / "uptime_summary.json");
      f << summary.dump(2) << '\n';
    }
    {
      std::ofstream f(fs::path(out_dir) / "uptime.csv");
      f << csv.str();
    }
    for (const auto& [path, r] : runs) {
      std::ofstream f(fs::path(out_dir) / (r.scenario_name + "_result.json"));
      f << afv::result_to_json(r).dump(2) << '\n';
      if (with_traces) {
        std::ofstream t(fs::path(out_dir) / (r.scenario_name + "_trace.csv"));
        afv::write_trace_csv(r, t);
      }
    }
    std::fprintf(stderr, "wrote %s/{uptime_summary.json,uptime.csv,*_result.json%s}\n",
                 out_dir.c_str(), with_traces ? ",*_trace.csv" : "");
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int run_validate(const afv::AcceptanceOptions& opts) {
  std::vector<afv::CriterionResult> results = afv::run_acceptance(opts);
  std::printf("%-4s | %s | %-42s | %-48s | %-32s | %s\n", "ok", "#", "criterion", "reference",
              "measured", "tolerance");
  std::size_t failed = 0;
  for (const afv::CriterionResult& r : results) {
    std::printf("%-4s | %d | %-42s | %-48s | %-32s | %s\n", r.pass ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.expected.c_str(), r.measured.c_str(), r.tolerance.c_str());
    if (!r.detail.empty()) std::printf("     |   | %s\n", r.detail.c_str());
    if (!r.pass) ++failed;
  }
  std::printf("%zu criteria evaluated, %zu passed, %zu failed\n", results.size(),
              results.size() - failed, failed);
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-aware function allocation for personal-area networks"};
  app.fallthrough();  // shared flags may follow the subcommand name
  app.require_subcommand(1);

  std::string catalog_path = default_catalog();
  std::uint64_t seed = 42;
  std::string out;
  std::size_t trials = 1000;
  unsigned parallel = 1;
  app.add_option("--catalog", catalog_path, "energy catalog JSON")->capture_default_str();
  app.add_option("--seed", seed, "master RNG seed")->capture_default_str();
  app.add_option("--out", out, "output file (.csv) or directory");
  app.add_option("--trials", trials, "Monte-Carlo trials per sweep point")->capture_default_str();
  app.add_option("--parallel", parallel, "worker threads (results identical to serial)")
      ->capture_default_str();

  // sweep-ratio
  auto* sr = app.add_subcommand("sweep-ratio",
                                "cost-reduction sweep over the implementation/serving cost ratio");
  std::vector<double> ratios = {0.1, 0.5, 1.0, 2.0, 5.0, 10.0};
  sr->add_option("--ratios", ratios, "cost ratios")->delimiter(',')->capture_default_str();

  // sweep-functions
  auto* sf = app.add_subcommand("sweep-functions",
                                "cost-reduction sweep over the number of function types");
  std::vector<std::size_t> counts;
  sf->add_option("--counts", counts, "function-type counts (default 1..20)")->delimiter(',');

  // uptime
  auto* up = app.add_subcommand("uptime", "simulate a scenario and report uptime gains");
  std::string scenario_path;
  std::vector<std::string> baseline_paths;
  bool with_traces = false;
  up->add_option("--scenario", scenario_path, "scenario JSON")->required();
  up->add_option("--baseline", baseline_paths, "baseline scenario JSON (repeatable)");
  up->add_flag("--trace", with_traces, "also write per-run trace CSVs (needs --out)");

  // validate
  auto* va = app.add_subcommand("validate", "run the full release-criteria suite");
  std::string scenario_dir = AFV_SCENARIO_DIR;
  std::string fixture_dir = AFV_TEST_DATA_DIR "/protocol";
  va->add_option("--scenarios", scenario_dir, "scenario directory")->capture_default_str();
  va->add_option("--fixtures", fixture_dir, "wire-format golden fixture directory")
      ->capture_default_str();

  // encode / decode
  auto* en = app.add_subcommand("encode", "JSON message -> hex (stdin or --json)");
  std::string json_arg;
  en->add_option("--json", json_arg, "message JSON (reads stdin when omitted)");
  auto* de = app.add_subcommand("decode", "hex -> JSON message (stdin or --hex)");
  std::string hex_arg;
  de->add_option("--hex", hex_arg, "hex string (reads stdin when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // bad flags are configuration errors
  }

  try {
    if (sr->parsed() || sf->parsed()) {
      afv::SweepConfig cfg;
      cfg.n_trials = trials;
      cfg.seed = seed;
      cfg.threads = parallel;
      if (sr->parsed()) {
        std::vector<afv::SweepPoint> pts = afv::sweep_ratio(cfg, ratios);
        if (out.empty()) {
          afv::write_ratio_csv(pts, std::cout);
        } else {
          auto f = open_csv(out, "ratio_sweep.csv");
          afv::write_ratio_csv(pts, f);
        }
      } else {
        if (counts.empty()) {
          for (std::size_t t = 1; t <= 20; ++t) counts.push_back(t);
        }
        std::vector<afv::SweepPoint> pts = afv::sweep_functions(cfg, counts);
        if (out.empty()) {
          afv::write_functions_csv(pts, std::cout);
        } else {
          auto f = open_csv(out, "functions_sweep.csv");
          afv::write_functions_csv(pts, f);
        }
      }
      return 0;
    }

    if (up->parsed()) {
      if (with_traces && out.empty()) {
        throw afv::ParseError("--trace needs --out to hold the trace files");
      }
      return run_uptime(catalog_path, scenario_path, baseline_paths, out, with_traces);
    }

    if (va->parsed()) {
      afv::AcceptanceOptions opts;
      opts.catalog_path = catalog_path;
      opts.scenario_dir = scenario_dir;
      opts.protocol_fixture_dir = fixture_dir;
      opts.trials = trials;
      opts.seed = seed;
      opts.threads = parallel;
      return run_validate(opts);
    }

    if (en->parsed()) {
      std::string text = json_arg.empty() ? read_all(std::cin) : json_arg;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(text);
      } catch (const nlohmann::json::exception& e) {
        throw afv::ParseError(std::string("bad message JSON: ") + e.what());
      }
      afv::WireMessage m = afv::message_from_json(j);
      std::cout << afv::to_hex(afv::encode(m)) << '\n';
      return 0;
    }

    if (de->parsed()) {
      std::string text = hex_arg.empty() ? read_all(std::cin) : hex_arg;
      std::string hex;
      for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) hex.push_back(c);
      }
      afv::WireMessage m = afv::decode(afv::from_hex(hex));
      std::cout << afv::message_to_json(m).dump(2) << '\n';
      return 0;
    }
  } catch (const afv::ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const afv::UnknownReference& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
