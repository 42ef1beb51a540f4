#pragma once

// Release gate: every ship criterion evaluated in one pass, reported as one
// row each.  Used by the standalone acceptance binary and `afv validate`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "afv/energy.hpp"
#include "afv/fap.hpp"
#include "afv/protocol.hpp"
#include "afv/simulator.hpp"
#include "afv/sweep.hpp"

namespace afv {

struct CriterionResult {
  int id = 0;
  std::string name;
  std::string expected;
  std::string measured;
  std::string tolerance;
  bool pass = false;
  std::string detail;  // context, mostly for failures
};

struct AcceptanceOptions {
  std::string catalog_path;
  std::string scenario_dir;
  std::string protocol_fixture_dir;
  std::size_t trials = 1000;
  std::uint64_t seed = 42;
  unsigned threads = 1;
};

namespace acceptance_detail {

inline std::string fmt(const char* f, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

inline double system_uptime_s(const SimResult& r) {
  double t = std::numeric_limits<double>::infinity();
  for (const DeviceOutcome& d : r.devices) t = std::min(t, d.uptime_s);
  return t;
}

inline double device_uptime_s(const SimResult& r, DeviceId id) {
  for (const DeviceOutcome& d : r.devices) {
    if (d.device_id == id) return d.uptime_s;
  }
  return 0.0;
}

// Same random-instance family the property tests use: 1-6 requests, 1-5
// devices, ~80% mappability with at least one feasible device per request.
inline FapInstance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> nr_d(1, 6), nd_d(1, 5);
  std::uniform_real_distribution<double> open_d(0.0, 20.0), serve_d(0.0, 10.0);
  std::bernoulli_distribution mappable_d(0.8);

  std::size_t nr = nr_d(rng), nd = nd_d(rng);
  FapInstance in;
  for (std::size_t d = 0; d < nd; ++d) {
    in.device_ids.push_back(d + 1);
    in.open_cost.push_back(open_d(rng));
  }
  for (std::size_t r = 0; r < nr; ++r) {
    in.request_ids.push_back(r);
    in.origin.push_back(rng() % 2 == 0 ? kNoDevice : rng() % nd);
  }
  in.serve_cost.resize(nr * nd);
  in.mappable.resize(nr * nd);
  for (std::size_t r = 0; r < nr; ++r) {
    bool any = false;
    for (std::size_t d = 0; d < nd; ++d) {
      in.serve_cost[r * nd + d] = serve_d(rng);
      in.mappable[r * nd + d] = mappable_d(rng) ? 1 : 0;
      any = any || in.mappable[r * nd + d];
    }
    if (!any) in.mappable[r * nd + rng() % nd] = 1;
  }
  return in;
}

inline WireMessage random_message(std::mt19937_64& rng) {
  auto byte = [&] { return static_cast<std::uint8_t>(rng() & 0xFF); };
  auto small = [&](std::size_t max) { return static_cast<std::size_t>(rng() % (max + 1)); };
  auto name = [&] {
    std::string s;
    for (std::size_t i = 0, n = small(12); i < n; ++i) {
      s.push_back(static_cast<char>('a' + rng() % 26));
    }
    return s;
  };
  switch (rng() % 5) {
    case 0: {
      InitializationMsg m;
      m.device_id = rng();
      m.device_type = static_cast<DeviceKind>(rng() % 4);
      for (std::size_t i = 0, n = small(4); i < n; ++i) {
        m.networks.push_back({name(), static_cast<float>(small(100)) / 4.0f});
      }
      for (std::size_t i = 0, n = small(5); i < n; ++i) {
        m.functions.push_back(
            {static_cast<FunctionType>(rng() % 8), static_cast<float>(small(9000)) / 8.0f});
      }
      return WireMessage(m);
    }
    case 1: {
      ContextSensorMsg m;
      m.device_id = rng();
      m.battery_percent = static_cast<std::uint8_t>(rng() % 101);
      m.charging = rng() % 2 == 0;
      m.moving = static_cast<MovingState>(rng() % 4);
      if (rng() % 2 == 0) {
        m.network = static_cast<NetworkKind>(rng() % 3);
        m.network_id = name();
        m.avg_link_speed_bps = static_cast<float>(small(1 << 24));
      }
      return WireMessage(m);
    }
    case 2: {
      ContextRequestMsg m;
      m.request_type = byte();
      for (std::size_t i = 0, n = small(40); i < n; ++i) m.info.push_back(byte());
      return WireMessage(m);
    }
    case 3: {
      AssignmentsMsg m;
      for (std::size_t i = 0, n = small(6); i < n; ++i) m.request_device.push_back({byte(), byte()});
      for (std::size_t i = 0, n = small(6); i < n; ++i) {
        m.function_device.push_back({byte(), byte()});
      }
      return WireMessage(m);
    }
    default: {
      DataMsg m;
      for (std::size_t i = 0, n = small(3); i < n; ++i) {
        DataMsg::Entry e;
        e.request_type = byte();
        for (std::size_t k = 0, len = small(60); k < len; ++k) e.data.push_back(byte());
        m.entries.push_back(std::move(e));
      }
      return WireMessage(m);
    }
  }
}

}  // namespace acceptance_detail

inline std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts) {
  namespace ad = acceptance_detail;
  EnergyCatalog catalog = load_energy_catalog(opts.catalog_path);

  std::vector<CriterionResult> out;

  // ── 1/3: greedy gap and duplication gap across cost ratios ──
  SweepConfig cfg;
  cfg.n_trials = opts.trials;
  cfg.seed = opts.seed;
  cfg.threads = opts.threads;
  const std::vector<double> ratios = {0.1, 0.5, 1.0, 2.0, 5.0, 10.0};
  auto t0 = std::chrono::steady_clock::now();
  std::vector<SweepPoint> ratio_pts = sweep_ratio(cfg, ratios);
  double ratio_elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    CriterionResult c;
    c.id = 1;
    c.name = "greedy gap across cost ratios";
    c.expected = "mean (greedy-exact)/exact <= 1% at every ratio";
    c.tolerance = "1%; runtime < 60 s";
    double worst = 0.0;
    double worst_x = ratios.front();
    for (const SweepPoint& p : ratio_pts) {
      if (p.mean_gap_vs_exact_pct() > worst) {
        worst = p.mean_gap_vs_exact_pct();
        worst_x = p.x;
      }
    }
    c.measured = ad::fmt("max gap %.4f%% (at ratio %g); %.2f s", worst, worst_x, ratio_elapsed);
    c.detail = ad::fmt("%zu trials/point, ratios 0.1..10", cfg.n_trials);
    c.pass = worst <= 1.0 && ratio_elapsed < 60.0;
    out.push_back(c);
  }

  // ── 2: greedy gap across function counts ──
  {
    CriterionResult c;
    c.id = 2;
    c.name = "greedy gap across function counts";
    c.expected = "mean gap vs exact <= 3% for 1..20 function types";
    c.tolerance = "3%";
    std::vector<std::size_t> counts;
    for (std::size_t t = 1; t <= 20; ++t) counts.push_back(t);
    std::vector<SweepPoint> pts = sweep_functions(cfg, counts);
    double worst = 0.0;
    double worst_t = 1;
    for (const SweepPoint& p : pts) {
      if (p.mean_gap_vs_exact_pct() > worst) {
        worst = p.mean_gap_vs_exact_pct();
        worst_t = p.x;
      }
    }
    c.measured = ad::fmt("max gap %.4f%% (at %g functions)", worst, worst_t);
    c.pass = worst <= 3.0;
    out.push_back(c);
  }

  // ── 3: cheap implementations make duplication as good as greedy ──
  {
    CriterionResult c;
    c.id = 3;
    c.name = "duplication optimal at cheap implementations";
    c.expected = "mean |greedy - duplicate-everywhere| / duplicate <= 1% at ratio 0.1";
    c.tolerance = "1%";
    double gap = ratio_pts.front().mean_abs_gap_vs_all_pct;
    c.measured = ad::fmt("mean gap %.4f%%", gap);
    c.pass = gap <= 1.0;
    out.push_back(c);
  }

  // ── 4: remote sensing energy bundle ──
  {
    CriterionResult c;
    c.id = 4;
    c.name = "remote sensing energy bundle";
    c.expected = "5932.6 mJ per 60 s interval";
    c.tolerance = "0.1 mJ";
    Registration reg;
    reg.registration_id = 1;
    reg.function = FunctionType::Accelerometer;
    reg.sampling_speed = SamplingSpeed::Fastest;
    reg.report_interval_s = 60.0;
    reg.payload_bytes_per_report = 70000;
    double e = function_energy_per_interval(catalog, reg, DeviceKind::Phone, false);
    c.measured = ad::fmt("%.4f mJ", e);
    c.detail = "accelerometer FASTEST, 70 kB sync, phone executor, remote requester";
    c.pass = std::abs(e - 5932.6) <= 0.1;
    out.push_back(c);
  }

  // ── 5: two-device uptime gains against single-device pinning ──
  Scenario adaptive = load_scenario(opts.scenario_dir + "/phone_watch_adaptive.json");
  Scenario watch_only = load_scenario(opts.scenario_dir + "/phone_watch_watch_only.json");
  Scenario phone_only = load_scenario(opts.scenario_dir + "/phone_watch_phone_only.json");
  {
    CriterionResult c;
    c.id = 5;
    c.name = "two-device uptime gains";
    c.expected = "watch +2.0 h vs watch-pinned; phone +0.5 h vs phone-pinned";
    c.tolerance = "±0.5 h / ±0.25 h";
    SimResult ra = simulate(adaptive, catalog);
    SimResult rw = simulate(watch_only, catalog);
    SimResult rp = simulate(phone_only, catalog);
    double watch_gain_h = (ad::device_uptime_s(ra, 2) - ad::device_uptime_s(rw, 2)) / 3600.0;
    double phone_gain_h = (ad::device_uptime_s(ra, 1) - ad::device_uptime_s(rp, 1)) / 3600.0;
    c.measured = ad::fmt("watch %+.2f h; phone %+.2f h", watch_gain_h, phone_gain_h);
    c.detail = ad::fmt(
        "uptimes h — adaptive: watch %.2f phone %.2f; watch-pinned: watch %.2f; "
        "phone-pinned: phone %.2f",
        ad::device_uptime_s(ra, 2) / 3600.0, ad::device_uptime_s(ra, 1) / 3600.0,
        ad::device_uptime_s(rw, 2) / 3600.0, ad::device_uptime_s(rp, 1) / 3600.0);
    c.pass = std::abs(watch_gain_h - 2.0) <= 0.5 && std::abs(phone_gain_h - 0.5) <= 0.25;
    out.push_back(c);
  }

  // ── 6: system-uptime improvement band over initial phone charge ──
  {
    CriterionResult c;
    c.id = 6;
    c.name = "system-uptime improvement band";
    c.expected = "30-45% vs watch-pinned and vs duplicate-everywhere, phone at 70..100%";
    c.tolerance = "band edges inclusive";
    auto with_soc = [](Scenario s, double soc) {
      for (ScenarioDevice& d : s.devices) {
        if (d.profile.device_id == 1) d.initial_soc_percent = soc;
      }
      return s;
    };
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::string rows;
    for (double soc : {70.0, 80.0, 90.0, 100.0}) {
      SimResult ra = simulate(with_soc(adaptive, soc), catalog);
      SimResult rw = simulate(with_soc(watch_only, soc), catalog);
      Scenario dup = with_soc(adaptive, soc);
      dup.strategy = AllocationStrategy::All;
      SimResult rd = simulate(dup, catalog);
      double base_w = ad::system_uptime_s(rw);
      double base_d = ad::system_uptime_s(rd);
      double up = ad::system_uptime_s(ra);
      double vs_w = base_w > 0 ? (up - base_w) / base_w * 100.0 : 0.0;
      double vs_d = base_d > 0 ? (up - base_d) / base_d * 100.0 : 0.0;
      lo = std::min({lo, vs_w, vs_d});
      hi = std::max({hi, vs_w, vs_d});
      if (!rows.empty()) rows += "; ";
      rows += ad::fmt("%g%%: +%.0f%%/+%.0f%%", soc, vs_w, vs_d);
    }
    c.measured = ad::fmt("range %.1f%% .. %.1f%%", lo, hi);
    c.detail = "per point (vs watch-pinned / vs duplicate): " + rows;
    c.pass = lo >= 30.0 && hi <= 45.0;
    out.push_back(c);
  }

  // ── 7: wire round-trips and golden fixtures ──
  {
    CriterionResult c;
    c.id = 7;
    c.name = "wire round-trip and golden fixtures";
    c.expected = ">= 10000 random messages round-trip; all fixtures byte-exact";
    c.tolerance = "bit-exact";
    std::mt19937_64 rng(opts.seed);
    std::size_t ok = 0;
    const std::size_t n_msgs = 10000;
    std::string first_bad;
    for (std::size_t i = 0; i < n_msgs; ++i) {
      WireMessage m = ad::random_message(rng);
      std::vector<std::uint8_t> bytes = encode(m);
      bool good = bytes.size() == wire_size(m);
      if (good) {
        WireMessage back = decode(bytes);
        good = encode(back) == bytes && message_to_json(back) == message_to_json(m);
      }
      if (good) {
        ++ok;
      } else if (first_bad.empty()) {
        first_bad = ad::fmt("message %zu failed round-trip", i);
      }
    }
    std::size_t fx_total = 0, fx_ok = 0;
    for (const auto& entry : std::filesystem::directory_iterator(opts.protocol_fixture_dir)) {
      if (entry.path().extension() != ".json") continue;
      ++fx_total;
      std::ifstream f(entry.path());
      nlohmann::json j;
      f >> j;
      WireMessage m = message_from_json(j.at("message"));
      bool good = to_hex(encode(m)) == j.at("hex").get<std::string>();
      if (good) {
        WireMessage back = decode(from_hex(j.at("hex").get<std::string>()));
        good = message_to_json(back) == j.at("message");
      }
      if (good) {
        ++fx_ok;
      } else if (first_bad.empty()) {
        first_bad = "fixture " + entry.path().filename().string() + " mismatched";
      }
    }
    c.measured = ad::fmt("%zu/%zu round-trips, %zu/%zu fixtures", ok, n_msgs, fx_ok, fx_total);
    c.detail = first_bad;
    c.pass = ok == n_msgs && fx_total >= 8 && fx_ok == fx_total;
    out.push_back(c);
  }

  // ── 8: formation energy by group size ──
  {
    CriterionResult c;
    c.id = 8;
    c.name = "formation energy by group size";
    c.expected = "0.6*(n-1)+1.8 J for n=2..5 (2.4/3.0/3.6/4.2)";
    c.tolerance = "exact";
    bool all_ok = true;
    std::string rows;
    for (int n = 2; n <= 5; ++n) {
      Scenario s;
      s.name = "formation";
      s.horizon_s = 10.0;
      for (int d = 1; d <= n; ++d) {
        ScenarioDevice dev;
        dev.profile.device_id = static_cast<DeviceId>(d);
        dev.profile.kind = DeviceKind::Phone;
        dev.profile.battery_capacity_mah = 100.0;
        dev.baseline_power_mw = 1.0;
        s.devices.push_back(dev);
      }
      SimResult r = simulate(s, catalog);
      double expect = 0.6 * (n - 1) + 1.8;
      bool ok = r.total_formation_j == expect && r.formation_events == 1;
      all_ok = all_ok && ok;
      if (!rows.empty()) rows += ", ";
      rows += ad::fmt("n=%d: %.1f J", n, r.total_formation_j);
    }
    c.measured = rows;
    c.pass = all_ok;
    out.push_back(c);
  }

  // ── 9: engine property battery ──
  {
    CriterionResult c;
    c.id = 9;
    c.name = "engine property battery";
    c.expected = "feasibility, optimality order, scale invariance, conservation, "
                 "monotonic charge, decomposition, determinism";
    c.tolerance = "rel. 1e-6 (conservation); exact otherwise";
    std::string fail;
    std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);

    // Feasibility + optimality order + scale invariance over random instances.
    for (int iter = 0; iter < 300 && fail.empty(); ++iter) {
      FapInstance in = ad::random_instance(rng);
      Assignment g = fap_greedy(in);
      Assignment e = fap_exact(in);
      Assignment a = baseline_all(in);
      Assignment m = baseline_manual(in, rng());
      if (!check_assignment(in, g) || !check_assignment(in, e) || !check_assignment(in, a) ||
          !check_assignment(in, m)) {
        fail = "infeasible assignment produced";
        break;
      }
      if (e.total_cost > g.total_cost + 1e-9 || e.total_cost > a.total_cost + 1e-9 ||
          e.total_cost > m.total_cost + 1e-9) {
        fail = "exact solver beaten by a heuristic";
        break;
      }
      FapInstance scaled = in;
      for (double& f : scaled.open_cost) f *= 1000.0;
      for (double& cc : scaled.serve_cost) cc *= 1000.0;
      if (fap_greedy(scaled).device_of_request != g.device_of_request) {
        fail = "greedy changed its assignment under uniform cost scaling";
        break;
      }
    }

    // Block-diagonal decomposition: joint solve equals the sum of parts.
    for (int iter = 0; iter < 50 && fail.empty(); ++iter) {
      FapInstance a = ad::random_instance(rng);
      FapInstance b = ad::random_instance(rng);
      FapInstance joint;
      std::size_t nd = a.n_devices() + b.n_devices();
      joint.device_ids = a.device_ids;
      for (DeviceId id : b.device_ids) joint.device_ids.push_back(1000 + id);
      joint.open_cost = a.open_cost;
      joint.open_cost.insert(joint.open_cost.end(), b.open_cost.begin(), b.open_cost.end());
      auto add_rows = [&](const FapInstance& src, std::size_t off) {
        for (std::size_t r = 0; r < src.n_requests(); ++r) {
          joint.request_ids.push_back(src.request_ids[r] + (off ? 500 : 0));
          joint.origin.push_back(src.origin[r] == kNoDevice ? kNoDevice : src.origin[r] + off);
          std::vector<double> row(nd, 0.0);
          std::vector<std::uint8_t> map(nd, 0);
          for (std::size_t d = 0; d < src.n_devices(); ++d) {
            row[off + d] = src.c(r, d);
            map[off + d] = src.m(r, d) ? 1 : 0;
          }
          joint.serve_cost.insert(joint.serve_cost.end(), row.begin(), row.end());
          joint.mappable.insert(joint.mappable.end(), map.begin(), map.end());
        }
      };
      add_rows(a, 0);
      add_rows(b, a.n_devices());
      double split = fap_exact(a).total_cost + fap_exact(b).total_cost;
      double jointly = fap_exact(joint).total_cost;
      if (std::abs(jointly - split) > 1e-9 * std::max(1.0, split)) {
        fail = "joint solve diverged from per-function solves";
        break;
      }
    }

    // Conservation + monotonic discharge on the uptime scenarios.
    if (fail.empty()) {
      for (const Scenario* s : {&adaptive, &watch_only, &phone_only}) {
        SimResult r = simulate(*s, catalog);
        if (std::abs(r.conservation_error_j) > 1e-6 * std::max(1.0, r.total_drained_j)) {
          fail = ad::fmt("energy conservation error %.3g J in %s", r.conservation_error_j,
                         s->name.c_str());
          break;
        }
        std::map<DeviceId, double> last;
        for (const TraceRow& row : r.trace) {
          auto it = last.find(row.device);
          if (it != last.end() && row.soc_percent > it->second + 1e-9) {
            fail = ad::fmt("charge rose without a charger in %s", s->name.c_str());
            break;
          }
          last[row.device] = row.soc_percent;
        }
        if (!fail.empty()) break;
      }
    }

    // Determinism: identical runs and identical sweep points.
    if (fail.empty()) {
      SimResult r1 = simulate(adaptive, catalog);
      SimResult r2 = simulate(adaptive, catalog);
      if (result_to_json(r1).dump() != result_to_json(r2).dump()) {
        fail = "two identical simulations disagreed";
      }
    }
    if (fail.empty()) {
      SweepConfig small = cfg;
      small.n_trials = 50;
      auto p1 = sweep_ratio(small, {1.0});
      small.threads = small.threads > 1 ? 1 : 4;
      auto p2 = sweep_ratio(small, {1.0});
      for (std::size_t b = 0; b < 3; ++b) {
        if (p1[0].mean_reduction_pct[b] != p2[0].mean_reduction_pct[b]) {
          fail = "sweep result depends on thread count";
        }
      }
    }

    c.measured = fail.empty() ? "all properties hold" : "violated";
    c.detail = fail;
    c.pass = fail.empty();
    out.push_back(c);
  }

  return out;
}

}  // namespace afv
