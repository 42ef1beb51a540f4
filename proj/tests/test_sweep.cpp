#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "afv/sweep.hpp"

using namespace afv;

TEST_CASE("stream splitting is stable and collision-averse") {
  // Frozen: the split function must never change, or seeded experiments
  // become unreproducible.
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFULL);
  CHECK(trial_seed(42, 0) == trial_seed(42, 0));
  CHECK(trial_seed(42, 0) != trial_seed(42, 1));
  CHECK(trial_seed(42, 0) != trial_seed(43, 0));

  std::vector<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.push_back(trial_seed(7, i));
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("generated instances have the documented shape") {
  SweepConfig cfg;
  cfg.n_devices = 5;
  std::mt19937_64 rng(123);
  for (int iter = 0; iter < 50; ++iter) {
    double ratio = GENERATE(0.1, 1.0, 10.0);
    // Third function type of a trial: requests 4 and 5, origins keep rotating.
    FapInstance in = make_sweep_instance(cfg, ratio, 2, 4, rng);
    in.validate();
    REQUIRE(in.n_devices() == 5);
    REQUIRE(in.n_requests() == 2);
    for (std::size_t r = 0; r < 2; ++r) {
      CHECK(in.request_ids[r] == static_cast<RegistrationId>(4 + r + 1));
      CHECK(in.origin[r] == (4 + r) % 5);
      CHECK(in.c(r, in.origin[r]) == 0.0);  // requests are free at home
      for (std::size_t d = 0; d < 5; ++d) {
        CHECK(in.m(r, d));
        CHECK(in.c(r, d) >= 0.0);
      }
    }
    for (double f : in.open_cost) CHECK(f >= 0.0);
  }
}

TEST_CASE("zero variance makes costs exactly computable") {
  // sigma = 0: every device opens a function for exactly ratio*mu, every
  // remote serve costs exactly mu.  Ten requests = five function types with
  // two requesters each; origins round-robin over the five devices.
  SweepConfig cfg;
  cfg.sigma_factor = 0.0;
  cfg.n_trials = 1;
  double ratio = 2.0;
  TrialCosts c = run_sweep_trial(cfg, ratio, trial_seed(cfg.seed, 0));
  // ALL implements each type on both requesters: 5 * 2 * 200.
  CHECK(c.all == Catch::Approx(5 * 2 * ratio * 100.0).epsilon(1e-12));
  // Consolidating a type on one requester costs 200 + 100 = 300 < 400, so the
  // optimum consolidates every type.
  CHECK(c.exact == Catch::Approx(5 * (ratio * 100.0 + 100.0)).epsilon(1e-12));
  CHECK(c.greedy == Catch::Approx(c.exact).epsilon(1e-12));
  // Manual parks all five types on one device: 5 opens, and the 8 requests
  // originating elsewhere each pay one remote serve.
  CHECK(c.manual == Catch::Approx(5 * ratio * 100.0 + 8 * 100.0).epsilon(1e-12));
}

TEST_CASE("a function-count point matches the ratio sweep at the same shape") {
  // Five types of two requests each is exactly the ratio-1 instance shape, so
  // the first point of both sweeps must coincide trial by trial.
  SweepConfig cfg;
  cfg.n_trials = 30;
  cfg.seed = 31;
  auto a = sweep_functions(cfg, {5});
  auto b = sweep_ratio(cfg, {1.0});
  REQUIRE(a.size() == 1);
  REQUIRE(b.size() == 1);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(a[0].mean_reduction_pct[s] == b[0].mean_reduction_pct[s]);
    CHECK(a[0].mean_abs_reduction[s] == b[0].mean_abs_reduction[s]);
  }
}

TEST_CASE("sweep results are deterministic under a fixed seed") {
  SweepConfig cfg;
  cfg.n_trials = 40;
  cfg.seed = 2026;
  std::vector<double> ratios = {0.1, 1.0, 5.0};
  auto a = sweep_ratio(cfg, ratios);
  auto b = sweep_ratio(cfg, ratios);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t s = 0; s < 3; ++s) {
      CHECK(a[i].mean_reduction_pct[s] == b[i].mean_reduction_pct[s]);
      CHECK(a[i].std_reduction_pct[s] == b[i].std_reduction_pct[s]);
    }
  }
}

TEST_CASE("parallel execution changes nothing") {
  SweepConfig serial;
  serial.n_trials = 64;
  serial.seed = 99;
  serial.threads = 1;
  SweepConfig parallel = serial;
  parallel.threads = 4;

  std::vector<double> ratios = {0.5, 2.0};
  auto a = sweep_ratio(serial, ratios);
  auto b = sweep_ratio(parallel, ratios);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t s = 0; s < 3; ++s) {
      CHECK(a[i].mean_reduction_pct[s] == b[i].mean_reduction_pct[s]);
      CHECK(a[i].mean_abs_reduction[s] == b[i].mean_abs_reduction[s]);
    }
  }

  auto c = sweep_functions(serial, {1, 5, 10});
  auto d = sweep_functions(parallel, {1, 5, 10});
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t s = 0; s < 3; ++s) {
      CHECK(c[i].mean_reduction_pct[s] == d[i].mean_reduction_pct[s]);
    }
  }
}

TEST_CASE("greedy never beats the exact optimum in a sweep") {
  SweepConfig cfg;
  cfg.n_trials = 200;
  cfg.seed = 1234;
  for (const SweepPoint& p : sweep_ratio(cfg, {0.1, 1.0, 10.0})) {
    // Reduction vs the optimum can only be non-positive.
    CHECK(p.mean_reduction_pct[0] <= 1e-12);
    CHECK(p.mean_gap_vs_exact_pct() >= -1e-12);
  }
}

TEST_CASE("csv headers and row counts are pinned") {
  SweepConfig cfg;
  cfg.n_trials = 5;
  auto pts = sweep_ratio(cfg, {0.1, 1.0});
  std::ostringstream out;
  write_ratio_csv(pts, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "ratio,strategy,mean_cost_reduction_pct,std_pct");
  std::size_t rows = 0;
  bool saw_optimal = false, saw_all = false, saw_manual = false;
  while (std::getline(in, line)) {
    ++rows;
    saw_optimal = saw_optimal || line.find(",optimal,") != std::string::npos;
    saw_all = saw_all || line.find(",all,") != std::string::npos;
    saw_manual = saw_manual || line.find(",manual,") != std::string::npos;
  }
  CHECK(rows == 2 * 3);
  CHECK(saw_optimal);
  CHECK(saw_all);
  CHECK(saw_manual);

  auto fpts = sweep_functions(cfg, {1, 2, 3});
  std::ostringstream fout;
  write_functions_csv(fpts, fout);
  std::istringstream fin(fout.str());
  std::getline(fin, line);
  CHECK(line ==
        "n_functions,strategy,mean_cost_reduction_pct,std_pct,mean_abs_reduction,"
        "std_abs_reduction");
  rows = 0;
  while (std::getline(fin, line)) ++rows;
  CHECK(rows == 3 * 3);
}

TEST_CASE("savings against duplication grow with the function count") {
  // The more functions the network carries, the more the consolidated
  // allocation saves compared to running everything at its origin.
  SweepConfig cfg;
  cfg.n_trials = 150;
  cfg.seed = 7;
  auto pts = sweep_functions(cfg, {1, 5, 10, 15, 20});
  // Fit a least-squares slope over (t, mean absolute savings vs ALL).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double n = static_cast<double>(pts.size());
  for (const SweepPoint& p : pts) {
    double y = p.mean_abs_reduction[static_cast<std::size_t>(SweepBaseline::All)];
    sx += p.x;
    sy += y;
    sxx += p.x * p.x;
    sxy += p.x * y;
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope > 0.0);
}

TEST_CASE("config validation") {
  SweepConfig cfg;
  SECTION("zero trials") {
    cfg.n_trials = 0;
    CHECK_THROWS_AS(sweep_ratio(cfg, {1.0}), ParseError);
  }
  SECTION("no ratios") { CHECK_THROWS_AS(sweep_ratio(cfg, {}), ParseError); }
  SECTION("non-positive ratio") { CHECK_THROWS_AS(sweep_ratio(cfg, {0.0}), ParseError); }
  SECTION("zero function count") { CHECK_THROWS_AS(sweep_functions(cfg, {0}), ParseError); }
  SECTION("negative sigma") {
    cfg.sigma_factor = -0.1;
    CHECK_THROWS_AS(sweep_ratio(cfg, {1.0}), ParseError);
  }
  SECTION("requests do not divide over functions") {
    cfg.n_requests = 10;
    cfg.requests_per_function = 3;
    CHECK_THROWS_AS(sweep_ratio(cfg, {1.0}), ParseError);
  }
}
