#ifndef AFV_SWEEP_HPP_
#define AFV_SWEEP_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "afv/errors.hpp"
#include "afv/fap.hpp"

namespace afv {

// ─── deterministic stream splitting ───
//
// Every trial draws from its own generator, seeded from (master seed, stream
// index) by a splitmix64 hop.  Results are therefore independent of trial
// execution order, so parallel and serial runs agree bit for bit.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t stream) {
  return splitmix64(master_seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
}

// ─── synthetic instances ───

struct SweepConfig {
  std::size_t n_devices = 5;
  std::size_t n_requests = 10;  // total per trial; split over function types
  std::size_t requests_per_function = 2;
  double mu_c = 100.0;
  double sigma_factor = 0.1;  // sigma = factor * mean, for both f and c
  std::size_t n_trials = 1000;
  std::uint64_t seed = 42;
  unsigned threads = 1;  // 0 or 1 = serial

  void validate() const {
    if (n_devices == 0 || n_requests == 0) throw ParseError("sweep: empty instance shape");
    if (requests_per_function == 0) {
      throw ParseError("sweep: needs at least one request per function");
    }
    if (n_requests % requests_per_function != 0) {
      throw ParseError("sweep: total requests must divide evenly over functions");
    }
    if (n_trials == 0) throw ParseError("sweep: needs at least one trial");
    if (sigma_factor < 0.0) throw ParseError("sweep: sigma factor must be non-negative");
    if (mu_c <= 0.0) throw ParseError("sweep: mean serving cost must be positive");
  }
};

// One random allocation instance for a single function type: every request is
// mappable everywhere, costs nothing at its own origin, and Normal(mu_c,
// sigma) clamped at zero elsewhere.  Opening (implementation) costs are
// Normal(ratio*mu_c, sigma) per device.  `first_request` numbers the requests
// and keeps origins rotating round-robin across the whole trial.
inline FapInstance make_sweep_instance(const SweepConfig& cfg, double fc_ratio,
                                       std::size_t n_requests, std::size_t first_request,
                                       std::mt19937_64& rng) {
  FapInstance in;
  for (std::size_t d = 0; d < cfg.n_devices; ++d) {
    in.device_ids.push_back(static_cast<DeviceId>(d + 1));
  }
  for (std::size_t r = 0; r < n_requests; ++r) {
    in.request_ids.push_back(static_cast<RegistrationId>(first_request + r + 1));
    in.origin.push_back((first_request + r) % cfg.n_devices);
  }

  double mu_f = fc_ratio * cfg.mu_c;
  // sigma = 0 degenerates to the mean (a zero-stddev Normal is not allowed).
  auto draw = [&](double mu) {
    if (cfg.sigma_factor <= 0.0) return mu;
    std::normal_distribution<double> dist(mu, cfg.sigma_factor * mu);
    return std::max(0.0, dist(rng));
  };
  for (std::size_t d = 0; d < cfg.n_devices; ++d) {
    in.open_cost.push_back(draw(mu_f));
  }

  in.mappable.assign(n_requests * cfg.n_devices, 1);
  in.serve_cost.assign(n_requests * cfg.n_devices, 0.0);
  for (std::size_t r = 0; r < n_requests; ++r) {
    for (std::size_t d = 0; d < cfg.n_devices; ++d) {
      if (d == in.origin[r]) continue;  // free at home
      in.serve_cost[r * cfg.n_devices + d] = std::max(0.0, draw(cfg.mu_c));
    }
  }
  return in;
}

struct TrialCosts {
  double greedy = 0.0;
  double exact = 0.0;
  double all = 0.0;
  double manual = 0.0;
};

// One Monte-Carlo trial: the trial's requests split into function types of
// `requests_per_function` each, and every type is allocated independently
// (implementing a function on a device is paid per function).  The manual
// baseline uses one seed for the whole trial, so the simulated user parks
// every function on the same device.
inline TrialCosts run_sweep_trial(const SweepConfig& cfg, double fc_ratio, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uint64_t manual_seed = splitmix64(seed ^ 0x4d414e55414cULL);
  TrialCosts c;
  for (std::size_t first = 0; first < cfg.n_requests; first += cfg.requests_per_function) {
    FapInstance in = make_sweep_instance(cfg, fc_ratio, cfg.requests_per_function, first, rng);
    c.greedy += fap_greedy(in).total_cost;
    c.exact += fap_exact(in).total_cost;
    c.all += baseline_all(in).total_cost;
    c.manual += baseline_manual(in, manual_seed).total_cost;
  }
  return c;
}

// ─── aggregation ───

enum class SweepBaseline : std::size_t { Optimal = 0, All = 1, Manual = 2 };

inline const char* to_string(SweepBaseline b) {
  switch (b) {
    case SweepBaseline::Optimal: return "optimal";
    case SweepBaseline::All: return "all";
    case SweepBaseline::Manual: return "manual";
  }
  return "?";
}

struct SweepPoint {
  double x = 0.0;         // cost ratio, or function count
  std::size_t trials = 0;
  // Indexed by SweepBaseline: cost reduction of the greedy allocation
  // relative to that baseline, (baseline - greedy)/baseline * 100.
  double mean_reduction_pct[3] = {0, 0, 0};
  double std_reduction_pct[3] = {0, 0, 0};
  // Absolute savings, baseline - greedy.
  double mean_abs_reduction[3] = {0, 0, 0};
  double std_abs_reduction[3] = {0, 0, 0};
  // Mean of |greedy - all| / all, for the low-ratio regime check.
  double mean_abs_gap_vs_all_pct = 0.0;

  // Optimality gap (greedy - exact)/exact is the negated reduction.
  double mean_gap_vs_exact_pct() const {
    return -mean_reduction_pct[static_cast<std::size_t>(SweepBaseline::Optimal)];
  }
};

namespace detail {

inline void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
  sd = std::sqrt(var);
}

// Runs all trials of one sweep point, optionally across threads.  Trial i of
// point p uses stream p*n_trials + i regardless of scheduling.
inline SweepPoint sweep_point(const SweepConfig& cfg, double x, double fc_ratio,
                              std::size_t point_index) {
  std::vector<TrialCosts> costs(cfg.n_trials);
  auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      std::uint64_t stream = point_index * cfg.n_trials + i;
      costs[i] = run_sweep_trial(cfg, fc_ratio, trial_seed(cfg.seed, stream));
    }
  };
  unsigned threads = cfg.threads;
  if (threads > 1 && cfg.n_trials > 1) {
    threads = std::min<unsigned>(threads, static_cast<unsigned>(cfg.n_trials));
    std::vector<std::thread> pool;
    std::size_t chunk = (cfg.n_trials + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      std::size_t lo = t * chunk;
      std::size_t hi = std::min(cfg.n_trials, lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (std::thread& th : pool) th.join();
  } else {
    run_range(0, cfg.n_trials);
  }

  SweepPoint p;
  p.x = x;
  p.trials = cfg.n_trials;
  for (std::size_t b = 0; b < 3; ++b) {
    std::vector<double> pct(cfg.n_trials), abs(cfg.n_trials);
    for (std::size_t i = 0; i < cfg.n_trials; ++i) {
      double base = b == 0 ? costs[i].exact : b == 1 ? costs[i].all : costs[i].manual;
      abs[i] = base - costs[i].greedy;
      pct[i] = base > 0.0 ? abs[i] / base * 100.0 : 0.0;
    }
    mean_std(pct, p.mean_reduction_pct[b], p.std_reduction_pct[b]);
    mean_std(abs, p.mean_abs_reduction[b], p.std_abs_reduction[b]);
  }
  double gap = 0.0;
  for (std::size_t i = 0; i < cfg.n_trials; ++i) {
    if (costs[i].all > 0.0) {
      gap += std::abs(costs[i].greedy - costs[i].all) / costs[i].all * 100.0;
    }
  }
  p.mean_abs_gap_vs_all_pct = gap / static_cast<double>(cfg.n_trials);
  return p;
}

}  // namespace detail

// Fig.-6a style: fixed instance shape, the opening/serving cost ratio varies.
inline std::vector<SweepPoint> sweep_ratio(const SweepConfig& cfg,
                                           const std::vector<double>& ratios) {
  cfg.validate();
  if (ratios.empty()) throw ParseError("sweep: needs at least one ratio");
  for (double r : ratios) {
    if (r <= 0.0) throw ParseError("sweep: ratios must be positive");
  }
  std::vector<SweepPoint> out;
  for (std::size_t p = 0; p < ratios.size(); ++p) {
    out.push_back(detail::sweep_point(cfg, ratios[p], ratios[p], p));
  }
  return out;
}

// Fig.-6b style: ratio pinned to 1, the number of function types varies; each
// type keeps its own group of cfg.requests_per_function requests.
inline std::vector<SweepPoint> sweep_functions(const SweepConfig& cfg,
                                               const std::vector<std::size_t>& counts) {
  cfg.validate();
  if (counts.empty()) throw ParseError("sweep: needs at least one function count");
  std::vector<SweepPoint> out;
  for (std::size_t p = 0; p < counts.size(); ++p) {
    if (counts[p] == 0) throw ParseError("sweep: function counts must be positive");
    SweepConfig point_cfg = cfg;
    point_cfg.n_requests = counts[p] * cfg.requests_per_function;
    out.push_back(detail::sweep_point(point_cfg, static_cast<double>(counts[p]), 1.0, p));
  }
  return out;
}

// ─── CSV output ───

inline void write_ratio_csv(const std::vector<SweepPoint>& points, std::ostream& out) {
  out << "ratio,strategy,mean_cost_reduction_pct,std_pct\n";
  for (const SweepPoint& p : points) {
    for (std::size_t b = 0; b < 3; ++b) {
      out << p.x << ',' << to_string(static_cast<SweepBaseline>(b)) << ','
          << p.mean_reduction_pct[b] << ',' << p.std_reduction_pct[b] << '\n';
    }
  }
}

inline void write_functions_csv(const std::vector<SweepPoint>& points, std::ostream& out) {
  out << "n_functions,strategy,mean_cost_reduction_pct,std_pct,mean_abs_reduction,"
         "std_abs_reduction\n";
  for (const SweepPoint& p : points) {
    for (std::size_t b = 0; b < 3; ++b) {
      out << p.x << ',' << to_string(static_cast<SweepBaseline>(b)) << ','
          << p.mean_reduction_pct[b] << ',' << p.std_reduction_pct[b] << ','
          << p.mean_abs_reduction[b] << ',' << p.std_abs_reduction[b] << '\n';
    }
  }
}

}  // namespace afv

#endif  // AFV_SWEEP_HPP_
