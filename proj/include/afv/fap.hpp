#ifndef AFV_FAP_HPP_
#define AFV_FAP_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "afv/errors.hpp"
#include "afv/types.hpp"

namespace afv {

inline constexpr std::size_t kNoDevice = std::numeric_limits<std::size_t>::max();

// One function-allocation problem: place requests of a single function type
// onto devices.  Opening device d for this function costs open_cost[d] once;
// serving request r from d adds serve_cost[r][d].  mappable[r][d] == 0
// forbids the pairing.  Minimizing
//
//     sum_d y_d * open_cost[d]  +  sum_r serve_cost[r][assigned(r)]
//
// subject to every request being served by exactly one mappable open device
// is an uncapacitated facility-location problem.
struct FapInstance {
  std::vector<RegistrationId> request_ids;
  std::vector<DeviceId> device_ids;
  std::vector<double> open_cost;           // per device
  std::vector<double> serve_cost;          // row-major [request][device]
  std::vector<std::uint8_t> mappable;      // row-major [request][device]
  std::vector<std::size_t> origin;         // per request: device index or kNoDevice

  std::size_t n_requests() const { return request_ids.size(); }
  std::size_t n_devices() const { return device_ids.size(); }

  double c(std::size_t r, std::size_t d) const { return serve_cost[r * n_devices() + d]; }
  bool m(std::size_t r, std::size_t d) const { return mappable[r * n_devices() + d] != 0; }

  void validate() const {
    const std::size_t nr = n_requests();
    const std::size_t nd = n_devices();
    if (open_cost.size() != nd || serve_cost.size() != nr * nd || mappable.size() != nr * nd ||
        origin.size() != nr) {
      throw ParseError("instance: inconsistent dimensions");
    }
    for (double f : open_cost) {
      if (!std::isfinite(f) || f < 0.0) throw ParseError("instance: opening costs must be finite and non-negative");
    }
    for (double cc : serve_cost) {
      if (!std::isfinite(cc) || cc < 0.0) throw ParseError("instance: serving costs must be finite and non-negative");
    }
    for (std::size_t r = 0; r < nr; ++r) {
      if (origin[r] != kNoDevice && origin[r] >= nd) throw ParseError("instance: origin out of range");
      bool any = false;
      for (std::size_t d = 0; d < nd; ++d) any = any || m(r, d);
      if (!any) {
        throw InfeasibleRequest("request " + std::to_string(request_ids[r]) +
                                " has no mappable device");
      }
    }
  }
};

struct Assignment {
  std::vector<std::size_t> device_of_request;  // x: request index -> device index
  std::vector<std::uint8_t> open;              // y, canonical: 1 iff the device serves something
  double total_cost = 0.0;
};

namespace detail {

inline Assignment finish_assignment(const FapInstance& in, std::vector<std::size_t> device_of) {
  Assignment a;
  a.device_of_request = std::move(device_of);
  a.open.assign(in.n_devices(), 0);
  for (std::size_t d : a.device_of_request) a.open[d] = 1;
  a.total_cost = 0.0;
  for (std::size_t d = 0; d < in.n_devices(); ++d) {
    if (a.open[d]) a.total_cost += in.open_cost[d];
  }
  for (std::size_t r = 0; r < in.n_requests(); ++r) {
    a.total_cost += in.c(r, a.device_of_request[r]);
  }
  return a;
}

}  // namespace detail

// True when the assignment serves every request from a mappable device, opens
// exactly the serving devices and reports the matching total cost.
inline bool check_assignment(const FapInstance& in, const Assignment& a) {
  if (a.device_of_request.size() != in.n_requests() || a.open.size() != in.n_devices()) {
    return false;
  }
  std::vector<std::uint8_t> used(in.n_devices(), 0);
  double cost = 0.0;
  for (std::size_t r = 0; r < in.n_requests(); ++r) {
    std::size_t d = a.device_of_request[r];
    if (d >= in.n_devices() || !in.m(r, d)) return false;
    used[d] = 1;
    cost += in.c(r, d);
  }
  for (std::size_t d = 0; d < in.n_devices(); ++d) {
    if (a.open[d] != used[d]) return false;
    if (used[d]) cost += in.open_cost[d];
  }
  double scale = std::max(1.0, std::max(std::fabs(cost), std::fabs(a.total_cost)));
  return std::fabs(cost - a.total_cost) <= 1e-9 * scale;
}

// Greedy facility-location heuristic.
//
// Repeat until every request is assigned: for each device, sort its still
// unassigned mappable requests by ascending serving cost; every prefix P of
// that order is a candidate batch with ratio
//
//     (remaining_open_cost[d] + sum_{p in P} c(p, d)) / |P|
//
// Take the (device, prefix) pair with the smallest ratio, assign the batch,
// and zero the device's opening cost so later batches may reuse it for the
// price of serving alone.  Ties prefer the larger batch, then the smaller
// device index (the prefix of a cost-sorted list is already lexicographically
// first among equal-cost choices).
inline Assignment fap_greedy(const FapInstance& in) {
  in.validate();
  const std::size_t nr = in.n_requests();
  const std::size_t nd = in.n_devices();

  // Per-device request order, sorted once: ascending serving cost, input
  // order between equals.
  std::vector<std::vector<std::size_t>> order(nd);
  for (std::size_t d = 0; d < nd; ++d) {
    for (std::size_t r = 0; r < nr; ++r) {
      if (in.m(r, d)) order[d].push_back(r);
    }
    std::stable_sort(order[d].begin(), order[d].end(),
                     [&](std::size_t a, std::size_t b) { return in.c(a, d) < in.c(b, d); });
  }

  std::vector<double> open_remaining = in.open_cost;
  std::vector<std::size_t> assigned(nr, kNoDevice);
  std::size_t unassigned = nr;

  while (unassigned > 0) {
    double best_ratio = std::numeric_limits<double>::infinity();
    std::size_t best_dev = kNoDevice;
    std::size_t best_len = 0;

    for (std::size_t d = 0; d < nd; ++d) {
      double sum = open_remaining[d];
      std::size_t len = 0;
      for (std::size_t r : order[d]) {
        if (assigned[r] != kNoDevice) continue;
        sum += in.c(r, d);
        ++len;
        double ratio = sum / static_cast<double>(len);
        bool better = ratio < best_ratio ||
                      (ratio == best_ratio &&
                       (len > best_len || (len == best_len && d < best_dev)));
        if (better) {
          best_ratio = ratio;
          best_dev = d;
          best_len = len;
        }
      }
    }

    std::size_t taken = 0;
    for (std::size_t r : order[best_dev]) {
      if (taken == best_len) break;
      if (assigned[r] != kNoDevice) continue;
      assigned[r] = best_dev;
      ++taken;
    }
    unassigned -= best_len;
    open_remaining[best_dev] = 0.0;
  }

  return detail::finish_assignment(in, std::move(assigned));
}

// Exact optimum by enumerating every non-empty open-device subset and serving
// each request from its cheapest mappable open device.  Exponential in the
// device count, hence the hard cap.
inline Assignment fap_exact(const FapInstance& in) {
  in.validate();
  const std::size_t nd = in.n_devices();
  const std::size_t nr = in.n_requests();
  if (nd > 20) {
    throw InstanceTooLarge("exact solver caps at 20 devices, got " + std::to_string(nd));
  }

  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_assignment;
  std::vector<std::size_t> current(nr);

  const std::uint32_t full = static_cast<std::uint32_t>((1ULL << nd) - 1);
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    double cost = 0.0;
    bool feasible = true;
    std::uint32_t used = 0;
    for (std::size_t r = 0; r < nr && feasible; ++r) {
      double best_c = std::numeric_limits<double>::infinity();
      std::size_t best_d = kNoDevice;
      for (std::size_t d = 0; d < nd; ++d) {
        if (!(mask & (1u << d)) || !in.m(r, d)) continue;
        if (in.c(r, d) < best_c) {
          best_c = in.c(r, d);
          best_d = d;
        }
      }
      if (best_d == kNoDevice) {
        feasible = false;
        break;
      }
      current[r] = best_d;
      used |= (1u << best_d);
      cost += best_c;
    }
    if (!feasible) continue;
    for (std::size_t d = 0; d < nd; ++d) {
      if (used & (1u << d)) cost += in.open_cost[d];
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_assignment = current;
    }
  }

  if (best_assignment.empty() && nr > 0) {
    throw InfeasibleRequest("no device subset can serve all requests");
  }
  if (nr == 0) best_assignment.clear();
  return detail::finish_assignment(in, std::move(best_assignment));
}

// Serve every request on its origin device when possible (local service, the
// instance carries its cost, normally zero), otherwise on the cheapest
// mappable device.  Models running everything everywhere with no
// coordination.
inline Assignment baseline_all(const FapInstance& in) {
  in.validate();
  std::vector<std::size_t> assigned(in.n_requests(), kNoDevice);
  for (std::size_t r = 0; r < in.n_requests(); ++r) {
    if (in.origin[r] != kNoDevice && in.m(r, in.origin[r])) {
      assigned[r] = in.origin[r];
      continue;
    }
    double best_c = std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < in.n_devices(); ++d) {
      if (in.m(r, d) && in.c(r, d) < best_c) {
        best_c = in.c(r, d);
        assigned[r] = d;
      }
    }
  }
  return detail::finish_assignment(in, std::move(assigned));
}

// A user picking one device by hand: a uniformly random device that can serve
// every request hosts all of them.  When no single device can, a uniformly
// random device hosts what it can and each remaining request falls to a
// uniformly random device among its own mappable ones.
inline Assignment baseline_manual(const FapInstance& in, std::uint64_t seed) {
  in.validate();
  std::mt19937_64 rng(seed);
  const std::size_t nd = in.n_devices();
  const std::size_t nr = in.n_requests();

  std::vector<std::size_t> serves_all;
  for (std::size_t d = 0; d < nd; ++d) {
    bool all = true;
    for (std::size_t r = 0; r < nr && all; ++r) all = in.m(r, d);
    if (all) serves_all.push_back(d);
  }

  std::vector<std::size_t> assigned(nr, kNoDevice);
  if (!serves_all.empty()) {
    std::size_t pick = serves_all[std::uniform_int_distribution<std::size_t>(
        0, serves_all.size() - 1)(rng)];
    assigned.assign(nr, pick);
  } else {
    std::size_t pick = std::uniform_int_distribution<std::size_t>(0, nd - 1)(rng);
    for (std::size_t r = 0; r < nr; ++r) {
      if (in.m(r, pick)) {
        assigned[r] = pick;
        continue;
      }
      std::vector<std::size_t> options;
      for (std::size_t d = 0; d < nd; ++d) {
        if (in.m(r, d)) options.push_back(d);
      }
      assigned[r] =
          options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
    }
  }
  return detail::finish_assignment(in, std::move(assigned));
}

// The allocation engine runs one facility-location problem per function type
// and unions the results; costs are additive across types.
struct AllocationResult {
  std::vector<Assignment> per_instance;
  double total_cost = 0.0;
};

inline AllocationResult allocate(std::span<const FapInstance> instances) {
  AllocationResult out;
  out.per_instance.reserve(instances.size());
  for (const FapInstance& in : instances) {
    out.per_instance.push_back(fap_greedy(in));
    out.total_cost += out.per_instance.back().total_cost;
  }
  return out;
}

// ─── master election ───

struct MasterCandidate {
  DeviceId device_id = 0;
  double soc_percent = 0.0;
  double avg_power_mw = 0.0;
};

// Default: the master is the device whose battery outlook is least affected
// by the extra coordination work, i.e. the highest soc/power ratio.  The
// opposite literal reading is kept selectable.
enum class MasterRule { MaxSocPerPower, MinSocPerPower };

inline DeviceId select_master(std::span<const MasterCandidate> candidates,
                              MasterRule rule = MasterRule::MaxSocPerPower) {
  if (candidates.empty()) throw EmptyCandidates("master election needs at least one candidate");
  auto ratio = [](const MasterCandidate& c) {
    if (c.avg_power_mw <= 0.0) return std::numeric_limits<double>::infinity();
    return c.soc_percent / c.avg_power_mw;
  };
  const MasterCandidate* best = &candidates[0];
  for (const MasterCandidate& c : candidates.subspan(1)) {
    double rc = ratio(c);
    double rb = ratio(*best);
    bool better = rule == MasterRule::MaxSocPerPower ? rc > rb : rc < rb;
    if (better || (rc == rb && c.device_id < best->device_id)) best = &c;
  }
  return best->device_id;
}

// ─── JSON round-trip for golden regression files ───

inline nlohmann::json instance_to_json(const FapInstance& in) {
  nlohmann::json j;
  j["request_ids"] = in.request_ids;
  j["device_ids"] = in.device_ids;
  j["open_cost"] = in.open_cost;
  j["serve_cost"] = in.serve_cost;
  j["mappable"] = in.mappable;
  nlohmann::json origins = nlohmann::json::array();
  for (std::size_t o : in.origin) {
    if (o == kNoDevice) {
      origins.push_back(nullptr);
    } else {
      origins.push_back(o);
    }
  }
  j["origin"] = origins;
  return j;
}

inline FapInstance instance_from_json(const nlohmann::json& j) {
  FapInstance in;
  in.request_ids = j.at("request_ids").get<std::vector<RegistrationId>>();
  in.device_ids = j.at("device_ids").get<std::vector<DeviceId>>();
  in.open_cost = j.at("open_cost").get<std::vector<double>>();
  in.serve_cost = j.at("serve_cost").get<std::vector<double>>();
  in.mappable = j.at("mappable").get<std::vector<std::uint8_t>>();
  for (const auto& o : j.at("origin")) {
    in.origin.push_back(o.is_null() ? kNoDevice : o.get<std::size_t>());
  }
  in.validate();
  return in;
}

inline nlohmann::json assignment_to_json(const Assignment& a) {
  nlohmann::json j;
  j["device_of_request"] = a.device_of_request;
  j["open"] = a.open;
  j["total_cost"] = a.total_cost;
  return j;
}

}  // namespace afv

#endif  // AFV_FAP_HPP_
