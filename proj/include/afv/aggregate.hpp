#ifndef AFV_AGGREGATE_HPP_
#define AFV_AGGREGATE_HPP_

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "afv/types.hpp"

namespace afv {

// Several registrations for the same function type can be served by one
// execution whose stream is broadcast to every subscriber.  The merged
// request must satisfy the most demanding member on every axis: fastest
// sampling speed, shortest reporting interval, largest payload.
struct AggregatedRequest {
  FunctionType function = FunctionType::Accelerometer;
  SamplingSpeed sampling_speed = SamplingSpeed::Normal;
  double report_interval_s = 0.0;
  std::uint64_t payload_bytes_per_report = 0;
  std::vector<std::size_t> member_indices;  // positions in the input span
};

// Groups registrations by function type only (identical type is the merge
// key); group order follows first appearance, members keep input order.
inline std::vector<AggregatedRequest> aggregate_requests(
    std::span<const Registration> registrations) {
  std::vector<AggregatedRequest> out;
  for (std::size_t i = 0; i < registrations.size(); ++i) {
    const Registration& reg = registrations[i];
    AggregatedRequest* group = nullptr;
    for (AggregatedRequest& g : out) {
      if (g.function == reg.function) {
        group = &g;
        break;
      }
    }
    if (!group) {
      out.push_back(AggregatedRequest{reg.function, reg.sampling_speed, reg.report_interval_s,
                                      reg.payload_bytes_per_report, {i}});
      continue;
    }
    group->sampling_speed = std::max(group->sampling_speed, reg.sampling_speed);
    group->report_interval_s = std::min(group->report_interval_s, reg.report_interval_s);
    group->payload_bytes_per_report =
        std::max(group->payload_bytes_per_report, reg.payload_bytes_per_report);
    group->member_indices.push_back(i);
  }
  return out;
}

// View of an aggregated request as a registration, for cost evaluation.
// Origin and ids are taken from the first member.
inline Registration merged_registration(const AggregatedRequest& agg,
                                        std::span<const Registration> registrations) {
  Registration r = registrations[agg.member_indices.front()];
  r.sampling_speed = agg.sampling_speed;
  r.report_interval_s = agg.report_interval_s;
  r.payload_bytes_per_report = agg.payload_bytes_per_report;
  return r;
}

}  // namespace afv

#endif  // AFV_AGGREGATE_HPP_
