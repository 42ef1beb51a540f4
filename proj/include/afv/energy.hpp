#ifndef AFV_ENERGY_HPP_
#define AFV_ENERGY_HPP_

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>

#include "json.hpp"

#include "afv/errors.hpp"
#include "afv/types.hpp"

namespace afv {

// Measured per-device energy rates.  All energies are millijoules.
//
//   sensing       mJ per second of sampling, keyed by (device, sensor, speed)
//   connectivity  affine transfer model: per-byte slope plus the high/low
//                 power idle tails paid once per transfer
//   processing    mJ per byte processed
struct EnergyCatalog {
  struct Link {
    double per_byte_mj = 0.0;
    double high_idle_mj = 0.0;
    double low_idle_mj = 0.0;  // 0 where the radio has no low-power idle phase
  };

  std::map<std::tuple<DeviceKind, FunctionType, SamplingSpeed>, double> sensing_mj_per_s;
  std::map<std::pair<DeviceKind, NetworkKind>, Link> connectivity;
  std::map<std::pair<DeviceKind, FunctionType>, double> processing_mj_per_byte;

  double sensing_rate(DeviceKind kind, FunctionType sensor, SamplingSpeed speed) const {
    auto it = sensing_mj_per_s.find({kind, sensor, speed});
    if (it == sensing_mj_per_s.end()) {
      throw MissingEntry(std::string("no sensing rate for (") + to_string(kind) + ", " +
                         to_string(sensor) + ", " + to_string(speed) + ")");
    }
    return it->second;
  }

  const Link& link(DeviceKind kind, NetworkKind net) const {
    auto it = connectivity.find({kind, net});
    if (it == connectivity.end()) {
      throw MissingEntry(std::string("no connectivity entry for (") + to_string(kind) + ", " +
                         to_string(net) + ")");
    }
    return it->second;
  }

  double processing_rate(DeviceKind kind, FunctionType fn) const {
    auto it = processing_mj_per_byte.find({kind, fn});
    if (it == processing_mj_per_byte.end()) {
      throw MissingEntry(std::string("no processing rate for (") + to_string(kind) + ", " +
                         to_string(fn) + ")");
    }
    return it->second;
  }
};

// Energy to push n_bytes over the given radio of the given device: affine in
// the byte count, both idle tails paid once per transfer.
inline double transfer_energy(const EnergyCatalog& cat, DeviceKind kind, NetworkKind net,
                              std::uint64_t n_bytes) {
  const EnergyCatalog::Link& l = cat.link(kind, net);
  return l.per_byte_mj * static_cast<double>(n_bytes) + l.high_idle_mj + l.low_idle_mj;
}

// Energy the executing device spends on one reporting interval of the given
// registration.
//
//   sensing       sampling for the whole interval, plus one Bluetooth
//                 transfer of the report payload when the result must leave
//                 the device (delivery inside a device costs nothing)
//   processing    per-byte rate times payload
//   connectivity  one WiFi transfer of the payload
inline double function_energy_per_interval(const EnergyCatalog& cat, const Registration& reg,
                                           DeviceKind executor_kind, bool executes_on_origin) {
  switch (function_category(reg.function)) {
    case FunctionCategory::Sensing: {
      double e = cat.sensing_rate(executor_kind, reg.function, reg.sampling_speed) *
                 reg.report_interval_s;
      if (!executes_on_origin) {
        e += transfer_energy(cat, executor_kind, NetworkKind::Bluetooth,
                             reg.payload_bytes_per_report);
      }
      return e;
    }
    case FunctionCategory::Processing:
      return cat.processing_rate(executor_kind, reg.function) *
             static_cast<double>(reg.payload_bytes_per_report);
    case FunctionCategory::Connectivity:
    default:
      return transfer_energy(cat, executor_kind, NetworkKind::WiFi, reg.payload_bytes_per_report);
  }
}

// ─── catalog loading ───

namespace detail {

inline double require_non_negative(double v, const std::string& what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ParseError("catalog: " + what + " must be a finite non-negative number");
  }
  return v;
}

}  // namespace detail

inline EnergyCatalog parse_energy_catalog(const nlohmann::json& j) {
  EnergyCatalog cat;
  if (!j.is_object()) throw ParseError("catalog: top level must be an object");

  for (const auto& row : j.value("sensing", nlohmann::json::array())) {
    DeviceKind kind = parse_device_kind(row.at("device").get<std::string>());
    FunctionType sensor = parse_function_type(row.at("sensor").get<std::string>());
    SamplingSpeed speed = parse_sampling_speed(row.at("speed").get<std::string>());
    double rate = detail::require_non_negative(row.at("mJ_per_s").get<double>(), "sensing rate");
    cat.sensing_mj_per_s[{kind, sensor, speed}] = rate;
  }
  for (const auto& row : j.value("connectivity", nlohmann::json::array())) {
    DeviceKind kind = parse_device_kind(row.at("device").get<std::string>());
    NetworkKind net = parse_network_kind(row.at("transport").get<std::string>());
    EnergyCatalog::Link link;
    link.per_byte_mj =
        detail::require_non_negative(row.at("per_byte_mJ").get<double>(), "per-byte rate");
    link.high_idle_mj =
        detail::require_non_negative(row.at("high_idle_mJ").get<double>(), "high idle");
    link.low_idle_mj =
        detail::require_non_negative(row.value("low_idle_mJ", 0.0), "low idle");
    cat.connectivity[{kind, net}] = link;
  }
  for (const auto& row : j.value("processing", nlohmann::json::array())) {
    DeviceKind kind = parse_device_kind(row.at("device").get<std::string>());
    FunctionType fn = parse_function_type(row.at("function").get<std::string>());
    double rate =
        detail::require_non_negative(row.at("per_byte_mJ").get<double>(), "processing rate");
    cat.processing_mj_per_byte[{kind, fn}] = rate;
  }

  // Required coverage: the full measured matrix for phone and watch.
  static constexpr FunctionType kSensors[] = {FunctionType::Accelerometer, FunctionType::Gyroscope,
                                              FunctionType::Magnetometer};
  static constexpr SamplingSpeed kSpeeds[] = {SamplingSpeed::Normal, SamplingSpeed::Ui,
                                              SamplingSpeed::Game, SamplingSpeed::Fastest};
  static constexpr DeviceKind kKinds[] = {DeviceKind::Phone, DeviceKind::Watch};
  for (DeviceKind kind : kKinds) {
    for (FunctionType sensor : kSensors) {
      for (SamplingSpeed speed : kSpeeds) {
        if (!cat.sensing_mj_per_s.count({kind, sensor, speed})) {
          throw MissingEntry(std::string("catalog: missing sensing entry (") + to_string(kind) +
                             ", " + to_string(sensor) + ", " + to_string(speed) + ")");
        }
      }
      // Sampling faster must not get cheaper from NORMAL up to GAME.  The
      // measured FASTEST column is not monotone (phone magnetometer), so it
      // stays unconstrained.
      double normal = cat.sensing_mj_per_s[{kind, sensor, SamplingSpeed::Normal}];
      double ui = cat.sensing_mj_per_s[{kind, sensor, SamplingSpeed::Ui}];
      double game = cat.sensing_mj_per_s[{kind, sensor, SamplingSpeed::Game}];
      if (normal > ui || ui > game) {
        throw ParseError(std::string("catalog: sensing rates for (") + to_string(kind) + ", " +
                         to_string(sensor) + ") must be non-decreasing from normal to game");
      }
    }
    for (NetworkKind net : {NetworkKind::Bluetooth, NetworkKind::WiFi}) {
      if (!cat.connectivity.count({kind, net})) {
        throw MissingEntry(std::string("catalog: missing connectivity entry (") + to_string(kind) +
                           ", " + to_string(net) + ")");
      }
    }
    for (FunctionType fn : {FunctionType::Compression, FunctionType::Encoding}) {
      if (!cat.processing_mj_per_byte.count({kind, fn})) {
        throw MissingEntry(std::string("catalog: missing processing entry (") + to_string(kind) +
                           ", " + to_string(fn) + ")");
      }
    }
  }
  return cat;
}

inline EnergyCatalog load_energy_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open energy catalog: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("catalog " + path + ": " + e.what());
  }
  try {
    return parse_energy_catalog(j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("catalog " + path + ": " + e.what());
  }
}

}  // namespace afv

#endif  // AFV_ENERGY_HPP_
