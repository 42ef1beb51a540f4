#ifndef AFV_TYPES_HPP_
#define AFV_TYPES_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "afv/errors.hpp"

namespace afv {

using DeviceId = std::uint64_t;
using RegistrationId = std::uint32_t;

// ─── enums ───

enum class DeviceKind : std::uint8_t { Phone = 0, Watch = 1, Glass = 2, Tier2Sensor = 3 };

enum class NetworkKind : std::uint8_t { WiFi = 0, Cellular = 1, Bluetooth = 2 };

enum class FunctionType : std::uint8_t {
  Accelerometer = 0,
  Gyroscope = 1,
  Magnetometer = 2,
  HeartRate = 3,
  InternetUpload = 4,
  InternetDownload = 5,
  Compression = 6,
  Encoding = 7,
};

enum class FunctionCategory : std::uint8_t { Sensing, Connectivity, Processing };

// Android-style sampling rates, slowest to fastest.
enum class SamplingSpeed : std::uint8_t { Normal = 0, Ui = 1, Game = 2, Fastest = 3 };

enum class MovingState : std::uint8_t { Still = 0, Walking = 1, BodyStretch = 2, HeadStretch = 3 };

enum class ObjectiveMode : std::uint8_t { Quality = 0, Energy = 1, Monetary = 2 };

// Preference priority: Device overrides User overrides Application.
enum class PreferenceScope : std::uint8_t { Device = 0, User = 1, Application = 2 };

constexpr FunctionCategory function_category(FunctionType f) {
  switch (f) {
    case FunctionType::Accelerometer:
    case FunctionType::Gyroscope:
    case FunctionType::Magnetometer:
    case FunctionType::HeartRate:
      return FunctionCategory::Sensing;
    case FunctionType::InternetUpload:
    case FunctionType::InternetDownload:
      return FunctionCategory::Connectivity;
    case FunctionType::Compression:
    case FunctionType::Encoding:
    default:
      return FunctionCategory::Processing;
  }
}

// ─── enum <-> string (used by JSON config and CLI output) ───

inline const char* to_string(DeviceKind k) {
  switch (k) {
    case DeviceKind::Phone: return "phone";
    case DeviceKind::Watch: return "watch";
    case DeviceKind::Glass: return "glass";
    case DeviceKind::Tier2Sensor: return "tier2_sensor";
  }
  return "?";
}

inline const char* to_string(NetworkKind k) {
  switch (k) {
    case NetworkKind::WiFi: return "wifi";
    case NetworkKind::Cellular: return "cellular";
    case NetworkKind::Bluetooth: return "bluetooth";
  }
  return "?";
}

inline const char* to_string(FunctionType f) {
  switch (f) {
    case FunctionType::Accelerometer: return "accelerometer";
    case FunctionType::Gyroscope: return "gyroscope";
    case FunctionType::Magnetometer: return "magnetometer";
    case FunctionType::HeartRate: return "heart_rate";
    case FunctionType::InternetUpload: return "internet_upload";
    case FunctionType::InternetDownload: return "internet_download";
    case FunctionType::Compression: return "compression";
    case FunctionType::Encoding: return "encoding";
  }
  return "?";
}

inline const char* to_string(SamplingSpeed s) {
  switch (s) {
    case SamplingSpeed::Normal: return "normal";
    case SamplingSpeed::Ui: return "ui";
    case SamplingSpeed::Game: return "game";
    case SamplingSpeed::Fastest: return "fastest";
  }
  return "?";
}

inline const char* to_string(MovingState m) {
  switch (m) {
    case MovingState::Still: return "still";
    case MovingState::Walking: return "walking";
    case MovingState::BodyStretch: return "body_stretch";
    case MovingState::HeadStretch: return "head_stretch";
  }
  return "?";
}

inline const char* to_string(ObjectiveMode m) {
  switch (m) {
    case ObjectiveMode::Quality: return "quality";
    case ObjectiveMode::Energy: return "energy";
    case ObjectiveMode::Monetary: return "monetary";
  }
  return "?";
}

inline const char* to_string(PreferenceScope s) {
  switch (s) {
    case PreferenceScope::Device: return "device";
    case PreferenceScope::User: return "user";
    case PreferenceScope::Application: return "application";
  }
  return "?";
}

namespace detail {
template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& text, const Enum (&values)[N], const char* what) {
  for (Enum v : values) {
    if (text == to_string(v)) return v;
  }
  throw ParseError(std::string("unknown ") + what + ": '" + text + "'");
}
}  // namespace detail

inline DeviceKind parse_device_kind(const std::string& s) {
  static constexpr DeviceKind all[] = {DeviceKind::Phone, DeviceKind::Watch, DeviceKind::Glass,
                                       DeviceKind::Tier2Sensor};
  return detail::parse_enum(s, all, "device kind");
}

inline NetworkKind parse_network_kind(const std::string& s) {
  static constexpr NetworkKind all[] = {NetworkKind::WiFi, NetworkKind::Cellular,
                                        NetworkKind::Bluetooth};
  return detail::parse_enum(s, all, "network kind");
}

inline FunctionType parse_function_type(const std::string& s) {
  static constexpr FunctionType all[] = {
      FunctionType::Accelerometer,  FunctionType::Gyroscope,        FunctionType::Magnetometer,
      FunctionType::HeartRate,      FunctionType::InternetUpload,   FunctionType::InternetDownload,
      FunctionType::Compression,    FunctionType::Encoding};
  return detail::parse_enum(s, all, "function type");
}

inline SamplingSpeed parse_sampling_speed(const std::string& s) {
  static constexpr SamplingSpeed all[] = {SamplingSpeed::Normal, SamplingSpeed::Ui,
                                          SamplingSpeed::Game, SamplingSpeed::Fastest};
  return detail::parse_enum(s, all, "sampling speed");
}

inline MovingState parse_moving_state(const std::string& s) {
  static constexpr MovingState all[] = {MovingState::Still, MovingState::Walking,
                                        MovingState::BodyStretch, MovingState::HeadStretch};
  return detail::parse_enum(s, all, "moving state");
}

inline ObjectiveMode parse_objective_mode(const std::string& s) {
  static constexpr ObjectiveMode all[] = {ObjectiveMode::Quality, ObjectiveMode::Energy,
                                          ObjectiveMode::Monetary};
  return detail::parse_enum(s, all, "objective mode");
}

inline PreferenceScope parse_preference_scope(const std::string& s) {
  static constexpr PreferenceScope all[] = {PreferenceScope::Device, PreferenceScope::User,
                                            PreferenceScope::Application};
  return detail::parse_enum(s, all, "preference scope");
}

// ─── domain records ───

struct NetworkProfile {
  NetworkKind kind = NetworkKind::WiFi;
  std::string network_id;                // SSID or operator id
  double monetary_cost_per_mb = 0.0;     // currency units per MB transferred
  double avg_link_speed_bps = 0.0;
};

struct FunctionImplementation {
  FunctionType function = FunctionType::Accelerometer;
  // Generic implementation cost; objective-specific builders usually derive
  // costs from the energy catalog or network tariffs instead.
  double cost_f = 0.0;
};

// One device of the personal-area network.  Tier 1 devices run the allocation
// logic themselves; tier 2 devices are dumb sensors reached through a paired
// tier 1 host.
struct DeviceProfile {
  DeviceId device_id = 0;
  DeviceKind kind = DeviceKind::Phone;
  int tier = 1;
  double battery_capacity_mah = 0.0;
  double cell_voltage_v = 3.8;
  std::vector<NetworkProfile> networks;
  std::vector<FunctionImplementation> implementations;
  std::optional<DeviceId> paired_host;

  double capacity_joules() const {
    // mAh * 3.6 = coulombs; * volts = joules.
    return battery_capacity_mah * 3.6 * cell_voltage_v;
  }

  bool implements(FunctionType f) const {
    for (const auto& impl : implementations) {
      if (impl.function == f) return true;
    }
    return false;
  }

  void validate() const {
    if (tier != 1 && tier != 2) {
      throw ParseError("device " + std::to_string(device_id) + ": tier must be 1 or 2");
    }
    if (tier == 1) {
      if (battery_capacity_mah <= 0.0) {
        throw ParseError("device " + std::to_string(device_id) +
                         ": tier 1 device needs a positive battery capacity");
      }
      if (paired_host) {
        throw ParseError("device " + std::to_string(device_id) +
                         ": tier 1 device cannot have a paired host");
      }
    } else {
      if (!paired_host) {
        throw ParseError("device " + std::to_string(device_id) +
                         ": tier 2 device needs a paired host");
      }
      if (!networks.empty()) {
        throw ParseError("device " + std::to_string(device_id) +
                         ": tier 2 device cannot expose networks");
      }
      for (const auto& impl : implementations) {
        if (function_category(impl.function) != FunctionCategory::Sensing) {
          throw ParseError("device " + std::to_string(device_id) +
                           ": tier 2 device may only implement sensing functions");
        }
      }
    }
    if (cell_voltage_v <= 0.0) {
      throw ParseError("device " + std::to_string(device_id) + ": cell voltage must be positive");
    }
  }
};

// An application's standing request for a function.
struct Registration {
  RegistrationId registration_id = 0;
  std::string app_id;
  FunctionType function = FunctionType::Accelerometer;
  DeviceId origin_device = 0;  // where the requesting app runs
  SamplingSpeed sampling_speed = SamplingSpeed::Normal;
  double report_interval_s = 60.0;
  std::uint64_t payload_bytes_per_report = 0;
  double start_s = 0.0;
  // (context value, device): while the named context is active the request is
  // pinned to exactly that device.
  std::vector<std::pair<std::string, DeviceId>> forced_mapping;

  void validate() const {
    if (report_interval_s <= 0.0) {
      throw ParseError("registration " + std::to_string(registration_id) +
                       ": report interval must be positive");
    }
  }
};

// A preference rule set attached to a device (scope Device, subject =
// device id as text) or an app (scope User / Application, subject = app id).
// Each rule is (context name, required value); on the same context name a
// higher-priority scope replaces the lower-priority rule entirely.
struct Preference {
  PreferenceScope scope = PreferenceScope::Application;
  std::string subject;
  std::vector<std::pair<std::string, std::string>> rules;
};

// Point-in-time context of one device as seen by the context monitor.
struct ContextSnapshot {
  DeviceId device_id = 0;
  double soc_percent = 100.0;
  bool charging = false;
  MovingState moving = MovingState::Still;
  std::optional<NetworkProfile> connected_network;
};

}  // namespace afv

#endif  // AFV_TYPES_HPP_
