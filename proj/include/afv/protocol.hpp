#ifndef AFV_PROTOCOL_HPP_
#define AFV_PROTOCOL_HPP_

#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "afv/errors.hpp"
#include "afv/types.hpp"

namespace afv {

// Binary control-plane messages exchanged inside the personal-area network.
// All multi-byte integers and IEEE-754 single-precision reals are big-endian.
// Every message starts with a one-byte type tag:
//
//   0x01 Initialization    capabilities broadcast when a device joins
//   0x02 ContextSensor     one device's current context
//   0x03 ContextRequest    an app registering a request with the master
//   0x04 Assignments       the master's allocation decision
//   0x05 Data              function results, length-prefixed entries

inline constexpr std::uint8_t kMsgInitialization = 0x01;
inline constexpr std::uint8_t kMsgContextSensor = 0x02;
inline constexpr std::uint8_t kMsgContextRequest = 0x03;
inline constexpr std::uint8_t kMsgAssignments = 0x04;
inline constexpr std::uint8_t kMsgData = 0x05;

// type(1) device_id(8) device_type(1)
// n_networks(1) { id_len(1) id(n) monetary_cost:f32(4) }*
// n_functions(1) { function_type(1) energy:f32(4) }*
struct InitializationMsg {
  struct Network {
    std::string network_id;
    float monetary_cost_per_mb = 0.0f;
  };
  struct Function {
    FunctionType function = FunctionType::Accelerometer;
    float energy_mj = 0.0f;
  };
  DeviceId device_id = 0;
  DeviceKind device_type = DeviceKind::Phone;
  std::vector<Network> networks;
  std::vector<Function> functions;
};

// type(1) device_id(8) battery(1) charging(1) moving(1)
// network_kind(1; 0 = none) net_id_len(1) net_id(n) avg_link_speed:f32(4)
struct ContextSensorMsg {
  DeviceId device_id = 0;
  std::uint8_t battery_percent = 0;  // 0..100
  bool charging = false;
  MovingState moving = MovingState::Still;
  std::optional<NetworkKind> network;  // nullopt = not connected
  std::string network_id;              // empty when not connected
  float avg_link_speed_bps = 0.0f;
};

// type(1) request_type(1) info_len:u32(4) info(n)
struct ContextRequestMsg {
  std::uint8_t request_type = 0;
  std::vector<std::uint8_t> info;
};

// type(1) n_rd(1) { request(1) device(1) }* n_vd(1) { function(1) device(1) }*
// Pairs use session-local indices assigned by the master.
struct AssignmentsMsg {
  std::vector<std::pair<std::uint8_t, std::uint8_t>> request_device;
  std::vector<std::pair<std::uint8_t, std::uint8_t>> function_device;
};

// type(1) { request_type(1) data_len:u32(4) data(n) }*
// Entries are self-delimiting; the message ends with the buffer.
struct DataMsg {
  struct Entry {
    std::uint8_t request_type = 0;
    std::vector<std::uint8_t> data;
  };
  std::vector<Entry> entries;
};

using WireMessage =
    std::variant<InitializationMsg, ContextSensorMsg, ContextRequestMsg, AssignmentsMsg, DataMsg>;

// ─── byte-level helpers ───

namespace wire_detail {

struct Writer {
  std::vector<std::uint8_t> out;

  void u8(std::uint8_t v) { out.push_back(v); }
  void u32(std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
  }
  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
      out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { out.insert(out.end(), b.begin(), b.end()); }
  void bytes(const std::string& s) {
    out.insert(out.end(), s.begin(), s.end());
  }
};

struct Reader {
  std::span<const std::uint8_t> buf;
  std::size_t pos = 0;

  std::size_t remaining() const { return buf.size() - pos; }
  void need(std::size_t n) const {
    if (remaining() < n) throw TruncatedError("message truncated");
  }
  std::uint8_t u8() {
    need(1);
    return buf[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = (std::uint32_t(buf[pos]) << 24) | (std::uint32_t(buf[pos + 1]) << 16) |
                      (std::uint32_t(buf[pos + 2]) << 8) | std::uint32_t(buf[pos + 3]);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | buf[pos + i];
    pos += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> v(buf.begin() + pos, buf.begin() + pos + n);
    pos += n;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(buf.begin() + pos, buf.begin() + pos + n);
    pos += n;
    return s;
  }
};

inline void check_count(std::size_t n, const char* what) {
  if (n > 255) throw FieldOverflowError(std::string(what) + " count exceeds one byte");
}

inline std::uint8_t enum_in_range(std::uint8_t v, std::uint8_t max, const char* what) {
  if (v > max) {
    throw InvalidEnumError(std::string("invalid ") + what + " value " + std::to_string(v));
  }
  return v;
}

}  // namespace wire_detail

// ─── size / encode / decode ───

inline std::size_t wire_size(const InitializationMsg& m) {
  std::size_t n = 1 + 8 + 1 + 1 + 1;
  for (const auto& net : m.networks) n += 1 + net.network_id.size() + 4;
  n += m.functions.size() * 5;
  return n;
}
inline std::size_t wire_size(const ContextSensorMsg& m) {
  return 1 + 8 + 1 + 1 + 1 + 1 + 1 + m.network_id.size() + 4;
}
inline std::size_t wire_size(const ContextRequestMsg& m) { return 1 + 1 + 4 + m.info.size(); }
inline std::size_t wire_size(const AssignmentsMsg& m) {
  return 1 + 1 + 2 * m.request_device.size() + 1 + 2 * m.function_device.size();
}
inline std::size_t wire_size(const DataMsg& m) {
  std::size_t n = 1;
  for (const auto& e : m.entries) n += 1 + 4 + e.data.size();
  return n;
}
inline std::size_t wire_size(const WireMessage& m) {
  return std::visit([](const auto& v) { return wire_size(v); }, m);
}

inline std::vector<std::uint8_t> encode(const WireMessage& msg) {
  wire_detail::Writer w;
  if (const auto* m = std::get_if<InitializationMsg>(&msg)) {
    wire_detail::check_count(m->networks.size(), "network");
    wire_detail::check_count(m->functions.size(), "function");
    w.u8(kMsgInitialization);
    w.u64(m->device_id);
    w.u8(static_cast<std::uint8_t>(m->device_type));
    w.u8(static_cast<std::uint8_t>(m->networks.size()));
    for (const auto& net : m->networks) {
      wire_detail::check_count(net.network_id.size(), "network id byte");
      w.u8(static_cast<std::uint8_t>(net.network_id.size()));
      w.bytes(net.network_id);
      w.f32(net.monetary_cost_per_mb);
    }
    w.u8(static_cast<std::uint8_t>(m->functions.size()));
    for (const auto& fn : m->functions) {
      w.u8(static_cast<std::uint8_t>(fn.function));
      w.f32(fn.energy_mj);
    }
  } else if (const auto* m = std::get_if<ContextSensorMsg>(&msg)) {
    if (m->battery_percent > 100) {
      throw FieldOverflowError("battery percent exceeds 100");
    }
    if (!m->network && !m->network_id.empty()) {
      throw FieldOverflowError("network id present without a connected network");
    }
    wire_detail::check_count(m->network_id.size(), "network id byte");
    w.u8(kMsgContextSensor);
    w.u64(m->device_id);
    w.u8(m->battery_percent);
    w.u8(m->charging ? 1 : 0);
    w.u8(static_cast<std::uint8_t>(m->moving));
    w.u8(m->network ? static_cast<std::uint8_t>(*m->network) + 1 : 0);
    w.u8(static_cast<std::uint8_t>(m->network_id.size()));
    w.bytes(m->network_id);
    w.f32(m->avg_link_speed_bps);
  } else if (const auto* m = std::get_if<ContextRequestMsg>(&msg)) {
    if (m->info.size() > 0xFFFFFFFFull) throw FieldOverflowError("info exceeds u32 length");
    w.u8(kMsgContextRequest);
    w.u8(m->request_type);
    w.u32(static_cast<std::uint32_t>(m->info.size()));
    w.bytes(m->info);
  } else if (const auto* m = std::get_if<AssignmentsMsg>(&msg)) {
    wire_detail::check_count(m->request_device.size(), "request assignment");
    wire_detail::check_count(m->function_device.size(), "function assignment");
    w.u8(kMsgAssignments);
    w.u8(static_cast<std::uint8_t>(m->request_device.size()));
    for (auto [req, dev] : m->request_device) {
      w.u8(req);
      w.u8(dev);
    }
    w.u8(static_cast<std::uint8_t>(m->function_device.size()));
    for (auto [fn, dev] : m->function_device) {
      w.u8(fn);
      w.u8(dev);
    }
  } else {
    const auto& dm = std::get<DataMsg>(msg);
    w.u8(kMsgData);
    for (const auto& e : dm.entries) {
      if (e.data.size() > 0xFFFFFFFFull) throw FieldOverflowError("data exceeds u32 length");
      w.u8(e.request_type);
      w.u32(static_cast<std::uint32_t>(e.data.size()));
      w.bytes(e.data);
    }
  }
  return std::move(w.out);
}

inline WireMessage decode(std::span<const std::uint8_t> buf) {
  wire_detail::Reader r{buf};
  const std::uint8_t type = r.u8();
  WireMessage out;
  switch (type) {
    case kMsgInitialization: {
      InitializationMsg m;
      m.device_id = r.u64();
      m.device_type =
          static_cast<DeviceKind>(wire_detail::enum_in_range(r.u8(), 3, "device type"));
      std::size_t n_networks = r.u8();
      for (std::size_t i = 0; i < n_networks; ++i) {
        InitializationMsg::Network net;
        std::size_t len = r.u8();
        net.network_id = r.str(len);
        net.monetary_cost_per_mb = r.f32();
        m.networks.push_back(std::move(net));
      }
      std::size_t n_functions = r.u8();
      for (std::size_t i = 0; i < n_functions; ++i) {
        InitializationMsg::Function fn;
        fn.function =
            static_cast<FunctionType>(wire_detail::enum_in_range(r.u8(), 7, "function type"));
        fn.energy_mj = r.f32();
        m.functions.push_back(fn);
      }
      out = std::move(m);
      break;
    }
    case kMsgContextSensor: {
      ContextSensorMsg m;
      m.device_id = r.u64();
      m.battery_percent = r.u8();
      if (m.battery_percent > 100) throw InvalidEnumError("battery percent exceeds 100");
      m.charging = wire_detail::enum_in_range(r.u8(), 1, "charging flag") != 0;
      m.moving = static_cast<MovingState>(wire_detail::enum_in_range(r.u8(), 3, "moving state"));
      std::uint8_t net = wire_detail::enum_in_range(r.u8(), 3, "network kind");
      std::size_t len = r.u8();
      m.network_id = r.str(len);
      if (net == 0) {
        if (!m.network_id.empty()) {
          throw InvalidEnumError("network id present without a connected network");
        }
        m.network = std::nullopt;
      } else {
        m.network = static_cast<NetworkKind>(net - 1);
      }
      m.avg_link_speed_bps = r.f32();
      out = std::move(m);
      break;
    }
    case kMsgContextRequest: {
      ContextRequestMsg m;
      m.request_type = r.u8();
      std::size_t len = r.u32();
      m.info = r.bytes(len);
      out = std::move(m);
      break;
    }
    case kMsgAssignments: {
      AssignmentsMsg m;
      std::size_t n_rd = r.u8();
      for (std::size_t i = 0; i < n_rd; ++i) {
        std::uint8_t req = r.u8();
        std::uint8_t dev = r.u8();
        m.request_device.emplace_back(req, dev);
      }
      std::size_t n_vd = r.u8();
      for (std::size_t i = 0; i < n_vd; ++i) {
        std::uint8_t fn = r.u8();
        std::uint8_t dev = r.u8();
        m.function_device.emplace_back(fn, dev);
      }
      out = std::move(m);
      break;
    }
    case kMsgData: {
      DataMsg m;
      while (r.remaining() > 0) {
        DataMsg::Entry e;
        e.request_type = r.u8();
        std::size_t len = r.u32();
        e.data = r.bytes(len);
        m.entries.push_back(std::move(e));
      }
      out = std::move(m);
      break;
    }
    default:
      throw UnknownTypeError("unknown message type " + std::to_string(type));
  }
  if (r.remaining() != 0) {
    throw TrailingBytesError(std::to_string(r.remaining()) + " trailing bytes after message");
  }
  return out;
}

// ─── hex helpers (fixtures, CLI) ───

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0x0F]);
  }
  return s;
}

inline std::vector<std::uint8_t> from_hex(const std::string& hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string compact;
  for (char c : hex) {
    if (c == ' ' || c == '\n' || c == '\t') continue;
    compact.push_back(c);
  }
  if (compact.size() % 2 != 0) throw ParseError("hex string has odd length");
  std::vector<std::uint8_t> out;
  out.reserve(compact.size() / 2);
  for (std::size_t i = 0; i < compact.size(); i += 2) {
    int hi = nibble(compact[i]);
    int lo = nibble(compact[i + 1]);
    if (hi < 0 || lo < 0) throw ParseError("invalid hex digit");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

// ─── JSON round-trip (fixtures, CLI encode/decode) ───

inline nlohmann::json message_to_json(const WireMessage& msg) {
  nlohmann::json j;
  if (const auto* m = std::get_if<InitializationMsg>(&msg)) {
    j["type"] = "initialization";
    j["device_id"] = m->device_id;
    j["device_type"] = to_string(m->device_type);
    j["networks"] = nlohmann::json::array();
    for (const auto& net : m->networks) {
      j["networks"].push_back(
          {{"id", net.network_id}, {"monetary_cost_per_mb", net.monetary_cost_per_mb}});
    }
    j["functions"] = nlohmann::json::array();
    for (const auto& fn : m->functions) {
      j["functions"].push_back({{"function", to_string(fn.function)}, {"energy_mj", fn.energy_mj}});
    }
  } else if (const auto* m = std::get_if<ContextSensorMsg>(&msg)) {
    j["type"] = "context_sensor";
    j["device_id"] = m->device_id;
    j["battery_percent"] = m->battery_percent;
    j["charging"] = m->charging;
    j["moving"] = to_string(m->moving);
    if (m->network) {
      j["network"] = to_string(*m->network);
    } else {
      j["network"] = nullptr;
    }
    j["network_id"] = m->network_id;
    j["avg_link_speed_bps"] = m->avg_link_speed_bps;
  } else if (const auto* m = std::get_if<ContextRequestMsg>(&msg)) {
    j["type"] = "context_request";
    j["request_type"] = m->request_type;
    j["info_hex"] = to_hex(m->info);
  } else if (const auto* m = std::get_if<AssignmentsMsg>(&msg)) {
    j["type"] = "assignments";
    j["request_device"] = nlohmann::json::array();
    for (auto [req, dev] : m->request_device) j["request_device"].push_back({req, dev});
    j["function_device"] = nlohmann::json::array();
    for (auto [fn, dev] : m->function_device) j["function_device"].push_back({fn, dev});
  } else {
    const auto& dm = std::get<DataMsg>(msg);
    j["type"] = "data";
    j["entries"] = nlohmann::json::array();
    for (const auto& e : dm.entries) {
      j["entries"].push_back({{"request_type", e.request_type}, {"data_hex", to_hex(e.data)}});
    }
  }
  return j;
}

inline WireMessage message_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "initialization") {
    InitializationMsg m;
    m.device_id = j.at("device_id").get<DeviceId>();
    m.device_type = parse_device_kind(j.at("device_type").get<std::string>());
    for (const auto& net : j.value("networks", nlohmann::json::array())) {
      m.networks.push_back({net.at("id").get<std::string>(),
                            net.at("monetary_cost_per_mb").get<float>()});
    }
    for (const auto& fn : j.value("functions", nlohmann::json::array())) {
      m.functions.push_back({parse_function_type(fn.at("function").get<std::string>()),
                             fn.at("energy_mj").get<float>()});
    }
    return m;
  }
  if (type == "context_sensor") {
    ContextSensorMsg m;
    m.device_id = j.at("device_id").get<DeviceId>();
    m.battery_percent = j.at("battery_percent").get<std::uint8_t>();
    m.charging = j.at("charging").get<bool>();
    m.moving = parse_moving_state(j.at("moving").get<std::string>());
    if (!j.at("network").is_null()) {
      m.network = parse_network_kind(j.at("network").get<std::string>());
    }
    m.network_id = j.value("network_id", std::string());
    m.avg_link_speed_bps = j.value("avg_link_speed_bps", 0.0f);
    return m;
  }
  if (type == "context_request") {
    ContextRequestMsg m;
    m.request_type = j.at("request_type").get<std::uint8_t>();
    m.info = from_hex(j.value("info_hex", std::string()));
    return m;
  }
  if (type == "assignments") {
    AssignmentsMsg m;
    for (const auto& p : j.value("request_device", nlohmann::json::array())) {
      m.request_device.emplace_back(p.at(0).get<std::uint8_t>(), p.at(1).get<std::uint8_t>());
    }
    for (const auto& p : j.value("function_device", nlohmann::json::array())) {
      m.function_device.emplace_back(p.at(0).get<std::uint8_t>(), p.at(1).get<std::uint8_t>());
    }
    return m;
  }
  if (type == "data") {
    DataMsg m;
    for (const auto& e : j.value("entries", nlohmann::json::array())) {
      m.entries.push_back({e.at("request_type").get<std::uint8_t>(),
                           from_hex(e.value("data_hex", std::string()))});
    }
    return m;
  }
  throw ParseError("unknown message type '" + type + "'");
}

}  // namespace afv

#endif  // AFV_PROTOCOL_HPP_
