#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "afv/protocol.hpp"

namespace {

using namespace afv;

WireMessage random_message(std::mt19937_64& rng) {
  auto byte = [&](int lo, int hi) {
    return static_cast<std::uint8_t>(std::uniform_int_distribution<int>(lo, hi)(rng));
  };
  auto blob = [&](std::size_t max_len) {
    std::vector<std::uint8_t> v(std::uniform_int_distribution<std::size_t>(0, max_len)(rng));
    for (auto& b : v) b = byte(0, 255);
    return v;
  };
  auto text = [&](std::size_t max_len) {
    std::string s(std::uniform_int_distribution<std::size_t>(0, max_len)(rng), ' ');
    for (auto& c : s) c = static_cast<char>(byte(32, 126));
    return s;
  };
  auto f32v = [&] {
    // Bit-exact round trips matter more than pretty values; avoid NaN so the
    // JSON form stays comparable.
    return std::uniform_real_distribution<float>(-1e6f, 1e6f)(rng);
  };

  switch (byte(0, 4)) {
    case 0: {
      InitializationMsg m;
      m.device_id = rng();
      m.device_type = static_cast<DeviceKind>(byte(0, 3));
      std::size_t nn = byte(0, 4);
      for (std::size_t i = 0; i < nn; ++i) m.networks.push_back({text(12), f32v()});
      std::size_t nf = byte(0, 6);
      for (std::size_t i = 0; i < nf; ++i) {
        m.functions.push_back({static_cast<FunctionType>(byte(0, 7)), f32v()});
      }
      return m;
    }
    case 1: {
      ContextSensorMsg m;
      m.device_id = rng();
      m.battery_percent = byte(0, 100);
      m.charging = byte(0, 1) != 0;
      m.moving = static_cast<MovingState>(byte(0, 3));
      if (byte(0, 3) != 0) {
        m.network = static_cast<NetworkKind>(byte(0, 2));
        m.network_id = text(16);
      }
      m.avg_link_speed_bps = f32v();
      return m;
    }
    case 2: {
      ContextRequestMsg m;
      m.request_type = byte(0, 255);
      m.info = blob(64);
      return m;
    }
    case 3: {
      AssignmentsMsg m;
      std::size_t nr = byte(0, 6), nv = byte(0, 6);
      for (std::size_t i = 0; i < nr; ++i) m.request_device.emplace_back(byte(0, 255), byte(0, 255));
      for (std::size_t i = 0; i < nv; ++i) m.function_device.emplace_back(byte(0, 255), byte(0, 255));
      return m;
    }
    default: {
      DataMsg m;
      std::size_t ne = byte(0, 4);
      for (std::size_t i = 0; i < ne; ++i) m.entries.push_back({byte(0, 255), blob(48)});
      return m;
    }
  }
}

}  // namespace

TEST_CASE("golden fixtures: encoding matches an independent reference") {
  std::filesystem::path dir = std::string(AFV_TEST_DATA_DIR) + "/protocol";
  std::size_t checked = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    INFO("fixture " << entry.path().filename());
    std::ifstream f(entry.path());
    nlohmann::json j;
    f >> j;

    WireMessage msg = message_from_json(j.at("message"));
    std::vector<std::uint8_t> bytes = encode(msg);
    CHECK(to_hex(bytes) == j.at("hex").get<std::string>());
    CHECK(wire_size(msg) == bytes.size());

    WireMessage back = decode(from_hex(j.at("hex").get<std::string>()));
    CHECK(message_to_json(back) == j.at("message"));
    ++checked;
  }
  CHECK(checked >= 8);
}

TEST_CASE("encode/decode round-trips are byte-exact") {
  std::mt19937_64 rng(0xABCDEF);
  for (int iter = 0; iter < 10000; ++iter) {
    WireMessage msg = random_message(rng);
    std::vector<std::uint8_t> bytes = encode(msg);
    CHECK(bytes.size() == wire_size(msg));
    WireMessage back = decode(bytes);
    std::vector<std::uint8_t> bytes2 = encode(back);
    REQUIRE(bytes2 == bytes);
    // And the JSON forms agree too.
    REQUIRE(message_to_json(back) == message_to_json(msg));
  }
}

TEST_CASE("an empty data message is the bare type byte") {
  DataMsg m;
  CHECK(to_hex(encode(m)) == "05");
  WireMessage back = decode(from_hex("05"));
  CHECK(std::get<DataMsg>(back).entries.empty());
}

TEST_CASE("truncation at every split point is detected") {
  std::mt19937_64 rng(99);
  for (int iter = 0; iter < 200; ++iter) {
    WireMessage msg = random_message(rng);
    if (std::holds_alternative<DataMsg>(msg)) continue;  // entry boundaries are valid ends
    std::vector<std::uint8_t> bytes = encode(msg);
    for (std::size_t cut = 1; cut < bytes.size(); ++cut) {
      std::span<const std::uint8_t> prefix(bytes.data(), cut);
      CHECK_THROWS_AS(decode(prefix), TruncatedError);
    }
  }
}

TEST_CASE("data entries may only end on an entry boundary") {
  DataMsg m;
  m.entries.push_back({7, {1, 2, 3}});
  m.entries.push_back({8, {4}});
  std::vector<std::uint8_t> bytes = encode(m);

  // Cutting at the boundary between the entries yields a valid shorter message.
  std::size_t boundary = 1 + 1 + 4 + 3;
  WireMessage head = decode(std::span<const std::uint8_t>(bytes.data(), boundary));
  CHECK(std::get<DataMsg>(head).entries.size() == 1);

  for (std::size_t cut = 2; cut < bytes.size(); ++cut) {
    if (cut == boundary) continue;
    std::span<const std::uint8_t> prefix(bytes.data(), cut);
    CHECK_THROWS_AS(decode(prefix), TruncatedError);
  }
}

TEST_CASE("trailing bytes are rejected") {
  AssignmentsMsg m;
  m.request_device.emplace_back(2, 1);
  std::vector<std::uint8_t> bytes = encode(m);
  bytes.push_back(0x00);
  CHECK_THROWS_AS(decode(bytes), TrailingBytesError);
}

TEST_CASE("unknown message types are rejected") {
  for (std::uint8_t t : {0x00, 0x06, 0x7F, 0xFF}) {
    std::vector<std::uint8_t> bytes = {t};
    CHECK_THROWS_AS(decode(bytes), UnknownTypeError);
  }
}

TEST_CASE("decoder enforces declared value ranges") {
  auto mutate = [](const WireMessage& msg, std::size_t pos, std::uint8_t value) {
    std::vector<std::uint8_t> bytes = encode(msg);
    bytes[pos] = value;
    return bytes;
  };

  ContextSensorMsg ctx;
  ctx.device_id = 1;
  ctx.battery_percent = 50;
  ctx.moving = MovingState::Still;
  // layout: type(1) id(8) battery(1) charging(1) moving(1) net(1) len(1) speed(4)
  CHECK_THROWS_AS(decode(mutate(ctx, 9, 101)), InvalidEnumError);   // battery
  CHECK_THROWS_AS(decode(mutate(ctx, 10, 2)), InvalidEnumError);    // charging
  CHECK_THROWS_AS(decode(mutate(ctx, 11, 4)), InvalidEnumError);    // moving
  CHECK_THROWS_AS(decode(mutate(ctx, 12, 4)), InvalidEnumError);    // network kind

  InitializationMsg init;
  init.device_id = 2;
  init.functions.push_back({FunctionType::Accelerometer, 1.0f});
  // layout: type(1) id(8) devtype(1) n_nets(1) n_fns(1) fn_type(1) energy(4)
  CHECK_THROWS_AS(decode(mutate(init, 9, 4)), InvalidEnumError);    // device type
  CHECK_THROWS_AS(decode(mutate(init, 12, 8)), InvalidEnumError);   // function type
}

TEST_CASE("a network id without a connected network is invalid") {
  // Hand-build: network kind 0 (none) but a 2-byte id.
  std::vector<std::uint8_t> bytes = {0x02, 0, 0, 0, 0, 0, 0, 0, 1,  // id
                                     50, 0, 0,                      // battery charging moving
                                     0,  2, 'h', 'i',               // none + id?!
                                     0,  0, 0,   0};
  CHECK_THROWS_AS(decode(bytes), InvalidEnumError);

  ContextSensorMsg m;
  m.network_id = "ghost";
  CHECK_THROWS_AS(encode(m), FieldOverflowError);
}

TEST_CASE("encoder refuses fields that overflow their wire width") {
  ContextSensorMsg ctx;
  ctx.battery_percent = 101;
  CHECK_THROWS_AS(encode(ctx), FieldOverflowError);

  ctx.battery_percent = 100;
  ctx.network = NetworkKind::WiFi;
  ctx.network_id = std::string(256, 'x');
  CHECK_THROWS_AS(encode(ctx), FieldOverflowError);

  AssignmentsMsg assigns;
  assigns.request_device.assign(256, {0, 0});
  CHECK_THROWS_AS(encode(assigns), FieldOverflowError);

  InitializationMsg init;
  init.networks.assign(256, {"n", 0.0f});
  CHECK_THROWS_AS(encode(init), FieldOverflowError);
}

TEST_CASE("hex helpers reject malformed input") {
  CHECK_THROWS_AS(from_hex("abc"), ParseError);
  CHECK_THROWS_AS(from_hex("zz"), ParseError);
  CHECK(from_hex("0a 0B\n0c") == std::vector<std::uint8_t>({10, 11, 12}));
  CHECK(to_hex(std::vector<std::uint8_t>{0xDE, 0xAD}) == "dead");
}
