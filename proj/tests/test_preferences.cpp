#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "afv/preferences.hpp"

namespace {

using namespace afv;

DeviceProfile device(DeviceId id, DeviceKind kind, std::vector<FunctionType> fns) {
  DeviceProfile d;
  d.device_id = id;
  d.kind = kind;
  d.battery_capacity_mah = 1000.0;
  for (FunctionType f : fns) d.implementations.push_back({f, 0.0});
  return d;
}

struct Fixture {
  std::vector<DeviceProfile> devices;
  std::vector<Registration> regs;
  std::vector<ContextSnapshot> ctx;

  Fixture() {
    devices = {
        device(1, DeviceKind::Phone,
               {FunctionType::Accelerometer, FunctionType::Gyroscope, FunctionType::Compression}),
        device(2, DeviceKind::Watch, {FunctionType::Accelerometer, FunctionType::HeartRate}),
        device(3, DeviceKind::Glass, {FunctionType::Accelerometer}),
    };
    Registration r0;
    r0.registration_id = 10;
    r0.app_id = "fitness";
    r0.function = FunctionType::Accelerometer;
    r0.origin_device = 1;
    Registration r1;
    r1.registration_id = 11;
    r1.app_id = "health";
    r1.function = FunctionType::HeartRate;
    r1.origin_device = 2;
    Registration r2;
    r2.registration_id = 12;
    r2.app_id = "fitness";
    r2.function = FunctionType::Gyroscope;
    r2.origin_device = 1;
    regs = {r0, r1, r2};

    for (DeviceId id : {1, 2, 3}) {
      ContextSnapshot c;
      c.device_id = id;
      c.soc_percent = 100.0;
      ctx.push_back(c);
    }
  }

  MappabilityResult run(std::vector<Preference> prefs = {}) {
    return apply_preferences(devices, regs, prefs, ctx);
  }
};

}  // namespace

TEST_CASE("without preferences mappability equals capability") {
  Fixture f;
  auto res = f.run();
  REQUIRE(res.matrix.n_requests == 3);
  REQUIRE(res.matrix.n_devices == 3);
  // accelerometer: everywhere
  CHECK(res.matrix.at(0, 0) == 1);
  CHECK(res.matrix.at(0, 1) == 1);
  CHECK(res.matrix.at(0, 2) == 1);
  // heart rate: watch only
  CHECK(res.matrix.at(1, 0) == 0);
  CHECK(res.matrix.at(1, 1) == 1);
  CHECK(res.matrix.at(1, 2) == 0);
  // gyroscope: phone only
  CHECK(res.matrix.at(2, 0) == 1);
  CHECK(res.matrix.at(2, 1) == 0);
  CHECK(res.matrix.at(2, 2) == 0);
  CHECK(res.infeasible.empty());
}

TEST_CASE("device rule removes the device while its context fails") {
  Fixture f;
  Preference p{PreferenceScope::Device, "2", {{"charging", "true"}}};

  auto res = f.run({p});
  CHECK(res.matrix.at(0, 1) == 0);
  CHECK(res.matrix.at(1, 1) == 0);
  // heart-rate registration lost its only device
  REQUIRE(res.infeasible.size() == 1);
  CHECK(res.infeasible[0] == 11);

  f.ctx[1].charging = true;
  res = f.run({p});
  CHECK(res.matrix.at(0, 1) == 1);
  CHECK(res.infeasible.empty());
}

TEST_CASE("battery_min compares against the device state of charge") {
  Fixture f;
  f.ctx[2].soc_percent = 30.0;
  Preference p{PreferenceScope::Device, "3", {{"battery_min", "50"}}};
  auto res = f.run({p});
  CHECK(res.matrix.at(0, 2) == 0);
  f.ctx[2].soc_percent = 50.0;  // inclusive threshold
  res = f.run({p});
  CHECK(res.matrix.at(0, 2) == 1);
}

TEST_CASE("user rules bind only the matching app and evaluate per device") {
  Fixture f;
  Preference p{PreferenceScope::User, "fitness", {{"moving", "walking"}}};
  f.ctx[0].moving = MovingState::Walking;  // phone walks, others still
  auto res = f.run({p});
  // fitness requests: phone passes, watch and glass fail
  CHECK(res.matrix.at(0, 0) == 1);
  CHECK(res.matrix.at(0, 1) == 0);
  CHECK(res.matrix.at(0, 2) == 0);
  CHECK(res.matrix.at(2, 0) == 1);
  // health app untouched
  CHECK(res.matrix.at(1, 1) == 1);
}

TEST_CASE("higher-priority scopes replace lower-priority rules by context name") {
  Fixture f;  // nobody is connected, so a connectivity requirement fails
  Preference app{PreferenceScope::Application, "fitness", {{"connectivity", "bluetooth"}}};
  auto res = f.run({app});
  CHECK(res.matrix.row_all_zero(0));

  // User scope overrides the application rule with the always-pass value.
  Preference user{PreferenceScope::User, "fitness", {{"connectivity", "any"}}};
  res = f.run({app, user});
  CHECK(res.matrix.at(0, 0) == 1);

  // Device scope overrides both, for its own device only.
  Preference dev{PreferenceScope::Device, "1", {{"connectivity", "bluetooth"}}};
  res = f.run({app, user, dev});
  CHECK(res.matrix.at(0, 0) == 0);
  CHECK(res.matrix.at(0, 1) == 1);
}

TEST_CASE("forced mapping pins to one device while its context is active") {
  Fixture f;
  f.regs[0].forced_mapping = {{"walking", 2}};

  auto res = f.run();  // origin still: no pin
  CHECK(res.matrix.at(0, 0) == 1);

  f.ctx[0].moving = MovingState::Walking;  // origin is the phone
  res = f.run();
  CHECK(res.matrix.at(0, 0) == 0);
  CHECK(res.matrix.at(0, 1) == 1);
  CHECK(res.matrix.at(0, 2) == 0);
}

TEST_CASE("forced mapping 'always' wins over later entries and preferences") {
  Fixture f;
  f.regs[0].forced_mapping = {{"always", 3}, {"walking", 2}};
  f.ctx[0].moving = MovingState::Walking;
  auto res = f.run();
  CHECK(res.matrix.at(0, 2) == 1);
  CHECK(res.matrix.at(0, 1) == 0);
}

TEST_CASE("forced mapping to an incapable device yields an infeasible row") {
  Fixture f;
  f.regs[2].forced_mapping = {{"always", 2}};  // watch has no gyroscope
  auto res = f.run();
  CHECK(res.matrix.row_all_zero(2));
  REQUIRE(res.infeasible.size() == 1);
  CHECK(res.infeasible[0] == 12);
}

TEST_CASE("a function nobody implements is reported infeasible") {
  Fixture f;
  f.regs[1].function = FunctionType::Magnetometer;
  auto res = f.run();
  REQUIRE(res.infeasible.size() == 1);
  CHECK(res.infeasible[0] == 11);
}

TEST_CASE("bad references are rejected up front") {
  Fixture f;
  CHECK_THROWS_AS(f.run({{PreferenceScope::Device, "99", {{"charging", "true"}}}}),
                  afv::UnknownReference);
  CHECK_THROWS_AS(f.run({{PreferenceScope::Device, "not-a-number", {}}}),
                  afv::UnknownReference);
  CHECK_THROWS_AS(f.run({{PreferenceScope::User, "no-such-app", {}}}), afv::UnknownReference);
  CHECK_THROWS_AS(f.run({{PreferenceScope::User, "fitness", {{"altitude", "high"}}}}),
                  afv::UnknownReference);
  f.regs[0].forced_mapping = {{"sprinting", 2}};
  CHECK_THROWS_AS(f.run(), afv::UnknownReference);
}

TEST_CASE("battery_min with a non-numeric value is a parse error") {
  Fixture f;
  CHECK_THROWS_AS(f.run({{PreferenceScope::Device, "1", {{"battery_min", "lots"}}}}),
                  afv::ParseError);
}
