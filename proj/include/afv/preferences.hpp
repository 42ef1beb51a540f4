#ifndef AFV_PREFERENCES_HPP_
#define AFV_PREFERENCES_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "afv/errors.hpp"
#include "afv/types.hpp"

namespace afv {

// Row per registration, column per device, 1 = the device may serve the
// registration under the current context and preferences.
struct MappabilityMatrix {
  std::size_t n_requests = 0;
  std::size_t n_devices = 0;
  std::vector<std::uint8_t> cells;  // row-major

  std::uint8_t& at(std::size_t r, std::size_t d) { return cells[r * n_devices + d]; }
  std::uint8_t at(std::size_t r, std::size_t d) const { return cells[r * n_devices + d]; }

  bool row_all_zero(std::size_t r) const {
    for (std::size_t d = 0; d < n_devices; ++d) {
      if (at(r, d)) return false;
    }
    return true;
  }
};

struct MappabilityResult {
  MappabilityMatrix matrix;
  // Registrations whose row came out all-zero; the caller is expected to
  // drop them before building an allocation instance.
  std::vector<RegistrationId> infeasible;
};

namespace detail {

// Context names a preference rule may constrain.
inline bool known_rule_context(const std::string& name) {
  return name == "connectivity" || name == "moving" || name == "charging" ||
         name == "battery_min";
}

// Context values a forced mapping may trigger on.
inline bool known_forced_context(const std::string& name) {
  return name == "always" || name == "still" || name == "walking" ||
         name == "body_stretch" || name == "head_stretch" || name == "charging";
}

inline bool rule_satisfied(const std::string& name, const std::string& value,
                           const ContextSnapshot& ctx) {
  if (value == "any") return true;
  if (name == "connectivity") {
    if (!ctx.connected_network) return false;
    return value == to_string(ctx.connected_network->kind);
  }
  if (name == "moving") return value == to_string(ctx.moving);
  if (name == "charging") return (value == "true") == ctx.charging;
  if (name == "battery_min") {
    double threshold = 0.0;
    try {
      threshold = std::stod(value);
    } catch (const std::exception&) {
      throw ParseError("preference: battery_min value '" + value + "' is not a number");
    }
    return ctx.soc_percent >= threshold;
  }
  throw UnknownReference("preference rule references unknown context '" + name + "'");
}

inline bool forced_context_active(const std::string& name, const ContextSnapshot& origin) {
  if (name == "always") return true;
  if (name == "charging") return origin.charging;
  return name == to_string(origin.moving);
}

}  // namespace detail

// Builds the mappability matrix for the given registrations over the given
// devices.
//
// A device is mappable for a registration when it implements the requested
// function and every effective preference rule passes against the device's
// current context.  Rules merge by context name with priority
// Device > User > Application; the higher-priority rule replaces the lower
// one outright.  A forced mapping whose context is currently active (matched
// against the origin device's context) pins the registration to exactly that
// device.
//
// Throws UnknownReference when a preference names an unknown device, app or
// context.  Unknown registered contexts inside forced mappings also throw;
// a forced mapping pointing at a device that is absent or cannot implement
// the function yields an all-zero row instead (reported via `infeasible`).
inline MappabilityResult apply_preferences(std::span<const DeviceProfile> devices,
                                           std::span<const Registration> registrations,
                                           std::span<const Preference> preferences,
                                           std::span<const ContextSnapshot> contexts) {
  std::map<DeviceId, const ContextSnapshot*> ctx_by_device;
  for (const ContextSnapshot& c : contexts) ctx_by_device[c.device_id] = &c;
  std::map<DeviceId, std::size_t> device_index;
  for (std::size_t d = 0; d < devices.size(); ++d) device_index[devices[d].device_id] = d;

  // Validate references up front so a typo fails loudly no matter which rows
  // it would have touched.
  for (const Preference& p : preferences) {
    if (p.scope == PreferenceScope::Device) {
      DeviceId id = 0;
      try {
        id = static_cast<DeviceId>(std::stoull(p.subject));
      } catch (const std::exception&) {
        throw UnknownReference("device preference subject '" + p.subject +
                               "' is not a device id");
      }
      if (!device_index.count(id)) {
        throw UnknownReference("device preference references unknown device " + p.subject);
      }
    } else {
      bool known_app = false;
      for (const Registration& r : registrations) {
        if (r.app_id == p.subject) {
          known_app = true;
          break;
        }
      }
      if (!known_app) {
        throw UnknownReference("preference references unknown app '" + p.subject + "'");
      }
    }
    for (const auto& [name, value] : p.rules) {
      if (!detail::known_rule_context(name)) {
        throw UnknownReference("preference rule references unknown context '" + name + "'");
      }
      (void)value;
    }
  }
  for (const Registration& r : registrations) {
    for (const auto& [ctx_name, dev] : r.forced_mapping) {
      if (!detail::known_forced_context(ctx_name)) {
        throw UnknownReference("forced mapping references unknown context '" + ctx_name + "'");
      }
      (void)dev;
    }
  }

  MappabilityResult out;
  out.matrix.n_requests = registrations.size();
  out.matrix.n_devices = devices.size();
  out.matrix.cells.assign(registrations.size() * devices.size(), 0);

  for (std::size_t r = 0; r < registrations.size(); ++r) {
    const Registration& reg = registrations[r];

    // Rules that apply to this registration, merged by context name in
    // ascending priority so later scopes overwrite earlier ones.  Device
    // scope is handled per device below.
    std::map<std::string, std::string> app_user_rules;
    for (PreferenceScope scope : {PreferenceScope::Application, PreferenceScope::User}) {
      for (const Preference& p : preferences) {
        if (p.scope != scope || p.subject != reg.app_id) continue;
        for (const auto& [name, value] : p.rules) app_user_rules[name] = value;
      }
    }

    for (std::size_t d = 0; d < devices.size(); ++d) {
      const DeviceProfile& dev = devices[d];
      if (!dev.implements(reg.function)) continue;

      auto ctx_it = ctx_by_device.find(dev.device_id);
      if (ctx_it == ctx_by_device.end()) continue;  // no context, cannot judge rules
      const ContextSnapshot& ctx = *ctx_it->second;

      std::map<std::string, std::string> rules = app_user_rules;
      for (const Preference& p : preferences) {
        if (p.scope != PreferenceScope::Device) continue;
        if (p.subject != std::to_string(dev.device_id)) continue;
        for (const auto& [name, value] : p.rules) rules[name] = value;
      }

      bool ok = true;
      for (const auto& [name, value] : rules) {
        if (!detail::rule_satisfied(name, value, ctx)) {
          ok = false;
          break;
        }
      }
      if (ok) out.matrix.at(r, d) = 1;
    }

    // Forced mapping: the first entry whose context is active wins and pins
    // the row to that device alone.
    auto origin_ctx = ctx_by_device.find(reg.origin_device);
    if (origin_ctx != ctx_by_device.end()) {
      for (const auto& [ctx_name, dev_id] : reg.forced_mapping) {
        if (!detail::forced_context_active(ctx_name, *origin_ctx->second)) continue;
        auto pin = device_index.find(dev_id);
        for (std::size_t d = 0; d < devices.size(); ++d) {
          bool keep = pin != device_index.end() && d == pin->second &&
                      devices[d].implements(reg.function);
          out.matrix.at(r, d) = keep ? 1 : 0;
        }
        break;
      }
    }

    if (out.matrix.row_all_zero(r)) out.infeasible.push_back(reg.registration_id);
  }
  return out;
}

}  // namespace afv

#endif  // AFV_PREFERENCES_HPP_
