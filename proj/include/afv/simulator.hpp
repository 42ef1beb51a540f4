#ifndef AFV_SIMULATOR_HPP_
#define AFV_SIMULATOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "afv/aggregate.hpp"
#include "afv/energy.hpp"
#include "afv/errors.hpp"
#include "afv/fap.hpp"
#include "afv/preferences.hpp"
#include "afv/protocol.hpp"
#include "afv/types.hpp"

namespace afv {

// ─── context monitor ───
//
// Watches the raw per-device context and decides which changes are worth a
// broadcast (and hence a re-allocation).  Battery only matters when it first
// falls to the configured threshold — ordinary percent ticks stay silent.
// Charging and network flips report immediately.  Activity (the user's moving
// state, mirrored into every device's context) is debounced: it must hold
// steady for the configured time before it becomes effective.

struct MonitorConfig {
  double battery_threshold_pct = 20.0;
  double activity_debounce_s = 10.0;
};

struct MonitorEvent {
  double time_s = 0.0;
  DeviceId device = 0;
  std::string reason;  // "battery_low" | "charging" | "network" | "activity"
  ContextSnapshot effective;
};

class ContextMonitor {
 public:
  explicit ContextMonitor(MonitorConfig cfg = {}) : cfg_(cfg) {}

  const MonitorConfig& config() const { return cfg_; }

  void attach(const ContextSnapshot& initial) {
    state_[initial.device_id] = State{initial, initial.soc_percent > cfg_.battery_threshold_pct};
  }

  void detach(DeviceId d) { state_.erase(d); }

  bool attached(DeviceId d) const { return state_.count(d) != 0; }

  const ContextSnapshot& effective(DeviceId d) const { return state_.at(d).snapshot; }

  std::vector<ContextSnapshot> snapshot_all() const {
    std::vector<ContextSnapshot> out;
    out.reserve(state_.size());
    for (const auto& [id, s] : state_) out.push_back(s.snapshot);
    return out;
  }

  // Raw battery reading.  The level itself is always recorded; an event fires
  // only when the reading first reaches the threshold from above.  The small
  // slack absorbs the rounding of analytically computed crossing times.
  std::optional<MonitorEvent> battery(double t, DeviceId d, double soc_percent) {
    State& s = state_.at(d);
    s.snapshot.soc_percent = soc_percent;
    if (s.above_threshold && soc_percent <= cfg_.battery_threshold_pct + 1e-9) {
      s.above_threshold = false;
      return MonitorEvent{t, d, "battery_low", s.snapshot};
    }
    if (!s.above_threshold && soc_percent > cfg_.battery_threshold_pct + 1e-9) {
      s.above_threshold = true;  // silent recovery
    }
    return std::nullopt;
  }

  std::optional<MonitorEvent> charging(double t, DeviceId d, bool on) {
    State& s = state_.at(d);
    if (s.snapshot.charging == on) return std::nullopt;
    s.snapshot.charging = on;
    return MonitorEvent{t, d, "charging", s.snapshot};
  }

  std::optional<MonitorEvent> network(double t, DeviceId d,
                                      std::optional<NetworkProfile> net) {
    State& s = state_.at(d);
    const auto& cur = s.snapshot.connected_network;
    bool same = (!cur && !net) ||
                (cur && net && cur->kind == net->kind && cur->network_id == net->network_id);
    s.snapshot.connected_network = std::move(net);
    if (same) return std::nullopt;
    return MonitorEvent{t, d, "network", s.snapshot};
  }

  // User-level activity change.  Returns the deadline at which the new state
  // becomes effective, or nullopt when the change cancelled out (the user
  // returned to the effective state before the debounce matured).
  std::optional<double> activity(double t, MovingState m) {
    MovingState effective_now =
        state_.empty() ? MovingState::Still : state_.begin()->second.snapshot.moving;
    if (m == effective_now) {
      pending_.reset();
      return std::nullopt;
    }
    pending_ = m;
    deadline_ = t + cfg_.activity_debounce_s;
    return deadline_;
  }

  std::optional<double> activity_deadline() const {
    return pending_ ? std::optional<double>(deadline_) : std::nullopt;
  }

  // Applies a matured activity change to every device (the user carries all
  // of them at once).  Call at the deadline returned by activity().
  std::vector<MonitorEvent> flush_activity(double t) {
    std::vector<MonitorEvent> out;
    if (!pending_) return out;
    for (auto& [id, s] : state_) {
      s.snapshot.moving = *pending_;
      out.push_back(MonitorEvent{t, id, "activity", s.snapshot});
    }
    pending_.reset();
    return out;
  }

 private:
  struct State {
    ContextSnapshot snapshot;
    bool above_threshold = true;
  };
  MonitorConfig cfg_;
  std::map<DeviceId, State> state_;
  std::optional<MovingState> pending_;
  double deadline_ = 0.0;
};

// ─── scenario ───

enum class AllocationStrategy : std::uint8_t { Fap = 0, All = 1, Manual = 2, Exact = 3 };

inline const char* to_string(AllocationStrategy s) {
  switch (s) {
    case AllocationStrategy::Fap: return "fap";
    case AllocationStrategy::All: return "all";
    case AllocationStrategy::Manual: return "manual";
    case AllocationStrategy::Exact: return "exact";
  }
  return "?";
}

inline AllocationStrategy parse_allocation_strategy(const std::string& s) {
  static constexpr AllocationStrategy all[] = {AllocationStrategy::Fap, AllocationStrategy::All,
                                               AllocationStrategy::Manual,
                                               AllocationStrategy::Exact};
  return detail::parse_enum(s, all, "allocation strategy");
}

// Energy the network pays when it (re)forms with n participants: discovery
// plus capability exchange.  Affine in the participant count; a device alone
// pays nothing.
struct FormationOverhead {
  double base_j = 1.8;
  double per_extra_device_j = 0.6;

  double total_j(std::size_t n_devices) const {
    if (n_devices <= 1) return 0.0;
    return base_j + per_extra_device_j * static_cast<double>(n_devices - 1);
  }
};

struct ScenarioDevice {
  DeviceProfile profile;
  double initial_soc_percent = 100.0;
  double baseline_power_mw = 0.0;
  double join_s = 0.0;
  bool charging = false;
  MovingState moving = MovingState::Still;
  std::optional<std::string> connected_network_id;  // one of profile.networks
};

struct ScriptedEvent {
  double time_s = 0.0;
  std::string kind;  // set_moving | set_charging | set_network | register | unregister | leave
  DeviceId device = 0;
  MovingState moving = MovingState::Still;
  bool charging = false;
  std::optional<NetworkProfile> network;
  Registration registration;
  RegistrationId registration_id = 0;
};

struct Scenario {
  std::string name;
  ObjectiveMode objective = ObjectiveMode::Energy;
  AllocationStrategy strategy = AllocationStrategy::Fap;
  std::optional<DeviceId> manual_device;
  std::uint64_t manual_seed = 1;
  MasterRule master_rule = MasterRule::MaxSocPerPower;
  std::optional<double> horizon_s;
  double battery_threshold_pct = 20.0;
  double activity_debounce_s = 10.0;
  FormationOverhead formation;
  std::optional<double> sample_every_s;
  std::vector<ScenarioDevice> devices;
  std::vector<Registration> registrations;
  std::vector<Preference> preferences;
  std::vector<ScriptedEvent> events;

  void validate() const {
    if (devices.empty()) throw ParseError("scenario: needs at least one device");
    std::set<DeviceId> ids;
    for (const ScenarioDevice& d : devices) {
      d.profile.validate();
      if (d.profile.tier != 1) {
        throw ParseError(
            "scenario: only tier 1 devices participate in the simulation; "
            "fold tier 2 sensors into their host's implementation list");
      }
      if (!ids.insert(d.profile.device_id).second) {
        throw ParseError("scenario: duplicate device id " + std::to_string(d.profile.device_id));
      }
      if (d.initial_soc_percent < 0.0 || d.initial_soc_percent > 100.0) {
        throw ParseError("scenario: initial state of charge must be within [0, 100]");
      }
      if (d.baseline_power_mw < 0.0) {
        throw ParseError("scenario: baseline power must be non-negative");
      }
      if (d.join_s < 0.0) throw ParseError("scenario: join time must be non-negative");
      if (d.connected_network_id) {
        bool found = false;
        for (const auto& n : d.profile.networks) {
          found = found || n.network_id == *d.connected_network_id;
        }
        if (!found) {
          throw ParseError("scenario: device " + std::to_string(d.profile.device_id) +
                           " is connected to an undeclared network");
        }
      }
    }
    std::set<RegistrationId> rids;
    for (const Registration& r : registrations) {
      r.validate();
      if (!ids.count(r.origin_device)) {
        throw ParseError("scenario: registration " + std::to_string(r.registration_id) +
                         " originates on unknown device " + std::to_string(r.origin_device));
      }
      if (!rids.insert(r.registration_id).second) {
        throw ParseError("scenario: duplicate registration id " +
                         std::to_string(r.registration_id));
      }
    }
    if (strategy == AllocationStrategy::Manual && manual_device && !ids.count(*manual_device)) {
      throw ParseError("scenario: manual device is not part of the network");
    }
    for (const ScriptedEvent& e : events) {
      if (e.time_s < 0.0) throw ParseError("scenario: event times must be non-negative");
      if (e.kind == "set_charging" || e.kind == "set_network" || e.kind == "leave") {
        if (!ids.count(e.device)) {
          throw ParseError("scenario: event at " + std::to_string(e.time_s) +
                           "s references unknown device " + std::to_string(e.device));
        }
      } else if (e.kind == "register") {
        e.registration.validate();
        if (!ids.count(e.registration.origin_device)) {
          throw ParseError("scenario: scripted registration originates on unknown device");
        }
      } else if (e.kind != "set_moving" && e.kind != "unregister") {
        throw ParseError("scenario: unknown event kind '" + e.kind + "'");
      }
    }
    if (horizon_s && *horizon_s <= 0.0) throw ParseError("scenario: horizon must be positive");
    if (sample_every_s) {
      if (*sample_every_s <= 0.0) {
        throw ParseError("scenario: sample interval must be positive");
      }
      if (!horizon_s) {
        throw ParseError("scenario: sampling requires a finite horizon");
      }
    }
  }
};

// ─── scenario JSON ───

namespace detail {

inline NetworkProfile network_from_json(const nlohmann::json& j) {
  NetworkProfile n;
  n.kind = parse_network_kind(j.at("kind").get<std::string>());
  n.network_id = j.at("id").get<std::string>();
  n.monetary_cost_per_mb = j.value("monetary_cost_per_mb", 0.0);
  n.avg_link_speed_bps = j.value("avg_link_speed_bps", 0.0);
  return n;
}

inline Registration registration_from_json(const nlohmann::json& j) {
  Registration r;
  r.registration_id = j.at("registration_id").get<RegistrationId>();
  r.app_id = j.at("app_id").get<std::string>();
  r.function = parse_function_type(j.at("function").get<std::string>());
  r.origin_device = j.at("origin_device").get<DeviceId>();
  r.sampling_speed = parse_sampling_speed(j.value("sampling_speed", "normal"));
  r.report_interval_s = j.value("report_interval_s", 60.0);
  r.payload_bytes_per_report = j.value("payload_bytes_per_report", std::uint64_t(0));
  r.start_s = j.value("start_s", 0.0);
  for (const auto& fm : j.value("forced_mapping", nlohmann::json::array())) {
    r.forced_mapping.emplace_back(fm.at("context").get<std::string>(),
                                  fm.at("device").get<DeviceId>());
  }
  return r;
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  s.name = j.value("name", "scenario");
  s.objective = parse_objective_mode(j.value("objective", "energy"));
  s.strategy = parse_allocation_strategy(j.value("allocation_strategy", "fap"));
  if (j.contains("manual_device") && !j.at("manual_device").is_null()) {
    s.manual_device = j.at("manual_device").get<DeviceId>();
  }
  s.manual_seed = j.value("manual_seed", std::uint64_t(1));
  if (j.value("master_rule", "max_soc_per_power") == std::string("min_soc_per_power")) {
    s.master_rule = MasterRule::MinSocPerPower;
  }
  if (j.contains("horizon_s") && !j.at("horizon_s").is_null()) {
    s.horizon_s = j.at("horizon_s").get<double>();
  }
  s.battery_threshold_pct = j.value("battery_threshold_pct", 20.0);
  s.activity_debounce_s = j.value("activity_debounce_s", 10.0);
  if (j.contains("formation_overhead")) {
    const auto& f = j.at("formation_overhead");
    s.formation.base_j = f.value("base_j", 1.8);
    s.formation.per_extra_device_j = f.value("per_extra_device_j", 0.6);
  }
  if (j.contains("sample_every_s") && !j.at("sample_every_s").is_null()) {
    s.sample_every_s = j.at("sample_every_s").get<double>();
  }

  for (const auto& dj : j.at("devices")) {
    ScenarioDevice d;
    d.profile.device_id = dj.at("device_id").get<DeviceId>();
    d.profile.kind = parse_device_kind(dj.at("kind").get<std::string>());
    d.profile.tier = dj.value("tier", 1);
    d.profile.battery_capacity_mah = dj.value("battery_capacity_mah", 0.0);
    d.profile.cell_voltage_v = dj.value("cell_voltage_v", 3.8);
    if (dj.contains("paired_host") && !dj.at("paired_host").is_null()) {
      d.profile.paired_host = dj.at("paired_host").get<DeviceId>();
    }
    for (const auto& nj : dj.value("networks", nlohmann::json::array())) {
      d.profile.networks.push_back(detail::network_from_json(nj));
    }
    for (const auto& fj : dj.value("implements", nlohmann::json::array())) {
      d.profile.implementations.push_back({parse_function_type(fj.get<std::string>()), 0.0});
    }
    d.initial_soc_percent = dj.value("initial_soc_percent", 100.0);
    d.baseline_power_mw = dj.value("baseline_power_mw", 0.0);
    d.join_s = dj.value("join_s", 0.0);
    d.charging = dj.value("charging", false);
    d.moving = parse_moving_state(dj.value("moving", "still"));
    if (dj.contains("connected_network") && !dj.at("connected_network").is_null()) {
      d.connected_network_id = dj.at("connected_network").get<std::string>();
    }
    s.devices.push_back(std::move(d));
  }

  for (const auto& rj : j.value("registrations", nlohmann::json::array())) {
    s.registrations.push_back(detail::registration_from_json(rj));
  }

  for (const auto& pj : j.value("preferences", nlohmann::json::array())) {
    Preference p;
    p.scope = parse_preference_scope(pj.at("scope").get<std::string>());
    p.subject = pj.at("subject").get<std::string>();
    const nlohmann::json rules = pj.value("rules", nlohmann::json::object());
    for (const auto& [name, value] : rules.items()) {
      p.rules.emplace_back(name, value.get<std::string>());
    }
    s.preferences.push_back(std::move(p));
  }

  for (const auto& ej : j.value("events", nlohmann::json::array())) {
    ScriptedEvent e;
    e.time_s = ej.at("time_s").get<double>();
    e.kind = ej.at("kind").get<std::string>();
    if (e.kind == "set_moving") {
      e.moving = parse_moving_state(ej.at("moving").get<std::string>());
    } else if (e.kind == "set_charging") {
      e.device = ej.at("device").get<DeviceId>();
      e.charging = ej.at("charging").get<bool>();
    } else if (e.kind == "set_network") {
      e.device = ej.at("device").get<DeviceId>();
      if (!ej.at("network").is_null()) {
        e.network = detail::network_from_json(ej.at("network"));
      }
    } else if (e.kind == "register") {
      e.registration = detail::registration_from_json(ej.at("registration"));
    } else if (e.kind == "unregister") {
      e.registration_id = ej.at("registration_id").get<RegistrationId>();
    } else if (e.kind == "leave") {
      e.device = ej.at("device").get<DeviceId>();
    }
    s.events.push_back(std::move(e));
  }

  s.validate();
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw ParseError("cannot open scenario file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("scenario '" + path + "': " + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("scenario '" + path + "': " + e.what());
  }
}

// ─── simulation results ───

struct TraceRow {
  double time_s = 0.0;
  DeviceId device = 0;
  double soc_percent = 0.0;
  double energy_j = 0.0;
  double power_mw = 0.0;
  std::string event;
};

struct DeviceOutcome {
  DeviceId device_id = 0;
  DeviceKind kind = DeviceKind::Phone;
  double capacity_j = 0.0;
  double initial_soc_percent = 100.0;
  double final_soc_percent = 0.0;
  std::optional<double> death_s;
  double uptime_s = 0.0;
  double drained_j = 0.0;    // continuous draw
  double formation_j = 0.0;  // discrete network-formation charges
};

struct LoggedMessage {
  double time_s = 0.0;
  DeviceId sender = 0;
  std::string type;
  std::size_t bytes = 0;
};

struct SimResult {
  std::string scenario_name;
  double end_s = 0.0;
  std::vector<DeviceOutcome> devices;
  std::size_t reallocations = 0;
  std::size_t formation_events = 0;
  std::uint64_t data_reports = 0;
  std::map<std::string, std::size_t> message_counts;
  std::size_t control_bytes = 0;
  std::vector<RegistrationId> unserved;  // had no mappable device at some point
  double total_drained_j = 0.0;
  double total_formation_j = 0.0;
  double conservation_error_j = 0.0;
  std::vector<TraceRow> trace;
  std::vector<LoggedMessage> messages;
};

inline nlohmann::json result_to_json(const SimResult& r) {
  nlohmann::json j;
  j["scenario"] = r.scenario_name;
  j["end_s"] = r.end_s;
  j["devices"] = nlohmann::json::array();
  for (const DeviceOutcome& d : r.devices) {
    nlohmann::json dj;
    dj["device_id"] = d.device_id;
    dj["kind"] = to_string(d.kind);
    dj["capacity_j"] = d.capacity_j;
    dj["initial_soc_percent"] = d.initial_soc_percent;
    dj["final_soc_percent"] = d.final_soc_percent;
    dj["death_s"] = d.death_s ? nlohmann::json(*d.death_s) : nlohmann::json(nullptr);
    dj["uptime_s"] = d.uptime_s;
    dj["uptime_h"] = d.uptime_s / 3600.0;
    dj["drained_j"] = d.drained_j;
    dj["formation_j"] = d.formation_j;
    j["devices"].push_back(std::move(dj));
  }
  j["reallocations"] = r.reallocations;
  j["formation_events"] = r.formation_events;
  j["data_reports"] = r.data_reports;
  j["message_counts"] = r.message_counts;
  j["control_bytes"] = r.control_bytes;
  j["unserved"] = r.unserved;
  j["total_drained_j"] = r.total_drained_j;
  j["total_formation_j"] = r.total_formation_j;
  j["conservation_error_j"] = r.conservation_error_j;
  return j;
}

inline void write_trace_csv(const SimResult& r, std::ostream& out) {
  out << "time_s,device_id,soc_percent,energy_j,power_mw,event\n";
  for (const TraceRow& row : r.trace) {
    out << row.time_s << ',' << row.device << ',' << row.soc_percent << ',' << row.energy_j
        << ',' << row.power_mw << ',' << row.event << '\n';
  }
}

// ─── the simulator ───
//
// Event-driven with piecewise-constant power: between events every live,
// non-charging device drains at (baseline + allocated work), and battery
// threshold / depletion times are computed analytically, so results are
// exact and independent of any tick width.

class Simulator {
 public:
  Simulator(Scenario scenario, EnergyCatalog catalog)
      : scn_(std::move(scenario)), cat_(std::move(catalog)) {
    scn_.validate();
  }

  SimResult run() {
    init_state();
    bootstrap();
    loop();
    finalize();
    return std::move(result_);
  }

 private:
  // ── event plumbing ──
  //
  // Same-timestamp events settle in a fixed rank order: deaths first (a dead
  // device must not receive work), then scripted actions, then computed
  // battery crossings, debounces and registration starts, with bookkeeping
  // (samples, horizon) last.  One re-allocation runs per timestamp batch.

  enum EventKind : int {
    kDeath = 0,
    kScripted = 1,
    kJoin = 2,
    kThreshold = 3,
    kDebounce = 4,
    kRegistrationStart = 5,
    kSample = 6,
    kHorizon = 7,
  };

  static int rank(int kind) {
    switch (kind) {
      case kDeath: return 0;
      case kScripted: return 1;
      case kJoin: return 1;
      case kThreshold: return 2;
      case kDebounce: return 3;
      case kRegistrationStart: return 4;
      case kSample: return 5;
      case kHorizon: return 6;
    }
    return 9;
  }

  struct QueuedEvent {
    double t = 0.0;
    int prio = 0;
    std::uint64_t seq = 0;
    int kind = 0;
    std::size_t index = 0;    // scripted / registration / device index
    std::uint64_t gen = 0;    // staleness check for computed events

    bool operator>(const QueuedEvent& o) const {
      if (t != o.t) return t > o.t;
      if (prio != o.prio) return prio > o.prio;
      return seq > o.seq;
    }
  };

  struct DeviceState {
    ScenarioDevice cfg;
    bool joined = false;
    bool alive = false;    // joined and battery not exhausted
    bool present = false;  // alive and has not left the network
    double energy_j = 0.0;
    double power_mw = 0.0;
    std::uint64_t gen = 0;  // bumped whenever the drain slope changes
    DeviceOutcome outcome;
  };

  struct ActiveAssignment {
    Registration merged;  // merged view of the request group
    std::vector<RegistrationId> members;
    std::size_t executor = 0;  // device state index
    double since_s = 0.0;
  };

  // ── setup ──

  void init_state() {
    result_ = SimResult{};
    result_.scenario_name = scn_.name;
    monitor_ = ContextMonitor({scn_.battery_threshold_pct, scn_.activity_debounce_s});
    devices_.clear();
    for (const ScenarioDevice& sd : scn_.devices) {
      DeviceState st;
      st.cfg = sd;
      st.energy_j = sd.profile.capacity_joules() * sd.initial_soc_percent / 100.0;
      st.outcome.device_id = sd.profile.device_id;
      st.outcome.kind = sd.profile.kind;
      st.outcome.capacity_j = sd.profile.capacity_joules();
      st.outcome.initial_soc_percent = sd.initial_soc_percent;
      devices_.push_back(std::move(st));
    }
    now_ = 0.0;
    queue_ = {};
    seq_ = 0;
    debounce_gen_ = 0;
    active_regs_.clear();
    assignments_.clear();
    master_.reset();

    for (std::size_t i = 0; i < scn_.events.size(); ++i) {
      schedule(scn_.events[i].time_s, kScripted, i, 0);
    }
    for (std::size_t i = 0; i < scn_.registrations.size(); ++i) {
      if (scn_.registrations[i].start_s > 0.0) {
        schedule(scn_.registrations[i].start_s, kRegistrationStart, i, 0);
      }
    }
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      if (devices_[i].cfg.join_s > 0.0) schedule(devices_[i].cfg.join_s, kJoin, i, 0);
    }
    if (scn_.horizon_s) schedule(*scn_.horizon_s, kHorizon, 0, 0);
    if (scn_.sample_every_s && scn_.horizon_s) {
      for (double t = *scn_.sample_every_s; t < *scn_.horizon_s; t += *scn_.sample_every_s) {
        schedule(t, kSample, 0, 0);
      }
    }
  }

  void bootstrap() {
    bool formed = false;
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      if (devices_[i].cfg.join_s <= 0.0) {
        join_device(i);
        formed = true;
      }
    }
    for (const Registration& r : scn_.registrations) {
      if (r.start_s <= 0.0) activate_registration(r);
    }
    if (formed) {
      charge_formation();
      elect_master();
    }
    reallocate();
    trace_all("bootstrap");
    reschedule_crossings();
  }

  // ── main loop ──

  void loop() {
    while (!queue_.empty()) {
      double t = queue_.top().t;
      if (scn_.horizon_s && t > *scn_.horizon_s) break;
      advance_to(t);

      bool realloc_needed = false;
      bool formation_needed = false;
      bool stop = false;
      std::vector<std::string> labels;

      while (!queue_.empty() && queue_.top().t == t) {
        QueuedEvent ev = queue_.top();
        queue_.pop();
        switch (ev.kind) {
          case kDeath: {
            DeviceState& d = devices_[ev.index];
            if (ev.gen != d.gen || !d.alive) break;
            kill_device(ev.index);
            labels.push_back("death:" + std::to_string(d.cfg.profile.device_id));
            realloc_needed = true;
            formation_needed = true;
            break;
          }
          case kThreshold: {
            DeviceState& d = devices_[ev.index];
            if (ev.gen != d.gen || !d.alive || !d.present) break;
            auto mev = monitor_.battery(t, d.cfg.profile.device_id, soc_of(d));
            if (mev) {
              emit_context(*mev);
              labels.push_back("battery_low:" + std::to_string(d.cfg.profile.device_id));
              realloc_needed = true;
            }
            break;
          }
          case kScripted:
            apply_scripted(scn_.events[ev.index], labels, realloc_needed, formation_needed);
            break;
          case kJoin: {
            DeviceState& d = devices_[ev.index];
            if (!d.joined) {
              join_device(ev.index);
              labels.push_back("join:" + std::to_string(d.cfg.profile.device_id));
              realloc_needed = true;
              formation_needed = true;
            }
            break;
          }
          case kDebounce: {
            if (ev.gen != debounce_gen_) break;
            for (const MonitorEvent& mev : monitor_.flush_activity(t)) emit_context(mev);
            labels.push_back("activity");
            realloc_needed = true;
            break;
          }
          case kRegistrationStart: {
            activate_registration(scn_.registrations[ev.index]);
            labels.push_back("register:" +
                             std::to_string(scn_.registrations[ev.index].registration_id));
            realloc_needed = true;
            break;
          }
          case kSample:
            labels.push_back("sample");
            break;
          case kHorizon:
            stop = true;
            break;
          default:
            break;
        }
      }

      if (stop) break;

      if (!master_alive()) elect_master();
      if (formation_needed) charge_formation();
      if (realloc_needed) reallocate();
      if (!labels.empty()) {
        std::string label;
        for (const std::string& l : labels) {
          if (!label.empty()) label += ';';
          label += l;
        }
        trace_all(label);
      }
      reschedule_crossings();

      bool anyone_here = false;
      for (const DeviceState& d : devices_) anyone_here = anyone_here || (d.alive && d.present);
      bool more_joins = false;
      for (const DeviceState& d : devices_) {
        more_joins = more_joins || (!d.joined && d.cfg.join_s > now_);
      }
      if (!anyone_here && !more_joins) break;
    }
  }

  // ── device lifecycle ──

  void join_device(std::size_t i) {
    DeviceState& d = devices_[i];
    d.joined = d.alive = d.present = true;

    ContextSnapshot ctx;
    ctx.device_id = d.cfg.profile.device_id;
    ctx.soc_percent = soc_of(d);
    ctx.charging = d.cfg.charging;
    ctx.moving = d.cfg.moving;
    if (d.cfg.connected_network_id) {
      for (const NetworkProfile& n : d.cfg.profile.networks) {
        if (n.network_id == *d.cfg.connected_network_id) ctx.connected_network = n;
      }
    }
    monitor_.attach(ctx);

    InitializationMsg msg;
    msg.device_id = d.cfg.profile.device_id;
    msg.device_type = d.cfg.profile.kind;
    for (const NetworkProfile& n : d.cfg.profile.networks) {
      msg.networks.push_back({n.network_id, static_cast<float>(n.monetary_cost_per_mb)});
    }
    for (const FunctionImplementation& f : d.cfg.profile.implementations) {
      msg.functions.push_back({f.function, static_cast<float>(f.cost_f)});
    }
    log_message(d.cfg.profile.device_id, WireMessage{std::move(msg)});
  }

  void kill_device(std::size_t i) {
    DeviceState& d = devices_[i];
    if (std::abs(d.energy_j) < 1e-9) d.energy_j = 0.0;
    d.alive = false;
    d.present = false;
    d.outcome.death_s = now_;
    monitor_.detach(d.cfg.profile.device_id);
    drop_registrations_from(d.cfg.profile.device_id);
  }

  void leave_device(std::size_t i) {
    DeviceState& d = devices_[i];
    if (!d.present) return;
    d.present = false;
    monitor_.detach(d.cfg.profile.device_id);
    drop_registrations_from(d.cfg.profile.device_id);
  }

  void drop_registrations_from(DeviceId origin) {
    active_regs_.erase(
        std::remove_if(active_regs_.begin(), active_regs_.end(),
                       [&](const Registration& r) { return r.origin_device == origin; }),
        active_regs_.end());
  }

  void activate_registration(const Registration& r) {
    const DeviceState* origin = find_device(r.origin_device);
    if (!origin || !origin->present) return;  // nobody around to ask
    for (const Registration& a : active_regs_) {
      if (a.registration_id == r.registration_id) return;
    }
    active_regs_.push_back(r);

    ContextRequestMsg msg;
    msg.request_type = static_cast<std::uint8_t>(r.function);
    msg.info.assign(r.app_id.begin(), r.app_id.end());
    log_message(r.origin_device, WireMessage{std::move(msg)});
  }

  void deactivate_registration(RegistrationId id) {
    active_regs_.erase(
        std::remove_if(active_regs_.begin(), active_regs_.end(),
                       [&](const Registration& r) { return r.registration_id == id; }),
        active_regs_.end());
  }

  // ── scripted events ──

  void apply_scripted(const ScriptedEvent& e, std::vector<std::string>& labels,
                      bool& realloc_needed, bool& formation_needed) {
    if (e.kind == "set_moving") {
      labels.push_back("set_moving");
      ++debounce_gen_;  // cancels any timer in flight
      if (auto deadline = monitor_.activity(now_, e.moving)) {
        push(QueuedEvent{*deadline, rank(kDebounce), next_seq(), kDebounce, 0, debounce_gen_});
      }
      return;
    }
    if (e.kind == "set_charging") {
      DeviceState* d = find_device(e.device);
      if (!d || !d->present) return;
      labels.push_back("set_charging:" + std::to_string(e.device));
      refresh_battery(*d, realloc_needed);
      if (auto mev = monitor_.charging(now_, e.device, e.charging)) {
        emit_context(*mev);
        realloc_needed = true;
      }
      return;
    }
    if (e.kind == "set_network") {
      DeviceState* d = find_device(e.device);
      if (!d || !d->present) return;
      labels.push_back("set_network:" + std::to_string(e.device));
      refresh_battery(*d, realloc_needed);
      if (auto mev = monitor_.network(now_, e.device, e.network)) {
        emit_context(*mev);
        realloc_needed = true;
      }
      return;
    }
    if (e.kind == "register") {
      activate_registration(e.registration);
      labels.push_back("register:" + std::to_string(e.registration.registration_id));
      realloc_needed = true;
      return;
    }
    if (e.kind == "unregister") {
      deactivate_registration(e.registration_id);
      labels.push_back("unregister:" + std::to_string(e.registration_id));
      realloc_needed = true;
      return;
    }
    if (e.kind == "leave") {
      std::size_t i = device_index(e.device);
      if (i != SIZE_MAX && devices_[i].present) {
        leave_device(i);
        labels.push_back("leave:" + std::to_string(e.device));
        formation_needed = true;
        realloc_needed = true;
      }
      return;
    }
  }

  // Brings the monitor's stored battery level up to date before another
  // context field changes.  If the fresh reading itself turns out to be a
  // threshold crossing, handle it right here; the separately queued crossing
  // event will then find nothing left to report.
  void refresh_battery(const DeviceState& d, bool& realloc_needed) {
    if (!monitor_.attached(d.cfg.profile.device_id)) return;
    if (auto mev = monitor_.battery(now_, d.cfg.profile.device_id, soc_of(d))) {
      emit_context(*mev);
      realloc_needed = true;
    }
  }

  // ── energy bookkeeping ──

  double soc_of(const DeviceState& d) const {
    double cap = d.cfg.profile.capacity_joules();
    return cap > 0.0 ? d.energy_j / cap * 100.0 : 0.0;
  }

  bool effective_charging(const DeviceState& d) const {
    return monitor_.attached(d.cfg.profile.device_id) &&
           monitor_.effective(d.cfg.profile.device_id).charging;
  }

  void advance_to(double t) {
    double dt = t - now_;
    if (dt > 0.0) {
      for (DeviceState& d : devices_) {
        if (!d.alive || !d.present || d.power_mw <= 0.0 || effective_charging(d)) continue;
        double used = d.power_mw / 1000.0 * dt;
        if (used > d.energy_j) used = d.energy_j;  // numerically exact at death
        d.energy_j -= used;
        d.outcome.drained_j += used;
        result_.total_drained_j += used;
      }
      now_ = t;
    } else if (t > now_) {
      now_ = t;
    }
  }

  void charge_formation() {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      if (devices_[i].alive && devices_[i].present) members.push_back(i);
    }
    double total = scn_.formation.total_j(members.size());
    if (total <= 0.0) return;
    ++result_.formation_events;
    double share = total / static_cast<double>(members.size());
    double charged = 0.0;
    for (std::size_t k = 0; k < members.size(); ++k) {
      DeviceState& d = devices_[members[k]];
      double want = (k + 1 == members.size()) ? total - charged : share;
      double take = std::min(want, d.energy_j);
      d.energy_j -= take;
      d.outcome.formation_j += take;
      result_.total_formation_j += take;
      charged += take;
      if (d.energy_j <= 1e-12) {
        d.energy_j = std::max(d.energy_j, 0.0);
        kill_device(members[k]);
      } else if (monitor_.attached(d.cfg.profile.device_id)) {
        // An instantaneous charge can cross the threshold without a scheduled
        // crossing event; tell the monitor.
        if (auto mev = monitor_.battery(now_, d.cfg.profile.device_id, soc_of(d))) {
          emit_context(*mev);
        }
      }
    }
  }

  // ── master ──

  bool master_alive() const {
    if (!master_) return false;
    const DeviceState* d = find_device(*master_);
    return d && d->alive && d->present;
  }

  void elect_master() {
    std::vector<MasterCandidate> cands;
    for (const DeviceState& d : devices_) {
      if (d.alive && d.present) {
        cands.push_back({d.cfg.profile.device_id, soc_of(d), d.power_mw});
      }
    }
    if (cands.empty()) {
      master_.reset();
      return;
    }
    master_ = select_master(cands, scn_.master_rule);
  }

  // ── allocation ──

  struct BuiltInstances {
    std::vector<FapInstance> instances;
    std::vector<std::vector<Registration>> merged;                 // per instance, per request
    std::vector<std::vector<std::vector<RegistrationId>>> members;  // ditto
    std::vector<std::size_t> device_map;  // instance device column -> state index
    std::vector<RegistrationId> unserved;
  };

  BuiltInstances build_instances() {
    BuiltInstances out;

    std::vector<std::size_t> alive;
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      if (devices_[i].alive && devices_[i].present) alive.push_back(i);
    }
    if (alive.empty() || active_regs_.empty()) return out;

    std::vector<DeviceProfile> profiles;
    std::vector<ContextSnapshot> contexts;
    for (std::size_t i : alive) {
      profiles.push_back(devices_[i].cfg.profile);
      ContextSnapshot c = monitor_.effective(devices_[i].cfg.profile.device_id);
      c.soc_percent = soc_of(devices_[i]);
      contexts.push_back(std::move(c));
    }

    // Manual and duplicate-everywhere model static configurations chosen
    // without the context engine: hard feasibility (implements + speed) still
    // applies, but preference rules, forced mappings and battery-threshold
    // shedding only steer the adaptive strategies.
    const bool adaptive = scn_.strategy == AllocationStrategy::Fap ||
                          scn_.strategy == AllocationStrategy::Exact;
    MappabilityResult base;
    if (adaptive) {
      base = apply_preferences(profiles, active_regs_, scn_.preferences, contexts);
    } else {
      std::vector<Registration> static_regs(active_regs_.begin(), active_regs_.end());
      for (Registration& r : static_regs) r.forced_mapping.clear();
      base = apply_preferences(profiles, static_regs, {}, contexts);
    }
    for (RegistrationId id : base.infeasible) out.unserved.push_back(id);

    // Merge same-function registrations; a group's mappability is the
    // intersection of its members' rows.  Groups with an empty intersection
    // fall apart into singletons so compatible members are not dragged down.
    struct Row {
      Registration merged;
      std::vector<RegistrationId> members;
      std::vector<std::uint8_t> mappable;
    };
    std::vector<Row> rows;
    auto reg_row = [&](std::size_t r) {
      std::vector<std::uint8_t> v(alive.size());
      for (std::size_t d = 0; d < alive.size(); ++d) v[d] = base.matrix.at(r, d);
      return v;
    };
    auto all_zero = [](const std::vector<std::uint8_t>& v) {
      for (std::uint8_t x : v) {
        if (x) return false;
      }
      return true;
    };

    for (const AggregatedRequest& g : aggregate_requests(active_regs_)) {
      std::vector<std::size_t> feasible;
      for (std::size_t m : g.member_indices) {
        if (!all_zero(reg_row(m))) feasible.push_back(m);
      }
      if (feasible.empty()) continue;

      std::vector<std::uint8_t> intersect(alive.size(), 1);
      for (std::size_t m : feasible) {
        auto row = reg_row(m);
        for (std::size_t d = 0; d < alive.size(); ++d) intersect[d] &= row[d];
      }
      if (!all_zero(intersect)) {
        AggregatedRequest sub;
        sub.function = g.function;
        sub.member_indices = feasible;
        sub.sampling_speed = active_regs_[feasible[0]].sampling_speed;
        sub.report_interval_s = active_regs_[feasible[0]].report_interval_s;
        sub.payload_bytes_per_report = active_regs_[feasible[0]].payload_bytes_per_report;
        for (std::size_t m : feasible) {
          sub.sampling_speed = std::max(sub.sampling_speed, active_regs_[m].sampling_speed);
          sub.report_interval_s =
              std::min(sub.report_interval_s, active_regs_[m].report_interval_s);
          sub.payload_bytes_per_report =
              std::max(sub.payload_bytes_per_report, active_regs_[m].payload_bytes_per_report);
        }
        Row row;
        row.merged = merged_registration(sub, active_regs_);
        for (std::size_t m : feasible) row.members.push_back(active_regs_[m].registration_id);
        row.mappable = std::move(intersect);
        rows.push_back(std::move(row));
      } else {
        for (std::size_t m : feasible) {
          rows.push_back(Row{active_regs_[m], {active_regs_[m].registration_id}, reg_row(m)});
        }
      }
    }

    // Below-threshold devices step aside unless a request has nowhere else.
    if (adaptive) {
      std::vector<std::uint8_t> below(alive.size(), 0);
      for (std::size_t d = 0; d < alive.size(); ++d) {
        below[d] = soc_of(devices_[alive[d]]) <= scn_.battery_threshold_pct + 1e-9 ? 1 : 0;
      }
      for (Row& row : rows) {
        std::vector<std::uint8_t> reduced = row.mappable;
        bool any = false;
        for (std::size_t d = 0; d < alive.size(); ++d) {
          if (below[d]) reduced[d] = 0;
          any = any || reduced[d] != 0;
        }
        if (any) row.mappable = std::move(reduced);
      }
    }

    // One instance per function type, requests in stable order.
    std::map<FunctionType, std::vector<std::size_t>> by_type;
    std::vector<FunctionType> type_order;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!by_type.count(rows[i].merged.function)) type_order.push_back(rows[i].merged.function);
      by_type[rows[i].merged.function].push_back(i);
    }

    out.device_map = alive;
    for (FunctionType ft : type_order) {
      FapInstance in;
      for (std::size_t i : alive) in.device_ids.push_back(devices_[i].cfg.profile.device_id);
      in.open_cost.assign(alive.size(), 0.0);
      for (std::size_t d = 0; d < alive.size(); ++d) {
        in.open_cost[d] = opening_cost(ft, alive[d]);
      }
      std::vector<Registration> merged_list;
      std::vector<std::vector<RegistrationId>> member_list;
      for (std::size_t ri : by_type[ft]) {
        Row& row = rows[ri];
        in.request_ids.push_back(row.merged.registration_id);
        std::size_t origin_col = kNoDevice;
        for (std::size_t d = 0; d < alive.size(); ++d) {
          if (devices_[alive[d]].cfg.profile.device_id == row.merged.origin_device) {
            origin_col = d;
          }
        }
        in.origin.push_back(origin_col);
        for (std::size_t d = 0; d < alive.size(); ++d) {
          in.mappable.push_back(row.mappable[d]);
          // Costs are only meaningful (and only read) where mapping is allowed.
          in.serve_cost.push_back(
              row.mappable[d] ? serving_cost(row.merged, alive[d], origin_col == d) : 0.0);
        }
        merged_list.push_back(row.merged);
        member_list.push_back(row.members);
      }
      out.instances.push_back(std::move(in));
      out.merged.push_back(std::move(merged_list));
      out.members.push_back(std::move(member_list));
    }
    return out;
  }

  double serving_cost(const Registration& merged, std::size_t dev_index, bool local) const {
    const DeviceState& d = devices_[dev_index];
    switch (scn_.objective) {
      case ObjectiveMode::Energy:
        // Average power in mW: one reporting interval of work over its length.
        return function_energy_per_interval(cat_, merged, d.cfg.profile.kind, local) /
               merged.report_interval_s;
      case ObjectiveMode::Quality:
        // Freshest data comes from the app's own device; anything else pays a
        // nominal staleness penalty.
        return local ? 0.0 : 1e-3;
      case ObjectiveMode::Monetary: {
        if (function_category(merged.function) != FunctionCategory::Connectivity) return 0.0;
        double mb = static_cast<double>(merged.payload_bytes_per_report) / 1e6;
        return mb * tariff(d);
      }
    }
    return 0.0;
  }

  double tariff(const DeviceState& d) const {
    // Connected network first, cheapest declared one otherwise.
    if (monitor_.attached(d.cfg.profile.device_id)) {
      const auto& net = monitor_.effective(d.cfg.profile.device_id).connected_network;
      if (net) return net->monetary_cost_per_mb;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const NetworkProfile& n : d.cfg.profile.networks) {
      best = std::min(best, n.monetary_cost_per_mb);
    }
    return std::isfinite(best) ? best : 0.0;
  }

  double opening_cost(FunctionType ft, std::size_t dev_index) const {
    if (scn_.objective != ObjectiveMode::Quality) return 0.0;
    if (function_category(ft) != FunctionCategory::Connectivity) return 0.0;
    // Quality wants the fastest declared link to carry traffic.
    double best_speed = -1.0;
    std::size_t best_dev = SIZE_MAX;
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      const DeviceState& d = devices_[i];
      if (!d.alive || !d.present || !d.cfg.profile.implements(ft)) continue;
      for (const NetworkProfile& n : d.cfg.profile.networks) {
        if (n.avg_link_speed_bps > best_speed) {
          best_speed = n.avg_link_speed_bps;
          best_dev = i;
        }
      }
    }
    return dev_index == best_dev ? 0.0 : 1.0;
  }

  void reallocate() {
    BuiltInstances built = build_instances();
    for (RegistrationId id : built.unserved) {
      if (std::find(result_.unserved.begin(), result_.unserved.end(), id) ==
          result_.unserved.end()) {
        result_.unserved.push_back(id);
      }
    }

    // Close out running assignments; their report counters stop here.
    for (const ActiveAssignment& a : assignments_) settle_reports(a);

    std::vector<ActiveAssignment> next;
    AssignmentsMsg msg;
    std::uint8_t session_request = 0;
    for (std::size_t k = 0; k < built.instances.size(); ++k) {
      Assignment a = solve(built.instances[k]);
      for (std::size_t r = 0; r < built.instances[k].n_requests(); ++r) {
        ActiveAssignment act;
        act.merged = built.merged[k][r];
        act.members = built.members[k][r];
        act.executor = built.device_map[a.device_of_request[r]];
        act.since_s = now_;
        if (session_request < 255 && a.device_of_request[r] < 255) {
          msg.request_device.emplace_back(session_request,
                                          static_cast<std::uint8_t>(a.device_of_request[r]));
          msg.function_device.emplace_back(static_cast<std::uint8_t>(act.merged.function),
                                           static_cast<std::uint8_t>(a.device_of_request[r]));
        }
        ++session_request;
        next.push_back(std::move(act));
      }
    }
    assignments_ = std::move(next);
    ++result_.reallocations;
    if (master_) log_message(*master_, WireMessage{std::move(msg)});
    recompute_powers();
  }

  Assignment solve(const FapInstance& in) const {
    switch (scn_.strategy) {
      case AllocationStrategy::Fap:
        return fap_greedy(in);
      case AllocationStrategy::Exact:
        return fap_exact(in);
      case AllocationStrategy::All:
        return baseline_all(in);
      case AllocationStrategy::Manual:
        break;
    }
    // Manual: the user's chosen device hosts whatever it may; the rest falls
    // to the cheapest capable device.  Without a chosen device, a seeded
    // random pick stands in for the user.
    if (scn_.manual_device) {
      std::size_t pick = kNoDevice;
      for (std::size_t d = 0; d < in.n_devices(); ++d) {
        if (in.device_ids[d] == *scn_.manual_device) pick = d;
      }
      if (pick != kNoDevice) {
        std::vector<std::size_t> assigned(in.n_requests(), kNoDevice);
        for (std::size_t r = 0; r < in.n_requests(); ++r) {
          if (in.m(r, pick)) {
            assigned[r] = pick;
            continue;
          }
          double best = std::numeric_limits<double>::infinity();
          for (std::size_t d = 0; d < in.n_devices(); ++d) {
            if (in.m(r, d) && in.c(r, d) < best) {
              best = in.c(r, d);
              assigned[r] = d;
            }
          }
        }
        return detail::finish_assignment(in, std::move(assigned));
      }
    }
    return baseline_manual(in, scn_.manual_seed);
  }

  void settle_reports(const ActiveAssignment& a) {
    double active = now_ - a.since_s;
    if (active <= 0.0) return;
    auto reports = static_cast<std::uint64_t>(std::floor(active / a.merged.report_interval_s));
    result_.data_reports += reports;
    if (devices_[a.executor].cfg.profile.device_id != a.merged.origin_device) {
      result_.message_counts["data"] += reports;
    }
  }

  void recompute_powers() {
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      DeviceState& d = devices_[i];
      double p = 0.0;
      if (d.alive && d.present) {
        p = d.cfg.baseline_power_mw;
        for (const ActiveAssignment& a : assignments_) {
          if (a.executor != i) continue;
          bool local = d.cfg.profile.device_id == a.merged.origin_device;
          try {
            p += function_energy_per_interval(cat_, a.merged, d.cfg.profile.kind, local) /
                 a.merged.report_interval_s;
          } catch (const MissingEntry&) {
            // Device kinds without measured rates draw nothing beyond their
            // configured baseline.
          }
        }
      }
      if (p != d.power_mw) {
        d.power_mw = p;
        ++d.gen;
      }
    }
  }

  // ── scheduling ──

  void schedule(double t, int kind, std::size_t index, std::uint64_t gen) {
    push(QueuedEvent{t, rank(kind), next_seq(), kind, index, gen});
  }

  void reschedule_crossings() {
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      DeviceState& d = devices_[i];
      ++d.gen;  // every previously scheduled crossing is now stale
      if (!d.alive || !d.present || d.power_mw <= 0.0 || effective_charging(d)) continue;
      double watts = d.power_mw / 1000.0;
      double threshold_j =
          d.cfg.profile.capacity_joules() * scn_.battery_threshold_pct / 100.0;
      if (d.energy_j > threshold_j + 1e-9) {
        schedule(now_ + (d.energy_j - threshold_j) / watts, kThreshold, i, d.gen);
      }
      schedule(now_ + d.energy_j / watts, kDeath, i, d.gen);
    }
  }

  // ── output ──

  void emit_context(const MonitorEvent& mev) {
    ContextSensorMsg msg;
    msg.device_id = mev.device;
    double soc_v = std::clamp(mev.effective.soc_percent, 0.0, 100.0);
    msg.battery_percent = static_cast<std::uint8_t>(std::llround(soc_v));
    msg.charging = mev.effective.charging;
    msg.moving = mev.effective.moving;
    if (mev.effective.connected_network) {
      msg.network = mev.effective.connected_network->kind;
      msg.network_id = mev.effective.connected_network->network_id;
      msg.avg_link_speed_bps =
          static_cast<float>(mev.effective.connected_network->avg_link_speed_bps);
    }
    log_message(mev.device, WireMessage{std::move(msg)});
  }

  void log_message(DeviceId sender, const WireMessage& msg) {
    std::vector<std::uint8_t> bytes = encode(msg);
    const char* type = "data";
    if (std::holds_alternative<InitializationMsg>(msg)) type = "initialization";
    if (std::holds_alternative<ContextSensorMsg>(msg)) type = "context_sensor";
    if (std::holds_alternative<ContextRequestMsg>(msg)) type = "context_request";
    if (std::holds_alternative<AssignmentsMsg>(msg)) type = "assignments";
    ++result_.message_counts[type];
    result_.control_bytes += bytes.size();
    result_.messages.push_back(LoggedMessage{now_, sender, type, bytes.size()});
  }

  void trace_all(const std::string& label) {
    for (const DeviceState& d : devices_) {
      if (!d.joined) continue;
      result_.trace.push_back(
          TraceRow{now_, d.cfg.profile.device_id, soc_of(d), d.energy_j, d.power_mw, label});
    }
  }

  void finalize() {
    result_.end_s = now_;

    for (const ActiveAssignment& a : assignments_) settle_reports(a);
    assignments_.clear();

    double conservation = 0.0;
    for (DeviceState& d : devices_) {
      d.outcome.final_soc_percent = soc_of(d);
      d.outcome.uptime_s = d.outcome.death_s ? *d.outcome.death_s : result_.end_s;
      double initial = d.cfg.profile.capacity_joules() * d.cfg.initial_soc_percent / 100.0;
      conservation += initial - d.energy_j - d.outcome.drained_j - d.outcome.formation_j;
      result_.devices.push_back(d.outcome);
    }
    result_.conservation_error_j = conservation;
    trace_all("end");
  }

  // ── misc ──

  DeviceState* find_device(DeviceId id) {
    for (DeviceState& d : devices_) {
      if (d.cfg.profile.device_id == id) return &d;
    }
    return nullptr;
  }
  const DeviceState* find_device(DeviceId id) const {
    for (const DeviceState& d : devices_) {
      if (d.cfg.profile.device_id == id) return &d;
    }
    return nullptr;
  }
  std::size_t device_index(DeviceId id) const {
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      if (devices_[i].cfg.profile.device_id == id) return i;
    }
    return SIZE_MAX;
  }

  std::uint64_t next_seq() { return seq_++; }
  void push(QueuedEvent e) { queue_.push(e); }

  Scenario scn_;
  EnergyCatalog cat_;
  ContextMonitor monitor_;
  std::vector<DeviceState> devices_;
  std::vector<Registration> active_regs_;
  std::vector<ActiveAssignment> assignments_;
  std::optional<DeviceId> master_;
  std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<QueuedEvent>> queue_;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::uint64_t debounce_gen_ = 0;
  SimResult result_;
};

inline SimResult simulate(const Scenario& scenario, const EnergyCatalog& catalog) {
  return Simulator(scenario, catalog).run();
}

}  // namespace afv

#endif  // AFV_SIMULATOR_HPP_
