#include "uspresence/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace uspres::harness {

namespace {

constexpr std::int64_t kTickMs = 100;

std::int64_t to_ms(double seconds) {
    return static_cast<std::int64_t>(std::llround(seconds * 1000.0));
}

struct SceneDevices {
    std::string mobile;
    std::vector<std::string> fixed;  // ids of FIXED-context devices
};

SceneDevices find_devices(const sim::AcousticScene& scene) {
    SceneDevices d;
    for (const auto& dev : scene.devices) {
        if (dev.context == sim::CarryContext::FIXED) {
            d.fixed.push_back(dev.id);
        } else {
            if (!d.mobile.empty()) {
                throw ScriptError("scenario supports exactly one mobile device");
            }
            d.mobile = dev.id;
        }
    }
    if (d.mobile.empty()) throw ScriptError("scene has no mobile device");
    if (d.fixed.empty()) throw ScriptError("scene has no fixed device");
    return d;
}

sim::DevicePlacement& mutable_device(sim::AcousticScene& scene,
                                     const std::string& id) {
    for (auto& d : scene.devices) {
        if (d.id == id) return d;
    }
    throw sim::UnknownDevice("unknown device: " + id);
}

} // namespace

Script script_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ScriptError("script must be a JSON array");
    Script script;
    std::size_t line = 0;
    for (const auto& ej : j) {
        ++line;
        auto field = [&](const char* key) -> const nlohmann::json& {
            auto it = ej.find(key);
            if (it == ej.end()) {
                throw ScriptError("script entry " + std::to_string(line) +
                                  ": missing field '" + key + "'");
            }
            return *it;
        };
        ScriptEvent ev;
        ev.t = field("t").get<double>();
        std::string action = field("action").get<std::string>();
        if (action == "move") {
            ev.action = ScriptEvent::Action::MOVE;
            ev.device = field("device").get<std::string>();
            ev.space = field("space").get<std::string>();
            ev.distance_ft = field("distance_ft").get<double>();
        } else if (action == "door") {
            ev.action = ScriptEvent::Action::DOOR;
            ev.door = sim::door_state_from_string(field("state").get<std::string>());
        } else if (action == "context") {
            ev.action = ScriptEvent::Action::CONTEXT;
            ev.device = field("device").get<std::string>();
            ev.context =
                sim::carry_context_from_string(field("context").get<std::string>());
        } else {
            throw ScriptError("script entry " + std::to_string(line) +
                              ": unknown action '" + action + "'");
        }
        script.push_back(std::move(ev));
    }
    std::stable_sort(script.begin(), script.end(),
                     [](const ScriptEvent& a, const ScriptEvent& b) { return a.t < b.t; });
    return script;
}

Script load_script_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ScriptError("cannot open script file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ScriptError("script file parse error: " + std::string(e.what()));
    }
    return script_from_json(j);
}

protocol::ConfigKind config_from_scene_json(const nlohmann::json& j) {
    if (!j.contains("config")) return protocol::ConfigKind::A_MOBILE_BEACON;
    std::string s = j["config"].get<std::string>();
    if (s == "mobile_beacon") return protocol::ConfigKind::A_MOBILE_BEACON;
    if (s == "mobile_receiver") return protocol::ConfigKind::B_MOBILE_RECEIVER;
    if (s == "dual_fixed_no_rf") return protocol::ConfigKind::C_DUAL_FIXED_NO_RF;
    throw sim::SceneError("bad config: " + s);
}

ScenarioResult scenario_play(const sim::AcousticScene& scene_in,
                             protocol::ConfigKind config, const Script& script,
                             const protocol::ProtocolTimers& timers,
                             double tx_amplitude) {
    ScenarioResult result;
    if (script.empty()) return result;

    sim::AcousticScene scene = scene_in;
    const SceneDevices devices = find_devices(scene);
    const bool mobile_beacons = config != protocol::ConfigKind::B_MOBILE_RECEIVER;
    const bool uses_rf = config != protocol::ConfigKind::C_DUAL_FIXED_NO_RF;

    if (config == protocol::ConfigKind::C_DUAL_FIXED_NO_RF && devices.fixed.size() != 2) {
        throw ScriptError("dual_fixed_no_rf needs one fixed device per space");
    }

    protocol::ChannelAssignment channels;
    protocol::PresenceState presence;
    services::LockState lock;
    services::LockPolicy policy;

    modem::ModemParams params;
    const std::string payload = "aa";

    // Configs B and C beacon unconditionally; config A beacons only while
    // the fixed device has assigned a channel (RF in range).
    bool beacon_active = false;
    std::int64_t next_emit_ms = 0;
    if (!uses_rf || !mobile_beacons) {
        channels.allocate(devices.mobile);
        beacon_active = true;
        next_emit_ms = 0;
    }

    double last_rf_seen = 0.0;
    std::uint64_t noise_counter = 0;

    const std::int64_t last_script_ms = to_ms(script.back().t);
    const std::int64_t end_ms = last_script_ms + to_ms(timers.absence_timeout_s) +
                                2 * to_ms(timers.message_period_s);
    const std::int64_t period_ms = to_ms(timers.message_period_s);

    auto dispatch = [&](const protocol::Event& ev) {
        auto [next, transition] = observe(presence, ev, config, timers, devices.mobile);
        presence = next;
        if (transition.has_value()) {
            result.transitions.push_back(*transition);
            auto [next_lock, cmd] = services::apply_transition(lock, policy, *transition);
            lock = next_lock;
            if (cmd.has_value()) {
                result.commands.push_back({transition->t, *cmd});
            }
        }
    };

    std::size_t script_pos = 0;
    for (std::int64_t t_ms = 0; t_ms <= end_ms; t_ms += kTickMs) {
        const double t = static_cast<double>(t_ms) / 1000.0;

        while (script_pos < script.size() && to_ms(script[script_pos].t) <= t_ms) {
            const ScriptEvent& ev = script[script_pos++];
            switch (ev.action) {
                case ScriptEvent::Action::MOVE: {
                    auto& d = mutable_device(scene, ev.device);
                    d.space = ev.space;
                    d.distance_ft = ev.distance_ft;
                    break;
                }
                case ScriptEvent::Action::DOOR:
                    scene.door_state = ev.door;
                    break;
                case ScriptEvent::Action::CONTEXT:
                    mutable_device(scene, ev.device).context = ev.context;
                    break;
            }
            scene.validate();
        }

        if (uses_rf) {
            // RF range check against the (single) fixed device.
            bool visible = rf_visible(scene, devices.mobile, devices.fixed.front());
            if (visible) {
                last_rf_seen = t;
                dispatch({protocol::EventType::RF_SEEN, t});
                if (mobile_beacons && !channels.channel_of(devices.mobile).has_value()) {
                    channels.allocate(devices.mobile);
                    beacon_active = true;
                    next_emit_ms = t_ms;
                }
            } else if (mobile_beacons &&
                       channels.channel_of(devices.mobile).has_value()) {
                if (channels.release(devices.mobile, t, last_rf_seen, timers)) {
                    beacon_active = false;
                }
            }
        }

        if (beacon_active && t_ms >= next_emit_ms) {
            next_emit_ms += period_ms;
            const int channel = channels.channel_of(devices.mobile).value_or(0);
            const std::string& tx = mobile_beacons ? devices.mobile : devices.fixed.front();
            PcmFrame clean = modem::encode({channel, payload}, params, tx_amplitude);

            if (mobile_beacons) {
                for (const auto& fixed_id : devices.fixed) {
                    PcmFrame heard =
                        sim::transmit(scene, tx, fixed_id, clean, noise_counter++);
                    auto frames = modem::decode(heard, params, channel);
                    bool got = std::any_of(frames.begin(), frames.end(),
                                           [&](const auto& f) { return f.payload == payload; });
                    if (got) {
                        auto src = scene.device(fixed_id).space == scene.spaces[0]
                                       ? protocol::UsSource::INTERIOR
                                       : protocol::UsSource::EXTERIOR;
                        dispatch({protocol::EventType::US_SEEN, t, src});
                    }
                }
            } else {
                PcmFrame heard =
                    sim::transmit(scene, tx, devices.mobile, clean, noise_counter++);
                auto frames = modem::decode(heard, params, channel);
                bool got = std::any_of(frames.begin(), frames.end(),
                                       [&](const auto& f) { return f.payload == payload; });
                if (got) dispatch({protocol::EventType::US_SEEN, t});
            }
        }

        dispatch({protocol::EventType::TICK, t});
    }

    result.final_state = presence.state;
    result.final_lock = lock;
    return result;
}

} // namespace uspres::harness
