#include "uspresence/protocol.hpp"

namespace uspres::protocol {

std::string to_string(ConfigKind k) {
    switch (k) {
        case ConfigKind::A_MOBILE_BEACON: return "mobile_beacon";
        case ConfigKind::B_MOBILE_RECEIVER: return "mobile_receiver";
        case ConfigKind::C_DUAL_FIXED_NO_RF: return "dual_fixed_no_rf";
    }
    return "mobile_beacon";
}

std::string to_string(Presence p) {
    switch (p) {
        case Presence::AWAY: return "AWAY";
        case Presence::NEARBY_OUTSIDE: return "NEARBY_OUTSIDE";
        case Presence::PRESENT: return "PRESENT";
    }
    return "AWAY";
}

nlohmann::json to_json(const Transition& tr) {
    return nlohmann::json{{"t", tr.t},
                          {"device", tr.device},
                          {"from", to_string(tr.from)},
                          {"to", to_string(tr.to)},
                          {"config", to_string(tr.config)}};
}

namespace {

bool fresh(const std::optional<double>& last, double now, double window) {
    return last.has_value() && now - *last <= window;
}

Presence infer(const PresenceState& s, double now, ConfigKind config,
               const ProtocolTimers& timers) {
    const double w = timers.absence_timeout_s;
    if (config == ConfigKind::C_DUAL_FIXED_NO_RF) {
        // Interior freshness dominates: unlocking for an already-inside
        // user is the safer failure.
        if (fresh(s.last_us, now, w)) return Presence::PRESENT;
        if (fresh(s.last_us_exterior, now, w)) return Presence::NEARBY_OUTSIDE;
        return Presence::AWAY;
    }
    if (fresh(s.last_us, now, w)) return Presence::PRESENT;
    if (fresh(s.last_rf, now, w)) return Presence::NEARBY_OUTSIDE;
    return Presence::AWAY;
}

} // namespace

std::pair<PresenceState, std::optional<Transition>> observe(
    const PresenceState& state, const Event& event, ConfigKind config,
    const ProtocolTimers& timers, std::string_view device_id) {
    if (state.saw_event && event.t < state.last_event_t) {
        throw TimeRegression("event time went backwards");
    }

    PresenceState next = state;
    next.last_event_t = event.t;
    next.saw_event = true;

    switch (event.type) {
        case EventType::RF_SEEN:
            next.last_rf = event.t;
            break;
        case EventType::US_SEEN:
            if (config == ConfigKind::C_DUAL_FIXED_NO_RF &&
                event.source == UsSource::EXTERIOR) {
                next.last_us_exterior = event.t;
            } else {
                next.last_us = event.t;
            }
            break;
        case EventType::TICK:
            break;
    }

    next.state = infer(next, event.t, config, timers);
    std::optional<Transition> transition;
    if (next.state != state.state) {
        transition = Transition{event.t, std::string(device_id), state.state,
                                next.state, config};
    }
    return {next, transition};
}

ChannelAssignment::ChannelAssignment(int channel_count)
    : channel_count_(channel_count) {}

int ChannelAssignment::allocate(const std::string& mobile_id) {
    if (auto it = assigned_.find(mobile_id); it != assigned_.end()) {
        return it->second;
    }
    for (int ch = 0; ch < channel_count_; ++ch) {
        bool taken = false;
        for (const auto& [id, c] : assigned_) {
            if (c == ch) {
                taken = true;
                break;
            }
        }
        if (!taken) {
            assigned_.emplace(mobile_id, ch);
            return ch;
        }
    }
    throw ChannelsExhausted("no free channel for " + mobile_id);
}

bool ChannelAssignment::release(const std::string& mobile_id, double now,
                                double last_rf, const ProtocolTimers& timers) {
    auto it = assigned_.find(mobile_id);
    if (it == assigned_.end()) {
        throw std::out_of_range("mobile not assigned: " + mobile_id);
    }
    if (now - last_rf < timers.rf_grace_s) return false;
    assigned_.erase(it);
    return true;
}

std::optional<int> ChannelAssignment::channel_of(const std::string& mobile_id) const {
    auto it = assigned_.find(mobile_id);
    if (it == assigned_.end()) return std::nullopt;
    return it->second;
}

std::vector<BeaconEmission> run_beacon(const std::string& device_id,
                                       const ChannelAssignment& assignments,
                                       const ProtocolTimers& timers,
                                       double start_t, int count,
                                       const std::string& payload) {
    auto channel = assignments.channel_of(device_id);
    if (!channel.has_value()) {
        throw NotReady("beacon has no assigned channel: " + device_id);
    }
    if (!modem::is_hex_payload(payload)) {
        throw modem::InvalidFrame("beacon payload must be 1..16 hex characters");
    }
    std::vector<BeaconEmission> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        out.push_back({start_t + i * timers.message_period_s,
                       modem::UsFrame{*channel, payload}});
    }
    return out;
}

} // namespace uspres::protocol
