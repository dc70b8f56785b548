#pragma once

#include "uspresence/modem.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace uspres::protocol {

enum class Mode { BEACON, RECEIVER };
enum class Role { MOBILE, FIXED_INTERIOR, FIXED_EXTERIOR };

// A: mobile beacons, fixed receives. B: fixed beacons, mobile receives.
// C: two fixed receivers (interior and exterior), mobile beacons, no RF.
enum class ConfigKind { A_MOBILE_BEACON, B_MOBILE_RECEIVER, C_DUAL_FIXED_NO_RF };

enum class Presence { AWAY, NEARBY_OUTSIDE, PRESENT };

std::string to_string(ConfigKind k);
std::string to_string(Presence p);

struct ProtocolTimers {
    double message_period_s = 1.0;
    // Three periods: survives two consecutive lost messages before the
    // device is declared absent.
    double absence_timeout_s = 3.0;
    double rf_grace_s = 5.0;  // channel release delay after RF loss
};

struct TimeRegression : std::logic_error {
    using std::logic_error::logic_error;
};
struct ChannelsExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotReady : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class EventType { RF_SEEN, US_SEEN, TICK };
enum class UsSource { INTERIOR, EXTERIOR };

struct Event {
    EventType type = EventType::TICK;
    double t = 0.0;
    UsSource source = UsSource::INTERIOR;  // used by US_SEEN in config C
};

// Per-mobile inference state. In configs A/B last_us tracks the single
// ultrasonic path; in config C it is the interior receiver and
// last_us_exterior the exterior one.
struct PresenceState {
    Presence state = Presence::AWAY;
    std::optional<double> last_rf;
    std::optional<double> last_us;
    std::optional<double> last_us_exterior;
    double last_event_t = 0.0;
    bool saw_event = false;
};

struct Transition {
    double t = 0.0;
    std::string device;
    Presence from = Presence::AWAY;
    Presence to = Presence::AWAY;
    ConfigKind config = ConfigKind::A_MOBILE_BEACON;
};

nlohmann::json to_json(const Transition& tr);

// Pure function of (state, event); emits a transition when the inferred
// presence changes. Throws TimeRegression if event.t goes backwards.
std::pair<PresenceState, std::optional<Transition>> observe(
    const PresenceState& state, const Event& event, ConfigKind config,
    const ProtocolTimers& timers, std::string_view device_id);

// Injective mobile -> channel map over [0, channel_count).
class ChannelAssignment {
public:
    explicit ChannelAssignment(int channel_count = 4);

    // Lowest free channel; re-entrant for an already-assigned mobile.
    // Throws ChannelsExhausted when every channel is taken.
    int allocate(const std::string& mobile_id);

    // Frees the mobile's channel once the RF grace period has elapsed.
    // Returns true if released. Throws UnknownMobile via std::out_of_range.
    bool release(const std::string& mobile_id, double now, double last_rf,
                 const ProtocolTimers& timers);

    std::optional<int> channel_of(const std::string& mobile_id) const;
    int channel_count() const { return channel_count_; }
    std::size_t assigned_count() const { return assigned_.size(); }

private:
    int channel_count_;
    std::map<std::string, int> assigned_;
};

struct BeaconEmission {
    double t = 0.0;
    modem::UsFrame frame;
};

// One frame per message period on the mobile's assigned channel. Throws
// NotReady when no channel is assigned.
std::vector<BeaconEmission> run_beacon(const std::string& device_id,
                                       const ChannelAssignment& assignments,
                                       const ProtocolTimers& timers,
                                       double start_t, int count,
                                       const std::string& payload = "aa");

} // namespace uspres::protocol
