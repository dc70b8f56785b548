#pragma once

#include "uspresence/protocol.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace uspres::services {

enum class Bolt { LOCKED, UNLOCKED };
enum class LockCommand { LOCK, UNLOCK };

std::string to_string(Bolt b);
std::string to_string(LockCommand c);

struct LockState {
    Bolt bolt = Bolt::LOCKED;
    std::optional<double> last_command_time;
};

// Maps each presence-transition target to a lock command. AWAY locks:
// fail-secure default.
struct LockPolicy {
    LockCommand on_nearby_outside = LockCommand::UNLOCK;
    LockCommand on_present = LockCommand::LOCK;
    LockCommand on_away = LockCommand::LOCK;

    LockCommand command_for(protocol::Presence target) const;
};

// Applies the policy; a command is emitted only when the bolt actually
// moves (re-locking a locked door is a no-op).
std::pair<LockState, std::optional<LockCommand>> apply_transition(
    const LockState& lock, const LockPolicy& policy,
    const protocol::Transition& transition);

struct SinkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Append-only sink of line-delimited JSON records, either in memory or on a
// file. Appends are totally ordered; the receipt is the record's sequence
// number.
class EventSink {
public:
    EventSink() = default;                 // in-memory
    explicit EventSink(std::string path);  // append to file

    std::size_t append(const nlohmann::json& record);
    const std::vector<std::string>& records() const { return records_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::vector<std::string> records_;
};

} // namespace uspres::services
