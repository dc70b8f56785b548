#include "uspresence/services.hpp"

#include <fstream>

namespace uspres::services {

std::string to_string(Bolt b) { return b == Bolt::LOCKED ? "LOCKED" : "UNLOCKED"; }

std::string to_string(LockCommand c) {
    return c == LockCommand::LOCK ? "LOCK" : "UNLOCK";
}

LockCommand LockPolicy::command_for(protocol::Presence target) const {
    switch (target) {
        case protocol::Presence::NEARBY_OUTSIDE: return on_nearby_outside;
        case protocol::Presence::PRESENT: return on_present;
        case protocol::Presence::AWAY: return on_away;
    }
    return on_away;
}

std::pair<LockState, std::optional<LockCommand>> apply_transition(
    const LockState& lock, const LockPolicy& policy,
    const protocol::Transition& transition) {
    LockCommand cmd = policy.command_for(transition.to);
    Bolt wanted = cmd == LockCommand::LOCK ? Bolt::LOCKED : Bolt::UNLOCKED;
    if (wanted == lock.bolt) {
        return {lock, std::nullopt};  // idempotent
    }
    LockState next;
    next.bolt = wanted;
    next.last_command_time = transition.t;
    return {next, cmd};
}

EventSink::EventSink(std::string path) : path_(std::move(path)) {}

std::size_t EventSink::append(const nlohmann::json& record) {
    std::string line = record.dump();
    if (!path_.empty()) {
        std::ofstream f(path_, std::ios::app);
        if (!f) throw SinkError("cannot open sink: " + path_);
        f << line << '\n';
        f.flush();
        if (!f) throw SinkError("sink write failed: " + path_);
    }
    records_.push_back(std::move(line));
    return records_.size() - 1;
}

} // namespace uspres::services
