#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "uspresence/services.hpp"

#include <cstdio>
#include <fstream>

using namespace uspres;
using protocol::ConfigKind;
using protocol::Presence;
using protocol::Transition;
using services::Bolt;
using services::LockCommand;
using services::LockPolicy;
using services::LockState;

namespace {

Transition make_tr(double t, Presence from, Presence to) {
    return Transition{t, "phone", from, to, ConfigKind::A_MOBILE_BEACON};
}

} // namespace

TEST_CASE("lock policy examples") {
    LockPolicy policy;
    SUBCASE("arrival outside unlocks") {
        LockState lock;
        auto [next, cmd] =
            apply_transition(lock, policy, make_tr(1.0, Presence::AWAY, Presence::NEARBY_OUTSIDE));
        CHECK(next.bolt == Bolt::UNLOCKED);
        REQUIRE(cmd.has_value());
        CHECK(*cmd == LockCommand::UNLOCK);
        CHECK(next.last_command_time == 1.0);
    }
    SUBCASE("entry locks behind the user") {
        LockState lock{Bolt::UNLOCKED, 1.0};
        auto [next, cmd] = apply_transition(
            lock, policy, make_tr(2.0, Presence::NEARBY_OUTSIDE, Presence::PRESENT));
        CHECK(next.bolt == Bolt::LOCKED);
        REQUIRE(cmd.has_value());
        CHECK(*cmd == LockCommand::LOCK);
    }
    SUBCASE("locking a locked door is a no-op") {
        LockState lock;  // LOCKED
        auto [next, cmd] = apply_transition(
            lock, policy, make_tr(3.0, Presence::NEARBY_OUTSIDE, Presence::AWAY));
        CHECK(next.bolt == Bolt::LOCKED);
        CHECK_FALSE(cmd.has_value());
        CHECK_FALSE(next.last_command_time.has_value());
    }
}

TEST_CASE("command stream has no consecutive duplicates") {
    oracles::TestRng rng(55);
    LockPolicy policy;
    LockState lock;
    std::optional<LockCommand> prev;
    Presence state = Presence::AWAY;
    for (int i = 0; i < 2000; ++i) {
        Presence next_state = static_cast<Presence>(rng.below(3));
        if (next_state == state) continue;
        auto [next, cmd] =
            apply_transition(lock, policy, make_tr(i, state, next_state));
        lock = next;
        state = next_state;
        if (cmd.has_value()) {
            if (prev.has_value()) CHECK(*cmd != *prev);
            prev = cmd;
        }
    }
}

TEST_CASE("replaying a transition log yields an identical command log") {
    oracles::TestRng rng(66);
    std::vector<Transition> log;
    Presence state = Presence::AWAY;
    for (int i = 0; i < 500; ++i) {
        Presence next = static_cast<Presence>(rng.below(3));
        if (next == state) continue;
        log.push_back(make_tr(i * 0.5, state, next));
        state = next;
    }
    auto play = [&] {
        LockPolicy policy;
        LockState lock;
        std::string out;
        for (const auto& tr : log) {
            auto [next, cmd] = apply_transition(lock, policy, tr);
            lock = next;
            if (cmd.has_value()) out += to_string(*cmd) + "\n";
        }
        return out;
    };
    CHECK(play() == play());
}

TEST_CASE("the stale-state failure is absent") {
    // User approaches, the door unlocks, the door opens and closes, but the
    // user stays outside: RF stays fresh, no ultrasound ever reaches the
    // interior receiver. The inferred state must remain NEARBY_OUTSIDE and
    // the lock must never conclude the user is inside.
    protocol::ProtocolTimers timers;
    protocol::PresenceState presence;
    LockPolicy policy;
    LockState lock;
    std::vector<LockCommand> commands;

    for (int step = 0; step <= 200; ++step) {
        double t = step * 0.1;
        auto [next, tr] = observe(presence, {protocol::EventType::RF_SEEN, t},
                                  ConfigKind::A_MOBILE_BEACON, timers, "phone");
        presence = next;
        if (tr.has_value()) {
            auto [next_lock, cmd] = apply_transition(lock, policy, *tr);
            lock = next_lock;
            if (cmd.has_value()) commands.push_back(*cmd);
        }
    }

    CHECK(presence.state == Presence::NEARBY_OUTSIDE);
    CHECK(lock.bolt == Bolt::UNLOCKED);
    REQUIRE(commands.size() == 1);
    CHECK(commands[0] == LockCommand::UNLOCK);
}

TEST_CASE("event sink") {
    SUBCASE("append then read back") {
        services::EventSink sink;
        nlohmann::json rec{{"t", 1.0}, {"command", "UNLOCK"}};
        auto receipt = sink.append(rec);
        CHECK(receipt == 0);
        REQUIRE(sink.records().size() == 1);
        CHECK(nlohmann::json::parse(sink.records()[0]) == rec);
    }
    SUBCASE("appends preserve order") {
        services::EventSink sink;
        sink.append({{"n", 1}});
        sink.append({{"n", 2}});
        REQUIRE(sink.records().size() == 2);
        CHECK(nlohmann::json::parse(sink.records()[0])["n"] == 1);
        CHECK(nlohmann::json::parse(sink.records()[1])["n"] == 2);
    }
    SUBCASE("file sink writes one JSON object per line") {
        std::string path = "sink_test.jsonl";
        std::remove(path.c_str());
        {
            services::EventSink sink(path);
            sink.append({{"t", 0.5}, {"command", "UNLOCK"}});
            sink.append({{"t", 2.5}, {"command", "LOCK"}});
        }
        std::ifstream f(path);
        REQUIRE(f.good());
        std::string line;
        std::getline(f, line);
        CHECK(nlohmann::json::parse(line)["command"] == "UNLOCK");
        std::getline(f, line);
        CHECK(nlohmann::json::parse(line)["t"] == 2.5);
        std::remove(path.c_str());
    }
    SUBCASE("unwritable path surfaces as a sink error and loses no state") {
        services::EventSink sink("/nonexistent-dir/deep/sink.jsonl");
        LockState lock;
        CHECK_THROWS_AS(sink.append({{"t", 0.0}}), services::SinkError);
        CHECK(sink.records().empty());
        CHECK(lock.bolt == Bolt::LOCKED);  // lock state untouched by the failure
    }
}
