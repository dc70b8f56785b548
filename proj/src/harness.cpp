#include "uspresence/harness.hpp"

#include <sstream>

namespace uspres::harness {

std::string to_string(Environment e) {
    return e == Environment::HOME ? "home" : "office";
}
std::string to_string(FixedLocation f) {
    return f == FixedLocation::INTERNAL ? "internal" : "external";
}
std::string to_string(UserLocation u) {
    return u == UserLocation::SAME_SPACE ? "same_space" : "other_space";
}
std::string to_string(MobileConfig c) {
    return c == MobileConfig::MOBILE_BEACON ? "mobile_beacon" : "mobile_receiver";
}

namespace {

std::string context_name(sim::CarryContext c) {
    switch (c) {
        case sim::CarryContext::HAND: return "hand";
        case sim::CarryContext::POCKET: return "pocket";
        case sim::CarryContext::BAG: return "bag";
        case sim::CarryContext::FIXED: return "fixed";
    }
    return "fixed";
}

std::string door_name(sim::DoorState d) {
    return d == sim::DoorState::SHUT ? "shut" : "open";
}

} // namespace

bool condition_valid(const Condition& c) {
    if (c.distance_ft == 0) {
        return c.door == sim::DoorState::SHUT && c.user_loc == UserLocation::OTHER_SPACE;
    }
    return c.distance_ft == 10 || c.distance_ft == 2;
}

std::vector<Condition> expand_grid() {
    std::vector<Condition> grid;
    grid.reserve(216);
    for (auto env : {Environment::HOME, Environment::OFFICE}) {
        for (auto door : {sim::DoorState::SHUT, sim::DoorState::OPEN}) {
            for (auto fixed : {FixedLocation::INTERNAL, FixedLocation::EXTERNAL}) {
                for (auto user : {UserLocation::SAME_SPACE, UserLocation::OTHER_SPACE}) {
                    for (int dist : {10, 2, 0}) {
                        for (auto ctx : {sim::CarryContext::HAND, sim::CarryContext::POCKET,
                                         sim::CarryContext::BAG}) {
                            for (auto cfg : {MobileConfig::MOBILE_BEACON,
                                             MobileConfig::MOBILE_RECEIVER}) {
                                Condition c{env, door, fixed, user, dist, ctx, cfg};
                                if (condition_valid(c)) grid.push_back(c);
                            }
                        }
                    }
                }
            }
        }
    }
    return grid;
}

std::uint64_t condition_seed(std::uint64_t master_seed, std::size_t index) {
    return sim::mix_seed(master_seed, 0x5EEDull + index);
}

sim::AcousticScene make_scene(const Condition& c, const sim::LossModel& losses,
                              double noise_floor_dbfs, std::uint64_t seed) {
    sim::AcousticScene scene;
    scene.door_state = c.door;
    scene.losses = losses;
    scene.noise_floor_dbfs = noise_floor_dbfs;
    scene.rng_seed = seed;

    const std::string fixed_space =
        c.fixed_loc == FixedLocation::INTERNAL ? scene.spaces[0] : scene.spaces[1];
    const std::string other_space =
        c.fixed_loc == FixedLocation::INTERNAL ? scene.spaces[1] : scene.spaces[0];
    const std::string mobile_space =
        c.user_loc == UserLocation::SAME_SPACE ? fixed_space : other_space;

    scene.devices.push_back({"fixed", fixed_space, 0.0, sim::CarryContext::FIXED});
    scene.devices.push_back(
        {"mobile", mobile_space, static_cast<double>(c.distance_ft), c.context});
    scene.validate();
    return scene;
}

TrialRecord run_condition(const Condition& c, int trials, std::uint64_t seed,
                          const HarnessOptions& opt) {
    if (!condition_valid(c)) {
        throw ConstraintError("0 ft distance requires a shut door and the user "
                              "in the other space");
    }

    sim::AcousticScene scene = make_scene(c, opt.losses, opt.noise_floor_dbfs, seed);

    const bool mobile_sends = c.config == MobileConfig::MOBILE_BEACON;
    const std::string tx = mobile_sends ? "mobile" : "fixed";
    const std::string rx = mobile_sends ? "fixed" : "mobile";

    protocol::ChannelAssignment channels;
    const int channel = channels.allocate("mobile");

    modem::ModemParams params;
    params.noise_floor_dbfs = opt.noise_floor_dbfs;
    const PcmFrame clean =
        modem::encode(modem::UsFrame{channel, "aa"}, params, opt.tx_amplitude);

    TrialRecord record{c, trials, 0, seed};
    for (int t = 0; t < trials; ++t) {
        PcmFrame heard = sim::transmit(scene, tx, rx, clean,
                                       static_cast<std::uint64_t>(t));
        auto frames = modem::decode(heard, params, channel);
        for (const auto& f : frames) {
            if (f.payload == "aa") {
                ++record.received;
                break;
            }
        }
    }
    return record;
}

GridSummary summarize(const std::vector<TrialRecord>& records) {
    GridSummary s;
    for (const auto& r : records) {
        const Condition& c = r.cond;
        const bool same = c.user_loc == UserLocation::SAME_SPACE;
        if (same && (c.context == sim::CarryContext::HAND ||
                     c.context == sim::CarryContext::POCKET)) {
            s.same_space_hand_pocket.add(r);
        }
        if (!same && c.door == sim::DoorState::SHUT) {
            s.shut_door_cross_space.add(r);
        }
        if (!same && c.door == sim::DoorState::OPEN) {
            (c.config == MobileConfig::MOBILE_BEACON ? s.open_leak_mobile_beacon
                                                     : s.open_leak_mobile_receiver)
                .add(r);
        }
        if (same && c.context == sim::CarryContext::BAG && c.distance_ft == 2) {
            (c.config == MobileConfig::MOBILE_BEACON ? s.bag_near_door_mobile_beacon
                                                     : s.bag_near_door_mobile_receiver)
                .add(r);
        }
    }
    return s;
}

namespace {

nlohmann::json tally_to_json(const Tally& t) {
    nlohmann::json j{{"sent", t.sent}, {"received", t.received}};
    auto rate = t.rate();
    if (rate.has_value()) {
        j["rate"] = *rate;
    } else {
        j["rate"] = nullptr;
    }
    return j;
}

} // namespace

nlohmann::json summary_to_json(const GridSummary& s) {
    return nlohmann::json{
        {"same_space_hand_pocket", tally_to_json(s.same_space_hand_pocket)},
        {"shut_door_cross_space", tally_to_json(s.shut_door_cross_space)},
        {"open_leak_mobile_beacon", tally_to_json(s.open_leak_mobile_beacon)},
        {"open_leak_mobile_receiver", tally_to_json(s.open_leak_mobile_receiver)},
        {"bag_near_door_mobile_beacon", tally_to_json(s.bag_near_door_mobile_beacon)},
        {"bag_near_door_mobile_receiver",
         tally_to_json(s.bag_near_door_mobile_receiver)},
    };
}

GridResult run_grid(const HarnessOptions& opt) {
    const auto grid = expand_grid();
    std::vector<TrialRecord> records(grid.size());

    if (opt.parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (std::size_t i = 0; i < grid.size(); ++i) {
            records[i] = run_condition(grid[i], opt.trials,
                                       condition_seed(opt.master_seed, i), opt);
        }
    } else {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            records[i] = run_condition(grid[i], opt.trials,
                                       condition_seed(opt.master_seed, i), opt);
        }
    }

    return {records, summarize(records)};
}

std::string to_csv(const std::vector<TrialRecord>& records) {
    std::ostringstream out;
    out << "env,door,fixed_loc,user_loc,dist_ft,context,config,sent,received,seed\n";
    for (const auto& r : records) {
        const Condition& c = r.cond;
        out << to_string(c.env) << ',' << door_name(c.door) << ','
            << to_string(c.fixed_loc) << ',' << to_string(c.user_loc) << ','
            << c.distance_ft << ',' << context_name(c.context) << ','
            << to_string(c.config) << ',' << r.sent << ',' << r.received << ','
            << r.seed << '\n';
    }
    return out.str();
}

} // namespace uspres::harness
