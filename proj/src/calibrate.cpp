#include "uspresence/harness.hpp"

#include <cmath>
#include <limits>

namespace uspres::harness {

namespace {

double rate_or_zero(const Tally& t) { return t.rate().value_or(0.0); }

// Squared error against one target; exact-zero targets are hard constraints.
bool accumulate_error(double target, const Tally& achieved, double& sse) {
    double rate = rate_or_zero(achieved);
    if (target == 0.0 && rate != 0.0) return false;
    double d = rate - target;
    sse += d * d;
    return true;
}

std::vector<double> values_or(const std::vector<double>& v, double fallback) {
    if (v.empty()) return {fallback};
    return v;
}

} // namespace

CalibrationResult calibrate(const CalibrationTargets& targets,
                            const SearchGrid& grid, int trials,
                            std::uint64_t seed) {
    const sim::LossModel base;
    const auto shut = values_or(grid.shut_door_loss, base.shut_door_loss_db);
    const auto open = values_or(grid.open_door_loss, base.open_door_loss_db);
    const auto txp = values_or(grid.tx_pocket, base.tx_context.pocket_db);
    const auto rxp = values_or(grid.rx_pocket, base.rx_context.pocket_db);
    const auto txb = values_or(grid.tx_bag, base.tx_context.bag_db);
    const auto rxb = values_or(grid.rx_bag, base.rx_context.bag_db);

    if (grid.shut_door_loss.empty() && grid.open_door_loss.empty() &&
        grid.tx_pocket.empty() && grid.rx_pocket.empty() && grid.tx_bag.empty() &&
        grid.rx_bag.empty()) {
        throw std::invalid_argument("empty search grid");
    }

    CalibrationResult best;
    double best_sse = std::numeric_limits<double>::infinity();
    bool found = false;

    for (double s : shut)
        for (double o : open)
            for (double tp : txp)
                for (double rp : rxp)
                    for (double tb : txb)
                        for (double rb : rxb) {
                            if (rb <= tb) continue;  // model invariant

                            sim::LossModel m = base;
                            m.shut_door_loss_db = s;
                            m.open_door_loss_db = o;
                            m.tx_context.pocket_db = tp;
                            m.rx_context.pocket_db = rp;
                            m.tx_context.bag_db = tb;
                            m.rx_context.bag_db = rb;

                            HarnessOptions opt;
                            opt.trials = trials;
                            opt.master_seed = seed;
                            opt.losses = m;
                            GridResult run = run_grid(opt);

                            double sse = 0.0;
                            const GridSummary& a = run.summary;
                            bool ok =
                                accumulate_error(targets.same_space_hand_pocket,
                                                 a.same_space_hand_pocket, sse) &&
                                accumulate_error(targets.shut_door_cross_space,
                                                 a.shut_door_cross_space, sse) &&
                                accumulate_error(targets.open_leak_mobile_beacon,
                                                 a.open_leak_mobile_beacon, sse) &&
                                accumulate_error(targets.open_leak_mobile_receiver,
                                                 a.open_leak_mobile_receiver, sse) &&
                                accumulate_error(targets.bag_near_door_mobile_beacon,
                                                 a.bag_near_door_mobile_beacon, sse) &&
                                accumulate_error(targets.bag_near_door_mobile_receiver,
                                                 a.bag_near_door_mobile_receiver, sse);
                            if (!ok) continue;

                            if (sse < best_sse) {
                                best_sse = sse;
                                best = {m, run.summary, sse};
                                found = true;
                            }
                        }

    if (!found) {
        throw std::runtime_error(
            "no candidate satisfied the hard zero-rate targets");
    }
    return best;
}

CalibrationTargets targets_from_json(const nlohmann::json& j) {
    CalibrationTargets t;
    auto get = [&](const char* key, double& field) {
        if (j.contains(key)) field = j[key].get<double>();
    };
    get("same_space_hand_pocket", t.same_space_hand_pocket);
    get("shut_door_cross_space", t.shut_door_cross_space);
    get("open_leak_mobile_beacon", t.open_leak_mobile_beacon);
    get("open_leak_mobile_receiver", t.open_leak_mobile_receiver);
    get("bag_near_door_mobile_beacon", t.bag_near_door_mobile_beacon);
    get("bag_near_door_mobile_receiver", t.bag_near_door_mobile_receiver);
    return t;
}

SearchGrid search_grid_from_json(const nlohmann::json& j) {
    SearchGrid g;
    auto get = [&](const char* key, std::vector<double>& field) {
        if (j.contains(key)) field = j[key].get<std::vector<double>>();
    };
    get("shut_door_loss", g.shut_door_loss);
    get("open_door_loss", g.open_door_loss);
    get("tx_pocket", g.tx_pocket);
    get("rx_pocket", g.rx_pocket);
    get("tx_bag", g.tx_bag);
    get("rx_bag", g.rx_bag);
    return g;
}

sim::LossModel shipped_loss_model() { return sim::LossModel{}; }

} // namespace uspres::harness
