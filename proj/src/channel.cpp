#include "uspresence/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace uspres::sim {

std::string to_string(DoorState s) {
    return s == DoorState::SHUT ? "SHUT" : "OPEN";
}

std::string to_string(CarryContext c) {
    switch (c) {
        case CarryContext::HAND: return "HAND";
        case CarryContext::POCKET: return "POCKET";
        case CarryContext::BAG: return "BAG";
        case CarryContext::FIXED: return "FIXED";
    }
    return "FIXED";
}

DoorState door_state_from_string(std::string_view s) {
    if (s == "SHUT") return DoorState::SHUT;
    if (s == "OPEN") return DoorState::OPEN;
    throw SceneError("bad door_state: " + std::string(s));
}

CarryContext carry_context_from_string(std::string_view s) {
    if (s == "HAND") return CarryContext::HAND;
    if (s == "POCKET") return CarryContext::POCKET;
    if (s == "BAG") return CarryContext::BAG;
    if (s == "FIXED") return CarryContext::FIXED;
    throw SceneError("bad context: " + std::string(s));
}

const DevicePlacement& AcousticScene::device(std::string_view id) const {
    for (const auto& d : devices) {
        if (d.id == id) return d;
    }
    throw UnknownDevice("unknown device: " + std::string(id));
}

double AcousticScene::distance_ft(const DevicePlacement& a,
                                  const DevicePlacement& b) const {
    if (same_space(a, b)) return std::abs(a.distance_ft - b.distance_ft);
    return a.distance_ft + b.distance_ft;
}

void AcousticScene::validate() const {
    for (const auto& d : devices) {
        if (d.space != spaces[0] && d.space != spaces[1]) {
            throw SceneError("device '" + d.id + "' in unknown space '" + d.space + "'");
        }
        if (d.distance_ft < 0.0) {
            throw SceneError("device '" + d.id + "' has negative distance");
        }
    }
}

double path_loss_db(const AcousticScene& scene, std::string_view tx_id,
                    std::string_view rx_id) {
    const auto& tx = scene.device(tx_id);
    const auto& rx = scene.device(rx_id);
    const auto& m = scene.losses;

    double d = std::max(scene.distance_ft(tx, rx), scene.losses.reference_distance_ft);
    double loss = 20.0 * std::log10(d / m.reference_distance_ft);

    if (!scene.same_space(tx, rx)) {
        loss += scene.door_state == DoorState::SHUT ? m.shut_door_loss_db
                                                    : m.open_door_loss_db;
    }
    loss += m.tx_context.of(tx.context);
    loss += m.rx_context.of(rx.context);
    return loss;
}

// -- deterministic noise ----------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0xA0761D6478BD642Full + stream * 0xE7037ED1A0B428DBull);
    return splitmix64(s);
}

GaussianStream::GaussianStream(std::uint64_t seed, std::uint64_t counter)
    : state_(mix_seed(seed, counter)) {}

double GaussianStream::next() {
    if (have_cached_) {
        have_cached_ = false;
        return cached_;
    }
    // Box-Muller on uniforms in (0, 1].
    double u1 = (static_cast<double>(splitmix64(state_) >> 11) + 1.0) * 0x1.0p-53;
    double u2 = (static_cast<double>(splitmix64(state_) >> 11) + 1.0) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
}

PcmFrame transmit(const AcousticScene& scene, std::string_view tx_id,
                  std::string_view rx_id, const PcmFrame& pcm,
                  std::uint64_t noise_counter) {
    double loss = path_loss_db(scene, tx_id, rx_id);
    double gain = std::pow(10.0, -loss / 20.0);
    double sigma = std::pow(10.0, scene.noise_floor_dbfs / 20.0);

    GaussianStream noise(scene.rng_seed, noise_counter);
    PcmFrame out;
    out.sample_rate = pcm.sample_rate;
    out.samples.resize(pcm.samples.size());
    for (std::size_t i = 0; i < pcm.samples.size(); ++i) {
        out.samples[i] = std::clamp(pcm.samples[i] * gain + sigma * noise.next(),
                                    -1.0, 1.0);
    }
    return out;
}

bool rf_visible(const AcousticScene& scene, std::string_view a_id,
                std::string_view b_id) {
    const auto& a = scene.device(a_id);
    const auto& b = scene.device(b_id);
    return scene.distance_ft(a, b) <= scene.rf.rf_range_ft;
}

// -- JSON -------------------------------------------------------------------

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw SceneError(std::string("missing field '") + key + "'");
    }
    return *it;
}

} // namespace

nlohmann::json losses_to_json(const LossModel& m) {
    return nlohmann::json{
        {"shut_door_loss_db", m.shut_door_loss_db},
        {"open_door_loss_db", m.open_door_loss_db},
        {"wall_loss_db", m.wall_loss_db},
        {"tx_context_loss_db",
         {{"HAND", m.tx_context.hand_db}, {"POCKET", m.tx_context.pocket_db}, {"BAG", m.tx_context.bag_db}}},
        {"rx_context_loss_db",
         {{"HAND", m.rx_context.hand_db}, {"POCKET", m.rx_context.pocket_db}, {"BAG", m.rx_context.bag_db}}},
        {"reference_distance_ft", m.reference_distance_ft},
    };
}

LossModel losses_from_json(const nlohmann::json& j) {
    LossModel m;
    m.shut_door_loss_db = require(j, "shut_door_loss_db").get<double>();
    m.open_door_loss_db = require(j, "open_door_loss_db").get<double>();
    if (j.contains("wall_loss_db")) m.wall_loss_db = j["wall_loss_db"].get<double>();
    const auto& tx = require(j, "tx_context_loss_db");
    const auto& rx = require(j, "rx_context_loss_db");
    m.tx_context = {require(tx, "HAND").get<double>(), require(tx, "POCKET").get<double>(),
                    require(tx, "BAG").get<double>()};
    m.rx_context = {require(rx, "HAND").get<double>(), require(rx, "POCKET").get<double>(),
                    require(rx, "BAG").get<double>()};
    if (j.contains("reference_distance_ft")) {
        m.reference_distance_ft = j["reference_distance_ft"].get<double>();
    }
    if (m.shut_door_loss_db < 0 || m.open_door_loss_db < 0 || m.wall_loss_db < 0 ||
        m.tx_context.hand_db < 0 || m.tx_context.pocket_db < 0 || m.tx_context.bag_db < 0 ||
        m.rx_context.hand_db < 0 || m.rx_context.pocket_db < 0 || m.rx_context.bag_db < 0) {
        throw SceneError("loss values must be >= 0");
    }
    if (m.rx_context.bag_db <= m.tx_context.bag_db) {
        throw SceneError("rx_context_loss_db.BAG must exceed tx_context_loss_db.BAG");
    }
    return m;
}

LossModel load_losses_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw SceneError("cannot open losses file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SceneError("losses file parse error: " + std::string(e.what()));
    }
    return losses_from_json(j);
}

AcousticScene scene_from_json(const nlohmann::json& j) {
    AcousticScene s;
    const auto& spaces = require(j, "spaces");
    if (!spaces.is_array() || spaces.size() != 2) {
        throw SceneError("'spaces' must list exactly two labels");
    }
    s.spaces = {spaces[0].get<std::string>(), spaces[1].get<std::string>()};
    s.door_state = door_state_from_string(require(j, "door_state").get<std::string>());

    for (const auto& dj : require(j, "devices")) {
        DevicePlacement d;
        d.id = require(dj, "id").get<std::string>();
        d.space = require(dj, "space").get<std::string>();
        d.distance_ft = require(dj, "distance_ft").get<double>();
        d.context = carry_context_from_string(require(dj, "context").get<std::string>());
        s.devices.push_back(std::move(d));
    }
    if (j.contains("losses")) s.losses = losses_from_json(j["losses"]);
    if (j.contains("noise_floor_dbfs")) s.noise_floor_dbfs = j["noise_floor_dbfs"].get<double>();
    if (j.contains("seed")) s.rng_seed = j["seed"].get<std::uint64_t>();
    if (j.contains("rf_range_ft")) s.rf.rf_range_ft = j["rf_range_ft"].get<double>();
    if (s.rf.rf_range_ft <= 0.0) throw SceneError("rf_range_ft must be positive");
    s.validate();
    return s;
}

nlohmann::json scene_to_json(const AcousticScene& s) {
    nlohmann::json devices = nlohmann::json::array();
    for (const auto& d : s.devices) {
        devices.push_back({{"id", d.id},
                           {"space", d.space},
                           {"distance_ft", d.distance_ft},
                           {"context", to_string(d.context)}});
    }
    return nlohmann::json{
        {"spaces", {s.spaces[0], s.spaces[1]}},
        {"door_state", to_string(s.door_state)},
        {"devices", devices},
        {"losses", losses_to_json(s.losses)},
        {"noise_floor_dbfs", s.noise_floor_dbfs},
        {"seed", s.rng_seed},
        {"rf_range_ft", s.rf.rf_range_ft},
    };
}

AcousticScene load_scene_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw SceneError("cannot open scene file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SceneError("scene file parse error: " + std::string(e.what()));
    }
    return scene_from_json(j);
}

} // namespace uspres::sim
