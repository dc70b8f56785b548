#pragma once

#include "uspresence/pcm.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace uspres::sim {

enum class DoorState { SHUT, OPEN };
enum class CarryContext { HAND, POCKET, BAG, FIXED };

std::string to_string(DoorState s);
std::string to_string(CarryContext c);
DoorState door_state_from_string(std::string_view s);
CarryContext carry_context_from_string(std::string_view s);

struct DevicePlacement {
    std::string id;
    std::string space;         // one of the scene's two space labels
    double distance_ft = 0.0;  // distance to the threshold, >= 0
    CarryContext context = CarryContext::FIXED;
};

// Attenuation applied when the mobile is carried in the given context.
// FIXED devices attenuate nothing.
struct ContextLoss {
    double hand_db = 0.0;
    double pocket_db = 0.0;
    double bag_db = 0.0;

    double of(CarryContext c) const {
        switch (c) {
            case CarryContext::HAND: return hand_db;
            case CarryContext::POCKET: return pocket_db;
            case CarryContext::BAG: return bag_db;
            case CarryContext::FIXED: return 0.0;
        }
        return 0.0;
    }
};

// Log-distance path loss plus fixed occlusion and carry-context offsets.
// The shipped values are regression anchors produced by calibrate()
// (data/losses.json, achieved rates in data/manifest.json), not physical
// claims.
struct LossModel {
    double shut_door_loss_db = 60.0;
    double open_door_loss_db = 41.0;
    double wall_loss_db = 70.0;
    ContextLoss tx_context{0.0, 3.0, 44.2};
    ContextLoss rx_context{0.0, 34.0, 44.7};
    double reference_distance_ft = 1.0;
};

struct RfModel {
    double rf_range_ft = 50.0;  // RF crosses thresholds unattenuated in range
};

struct UnknownDevice : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct SceneError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two labeled spaces separated by one threshold. Immutable after
// construction; transmit() takes an explicit noise counter so trials can be
// sequenced or sharded deterministically.
struct AcousticScene {
    std::array<std::string, 2> spaces = {"inside", "outside"};
    DoorState door_state = DoorState::SHUT;
    std::vector<DevicePlacement> devices;
    LossModel losses;
    RfModel rf;
    double noise_floor_dbfs = -55.0;
    std::uint64_t rng_seed = 0;

    const DevicePlacement& device(std::string_view id) const;
    bool same_space(const DevicePlacement& a, const DevicePlacement& b) const {
        return a.space == b.space;
    }
    // Same space: |d1 - d2|; across the threshold: d1 + d2.
    double distance_ft(const DevicePlacement& a, const DevicePlacement& b) const;
    void validate() const;  // throws SceneError on bad placements
};

double path_loss_db(const AcousticScene& scene, std::string_view tx_id,
                    std::string_view rx_id);

// Attenuates by path loss and adds white Gaussian noise at the scene's
// noise floor; deterministic in (rng_seed, noise_counter). Output clamped
// to [-1, 1].
PcmFrame transmit(const AcousticScene& scene, std::string_view tx_id,
                  std::string_view rx_id, const PcmFrame& pcm,
                  std::uint64_t noise_counter);

bool rf_visible(const AcousticScene& scene, std::string_view a_id,
                std::string_view b_id);

// Counter-indexed standard-normal stream (splitmix64 + Box-Muller), stable
// across platforms.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t counter);
    double next();

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Scene description JSON (schema: data/schemas/scene.schema.json).
AcousticScene scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const AcousticScene& scene);
AcousticScene load_scene_file(const std::string& path);

nlohmann::json losses_to_json(const LossModel& m);
LossModel losses_from_json(const nlohmann::json& j);
LossModel load_losses_file(const std::string& path);

} // namespace uspres::sim
