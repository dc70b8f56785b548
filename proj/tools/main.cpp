// Command-line front end: modem encode/decode on WAV files, the evaluation
// grid runner, scenario playback, and loss-model calibration.

#include "uspresence/harness.hpp"
#include "uspresence/modem.hpp"
#include "uspresence/pcm.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace uspres;

namespace {

int cmd_encode(const std::string& payload, int channel, double amplitude,
               const std::string& out_path) {
    PcmFrame pcm = modem::encode({channel, payload}, {}, amplitude);
    write_wav_file(pcm, out_path);
    std::cerr << "wrote " << pcm.samples.size() << " samples ("
              << pcm.duration_s() << " s) to " << out_path << "\n";
    return 0;
}

int cmd_decode(const std::string& in_path, int channel, double noise_floor) {
    PcmFrame pcm = read_wav_file(in_path);
    modem::ModemParams params;
    params.noise_floor_dbfs = noise_floor;
    if (pcm.sample_rate != params.sample_rate) {
        throw modem::InvalidFrame("expected a 48 kHz stream, got " +
                                  std::to_string(pcm.sample_rate) + " Hz");
    }
    for (const auto& frame : modem::decode(pcm, params, channel)) {
        std::cout << frame.payload << "\n";
    }
    return 0;
}

int cmd_run_grid(std::uint64_t seed, int trials, const std::string& out_path,
                 const std::string& losses_path, const std::string& summary_path,
                 bool serial) {
    harness::HarnessOptions opt;
    opt.master_seed = seed;
    opt.trials = trials;
    opt.parallel = !serial;
    if (!losses_path.empty()) {
        opt.losses = sim::load_losses_file(losses_path);
    }

    auto result = harness::run_grid(opt);

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open output: " + out_path);
    out << harness::to_csv(result.records);

    auto summary = harness::summary_to_json(result.summary);
    if (!summary_path.empty()) {
        std::ofstream sf(summary_path);
        if (!sf) throw std::runtime_error("cannot open output: " + summary_path);
        sf << summary.dump(2) << "\n";
    }
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int cmd_run_scenario(const std::string& scene_path, const std::string& script_path,
                     const std::string& out_dir) {
    std::ifstream f(scene_path);
    if (!f) throw sim::SceneError("cannot open scene file: " + scene_path);
    nlohmann::json scene_json;
    try {
        f >> scene_json;
    } catch (const nlohmann::json::exception& e) {
        throw sim::SceneError("scene file parse error: " + std::string(e.what()));
    }
    auto scene = sim::scene_from_json(scene_json);
    auto config = harness::config_from_scene_json(scene_json);
    auto script = harness::load_script_file(script_path);

    auto result = harness::scenario_play(scene, config, script);

    std::filesystem::create_directories(out_dir);
    services::EventSink transitions(out_dir + "/transitions.jsonl");
    for (const auto& tr : result.transitions) {
        transitions.append(to_json(tr));
    }
    services::EventSink commands(out_dir + "/commands.jsonl");
    for (const auto& cmd : result.commands) {
        commands.append({{"t", cmd.t}, {"command", services::to_string(cmd.command)}});
    }
    std::cout << "final state: " << protocol::to_string(result.final_state)
              << ", lock " << services::to_string(result.final_lock.bolt) << "\n"
              << result.transitions.size() << " transition(s), "
              << result.commands.size() << " command(s) written to " << out_dir
              << "\n";
    return 0;
}

int cmd_calibrate(const std::string& targets_path, const std::string& out_path,
                  int trials, std::uint64_t seed) {
    std::ifstream f(targets_path);
    if (!f) throw std::runtime_error("cannot open targets file: " + targets_path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("targets file parse error: " + std::string(e.what()));
    }

    auto targets = harness::targets_from_json(
        j.contains("targets") ? j["targets"] : j);
    harness::SearchGrid grid;
    if (j.contains("search_grid")) grid = harness::search_grid_from_json(j["search_grid"]);

    auto result = harness::calibrate(targets, grid, trials, seed);

    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open output: " + out_path);
    out << losses_to_json(result.model).dump(2) << "\n";

    std::cout << "best sse: " << result.sse << "\n"
              << "achieved: " << harness::summary_to_json(result.achieved).dump(2)
              << "\n"
              << "model written to " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Near-ultrasonic threshold-presence toolkit"};
    app.require_subcommand(1);

    std::string payload = "aa";
    int channel = 0;
    double amplitude = 0.7;
    std::string wav_path;
    auto* encode = app.add_subcommand("encode", "Encode a hex payload into a WAV file");
    encode->add_option("--payload", payload, "1..16 hex characters")->required();
    encode->add_option("--channel", channel, "channel index 0..3");
    encode->add_option("--amplitude", amplitude, "peak amplitude in (0,1]");
    encode->add_option("--out", wav_path, "output WAV path")->required();

    std::string in_path;
    double noise_floor = -55.0;
    auto* decode = app.add_subcommand("decode", "Decode payloads from a WAV file");
    decode->add_option("--in", in_path, "input WAV path")->required();
    decode->add_option("--channel", channel, "channel index 0..3");
    decode->add_option("--noise-floor", noise_floor, "squelch level in dBFS");

    std::uint64_t seed = 42;
    int trials = 20;
    std::string csv_path = "results.csv";
    std::string losses_path;
    std::string summary_path;
    bool serial = false;
    auto* run_grid = app.add_subcommand("run-grid", "Run the 216-condition evaluation grid");
    run_grid->add_option("--seed", seed, "master seed");
    run_grid->add_option("--trials", trials, "messages per condition");
    run_grid->add_option("--out", csv_path, "output CSV path");
    run_grid->add_option("--losses", losses_path, "loss model JSON (default: shipped calibration)");
    run_grid->add_option("--summary", summary_path, "also write the aggregate summary JSON here");
    run_grid->add_flag("--serial", serial, "use the serial reference runner");

    std::string scene_path;
    std::string script_path;
    std::string out_dir = "scenario_out";
    auto* run_scenario = app.add_subcommand("run-scenario", "Play a timed scenario script");
    run_scenario->add_option("--scene", scene_path, "scene JSON")->required();
    run_scenario->add_option("--script", script_path, "script JSON")->required();
    run_scenario->add_option("--out-dir", out_dir, "directory for transition/command logs");

    std::string targets_path;
    std::string model_out = "losses.json";
    int cal_trials = 20;
    std::uint64_t cal_seed = 42;
    auto* calibrate = app.add_subcommand("calibrate", "Grid-search the loss model against target rates");
    calibrate->add_option("--targets", targets_path, "targets + search grid JSON")->required();
    calibrate->add_option("--out", model_out, "output loss model JSON");
    calibrate->add_option("--trials", cal_trials, "messages per condition during search");
    calibrate->add_option("--seed", cal_seed, "master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (encode->parsed()) return cmd_encode(payload, channel, amplitude, wav_path);
        if (decode->parsed()) return cmd_decode(in_path, channel, noise_floor);
        if (run_grid->parsed()) {
            return cmd_run_grid(seed, trials, csv_path, losses_path, summary_path, serial);
        }
        if (run_scenario->parsed()) {
            return cmd_run_scenario(scene_path, script_path, out_dir);
        }
        if (calibrate->parsed()) {
            return cmd_calibrate(targets_path, model_out, cal_trials, cal_seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
