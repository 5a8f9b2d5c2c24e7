#include <CLI11.hpp>

#include <iostream>

#include "cbricks/app/commands.hpp"

namespace {

struct Flag {
    std::string value;
    std::string key;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cbricks: material-network, reservoir, brick-wall and routing experiments"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir = "runs";
    std::uint64_t seed = 0;
    bool force = false;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "key=value config file")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "run seed (names the output directory)");
    app.add_option("--out", out_dir, "parent directory for run outputs")->capture_default_str();
    app.add_flag("--force", force, "replace an existing run directory");
    app.add_option("--set", overrides, "override a config entry, section.key=value")->allow_extra_args(false);

    // Subcommand flags are shorthands for config keys; flags win over the file.
    std::vector<Flag> flags;
    auto flag = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
        flags.push_back({"", key});
        return sub->add_option(name, flags.back().value, help);
    };
    flags.reserve(32);

    auto* attractor = app.add_subcommand("attractor", "drive a random network with two waveforms and map its phase portrait");
    flag(attractor, "--secondary", "attractor.secondary", "secondary waveform: square, sine or sawtooth");
    flag(attractor, "--duration", "sim.duration", "simulated time in seconds");
    flag(attractor, "--lag", "attractor.lag", "embedding lag in recorded samples");

    auto* reservoir = app.add_subcommand("reservoir", "train a linear readout on network states");
    flag(reservoir, "--task", "reservoir.task", "classify or memory");
    flag(reservoir, "--episodes", "classify.episodes", "classification episodes");
    flag(reservoir, "--max-delay", "memory.max_delay", "largest recall delay");
    std::string network_kind;
    reservoir->add_option("--network", network_kind, "random (default) or resistive")
        ->check(CLI::IsMember({"random", "resistive"}));
    bool sweep = false;
    reservoir->add_flag("--lambda-sweep", sweep, "write per-lambda NRMSE and weight norms");

    auto* wall = app.add_subcommand("wall", "run the brick-wall automaton, Voronoi or morphology");
    flag(wall, "--task", "wall.task", "excite, voronoi or morph");
    flag(wall, "--preset", "wall.preset", "paper-wall: the 20x30 wall of 600 bricks");
    flag(wall, "--steps", "wall.steps", "automaton steps");
    flag(wall, "--rows", "wall.rows", "wall rows");
    flag(wall, "--cols", "wall.cols", "wall columns");
    flag(wall, "--initial", "wall.initial", "initial state grid file");
    flag(wall, "--image", "wall.image", "binary image grid file");
    flag(wall, "--seeds", "wall.seed_count", "number of Voronoi seeds");

    auto* route = app.add_subcommand("route", "flood routing and gossip under brick failures");
    flag(route, "--scenario", "route.scenario", "scenario file");
    flag(route, "--max-faults", "route.max_faults", "largest fault count in the sweep");
    flag(route, "--trials", "route.trials", "random trials per fault count");
    flag(route, "--ttl", "route.ttl", "message time-to-live in rounds");

    CLI11_PARSE(app, argc, argv);

    try {
        cbricks::app::Config cfg;
        if (!config_path.empty()) cfg = cbricks::app::Config::load(config_path);
        for (const auto& o : overrides) cfg.set_assignment(o);
        for (const auto& f : flags)
            if (!f.value.empty()) cfg.set(f.key, f.value);
        if (network_kind == "resistive") {
            cfg.set("network.p_capacitive", "0");
            cfg.set("network.p_memristive", "0");
        }
        if (sweep) cfg.set("reservoir.lambda_sweep", "true");
        if (*seed_opt) cfg.set("run.seed", std::to_string(seed));

        const std::string command = app.get_subcommands().front()->get_name();
        const auto outcome = cbricks::app::run_command(command, cfg, out_dir, force);
        if (!outcome.summary.empty()) std::cout << outcome.summary;
        if (outcome.code != 0) {
            std::cerr << outcome.reason << '\n';
            return outcome.code;
        }
        std::cout << "output=" << outcome.dir.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cbricks::app::kInvalid;
    }
    return 0;
}
