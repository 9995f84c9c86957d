// Batch entry point: simulate fig2|fig3|isotopes|shelve|rate [options]

#include <CLI11.hpp>

#include <iostream>

#include "srload/config.hpp"
#include "srload/error.hpp"
#include "srload/experiments.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Photoionization loading simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    std::size_t samples = 0;
    double horizon = 0;
    int workers = 0;
    std::size_t runs = 0;
    std::size_t loads = 0;
    double duration = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "master seed (overrides the config)");
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--samples", samples, "Monte Carlo trajectories per point");
        sub->add_option("--horizon", horizon, "censoring horizon, s");
        sub->add_option("--workers", workers, "worker threads (results do not depend on this)");
    };
    std::map<std::string, CLI::App*> subs;
    for (const char* name : srload::command_names) {
        auto* sub = app.add_subcommand(name);
        add_common(sub);
        subs[name] = sub;
    }
    subs["fig2"]->description("mean time to first ion vs oven power");
    subs["fig3"]->description("mean time to first ion vs 461 nm detuning");
    subs["isotopes"]->description("loaded isotope fractions");
    subs["shelve"]->description("single-ion fluorescence trace with shelving");
    subs["rate"]->description("loading rates at the operating point");
    for (const char* name : {"fig2", "fig3"})
        subs[name]->add_option("--runs", runs, "first-ion runs per grid point");
    subs["isotopes"]->add_option("--loads", loads, "number of simulated loads");
    subs["shelve"]->add_option("--duration", duration, "trace length, s");

    auto* print = app.add_subcommand("print-config", "print the effective configuration as JSON");
    print->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    std::string command;
    for (auto* s : app.get_subcommands())
        command = s->get_name();

    srload::SimConfig cfg;
    try {
        cfg = config_path.empty() ? srload::default_config() : srload::load_config(config_path);
        auto* sub = app.get_subcommand(command);
        if (sub->get_option_no_throw("--seed") && sub->count("--seed"))
            cfg.master_seed = seed;
        if (command != "print-config") {
            if (sub->count("--samples"))
                cfg.mc_samples = samples;
            if (sub->count("--horizon"))
                cfg.horizon = horizon;
            if (sub->count("--workers"))
                cfg.workers = workers;
            if (sub->get_option_no_throw("--runs") && sub->count("--runs"))
                cfg.experiments.runs_per_point = runs;
            if (sub->get_option_no_throw("--loads") && sub->count("--loads"))
                cfg.experiments.isotope_loads = loads;
            if (sub->get_option_no_throw("--duration") && sub->count("--duration"))
                cfg.experiments.shelve_duration = duration;
        }
        cfg.validate();
    } catch (const srload::ValidationError& e) {
        std::cerr << "config error: " << e.where() << ": " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }

    if (command == "print-config") {
        std::cout << srload::config_to_json(cfg).dump(2) << "\n";
        return 0;
    }

    try {
        const std::vector<std::string> args(argv + 1, argv + argc);
        const auto m = srload::run_command(command, cfg, out_dir, args);
        for (const auto& f : m.outputs)
            std::cout << (std::filesystem::path(out_dir) / f).string() << "\n";
        std::cout << (std::filesystem::path(out_dir) / "manifest.json").string() << "\n";
    } catch (const srload::ValidationError& e) {
        std::cerr << "usage error: " << e.where() << ": " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return exit_runtime;
    }
    return 0;
}
