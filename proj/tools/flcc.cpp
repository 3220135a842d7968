#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flcc/commands.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kRuntimeError = 4;

flcc::ExperimentConfig load_config(const std::string& path, bool seed_set, std::uint64_t seed) {
    flcc::ExperimentConfig cfg =
        path.empty() ? flcc::ExperimentConfig{} : flcc::parse_config_file(path);
    if (seed_set) cfg.seed = seed;
    return cfg;
}

void report(const flcc::RunArtifacts& art) {
    for (const std::string& f : art.files) std::cout << "wrote " << f << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FLCC: federated learning over a clustered CSMA/CA network"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string mode = "flcc";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> compare_dirs;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config file");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    CLI::App* net = app.add_subcommand("net-analyze", "success probability / capacity sweep");
    add_common(net);
    CLI::App* run = app.add_subcommand("fl-run", "federated training run");
    add_common(run);
    run->add_option("--mode", mode, "flcc | baseline")
        ->check(CLI::IsMember({"flcc", "baseline"}));
    CLI::App* cmp = app.add_subcommand("compare", "overlay round logs from completed runs");
    cmp->add_option("dirs", compare_dirs, "run directories")->expected(-2);
    cmp->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (net->parsed()) {
            report(flcc::cmd_net_analyze(load_config(config_path, seed_set, seed), out_dir));
        } else if (run->parsed()) {
            flcc::MacMode m = mode == "baseline" ? flcc::MacMode::Baseline : flcc::MacMode::Flcc;
            report(flcc::cmd_fl_run(load_config(config_path, seed_set, seed), m, out_dir));
        } else if (cmp->parsed()) {
            report(flcc::cmd_compare(compare_dirs, out_dir));
        }
    } catch (const flcc::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const flcc::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}
