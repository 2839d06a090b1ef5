#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "corrlab/cli.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw corrlab::cli::ConfigError({"cannot read config file " + path});
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

int main(int argc, char** argv) {
    namespace cli = corrlab::cli;

    CLI::App app{"Correlation realizability, Bell/CHSH checks and GHZ simulations"};
    app.set_version_flag("--version", cli::version_string());

    std::string config_path;
    std::string preset;
    std::string out_path;
    std::string role;
    std::string listen;
    std::string nodes;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> trials;
    bool summary = false;
    bool list_presets = false;

    app.add_option("--config", config_path, "Config file (key = value lines)")->check(CLI::ExistingFile);
    app.add_option("--preset", preset, "Built-in named config");
    app.add_option("--seed", seed, "Override the config seed");
    app.add_option("--trials", trials, "Override the config trial count");
    app.add_option("--out", out_path, "Also write the report to this file");
    app.add_flag("--summary", summary, "Print the one-line summary instead of the report");
    app.add_option("--role", role, "ghz-net role: coordinator, node1, node2 or node3");
    app.add_option("--listen", listen, "ghz-net node listen address host:port");
    app.add_option("--nodes", nodes, "ghz-net coordinator node addresses, comma-separated host:port");
    app.add_flag("--list-presets", list_presets, "List preset names and exit");
    app.get_option("--config")->excludes("--preset");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : cli::kExitConfig;
    }

    if (list_presets) {
        for (const auto& [name, text] : cli::presets()) {
            std::cout << name << '\n';
        }
        return cli::kExitOk;
    }

    try {
        std::string text;
        if (!config_path.empty()) {
            text = read_file(config_path);
        } else if (!preset.empty()) {
            text = cli::preset_text(preset);
        }

        std::vector<std::pair<std::string, std::string>> overrides;
        if (!role.empty()) {
            if (role == "coordinator") {
                overrides.emplace_back("mode", "ghz-net-coordinator");
            } else {
                overrides.emplace_back("mode", "ghz-net-node");
                overrides.emplace_back("role", role);
            }
        }
        if (seed) {
            overrides.emplace_back("seed", std::to_string(*seed));
        }
        if (trials) {
            overrides.emplace_back("trials", *trials);
        }
        if (!listen.empty()) {
            overrides.emplace_back("listen", listen);
        }
        if (!nodes.empty()) {
            overrides.emplace_back("nodes", nodes);
        }
        if (text.empty() && overrides.empty()) {
            throw cli::ConfigError({"nothing to run: give --config, --preset or --role"});
        }

        const cli::ExperimentConfig cfg = cli::parse_config(text, overrides);
        const cli::Report report = cli::run(cfg, &std::cout);
        const std::string body = report.text();
        if (!out_path.empty()) {
            std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
            if (!out || !(out << body) || !out.flush()) {
                throw corrlab::DomainError("cannot write report to " + out_path);
            }
        }
        std::cout << (summary ? report.summary + "\n" : body) << std::flush;
        return report.status;
    } catch (const cli::ConfigError& e) {
        for (const auto& msg : e.errors()) {
            std::cerr << "config error: " << msg << '\n';
        }
        return cli::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::exit_status_for(e);
    }
}
