// Batch front end: ionchain <scenario> [--preset name] [--config file] [--out dir] [--set key=value]...
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ionchain/errors.hpp"
#include "ionchain/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Ion-chain crystal, mode, gate and cooling simulator"};
    app.require_subcommand(1);

    ionchain::ScenarioSpec spec;
    std::string out = ".";
    std::vector<std::string> sets;
    for (const char* name : {"equilibrium", "modes", "gate", "cool", "localcool"}) {
        CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " scenario");
        sub->add_option("--config", spec.config_path, "JSON config file");
        sub->add_option("--preset", spec.preset, "shipped preset name (fig1c, fig2a, ...)");
        sub->add_option("--out", out, "output directory");
        sub->add_option("--set", sets, "override, key=value with dotted keys");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : ionchain::exit_config;
    }

    try {
        spec.kind = ionchain::parse_scenario(app.get_subcommands().front()->get_name());
        spec.out_dir = out;
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0)
                throw ionchain::ConfigError("--set expects key=value, got '" + s + "'");
            spec.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
    } catch (const ionchain::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return ionchain::exit_config;
    }
    return ionchain::run_scenario(spec);
}
