#include "cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace semigroup::cli {

int main_entry(int argc, char** argv) {
    CLI::App app{"Monte Carlo estimators for diffusion semigroups and their derivatives"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the experiments of a JSON config");
    run->add_option("config", config_path, "Config file")->required();

    SelftestOptions selftest_options;
    std::string fault;
    auto* selftest = app.add_subcommand("selftest", "Run the invariant suite");
    selftest->add_flag("--quick", selftest_options.quick, "Reduced sample counts with wider gates");
    selftest->add_option("--inject-fault", fault)->group("");

    std::string name;
    std::vector<double> at;
    auto* describe = app.add_subcommand("describe", "Print the geometry of a built-in model or system");
    describe->add_option("name", name, "Model or system name")->required();
    describe->add_option("--at", at, "Point (ambient coordinates)")->expected(1, kMaxDim + 1)->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }
    if (*run) return run_command(config_path, std::cout, std::cerr);
    if (*selftest) {
        if (!fault.empty()) selftest_options.inject_fault = fault;
        return selftest_command(selftest_options, std::cout, std::cerr);
    }
    return describe_command(name, at, std::cout, std::cerr);
}

}  // namespace semigroup::cli
