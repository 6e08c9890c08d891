#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ttiga/driver.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"tt-iga: tensor-train IGA solver for parameter-dependent geometries"};
    app.require_subcommand(1);

    std::string config, axis, tensor;
    std::vector<std::string> values;

    auto* run = app.add_subcommand("run", "solve one configuration and write errors/ranks/timings/samples");
    run->add_option("config", config, "configuration file")->required();

    auto* sweep = app.add_subcommand("sweep", "repeat a run over one axis and write sweep.csv");
    sweep->add_option("config", config, "configuration file")->required();
    sweep->add_option("--axis", axis, "n, p, ell or params")->required();
    sweep->add_option("--values", values, "comma-separated values, e.g. 8,16,32")->required()->delimiter(',')->expected(0, -1);

    auto* info = app.add_subcommand("info", "print shapes and ranks of a .tt container");
    info->add_option("tensor-file", tensor, "container written by run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ttiga::exit_usage;
    }

    if (*run) return ttiga::run_command(config, std::cout, std::cerr);
    if (*sweep) return ttiga::sweep_command(config, axis, values, std::cout, std::cerr);
    return ttiga::info_command(tensor, std::cout, std::cerr);
}
