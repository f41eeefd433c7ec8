#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
    using namespace cbm::cli;
    CLI::App app{"Condition-based maintenance engine"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed;
    std::optional<std::string> now_text;
    std::optional<std::string> out;
    app.add_option("--seed", seed, "Override the scenario seed");
    app.add_option("--now", now_text, "Freeze the clock (epoch ms or ISO-8601 UTC)");
    app.add_option("--out", out, "Output directory");

    std::string scenario, policies, costs, lifetimes, store_dir, config;
    std::optional<std::string> rules;
    double fraction = 0.5;
    bool json = false;

    auto* validate = app.add_subcommand("validate", "Validate a scenario and print its normalized form");
    validate->add_option("scenario", scenario)->required();

    auto* simulate = app.add_subcommand("simulate", "Run a scenario through ingest, detection and the store");
    simulate->add_option("scenario", scenario)->required();
    simulate->add_option("--rules", rules, "Rule set file (default: limits at the failure level)");
    simulate->add_option("--fraction", fraction, "Inspection interval as a fraction of P-F");

    auto* compare = app.add_subcommand("compare", "Compare maintenance policies on a scenario");
    compare->add_option("scenario", scenario)->required();
    compare->add_option("policies", policies)->required();
    compare->add_option("costs", costs)->required();
    compare->add_option("--rules", rules, "Rule set for predictive policies");

    auto* fit = app.add_subcommand("fit", "Fit a Weibull model to lifetimes");
    fit->add_option("lifetimes", lifetimes)->required();
    fit->add_flag("--json", json, "Machine-readable output");

    auto* replay = app.add_subcommand("replay", "Re-run detection over a stored run");
    replay->add_option("store", store_dir)->required();
    replay->add_option("scenario", scenario)->required();
    replay->add_option("--rules", rules, "Rule set file (default: limits at the failure level)");
    replay->add_option("--fraction", fraction, "Inspection interval as a fraction of P-F");

    auto* serve = app.add_subcommand("serve", "Run the monitoring service");
    serve->add_option("--config", config, "Service config file");
    serve->add_option("scenario", scenario, "Fleet definition");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    std::optional<cbm::Timestamp> now;
    if (now_text) {
        try {
            now = parse_instant(*now_text);
        } catch (const std::exception& e) {
            std::cerr << e.what() << "\n";
            return kExitInvalid;
        }
    }

    CommandResult result;
    if (*validate) {
        result = cmd_validate(scenario, std::cout, std::cerr);
    } else if (*simulate) {
        result = cmd_simulate({scenario, rules, out, seed, fraction}, std::cout, std::cerr);
    } else if (*compare) {
        result = cmd_compare({scenario, policies, costs, rules, out, seed}, std::cout, std::cerr);
    } else if (*fit) {
        result = cmd_fit(lifetimes, json, std::cout, std::cerr);
    } else if (*replay) {
        result = cmd_replay({store_dir, scenario, rules, out, now, fraction}, std::cout, std::cerr);
    } else if (*serve) {
        result = cmd_serve({config, scenario, now}, std::cout, std::cerr);
    }
    if (result.report_path) std::cerr << "report: " << *result.report_path << "\n";
    return result.exit_code;
}
