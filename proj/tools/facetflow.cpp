#include <iostream>

#include <CLI11.hpp>

#include "facetflow/scenario.hpp"

namespace ff = facetflow;

namespace {

struct Options {
    std::string scenario_path;
    std::string out_dir = ".";
    unsigned seed = 12345;
    bool quiet = false;
};

int dispatch(const Options& opt, ff::Mode mode, bool scenario_required) {
    try {
        ff::Scenario s;
        if (!opt.scenario_path.empty()) {
            s = ff::load_scenario(opt.scenario_path);
            s.mode = mode;
        } else if (scenario_required) {
            std::cerr << "error: --scenario is required for this subcommand\n";
            return 1;
        } else {
            s.mode = mode;
        }
        return ff::run_scenario(s, opt.out_dir, opt.seed, opt.quiet);
    } catch (const ff::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"facetflow: total variation flow with dynamic boundary conditions"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--scenario", opt.scenario_path, "scenario JSON file");
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--seed", opt.seed, "seed for randomized property suites");
    app.add_flag("--quiet", opt.quiet, "suppress progress output");

    struct Sub {
        const char* name;
        const char* help;
        ff::Mode mode;
        bool needs_scenario;
    };
    const Sub subs[] = {
        {"classify", "classify a facet (calibrable/coherent/detached)", ff::Mode::classify, true},
        {"evolve", "exact facet dynamics", ff::Mode::evolve_exact, true},
        {"pde", "minimizing-movement PDE flow", ff::Mode::evolve_pde, true},
        {"compare", "PDE vs exact cross-validation", ff::Mode::compare, true},
        {"onset", "boundary onset trichotomy", ff::Mode::onset, true},
        {"sweep", "phase diagram over (r0, rho, tau)", ff::Mode::sweep, false},
        {"selftest", "run the acceptance suite", ff::Mode::selftest, false},
    };
    int rc = 0;
    for (const Sub& s : subs) {
        CLI::App* cmd = app.add_subcommand(s.name, s.help);
        cmd->fallthrough();  // accept the global flags after the subcommand
        cmd->callback([&opt, &rc, s]() { rc = dispatch(opt, s.mode, s.needs_scenario); });
    }

    CLI11_PARSE(app, argc, argv);
    return rc;
}
