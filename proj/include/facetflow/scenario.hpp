#pragma once

#include <string>

#include <json.hpp>

#include "facetflow/pde_solver.hpp"

namespace facetflow {

enum class Mode { classify, evolve_exact, evolve_pde, compare, onset, sweep, selftest };

Mode mode_from_string(const std::string& s);
const char* to_string(Mode m);

struct AxisSpec {
    double min = 0.0, max = 0.0;
    int count = 1;
};

struct SweepSpec {
    AxisSpec r0, rho;
    std::vector<double> tau{1.0};
    double R = 4.0;
    int chi = 1;
};

struct Scenario {
    Mode mode = Mode::classify;
    bool has_domain = false;
    DomainSpec domain;
    bool has_facet = false;
    FacetSpec facet;
    bool trace_matched = true;
    int gap_sign = 0;
    int chi = 1;
    bool has_initial = false;
    Profile initial;
    double rho0 = std::numeric_limits<double>::quiet_NaN();
    FlowConfig flow;
    SweepSpec sweep;
    double event_gap_tol = 1e-4;
    nlohmann::json echo;  // the parsed input with defaults filled in
    std::string out_trajectory = "trajectory.csv";
    std::string out_report = "report.json";
    std::string out_metadata = "metadata.json";
};

Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);

/// Execute a scenario, writing artifacts into out_dir. Returns the process
/// exit code: 0 success, 2 assertion failure (e.g. an energy increase),
/// 1 error.
int run_scenario(const Scenario& s, const std::string& out_dir, unsigned seed = 12345,
                 bool quiet = false);

nlohmann::json report_to_json(const FacetReport& rep);
nlohmann::json events_to_json(const std::vector<TrajectoryEvent>& events);
void write_trajectory_csv(const Trajectory& tr, const std::string& path);

/// Repeatable float formatting for data files (17 significant digits).
std::string format_g17(double x);

/// Structural validation against the published report schema
/// (docs/report.schema.json); throws ValidationError on mismatch.
void validate_report_json(const nlohmann::json& j);

namespace acceptance {

/// Run the acceptance suite; prints one pass/fail line per criterion.
/// Returns the number of failed criteria.
int run_all(std::ostream& os, unsigned seed = 12345);

} // namespace acceptance

} // namespace facetflow
