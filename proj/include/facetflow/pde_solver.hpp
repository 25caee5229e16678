#pragma once

#include "facetflow/canonical_section.hpp"
#include "facetflow/facet_dynamics.hpp"

namespace facetflow {

/// Dual variables of the implicit step: p on cells (the discrete Cahn-Hoffman
/// field scaled by the TV weights) and q on Gamma nodes (q_j/omega_j =
/// -[z.nu]_j). Kept warm across steps.
struct DualState {
    Eigen::ArrayXd p;
    Eigen::ArrayXd q;
};

struct StepDiag {
    int iterations = 0;
    double gap = 0.0;  // primal-dual gap at the accepted point
};

/// One minimizing-movement step: the unique minimizer of
/// (1/2dt)||u-u^n||^2 + (tau/2dt)||v-v^n||^2 + E(u,v) (or E_eps for eps > 0,
/// with the trace constraint folded in).
State step_implicit(const State& prev, const FlowConfig& cfg, const DomainSpec& dom,
                    DualState* warm = nullptr, StepDiag* diag = nullptr);

struct FlowRun {
    Trajectory traj;
    long total_inner_iterations = 0;
    int energy_violations = 0;             // steps with E(U^{n+1}) > E(U^n)
    double max_energy_identity_defect = 0; // max |dE - dt ||dU/dt||^2| over steps
    double max_gap = 0.0;                  // worst inner duality gap
};

/// Iterate step_implicit to the horizon, recording energy, dissipation, the
/// boundary gap, and extracted facet edges. A cell counts as flat when its
/// jump satisfies |du| <= edge_grad_tol * (data scale).
FlowRun run_flow(const State& init, const FlowConfig& cfg, const DomainSpec& dom,
                 double edge_grad_tol = 1e-5);

/// Run both flows from ordered initial states and verify the ordering at
/// every output time within 1e-8 + solver tolerance.
bool check_order_preserving(const State& a0, const State& b0, const FlowConfig& cfg,
                            const DomainSpec& dom, double* worst_violation = nullptr);

struct CompareReport {
    double linf_u = 0.0;    // max over times of max_i |u_pde - u_exact|
    double l2_u = 0.0;      // max over times of the weighted L2 error
    double edge_a_err = 0.0;
    double edge_b_err = 0.0;
    double gap_err = 0.0;
    std::vector<double> linf_per_time;
};

/// Error report of a PDE trajectory against an exact tracker trajectory on
/// the same domain (exact states are linearly resampled in time).
CompareReport compare_exact(const Trajectory& pde, const Trajectory& exact,
                            const DomainSpec& dom);

} // namespace facetflow
