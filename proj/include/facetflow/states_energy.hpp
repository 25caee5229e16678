#pragma once

#include <Eigen/Core>
#include <limits>
#include <utility>

#include "facetflow/geometry.hpp"

namespace facetflow {

/// A state of the flow: bulk field u on the grid nodes and boundary trace
/// field v on the Gamma nodes.
struct State {
    Eigen::ArrayXd u;
    Eigen::ArrayXd v;
};

struct FlowConfig {
    double tau = 1.0;
    double eps = 0.0;     // 0 selects the nonsmooth energy
    double dt = 0.0;
    double T = 0.0;
    double tol = 1e-9;    // absolute duality-gap threshold of the inner solve
    int max_iter = 400000;
    int out_every = 1;    // record every k-th step
};

void validate_state(const State& s, const DomainSpec& dom);
void validate_config(const FlowConfig& c);

/// Value of u at the Gamma node j (the boundary grid node, no extrapolation).
double trace_at(const State& s, const DomainSpec& dom, int j);

/// Discrete total variation of u plus the boundary mismatch term
/// sum_Gamma w * |gamma u - v|.
double energy_E(const State& s, const DomainSpec& dom);

/// Regularized energy: int sqrt(|grad u|^2 + eps^2) + (eps^2/2) int |grad u|^2
/// when the trace constraint gamma u = v holds (within 1e-12 * scale);
/// +infinity sentinel otherwise.
double energy_E_eps(const State& s, double eps, const DomainSpec& dom);

inline double infinite_energy() { return std::numeric_limits<double>::infinity(); }

/// tau-weighted inner product: int u1 u2 + tau int_Gamma v1 v2.
double inner_tau(const State& a, const State& b, double tau, const DomainSpec& dom);

inline double norm_tau(const State& a, double tau, const DomainSpec& dom) {
    return std::sqrt(inner_tau(a, a, tau, dom));
}

/// Pointwise lattice operations on both components: (sup, inf).
std::pair<State, State> lattice_sup_inf(const State& a, const State& b);

} // namespace facetflow
