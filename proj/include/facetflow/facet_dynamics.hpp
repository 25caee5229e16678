#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "facetflow/cahn_hoffman.hpp"

namespace facetflow {

/// Closed-form (or tabulated) initial profile; df may be empty, in which case
/// derivatives are taken by centered differences with step 1e-6 * scale.
struct Profile {
    std::function<double(double)> f;
    std::function<double(double)> df;
    double scale = 1.0;

    double operator()(double x) const { return f(x); }
    double deriv(double x) const;
};

/// u0(x) = offset + slope * clamp(x, lo, hi): flat before lo and after hi.
Profile plateau_ramp(double slope, double lo, double hi, double offset = 0.0);
Profile tabulated_profile(const Eigen::ArrayXd& x, const Eigen::ArrayXd& u);

struct TrajectoryEvent {
    double t;
    std::string kind;  // detachment_onset | facet_created | facet_collision | reattached | ...
};

/// Time series of states with the tracked facet data. edge_a/edge_b are the
/// end of the left/inner flat run and the start of the right/outer flat run;
/// h_l/h_r the corresponding facet heights (NaN where absent).
struct Trajectory {
    std::vector<double> t;
    std::vector<State> states;
    std::vector<double> edge_a, edge_b;
    std::vector<double> h_l, h_r;
    std::vector<Eigen::ArrayXd> gap;  // v - gamma u per Gamma node
    std::vector<double> energy;
    std::vector<double> dissipation;  // ||dU/dt||_tau^2 per recorded step (0 at t=0)
    std::vector<TrajectoryEvent> events;
    std::map<std::string, std::string> metadata;

    size_t size() const { return t.size(); }
};

/// Exact two-facet dynamics on an interval: h_r' = -chi/(tau + L - u0^{-1}(h_r)),
/// h_l' = +chi/(tau + u0^{-1}(h_l)), implicit midpoint with inner bisection;
/// stops at the facet collision.
Trajectory evolve_1d(const Profile& u0, const DomainSpec& dom, double tau, double dt, double T);

/// Exact radial dynamics on a ball: rim facet [rho(t), R] moving by the
/// coherent velocity, central facet [0, a(t)], bulk moving with div(chi e_r).
Trajectory evolve_ball(const DomainSpec& dom, double rho0, const Profile& u0, double dt,
                       double T, double tau = 1.0);

/// Exact annulus dynamics with per-step regime classification (coherent /
/// trace-pinned), gap tracking, the outer Neumann facet, and onset handling.
Trajectory evolve_annulus(const DomainSpec& dom, double rho0, const Profile& u0, double dt,
                          double T, double tau = 1.0);

/// Onset trichotomy at Gamma (no pre-existing facet).
FacetReport boundary_onset(const DomainSpec& dom, int chi, double tau);

/// Scan a trajectory for detachment (|gap| exceeds tol and keeps growing for
/// three consecutive steps) and facet collision (edges within edge_tol).
std::vector<TrajectoryEvent> detect_events(const Trajectory& traj, double tol, double edge_tol);

} // namespace facetflow
