#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "facetflow/radial_field.hpp"
#include "facetflow/states_energy.hpp"

namespace facetflow {

enum class FacetCase {
    ball_coherent,
    annulus_coherent,
    annulus_borderline,
    annulus_detached,
    onset_facet_forms,
    onset_neutral,
    onset_detach,
    interior,
};

const char* to_string(FacetCase c);

/// Classification result for a facet: velocity lambda = div z, boundary flux
/// mu = [z . nu] on Gamma_F (outer normal of the domain; NaN when the facet
/// does not touch Gamma), flags, and the witness field.
struct FacetReport {
    double lambda = 0.0;
    double mu = std::numeric_limits<double>::quiet_NaN();
    bool calibrable = false;
    bool coherent = false;
    bool detached = false;
    FacetCase tag = FacetCase::interior;
    RadialField witness;

    bool has_mu() const { return std::isfinite(mu); }
};

struct QuadMinResult {
    double lambda;
    double mu;
    double value;  // a*lambda^2 + b*mu^2/tau
};

/// Minimize a*lambda^2 + b*mu^2/tau subject to a*lambda = c + b*mu.
/// The minimizer satisfies tau*lambda + mu = 0 exactly; no box constraint.
QuadMinResult quad_min(double a, double b, double c, double tau);

struct ChResult {
    RadialField field;
    double lambda;
    double mu;
    bool feasible;  // max |w| <= 1 on the band
};

/// Coherent field on the rim facet [rho, R] of a ball (Gamma = outer circle):
/// solves (rw)'/r = lambda, w(rho) = -chi, tau*lambda + [z.nu](R) = 0.
ChResult ch_ball_coherent(double R, double rho, int chi, double tau);

/// Coherent field on the inner facet [r0, rho] of an annulus (Gamma = inner
/// circle): (rw)'/r = lambda, w(rho) = chi, w(r0) = tau*lambda. Feasible iff
/// rho + r0 >= 2*tau.
ChResult ch_annulus_coherent(double r0, double rho, int chi, double tau);

/// Trace-pinned field with w(r0) = w(rho) = chi: lambda = 2*chi/(rho+r0) and
/// mu = -chi. Always feasible.
ChResult ch_annulus_detached(double r0, double rho, int chi);

/// Decision tree over the facet cases. gap_sign is sign(gamma u - v) on
/// Gamma_F and is consulted only when trace_matched is false (0 infers the
/// standard bulk-runs-ahead orientation, sign chi).
FacetReport classify_facet(const DomainSpec& dom, const FacetSpec& facet, double tau,
                           bool trace_matched = true, int gap_sign = 0);

/// Localized objective int_F |div z|^2 + (1/tau) int_{Gamma_F} [z.nu]^2.
double i_tau(const RadialField& field, const FacetSpec& facet, const DomainSpec& dom,
             double tau);

/// Both sides of lambda_z |F| = H(d+F) - H(d-F) + mu_z H(Gamma_F).
std::pair<double, double> balance_identity(const RadialField& field, const FacetSpec& facet,
                                           const DomainSpec& dom);

struct ChViolation {
    std::string what;
    double r;
    double value;
};

struct ChCheck {
    bool ok = true;
    std::vector<ChViolation> violations;
};

/// Verify the Cahn-Hoffman admissibility conditions: |w| <= 1, prescribed
/// traces at interior facet edges, zero flux on Neumann edges.
ChCheck verify_ch(const RadialField& field, const FacetSpec& facet, const DomainSpec& dom);

/// Dilate a field and its domain by tau_ratio; I_tau(z^tau) = tau^{N-2} I_1(z).
std::pair<RadialField, DomainSpec> scale_field(const RadialField& field, const DomainSpec& dom,
                                               double tau_ratio);

inline FacetSpec scale_facet(const FacetSpec& f, double k) {
    return FacetSpec{f.inner * k, f.outer * k, f.chi};
}

/// Prescribed nodal values of w at the facet's edges; unset = unconstrained.
/// gamma_side: -1 Gamma at the inner edge, +1 at the outer edge, 0 none.
struct EdgeConstraints {
    std::optional<double> w_inner;
    std::optional<double> w_outer;
    int gamma_side = 0;
};

EdgeConstraints edge_constraints(const FacetSpec& facet, const DomainSpec& dom);

} // namespace facetflow
