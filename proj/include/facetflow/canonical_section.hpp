#pragma once

#include <vector>

#include "facetflow/cahn_hoffman.hpp"

namespace facetflow {

/// Sign of (gamma u - v) on the Gamma piece the facet touches.
enum class TraceStatus { matched, gap_positive, gap_negative };

struct SectionResult {
    RadialField field;   // sampled w on the facet grid
    double lambda;       // average of div z over the facet
    double mu;           // [z . nu] on Gamma_F (NaN without Gamma contact)
    double objective;    // I_tau value of the discrete minimizer
    int iterations = 0;
    bool mu_pinned = false;
};

/// Solve the localized canonical-section problem on one radial facet: the
/// box-constrained quadratic program min sum |div z|^2 + (1/tau) sum [z.nu]^2
/// over sampled w with |w| <= 1, prescribed traces at interior edges, zero
/// flux on Neumann pieces, and -[z.nu] in Sgn(gamma u - v) on Gamma.
SectionResult minimal_section_radial(const FacetSpec& facet, const DomainSpec& dom, double tau,
                                     TraceStatus ts = TraceStatus::matched, int m = 257,
                                     int max_iter = 200000);

struct Section1dResult {
    RadialField field;                 // z samples on the full grid (dim 1)
    double z_left;                     // z(0)
    double z_right;                    // z(L)
    std::vector<double> facet_lambda;  // average div per boundary facet (left, right)
    double objective;
    int iterations = 0;
};

/// Canonical section for a monotone 1D state: z = chi on strictly monotone
/// cells, affine on the boundary facets, with the Gamma values chosen by the
/// same quadratic program (free in [-1,1] when gamma u = v, pinned otherwise).
Section1dResult minimal_section_1d(const State& s, const DomainSpec& dom, double tau,
                                   double grad_tol = 1e-7, double trace_tol = 1e-9);

/// Optional detector: maximal flat runs (|du| <= grad_tol * scale) of a
/// monotone state, with chi read off the adjacent profile. Facets are
/// normally provided explicitly; this exists for state-driven callers.
std::vector<FacetSpec> detect_facets(const State& s, const DomainSpec& dom,
                                     double grad_tol = 1e-7);

namespace detail {

/// Tridiagonal box-constrained QP: minimize (1/2) w^T H w + lin^T w over
/// [-1,1]^m with selected coordinates pinned. Accelerated projected gradient
/// plus an active-set polish that solves the free tridiagonal segments
/// exactly.
struct TriQP {
    Eigen::ArrayXd diag;       // H diagonal (size m)
    Eigen::ArrayXd off;        // H off-diagonal (size m-1)
    Eigen::ArrayXd lin;        // linear term (size m; empty = zero)
    std::vector<char> pinned;  // size m
    Eigen::ArrayXd w;          // in: start value (pins set); out: solution
};

int solve_tri_qp(TriQP& qp, int max_iter, double kkt_tol = 1e-11);

} // namespace detail

} // namespace facetflow
