#pragma once

#include <Eigen/Core>
#include <vector>

#include "facetflow/errors.hpp"

namespace facetflow {

enum class DomainKind { interval, ball, annulus };

/// Which boundary components carry the dynamic condition. The rest of the
/// boundary is homogeneous Neumann. For an interval both endpoints always
/// belong to Gamma; for a ball only the rim exists.
enum class GammaSelect { dflt, inner, outer, both };

/// A 1D interval, a disc, or an annulus with a uniform radial grid.
/// Immutable after construction; safe to share across threads.
struct DomainSpec {
    DomainKind kind = DomainKind::interval;
    double inner = 0.0;  // r0 for annulus, 0 otherwise
    double outer = 1.0;  // L or R
    int n = 0;           // grid node count
    bool gamma_inner = false;
    bool gamma_outer = false;
    int dim = 1;         // spatial dimension N (1 or 2)

    // derived grid data
    Eigen::ArrayXd nodes;          // n uniform nodes, nodes[0]=inner, nodes[n-1]=outer
    double h = 0.0;                // grid spacing
    Eigen::ArrayXd tv_weight;      // n-1 cell weights for the discrete TV (1 or 2*pi*r_mid)
    Eigen::ArrayXd mass;           // n lumped L2 masses (Voronoi cell measures)
    std::vector<int> gamma_nodes;  // node indices on Gamma
    Eigen::ArrayXd gamma_weight;   // H^{N-1} weight per Gamma node

    double length() const { return outer - inner; }
    double gamma_measure() const { return gamma_weight.sum(); }
    double volume() const { return mass.sum(); }
    bool is_radial() const { return dim == 2; }
};

DomainSpec make_interval(double L, int n);
DomainSpec make_ball(double R, int n);
DomainSpec make_annulus(double r0, double R, int n, GammaSelect gamma = GammaSelect::dflt);

/// Inward mean curvature of Gamma within the boundary; the infimum over the
/// selected components. Fixed so that kappa > -1/tau reproduces the annulus
/// facet-formation threshold r0 > tau: ball rim +1/R, annulus inner circle
/// -1/r0, annulus outer +1/R, interval endpoints 0.
double gamma_curvature(const DomainSpec& dom);

/// Radial facet: the closed band [inner, outer] (or [a,b] in 1D). inner ==
/// outer marks a boundary-onset probe. chi is the facet direction: the trace
/// of the direction function on the facet's interior edge (the outer edge for
/// a two-sided shelf), so a coherent facet moves with velocity sign chi.
struct FacetSpec {
    double inner = 0.0;
    double outer = 0.0;
    int chi = 1;

    bool onset() const { return inner == outer; }
};

void validate_facet(const FacetSpec& f, const DomainSpec& dom);

/// How each radius of a facet band meets the domain.
enum class EdgeType { interior, gamma, neumann, origin };

struct FacetEdges {
    EdgeType inner = EdgeType::interior;
    EdgeType outer = EdgeType::interior;
};

FacetEdges classify_edges(const FacetSpec& f, const DomainSpec& dom);

/// Measure of the sphere/point set at radius r: 2*pi*r in 2D, 1 in 1D.
double shell_measure(const DomainSpec& dom, double r);

/// Lebesgue measure of the band [a,b]: pi(b^2-a^2) in 2D, b-a in 1D.
double band_measure(const DomainSpec& dom, double a, double b);

} // namespace facetflow
