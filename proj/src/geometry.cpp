#include "facetflow/geometry.hpp"

#include <cmath>
#include <numbers>

namespace facetflow {

namespace {

constexpr double kPi = std::numbers::pi;

void build_grid(DomainSpec& d) {
    if (d.n < 8) throw InvalidGeometry("grid node count must be >= 8");
    d.nodes = Eigen::ArrayXd::LinSpaced(d.n, d.inner, d.outer);
    d.h = (d.outer - d.inner) / (d.n - 1);

    d.tv_weight.resize(d.n - 1);
    for (int i = 0; i + 1 < d.n; ++i) {
        const double rm = 0.5 * (d.nodes[i] + d.nodes[i + 1]);
        d.tv_weight[i] = (d.dim == 2) ? 2.0 * kPi * rm : 1.0;
    }

    d.mass.resize(d.n);
    for (int i = 0; i < d.n; ++i) {
        const double a = std::max(d.nodes[i] - 0.5 * d.h, d.inner);
        const double b = std::min(d.nodes[i] + 0.5 * d.h, d.outer);
        d.mass[i] = (d.dim == 2) ? kPi * (b * b - a * a) : (b - a);
    }

    d.gamma_nodes.clear();
    std::vector<double> gw;
    if (d.gamma_inner) {
        d.gamma_nodes.push_back(0);
        gw.push_back(d.dim == 2 ? 2.0 * kPi * d.inner : 1.0);
    }
    if (d.gamma_outer) {
        d.gamma_nodes.push_back(d.n - 1);
        gw.push_back(d.dim == 2 ? 2.0 * kPi * d.outer : 1.0);
    }
    d.gamma_weight = Eigen::Map<Eigen::ArrayXd>(gw.data(), static_cast<int>(gw.size()));
    if (d.gamma_nodes.empty() || d.gamma_measure() <= 0.0)
        throw InvalidGeometry("Gamma must have positive measure");
}

} // namespace

DomainSpec make_interval(double L, int n) {
    if (!(L > 0.0)) throw InvalidGeometry("interval length must be positive");
    DomainSpec d;
    d.kind = DomainKind::interval;
    d.inner = 0.0;
    d.outer = L;
    d.n = n;
    d.dim = 1;
    d.gamma_inner = d.gamma_outer = true;  // both endpoints are dynamic
    build_grid(d);
    return d;
}

DomainSpec make_ball(double R, int n) {
    if (!(R > 0.0)) throw InvalidGeometry("ball radius must be positive");
    DomainSpec d;
    d.kind = DomainKind::ball;
    d.inner = 0.0;
    d.outer = R;
    d.n = n;
    d.dim = 2;
    d.gamma_inner = false;  // the origin is not a boundary
    d.gamma_outer = true;
    build_grid(d);
    return d;
}

DomainSpec make_annulus(double r0, double R, int n, GammaSelect gamma) {
    if (!(r0 > 0.0) || !(r0 < R)) throw InvalidGeometry("annulus requires 0 < r0 < R");
    DomainSpec d;
    d.kind = DomainKind::annulus;
    d.inner = r0;
    d.outer = R;
    d.n = n;
    d.dim = 2;
    switch (gamma) {
        case GammaSelect::dflt:
        case GammaSelect::inner:
            d.gamma_inner = true;
            d.gamma_outer = false;
            break;
        case GammaSelect::outer:
            d.gamma_inner = false;
            d.gamma_outer = true;
            break;
        case GammaSelect::both:
            d.gamma_inner = d.gamma_outer = true;
            break;
    }
    build_grid(d);
    return d;
}

double gamma_curvature(const DomainSpec& dom) {
    if (dom.dim == 1) return 0.0;
    double kappa = std::numeric_limits<double>::infinity();
    if (dom.gamma_inner) kappa = std::min(kappa, -1.0 / dom.inner);
    if (dom.gamma_outer) kappa = std::min(kappa, 1.0 / dom.outer);
    return kappa;
}

void validate_facet(const FacetSpec& f, const DomainSpec& dom) {
    if (f.chi != 1 && f.chi != -1) throw InvalidFacet("chi must be +1 or -1");
    if (f.inner > f.outer) throw InvalidFacet("facet inner must not exceed outer");
    const double eps = 1e-12 * std::max(1.0, dom.outer);
    if (f.inner < dom.inner - eps || f.outer > dom.outer + eps)
        throw InvalidFacet("facet exceeds the domain");
}

FacetEdges classify_edges(const FacetSpec& f, const DomainSpec& dom) {
    const double eps = 1e-12 * std::max(1.0, dom.outer);
    FacetEdges e;
    if (std::abs(f.inner - dom.inner) <= eps) {
        if (dom.kind == DomainKind::ball || dom.kind == DomainKind::interval)
            e.inner = (dom.dim == 2) ? EdgeType::origin
                                     : (dom.gamma_inner ? EdgeType::gamma : EdgeType::neumann);
        else
            e.inner = dom.gamma_inner ? EdgeType::gamma : EdgeType::neumann;
    } else {
        e.inner = EdgeType::interior;
    }
    if (std::abs(f.outer - dom.outer) <= eps)
        e.outer = dom.gamma_outer ? EdgeType::gamma : EdgeType::neumann;
    else
        e.outer = EdgeType::interior;
    return e;
}

double shell_measure(const DomainSpec& dom, double r) {
    return dom.dim == 2 ? 2.0 * kPi * r : 1.0;
}

double band_measure(const DomainSpec& dom, double a, double b) {
    return dom.dim == 2 ? kPi * (b * b - a * a) : (b - a);
}

} // namespace facetflow
