#include <doctest.h>

#include <numbers>

#include "facetflow/geometry.hpp"

using namespace facetflow;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("make_domain validates and carries Gamma weights") {
    DomainSpec a = make_annulus(0.5, 4.0, 400);
    CHECK(a.gamma_nodes.size() == 1);
    CHECK(a.gamma_measure() == doctest::Approx(kPi).epsilon(1e-14));  // 2*pi*0.5

    DomainSpec i = make_interval(1.0, 64);
    CHECK(i.gamma_nodes.size() == 2);
    CHECK(i.gamma_measure() == doctest::Approx(2.0));

    CHECK_THROWS_AS(make_annulus(4.0, 0.5, 64), InvalidGeometry);
    CHECK_THROWS_AS(make_interval(-1.0, 64), InvalidGeometry);
    CHECK_THROWS_AS(make_interval(1.0, 4), InvalidGeometry);
}

TEST_CASE("grids are uniform, nodes hit the endpoints, masses sum to the volume") {
    for (const DomainSpec& d :
         {make_interval(2.0, 33), make_ball(2.0, 65), make_annulus(0.5, 4.0, 129)}) {
        CHECK(d.nodes[0] == doctest::Approx(d.inner).epsilon(1e-15));
        CHECK(d.nodes[d.n - 1] == doctest::Approx(d.outer).epsilon(1e-15));
        for (int i = 0; i + 1 < d.n; ++i) CHECK(d.nodes[i + 1] > d.nodes[i]);
        const double vol = d.dim == 2 ? kPi * (d.outer * d.outer - d.inner * d.inner)
                                      : d.outer - d.inner;
        CHECK(d.volume() == doctest::Approx(vol).epsilon(1e-12));
        CHECK((d.gamma_weight > 0).all());
    }
}

TEST_CASE("gamma weights sum to the exact Gamma measure within 1e-12") {
    DomainSpec b = make_ball(3.0, 64);
    CHECK(std::abs(b.gamma_measure() - 2 * kPi * 3.0) < 1e-12);
    DomainSpec both = make_annulus(1.0, 2.0, 64, GammaSelect::both);
    CHECK(std::abs(both.gamma_measure() - 2 * kPi * 3.0) < 1e-12);
}

TEST_CASE("gamma_curvature sign convention") {
    CHECK(gamma_curvature(make_ball(2.0, 16)) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(gamma_curvature(make_annulus(0.5, 4.0, 16)) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(gamma_curvature(make_interval(1.0, 16)) == 0.0);

    // exact products
    for (double r0 : {0.3, 1.0, 2.5})
        CHECK(gamma_curvature(make_annulus(r0, 4.0, 16)) * r0 == -1.0);
    for (double R : {0.7, 2.0, 5.0})
        CHECK(gamma_curvature(make_ball(R, 16)) * R == 1.0);
}

TEST_CASE("curvature coherency predicate matches r0 > tau for the inner circle") {
    for (double r0 : {0.2, 0.5, 0.9, 1.0, 1.5, 2.0, 3.0})
        for (double tau : {0.25, 0.5, 1.0, 2.0, 4.0}) {
            const bool by_curvature = gamma_curvature(make_annulus(r0, 5.0, 16)) > -1.0 / tau;
            CHECK(by_curvature == (r0 > tau));
        }
}

TEST_CASE("facet validation and edge classification") {
    DomainSpec a = make_annulus(0.5, 4.0, 64);
    CHECK_THROWS_AS(validate_facet(FacetSpec{1.0, 0.6, +1}, a), InvalidFacet);
    CHECK_THROWS_AS(validate_facet(FacetSpec{0.5, 1.0, 2}, a), InvalidFacet);
    CHECK_THROWS_AS(validate_facet(FacetSpec{0.1, 1.0, 1}, a), InvalidFacet);

    FacetEdges e = classify_edges(FacetSpec{0.5, 1.0, +1}, a);
    CHECK(e.inner == EdgeType::gamma);
    CHECK(e.outer == EdgeType::interior);
    e = classify_edges(FacetSpec{2.0, 4.0, +1}, a);
    CHECK(e.outer == EdgeType::neumann);
    e = classify_edges(FacetSpec{1.0, 2.0, +1}, a);
    CHECK(e.inner == EdgeType::interior);

    DomainSpec b = make_ball(2.0, 64);
    e = classify_edges(FacetSpec{1.0, 2.0, +1}, b);
    CHECK(e.outer == EdgeType::gamma);
    e = classify_edges(FacetSpec{0.0, 0.5, +1}, b);
    CHECK(e.inner == EdgeType::origin);
}
