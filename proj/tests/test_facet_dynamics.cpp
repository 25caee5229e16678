#include <doctest.h>

#include <cmath>

#include "facetflow/facet_dynamics.hpp"

using namespace facetflow;

namespace {

// Closed-form solutions of the 1D facet ODEs for u0(x) = min(x, 0.5), L = 1,
// tau = 1 (separable: (2-h) dh = -dt and (1+h) dh = dt):
//   h_r(t) = 2 - sqrt(2.25 + 2t),   h_l(t) = -1 + sqrt(1 + 2t).
double hr_exact(double t) { return 2.0 - std::sqrt(2.25 + 2.0 * t); }
double hl_exact(double t) { return -1.0 + std::sqrt(1.0 + 2.0 * t); }

double tcr_exact() {
    // facet collision: h_l(t) = h_r(t); bisection oracle
    double lo = 0.0, hi = 1.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (hl_exact(mid) < hr_exact(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void check_energy_monotone(const Trajectory& tr) {
    for (size_t k = 1; k < tr.size(); ++k)
        CHECK(tr.energy[k] <= tr.energy[k - 1] + 1e-9 * std::max(1.0, tr.energy[0]));
}

} // namespace

TEST_CASE("evolve_1d matches the separable closed form") {
    DomainSpec dom = make_interval(1.0, 201);
    Profile u0 = plateau_ramp(1.0, 0.0, 0.5);
    Trajectory tr = evolve_1d(u0, dom, 1.0, 1e-3, 0.1);

    // initial velocities -2/3 (right) and +1 (left)
    const double v_r = (tr.h_r[1] - tr.h_r[0]) / (tr.t[1] - tr.t[0]);
    const double v_l = (tr.h_l[1] - tr.h_l[0]) / (tr.t[1] - tr.t[0]);
    CHECK(v_r == doctest::Approx(-2.0 / 3.0).epsilon(2e-3));
    CHECK(v_l == doctest::Approx(1.0).epsilon(2e-3));

    const size_t last = tr.size() - 1;
    CHECK(tr.h_r[last] == doctest::Approx(hr_exact(tr.t[last])).epsilon(1e-7));
    CHECK(tr.h_l[last] == doctest::Approx(hl_exact(tr.t[last])).epsilon(1e-7));

    // gamma u = v for all t (gap identically zero)
    for (const auto& g : tr.gap) CHECK(g.abs().maxCoeff() < 1e-12);

    // edges are monotone: b decreasing, a increasing
    for (size_t k = 1; k < tr.size(); ++k) {
        CHECK(tr.edge_b[k] <= tr.edge_b[k - 1] + 1e-12);
        CHECK(tr.edge_a[k] >= tr.edge_a[k - 1] - 1e-12);
    }
    check_energy_monotone(tr);
}

TEST_CASE("evolve_1d stops at the facet collision") {
    DomainSpec dom = make_interval(1.0, 201);
    Profile u0 = plateau_ramp(1.0, 0.0, 0.5);
    Trajectory tr = evolve_1d(u0, dom, 1.0, 1e-3, 0.5);
    REQUIRE(!tr.events.empty());
    CHECK(tr.events.back().kind == "facet_collision");
    CHECK(tr.events.back().t == doctest::Approx(tcr_exact()).epsilon(0.02));
    auto det = detect_events(tr, 1e-6, dom.h);
    REQUIRE(!det.empty());
    CHECK(det.back().kind == "facet_collision");
}

TEST_CASE("evolve_1d is chi-antisymmetric pathwise") {
    DomainSpec dom = make_interval(1.0, 101);
    Profile up = plateau_ramp(1.0, 0.0, 0.5);
    Profile um = plateau_ramp(-1.0, 0.0, 0.5);
    Trajectory a = evolve_1d(up, dom, 1.0, 2e-3, 0.05);
    Trajectory b = evolve_1d(um, dom, 1.0, 2e-3, 0.05);
    for (size_t k = 0; k < a.size(); ++k) {
        CHECK((a.states[k].u + b.states[k].u).abs().maxCoeff() < 1e-9);
        CHECK((a.states[k].v + b.states[k].v).abs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("evolve_1d with tau = 2 matches the separable closed form") {
    // u0 = min(x, 0.5): h_r' = -1/(tau+1-h_r) integrates to 3h - h^2/2 = 1.375 - t,
    // i.e. h_r(t) = 3 - sqrt(6.25 + 2t); h_l(t) = -2 + sqrt(4 + 2t).
    DomainSpec dom = make_interval(1.0, 201);
    Profile u0 = plateau_ramp(1.0, 0.0, 0.5);
    Trajectory tr = evolve_1d(u0, dom, 2.0, 1e-3, 0.1);
    const double t = tr.t.back();
    CHECK(tr.h_r.back() == doctest::Approx(3.0 - std::sqrt(6.25 + 2.0 * t)).epsilon(1e-7));
    CHECK(tr.h_l.back() == doctest::Approx(-2.0 + std::sqrt(4.0 + 2.0 * t)).epsilon(1e-7));
}

TEST_CASE("evolve_1d handles a constant profile as a single static facet") {
    DomainSpec dom = make_interval(1.0, 65);
    Profile u0 = plateau_ramp(0.0, 0.0, 1.0, 0.7);
    Trajectory tr = evolve_1d(u0, dom, 1.0, 1e-2, 0.05);
    for (const auto& s : tr.states) {
        CHECK((s.u == 0.7).all());
        CHECK((s.v == 0.7).all());
    }
    CHECK(tr.energy.back() == 0.0);
}

TEST_CASE("tabulated profiles behave like their closed forms") {
    Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(11, 0.0, 1.0);
    Eigen::ArrayXd u(11);
    for (int i = 0; i < 11; ++i) u[i] = std::min(x[i], 0.5);
    Profile tab = tabulated_profile(x, u);
    CHECK(tab(0.25) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(tab(0.75) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(tab(-1.0) == 0.0);  // clamped outside the table
    CHECK(tab.deriv(0.25) == doctest::Approx(1.0).epsilon(1e-5));

    DomainSpec dom = make_interval(1.0, 101);
    Trajectory a = evolve_1d(tab, dom, 1.0, 2e-3, 0.02);
    Trajectory b = evolve_1d(plateau_ramp(1.0, 0.0, 0.5), dom, 1.0, 2e-3, 0.02);
    for (size_t k = 0; k < a.size(); ++k)
        CHECK((a.states[k].u - b.states[k].u).abs().maxCoeff() < 1e-9);

    CHECK_THROWS_AS(tabulated_profile(x, u.head(5)), InvalidParam);
}

TEST_CASE("evolve_1d rejects non-monotone data") {
    DomainSpec dom = make_interval(1.0, 65);
    Profile bad;
    bad.f = [](double x) { return std::sin(6.28 * x); };
    CHECK_THROWS_AS(evolve_1d(bad, dom, 1.0, 1e-2, 0.05), NonMonotone);
}

TEST_CASE("evolve_ball: rim facet moves at 2/7, bulk at -1 (opposite signs)") {
    DomainSpec dom = make_ball(2.0, 201);
    // decreasing profile, central plateau [0, 0.3], rim facet [1, 2]
    Profile u0 = plateau_ramp(-1.0, 0.3, 1.0, 2.0);
    Trajectory tr = evolve_ball(dom, 1.0, u0, 1e-3, 0.01);

    const double vfac = (tr.h_r[1] - tr.h_r[0]) / (tr.t[1] - tr.t[0]);
    CHECK(vfac == doctest::Approx(2.0 / 7.0).epsilon(5e-3));
    // a bulk point between the facets: u_t = chi_def / r = -1/r
    const double r = dom.nodes[65];
    const double vbulk = (tr.states[1].u[65] - tr.states[0].u[65]) / (tr.t[1] - tr.t[0]);
    CHECK(vbulk == doctest::Approx(-1.0 / r).epsilon(5e-3));
    CHECK(vfac * vbulk < 0.0);  // opposite signs: the facet expands

    // coherency: gap = 0, |facet velocity| < 1 while rho < R
    for (const auto& g : tr.gap) CHECK(g.abs().maxCoeff() < 1e-12);
    for (size_t k = 1; k < tr.size(); ++k) {
        const double v = (tr.h_r[k] - tr.h_r[k - 1]) / (tr.t[k] - tr.t[k - 1]);
        CHECK(std::abs(v) < 1.0);
        CHECK(tr.edge_b[k] <= tr.edge_b[k - 1] + 1e-12);  // rho decreasing: expansion
        CHECK(tr.edge_a[k] >= tr.edge_a[k - 1] - 1e-12);  // central facet grows
    }
    check_energy_monotone(tr);
}

TEST_CASE("evolve_ball: facet created at the boundary when rho0 = R") {
    DomainSpec dom = make_ball(2.0, 201);
    Profile u0 = plateau_ramp(-1.0, 0.3, 2.0, 2.0);  // u0'(R) = -1 != 0
    Trajectory tr = evolve_ball(dom, 2.0, u0, 1e-3, 0.02);
    const size_t last = tr.size() - 1;
    const double v = (tr.h_r[last] - tr.h_r[0]) / tr.t[last];
    CHECK(v > 0.5);
    CHECK(v <= 1.0 + 1e-9);
    CHECK(tr.edge_b[last] < 2.0);  // the facet has opened up
    check_energy_monotone(tr);
}

TEST_CASE("evolve_ball validates its input") {
    DomainSpec dom = make_ball(2.0, 65);
    Profile ramp = plateau_ramp(-1.0, 0.3, 1.0, 2.0);
    CHECK_THROWS_AS(evolve_ball(dom, 2.5, ramp, 1e-3, 0.01), InvalidInit);
    CHECK_THROWS_AS(evolve_ball(dom, 0.5, ramp, 1e-3, 0.01), InvalidInit);  // not flat there
}

TEST_CASE("evolve_annulus: detached regime gap rate") {
    DomainSpec dom = make_annulus(0.5, 4.0, 201);
    Profile u0 = plateau_ramp(1.0, 1.0, 3.5);
    Trajectory tr = evolve_annulus(dom, 1.0, u0, 1e-3, 0.05);

    REQUIRE(!tr.events.empty());
    CHECK(tr.events[0].kind == "detachment_onset");
    CHECK(tr.events[0].t == 0.0);

    // gap rate chi - lambda, lambda recomputed from rho(t) each step
    for (size_t k = 1; k < tr.size(); ++k) {
        const double dt = tr.t[k] - tr.t[k - 1];
        const double rate = (tr.gap[k][0] - tr.gap[k - 1][0]) / dt;
        const double lam = 2.0 / (tr.edge_a[k] + 0.5);
        CHECK(std::abs(rate - (1.0 - lam)) <= 2.0 * dt + 5e-3);
        CHECK(std::abs(tr.gap[k][0]) >= std::abs(tr.gap[k - 1][0]) - 1e-12);  // monotone gap
    }
    const double t_end = tr.t.back();
    CHECK(tr.gap.back()[0] == doctest::Approx(-t_end / 3.0).epsilon(0.08));
    check_energy_monotone(tr);

    auto det = detect_events(tr, 1e-4, dom.h);
    REQUIRE(!det.empty());
    CHECK(det[0].kind == "detachment_onset");
    CHECK(det[0].t <= 5 * 1e-3);
}

TEST_CASE("evolve_annulus: coherent regime keeps the gap closed") {
    DomainSpec dom = make_annulus(3.0, 6.0, 201);
    Profile u0 = plateau_ramp(1.0, 4.0, 5.5);
    Trajectory tr = evolve_annulus(dom, 4.0, u0, 1e-3, 0.05);
    CHECK(tr.events.empty());
    const double v = (tr.h_l[1] - tr.h_l[0]) / (tr.t[1] - tr.t[0]);
    CHECK(v == doctest::Approx(8.0 / 13.0).epsilon(5e-3));
    for (const auto& g : tr.gap) CHECK(g.abs().maxCoeff() < 1e-12);
    for (size_t k = 1; k < tr.size(); ++k) CHECK(tr.edge_a[k] >= tr.edge_a[k - 1] - 1e-12);
    check_energy_monotone(tr);
    CHECK(detect_events(tr, 1e-4, dom.h).empty());
}

TEST_CASE("evolve_annulus: reattachment after crossing rho + r0 = 2") {
    DomainSpec dom = make_annulus(0.2, 4.0, 201);
    Profile u0 = plateau_ramp(1.0, 1.7, 3.2);
    Trajectory tr = evolve_annulus(dom, 1.7, u0, 2e-3, 0.6);
    bool saw_detach = false, saw_reattach = false;
    double t_reattach = 0.0;
    for (const auto& e : tr.events) {
        if (e.kind == "detachment_onset") saw_detach = true;
        if (e.kind == "reattached") {
            saw_reattach = true;
            t_reattach = e.t;
        }
    }
    CHECK(saw_detach);
    CHECK(saw_reattach);
    CHECK(t_reattach > 0.05);
    // after reattachment the regime is coherent: gap pinned to zero
    for (size_t k = 0; k < tr.size(); ++k)
        if (tr.t[k] > t_reattach) CHECK(std::abs(tr.gap[k][0]) < 1e-12);
    check_energy_monotone(tr);
}

TEST_CASE("evolve_annulus and evolve_ball with general tau") {
    // coherent annulus at tau = 2: lambda = 2 rho chi/(rho^2 - r0^2 + 2 tau r0)
    DomainSpec ann = make_annulus(3.0, 6.0, 201);
    Profile ua = plateau_ramp(1.0, 4.0, 5.5);
    Trajectory ta = evolve_annulus(ann, 4.0, ua, 1e-3, 0.01, 2.0);
    const double va = (ta.h_l[1] - ta.h_l[0]) / (ta.t[1] - ta.t[0]);
    CHECK(va == doctest::Approx(8.0 / 19.0).epsilon(5e-3));
    for (const auto& g : ta.gap) CHECK(g.abs().maxCoeff() < 1e-12);

    // pinned at tau = 2 (rho + r0 = 2.7 < 4): gap rate chi/tau - lambda
    DomainSpec ann2 = make_annulus(1.2, 4.0, 201);
    Profile u2 = plateau_ramp(1.0, 1.5, 3.5);
    Trajectory t2 = evolve_annulus(ann2, 1.5, u2, 1e-3, 0.01, 2.0);
    const double rate = t2.gap.back()[0] / t2.t.back();
    CHECK(rate == doctest::Approx(0.5 - 2.0 / 2.7).epsilon(0.02));

    // disc rim at tau = 2: lambda = 2 rho chi/(R^2 - rho^2 + 2 tau R) = 2/11
    DomainSpec ball = make_ball(2.0, 201);
    Profile ub = plateau_ramp(-1.0, 0.3, 1.0, 2.0);
    Trajectory tb = evolve_ball(ball, 1.0, ub, 1e-3, 0.01, 2.0);
    const double vb = (tb.h_r[1] - tb.h_r[0]) / (tb.t[1] - tb.t[0]);
    CHECK(vb == doctest::Approx(2.0 / 11.0).epsilon(5e-3));
}

TEST_CASE("evolve_annulus validates init") {
    DomainSpec dom = make_annulus(1.2, 4.0, 65);
    Profile u0 = plateau_ramp(1.0, 1.4, 3.5);
    CHECK_THROWS_AS(evolve_annulus(dom, 0.9, u0, 1e-3, 0.01), InvalidInit);
}

TEST_CASE("boundary_onset trichotomy") {
    FacetReport forms = boundary_onset(make_annulus(2.0, 4.0, 16), +1, 1.0);
    CHECK(forms.tag == FacetCase::onset_facet_forms);
    CHECK(forms.lambda == doctest::Approx(0.5).epsilon(1e-14));  // bulk speed 1/r0

    FacetReport neutral = boundary_onset(make_annulus(1.0, 4.0, 16), +1, 1.0);
    CHECK(neutral.tag == FacetCase::onset_neutral);

    FacetReport detach = boundary_onset(make_annulus(0.5, 4.0, 16), +1, 1.0);
    CHECK(detach.tag == FacetCase::onset_detach);
    CHECK(detach.lambda == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(detach.mu) == 1.0);

    FacetReport ball = boundary_onset(make_ball(2.0, 16), +1, 1.0);
    CHECK(ball.tag == FacetCase::onset_facet_forms);
    CHECK(ball.coherent);

    // general tau: threshold r0 > tau
    CHECK(boundary_onset(make_annulus(1.5, 4.0, 16), +1, 2.0).tag ==
          FacetCase::onset_detach);
    CHECK(boundary_onset(make_annulus(1.5, 4.0, 16), +1, 1.0).tag ==
          FacetCase::onset_facet_forms);

    CHECK_THROWS_AS(boundary_onset(make_interval(1.0, 16), +1, 1.0), DomainMismatch);
}

TEST_CASE("evolve_annulus onset: no facet for r0 <= 1, facet for r0 > 1") {
    // r0 = 0.5 < 1: boundary layer detaches immediately, no facet forms
    DomainSpec d1 = make_annulus(0.5, 4.0, 201);
    Profile u1 = plateau_ramp(1.0, 0.5, 3.5);
    Trajectory t1 = evolve_annulus(d1, 0.5, u1, 1e-3, 0.03);
    REQUIRE(!t1.events.empty());
    CHECK(t1.events[0].kind == "detachment_onset");
    // gap rate chi(1 - 1/r0) = -1
    CHECK(t1.gap.back()[0] == doctest::Approx(-t1.t.back()).epsilon(0.05));

    // r0 = 2 > 1: facet forms instantly and stays coherent
    DomainSpec d2 = make_annulus(2.0, 4.0, 201);
    Profile u2 = plateau_ramp(1.0, 2.0, 3.5);
    Trajectory t2 = evolve_annulus(d2, 2.0, u2, 1e-3, 0.03);
    REQUIRE(!t2.events.empty());
    CHECK(t2.events[0].kind == "facet_created");
    for (const auto& g : t2.gap) CHECK(g.abs().maxCoeff() < 1e-12);
    CHECK(t2.edge_a.back() > 2.0);  // the facet opened up
}
