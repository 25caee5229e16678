#include <doctest.h>

#include <cmath>
#include <random>

#include "facetflow/pde_solver.hpp"

using namespace facetflow;

namespace {

State sample_state(const DomainSpec& dom, const Profile& u0) {
    State s;
    s.u.resize(dom.n);
    for (int i = 0; i < dom.n; ++i) s.u[i] = u0(dom.nodes[i]);
    s.v.resize(dom.gamma_nodes.size());
    for (int j = 0; j < static_cast<int>(dom.gamma_nodes.size()); ++j)
        s.v[j] = trace_at(s, dom, j);
    return s;
}

FlowConfig quick_cfg(double dt, double T, double eps = 0.0) {
    FlowConfig c;
    c.dt = dt;
    c.T = T;
    c.eps = eps;
    c.tol = 1e-10;
    return c;
}

} // namespace

TEST_CASE("constant states are fixed points of the implicit step") {
    for (int variant = 0; variant < 2; ++variant) {
        DomainSpec dom = variant == 0 ? make_interval(1.0, 65)
                                      : make_annulus(0.5, 4.0, 65);
        State c{Eigen::ArrayXd::Constant(dom.n, 0.4),
                Eigen::ArrayXd::Constant(static_cast<int>(dom.gamma_nodes.size()), 0.4)};
        FlowConfig cfg = quick_cfg(1e-3, 1e-3);
        State s = step_implicit(c, cfg, dom);
        CHECK((s.u - c.u).abs().maxCoeff() < 1e-12);
        CHECK((s.v - c.v).abs().maxCoeff() < 1e-12);
        FlowConfig cfg_eps = quick_cfg(1e-3, 1e-3, 0.05);
        State se = step_implicit(c, cfg_eps, dom);
        CHECK((se.u - c.u).abs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("one implicit step reproduces the exact facet velocities") {
    DomainSpec dom = make_interval(1.0, 401);
    State s = sample_state(dom, plateau_ramp(1.0, 0.0, 0.5));
    FlowConfig cfg = quick_cfg(1e-3, 1e-3);
    State nxt = step_implicit(s, cfg, dom);
    const double move_r = nxt.u[dom.n - 1] - s.u[dom.n - 1];
    const double move_l = nxt.u[0] - s.u[0];
    CHECK(std::abs(move_r + (2.0 / 3.0) * cfg.dt) <= 5 * cfg.dt * cfg.dt + 2 * dom.h * cfg.dt);
    CHECK(std::abs(move_l - 1.0 * cfg.dt) <= 5 * cfg.dt * cfg.dt + 2 * dom.h * cfg.dt);
    // sharper: velocity within 2 percent
    CHECK(move_r / cfg.dt == doctest::Approx(-2.0 / 3.0).epsilon(0.02));
    CHECK(move_l / cfg.dt == doctest::Approx(1.0).epsilon(0.02));
    // boundary values move with the traces (coherent): v stays glued
    CHECK(std::abs(nxt.v[1] - nxt.u[dom.n - 1]) < 1e-12);
    // energy decreases
    CHECK(energy_E(nxt, dom) < energy_E(s, dom));
}

TEST_CASE("run_flow: energy decay, dissipation identity, gap bookkeeping") {
    DomainSpec dom = make_interval(1.0, 201);
    State s = sample_state(dom, plateau_ramp(1.0, 0.0, 0.5));
    FlowConfig cfg = quick_cfg(1e-3, 0.05);
    FlowRun run = run_flow(s, cfg, dom);
    CHECK(run.energy_violations == 0);
    CHECK(run.max_energy_identity_defect <= 5e-5);  // Bregman defect at facet merges
    CHECK(run.max_gap <= cfg.tol);
    for (const auto& g : run.traj.gap) CHECK(g.abs().maxCoeff() < 1e-10);
    // facet edges extracted from the solution move the right way
    CHECK(run.traj.edge_b.back() < 0.5);
    CHECK(run.traj.edge_a.back() > 0.0);
}

TEST_CASE("1D PDE tracks the exact trajectory") {
    DomainSpec dom = make_interval(1.0, 201);
    Profile u0 = plateau_ramp(1.0, 0.0, 0.5);
    State s = sample_state(dom, u0);
    FlowConfig cfg = quick_cfg(2e-3, 0.1);
    FlowRun run = run_flow(s, cfg, dom);
    Trajectory ex = evolve_1d(u0, dom, cfg.tau, cfg.dt, cfg.T);
    CompareReport cr = compare_exact(run.traj, ex, dom);
    CHECK(cr.linf_u <= 0.03);
    CHECK(cr.gap_err <= 1e-9);
    CHECK(cr.edge_b_err <= 0.05);
}

TEST_CASE("compare_exact of a trajectory with itself is zero") {
    DomainSpec dom = make_interval(1.0, 101);
    Trajectory tr = evolve_1d(plateau_ramp(1.0, 0.0, 0.5), dom, 1.0, 5e-3, 0.02);
    CompareReport cr = compare_exact(tr, tr, dom);
    CHECK(cr.linf_u == 0.0);
    CHECK(cr.l2_u == 0.0);
    CHECK(cr.edge_a_err == 0.0);
    CHECK(cr.gap_err == 0.0);

    DomainSpec other = make_interval(1.0, 51);
    Trajectory small = evolve_1d(plateau_ramp(1.0, 0.0, 0.5), other, 1.0, 5e-3, 0.02);
    CHECK_THROWS_AS(compare_exact(tr, small, dom), GridMismatch);
}

TEST_CASE("annulus PDE vs exact tracker in the detached regime") {
    DomainSpec dom = make_annulus(0.5, 4.0, 201);
    Profile u0 = plateau_ramp(1.0, 1.0, 3.5);
    State s = sample_state(dom, u0);
    FlowConfig cfg = quick_cfg(1e-3, 0.05);
    FlowRun run = run_flow(s, cfg, dom);
    Trajectory ex = evolve_annulus(dom, 1.0, u0, cfg.dt, cfg.T);
    CompareReport cr = compare_exact(run.traj, ex, dom);
    CHECK(cr.linf_u <= 0.02);
    CHECK(cr.gap_err <= 2e-3);   // discrete gap tracks v - gamma u of the exact run
    CHECK(cr.edge_b_err <= 0.1); // outer Neumann facet edge
}

TEST_CASE("ball PDE: facet-height velocity matches the coherent rim rate within 0.02") {
    DomainSpec dom = make_ball(2.0, 400);
    // decreasing radial profile with plateaus: rim facet [1, 2]
    State s = sample_state(dom, plateau_ramp(-1.0, 0.3, 1.0, 2.0));
    FlowConfig cfg = quick_cfg(1e-3, 0.03);
    FlowRun run = run_flow(s, cfg, dom);
    const size_t last = run.traj.size() - 1;
    const double v = (run.traj.h_r[last] - run.traj.h_r[0]) / run.traj.t[last];
    CHECK(std::abs(v - 2.0 / 7.0) <= 0.02);
    CHECK(run.energy_violations == 0);
    for (const auto& g : run.traj.gap) CHECK(g.abs().maxCoeff() < 1e-10);
}

TEST_CASE("annulus PDE detaches exactly in the pinned regime") {
    DomainSpec dom = make_annulus(0.5, 4.0, 201);
    State s = sample_state(dom, plateau_ramp(1.0, 1.0, 3.5));
    FlowConfig cfg = quick_cfg(1e-3, 0.05);
    FlowRun run = run_flow(s, cfg, dom);
    // gap opens at rate about chi - lambda = -1/3
    const double gap_end = run.traj.gap.back()[0];
    CHECK(gap_end < 0.0);
    CHECK(gap_end == doctest::Approx(-run.traj.t.back() / 3.0).epsilon(0.15));
    auto ev = detect_events(run.traj, 1e-4, 1.5 * dom.h);
    REQUIRE(!ev.empty());
    CHECK(ev[0].kind == "detachment_onset");
}

TEST_CASE("annulus PDE vs exact through detachment and reattachment") {
    DomainSpec dom = make_annulus(0.2, 4.0, 201);
    Profile u0 = plateau_ramp(1.0, 1.7, 3.2);
    State s = sample_state(dom, u0);
    FlowConfig cfg = quick_cfg(2e-3, 0.6);
    cfg.tol = 1e-4;
    FlowRun run = run_flow(s, cfg, dom);
    Trajectory ex = evolve_annulus(dom, 1.7, u0, cfg.dt, cfg.T);
    CompareReport cr = compare_exact(run.traj, ex, dom);
    CHECK(cr.linf_u <= 5e-4);
    CHECK(cr.gap_err <= 5e-4);

    // both runs open the same gap and close it again
    auto gap_min = [](const Trajectory& tr) {
        double g = 0.0;
        for (const auto& gr : tr.gap) g = std::min(g, gr[0]);
        return g;
    };
    CHECK(gap_min(run.traj) == doctest::Approx(gap_min(ex)).epsilon(0.05));
    CHECK(gap_min(run.traj) < -3e-3);
    CHECK(std::abs(run.traj.gap.back()[0]) <= 1e-10);
    CHECK(std::abs(ex.gap.back()[0]) <= 1e-12);
    CHECK(run.energy_violations == 0);
}

TEST_CASE("tau-scaling of the radial flow (2D dilation equivalence)") {
    const double tau = 2.0;
    DomainSpec dom_tau = make_annulus(1.0, 4.0, 101);
    DomainSpec dom_1 = make_annulus(1.0 / tau, 4.0 / tau, 101);
    Profile u0 = plateau_ramp(1.0, 1.5, 3.5);

    State s_tau = sample_state(dom_tau, u0);
    State s_1;
    s_1.u.resize(dom_1.n);
    for (int i = 0; i < dom_1.n; ++i) s_1.u[i] = u0(dom_1.nodes[i] * tau);
    s_1.v.resize(1);
    s_1.v << s_1.u[0];

    FlowConfig cfg_tau = quick_cfg(2e-3, 0.02);
    cfg_tau.tau = tau;
    FlowConfig cfg_1 = quick_cfg(2e-3 / tau, 0.02 / tau);
    FlowRun r_tau = run_flow(s_tau, cfg_tau, dom_tau);
    FlowRun r_1 = run_flow(s_1, cfg_1, dom_1);
    REQUIRE(r_tau.traj.size() == r_1.traj.size());
    for (size_t k = 0; k < r_tau.traj.size(); ++k)
        CHECK((r_tau.traj.states[k].u - r_1.traj.states[k].u).abs().maxCoeff() < 1e-9);
}

TEST_CASE("order preservation") {
    DomainSpec dom = make_interval(1.0, 101);
    State a = sample_state(dom, plateau_ramp(1.0, 0.0, 0.5));
    SUBCASE("translation pairs stay ordered (translation invariance)") {
        State b{a.u + 0.25, a.v + 0.25};
        FlowConfig cfg = quick_cfg(2e-3, 0.02);
        double worst = 0.0;
        CHECK(check_order_preserving(a, b, cfg, dom, &worst));
        CHECK(worst <= 1e-10);
    }
    SUBCASE("equal initial data stays equal (uniqueness)") {
        FlowConfig cfg = quick_cfg(2e-3, 0.02);
        double worst = 0.0;
        CHECK(check_order_preserving(a, a, cfg, dom, &worst));
        CHECK(worst <= 1e-12);
    }
    SUBCASE("random ordered monotone pairs") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (int k = 0; k < 5; ++k) {
            State lo, hi;
            lo.u.resize(dom.n);
            double acc = U(rng);
            for (int i = 0; i < dom.n; ++i) {
                lo.u[i] = acc;
                acc += 2.0 * U(rng) / dom.n;
            }
            hi.u = lo.u + 0.02 + 0.3 * U(rng);
            lo.v.resize(2);
            hi.v.resize(2);
            lo.v << lo.u[0], lo.u[dom.n - 1];
            hi.v << hi.u[0], hi.u[dom.n - 1];
            FlowConfig cfg = quick_cfg(2e-3, 0.02);
            CHECK(check_order_preserving(lo, hi, cfg, dom));
        }
    }
    SUBCASE("unordered input is rejected") {
        State b{a.u - 1.0, a.v - 1.0};
        FlowConfig cfg = quick_cfg(2e-3, 0.02);
        CHECK_THROWS_AS(check_order_preserving(a, b, cfg, dom), InvalidParam);
    }
}

TEST_CASE("the discrete flow is a contraction in the tau norm") {
    DomainSpec dom = make_annulus(1.0, 3.0, 101);
    State a = sample_state(dom, plateau_ramp(1.0, 1.5, 2.5));
    State b = sample_state(dom, plateau_ramp(0.7, 1.2, 2.8, 0.1));
    FlowConfig cfg = quick_cfg(2e-3, 0.03);
    cfg.tau = 2.0;
    FlowRun ra = run_flow(a, cfg, dom);
    FlowRun rb = run_flow(b, cfg, dom);
    double prev = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < ra.traj.size(); ++k) {
        State d{ra.traj.states[k].u - rb.traj.states[k].u,
                ra.traj.states[k].v - rb.traj.states[k].v};
        const double dist = std::sqrt(inner_tau(d, d, cfg.tau, dom));
        CHECK(dist <= prev + 1e-10);
        prev = dist;
    }
}

TEST_CASE("tau-scaling: the tau flow equals the scaled tau=1 flow") {
    // tau-problem on (0, L): equivalent to tau = 1 on (0, L/tau) by dilation
    const double tau = 2.0;
    DomainSpec dom_tau = make_interval(1.0, 101);
    DomainSpec dom_1 = make_interval(1.0 / tau, 101);
    Profile u0tau = plateau_ramp(1.0, 0.0, 0.5);

    State s_tau = sample_state(dom_tau, u0tau);
    State s_1;
    s_1.u.resize(dom_1.n);
    for (int i = 0; i < dom_1.n; ++i) s_1.u[i] = u0tau(dom_1.nodes[i] * tau);
    s_1.v.resize(2);
    s_1.v << s_1.u[0], s_1.u[dom_1.n - 1];

    FlowConfig cfg_tau = quick_cfg(2e-3, 0.02);
    cfg_tau.tau = tau;
    FlowConfig cfg_1 = quick_cfg(2e-3 / tau, 0.02 / tau);

    FlowRun r_tau = run_flow(s_tau, cfg_tau, dom_tau);
    FlowRun r_1 = run_flow(s_1, cfg_1, dom_1);
    REQUIRE(r_tau.traj.size() == r_1.traj.size());
    for (size_t k = 0; k < r_tau.traj.size(); ++k)
        CHECK((r_tau.traj.states[k].u - r_1.traj.states[k].u).abs().maxCoeff() < 1e-9);
}

TEST_CASE("regularized path: E_eps decreases and approximates the tv flow") {
    DomainSpec dom = make_interval(1.0, 201);
    State s = sample_state(dom, plateau_ramp(1.0, 0.0, 0.5));
    FlowConfig cfg = quick_cfg(1e-3, 0.02, 1e-3);
    cfg.tol = 1e-10;
    FlowRun reg = run_flow(s, cfg, dom);
    CHECK(reg.energy_violations == 0);
    FlowConfig cfg0 = quick_cfg(1e-3, 0.02);
    FlowRun tv = run_flow(s, cfg0, dom);
    CHECK((reg.traj.states.back().u - tv.traj.states.back().u).abs().maxCoeff() < 5e-3);
}

TEST_CASE("solver failure and robustness paths") {
    DomainSpec dom = make_interval(1.0, 65);
    State s = sample_state(dom, plateau_ramp(1.0, 0.0, 0.5));
    FlowConfig cfg = quick_cfg(-1.0, 0.1);
    CHECK_THROWS_AS(step_implicit(s, cfg, dom), ConfigError);
    // the active-set polish reaches the exact step even with one FISTA sweep
    FlowConfig tiny = quick_cfg(1e-3, 0.1);
    tiny.max_iter = 1;
    StepDiag d;
    State nxt = step_implicit(s, tiny, dom, nullptr, &d);
    CHECK(d.gap <= 1e-10);
    CHECK(energy_E(nxt, dom) < energy_E(s, dom));
}
