#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "facetflow/scenario.hpp"

namespace facetflow::acceptance {

namespace {

constexpr double kPi = std::numbers::pi;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Suite {
    std::ostream& os;
    unsigned seed;
    int failures = 0;

    // fields constructed by criteria 1-3, checked again by criterion 4
    struct BuiltField {
        RadialField field;
        FacetSpec facet;
        DomainSpec dom;
    };
    std::vector<BuiltField> built{};

    // PDE-run statistics aggregated for criterion 8
    struct RunRecord {
        std::string label;
        double defect;
        double tol;
        bool identity_applicable;  // initial data has established facet structure
    };
    std::vector<RunRecord> runs{};
    int energy_violations = 0;
    int pde_runs = 0;

    void emit(int num, const std::string& name, bool pass, const std::string& detail,
              double ms) {
        if (!pass) ++failures;
        os << (pass ? "[PASS]" : "[FAIL]") << " C" << num << ' ' << name << ": " << detail
           << " (" << std::fixed << std::setprecision(1) << ms << " ms)\n"
           << std::defaultfloat;
    }

    void track(const FlowRun& run, double tol, const std::string& label,
               bool identity_applicable = true) {
        ++pde_runs;
        energy_violations += run.energy_violations;
        runs.push_back({label, run.max_energy_identity_defect, tol, identity_applicable});
    }
};

std::string fmt(double x) {
    std::ostringstream ss;
    ss << std::setprecision(10) << x;
    return ss.str();
}

// ---- C1: closed-form reproduction --------------------------------------

void c1(Suite& S) {
    const auto t0 = Clock::now();
    DomainSpec dom = make_ball(2.0, 64);
    FacetSpec facet{1.0, 2.0, +1};
    FacetReport rep = classify_facet(dom, facet, 1.0);
    // mu carries the [z.nu] sign (outer normal): -2/7 for lambda = +2/7
    const bool values = std::abs(rep.lambda - 2.0 / 7.0) <= 1e-14 &&
                        std::abs(rep.mu + 2.0 / 7.0) <= 1e-14 && rep.coherent &&
                        rep.calibrable && !rep.detached && rep.tag == FacetCase::ball_coherent;
    double best_ms = 1e9;
    for (int k = 0; k < 50; ++k) {
        const auto s = Clock::now();
        volatile double sink = classify_facet(dom, facet, 1.0).lambda;
        (void)sink;
        best_ms = std::min(best_ms, ms_since(s));
    }
    S.built.push_back({rep.witness, facet, dom});
    const bool pass = values && best_ms < 1.0;
    S.emit(1, "closed-form disc rim-facet velocity", pass,
           "lambda=" + fmt(rep.lambda) + " mu=" + fmt(rep.mu) + " call=" + fmt(best_ms) + "ms",
           ms_since(t0));
}

// ---- C2: detachment threshold -------------------------------------------

void c2(Suite& S) {
    const auto t0 = Clock::now();
    int bad = 0, cells = 0;
    for (int a = 0; a < 50; ++a) {
        const double r0 = 3.0 * (a + 1) / 51.0;
        DomainSpec dom = make_annulus(r0, 4.0 + r0, 16, GammaSelect::inner);
        for (int b = 0; b < 50; ++b) {
            const double rho = r0 + (4.0 - r0) * (b + 1) / 50.0;
            FacetReport rep = classify_facet(dom, FacetSpec{r0, rho, +1}, 1.0);
            const bool want = rho + r0 < 2.0;
            if (rep.detached != want) ++bad;
            ++cells;
        }
    }
    // borderline cells: rho + r0 = 2 exactly
    int bad_border = 0;
    for (double r0 : {0.5, 0.8, 0.9999}) {
        DomainSpec dom = make_annulus(r0, 8.0, 16, GammaSelect::inner);
        FacetReport rep = classify_facet(dom, FacetSpec{r0, 2.0 - r0, +1}, 1.0);
        if (!(rep.coherent && std::abs(std::abs(rep.lambda) - 1.0) <= 1e-12 &&
              rep.tag == FacetCase::annulus_borderline))
            ++bad_border;
        S.built.push_back({rep.witness, FacetSpec{r0, 2.0 - r0, +1}, dom});
    }
    const double ms = ms_since(t0);
    S.emit(2, "detachment threshold rho+r0<2 on 50x50 grid", bad == 0 && bad_border == 0 &&
               ms < 1000.0,
           std::to_string(cells) + " cells, " + std::to_string(bad) + " mismatches, " +
               std::to_string(bad_border) + " borderline failures",
           ms);
}

// ---- C3: canonical-section agreement ------------------------------------

void c3(Suite& S) {
    const auto t0 = Clock::now();
    struct Config {
        char kind;  // 'b' ball, 'a' annulus
        double in, out;
        int chi;
    };
    const std::vector<Config> configs = {
        {'b', 1.0, 2.0, +1},  {'b', 2.0, 3.0, +1},  {'b', 1.9, 2.0, +1},
        {'b', 0.5, 5.0, +1},  {'b', 1.0, 2.0, -1},  {'a', 3.0, 4.0, +1},
        {'a', 2.0, 3.0, +1},  {'a', 1.5, 2.0, +1},  {'a', 0.5, 1.6, +1},
        {'a', 2.5, 3.0, -1},  {'a', 0.5, 1.0, +1},  {'a', 0.3, 0.8, +1},
        {'a', 0.9, 1.0, +1},  {'a', 0.2, 1.5, +1},  {'a', 0.5, 1.0, -1},
        {'a', 0.5, 1.5, +1},  {'a', 0.8, 1.2, +1},  {'a', 0.9, 1.1, +1},
        {'a', 0.6, 1.4, +1},  {'a', 0.7, 1.3, -1},
    };
    double worst = 0.0;
    for (const auto& c : configs) {
        DomainSpec dom = c.kind == 'b' ? make_ball(c.out, 32)
                                       : make_annulus(c.in, c.out + 2.0, 32, GammaSelect::inner);
        FacetSpec facet{c.in, c.out, c.chi};
        FacetReport cf = classify_facet(dom, facet, 1.0);
        SectionResult qp = minimal_section_radial(facet, dom, 1.0);
        worst = std::max({worst, std::abs(cf.lambda - qp.lambda), std::abs(cf.mu - qp.mu)});
        S.built.push_back({cf.witness, facet, dom});
        S.built.push_back({qp.field, facet, dom});
    }
    const double ms = ms_since(t0);
    S.emit(3, "QP reproduces closed forms on 20 configurations", worst <= 1e-6 && ms < 5000.0,
           "worst |closed-form - QP| = " + fmt(worst), ms);
}

// ---- C4: balance identity -------------------------------------------------

void c4(Suite& S) {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (const auto& bf : S.built) {
        auto [lhs, rhs] = balance_identity(bf.field, bf.facet, bf.dom);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    S.emit(4, "balance identity on all constructed fields", worst <= 1e-10,
           std::to_string(S.built.size()) + " fields, worst |lhs-rhs| = " + fmt(worst),
           ms_since(t0));
}

// ---- C5: quadratic kernel --------------------------------------------------

void c5(Suite& S) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(S.seed);
    std::uniform_real_distribution<double> Ua(0.2, 3.0), Uc(-3.0, 3.0), Ut(0.25, 4.0);
    double worst = 0.0, worst_res = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double a = Ua(rng), b = Ua(rng), c = Uc(rng), tau = Ut(rng);
        QuadMinResult qm = quad_min(a, b, c, tau);
        // brute force on the constraint line; the range bound comes from the
        // feasible point mu = 0
        const double M = std::abs(c) * std::sqrt(tau / (a * b)) + 1.0;
        auto f = [&](double mu) {
            const double lam = (c + b * mu) / a;
            return a * lam * lam + b * mu * mu / tau;
        };
        double best_mu = -M, best_f = f(-M);
        const double coarse = 1e-2;
        for (double mu = -M; mu <= M; mu += coarse)
            if (f(mu) < best_f) { best_f = f(mu); best_mu = mu; }
        double lo = best_mu - 2.0 * coarse;
        for (double mu = lo; mu <= best_mu + 2.0 * coarse; mu += 1e-4)
            if (f(mu) < best_f) { best_f = f(mu); best_mu = mu; }
        const double best_lam = (c + b * best_mu) / a;
        worst = std::max({worst, std::abs(qm.lambda - best_lam), std::abs(qm.mu - best_mu)});
        worst_res = std::max(worst_res, std::abs(tau * qm.lambda + qm.mu) /
                                            std::max(1.0, std::abs(qm.mu)));
    }
    S.emit(5, "quad_min vs brute-force line search (100 random)",
           worst <= 2e-4 && worst_res <= 1e-14,
           "worst |dlam,dmu| = " + fmt(worst) + ", worst |tau*lam+mu| = " + fmt(worst_res),
           ms_since(t0));
}

// ---- C6: scaling identity ---------------------------------------------------

void c6(Suite& S) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(S.seed + 1);
    std::uniform_real_distribution<double> U01(-1.0, 1.0), Ur(0.5, 2.0);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        for (int dim : {1, 2}) {
            const double a = dim == 2 ? Ur(rng) : 0.0;
            const double b = a + 0.5 + Ur(rng);
            const double wa = U01(rng), wb = U01(rng);
            double lambda, c;
            if (dim == 2) {
                lambda = 2.0 * (b * wb - a * wa) / (b * b - a * a);
                c = b * (wb - 0.5 * lambda * b);
            } else {
                lambda = (wb - wa) / (b - a);
                c = wb - lambda * b;
            }
            RadialField f = make_closed_form_field(dim, a, b, lambda, c);
            DomainSpec dom = dim == 2 ? make_annulus(std::max(a, 1e-3), b + 1.0, 16,
                                                     GammaSelect::inner)
                                      : make_interval(b + 1.0, 16);
            FacetSpec facet{std::max(a, 1e-3), b, +1};
            if (dim == 1) facet.inner = 0.0;  // touch Gamma at x = 0
            const double I1 = i_tau(f, facet, dom, 1.0);
            for (double tau : {0.5, 2.0, 4.0}) {
                auto [fs, ds] = scale_field(f, dom, tau);
                const double Ik = i_tau(fs, scale_facet(facet, tau), ds, tau);
                const double want = std::pow(tau, dom.dim - 2) * I1;
                worst = std::max(worst, std::abs(Ik - want) / std::max(1.0, std::abs(want)));
            }
        }
    }
    S.emit(6, "I_tau scaling identity tau^{N-2}", worst <= 1e-10,
           "worst relative defect = " + fmt(worst), ms_since(t0));
}

// ---- C7: 1D cross-validation -----------------------------------------------

void c7(Suite& S) {
    const auto t0 = Clock::now();
    DomainSpec dom = make_interval(1.0, 400);
    Profile u0 = plateau_ramp(1.0, 0.0, 0.5);
    FlowConfig cfg;
    cfg.tau = 1.0;
    cfg.eps = 0.0;
    cfg.dt = 1e-3;
    cfg.T = 0.2;
    cfg.tol = 1e-6;
    State init;
    init.u.resize(dom.n);
    for (int i = 0; i < dom.n; ++i) init.u[i] = u0(dom.nodes[i]);
    init.v.resize(2);
    init.v << init.u[0], init.u[dom.n - 1];

    FlowRun run = run_flow(init, cfg, dom);
    S.track(run, cfg.tol, "c7_interval");
    Trajectory ex = evolve_1d(u0, dom, cfg.tau, cfg.dt, cfg.T);
    CompareReport cr = compare_exact(run.traj, ex, dom);

    // difference quotients over the first 20 steps
    const int k20 = 20;
    const double tq = run.traj.t[k20];
    const double vel_r = (run.traj.states[k20].u[dom.n - 1] - init.u[dom.n - 1]) / tq;
    const double vel_l = (run.traj.states[k20].u[0] - init.u[0]) / tq;
    const double ms = ms_since(t0);
    const bool pass = cr.linf_per_time.back() <= 0.02 && std::abs(vel_r + 2.0 / 3.0) <= 0.03 &&
                      std::abs(vel_l - 1.0) <= 0.03 && ms < 60000.0;
    S.emit(7, "1D PDE vs exact two-facet trajectory", pass,
           "Linf(t=0.2)=" + fmt(cr.linf_per_time.back()) + " vel_r=" + fmt(vel_r) +
               " vel_l=" + fmt(vel_l),
           ms);
}

// ---- C9: order preservation -------------------------------------------------

void c9(Suite& S) {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(S.seed + 2);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int violations = 0;
    double worst = 0.0;
    FlowConfig cfg;
    cfg.dt = 2e-3;
    cfg.T = 0.02;
    cfg.tol = 1e-8;
    for (int k = 0; k < 20; ++k) {
        DomainSpec dom = (k % 2 == 0) ? make_interval(1.0, 160)
                                      : make_annulus(2.0, 4.0, 160, GammaSelect::inner);
        auto monotone = [&]() {
            Eigen::ArrayXd u(dom.n);
            double acc = U(rng);
            for (int i = 0; i < dom.n; ++i) {
                u[i] = acc;
                acc += U(rng) * 2.0 / dom.n;
            }
            return u;
        };
        State a, b;
        a.u = monotone();
        b.u = a.u + 0.05 + 0.2 * U(rng);
        a.v.resize(dom.gamma_nodes.size());
        b.v.resize(dom.gamma_nodes.size());
        for (int j = 0; j < static_cast<int>(dom.gamma_nodes.size()); ++j) {
            a.v[j] = a.u[dom.gamma_nodes[static_cast<size_t>(j)]];
            b.v[j] = b.u[dom.gamma_nodes[static_cast<size_t>(j)]];
        }
        FlowRun ra = run_flow(a, cfg, dom);
        FlowRun rb = run_flow(b, cfg, dom);
        // rough random data resolves its facet structure over the first steps,
        // outside the dissipation identity's hypothesis
        S.track(ra, cfg.tol, "c9_lo_" + std::to_string(k), false);
        S.track(rb, cfg.tol, "c9_hi_" + std::to_string(k), false);
        for (size_t j = 0; j < ra.traj.size(); ++j) {
            worst = std::max(worst,
                             (ra.traj.states[j].u - rb.traj.states[j].u).maxCoeff());
            worst = std::max(worst,
                             (ra.traj.states[j].v - rb.traj.states[j].v).maxCoeff());
        }
        if (worst > 1e-8 + cfg.tol) ++violations;
    }
    S.emit(9, "order preservation on 20 random ordered pairs", violations == 0,
           "violations=" + std::to_string(violations) + " worst=" + fmt(worst), ms_since(t0));
}

// ---- C10: onset trichotomy ---------------------------------------------------

void c10(Suite& S) {
    const auto t0 = Clock::now();
    bool tri = true;
    {
        FacetReport r2 = boundary_onset(make_annulus(2.0, 4.0, 16), +1, 1.0);
        FacetReport r1 = boundary_onset(make_annulus(1.0, 4.0, 16), +1, 1.0);
        FacetReport r05 = boundary_onset(make_annulus(0.5, 4.0, 16), +1, 1.0);
        tri = r2.tag == FacetCase::onset_facet_forms && r1.tag == FacetCase::onset_neutral &&
              r05.tag == FacetCase::onset_detach &&
              std::abs(r2.lambda - 0.5) <= 1e-14 && std::abs(r1.lambda - 1.0) <= 1e-14 &&
              std::abs(r05.lambda - 2.0) <= 1e-14;
    }

    FlowConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 0.1;
    // tol also budgets the radial facet-merge Bregman defect, of order
    // (2 pi r) * slope * h * dt ~ 1e-4 at this resolution
    cfg.tol = 1e-4;
    auto pde_gap = [&](double r0, const Profile& u0, double* vt = nullptr) {
        DomainSpec dom = make_annulus(r0, 4.0, 400, GammaSelect::inner);
        State init;
        init.u.resize(dom.n);
        for (int i = 0; i < dom.n; ++i) init.u[i] = u0(dom.nodes[i]);
        init.v.resize(1);
        init.v << init.u[0];
        FlowRun run = run_flow(init, cfg, dom);
        S.track(run, cfg.tol, "c10_r0_" + fmt(r0));
        if (vt) {
            const size_t k = 10;
            *vt = std::abs((run.traj.states[k].v[0] - init.v[0]) / run.traj.t[k]);
        }
        return run.traj.gap.back().abs().maxCoeff();
    };
    // detached facet [0.5, 1]: gap rate chi - lambda = -1/3
    const double gap_detach = pde_gap(0.5, plateau_ramp(1.0, 1.0, 3.5));
    // r0 = 2: established coherent facet [2, 2.2], the gap stays closed and the
    // boundary velocity obeys the forming-facet bound 2R/(R^2-r0^2+2r0) < |v_t| <= 1
    double vt_coh = 0.0;
    const double gap_coh = pde_gap(2.0, plateau_ramp(1.0, 2.2, 3.5), &vt_coh);
    const double vt_lower = 2.0 * 4.0 / (16.0 - 4.0 + 4.0);  // = 0.5

    const double ms = ms_since(t0);
    const bool pass = tri && gap_detach >= 0.02 && gap_coh <= 1e-3 &&
                      vt_coh > vt_lower && vt_coh <= 1.0 + 1e-9 && ms < 120000.0;
    S.emit(10, "onset trichotomy and PDE gap growth", pass,
           "gap(r0=0.5,t=0.1)=" + fmt(gap_detach) + " gap(r0=2)=" + fmt(gap_coh) +
               " |v_t|(r0=2)=" + fmt(vt_coh),
           ms);
}

// ---- C11: energy-decay bound ---------------------------------------------------

void c11(Suite& S) {
    const auto t0 = Clock::now();
    DomainSpec dom = make_annulus(2.0, 4.0, 400, GammaSelect::inner);
    FlowConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 5e-3;
    cfg.tol = 1e-4;  // see c10: budgets the radial facet-merge defect
    auto first_dEdt = [&](const Profile& u0, FlowRun& out) {
        State init;
        init.u.resize(dom.n);
        for (int i = 0; i < dom.n; ++i) init.u[i] = u0(dom.nodes[i]);
        init.v.resize(1);
        init.v << init.u[0];
        out = run_flow(init, cfg, dom);
        return (out.traj.energy[1] - out.traj.energy[0]) / cfg.dt;
    };
    // suite run: established facets (U0 in D(dE)), so the dissipation identity applies
    FlowRun run;
    const double dEdt = first_dEdt(plateau_ramp(1.0, 2.2, 3.5), run);
    S.track(run, cfg.tol, "c11_established");
    // no-facet onset variant: the bound holds across the facet-formation
    // layer; the dissipation identity is not applicable there
    FlowRun onset;
    const double dEdt_onset = first_dEdt(plateau_ramp(1.0, 2.0, 4.0, -2.0), onset);
    S.energy_violations += onset.energy_violations;
    ++S.pde_runs;
    const bool pass = dEdt <= -kPi * 0.8 && dEdt_onset <= -kPi * 0.8;
    S.emit(11, "energy-decay bound -8 pi r0 R^2/(R^2-r0^2+2r0)^2", pass,
           "discrete dE/dt = " + fmt(dEdt) + " (onset variant " + fmt(dEdt_onset) +
               ", layer defect " + fmt(onset.max_energy_identity_defect) + ") vs bound " +
               fmt(-kPi * 0.8),
           ms_since(t0));
}

// ---- C8: aggregated energy decay (placed last: uses all runs) -----------------

void c8(Suite& S) {
    bool identity_ok = true;
    double worst_ratio = 0.0, worst_excluded = 0.0;
    std::string worst = "-";
    for (const auto& r : S.runs) {
        if (!r.identity_applicable) {
            worst_excluded = std::max(worst_excluded, r.defect);
            continue;
        }
        if (r.defect > 5.0 * r.tol) identity_ok = false;
        const double ratio = r.defect / (5.0 * r.tol);
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst = r.label + " defect=" + fmt(r.defect) + " vs 5*tol=" + fmt(5.0 * r.tol);
        }
    }
    const bool pass = S.energy_violations == 0 && identity_ok;
    S.emit(8, "energy decay (all runs) + dissipation identity (structured runs)", pass,
           std::to_string(S.pde_runs) + " runs, violations=" +
               std::to_string(S.energy_violations) + ", tightest: " + worst +
               "; facet-formation runs excluded from the identity (worst Bregman defect " +
               fmt(worst_excluded) + ")",
           0.0);
}

} // namespace

int run_all(std::ostream& os, unsigned seed) {
    Suite S{.os = os, .seed = seed};
    c1(S);
    c2(S);
    c3(S);
    c4(S);
    c5(S);
    c6(S);
    c7(S);
    c9(S);
    c10(S);
    c11(S);
    c8(S);
    os << (S.failures == 0 ? "acceptance: all criteria passed\n"
                           : "acceptance: " + std::to_string(S.failures) + " criteria FAILED\n");
    return S.failures;
}

} // namespace facetflow::acceptance
