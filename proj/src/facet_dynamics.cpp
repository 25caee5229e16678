#include "facetflow/facet_dynamics.hpp"

#include <cmath>
#include <memory>

namespace facetflow {

namespace {

double sgn(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

// Bisection inverse of a weakly monotone function. side = -1 returns the
// lower edge of the preimage, +1 the upper edge (matters on plateaus).
double invert_monotone(const std::function<double(double)>& f, double target, double lo,
                       double hi, int side) {
    double flo = f(lo), fhi = f(hi);
    const bool incr = fhi >= flo;
    if (incr) {
        if (target <= flo) return lo;
        if (target >= fhi) return hi;
    } else {
        if (target >= flo) return lo;
        if (target <= fhi) return hi;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        const bool below = incr ? (fm < target) : (fm > target);
        const bool at = std::abs(fm - target) <= 0.0;
        if (below || (at && side > 0)) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// One implicit-midpoint step of h' = f(h, t): solve x = h + dt f((h+x)/2, tm).
double implicit_midpoint(double h, double t, double dt,
                         const std::function<double(double, double)>& f) {
    const double tm = t + 0.5 * dt;
    auto g = [&](double x) { return x - h - dt * f(0.5 * (h + x), tm); };
    double d = dt * (std::min(std::abs(f(h, tm)), 1e6) + 1.0);
    double lo = h - d, hi = h + d;
    int guard = 0;
    while (sgn(g(lo)) == sgn(g(hi))) {
        d *= 2.0;
        lo = h - d;
        hi = h + d;
        if (++guard > 60) throw StepTooLarge("implicit midpoint step failed to bracket");
    }
    double glo = g(lo);
    for (int it = 0; it < 120; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (sgn(gm) == sgn(glo)) { lo = mid; glo = gm; }
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Rightmost point (from the given end) where u0 still equals the end value.
double plateau_edge(const Profile& u0, double lo, double hi, bool from_left) {
    const double ref = from_left ? u0(lo) : u0(hi);
    const double tol = 1e-12 * std::max(1.0, u0.scale);
    auto flat = [&](double x) { return std::abs(u0(x) - ref) <= tol; };
    double a = from_left ? lo : hi, b = from_left ? hi : lo;
    if (flat(b)) return b;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (flat(mid)) a = mid;
        else b = mid;
    }
    return 0.5 * (a + b);
}

struct Recorder {
    Trajectory& tr;
    const DomainSpec& dom;
    double tau;

    void push(double t, State s, double ea, double eb, double hl, double hr) {
        tr.t.push_back(t);
        Eigen::ArrayXd g(s.v.size());
        for (int j = 0; j < s.v.size(); ++j) g[j] = s.v[j] - trace_at(s, dom, j);
        tr.gap.push_back(g);
        tr.energy.push_back(energy_E(s, dom));
        double diss = 0.0;
        if (!tr.states.empty()) {
            const State& prev = tr.states.back();
            State d{s.u - prev.u, s.v - prev.v};
            const double dt = t - tr.t[tr.t.size() - 2];
            diss = inner_tau(d, d, tau, dom) / (dt * dt);
        }
        tr.dissipation.push_back(diss);
        tr.states.push_back(std::move(s));
        tr.edge_a.push_back(ea);
        tr.edge_b.push_back(eb);
        tr.h_l.push_back(hl);
        tr.h_r.push_back(hr);
    }
};

void check_positive(double dt, double T) {
    if (!(dt > 0.0) || !(T > 0.0)) throw InvalidParam("dt and T must be positive");
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

} // namespace

double Profile::deriv(double x) const {
    if (df) return df(x);
    const double h = 1e-6 * std::max(1.0, scale);
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

Profile plateau_ramp(double slope, double lo, double hi, double offset) {
    if (hi < lo) throw InvalidParam("plateau_ramp requires lo <= hi");
    Profile p;
    p.f = [=](double x) { return offset + slope * std::clamp(x, lo, hi); };
    p.df = [=](double x) { return (x > lo && x < hi) ? slope : 0.0; };
    const double span = std::isfinite(hi) ? std::abs(hi) : std::abs(lo);
    p.scale = std::max(1.0, std::abs(offset) + std::abs(slope) * (std::isfinite(span) ? span : 1.0));
    return p;
}

Profile tabulated_profile(const Eigen::ArrayXd& x, const Eigen::ArrayXd& u) {
    if (x.size() != u.size() || x.size() < 2) throw InvalidParam("bad tabulated profile");
    auto xs = std::make_shared<Eigen::ArrayXd>(x);
    auto us = std::make_shared<Eigen::ArrayXd>(u);
    Profile p;
    p.f = [xs, us](double q) -> double {
        const auto& X = *xs;
        const auto& U = *us;
        if (q <= X[0]) return U[0];
        const int n = static_cast<int>(X.size());
        if (q >= X[n - 1]) return U[n - 1];
        int lo = 0, hi = n - 1;
        while (hi - lo > 1) {
            const int mid = (lo + hi) / 2;
            (X[mid] <= q ? lo : hi) = mid;
        }
        const double s = (q - X[lo]) / (X[lo + 1] - X[lo]);
        return (1.0 - s) * U[lo] + s * U[lo + 1];
    };
    p.scale = std::max(1.0, u.abs().maxCoeff());
    return p;
}

Trajectory evolve_1d(const Profile& u0, const DomainSpec& dom, double tau, double dt, double T) {
    if (dom.kind != DomainKind::interval) throw DomainMismatch("evolve_1d needs an interval");
    if (!(tau > 0.0)) throw InvalidParam("tau must be positive");
    check_positive(dt, T);
    const double L = dom.outer;
    const double tolv = 1e-12 * std::max(1.0, u0.scale);

    Trajectory tr;
    tr.metadata["tracker"] = "exact_1d";
    Recorder rec{tr, dom, tau};

    auto assemble = [&](double hl, double hr, double a, double b) {
        State s;
        s.u.resize(dom.n);
        for (int i = 0; i < dom.n; ++i) {
            const double x = dom.nodes[i];
            s.u[i] = (x <= a) ? hl : (x >= b ? hr : u0(x));
        }
        s.v.resize(2);
        s.v << hl, hr;
        return s;
    };

    if (std::abs(u0(L) - u0(0.0)) <= tolv) {
        // constant profile: the facet covers everything and nothing moves
        const double c = u0(0.0);
        const int nsteps = static_cast<int>(std::llround(std::ceil(T / dt)));
        for (int k = 0; k <= nsteps; ++k)
            rec.push(std::min(k * dt, T), assemble(c, c, L, 0.0), kNaN, kNaN, c, c);
        tr.metadata["note"] = "constant profile";
        return tr;
    }

    const double chi = sgn(u0(L) - u0(0.0));
    for (int i = 0; i + 1 < dom.n; ++i) {
        const double d = u0(dom.nodes[i + 1]) - u0(dom.nodes[i]);
        if (d * chi < -tolv) throw NonMonotone("u0 must be monotone");
    }

    double a = plateau_edge(u0, 0.0, L, true);
    double b = plateau_edge(u0, 0.0, L, false);
    if (a >= b) throw NonMonotone("u0 has no strictly monotone region");
    double hl = u0(0.0), hr = u0(L);

    auto ainv = [&](double h) {
        return invert_monotone([&](double x) { return u0(x); }, h, 0.0, L, +1);
    };
    auto binv = [&](double h) {
        return invert_monotone([&](double x) { return u0(x); }, h, 0.0, L, -1);
    };
    auto f_r = [&](double h, double) { return -chi / (tau + L - binv(h)); };
    auto f_l = [&](double h, double) { return chi / (tau + ainv(h)); };

    rec.push(0.0, assemble(hl, hr, a, b), a, b, hl, hr);
    const int nsteps = static_cast<int>(std::llround(std::ceil(T / dt - 1e-12)));
    for (int k = 1; k <= nsteps; ++k) {
        const double t0 = (k - 1) * dt, t1 = std::min(k * dt, T);
        const double step = t1 - t0;
        hr = implicit_midpoint(hr, t0, step, f_r);
        hl = implicit_midpoint(hl, t0, step, f_l);
        a = ainv(hl);
        b = binv(hr);
        if (a >= b - 1e-12 * L) {
            const double m = 0.5 * (a + b), hm = 0.5 * (hl + hr);
            rec.push(t1, assemble(hm, hm, m, m), m, m, hm, hm);
            tr.events.push_back({t1, "facet_collision"});
            return tr;
        }
        rec.push(t1, assemble(hl, hr, a, b), a, b, hl, hr);
    }
    return tr;
}

Trajectory evolve_ball(const DomainSpec& dom, double rho0, const Profile& u0, double dt,
                       double T, double tau) {
    if (dom.kind != DomainKind::ball) throw DomainMismatch("evolve_ball needs a ball");
    if (!(tau > 0.0)) throw InvalidParam("tau must be positive");
    check_positive(dt, T);
    const double R = dom.outer;
    if (!(rho0 > 0.0) || rho0 > R) throw InvalidInit("rho0 must lie in (0, R]");
    const double scale = std::max(1.0, u0.scale);
    if (std::abs(u0(R) - u0(rho0)) > 1e-9 * scale)
        throw InvalidInit("u0 must be flat on the rim facet [rho0, R]");
    const double chi_d = sgn(u0(rho0) - u0(0.0));
    if (chi_d == 0.0) throw InvalidInit("u0 must not be globally constant");

    double a = plateau_edge(u0, 0.0, rho0, true);
    if (a >= rho0) throw InvalidInit("central plateau reaches the rim facet");
    double rho = rho0, h = u0(R), hc = u0(0.0);

    auto junction = [&](double r, double t) { return u0(r) + chi_d * t / r; };
    auto lam_rim = [&](double p) { return -2.0 * p * chi_d / (R * R - p * p + 2.0 * tau * R); };

    Trajectory tr;
    tr.metadata["tracker"] = "exact_ball";
    Recorder rec{tr, dom, tau};
    auto assemble = [&](double t) {
        State s;
        s.u.resize(dom.n);
        for (int i = 0; i < dom.n; ++i) {
            const double r = dom.nodes[i];
            s.u[i] = (r <= a) ? hc : (r >= rho ? h : junction(r, t));
        }
        s.v.resize(1);
        s.v << h;
        return s;
    };

    rec.push(0.0, assemble(0.0), a, rho, hc, h);
    const int nsteps = static_cast<int>(std::llround(std::ceil(T / dt - 1e-12)));
    for (int k = 1; k <= nsteps; ++k) {
        const double t0 = (k - 1) * dt, t1 = std::min(k * dt, T);
        const double step = t1 - t0;
        // the junction formula is monotone only between the previous edges
        const double a_lo = std::max(a, 1e-12), rho_hi = rho;
        auto f_rim = [&](double hm, double tm) {
            auto j = [&](double r) { return junction(r, tm); };
            return lam_rim(invert_monotone(j, hm, a_lo, rho_hi, -1));
        };
        auto f_c = [&](double hm, double tm) {
            auto j = [&](double r) { return junction(r, tm); };
            const double am = invert_monotone(j, hm, a_lo, rho_hi, +1);
            return 2.0 * chi_d / am;
        };
        h = implicit_midpoint(h, t0, step, f_rim);
        hc = implicit_midpoint(hc, t0, step, f_c);
        auto j1 = [&](double r) { return junction(r, t1); };
        rho = invert_monotone(j1, h, a_lo, rho_hi, -1);
        a = invert_monotone(j1, hc, a_lo, rho, +1);

        bool valid = true;
        for (int p = 1; p <= 8; ++p) {
            const double r = a + (rho - a) * p / 9.0;
            if (chi_d * (u0.deriv(r) - chi_d * t1 / (r * r)) <= 0.0) valid = false;
        }
        if (!valid) {
            tr.events.push_back({t1, "bulk_monotonicity_lost"});
            rec.push(t1, assemble(t1), a, rho, hc, h);
            return tr;
        }
        rec.push(t1, assemble(t1), a, rho, hc, h);
        if (a >= rho - 1e-12 * R) {
            tr.events.push_back({t1, "facet_collision"});
            return tr;
        }
    }
    return tr;
}

Trajectory evolve_annulus(const DomainSpec& dom, double rho0, const Profile& u0, double dt,
                          double T, double tau) {
    if (dom.kind != DomainKind::annulus) throw DomainMismatch("evolve_annulus needs an annulus");
    if (dom.gamma_outer) throw DomainMismatch("evolve_annulus assumes Gamma = inner circle");
    if (!(tau > 0.0)) throw InvalidParam("tau must be positive");
    check_positive(dt, T);
    const double r0 = dom.inner, R = dom.outer;
    if (rho0 < r0 || rho0 >= R) throw InvalidInit("rho0 must lie in [r0, R)");
    const double scale = std::max(1.0, u0.scale);
    if (rho0 > r0 && std::abs(u0(rho0) - u0(r0)) > 1e-9 * scale)
        throw InvalidInit("u0 must be flat on the inner facet [r0, rho0]");
    const double chi_d = sgn(u0(R) - u0(r0));
    if (chi_d == 0.0) throw InvalidInit("u0 must not be globally constant");

    const double tie = 1e-12 * std::max(1.0, R);
    double rhoN = plateau_edge(u0, rho0, R, false);
    if (rhoN <= rho0 + tie) throw InvalidInit("facets already meet");

    auto junction = [&](double r, double t) { return u0(r) + chi_d * t / r; };
    auto lam_coh = [&](double p) {
        return 2.0 * p * chi_d / (p * p - r0 * r0 + 2.0 * tau * r0);
    };
    auto lam_pin = [&](double p, double s) {
        return 2.0 * (p * chi_d - r0 * s) / (p * p - r0 * r0);
    };
    auto lam_outer = [&](double p) { return -2.0 * p * chi_d / (R * R - p * p); };

    enum class Regime { coherent, pinned, no_facet_neutral, no_facet_detached };
    Regime regime;
    bool has_facet = rho0 > r0 + tie;
    double rho = rho0, h = u0(rho0), v = h, hN = u0(R);

    Trajectory tr;
    tr.metadata["tracker"] = "exact_annulus";
    tr.metadata["extensions"] =
        "per-step regime switching; detached rho(t) by continuity; outer Neumann facet";
    Recorder rec{tr, dom, tau};

    if (has_facet) {
        regime = (rho0 + r0 >= 2.0 * tau - tie) ? Regime::coherent : Regime::pinned;
        if (regime == Regime::pinned) tr.events.push_back({0.0, "detachment_onset"});
    } else if (r0 > tau + tie) {
        has_facet = true;
        regime = Regime::coherent;
        tr.events.push_back({0.0, "facet_created"});
    } else if (r0 >= tau - tie) {
        regime = Regime::no_facet_neutral;
    } else {
        regime = Regime::no_facet_detached;
        tr.events.push_back({0.0, "detachment_onset"});
    }

    auto assemble = [&](double t) {
        State s;
        s.u.resize(dom.n);
        for (int i = 0; i < dom.n; ++i) {
            const double r = dom.nodes[i];
            if (has_facet && r <= rho) s.u[i] = h;
            else if (r >= rhoN) s.u[i] = hN;
            else s.u[i] = junction(r, t);
        }
        s.v.resize(1);
        s.v << v;
        return s;
    };

    rec.push(0.0, assemble(0.0), has_facet ? rho : kNaN, rhoN, has_facet ? h : kNaN, hN);
    const int nsteps = static_cast<int>(std::llround(std::ceil(T / dt - 1e-12)));
    for (int k = 1; k <= nsteps; ++k) {
        const double t0 = (k - 1) * dt, t1 = std::min(k * dt, T);
        const double step = t1 - t0;
        // the junction formula is monotone only between the previous edges
        const double rho_lo = has_facet ? rho : r0, rhoN_hi = rhoN;

        auto f_outer = [&](double hm, double tm) {
            auto j = [&](double r) { return junction(r, tm); };
            return lam_outer(invert_monotone(j, hm, rho_lo, rhoN_hi, +1));
        };
        hN = implicit_midpoint(hN, t0, step, f_outer);
        auto j1 = [&](double r) { return junction(r, t1); };
        rhoN = invert_monotone(j1, hN, rho_lo, rhoN_hi, +1);

        if (has_facet) {
            const double s_pin = chi_d;
            auto f_in = [&](double hm, double tm) {
                auto j = [&](double r) { return junction(r, tm); };
                const double p = invert_monotone(j, hm, rho_lo, rhoN_hi, -1);
                return regime == Regime::coherent ? lam_coh(p) : lam_pin(p, s_pin);
            };
            h = implicit_midpoint(h, t0, step, f_in);
            rho = invert_monotone(j1, h, rho_lo, rhoN, -1);
            if (regime == Regime::coherent) {
                v = h;
            } else {
                v += step * s_pin / tau;
                if (s_pin * (h - v) <= 0.0) {
                    v = h;  // gap closed
                    if (rho + r0 >= 2.0 * tau - tie) {
                        regime = Regime::coherent;
                        tr.events.push_back({t1, "reattached"});
                    }
                }
            }
        } else {
            const double gu = junction(r0, t1);
            if (regime == Regime::no_facet_neutral) v = gu;
            else v += step * chi_d / tau;
        }

        bool valid = true;
        const double blo = has_facet ? rho : r0;
        for (int p = 1; p <= 8; ++p) {
            const double r = blo + (rhoN - blo) * p / 9.0;
            if (chi_d * (u0.deriv(r) - chi_d * t1 / (r * r)) <= 0.0) valid = false;
        }
        rec.push(t1, assemble(t1), has_facet ? rho : kNaN, rhoN, has_facet ? h : kNaN, hN);
        if (!valid) {
            tr.events.push_back({t1, "bulk_monotonicity_lost"});
            return tr;
        }
        if (has_facet && rho >= rhoN - 1e-12 * R) {
            tr.events.push_back({t1, "facet_collision"});
            return tr;
        }
    }
    return tr;
}

FacetReport boundary_onset(const DomainSpec& dom, int chi, double tau) {
    if (dom.kind == DomainKind::ball)
        return classify_facet(dom, FacetSpec{dom.outer, dom.outer, chi}, tau);
    if (dom.kind == DomainKind::annulus && dom.gamma_inner)
        return classify_facet(dom, FacetSpec{dom.inner, dom.inner, chi}, tau);
    throw DomainMismatch("boundary_onset covers the ball rim and the annulus inner circle");
}

std::vector<TrajectoryEvent> detect_events(const Trajectory& traj, double tol, double edge_tol) {
    if (traj.t.empty()) throw InvalidParam("empty trajectory");
    std::vector<TrajectoryEvent> out;
    const int n = static_cast<int>(traj.t.size());
    for (int k = 0; k < n; ++k) {
        const double g = traj.gap[static_cast<size_t>(k)].abs().maxCoeff();
        if (g <= tol) continue;
        bool growing = k + 3 < n;
        for (int j = k; growing && j + 1 <= k + 3; ++j) {
            const double g0 = traj.gap[static_cast<size_t>(j)].abs().maxCoeff();
            const double g1 = traj.gap[static_cast<size_t>(j + 1)].abs().maxCoeff();
            if (g1 <= g0) growing = false;
        }
        if (growing) {
            out.push_back({traj.t[static_cast<size_t>(k)], "detachment_onset"});
            break;
        }
    }
    for (int k = 0; k < n; ++k) {
        const double a = traj.edge_a[static_cast<size_t>(k)], b = traj.edge_b[static_cast<size_t>(k)];
        if (std::isfinite(a) && std::isfinite(b) && b - a <= edge_tol) {
            out.push_back({traj.t[static_cast<size_t>(k)], "facet_collision"});
            break;
        }
    }
    return out;
}

} // namespace facetflow
