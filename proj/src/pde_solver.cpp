#include "facetflow/pde_solver.hpp"

#include <cmath>

namespace facetflow {

namespace {

// Chain layout of the step's dual variables: [q_left?, p_0..p_{n-2}, q_right?].
// In this ordering K M^{-1} K^T is tridiagonal.
struct Chain {
    int n = 0;
    bool ql = false, qr = false;
    int m = 0;
    int p0 = 0;  // chain index of p_0

    static Chain make(const DomainSpec& dom) {
        Chain c;
        c.n = dom.n;
        for (int idx : dom.gamma_nodes) {
            if (idx == 0) c.ql = true;
            if (idx == dom.n - 1) c.qr = true;
        }
        c.p0 = c.ql ? 1 : 0;
        c.m = (dom.n - 1) + (c.ql ? 1 : 0) + (c.qr ? 1 : 0);
        return c;
    }
};

struct StepWork {
    Chain ch;
    Eigen::ArrayXd bnd;    // box bounds per chain variable
    detail::TriQP qp;      // scaled variables g / bnd
    Eigen::ArrayXd gu;     // K^* g, bulk part
};

void assemble_step(StepWork& w, const State& un, const FlowConfig& cfg, const DomainSpec& dom) {
    const Chain& ch = w.ch;
    const int n = ch.n, m = ch.m;
    w.bnd.resize(m);
    Eigen::ArrayXd diagA = Eigen::ArrayXd::Zero(m), offA = Eigen::ArrayXd::Zero(m - 1),
                   b = Eigen::ArrayXd::Zero(m);
    const auto& mass = dom.mass;
    const auto& gw = dom.gamma_weight;

    for (int i = 0; i + 1 < n; ++i) {
        const int k = ch.p0 + i;
        w.bnd[k] = dom.tv_weight[i];
        diagA[k] = 1.0 / mass[i] + 1.0 / mass[i + 1];
        if (i + 2 < n) offA[k] = -1.0 / mass[i + 1];
        b[k] = un.u[i + 1] - un.u[i];
    }
    if (ch.ql) {
        w.bnd[0] = gw[0];
        diagA[0] = 1.0 / mass[0] + 1.0 / (cfg.tau * gw[0]);
        offA[0] = -1.0 / mass[0];
        b[0] = un.u[0] - un.v[0];
    }
    if (ch.qr) {
        const int j = ch.ql ? 1 : 0;
        w.bnd[m - 1] = gw[j];
        diagA[m - 1] = 1.0 / mass[n - 1] + 1.0 / (cfg.tau * gw[j]);
        offA[m - 2] = 1.0 / mass[n - 1];
        b[m - 1] = un.u[n - 1] - un.v[j];
    }

    w.qp.diag = cfg.dt * diagA * w.bnd.square();
    w.qp.off.resize(m - 1);
    for (int k = 0; k + 1 < m; ++k) w.qp.off[k] = cfg.dt * offA[k] * w.bnd[k] * w.bnd[k + 1];
    w.qp.lin = -(w.bnd * b);
    w.qp.pinned.assign(static_cast<size_t>(m), 0);
}

// Primal state from the (unscaled) dual chain g.
State primal_from_dual(const StepWork& w, const Eigen::ArrayXd& g, const State& un,
                       const FlowConfig& cfg, const DomainSpec& dom, Eigen::ArrayXd& gu) {
    const Chain& ch = w.ch;
    const int n = ch.n;
    gu = Eigen::ArrayXd::Zero(n);
    for (int i = 0; i + 1 < n; ++i) {
        const double pi = g[ch.p0 + i];
        gu[i] -= pi;
        gu[i + 1] += pi;
    }
    if (ch.ql) gu[0] += g[0];
    if (ch.qr) gu[n - 1] += g[w.ch.m - 1];

    State s;
    s.u = un.u - cfg.dt * gu / dom.mass;
    s.v = un.v;
    if (ch.ql) s.v[0] += cfg.dt * g[0] / (cfg.tau * dom.gamma_weight[0]);
    if (ch.qr) {
        const int j = ch.ql ? 1 : 0;
        s.v[j] += cfg.dt * g[w.ch.m - 1] / (cfg.tau * dom.gamma_weight[j]);
    }
    return s;
}

double primal_value(const State& s, const State& un, const FlowConfig& cfg,
                    const DomainSpec& dom) {
    const double du = (dom.mass * (s.u - un.u).square()).sum();
    const double dv = cfg.tau * (dom.gamma_weight * (s.v - un.v).square()).sum();
    return (du + dv) / (2.0 * cfg.dt) + energy_E(s, dom);
}

double dual_value(const StepWork& w, const Eigen::ArrayXd& g, const Eigen::ArrayXd& gu,
                  const FlowConfig& cfg, const DomainSpec& dom) {
    // D(g) = <g, b> - (dt/2) ||K^* g||^2_{M^{-1}}; <g, b> = -<lin, g/bnd scaled>
    double gb = 0.0;
    for (int k = 0; k < w.ch.m; ++k) gb -= w.qp.lin[k] * (g[k] / w.bnd[k]);
    double quad = (gu.square() / dom.mass).sum();
    if (w.ch.ql) quad += g[0] * g[0] / (cfg.tau * dom.gamma_weight[0]);
    if (w.ch.qr) {
        const int j = w.ch.ql ? 1 : 0;
        quad += g[w.ch.m - 1] * g[w.ch.m - 1] / (cfg.tau * dom.gamma_weight[j]);
    }
    return gb - 0.5 * cfg.dt * quad;
}

State step_tv(const State& un, const FlowConfig& cfg, const DomainSpec& dom, DualState* warm,
              StepDiag* diag) {
    StepWork w;
    w.ch = Chain::make(dom);
    assemble_step(w, un, cfg, dom);
    const int m = w.ch.m, n = w.ch.n;

    // warm start from the previous step's dual
    w.qp.w = Eigen::ArrayXd::Zero(m);
    if (warm && warm->p.size() == n - 1) {
        for (int i = 0; i + 1 < n; ++i)
            w.qp.w[w.ch.p0 + i] = std::clamp(warm->p[i] / w.bnd[w.ch.p0 + i], -1.0, 1.0);
        if (w.ch.ql) w.qp.w[0] = std::clamp(warm->q[0] / w.bnd[0], -1.0, 1.0);
        if (w.ch.qr) {
            const int j = w.ch.ql ? 1 : 0;
            w.qp.w[m - 1] = std::clamp(warm->q[j] / w.bnd[m - 1], -1.0, 1.0);
        }
    }

    const int iters = detail::solve_tri_qp(w.qp, cfg.max_iter);
    Eigen::ArrayXd g = w.qp.w * w.bnd;
    Eigen::ArrayXd gu;
    State s = primal_from_dual(w, g, un, cfg, dom, gu);
    const double gap = primal_value(s, un, cfg, dom) - dual_value(w, g, gu, cfg, dom);
    if (gap > std::max(cfg.tol, 1e-9 * std::max(1.0, energy_E(un, dom))))
        throw NotConverged("implicit step: duality gap " + std::to_string(gap));

    if (warm) {
        warm->p.resize(n - 1);
        for (int i = 0; i + 1 < n; ++i) warm->p[i] = g[w.ch.p0 + i];
        warm->q.resize(dom.gamma_nodes.size());
        if (w.ch.ql) warm->q[0] = g[0];
        if (w.ch.qr) warm->q[w.ch.ql ? 1 : 0] = g[m - 1];
    }
    if (diag) {
        diag->iterations = iters;
        diag->gap = gap;
    }
    return s;
}

State step_regularized(const State& un, const FlowConfig& cfg, const DomainSpec& dom,
                       StepDiag* diag) {
    const int n = dom.n;
    const double eps = cfg.eps;
    const double scale = std::max(1.0, un.u.abs().maxCoeff());
    Eigen::ArrayXd u = un.u;

    // map Gamma node -> index into v
    std::vector<int> gidx(static_cast<size_t>(n), -1);
    for (int j = 0; j < static_cast<int>(dom.gamma_nodes.size()); ++j)
        gidx[static_cast<size_t>(dom.gamma_nodes[static_cast<size_t>(j)])] = j;

    auto grad_E = [&](const Eigen::ArrayXd& x, Eigen::ArrayXd& r) {
        r.setZero();
        for (int i = 0; i + 1 < n; ++i) {
            const double sl = (x[i + 1] - x[i]) / dom.h;
            const double cell = dom.tv_weight[i] * dom.h;
            const double d = cell * (sl / std::sqrt(sl * sl + eps * eps) + eps * eps * sl) / dom.h;
            r[i] -= d;
            r[i + 1] += d;
        }
    };

    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        // lagged-diffusivity linear system (tridiagonal)
        Eigen::ArrayXd dg(n), off(n - 1), rhs(n);
        dg = dom.mass / cfg.dt;
        rhs = dom.mass * un.u / cfg.dt;
        for (int i = 0; i < n; ++i)
            if (gidx[static_cast<size_t>(i)] >= 0) {
                const int j = gidx[static_cast<size_t>(i)];
                dg[i] += cfg.tau * dom.gamma_weight[j] / cfg.dt;
                rhs[i] += cfg.tau * dom.gamma_weight[j] * un.v[j] / cfg.dt;
            }
        for (int i = 0; i + 1 < n; ++i) {
            const double sl = (u[i + 1] - u[i]) / dom.h;
            const double kap = dom.tv_weight[i] / dom.h *
                               (1.0 / std::sqrt(sl * sl + eps * eps) + eps * eps);
            dg[i] += kap;
            dg[i + 1] += kap;
            off[i] = -kap;
        }
        // Thomas
        Eigen::ArrayXd cp(n - 1), dp(n);
        double beta = dg[0];
        cp[0] = off[0] / beta;
        dp[0] = rhs[0] / beta;
        for (int i = 1; i < n; ++i) {
            beta = dg[i] - off[i - 1] * cp[i - 1];
            if (i < n - 1) cp[i] = off[i] / beta;
            dp[i] = (rhs[i] - off[i - 1] * dp[i - 1]) / beta;
        }
        Eigen::ArrayXd unew(n);
        unew[n - 1] = dp[n - 1];
        for (int i = n - 2; i >= 0; --i) unew[i] = dp[i] - cp[i] * unew[i + 1];

        u = unew;
        // optimality residual of the smooth problem
        Eigen::ArrayXd r(n);
        grad_E(u, r);
        r = dom.mass * (u - un.u) / cfg.dt + r;
        for (int i = 0; i < n; ++i)
            if (gidx[static_cast<size_t>(i)] >= 0) {
                const int j = gidx[static_cast<size_t>(i)];
                r[i] += cfg.tau * dom.gamma_weight[j] * (u[i] - un.v[j]) / cfg.dt;
            }
        if (r.abs().maxCoeff() <= cfg.tol * scale) break;
    }
    if (it >= cfg.max_iter) throw NotConverged("regularized step did not converge");
    if (diag) diag->iterations = it + 1;

    State s;
    s.u = u;
    s.v.resize(dom.gamma_nodes.size());
    for (int j = 0; j < static_cast<int>(dom.gamma_nodes.size()); ++j)
        s.v[j] = u[dom.gamma_nodes[static_cast<size_t>(j)]];
    return s;
}

std::pair<double, double> extract_edges(const Eigen::ArrayXd& u, const DomainSpec& dom,
                                        double jump_tol) {
    const int n = static_cast<int>(u.size());
    int k = 0;
    while (k + 1 < n && std::abs(u[k + 1] - u[k]) <= jump_tol) ++k;
    int j = n - 1;
    while (j > 0 && std::abs(u[j] - u[j - 1]) <= jump_tol) --j;
    return {dom.nodes[k], dom.nodes[j]};
}

} // namespace

State step_implicit(const State& prev, const FlowConfig& cfg, const DomainSpec& dom,
                    DualState* warm, StepDiag* diag) {
    validate_config(cfg);
    validate_state(prev, dom);
    if (cfg.eps > 0.0) return step_regularized(prev, cfg, dom, diag);
    return step_tv(prev, cfg, dom, warm, diag);
}

FlowRun run_flow(const State& init, const FlowConfig& cfg, const DomainSpec& dom,
                 double edge_grad_tol) {
    validate_config(cfg);
    validate_state(init, dom);
    FlowRun run;
    Trajectory& tr = run.traj;
    tr.metadata["solver"] = cfg.eps > 0.0 ? "minimizing_movement_regularized"
                                          : "minimizing_movement_tv";
    const double scale = std::max({1.0, init.u.abs().maxCoeff(), init.v.abs().maxCoeff()});
    const double jump_tol = edge_grad_tol * scale;

    auto energy_of = [&](const State& s) {
        return cfg.eps > 0.0 ? energy_E_eps(s, cfg.eps, dom) : energy_E(s, dom);
    };

    auto record = [&](double t, const State& s) {
        tr.t.push_back(t);
        Eigen::ArrayXd g(s.v.size());
        for (int j = 0; j < s.v.size(); ++j) g[j] = s.v[j] - trace_at(s, dom, j);
        tr.gap.push_back(g);
        tr.energy.push_back(energy_of(s));
        double diss = 0.0;
        if (!tr.states.empty()) {
            const State& prev = tr.states.back();
            State d{s.u - prev.u, s.v - prev.v};
            const double dt = t - tr.t[tr.t.size() - 2];
            diss = inner_tau(d, d, cfg.tau, dom) / (dt * dt);
        }
        tr.dissipation.push_back(diss);
        auto [ea, eb] = extract_edges(s.u, dom, jump_tol);
        tr.edge_a.push_back(ea);
        tr.edge_b.push_back(eb);
        tr.h_l.push_back(s.u[0]);
        tr.h_r.push_back(s.u[dom.n - 1]);
        tr.states.push_back(s);
    };

    State cur = init;
    record(0.0, cur);
    DualState warm;
    double e_prev = energy_of(cur);
    const double e_eps = 1e-14 * std::max(1.0, e_prev);
    const int nsteps = static_cast<int>(std::llround(std::ceil(cfg.T / cfg.dt - 1e-12)));
    for (int k = 1; k <= nsteps; ++k) {
        const double t1 = std::min(k * cfg.dt, cfg.T);
        const double dt_k = t1 - (k - 1) * cfg.dt;
        FlowConfig c = cfg;
        c.dt = dt_k;
        StepDiag d;
        State nxt = step_implicit(cur, c, dom, &warm, &d);
        run.total_inner_iterations += d.iterations;
        run.max_gap = std::max(run.max_gap, d.gap);

        const double e_new = energy_of(nxt);
        if (e_new > e_prev + e_eps) ++run.energy_violations;
        State du{nxt.u - cur.u, nxt.v - cur.v};
        const double diss = inner_tau(du, du, cfg.tau, dom) / (dt_k * dt_k);
        run.max_energy_identity_defect =
            std::max(run.max_energy_identity_defect, std::abs(e_prev - e_new - dt_k * diss));

        cur = std::move(nxt);
        e_prev = e_new;
        if (k % cfg.out_every == 0 || k == nsteps) record(t1, cur);
    }
    return run;
}

bool check_order_preserving(const State& a0, const State& b0, const FlowConfig& cfg,
                            const DomainSpec& dom, double* worst_violation) {
    validate_state(a0, dom);
    validate_state(b0, dom);
    if ((a0.u > b0.u + 1e-12).any() || (a0.v > b0.v + 1e-12).any())
        throw InvalidParam("initial states must be ordered: a0 <= b0");
    FlowRun ra = run_flow(a0, cfg, dom);
    FlowRun rb = run_flow(b0, cfg, dom);
    double worst = 0.0;
    for (size_t k = 0; k < ra.traj.size(); ++k) {
        worst = std::max(worst, (ra.traj.states[k].u - rb.traj.states[k].u).maxCoeff());
        worst = std::max(worst, (ra.traj.states[k].v - rb.traj.states[k].v).maxCoeff());
    }
    if (worst_violation) *worst_violation = worst;
    return worst <= 1e-8 + cfg.tol;
}

CompareReport compare_exact(const Trajectory& pde, const Trajectory& exact,
                            const DomainSpec& dom) {
    if (pde.states.empty() || exact.states.empty()) throw GridMismatch("empty trajectory");
    if (pde.states[0].u.size() != exact.states[0].u.size())
        throw GridMismatch("trajectories live on different grids");

    CompareReport rep;
    const double vol = dom.volume();
    for (size_t k = 0; k < pde.size(); ++k) {
        const double t = pde.t[k];
        // locate the bracketing exact samples
        size_t j = 0;
        while (j + 1 < exact.size() && exact.t[j + 1] <= t) ++j;
        double w = 0.0;
        size_t j2 = j;
        if (j + 1 < exact.size()) {
            j2 = j + 1;
            w = (t - exact.t[j]) / (exact.t[j2] - exact.t[j]);
        }
        Eigen::ArrayXd ue = (1.0 - w) * exact.states[j].u + w * exact.states[j2].u;
        const Eigen::ArrayXd du = (pde.states[k].u - ue).abs();
        const double linf = du.maxCoeff();
        rep.linf_per_time.push_back(linf);
        rep.linf_u = std::max(rep.linf_u, linf);
        rep.l2_u = std::max(rep.l2_u, std::sqrt((dom.mass * du.square()).sum() / vol));

        auto lerp = [&](const std::vector<double>& a) {
            return (1.0 - w) * a[j] + w * a[j2];
        };
        if (std::isfinite(pde.edge_a[k]) && std::isfinite(exact.edge_a[j]))
            rep.edge_a_err = std::max(rep.edge_a_err, std::abs(pde.edge_a[k] - lerp(exact.edge_a)));
        if (std::isfinite(pde.edge_b[k]) && std::isfinite(exact.edge_b[j]))
            rep.edge_b_err = std::max(rep.edge_b_err, std::abs(pde.edge_b[k] - lerp(exact.edge_b)));
        Eigen::ArrayXd ge = (1.0 - w) * exact.gap[j] + w * exact.gap[j2];
        rep.gap_err = std::max(rep.gap_err, (pde.gap[k] - ge).abs().maxCoeff());
    }
    return rep;
}

} // namespace facetflow
