#include "facetflow/canonical_section.hpp"

#include <cmath>
#include <numbers>

namespace facetflow {

namespace detail {

namespace {

void apply_h(const TriQP& qp, const Eigen::ArrayXd& x, Eigen::ArrayXd& y) {
    const int m = static_cast<int>(x.size());
    y = qp.diag * x;
    for (int i = 0; i + 1 < m; ++i) {
        y[i] += qp.off[i] * x[i + 1];
        y[i + 1] += qp.off[i] * x[i];
    }
}

// full gradient H x + lin
void gradient(const TriQP& qp, const Eigen::ArrayXd& x, Eigen::ArrayXd& y) {
    apply_h(qp, x, y);
    if (qp.lin.size()) y += qp.lin;
}

double kkt_residual(const TriQP& qp, const Eigen::ArrayXd& w, const Eigen::ArrayXd& grad) {
    double res = 0.0;
    for (int i = 0; i < w.size(); ++i) {
        if (qp.pinned[i]) continue;
        double r;
        if (w[i] >= 1.0 - 1e-12) r = std::max(0.0, grad[i]);
        else if (w[i] <= -1.0 + 1e-12) r = std::max(0.0, -grad[i]);
        else r = std::abs(grad[i]);
        res = std::max(res, r);
    }
    return res;
}

// Thomas solve of H x = rhs on the inclusive index range [l, r].
void solve_segment(const TriQP& qp, int l, int r, Eigen::ArrayXd& w) {
    const int k = r - l + 1;
    Eigen::ArrayXd c(k), d(k);
    Eigen::ArrayXd rhs = Eigen::ArrayXd::Zero(k);
    if (qp.lin.size())
        for (int i = 0; i < k; ++i) rhs[i] = -qp.lin[l + i];
    if (l > 0) rhs[0] -= qp.off[l - 1] * w[l - 1];
    if (r + 1 < w.size()) rhs[k - 1] -= qp.off[r] * w[r + 1];

    double beta = qp.diag[l];
    c[0] = (k > 1) ? qp.off[l] / beta : 0.0;
    d[0] = rhs[0] / beta;
    for (int i = 1; i < k; ++i) {
        beta = qp.diag[l + i] - qp.off[l + i - 1] * c[i - 1];
        if (i + 1 < k) c[i] = qp.off[l + i] / beta;
        d[i] = (rhs[i] - qp.off[l + i - 1] * d[i - 1]) / beta;
    }
    w[r] = d[k - 1];
    for (int i = k - 2; i >= 0; --i) w[l + i] = d[i] - c[i] * w[l + i + 1];
}

} // namespace

int solve_tri_qp(TriQP& qp, int max_iter, double kkt_tol) {
    const int m = static_cast<int>(qp.w.size());
    auto project = [&](Eigen::ArrayXd& x) {
        for (int i = 0; i < m; ++i)
            if (!qp.pinned[i]) x[i] = std::clamp(x[i], -1.0, 1.0);
    };
    project(qp.w);

    const double scale = std::max(
        {1.0, qp.diag.maxCoeff(), qp.lin.size() ? qp.lin.abs().maxCoeff() : 0.0});
    Eigen::ArrayXd grad(m);
    auto kkt_of = [&](const Eigen::ArrayXd& ww) {
        gradient(qp, ww, grad);
        return kkt_residual(qp, ww, grad);
    };

    // Exact active-set pass: guess the bound set from a candidate point, solve
    // the free tridiagonal segments, and adjust the set until the KKT signs
    // hold. Returns true when the polished point is optimal.
    auto try_polish = [&](const Eigen::ArrayXd& start, Eigen::ArrayXd& out) {
        out = start;
        project(out);
        std::vector<char> active(static_cast<size_t>(m), 0);
        for (int i = 0; i < m; ++i)
            if (!qp.pinned[i] && std::abs(out[i]) > 1.0 - 1e-8) {
                active[static_cast<size_t>(i)] = 1;
                out[i] = out[i] > 0.0 ? 1.0 : -1.0;
            }
        for (int pass = 0; pass < 100; ++pass) {
            auto fixed = [&](int i) { return qp.pinned[i] || active[static_cast<size_t>(i)]; };
            int i = 0;
            while (i < m) {
                if (fixed(i)) { ++i; continue; }
                int j = i;
                while (j + 1 < m && !fixed(j + 1)) ++j;
                solve_segment(qp, i, j, out);
                i = j + 1;
            }
            // box feasibility of the segment solution
            int worst = -1;
            double worst_v = 1.0 + 1e-12;
            for (int k = 0; k < m; ++k)
                if (!fixed(k) && std::abs(out[k]) > worst_v) {
                    worst_v = std::abs(out[k]);
                    worst = k;
                }
            if (worst >= 0) {
                active[static_cast<size_t>(worst)] = 1;
                project(out);
                continue;
            }
            // multiplier signs at active bounds
            gradient(qp, out, grad);
            int rel = -1;
            double rel_v = kkt_tol * scale;
            for (int k = 0; k < m; ++k) {
                if (!active[static_cast<size_t>(k)]) continue;
                const double viol = out[k] > 0.0 ? grad[k] : -grad[k];
                if (viol > rel_v) { rel_v = viol; rel = k; }
            }
            if (rel >= 0) {
                active[static_cast<size_t>(rel)] = 0;
                continue;
            }
            break;
        }
        return kkt_of(out) <= kkt_tol * scale;
    };

    Eigen::ArrayXd polished(m);
    if (try_polish(qp.w, polished)) {
        qp.w = polished;
        return 0;
    }

    // Lipschitz constant of the free-masked Hessian
    Eigen::ArrayXd x = Eigen::ArrayXd::Zero(m), y(m);
    for (int i = 0; i < m; ++i) x[i] = qp.pinned[i] ? 0.0 : std::sin(1.0 + i);
    double L = 0.0;
    for (int it = 0; it < 50; ++it) {
        apply_h(qp, x, y);
        for (int i = 0; i < m; ++i)
            if (qp.pinned[i]) y[i] = 0.0;
        const double ny = std::sqrt((y * y).sum());
        if (ny == 0.0) break;
        L = ny / std::max(1e-300, std::sqrt((x * x).sum()));
        x = y / ny;
    }
    L = std::max(L, qp.diag.maxCoeff());
    const double step = 1.0 / L;

    Eigen::ArrayXd w = qp.w, w_prev = qp.w, z = qp.w;
    double theta = 1.0;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        gradient(qp, z, grad);
        w_prev = w;
        w = z;
        for (int i = 0; i < m; ++i)
            if (!qp.pinned[i]) w[i] = std::clamp(z[i] - step * grad[i], -1.0, 1.0);
        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        // adaptive restart
        if (((z - w) * (w - w_prev)).sum() > 0.0) theta = 1.0;
        z = w + ((theta - 1.0) / theta_next) * (w - w_prev);
        theta = theta_next;
        if ((iter & 255) == 255 && try_polish(w, polished)) {
            qp.w = polished;
            return iter + 1;
        }
        if ((iter & 15) == 15 && kkt_of(w) <= kkt_tol * scale) break;
    }
    qp.w = w;
    if (try_polish(w, polished) && kkt_of(polished) <= kkt_of(w)) qp.w = polished;
    return iter;
}

} // namespace detail

namespace {

constexpr double kPi = std::numbers::pi;

struct QpSetup {
    detail::TriQP qp;
    Eigen::ArrayXd r;
    Eigen::ArrayXd G;    // r (dim 2) or 1 (dim 1)
    int gamma_node = -1; // index carrying the Gamma term
    int gamma_side = 0;  // -1 inner, +1 outer
    double gamma_fac = 0.0;
    int dim = 2;
};

void add_cell(QpSetup& s, int i, double vol) {
    const double a = 1.0 / vol;
    s.qp.diag[i] += 2.0 * s.G[i] * s.G[i] * a;
    s.qp.diag[i + 1] += 2.0 * s.G[i + 1] * s.G[i + 1] * a;
    s.qp.off[i] += -2.0 * s.G[i] * s.G[i + 1] * a;
}

double quad_objective(const QpSetup& s, double tau) {
    const int m = static_cast<int>(s.r.size());
    double J = 0.0;
    for (int i = 0; i + 1 < m; ++i) {
        const double dr = s.r[i + 1] - s.r[i];
        double d, vol;
        if (s.dim == 2) {
            const double rm = 0.5 * (s.r[i] + s.r[i + 1]);
            d = (s.r[i + 1] * s.qp.w[i + 1] - s.r[i] * s.qp.w[i]) / (rm * dr);
            vol = rm * dr;
        } else {
            d = (s.qp.w[i + 1] - s.qp.w[i]) / dr;
            vol = dr;
        }
        J += d * d * vol;
    }
    if (s.gamma_node >= 0) {
        const double mu = s.qp.w[s.gamma_node];
        J += s.gamma_fac * mu * mu / tau;
    }
    return (s.dim == 2) ? 2.0 * kPi * J : J;
}

} // namespace

SectionResult minimal_section_radial(const FacetSpec& facet, const DomainSpec& dom, double tau,
                                     TraceStatus ts, int m, int max_iter) {
    if (!(tau > 0.0)) throw InvalidParam("tau must be positive");
    validate_facet(facet, dom);
    if (facet.onset()) throw InvalidFacet("onset probe has no band to solve on");
    if (m < 8) throw InvalidParam("facet grid too coarse");

    QpSetup s;
    s.dim = dom.dim;
    s.r = Eigen::ArrayXd::LinSpaced(m, facet.inner, facet.outer);
    s.G = (dom.dim == 2) ? s.r : Eigen::ArrayXd::Ones(m);
    s.qp.diag = Eigen::ArrayXd::Zero(m);
    s.qp.off = Eigen::ArrayXd::Zero(m - 1);
    s.qp.pinned.assign(static_cast<size_t>(m), 0);
    s.qp.w = Eigen::ArrayXd::Zero(m);

    for (int i = 0; i + 1 < m; ++i) {
        const double dr = s.r[i + 1] - s.r[i];
        add_cell(s, i, (dom.dim == 2) ? 0.5 * (s.r[i] + s.r[i + 1]) * dr : dr);
    }

    const EdgeConstraints ec = edge_constraints(facet, dom);
    auto pin = [&](int i, double v) {
        s.qp.pinned[static_cast<size_t>(i)] = 1;
        s.qp.w[i] = v;
    };
    if (ec.w_inner) pin(0, *ec.w_inner);
    if (ec.w_outer) pin(m - 1, *ec.w_outer);
    if (ec.gamma_side != 0) {
        s.gamma_side = ec.gamma_side;
        s.gamma_node = ec.gamma_side < 0 ? 0 : m - 1;
        const double rg = ec.gamma_side < 0 ? facet.inner : facet.outer;
        s.gamma_fac = (dom.dim == 2) ? rg : 1.0;
        s.qp.diag[s.gamma_node] += 2.0 * s.gamma_fac / tau;
        if (ts != TraceStatus::matched) {
            const double sign = ts == TraceStatus::gap_positive ? 1.0 : -1.0;
            // -[z.nu] = Sgn(gamma u - v): inner Gamma w = sign, outer w = -sign
            pin(s.gamma_node, ec.gamma_side < 0 ? sign : -sign);
        }
    }

    SectionResult res;
    res.iterations = detail::solve_tri_qp(s.qp, max_iter);
    Eigen::ArrayXd grad(m);
    detail::gradient(s.qp, s.qp.w, grad);
    const double kkt = detail::kkt_residual(s.qp, s.qp.w, grad);
    if (kkt > 1e-7 * std::max(1.0, s.qp.diag.maxCoeff()))
        throw NotConverged("canonical-section QP did not reach optimality");

    res.field = make_sampled_field(dom.dim, s.r, s.qp.w);
    const double net = s.G[m - 1] * s.qp.w[m - 1] - s.G[0] * s.qp.w[0];
    const double band = (dom.dim == 2)
                            ? 0.5 * (facet.outer * facet.outer - facet.inner * facet.inner)
                            : (facet.outer - facet.inner);
    res.lambda = net / band;
    if (s.gamma_node >= 0) {
        res.mu = s.gamma_side < 0 ? -s.qp.w[s.gamma_node] : s.qp.w[s.gamma_node];
        res.mu_pinned = std::abs(res.mu) >= 1.0 - 1e-9;
    } else {
        res.mu = std::numeric_limits<double>::quiet_NaN();
    }
    res.objective = quad_objective(s, tau);
    return res;
}

std::vector<FacetSpec> detect_facets(const State& st, const DomainSpec& dom, double grad_tol) {
    validate_state(st, dom);
    const int n = dom.n;
    const double scale = std::max(1.0, st.u.abs().maxCoeff());
    std::vector<FacetSpec> out;
    int i = 0;
    while (i + 1 < n) {
        if (std::abs(st.u[i + 1] - st.u[i]) > grad_tol * scale) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < n && std::abs(st.u[j + 1] - st.u[j]) <= grad_tol * scale) ++j;
        const double level = st.u[i];
        int chi;
        if (j + 1 < n) chi = st.u[j + 1] > level ? 1 : -1;       // outer interior edge
        else if (i > 0) chi = st.u[i - 1] > level ? 1 : -1;      // rim facet
        else chi = 1;                                            // whole domain flat
        out.push_back(FacetSpec{dom.nodes[i], dom.nodes[j], chi});
        i = j + 1;
    }
    return out;
}

Section1dResult minimal_section_1d(const State& st, const DomainSpec& dom, double tau,
                                   double grad_tol, double trace_tol) {
    if (dom.dim != 1) throw DomainMismatch("minimal_section_1d needs an interval domain");
    if (!(tau > 0.0)) throw InvalidParam("tau must be positive");
    validate_state(st, dom);
    const int n = dom.n;
    const double scale = std::max(1.0, st.u.abs().maxCoeff());

    std::vector<char> strict(static_cast<size_t>(n - 1), 0);
    int chi = 0, first = -1, last = -1;
    for (int i = 0; i + 1 < n; ++i) {
        const double d = st.u[i + 1] - st.u[i];
        if (std::abs(d) <= grad_tol * scale) continue;
        const int sgn = d > 0 ? 1 : -1;
        if (chi == 0) chi = sgn;
        else if (sgn != chi) throw NonMonotone("u is not monotone outside facets");
        strict[static_cast<size_t>(i)] = 1;
        if (first < 0) first = i;
        last = i;
    }
    for (int i = first; i >= 0 && i <= last; ++i)
        if (!strict[static_cast<size_t>(i)])
            throw InvalidFacet("interior facet: flat run away from the boundary");

    QpSetup s;
    s.dim = 1;
    s.r = dom.nodes;
    s.G = Eigen::ArrayXd::Ones(n);
    s.qp.diag = Eigen::ArrayXd::Zero(n);
    s.qp.off = Eigen::ArrayXd::Zero(n - 1);
    s.qp.pinned.assign(static_cast<size_t>(n), 0);
    s.qp.w = Eigen::ArrayXd::Zero(n);
    for (int i = 0; i + 1 < n; ++i) add_cell(s, i, dom.nodes[i + 1] - dom.nodes[i]);

    // both interval endpoints carry the dynamic condition
    s.qp.diag[0] += 2.0 / tau;
    s.qp.diag[n - 1] += 2.0 / tau;

    auto pin = [&](int i, double v) {
        s.qp.pinned[static_cast<size_t>(i)] = 1;
        s.qp.w[i] = v;
    };
    for (int i = 0; i + 1 < n; ++i)
        if (strict[static_cast<size_t>(i)]) {
            pin(i, chi);
            pin(i + 1, chi);
        }
    const double gl = st.u[0] - st.v[0];
    const double gr = st.u[n - 1] - st.v[1];
    if (std::abs(gl) > trace_tol * scale && !s.qp.pinned[0]) pin(0, gl > 0 ? 1.0 : -1.0);
    if (std::abs(gr) > trace_tol * scale && !s.qp.pinned[static_cast<size_t>(n - 1)])
        pin(n - 1, gr > 0 ? -1.0 : 1.0);

    Section1dResult res;
    res.iterations = detail::solve_tri_qp(s.qp, 200000);
    res.field = make_sampled_field(1, dom.nodes, s.qp.w);
    res.z_left = s.qp.w[0];
    res.z_right = s.qp.w[n - 1];
    if (first > 0)
        res.facet_lambda.push_back((s.qp.w[first] - s.qp.w[0]) /
                                   (dom.nodes[first] - dom.nodes[0]));
    else
        res.facet_lambda.push_back(0.0);
    if (last >= 0 && last + 1 < n - 1)
        res.facet_lambda.push_back((s.qp.w[n - 1] - s.qp.w[last + 1]) /
                                   (dom.nodes[n - 1] - dom.nodes[last + 1]));
    else
        res.facet_lambda.push_back(0.0);

    double J = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
        const double d = (s.qp.w[i + 1] - s.qp.w[i]) / dom.h;
        J += d * d * dom.h;
    }
    J += (s.qp.w[0] * s.qp.w[0] + s.qp.w[n - 1] * s.qp.w[n - 1]) / tau;
    res.objective = J;
    return res;
}

} // namespace facetflow
