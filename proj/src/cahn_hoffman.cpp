#include "facetflow/cahn_hoffman.hpp"

#include <cmath>
#include <numbers>

namespace facetflow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTie = 1e-12;

double shell_w(const DomainSpec& dom, double r, double w) {
    return (dom.dim == 2) ? 2.0 * kPi * r * w : w;
}

DomainSpec dilate_domain(const DomainSpec& dom, double k) {
    switch (dom.kind) {
        case DomainKind::interval: return make_interval(dom.outer * k, dom.n);
        case DomainKind::ball: return make_ball(dom.outer * k, dom.n);
        case DomainKind::annulus: {
            GammaSelect g = dom.gamma_inner && dom.gamma_outer ? GammaSelect::both
                            : dom.gamma_outer                 ? GammaSelect::outer
                                                              : GammaSelect::inner;
            return make_annulus(dom.inner * k, dom.outer * k, dom.n, g);
        }
    }
    throw InvalidParam("unknown domain kind");
}

// Field with prescribed traces at both band edges; div z is the constant
// dictated by the divergence theorem.
ChResult pinned_band_field(int dim, double a, double b, double w_a, double w_b) {
    ChResult res;
    double lambda, c;
    if (dim == 2) {
        lambda = 2.0 * (b * w_b - a * w_a) / (b * b - a * a);
        c = b * (w_b - 0.5 * lambda * b);
    } else {
        lambda = (w_b - w_a) / (b - a);
        c = w_b - lambda * b;
    }
    res.field = make_closed_form_field(dim, a, b, lambda, c);
    res.lambda = lambda;
    res.mu = std::numeric_limits<double>::quiet_NaN();
    res.feasible = res.field.max_abs() <= 1.0 + 1e-9;
    return res;
}

} // namespace

const char* to_string(FacetCase c) {
    switch (c) {
        case FacetCase::ball_coherent: return "ball_coherent";
        case FacetCase::annulus_coherent: return "annulus_coherent";
        case FacetCase::annulus_borderline: return "annulus_borderline";
        case FacetCase::annulus_detached: return "annulus_detached";
        case FacetCase::onset_facet_forms: return "onset_facet_forms";
        case FacetCase::onset_neutral: return "onset_neutral";
        case FacetCase::onset_detach: return "onset_detach";
        case FacetCase::interior: return "interior";
    }
    return "?";
}

QuadMinResult quad_min(double a, double b, double c, double tau) {
    if (!(a > 0.0) || !(b > 0.0) || !(tau > 0.0))
        throw InvalidParam("quad_min requires a, b, tau > 0");
    const double lambda = c / (a + tau * b);
    const double mu = -tau * lambda;
    return {lambda, mu, a * lambda * lambda + b * mu * mu / tau};
}

ChResult ch_ball_coherent(double R, double rho, int chi, double tau) {
    if (!(tau > 0.0)) throw InvalidParam("tau must be positive");
    if (!(rho > 0.0) || !(rho < R)) throw Degenerate("ch_ball_coherent requires 0 < rho < R");
    const double lambda = 2.0 * rho * chi / (R * R - rho * rho + 2.0 * tau * R);
    const double c = -0.5 * lambda * (R * R + 2.0 * tau * R);
    ChResult res;
    res.field = make_closed_form_field(2, rho, R, lambda, c);
    res.lambda = lambda;
    res.mu = -tau * lambda;  // = w(R) = [z.nu](R)
    res.feasible = true;     // |w| peaks at rho where w = -chi
    return res;
}

ChResult ch_annulus_coherent(double r0, double rho, int chi, double tau) {
    if (!(tau > 0.0)) throw InvalidParam("tau must be positive");
    if (!(r0 > 0.0) || !(rho > r0)) throw Degenerate("ch_annulus_coherent requires 0 < r0 < rho");
    const double lambda = 2.0 * rho * chi / (rho * rho - r0 * r0 + 2.0 * tau * r0);
    const double c = 0.5 * lambda * r0 * (2.0 * tau - r0);
    ChResult res;
    res.field = make_closed_form_field(2, r0, rho, lambda, c);
    res.lambda = lambda;
    res.mu = -tau * lambda;  // = -w(r0)
    // |w(r0)| = tau|lambda| <= 1  <=>  rho + r0 >= 2 tau
    res.feasible = rho + r0 >= 2.0 * tau - kTie * std::max(1.0, rho + r0);
    return res;
}

ChResult ch_annulus_detached(double r0, double rho, int chi) {
    if (!(r0 > 0.0) || !(rho > r0)) throw Degenerate("ch_annulus_detached requires 0 < r0 < rho");
    const double lambda = 2.0 * chi / (rho + r0);
    const double c = chi * rho * r0 / (rho + r0);
    ChResult res;
    res.field = make_closed_form_field(2, r0, rho, lambda, c);
    res.lambda = lambda;
    res.mu = -static_cast<double>(chi);  // [z.nu](r0) = -w(r0) = -chi
    res.feasible = true;                 // (rho-r)(r0-r) <= 0 on the band
    return res;
}

EdgeConstraints edge_constraints(const FacetSpec& facet, const DomainSpec& dom) {
    const FacetEdges e = classify_edges(facet, dom);
    EdgeConstraints ec;
    switch (e.outer) {
        case EdgeType::interior: ec.w_outer = static_cast<double>(facet.chi); break;
        case EdgeType::neumann: ec.w_outer = 0.0; break;
        case EdgeType::gamma: ec.gamma_side = +1; break;
        case EdgeType::origin: throw InvalidFacet("outer edge at the origin");
    }
    switch (e.inner) {
        case EdgeType::interior:
            ec.w_inner = (e.outer == EdgeType::interior) ? static_cast<double>(facet.chi)
                                                         : -static_cast<double>(facet.chi);
            break;
        case EdgeType::neumann:
        case EdgeType::origin: ec.w_inner = 0.0; break;
        case EdgeType::gamma:
            if (ec.gamma_side != 0) throw InvalidFacet("facet touching Gamma on both edges");
            ec.gamma_side = -1;
            break;
    }
    return ec;
}

FacetReport classify_facet(const DomainSpec& dom, const FacetSpec& facet, double tau,
                           bool trace_matched, int gap_sign) {
    if (!(tau > 0.0)) throw InvalidParam("tau must be positive");
    validate_facet(facet, dom);
    const int chi = facet.chi;
    const FacetEdges edges = classify_edges(facet, dom);
    FacetReport rep;

    if (facet.onset()) {
        const bool at_inner_gamma = edges.inner == EdgeType::gamma;
        const bool at_outer_gamma = edges.outer == EdgeType::gamma;
        if (!at_inner_gamma && !at_outer_gamma)
            throw InvalidFacet("onset probe must sit on Gamma");
        Eigen::ArrayXd rr(1), ww(1);
        rr[0] = facet.inner;
        ww[0] = static_cast<double>(chi);
        rep.witness = make_sampled_field(dom.dim, rr, ww);
        rep.mu = -static_cast<double>(chi);
        if (at_outer_gamma) {
            // collision of the bulk and the boundary: a coherent facet forms
            rep.lambda = chi / tau;
            rep.tag = FacetCase::onset_facet_forms;
            rep.calibrable = rep.coherent = true;
            rep.mu = -tau * rep.lambda;
            return rep;
        }
        const double r0 = facet.inner;
        rep.lambda = chi / r0;  // bulk rate div z = chi/r at Gamma
        if (r0 > tau + kTie) {
            rep.tag = FacetCase::onset_facet_forms;
        } else if (r0 >= tau - kTie) {
            rep.tag = FacetCase::onset_neutral;
            rep.coherent = true;  // gamma u_t = v_t = chi
        } else {
            rep.tag = FacetCase::onset_detach;
            rep.detached = true;
        }
        return rep;
    }

    if (edges.outer == EdgeType::gamma) {
        if (edges.inner != EdgeType::interior)
            throw InvalidFacet("outer-Gamma facet needs an interior inner edge");
        if (trace_matched) {
            ChResult ch = ch_ball_coherent(facet.outer, facet.inner, chi, tau);
            rep.lambda = ch.lambda;
            rep.mu = ch.mu;
            rep.witness = ch.field;
            rep.calibrable = rep.coherent = true;
            rep.tag = FacetCase::ball_coherent;
        } else {
            const int s = gap_sign != 0 ? gap_sign : chi;
            ChResult ch = pinned_band_field(dom.dim, facet.inner, facet.outer,
                                            -static_cast<double>(chi), -static_cast<double>(s));
            rep.lambda = ch.lambda;
            rep.mu = -static_cast<double>(s);  // [z.nu](R) = w(R)
            rep.witness = ch.field;
            rep.calibrable = ch.feasible;
            rep.detached = true;
            rep.tag = FacetCase::annulus_detached;
        }
        return rep;
    }

    if (edges.inner == EdgeType::gamma) {
        if (edges.outer != EdgeType::interior)
            throw InvalidFacet("inner-Gamma facet needs an interior outer edge");
        const double r0 = facet.inner, rho = facet.outer;
        const double tie = kTie * std::max(1.0, rho + r0);
        if (trace_matched) {
            if (std::abs(rho + r0 - 2.0 * tau) <= tie) {
                ChResult ch = ch_annulus_detached(r0, rho, chi);
                rep.lambda = ch.lambda;  // |lambda| = 1/tau
                rep.mu = ch.mu;
                rep.witness = ch.field;
                rep.calibrable = rep.coherent = true;  // tau*lambda + mu = 0 here
                rep.tag = FacetCase::annulus_borderline;
            } else if (rho + r0 > 2.0 * tau) {
                ChResult ch = ch_annulus_coherent(r0, rho, chi, tau);
                rep.lambda = ch.lambda;
                rep.mu = ch.mu;
                rep.witness = ch.field;
                rep.calibrable = rep.coherent = true;
                rep.tag = FacetCase::annulus_coherent;
            } else {
                ChResult ch = ch_annulus_detached(r0, rho, chi);
                rep.lambda = ch.lambda;
                rep.mu = ch.mu;
                rep.witness = ch.field;
                rep.calibrable = true;
                rep.detached = true;
                rep.tag = FacetCase::annulus_detached;
            }
        } else {
            const int s = gap_sign != 0 ? gap_sign : chi;
            ChResult ch = pinned_band_field(dom.dim, r0, rho, static_cast<double>(s),
                                            static_cast<double>(chi));
            rep.lambda = ch.lambda;
            rep.mu = -static_cast<double>(s);  // [z.nu](r0) = -w(r0)
            rep.witness = ch.field;
            rep.calibrable = ch.feasible;
            rep.detached = std::abs(tau * rep.lambda + rep.mu) > 1e-12;
            rep.coherent = !rep.detached;
            rep.tag = FacetCase::annulus_detached;
        }
        return rep;
    }

    // no Gamma contact: interior facet (or one leaning on a Neumann wall)
    const EdgeConstraints ec = edge_constraints(facet, dom);
    ChResult ch = pinned_band_field(dom.dim, facet.inner, facet.outer, *ec.w_inner, *ec.w_outer);
    rep.lambda = ch.lambda;
    rep.witness = ch.field;
    rep.calibrable = ch.feasible;
    rep.tag = FacetCase::interior;
    return rep;
}

double i_tau(const RadialField& field, const FacetSpec& facet, const DomainSpec& dom,
             double tau) {
    if (!(tau > 0.0)) throw InvalidParam("tau must be positive");
    const double tol = 1e-9 * std::max(1.0, dom.outer);
    if (field.r_in > facet.inner + tol || field.r_out < facet.outer - tol)
        throw DomainMismatch("field does not cover the facet");
    if (field.dim != dom.dim) throw DomainMismatch("field/domain dimension mismatch");

    double bulk = 0.0;
    if (facet.outer > facet.inner) {
        if (field.closed_form) {
            bulk = field.lambda * field.lambda * band_measure(dom, facet.inner, facet.outer);
        } else {
            const int m = static_cast<int>(field.r.size());
            for (int i = 0; i + 1 < m; ++i) {
                const double rl = field.r[i], rr = field.r[i + 1];
                if (rr <= facet.inner + tol || rl >= facet.outer - tol) continue;
                const double dr = rr - rl;
                double d, vol;
                if (dom.dim == 2) {
                    const double rm = 0.5 * (rl + rr);
                    d = (rr * field.w[i + 1] - rl * field.w[i]) / (rm * dr);
                    vol = 2.0 * kPi * rm * dr;
                } else {
                    d = (field.w[i + 1] - field.w[i]) / dr;
                    vol = dr;
                }
                bulk += d * d * vol;
            }
        }
    }

    double bnd = 0.0;
    const FacetEdges edges = classify_edges(facet, dom);
    if (edges.inner == EdgeType::gamma) {
        const double mu = -field.eval(facet.inner);
        bnd += mu * mu * shell_measure(dom, facet.inner) / tau;
    }
    if (edges.outer == EdgeType::gamma) {
        const double mu = field.eval(facet.outer);
        bnd += mu * mu * shell_measure(dom, facet.outer) / tau;
    }
    return bulk + bnd;
}

std::pair<double, double> balance_identity(const RadialField& field, const FacetSpec& facet,
                                           const DomainSpec& dom) {
    const double a = facet.inner, b = facet.outer;
    const double lhs = shell_w(dom, b, field.eval(b)) - shell_w(dom, a, field.eval(a));

    const FacetEdges edges = classify_edges(facet, dom);
    double rhs = 0.0;
    const double chi = facet.chi;
    if (edges.outer == EdgeType::interior) rhs += shell_measure(dom, b) * chi;
    if (edges.inner == EdgeType::interior)
        rhs += shell_measure(dom, a) * (edges.outer == EdgeType::interior ? -chi : chi);
    if (edges.inner == EdgeType::gamma) rhs += shell_measure(dom, a) * (-field.eval(a));
    if (edges.outer == EdgeType::gamma) rhs += shell_measure(dom, b) * field.eval(b);
    return {lhs, rhs};
}

ChCheck verify_ch(const RadialField& field, const FacetSpec& facet, const DomainSpec& dom) {
    ChCheck chk;
    auto add = [&](const std::string& what, double r, double v) {
        chk.ok = false;
        chk.violations.push_back({what, r, v});
    };

    // box constraint |z| <= 1
    const int probes = field.closed_form ? 2001 : static_cast<int>(field.r.size());
    double worst = 0.0, worst_r = field.r_in;
    for (int k = 0; k < probes; ++k) {
        const double rr = field.closed_form
                              ? field.r_in + (field.r_out - field.r_in) * k / double(probes - 1)
                              : field.r[k];
        if (dom.dim == 2 && rr == 0.0 && field.closed_form && field.c != 0.0) continue;
        const double v = std::abs(field.eval(rr));
        if (v > worst) { worst = v; worst_r = rr; }
    }
    if (worst > 1.0 + 1e-9) add("|z| exceeds 1", worst_r, worst);

    const EdgeConstraints ec = edge_constraints(facet, dom);
    if (!facet.onset()) {
        if (ec.w_inner && std::abs(field.eval(facet.inner) - *ec.w_inner) > 1e-9)
            add("inner trace", facet.inner, field.eval(facet.inner));
        if (ec.w_outer && std::abs(field.eval(facet.outer) - *ec.w_outer) > 1e-9)
            add("outer trace", facet.outer, field.eval(facet.outer));
    }
    return chk;
}

std::pair<RadialField, DomainSpec> scale_field(const RadialField& field, const DomainSpec& dom,
                                               double tau_ratio) {
    return {dilate_field(field, tau_ratio), dilate_domain(dom, tau_ratio)};
}

} // namespace facetflow
