#include "facetflow/states_energy.hpp"

#include <cmath>

namespace facetflow {

void validate_state(const State& s, const DomainSpec& dom) {
    if (s.u.size() != dom.n || s.v.size() != static_cast<int>(dom.gamma_nodes.size()))
        throw DimensionMismatch("state size does not match the domain");
    if (!s.u.isFinite().all() || !s.v.isFinite().all())
        throw InvalidParam("state entries must be finite");
}

void validate_config(const FlowConfig& c) {
    if (!(c.tau > 0.0)) throw ConfigError("flow.tau must be positive");
    if (c.eps < 0.0) throw ConfigError("flow.eps must be nonnegative");
    if (!(c.dt > 0.0)) throw ConfigError("flow.dt must be positive");
    if (!(c.T > 0.0)) throw ConfigError("flow.T must be positive");
    if (!(c.tol > 0.0)) throw ConfigError("flow.tol must be positive");
    if (c.max_iter <= 0) throw ConfigError("flow.max_iter must be positive");
    if (c.out_every <= 0) throw ConfigError("flow.out_every must be positive");
}

double trace_at(const State& s, const DomainSpec& dom, int j) {
    return s.u[dom.gamma_nodes[static_cast<size_t>(j)]];
}

double energy_E(const State& s, const DomainSpec& dom) {
    validate_state(s, dom);
    double tv = 0.0;
    for (int i = 0; i + 1 < dom.n; ++i)
        tv += dom.tv_weight[i] * std::abs(s.u[i + 1] - s.u[i]);
    double bnd = 0.0;
    for (int j = 0; j < static_cast<int>(dom.gamma_nodes.size()); ++j)
        bnd += dom.gamma_weight[j] * std::abs(trace_at(s, dom, j) - s.v[j]);
    return tv + bnd;
}

double energy_E_eps(const State& s, double eps, const DomainSpec& dom) {
    if (!(eps > 0.0)) throw InvalidParam("energy_E_eps requires eps > 0");
    validate_state(s, dom);
    const double scale = std::max({1.0, s.u.abs().maxCoeff(), s.v.abs().maxCoeff()});
    for (int j = 0; j < static_cast<int>(dom.gamma_nodes.size()); ++j)
        if (std::abs(trace_at(s, dom, j) - s.v[j]) > 1e-12 * scale) return infinite_energy();

    double val = 0.0;
    for (int i = 0; i + 1 < dom.n; ++i) {
        const double slope = (s.u[i + 1] - s.u[i]) / dom.h;
        const double cell = dom.tv_weight[i] * dom.h;  // cell volume
        val += cell * (std::sqrt(slope * slope + eps * eps) + 0.5 * eps * eps * slope * slope);
    }
    return val;
}

double inner_tau(const State& a, const State& b, double tau, const DomainSpec& dom) {
    if (!(tau > 0.0)) throw InvalidParam("tau must be positive");
    validate_state(a, dom);
    validate_state(b, dom);
    double s = (dom.mass * a.u * b.u).sum();
    s += tau * (dom.gamma_weight * a.v * b.v).sum();
    return s;
}

std::pair<State, State> lattice_sup_inf(const State& a, const State& b) {
    if (a.u.size() != b.u.size() || a.v.size() != b.v.size())
        throw DimensionMismatch("lattice operands must have matching shapes");
    State sup{a.u.max(b.u), a.v.max(b.v)};
    State inf{a.u.min(b.u), a.v.min(b.v)};
    return {std::move(sup), std::move(inf)};
}

} // namespace facetflow
