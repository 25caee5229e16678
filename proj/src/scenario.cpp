#include "facetflow/scenario.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace facetflow {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

Mode mode_from_string(const std::string& s) {
    if (s == "classify") return Mode::classify;
    if (s == "evolve_exact" || s == "evolve") return Mode::evolve_exact;
    if (s == "evolve_pde" || s == "pde") return Mode::evolve_pde;
    if (s == "compare") return Mode::compare;
    if (s == "onset") return Mode::onset;
    if (s == "sweep") return Mode::sweep;
    if (s == "selftest") return Mode::selftest;
    throw ValidationError("unknown mode: " + s);
}

const char* to_string(Mode m) {
    switch (m) {
        case Mode::classify: return "classify";
        case Mode::evolve_exact: return "evolve_exact";
        case Mode::evolve_pde: return "evolve_pde";
        case Mode::compare: return "compare";
        case Mode::onset: return "onset";
        case Mode::sweep: return "sweep";
        case Mode::selftest: return "selftest";
    }
    return "?";
}

namespace {

double require_number(const json& j, const std::string& ctx, const std::string& key) {
    if (!j.contains(key) || !j[key].is_number())
        throw ValidationError(ctx + "." + key + " required");
    return j[key].get<double>();
}

DomainSpec parse_domain(const json& jd) {
    if (!jd.contains("kind")) throw ValidationError("domain.kind required");
    const std::string kind = jd["kind"].get<std::string>();
    const int n = jd.contains("n") ? jd["n"].get<int>() : 400;
    try {
        if (kind == "interval") return make_interval(require_number(jd, "domain", "L"), n);
        if (kind == "ball") return make_ball(require_number(jd, "domain", "R"), n);
        if (kind == "annulus") {
            GammaSelect g = GammaSelect::dflt;
            if (jd.contains("gamma")) {
                const std::string gs = jd["gamma"].get<std::string>();
                if (gs == "inner") g = GammaSelect::inner;
                else if (gs == "outer") g = GammaSelect::outer;
                else if (gs == "both") g = GammaSelect::both;
                else throw ValidationError("domain.gamma must be inner|outer|both");
            }
            return make_annulus(require_number(jd, "domain", "r0"),
                                require_number(jd, "domain", "R"), n, g);
        }
    } catch (const InvalidGeometry& e) {
        throw ValidationError(std::string("domain: ") + e.what());
    }
    throw ValidationError("domain.kind must be interval|ball|annulus");
}

Profile parse_profile(const json& jp, double dom_lo, double dom_hi) {
    if (!jp.contains("name")) throw ValidationError("initial.name required");
    const std::string name = jp["name"].get<std::string>();
    if (name == "plateau_ramp" || name == "capped_ramp" || name == "radial_ramp" ||
        name == "linear_ramp") {
        const double slope = jp.value("slope", 1.0);
        const double offset = jp.value("offset", 0.0);
        const double lo = jp.value("lo", dom_lo);
        const double hi = jp.value("hi", dom_hi);
        return plateau_ramp(slope, lo, hi, offset);
    }
    if (name == "tabulated") {
        if (!jp.contains("x") || !jp.contains("u"))
            throw ValidationError("initial.x and initial.u required for tabulated");
        const auto xs = jp["x"].get<std::vector<double>>();
        const auto us = jp["u"].get<std::vector<double>>();
        Eigen::ArrayXd x = Eigen::Map<const Eigen::ArrayXd>(xs.data(), xs.size());
        Eigen::ArrayXd u = Eigen::Map<const Eigen::ArrayXd>(us.data(), us.size());
        return tabulated_profile(x, u);
    }
    throw ValidationError("unknown initial profile: " + name);
}

AxisSpec parse_axis(const json& ja, const std::string& ctx) {
    AxisSpec a;
    a.min = require_number(ja, ctx, "min");
    a.max = require_number(ja, ctx, "max");
    a.count = ja.value("count", 50);
    if (a.count < 1 || a.max < a.min) throw ValidationError(ctx + ": bad axis");
    return a;
}

json domain_echo(const DomainSpec& d) {
    json j;
    switch (d.kind) {
        case DomainKind::interval: j["kind"] = "interval"; j["L"] = d.outer; break;
        case DomainKind::ball: j["kind"] = "ball"; j["R"] = d.outer; break;
        case DomainKind::annulus:
            j["kind"] = "annulus";
            j["r0"] = d.inner;
            j["R"] = d.outer;
            j["gamma"] = d.gamma_inner && d.gamma_outer ? "both"
                         : d.gamma_outer               ? "outer"
                                                       : "inner";
            break;
    }
    j["n"] = d.n;
    return j;
}

json flow_echo(const FlowConfig& f) {
    return json{{"tau", f.tau},   {"eps", f.eps},           {"dt", f.dt},
                {"T", f.T},       {"tol", f.tol},           {"max_iter", f.max_iter},
                {"out_every", f.out_every}};
}

} // namespace

Scenario parse_scenario(const json& j) {
    Scenario s;
    if (!j.contains("mode")) throw ValidationError("mode required");
    s.mode = mode_from_string(j["mode"].get<std::string>());

    if (j.contains("domain")) {
        s.domain = parse_domain(j["domain"]);
        s.has_domain = true;
    }
    if (j.contains("facet")) {
        const json& jf = j["facet"];
        s.facet.inner = require_number(jf, "facet", "inner");
        s.facet.outer = require_number(jf, "facet", "outer");
        s.facet.chi = jf.value("chi", 1);
        s.has_facet = true;
        if (s.has_domain) {
            try {
                validate_facet(s.facet, s.domain);
            } catch (const InvalidFacet& e) {
                throw ValidationError(std::string("facet: ") + e.what());
            }
        }
    }
    s.trace_matched = j.value("trace_matched", true);
    s.gap_sign = j.value("gap_sign", 0);
    s.chi = j.value("chi", 1);
    if (j.contains("initial")) {
        if (!s.has_domain) throw ValidationError("initial requires a domain");
        s.initial = parse_profile(j["initial"], s.domain.inner, s.domain.outer);
        s.has_initial = true;
    }
    if (j.contains("rho0")) s.rho0 = j["rho0"].get<double>();

    const json jf = j.value("flow", json::object());
    s.flow.tau = jf.value("tau", 1.0);
    s.flow.eps = jf.value("eps", 0.0);
    s.flow.tol = jf.value("tol", 1e-9);
    s.flow.max_iter = jf.value("max_iter", 400000);
    s.flow.out_every = jf.value("out_every", 1);
    const bool needs_flow = s.mode == Mode::evolve_exact || s.mode == Mode::evolve_pde ||
                            s.mode == Mode::compare;
    if (needs_flow) {
        if (!jf.contains("dt")) throw ValidationError("flow.dt required");
        if (!jf.contains("T")) throw ValidationError("flow.T required");
        s.flow.dt = jf["dt"].get<double>();
        s.flow.T = jf["T"].get<double>();
        try {
            validate_config(s.flow);
        } catch (const ConfigError& e) {
            throw ValidationError(e.what());
        }
        if (!s.has_domain) throw ValidationError("domain required");
        if (!s.has_initial) throw ValidationError("initial required");
    } else {
        s.flow.dt = jf.value("dt", 1e-3);
        s.flow.T = jf.value("T", 0.1);
    }
    if (s.mode == Mode::classify && (!s.has_domain || !s.has_facet))
        throw ValidationError("classify needs domain and facet");
    if (s.mode == Mode::onset && !s.has_domain) throw ValidationError("onset needs domain");

    if (s.mode == Mode::sweep) {
        const json js = j.value("sweep", json::object());
        s.sweep.r0 = js.contains("r0") ? parse_axis(js["r0"], "sweep.r0")
                                       : AxisSpec{0.06, 2.94, 50};
        s.sweep.rho = js.contains("rho") ? parse_axis(js["rho"], "sweep.rho")
                                         : AxisSpec{0.0, 1.0, 50};  // offsets above r0
        if (js.contains("tau")) s.sweep.tau = js["tau"].get<std::vector<double>>();
        s.sweep.R = js.value("R", 4.0);
        s.sweep.chi = js.value("chi", 1);
    }
    s.event_gap_tol = j.value("event_gap_tol", 1e-4);

    if (j.contains("outputs")) {
        const json& jo = j["outputs"];
        s.out_trajectory = jo.value("trajectory_csv", s.out_trajectory);
        s.out_report = jo.value("report_json", s.out_report);
        s.out_metadata = jo.value("metadata_json", s.out_metadata);
    }

    // echo with defaults filled
    json echo = j;
    echo["mode"] = to_string(s.mode);
    if (s.has_domain) echo["domain"] = domain_echo(s.domain);
    echo["flow"] = flow_echo(s.flow);
    s.echo = echo;
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario parse error: ") + e.what());
    }
    return parse_scenario(j);
}

json report_to_json(const FacetReport& rep) {
    json j;
    j["lambda"] = rep.lambda;
    if (rep.has_mu()) j["mu"] = rep.mu;
    else j["mu"] = nullptr;
    j["calibrable"] = rep.calibrable;
    j["coherent"] = rep.coherent;
    j["detached"] = rep.detached;
    j["case"] = to_string(rep.tag);
    json w;
    w["dim"] = rep.witness.dim;
    w["r_in"] = rep.witness.r_in;
    w["r_out"] = rep.witness.r_out;
    if (rep.witness.closed_form) {
        w["lambda"] = rep.witness.lambda;
        w["c"] = rep.witness.c;
    }
    j["witness"] = w;
    return j;
}

json events_to_json(const std::vector<TrajectoryEvent>& events) {
    json arr = json::array();
    for (const auto& e : events) arr.push_back(json{{"t", e.t}, {"kind", e.kind}});
    return arr;
}

void validate_report_json(const json& j) {
    auto need = [&](const char* key) {
        if (!j.contains(key)) throw ValidationError(std::string("report missing field: ") + key);
    };
    need("mode");
    need("reports");
    need("events");
    if (!j["reports"].is_array()) throw ValidationError("report.reports must be an array");
    for (const auto& r : j["reports"]) {
        for (const char* key : {"lambda", "mu", "calibrable", "coherent", "detached", "case"})
            if (!r.contains(key))
                throw ValidationError(std::string("facet report missing field: ") + key);
    }
    if (!j["events"].is_array()) throw ValidationError("report.events must be an array");
}

void write_trajectory_csv(const Trajectory& tr, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    const int ng = tr.gap.empty() ? 0 : static_cast<int>(tr.gap[0].size());
    out << "t,edge_a,edge_b,h_l,h_r";
    for (int g = 0; g < ng; ++g) out << ",gap_" << g;
    out << ",energy\n";
    for (size_t k = 0; k < tr.size(); ++k) {
        out << format_g17(tr.t[k]) << ',' << format_g17(tr.edge_a[k]) << ','
            << format_g17(tr.edge_b[k]) << ',' << format_g17(tr.h_l[k]) << ','
            << format_g17(tr.h_r[k]);
        for (int g = 0; g < ng; ++g) out << ',' << format_g17(tr.gap[k][g]);
        out << ',' << format_g17(tr.energy[k]) << '\n';
    }
}

namespace {

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

State initial_state(const Scenario& s) {
    State st;
    st.u.resize(s.domain.n);
    for (int i = 0; i < s.domain.n; ++i) st.u[i] = s.initial(s.domain.nodes[i]);
    st.v.resize(s.domain.gamma_nodes.size());
    for (int j = 0; j < static_cast<int>(s.domain.gamma_nodes.size()); ++j)
        st.v[j] = st.u[s.domain.gamma_nodes[static_cast<size_t>(j)]];
    return st;
}

Trajectory run_exact(const Scenario& s) {
    switch (s.domain.kind) {
        case DomainKind::interval:
            return evolve_1d(s.initial, s.domain, s.flow.tau, s.flow.dt, s.flow.T);
        case DomainKind::ball: {
            if (!std::isfinite(s.rho0))
                throw ValidationError("rho0 (rim facet edge) required for ball evolve_exact");
            return evolve_ball(s.domain, s.rho0, s.initial, s.flow.dt, s.flow.T, s.flow.tau);
        }
        case DomainKind::annulus: {
            // default: onset probe at the inner circle
            const double r = std::isfinite(s.rho0) ? s.rho0 : s.domain.inner;
            return evolve_annulus(s.domain, r, s.initial, s.flow.dt, s.flow.T, s.flow.tau);
        }
    }
    throw InvalidParam("unknown domain kind");
}

json sweep_cell(double r0, double rho, double tau, double R, int chi) {
    json row;
    row["r0"] = r0;
    row["rho"] = rho;
    row["tau"] = tau;
    DomainSpec dom = make_annulus(r0, std::max(R, rho * 1.5), 16, GammaSelect::inner);
    FacetReport rep = classify_facet(dom, FacetSpec{r0, rho, chi}, tau);
    row["case"] = to_string(rep.tag);
    row["lambda"] = rep.lambda;
    row["mu"] = rep.has_mu() ? json(rep.mu) : json(nullptr);
    return row;
}

int sweep_threads() {
    if (const char* env = std::getenv("FACETFLOW_THREADS")) {
        const int k = std::atoi(env);
        if (k >= 1) return k;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace

int run_scenario(const Scenario& s, const std::string& out_dir, unsigned seed, bool quiet) {
    const auto t_start = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);
    const std::string traj_path = (fs::path(out_dir) / s.out_trajectory).string();
    const std::string report_path = (fs::path(out_dir) / s.out_report).string();
    const std::string meta_path = (fs::path(out_dir) / s.out_metadata).string();

    json report;
    report["mode"] = to_string(s.mode);
    report["reports"] = json::array();
    report["events"] = json::array();
    int exit_code = 0;

    try {
        switch (s.mode) {
            case Mode::classify: {
                const FacetReport rep = classify_facet(s.domain, s.facet, s.flow.tau,
                                                       s.trace_matched, s.gap_sign);
                report["reports"].push_back(report_to_json(rep));
                auto [lhs, rhs] = balance_identity(rep.witness, s.facet, s.domain);
                report["balance"] = json{{"lhs", lhs}, {"rhs", rhs}};
                if (!s.facet.onset())
                    report["i_tau"] = i_tau(rep.witness, s.facet, s.domain, s.flow.tau);
                break;
            }
            case Mode::onset: {
                const FacetReport rep = boundary_onset(s.domain, s.chi, s.flow.tau);
                report["reports"].push_back(report_to_json(rep));
                break;
            }
            case Mode::evolve_exact: {
                Trajectory tr = run_exact(s);
                write_trajectory_csv(tr, traj_path);
                report["events"] = events_to_json(tr.events);
                report["metadata"] = tr.metadata;
                for (size_t k = 1; k < tr.size(); ++k)
                    if (tr.energy[k] > tr.energy[k - 1] + 1e-9 * std::max(1.0, tr.energy[0]))
                        exit_code = 2;
                break;
            }
            case Mode::evolve_pde: {
                const State st = initial_state(s);
                FlowRun run = run_flow(st, s.flow, s.domain);
                write_trajectory_csv(run.traj, traj_path);
                run.traj.events = detect_events(run.traj, s.event_gap_tol, 1.5 * s.domain.h);
                report["events"] = events_to_json(run.traj.events);
                report["diagnostics"] =
                    json{{"inner_iterations", run.total_inner_iterations},
                         {"energy_violations", run.energy_violations},
                         {"max_energy_identity_defect", run.max_energy_identity_defect},
                         {"max_duality_gap", run.max_gap}};
                if (run.energy_violations > 0) exit_code = 2;
                break;
            }
            case Mode::compare: {
                const State st = initial_state(s);
                FlowRun run = run_flow(st, s.flow, s.domain);
                Scenario se = s;
                se.flow.out_every = s.flow.out_every;
                Trajectory ex = run_exact(se);
                const CompareReport cr = compare_exact(run.traj, ex, s.domain);

                std::ofstream out(traj_path);
                if (!out) throw Error("cannot write " + traj_path);
                out << "t,a,b,h_l,h_r,Linf_err\n";
                for (size_t k = 0; k < run.traj.size(); ++k)
                    out << format_g17(run.traj.t[k]) << ',' << format_g17(run.traj.edge_a[k])
                        << ',' << format_g17(run.traj.edge_b[k]) << ','
                        << format_g17(run.traj.h_l[k]) << ',' << format_g17(run.traj.h_r[k])
                        << ',' << format_g17(cr.linf_per_time[k]) << '\n';
                report["errors"] = json{{"linf_u", cr.linf_u},
                                        {"l2_u", cr.l2_u},
                                        {"edge_a", cr.edge_a_err},
                                        {"edge_b", cr.edge_b_err},
                                        {"gap", cr.gap_err}};
                if (run.energy_violations > 0) exit_code = 2;
                break;
            }
            case Mode::sweep: {
                std::vector<std::array<double, 3>> cells;
                for (int a = 0; a < s.sweep.r0.count; ++a)
                    for (int b = 0; b < s.sweep.rho.count; ++b)
                        for (double tau : s.sweep.tau) {
                            const double r0 =
                                s.sweep.r0.min +
                                (s.sweep.r0.max - s.sweep.r0.min) *
                                    (s.sweep.r0.count > 1 ? double(a) / (s.sweep.r0.count - 1)
                                                          : 0.0);
                            const double off =
                                s.sweep.rho.min +
                                (s.sweep.rho.max - s.sweep.rho.min) *
                                    (s.sweep.rho.count > 1 ? double(b) / (s.sweep.rho.count - 1)
                                                           : 0.0);
                            cells.push_back({r0, r0 + std::max(off, 1e-6), tau});
                        }
                std::vector<json> rows(cells.size());
                std::atomic<size_t> next{0};
                const int nthreads = sweep_threads();
                auto worker = [&]() {
                    for (size_t k = next.fetch_add(1); k < cells.size(); k = next.fetch_add(1))
                        rows[k] = sweep_cell(cells[k][0], cells[k][1], cells[k][2], s.sweep.R,
                                             s.sweep.chi);
                };
                std::vector<std::thread> pool;
                for (int k = 1; k < nthreads; ++k) pool.emplace_back(worker);
                worker();
                for (auto& th : pool) th.join();

                std::ofstream out(traj_path);
                if (!out) throw Error("cannot write " + traj_path);
                out << "r0,rho,tau,case,lambda,mu\n";
                for (const auto& row : rows) {
                    out << format_g17(row["r0"].get<double>()) << ','
                        << format_g17(row["rho"].get<double>()) << ','
                        << format_g17(row["tau"].get<double>()) << ','
                        << row["case"].get<std::string>() << ','
                        << format_g17(row["lambda"].get<double>()) << ','
                        << (row["mu"].is_null() ? std::string("nan")
                                                : format_g17(row["mu"].get<double>()))
                        << '\n';
                }
                report["cells"] = static_cast<int>(rows.size());
                break;
            }
            case Mode::selftest: {
                const int failures = acceptance::run_all(quiet ? std::cerr : std::cout, seed);
                report["failures"] = failures;
                if (failures > 0) exit_code = 2;
                break;
            }
        }
    } catch (const Error& e) {
        if (!quiet) std::cerr << "error: " << e.what() << '\n';
        report["error"] = e.what();
        write_json_file(report, report_path);
        return 1;
    }

    write_json_file(report, report_path);
    const auto wall =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                              t_start);
    json meta;
    meta["config"] = s.echo;
    meta["version"] = "facetflow 0.1.0";
    meta["wall_ms"] = wall.count();
    meta["seed"] = seed;
    write_json_file(meta, meta_path);
    if (!quiet) std::cout << "wrote " << report_path << " (exit " << exit_code << ")\n";
    return exit_code;
}

} // namespace facetflow
