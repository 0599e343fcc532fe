#include "commands.hpp"

#include "svg.hpp"

#include "hjlab/bernstein.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace hjcli {

using hjlab::DomainKind;
using hjlab::Grid;
using hjlab::ScalarField;
using json = nlohmann::ordered_json;

namespace {

/// Accumulates results and failed checks for one run.
struct Run {
    const RunConfig& cfg;
    std::string out_dir;
    json results = json::object();
    json failures = json::array();
    json gates = json::object();

    void fail(const std::string& check, const std::string& detail) {
        failures.push_back({{"check", check}, {"detail", detail}});
    }
    void require(bool ok, const std::string& check, const std::string& detail) {
        if (!ok) {
            fail(check, detail);
        }
    }
    [[nodiscard]] std::string path(const std::string& name) const {
        return (std::filesystem::path(out_dir) / name).string();
    }
};

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

json function_json(const FunctionSpec& f) {
    return {{"family", f.family}, {"amplitude", f.amplitude}, {"axis", f.axis}, {"mode", f.mode}};
}

json gate_json(const hjlab::GateConstants& g, std::optional<double> K, std::optional<double> cv) {
    json j;
    j["kappa"] = g.kappa;
    j["rho"] = g.rho;
    j["sigma_hat"] = g.sigma_hat;
    j["theta"] = g.theta;
    j["s"] = g.s;
    j["K"] = K ? json(*K) : json(nullptr);
    j["C_V"] = cv ? json(*cv) : json(nullptr);
    return j;
}

hjlab::VectorField sample_drift(const Grid& grid, const RunConfig& cfg) {
    const auto fn = make_drift(cfg.problem.drift, cfg.domain);
    if (!fn) {
        return {};
    }
    hjlab::VectorField out{Eigen::MatrixXd(grid.size(), grid.dim)};
    for (hjlab::Index k = 0; k < grid.size(); ++k) {
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        x.head(grid.dim) = grid.coords.row(k).transpose();
        out.data.row(k) = fn(x).head(grid.dim).transpose();
    }
    return out;
}

hjlab::GateConstants base_gates(const RunConfig& cfg) {
    const Grid grid = hjlab::build_grid(cfg.domain, make_metric(cfg));
    return hjlab::estimate_gate_constants(cfg.domain, make_metric(cfg), sample_drift(grid, cfg),
                                          cfg.problem.drift.exponent, true, cfg.seed);
}

hjlab::SolverConfig solver_config(const RunConfig& cfg) {
    hjlab::SolverConfig s = cfg.solver;
    s.norms.r = {2.0, cfg.experiment.r, hjlab::lq_infinity};
    s.norms.q = {cfg.experiment.q};
    return s;
}

json solve_json(const hjlab::SolveReport& r, bool ergodic) {
    json j;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["residual_norm"] = r.residual_norm;
    if (ergodic) {
        j["lambda"] = r.lambda;
    } else {
        j["compatibility_shift"] = r.compatibility_shift;
    }
    j["used_picard"] = r.used_picard;
    j["eps_reg"] = r.eps_reg;
    j["residual_history"] = r.residual_history;
    json norms = json::array();
    for (const auto& n : r.norms) {
        norms.push_back({{"quantity", n.quantity}, {"exponent", n.exponent}, {"value", n.value}});
    }
    j["norms"] = norms;
    j["message"] = r.message;
    return j;
}

void write_norm_csv(const std::string& path, const std::vector<hjlab::NormRow>& rows) {
    std::ofstream os(path);
    os.precision(17);
    os << "quantity,exponent,value\n";
    for (const auto& n : rows) {
        os << n.quantity << ',' << n.exponent << ',' << n.value << '\n';
    }
}

// ---------------------------------------------------------------- solve / ergodic

struct Manufactured {
    ScalarField exact;
    ScalarField source;
};

/// u* = A prod_a cos(pi k x_a / L_a) and the source making it an exact solution of
/// -Lap u + (c1/gamma)|grad u|^gamma = f.
Manufactured manufactured_case(const Grid& grid, const RunConfig& cfg) {
    constexpr double pi = std::numbers::pi;
    const auto& f = cfg.problem.f;
    const int d = grid.dim;
    Manufactured m{ScalarField(grid.size()), ScalarField(grid.size())};
    for (hjlab::Index k = 0; k < grid.size(); ++k) {
        std::array<double, 3> c{1, 1, 1};
        std::array<double, 3> s{0, 0, 0};
        std::array<double, 3> w{0, 0, 0};
        for (int a = 0; a < d; ++a) {
            w[a] = pi * f.mode / cfg.domain.extents[a];
            c[a] = std::cos(w[a] * grid.coords(k, a));
            s[a] = std::sin(w[a] * grid.coords(k, a));
        }
        double u = f.amplitude;
        for (int a = 0; a < d; ++a) {
            u *= c[a];
        }
        double lap = 0.0;
        double grad2 = 0.0;
        for (int a = 0; a < d; ++a) {
            lap -= w[a] * w[a] * u;
            double g = -f.amplitude * w[a] * s[a];
            for (int b = 0; b < d; ++b) {
                if (b != a) {
                    g *= c[b];
                }
            }
            grad2 += g * g;
        }
        m.exact[k] = u;
        m.source[k] = -lap + cfg.problem.c1 / cfg.problem.gamma *
                                 std::pow(grad2, 0.5 * cfg.problem.gamma);
    }
    return m;
}

void manufactured_study(Run& run) {
    const RunConfig& cfg = run.cfg;
    std::vector<int> nodes = cfg.experiment.resolutions;
    if (nodes.empty()) {
        nodes = {17, 33, 65};
    }
    json rows = json::array();
    std::vector<double> hs;
    std::vector<double> errs;
    std::ofstream csv(run.path("convergence.csv"));
    csv.precision(17);
    csv << "nodes,h,error_inf,order,iterations,residual\n";
    double last_order = 0.0;
    for (int n : nodes) {
        hjlab::DomainSpec ds = cfg.domain;
        ds.resolution = {n, n, n};
        auto grid = std::make_shared<const Grid>(hjlab::build_grid(ds));
        const Manufactured mc = manufactured_case(*grid, cfg);
        hjlab::ProblemSpec ps;
        ps.grid = grid;
        ps.gamma = cfg.problem.gamma;
        ps.c1 = cfg.problem.c1;
        ps.source_f = mc.source;
        const hjlab::SolveReport r = hjlab::solve(ps, solver_config(cfg));
        const ScalarField exact =
            mc.exact.array() - grid->weights.dot(mc.exact) / grid->volume();
        const double err = (r.u - exact).cwiseAbs().maxCoeff();
        double order = 0.0;
        if (!errs.empty()) {
            order = std::log(errs.back() / err) / std::log(hs.back() / grid->h[0]);
            last_order = order;
        }
        hs.push_back(grid->h[0]);
        errs.push_back(err);
        csv << n << ',' << grid->h[0] << ',' << err << ',' << order << ',' << r.iterations << ','
            << r.residual_norm << '\n';
        rows.push_back({{"nodes", n},
                        {"h", grid->h[0]},
                        {"error_inf", err},
                        {"order", order},
                        {"iterations", r.iterations},
                        {"residual_norm", r.residual_norm},
                        {"converged", r.converged}});
        run.require(r.converged, "solve.converged", "manufactured solve at n = " +
                                                        std::to_string(n) + ": " + r.message);
    }
    run.results["manufactured"] = rows;
    run.results["observed_order"] = last_order;
    if (nodes.size() >= 2) {
        run.require(last_order >= 1.9, "solve.order",
                    "observed L-infinity order " + num(last_order) + " below 1.9");
    }
    write_loglog_svg(run.path("convergence.svg"), "manufactured solution", "h", "max error",
                     {{"error", hs, errs}});
}

void cmd_solve(Run& run, bool ergodic) {
    const RunConfig& cfg = run.cfg;
    const auto base = base_gates(cfg);
    if (!ergodic && cfg.problem.f.family == "manufactured") {
        manufactured_study(run);
        run.gates = gate_json(base, std::nullopt, std::nullopt);
        return;
    }
    auto grid = std::make_shared<const Grid>(hjlab::build_grid(cfg.domain, make_metric(cfg)));
    hjlab::ProblemSpec ps;
    ps.grid = grid;
    ps.gamma = cfg.problem.gamma;
    ps.c1 = cfg.problem.c1;
    ps.drift = sample_drift(*grid, cfg);
    ps.ergodic = ergodic;
    ScalarField f = hjlab::sample(*grid, make_function(cfg.problem.f, cfg.domain));
    if (cfg.problem.f.family != "zero") {
        ps.source_f = f;
    }
    if (cfg.problem.b.family != "zero") {
        ps.shift_b = hjlab::sample(*grid, make_function(cfg.problem.b, cfg.domain));
    }
    const hjlab::SolveReport r = ergodic ? hjlab::solve_ergodic(ps, solver_config(cfg))
                                         : hjlab::solve(ps, solver_config(cfg));
    run.results["solve"] = solve_json(r, ergodic);
    run.require(r.converged, ergodic ? "ergodic.converged" : "solve.converged", r.message);
    write_norm_csv(run.path("norms.csv"), r.norms);
    hjlab::write_field_csv(*grid, run.path("fields.csv"), {"u"}, r.u);
    const double K = hjlab::lq_norm(*grid, f, cfg.experiment.q).value +
                     hjlab::lq_norm(*grid, hjlab::gradient(*grid, r.u), 1.0).value;
    run.gates = gate_json(base, K, std::nullopt);
}

// ---------------------------------------------------------------- bochner-check

bool neumann_family(const RunConfig& cfg) {
    const auto& fam = cfg.experiment.u.family;
    if (cfg.domain.kind == DomainKind::box) {
        return fam == "cos_product" || fam == "zero" || fam == "const";
    }
    return fam == "polar_cubic" || fam == "zero" || fam == "const";
}

json study_json(const hjlab::RefinementStudy& s) {
    return {{"resolution", s.resolution},
            {"spacing", s.spacing},
            {"max_residual", s.max_residual},
            {"order", s.order}};
}

void cmd_bochner(Run& run) {
    const RunConfig& cfg = run.cfg;
    const auto metric = make_metric(cfg);
    const auto u_fn = make_function(cfg.experiment.u, cfg.domain);
    const double delta = cfg.experiment.delta;
    run.results["u"] = function_json(cfg.experiment.u);

    if (cfg.domain.kind == DomainKind::torus || cfg.domain.kind == DomainKind::conformal_torus) {
        std::vector<int> nodes = cfg.experiment.resolutions;
        if (nodes.empty()) {
            nodes = {32, 64, 128};
        }
        std::vector<hjlab::DomainSpec> specs;
        for (int n : nodes) {
            hjlab::DomainSpec ds = cfg.domain;
            ds.resolution = {n, n, n};
            specs.push_back(ds);
        }
        const auto plain = hjlab::bochner_refinement(specs, metric, u_fn);
        const auto weighted = hjlab::bochner_refinement(specs, metric, u_fn, delta);
        run.results["bochner"] = study_json(plain);
        run.results["weighted_bochner"] = study_json(weighted);
        const double threshold = metric.kind == hjlab::MetricKind::euclidean ? 1.5 : 0.9;
        run.results["order_threshold"] = threshold;
        for (const auto* s : {&plain, &weighted}) {
            const char* name = s == &plain ? "bochner.order" : "weighted_bochner.order";
            if (s->max_residual.back() <= 1e-10) {
                continue;  // exact for this u; no order to fit
            }
            run.require(s->order >= threshold, name,
                        "refinement order " + num(s->order) + " below " + num(threshold));
        }
        std::ofstream csv(run.path("bochner_refinement.csv"));
        csv.precision(17);
        csv << "nodes,h,bochner_residual,weighted_residual\n";
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            csv << nodes[i] << ',' << plain.spacing[i] << ',' << plain.max_residual[i] << ','
                << weighted.max_residual[i] << '\n';
        }
        write_loglog_svg(run.path("bochner_refinement.svg"), "Bochner residual", "h",
                         "max residual",
                         {{"plain", plain.spacing, plain.max_residual},
                          {"weighted", weighted.spacing, weighted.max_residual}});
        return;
    }

    const Grid grid = hjlab::build_grid(cfg.domain, metric);
    const ScalarField u = hjlab::sample(grid, u_fn);
    if (cfg.domain.kind == DomainKind::box) {
        const ScalarField r1 = hjlab::bochner_residual(grid, u);
        const ScalarField r2 = hjlab::weighted_bochner_residual(grid, u, delta);
        double m1 = 0.0;
        double m2 = 0.0;
        for (hjlab::Index k = 0; k < grid.size(); ++k) {
            if (!grid.boundary[k]) {
                m1 = std::max(m1, std::abs(r1[k]));
                m2 = std::max(m2, std::abs(r2[k]));
            }
        }
        run.results["interior_bochner_residual"] = m1;
        run.results["interior_weighted_residual"] = m2;
        const auto& fam = cfg.experiment.u.family;
        if (fam == "linear" || fam == "quadratic") {
            const double scale = std::max(1.0, std::pow(cfg.experiment.u.amplitude, 2));
            run.require(m1 <= 1e-12 * scale, "bochner.exact",
                        "polynomial residual " + num(m1) + " above 1e-12");
            run.require(m2 <= 1e-12 * scale, "weighted_bochner.exact",
                        "polynomial residual " + num(m2) + " above 1e-12");
        }
    }

    const auto sign = hjlab::boundary_sign_check(grid, u);
    const double h = cfg.domain.kind == DomainKind::disc
                         ? grid.h[0]
                         : *std::max_element(grid.h.begin(), grid.h.begin() + grid.dim);
    const bool neumann = neumann_family(cfg);
    json sj;
    sj["nodes"] = sign.nodes.size();
    sj["max_normal_derivative"] = sign.max_normal_derivative;
    sj["max_discrepancy"] = sign.max_discrepancy;
    sj["flagged"] = sign.flagged;
    sj["spacing"] = h;
    sj["neumann_compatible"] = neumann;
    run.results["boundary_sign"] = sj;
    if (neumann) {
        run.require(sign.max_normal_derivative <= 5.0 * h * h, "boundary_sign",
                    "max normal derivative of |grad u|^2/2 is " +
                        num(sign.max_normal_derivative) + " > 5 h^2");
    }
    std::ofstream csv(run.path("boundary_sign.csv"));
    csv.precision(17);
    csv << "node,x1,x2" << (grid.dim == 3 ? ",x3" : "") << ",normal_derivative_w,minus_II\n";
    for (std::size_t i = 0; i < sign.nodes.size(); ++i) {
        const auto k = sign.nodes[i];
        csv << k;
        for (int a = 0; a < grid.coords.cols(); ++a) {
            csv << ',' << grid.coords(k, a);
        }
        csv << ',' << sign.normal_derivative_w[i] << ',' << sign.minus_curvature_term[i] << '\n';
    }
}

// ---------------------------------------------------------------- bernstein-audit

json checks_json(const std::vector<hjlab::IdentityCheck>& checks) {
    json arr = json::array();
    for (const auto& c : checks) {
        arr.push_back({{"name", c.name},
                       {"samples", c.samples},
                       {"violations", c.violations},
                       {"max_violation", c.max_violation},
                       {"passed", c.passed()}});
    }
    return arr;
}

void cmd_audit(Run& run) {
    const RunConfig& cfg = run.cfg;
    const double delta = cfg.experiment.delta;
    const double gamma = cfg.problem.gamma;
    const int d_audit = std::max(cfg.domain.dim, 3);

    const auto toolkit = hjlab::h_toolkit(delta);
    run.results["h_toolkit"] = {{"delta", delta}, {"checks", checks_json(toolkit.checks)}};
    for (const auto& c : toolkit.checks) {
        run.require(c.passed(), "h_toolkit." + c.name,
                    std::to_string(c.violations) + " violations, max " + num(c.max_violation));
    }

    const auto suite = hjlab::pointwise_inequality_suite(cfg.seed, cfg.experiment.samples);
    run.results["inequalities"] = {{"slack", suite.slack}, {"checks", checks_json(suite.checks)}};
    for (const auto& c : suite.checks) {
        run.require(c.passed(), "inequality." + c.name,
                    std::to_string(c.violations) + " violations, max " + num(c.max_violation));
    }

    const auto params = hjlab::maxreg_params(d_audit, gamma, cfg.experiment.q, delta);
    run.results["maxreg"] = {{"d", params.d},         {"gamma", params.gamma},
                             {"q", params.q},         {"delta", params.delta},
                             {"p_formula", params.p_formula}, {"p", params.p},
                             {"substituted", params.substituted}, {"beta", params.beta},
                             {"eta", params.eta},     {"Phi", params.Phi},
                             {"c_gamma", params.c_gamma}};

    // continuity-argument functions across dimensions
    json table = json::array();
    for (int d = 3; d <= 10; ++d) {
        const double q_min = std::max(d * (gamma - 1.0) / gamma, 2.0);
        const double q = std::max(cfg.experiment.q, q_min + 1.0);
        const auto ct = hjlab::continuity_tools(d, q, gamma, delta, cfg.experiment.C);
        const double y_closed = std::pow((d - 2.0) / d, 0.5 * d);
        const double phi_closed = 2.0 / d * std::pow((d - 2.0) / d, 0.5 * (d - 2));
        const double zbar = 0.5 * ct.phi_star;
        const auto [ylo, yhi] = ct.roots(zbar);
        const double root_err = std::max(std::abs(ct.phi(ylo) - zbar), std::abs(ct.phi(yhi) - zbar));
        json row = {{"d", d},
                    {"q", q},
                    {"y_star", ct.y_star},
                    {"phi_star", ct.phi_star},
                    {"y_star_error", std::abs(ct.y_star - y_closed)},
                    {"phi_star_error", std::abs(ct.phi_star - phi_closed)},
                    {"root_level", zbar},
                    {"roots", {ylo, yhi}},
                    {"root_error", root_err},
                    {"t_star", ct.t_star ? json(*ct.t_star) : json(nullptr)}};
        table.push_back(row);
        run.require(std::abs(ct.y_star - y_closed) <= 1e-12, "continuity.y_star",
                    "d = " + std::to_string(d));
        run.require(std::abs(ct.phi_star - phi_closed) <= 1e-12, "continuity.phi_star",
                    "d = " + std::to_string(d));
        run.require(root_err <= 1e-12, "continuity.roots", "d = " + std::to_string(d));
    }
    run.results["continuity"] = table;

    // exponent bookkeeping on random admissible parameter sets: q in the gate range and the
    // interpolation exponent p above 2, drawn by rejection
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst_bo1 = 0.0;
    double worst_bo2 = 0.0;
    long rejected = 0;
    for (int accepted = 0; accepted < cfg.experiment.parameter_sets;) {
        const int d = 3 + static_cast<int>(unit(rng) * 8.0);
        const double g = 1.05 + 3.95 * unit(rng);
        const double dl = 0.02 + 0.96 * unit(rng);
        const double qlo = std::max(d * (g - 1.0) / g, 2.0);
        const double q = qlo + 0.01 + 8.0 * unit(rng);
        const auto mp = hjlab::maxreg_params(std::min(d, 10), g, q, dl);
        if (mp.substituted) {
            ++rejected;
            continue;
        }
        ++accepted;
        worst_bo1 = std::max(worst_bo1, std::abs(mp.bo1_residual) / std::max(1.0, mp.eta));
        worst_bo2 = std::max(worst_bo2, std::abs(mp.bo2_residual) / std::max(1.0, q * g));
    }
    run.results["exponent_identities"] = {{"sets", cfg.experiment.parameter_sets},
                                          {"rejected", rejected},
                                          {"max_bo1_residual", worst_bo1},
                                          {"max_bo2_residual", worst_bo2}};
    run.require(worst_bo1 <= 1e-12, "exponents.bo1", "residual " + num(worst_bo1));
    run.require(worst_bo2 <= 1e-12, "exponents.bo2", "residual " + num(worst_bo2));

    // Chebyshev bound on super-level sets of z = h(w) for random smooth fields
    hjlab::DomainSpec ds;
    ds.kind = DomainKind::torus;
    ds.dim = 3;
    ds.resolution = {16, 16, 16};
    const Grid grid = hjlab::build_grid(ds);
    const hjlab::HFunction hf = hjlab::HFunction::make(delta);
    std::mt19937_64 field_rng(cfg.seed + 1);
    long checked = 0;
    long violated = 0;
    for (int f = 0; f < cfg.experiment.level_fields; ++f) {
        const ScalarField u = 2.0 * hjlab::random_band_limited(grid, field_rng);
        const auto st = hjlab::bernstein_state(grid, u, hf);
        const double zmax = st.z.maxCoeff();
        for (int j = 1; j <= cfg.experiment.level_thresholds; ++j) {
            const double k = zmax * j / (cfg.experiment.level_thresholds + 1.0);
            const auto ls = hjlab::level_sets(grid, st.z, k, params);
            ++checked;
            if (!ls.chebyshev_holds) {
                ++violated;
            }
        }
    }
    run.results["chebyshev"] = {{"checked", checked}, {"violations", violated}};
    run.require(violated == 0, "chebyshev", std::to_string(violated) + " thresholds violated");
}

// ---------------------------------------------------------------- sweeps

void cmd_sweep(Run& run, bool second) {
    const RunConfig& cfg = run.cfg;
    hjlab::SweepSpec spec;
    spec.domain = cfg.domain;
    spec.metric = make_metric(cfg);
    spec.gamma = cfg.problem.gamma;
    spec.f0 = make_function(cfg.problem.f, cfg.domain);
    spec.f0_name = cfg.problem.f.family;
    spec.drift = make_drift(cfg.problem.drift, cfg.domain);
    spec.drift_exponent = cfg.problem.drift.exponent;
    spec.amplitudes = cfg.experiment.amplitudes;
    spec.r = cfg.experiment.r;
    spec.q = cfg.experiment.q;
    spec.delta = cfg.experiment.delta;
    spec.solver = cfg.solver;
    spec.seed = cfg.seed;
    const auto rep = second ? hjlab::thm2_sweep(spec) : hjlab::thm1_sweep(spec);

    json rows = json::array();
    std::vector<double> ts;
    std::vector<double> ratios;
    std::ofstream csv(run.path("sweep.csv"));
    csv.precision(17);
    csv << "t,ratio,numerator,f_norm,grad_l1,lambda,iterations,continuation_steps,converged\n";
    for (const auto& r : rep.rows) {
        rows.push_back({{"t", r.t},
                        {"ratio", r.ratio},
                        {"numerator", r.numerator},
                        {"f_norm", r.f_norm},
                        {"grad_l1", r.grad_l1},
                        {"lambda", r.lambda},
                        {"iterations", r.iterations},
                        {"continuation_steps", r.continuation_steps},
                        {"converged", r.converged}});
        csv << r.t << ',' << r.ratio << ',' << r.numerator << ',' << r.f_norm << ',' << r.grad_l1
            << ',' << r.lambda << ',' << r.iterations << ',' << r.continuation_steps << ','
            << r.converged << '\n';
        ts.push_back(r.t);
        ratios.push_back(r.ratio);
    }
    run.results["kind"] = rep.kind;
    run.results["exponents"] = {{"r", cfg.experiment.r}, {"q", cfg.experiment.q}};
    run.results["rows"] = rows;
    run.results["slope"] = rep.slope;
    run.results["fit_range"] = {rep.fit_lo, rep.fit_hi};
    run.results["max_ratio"] = rep.max_ratio;
    run.results["ratio_at_one"] = rep.ratio_at_one ? json(*rep.ratio_at_one) : json(nullptr);
    run.results["complete"] = rep.complete;
    run.results["message"] = rep.message;
    if (rep.maxreg) {
        run.results["maxreg"] = {{"p", rep.maxreg->p},
                                 {"substituted", rep.maxreg->substituted},
                                 {"beta", rep.maxreg->beta},
                                 {"eta", rep.maxreg->eta},
                                 {"Phi", rep.maxreg->Phi}};
    }
    run.require(rep.complete, "sweep.complete", rep.message);
    run.require(rep.slope <= 0.05, "sweep.slope",
                "top-decade log-log slope " + num(rep.slope) + " above 0.05");
    write_loglog_svg(run.path("sweep.svg"), second ? "maximal regularity ratio" : "gradient ratio",
                     "t", "ratio", {{rep.kind, ts, ratios}});
    run.gates = gate_json(rep.gates, rep.gates.K, std::nullopt);
}

// ---------------------------------------------------------------- constants

void cmd_constants(Run& run) {
    const RunConfig& cfg = run.cfg;
    const auto metric = make_metric(cfg);
    const auto base = base_gates(cfg);
    run.gates = gate_json(base, std::nullopt, std::nullopt);

    const Grid grid = hjlab::build_grid(cfg.domain, metric);
    if (grid.dim >= 3) {
        hjlab::DomainSpec coarse = cfg.domain;
        for (int a = 0; a < grid.dim; ++a) {
            coarse.resolution[a] = std::min(coarse.resolution[a], 16);
        }
        auto cg = std::make_shared<const Grid>(hjlab::build_grid(coarse, metric));
        const auto sob = hjlab::sobolev_constant_estimate(cg, cfg.seed);
        json starts = json::array();
        for (const auto& s : sob.starts) {
            starts.push_back({{"initial", s.initial}, {"final", s.final}});
        }
        run.results["sobolev"] = {{"sigma_hat", sob.sigma_hat},
                                  {"exponent", sob.exponent},
                                  {"resolution", coarse.resolution},
                                  {"starts", starts}};
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<ScalarField> samples;
    for (int i = 0; i < cfg.experiment.cz_samples; ++i) {
        samples.push_back(hjlab::random_band_limited(grid, rng));
    }
    json cz = json::array();
    const bool flat_torus = grid.kind == DomainKind::torus && !grid.is_conformal();
    for (double p : cfg.experiment.cz_exponents) {
        const double ratio = hjlab::cz_ratio(grid, samples, p);
        cz.push_back({{"p", p}, {"max_ratio", ratio}});
        run.require(std::isfinite(ratio), "cz.finite", "p = " + num(p));
        if (p == 2.0 && flat_torus) {
            run.require(std::abs(ratio - 1.0) <= 1e-6, "cz.p2",
                        "ratio " + num(ratio) + " differs from 1 by more than 1e-6");
        }
    }
    run.results["calderon_zygmund"] = {{"samples", cfg.experiment.cz_samples}, {"ratios", cz}};

    json exps = json::array();
    for (double p : {1.0, 2.0, 4.0}) {
        const auto e = hjlab::thm1_exponents(std::max(grid.dim, 3), p);
        exps.push_back({{"p", p}, {"r", e.r}, {"beta_p", e.beta_p}, {"q", e.q}});
    }
    run.results["gradient_exponents"] = exps;
    run.results["c_gamma"] = hjlab::c_gamma(cfg.problem.gamma);
}

// ---------------------------------------------------------------- mfg

void cmd_mfg(Run& run) {
    const RunConfig& cfg = run.cfg;
    const hjlab::MfgSpec spec = make_mfg_spec(cfg);
    const auto res = hjlab::mfg_fixed_point(spec);
    const auto& rep = res.report;
    const Grid& grid = *res.grid;
    const auto base = base_gates(cfg);

    json hist = json::array();
    std::ofstream csv(run.path("history.csv"));
    csv.precision(17);
    csv << "iteration,mollifier_width,change,damping,mass,min_density,newton_iterations\n";
    for (std::size_t i = 0; i < rep.history.size(); ++i) {
        const auto& h = rep.history[i];
        hist.push_back({{"mollifier_width", h.mollifier_width},
                        {"change", h.change},
                        {"damping", h.damping},
                        {"mass", h.mass},
                        {"min_density", h.min_density},
                        {"newton_iterations", h.newton_iterations}});
        csv << i + 1 << ',' << h.mollifier_width << ',' << h.change << ',' << h.damping << ','
            << h.mass << ',' << h.min_density << ',' << h.newton_iterations << '\n';
    }
    run.results["converged"] = rep.converged;
    run.results["outer_iterations"] = rep.outer_iterations;
    run.results["final_change"] = rep.final_change;
    run.results["lambda"] = res.state.lambda;
    run.results["mass"] = hjlab::integrate(grid, res.state.m);
    run.results["max_mass_error"] = rep.max_mass_error;
    run.results["min_density"] = rep.min_density;
    run.results["message"] = rep.message;
    run.results["history"] = hist;
    run.results["exponent_gate"] = {{"d", rep.gate.d},
                                    {"gamma", rep.gate.gamma},
                                    {"alpha", rep.gate.alpha},
                                    {"gamma_conjugate", rep.gate.gamma_conjugate},
                                    {"gamma_threshold", rep.gate.gamma_threshold},
                                    {"alpha_threshold", rep.gate.alpha_threshold},
                                    {"gamma_ok", rep.gate.gamma_ok},
                                    {"alpha_ok", rep.gate.alpha_ok}};

    json table = json::array();
    for (int d = 3; d <= 6; ++d) {
        const auto g = hjlab::exponent_gate(d, cfg.problem.gamma, cfg.mfg.alpha);
        table.push_back({{"d", d},
                         {"gamma_threshold", g.gamma_threshold},
                         {"alpha_threshold", g.alpha_threshold},
                         {"passed", g.passed()}});
    }
    run.results["exponent_table"] = table;

    run.require(rep.converged, "mfg.converged", rep.message);
    run.require(rep.max_mass_error <= 1e-10, "mfg.mass",
                "mass error " + num(rep.max_mass_error) + " above 1e-10");
    run.require(rep.min_density > 0.0, "mfg.positivity", "min density " + num(rep.min_density));

    if (rep.converged) {
        const auto du = hjlab::duality_identity_residual(grid, res.state, spec);
        run.results["duality"] = {{"lhs", du.lhs},           {"rhs", du.rhs},
                                  {"residual", du.residual}, {"chain", du.chain},
                                  {"hess_b_sup", du.hess_b_sup}, {"margin", du.margin}};
        run.require(du.margin >= -1e-6, "mfg.duality_margin",
                    "chain value " + num(du.chain) + " exceeds sup|D^2 b| = " + num(du.hess_b_sup));
        if (grid.dim >= 3) {
            const auto lp = hjlab::lp_bound_check(grid, res.state, spec, base.sigma_hat);
            run.results["lp_bound"] = {{"exponent", lp.exponent},
                                       {"density_norm", lp.density_norm},
                                       {"energy", lp.energy},
                                       {"energy_bound", lp.energy_bound},
                                       {"hess_b_sup", lp.hess_b_sup},
                                       {"sobolev_constant", lp.sobolev_constant},
                                       {"satisfied", lp.satisfied}};
            run.require(lp.satisfied, "mfg.lp_bound",
                        "energy " + num(lp.energy) + " above " + num(lp.energy_bound));
        }
        Eigen::MatrixXd cols(grid.size(), 2);
        cols.col(0) = res.state.u;
        cols.col(1) = res.state.m;
        hjlab::write_field_csv(grid, run.path("fields.csv"), {"u", "m"}, cols);
    }
    run.gates = gate_json(base, std::nullopt, cfg.mfg.coupling_constant);
}

}  // namespace

json config_json(const RunConfig& cfg) {
    json j;
    const int d = cfg.domain.dim;
    j["domain"] = {{"kind", hjlab::to_string(cfg.domain.kind)},
                   {"dim", d},
                   {"extents", std::vector<double>(cfg.domain.extents.begin(),
                                                   cfg.domain.extents.begin() + d)},
                   {"resolution", std::vector<int>(cfg.domain.resolution.begin(),
                                                   cfg.domain.resolution.begin() + d)},
                   {"radius", cfg.domain.radius}};
    j["metric"] = {{"kind", cfg.metric.kind},
                   {"amplitude", cfg.metric.amplitude},
                   {"axis", cfg.metric.axis},
                   {"mode", cfg.metric.mode},
                   {"offset", cfg.metric.offset}};
    j["problem"] = {{"gamma", cfg.problem.gamma},
                    {"c1", cfg.problem.c1},
                    {"ergodic", cfg.problem.ergodic},
                    {"f", function_json(cfg.problem.f)},
                    {"b", function_json(cfg.problem.b)},
                    {"drift",
                     {{"family", cfg.problem.drift.family},
                      {"amplitude", cfg.problem.drift.amplitude},
                      {"axis", cfg.problem.drift.axis},
                      {"direction", cfg.problem.drift.direction},
                      {"mode", cfg.problem.drift.mode},
                      {"exponent", cfg.problem.drift.exponent}}}};
    j["solver"] = {{"tolerance", cfg.solver.tolerance},
                   {"max_iterations", cfg.solver.max_iterations},
                   {"eps_reg", cfg.solver.eps_reg}};
    j["experiment"] = {{"amplitudes", cfg.experiment.amplitudes},
                       {"r", cfg.experiment.r},
                       {"q", cfg.experiment.q},
                       {"delta", cfg.experiment.delta},
                       {"C", cfg.experiment.C},
                       {"samples", cfg.experiment.samples},
                       {"resolutions", cfg.experiment.resolutions}};
    j["mfg"] = {{"alpha", cfg.mfg.alpha},
                {"coupling_constant", cfg.mfg.coupling_constant},
                {"mollifier_width", cfg.mfg.mollifier_width},
                {"damping", cfg.mfg.damping},
                {"max_outer", cfg.mfg.max_outer},
                {"tolerance", cfg.mfg.tolerance}};
    return j;
}

json run_command(const std::string& command, const RunConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    Run run{cfg, out_dir};
    try {
        validate(cfg, command);
        if (command == "solve") {
            cmd_solve(run, cfg.problem.ergodic);
        } else if (command == "ergodic") {
            cmd_solve(run, true);
        } else if (command == "bochner-check") {
            cmd_bochner(run);
        } else if (command == "bernstein-audit") {
            cmd_audit(run);
        } else if (command == "thm1-sweep") {
            cmd_sweep(run, false);
        } else if (command == "thm2-sweep") {
            cmd_sweep(run, true);
        } else if (command == "constants") {
            cmd_constants(run);
        } else if (command == "mfg") {
            cmd_mfg(run);
        } else {
            throw ConfigError(0, "unknown subcommand '" + command + "'");
        }
    } catch (const hjlab::GateError& e) {
        run.failures.push_back({{"check", "gate"}, {"label", e.label()}, {"detail", e.what()}});
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        run.fail("error", e.what());
    }

    json report;
    report["schema"] = 1;
    report["command"] = command;
    report["seed"] = cfg.seed;
    report["config"] = config_json(cfg);
    if (run.gates.empty()) {
        try {
            run.gates = gate_json(base_gates(cfg), std::nullopt, std::nullopt);
        } catch (const std::exception&) {
            run.gates = {{"kappa", nullptr}, {"rho", nullptr}, {"sigma_hat", nullptr},
                         {"theta", nullptr}, {"s", nullptr},   {"K", nullptr},
                         {"C_V", nullptr}};
        }
    }
    report["gate_constants"] = run.gates;
    report["results"] = run.results;
    report["failures"] = run.failures;
    report["passed"] = run.failures.empty();

    std::ofstream os(run.path("report.json"));
    os << report.dump(2) << '\n';
    return report;
}

json write_gate_report(const std::string& command, const std::string& out_dir,
                       const hjlab::GateError& error) {
    std::filesystem::create_directories(out_dir);
    json report;
    report["schema"] = 1;
    report["command"] = command;
    report["failures"] = json::array(
        {{{"check", "gate"}, {"label", error.label()}, {"detail", error.what()}}});
    report["passed"] = false;
    std::ofstream os((std::filesystem::path(out_dir) / "report.json").string());
    os << report.dump(2) << '\n';
    return report;
}

}  // namespace hjcli
