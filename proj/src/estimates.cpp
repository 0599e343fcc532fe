#include "hjlab/estimates.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hjlab {

ThmOneExponents thm1_exponents(int d, double p) {
    if (d < 3) {
        throw Error("thm1_exponents: dimension must be at least 3");
    }
    if (!(p >= 1.0)) {
        throw Error("thm1_exponents: p must be at least 1");
    }
    ThmOneExponents e;
    e.d = d;
    e.p = p;
    e.r = 2.0 * (p + 1.0) * d / (d - 2.0);
    e.beta_p = (p + 1.0) * d / (d + 2.0 * p);
    e.q = 2.0 * e.beta_p;
    return e;
}

void thm2_gate(int d, double gamma, double q) {
    const double lower = std::max(d * (gamma - 1.0) / gamma, 2.0);
    if (!(q > lower)) {
        std::ostringstream os;
        os << "q > max{d(gamma-1)/gamma, 2} = " << lower << " required (got q = " << q << ")";
        throw GateError("(q-range)", os.str());
    }
}

double top_decade_slope(const std::vector<SweepRow>& rows, double* lo, double* hi) {
    double tmax = 0.0;
    for (const auto& r : rows) {
        tmax = std::max(tmax, r.t);
    }
    std::vector<double> ts;
    std::vector<double> vs;
    for (const auto& r : rows) {
        if (r.t >= tmax / 10.0 * (1.0 - 1e-12) && r.t > 0.0 && r.ratio > 0.0) {
            ts.push_back(r.t);
            vs.push_back(r.ratio);
        }
    }
    if (lo) {
        *lo = tmax / 10.0;
    }
    if (hi) {
        *hi = tmax;
    }
    if (ts.size() < 2) {
        return 0.0;
    }
    const auto n = static_cast<double>(ts.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double x = std::log(ts[i]);
        const double y = std::log(vs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

enum class SweepKind { gradient, max_regularity };

/// Solves at amplitude t_to from a converged state at t_from, bisecting the amplitude
/// step geometrically when Newton fails.
bool continue_to(const ProblemSpec& base, const ScalarField& f0, double t_from, double t_to,
                 ScalarField& u, double& lambda, const SolverConfig& cfg, int depth, int& steps,
                 SolveReport& out) {
    ProblemSpec ps = base;
    ps.source_f = t_to * f0;
    SolverConfig c = cfg;
    c.initial_guess = u;
    c.initial_lambda = lambda;
    SolveReport rep;
    bool ok = false;
    try {
        rep = solve_ergodic(ps, c);
        ok = rep.converged;
    } catch (const Error&) {
        ok = false;
    }
    if (ok) {
        u = rep.u;
        lambda = rep.lambda;
        out = std::move(rep);
        ++steps;
        return true;
    }
    if (depth == 0) {
        out = std::move(rep);
        return false;
    }
    const double mid = t_from > 0.0 ? std::sqrt(t_from * t_to) : 0.25 * t_to;
    return continue_to(base, f0, t_from, mid, u, lambda, cfg, depth - 1, steps, out) &&
           continue_to(base, f0, mid, t_to, u, lambda, cfg, depth - 1, steps, out);
}

ScalingReport run_sweep(const SweepSpec& spec, SweepKind kind) {
    if (spec.domain.kind == DomainKind::disc) {
        throw GateError("(D1)", "sweeps run on the box or the tori");
    }
    if (!(spec.gamma > 1.0)) {
        throw GateError("(In1)", "gamma > 1 required");
    }
    if (!spec.f0) {
        throw Error("sweep: no base source");
    }
    for (std::size_t i = 0; i < spec.amplitudes.size(); ++i) {
        if (spec.amplitudes[i] < 0.0 || (i && spec.amplitudes[i] <= spec.amplitudes[i - 1])) {
            throw Error("sweep: amplitudes must be nonnegative and increasing");
        }
    }
    const int d = spec.domain.dim;
    ScalingReport rep;
    if (kind == SweepKind::max_regularity) {
        rep.kind = "thm2";
        if (spec.drift) {
            throw GateError("(In2~)", "the maximal-regularity sweep requires B = 0");
        }
        thm2_gate(d, spec.gamma, spec.q);
        if (d >= 3) {
            rep.maxreg = maxreg_params(d, spec.gamma, spec.q, spec.delta);
        }
    } else {
        rep.kind = "thm1";
        if (spec.drift && !(spec.drift_exponent > d)) {
            std::ostringstream os;
            os << "drift integrability exponent s > d = " << d << " required (got s = "
               << spec.drift_exponent << ")";
            throw GateError("(In2)", os.str());
        }
    }

    auto grid = std::make_shared<const Grid>(build_grid(spec.domain, spec.metric));
    ProblemSpec base;
    base.grid = grid;
    base.gamma = spec.gamma;
    base.ergodic = true;
    if (spec.drift) {
        base.drift.data.resize(grid->size(), d);
        for (Index k = 0; k < grid->size(); ++k) {
            Eigen::Vector3d x = Eigen::Vector3d::Zero();
            x.head(d) = grid->coords.row(k).transpose();
            base.drift.data.row(k) = spec.drift(x).head(d).transpose();
        }
    }
    rep.gates = estimate_gate_constants(spec.domain, spec.metric, base.drift, spec.drift_exponent,
                                        spec.estimate_sobolev, spec.seed);

    const ScalarField f0 = sample(*grid, spec.f0);
    SolverConfig cfg = spec.solver;
    cfg.norms.r = {spec.r, 1.0};
    cfg.norms.q = {spec.q};

    ScalarField u = ScalarField::Zero(grid->size());
    double lambda = 0.0;
    double t_prev = 0.0;
    rep.complete = true;
    for (double t : spec.amplitudes) {
        SweepRow row;
        row.t = t;
        SolveReport sr;
        int steps = 0;
        const bool ok = continue_to(base, f0, t_prev, t, u, lambda, cfg, 6, steps, sr);
        row.converged = ok;
        row.continuation_steps = steps;
        row.iterations = sr.iterations;
        if (!ok) {
            std::ostringstream os;
            os << "solve did not converge at t = " << t << ": " << sr.message;
            rep.message = os.str();
            rep.complete = false;
            break;
        }
        row.lambda = sr.lambda;
        row.f_norm = lq_norm(*grid, ScalarField(t * f0), spec.q).value;
        row.grad_l1 = sr.norm("grad_u", 1.0);
        if (kind == SweepKind::gradient) {
            row.numerator = sr.norm("grad_u", spec.r);
        } else {
            row.numerator = sr.norm("lap_u", spec.q) + sr.norm("grad_u_pow_gamma", spec.q);
        }
        row.ratio = row.numerator / (1.0 + row.f_norm);
        rep.gates.K = std::max(rep.gates.K, row.f_norm + row.grad_l1);
        rep.max_ratio = std::max(rep.max_ratio, row.ratio);
        if (t == 1.0) {
            rep.ratio_at_one = row.ratio;
        }
        rep.rows.push_back(row);
        t_prev = t;
    }
    rep.slope = top_decade_slope(rep.rows, &rep.fit_lo, &rep.fit_hi);
    return rep;
}

}  // namespace

ScalingReport thm1_sweep(const SweepSpec& spec) { return run_sweep(spec, SweepKind::gradient); }

ScalingReport thm2_sweep(const SweepSpec& spec) {
    return run_sweep(spec, SweepKind::max_regularity);
}

namespace {

struct QuotientParts {
    double top = 0.0;   ///< ||u||_{2*}
    double grad = 0.0;  ///< ||grad u||_2
    double l2 = 0.0;
    Eigen::VectorXd dtop;
    Eigen::VectorXd dgrad;
    Eigen::VectorXd dl2;
};

QuotientParts quotient_parts(const HjbOperators& ops, const ScalarField& u, bool derivatives) {
    const Grid& g = *ops.grid;
    const double pe = 2.0 * g.dim / (g.dim - 2.0);
    QuotientParts qp;
    const Eigen::ArrayXd au = u.array().abs();
    const Eigen::ArrayXd pw = au.pow(pe);
    qp.top = std::pow((g.weights.array() * pw).sum(), 1.0 / pe);
    qp.l2 = std::sqrt((g.weights.array() * u.array().square()).sum());
    const Eigen::VectorXd gw = g.weights.cwiseProduct(ops.inv_metric);
    std::vector<Eigen::VectorXd> du;
    double g2 = 0.0;
    for (const auto& d : ops.grad) {
        du.emplace_back(d * u);
        g2 += gw.dot(du.back().cwiseAbs2());
    }
    qp.grad = std::sqrt(g2);
    if (!derivatives) {
        return qp;
    }
    qp.dtop = Eigen::VectorXd::Zero(u.size());
    if (qp.top > 0.0) {
        qp.dtop = (g.weights.array() * au.pow(pe - 1.0) * u.array().sign()).matrix() *
                  std::pow(qp.top, 1.0 - pe);
    }
    qp.dgrad = Eigen::VectorXd::Zero(u.size());
    if (qp.grad > 0.0) {
        for (std::size_t a = 0; a < ops.grad.size(); ++a) {
            qp.dgrad += ops.grad[a].transpose() * gw.cwiseProduct(du[a]);
        }
        qp.dgrad /= qp.grad;
    }
    qp.dl2 = qp.l2 > 0.0 ? Eigen::VectorXd(g.weights.cwiseProduct(u) / qp.l2)
                         : Eigen::VectorXd(Eigen::VectorXd::Zero(u.size()));
    return qp;
}

}  // namespace

double sobolev_quotient(const HjbOperators& ops, const ScalarField& u) {
    const QuotientParts qp = quotient_parts(ops, u, false);
    const double den = qp.grad + qp.l2;
    return den > 0.0 ? qp.top / den : 0.0;
}

ScalarField random_band_limited(const Grid& grid, std::mt19937_64& rng, int max_mode, int terms) {
    std::uniform_int_distribution<int> mode(0, max_mode);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> amp(0.0, 1.0);
    ScalarField u = ScalarField::Zero(grid.size());
    const bool box = grid.kind == DomainKind::box;
    for (int t = 0; t < terms; ++t) {
        std::array<int, 3> m{0, 0, 0};
        for (int a = 0; a < grid.dim; ++a) {
            m[a] = mode(rng);
        }
        const double c = amp(rng);
        const double ph = box ? 0.0 : phase(rng);
        u += sample(grid, [&](const Eigen::Vector3d& x) {
            double arg = ph;
            for (int a = 0; a < grid.dim; ++a) {
                arg += (box ? std::numbers::pi : 2.0 * std::numbers::pi) * m[a] * x[a] / grid.extent[a];
            }
            if (box) {
                double v = c;
                for (int a = 0; a < grid.dim; ++a) {
                    v *= std::cos(std::numbers::pi * m[a] * x[a] / grid.extent[a]);
                }
                return v;
            }
            return c * std::cos(arg);
        });
    }
    return u;
}

SobolevEstimate sobolev_constant_estimate(std::shared_ptr<const Grid> grid, std::uint64_t seed,
                                          int starts, int iterations) {
    if (grid->dim < 3) {
        throw Error("sobolev_constant_estimate: dimension must be at least 3");
    }
    const HjbOperators ops = build_operators(grid);
    std::mt19937_64 rng(seed);
    SobolevEstimate est;
    est.exponent = 2.0 * grid->dim / (grid->dim - 2.0);
    for (int s = 0; s < starts; ++s) {
        ScalarField u = s == 0 ? ScalarField(ScalarField::Ones(grid->size()))
                               : ScalarField(random_band_limited(*grid, rng) +
                                             ScalarField::Constant(grid->size(), 0.5));
        double r = sobolev_quotient(ops, u);
        SobolevStart rec;
        rec.initial = r;
        double step = 0.5;
        for (int it = 0; it < iterations && step > 1e-8; ++it) {
            const QuotientParts qp = quotient_parts(ops, u, true);
            const double den = qp.grad + qp.l2;
            const Eigen::VectorXd gr = (qp.dtop * den - qp.top * (qp.dgrad + qp.dl2)) / (den * den);
            // ascent direction in the weighted inner product, scaled to the field size
            const Eigen::VectorXd dir = gr.cwiseQuotient(grid->weights);
            const double dn = std::sqrt(grid->weights.dot(dir.cwiseAbs2()));
            if (!(dn > 0.0)) {
                break;
            }
            const double scale = qp.l2 / dn;
            bool improved = false;
            while (step > 1e-8) {
                const ScalarField trial = u + step * scale * dir;
                const double rt = sobolev_quotient(ops, trial);
                if (rt > r) {
                    u = trial;
                    r = rt;
                    improved = true;
                    step = std::min(1.0, 2.0 * step);
                    break;
                }
                step *= 0.5;
            }
            if (!improved) {
                break;
            }
        }
        rec.final = r;
        est.starts.push_back(rec);
        est.sigma_hat = std::max(est.sigma_hat, r);
    }
    return est;
}

double cz_ratio(const Grid& grid, const std::vector<ScalarField>& samples, double p) {
    if (!(p > 1.0)) {
        throw Error("cz_ratio: exponent must exceed 1");
    }
    double best = -1.0;
    for (const auto& u : samples) {
        const double hess = lq_norm(grid, hessian(grid, u), p).value;
        const double lap = lq_norm(grid, laplace_beltrami(grid, u), p).value;
        if (lap <= 1e-12 * std::max(1.0, hess)) {
            continue;
        }
        best = std::max(best, hess / lap);
    }
    if (best < 0.0) {
        throw Error("cz_ratio: every sample has vanishing Laplacian");
    }
    return best;
}

GateConstants estimate_gate_constants(const DomainSpec& domain, const MetricSpec& metric,
                                      const VectorField& drift, double drift_exponent,
                                      bool estimate_sobolev, std::uint64_t seed) {
    const Grid grid = build_grid(domain, metric);
    GateConstants g;
    g.kappa = grid.kind == DomainKind::disc ? 0.0 : ricci_lower_bound(metric, grid);
    g.rho = grid.volume();
    if (estimate_sobolev && grid.dim >= 3 && grid.kind != DomainKind::disc) {
        DomainSpec coarse = domain;
        for (int a = 0; a < grid.dim; ++a) {
            coarse.resolution[a] = std::min(coarse.resolution[a], 12);
        }
        auto cg = std::make_shared<const Grid>(build_grid(coarse, metric));
        g.sigma_hat = sobolev_constant_estimate(cg, seed, 6, 60).sigma_hat;
    }
    if (drift.data.size()) {
        g.s = drift_exponent;
        g.theta = lq_norm(grid, drift, g.s).value;
    }
    return g;
}

}  // namespace hjlab
