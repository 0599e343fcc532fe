#include "hjlab/mfg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace hjlab {

namespace {

struct KernelTap {
    std::array<int, 3> offset{0, 0, 0};
    double weight = 0.0;
};

std::vector<KernelTap> bump_taps(const Grid& grid, double eps) {
    std::vector<KernelTap> taps;
    std::array<int, 3> reach{0, 0, 0};
    for (int a = 0; a < grid.dim; ++a) {
        reach[a] = static_cast<int>(std::floor(eps / grid.h[a]));
    }
    for (int k = -reach[2]; k <= reach[2]; ++k) {
        for (int j = -reach[1]; j <= reach[1]; ++j) {
            for (int i = -reach[0]; i <= reach[0]; ++i) {
                const double r2 = std::pow(i * grid.h[0], 2) + std::pow(j * grid.h[1], 2) +
                                  std::pow(k * grid.h[2], 2);
                const double s = 1.0 - r2 / (eps * eps);
                if (s > 0.0) {
                    taps.push_back({{i, j, k}, s * s * s});
                }
            }
        }
    }
    double total = 0.0;
    for (const auto& t : taps) {
        total += t.weight;
    }
    for (auto& t : taps) {
        t.weight /= total;
    }
    return taps;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

ScalarField shift_field(const Grid& grid, const MfgSpec& spec) {
    return spec.shift_b ? sample(grid, spec.shift_b) : ScalarField::Zero(grid.size());
}

double hessian_sup(const Grid& grid, const ScalarField& b) {
    const ScalarField norms = pointwise_norm(grid, hessian(grid, b));
    return norms.size() ? norms.maxCoeff() : 0.0;
}

}  // namespace

ExponentGate exponent_gate(int d, double gamma, double alpha) {
    if (d < 3) {
        throw Error("exponent_gate: the integrability exponents need d >= 3 (got d = " +
                    std::to_string(d) + ")");
    }
    if (!(gamma > 1.0)) {
        throw GateError("(In1)", "gamma = " + fmt(gamma) + " must exceed 1");
    }
    ExponentGate g;
    g.d = d;
    g.gamma = gamma;
    g.alpha = alpha;
    g.gamma_conjugate = gamma / (gamma - 1.0);
    g.gamma_threshold = static_cast<double>(d) / (d - 2);
    const double denom = d - 2 - g.gamma_conjugate;
    g.alpha_threshold = (d == 3 || denom <= 0.0) ? std::numeric_limits<double>::infinity()
                                                 : g.gamma_conjugate / denom;
    g.gamma_ok = gamma > g.gamma_threshold;
    g.alpha_ok = alpha < g.alpha_threshold;
    return g;
}

ScalarField mollify(const Grid& grid, const ScalarField& m, double eps) {
    if (grid.kind == DomainKind::disc) {
        throw Error("mollify: not available on the polar disc");
    }
    if (eps < 0.0) {
        throw Error("mollify: width must be non-negative (got " + fmt(eps) + ")");
    }
    double half_width = std::numeric_limits<double>::infinity();
    for (int a = 0; a < grid.dim; ++a) {
        half_width = std::min(half_width, 0.5 * grid.extent[a]);
    }
    if (eps > half_width) {
        throw Error("mollify: width " + fmt(eps) + " exceeds half the domain width " +
                    fmt(half_width));
    }
    const std::vector<KernelTap> taps = bump_taps(grid, eps);
    if (taps.size() <= 1) {
        return m;
    }
    ScalarField out(grid.size());
    for (Index node = 0; node < grid.size(); ++node) {
        const auto base = grid.multi_index(node);
        double acc = 0.0;
        double mass = 0.0;
        for (const auto& t : taps) {
            std::array<int, 3> idx = base;
            bool inside = true;
            for (int a = 0; a < grid.dim; ++a) {
                idx[a] += t.offset[a];
                if (grid.periodic[a]) {
                    idx[a] = ((idx[a] % grid.n[a]) + grid.n[a]) % grid.n[a];
                } else if (idx[a] < 0 || idx[a] >= grid.n[a]) {
                    inside = false;
                    break;
                }
            }
            if (!inside) {
                continue;
            }
            acc += t.weight * m[grid.index(idx[0], idx[1], idx[2])];
            mass += t.weight;
        }
        out[node] = acc / mass;
    }
    return out;
}

ScalarField mollify_coupling(const Grid& grid, const ScalarField& m, double eps, double alpha) {
    const ScalarField smoothed = mollify(grid, m, eps);
    if (smoothed.minCoeff() < 0.0 && alpha != std::floor(alpha)) {
        throw Error("mollify_coupling: negative density under a fractional power");
    }
    const ScalarField coupled = smoothed.array().pow(alpha).matrix();
    return mollify(grid, coupled, eps);
}

ScalarField fp_solve(const HjbOperators& ops, const ScalarField& u, double gamma, double eps_reg) {
    const Grid& grid = *ops.grid;
    ProblemSpec ps;
    ps.grid = ops.grid;
    ps.gamma = gamma;
    const SparseMatrix jac = hjb_jacobian(ops, u, ps, eps_reg);

    // Non-positive off-diagonals plus zero row sums make the pinned transpose an M-matrix,
    // so the density comes out positive without clipping.
    for (Index row = 0; row < jac.outerSize(); ++row) {
        double diag = 0.0;
        double worst = 0.0;
        for (SparseMatrix::InnerIterator it(jac, row); it; ++it) {
            if (it.col() == row) {
                diag = it.value();
            } else {
                worst = std::max(worst, it.value());
            }
        }
        if (worst > 1e-12 * std::abs(diag)) {
            throw Error("fp_solve: drift too strong for the resolution (positive off-diagonal " +
                        fmt(worst) + " at node " + std::to_string(row) +
                        "); refine the grid");
        }
    }

    const SparseMatrix adjoint = SparseMatrix(jac.transpose());
    ScalarField rhs = ScalarField::Zero(grid.size());
    rhs[0] = 1.0;
    const ScalarField y = solve_pinned(adjoint, rhs, &grid);
    // y = W m, so the weighted mass of m is the plain sum of y
    return y.cwiseQuotient(grid.weights) / y.sum();
}

void check_mfg_spec(const MfgSpec& spec, const Grid& grid) {
    if (grid.kind == DomainKind::disc) {
        throw GateError("(D1)", "the mean field game runs on a box or a torus");
    }
    if (grid.is_conformal()) {
        throw Error("mfg: only the Euclidean metric is supported");
    }
    if (!(spec.gamma > 1.0)) {
        throw GateError("(In1)", "gamma = " + fmt(spec.gamma) + " must exceed 1");
    }
    if (!(spec.alpha > 0.0)) {
        throw GateError("(MFG1)", "coupling exponent alpha = " + fmt(spec.alpha) +
                                      " must be positive");
    }
    const double cv = spec.coupling_constant;
    if (!(cv > 1.0) || cv < spec.alpha || cv < 1.0 / spec.alpha) {
        throw GateError("(MFG1)", "V(m) = m^alpha with alpha = " + fmt(spec.alpha) +
                                      " needs C_V > 1 and C_V >= max(alpha, 1/alpha); got C_V = " +
                                      fmt(cv));
    }
    if (!(spec.damping > 0.0 && spec.damping <= 1.0)) {
        throw Error("mfg: damping must lie in (0, 1] (got " + fmt(spec.damping) + ")");
    }
    if (spec.mollifier_width < 0.0) {
        throw Error("mfg: mollifier width must be non-negative");
    }
    if (!(spec.tolerance > 0.0) || spec.max_outer < 1) {
        throw Error("mfg: tolerance must be positive and max_outer at least 1");
    }
    if (grid.kind == DomainKind::box && spec.shift_b) {
        const ScalarField b = shift_field(grid, spec);
        const Eigen::MatrixXd db = differential(grid, b);
        for (Index k = 0; k < grid.size(); ++k) {
            if (!grid.face_interior[k]) {
                continue;
            }
            const double dn = grid.normals.row(k).dot(db.row(k));
            if (dn < -1e-8) {
                const auto x = grid.coords.row(k);
                std::ostringstream os;
                os << "normal derivative of b is " << dn << " < 0 at (" << x(0);
                for (Index a = 1; a < x.size(); ++a) {
                    os << ", " << x(a);
                }
                os << ")";
                throw GateError("(MFG2)", os.str());
            }
        }
    }
    if (grid.dim >= 3) {
        const ExponentGate gate = exponent_gate(grid.dim, spec.gamma, spec.alpha);
        if (!gate.alpha_ok) {
            throw GateError("(MFG3)", "alpha = " + fmt(spec.alpha) + " must be below " +
                                          fmt(gate.alpha_threshold) + " for d = " +
                                          std::to_string(grid.dim) + ", gamma = " +
                                          fmt(spec.gamma));
        }
    }
}

MfgResult mfg_fixed_point(const MfgSpec& spec) {
    MfgResult result;
    auto grid = std::make_shared<const Grid>(build_grid(spec.domain));
    result.grid = grid;
    check_mfg_spec(spec, *grid);

    MfgReport& rep = result.report;
    if (grid->dim >= 3) {
        rep.gate = exponent_gate(grid->dim, spec.gamma, spec.alpha);
    } else {
        // every L^p embeds in two dimensions, so neither exponent is restricted
        rep.gate.d = grid->dim;
        rep.gate.gamma = spec.gamma;
        rep.gate.alpha = spec.alpha;
        rep.gate.gamma_conjugate = spec.gamma / (spec.gamma - 1.0);
        rep.gate.gamma_threshold = 1.0;
        rep.gate.alpha_threshold = std::numeric_limits<double>::infinity();
        rep.gate.gamma_ok = true;
        rep.gate.alpha_ok = true;
    }

    const HjbOperators ops = build_operators(grid);
    ProblemSpec ps;
    ps.grid = grid;
    ps.gamma = spec.gamma;
    ps.ergodic = true;
    if (spec.shift_b) {
        ps.shift_b = shift_field(*grid, spec);
    }

    MfgState& st = result.state;
    st.m = ScalarField::Constant(grid->size(), 1.0 / grid->volume());
    st.u = ScalarField::Zero(grid->size());
    st.lambda = 0.0;
    rep.min_density = st.m.minCoeff();

    std::vector<double> widths;
    if (spec.mollifier_width > 0.0 && spec.mollifier_width < spec.continuation_start) {
        widths.push_back(spec.continuation_start);
    }
    widths.push_back(spec.mollifier_width);

    int newton_its = 0;
    auto solve_hjb = [&](const ScalarField& m, double eps) {
        ps.source_f = mollify_coupling(*grid, m, eps, spec.alpha);
        SolverConfig cfg = spec.solver;
        cfg.initial_guess = st.u;
        cfg.initial_lambda = st.lambda;
        SolveReport r = solve_ergodic(ps, cfg);
        newton_its = r.iterations;
        if (!r.converged) {
            throw Error("mfg: ergodic HJB solve did not converge (" + r.message + ")");
        }
        return r;
    };

    try {
        {
            const SolveReport r = solve_hjb(st.m, widths.front());
            st.u = r.u;
            st.lambda = r.lambda;
        }
        for (std::size_t stage = 0; stage < widths.size(); ++stage) {
            const double eps = widths[stage];
            const bool last = stage + 1 == widths.size();
            const double tol = last ? spec.tolerance : std::max(spec.tolerance, 1e-6);
            double tau = spec.damping;
            double prev_change = std::numeric_limits<double>::infinity();
            bool stage_done = false;
            for (int it = 0; it < spec.max_outer; ++it) {
                const ScalarField m_new = fp_solve(ops, st.u, spec.gamma, spec.solver.eps_reg);
                const ScalarField m_next = (1.0 - tau) * st.m + tau * m_new;
                const SolveReport r = solve_hjb(m_next, eps);
                const double change =
                    std::max({(m_new - st.m).cwiseAbs().maxCoeff(),
                              (r.u - st.u).cwiseAbs().maxCoeff(), std::abs(r.lambda - st.lambda)});
                st.m = m_next;
                st.u = r.u;
                st.lambda = r.lambda;

                MfgIteration rec;
                rec.mollifier_width = eps;
                rec.change = change;
                rec.damping = tau;
                rec.mass = integrate(*grid, st.m);
                rec.min_density = st.m.minCoeff();
                rec.newton_iterations = newton_its;
                rep.history.push_back(rec);
                rep.max_mass_error = std::max(rep.max_mass_error, std::abs(rec.mass - 1.0));
                rep.min_density = std::min(rep.min_density, rec.min_density);
                rep.final_change = change;
                ++rep.outer_iterations;

                if (change < tol) {
                    stage_done = true;
                    break;
                }
                if (change > prev_change) {
                    tau = std::max(0.5 * tau, 1.0 / 64.0);
                }
                prev_change = change;
            }
            if (!stage_done) {
                rep.message = "outer iteration stalled at width " + fmt(eps) + " with change " +
                              fmt(rep.final_change);
                return result;
            }
        }
        rep.converged = true;
        rep.message = "converged";
    } catch (const GateError&) {
        throw;
    } catch (const Error& e) {
        rep.converged = false;
        rep.message = e.what();
    }
    return result;
}

DualityReport duality_identity_residual(const Grid& grid, const MfgState& state,
                                        const MfgSpec& spec) {
    const int d = grid.dim;
    const double eps = spec.solver.eps_reg;
    const Eigen::MatrixXd du = differential(grid, state.u);
    const SymTensorField d2u = hessian(grid, state.u);
    const ScalarField b = shift_field(grid, spec);

    ScalarField trace_term(grid.size());
    for (Index k = 0; k < grid.size(); ++k) {
        Eigen::MatrixXd a(d, d);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                a(i, j) = d2u.data(k, sym_index(i, j, d));
            }
        }
        const Eigen::VectorXd p = du.row(k).transpose();
        const double p2 = p.squaredNorm();
        // H_pp = s I + (gamma - 2) (|p|^2 + eps^2)^{gamma/2 - 2} p p^T
        const double s = spec.gamma == 2.0 ? 1.0 : std::pow(p2 + eps * eps, 0.5 * spec.gamma - 1.0);
        const double rank_one =
            spec.gamma == 2.0 ? 0.0
                              : (spec.gamma - 2.0) * std::pow(p2 + eps * eps, 0.5 * spec.gamma - 2.0);
        trace_term[k] = s * a.squaredNorm() + rank_one * (a * p).squaredNorm();
    }

    DualityReport out;
    // flat box faces have vanishing second fundamental form, so the boundary term drops out
    out.lhs = -integrate(grid, trace_term.cwiseProduct(state.m));
    const ScalarField v_eps = mollify_coupling(grid, state.m, spec.mollifier_width, spec.alpha);
    const Eigen::MatrixXd dm = differential(grid, state.m);
    const Eigen::MatrixXd dv = differential(grid, v_eps);
    const Eigen::MatrixXd dbm = differential(grid, b);
    const ScalarField pairing = (dv + dbm).cwiseProduct(dm).rowwise().sum();
    out.rhs = integrate(grid, pairing);
    out.residual = out.lhs - out.rhs;

    const ScalarField m_eps = mollify(grid, state.m, spec.mollifier_width);
    const Eigen::MatrixXd dme = differential(grid, m_eps);
    const ScalarField vprime = spec.alpha * m_eps.array().pow(spec.alpha - 1.0);
    out.chain = integrate(grid, vprime.cwiseProduct(dme.rowwise().squaredNorm()));
    out.hess_b_sup = hessian_sup(grid, b);
    out.margin = out.hess_b_sup - out.chain;
    return out;
}

LpBoundReport lp_bound_check(const Grid& grid, const MfgState& state, const MfgSpec& spec,
                             double sobolev_constant, double tolerance) {
    if (grid.dim < 3) {
        throw Error("lp_bound_check: the Sobolev exponent needs d >= 3");
    }
    LpBoundReport out;
    const int d = grid.dim;
    out.exponent = d * (spec.alpha + 1.0) / (d - 2);
    const ScalarField m_eps = mollify(grid, state.m, spec.mollifier_width);
    out.density_norm = lq_norm(grid, m_eps, out.exponent).value;
    const ScalarField lifted = m_eps.array().pow(0.5 * (spec.alpha + 1.0));
    out.energy = integrate(grid, differential(grid, lifted).rowwise().squaredNorm());
    out.hess_b_sup = hessian_sup(grid, shift_field(grid, spec));
    out.energy_bound = spec.coupling_constant * out.hess_b_sup;
    out.sobolev_constant = sobolev_constant;
    out.satisfied = out.energy <= out.energy_bound + tolerance;
    return out;
}

}  // namespace hjlab
