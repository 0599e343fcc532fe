#include "hjlab/hjb_solver.hpp"
#include "hjlab/multigrid.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>

namespace hjlab {

namespace {

/// Direct factorisation below this size, preconditioned BiCGSTAB above.
// sparse LU fill grows much faster in three dimensions, so hand over to multigrid earlier
constexpr Index direct_solve_limit_2d = 20000;
constexpr Index direct_solve_limit_3d = 2000;

double weighted_l2(const Grid& grid, const ScalarField& r) {
    return std::sqrt(grid.weights.dot(r.cwiseAbs2()));
}

void check_spec(const ProblemSpec& spec) {
    if (!spec.grid) {
        throw Error("hjb: problem has no grid");
    }
    if (!(spec.gamma > 1.0)) {
        std::ostringstream os;
        os << "gamma > 1 required (got " << spec.gamma << ")";
        throw GateError("(In1)", os.str());
    }
    if (!(spec.c1 > 0.0)) {
        throw Error("hjb: c1 must be positive");
    }
    const Grid& g = *spec.grid;
    if (g.kind == DomainKind::disc) {
        throw GateError("(D1)", "solver domains are the convex box and the tori");
    }
    const Index N = g.size();
    if ((spec.source_f.size() && spec.source_f.size() != N) ||
        (spec.shift_b.size() && spec.shift_b.size() != N) ||
        (spec.has_drift() && (spec.drift.data.rows() != N || spec.drift.data.cols() != g.dim))) {
        throw Error("hjb: problem data does not match the grid");
    }
}

ScalarField data_rhs(const ProblemSpec& spec) {
    ScalarField rhs = ScalarField::Zero(spec.grid->size());
    if (spec.source_f.size()) {
        rhs += spec.source_f;
    }
    if (spec.shift_b.size()) {
        rhs += spec.shift_b;
    }
    return rhs;
}

std::vector<Eigen::VectorXd> apply_grad(const HjbOperators& ops, const ScalarField& u) {
    std::vector<Eigen::VectorXd> p;
    p.reserve(ops.grad.size());
    for (const auto& d : ops.grad) {
        p.emplace_back(d * u);
    }
    return p;
}

SparseMatrix pinned(const SparseMatrix& jac) {
    SparseMatrix p = jac;
    bool has_diag = false;
    for (SparseMatrix::InnerIterator it(p, 0); it; ++it) {
        if (it.col() == 0) {
            it.valueRef() = 1.0;
            has_diag = true;
        } else {
            it.valueRef() = 0.0;
        }
    }
    if (!has_diag) {
        p.coeffRef(0, 0) = 1.0;
    }
    p.prune(0.0);
    p.makeCompressed();
    return p;
}

class PinnedSolver {
public:
    PinnedSolver(const SparseMatrix& p, const Grid* grid) : matrix_(&p) {
        for (Index i = 0; i < p.outerSize(); ++i) {
            norm_inf_ = std::max(norm_inf_, p.row(i).cwiseAbs().sum());
        }
        if (grid == nullptr ||
            p.rows() <= (grid->dim == 3 ? direct_solve_limit_3d : direct_solve_limit_2d)) {
            factor_direct(p);
            return;
        }
        iterative_.preconditioner().set_grid(grid);
        iterative_.setTolerance(1e-13);
        iterative_.setMaxIterations(500);
        iterative_.compute(p);
        if (iterative_.preconditioner().info() != Eigen::Success) {
            factor_direct(p);
        }
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) {
        if (direct_) {
            return lu_.solve(rhs);
        }
        Eigen::VectorXd x = iterative_.solve(rhs);
        // backward error; the recursive BiCGSTAB residual drifts, so refine on the true one
        auto backward = [&](const Eigen::VectorXd& r) {
            return r.lpNorm<Eigen::Infinity>() /
                   (norm_inf_ * x.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>() + 1e-300);
        };
        Eigen::VectorXd r = rhs - *matrix_ * x;
        double err = backward(r);
        for (int pass = 0; pass < 4 && err > 1e-15; ++pass) {
            x += iterative_.solve(r);
            r = rhs - *matrix_ * x;
            err = backward(r);
        }
        if (err > 1e-11) {
            std::ostringstream os;
            os << "hjb: linear solve failed (backward error " << err << ")";
            throw Error(os.str());
        }
        return x;
    }

private:
    void factor_direct(const SparseMatrix& p) {
        Eigen::SparseMatrix<double> col = p;
        lu_.analyzePattern(col);
        lu_.factorize(col);
        if (lu_.info() != Eigen::Success) {
            throw Error("hjb: singular linear system");
        }
        direct_ = true;
    }

    const SparseMatrix* matrix_;
    double norm_inf_ = 0.0;
    bool direct_ = false;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
    Eigen::BiCGSTAB<SparseMatrix, GridMultigrid> iterative_;
};

}  // namespace

HjbOperators build_operators(std::shared_ptr<const Grid> grid) {
    const Grid& g = *grid;
    if (g.kind == DomainKind::disc) {
        throw Error("build_operators: the polar disc has no solver discretisation");
    }
    const Index N = g.size();
    const int d = g.dim;
    HjbOperators ops;
    ops.grid = grid;
    ops.inv_metric = g.is_conformal() ? ScalarField((-2.0 * g.phi.array()).exp())
                                      : ScalarField(ScalarField::Ones(N));
    std::vector<Eigen::Triplet<double>> lap;
    lap.reserve(static_cast<std::size_t>(N) * (2 * d + 1) * 2);
    std::vector<std::vector<Eigen::Triplet<double>>> grad(d);
    for (auto& t : grad) {
        t.reserve(static_cast<std::size_t>(N) * 2);
    }
    for (Index k = 0; k < N; ++k) {
        const auto mi = g.multi_index(k);
        const double s = ops.inv_metric[k];
        double diag = 0.0;
        for (int a = 0; a < d; ++a) {
            Index kp;
            Index km;
            if (g.periodic[a]) {
                kp = *g.neighbor(k, a, 1);
                km = *g.neighbor(k, a, -1);
            } else if (mi[a] == 0) {
                kp = km = *g.neighbor(k, a, 1);
            } else if (mi[a] == g.n[a] - 1) {
                kp = km = *g.neighbor(k, a, -1);
            } else {
                kp = *g.neighbor(k, a, 1);
                km = *g.neighbor(k, a, -1);
            }
            const double ih2 = 1.0 / (g.h[a] * g.h[a]);
            const double i2h = 0.5 / g.h[a];
            lap.emplace_back(k, kp, s * ih2);
            lap.emplace_back(k, km, s * ih2);
            diag -= 2.0 * s * ih2;
            if (kp != km) {
                grad[a].emplace_back(k, kp, i2h);
                grad[a].emplace_back(k, km, -i2h);
                if (g.is_conformal()) {
                    const double c = s * (d - 2) * g.dphi(k, a) * i2h;
                    lap.emplace_back(k, kp, c);
                    lap.emplace_back(k, km, -c);
                }
            }
        }
        lap.emplace_back(k, k, diag);
    }
    ops.laplacian.resize(N, N);
    ops.laplacian.setFromTriplets(lap.begin(), lap.end());
    ops.grad.resize(d);
    for (int a = 0; a < d; ++a) {
        ops.grad[a].resize(N, N);
        ops.grad[a].setFromTriplets(grad[a].begin(), grad[a].end());
    }
    return ops;
}

double hamiltonian(double p2, double gamma, double c1, double eps) {
    if (gamma == 2.0) {
        return 0.5 * c1 * p2;
    }
    return c1 / gamma * (std::pow(p2 + eps * eps, 0.5 * gamma) - std::pow(eps, gamma));
}

double hamiltonian_slope(double p2, double gamma, double c1, double eps) {
    if (gamma == 2.0) {
        return c1;
    }
    return c1 * std::pow(p2 + eps * eps, 0.5 * gamma - 1.0);
}

Eigen::MatrixXd transport_coefficients(const HjbOperators& ops, const ScalarField& u,
                                       const ProblemSpec& spec, double eps_reg) {
    const int d = ops.grid->dim;
    const auto p = apply_grad(ops, u);
    const Index N = u.size();
    Eigen::MatrixXd coef(N, d);
    for (Index k = 0; k < N; ++k) {
        double p2 = 0.0;
        for (int a = 0; a < d; ++a) {
            p2 += p[a][k] * p[a][k];
        }
        p2 *= ops.inv_metric[k];
        const double slope = hamiltonian_slope(p2, spec.gamma, spec.c1, eps_reg) * ops.inv_metric[k];
        for (int a = 0; a < d; ++a) {
            coef(k, a) = slope * p[a][k];
        }
    }
    if (spec.has_drift()) {
        coef += spec.drift.data;
    }
    return coef;
}

ScalarField hjb_operator(const HjbOperators& ops, const ScalarField& u, const ProblemSpec& spec,
                         double eps_reg) {
    const int d = ops.grid->dim;
    const auto p = apply_grad(ops, u);
    ScalarField out = -(ops.laplacian * u);
    for (Index k = 0; k < u.size(); ++k) {
        double p2 = 0.0;
        for (int a = 0; a < d; ++a) {
            p2 += p[a][k] * p[a][k];
        }
        out[k] += hamiltonian(p2 * ops.inv_metric[k], spec.gamma, spec.c1, eps_reg);
    }
    if (spec.has_drift()) {
        for (int a = 0; a < d; ++a) {
            out.array() += spec.drift.data.col(a).array() * p[a].array();
        }
    }
    return out;
}

ScalarField residual(const ScalarField& u, const ProblemSpec& spec, double eps_reg) {
    check_spec(spec);
    if (u.size() != spec.grid->size()) {
        throw Error("residual: field does not match the problem grid");
    }
    const HjbOperators ops = build_operators(spec.grid);
    ScalarField r = hjb_operator(ops, u, spec, eps_reg) - data_rhs(spec);
    if (spec.ergodic) {
        r.array() += spec.lambda;
    }
    return r;
}

SparseMatrix hjb_jacobian(const HjbOperators& ops, const ScalarField& u, const ProblemSpec& spec,
                          double eps_reg) {
    const Eigen::MatrixXd coef = transport_coefficients(ops, u, spec, eps_reg);
    SparseMatrix jac = -ops.laplacian;
    for (int a = 0; a < ops.grid->dim; ++a) {
        const Eigen::VectorXd c = coef.col(a);
        jac += c.asDiagonal() * ops.grad[a];
    }
    jac.makeCompressed();
    return jac;
}

BorderedSolution solve_bordered(const SparseMatrix& jac, const ScalarField& rhs,
                                const ScalarField& weights, double constraint, const Grid* grid) {
    // Row 0 of J is replaced by e_0; since J 1 = 0 the two pinned solves span every
    // solution of the remaining rows, and row 0 plus the constraint fix the two scalars.
    const SparseMatrix p = pinned(jac);
    PinnedSolver solver(p, grid);
    Eigen::VectorXd v = rhs;
    v[0] = 0.0;
    Eigen::VectorXd e = Eigen::VectorXd::Constant(rhs.size(), -1.0);
    e[0] = 0.0;
    const Eigen::VectorXd a = solver.solve(v);
    const Eigen::VectorXd c = solver.solve(e);
    const double j0a = jac.row(0).dot(a.transpose());
    const double j0c = jac.row(0).dot(c.transpose());
    BorderedSolution out;
    out.s = (rhs[0] - j0a) / (j0c + 1.0);
    out.x = a + out.s * c;
    const double t = (constraint - weights.dot(out.x)) / weights.sum();
    out.x.array() += t;
    return out;
}

ScalarField solve_pinned(const SparseMatrix& op, const ScalarField& rhs, const Grid* grid) {
    const SparseMatrix p = pinned(op);
    PinnedSolver solver(p, grid);
    return solver.solve(rhs);
}

namespace {

SolveReport newton(const ProblemSpec& spec, const SolverConfig& cfg) {
    check_spec(spec);
    const Grid& g = *spec.grid;
    const HjbOperators ops = build_operators(spec.grid);
    const ScalarField rhs = data_rhs(spec);
    const ScalarField& w = g.weights;
    const double eps = cfg.eps_reg;

    SolveReport rep;
    rep.eps_reg = eps;
    ScalarField u = cfg.initial_guess.size() ? cfg.initial_guess : ScalarField::Zero(g.size());
    if (u.size() != g.size()) {
        throw Error("solve: initial guess does not match the grid");
    }
    u.array() -= w.dot(u) / w.sum();
    double s = cfg.initial_lambda;

    auto eval = [&](const ScalarField& uu, double ss) {
        ScalarField r = hjb_operator(ops, uu, spec, eps) - rhs;
        r.array() += ss;
        return r;
    };

    ScalarField r = eval(u, s);
    double norm = weighted_l2(g, r);
    bool picard_done = false;
    int it = 0;
    while (true) {
        rep.residual_history.push_back(norm);
        if (norm <= cfg.tolerance) {
            rep.converged = true;
            break;
        }
        if (it >= cfg.max_iterations || !std::isfinite(norm)) {
            break;
        }
        ++it;
        const SparseMatrix jac = hjb_jacobian(ops, u, spec, eps);
        const BorderedSolution step = solve_bordered(jac, -r, w, 0.0, &g);
        double alpha = 1.0;
        bool accepted = false;
        while (alpha >= cfg.min_step) {
            const ScalarField ut = u + alpha * step.x;
            const double st = s + alpha * step.s;
            ScalarField rt = eval(ut, st);
            const double nt = weighted_l2(g, rt);
            if (nt < (1.0 - 1e-4 * alpha) * norm) {
                u = ut;
                s = st;
                r = std::move(rt);
                norm = nt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (accepted) {
            continue;
        }
        if (picard_done) {
            rep.message = "Newton stalled after the Picard fallback";
            break;
        }
        picard_done = true;
        rep.used_picard = true;
        SparseMatrix lin = -ops.laplacian;
        if (spec.has_drift()) {
            for (int a = 0; a < g.dim; ++a) {
                const Eigen::VectorXd c = spec.drift.data.col(a);
                lin += c.asDiagonal() * ops.grad[a];
            }
        }
        for (int k = 0; k < cfg.picard_iterations; ++k) {
            const BorderedSolution ps = solve_bordered(lin, -r, w, 0.0, &g);
            u += cfg.picard_relaxation * ps.x;
            s += cfg.picard_relaxation * ps.s;
            r = eval(u, s);
        }
        norm = weighted_l2(g, r);
    }
    rep.iterations = it;
    rep.residual_norm = norm;
    rep.u = std::move(u);
    rep.lambda = s;
    if (!rep.converged && rep.message.empty()) {
        std::ostringstream os;
        os << "no convergence after " << it << " iterations (residual " << norm << ")";
        rep.message = os.str();
    }
    if (rep.converged) {
        rep.norms = norm_table(g, rep.u, spec.gamma, cfg.norms);
    }
    return rep;
}

}  // namespace

SolveReport solve(const ProblemSpec& spec, const SolverConfig& cfg) {
    if (spec.ergodic) {
        return solve_ergodic(spec, cfg);
    }
    SolveReport rep = newton(spec, cfg);
    rep.compatibility_shift = rep.lambda;
    rep.lambda = 0.0;
    return rep;
}

SolveReport solve_ergodic(const ProblemSpec& spec, const SolverConfig& cfg) {
    if (!spec.ergodic) {
        throw Error("solve_ergodic: problem is not flagged ergodic");
    }
    return newton(spec, cfg);
}

std::vector<NormRow> norm_table(const Grid& grid, const ScalarField& u, double gamma,
                                const NormExponents& exps) {
    std::vector<NormRow> rows;
    const VectorField grad = gradient(grid, u);
    const ScalarField grad_mag = pointwise_norm(grid, grad);
    const ScalarField lap = laplace_beltrami(grid, u);
    const SymTensorField hess = hessian(grid, u);
    const ScalarField pow_gamma = grad_mag.array().pow(gamma).matrix();
    for (double r : exps.r) {
        rows.push_back({"grad_u", r, lq_norm(grid, grad, r).value});
    }
    for (double q : exps.q) {
        rows.push_back({"lap_u", q, lq_norm(grid, lap, q).value});
        rows.push_back({"grad_u_pow_gamma", q, lq_norm(grid, pow_gamma, q).value});
        rows.push_back({"hess_u", q, lq_norm(grid, hess, q).value});
    }
    return rows;
}

double SolveReport::norm(const std::string& quantity, double exponent) const {
    for (const auto& row : norms) {
        if (row.quantity == quantity && row.exponent == exponent) {
            return row.value;
        }
    }
    throw Error("SolveReport: no norm " + quantity + " at exponent " + std::to_string(exponent));
}

}  // namespace hjlab
