#pragma once

#include "hjlab/fields.hpp"

#include <Eigen/Sparse>

#include <memory>
#include <string>
#include <vector>

namespace hjlab {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Discrete operators of the Neumann/periodic solver.
///
/// Boundary faces use ghost-node mirror reflection, so `grad[a]` vanishes on faces normal
/// to axis a and `laplacian` is the symmetric compact stencil with doubled inward weight.
struct HjbOperators {
    std::shared_ptr<const Grid> grid;
    SparseMatrix laplacian;          ///< Laplace-Beltrami, including the conformal drift term
    std::vector<SparseMatrix> grad;  ///< reflected centred D_a
    ScalarField inv_metric;          ///< e^{-2 phi}
};

HjbOperators build_operators(std::shared_ptr<const Grid> grid);

/// Data of -Lap u + H(grad u) + g(B, grad u) + lambda = f + b with
/// H(p) = (c1/gamma) ((|p|^2 + eps^2)^{gamma/2} - eps^gamma).
struct ProblemSpec {
    std::shared_ptr<const Grid> grid;
    double gamma = 2.0;
    double c1 = 1.0;
    double c2 = 0.0;
    VectorField drift;       ///< empty means B = 0
    ScalarField shift_b;     ///< empty means b = 0
    ScalarField source_f;    ///< empty means f = 0
    bool ergodic = false;
    double lambda = 0.0;

    [[nodiscard]] double gamma_conjugate() const { return gamma / (gamma - 1.0); }
    [[nodiscard]] bool has_drift() const { return drift.data.size() > 0; }
};

struct NormExponents {
    std::vector<double> r{2.0, lq_infinity};
    std::vector<double> q{2.0};
};

struct SolverConfig {
    double tolerance = 1e-10;
    int max_iterations = 60;
    double min_step = 0x1p-20;
    double eps_reg = 1e-8;
    int picard_iterations = 20;
    double picard_relaxation = 0.5;
    ScalarField initial_guess;  ///< empty means zero
    double initial_lambda = 0.0;
    NormExponents norms;
};

struct NormRow {
    std::string quantity;
    double exponent = 2.0;
    double value = 0.0;
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    double residual_norm = 0.0;
    ScalarField u;
    /// Ergodic constant (ergodic mode) or the additive shift that made the source compatible.
    double lambda = 0.0;
    double compatibility_shift = 0.0;
    bool used_picard = false;
    double eps_reg = 0.0;
    std::vector<double> residual_history;
    std::vector<NormRow> norms;
    std::string message;

    [[nodiscard]] double norm(const std::string& quantity, double exponent) const;
};

/// Smoothed Hamiltonian and its p-derivative coefficient c1 (|p|^2+eps^2)^{gamma/2-1}.
double hamiltonian(double p2, double gamma, double c1, double eps);
double hamiltonian_slope(double p2, double gamma, double c1, double eps);

/// -Lap u + H(grad u) + g(B, grad u), without lambda, b, f.
ScalarField hjb_operator(const HjbOperators& ops, const ScalarField& u, const ProblemSpec& spec,
                         double eps_reg = 1e-8);

/// Node-wise residual; lambda enters only in ergodic mode.
ScalarField residual(const ScalarField& u, const ProblemSpec& spec, double eps_reg = 1e-8);

/// Linearisation -Lap + sum_a diag(coeff_a) D_a with coeff_a = H_p(grad u)^a + B^a.
SparseMatrix hjb_jacobian(const HjbOperators& ops, const ScalarField& u, const ProblemSpec& spec,
                          double eps_reg);

/// Drift coefficients H_p(grad u)^a + B^a at each node, N x dim (Euclidean components
/// multiplying D_a).
Eigen::MatrixXd transport_coefficients(const HjbOperators& ops, const ScalarField& u,
                                       const ProblemSpec& spec, double eps_reg);

/// Solves J x + s 1 = rhs, w^T x = c for an operator J that annihilates constants.
/// With a grid, large systems use multigrid-preconditioned BiCGSTAB.
struct BorderedSolution {
    ScalarField x;
    double s = 0.0;
};
BorderedSolution solve_bordered(const SparseMatrix& jac, const ScalarField& rhs,
                                const ScalarField& weights, double constraint,
                                const Grid* grid = nullptr);

/// Solves P x = rhs where P is `op` with row 0 replaced by e_0^T.
ScalarField solve_pinned(const SparseMatrix& op, const ScalarField& rhs, const Grid* grid = nullptr);

/// Neumann/periodic solve with mean-zero normalisation; see SolveReport::compatibility_shift.
SolveReport solve(const ProblemSpec& spec, const SolverConfig& cfg = {});

/// Ergodic solve for (u, lambda) with sum w u = 0.
SolveReport solve_ergodic(const ProblemSpec& spec, const SolverConfig& cfg = {});

/// Fills the norm table of a converged report.
std::vector<NormRow> norm_table(const Grid& grid, const ScalarField& u, double gamma,
                                const NormExponents& exps);

}  // namespace hjlab
