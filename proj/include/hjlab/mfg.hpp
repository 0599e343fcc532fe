#pragma once

#include "hjlab/hjb_solver.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace hjlab {

/// Exponent conditions on (d, gamma, alpha) for the congestion-free coupling V(m) = m^alpha.
struct ExponentGate {
    int d = 3;
    double gamma = 2.0;
    double alpha = 1.0;
    double gamma_conjugate = 2.0;
    double gamma_threshold = 0.0;  ///< d/(d-2); gamma must exceed it
    double alpha_threshold = 0.0;  ///< gamma'/(d-2-gamma'), +inf when d = 3 or the denominator is <= 0
    bool gamma_ok = false;
    bool alpha_ok = false;
    [[nodiscard]] bool passed() const { return gamma_ok && alpha_ok; }
};

ExponentGate exponent_gate(int d, double gamma, double alpha);

struct MfgSpec {
    DomainSpec domain;
    double gamma = 2.0;
    double alpha = 1.0;
    double coupling_constant = 2.0;  ///< C_V in the two-sided bound on V'
    std::function<double(const Eigen::Vector3d&)> shift_b;  ///< empty means b = 0
    double mollifier_width = 0.0;
    double damping = 0.5;
    int max_outer = 200;
    double tolerance = 1e-8;
    double continuation_start = 0.1;  ///< first mollifier width when the target is smaller
    SolverConfig solver;
};

struct MfgState {
    ScalarField u;
    double lambda = 0.0;
    ScalarField m;
};

struct MfgIteration {
    double mollifier_width = 0.0;
    double change = 0.0;
    double damping = 0.0;
    double mass = 0.0;
    double min_density = 0.0;
    int newton_iterations = 0;
};

struct MfgReport {
    bool converged = false;
    int outer_iterations = 0;
    double final_change = 0.0;
    double max_mass_error = 0.0;
    double min_density = 0.0;
    ExponentGate gate;
    std::vector<MfgIteration> history;
    std::string message;
};

struct MfgResult {
    std::shared_ptr<const Grid> grid;
    MfgState state;
    MfgReport report;
};

/// m -> K (V(K m)) with V(m) = m^alpha and K the discrete convolution with the normalised
/// bump (1 - |x|^2/eps^2)^3. Near box faces the stencil is clipped and renormalised.
ScalarField mollify_coupling(const Grid& grid, const ScalarField& m, double eps, double alpha);

/// Discrete convolution with the normalised bump alone.
ScalarField mollify(const Grid& grid, const ScalarField& m, double eps);

/// Stationary density for the drift H_p(grad u): the kernel of the weighted adjoint of the
/// HJB linearisation, normalised to unit mass. Throws when the linearisation loses the
/// M-matrix sign pattern.
ScalarField fp_solve(const HjbOperators& ops, const ScalarField& u, double gamma,
                     double eps_reg = 1e-8);

/// Throws GateError on a coupling constant, boundary shift or exponent that the a priori
/// bounds do not cover.
void check_mfg_spec(const MfgSpec& spec, const Grid& grid);

MfgResult mfg_fixed_point(const MfgSpec& spec);

struct DualityReport {
    double lhs = 0.0;       ///< -int Tr(H_pp (D^2 u)^2) m
    double rhs = 0.0;       ///< int grad V_eps . grad m + int grad b . grad m
    double residual = 0.0;  ///< lhs - rhs
    double chain = 0.0;     ///< int V'(m_eps) |grad m_eps|^2
    double hess_b_sup = 0.0;
    double margin = 0.0;    ///< hess_b_sup - chain
};

DualityReport duality_identity_residual(const Grid& grid, const MfgState& state,
                                        const MfgSpec& spec);

struct LpBoundReport {
    double exponent = 0.0;        ///< d(alpha+1)/(d-2)
    double density_norm = 0.0;    ///< ||m_eps||_{L^exponent}
    double energy = 0.0;          ///< int |grad m_eps^{(alpha+1)/2}|^2
    double energy_bound = 0.0;    ///< C_V ||D^2 b||_inf
    double hess_b_sup = 0.0;
    double sobolev_constant = 0.0;
    bool satisfied = false;
};

/// `sobolev_constant` is copied into the report; pass a negative value to skip it.
LpBoundReport lp_bound_check(const Grid& grid, const MfgState& state, const MfgSpec& spec,
                             double sobolev_constant = -1.0, double tolerance = 1e-8);

}  // namespace hjlab
