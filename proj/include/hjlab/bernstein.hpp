#pragma once

#include "hjlab/fields.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hjlab {

/// Concave weight h(t) = 2/(1+delta) (1+t)^{(1+delta)/2} and its first two derivatives.
/// `linear()` is the formal delta = 1 limit h(t) = 1 + t.
struct HFunction {
    double delta = 0.5;
    bool is_linear = false;

    static HFunction make(double delta);
    static HFunction linear();

    [[nodiscard]] double h(double t) const;
    [[nodiscard]] double dh(double t) const;
    [[nodiscard]] double d2h(double t) const;
    /// Inverse of h on [h(0), inf).
    [[nodiscard]] double inverse(double z) const;
};

/// u, w = |grad u|^2 / 2, and z = h(w) with z1 = h'(w), z2 = h''(w).
struct BernsteinState {
    ScalarField u;
    ScalarField w;
    ScalarField z;
    ScalarField z1;
    ScalarField z2;
    double delta = 0.5;
};

BernsteinState bernstein_state(const Grid& grid, const ScalarField& u, const HFunction& hf);

/// Lap w - g(grad Lap u, grad u) - |D^2 u|^2 - Ric(grad u, grad u), node-wise.
ScalarField bochner_residual(const Grid& grid, const ScalarField& u);

/// Lap z - z1 (g(grad Lap u, grad u) + |D^2u|^2 + Ric(grad u, grad u)) - z2 |D^2u(grad u)|^2.
ScalarField weighted_bochner_residual(const Grid& grid, const ScalarField& u, double delta);
ScalarField weighted_bochner_residual(const Grid& grid, const ScalarField& u, const HFunction& hf);

/// Least-squares slope of log(err) against log(h).
double fitted_order(const std::vector<double>& h, const std::vector<double>& err);

struct RefinementStudy {
    std::vector<int> resolution;
    std::vector<double> spacing;
    std::vector<double> max_residual;
    double order = 0.0;
};

/// Max-norm of the (weighted, when delta is set) Bochner residual of a smooth function over
/// a family of grids; box grids are measured at interior nodes only.
RefinementStudy bochner_refinement(const std::vector<DomainSpec>& specs, const MetricSpec& metric,
                                   const std::function<double(const Eigen::Vector3d&)>& u,
                                   std::optional<double> delta = std::nullopt);

struct BoundarySignReport {
    std::vector<Index> nodes;
    std::vector<double> normal_derivative_w;  ///< d_nu w
    std::vector<double> minus_curvature_term; ///< -II(grad u, grad u)
    double max_discrepancy = 0.0;
    double max_normal_derivative = 0.0;
    int flagged = 0;                          ///< nodes with d_nu w > tolerance
};

/// Compares both sides of d_nu w = -II(grad u, grad u) on face-interior boundary nodes.
/// On the disc, u is differentiated in polar coordinates.
BoundarySignReport boundary_sign_check(const Grid& grid, const ScalarField& u,
                                       double tolerance = 1e-8);

struct IdentityCheck {
    std::string name;
    long samples = 0;
    long violations = 0;
    double max_violation = 0.0;

    [[nodiscard]] bool passed() const { return violations == 0; }
};

struct HToolkitReport {
    HFunction hf;
    std::vector<IdentityCheck> checks;
    [[nodiscard]] bool passed() const;
};

/// Samples the h-function inequalities on a log-spaced grid t in [0, 1e6].
HToolkitReport h_toolkit(double delta, int samples = 2001);

struct InequalityReport {
    std::vector<IdentityCheck> checks;
    double slack = 1e-12;
    [[nodiscard]] bool passed() const;
};

/// Random sampling of the pointwise algebraic inequalities used by the gradient estimates.
InequalityReport pointwise_inequality_suite(std::uint64_t seed, long samples = 100000,
                                            double slack = 1e-12);

/// Exponents of the maximal-regularity argument.
struct MaxRegParams {
    int d = 3;
    double gamma = 2.0;
    double q = 3.0;
    double delta = 0.1;
    double p_formula = 0.0;   ///< (2/d) d(gamma-1)/gamma + ((d-2)/d) q
    double p = 0.0;           ///< exponent used (replaced by a value in (max(2,p), q) when p <= 2)
    bool substituted = false;
    double beta = 0.0;
    double eta = 0.0;
    double Phi = 0.0;
    double c_gamma = 0.0;
    double bo1_residual = 0.0;
    double bo2_residual = 0.0; ///< (beta+1) d/(d-2) - gamma q/(1+delta); positive after substitution
};

double c_gamma(double gamma);
/// Throws GateError when q <= max{d(gamma-1)/gamma, 2}.
MaxRegParams maxreg_params(int d, double gamma, double q, double delta);

struct LevelSetData {
    double k = 0.0;
    std::vector<std::uint8_t> mask;
    ScalarField z_k;
    double volume = 0.0;
    double y_k = 0.0;
    double chebyshev_bound = 0.0;  ///< +inf when k is below the bound's range
    bool chebyshev_holds = true;
};

LevelSetData level_sets(const Grid& grid, const ScalarField& z, double k, const MaxRegParams& params);

struct ContinuityTools {
    int d = 3;
    MaxRegParams params;
    double C = 1.0;
    double y_star = 0.0;
    double phi_star = 0.0;
    std::optional<double> t_star;

    [[nodiscard]] double phi(double y) const;
    [[nodiscard]] double zeta(double t) const;
    /// Roots y-(zb) <= y* <= y+(zb) of phi(y) = zb; throws when zb >= phi*.
    [[nodiscard]] std::pair<double, double> roots(double zeta_bar) const;
    /// Threshold above which the level-set volumes fall below t*.
    [[nodiscard]] double k_star(double grad_l1) const;
};

ContinuityTools continuity_tools(int d, double q, double gamma, double delta, double C);

}  // namespace hjlab
