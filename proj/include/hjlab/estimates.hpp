#pragma once

#include "hjlab/bernstein.hpp"
#include "hjlab/hjb_solver.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace hjlab {

struct ThmOneExponents {
    int d = 3;
    double p = 1.0;
    double r = 0.0;       ///< 2(p+1)d/(d-2)
    double beta_p = 0.0;  ///< (p+1)d/(d+2p)
    double q = 0.0;       ///< 2 beta_p
};

ThmOneExponents thm1_exponents(int d, double p);

using ScalarFunction = std::function<double(const Eigen::Vector3d&)>;
using VectorFunction = std::function<Eigen::Vector3d(const Eigen::Vector3d&)>;

/// Constants the estimates may depend on, recorded with every sweep.
struct GateConstants {
    double kappa = 0.0;
    double rho = 0.0;
    double sigma_hat = 0.0;
    double theta = 0.0;
    double s = 0.0;
    double K = 0.0;
};

/// kappa and rho from the grid, sigma_hat from a coarse (at most 12 per axis) Sobolev ascent,
/// theta = ||B||_{L^s} when a drift is given. K is left for the sweep to fill.
GateConstants estimate_gate_constants(const DomainSpec& domain, const MetricSpec& metric,
                                      const VectorField& drift, double drift_exponent,
                                      bool estimate_sobolev, std::uint64_t seed);

struct SweepSpec {
    DomainSpec domain;
    MetricSpec metric;
    double gamma = 3.0;
    ScalarFunction f0;
    std::string f0_name;
    VectorFunction drift;        ///< empty means B = 0
    double drift_exponent = 0.0; ///< s of the drift integrability bound
    std::vector<double> amplitudes;
    double r = 2.0;              ///< gradient exponent (first theorem)
    double q = 2.0;              ///< source exponent
    double delta = 0.1;          ///< second theorem bookkeeping
    SolverConfig solver;
    bool estimate_sobolev = true;
    std::uint64_t seed = 1;
};

struct SweepRow {
    double t = 0.0;
    double ratio = 0.0;
    double numerator = 0.0;
    double f_norm = 0.0;
    double grad_l1 = 0.0;
    double lambda = 0.0;
    int iterations = 0;
    int continuation_steps = 0;
    bool converged = false;
};

struct ScalingReport {
    std::string kind;
    std::vector<SweepRow> rows;
    double slope = 0.0;
    double fit_lo = 0.0;
    double fit_hi = 0.0;
    double max_ratio = 0.0;
    std::optional<double> ratio_at_one;
    bool complete = false;
    std::string message;
    GateConstants gates;
    std::optional<MaxRegParams> maxreg;
};

/// Least-squares slope of log(ratio) against log(t) over t in [t_max/10, t_max].
double top_decade_slope(const std::vector<SweepRow>& rows, double* lo = nullptr, double* hi = nullptr);

/// ratio_t = ||grad u_t||_{L^r} / (1 + ||f_t||_{L^q}) with f_t = t f0.
ScalingReport thm1_sweep(const SweepSpec& spec);

/// M_t = (||Lap u_t||_q + || |grad u_t|^gamma ||_q) / (1 + ||f_t||_q); requires B = 0.
ScalingReport thm2_sweep(const SweepSpec& spec);

/// Throws GateError unless q > max{d(gamma-1)/gamma, 2}.
void thm2_gate(int d, double gamma, double q);

struct SobolevStart {
    double initial = 0.0;
    double final = 0.0;
};

struct SobolevEstimate {
    double sigma_hat = 0.0;
    double exponent = 0.0;  ///< 2d/(d-2)
    std::vector<SobolevStart> starts;
};

/// R(u) = ||u||_{2d/(d-2)} / (||grad u||_2 + ||u||_2).
double sobolev_quotient(const HjbOperators& ops, const ScalarField& u);

/// Best R over normalised gradient ascent from the constant and random smooth starts.
SobolevEstimate sobolev_constant_estimate(std::shared_ptr<const Grid> grid, std::uint64_t seed = 1,
                                          int starts = 20, int iterations = 150);

/// Random smooth field: a few low Fourier modes (cosines on boxes, so Neumann-compatible).
ScalarField random_band_limited(const Grid& grid, std::mt19937_64& rng, int max_mode = 3,
                                int terms = 6);

/// max over samples of ||D^2 u||_p / ||Lap u||_p, skipping samples with vanishing Laplacian.
double cz_ratio(const Grid& grid, const std::vector<ScalarField>& samples, double p);

}  // namespace hjlab
