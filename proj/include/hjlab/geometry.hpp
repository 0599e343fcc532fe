#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjlab {

/// Base exception for invalid input or unsupported combinations.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A standing assumption was violated; `label()` names it, e.g. "(In1)".
class GateError : public Error {
public:
    GateError(std::string label, const std::string& what)
        : Error(label + " " + what), label_(std::move(label)) {}
    [[nodiscard]] const std::string& label() const noexcept { return label_; }

private:
    std::string label_;
};

using Index = Eigen::Index;

enum class DomainKind { box, torus, conformal_torus, disc };
enum class MetricKind { euclidean, conformal };

std::string to_string(DomainKind kind);
std::string to_string(MetricKind kind);

struct DomainSpec {
    DomainKind kind = DomainKind::torus;
    int dim = 3;
    std::array<double, 3> extents{1.0, 1.0, 1.0};
    /// Nodes per axis. For the disc: {n_r, n_theta}.
    std::array<int, 3> resolution{16, 16, 16};
    double radius = 1.0;

    [[nodiscard]] bool has_boundary() const noexcept {
        return kind == DomainKind::box || kind == DomainKind::disc;
    }
};

/// Conformal factor phi of g = e^{2 phi} * identity, as a smooth periodic function.
struct ConformalFactor {
    std::function<double(const Eigen::Vector3d&)> eval;
    std::string description;
};

/// phi(x) = offset + amplitude * cos(2 pi freq x_axis / L_axis).
ConformalFactor cosine_factor(double amplitude, int axis, double freq = 1.0,
                              double offset = 0.0, double period = 1.0);

struct MetricSpec {
    MetricKind kind = MetricKind::euclidean;
    ConformalFactor phi;

    static MetricSpec euclidean() { return {}; }
    static MetricSpec conformal(ConformalFactor phi) {
        return {MetricKind::conformal, std::move(phi)};
    }
};

/// Constants of the standing assumptions on the domain and data.
struct GeometryBounds {
    double kappa = 0.0;  ///< Ricci lower bound
    double rho = 0.0;    ///< volume bound
    double sigma = 0.0;  ///< Sobolev constant bound
    double theta = 0.0;  ///< drift norm bound
    double s = 0.0;      ///< drift integrability exponent
};

/// Number of packed components of a symmetric d x d matrix.
constexpr int sym_size(int dim) { return dim * (dim + 1) / 2; }

/// Packed position of entry (i, j) of a symmetric matrix, row-major upper triangle.
constexpr int sym_index(int i, int j, int dim) {
    if (i > j) {
        const int t = i;
        i = j;
        j = t;
    }
    return i * dim - i * (i - 1) / 2 + (j - i);
}

/// Structured node grid with quadrature weights realising the Riemannian volume.
///
/// Box: n nodes per axis including both faces, h = L/(n-1).
/// Torus: n nodes per axis, periodic, h = L/n.
/// Disc: polar lattice, axis 0 is r in [dr, R] with dr = R/n_r, axis 1 is theta (periodic).
/// Node index = i0 + n0 * (i1 + n1 * i2).
struct Grid {
    DomainKind kind = DomainKind::torus;
    MetricKind metric = MetricKind::euclidean;
    int dim = 3;
    std::array<int, 3> n{1, 1, 1};
    std::array<double, 3> h{1.0, 1.0, 1.0};
    std::array<double, 3> extent{1.0, 1.0, 1.0};
    std::array<bool, 3> periodic{false, false, false};
    double radius = 0.0;

    /// Cartesian node coordinates, N x dim (for the disc: x, y).
    Eigen::MatrixXd coords;
    Eigen::VectorXd weights;
    /// 1 on boundary nodes.
    std::vector<std::uint8_t> boundary;
    /// 1 on boundary nodes that lie on exactly one face (box) or on the outer circle (disc).
    std::vector<std::uint8_t> face_interior;
    /// Outward unit normal, contravariant, unit in g. Zero off the boundary.
    Eigen::MatrixXd normals;

    /// Conformal factor and its discrete derivatives (zero for Euclidean metrics).
    Eigen::VectorXd phi;
    Eigen::MatrixXd dphi;       ///< N x dim, centred differences
    Eigen::MatrixXd hess_phi;   ///< N x sym_size(dim), compact second differences
    ConformalFactor phi_function;

    [[nodiscard]] Index size() const noexcept { return weights.size(); }
    [[nodiscard]] Index index(int i0, int i1, int i2 = 0) const noexcept {
        return static_cast<Index>(i0) + static_cast<Index>(n[0]) *
               (static_cast<Index>(i1) + static_cast<Index>(n[1]) * i2);
    }
    [[nodiscard]] std::array<int, 3> multi_index(Index node) const noexcept {
        const auto n0 = static_cast<Index>(n[0]);
        const auto n1 = static_cast<Index>(n[1]);
        return {static_cast<int>(node % n0), static_cast<int>((node / n0) % n1),
                static_cast<int>(node / (n0 * n1))};
    }
    /// Neighbour at coordinate offset along an axis; nullopt off a non-periodic edge.
    [[nodiscard]] std::optional<Index> neighbor(Index node, int axis, int offset) const noexcept;

    [[nodiscard]] double volume() const { return weights.sum(); }
    [[nodiscard]] bool is_conformal() const noexcept { return metric == MetricKind::conformal; }
    [[nodiscard]] std::string resolution_string() const;
};

/// Builds the node set, masks, normals, and volume quadrature.
Grid build_grid(const DomainSpec& spec, const MetricSpec& metric = MetricSpec::euclidean());

/// Ricci tensor of g in Euclidean coordinate components, N x sym_size(dim).
Eigen::MatrixXd ricci_tensor(const Grid& grid);

/// kappa = max(0, -min_x lambda_min(Ric relative to g)), with g normalised so that
/// the conformal factor has zero mean.
double ricci_lower_bound(const MetricSpec& metric, const Grid& grid);

struct SecondFundamentalForm {
    /// Boundary nodes at which II is evaluated (face-interior nodes).
    std::vector<Index> nodes;
    /// II at each evaluated node, in an orthonormal tangent frame ((d-1) x (d-1)).
    std::vector<Eigen::MatrixXd> values;
    /// II is non-negative definite everywhere it was evaluated (class O+).
    bool nonnegative = true;
    double min_eigenvalue = 0.0;
};

SecondFundamentalForm second_fundamental_form(const DomainSpec& spec, const Grid& grid);

/// CSV: node, coordinates, weight, boundary flag.
void write_grid_csv(const Grid& grid, const std::string& path);

}  // namespace hjlab
