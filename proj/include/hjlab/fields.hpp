#pragma once

#include "hjlab/geometry.hpp"

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace hjlab {

/// Node values of a scalar function.
using ScalarField = Eigen::VectorXd;

/// Contravariant vector components, one row per node (N x dim).
struct VectorField {
    Eigen::MatrixXd data;
};

/// Covariant symmetric 2-tensor, packed upper triangle per node (N x sym_size(dim)).
struct SymTensorField {
    Eigen::MatrixXd data;
};

inline constexpr double lq_infinity = std::numeric_limits<double>::infinity();

struct NormReport {
    double q = 2.0;
    double value = 0.0;
    std::string resolution;
    MetricKind metric = MetricKind::euclidean;
};

/// Evaluates fn at every node (coordinates zero-padded to three components).
ScalarField sample(const Grid& grid, const std::function<double(const Eigen::Vector3d&)>& fn);

/// Centred difference along one index axis; second-order one-sided on non-periodic faces.
/// On the polar disc the axes are r and theta.
ScalarField axis_derivative(const Grid& grid, const ScalarField& u, int axis);

/// Euclidean differential (du)_a = D_a u, N x dim.
Eigen::MatrixXd differential(const Grid& grid, const ScalarField& u);

VectorField gradient(const Grid& grid, const ScalarField& u);

/// Covariant Hessian; pure and mixed entries are compositions D_a D_b.
SymTensorField hessian(const Grid& grid, const ScalarField& u);

/// Metric trace of the covariant Hessian.
ScalarField laplace_beltrami(const Grid& grid, const ScalarField& u);

/// e^{-d phi} sum_a D_a(e^{d phi} X^a): the negative weighted adjoint of `gradient` on tori.
ScalarField divergence(const Grid& grid, const VectorField& x);

/// g(X, Y) node-wise.
ScalarField inner(const Grid& grid, const VectorField& x, const VectorField& y);

/// Pointwise g-norms.
ScalarField pointwise_norm(const Grid& grid, const VectorField& x);
ScalarField pointwise_norm(const Grid& grid, const SymTensorField& a);

/// Contracts a covariant tensor with a vector, A(X)_a = A_ab X^b, and raises the index.
VectorField apply(const Grid& grid, const SymTensorField& a, const VectorField& x);

/// Covariant bilinear form A(X, Y).
ScalarField bilinear(const Grid& grid, const SymTensorField& a, const VectorField& x,
                     const VectorField& y);

/// Quadrature integral of a scalar field.
double integrate(const Grid& grid, const ScalarField& u);

NormReport lq_norm(const Grid& grid, const ScalarField& u, double q);
NormReport lq_norm(const Grid& grid, const VectorField& x, double q);
NormReport lq_norm(const Grid& grid, const SymTensorField& a, double q);

/// CSV with header node, coordinates, then one column per name.
void write_field_csv(const Grid& grid, const std::string& path,
                     const std::vector<std::string>& names, const Eigen::MatrixXd& columns);

/// Raw little-endian dump: 8-byte magic "HJLABFLD", uint32 rows, uint32 cols, doubles column-major.
void write_field_binary(const std::string& path, const Eigen::MatrixXd& columns);
Eigen::MatrixXd read_field_binary(const std::string& path);

}  // namespace hjlab
