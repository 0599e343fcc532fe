#include "hjlab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace hjlab {

namespace {

void require_cartesian(const Grid& grid, const char* op) {
    if (grid.kind == DomainKind::disc) {
        throw Error(std::string(op) + ": Cartesian calculus is not available on the polar disc");
    }
}

void require_size(const Grid& grid, Index rows, const char* op) {
    if (rows != grid.size()) {
        throw Error(std::string(op) + ": field length " + std::to_string(rows) +
                    " does not match grid size " + std::to_string(grid.size()));
    }
}

Index stride(const Grid& grid, int axis) {
    Index s = 1;
    for (int a = 0; a < axis; ++a) {
        s *= grid.n[a];
    }
    return s;
}

ScalarField metric_scale(const Grid& grid, double power) {
    if (!grid.is_conformal()) {
        return ScalarField::Ones(grid.size());
    }
    return (power * grid.phi.array()).exp().matrix();
}

double lq_of_magnitudes(const Grid& grid, const ScalarField& mag, double q) {
    if (q == lq_infinity) {
        return mag.size() ? mag.cwiseAbs().maxCoeff() : 0.0;
    }
    double acc = 0.0;
    for (Index k = 0; k < mag.size(); ++k) {
        acc += grid.weights[k] * std::pow(std::abs(mag[k]), q);
    }
    return std::pow(acc, 1.0 / q);
}

NormReport make_report(const Grid& grid, const ScalarField& mag, double q) {
    if (!(q >= 1.0)) {
        throw Error("lq_norm: exponent must satisfy q >= 1 (got " + std::to_string(q) + ")");
    }
    return {q, lq_of_magnitudes(grid, mag, q), grid.resolution_string(), grid.metric};
}

}  // namespace

ScalarField sample(const Grid& grid, const std::function<double(const Eigen::Vector3d&)>& fn) {
    ScalarField out(grid.size());
    const Index d = grid.coords.cols();
    for (Index k = 0; k < grid.size(); ++k) {
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        x.head(d) = grid.coords.row(k).transpose();
        out[k] = fn(x);
    }
    return out;
}

ScalarField axis_derivative(const Grid& grid, const ScalarField& u, int axis) {
    require_size(grid, u.size(), "axis_derivative");
    const Index N = grid.size();
    const Index s = stride(grid, axis);
    const int n = grid.n[axis];
    const double h = grid.h[axis];
    const double inv2h = 0.5 / h;
    ScalarField out(N);
    for (Index k = 0; k < N; ++k) {
        const int i = static_cast<int>((k / s) % n);
        if (grid.periodic[axis]) {
            const Index kp = i == n - 1 ? k - (n - 1) * s : k + s;
            const Index km = i == 0 ? k + (n - 1) * s : k - s;
            out[k] = (u[kp] - u[km]) * inv2h;
        } else if (i == 0) {
            out[k] = (-3.0 * u[k] + 4.0 * u[k + s] - u[k + 2 * s]) * inv2h;
        } else if (i == n - 1) {
            out[k] = (3.0 * u[k] - 4.0 * u[k - s] + u[k - 2 * s]) * inv2h;
        } else {
            out[k] = (u[k + s] - u[k - s]) * inv2h;
        }
    }
    return out;
}

Eigen::MatrixXd differential(const Grid& grid, const ScalarField& u) {
    require_cartesian(grid, "differential");
    Eigen::MatrixXd du(grid.size(), grid.dim);
    for (int a = 0; a < grid.dim; ++a) {
        du.col(a) = axis_derivative(grid, u, a);
    }
    return du;
}

VectorField gradient(const Grid& grid, const ScalarField& u) {
    VectorField g{differential(grid, u)};
    if (grid.is_conformal()) {
        g.data.array().colwise() *= metric_scale(grid, -2.0).array();
    }
    return g;
}

SymTensorField hessian(const Grid& grid, const ScalarField& u) {
    const int d = grid.dim;
    const Eigen::MatrixXd du = differential(grid, u);
    SymTensorField hs{Eigen::MatrixXd(grid.size(), sym_size(d))};
    for (int a = 0; a < d; ++a) {
        const ScalarField col = du.col(a);
        for (int b = a; b < d; ++b) {
            hs.data.col(sym_index(a, b, d)) = axis_derivative(grid, col, b);
        }
    }
    // symmetrise the mixed entries: D_a D_b and D_b D_a differ only at box faces
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            const ScalarField col = du.col(b);
            hs.data.col(sym_index(a, b, d)) =
                0.5 * (hs.data.col(sym_index(a, b, d)) + axis_derivative(grid, col, a));
        }
    }
    if (grid.is_conformal()) {
        for (Index k = 0; k < grid.size(); ++k) {
            const double dot = grid.dphi.row(k).dot(du.row(k));
            for (int a = 0; a < d; ++a) {
                for (int b = a; b < d; ++b) {
                    double corr = -grid.dphi(k, a) * du(k, b) - du(k, a) * grid.dphi(k, b);
                    if (a == b) {
                        corr += dot;
                    }
                    hs.data(k, sym_index(a, b, d)) += corr;
                }
            }
        }
    }
    return hs;
}

ScalarField laplace_beltrami(const Grid& grid, const ScalarField& u) {
    const SymTensorField hs = hessian(grid, u);
    const int d = grid.dim;
    ScalarField lap = ScalarField::Zero(grid.size());
    for (int a = 0; a < d; ++a) {
        lap += hs.data.col(sym_index(a, a, d));
    }
    if (grid.is_conformal()) {
        lap.array() *= metric_scale(grid, -2.0).array();
    }
    return lap;
}

ScalarField divergence(const Grid& grid, const VectorField& x) {
    require_cartesian(grid, "divergence");
    require_size(grid, x.data.rows(), "divergence");
    const ScalarField wd = metric_scale(grid, grid.dim);
    ScalarField out = ScalarField::Zero(grid.size());
    for (int a = 0; a < grid.dim; ++a) {
        const ScalarField flux = wd.cwiseProduct(x.data.col(a));
        out += axis_derivative(grid, flux, a);
    }
    return out.cwiseQuotient(wd);
}

ScalarField inner(const Grid& grid, const VectorField& x, const VectorField& y) {
    ScalarField out = x.data.cwiseProduct(y.data).rowwise().sum();
    if (grid.is_conformal()) {
        out.array() *= metric_scale(grid, 2.0).array();
    }
    return out;
}

ScalarField pointwise_norm(const Grid& grid, const VectorField& x) {
    ScalarField out = x.data.rowwise().norm();
    if (grid.is_conformal()) {
        out.array() *= metric_scale(grid, 1.0).array();
    }
    return out;
}

ScalarField pointwise_norm(const Grid& grid, const SymTensorField& a) {
    const int d = grid.dim;
    ScalarField out = ScalarField::Zero(a.data.rows());
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            const double mult = i == j ? 1.0 : 2.0;
            out.array() += mult * a.data.col(sym_index(i, j, d)).array().square();
        }
    }
    out = out.cwiseSqrt();
    if (grid.is_conformal()) {
        out.array() *= metric_scale(grid, -2.0).array();
    }
    return out;
}

VectorField apply(const Grid& grid, const SymTensorField& a, const VectorField& x) {
    const int d = grid.dim;
    VectorField out{Eigen::MatrixXd::Zero(x.data.rows(), d)};
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            out.data.col(i).array() += a.data.col(sym_index(i, j, d)).array() * x.data.col(j).array();
        }
    }
    if (grid.is_conformal()) {
        out.data.array().colwise() *= metric_scale(grid, -2.0).array();
    }
    return out;
}

ScalarField bilinear(const Grid& grid, const SymTensorField& a, const VectorField& x,
                     const VectorField& y) {
    const int d = grid.dim;
    ScalarField out = ScalarField::Zero(x.data.rows());
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            out.array() += a.data.col(sym_index(i, j, d)).array() * x.data.col(i).array() *
                           y.data.col(j).array();
        }
    }
    return out;
}

double integrate(const Grid& grid, const ScalarField& u) {
    require_size(grid, u.size(), "integrate");
    return grid.weights.dot(u);
}

NormReport lq_norm(const Grid& grid, const ScalarField& u, double q) {
    require_size(grid, u.size(), "lq_norm");
    return make_report(grid, u.cwiseAbs(), q);
}

NormReport lq_norm(const Grid& grid, const VectorField& x, double q) {
    require_size(grid, x.data.rows(), "lq_norm");
    return make_report(grid, pointwise_norm(grid, x), q);
}

NormReport lq_norm(const Grid& grid, const SymTensorField& a, double q) {
    require_size(grid, a.data.rows(), "lq_norm");
    return make_report(grid, pointwise_norm(grid, a), q);
}

void write_field_csv(const Grid& grid, const std::string& path,
                     const std::vector<std::string>& names, const Eigen::MatrixXd& columns) {
    if (static_cast<Index>(names.size()) != columns.cols()) {
        throw Error("write_field_csv: " + std::to_string(names.size()) + " names for " +
                    std::to_string(columns.cols()) + " columns");
    }
    require_size(grid, columns.rows(), "write_field_csv");
    std::ofstream os(path);
    if (!os) {
        throw Error("write_field_csv: cannot open " + path);
    }
    os << "node";
    for (Index a = 0; a < grid.coords.cols(); ++a) {
        os << ",x" << a + 1;
    }
    for (const auto& name : names) {
        os << ',' << name;
    }
    os << '\n';
    os.precision(17);
    for (Index k = 0; k < grid.size(); ++k) {
        os << k;
        for (Index a = 0; a < grid.coords.cols(); ++a) {
            os << ',' << grid.coords(k, a);
        }
        for (Index c = 0; c < columns.cols(); ++c) {
            os << ',' << columns(k, c);
        }
        os << '\n';
    }
}

namespace {
constexpr char field_magic[8] = {'H', 'J', 'L', 'A', 'B', 'F', 'L', 'D'};
}

void write_field_binary(const std::string& path, const Eigen::MatrixXd& columns) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw Error("write_field_binary: cannot open " + path);
    }
    const auto rows = static_cast<std::uint32_t>(columns.rows());
    const auto cols = static_cast<std::uint32_t>(columns.cols());
    os.write(field_magic, 8);
    os.write(reinterpret_cast<const char*>(&rows), 4);
    os.write(reinterpret_cast<const char*>(&cols), 4);
    os.write(reinterpret_cast<const char*>(columns.data()),
             static_cast<std::streamsize>(sizeof(double) * columns.size()));
}

Eigen::MatrixXd read_field_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    char magic[8];
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    if (!is.read(magic, 8) || std::memcmp(magic, field_magic, 8) != 0) {
        throw Error("read_field_binary: " + path + " is not a field dump");
    }
    is.read(reinterpret_cast<char*>(&rows), 4);
    is.read(reinterpret_cast<char*>(&cols), 4);
    Eigen::MatrixXd out(rows, cols);
    if (!is.read(reinterpret_cast<char*>(out.data()),
                 static_cast<std::streamsize>(sizeof(double) * out.size()))) {
        throw Error("read_field_binary: truncated payload in " + path);
    }
    return out;
}

}  // namespace hjlab
