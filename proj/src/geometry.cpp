#include "hjlab/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace hjlab {

std::string to_string(DomainKind kind) {
    switch (kind) {
    case DomainKind::box: return "box";
    case DomainKind::torus: return "torus";
    case DomainKind::conformal_torus: return "conformal_torus";
    case DomainKind::disc: return "disc";
    }
    return "unknown";
}

std::string to_string(MetricKind kind) {
    return kind == MetricKind::euclidean ? "euclidean" : "conformal";
}

ConformalFactor cosine_factor(double amplitude, int axis, double freq, double offset,
                              double period) {
    std::ostringstream os;
    os << offset << " + " << amplitude << "*cos(2*pi*" << freq << "*x" << axis + 1 << ")";
    return {[=](const Eigen::Vector3d& x) {
                return offset + amplitude * std::cos(2.0 * std::numbers::pi * freq * x[axis] / period);
            },
            os.str()};
}

std::optional<Index> Grid::neighbor(Index node, int axis, int offset) const noexcept {
    auto mi = multi_index(node);
    int c = mi[axis] + offset;
    if (periodic[axis]) {
        c = ((c % n[axis]) + n[axis]) % n[axis];
    } else if (c < 0 || c >= n[axis]) {
        return std::nullopt;
    }
    mi[axis] = c;
    return index(mi[0], mi[1], mi[2]);
}

std::string Grid::resolution_string() const {
    std::ostringstream os;
    for (int a = 0; a < dim; ++a) {
        os << (a ? "x" : "") << n[a];
    }
    return os.str();
}

namespace {

void validate(const DomainSpec& spec, const MetricSpec& metric) {
    const int axes = spec.kind == DomainKind::disc ? 2 : spec.dim;
    if (spec.dim < 2 || spec.dim > 3) {
        throw Error("build_grid: dimension must be 2 or 3, got " + std::to_string(spec.dim));
    }
    if (spec.kind == DomainKind::disc && spec.dim != 2) {
        throw Error("build_grid: the polar disc is two-dimensional");
    }
    for (int a = 0; a < axes; ++a) {
        if (spec.resolution[a] < 8) {
            throw Error("build_grid: resolution too small on axis " + std::to_string(a) +
                        " (need >= 8, got " + std::to_string(spec.resolution[a]) + ")");
        }
        if (spec.kind != DomainKind::disc && !(spec.extents[a] > 0.0)) {
            throw Error("build_grid: extents must be positive");
        }
    }
    if (spec.kind == DomainKind::disc && !(spec.radius > 0.0)) {
        throw Error("build_grid: disc radius must be positive");
    }
    const bool conformal = metric.kind == MetricKind::conformal;
    if (conformal && spec.kind == DomainKind::disc) {
        throw Error("build_grid: conformal metric on the disc is unsupported");
    }
    if (conformal != (spec.kind == DomainKind::conformal_torus)) {
        throw Error("build_grid: conformal metrics are paired with kind conformal_torus only");
    }
    if (conformal && !metric.phi.eval) {
        throw Error("build_grid: conformal metric without a conformal factor");
    }
}

/// Trapezoid weight of coordinate index i on an axis.
double axis_weight(int i, int n, double h, bool periodic) {
    if (periodic) {
        return h;
    }
    return (i == 0 || i == n - 1) ? 0.5 * h : h;
}

void fill_conformal(Grid& g) {
    const Index N = g.size();
    const int d = g.dim;
    g.phi.resize(N);
    for (Index k = 0; k < N; ++k) {
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        x.head(d) = g.coords.row(k).transpose();
        g.phi[k] = g.phi_function.eval(x);
    }
    g.dphi.setZero(N, d);
    g.hess_phi.setZero(N, sym_size(d));
    for (Index k = 0; k < N; ++k) {
        for (int a = 0; a < d; ++a) {
            const Index p = *g.neighbor(k, a, 1);
            const Index m = *g.neighbor(k, a, -1);
            g.dphi(k, a) = (g.phi[p] - g.phi[m]) / (2.0 * g.h[a]);
            g.hess_phi(k, sym_index(a, a, d)) = (g.phi[p] - 2.0 * g.phi[k] + g.phi[m]) / (g.h[a] * g.h[a]);
        }
    }
    for (Index k = 0; k < N; ++k) {
        for (int a = 0; a < d; ++a) {
            for (int b = a + 1; b < d; ++b) {
                auto at = [&](int oa, int ob) {
                    return g.phi[*g.neighbor(*g.neighbor(k, a, oa), b, ob)];
                };
                g.hess_phi(k, sym_index(a, b, d)) =
                    (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * g.h[a] * g.h[b]);
            }
        }
    }
    // weights carry e^{d phi}; normals become unit in g
    for (Index k = 0; k < N; ++k) {
        g.weights[k] *= std::exp(d * g.phi[k]);
    }
}

}  // namespace

Grid build_grid(const DomainSpec& spec, const MetricSpec& metric) {
    validate(spec, metric);
    Grid g;
    g.kind = spec.kind;
    g.metric = metric.kind;
    g.dim = spec.dim;
    g.phi_function = metric.phi;

    if (spec.kind == DomainKind::disc) {
        const int nr = spec.resolution[0];
        const int nt = spec.resolution[1];
        const double dr = spec.radius / nr;
        const double dt = 2.0 * std::numbers::pi / nt;
        g.n = {nr, nt, 1};
        g.h = {dr, dt, 1.0};
        g.extent = {spec.radius - dr, 2.0 * std::numbers::pi, 1.0};
        g.periodic = {false, true, false};
        g.radius = spec.radius;
        const Index N = static_cast<Index>(nr) * nt;
        g.coords.resize(N, 2);
        g.weights.resize(N);
        g.boundary.assign(N, 0);
        g.face_interior.assign(N, 0);
        g.normals.setZero(N, 2);
        for (int j = 0; j < nt; ++j) {
            for (int i = 0; i < nr; ++i) {
                const Index k = g.index(i, j);
                const double r = (i + 1) * dr;
                const double t = j * dt;
                g.coords(k, 0) = r * std::cos(t);
                g.coords(k, 1) = r * std::sin(t);
                g.weights[k] = axis_weight(i, nr, dr, false) * dt * r;
                if (i == nr - 1) {
                    g.boundary[k] = 1;
                    g.face_interior[k] = 1;
                    g.normals(k, 0) = std::cos(t);
                    g.normals(k, 1) = std::sin(t);
                }
            }
        }
        g.phi.setZero(N);
        g.dphi.setZero(N, 2);
        g.hess_phi.setZero(N, sym_size(2));
        return g;
    }

    const bool periodic = spec.kind != DomainKind::box;
    Index N = 1;
    for (int a = 0; a < spec.dim; ++a) {
        g.n[a] = spec.resolution[a];
        g.extent[a] = spec.extents[a];
        g.periodic[a] = periodic;
        g.h[a] = periodic ? spec.extents[a] / g.n[a] : spec.extents[a] / (g.n[a] - 1);
        N *= g.n[a];
    }
    g.coords.resize(N, spec.dim);
    g.weights.resize(N);
    g.boundary.assign(N, 0);
    g.face_interior.assign(N, 0);
    g.normals.setZero(N, spec.dim);
    for (Index k = 0; k < N; ++k) {
        const auto mi = g.multi_index(k);
        double w = 1.0;
        int faces = 0;
        Eigen::VectorXd nrm = Eigen::VectorXd::Zero(spec.dim);
        for (int a = 0; a < spec.dim; ++a) {
            g.coords(k, a) = mi[a] * g.h[a];
            w *= axis_weight(mi[a], g.n[a], g.h[a], periodic);
            if (!periodic && (mi[a] == 0 || mi[a] == g.n[a] - 1)) {
                ++faces;
                nrm[a] = mi[a] == 0 ? -1.0 : 1.0;
            }
        }
        g.weights[k] = w;
        if (faces > 0) {
            g.boundary[k] = 1;
            g.face_interior[k] = faces == 1 ? 1 : 0;
            g.normals.row(k) = nrm.normalized().transpose();
        }
    }
    if (metric.kind == MetricKind::conformal) {
        fill_conformal(g);
        for (Index k = 0; k < N; ++k) {
            g.normals.row(k) *= std::exp(-g.phi[k]);
        }
    } else {
        g.phi.setZero(N);
        g.dphi.setZero(N, spec.dim);
        g.hess_phi.setZero(N, sym_size(spec.dim));
    }
    return g;
}

Eigen::MatrixXd ricci_tensor(const Grid& grid) {
    if (grid.kind == DomainKind::disc) {
        throw Error("ricci_tensor: the disc is flat; use the Cartesian domains");
    }
    const int d = grid.dim;
    const Index N = grid.size();
    Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(N, sym_size(d));
    if (!grid.is_conformal()) {
        return ric;
    }
    for (Index k = 0; k < N; ++k) {
        double lap = 0.0;
        double grad2 = 0.0;
        for (int a = 0; a < d; ++a) {
            lap += grid.hess_phi(k, sym_index(a, a, d));
            grad2 += grid.dphi(k, a) * grid.dphi(k, a);
        }
        for (int a = 0; a < d; ++a) {
            for (int b = a; b < d; ++b) {
                const double hess = grid.hess_phi(k, sym_index(a, b, d));
                double v = -(d - 2) * (hess - grid.dphi(k, a) * grid.dphi(k, b));
                if (a == b) {
                    v -= lap + (d - 2) * grad2;
                }
                ric(k, sym_index(a, b, d)) = v;
            }
        }
    }
    return ric;
}

double ricci_lower_bound(const MetricSpec& metric, const Grid& grid) {
    if (metric.kind == MetricKind::euclidean || !grid.is_conformal()) {
        return 0.0;
    }
    const int d = grid.dim;
    const Eigen::MatrixXd ric = ricci_tensor(grid);
    const double phi_mean = grid.phi.mean();
    double min_eig = 0.0;
    Eigen::MatrixXd m(d, d);
    for (Index k = 0; k < grid.size(); ++k) {
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
                m(a, b) = ric(k, sym_index(a, b, d));
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
        const double lo = es.eigenvalues()[0] * std::exp(-2.0 * (grid.phi[k] - phi_mean));
        min_eig = std::min(min_eig, lo);
    }
    return std::max(0.0, -min_eig);
}

SecondFundamentalForm second_fundamental_form(const DomainSpec& spec, const Grid& grid) {
    if (!spec.has_boundary() || grid.kind != spec.kind) {
        throw Error("second_fundamental_form: domain has no boundary");
    }
    SecondFundamentalForm out;
    out.min_eigenvalue = std::numeric_limits<double>::infinity();
    const int tdim = grid.dim - 1;
    for (Index k = 0; k < grid.size(); ++k) {
        if (!grid.face_interior[k]) {
            continue;
        }
        Eigen::MatrixXd ii = Eigen::MatrixXd::Zero(tdim, tdim);
        if (spec.kind == DomainKind::disc) {
            // circle of radius R: D_T T = -(1/R) e_r for the unit tangent T
            ii(0, 0) = 1.0 / grid.radius;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ii, Eigen::EigenvaluesOnly);
        out.min_eigenvalue = std::min(out.min_eigenvalue, es.eigenvalues()[0]);
        out.nodes.push_back(k);
        out.values.push_back(std::move(ii));
    }
    out.nonnegative = out.min_eigenvalue >= -1e-12;
    return out;
}

void write_grid_csv(const Grid& grid, const std::string& path) {
    std::ofstream os(path);
    if (!os) {
        throw Error("write_grid_csv: cannot open " + path);
    }
    os << "node";
    for (int a = 0; a < grid.coords.cols(); ++a) {
        os << ",x" << a + 1;
    }
    os << ",weight,boundary\n";
    os.precision(17);
    for (Index k = 0; k < grid.size(); ++k) {
        os << k;
        for (int a = 0; a < grid.coords.cols(); ++a) {
            os << ',' << grid.coords(k, a);
        }
        os << ',' << grid.weights[k] << ',' << int(grid.boundary[k]) << '\n';
    }
}

}  // namespace hjlab
