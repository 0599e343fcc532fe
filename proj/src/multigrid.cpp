#include "hjlab/multigrid.hpp"

#include <array>
#include <utility>

namespace hjlab {

namespace {

constexpr Index coarsest_size = 4000;

struct LevelShape {
    std::array<int, 3> n{1, 1, 1};
    std::array<bool, 3> periodic{false, false, false};
    int dim = 1;

    [[nodiscard]] Index size() const {
        return static_cast<Index>(n[0]) * n[1] * n[2];
    }
};

bool coarsenable(const LevelShape& s, int a) {
    if (s.periodic[a]) {
        return s.n[a] % 2 == 0 && s.n[a] >= 8;
    }
    return s.n[a] % 2 == 1 && s.n[a] >= 5;
}

/// Coarse entries (index, weight) interpolating fine index i along one axis.
std::vector<std::pair<int, double>> stencil_1d(int i, int nc, bool periodic, bool coarsened) {
    if (!coarsened) {
        return {{i, 1.0}};
    }
    if (i % 2 == 0) {
        return {{i / 2, 1.0}};
    }
    const int lo = (i - 1) / 2;
    const int hi = periodic ? (lo + 1) % nc : lo + 1;
    return {{lo, 0.5}, {hi, 0.5}};
}

}  // namespace

void GridMultigrid::build(Matrix a) {
    ops_.clear();
    prolong_.clear();
    inv_diag_.clear();
    info_ = Eigen::Success;

    LevelShape shape;
    if (grid_ && grid_->size() == a.rows()) {
        shape.n = grid_->n;
        shape.periodic = grid_->periodic;
        shape.dim = grid_->dim;
    } else {
        shape.n = {static_cast<int>(a.rows()), 1, 1};
    }
    ops_.push_back(std::move(a));

    while (ops_.back().rows() > coarsest_size) {
        std::array<bool, 3> coarsen{false, false, false};
        bool any = false;
        for (int ax = 0; ax < shape.dim; ++ax) {
            coarsen[ax] = grid_ != nullptr && coarsenable(shape, ax);
            any = any || coarsen[ax];
        }
        if (!any) {
            break;
        }
        LevelShape cs = shape;
        for (int ax = 0; ax < shape.dim; ++ax) {
            if (coarsen[ax]) {
                cs.n[ax] = shape.periodic[ax] ? shape.n[ax] / 2 : (shape.n[ax] + 1) / 2;
            }
        }
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<std::size_t>(shape.size()) * 8);
        for (int k = 0; k < shape.n[2]; ++k) {
            const auto sk = stencil_1d(k, cs.n[2], shape.periodic[2], coarsen[2]);
            for (int j = 0; j < shape.n[1]; ++j) {
                const auto sj = stencil_1d(j, cs.n[1], shape.periodic[1], coarsen[1]);
                for (int i = 0; i < shape.n[0]; ++i) {
                    const auto si = stencil_1d(i, cs.n[0], shape.periodic[0], coarsen[0]);
                    const Index row = i + static_cast<Index>(shape.n[0]) * (j + static_cast<Index>(shape.n[1]) * k);
                    for (const auto& [ck, wk] : sk) {
                        for (const auto& [cj, wj] : sj) {
                            for (const auto& [ci, wi] : si) {
                                const Index col = ci + static_cast<Index>(cs.n[0]) *
                                                           (cj + static_cast<Index>(cs.n[1]) * ck);
                                trips.emplace_back(row, col, wi * wj * wk);
                            }
                        }
                    }
                }
            }
        }
        Matrix p(shape.size(), cs.size());
        p.setFromTriplets(trips.begin(), trips.end());
        Matrix pt = p.transpose();
        Matrix ac = pt * ops_.back() * p;
        ac.prune(0.0);
        ac.makeCompressed();
        prolong_.push_back(std::move(p));
        ops_.push_back(std::move(ac));
        shape = cs;
    }

    for (std::size_t l = 0; l + 1 < ops_.size(); ++l) {
        Eigen::VectorXd d = ops_[l].diagonal();
        for (Index i = 0; i < d.size(); ++i) {
            if (d[i] == 0.0) {
                info_ = Eigen::NumericalIssue;
                return;
            }
        }
        inv_diag_.push_back(d.cwiseInverse());
    }
    Eigen::SparseMatrix<double> coarse = ops_.back();
    coarse_.analyzePattern(coarse);
    coarse_.factorize(coarse);
    if (coarse_.info() != Eigen::Success) {
        info_ = Eigen::NumericalIssue;
    }
}

void GridMultigrid::smooth(int level, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                           bool forward) const {
    const Matrix& a = ops_[level];
    const Eigen::VectorXd& inv = inv_diag_[level];
    const Index n = a.rows();
    for (int s = 0; s < sweeps_; ++s) {
        for (Index t = 0; t < n; ++t) {
            const Index i = forward ? t : n - 1 - t;
            double acc = b[i];
            double diag = 0.0;
            for (Matrix::InnerIterator it(a, i); it; ++it) {
                if (it.col() == i) {
                    diag = it.value();
                } else {
                    acc -= it.value() * x[it.col()];
                }
            }
            x[i] = diag != 0.0 ? acc / diag : acc * inv[i];
        }
    }
}

void GridMultigrid::cycle(int level, const Eigen::VectorXd& b, Eigen::VectorXd& x) const {
    if (level + 1 == static_cast<int>(ops_.size())) {
        x = coarse_.solve(b);
        return;
    }
    smooth(level, b, x, true);
    const Eigen::VectorXd r = b - ops_[level] * x;
    const Eigen::VectorXd rc = prolong_[level].transpose() * r;
    Eigen::VectorXd xc = Eigen::VectorXd::Zero(rc.size());
    cycle(level + 1, rc, xc);
    x += prolong_[level] * xc;
    smooth(level, b, x, false);
}

Eigen::VectorXd GridMultigrid::solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    if (info_ != Eigen::Success || ops_.empty()) {
        return b;
    }
    cycle(0, b, x);
    return x;
}

}  // namespace hjlab
