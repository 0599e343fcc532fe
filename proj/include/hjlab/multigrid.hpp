#pragma once

#include "hjlab/geometry.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <vector>

namespace hjlab {

/// Galerkin V-cycle on a structured grid, usable as an Eigen iterative-solver preconditioner.
///
/// Axes are halved by linear interpolation while the node count permits (odd counts on
/// box axes, even counts on periodic axes); the coarsest level is factorised directly.
class GridMultigrid {
public:
    using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    GridMultigrid() = default;

    void set_grid(const Grid* grid) { grid_ = grid; }
    void set_sweeps(int sweeps) { sweeps_ = sweeps; }

    template <typename MatrixType>
    GridMultigrid& analyzePattern(const MatrixType&) { return *this; }
    template <typename MatrixType>
    GridMultigrid& factorize(const MatrixType& a) { return compute(a); }
    template <typename MatrixType>
    GridMultigrid& compute(const MatrixType& a) {
        build(Matrix(a));
        return *this;
    }

    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    [[nodiscard]] Eigen::ComputationInfo info() const { return info_; }
    [[nodiscard]] int levels() const { return static_cast<int>(ops_.size()); }

private:
    void build(Matrix a);
    void smooth(int level, const Eigen::VectorXd& b, Eigen::VectorXd& x, bool forward) const;
    void cycle(int level, const Eigen::VectorXd& b, Eigen::VectorXd& x) const;

    const Grid* grid_ = nullptr;
    int sweeps_ = 2;
    std::vector<Matrix> ops_;
    std::vector<Matrix> prolong_;  ///< prolong_[l] maps level l+1 to level l
    std::vector<Eigen::VectorXd> inv_diag_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> coarse_;
    Eigen::ComputationInfo info_ = Eigen::Success;
};

}  // namespace hjlab
