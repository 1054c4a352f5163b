#include "lossydc/linsolve.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace lossydc {

namespace {

double max_abs_coeff(const Eigen::SparseMatrix<double>& M) {
    double m = 0.0;
    for (int k = 0; k < M.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(M, k); it; ++it)
            m = std::max(m, std::abs(it.value()));
    return m;
}

void check_symmetric(const Eigen::SparseMatrix<double>& M) {
    if (M.rows() != M.cols()) throw DimensionError("matrix is not square");
    Eigen::SparseMatrix<double> D = M - Eigen::SparseMatrix<double>(M.transpose());
    const double scale = std::max(1.0, max_abs_coeff(M));
    if (max_abs_coeff(D) > 1e-12 * scale)
        throw DimensionError("matrix is not symmetric");
}

}  // namespace

struct SpdOperator::Impl {
    Eigen::SparseMatrix<double> M;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;  // AMD ordering
    mutable std::atomic<long> solves{0};
};

SpdOperator SpdOperator::factorize(const Eigen::SparseMatrix<double>& M) {
    check_symmetric(M);
    auto impl = std::make_shared<Impl>();
    impl->M = M;
    impl->M.makeCompressed();
    impl->llt.compute(impl->M);
    if (impl->llt.info() != Eigen::Success)
        throw IndefiniteError("matrix is not positive definite");

    SpdOperator op;
    op.impl_ = std::move(impl);
    op.dim_ = static_cast<int>(M.rows());
    return op;
}

Eigen::VectorXd SpdOperator::solve(const Eigen::VectorXd& b) const {
    if (!impl_) throw Error("solve on an unfactorized operator");
    if (b.size() != dim_) throw DimensionError("right-hand side has wrong size");
    if (!b.allFinite()) throw Error("right-hand side is not finite");

    Eigen::VectorXd x = impl_->llt.solve(b);
    impl_->solves.fetch_add(1, std::memory_order_relaxed);

    const double bound = 1e-10 * std::max(1.0, b.lpNorm<Eigen::Infinity>());
    Eigen::VectorXd r = b - impl_->M * x;
    if (r.lpNorm<Eigen::Infinity>() > bound) {
        x += impl_->llt.solve(r);  // one refinement step
        r = b - impl_->M * x;
        if (r.lpNorm<Eigen::Infinity>() > bound)
            throw LinearSolveError("solve residual above tolerance after refinement");
    }
    return x;
}

long SpdOperator::solve_count() const {
    return impl_ ? impl_->solves.load(std::memory_order_relaxed) : 0;
}

struct SparseLuOperator::Impl {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
};

SparseLuOperator SparseLuOperator::factorize(const Eigen::SparseMatrix<double>& M) {
    if (M.rows() != M.cols()) throw DimensionError("matrix is not square");
    auto impl = std::make_shared<Impl>();
    Eigen::SparseMatrix<double> A = M;
    A.makeCompressed();
    impl->lu.compute(A);
    if (impl->lu.info() != Eigen::Success)
        throw LinearSolveError("LU factorization failed (singular matrix)");

    SparseLuOperator op;
    op.impl_ = std::move(impl);
    op.dim_ = static_cast<int>(M.rows());
    return op;
}

Eigen::VectorXd SparseLuOperator::solve(const Eigen::VectorXd& b) const {
    if (!impl_) throw Error("solve on an unfactorized operator");
    if (b.size() != dim_) throw DimensionError("right-hand side has wrong size");
    return impl_->lu.solve(b);
}

Eigen::VectorXd recover_angles(const Eigen::SparseMatrix<double>& A_r,
                               const Eigen::VectorXd& d) {
    Eigen::SparseMatrix<double> gram = A_r * Eigen::SparseMatrix<double>(A_r.transpose());
    SpdOperator op;
    try {
        op = SpdOperator::factorize(gram);
    } catch (const IndefiniteError&) {
        throw IndefiniteError("angle recovery failed: graph disconnected");
    }
    return recover_angles(A_r, op, d);
}

Eigen::VectorXd recover_angles(const Eigen::SparseMatrix<double>& A_r,
                               const SpdOperator& gram, const Eigen::VectorXd& d) {
    if (d.size() != A_r.cols()) throw DimensionError("branch vector has wrong size");
    return gram.solve(A_r * d);
}

}  // namespace lossydc
