#pragma once

#include <atomic>
#include <memory>

#include <Eigen/SparseCore>

#include "lossydc/errors.hpp"

namespace lossydc {

/// Factor-once / solve-many wrapper around a sparse SPD Cholesky
/// factorization (AMD fill-reducing ordering). Every subsequent solve is a
/// single forward/backward substitution, with one step of iterative
/// refinement if the residual bound ||Mx-b||inf <= 1e-10*max(1,||b||inf)
/// is not already met.
class SpdOperator {
  public:
    SpdOperator() = default;

    // Throws IndefiniteError on a non-positive-definite pivot and
    // DimensionError if M is not square or not symmetric to 1e-12 relative.
    static SpdOperator factorize(const Eigen::SparseMatrix<double>& M);

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

    int dimension() const { return dim_; }
    bool valid() const { return impl_ != nullptr; }
    // Number of backsolves performed since factorization (refinement steps
    // not counted); lets tests pin the factor-once/solve-many contract.
    long solve_count() const;

  private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
    int dim_ = 0;
};

/// General sparse LU for the (nonsymmetric) Newton-Raphson and chord-Newton
/// Jacobians. Same factor-once contract as SpdOperator.
class SparseLuOperator {
  public:
    SparseLuOperator() = default;
    static SparseLuOperator factorize(const Eigen::SparseMatrix<double>& M);
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    int dimension() const { return dim_; }
    bool valid() const { return impl_ != nullptr; }

  private:
    struct Impl;
    std::shared_ptr<Impl> impl_;
    int dim_ = 0;
};

// Least-squares angle recovery: minimizes ||A_r^T theta - d||_2 through the
// SPD system (A_r A_r^T) theta = A_r d. Exact (d in range) on radial networks.
Eigen::VectorXd recover_angles(const Eigen::SparseMatrix<double>& A_r,
                               const Eigen::VectorXd& d);

// Same, reusing a prefactorized Gram operator for A_r A_r^T.
Eigen::VectorXd recover_angles(const Eigen::SparseMatrix<double>& A_r,
                               const SpdOperator& gram, const Eigen::VectorXd& d);

}  // namespace lossydc
