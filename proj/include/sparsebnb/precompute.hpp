#ifndef SPARSEBNB_PRECOMPUTE_HPP_
#define SPARSEBNB_PRECOMPUTE_HPP_

#include <cstdint>
#include <cstring>

#include <Eigen/Cholesky>

#include "sparsebnb/problem.hpp"

namespace sparsebnb {

enum class InverseStrategy { Auto, Direct, Woodbury };

/// Tree-wide data for the ADMM b-update: D = (X^T X + rho I)^{-1} and c = X^T y.
///
/// When p > n the inverse is formed through the Woodbury identity
///
///     D = I / rho - X^T (X X^T + rho I_n)^{-1} X / rho
///
/// and products with D are evaluated in that factored form, which costs O(np) per row
/// instead of O(p^2).
template <typename Scalar>
class Precomputed {
 public:
    Precomputed(const ProblemData<Scalar>& prob, Scalar rho,
                InverseStrategy strategy = InverseStrategy::Auto)
        : rho_(rho), c_(prob.X().transpose() * prob.y()), col_sq_norms_(prob.col_sq_norms()) {
        if (!(rho > Scalar(0))) throw InvalidArgument("rho must be > 0");
        const auto& X = prob.X();
        const Index n = X.rows();
        const Index p = X.cols();
        if (strategy == InverseStrategy::Auto) {
            strategy = p > n ? InverseStrategy::Woodbury : InverseStrategy::Direct;
        }
        if (strategy == InverseStrategy::Direct) {
            MatrixX<Scalar> gram = X.transpose() * X;
            gram.diagonal().array() += rho;
            Eigen::LLT<MatrixX<Scalar>> llt(gram);
            if (llt.info() != Eigen::Success) {
                throw NumericalFailure("X^T X + rho I is not positive definite");
            }
            D_ = llt.solve(MatrixX<Scalar>::Identity(p, p));
        } else {
            MatrixX<Scalar> outer = X * X.transpose();
            outer.diagonal().array() += rho;
            Eigen::LLT<MatrixX<Scalar>> llt(outer);
            if (llt.info() != Eigen::Success) {
                throw NumericalFailure("X X^T + rho I is not positive definite");
            }
            inner_inverse_ = llt.solve(MatrixX<Scalar>::Identity(n, n));
            inner_inverse_ = Scalar(0.5) * (inner_inverse_ + inner_inverse_.transpose()).eval();
            X_ = X;
            D_ = -(X.transpose() * (inner_inverse_ * X)) / rho;
            D_.diagonal().array() += Scalar(1) / rho;
            factored_ = true;
        }
        D_ = Scalar(0.5) * (D_ + D_.transpose()).eval();
        if (!D_.allFinite()) throw NumericalFailure("inverse contains non-finite entries");
    }

    const MatrixX<Scalar>& D() const { return D_; }
    const VectorX<Scalar>& c() const { return c_; }
    Scalar rho() const { return rho_; }
    const VectorX<Scalar>& col_sq_norms() const { return col_sq_norms_; }
    bool factored() const { return factored_; }
    Index p() const { return D_.rows(); }

    /// Returns rows * D for a K x p block of row vectors.
    template <typename Derived>
    BatchMatrix<Scalar> apply_rows(const Eigen::MatrixBase<Derived>& rows) const {
        if (!factored_) return rows * D_;
        BatchMatrix<Scalar> projected = (rows * X_.transpose()) * inner_inverse_;
        BatchMatrix<Scalar> out = rows / rho_;
        out.noalias() -= (projected * X_) / rho_;
        return out;
    }

    /// Returns D * w.
    VectorX<Scalar> apply(const VectorX<Scalar>& w) const {
        if (!factored_) return D_ * w;
        VectorX<Scalar> projected = inner_inverse_ * (X_ * w);
        VectorX<Scalar> out = w / rho_;
        out.noalias() -= X_.transpose() * projected / rho_;
        return out;
    }

    /// FNV-1a hash of D, c and rho. Used to check that D is never touched during a solve.
    std::uint64_t fingerprint() const {
        std::uint64_t h = 1469598103934665603ULL;
        auto mix = [&h](const void* data, std::size_t bytes) {
            const auto* ptr = static_cast<const unsigned char*>(data);
            for (std::size_t k = 0; k < bytes; ++k) {
                h ^= ptr[k];
                h *= 1099511628211ULL;
            }
        };
        mix(D_.data(), sizeof(Scalar) * static_cast<std::size_t>(D_.size()));
        mix(c_.data(), sizeof(Scalar) * static_cast<std::size_t>(c_.size()));
        mix(&rho_, sizeof(Scalar));
        return h;
    }

 private:
    Scalar rho_;
    VectorX<Scalar> c_;
    VectorX<Scalar> col_sq_norms_;
    MatrixX<Scalar> D_;
    bool factored_ = false;
    MatrixX<Scalar> inner_inverse_;
    MatrixX<Scalar> X_;
};

template <typename Scalar>
Precomputed<Scalar> build_precomputed(const ProblemData<Scalar>& prob, Scalar rho,
                                      InverseStrategy strategy = InverseStrategy::Auto) {
    return Precomputed<Scalar>(prob, rho, strategy);
}

}  // namespace sparsebnb

#endif  // SPARSEBNB_PRECOMPUTE_HPP_
