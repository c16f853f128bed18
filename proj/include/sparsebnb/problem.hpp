#ifndef SPARSEBNB_PROBLEM_HPP_
#define SPARSEBNB_PROBLEM_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "sparsebnb/types.hpp"

namespace sparsebnb {

/// An l0-l2 penalized least squares instance
///
///     min_beta 1/2 ||y - X beta||^2 + lambda0 ||beta||_0 + lambda2 ||beta||^2,   ||beta||_inf <= M.
///
/// Immutable once built; every node of a search tree reads the same object.
template <typename Scalar>
class ProblemData {
 public:
    ProblemData(MatrixX<Scalar> X, VectorX<Scalar> y, Scalar lambda0, Scalar lambda2, Scalar big_m)
        : X_(std::move(X)), y_(std::move(y)), lambda0_(lambda0), lambda2_(lambda2), big_m_(big_m) {
        if (X_.rows() != y_.size()) {
            throw DimensionMismatch("X has " + std::to_string(X_.rows()) + " rows but y has " +
                                    std::to_string(y_.size()) + " entries");
        }
        if (X_.cols() == 0) throw InvalidArgument("X must have at least one column");
        if (!(lambda0_ >= Scalar(0)) || !std::isfinite(lambda0_)) {
            throw InvalidArgument("lambda0 must be finite and >= 0");
        }
        // All regime formulas divide by lambda2.
        if (!(lambda2_ > Scalar(0)) || !std::isfinite(lambda2_)) {
            throw InvalidArgument("lambda2 must be finite and > 0");
        }
        if (!(big_m_ > Scalar(0)) || !std::isfinite(big_m_)) {
            throw InvalidArgument("big-M must be finite and > 0");
        }
        if (!X_.allFinite() || !y_.allFinite()) throw InvalidArgument("X and y must be finite");
        col_sq_norms_ = X_.colwise().squaredNorm().transpose();
    }

    const MatrixX<Scalar>& X() const { return X_; }
    const VectorX<Scalar>& y() const { return y_; }
    Scalar lambda0() const { return lambda0_; }
    Scalar lambda2() const { return lambda2_; }
    Scalar big_m() const { return big_m_; }
    Index n() const { return X_.rows(); }
    Index p() const { return X_.cols(); }
    const VectorX<Scalar>& col_sq_norms() const { return col_sq_norms_; }

    ProblemData with_penalties(Scalar lambda0, Scalar lambda2, Scalar big_m) const {
        return ProblemData(X_, y_, lambda0, lambda2, big_m);
    }

    /// 1/2 ||y - X beta||^2 + lambda0 ||beta||_0 + lambda2 ||beta||^2.
    Scalar objective(const VectorX<Scalar>& beta) const {
        const Index nnz = (beta.array() != Scalar(0)).count();
        return Scalar(0.5) * (y_ - X_ * beta).squaredNorm() + lambda0_ * Scalar(nnz) +
               lambda2_ * beta.squaredNorm();
    }

 private:
    MatrixX<Scalar> X_;
    VectorX<Scalar> y_;
    Scalar lambda0_;
    Scalar lambda2_;
    Scalar big_m_;
    VectorX<Scalar> col_sq_norms_;
};

enum class FixState : std::uint8_t { Free, Zero, One };

/// Branching decisions along a path of the tree: z_i = 0 for i in f0, z_i = 1 for i in f1.
struct Fixations {
    IndexSet f0;
    IndexSet f1;

    bool is_zero(Index i) const { return std::binary_search(f0.begin(), f0.end(), i); }
    bool is_one(Index i) const { return std::binary_search(f1.begin(), f1.end(), i); }

    FixState state(Index i) const {
        if (is_zero(i)) return FixState::Zero;
        if (is_one(i)) return FixState::One;
        return FixState::Free;
    }

    std::vector<FixState> states(Index p) const {
        std::vector<FixState> out(static_cast<std::size_t>(p), FixState::Free);
        for (Index i : f0) out[static_cast<std::size_t>(i)] = FixState::Zero;
        for (Index i : f1) out[static_cast<std::size_t>(i)] = FixState::One;
        return out;
    }

    std::size_t fixed_count() const { return f0.size() + f1.size(); }

    Fixations with_zero(Index j) const {
        Fixations out = *this;
        out.f0.insert(std::upper_bound(out.f0.begin(), out.f0.end(), j), j);
        return out;
    }

    Fixations with_one(Index j) const {
        Fixations out = *this;
        out.f1.insert(std::upper_bound(out.f1.begin(), out.f1.end(), j), j);
        return out;
    }

    /// Throws InvalidArgument unless both sets are sorted, unique, in range and disjoint.
    void validate(Index p) const {
        auto check = [p](const IndexSet& s, const char* name) {
            for (std::size_t k = 0; k < s.size(); ++k) {
                if (s[k] < 0 || s[k] >= p) {
                    throw InvalidArgument(std::string(name) + " index out of range");
                }
                if (k > 0 && s[k] <= s[k - 1]) {
                    throw InvalidArgument(std::string(name) + " must be sorted and unique");
                }
            }
        };
        check(f0, "f0");
        check(f1, "f1");
        for (Index i : f0) {
            if (is_one(i)) throw InvalidArgument("f0 and f1 overlap at " + std::to_string(i));
        }
    }

    friend bool operator==(const Fixations&, const Fixations&) = default;
};

/// Thresholds of the coordinate-wise proximal map, fixed for a given (lambda0, lambda2, M, rho).
template <typename Scalar>
struct RegimeParams {
    Scalar sqrt_ratio;      // sqrt(lambda0 / lambda2)
    Scalar free_threshold;  // soft-threshold level for free coordinates
    Scalar fixed_shrink;    // rho / (rho + 2 lambda2)
    Scalar quad_switch;     // |t| beyond which a free coordinate takes the ridge branch
    bool low_ratio;         // sqrt_ratio <= M
    Scalar rho;

    RegimeParams(const ProblemData<Scalar>& prob, Scalar rho_) : rho(rho_) {
        if (!(rho > Scalar(0))) throw InvalidArgument("rho must be > 0");
        const Scalar l0 = prob.lambda0();
        const Scalar l2 = prob.lambda2();
        const Scalar m = prob.big_m();
        sqrt_ratio = std::sqrt(l0 / l2);
        low_ratio = sqrt_ratio <= m;
        fixed_shrink = rho / (rho + Scalar(2) * l2);
        const Scalar root_threshold = Scalar(2) * std::sqrt(l0 * l2) / rho;
        if (low_ratio) {
            free_threshold = root_threshold;
            quad_switch = root_threshold + sqrt_ratio;
        } else {
            free_threshold = l0 / (m * rho) + l2 * m / rho;
            quad_switch = std::numeric_limits<Scalar>::infinity();
        }
    }
};

/// Box-constrained soft thresholding: shrink |t| by a, then clamp to [-m, m].
template <typename Scalar>
Scalar box_soft_threshold(Scalar t, Scalar a, Scalar m) {
    const Scalar mag = std::abs(t);
    if (mag <= a) return Scalar(0);
    const Scalar shrunk = std::min(mag - a, m);
    return t < Scalar(0) ? -shrunk : shrunk;
}

/// Per-coordinate penalty left after minimizing out (z_i, s_i) for fixed beta_i.
/// Infinite off the box and for nonzero fixed-to-zero coordinates.
template <typename Scalar>
Scalar psi(FixState state, Scalar beta_i, const ProblemData<Scalar>& prob) {
    constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
    const Scalar mag = std::abs(beta_i);
    if (state == FixState::Zero) return beta_i == Scalar(0) ? Scalar(0) : inf;
    if (mag > prob.big_m()) return inf;
    const Scalar l0 = prob.lambda0();
    const Scalar l2 = prob.lambda2();
    if (state == FixState::One) return l0 + l2 * beta_i * beta_i;
    const Scalar sqrt_ratio = std::sqrt(l0 / l2);
    if (sqrt_ratio <= prob.big_m()) {
        // At |beta_i| == sqrt_ratio both branches agree.
        if (mag >= sqrt_ratio) return l0 + l2 * beta_i * beta_i;
        return Scalar(2) * std::sqrt(l0 * l2) * mag;
    }
    return (l0 / prob.big_m() + l2 * prob.big_m()) * mag;
}

template <typename Scalar>
Scalar psi(Index i, Scalar beta_i, const Fixations& fix, const ProblemData<Scalar>& prob) {
    return psi(fix.state(i), beta_i, prob);
}

/// Conjugate-type function appearing in the dual of the node relaxation.
template <typename Scalar>
Scalar dual_h(Scalar x, const ProblemData<Scalar>& prob) {
    const Scalar l0 = prob.lambda0();
    const Scalar l2 = prob.lambda2();
    const Scalar m = prob.big_m();
    if (x <= Scalar(2) * m * l2) return x * x / (Scalar(4) * l2) - l0;
    return m * x - l0 - l2 * m * m;
}

template <typename Scalar>
Scalar dual_nu(FixState state, Scalar x, const ProblemData<Scalar>& prob) {
    switch (state) {
        case FixState::Zero:
            return Scalar(0);
        case FixState::One:
            return dual_h(x, prob);
        case FixState::Free:
            break;
    }
    const Scalar l0 = prob.lambda0();
    const Scalar l2 = prob.lambda2();
    const Scalar m = prob.big_m();
    if (std::sqrt(l0 / l2) <= m) return std::max(dual_h(x, prob), Scalar(0));
    return std::max(m * x - l0 - l2 * m * m, Scalar(0));
}

template <typename Scalar>
Scalar dual_nu(Index i, Scalar x, const Fixations& fix, const ProblemData<Scalar>& prob) {
    return dual_nu(fix.state(i), x, prob);
}

template <typename Scalar>
struct IndicatorRecovery {
    VectorX<Scalar> z;
    VectorX<Scalar> s;
};

/// Optimal (z, s) of the node relaxation for a fixed beta.
template <typename Scalar>
IndicatorRecovery<Scalar> recover_zs(const VectorX<Scalar>& beta, const std::vector<FixState>& states,
                                     const ProblemData<Scalar>& prob) {
    const Index p = beta.size();
    IndicatorRecovery<Scalar> out{VectorX<Scalar>::Zero(p), VectorX<Scalar>::Zero(p)};
    const Scalar l0 = prob.lambda0();
    const Scalar l2 = prob.lambda2();
    const Scalar m = prob.big_m();
    for (Index i = 0; i < p; ++i) {
        const Scalar b = beta[i];
        const Scalar mag = std::abs(b);
        Scalar z;
        switch (states[static_cast<std::size_t>(i)]) {
            case FixState::Zero:
                if (b != Scalar(0)) {
                    throw InfeasibleFixation("coordinate " + std::to_string(i) +
                                             " is fixed to zero but beta is nonzero");
                }
                continue;
            case FixState::One:
                z = Scalar(1);
                break;
            case FixState::Free:
            default:
                if (mag == Scalar(0)) {
                    z = Scalar(0);
                } else if (l0 == Scalar(0)) {
                    z = Scalar(1);
                } else {
                    z = std::clamp(std::max(mag / m, std::sqrt(l2 / l0) * mag), Scalar(0), Scalar(1));
                }
                break;
        }
        out.z[i] = z;
        out.s[i] = z == Scalar(0) ? Scalar(0) : b * b / z;
    }
    return out;
}

template <typename Scalar>
IndicatorRecovery<Scalar> recover_zs(const VectorX<Scalar>& beta, const Fixations& fix,
                                     const ProblemData<Scalar>& prob) {
    return recover_zs(beta, fix.states(beta.size()), prob);
}

/// 1/2 ||y - X beta||^2 + sum_i psi_i(beta_i): the node relaxation objective in beta alone.
template <typename Scalar>
Scalar relaxation_objective(const VectorX<Scalar>& beta, const std::vector<FixState>& states,
                            const ProblemData<Scalar>& prob) {
    Scalar penalty(0);
    for (Index i = 0; i < beta.size(); ++i) {
        penalty += psi(states[static_cast<std::size_t>(i)], beta[i], prob);
    }
    return Scalar(0.5) * (prob.y() - prob.X() * beta).squaredNorm() + penalty;
}

}  // namespace sparsebnb

#endif  // SPARSEBNB_PROBLEM_HPP_
