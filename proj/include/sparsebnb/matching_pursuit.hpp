#ifndef SPARSEBNB_MATCHING_PURSUIT_HPP_
#define SPARSEBNB_MATCHING_PURSUIT_HPP_

#include <algorithm>
#include <limits>
#include <vector>

#include "sparsebnb/problem.hpp"
#include "sparsebnb/upper_bound.hpp"

namespace sparsebnb {

template <typename Scalar>
struct MpState {
    std::vector<bool> in_support;
    VectorX<Scalar> beta;
    VectorX<Scalar> residual;  // y - X beta
    Index accepted_steps = 0;

    static MpState empty(const ProblemData<Scalar>& prob) {
        return MpState{std::vector<bool>(static_cast<std::size_t>(prob.p()), false),
                       VectorX<Scalar>::Zero(prob.p()), prob.y(), 0};
    }

    IndexSet support() const {
        IndexSet out;
        for (std::size_t j = 0; j < in_support.size(); ++j) {
            if (in_support[j]) out.push_back(static_cast<Index>(j));
        }
        return out;
    }

    /// 1/2 ||residual||^2 + lambda2 ||beta||^2 + lambda0 |S|, using the stored residual.
    Scalar surrogate(const ProblemData<Scalar>& prob) const {
        const auto size = std::count(in_support.begin(), in_support.end(), true);
        return Scalar(0.5) * residual.squaredNorm() + prob.lambda2() * beta.squaredNorm() +
               prob.lambda0() * Scalar(size);
    }
};

struct MpOptions {
    Index max_outer = 0;        // 0 means 4p
    Index refresh_every = 50;   // accepted steps between residual recomputations
    bool polish = true;
};

template <typename Scalar>
struct MpStep {
    bool changed = false;
    Index index = -1;
    Scalar delta = Scalar(0);  // objective change of the accepted move
};

namespace detail {

template <typename Scalar>
void maybe_refresh(MpState<Scalar>& state, const ProblemData<Scalar>& prob, const MpOptions& opts) {
    ++state.accepted_steps;
    if (opts.refresh_every > 0 && state.accepted_steps % opts.refresh_every == 0) {
        state.residual = prob.y() - prob.X() * state.beta;
    }
}

}  // namespace detail

/// Adds the coordinate j outside S with the most negative
///     Delta_j = -beta_j c_j + D_j beta_j^2 / 2 + lambda0,
/// where c_j = X_j^T r, D_j = ||X_j||^2 + 2 lambda2 and beta_j = clip(c_j / D_j, -M, M).
/// Ties go to the lowest index.
template <typename Scalar>
MpStep<Scalar> forward_step(MpState<Scalar>& state, const ProblemData<Scalar>& prob,
                            const MpOptions& opts = {}) {
    const VectorX<Scalar> c = prob.X().transpose() * state.residual;
    const Scalar m = prob.big_m();
    MpStep<Scalar> best;
    Scalar best_delta = std::numeric_limits<Scalar>::infinity();
    Scalar best_beta(0);
    for (Index j = 0; j < prob.p(); ++j) {
        if (state.in_support[static_cast<std::size_t>(j)]) continue;
        const Scalar d = prob.col_sq_norms()[j] + Scalar(2) * prob.lambda2();
        const Scalar b = std::clamp(c[j] / d, -m, m);
        const Scalar delta = -b * c[j] + Scalar(0.5) * d * b * b + prob.lambda0();
        if (delta < best_delta) {
            best_delta = delta;
            best.index = j;
            best_beta = b;
        }
    }
    if (best.index < 0 || !(best_delta < Scalar(0))) return MpStep<Scalar>{};
    state.in_support[static_cast<std::size_t>(best.index)] = true;
    state.beta[best.index] = best_beta;
    state.residual -= prob.X().col(best.index) * best_beta;
    detail::maybe_refresh(state, prob, opts);
    best.changed = true;
    best.delta = best_delta;
    return best;
}

/// Removes the coordinate j in S with the most negative
///     Delta_j = beta_j c_j + (||X_j||^2 / 2 - lambda2) beta_j^2 - lambda0,
/// the objective change of zeroing beta_j with the rest frozen. Ties go to the lowest index.
template <typename Scalar>
MpStep<Scalar> backward_step(MpState<Scalar>& state, const ProblemData<Scalar>& prob,
                             const MpOptions& opts = {}) {
    MpStep<Scalar> best;
    Scalar best_delta = std::numeric_limits<Scalar>::infinity();
    for (Index j = 0; j < prob.p(); ++j) {
        if (!state.in_support[static_cast<std::size_t>(j)]) continue;
        const Scalar b = state.beta[j];
        const Scalar c = prob.X().col(j).dot(state.residual);
        const Scalar delta =
            b * c + (Scalar(0.5) * prob.col_sq_norms()[j] - prob.lambda2()) * b * b - prob.lambda0();
        if (delta < best_delta) {
            best_delta = delta;
            best.index = j;
        }
    }
    if (best.index < 0 || !(best_delta < Scalar(0))) return MpStep<Scalar>{};
    const Scalar b = state.beta[best.index];
    state.in_support[static_cast<std::size_t>(best.index)] = false;
    state.residual += prob.X().col(best.index) * b;
    state.beta[best.index] = Scalar(0);
    detail::maybe_refresh(state, prob, opts);
    best.changed = true;
    best.delta = best_delta;
    return best;
}

/// Greedy forward/backward support search from the empty model, one forward and one
/// backward move per sweep, until a sweep changes nothing. The final support is polished
/// with fpg_solve; the better of the greedy and polished coefficients is returned.
template <typename Scalar>
FeasibleSolution<Scalar> run_matching_pursuit(const ProblemData<Scalar>& prob, const MpOptions& opts = {},
                                              const FpgOptions& fpg = {}) {
    MpState<Scalar> state = MpState<Scalar>::empty(prob);
    const Index max_outer = opts.max_outer > 0 ? opts.max_outer : 4 * prob.p();
    for (Index outer = 0; outer < max_outer; ++outer) {
        const bool added = forward_step(state, prob, opts).changed;
        const bool removed = backward_step(state, prob, opts).changed;
        if (!added && !removed) break;
    }
    FeasibleSolution<Scalar> greedy = make_feasible(state.beta, prob);
    if (!opts.polish) return greedy;
    FeasibleSolution<Scalar> polished = fpg_solve(state.support(), prob, &state.beta, fpg);
    return polished.objective <= greedy.objective ? polished : greedy;
}

}  // namespace sparsebnb

#endif  // SPARSEBNB_MATCHING_PURSUIT_HPP_
