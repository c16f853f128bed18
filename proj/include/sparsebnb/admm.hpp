#ifndef SPARSEBNB_ADMM_HPP_
#define SPARSEBNB_ADMM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "sparsebnb/parallel.hpp"
#include "sparsebnb/precompute.hpp"
#include "sparsebnb/problem.hpp"

namespace sparsebnb {

/// ADMM iterates for one node: b is the smooth copy, beta the box/penalty copy, v the dual.
template <typename Scalar>
struct AdmmState {
    VectorX<Scalar> b;
    VectorX<Scalar> beta;
    VectorX<Scalar> v;
    Index iter = 0;

    static AdmmState zeros(Index p) {
        return AdmmState{VectorX<Scalar>::Zero(p), VectorX<Scalar>::Zero(p), VectorX<Scalar>::Zero(p), 0};
    }
};

/// K nodes stacked row-wise. mask0/mask1 mark coordinates fixed to zero/one per row.
template <typename Scalar>
struct AdmmBatch {
    BatchMatrix<Scalar> B;
    BatchMatrix<Scalar> Beta;
    BatchMatrix<Scalar> V;
    BatchMask mask0;
    BatchMask mask1;
    std::vector<std::uint64_t> node_ids;

    AdmmBatch() = default;
    AdmmBatch(Index rows, Index p)
        : B(BatchMatrix<Scalar>::Zero(rows, p)),
          Beta(BatchMatrix<Scalar>::Zero(rows, p)),
          V(BatchMatrix<Scalar>::Zero(rows, p)),
          mask0(BatchMask::Constant(rows, p, false)),
          mask1(BatchMask::Constant(rows, p, false)),
          node_ids(static_cast<std::size_t>(rows), 0) {}

    Index rows() const { return B.rows(); }
    Index p() const { return B.cols(); }

    FixState state(Index k, Index i) const {
        if (mask0(k, i)) return FixState::Zero;
        if (mask1(k, i)) return FixState::One;
        return FixState::Free;
    }

    std::vector<FixState> row_states(Index k) const {
        std::vector<FixState> out(static_cast<std::size_t>(p()));
        for (Index i = 0; i < p(); ++i) out[static_cast<std::size_t>(i)] = state(k, i);
        return out;
    }

    void set_row(Index k, const AdmmState<Scalar>& s, const Fixations& fix, std::uint64_t id = 0) {
        B.row(k) = s.b.transpose();
        Beta.row(k) = s.beta.transpose();
        V.row(k) = s.v.transpose();
        mask0.row(k).setConstant(false);
        mask1.row(k).setConstant(false);
        for (Index i : fix.f0) mask0(k, i) = true;
        for (Index i : fix.f1) mask1(k, i) = true;
        node_ids[static_cast<std::size_t>(k)] = id;
    }

    AdmmState<Scalar> row_state(Index k) const {
        return AdmmState<Scalar>{B.row(k).transpose(), Beta.row(k).transpose(), V.row(k).transpose(), 0};
    }

    /// Keeps only the listed rows, in the given order.
    void keep_rows(const std::vector<Index>& rows) {
        const Index m = static_cast<Index>(rows.size());
        AdmmBatch out(m, p());
        for (Index r = 0; r < m; ++r) {
            const Index k = rows[static_cast<std::size_t>(r)];
            out.B.row(r) = B.row(k);
            out.Beta.row(r) = Beta.row(k);
            out.V.row(r) = V.row(k);
            out.mask0.row(r) = mask0.row(k);
            out.mask1.row(r) = mask1.row(k);
            out.node_ids[static_cast<std::size_t>(r)] = node_ids[static_cast<std::size_t>(k)];
        }
        *this = std::move(out);
    }
};

/// Closed-form beta-update for one coordinate given t = b_i + v_i / rho.
template <typename Scalar>
Scalar beta_prox(FixState state, Scalar t, const RegimeParams<Scalar>& regime, Scalar big_m) {
    switch (state) {
        case FixState::Zero:
            return Scalar(0);
        case FixState::One:
            return std::clamp(regime.fixed_shrink * t, -big_m, big_m);
        case FixState::Free:
            break;
    }
    if (regime.low_ratio && std::abs(t) >= regime.quad_switch) {
        return std::clamp(regime.fixed_shrink * t, -big_m, big_m);
    }
    return box_soft_threshold(t, regime.free_threshold, big_m);
}

// ---- single node ----

/// b <- D (c + rho beta - v)
template <typename Scalar>
void b_update(AdmmState<Scalar>& s, const Precomputed<Scalar>& pre) {
    s.b = pre.apply(pre.c() + pre.rho() * s.beta - s.v);
}

template <typename Scalar>
void beta_update(AdmmState<Scalar>& s, const std::vector<FixState>& states,
                 const RegimeParams<Scalar>& regime, Scalar big_m) {
    for (Index i = 0; i < s.beta.size(); ++i) {
        const Scalar t = s.b[i] + s.v[i] / regime.rho;
        s.beta[i] = beta_prox(states[static_cast<std::size_t>(i)], t, regime, big_m);
    }
}

template <typename Scalar>
void v_update(AdmmState<Scalar>& s, Scalar rho) {
    s.v += rho * (s.b - s.beta);
}

// ---- batched ----

/// B <- (C + rho Beta - V) D, where every row of C is c^T (broadcast, never materialized).
template <typename Scalar>
void b_update(AdmmBatch<Scalar>& batch, const Precomputed<Scalar>& pre) {
    const Scalar rho = pre.rho();
    parallel::for_each_chunk(batch.rows(), [&](Index begin, Index end) {
        const Index len = end - begin;
        BatchMatrix<Scalar> rhs = rho * batch.Beta.middleRows(begin, len) - batch.V.middleRows(begin, len);
        rhs.rowwise() += pre.c().transpose();
        batch.B.middleRows(begin, len) = pre.apply_rows(rhs);
    });
}

template <typename Scalar>
void beta_update(AdmmBatch<Scalar>& batch, const RegimeParams<Scalar>& regime, Scalar big_m) {
    const Index p = batch.p();
    parallel::for_each_chunk(batch.rows(), [&](Index begin, Index end) {
        for (Index k = begin; k < end; ++k) {
            for (Index i = 0; i < p; ++i) {
                const Scalar t = batch.B(k, i) + batch.V(k, i) / regime.rho;
                batch.Beta(k, i) = beta_prox(batch.state(k, i), t, regime, big_m);
            }
        }
    });
}

template <typename Scalar>
void v_update(AdmmBatch<Scalar>& batch, Scalar rho) {
    batch.V += rho * (batch.B - batch.Beta);
}

/// Dual objective at r = y - X b_hat. A valid lower bound on the node relaxation for any b_hat.
template <typename Scalar>
Scalar dual_bound(const VectorX<Scalar>& b_hat, const std::vector<FixState>& states,
                  const ProblemData<Scalar>& prob) {
    const VectorX<Scalar> r = prob.y() - prob.X() * b_hat;
    const VectorX<Scalar> corr = prob.X().transpose() * r;
    Scalar value = Scalar(-0.5) * r.squaredNorm() + prob.y().dot(r);
    for (Index i = 0; i < corr.size(); ++i) {
        value -= dual_nu(states[static_cast<std::size_t>(i)], std::abs(corr[i]), prob);
    }
    return value;
}

template <typename Scalar>
Scalar dual_bound(const VectorX<Scalar>& b_hat, const Fixations& fix, const ProblemData<Scalar>& prob) {
    return dual_bound(b_hat, fix.states(b_hat.size()), prob);
}

/// Row-wise dual_bound over a batch, evaluated at the rows of `points` (B or Beta).
template <typename Scalar>
VectorX<Scalar> dual_bounds(const BatchMatrix<Scalar>& points, const AdmmBatch<Scalar>& batch,
                            const ProblemData<Scalar>& prob) {
    const Index K = batch.rows();
    VectorX<Scalar> out(K);
    parallel::for_each_chunk(K, [&](Index begin, Index end) {
        const Index len = end - begin;
        MatrixX<Scalar> R = -(prob.X() * points.middleRows(begin, len).transpose());
        R.colwise() += prob.y();
        const MatrixX<Scalar> corr = prob.X().transpose() * R;
        for (Index r = 0; r < len; ++r) {
            const Index k = begin + r;
            Scalar value = Scalar(-0.5) * R.col(r).squaredNorm() + prob.y().dot(R.col(r));
            for (Index i = 0; i < batch.p(); ++i) {
                value -= dual_nu(batch.state(k, i), std::abs(corr(i, r)), prob);
            }
            out[k] = value;
        }
    });
    return out;
}

template <typename Scalar>
VectorX<Scalar> dual_bounds(const AdmmBatch<Scalar>& batch, const ProblemData<Scalar>& prob) {
    return dual_bounds(batch.B, batch, prob);
}

/// Row-wise relaxation objective at the rows of Beta.
template <typename Scalar>
VectorX<Scalar> primal_values(const AdmmBatch<Scalar>& batch, const ProblemData<Scalar>& prob) {
    const Index K = batch.rows();
    VectorX<Scalar> out(K);
    parallel::for_each_chunk(K, [&](Index begin, Index end) {
        const Index len = end - begin;
        MatrixX<Scalar> R = -(prob.X() * batch.Beta.middleRows(begin, len).transpose());
        R.colwise() += prob.y();
        for (Index r = 0; r < len; ++r) {
            const Index k = begin + r;
            Scalar value = Scalar(0.5) * R.col(r).squaredNorm();
            for (Index i = 0; i < batch.p(); ++i) value += psi(batch.state(k, i), batch.Beta(k, i), prob);
            out[k] = value;
        }
    });
    return out;
}

struct AdmmOptions {
    double tol = 1e-4;       // relative primal-dual gap
    Index max_iters = 10000;
    Index check_every = 10;  // gap is evaluated at iteration 1 and every check_every iterations
};

template <typename Scalar>
struct RelaxationResult {
    VectorX<Scalar> beta_hat;
    VectorX<Scalar> z_hat;
    Scalar lower_bound;   // max(dual value, parent bound)
    Scalar dual_value;
    Scalar primal_value;
    Index iterations = 0;
    bool converged = false;
    AdmmState<Scalar> state;  // final (b, beta, v), reused to warm start children
};

template <typename Scalar>
Scalar relative_gap(Scalar primal, Scalar dual) {
    return (primal - dual) / std::max(Scalar(1), std::abs(primal));
}

/// Runs ADMM on every row of the batch until its relative primal-dual gap drops below
/// opts.tol or opts.max_iters is reached. Converged rows leave the batch; the rest keep
/// iterating. parent_bounds[k] is the bound inherited by row k (-inf at the root).
template <typename Scalar>
std::vector<RelaxationResult<Scalar>> solve_relaxation_batch(AdmmBatch<Scalar> batch,
                                                             const std::vector<Scalar>& parent_bounds,
                                                             const ProblemData<Scalar>& prob,
                                                             const Precomputed<Scalar>& pre,
                                                             const AdmmOptions& opts = {}) {
    const Index K = batch.rows();
    if (static_cast<Index>(parent_bounds.size()) != K) {
        throw InvalidArgument("one parent bound per batch row is required");
    }
    if (opts.max_iters < 1 || opts.check_every < 1) throw InvalidArgument("iteration limits must be >= 1");
    const RegimeParams<Scalar> regime(prob, pre.rho());
    std::vector<RelaxationResult<Scalar>> results(static_cast<std::size_t>(K));
    std::vector<Index> origin(static_cast<std::size_t>(K));
    for (Index k = 0; k < K; ++k) origin[static_cast<std::size_t>(k)] = k;

    for (Index iter = 1; iter <= opts.max_iters && batch.rows() > 0; ++iter) {
        b_update(batch, pre);
        beta_update(batch, regime, prob.big_m());
        v_update(batch, pre.rho());
        const bool last = iter == opts.max_iters;
        if (iter != 1 && iter % opts.check_every != 0 && !last) continue;

        // Both b and beta give valid dual points; keep the better bound.
        const VectorX<Scalar> duals = dual_bounds(batch.B, batch, prob).cwiseMax(dual_bounds(batch.Beta, batch, prob));
        const VectorX<Scalar> primals = primal_values(batch, prob);
        std::vector<Index> keep;
        std::vector<Index> keep_origin;
        for (Index r = 0; r < batch.rows(); ++r) {
            const bool converged = relative_gap(primals[r], duals[r]) <= Scalar(opts.tol);
            if (!converged && !last) {
                keep.push_back(r);
                keep_origin.push_back(origin[static_cast<std::size_t>(r)]);
                continue;
            }
            const Index k = origin[static_cast<std::size_t>(r)];
            auto& res = results[static_cast<std::size_t>(k)];
            res.state = batch.row_state(r);
            res.state.iter = iter;
            res.beta_hat = res.state.beta;
            res.z_hat = recover_zs(res.beta_hat, batch.row_states(r), prob).z;
            res.dual_value = duals[r];
            res.primal_value = primals[r];
            res.lower_bound = std::max(duals[r], parent_bounds[static_cast<std::size_t>(k)]);
            res.iterations = iter;
            res.converged = converged;
        }
        if (static_cast<Index>(keep.size()) != batch.rows()) {
            batch.keep_rows(keep);
            origin = std::move(keep_origin);
        }
    }
    return results;
}

/// Single-node convenience wrapper around solve_relaxation_batch.
template <typename Scalar>
RelaxationResult<Scalar> solve_relaxation(const AdmmState<Scalar>& init, const Fixations& fix,
                                          Scalar parent_bound, const ProblemData<Scalar>& prob,
                                          const Precomputed<Scalar>& pre, const AdmmOptions& opts = {}) {
    AdmmBatch<Scalar> batch(1, prob.p());
    batch.set_row(0, init, fix);
    return solve_relaxation_batch(std::move(batch), std::vector<Scalar>{parent_bound}, prob, pre, opts)
        .front();
}

/// Child initialization from the parent's final iterates: coordinates fixed to zero are
/// cleared in beta, then b and v are refreshed by one b-update and one v-update.
template <typename Scalar>
AdmmState<Scalar> warm_start_child(const AdmmState<Scalar>& parent, const Fixations& child_fix,
                                   const Precomputed<Scalar>& pre) {
    AdmmState<Scalar> s = parent;
    s.iter = 0;
    for (Index i : child_fix.f0) s.beta[i] = Scalar(0);
    b_update(s, pre);
    v_update(s, pre.rho());
    return s;
}

}  // namespace sparsebnb

#endif  // SPARSEBNB_ADMM_HPP_
