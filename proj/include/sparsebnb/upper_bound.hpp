#ifndef SPARSEBNB_UPPER_BOUND_HPP_
#define SPARSEBNB_UPPER_BOUND_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "sparsebnb/parallel.hpp"
#include "sparsebnb/problem.hpp"

namespace sparsebnb {

/// S = F1 plus every unfixed coordinate whose relaxed indicator is at least 1/2.
template <typename Scalar>
IndexSet round_support(const VectorX<Scalar>& z_hat, const Fixations& fix) {
    IndexSet out;
    for (Index i = 0; i < z_hat.size(); ++i) {
        if (fix.is_one(i) || (!fix.is_zero(i) && z_hat[i] >= Scalar(0.5))) out.push_back(i);
    }
    return out;
}

/// K box-constrained ridge problems on fixed supports, stacked row-wise.
template <typename Scalar>
struct SupportBatch {
    BatchMatrix<Scalar> Bmat;
    BatchMask Mask;
    VectorX<Scalar> alpha;
    std::vector<bool> active;

    SupportBatch() = default;
    SupportBatch(Index rows, Index p)
        : Bmat(BatchMatrix<Scalar>::Zero(rows, p)),
          Mask(BatchMask::Constant(rows, p, false)),
          alpha(VectorX<Scalar>::Ones(rows)),
          active(static_cast<std::size_t>(rows), true) {}

    Index rows() const { return Bmat.rows(); }
    Index p() const { return Bmat.cols(); }

    /// Sets row k to `support`, starting from `start` restricted to the support (zeros if empty).
    void set_row(Index k, const IndexSet& support, const VectorX<Scalar>* start = nullptr) {
        Mask.row(k).setConstant(false);
        Bmat.row(k).setZero();
        for (Index j : support) {
            Mask(k, j) = true;
            if (start != nullptr) Bmat(k, j) = (*start)[j];
        }
    }
};

template <typename Scalar>
struct FeasibleSolution {
    VectorX<Scalar> beta;
    IndexSet support;
    Scalar objective = std::numeric_limits<Scalar>::infinity();
};

/// Builds a FeasibleSolution from beta, with support = nonzeros of beta.
template <typename Scalar>
FeasibleSolution<Scalar> make_feasible(VectorX<Scalar> beta, const ProblemData<Scalar>& prob) {
    FeasibleSolution<Scalar> out;
    for (Index j = 0; j < beta.size(); ++j) {
        if (beta[j] != Scalar(0)) out.support.push_back(j);
    }
    out.objective = prob.objective(beta);
    out.beta = std::move(beta);
    return out;
}

/// Row k: X^T (X b_k - y) + 2 lambda2 b_k, zeroed outside the row's mask.
template <typename Scalar>
BatchMatrix<Scalar> restricted_gradient(const BatchMatrix<Scalar>& Bmat, const BatchMask& Mask,
                                        const ProblemData<Scalar>& prob) {
    const Index K = Bmat.rows();
    BatchMatrix<Scalar> grad(K, Bmat.cols());
    parallel::for_each_chunk(K, [&](Index begin, Index end) {
        const Index len = end - begin;
        BatchMatrix<Scalar> R = Bmat.middleRows(begin, len) * prob.X().transpose();
        R.rowwise() -= prob.y().transpose();
        grad.middleRows(begin, len) = R * prob.X() + Scalar(2) * prob.lambda2() * Bmat.middleRows(begin, len);
    });
    return Mask.select(grad, Scalar(0));
}

/// Row-wise U_S(b) = 1/2 ||y - X b||^2 + lambda2 ||b||^2.
template <typename Scalar>
VectorX<Scalar> ridge_values(const BatchMatrix<Scalar>& Bmat, const ProblemData<Scalar>& prob) {
    const Index K = Bmat.rows();
    VectorX<Scalar> out(K);
    parallel::for_each_chunk(K, [&](Index begin, Index end) {
        const Index len = end - begin;
        BatchMatrix<Scalar> R = Bmat.middleRows(begin, len) * prob.X().transpose();
        R.rowwise() -= prob.y().transpose();
        out.segment(begin, len) = Scalar(0.5) * R.rowwise().squaredNorm() +
                                  prob.lambda2() * Bmat.middleRows(begin, len).rowwise().squaredNorm();
    });
    return out;
}

struct FpgOptions {
    double tol = 1e-8;
    Index max_iters = 5000;
    double backtrack = 0.5;
    Index max_halvings = 50;
};

/// Per-row diagnostics of an fpg_solve_batch call.
struct FpgStats {
    std::vector<Index> iterations;
    std::vector<bool> converged;
    Index armijo_failures = 0;     // steps accepted only because max_halvings ran out
    Index monotone_violations = 0; // U(new) > U(extrapolated) although the extrapolated point was in the box
};

/// Initial stepsize 1 / (|S| max_{j in S} ||X_j||^2 + 2 lambda2).
template <typename Scalar>
Scalar initial_stepsize(const BatchMask& Mask, Index k, const ProblemData<Scalar>& prob) {
    Scalar max_norm(0);
    Index count = 0;
    for (Index j = 0; j < Mask.cols(); ++j) {
        if (!Mask(k, j)) continue;
        max_norm = std::max(max_norm, prob.col_sq_norms()[j]);
        ++count;
    }
    return Scalar(1) / (max_norm * Scalar(count) + Scalar(2) * prob.lambda2());
}

/// Nesterov-accelerated projected gradient with Armijo backtracking on each row's support:
///
///     ext  = b_t + t / (t + 3) (b_t - b_{t-1})
///     b_t+1 = clip(ext - alpha grad(ext), -M, M) on S, 0 elsewhere
///
/// alpha starts at initial_stepsize every iteration and is halved until
/// U(b_t+1) <= U(ext) + <grad, b_t+1 - ext> + ||b_t+1 - ext||^2 / (2 alpha).
/// A row stops once ||b_t+1 - ext||_inf or |U(b_t+1) - U(b_t)| is at most opts.tol.
template <typename Scalar>
std::vector<FeasibleSolution<Scalar>> fpg_solve_batch(SupportBatch<Scalar> batch, const ProblemData<Scalar>& prob,
                                                      const FpgOptions& opts = {}, FpgStats* stats = nullptr) {
    const Index K = batch.rows();
    const Scalar m = prob.big_m();
    const Scalar tol(opts.tol);
    batch.Bmat = batch.Mask.select(batch.Bmat.cwiseMax(-m).cwiseMin(m), Scalar(0));
    VectorX<Scalar> alpha0(K);
    for (Index k = 0; k < K; ++k) alpha0[k] = initial_stepsize(batch.Mask, k, prob);
    batch.alpha = alpha0;

    BatchMatrix<Scalar> prev = batch.Bmat;
    VectorX<Scalar> current_value = ridge_values(batch.Bmat, prob);
    std::vector<Index> iterations(static_cast<std::size_t>(K), 0);
    std::vector<bool> converged(static_cast<std::size_t>(K), false);
    Index armijo_failures = 0;
    Index monotone_violations = 0;
    for (Index k = 0; k < K; ++k) {
        // An empty support has nothing to optimize.
        if (!batch.Mask.row(k).any()) {
            batch.active[static_cast<std::size_t>(k)] = false;
            converged[static_cast<std::size_t>(k)] = true;
        }
    }

    std::vector<Index> rows;
    for (Index iter = 0; iter < opts.max_iters; ++iter) {
        rows.clear();
        for (Index k = 0; k < K; ++k) {
            if (batch.active[static_cast<std::size_t>(k)]) rows.push_back(k);
        }
        if (rows.empty()) break;
        const Index A = static_cast<Index>(rows.size());
        BatchMatrix<Scalar> ext(A, batch.p());
        BatchMask mask(A, batch.p());
        for (Index r = 0; r < A; ++r) {
            const Index k = rows[static_cast<std::size_t>(r)];
            const Scalar t = Scalar(iterations[static_cast<std::size_t>(k)]);
            ext.row(r) = batch.Bmat.row(k) + (t / (t + Scalar(3))) * (batch.Bmat.row(k) - prev.row(k));
            mask.row(r) = batch.Mask.row(k);
        }
        const BatchMatrix<Scalar> grad = restricted_gradient(ext, mask, prob);
        const VectorX<Scalar> ext_value = ridge_values(ext, prob);

        VectorX<Scalar> step(A);
        for (Index r = 0; r < A; ++r) step[r] = alpha0[rows[static_cast<std::size_t>(r)]];
        BatchMatrix<Scalar> trial(A, batch.p());
        VectorX<Scalar> trial_value(A);
        std::vector<Index> pending(static_cast<std::size_t>(A));
        for (Index r = 0; r < A; ++r) pending[static_cast<std::size_t>(r)] = r;
        for (Index halving = 0; !pending.empty(); ++halving) {
            BatchMatrix<Scalar> cand(static_cast<Index>(pending.size()), batch.p());
            for (std::size_t q = 0; q < pending.size(); ++q) {
                const Index r = pending[q];
                cand.row(static_cast<Index>(q)) =
                    mask.row(r).select((ext.row(r) - step[r] * grad.row(r)).cwiseMax(-m).cwiseMin(m), Scalar(0));
            }
            const VectorX<Scalar> cand_value = ridge_values(cand, prob);
            std::vector<Index> still;
            for (std::size_t q = 0; q < pending.size(); ++q) {
                const Index r = pending[q];
                const auto d = cand.row(static_cast<Index>(q)) - ext.row(r);
                const Scalar model = ext_value[r] + grad.row(r).dot(d) + d.squaredNorm() / (Scalar(2) * step[r]);
                const Scalar slack = Scalar(8) * std::numeric_limits<Scalar>::epsilon() *
                                     std::max(Scalar(1), std::abs(ext_value[r]));
                const bool armijo = cand_value[static_cast<Index>(q)] <= model + slack;
                if (armijo || halving >= opts.max_halvings) {
                    if (!armijo) ++armijo_failures;
                    trial.row(r) = cand.row(static_cast<Index>(q));
                    trial_value[r] = cand_value[static_cast<Index>(q)];
                } else {
                    step[r] *= Scalar(opts.backtrack);
                    still.push_back(r);
                }
            }
            pending = std::move(still);
        }

        for (Index r = 0; r < A; ++r) {
            const Index k = rows[static_cast<std::size_t>(r)];
            // Descent relative to the extrapolated point is only guaranteed when it lies in the box.
            const bool ext_feasible = ext.row(r).cwiseAbs().maxCoeff() <= m;
            if (ext_feasible && trial_value[r] > ext_value[r] + Scalar(8) * std::numeric_limits<Scalar>::epsilon() *
                                                                    std::max(Scalar(1), std::abs(ext_value[r]))) {
                ++monotone_violations;
            }
            const Scalar moved = (trial.row(r) - ext.row(r)).cwiseAbs().maxCoeff();
            const Scalar decrease = std::abs(current_value[k] - trial_value[r]);
            prev.row(k) = batch.Bmat.row(k);
            batch.Bmat.row(k) = trial.row(r);
            batch.alpha[k] = step[r];
            current_value[k] = trial_value[r];
            ++iterations[static_cast<std::size_t>(k)];
            if (moved <= tol || decrease <= tol) {
                batch.active[static_cast<std::size_t>(k)] = false;
                converged[static_cast<std::size_t>(k)] = true;
            }
        }
    }

    std::vector<FeasibleSolution<Scalar>> out;
    out.reserve(static_cast<std::size_t>(K));
    for (Index k = 0; k < K; ++k) out.push_back(make_feasible<Scalar>(batch.Bmat.row(k).transpose(), prob));
    if (stats != nullptr) {
        stats->iterations = std::move(iterations);
        stats->converged = std::move(converged);
        stats->armijo_failures = armijo_failures;
        stats->monotone_violations = monotone_violations;
    }
    return out;
}

/// Single-support convenience wrapper.
template <typename Scalar>
FeasibleSolution<Scalar> fpg_solve(const IndexSet& support, const ProblemData<Scalar>& prob,
                                   const VectorX<Scalar>* start = nullptr, const FpgOptions& opts = {}) {
    SupportBatch<Scalar> batch(1, prob.p());
    batch.set_row(0, support, start);
    return fpg_solve_batch(std::move(batch), prob, opts).front();
}

}  // namespace sparsebnb

#endif  // SPARSEBNB_UPPER_BOUND_HPP_
