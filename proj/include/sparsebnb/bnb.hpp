#ifndef SPARSEBNB_BNB_HPP_
#define SPARSEBNB_BNB_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <stop_token>
#include <string>
#include <unordered_map>
#include <vector>

#include "sparsebnb/admm.hpp"
#include "sparsebnb/matching_pursuit.hpp"
#include "sparsebnb/precompute.hpp"
#include "sparsebnb/problem.hpp"
#include "sparsebnb/upper_bound.hpp"

namespace sparsebnb {

template <typename Scalar>
struct Node {
    Fixations fix;
    Scalar lb = -std::numeric_limits<Scalar>::infinity();
    Index depth = 0;
    std::uint64_t id = 0;
    std::optional<std::uint64_t> warm_key;  // id of the parent whose final ADMM state seeds this node
};

/// Min-heap of open nodes ordered by (lb, id): best-first, FIFO among equal bounds.
template <typename Scalar>
class NodeQueue {
 public:
    void push(Node<Scalar> node) { heap_.push(std::move(node)); }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    const Node<Scalar>& top() const { return heap_.top(); }
    Scalar min_bound() const {
        return heap_.empty() ? std::numeric_limits<Scalar>::infinity() : heap_.top().lb;
    }
    Node<Scalar> pop() {
        Node<Scalar> out = heap_.top();
        heap_.pop();
        return out;
    }
    void clear() { heap_ = {}; }

 private:
    struct Later {
        bool operator()(const Node<Scalar>& a, const Node<Scalar>& b) const {
            if (a.lb != b.lb) return a.lb > b.lb;
            return a.id > b.id;
        }
    };
    std::priority_queue<Node<Scalar>, std::vector<Node<Scalar>>, Later> heap_;
};

/// Pops the min(K, |open|) nodes with the smallest bounds.
template <typename Scalar>
std::vector<Node<Scalar>> select_batch(NodeQueue<Scalar>& open, Index K) {
    if (K < 1) throw InvalidArgument("batch size must be >= 1");
    std::vector<Node<Scalar>> out;
    while (!open.empty() && static_cast<Index>(out.size()) < K) out.push_back(open.pop());
    return out;
}

namespace detail {

template <typename Scalar>
Index most_fractional(const VectorX<Scalar>& z_hat, const VectorX<Scalar>& beta, const Fixations& fix,
                      Scalar int_tol) {
    Index best = -1;
    Scalar best_frac(0);
    Scalar best_mag(0);
    for (Index j = 0; j < z_hat.size(); ++j) {
        if (fix.is_zero(j) || fix.is_one(j)) continue;
        const Scalar frac = std::min(z_hat[j], Scalar(1) - z_hat[j]);
        if (frac <= int_tol) continue;
        const Scalar mag = std::abs(beta[j]);
        if (best < 0 || frac > best_frac || (frac == best_frac && mag > best_mag)) {
            best = j;
            best_frac = frac;
            best_mag = mag;
        }
    }
    return best;
}

}  // namespace detail

/// Most fractional free coordinate: maximizes min(z_j, 1 - z_j); ties by larger |beta_j|,
/// then lower index. Throws NoFractional when every free z_j is within int_tol of 0 or 1.
template <typename Scalar>
Index branch_variable(const RelaxationResult<Scalar>& result, const Fixations& fix, Scalar int_tol = Scalar(1e-4)) {
    const Index j = detail::most_fractional(result.z_hat, result.beta_hat, fix, int_tol);
    if (j < 0) throw NoFractional("no fractional free coordinate to branch on");
    return j;
}

enum class SolveStatus { Optimal, GapReached, TimeLimit, NodeLimit, Interrupted };

inline std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::GapReached: return "GapReached";
        case SolveStatus::TimeLimit: return "TimeLimit";
        case SolveStatus::NodeLimit: return "NodeLimit";
        case SolveStatus::Interrupted: return "Interrupted";
    }
    return "Unknown";
}

struct Progress {
    Index iteration = 0;
    double upper_bound = 0;
    double lower_bound = 0;
    double gap = 0;
    Index nodes = 0;
    std::size_t open = 0;
};

enum class NodeAction { PrunedInherited, PrunedBound, PrunedIntegral, Leaf, Branched };

/// Emitted once per node leaving the queue.
struct NodeEvent {
    std::uint64_t id = 0;
    const Fixations* fix = nullptr;
    Index depth = 0;
    double parent_lb = 0;
    double lb = 0;                // bound after solving (parent_lb for PrunedInherited)
    double upper_bound = 0;       // global UB after processing this node
    NodeAction action = NodeAction::Branched;
    Index branch_index = -1;
    Index admm_iterations = 0;
    bool warm_started = false;
    const void* precomputed = nullptr;
};

struct SolveOptions {
    double rho = 1.0;
    Index batch_size = 8;
    double gap_tol = 1e-2;
    double time_limit = std::numeric_limits<double>::infinity();  // seconds
    Index node_limit = std::numeric_limits<Index>::max();
    int threads = 0;  // 0 keeps the current OpenMP setting
    double int_tol = 1e-4;
    std::size_t max_warm_states = 10000;
    AdmmOptions admm;
    FpgOptions fpg;
    MpOptions mp;
    std::function<void(const Progress&)> on_progress;
    std::function<void(const NodeEvent&)> on_node;
    std::stop_token stop;
};

template <typename Scalar>
struct SolveReport {
    Scalar best_objective;
    VectorX<Scalar> best_beta;
    IndexSet support;
    Scalar global_lb;
    Scalar gap;
    Index nodes_solved = 0;
    Index iterations = 0;  // batch rounds
    double wall_time = 0;  // seconds
    SolveStatus status = SolveStatus::Optimal;
    Scalar heuristic_objective;  // matching pursuit value used as the initial upper bound
    std::uint64_t precomputed_fingerprint = 0;
};

template <typename Scalar>
Scalar optimality_gap(Scalar ub, Scalar lb) {
    if (ub > Scalar(0)) return (ub - lb) / ub;
    return ub - lb;
}

namespace detail {

// Parent ADMM states shared by the two children, capped at a fixed count; the oldest
// entries are evicted first and their children start cold.
template <typename Scalar>
class WarmStore {
 public:
    explicit WarmStore(std::size_t cap) : cap_(cap) {}

    void put(std::uint64_t key, AdmmState<Scalar> state) {
        if (cap_ == 0) return;
        entries_[key] = Entry{std::make_shared<const AdmmState<Scalar>>(std::move(state)), 2};
        order_.push_back(key);
        while (entries_.size() > cap_ && !order_.empty()) {
            entries_.erase(order_.front());
            order_.pop_front();
        }
        // Drop stale keys whose entries were already consumed.
        while (!order_.empty() && entries_.find(order_.front()) == entries_.end()) order_.pop_front();
    }

    std::shared_ptr<const AdmmState<Scalar>> take(std::optional<std::uint64_t> key) {
        if (!key) return nullptr;
        auto it = entries_.find(*key);
        if (it == entries_.end()) return nullptr;
        auto state = it->second.state;
        if (--it->second.remaining == 0) entries_.erase(it);
        return state;
    }

    std::size_t size() const { return entries_.size(); }

 private:
    struct Entry {
        std::shared_ptr<const AdmmState<Scalar>> state;
        int remaining;
    };
    std::size_t cap_;
    std::unordered_map<std::uint64_t, Entry> entries_;
    std::deque<std::uint64_t> order_;
};

}  // namespace detail

/// Best-first branch and bound over batches of up to K nodes.
///
/// Each round pops the K open nodes with the smallest bounds, solves their relaxations
/// together with batched ADMM (warm-started from the parent's iterates), rounds the relaxed
/// indicators into supports and solves the box-ridge problems on those supports together.
/// A node is pruned when its bound reaches the incumbent, closed when nothing is left to
/// fix, and otherwise split on its most fractional coordinate.
template <typename Scalar>
SolveReport<Scalar> solve(const ProblemData<Scalar>& prob, const SolveOptions& opts = {}) {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    auto elapsed = [&start] { return std::chrono::duration<double>(Clock::now() - start).count(); };
    if (opts.batch_size < 1) throw InvalidArgument("batch size must be >= 1");
    if (!(opts.gap_tol >= 0)) throw InvalidArgument("gap tolerance must be >= 0");
    parallel::set_threads(opts.threads);

    const Index p = prob.p();
    const Precomputed<Scalar> pre = build_precomputed(prob, Scalar(opts.rho));
    const Scalar prune_factor = Scalar(1) - Scalar(1e-12);
    const Scalar int_tol(opts.int_tol);
    const Scalar gap_tol(opts.gap_tol);
    constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();

    FeasibleSolution<Scalar> incumbent = run_matching_pursuit(prob, opts.mp, opts.fpg);
    SolveReport<Scalar> report;
    report.heuristic_objective = incumbent.objective;
    Scalar ub = incumbent.objective;
    Scalar lb = -inf;
    Scalar closed_floor = inf;  // smallest bound among nodes closed without being exhausted

    NodeQueue<Scalar> open;
    std::uint64_t next_id = 0;
    open.push(Node<Scalar>{Fixations{}, -inf, 0, next_id++, std::nullopt});
    detail::WarmStore<Scalar> warm(opts.max_warm_states);

    auto emit = [&](const Node<Scalar>& node, double node_lb, NodeAction action, Index branch = -1,
                    Index iters = 0, bool warm_started = false) {
        if (!opts.on_node) return;
        NodeEvent ev;
        ev.id = node.id;
        ev.fix = &node.fix;
        ev.depth = node.depth;
        ev.parent_lb = static_cast<double>(node.lb);
        ev.lb = node_lb;
        ev.upper_bound = static_cast<double>(ub);
        ev.action = action;
        ev.branch_index = branch;
        ev.admm_iterations = iters;
        ev.warm_started = warm_started;
        ev.precomputed = &pre;
        opts.on_node(ev);
    };

    SolveStatus status = SolveStatus::Optimal;
    Index nodes_solved = 0;
    Index round = 0;
    for (;;) {
        lb = std::max(lb, std::min({open.min_bound(), closed_floor, ub}));
        if (open.empty()) {
            status = SolveStatus::Optimal;
            break;
        }
        if (optimality_gap(ub, lb) <= gap_tol) {
            status = SolveStatus::GapReached;
            break;
        }
        if (opts.stop.stop_requested()) {
            status = SolveStatus::Interrupted;
            break;
        }
        if (elapsed() >= opts.time_limit) {
            status = SolveStatus::TimeLimit;
            break;
        }
        if (nodes_solved >= opts.node_limit) {
            status = SolveStatus::NodeLimit;
            break;
        }

        std::vector<Node<Scalar>> selected = select_batch(open, opts.batch_size);
        std::vector<Node<Scalar>> work;
        std::vector<std::shared_ptr<const AdmmState<Scalar>>> parents;
        for (auto& node : selected) {
            auto parent_state = warm.take(node.warm_key);
            if (node.lb >= ub * prune_factor) {
                emit(node, static_cast<double>(node.lb), NodeAction::PrunedInherited);
                continue;
            }
            parents.push_back(std::move(parent_state));
            work.push_back(std::move(node));
        }
        if (work.empty()) continue;

        const Index K = static_cast<Index>(work.size());
        AdmmBatch<Scalar> batch(K, p);
        std::vector<Scalar> parent_bounds(static_cast<std::size_t>(K));
        for (Index k = 0; k < K; ++k) {
            const auto& node = work[static_cast<std::size_t>(k)];
            const auto& parent = parents[static_cast<std::size_t>(k)];
            const AdmmState<Scalar> init =
                parent ? warm_start_child(*parent, node.fix, pre) : AdmmState<Scalar>::zeros(p);
            batch.set_row(k, init, node.fix, node.id);
            parent_bounds[static_cast<std::size_t>(k)] = node.lb;
        }
        std::vector<RelaxationResult<Scalar>> relax =
            solve_relaxation_batch(std::move(batch), parent_bounds, prob, pre, opts.admm);
        nodes_solved += K;

        // Upper bounds for every node that survives the incumbent known before this round.
        std::vector<Index> ub_rows;
        for (Index k = 0; k < K; ++k) {
            if (relax[static_cast<std::size_t>(k)].lower_bound < ub * prune_factor) ub_rows.push_back(k);
        }
        std::vector<FeasibleSolution<Scalar>> feasible(static_cast<std::size_t>(K));
        if (!ub_rows.empty()) {
            SupportBatch<Scalar> sb(static_cast<Index>(ub_rows.size()), p);
            for (std::size_t r = 0; r < ub_rows.size(); ++r) {
                const Index k = ub_rows[r];
                sb.set_row(static_cast<Index>(r),
                           round_support(relax[static_cast<std::size_t>(k)].z_hat, work[static_cast<std::size_t>(k)].fix),
                           &incumbent.beta);
            }
            auto sols = fpg_solve_batch(std::move(sb), prob, opts.fpg);
            for (std::size_t r = 0; r < ub_rows.size(); ++r) {
                feasible[static_cast<std::size_t>(ub_rows[r])] = std::move(sols[r]);
            }
        }

        for (Index k = 0; k < K; ++k) {
            auto& node = work[static_cast<std::size_t>(k)];
            auto& res = relax[static_cast<std::size_t>(k)];
            const auto& sol = feasible[static_cast<std::size_t>(k)];
            const bool warm_started = parents[static_cast<std::size_t>(k)] != nullptr;
            if (sol.objective < ub) {
                ub = sol.objective;
                incumbent = sol;
            }
            const Scalar node_lb = res.lower_bound;
            if (node_lb >= ub * prune_factor) {
                emit(node, static_cast<double>(node_lb), NodeAction::PrunedBound, -1, res.iterations, warm_started);
                continue;
            }
            // With every coordinate fixed the box-ridge solve on F1 is the node optimum.
            if (static_cast<Index>(node.fix.fixed_count()) == p) {
                emit(node, static_cast<double>(node_lb), NodeAction::Leaf, -1, res.iterations, warm_started);
                continue;
            }
            Index j = detail::most_fractional(res.z_hat, res.beta_hat, node.fix, int_tol);
            if (j < 0) {
                // Integral relaxation: its rounded support is optimal for the node up to the
                // relaxation's own gap. Close it when that gap is within tolerance.
                const Scalar node_gap = optimality_gap(sol.objective, node_lb);
                if (node_gap <= gap_tol) {
                    closed_floor = std::min(closed_floor, node_lb);
                    emit(node, static_cast<double>(node_lb), NodeAction::PrunedIntegral, -1, res.iterations,
                         warm_started);
                    continue;
                }
                j = detail::most_fractional(res.z_hat, res.beta_hat, node.fix, Scalar(-1));
            }
            emit(node, static_cast<double>(node_lb), NodeAction::Branched, j, res.iterations, warm_started);
            std::optional<std::uint64_t> key;
            if (opts.max_warm_states > 0) {
                warm.put(node.id, std::move(res.state));
                key = node.id;
            }
            open.push(Node<Scalar>{node.fix.with_zero(j), node_lb, node.depth + 1, next_id++, key});
            open.push(Node<Scalar>{node.fix.with_one(j), node_lb, node.depth + 1, next_id++, key});
        }

        ++round;
        if (opts.on_progress) {
            const Scalar shown_lb = std::max(lb, std::min({open.min_bound(), closed_floor, ub}));
            opts.on_progress(Progress{round, static_cast<double>(ub), static_cast<double>(shown_lb),
                                      static_cast<double>(optimality_gap(ub, shown_lb)), nodes_solved, open.size()});
        }
    }

    // Final tightening of the incumbent's coefficients on its own support.
    if (!incumbent.support.empty()) {
        FpgOptions tight = opts.fpg;
        tight.tol = std::min(tight.tol, 1e-12);
        tight.max_iters = std::max<Index>(tight.max_iters, 20000);
        FeasibleSolution<Scalar> refined = fpg_solve(incumbent.support, prob, &incumbent.beta, tight);
        if (refined.objective < incumbent.objective) incumbent = std::move(refined);
    }
    ub = incumbent.objective;
    if (status == SolveStatus::Optimal) lb = std::min(closed_floor, ub);
    lb = std::min(lb, ub);

    report.best_objective = ub;
    report.best_beta = incumbent.beta;
    report.support = incumbent.support;
    report.global_lb = lb;
    report.gap = optimality_gap(ub, lb);
    report.nodes_solved = nodes_solved;
    report.iterations = round;
    report.wall_time = elapsed();
    report.status = status;
    report.precomputed_fingerprint = pre.fingerprint();
    return report;
}

}  // namespace sparsebnb

#endif  // SPARSEBNB_BNB_HPP_
