#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "sparsebnb/data_io.hpp"

namespace sparsebnb {

void SyntheticSpec::validate() const {
    if (n < 1 || p < 1) throw InvalidSpec("n and p must be positive");
    if (k0 < 0 || k0 > p) throw InvalidSpec("k0 must lie in [0, p]");
    if (!(corr >= 0.0 && corr < 1.0)) throw InvalidSpec("corr must lie in [0, 1)");
    if (!(snr > 0.0) || !std::isfinite(snr)) throw InvalidSpec("snr must be positive and finite");
}

IndexSet Instance::true_support() const {
    IndexSet out;
    for (Index j = 0; j < beta_true.size(); ++j) {
        if (beta_true[j] != 0.0) out.push_back(j);
    }
    return out;
}

double NormalSampler::uniform() {
    // 53 random bits mapped to [-1, 1).
    return static_cast<double>(engine_() >> 11) * 0x1.0p-52 - 1.0;
}

double NormalSampler::operator()() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = 0, v = 0, s = 0;
    do {
        u = uniform();
        v = uniform();
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
}

Instance generate(const SyntheticSpec& spec) {
    spec.validate();
    NormalSampler normal(spec.seed);
    const double shared = std::sqrt(spec.corr);
    const double own = std::sqrt(1.0 - spec.corr);

    Instance inst;
    inst.X.resize(spec.n, spec.p);
    for (Index i = 0; i < spec.n; ++i) {
        const double g = normal();
        for (Index j = 0; j < spec.p; ++j) inst.X(i, j) = shared * g + own * normal();
    }
    inst.beta_true = Eigen::VectorXd::Zero(spec.p);
    for (Index i = 0; i < spec.k0; ++i) inst.beta_true[(i * spec.p) / spec.k0] = 1.0;

    const Eigen::VectorXd signal = inst.X * inst.beta_true;
    const double var = (signal.array() - signal.mean()).square().sum() / static_cast<double>(spec.n);
    inst.sigma = std::sqrt(var / spec.snr);
    Eigen::VectorXd noise(spec.n);
    for (Index i = 0; i < spec.n; ++i) noise[i] = normal();
    inst.y = signal + inst.sigma * noise;
    return inst;
}

std::vector<double> lambda2_grid() {
    std::vector<double> out(100);
    for (int i = 0; i < 100; ++i) out[static_cast<std::size_t>(i)] = std::pow(10.0, -4.0 + 8.0 * i / 99.0);
    return out;
}

Lambda2Tuning tune_lambda2(const Instance& inst) {
    const IndexSet support = inst.true_support();
    const Index k = static_cast<Index>(support.size());
    Lambda2Tuning best;
    best.beta = Eigen::VectorXd::Zero(inst.X.cols());
    if (k == 0) {
        best.lambda2 = lambda2_grid().front();
        return best;
    }
    Eigen::MatrixXd Xs(inst.X.rows(), k);
    for (Index c = 0; c < k; ++c) Xs.col(c) = inst.X.col(support[static_cast<std::size_t>(c)]);
    const Eigen::MatrixXd gram = Xs.transpose() * Xs;
    const Eigen::VectorXd rhs = Xs.transpose() * inst.y;
    Eigen::VectorXd truth(k);
    for (Index c = 0; c < k; ++c) truth[c] = inst.beta_true[support[static_cast<std::size_t>(c)]];

    double best_err = std::numeric_limits<double>::infinity();
    for (double l2 : lambda2_grid()) {
        const Eigen::MatrixXd A = gram + 2.0 * l2 * Eigen::MatrixXd::Identity(k, k);
        const Eigen::VectorXd b = A.ldlt().solve(rhs);
        const double err = (b - truth).norm();
        if (err < best_err) {
            best_err = err;
            best.lambda2 = l2;
            best.beta.setZero();
            for (Index c = 0; c < k; ++c) best.beta[support[static_cast<std::size_t>(c)]] = b[c];
        }
    }
    best.m_star = best.beta.cwiseAbs().maxCoeff();
    return best;
}

double lambda0_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda2) {
    const Eigen::VectorXd c = X.transpose() * y;
    const Eigen::VectorXd d = X.colwise().squaredNorm().transpose().array() + 2.0 * lambda2;
    return (c.array().square() / (2.0 * d.array())).maxCoeff();
}

std::vector<double> lambda0_grid(double lambda_max, Index count, double ratio) {
    if (!(lambda_max > 0) || count < 1 || !(ratio > 0 && ratio < 1)) {
        throw InvalidArgument("lambda0_grid needs lambda_max > 0, count >= 1 and ratio in (0, 1)");
    }
    std::vector<double> out;
    double value = lambda_max;
    for (Index i = 0; i < count; ++i, value *= ratio) out.push_back(value);
    return out;
}

}  // namespace sparsebnb
