#ifndef SPARSEBNB_DATA_IO_HPP_
#define SPARSEBNB_DATA_IO_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "sparsebnb/bnb.hpp"
#include "sparsebnb/types.hpp"

namespace sparsebnb {

/// Parameters of a synthetic instance. `corr` is the pairwise feature correlation.
struct SyntheticSpec {
    Index n = 100;
    Index p = 1000;
    Index k0 = 5;
    double corr = 0.0;
    double snr = 10.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Instance {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd beta_true;
    double sigma = 0;

    IndexSet true_support() const;
};

/// Standard normal draws from std::mt19937_64 via the Marsaglia polar method.
/// Spelled out by hand because std::normal_distribution differs across standard libraries.
class NormalSampler {
 public:
    explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}
    double operator()();

 private:
    double uniform();
    std::mt19937_64 engine_;
    double spare_ = 0;
    bool has_spare_ = false;
};

/// Rows are sqrt(corr) g 1 + sqrt(1 - corr) e with g, e iid N(0, 1), drawn row by row
/// (g first, then e_1..e_p). beta_true has k0 ones at indices floor(i p / k0).
/// sigma^2 = Var(X beta_true) / snr with the empirical (1/n, centered) variance, and
/// y = X beta_true + sigma * noise with noise drawn after X.
Instance generate(const SyntheticSpec& spec);

/// 100 points spaced evenly in log10 from 1e-4 to 1e4.
std::vector<double> lambda2_grid();

struct Lambda2Tuning {
    double lambda2 = 0;
    Eigen::VectorXd beta;  // ridge solution restricted to the true support
    double m_star = 0;     // ||beta||_inf
    double big_m(double factor = 1.5) const { return factor * m_star; }
};

/// Grid search for the lambda2 whose support-restricted ridge estimate is closest to
/// beta_true in l2. Ties go to the smaller lambda2.
Lambda2Tuning tune_lambda2(const Instance& inst);

/// Smallest lambda0 for which the empty model admits no improving single-coordinate move
/// (ignoring the box): max_j (X_j^T y)^2 / (2 (||X_j||^2 + 2 lambda2)).
double lambda0_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda2);

/// Geometric grid from lambda0_max down by `ratio` per step.
std::vector<double> lambda0_grid(double lambda_max, Index count, double ratio = 0.7);

struct CsvOptions {
    bool center = false;     // subtract column means from X and the mean from y
    bool normalize = false;  // scale columns of X and y to unit l2 norm
};

struct CsvData {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
};

/// Reads a numeric CSV without header. Throws ParseError with 1-based row and column.
Eigen::MatrixXd read_csv_matrix(const std::string& path);

/// X is n x p, y is n x 1 (one value per line). Throws DimensionMismatch on row mismatch.
CsvData load_csv(const std::string& path_x, const std::string& path_y, const CsvOptions& opts = {});

void write_csv(const std::string& path, const Eigen::MatrixXd& M);

/// Fixed-order JSON report. `config` is echoed verbatim under "config".
nlohmann::ordered_json report_to_json(const SolveReport<double>& report, const nlohmann::ordered_json& config = {});

void write_report(const SolveReport<double>& report, const std::string& path,
                  const nlohmann::ordered_json& config = {});

/// Parsed form of a written report.
struct ReportRecord {
    std::string status;
    double objective = 0;
    double lower_bound = 0;
    double gap = 0;
    IndexSet support;
    std::vector<double> coefficients;  // beta on the support, same order
    Index nodes = 0;
    double wall_time = 0;
    nlohmann::ordered_json config;
};

ReportRecord read_report(const std::string& path);

}  // namespace sparsebnb

#endif  // SPARSEBNB_DATA_IO_HPP_
