#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "sparsebnb/data_io.hpp"
#include "sparsebnb/sparsebnb.hpp"

namespace sparsebnb::cli {

namespace {

std::string env_name(const std::string& flag) {
    std::string out = "SPARSEBNB_";
    for (char c : flag) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& value, const std::string& help) {
    return app->add_option("--" + name, value, help)->envname(env_name(name));
}

struct SyntheticFlags {
    SyntheticSpec spec;

    void attach(CLI::App* app) {
        flag(app, "n", spec.n, "Number of samples")->check(CLI::PositiveNumber)->capture_default_str();
        flag(app, "p", spec.p, "Number of features")->check(CLI::PositiveNumber)->capture_default_str();
        flag(app, "k0", spec.k0, "Number of true nonzeros")->check(CLI::NonNegativeNumber)->capture_default_str();
        flag(app, "corr", spec.corr, "Pairwise feature correlation in [0, 1)")->capture_default_str();
        flag(app, "snr", spec.snr, "Signal-to-noise ratio")->check(CLI::PositiveNumber)->capture_default_str();
        flag(app, "seed", spec.seed, "Random seed")->capture_default_str();
    }
};

struct SolverFlags {
    double lambda0 = 0;
    double lambda2 = 0;
    double big_m = 0;
    SolveOptions opts;
    bool quiet = false;

    void attach(CLI::App* app, bool penalties_required) {
        auto* l0 = flag(app, "lambda0", lambda0, "l0 penalty")->check(CLI::NonNegativeNumber);
        auto* l2 = flag(app, "lambda2", lambda2, "Ridge penalty")->check(CLI::PositiveNumber);
        auto* m = flag(app, "big-m", big_m, "Box bound on coefficients")->check(CLI::PositiveNumber);
        l0->required();
        if (penalties_required) {
            l2->required();
            m->required();
        }
        flag(app, "rho", opts.rho, "ADMM penalty parameter")->check(CLI::PositiveNumber)->capture_default_str();
        flag(app, "gap-tol", opts.gap_tol, "Relative optimality gap tolerance")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        flag(app, "time-limit", opts.time_limit, "Time limit in seconds")->check(CLI::PositiveNumber);
        flag(app, "node-limit", opts.node_limit, "Maximum number of node relaxations")->check(CLI::PositiveNumber);
        flag(app, "threads", opts.threads, "Worker threads (0 keeps the OpenMP default)")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        flag(app, "int-tol", opts.int_tol, "Integrality tolerance on relaxed indicators")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        flag(app, "max-warm-states", opts.max_warm_states, "Cap on stored parent ADMM states")->capture_default_str();
        flag(app, "admm-tol", opts.admm.tol, "Relative primal-dual gap for node relaxations")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        flag(app, "admm-max-iters", opts.admm.max_iters, "ADMM iteration cap per node")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        flag(app, "admm-check-every", opts.admm.check_every, "ADMM iterations between gap checks")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        flag(app, "fpg-tol", opts.fpg.tol, "Projected gradient stopping tolerance")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        flag(app, "fpg-max-iters", opts.fpg.max_iters, "Projected gradient iteration cap")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        app->add_flag("--quiet", quiet, "Suppress progress lines")->envname(env_name("quiet"));
    }

    nlohmann::ordered_json echo() const {
        nlohmann::ordered_json c;
        c["lambda0"] = lambda0;
        c["lambda2"] = lambda2;
        c["big_m"] = big_m;
        c["rho"] = opts.rho;
        c["batch"] = opts.batch_size;
        c["gap_tol"] = opts.gap_tol;
        if (std::isfinite(opts.time_limit)) c["time_limit"] = opts.time_limit;
        if (opts.node_limit != std::numeric_limits<Index>::max()) c["node_limit"] = opts.node_limit;
        c["threads"] = opts.threads;
        c["int_tol"] = opts.int_tol;
        c["admm_tol"] = opts.admm.tol;
        c["admm_max_iters"] = opts.admm.max_iters;
        c["fpg_tol"] = opts.fpg.tol;
        c["fpg_max_iters"] = opts.fpg.max_iters;
        return c;
    }
};

void attach_progress(SolveOptions& opts, std::ostream& err, bool quiet) {
    if (quiet) return;
    opts.on_progress = [&err](const Progress& pr) {
        std::ostringstream line;
        line << std::setprecision(10) << "iter=" << pr.iteration << " ub=" << pr.upper_bound << " lb=" << pr.lower_bound
             << " gap=" << pr.gap << " nodes=" << pr.nodes << " open=" << pr.open << '\n';
        err << line.str() << std::flush;
    };
}

int status_exit(SolveStatus s) {
    return (s == SolveStatus::Optimal || s == SolveStatus::GapReached) ? kOk : kLimit;
}

std::vector<Index> parse_batch_list(const std::string& text) {
    std::vector<Index> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || v < 1) throw InvalidArgument("bad batch size '" + item + "' in --batch");
        out.push_back(static_cast<Index>(v));
    }
    if (out.empty()) throw InvalidArgument("--batch needs at least one value");
    return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::stop_token stop) {
    CLI::App app{"Exact l0-l2 sparse regression by batched branch and bound", "sparsebnb"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic instance (X.csv, y.csv, truth.csv)");
    SyntheticFlags gen_flags;
    gen_flags.attach(gen);
    std::string out_dir = ".";
    flag(gen, "out-dir", out_dir, "Output directory")->capture_default_str();

    // tune
    auto* tune = app.add_subcommand("tune", "Select lambda2 on a synthetic instance and print lambda2* and M*");
    std::string tune_x, tune_y, tune_truth;
    flag(tune, "x", tune_x, "Design matrix CSV")->required();
    flag(tune, "y", tune_y, "Response CSV")->required();
    flag(tune, "truth", tune_truth, "True coefficient CSV")->required();

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "Solve an instance to a certified gap and write a report");
    SolverFlags solve_flags;
    solve_flags.attach(solve_cmd, true);
    std::string solve_x, solve_y, report_path = "report.json";
    CsvOptions csv_opts;
    flag(solve_cmd, "x", solve_x, "Design matrix CSV")->required();
    flag(solve_cmd, "y", solve_y, "Response CSV")->required();
    flag(solve_cmd, "batch", solve_flags.opts.batch_size, "Nodes per batch round")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    flag(solve_cmd, "report", report_path, "Report output path")->capture_default_str();
    solve_cmd->add_flag("--center", csv_opts.center, "Mean-center columns of X and y")->envname(env_name("center"));
    solve_cmd->add_flag("--normalize", csv_opts.normalize, "Scale columns of X and y to unit norm")
        ->envname(env_name("normalize"));

    // bench
    auto* bench = app.add_subcommand("bench", "Solve one instance for several batch sizes and print a table");
    SolverFlags bench_flags;
    bench_flags.attach(bench, false);
    SyntheticFlags bench_syn;
    bench_syn.attach(bench);
    std::string bench_x, bench_y, batch_list = "1,8,32";
    flag(bench, "x", bench_x, "Design matrix CSV (default: synthetic instance from the generator flags)");
    flag(bench, "y", bench_y, "Response CSV");
    flag(bench, "batch", batch_list, "Comma-separated batch sizes")->capture_default_str();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        const CLI::App* failing = &app;
        for (auto* sub : app.get_subcommands()) failing = sub;
        err << failing->help();
        return kError;
    }

    try {
        if (gen->parsed()) {
            const Instance inst = generate(gen_flags.spec);
            std::filesystem::create_directories(out_dir);
            const auto dir = std::filesystem::path(out_dir);
            write_csv((dir / "X.csv").string(), inst.X);
            write_csv((dir / "y.csv").string(), inst.y);
            write_csv((dir / "truth.csv").string(), inst.beta_true);
            out << "wrote " << (dir / "X.csv").string() << " n=" << inst.X.rows() << " p=" << inst.X.cols()
                << std::setprecision(17) << " sigma=" << inst.sigma << '\n';
            return kOk;
        }
        if (tune->parsed()) {
            const CsvData data = load_csv(tune_x, tune_y);
            const Eigen::MatrixXd truth = read_csv_matrix(tune_truth);
            if (truth.cols() != 1 || truth.rows() != data.X.cols()) {
                throw DimensionMismatch("truth must hold one value per column of X");
            }
            Instance inst{data.X, data.y, truth.col(0), 0.0};
            const Lambda2Tuning t = tune_lambda2(inst);
            out << std::setprecision(17) << "lambda2=" << t.lambda2 << " m_star=" << t.m_star
                << " big_m=" << t.big_m() << '\n';
            return kOk;
        }
        if (solve_cmd->parsed()) {
            const CsvData data = load_csv(solve_x, solve_y, csv_opts);
            const ProblemData<double> prob(data.X, data.y, solve_flags.lambda0, solve_flags.lambda2, solve_flags.big_m);
            SolveOptions opts = solve_flags.opts;
            opts.stop = stop;
            attach_progress(opts, err, solve_flags.quiet);
            const SolveReport<double> rep = sparsebnb::solve(prob, opts);
            auto config = solve_flags.echo();
            config["x"] = solve_x;
            config["y"] = solve_y;
            config["center"] = csv_opts.center;
            config["normalize"] = csv_opts.normalize;
            write_report(rep, report_path, config);
            out << std::setprecision(17) << "status=" << to_string(rep.status) << " objective=" << rep.best_objective
                << " lower_bound=" << rep.global_lb << " gap=" << rep.gap << " nodes=" << rep.nodes_solved
                << " report=" << report_path << '\n';
            return status_exit(rep.status);
        }
        if (bench->parsed()) {
            const std::vector<Index> batches = parse_batch_list(batch_list);
            Eigen::MatrixXd X;
            Eigen::VectorXd y;
            double lambda2 = bench_flags.lambda2;
            double big_m = bench_flags.big_m;
            if (!bench_x.empty() || !bench_y.empty()) {
                if (bench_x.empty() || bench_y.empty()) throw InvalidArgument("--x and --y must be given together");
                if (lambda2 <= 0 || big_m <= 0) throw InvalidArgument("--lambda2 and --big-m are required with --x");
                CsvData data = load_csv(bench_x, bench_y);
                X = std::move(data.X);
                y = std::move(data.y);
            } else {
                Instance inst = generate(bench_syn.spec);
                if (lambda2 <= 0 || big_m <= 0) {
                    const Lambda2Tuning t = tune_lambda2(inst);
                    if (lambda2 <= 0) lambda2 = t.lambda2;
                    if (big_m <= 0) big_m = t.big_m();
                }
                X = std::move(inst.X);
                y = std::move(inst.y);
            }
            const ProblemData<double> prob(X, y, bench_flags.lambda0, lambda2, big_m);
            out << std::setprecision(17) << "# lambda0=" << bench_flags.lambda0 << " lambda2=" << lambda2
                << " big_m=" << big_m << '\n';
            out << "K nodes rounds wall_time nodes_per_sec gap objective status\n";
            int code = kOk;
            for (Index K : batches) {
                SolveOptions opts = bench_flags.opts;
                opts.batch_size = K;
                opts.stop = stop;
                attach_progress(opts, err, bench_flags.quiet);
                const SolveReport<double> rep = sparsebnb::solve(prob, opts);
                const double rate = rep.wall_time > 0 ? static_cast<double>(rep.nodes_solved) / rep.wall_time : 0.0;
                out << K << ' ' << rep.nodes_solved << ' ' << rep.iterations << ' ' << std::setprecision(6)
                    << rep.wall_time << ' ' << rate << ' ' << rep.gap << ' ' << std::setprecision(17)
                    << rep.best_objective << ' ' << to_string(rep.status) << '\n';
                code = std::max(code, status_exit(rep.status));
            }
            return code;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kError;
    }
    return kError;
}

}  // namespace sparsebnb::cli
