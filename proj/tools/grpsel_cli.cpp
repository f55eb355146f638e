#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <grpsel/grpsel.hpp>

namespace {

using namespace grpsel;

struct DataArgs
{
    std::string x_path;
    std::string y_path;
    std::string groups_path;
    std::string task = "square";
    std::string shrink = "none";
    bool spline = false;
    double spline_alpha = 0.5;
    Index knots = 3;
};

struct PathArgs
{
    Index nlambda0 = 100;
    double alpha_prop3 = 0.9;
    Index nsecondary = 10;
    std::vector<double> secondary;
    Index max_active = 0;
    bool group_lasso = false;
    bool local_search = false;
    double tol = 1e-4;
    std::uint64_t seed = 0;
};

void add_data_options(CLI::App* cmd, DataArgs& d)
{
    cmd->add_option("--X", d.x_path, "headerless CSV of predictors")->required()->check(CLI::ExistingFile);
    cmd->add_option("--y", d.y_path, "headerless CSV of responses")->required()->check(CLI::ExistingFile);
    cmd->add_option("--groups", d.groups_path, "one group of zero-based column indices per line")
        ->check(CLI::ExistingFile);
    cmd->add_option("--task", d.task, "square|logistic")->check(CLI::IsMember({"square", "logistic"}));
    cmd->add_option("--shrink", d.shrink, "none|lasso|ridge")->check(CLI::IsMember({"none", "lasso", "ridge"}));
    cmd->add_flag("--spline", d.spline, "expand every column into linear and nonlinear spline groups");
    cmd->add_option("--spline-alpha", d.spline_alpha, "linear group weight in (0, 0.5]");
    cmd->add_option("--knots", d.knots, "spline knots per predictor");
}

void add_path_options(CLI::App* cmd, PathArgs& p)
{
    cmd->add_option("--nlambda0", p.nlambda0, "maximum points per lambda0 path");
    cmd->add_option("--alpha-prop3", p.alpha_prop3, "adaptive lambda0 step fraction in [0, 1)");
    cmd->add_option("--nsecondary", p.nsecondary, "size of the lambda1 / lambda2 grid");
    cmd->add_option("--secondary", p.secondary, "explicit lambda1 / lambda2 values");
    cmd->add_option("--max-active", p.max_active, "stop a path past this many active groups");
    cmd->add_flag("--group-lasso", p.group_lasso, "plain group lasso path (lambda0 = 0)");
    cmd->add_flag("--local-search", p.local_search, "refine every path point by swap local search");
    cmd->add_option("--tol", p.tol, "convergence tolerance");
    cmd->add_option("--seed", p.seed, "seed recorded in the output and used for folds");
}

struct LoadedData
{
    Matrix raw;
    GroupedProblem problem;
    std::optional<SplineExpansion> spline;
};

LoadedData load_data(const DataArgs& d)
{
    LoadedData out;
    out.raw = read_csv(d.x_path);
    out.problem.y = read_vector(d.y_path);
    out.problem.task = parse_loss_kind(d.task);
    if (out.problem.y.size() != out.raw.rows()) {
        throw Error(d.y_path + ": has " + std::to_string(out.problem.y.size()) + " rows but " + d.x_path +
                    " has " + std::to_string(out.raw.rows()));
    }
    if (d.spline) {
        if (!d.groups_path.empty()) throw Error("--spline builds its own groups; drop --groups");
        SplineProblem sp = build_spline_groups(out.raw, d.knots + 1, d.knots, d.spline_alpha);
        out.problem.X = std::move(sp.X);
        out.problem.groups = std::move(sp.groups.groups);
        out.problem.group_weights = std::move(sp.groups.weights);
        out.spline = std::move(sp.expansion);
    } else {
        out.problem.X = out.raw;
        if (d.groups_path.empty()) {
            for (Index j = 0; j < out.raw.cols(); ++j) out.problem.groups.push_back({j});
        } else {
            out.problem.groups = read_groups(d.groups_path);
        }
    }
    return out;
}

PathSpec make_spec(const PathArgs& p)
{
    PathSpec spec;
    spec.n_lambda0 = p.nlambda0;
    spec.alpha = p.alpha_prop3;
    spec.n_secondary = p.nsecondary;
    spec.secondary_values = p.secondary;
    spec.max_active_groups = p.max_active;
    spec.group_lasso = p.group_lasso;
    return spec;
}

FitOptions make_fit_options(const PathArgs& p)
{
    FitOptions opt;
    opt.solver.tol = p.tol;
    opt.local_search = p.local_search;
    return opt;
}

void emit(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(path + ": cannot open for writing");
    out << text;
    if (!out) throw Error(path + ": write failed");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void cmd_fit(const DataArgs& d, const PathArgs& p, const std::string& out)
{
    LoadedData data = load_data(d);
    PathResult path = fit_path(data.problem, make_spec(p), parse_shrink_kind(d.shrink), make_fit_options(p));
    path.seed = p.seed;
    path.data_hash = data_fingerprint(data.raw, data.problem.y);
    emit(out, dump(path_json(path, data.spline)));
}

void cmd_cv(const DataArgs& d, const PathArgs& p, Index folds, const std::vector<double>& alphas,
            const std::string& out)
{
    LoadedData data = load_data(d);
    CvOptions cv;
    cv.folds = folds;
    cv.seed = p.seed;
    const PathSpec spec = make_spec(p);
    const ShrinkKind shrink = parse_shrink_kind(d.shrink);
    const FitOptions opt = make_fit_options(p);
    Json j;
    if (d.spline) {
        AlphaCvResult res = alpha_grid_cv(data.raw, data.problem.y, data.problem.task,
                                          alphas.empty() ? std::vector<double>{d.spline_alpha} : alphas,
                                          spec, shrink, opt, cv, d.knots + 1, d.knots);
        CvResult chosen = res.cv();
        chosen.full_path.seed = p.seed;
        chosen.full_path.data_hash = data_fingerprint(data.raw, data.problem.y);
        const SplineExpansion expansion = fit_spline_expansion(data.raw, d.knots + 1, d.knots);
        j = cv_json(chosen, expansion);
        Json per_alpha = Json::array();
        for (std::size_t a = 0; a < res.alphas.size(); ++a) {
            const auto& r = res.per_alpha[a];
            per_alpha.push_back({{"alpha", res.alphas[a]},
                                 {"best_mean", r.cells[static_cast<std::size_t>(r.selected_cell)].mean}});
        }
        j["alpha_grid"] = std::move(per_alpha);
        j["selected_alpha"] = res.alpha();
    } else {
        if (!alphas.empty()) throw Error("--alphas applies only with --spline");
        CvResult res = cross_validate(data.problem, spec, shrink, opt, cv);
        res.full_path.seed = p.seed;
        res.full_path.data_hash = data_fingerprint(data.raw, data.problem.y);
        j = cv_json(res);
    }
    emit(out, dump(j));
}

void cmd_predict(const std::string& model_path, const std::string& x_path, std::optional<Index> point,
                 const std::string& out)
{
    std::ifstream in(model_path);
    if (!in) throw Error(model_path + ": cannot open file");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error(model_path + ": " + e.what());
    }
    const LinearModel model = model_from_json(j, point);
    const Vector pred = model.predict(read_csv(x_path));
    std::string text;
    for (Index i = 0; i < pred.size(); ++i) text += format_double(pred[i]) + "\n";
    emit(out, text);
}

void cmd_generate(SyntheticSpec spec, const std::string& design, const std::string& task,
                  const std::string& correlation, const std::string& outdir)
{
    spec.grouped_linear = design == "grouped";
    spec.task = parse_loss_kind(task);
    spec.correlation = parse_correlation_kind(correlation);
    const SyntheticData data = generate_synthetic(spec);
    std::filesystem::create_directories(outdir);
    const std::filesystem::path dir(outdir);
    write_csv((dir / "X.csv").string(), data.X);
    write_csv((dir / "y.csv").string(), Matrix(data.y));
    if (spec.grouped_linear) write_groups((dir / "groups.txt").string(), data.groups);
    Json truth;
    truth["schema"] = "grpsel.truth/1";
    truth["f0"] = detail::vector_json(data.f0);
    truth["sigma"] = data.sigma;
    truth["true_groups"] = data.true_groups;
    std::vector<std::string> labels;
    for (auto l : data.labels) labels.push_back(to_string(l));
    truth["labels"] = labels;
    truth["spec"] = {{"design", design}, {"task", task}, {"correlation", correlation}, {"n", spec.n},
                     {"predictors", spec.predictors}, {"rho", spec.rho}, {"snr", spec.snr},
                     {"group_size", spec.group_size}, {"true_groups", spec.true_groups},
                     {"linear", spec.n_linear}, {"cos", spec.n_cos}, {"sin", spec.n_sin},
                     {"seed", spec.seed}};
    emit((dir / "truth.json").string(), dump(truth));
}

/// Solver path against the exhaustive oracle, either per λ0 at the same
/// penalty or, with a sparsity level, on the loss at that many groups.
void cmd_oracle(const DataArgs& d, const PathArgs& p, long long budget, Index sparsity, const std::string& out)
{
    LoadedData data = load_data(d);
    const ShrinkKind shrink = parse_shrink_kind(d.shrink);
    if (p.group_lasso) throw Error("oracle compares subset paths; drop --group-lasso");
    PathSpec spec = make_spec(p);
    const FitOptions opt = make_fit_options(p);
    const PreparedProblem prep = prepare(data.problem, opt.pipeline);
    PathResult path = fit_path(prep, spec, shrink, opt);
    const auto& sp = prep.solver_problem;
    OracleOptions oopt;
    oopt.budget = budget;

    Json j;
    j["schema"] = "grpsel.oracle/1";
    j["data_hash"] = data_fingerprint(data.raw, data.problem.y);
    j["seed"] = p.seed;
    Json rows = Json::array();
    auto solver_value = [&](const PathPoint& pt, const PenaltyConfig& cfg, bool loss_only) {
        const double loss = loss_value(sp.task, sp.X, sp.y, pt.theta, pt.solver_intercept);
        return loss_only ? loss : loss + omega(cfg, sp.groups, pt.theta);
    };
    if (sparsity > 0) {
        for (Index si = 0; si < static_cast<Index>(path.secondary_values.size()); ++si) {
            const auto found = point_with_sparsity(prep, path, sparsity, si, opt);
            if (!found) continue;
            const PathPoint& pt = *found;
            PenaltyConfig cfg = make_penalty(sp.groups, sp.group_weights, shrink, 0.0, pt.lambda1, pt.lambda2);
            const OracleResult best = solve_exhaustive(sp, cfg, sparsity, oopt);
            const double solver = solver_value(pt, cfg, true);
            rows.push_back({{"secondary_index", pt.secondary_index}, {"position", pt.position},
                            {"lambda0", pt.lambda0}, {"solver_loss", solver}, {"oracle_loss", best.best_loss},
                            {"gap", (solver - best.best_loss) / best.best_loss},
                            {"solver_groups", pt.active}, {"oracle_groups", best.best_subset}});
        }
        if (rows.empty()) throw Error("the solver produced no solution with " + std::to_string(sparsity) + " active groups");
        j["sparsity"] = sparsity;
    } else {
        for (const auto& pt : path.points) {
            PenaltyConfig cfg = make_penalty(sp.groups, sp.group_weights, shrink, pt.lambda0, pt.lambda1, pt.lambda2);
            const Index cap = spec.max_active_groups > 0 ? spec.max_active_groups + 1 : sp.g();
            const OracleResult best = solve_exhaustive(sp, cfg, std::min(cap, sp.g()), oopt);
            const double solver = solver_value(pt, cfg, false);
            rows.push_back({{"secondary_index", pt.secondary_index}, {"position", pt.position},
                            {"lambda0", pt.lambda0}, {"solver_objective", solver},
                            {"oracle_objective", best.best_objective},
                            {"gap", (solver - best.best_objective) / best.best_objective},
                            {"solver_groups", pt.active}, {"oracle_groups", best.best_subset}});
        }
    }
    j["points"] = std::move(rows);
    emit(out, dump(j));
}

void cmd_clean(const std::string& in, const std::string& out, std::string log, double threshold)
{
    Matrix X = read_csv(in, true);
    const CleanReport report = clean_columns(X, threshold);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    write_csv(out, X);
    if (log.empty()) log = out + ".log";
    std::string text = "row,col,original,imputed\n";
    for (const auto& c : report.cells) {
        text += std::to_string(c.row) + "," + std::to_string(c.col) + "," +
                (std::isnan(c.original) ? std::string("NA") : format_double(c.original)) + "," +
                format_double(c.imputed) + "\n";
    }
    emit(log, text);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Group subset selection: regularization paths, cross-validation and utilities"};
    app.require_subcommand(1);

    DataArgs data;
    PathArgs path;
    std::string out;

    auto* fit = app.add_subcommand("fit", "fit a regularization path, write JSON");
    add_data_options(fit, data);
    add_path_options(fit, path);
    fit->add_option("--out", out, "output file (default stdout)");

    Index folds = 5;
    std::vector<double> alphas;
    auto* cv = app.add_subcommand("cv", "K-fold cross-validation over the path grids, write JSON");
    add_data_options(cv, data);
    add_path_options(cv, path);
    cv->add_option("--folds", folds, "number of folds");
    cv->add_option("--alphas", alphas, "linear group weights to cross-validate (with --spline)");
    cv->add_option("--out", out, "output file (default stdout)");

    std::string model_path;
    std::string x_path;
    std::optional<Index> point;
    auto* predict = app.add_subcommand("predict", "predict from a fit or cv JSON, one value per row");
    predict->add_option("--model", model_path, "fit or cv output")->required()->check(CLI::ExistingFile);
    predict->add_option("--X", x_path, "headerless CSV of predictors")->required()->check(CLI::ExistingFile);
    predict->add_option("--point", point, "path point index (default: last, or the cv selection)");
    predict->add_option("--out", out, "output file (default stdout)");

    SyntheticSpec syn;
    std::string design = "semiparam";
    std::string syn_task = "square";
    std::string correlation = "toeplitz";
    std::string outdir;
    auto* generate = app.add_subcommand("generate", "write synthetic X.csv, y.csv and truth.json");
    generate->add_option("--seed", syn.seed, "random seed")->required();
    generate->add_option("--design", design, "grouped|semiparam")->check(CLI::IsMember({"grouped", "semiparam"}));
    generate->add_option("--task", syn_task, "square|logistic")->check(CLI::IsMember({"square", "logistic"}));
    generate->add_option("--correlation", correlation, "constant|toeplitz")
        ->check(CLI::IsMember({"constant", "toeplitz"}));
    generate->add_option("--n", syn.n, "rows");
    generate->add_option("--predictors", syn.predictors, "columns");
    generate->add_option("--rho", syn.rho, "correlation parameter");
    generate->add_option("--snr", syn.snr, "signal-to-noise ratio var(f0)/sigma^2");
    generate->add_option("--group-size", syn.group_size, "columns per group (grouped design)");
    generate->add_option("--true-groups", syn.true_groups, "nonzero groups (grouped design)");
    generate->add_option("--linear", syn.n_linear, "linear component functions (semiparam design)");
    generate->add_option("--cos", syn.n_cos, "cos(pi x) component functions (semiparam design)");
    generate->add_option("--sin", syn.n_sin, "sin(pi x) component functions (semiparam design)");
    generate->add_option("--outdir", outdir, "output directory")->required();

    long long budget = 1000000;
    Index sparsity = 0;
    auto* oracle = app.add_subcommand("oracle", "compare the path against exhaustive enumeration");
    add_data_options(oracle, data);
    add_path_options(oracle, path);
    oracle->add_option("--budget", budget, "maximum number of subset fits");
    oracle->add_option("--sparsity", sparsity, "compare losses at this many active groups");
    oracle->add_option("--out", out, "output file (default stdout)");

    std::string clean_in;
    std::string clean_log;
    double threshold = 6.0;
    auto* clean = app.add_subcommand("clean", "impute outliers |x - Q2| / (Q3 - Q1) > threshold per column");
    clean->add_option("--in", clean_in, "headerless CSV, NA or empty cells allowed")
        ->required()->check(CLI::ExistingFile);
    clean->add_option("--out", out, "cleaned CSV")->required();
    clean->add_option("--log", clean_log, "affected cells (default <out>.log)");
    clean->add_option("--threshold", threshold, "outlier cutoff");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*fit) cmd_fit(data, path, out);
        else if (*cv) cmd_cv(data, path, folds, alphas, out);
        else if (*predict) cmd_predict(model_path, x_path, point, out);
        else if (*generate) cmd_generate(syn, design, syn_task, correlation, outdir);
        else if (*oracle) cmd_oracle(data, path, budget, sparsity, out);
        else if (*clean) cmd_clean(clean_in, out, clean_log, threshold);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (char& c : msg) {
            if (c == '\n') c = ' ';
        }
        std::cerr << "error: " << msg << "\n";
        return 1;
    }
    return 0;
}
