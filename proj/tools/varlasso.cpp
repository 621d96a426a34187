// varlasso command-line tool: thin adapters over the library, JSON out.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <varlasso/varlasso.hpp>

namespace fs = std::filesystem;
using namespace varlasso;

namespace {

struct Globals
{
    Seed seed = 1;
    unsigned threads = 0;
    std::string log_level = "warn";
    bool pretty = false;
};

struct DataFiles
{
    std::string design;
    std::string obs;
    std::string out;
};

LogLevel parse_log_level(const std::string& s)
{
    if (s == "debug") return LogLevel::debug;
    if (s == "info") return LogLevel::info;
    if (s == "warn") return LogLevel::warn;
    if (s == "error") return LogLevel::error;
    return LogLevel::off;
}

std::string dump(const json& j, bool pretty) { return pretty ? j.dump(2) : j.dump(); }

void write_output(const json& j, const std::string& path, bool pretty)
{
    if (path.empty()) {
        std::cout << dump(j, pretty) << '\n';
        return;
    }
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << dump(j, pretty) << '\n';
    if (!f) throw IoError("write failed: " + path);
}

void print_config(const std::string& sub, const json& resolved, const Globals& g)
{
    json cfg = resolved;
    cfg["subcommand"] = sub;
    cfg["seed"] = g.seed;
    cfg["threads"] = g.threads;
    cfg["log_level"] = g.log_level;
    std::cerr << "config: " << cfg.dump() << '\n';
}

void add_data_options(CLI::App* sub, DataFiles& files)
{
    sub->add_option("--design", files.design, "design matrix (CSV or VLAS1 binary)")->required()->check(CLI::ExistingFile);
    sub->add_option("--obs", files.obs, "observation (JSON with \"y\" or a CSV column)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", files.out, "output file (default stdout)");
}

struct Loaded
{
    DesignMatrix x;
    Observation obs;
};

Loaded load_data(const DataFiles& files)
{
    Loaded d{DesignMatrix(load_matrix(files.design)), load_observation(files.obs)};
    if (d.obs.y.size() != d.x.rows())
        throw InvalidArgument("observation has " + std::to_string(d.obs.y.size()) + " entries but the design has "
                              + std::to_string(d.x.rows()) + " rows");
    return d;
}

IndexList parse_index_list(const std::string& text)
{
    IndexList out;
    std::stringstream ss(text);
    for (std::string tok; std::getline(ss, tok, ',');) {
        try {
            out.push_back(static_cast<Index>(std::stoll(tok)));
        } catch (const std::exception&) {
            throw InvalidArgument("bad index '" + tok + "' in --support");
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Lasso with data-driven penalty selection"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "master seed")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads (0: all cores)")->capture_default_str();
    app.add_option("--log-level", g.log_level, "debug|info|warn|error|off")
        ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}))
        ->capture_default_str();
    app.add_flag("--pretty", g.pretty, "indented JSON and a one-line summary on stderr");

    // generate
    auto* gen = app.add_subcommand("generate", "draw a Gaussian design, a sparse truth and an observation");
    Index gn = 75, gp = 600, gs = 9;
    double glevel = 40.0, gsigma = 1.0;
    std::string gdir = ".";
    bool gbinary = false;
    gen->add_option("--n", gn)->capture_default_str();
    gen->add_option("--p", gp)->capture_default_str();
    gen->add_option("--s", gs)->capture_default_str();
    gen->add_option("--B", glevel, "coefficient magnitude level")->capture_default_str();
    gen->add_option("--sigma", gsigma)->capture_default_str();
    gen->add_option("--out-dir", gdir)->capture_default_str();
    gen->add_flag("--binary", gbinary, "write the design as VLAS1 instead of CSV");

    // solve
    auto* solve = app.add_subcommand("solve", "lasso at a fixed lambda, with optimality certificate");
    DataFiles solve_files;
    double solve_lambda = 0.0;
    std::string solve_method = "cd";
    add_data_options(solve, solve_files);
    solve->add_option("--lambda", solve_lambda)->required();
    solve->add_option("--method", solve_method, "cd|path")->check(CLI::IsMember({"cd", "path"}))->capture_default_str();

    // path
    auto* path_cmd = app.add_subcommand("path", "homotopy path as CSV");
    DataFiles path_files;
    double path_lambda_min = 0.0;
    add_data_options(path_cmd, path_files);
    path_cmd->add_option("--lambda-min", path_lambda_min, "(default 1e-4 tau)");

    // tune-a
    auto* tune_a = app.add_subcommand("tune-a", "strategy A: lambda^2 = cvar sigma_hat^2 log p");
    DataFiles a_files;
    double a_cvar = 8.0;
    std::string a_method = "fixed-point";
    double a_alpha = 1.5, a_r = 0.5;
    add_data_options(tune_a, a_files);
    tune_a->add_option("--cvar", a_cvar)->capture_default_str();
    tune_a->add_option("--method", a_method, "fixed-point|path")
        ->check(CLI::IsMember({"fixed-point", "path"}))
        ->capture_default_str();
    tune_a->add_option("--alpha", a_alpha, "for the admissible-cvar warning")->capture_default_str();
    tune_a->add_option("--r", a_r, "for the admissible-cvar warning")->capture_default_str();

    // tune-b
    auto* tune_b = app.add_subcommand("tune-b", "strategy B: lambda ||beta||_1 = C ||y - X beta||^2");
    DataFiles b_files;
    double b_c = 0.1;
    std::string b_method = "newton";
    add_data_options(tune_b, b_files);
    tune_b->add_option("--c", b_c)->capture_default_str();
    tune_b->add_option("--method", b_method, "newton|path")->check(CLI::IsMember({"newton", "path"}))->capture_default_str();

    // mc
    auto* mc = app.add_subcommand("mc", "seeded Monte Carlo recovery experiment");
    std::string mc_config, mc_out = ".", mc_format = "json";
    mc->add_option("--config", mc_config, "JSON or key = value file")->check(CLI::ExistingFile);
    mc->add_option("--out", mc_out, "output directory")->capture_default_str();
    mc->add_option("--format", mc_format, "csv|json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    // constants
    auto* cons = app.add_subcommand("constants", "theoretical constants and bounds");
    TheoryParams tp;
    Index cn = 75, cp = 600, cs = 9;
    double c_cvar = 8.0;
    std::string c_design, c_truth, c_set = "main";
    cons->add_option("--alpha", tp.alpha)->capture_default_str();
    cons->add_option("--r", tp.r)->capture_default_str();
    cons->add_option("--c", tp.C, "strategy B constant")->capture_default_str();
    cons->add_option("--n", cn)->capture_default_str();
    cons->add_option("--p", cp)->capture_default_str();
    cons->add_option("--s", cs)->capture_default_str();
    cons->add_option("--cvar", c_cvar)->capture_default_str();
    cons->add_option("--design", c_design, "design file; enables the assumption report")->check(CLI::ExistingFile);
    cons->add_option("--truth", c_truth, "ground truth JSON for the assumption report")->check(CLI::ExistingFile);
    cons->add_option("--constant-set", c_set, "main|invertibility")
        ->check(CLI::IsMember({"main", "invertibility"}))
        ->capture_default_str();

    // check-matrix
    auto* chk = app.add_subcommand("check-matrix", "column norms, coherence, operator norm, near-isometry on a support");
    std::string k_design, k_support;
    double k_r = 0.5;
    chk->add_option("--design", k_design)->required()->check(CLI::ExistingFile);
    chk->add_option("--support", k_support, "comma-separated column indices");
    chk->add_option("--r", k_r)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    set_log_level(parse_log_level(g.log_level));

    try {
        if (gen->parsed()) {
            json cfg{{"n", gn}, {"p", gp}, {"s", gs}, {"B", glevel}, {"sigma", gsigma}, {"out_dir", gdir},
                     {"binary", gbinary}};
            print_config("generate", cfg, g);
            fs::create_directories(gdir);
            const DesignMatrix x = gen_gaussian_design(gn, gp, derive_seed(g.seed, 0));
            const GroundTruth truth = gen_ground_truth(gp, gs, glevel, gsigma, derive_seed(g.seed, 1));
            const Observation obs = observe(x, truth, derive_seed(g.seed, 2));
            const std::string design_path = (fs::path(gdir) / (gbinary ? "design.vlas" : "design.csv")).string();
            save_matrix(design_path, x.entries(), gbinary);
            write_output(json(truth), (fs::path(gdir) / "truth.json").string(), g.pretty);
            write_output(json(obs), (fs::path(gdir) / "obs.json").string(), g.pretty);
            write_output(json{{"design", design_path},
                              {"truth", (fs::path(gdir) / "truth.json").string()},
                              {"obs", (fs::path(gdir) / "obs.json").string()},
                              {"regenerated_columns", x.regenerated_columns()}},
                         "", g.pretty);
        } else if (solve->parsed()) {
            print_config("solve", {{"design", solve_files.design}, {"obs", solve_files.obs}, {"lambda", solve_lambda},
                                   {"method", solve_method}, {"out", solve_files.out}},
                         g);
            const Loaded d = load_data(solve_files);
            LassoSolution s;
            if (solve_method == "cd") {
                s = solve_lasso(d.x, d.obs.y, solve_lambda);
            } else {
                const LassoPath path = homotopy_path(d.x, d.obs.y, std::min(solve_lambda, tau_threshold(d.x, d.obs.y)));
                s = eval_path(path, d.x, d.obs.y, solve_lambda);
            }
            write_output(json(s), solve_files.out, g.pretty);
            if (g.pretty)
                std::cerr << "lambda " << s.lambda << ": " << s.active_set.size() << " active, objective "
                          << s.objective << ", certificate " << (s.kkt.valid() ? "valid" : "INVALID") << '\n';
        } else if (path_cmd->parsed()) {
            const Loaded d = load_data(path_files);
            const double tau = tau_threshold(d.x, d.obs.y);
            const double lmin = path_lambda_min > 0.0 ? path_lambda_min : 1e-4 * tau;
            print_config("path", {{"design", path_files.design}, {"obs", path_files.obs}, {"lambda_min", lmin},
                                  {"out", path_files.out}},
                         g);
            const LassoPath path = homotopy_path(d.x, d.obs.y, lmin);
            if (path_files.out.empty()) {
                write_path_csv(path, std::cout);
            } else {
                std::ofstream f(path_files.out);
                if (!f) throw IoError("cannot write " + path_files.out);
                write_path_csv(path, f);
            }
        } else if (tune_a->parsed()) {
            print_config("tune-a", {{"design", a_files.design}, {"obs", a_files.obs}, {"cvar", a_cvar},
                                    {"method", a_method}, {"alpha", a_alpha}, {"r", a_r}, {"out", a_files.out}},
                         g);
            const Loaded d = load_data(a_files);
            const auto [lo, hi] = cvar_admissible_interval(d.x, a_alpha, a_r);
            if (a_cvar < lo || a_cvar > hi)
                warn("tune-a: cvar=" + std::to_string(a_cvar) + " lies outside the theoretical interval ["
                     + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            const double tau = tau_threshold(d.x, d.obs.y);
            const LassoPath path = homotopy_path(d.x, d.obs.y, 1e-4 * tau);
            const TunedEstimate est = tune_strategy_a(path, d.x.entries(), d.obs.y, a_cvar,
                                                      a_method == "path" ? TuneMethod::path_exact
                                                                         : TuneMethod::fixed_point);
            write_output(json(est), a_files.out, g.pretty);
            if (g.pretty)
                std::cerr << "lambda_hat " << est.lambda_hat << ", sigma_hat " << est.sigma_hat << ", "
                          << est.active_set.size() << " active\n";
        } else if (tune_b->parsed()) {
            print_config("tune-b", {{"design", b_files.design}, {"obs", b_files.obs}, {"c", b_c}, {"method", b_method},
                                    {"out", b_files.out}},
                         g);
            const Loaded d = load_data(b_files);
            const double tau = tau_threshold(d.x, d.obs.y);
            const LassoPath path = homotopy_path(d.x, d.obs.y, 1e-4 * tau);
            const TunedEstimate est = tune_strategy_b(path, d.x.entries(), d.obs.y, b_c,
                                                      b_method == "path" ? TuneMethod::path_exact : TuneMethod::newton);
            write_output(json(est), b_files.out, g.pretty);
            if (g.pretty)
                std::cerr << "lambda_hat " << est.lambda_hat << ", sigma_hat " << est.sigma_hat << ", "
                          << est.active_set.size() << " active\n";
        } else if (mc->parsed()) {
            ExperimentConfig cfg = mc_config.empty() ? ExperimentConfig{} : load_experiment_config(mc_config);
            if (app.get_option("--seed")->count() > 0) cfg.master_seed = g.seed;
            cfg.validate();
            json resolved = cfg;
            resolved["out"] = mc_out;
            resolved["format"] = mc_format;
            print_config("mc", resolved, g);
            const AggregateReport rep = run_monte_carlo(cfg, g.threads);
            fs::create_directories(mc_out);
            const bool csv = mc_format == "csv";
            const std::string file = (fs::path(mc_out) / (csv ? "trials.csv" : "report.json")).string();
            emit(rep, csv ? EmitFormat::csv : EmitFormat::json, file);
            json summary = json::array();
            for (const auto& a : rep.estimators)
                summary.push_back({{"name", a.name},
                                   {"exact_rate", a.exact_rate},
                                   {"wilson95", {a.wilson_lo, a.wilson_hi}},
                                   {"median_true_positives", a.median_true_positives},
                                   {"median_false_positives", a.median_false_positives},
                                   {"mean_sigma_hat", a.mean_sigma_hat}});
            write_output(json{{"output", file}, {"summary", summary}}, "", g.pretty);
        } else if (cons->parsed()) {
            const ConstantSet set = c_set == "main" ? ConstantSet::main : ConstantSet::invertibility;
            print_config("constants", {{"alpha", tp.alpha}, {"r", tp.r}, {"c", tp.C}, {"n", cn}, {"p", cp}, {"s", cs},
                                       {"cvar", c_cvar}, {"design", c_design}, {"truth", c_truth},
                                       {"constant_set", c_set}},
                         g);
            tp.validate();
            const SparsityConstants sc = constants(tp, set);
            json out{{"kappa", kappa(tp.alpha)}, {"C_spar", sc.c_spar}, {"C_mu", sc.c_mu},
                     {"C_circ", c_circ(tp)}, {"C_circ_rhs", c_circ_rhs(tp)}};
            if (cs >= 1 && cn > cs) {
                const BoundsB bb = bounds_b(cn, cp, cs, tp);
                out["bounds_b"] = {{"L", bb.L}, {"M", bb.M}, {"n_min", bb.n_min}, {"c_circ_lower", bb.c_circ_lower}};
            }
            if (!c_design.empty()) {
                const DesignMatrix x(load_matrix(c_design));
                const BoundsA ba = bounds_a(x, cs, tp, set);
                out["bounds_a"] = {{"s0", ba.s0}, {"n_min", ba.n_min}, {"H", ba.H}};
                const auto [lo, hi] = cvar_admissible_interval(x, tp.alpha, tp.r);
                out["cvar_interval"] = {lo, hi};
                if (!c_truth.empty()) {
                    const GroundTruth truth = read_json_file(c_truth).get<GroundTruth>();
                    out["assumptions_a"] = check_assumptions(x, truth, Strategy::a, tp, c_cvar, set);
                    out["assumptions_b"] = check_assumptions(x, truth, Strategy::b, tp, tp.C, set);
                }
            }
            write_output(out, "", g.pretty);
        } else if (chk->parsed()) {
            print_config("check-matrix", {{"design", k_design}, {"support", k_support}, {"r", k_r}}, g);
            const Matrix raw = load_matrix(k_design);
            double worst = 0.0;
            for (Index j = 0; j < raw.cols(); ++j) worst = std::max(worst, std::abs(raw.col(j).norm() - 1.0));
            json out{{"rows", raw.rows()},
                     {"cols", raw.cols()},
                     {"max_column_norm_deviation", worst},
                     {"unit_columns", worst <= DesignMatrix::column_norm_tol},
                     {"coherence", coherence(raw)},
                     {"operator_norm", operator_norm(raw)}};
            if (!k_support.empty()) {
                const IndexList support = parse_index_list(k_support);
                for (Index j : support)
                    if (j < 0 || j >= raw.cols()) throw InvalidArgument("--support index out of range: " + std::to_string(j));
                const Matrix xt = gather_columns(raw, support);
                const Matrix dev = xt.transpose() * xt - Matrix::Identity(xt.cols(), xt.cols());
                const double nrm = Eigen::SelfAdjointEigenSolver<Matrix>(dev, Eigen::EigenvaluesOnly)
                                       .eigenvalues()
                                       .cwiseAbs()
                                       .maxCoeff();
                out["near_isometry"] = {{"norm", nrm}, {"r", k_r}, {"ok", nrm <= k_r}, {"margin", k_r - nrm}};
            }
            write_output(out, "", g.pretty);
        }
    } catch (const NumericalError& e) {
        std::cerr << json{{"error", "numerical"}, {"message", e.what()}}.dump() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
