#pragma once
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>
#include "errors.hpp"
#include "homotopy.hpp"
#include "io.hpp"
#include "lasso.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "strategy_a.hpp"
#include "strategy_b.hpp"
#include "tuned.hpp"

namespace varlasso {

enum class EstimatorKind { lasso_known, strategy_a, strategy_b };

inline const char* to_string(EstimatorKind k)
{
    switch (k) {
    case EstimatorKind::lasso_known: return "lasso_known";
    case EstimatorKind::strategy_a: return "strategy_a";
    case EstimatorKind::strategy_b: return "strategy_b";
    }
    return "?";
}

/// param: lambda multiplier m in lambda = m sigma sqrt(2 log p) (lasso_known),
/// C_var (strategy_a) or C (strategy_b).
struct EstimatorSpec
{
    EstimatorKind kind = EstimatorKind::lasso_known;
    double param = 2.0;
    TuneMethod method = TuneMethod::path_exact;

    static EstimatorSpec lasso_known(double mult = 2.0) { return {EstimatorKind::lasso_known, mult}; }
    static EstimatorSpec strategy_a(double cvar = 8.0, TuneMethod m = TuneMethod::fixed_point)
    {
        return {EstimatorKind::strategy_a, cvar, m};
    }
    static EstimatorSpec strategy_b(double c = 0.1, TuneMethod m = TuneMethod::newton)
    {
        return {EstimatorKind::strategy_b, c, m};
    }

    std::string name() const
    {
        char buf[64];
        const char* key = kind == EstimatorKind::lasso_known ? "m" : kind == EstimatorKind::strategy_a ? "cvar" : "C";
        std::snprintf(buf, sizeof buf, "%s_%s%g", to_string(kind), key, param);
        return buf;
    }
};

enum class DesignMode { fresh_per_trial, fixed };

inline const char* to_string(DesignMode m) { return m == DesignMode::fixed ? "fixed" : "fresh_per_trial"; }

struct ExperimentConfig
{
    Index p = 600;
    Index n = 75;
    Index s = 9;
    double B = 40.0;
    double sigma = 1.0;
    std::size_t trials = 100;
    Seed master_seed = 1;
    std::vector<EstimatorSpec> estimators{EstimatorSpec::lasso_known(), EstimatorSpec::strategy_a(),
                                          EstimatorSpec::strategy_b()};
    DesignMode design_mode = DesignMode::fresh_per_trial;
    SolverConfig solver;
    double path_lambda_min_ratio = 1e-4;  // homotopy stops at this fraction of tau
    double sigma_bin_width = 0.05;
    bool record_timing = false;

    void validate() const
    {
        if (trials < 1) throw InvalidArgument("config: trials must be >= 1");
        if (p < 2) throw InvalidArgument("config: p must be >= 2");
        if (n < 1) throw InvalidArgument("config: n must be >= 1");
        if (s < 0 || s > p) throw InvalidArgument("config: need 0 <= s <= p");
        if (!(sigma > 0.0)) throw InvalidArgument("config: sigma must be positive");
        if (estimators.empty()) throw InvalidArgument("config: no estimators");
        for (const auto& e : estimators)
            if (!(e.param > 0.0)) throw InvalidArgument("config: estimator " + e.name() + " needs a positive parameter");
        if (!(path_lambda_min_ratio > 0.0 && path_lambda_min_ratio < 1.0))
            throw InvalidArgument("config: path_lambda_min_ratio must lie in (0, 1)");
        if (!(sigma_bin_width > 0.0)) throw InvalidArgument("config: sigma_bin_width must be positive");
    }
};

struct EstimatorOutcome
{
    std::string name;
    std::size_t true_positives = 0;   // on T with the right sign
    std::size_t false_positives = 0;  // off T
    std::size_t sign_errors = 0;      // on T with the wrong sign
    bool exact_recovery = false;
    double sigma_hat = std::nan("");
    double lambda_hat = std::nan("");
    bool converged = false;
    double wall_time = 0.0;  // seconds; 0 unless record_timing
    std::string error;

    bool operator==(const EstimatorOutcome&) const = default;
};

struct RecoveryReport
{
    std::size_t trial = 0;
    Seed trial_seed = 0;
    std::vector<EstimatorOutcome> outcomes;

    bool operator==(const RecoveryReport&) const = default;
};

inline EstimatorOutcome score_support(const Vector& beta_hat, const GroundTruth& truth)
{
    EstimatorOutcome o;
    for (Index j = 0; j < beta_hat.size(); ++j) {
        if (beta_hat(j) == 0.0) continue;
        if (truth.beta(j) == 0.0) ++o.false_positives;
        else if (sign_of(beta_hat(j)) == sign_of(truth.beta(j))) ++o.true_positives;
        else ++o.sign_errors;
    }
    o.exact_recovery = o.false_positives == 0 && o.sign_errors == 0
                    && o.true_positives == static_cast<std::size_t>(truth.sparsity());
    return o;
}

/// Seeds of one trial. In fixed design mode every trial shares the design seed.
struct TrialSeeds
{
    Seed trial = 0;
    Seed design = 0;
    Seed truth = 0;
    Seed noise = 0;
};

inline TrialSeeds trial_seeds(const ExperimentConfig& cfg, std::size_t index)
{
    TrialSeeds t;
    t.trial = derive_seed(cfg.master_seed, index);
    t.design = cfg.design_mode == DesignMode::fixed ? derive_seed(cfg.master_seed, ~std::uint64_t{0})
                                                    : derive_seed(t.trial, 0);
    t.truth = derive_seed(t.trial, 1);
    t.noise = derive_seed(t.trial, 2);
    return t;
}

namespace detail {

// Shared by every estimator of a trial so comparisons are paired.
struct TrialData
{
    DesignMatrix x;
    GroundTruth truth;
    Observation obs;
    std::optional<LassoPath> path;
    std::string path_error;
};

inline TunedEstimate run_estimator(const EstimatorSpec& e, const ExperimentConfig& cfg, const TrialData& d)
{
    const Matrix& x = d.x.entries();
    const Vector& y = d.obs.y;
    if (e.kind == EstimatorKind::lasso_known) {
        const double lambda = e.param * cfg.sigma * std::sqrt(2.0 * std::log(static_cast<double>(cfg.p)));
        // Below the shared path's floor the path is extended rather than
        // handing a near-zero lambda to coordinate descent, whose absolute
        // KKT tolerance cannot tell interpolating solutions apart there.
        std::optional<LassoSolution> s;
        if (d.path && lambda >= d.path->lambda_min) {
            s = eval_path(*d.path, x, y, lambda, cfg.solver.kkt_tol);
        } else if (d.path) {
            try {
                s = eval_path(homotopy_path(x, y, lambda, cfg.solver), x, y, lambda, cfg.solver.kkt_tol);
            } catch (const NumericalError&) {
            }
        }
        if (!s) s = solve_lasso(x, y, lambda, cfg.solver);
        TunedEstimate est;
        fill_from_solution(est, *s);
        est.converged = true;
        est.sigma_hat = cfg.sigma;
        return est;
    }
    if (e.kind == EstimatorKind::strategy_a) {
        if (d.path) {
            FixedPointOptions opt;
            opt.kkt_tol = cfg.solver.kkt_tol;
            return tune_strategy_a(*d.path, x, y, e.param, e.method, opt);
        }
        return tune_fixed_point(SolverBackend(x, y, cfg.solver), cfg.n, cfg.p, e.param);
    }
    if (d.path) {
        NewtonOptions opt;
        opt.kkt_tol = cfg.solver.kkt_tol;
        return tune_strategy_b(*d.path, x, y, e.param, e.method, opt);
    }
    return tune_newton(SolverBackend(x, y, cfg.solver), cfg.n, e.param);
}

} // namespace detail

/// One seeded trial: design (per design_mode), truth, observation, then
/// every configured estimator on the same data. Estimator failures are
/// recorded in the outcome rather than thrown.
inline RecoveryReport run_trial(const ExperimentConfig& cfg, std::size_t index)
{
    cfg.validate();
    const TrialSeeds seeds = trial_seeds(cfg, index);
    detail::TrialData d{gen_gaussian_design(cfg.n, cfg.p, seeds.design),
                        gen_ground_truth(cfg.p, cfg.s, cfg.B, cfg.sigma, seeds.truth), Observation{}, std::nullopt,
                        {}};
    d.obs = observe(d.x, d.truth, seeds.noise);
    try {
        const double tau = tau_threshold(d.x.entries(), d.obs.y);
        if (tau > 0.0) d.path = homotopy_path(d.x.entries(), d.obs.y, cfg.path_lambda_min_ratio * tau, cfg.solver);
    } catch (const NumericalError& err) {
        d.path_error = err.what();
    }

    RecoveryReport rep;
    rep.trial = index;
    rep.trial_seed = seeds.trial;
    for (const auto& e : cfg.estimators) {
        const auto t0 = std::chrono::steady_clock::now();
        EstimatorOutcome o;
        try {
            const TunedEstimate est = detail::run_estimator(e, cfg, d);
            o = score_support(est.beta, d.truth);
            o.sigma_hat = est.sigma_hat;
            o.lambda_hat = est.lambda_hat;
            o.converged = est.converged;
        } catch (const Error& err) {
            o.error = err.what();
        }
        if (!d.path_error.empty() && o.error.empty()) o.error = "path fallback to coordinate descent: " + d.path_error;
        o.name = e.name();
        if (cfg.record_timing)
            o.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rep.outcomes.push_back(std::move(o));
    }
    return rep;
}

struct EstimatorAggregate
{
    std::string name;
    std::size_t trials = 0;
    std::size_t exact = 0;
    double exact_rate = 0.0;
    double wilson_lo = 0.0;
    double wilson_hi = 0.0;
    std::vector<std::size_t> true_positive_hist;   // index = count
    std::vector<std::size_t> false_positive_hist;  // index = count
    std::size_t sign_errors = 0;
    double median_true_positives = 0.0;
    double median_false_positives = 0.0;
    double mean_sigma_hat = 0.0;
    double sd_sigma_hat = 0.0;
    double sigma_bin_width = 0.0;
    std::map<long, std::size_t> sigma_hat_hist;  // bin k covers [k w, (k+1) w)
    double median_lambda_hat = 0.0;
    std::size_t not_converged = 0;
    std::size_t errors = 0;
};

struct AggregateReport
{
    ExperimentConfig config;
    std::vector<RecoveryReport> trials;
    std::vector<EstimatorAggregate> estimators;
};

/// Wilson score interval at 95%.
inline std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n)
{
    if (n == 0) return {0.0, 1.0};
    constexpr double z = 1.959963984540054;
    const double nn = static_cast<double>(n);
    const double ph = static_cast<double>(successes) / nn;
    const double den = 1.0 + z * z / nn;
    const double centre = (ph + z * z / (2.0 * nn)) / den;
    const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z * z / (4.0 * nn * nn)) / den;
    const double lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
    const double hi = successes == n ? 1.0 : std::min(1.0, centre + half);
    return {lo, hi};
}

inline double median(std::vector<double> v)
{
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline std::vector<EstimatorAggregate> aggregate(const ExperimentConfig& cfg, const std::vector<RecoveryReport>& trials)
{
    std::vector<EstimatorAggregate> out;
    for (std::size_t k = 0; k < cfg.estimators.size(); ++k) {
        EstimatorAggregate a;
        a.name = cfg.estimators[k].name();
        a.sigma_bin_width = cfg.sigma_bin_width;
        a.true_positive_hist.assign(static_cast<std::size_t>(cfg.s) + 1, 0);
        std::vector<double> tp, fp, sig, lam;
        for (const auto& r : trials) {
            const EstimatorOutcome& o = r.outcomes.at(k);
            ++a.trials;
            if (!o.error.empty() && std::isnan(o.lambda_hat)) {
                ++a.errors;
                continue;
            }
            a.exact += o.exact_recovery;
            a.not_converged += !o.converged;
            a.sign_errors += o.sign_errors;
            ++a.true_positive_hist.at(o.true_positives);
            if (a.false_positive_hist.size() <= o.false_positives) a.false_positive_hist.resize(o.false_positives + 1);
            ++a.false_positive_hist[o.false_positives];
            tp.push_back(static_cast<double>(o.true_positives));
            fp.push_back(static_cast<double>(o.false_positives));
            lam.push_back(o.lambda_hat);
            if (std::isfinite(o.sigma_hat)) {
                sig.push_back(o.sigma_hat);
                ++a.sigma_hat_hist[static_cast<long>(std::floor(o.sigma_hat / cfg.sigma_bin_width))];
            }
        }
        a.exact_rate = a.trials ? static_cast<double>(a.exact) / static_cast<double>(a.trials) : 0.0;
        std::tie(a.wilson_lo, a.wilson_hi) = wilson_interval(a.exact, a.trials);
        a.median_true_positives = median(tp);
        a.median_false_positives = median(fp);
        a.median_lambda_hat = median(lam);
        if (!sig.empty()) {
            double sum = 0.0;
            for (double v : sig) sum += v;
            a.mean_sigma_hat = sum / static_cast<double>(sig.size());
            double ss = 0.0;
            for (double v : sig) ss += (v - a.mean_sigma_hat) * (v - a.mean_sigma_hat);
            a.sd_sigma_hat = sig.size() > 1 ? std::sqrt(ss / static_cast<double>(sig.size() - 1)) : 0.0;
        }
        out.push_back(std::move(a));
    }
    return out;
}

/// Runs every trial on `threads` workers (0: hardware concurrency). Results
/// are stored by trial index, so the report does not depend on scheduling.
inline AggregateReport run_monte_carlo(const ExperimentConfig& cfg, unsigned threads = 0)
{
    cfg.validate();
    AggregateReport rep;
    rep.config = cfg;
    rep.trials.resize(cfg.trials);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.trials));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfg.trials; i = next++) rep.trials[i] = run_trial(cfg, i);
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    rep.estimators = aggregate(cfg, rep.trials);
    return rep;
}

// ---- Config parsing --------------------------------------------------------

inline TuneMethod parse_method(const std::string& s)
{
    if (s == "fixed_point" || s == "fixed-point") return TuneMethod::fixed_point;
    if (s == "path_exact" || s == "path") return TuneMethod::path_exact;
    if (s == "newton") return TuneMethod::newton;
    throw InvalidArgument("unknown method '" + s + "'");
}

/// "kind:param[:method]" e.g. "strategy_b:0.1:newton".
inline EstimatorSpec parse_estimator(const std::string& text)
{
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string tok; std::getline(ss, tok, ':');) {
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        parts.push_back(tok);
    }
    if (parts.empty() || parts.size() > 3) throw InvalidArgument("estimator '" + text + "': expected kind:param[:method]");
    EstimatorSpec e;
    if (parts[0] == "lasso_known") e = EstimatorSpec::lasso_known();
    else if (parts[0] == "strategy_a") e = EstimatorSpec::strategy_a();
    else if (parts[0] == "strategy_b") e = EstimatorSpec::strategy_b();
    else throw InvalidArgument("estimator '" + text + "': unknown kind '" + parts[0] + "'");
    if (parts.size() > 1) {
        try {
            e.param = std::stod(parts[1]);
        } catch (const std::exception&) {
            throw InvalidArgument("estimator '" + text + "': bad parameter '" + parts[1] + "'");
        }
    }
    if (parts.size() > 2) e.method = parse_method(parts[2]);
    return e;
}

namespace detail {

template <class T>
T config_get(const json& v, const std::string& key)
{
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw InvalidArgument("config key '" + key + "': bad value " + v.dump());
    }
}

inline void apply_config_key(ExperimentConfig& cfg, const std::string& key, const json& v)
{
    if (key == "p") cfg.p = config_get<Index>(v, key);
    else if (key == "n") cfg.n = config_get<Index>(v, key);
    else if (key == "s") cfg.s = config_get<Index>(v, key);
    else if (key == "B") cfg.B = config_get<double>(v, key);
    else if (key == "sigma") cfg.sigma = config_get<double>(v, key);
    else if (key == "trials") cfg.trials = config_get<std::size_t>(v, key);
    else if (key == "master_seed") cfg.master_seed = config_get<Seed>(v, key);
    else if (key == "design_mode") {
        const auto m = config_get<std::string>(v, key);
        if (m == "fixed") cfg.design_mode = DesignMode::fixed;
        else if (m == "fresh_per_trial") cfg.design_mode = DesignMode::fresh_per_trial;
        else throw InvalidArgument("config key 'design_mode': expected fixed or fresh_per_trial, got '" + m + "'");
    } else if (key == "estimators") {
        cfg.estimators.clear();
        if (v.is_string()) {
            std::stringstream ss(v.get<std::string>());
            for (std::string tok; std::getline(ss, tok, ',');) cfg.estimators.push_back(parse_estimator(tok));
        } else if (v.is_array()) {
            for (const auto& e : v) cfg.estimators.push_back(parse_estimator(config_get<std::string>(e, key)));
        } else {
            throw InvalidArgument("config key 'estimators': expected a string or an array of strings");
        }
    } else if (key == "solver.tol") cfg.solver.tol = config_get<double>(v, key);
    else if (key == "solver.kkt_tol") cfg.solver.kkt_tol = config_get<double>(v, key);
    else if (key == "solver.bp_tol") cfg.solver.bp_tol = config_get<double>(v, key);
    else if (key == "solver.max_sweeps") cfg.solver.max_sweeps = config_get<long>(v, key);
    else if (key == "path_lambda_min_ratio") cfg.path_lambda_min_ratio = config_get<double>(v, key);
    else if (key == "sigma_bin_width") cfg.sigma_bin_width = config_get<double>(v, key);
    else if (key == "record_timing") cfg.record_timing = config_get<bool>(v, key);
    else throw InvalidArgument("config: unknown key '" + key + "'");
}

inline void apply_config_object(ExperimentConfig& cfg, const json& obj, const std::string& prefix)
{
    for (const auto& [k, v] : obj.items()) {
        if (prefix.empty() && k == "solver" && v.is_object()) apply_config_object(cfg, v, "solver.");
        else apply_config_key(cfg, prefix + k, v);
    }
}

} // namespace detail

/// JSON object or key = value lines ('#' comments). Unknown keys are rejected.
inline ExperimentConfig parse_experiment_config(const std::string& text, ExperimentConfig cfg = {})
{
    const auto start = text.find_first_not_of(" \t\r\n");
    if (start != std::string::npos && text[start] == '{') {
        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::parse_error& e) {
            throw InvalidArgument(std::string("config: ") + e.what());
        }
        detail::apply_config_object(cfg, obj, "");
    } else {
        std::stringstream ss(text);
        std::size_t lineno = 0;
        for (std::string line; std::getline(ss, line);) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
            auto trim = [](std::string s) {
                s.erase(0, s.find_first_not_of(" \t\r"));
                s.erase(s.find_last_not_of(" \t\r") + 1);
                return s;
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string raw = trim(line.substr(eq + 1));
            json v = json::parse(raw, nullptr, false);
            if (v.is_discarded()) v = raw;
            if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') v = raw.substr(1, raw.size() - 2);
            detail::apply_config_key(cfg, key, v);
        }
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_experiment_config(ss.str());
}

// ---- Output ----------------------------------------------------------------

inline constexpr const char* mc_schema = "varlasso.mc/1";

inline void to_json(json& j, const EstimatorSpec& e)
{
    j = json{{"kind", to_string(e.kind)}, {"param", e.param}, {"method", to_string(e.method)}, {"name", e.name()}};
}

inline void to_json(json& j, const ExperimentConfig& c)
{
    j = json{{"p", c.p},
             {"n", c.n},
             {"s", c.s},
             {"B", c.B},
             {"sigma", c.sigma},
             {"trials", c.trials},
             {"master_seed", c.master_seed},
             {"estimators", c.estimators},
             {"design_mode", to_string(c.design_mode)},
             {"solver",
              {{"tol", c.solver.tol},
               {"kkt_tol", c.solver.kkt_tol},
               {"bp_tol", c.solver.bp_tol},
               {"max_sweeps", c.solver.max_sweeps}}},
             {"path_lambda_min_ratio", c.path_lambda_min_ratio},
             {"sigma_bin_width", c.sigma_bin_width},
             {"record_timing", c.record_timing},
             {"rng", Rng::name}};
}

inline void to_json(json& j, const EstimatorOutcome& o)
{
    j = json{{"name", o.name},
             {"true_positives", o.true_positives},
             {"false_positives", o.false_positives},
             {"sign_errors", o.sign_errors},
             {"exact_recovery", o.exact_recovery},
             {"sigma_hat", o.sigma_hat},
             {"lambda_hat", o.lambda_hat},
             {"converged", o.converged},
             {"wall_time", o.wall_time},
             {"error", o.error}};
}

inline double json_double(const json& v)
{
    return v.is_null() ? std::nan("") : v.get<double>();
}

inline void from_json(const json& j, EstimatorOutcome& o)
{
    o.name = j.at("name").get<std::string>();
    o.true_positives = j.at("true_positives").get<std::size_t>();
    o.false_positives = j.at("false_positives").get<std::size_t>();
    o.sign_errors = j.at("sign_errors").get<std::size_t>();
    o.exact_recovery = j.at("exact_recovery").get<bool>();
    o.sigma_hat = json_double(j.at("sigma_hat"));
    o.lambda_hat = json_double(j.at("lambda_hat"));
    o.converged = j.at("converged").get<bool>();
    o.wall_time = j.at("wall_time").get<double>();
    o.error = j.at("error").get<std::string>();
}

inline void to_json(json& j, const RecoveryReport& r)
{
    j = json{{"trial", r.trial}, {"trial_seed", r.trial_seed}, {"outcomes", r.outcomes}};
}

inline void from_json(const json& j, RecoveryReport& r)
{
    r.trial = j.at("trial").get<std::size_t>();
    r.trial_seed = j.at("trial_seed").get<Seed>();
    r.outcomes = j.at("outcomes").get<std::vector<EstimatorOutcome>>();
}

inline void to_json(json& j, const EstimatorAggregate& a)
{
    json sig = json::array();
    for (const auto& [bin, count] : a.sigma_hat_hist) sig.push_back({bin, count});
    j = json{{"name", a.name},
             {"trials", a.trials},
             {"exact", a.exact},
             {"exact_rate", a.exact_rate},
             {"wilson95", {a.wilson_lo, a.wilson_hi}},
             {"true_positive_hist", a.true_positive_hist},
             {"false_positive_hist", a.false_positive_hist},
             {"sign_errors", a.sign_errors},
             {"median_true_positives", a.median_true_positives},
             {"median_false_positives", a.median_false_positives},
             {"mean_sigma_hat", a.mean_sigma_hat},
             {"sd_sigma_hat", a.sd_sigma_hat},
             {"sigma_hat_bin_width", a.sigma_bin_width},
             {"sigma_hat_hist", sig},
             {"median_lambda_hat", a.median_lambda_hat},
             {"not_converged", a.not_converged},
             {"errors", a.errors}};
}

inline json report_to_json(const AggregateReport& r)
{
    return json{{"schema", mc_schema}, {"config", r.config}, {"aggregate", r.estimators}, {"trials", r.trials}};
}

/// Column names of the per-trial CSV: trial,trial_seed, then for each
/// estimator <name>.<field>.
inline std::vector<std::string> csv_fields()
{
    return {"true_positives", "false_positives", "sign_errors", "exact_recovery", "sigma_hat",
            "lambda_hat",     "converged",       "wall_time",   "error"};
}

inline void write_trials_csv(const AggregateReport& r, std::ostream& os)
{
    os << "trial,trial_seed";
    for (const auto& e : r.config.estimators)
        for (const auto& f : csv_fields()) os << ',' << e.name() << '.' << f;
    os << '\n';
    os.precision(17);
    for (const auto& t : r.trials) {
        os << t.trial << ',' << t.trial_seed;
        for (const auto& o : t.outcomes) {
            std::string err = o.error;
            std::replace(err.begin(), err.end(), ',', ';');
            std::replace(err.begin(), err.end(), '\n', ' ');
            os << ',' << o.true_positives << ',' << o.false_positives << ',' << o.sign_errors << ','
               << o.exact_recovery << ',' << o.sigma_hat << ',' << o.lambda_hat << ',' << o.converged << ','
               << o.wall_time << ',' << err;
        }
        os << '\n';
    }
}

enum class EmitFormat { csv, json };

inline void emit(const AggregateReport& r, EmitFormat format, const std::string& path)
{
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    if (format == EmitFormat::csv) write_trials_csv(r, f);
    else f << report_to_json(r).dump(2) << '\n';
    if (!f) throw IoError("write failed: " + path);
}

} // namespace varlasso
