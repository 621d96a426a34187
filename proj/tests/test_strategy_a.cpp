#include <gtest/gtest.h>

#include <varlasso/model.hpp>
#include <varlasso/strategy_a.hpp>

#include "support/reference.hpp"

using namespace varlasso;

namespace {

struct Problem
{
    DesignMatrix x;
    GroundTruth truth;
    Observation obs;
    LassoPath path;
};

Problem make_problem(Index n, Index p, Index s, double level, std::uint64_t seed, double floor_ratio = 1e-4)
{
    DesignMatrix x = gen_gaussian_design(n, p, derive_seed(seed, 0));
    GroundTruth t = gen_ground_truth(p, s, level, 1.0, derive_seed(seed, 1));
    Observation o = observe(x, t, derive_seed(seed, 2));
    LassoPath path = homotopy_path(x, o.y, floor_ratio * tau_threshold(x, o.y));
    return {std::move(x), std::move(t), std::move(o), std::move(path)};
}

double log_p(Index p) { return std::log(static_cast<double>(p)); }

} // namespace

TEST(GammaA, AboveTauClosedForm)
{
    const Problem pr = make_problem(20, 40, 3, 3.0, 1);
    for (double m : {1.0, 1.5, 3.0}) {
        const double lam = m * pr.path.tau;
        const double want = 20.0 / log_p(40) * lam * lam / pr.obs.y.squaredNorm();
        EXPECT_NEAR(gamma_a(pr.path, lam), want, 1e-12 * want);
    }
}

TEST(GammaA, StrictlyIncreasing)
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Problem pr = make_problem(20, 40, 3, 3.0, seed);
        Rng rng(seed);
        for (int k = 0; k < 20; ++k) {
            double a = pr.path.lambda_min + rng.uniform() * (2.0 * pr.path.tau - pr.path.lambda_min);
            double b = pr.path.lambda_min + rng.uniform() * (2.0 * pr.path.tau - pr.path.lambda_min);
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            EXPECT_LT(gamma_a(pr.path, a), gamma_a(pr.path, b)) << "seed " << seed;
        }
    }
}

TEST(GammaA, Diverges)
{
    const Problem pr = make_problem(20, 40, 3, 3.0, 2);
    EXPECT_GT(gamma_a(pr.path, 1e3 * pr.path.tau), 1e4 * gamma_a(pr.path, pr.path.tau));
}

TEST(GammaA, MidpointMatchesCoordinateDescent)
{
    const Problem pr = make_problem(20, 40, 3, 3.0, 3);
    SolverConfig cfg;
    cfg.tol = 1e-13;
    for (const auto& seg : pr.path.segments) {
        const double mid = 0.5 * (seg.lambda_hi + seg.lambda_lo);
        const double want = gamma_a(pr.x.entries(), pr.obs.y, mid, cfg);
        EXPECT_NEAR(gamma_a(pr.path, mid), want, 1e-8 * want);
    }
}

TEST(GammaA, ZeroResidualThrows)
{
    const Matrix x = ref::random_design(5, 8, 1);
    const LassoPath path = homotopy_path(x, Vector::Zero(5), 0.1);
    EXPECT_THROW(gamma_a(path, 1.0), ZeroResidualError);
}

TEST(TuneA, PlantedRootRecovered)
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Problem pr = make_problem(25, 50, 3, 4.0, 100 + seed);
        Rng rng(seed);
        const double target = pr.path.lambda_min + (0.05 + 0.9 * rng.uniform()) * (pr.path.tau - pr.path.lambda_min);
        const double cvar = gamma_a(pr.path, target);
        const TunedEstimate exact = tune_path_exact_a(pr.path, pr.x.entries(), pr.obs.y, cvar);
        const TunedEstimate fp = tune_fixed_point(pr.path, pr.x.entries(), pr.obs.y, cvar);
        ASSERT_TRUE(fp.converged) << "seed " << seed;
        EXPECT_NEAR(exact.lambda_hat, target, 1e-9 * target);
        EXPECT_NEAR(fp.lambda_hat, exact.lambda_hat, 1e-6 * exact.lambda_hat) << "seed " << seed;
        EXPECT_EQ(exact.roots_found, 1u);

        const double n = 25.0;
        // Implicit equation lambda^2 = cvar sigma_hat^2 log p.
        const double lhs = fp.lambda_hat * fp.lambda_hat;
        EXPECT_LT(std::abs(lhs - cvar * fp.sigma_hat * fp.sigma_hat * log_p(50)) / lhs, 1e-5);
        EXPECT_NEAR(fp.sigma_hat, std::sqrt(fp.residual_sq / n), 1e-10);
        EXPECT_NEAR(fp.residual_sq, (pr.obs.y - pr.x.entries() * fp.beta).squaredNorm(), 1e-9 * fp.residual_sq);
        EXPECT_TRUE(fp.kkt.valid());
    }
}

TEST(TuneA, SolverBackendAgreesWithPath)
{
    const Problem pr = make_problem(25, 50, 3, 4.0, 7);
    const double cvar = gamma_a(pr.path, 0.4 * pr.path.tau);
    SolverConfig cfg;
    cfg.tol = 1e-12;
    const TunedEstimate cd = tune_fixed_point(SolverBackend(pr.x.entries(), pr.obs.y, cfg), 25, 50, cvar);
    const TunedEstimate hp = tune_fixed_point(pr.path, pr.x.entries(), pr.obs.y, cvar);
    ASSERT_TRUE(cd.converged);
    EXPECT_NEAR(cd.lambda_hat, hp.lambda_hat, 1e-6 * hp.lambda_hat);
}

TEST(TuneA, PureNoiseGivesZeroAboveTau)
{
    const DesignMatrix x = gen_gaussian_design(75, 600, 11);
    const GroundTruth t = gen_ground_truth(600, 0, 0.0, 1.0, 12);
    const Observation o = observe(x, t, 13);
    const LassoPath path = homotopy_path(x, o.y, 1e-3 * tau_threshold(x, o.y));
    const TunedEstimate fp = tune_fixed_point(path, x.entries(), o.y, 8.0);
    const TunedEstimate ex = tune_path_exact_a(path, x.entries(), o.y, 8.0);
    ASSERT_TRUE(fp.converged);
    EXPECT_TRUE(fp.active_set.empty());
    EXPECT_GE(fp.lambda_hat, path.tau);
    const double closed = std::sqrt(8.0 * log_p(600) / 75.0) * o.y.norm();
    EXPECT_NEAR(ex.lambda_hat, closed, 1e-12 * closed);
    EXPECT_NEAR(fp.lambda_hat, closed, 1e-6 * closed);
}

TEST(TuneA, GridHasOneSignChange)
{
    const Problem pr = make_problem(25, 50, 3, 4.0, 21);
    const double cvar = gamma_a(pr.path, 0.3 * pr.path.tau);
    const auto f = [&](double l) { return gamma_a(pr.path, l); };
    EXPECT_EQ(ref::grid_sign_changes(f, cvar, pr.path.lambda_min, 2.0 * pr.path.tau, 10000), 1u);
}

TEST(TuneA, NonConvergenceFallsBackToPath)
{
    const Problem pr = make_problem(25, 50, 3, 4.0, 22);
    const double cvar = gamma_a(pr.path, 0.3 * pr.path.tau);
    FixedPointOptions opt;
    opt.max_iter = 1;
    const TunedEstimate raw = tune_fixed_point(pr.path, pr.x.entries(), pr.obs.y, cvar, opt);
    EXPECT_FALSE(raw.converged);
    EXPECT_EQ(raw.history.size(), 2u);
    const TunedEstimate est = tune_strategy_a(pr.path, pr.x.entries(), pr.obs.y, cvar, TuneMethod::fixed_point, opt);
    EXPECT_EQ(est.method, TuneMethod::path_exact);
    EXPECT_NEAR(est.lambda_hat, 0.3 * pr.path.tau, 1e-9 * pr.path.tau);
    EXPECT_FALSE(est.note.empty());
}

TEST(TuneA, RootBelowPathRangeIsAnError)
{
    const Problem pr = make_problem(25, 50, 3, 4.0, 23, 0.5);
    EXPECT_THROW(tune_path_exact_a(pr.path, pr.x.entries(), pr.obs.y, 1e-9), OutOfRangeError);
}

TEST(TuneA, RejectsBadArguments)
{
    const Problem pr = make_problem(10, 20, 2, 4.0, 24);
    EXPECT_THROW(tune_fixed_point(pr.path, pr.x.entries(), pr.obs.y, 0.0), InvalidArgument);
    EXPECT_THROW(tune_path_exact_a(pr.path, pr.x.entries(), pr.obs.y, -1.0), InvalidArgument);
}

TEST(CvarInterval, RatioAndValue)
{
    const double e2 = std::exp(2.0);
    const double c_spar = 0.25 / (2.5 * e2);
    EXPECT_NEAR(c_spar, 0.013533, 1e-6);
    const auto [lo, hi] = cvar_admissible_interval(1.0, 1, 1, 1.5, 0.5);
    EXPECT_NEAR(lo, 0.25 / (30.0 * c_spar), 1e-12);
    EXPECT_NEAR(lo, 0.6157, 1e-4);
    EXPECT_NEAR(hi / lo, 10.0, 1e-12);
    for (double r : {0.1, 0.3, 0.5}) {
        const auto [a, b] = cvar_admissible_interval(3.7, 40, 90, 0.7, r);
        EXPECT_NEAR(b / a, 10.0, 1e-12);
    }
}

TEST(CvarInterval, GaussianDesignIsPositive)
{
    const DesignMatrix x = gen_gaussian_design(75, 600, 7);
    const auto [lo, hi] = cvar_admissible_interval(x, 1.5, 0.5);
    EXPECT_GT(lo, 0.0);
    EXPECT_TRUE(std::isfinite(hi));
    EXPECT_THROW(cvar_admissible_interval(x, 1.5, 0.6), InvalidArgument);
}
