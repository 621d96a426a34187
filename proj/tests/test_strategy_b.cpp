#include <gtest/gtest.h>

#include <varlasso/model.hpp>
#include <varlasso/strategy_b.hpp>

#include "support/reference.hpp"

using namespace varlasso;

namespace {

struct Problem
{
    DesignMatrix x;
    Observation obs;
    LassoPath path;
};

Problem make_problem(Index n, Index p, Index s, double level, std::uint64_t seed, double floor_ratio = 1e-4)
{
    DesignMatrix x = gen_gaussian_design(n, p, derive_seed(seed, 0));
    const GroundTruth t = gen_ground_truth(p, s, level, 1.0, derive_seed(seed, 1));
    Observation o = observe(x, t, derive_seed(seed, 2));
    LassoPath path = homotopy_path(x, o.y, floor_ratio * tau_threshold(x, o.y));
    return {std::move(x), std::move(o), std::move(path)};
}

std::vector<double> interior_points(const LassoPath& path)
{
    std::vector<double> pts;
    for (const auto& s : path.segments) pts.push_back(0.5 * (s.lambda_hi + s.lambda_lo));
    return pts;
}

} // namespace

TEST(GammaB, ZeroAboveTau)
{
    const Problem pr = make_problem(20, 40, 3, 3.0, 1);
    EXPECT_EQ(gamma_b(pr.path, pr.path.tau), 0.0);
    EXPECT_EQ(gamma_b(pr.path, 2.0 * pr.path.tau), 0.0);
    EXPECT_EQ(gamma_b_derivative(pr.path, 2.0 * pr.path.tau), 0.0);
}

TEST(GammaB, MidpointMatchesCoordinateDescent)
{
    const Problem pr = make_problem(20, 40, 3, 3.0, 2);
    SolverConfig cfg;
    cfg.tol = 1e-13;
    for (double mid : interior_points(pr.path)) {
        const double want = gamma_b(pr.x.entries(), pr.obs.y, mid, cfg);
        EXPECT_NEAR(gamma_b(pr.path, mid), want, 1e-8 * want);
    }
}

TEST(GammaB, UnboundedNearZeroWithFullActiveSet)
{
    // p > n paths end with |active| = n where P_perp y = 0, so on the last
    // segment Gamma_B = u / (lambda q) - 1: it blows up like 1/lambda and the
    // ratio Gamma_B(lambda) / Gamma_B(2 lambda) tends to 2.
    const Problem pr = make_problem(10, 30, 2, 3.0, 3, 1e-12);
    const auto& last = pr.path.segments.back();
    ASSERT_EQ(last.active.size(), 10u);
    EXPECT_LT(last.perp_sq, 1e-20 * pr.path.y_sq + 1e-24);
    const double lam = last.lambda_lo + 1e-3 * (last.lambda_hi - last.lambda_lo);
    EXPECT_GT(gamma_b(pr.path, lam), 10.0 * gamma_b(pr.path, 0.5 * pr.path.tau));
    const double u = last.lin, q = last.quad;
    EXPECT_NEAR(gamma_b(pr.path, lam), u / (lam * q) - 1.0, 1e-8 * gamma_b(pr.path, lam));
}

TEST(GammaBDerivative, MatchesFiniteDifferences)
{
    std::size_t checked = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Problem pr = make_problem(15, 40, 3, 3.0, 200 + seed);
        Rng rng(seed);
        const auto& seg = pr.path.segments[rng.below(pr.path.segments.size())];
        const double lam = seg.lambda_lo + (0.1 + 0.8 * rng.uniform()) * (seg.lambda_hi - seg.lambda_lo);
        const double h = 1e-6 * lam;
        if (lam - h < seg.lambda_lo || lam + h > seg.lambda_hi) continue;
        const double fd = ref::central_difference([&](double l) { return gamma_b(pr.path, l); }, lam, h);
        const double an = gamma_b_derivative(pr.path, lam);
        EXPECT_NEAR(an, fd, 1e-4 * std::abs(fd)) << "seed " << seed;
        ++checked;
    }
    EXPECT_GE(checked, 40u);
}

TEST(GammaBDerivative, PaperFormOnlyOnFullActiveSet)
{
    const Problem pr = make_problem(10, 30, 2, 3.0, 3, 1e-12);
    const auto& last = pr.path.segments.back();
    ASSERT_EQ(last.active.size(), 10u);
    const double lam = 0.5 * (last.lambda_hi + last.lambda_lo);
    const double exact = gamma_b_derivative(pr.path, lam);
    EXPECT_NEAR(gamma_b_derivative_paper_form(pr.path, lam), exact, 1e-8 * std::abs(exact));
    // On the first segment P_perp y != 0 and the two forms differ.
    const auto& first = pr.path.segments.front();
    const double top = 0.5 * (first.lambda_hi + first.lambda_lo);
    EXPECT_GT(std::abs(gamma_b_derivative_paper_form(pr.path, top) - gamma_b_derivative(pr.path, top)),
              1e-3 * std::abs(gamma_b_derivative(pr.path, top)));
}

TEST(GammaBDerivative, ThrowsAtBreakpoint)
{
    const Problem pr = make_problem(15, 40, 3, 3.0, 4);
    ASSERT_GE(pr.path.segments.size(), 2u);
    EXPECT_THROW(gamma_b_derivative(pr.path, pr.path.segments[0].lambda_lo), InvalidArgument);
    EXPECT_THROW(gamma_b_derivative(pr.path, pr.path.tau), InvalidArgument);
}

TEST(GammaB, DecreasingOnRandomWidePaths)
{
    // Sign of the exact derivative at every midpoint, and values at every
    // breakpoint, on p > n paths run down to |active| = n.
    std::size_t negative = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Problem pr = make_problem(20, 40, 3, 3.0, 400 + seed, 1e-12);
        for (double mid : interior_points(pr.path)) {
            negative += gamma_b_derivative(pr.path, mid) < 0.0;
            ++total;
        }
        const auto bp = pr.path.breakpoints();
        for (std::size_t k = 1; k < bp.size(); ++k)
            EXPECT_GT(gamma_b(pr.path, bp[k]), gamma_b(pr.path, bp[k - 1])) << "seed " << seed;
    }
    EXPECT_EQ(negative, total);
}

TEST(TuneB, PlantedRootRecovered)
{
    const Problem pr = make_problem(20, 40, 3, 3.0, 5, 1e-12);
    const double target = 0.5 * pr.path.tau;
    const double c = gamma_b(pr.path, target);
    const TunedEstimate est = tune_newton(pr.path, pr.x.entries(), pr.obs.y, c);
    ASSERT_TRUE(est.converged);
    EXPECT_NEAR(est.lambda_hat, target, 1e-8 * pr.path.tau);
}

TEST(TuneB, NewtonMatchesPathExact)
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Problem pr = make_problem(20, 40, 3, 3.0, 600 + seed, 1e-12);
        for (double c : {0.1, 0.5, 2.0}) {
            const TunedEstimate ex = tune_path_exact_b(pr.path, pr.x.entries(), pr.obs.y, c);
            const TunedEstimate nw = tune_newton(pr.path, pr.x.entries(), pr.obs.y, c);
            ASSERT_TRUE(nw.converged) << "seed " << seed << " C " << c;
            EXPECT_NEAR(nw.lambda_hat, ex.lambda_hat, 1e-6 * ex.lambda_hat) << "seed " << seed << " C " << c;
            EXPECT_EQ(ex.roots_found, 1u) << "seed " << seed << " C " << c;

            const double l1 = nw.beta.lpNorm<1>();
            const double r2 = (pr.obs.y - pr.x.entries() * nw.beta).squaredNorm();
            EXPECT_LT(std::abs(nw.lambda_hat * l1 - c * r2) / (c * r2), 1e-5);
            const double s2 = (r2 + 2.0 * nw.lambda_hat * l1) / 20.0;
            EXPECT_NEAR(nw.sigma_hat * nw.sigma_hat, s2, 1e-12 * s2);
            EXPECT_TRUE(nw.kkt.valid());
        }
    }
}

TEST(TuneB, SolverBackendAgreesWithPath)
{
    const Problem pr = make_problem(20, 40, 3, 3.0, 8, 1e-12);
    SolverConfig cfg;
    cfg.tol = 1e-12;
    const TunedEstimate cd = tune_newton(SolverBackend(pr.x.entries(), pr.obs.y, cfg), 20, 0.5);
    const TunedEstimate hp = tune_newton(pr.path, pr.x.entries(), pr.obs.y, 0.5);
    ASSERT_TRUE(cd.converged);
    EXPECT_NEAR(cd.lambda_hat, hp.lambda_hat, 1e-6 * hp.lambda_hat);
}

TEST(TuneB, SmallCApproachesTau)
{
    const Problem pr = make_problem(20, 40, 3, 3.0, 9, 1e-12);
    const TunedEstimate est = tune_path_exact_b(pr.path, pr.x.entries(), pr.obs.y, 1e-9);
    EXPECT_LT(est.lambda_hat, pr.path.tau);
    EXPECT_GT(est.lambda_hat, (1.0 - 1e-6) * pr.path.tau);
}

TEST(TuneB, GridHasOneSignChange)
{
    const Problem pr = make_problem(20, 40, 3, 3.0, 10, 1e-12);
    const auto f = [&](double l) { return gamma_b(pr.path, l); };
    for (double c : {0.1, 1.0}) {
        EXPECT_EQ(ref::grid_sign_changes(f, c, pr.path.lambda_min, pr.path.tau, 10000), 1u);
        EXPECT_EQ(gamma_b_roots(pr.path, c).size(), 1u);
    }
}

TEST(TuneB, RootsSolveTheSegmentEquation)
{
    const Problem pr = make_problem(20, 40, 3, 3.0, 11, 1e-12);
    for (double c : {0.05, 0.3, 3.0})
        for (double r : gamma_b_roots(pr.path, c)) EXPECT_NEAR(gamma_b(pr.path, r), c, 1e-9 * c);
}

TEST(TuneB, CAboveRangeIsAnError)
{
    const Problem pr = make_problem(20, 40, 3, 3.0, 12, 0.5);
    const double top = gamma_b(pr.path, pr.path.lambda_min);
    EXPECT_THROW(tune_path_exact_b(pr.path, pr.x.entries(), pr.obs.y, 2.0 * top), OutOfRangeError);
    EXPECT_THROW(tune_newton(pr.path, pr.x.entries(), pr.obs.y, 2.0 * top), OutOfRangeError);
}

TEST(TuneB, NewtonNonConvergenceFallsBack)
{
    const Problem pr = make_problem(20, 40, 3, 3.0, 13, 1e-12);
    NewtonOptions opt;
    opt.max_iter = 1;
    const TunedEstimate est = tune_strategy_b(pr.path, pr.x.entries(), pr.obs.y, 0.5, TuneMethod::newton, opt);
    EXPECT_EQ(est.method, TuneMethod::path_exact);
    EXPECT_NEAR(gamma_b(pr.path, est.lambda_hat), 0.5, 1e-9);
}
