#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <numbers>
#include <varlasso/io.hpp>
#include <varlasso/theory.hpp>

using namespace varlasso;

namespace {

constexpr double e = std::numbers::e;

TheoryParams params(double alpha, double r, double c = 1.0)
{
    TheoryParams t;
    t.alpha = alpha;
    t.r = r;
    t.C = c;
    return t;
}

// Plain 64-step bisection on the defining identity.
double bisect_c_circ(double alpha, double rhs)
{
    double lo = 1e-9, hi = 1e6;
    for (int i = 0; i < 64; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid * std::exp(-4.0 * alpha / mid) < rhs ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST(Kappa, Values)
{
    EXPECT_EQ(kappa(0.0), 4.0);
    EXPECT_NEAR(kappa(1.5), 6.32455532033676, 1e-13);
    EXPECT_EQ(kappa(3.0), 8.0);
    EXPECT_NEAR(kappa(1.5) * kappa(1.5), 40.0, 1e-12);
}

TEST(Constants, PaperValues)
{
    const auto c = constants(params(1.5, 0.5));
    EXPECT_NEAR(c.c_spar, 1.4e-2, 0.05e-2);
    EXPECT_NEAR(c.c_mu, 0.2, 1e-15);
    EXPECT_NEAR(constants(params(1.0, 0.25)).c_spar, 0.0625 / (2.0 * e * e), 1e-16);
    const auto small = constants(params(1.5, 1e-9));
    EXPECT_LT(small.c_spar, 1e-18);
    EXPECT_LT(small.c_mu, 1e-9);
}

TEST(Constants, InvertibilitySetIsSharper)
{
    const auto m = constants(params(1.5, 0.5));
    const auto i = constants(params(1.5, 0.5), ConstantSet::invertibility);
    EXPECT_DOUBLE_EQ(i.c_spar, m.c_spar / 4.0);
    EXPECT_DOUBLE_EQ(i.c_mu, m.c_mu / 2.0);
}

TEST(Constants, InvalidParams)
{
    EXPECT_THROW(constants(params(1.5, 0.6)), InvalidArgument);
    EXPECT_THROW(constants(params(1.5, 0.0)), InvalidArgument);
    EXPECT_THROW(constants(params(-1.0, 0.5)), InvalidArgument);
}

TEST(CCirc, RootIdentityAndRegression)
{
    const TheoryParams t = params(1.5, 0.5);
    EXPECT_NEAR(c_circ_rhs(t), 2400.0 * e, 1e-9);
    EXPECT_NEAR(c_circ_rhs(t), 6523.876388301708, 1e-9);
    const double c = c_circ(t);
    EXPECT_NEAR(c, bisect_c_circ(1.5, c_circ_rhs(t)), 1e-8);
    EXPECT_NEAR(c, 6529.873632584040, 1e-8);
    EXPECT_NEAR(c_circ(params(1.0, 0.25)), 1936.996284084137, 1e-8);
}

TEST(CCirc, IdentityOverParameterGrid)
{
    for (double alpha : {0.01, 0.5, 1.5, 4.0, 20.0})
        for (double r : {0.01, 0.25, 0.5}) {
            const TheoryParams t = params(alpha, r);
            const double c = c_circ(t);
            const double rhs = c_circ_rhs(t);
            EXPECT_NEAR(ell_alpha(alpha, c), rhs, 1e-10 * rhs) << alpha << " " << r;
            EXPECT_GT(c, rhs);
        }
}

TEST(BoundsA, FormulaRecomputation)
{
    const TheoryParams t = params(1.5, 0.5);
    const double nrm2 = 12.3;
    const BoundsA b = bounds_a(nrm2, 75, 600, 9, t);
    const double logp = std::log(600.0);
    const double c_spar = 0.25 / (2.5 * e * e);
    const double s0 = 600.0 / logp * c_spar / nrm2;
    EXPECT_NEAR(b.s0, s0, 1e-14 * s0);
    EXPECT_NEAR(b.n_min, 9.0 * (6529.873632584040 * logp + 1.0), 1e-6);
    const double h = 4.0 * (std::sqrt(75.0) + std::sqrt(3.0 * logp)) / std::sqrt(s0) * 0.5 / std::sqrt(1.5);
    EXPECT_NEAR(b.H, h, 1e-12 * h);
}

TEST(BoundsA, DoublingNormHalvesS0)
{
    const TheoryParams t;
    EXPECT_NEAR(bounds_a(20.0, 75, 600, 9, t).s0, 0.5 * bounds_a(10.0, 75, 600, 9, t).s0, 1e-15);
    EXPECT_EQ(bounds_a(10.0, 75, 600, 0, t).n_min, 0.0);
}

TEST(BoundsA, GaussianDesignH)
{
    const DesignMatrix x = gen_gaussian_design(75, 600, 7);
    const BoundsA b = bounds_a(x, 9, TheoryParams{});
    const double ratio = b.H / std::sqrt(std::log(600.0));
    RecordProperty("H_over_sqrt_logp", std::to_string(ratio));
    EXPECT_GE(ratio, 1.0);
    EXPECT_LE(ratio, 30.0);
}

TEST(BoundsB, FormulaRecomputation)
{
    const TheoryParams t = params(1.5, 0.5, 1.0);
    const BoundsB b = bounds_b(75, 600, 9, t);
    const double logp = std::log(600.0);
    const double tail = std::sqrt(3.0 * logp);
    const double l1 = 2.0 * std::sqrt(3.0) / std::sqrt(0.5) * (std::sqrt(66.0) + tail) / 3.0;
    const double l2 = 2.0 * (3.0 + tail) / (std::sqrt(0.5) * 3.0);
    EXPECT_NEAR(b.L, std::max(l1, l2), 1e-12 * b.L);
    const double m = 66.0 / std::sqrt(logp) / (3.0 * kappa(1.5)) * std::pow(std::sqrt(std::numbers::pi * 66.0) / std::pow(600.0, 1.5), 4.0 / 66.0);
    EXPECT_NEAR(b.M, m, 1e-12 * m);
    EXPECT_NEAR(b.c_circ_lower, 2880.0 * e, 1e-9);
    EXPECT_NEAR(b.c_circ_lower, 7828.651665962050, 1e-9);
    EXPECT_NEAR(b.n_min, 2880.0 * e * 3.0 * 9.0 * logp + 9.0, 1e-6);
}

TEST(BoundsB, LargeCLeavesSecondTerm)
{
    const double logp = std::log(600.0);
    const double second = 2.0 * (3.0 + std::sqrt(3.0 * logp)) / (std::sqrt(0.5) * 3.0);
    EXPECT_NEAR(bounds_b(75, 600, 9, params(1.5, 0.5, 1e8)).L, second, 1e-12 * second);
    EXPECT_GT(bounds_b(75, 600, 9, params(1.5, 0.5, 1e-3)).L, second);
}

TEST(BoundsB, MScalesAsInverseC)
{
    const double m1 = bounds_b(75, 600, 9, params(1.5, 0.5, 1.0)).M;
    for (double c : {0.1, 3.0, 40.0})
        EXPECT_NEAR(bounds_b(75, 600, 9, params(1.5, 0.5, c)).M * c, m1, 1e-12 * m1);
}

TEST(BoundsB, MStableForHugeP)
{
    const double m = bounds_b(500, 100000000, 9, params(10.0, 0.5)).M;
    EXPECT_TRUE(std::isfinite(m));
    EXPECT_GT(m, 0.0);
}

TEST(BoundsB, Errors)
{
    EXPECT_THROW(bounds_b(9, 600, 9, TheoryParams{}), InvalidArgument);
    EXPECT_THROW(bounds_b(75, 600, 0, TheoryParams{}), InvalidArgument);
}

TEST(ChiTails, EdgeCases)
{
    EXPECT_EQ(chi_tails(10.0, 0.0, 0.5).upper, 1.0);
    EXPECT_NEAR(chi_tails(10.0, 1.0, 2.0 / e).lower, 2.0 / std::sqrt(std::numbers::pi * 10.0), 1e-15);
    EXPECT_THROW(chi_tails(0.5, 1.0, 0.5), InvalidArgument);
    EXPECT_THROW(chi_tails(10.0, 1.0, 0.8), InvalidArgument);
    EXPECT_THROW(chi_tails(10.0, 1.0, 0.0), InvalidArgument);
}

TEST(ChiTails, DominatesExactTails)
{
    for (double nu : {10.0, 66.0, 100.0}) {
        const boost::math::chi_squared chi(nu);
        for (double t : {0.5, 2.0, 1.5 * std::log(600.0)}) {
            const double q = std::sqrt(nu) + std::sqrt(2.0 * t);
            EXPECT_LE(boost::math::cdf(boost::math::complement(chi, q * q)), chi_tails(nu, t, 0.5).upper);
        }
        for (double u : {0.05, 0.3, 0.7}) EXPECT_LE(boost::math::cdf(chi, u * nu), chi_tails(nu, 1.0, u).lower);
    }
}

TEST(ChiTails, DominatesMonteCarlo)
{
    const int samples = 1000000;
    for (int nu : {10, 66, 100}) {
        Rng rng(static_cast<std::uint64_t>(nu));
        const double t = 1.5 * std::log(600.0);
        const double u = 0.5;
        const ChiTails b = chi_tails(nu, t, u);
        const double q_hi = std::sqrt(static_cast<double>(nu)) + std::sqrt(2.0 * t);
        const double q_lo = std::sqrt(u * nu);
        int above = 0, below = 0;
        for (int i = 0; i < samples; ++i) {
            double s = 0.0;
            for (int k = 0; k < nu; ++k) {
                const double z = rng.normal();
                s += z * z;
            }
            const double c = std::sqrt(s);
            above += c >= q_hi;
            below += c <= q_lo;
        }
        const auto within = [&](int hits, double bound) {
            const double f = static_cast<double>(hits) / samples;
            return f <= bound + 3.0 * std::sqrt(bound * (1.0 - bound) / samples);
        };
        EXPECT_TRUE(within(above, b.upper)) << "nu " << nu << " upper";
        EXPECT_TRUE(within(below, b.lower)) << "nu " << nu << " lower";
    }
}

TEST(Assumptions, HugeSigmaFailsBetaLower)
{
    const DesignMatrix x = gen_gaussian_design(75, 600, 7);
    GroundTruth t = gen_ground_truth(600, 9, 40.0, 1e12, 3);
    for (Strategy s : {Strategy::a, Strategy::b}) {
        const AssumptionReport r = check_assumptions(x, t, s, TheoryParams{}, s == Strategy::a ? 8.0 : 0.1);
        EXPECT_FALSE(r.beta_lower_ok.ok);
        EXPECT_LT(r.beta_lower_ok.margin, 0.0);
        EXPECT_FALSE(r.all_ok());
    }
}

TEST(Assumptions, EmptySupportIsVacuous)
{
    const DesignMatrix x = gen_gaussian_design(75, 600, 7);
    const GroundTruth t = gen_ground_truth(600, 0, 0.0, 1.0, 3);
    for (Strategy s : {Strategy::a, Strategy::b}) {
        const AssumptionReport r = check_assumptions(x, t, s, TheoryParams{}, s == Strategy::a ? 8.0 : 0.1);
        EXPECT_TRUE(r.beta_lower_ok.ok);
        EXPECT_EQ(r.beta_lower_ok.margin, std::numeric_limits<double>::infinity());
        EXPECT_TRUE(r.sparsity_ok.ok);
        EXPECT_TRUE(r.sample_size_ok.ok);
    }
}

TEST(Assumptions, BooleansFollowMargins)
{
    const DesignMatrix x = gen_gaussian_design(75, 600, 7);
    const GroundTruth t = gen_ground_truth(600, 9, 40.0, 1.0, 3);
    for (Strategy s : {Strategy::a, Strategy::b}) {
        const AssumptionReport r = check_assumptions(x, t, s, TheoryParams{}, s == Strategy::a ? 8.0 : 0.1);
        for (const Check* c : {&r.coherence_ok, &r.sparsity_ok, &r.sample_size_ok, &r.beta_lower_ok, &r.beta_upper_ok,
                               &r.cvar_in_interval})
            if (c->evaluated) {
                EXPECT_EQ(c->ok, c->margin >= 0.0);
            }
        EXPECT_EQ(r.beta_upper_ok.evaluated, s == Strategy::b);
        EXPECT_EQ(r.cvar_in_interval.evaluated, s == Strategy::a);
    }
}

TEST(Assumptions, PaperRegimeReport)
{
    // At this scale the sample-size and sparsity hypotheses cannot hold; the
    // report is computed and serialized, nothing is gated on it.
    const DesignMatrix x = gen_gaussian_design(75, 600, 7);
    const GroundTruth t = gen_ground_truth(600, 9, 40.0, 1.0, 3);
    const AssumptionReport a = check_assumptions(x, t, Strategy::a, TheoryParams{}, 8.0);
    const AssumptionReport b = check_assumptions(x, t, Strategy::b, TheoryParams{}, 0.1);
    EXPECT_FALSE(a.sample_size_ok.ok);
    EXPECT_FALSE(a.sparsity_ok.ok);
    EXPECT_FALSE(b.sample_size_ok.ok);
    const json ja = a;
    const json jb = b;
    RecordProperty("report_a", ja.dump());
    RecordProperty("report_b", jb.dump());
    EXPECT_EQ(ja.at("strategy"), "A");
    EXPECT_TRUE(ja.at("constants").contains("C_circ"));
    EXPECT_TRUE(jb.at("constants").contains("M"));
}
