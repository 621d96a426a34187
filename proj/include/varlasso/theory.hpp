#pragma once
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include "errors.hpp"
#include "model.hpp"
#include "types.hpp"

namespace varlasso {

struct TheoryParams
{
    double alpha = 1.5;
    double r = 0.5;
    double C = 1.0;  // Strategy B trade-off constant

    void validate() const
    {
        if (!(alpha > 0.0)) throw InvalidArgument("TheoryParams: alpha must be positive");
        if (!(r > 0.0 && r <= 0.5)) throw InvalidArgument("TheoryParams: r must lie in (0, 1/2]");
        if (!(C > 0.0)) throw InvalidArgument("TheoryParams: C must be positive");
    }
};

/// main: the coherence/sparsity constants used by the recovery theorems.
/// invertibility: the sharper pair under which ||X_T^t X_T - I|| <= r holds
/// for a random support (factors 1/2 and 1/4 relative to main).
enum class ConstantSet { main, invertibility };

inline double kappa(double alpha)
{
    if (!(alpha >= 0.0)) throw InvalidArgument("kappa: alpha must be non-negative");
    return 4.0 * std::sqrt(1.0 + alpha);
}

struct SparsityConstants
{
    double c_spar = 0.0;
    double c_mu = 0.0;
};

inline SparsityConstants constants(const TheoryParams& t, ConstantSet set = ConstantSet::main)
{
    t.validate();
    const double e2 = std::exp(2.0);
    SparsityConstants c{t.r * t.r / ((1.0 + t.alpha) * e2), t.r / (1.0 + t.alpha)};
    if (set == ConstantSet::invertibility) {
        c.c_spar /= 4.0;
        c.c_mu /= 2.0;
    }
    return c;
}

/// l_alpha(x) = x exp(-4 alpha / x), an increasing bijection of (0, inf).
inline double ell_alpha(double alpha, double x) { return x * std::exp(-4.0 * alpha / x); }

inline double c_circ_rhs(const TheoryParams& t)
{
    const double k = kappa(t.alpha);
    return 10.0 * std::numbers::e * (1.0 + t.r) / ((1.0 - t.r) * (1.0 - t.r)) * k * k;
}

/// C_circ solving l_alpha(C_circ) = 10 e (1+r)/(1-r)^2 kappa^2.
inline double c_circ(const TheoryParams& t)
{
    t.validate();
    const double rhs = c_circ_rhs(t);
    double lo = 0.0;
    double hi = rhs + 4.0 * t.alpha * std::numbers::e;
    while (ell_alpha(t.alpha, hi) < rhs) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ell_alpha(t.alpha, mid) < rhs ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct BoundsA
{
    double s0 = 0.0;
    double n_min = 0.0;
    double H = 0.0;
};

inline BoundsA bounds_a(double opnorm_sq, Index n, Index p, Index s, const TheoryParams& t,
                        ConstantSet set = ConstantSet::main)
{
    if (p < 2) throw InvalidArgument("bounds_a: need p >= 2");
    if (!(opnorm_sq > 0.0)) throw InvalidArgument("bounds_a: ||X||^2 must be positive");
    const double logp = std::log(static_cast<double>(p));
    BoundsA b;
    b.s0 = static_cast<double>(p) / logp * constants(t, set).c_spar / opnorm_sq;
    b.n_min = static_cast<double>(s) * (c_circ(t) * logp + 1.0);
    b.H = 4.0 * (std::sqrt(static_cast<double>(n)) + std::sqrt(2.0 * t.alpha * logp)) / std::sqrt(b.s0)
        * (1.0 - t.r) / std::sqrt(1.0 + t.r);
    return b;
}

inline BoundsA bounds_a(const DesignMatrix& x, Index s, const TheoryParams& t, ConstantSet set = ConstantSet::main)
{
    const double nrm = x.operator_norm();
    return bounds_a(nrm * nrm, x.rows(), x.cols(), s, t, set);
}

struct BoundsB
{
    double L = 0.0;
    double M = 0.0;
    double n_min = 0.0;
    double c_circ_lower = 0.0;  // (6 kappa)^2 e / (1 - r)
};

inline BoundsB bounds_b(Index n, Index p, Index s, const TheoryParams& t)
{
    t.validate();
    if (p < 2) throw InvalidArgument("bounds_b: need p >= 2");
    if (s < 1) throw InvalidArgument("bounds_b: need s >= 1");
    if (n <= s) throw InvalidArgument("bounds_b: need n > s");
    const double logp = std::log(static_cast<double>(p));
    const double k = kappa(t.alpha);
    const double c = t.C;
    const double ns = static_cast<double>(n - s);
    const double sd = static_cast<double>(s);
    const double tail = std::sqrt(2.0 * t.alpha * logp);
    const double sr = std::sqrt(1.0 - t.r);
    BoundsB b;
    const double l1 = 2.0 * std::sqrt(1.0 + 2.0 * c) / (c * sr) * (std::sqrt(ns) + tail) / std::sqrt(sd);
    const double l2 = 2.0 * (std::sqrt(sd) + tail) / (sr * std::sqrt(sd));
    b.L = std::max(l1, l2);
    // (sqrt(pi (n-s)) / p^alpha)^(4/(n-s)) evaluated in logs.
    const double base_log = 0.5 * std::log(std::numbers::pi * ns) - t.alpha * logp;
    b.M = ns / std::sqrt(logp) / (3.0 * k * c) * std::exp(4.0 / ns * base_log);
    b.c_circ_lower = 36.0 * k * k * std::numbers::e / (1.0 - t.r);
    b.n_min = b.c_circ_lower * (1.0 + 2.0 * c) * sd * logp + sd;
    return b;
}

struct ChiTails
{
    double upper = 0.0;  // bound on P(chi(nu) >= sqrt(nu) + sqrt(2t))
    double lower = 0.0;  // bound on P(chi(nu) <= sqrt(u nu))
};

inline ChiTails chi_tails(double nu, double t, double u)
{
    if (!(nu >= 1.0)) throw InvalidArgument("chi_tails: need nu >= 1");
    if (!(t >= 0.0)) throw InvalidArgument("chi_tails: need t >= 0");
    if (!(u > 0.0 && u <= 2.0 / std::numbers::e)) throw InvalidArgument("chi_tails: need u in (0, 2/e]");
    return {std::exp(-t), 2.0 / std::sqrt(std::numbers::pi * nu) * std::pow(u * std::numbers::e / 2.0, nu / 4.0)};
}

enum class Strategy { a, b };

inline const char* to_string(Strategy s) { return s == Strategy::a ? "A" : "B"; }

/// One hypothesis of a recovery theorem. margin >= 0 iff the check holds.
struct Check
{
    bool ok = true;
    double margin = std::numeric_limits<double>::infinity();
    bool evaluated = false;
};

inline Check make_check(double margin)
{
    return {margin >= 0.0, margin, true};
}

struct AssumptionReport
{
    Strategy strategy = Strategy::a;
    Check coherence_ok;
    Check sparsity_ok;
    Check sample_size_ok;
    Check beta_lower_ok;
    Check beta_upper_ok;      // B only
    Check cvar_in_interval;   // A only
    std::map<std::string, double> constants;

    bool all_ok() const
    {
        for (const Check* c : {&coherence_ok, &sparsity_ok, &sample_size_ok, &beta_lower_ok, &beta_upper_ok,
                               &cvar_in_interval})
            if (c->evaluated && !c->ok) return false;
        return true;
    }
};

/// Report-only evaluation of the theorem hypotheses on a concrete instance.
/// cvar_or_c is C_var for Strategy A and overrides params.C for Strategy B.
inline AssumptionReport check_assumptions(const DesignMatrix& x, const GroundTruth& truth, Strategy strategy,
                                          TheoryParams params, double cvar_or_c,
                                          ConstantSet set = ConstantSet::main)
{
    if (truth.beta.size() != x.cols()) throw InvalidArgument("check_assumptions: beta length differs from p");
    if (strategy == Strategy::b) params.C = cvar_or_c;
    params.validate();
    const Index n = x.rows();
    const Index p = x.cols();
    const Index s = truth.sparsity();
    const double logp = std::log(static_cast<double>(p));
    const double nrm = x.operator_norm();
    const SparsityConstants sc = constants(params, set);

    AssumptionReport rep;
    rep.strategy = strategy;
    auto& k = rep.constants;
    k["kappa"] = kappa(params.alpha);
    k["C_spar"] = sc.c_spar;
    k["C_mu"] = sc.c_mu;
    k["C_circ"] = c_circ(params);
    k["operator_norm_sq"] = nrm * nrm;
    k["coherence"] = x.coherence();

    const BoundsA ba = bounds_a(nrm * nrm, n, p, s, params, set);
    k["s0"] = ba.s0;
    rep.coherence_ok = make_check(sc.c_mu / logp - k["coherence"]);
    rep.sparsity_ok = make_check(ba.s0 - static_cast<double>(s));

    const double min_beta = truth.min_abs_coefficient();  // +inf when s = 0
    if (strategy == Strategy::a) {
        k["n_min"] = ba.n_min;
        k["H"] = ba.H;
        rep.sample_size_ok = make_check(static_cast<double>(n) - ba.n_min);
        rep.beta_lower_ok = s == 0 ? Check{true, std::numeric_limits<double>::infinity(), true}
                                   : make_check(min_beta - ba.H * truth.sigma);
        const double base = (1.0 - params.r) * (1.0 - params.r) / ((1.0 + params.r) * sc.c_spar);
        const double lo = base / 20.0;
        const double hi = base / 2.0;
        const double scale = static_cast<double>(n) / static_cast<double>(p) * nrm * nrm;
        k["cvar_lo"] = lo * scale;
        k["cvar_hi"] = hi * scale;
        rep.cvar_in_interval = make_check(std::min(cvar_or_c - lo * scale, hi * scale - cvar_or_c));
    } else if (s == 0) {
        rep.sample_size_ok = make_check(static_cast<double>(n));
        rep.beta_lower_ok = {true, std::numeric_limits<double>::infinity(), true};
        rep.beta_upper_ok = {true, std::numeric_limits<double>::infinity(), true};
    } else if (n <= s) {
        rep.sample_size_ok = make_check(static_cast<double>(n - s) - 1.0);
    } else {
        const BoundsB bb = bounds_b(n, p, s, params);
        k["L"] = bb.L;
        k["M"] = bb.M;
        k["n_min"] = bb.n_min;
        k["c_circ_lower"] = bb.c_circ_lower;
        rep.sample_size_ok = make_check(static_cast<double>(n) - bb.n_min);
        rep.beta_lower_ok = make_check(min_beta - bb.L * truth.sigma);
        rep.beta_upper_ok = make_check(bb.M * truth.sigma - truth.beta.lpNorm<1>());
    }
    return rep;
}

} // namespace varlasso
