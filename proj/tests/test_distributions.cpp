#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "oracles.hpp"

using namespace gjn;

namespace {

Eigen::RowVectorXd row(std::initializer_list<double> xs) {
    Eigen::RowVectorXd r(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index k = 0;
    for (double x : xs) r(k++) = x;
    return r;
}

struct PhFixture {
    Eigen::RowVectorXd a;
    Eigen::MatrixXd U;
};

std::vector<PhFixture> ph_fixtures() {
    std::vector<PhFixture> out;
    Eigen::MatrixXd U(2, 2);
    U << -1, 1, 0, -1;  // Erlang(2, 1)
    out.push_back({row({1, 0}), U});
    U << -1, 0, 0, -3;  // hyperexponential
    out.push_back({row({0.3, 0.7}), U});
    U << -2, 1.5, 0, -1;  // Coxian
    out.push_back({row({1, 0}), U});
    return out;
}

// Every variant together with an independent density for quadrature.
struct Law {
    Distribution dist;
    std::function<double(double)> density;  // empty for the point mass
    double upper;                           // quadrature horizon
    double lower = 0.0;                     // left end of the support
};

std::vector<Law> laws() {
    std::vector<Law> out;
    out.push_back({Distribution::exponential(2.0), [](double t) { return 2.0 * std::exp(-2.0 * t); }, 40.0});
    out.push_back({Distribution::erlang(3, 1.5),
                   [](double t) { return std::pow(1.5, 3) * t * t * std::exp(-1.5 * t) / 2.0; }, 60.0});
    out.push_back({Distribution::uniform(0.5, 2.0), [](double) { return 1.0 / 1.5; }, 2.0, 0.5});
    for (const auto& f : ph_fixtures())
        out.push_back({Distribution::phase_type(f.a, f.U), [f](double t) { return oracle::ph_density(f.a, f.U, t); },
                       60.0});
    out.push_back({Distribution::deterministic(1.25), {}, 0.0});
    return out;
}

}  // namespace

TEST(Mgf, ExponentialMatchesClosedFormAndQuadrature) {
    const auto d = Distribution::exponential(2.0);
    EXPECT_NEAR(d.mgf(1.0), 2.0, 1e-14);
    const double quad = oracle::mgf_quad([](double t) { return 2.0 * std::exp(-2.0 * t); }, 1.0, 60.0);
    EXPECT_NEAR(d.mgf(1.0), quad, 1e-8);
}

TEST(Mgf, NormalizedAtZero) {
    for (const auto& l : laws()) EXPECT_NEAR(l.dist.mgf(0.0), 1.0, 1e-12) << l.dist.type_name();
}

TEST(Mgf, Deterministic) { EXPECT_NEAR(Distribution::deterministic(1.5).mgf(2.0), std::exp(3.0), 1e-12); }

TEST(Mgf, DivergesAtAndBeyondBeta) {
    EXPECT_TRUE(std::isinf(Distribution::exponential(3.0).mgf(3.0)));
    EXPECT_TRUE(std::isinf(Distribution::erlang(2, 1.0).mgf(1.5)));
    EXPECT_TRUE(std::isfinite(Distribution::deterministic(1.0).mgf(300.0)));
}

TEST(Mgf, AgreesWithQuadratureBelowBeta) {
    for (const auto& l : laws()) {
        if (!l.density) continue;
        const double b = std::min(l.dist.beta(), 3.0);
        for (double s : {-1.0, -0.3, 0.2 * b, 0.5 * b}) {
            const double ref = oracle::mgf_quad(l.density, s, l.upper, l.lower);
            EXPECT_NEAR(l.dist.mgf(s), ref, 1e-7 * std::max(1.0, ref)) << l.dist.type_name() << " s=" << s;
        }
    }
}

TEST(MgfTruncated, SpecValues) {
    EXPECT_NEAR(Distribution::deterministic(5.0).mgf_truncated(1.0, 1.0), std::numbers::e, 1e-14);
    EXPECT_NEAR(Distribution::exponential(1.0).mgf_truncated(1.0, 0.0), 1.0, 1e-14);
    EXPECT_NEAR(Distribution::exponential(1.0).mgf_truncated(1.0, 2.0), 2.0 * std::numbers::e - 1.0, 1e-12);
}

TEST(MgfTruncated, AgreesWithQuadrature) {
    for (const auto& l : laws()) {
        if (!l.density) continue;
        for (double v : {0.3, 1.0, 2.5})
            for (double s : {-2.0, 0.5, 4.0}) {
                const double ref = oracle::mgf_trunc_quad(l.density, std::min(v, l.upper), s, l.lower);
                EXPECT_NEAR(l.dist.mgf_truncated(v, s), ref, 1e-8 * std::max(1.0, ref))
                    << l.dist.type_name() << " v=" << v << " s=" << s;
            }
    }
}

TEST(MgfTruncated, MonotoneInVAndConvergent) {
    for (const auto& l : laws()) {
        const double b = l.dist.beta();
        for (double s : {-1.0, std::isinf(b) ? 1.0 : 0.5 * b}) {
            double prev = l.dist.mgf_truncated(1.0, s);
            for (int k = 1; k <= 10; ++k) {
                const double cur = l.dist.mgf_truncated(std::ldexp(1.0, k), s);
                if (s > 0) EXPECT_GE(cur, prev * (1 - 1e-12)) << l.dist.type_name();
                else EXPECT_LE(cur, prev * (1 + 1e-12)) << l.dist.type_name();
                prev = cur;
            }
            EXPECT_NEAR(prev, l.dist.mgf(s), 1e-9 * l.dist.mgf(s)) << l.dist.type_name();
        }
    }
}

TEST(MgfPrime, SpecValues) {
    EXPECT_NEAR(Distribution::exponential(1.0).mgf_prime(detail::kInf, 0.0), 1.0, 1e-14);
    EXPECT_NEAR(Distribution::exponential(2.0).mgf_prime(detail::kInf, 1.0), 2.0, 1e-14);
    EXPECT_NEAR(Distribution::deterministic(1.0).mgf_prime(detail::kInf, 0.5), std::exp(0.5), 1e-14);
    EXPECT_THROW(Distribution::exponential(1.0).mgf_prime(detail::kInf, 1.0), DivergentMgf);
}

TEST(MgfPrime, MatchesCentralDifferences) {
    for (const auto& l : laws()) {
        const double b = l.dist.beta();
        const double top = std::isinf(b) ? 2.0 : 0.8 * b;
        for (int k = 0; k <= 8; ++k) {
            const double s = -2.0 + (top + 2.0) * k / 8.0;
            const double fd = oracle::central_diff([&](double x) { return l.dist.mgf(x); }, s);
            const double an = l.dist.mgf_prime(detail::kInf, s);
            EXPECT_NEAR(an, fd, 1e-6 * std::abs(an)) << l.dist.type_name() << " s=" << s;
            for (double v : {0.7, 3.0}) {
                const double fdv = oracle::central_diff([&](double x) { return l.dist.mgf_truncated(v, x); }, s);
                const double anv = l.dist.mgf_prime(v, s);
                EXPECT_NEAR(anv, fdv, 1e-6 * std::abs(anv)) << l.dist.type_name() << " v=" << v << " s=" << s;
            }
        }
    }
}

TEST(Mgf, LogConvexMidpoint) {
    for (const auto& l : laws()) {
        const double b = l.dist.beta();
        const double top = std::isinf(b) ? 3.0 : 0.9 * b;
        for (int k = 0; k < 20; ++k) {
            const double x = -3.0 + (top + 3.0) * k / 20.0;
            const double y = top - 0.5 * (top + 3.0) * k / 20.0;
            const double mid = std::log(l.dist.mgf(0.5 * (x + y)));
            EXPECT_LE(mid, 0.5 * (std::log(l.dist.mgf(x)) + std::log(l.dist.mgf(y))) + 1e-12);
            const double midv = std::log(l.dist.mgf_truncated(1.5, 0.5 * (x + y)));
            EXPECT_LE(midv, 0.5 * (std::log(l.dist.mgf_truncated(1.5, x)) + std::log(l.dist.mgf_truncated(1.5, y))) +
                                1e-12);
        }
    }
}

TEST(Beta, Values) {
    EXPECT_EQ(Distribution::exponential(3.0).beta(), 3.0);
    EXPECT_TRUE(std::isinf(Distribution::deterministic(1.0).beta()));
    EXPECT_NEAR(Distribution::erlang(2, 1.0).beta(), 1.0, 1e-14);
    const auto f = ph_fixtures()[2];
    EXPECT_NEAR(Distribution::phase_type(f.a, f.U).beta(), 1.0, 1e-12);
}

TEST(Beta, UnreachablePhasesAreIgnored) {
    Eigen::MatrixXd U(3, 3);
    U << -1, 1, 0, 0, -2, 0, 0, 0, -0.1;
    const auto d = Distribution::phase_type(row({1, 0, 0}), U);
    EXPECT_NEAR(d.beta(), 1.0, 1e-12);
    EXPECT_EQ(d.ph().U.rows(), 2);
    EXPECT_NEAR(d.mean(), 1.5, 1e-12);
}

TEST(LightTail, BuiltInsPass) {
    for (const auto& l : laws()) EXPECT_TRUE(l.dist.check_light_tail()) << l.dist.type_name();
}

TEST(ConditionalBound, SpecValues) {
    EXPECT_NEAR(Distribution::exponential(2.0).conditional_mgf_bound(0.5), 2.0 / 1.5, 1e-12);
    EXPECT_NEAR(Distribution::deterministic(1.0).conditional_mgf_bound(1.0), std::numbers::e, 1e-12);
    EXPECT_NEAR(Distribution::erlang(2, 1.0).conditional_mgf_bound(0.0), 1.0, 1e-12);
    EXPECT_THROW(Distribution::exponential(2.0).conditional_mgf_bound(2.0), DivergentMgf);
}

TEST(ConditionalBound, DominatesBruteForceResiduals) {
    for (const auto& f : ph_fixtures()) {
        const auto d = Distribution::phase_type(f.a, f.U);
        for (double s : {0.2 * d.beta(), 0.6 * d.beta()}) {
            const double h = d.conditional_mgf_bound(s);
            for (double t : {0.0, 0.5, 1.0, 2.0, 5.0}) {
                const double num = oracle::simpson(
                    [&](double x) { return std::exp(s * (x - t)) * oracle::ph_density(f.a, f.U, x); }, t, t + 80.0);
                const double cond = num / oracle::ph_survival(f.a, f.U, t);
                EXPECT_LE(cond, h * (1.0 + 1e-8)) << "t=" << t << " s=" << s;
            }
        }
    }
}

TEST(Sample, MeansConverge) {
    Rng rng(12345);
    const int n = 1000000;
    auto mean_of = [&](const Distribution& d) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += d.sample(rng);
        return s / n;
    };
    EXPECT_EQ(Distribution::deterministic(2.0).sample(rng), 2.0);
    EXPECT_NEAR(mean_of(Distribution::exponential(1.0)), 1.0, 0.01);
    Eigen::MatrixXd U(2, 2);
    U << -1, 1, 0, -1;
    EXPECT_NEAR(mean_of(Distribution::phase_type(row({1, 0}), U)), 2.0, 0.01);
    EXPECT_NEAR(mean_of(Distribution::uniform(0.5, 2.0)), 1.25, 0.01);
    EXPECT_NEAR(mean_of(Distribution::erlang(3, 1.5)), 2.0, 0.01);
}

TEST(Validation, RejectsBadParameters) {
    EXPECT_THROW(Distribution::exponential(0.0), InvalidDistribution);
    EXPECT_THROW(Distribution::deterministic(-1.0), InvalidDistribution);
    EXPECT_THROW(Distribution::erlang(0, 1.0), InvalidDistribution);
    EXPECT_THROW(Distribution::uniform(2.0, 1.0), InvalidDistribution);
    Eigen::MatrixXd U(2, 2);
    U << -1, 1, 1, -1;  // conservative, never absorbs
    EXPECT_THROW(Distribution::phase_type(row({1, 0}), U), InvalidDistribution);
    U << -1, 0.5, 0, -1;
    EXPECT_THROW(Distribution::phase_type(row({0.5, 0.4}), U), InvalidDistribution);
}
