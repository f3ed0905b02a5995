#include <gtest/gtest.h>

#include <cmath>

#include "nakano/approximation.hpp"
#include "nakano/random.hpp"
#include "oracles.hpp"

using namespace nakano;

namespace {

NakanoSpace space(std::vector<double> w, std::vector<double> p, std::optional<double> r = std::nullopt) {
    return NakanoSpace(AtomicMeasureSpace::with_weights(std::move(w)), std::move(p), r);
}

double brute_sup(const DyadicFit& fit, int points) {
    double worst = 0.0;
    for (int i = 0; i <= points; ++i)
        worst = std::max(worst, fit.error_at(1.0 + (fit.r - 1.0) * i / points));
    return worst;
}

} // namespace

TEST(DyadicFit, ExactCases) {
    const auto one = fit_dyadic(1, 3.0, 1e-6);
    ASSERT_EQ(one.n(), 1u);
    EXPECT_EQ(one.coefficients[0], 1.0);
    EXPECT_EQ(one.certified_error, 0.0);
    const auto point = fit_dyadic(2, 1.0, 1e-6);
    ASSERT_EQ(point.n(), 1u);
    EXPECT_EQ(point.coefficients[0], 2.0);
    EXPECT_EQ(point.certified_error, 0.0);
}

TEST(DyadicFit, Errors) {
    EXPECT_THROW(fit_dyadic(0, 2.0, 1e-3), DomainError);
    EXPECT_THROW(fit_dyadic(2, 0.5, 1e-3), DomainError);
    EXPECT_THROW(fit_dyadic(2, 2.0, 0.0), DomainError);
    DyadicFitOptions tight;
    tight.max_n = 4;
    EXPECT_THROW(fit_dyadic(2, 3.0, 1e-12, tight), std::runtime_error);
}

TEST(DyadicFit, TwoOnOneToThree) {
    const auto fit = fit_dyadic(2, 3.0, 1e-3);
    EXPECT_LE(fit.n(), 32u);
    EXPECT_LE(fit.certified_error, 1e-3);
    const double brute = brute_sup(fit, 100000);
    EXPECT_LE(brute, fit.certified_error + 1e-9);
    EXPECT_LE(brute, 1e-3);
}

TEST(DyadicFit, CertificateHoldsOnFinerGrid) {
    for (auto [m, r, eps] : {std::tuple{2, 3.0, 1e-3}, std::tuple{3, 2.0, 1e-4}, std::tuple{2, 2.5, 1e-6},
                             std::tuple{4, 1.5, 1e-5}}) {
        const auto fit = fit_dyadic(m, r, eps);
        EXPECT_LE(fit.certified_error, eps);
        const double fine = nakano::detail::certify_fit(fit, 16 * 8192);
        EXPECT_LE(fine - fit.certified_error, 1e-9) << m << ' ' << r;
    }
}

TEST(ThetaScaled, Examples) {
    const auto fit = fit_dyadic(2, 3.0, 1e-3);
    const auto N = space({1.0, 2.0}, {1.5, 3.0}, 3.0);
    EXPECT_EQ(theta_scaled(N, SimpleFunction::zero(N.space()), fit), 0.0);
    const auto id = fit_dyadic(1, 3.0, 1e-3);
    const SimpleFunction f(N.space(), {0.3, -0.4});
    EXPECT_EQ(theta_scaled(N, f, id), modular(N, f));
    EXPECT_THROW(theta_scaled(N, SimpleFunction(N.space(), {5.0, 5.0}), fit), ContractError);
    const auto short_fit = fit_dyadic(2, 2.0, 1e-3);
    EXPECT_THROW(theta_scaled(N, f, short_fit), ContractError);
}

TEST(ThetaScaled, WithinCertifiedError) {
    const auto fit = fit_dyadic(2, 3.0, 1e-3);
    Rng rng(51);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto N = random_nakano(rng, 1 + rng.index(0, 20), 1.0, 3.0, 3.0);
        const auto f = random_unit_ball(rng, N);
        const double exact = modular(N, 2.0 * f);
        EXPECT_LE(std::fabs(exact - theta_scaled(N, f, fit)), fit.certified_error + 1e-12);
    }
}

TEST(ThetaScaled, TighterFitDoesNotWorsenError) {
    Rng rng(52);
    std::vector<std::pair<NakanoSpace, SimpleFunction>> cases;
    for (int i = 0; i < 200; ++i) {
        auto N = random_nakano(rng, 10, 1.0, 3.0, 3.0);
        auto f = random_unit_ball(rng, N);
        cases.emplace_back(std::move(N), std::move(f));
    }
    double prev_err = std::numeric_limits<double>::infinity(), prev_bound = prev_err;
    for (double eps : {1e-2, 5e-3, 2.5e-3, 1.25e-3}) {
        const auto fit = fit_dyadic(2, 3.0, eps);
        double worst = 0.0;
        for (const auto& [N, f] : cases)
            worst = std::max(worst, std::fabs(modular(N, 2.0 * f) - theta_scaled(N, f, fit)));
        EXPECT_LE(worst, fit.certified_error + 1e-12);
        EXPECT_LE(worst, prev_err);
        EXPECT_LE(fit.certified_error, eps);
        EXPECT_LE(eps, prev_bound / 2.0 + 1e-18);
        prev_err = worst;
        prev_bound = eps;
    }
}

TEST(Chunk, PartitionShape) {
    const auto N = space({1, 1, 1, 1, 1}, {1.0, 1.24, 1.25, 1.5, 2.0}, 2.0);
    const SimpleFunction f(N.space(), {0.1, 0.2, 0.3, 0.4, 0.5});
    const auto cp = chunk(N, f, 4);
    ASSERT_EQ(cp.chunks.size(), 5u); // floor(4 * 1) + 1
    EXPECT_EQ(cp.chunks[0].space.size(), 2u);
    EXPECT_EQ(cp.chunks[1].space.size(), 1u);
    EXPECT_EQ(cp.chunks[2].space.size(), 1u);
    EXPECT_EQ(cp.chunks[3].space.size(), 0u);
    EXPECT_EQ(cp.chunks[4].space.size(), 1u); // p = r lands in the last chunk
    EXPECT_DOUBLE_EQ(cp.chunks[4].lo, 2.0);
    EXPECT_DOUBLE_EQ(cp.chunks[4].hi, 2.25);
    for (const auto& c : cp.chunks)
        for (std::size_t i = 0; i < c.space.size(); ++i) {
            EXPECT_GE(c.space.exponent(i), c.lo);
            EXPECT_LT(c.space.exponent(i), c.hi);
        }
    EXPECT_THROW(chunk(N, f, 0), DomainError);
}

TEST(Chunk, ExactEstimates) {
    const auto N = space({0.5, 1.5}, {1.6, 1.6}, 2.0);
    const auto f = (1.0 / luxemburg_norm(N, SimpleFunction(N.space(), {0.3, 0.8}))) *
                   SimpleFunction(N.space(), {0.3, 0.8});
    const auto cp = chunk(N, f, 4);
    EXPECT_NEAR(chunked_estimate(cp), 1.0, 1e-12);
    EXPECT_NEAR(modular(N, f), 1.0, 1e-12);
    EXPECT_EQ(chunked_estimate(chunk(N, SimpleFunction::zero(N.space()), 4)), 0.0);
}

TEST(Chunk, ErrorWithinBound) {
    Rng rng(53);
    for (int trial = 0; trial < 300; ++trial) {
        const auto N = random_nakano(rng, 1 + rng.index(0, 40), 1.0, 3.0, 3.0);
        const auto f = random_unit_ball(rng, N);
        const double theta = modular(N, f);
        for (std::size_t n : {4, 16, 64, 256})
            EXPECT_LE(std::fabs(theta - chunked_estimate(chunk(N, f, n))), chunk_error_bound(n));
    }
}

TEST(Chunk, MeanErrorDecreases) {
    Rng rng(54);
    std::vector<std::pair<NakanoSpace, SimpleFunction>> cases;
    for (int i = 0; i < 200; ++i) {
        auto N = random_nakano(rng, 30, 1.0, 3.0, 3.0);
        auto f = random_unit_ball(rng, N);
        cases.emplace_back(std::move(N), std::move(f));
    }
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : {4, 16, 64, 256}) {
        double total = 0.0;
        for (const auto& [N, f] : cases)
            total += std::fabs(modular(N, f) - chunked_estimate(chunk(N, f, n)));
        EXPECT_LT(total, prev) << n;
        prev = total;
    }
}

TEST(ChunkErrorBound, Constant) {
    const auto c0 = entropy_series_bounds();
    EXPECT_LE(c0.lower, oracle::C0);
    EXPECT_GE(c0.upper, oracle::C0);
    EXPECT_LT(c0.upper - c0.lower, 1e-7);
    EXPECT_GE(chunk_error_constant(), oracle::C);
    EXPECT_NEAR(chunk_error_constant(), oracle::C, 1e-7);
    EXPECT_GT(chunk_error_constant(), 4.0 / std::exp(1.0));
    for (std::size_t n : {1, 3, 10, 100}) {
        EXPECT_GT(chunk_error_bound(n), chunk_error_bound(n + 1));
        EXPECT_NEAR(chunk_error_bound(4 * n), chunk_error_bound(n) / 2.0, 1e-15);
    }
    EXPECT_THROW(chunk_error_bound(0), DomainError);
}

TEST(SingleChunkBound, Examples) {
    const auto unit = space({1.0, 1.0}, {2.0, 2.5}, 3.0);
    const auto f = (1.0 / luxemburg_norm(unit, SimpleFunction(unit.space(), {0.4, 0.9}))) *
                   SimpleFunction(unit.space(), {0.4, 0.9});
    const auto rep = verify_single_chunk_bound(unit, f, 2.0, 0.5);
    EXPECT_TRUE(rep.ok());

    const auto one = space({1.0}, {1.0}, 2.0);
    const SimpleFunction half(one.space(), {0.5});
    EXPECT_TRUE(verify_single_chunk_bound(one, half, 1.0, 1.0).ok());
    EXPECT_NEAR(std::fabs(modular(one, half) - std::pow(0.5, 2.0)), 0.25, 1e-15);
    EXPECT_NEAR(1.0 / 1.0 * std::log(2.0) * 0.5, 0.34657359, 1e-8);

    EXPECT_THROW(verify_single_chunk_bound(unit, f, 2.1, 0.5), ContractError);
    EXPECT_THROW(verify_single_chunk_bound(unit, SimpleFunction(unit.space(), {3.0, 3.0}), 2.0, 0.5), ContractError);
}

TEST(SingleChunkBound, ConstantExponentGrid) {
    for (double s : {1.0, 1.5, 2.5})
        for (double eps : {0.01, 0.3, 1.0}) {
            const auto N = space({1.0}, {s}, s + eps);
            for (int i = 1; i <= 1000; ++i) {
                const double a = i / 1000.0;
                // A single atom of weight 1 with value a has norm a.
                const SimpleFunction f(N.space(), {a});
                EXPECT_TRUE(verify_single_chunk_bound(N, f, s, eps).ok()) << s << ' ' << eps << ' ' << a;
            }
        }
}

TEST(SingleChunkBound, RandomInstances) {
    Rng rng(55);
    for (int trial = 0; trial < 10000; ++trial) {
        const double s = rng.uniform(1.0, 3.0);
        const double eps = rng.uniform(1e-3, 1.0);
        const auto N = random_nakano(rng, 1 + rng.index(0, 8), s, s + eps, s + eps);
        const auto f = random_unit_ball(rng, N);
        const auto rep = verify_single_chunk_bound(N, f, s, eps);
        ASSERT_TRUE(rep.ok()) << rep.worst_margin;
    }
}

TEST(EntropySumBound, Examples) {
    std::vector<double> unit(64, 0.0);
    unit[0] = 1.0;
    for (std::size_t n : {1, 7, 100}) {
        const auto rep = verify_entropy_sum_bound(unit, n);
        EXPECT_TRUE(rep.ok());
        EXPECT_DOUBLE_EQ(rep.worst_margin, chunk_error_bound(n));
    }
    std::vector<double> geometric(200);
    double lhs = 0.0;
    for (std::size_t k = 0; k < geometric.size(); ++k) {
        geometric[k] = std::ldexp(1.0, -static_cast<int>(k) - 1);
        lhs += geometric[k] * std::fabs(std::log(geometric[k])) / static_cast<double>(k + 1);
    }
    const auto rep = verify_entropy_sum_bound(geometric, 1);
    EXPECT_TRUE(rep.ok());
    EXPECT_NEAR(rep.worst_margin, chunk_error_bound(1) - lhs, 1e-12);
    EXPECT_THROW(verify_entropy_sum_bound(std::vector<double>{0.7, 0.7}, 1), ContractError);
    EXPECT_THROW(verify_entropy_sum_bound(std::vector<double>{-0.1}, 1), ContractError);
}

TEST(EntropySumBound, RandomSimplexSequences) {
    Rng rng(56);
    for (std::size_t n : {1, 4, 16}) {
        for (int trial = 0; trial < 10000; ++trial) {
            std::vector<double> a(64);
            double total = 0.0;
            for (auto& v : a) {
                v = -std::log1p(-rng.uniform());
                total += v;
            }
            const double mass = rng.uniform();
            for (auto& v : a)
                v *= mass / total;
            ASSERT_TRUE(verify_entropy_sum_bound(a, n).ok());
        }
    }
}

TEST(SchemeCrossCheck, BothApproximationsConverge) {
    Rng rng(57);
    for (int trial = 0; trial < 50; ++trial) {
        const auto N = random_nakano(rng, 20, 1.0, 3.0, 3.0);
        const auto f = random_unit_ball(rng, N);
        // Scheme one approximates Theta(1 * f) through the fit for m = 2 applied
        // to f / 2, which lies in the unit ball.
        const double theta = modular(N, f);
        double prev_fit = std::numeric_limits<double>::infinity();
        for (double eps : {1e-2, 1e-4, 1e-6}) {
            const auto fit = fit_dyadic(2, 3.0, eps);
            const double err = std::fabs(theta_scaled(N, 0.5 * f, fit) - theta);
            EXPECT_LE(err, eps);
            EXPECT_LE(err, prev_fit + 1e-15);
            prev_fit = err;
        }
        EXPECT_LE(std::fabs(chunked_estimate(chunk(N, f, 4096)) - theta), chunk_error_bound(4096));
    }
}
