#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "nakano/perturbation.hpp"
#include "oracles.hpp"

using namespace nakano;

namespace {

NakanoSpace space(std::vector<double> w, std::vector<double> p, std::optional<double> r = std::nullopt) {
    return NakanoSpace(AtomicMeasureSpace::with_weights(std::move(w)), std::move(p), r);
}

NakanoSpace with_exponent(const NakanoSpace& N, std::vector<double> q) { return NakanoSpace(N.space(), q, N.r()); }

} // namespace

TEST(Phi, EndpointsAndOrdering) {
    EXPECT_EQ(phi(1.0, 2.0), 1.0);
    for (double g : {0.5, 0.7, 0.9, 0.999})
        EXPECT_NEAR(phi(g, 1.0), 1.0, 1e-15);
    const double r = 3.0;
    for (int i = 0; i <= 200; ++i) {
        const double u = std::pow(10.0, -12.0 * i / 200.0) * 0.5; // 1 - gamma from 1/2 down to 5e-13
        const double lower = phi_from_gap(u, r);
        for (double s = 1.0; s <= r; s += 0.125) {
            const double v = phi_from_gap(u, s);
            EXPECT_LE(v, 1.0 + 1e-15);
            EXPECT_GE(v, lower - 1e-15);
        }
    }
}

TEST(Phi, AsymptoticBranchIsContinuous) {
    for (double s : {1.1, 2.0, 3.0}) {
        const double below = phi_from_gap(std::nextafter(1e-8, 0.0), s);
        const double above = phi_from_gap(1e-8, s);
        EXPECT_NEAR(below, above, 1e-7);
    }
}

TEST(Constants, ExactAtOne) {
    const auto c = compute_constants(1.0);
    EXPECT_EQ(c.A_lower, 1.0);
    EXPECT_EQ(c.A_upper, 1.0);
    EXPECT_EQ(c.B_lower, 1.0);
    EXPECT_EQ(c.B_upper, 1.0);
    EXPECT_EQ(c.C_lower, 0.0);
    EXPECT_EQ(c.C_upper, 0.0);
    EXPECT_EQ(c.slack, 0.0);
}

TEST(Constants, Errors) {
    EXPECT_THROW(compute_constants(0.9), DomainError);
    EXPECT_THROW(compute_constants(2.5, 1e-5, 2.0), DomainError);
    EXPECT_THROW(compute_constants(1.5, 0.0), DomainError);
    EXPECT_THROW(compute_constants(std::nan("")), DomainError);
}

TEST(Constants, AtTwoContainOracles) {
    const auto& c = cached_constants(2.0);
    EXPECT_LE(c.A_lower, oracle::A2);
    EXPECT_GE(c.A_upper, oracle::A2 - 1e-15);
    EXPECT_NEAR(c.A_upper, oracle::A2, 1e-12);
    EXPECT_LE(c.B_lower, oracle::B2);
    EXPECT_GE(c.B_upper, oracle::B2);
    EXPECT_NEAR(c.B_minus_lower, oracle::B2, 1e-12);
    // B+ peaks at gamma = 1, t = 1/2: 2 / 2^{1/2}.
    EXPECT_NEAR(c.B_plus_lower, std::sqrt(2.0), 1e-12);
}

TEST(Constants, Invariants) {
    for (double s : {1.001, 1.05, 1.2, 1.5, 2.0}) {
        const auto& c = cached_constants(s);
        EXPECT_LE(c.A_lower, c.A_upper);
        EXPECT_LE(c.A_upper, 1.0 / s);
        EXPECT_GE(c.B_lower, 1.0);
        EXPECT_LE(c.B_lower, c.B_upper);
        EXPECT_GE(c.C_lower, 0.0);
        EXPECT_LE(c.C_lower, c.C_upper);
        EXPECT_EQ(c.B_upper, std::max(c.B_minus_upper, c.B_plus_upper));
        EXPECT_EQ(c.C_upper, std::max(c.C1_upper, c.C2_upper));
        // (1 - gamma)^{s A} >= 1 - gamma^s on [1/2, 1).
        for (int i = 0; i < 2000; ++i) {
            const double g = 0.5 + 0.5 * i / 2000.0;
            EXPECT_GE(std::pow(1.0 - g, s * c.A_lower), 1.0 - std::pow(g, s) - 1e-15) << "s=" << s << " g=" << g;
        }
    }
}

TEST(Constants, ConvergeTowardOne) {
    double prev_a = 0.0, prev_b = std::numeric_limits<double>::infinity(), prev_c = prev_b;
    for (int k = 1; k <= 10; ++k) {
        const auto& c = cached_constants(1.0 + std::ldexp(1.0, -k));
        EXPECT_GT(c.A_lower, prev_a) << k;
        EXPECT_LT(c.B_upper, prev_b) << k;
        EXPECT_LT(c.C_upper, prev_c) << k;
        prev_a = c.A_lower;
        prev_b = c.B_upper;
        prev_c = c.C_upper;
    }
    EXPECT_GT(prev_a, 0.99);
    EXPECT_LT(prev_b, 1.01);
    EXPECT_LT(prev_c, 0.03);
}

TEST(Eta, IdentityAtOne) {
    const auto c = compute_constants(1.0);
    for (double x = 0.0; x <= 2.0; x += 0.125) {
        EXPECT_DOUBLE_EQ(eta_hat(c, x), x);
        EXPECT_DOUBLE_EQ(eta(c, x), x);
    }
}

TEST(Eta, ValueAtOneAndDomain) {
    for (double s : {1.0, 1.1, 1.5, 2.0}) {
        const auto& c = cached_constants(s);
        EXPECT_EQ(eta(c, 1.0), 1.0);
        EXPECT_THROW(eta(c, -0.1), DomainError);
        EXPECT_THROW(eta_hat(c, 2.1), DomainError);
        EXPECT_THROW(eta(c, std::nan("")), DomainError);
    }
}

TEST(Eta, HatApproachesIdentity) {
    double prev = std::numeric_limits<double>::infinity();
    for (double s : {1.1, 1.01, 1.001}) {
        const auto& c = cached_constants(s);
        double sup = 0.0;
        for (int i = 0; i <= 20000; ++i) {
            const double x = 2.0 * i / 20000.0;
            sup = std::max(sup, std::fabs(eta_hat(c, x) - x));
        }
        EXPECT_LT(sup, prev);
        prev = sup;
    }
    EXPECT_LT(prev, 0.02);
}

TEST(ExponentMap, Examples) {
    const auto Np = space({1.0}, {2.0}, 4.0);
    const auto Nq = with_exponent(Np, {4.0});
    EXPECT_DOUBLE_EQ(exponent_map(Np, Nq, SimpleFunction(Np.space(), {0.25}))[0], 0.5);
    EXPECT_DOUBLE_EQ(exponent_map(Np, Nq, SimpleFunction(Np.space(), {-0.25}))[0], -0.5);
    const SimpleFunction f(Np.space(), {0.37});
    EXPECT_EQ(exponent_map(Np, Np, f), f);
    const auto other = space({2.0}, {4.0}, 4.0);
    EXPECT_THROW(exponent_map(Np, other, f), DomainError);
}

TEST(ExponentMap, RoundTripModularAndDensityChange) {
    Rng rng(41);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto Np = random_nakano(rng, 1 + rng.index(0, 10), 1.0, 3.0, 3.0);
        std::vector<double> q(Np.size());
        for (auto& v : q)
            v = rng.uniform(1.0, 3.0);
        const auto Nq = with_exponent(Np, q);
        const auto f = random_function(rng, Np.space(), std::exp(rng.uniform(-3.0, 3.0)));
        const auto Ef = exponent_map(Np, Nq, f);
        const auto back = exponent_map(Nq, Np, Ef);
        for (std::size_t i = 0; i < f.size(); ++i)
            EXPECT_NEAR(back[i], f[i], 1e-12 * std::max(1.0, std::fabs(f[i])));
        const double tp = modular(Np, f), tq = modular(Nq, Ef);
        EXPECT_NEAR(tp, tq, 1e-13 * std::max(1.0, tp));

        std::vector<double> w(Np.size());
        for (auto& v : w)
            v = rng.uniform(0.05, 3.0);
        const AtomicMeasureSpace nu(Np.atoms(), w);
        const auto lhs = density_change(Nq, nu, Ef);
        const auto rhs = exponent_map(with_measure(Np, nu), with_measure(Nq, nu), density_change(Np, nu, f));
        for (std::size_t i = 0; i < f.size(); ++i)
            EXPECT_NEAR(lhs[i], rhs[i], 1e-12 * std::max(1.0, std::fabs(lhs[i])));
    }
}

TEST(DeltaModulus, Examples) {
    const auto c1 = compute_constants(1.0);
    for (double eps : {0.01, 0.5, 1.0, 3.0})
        EXPECT_DOUBLE_EQ(delta_modulus(c1, eps), std::min(eps, 1.0));
    for (double eps : {1e-6, 0.1, 10.0, 1e6})
        EXPECT_LE(delta_modulus(2.0, eps), 1.0);
    EXPECT_THROW(delta_modulus(2.0, 0.0), DomainError);
    EXPECT_THROW(delta_modulus(2.0, -1.0), DomainError);
    EXPECT_GT(delta_modulus(2.0, 0.1), 0.0);
}

TEST(DeltaModulus, GuaranteeOnRandomPairs) {
    Rng rng(42);
    const auto& c = cached_constants(2.0);
    const auto N = random_nakano(rng, 12, 1.0, 2.0, 2.0);
    const auto Q = quantize_exponent(N, 2.0);
    const auto rep = verify_delta_modulus(N, Q, c, 0.1, 10000, 7);
    EXPECT_TRUE(rep.ok()) << rep.worst_margin;
    EXPECT_GT(rep.checked, 9000u);
}

TEST(Quantize, Examples) {
    const auto N = space({1, 1, 1}, {1.0, 1.5, 2.0}, 2.0);
    const auto Q = quantize_exponent(N, 1.1);
    std::set<double> distinct;
    for (std::size_t i = 0; i < 3; ++i) {
        const double ratio = Q.exponent(i) / N.exponent(i);
        EXPECT_GE(ratio, 1.0);
        EXPECT_LE(ratio, 1.1 * (1.0 + 1e-15));
        distinct.insert(Q.exponent(i));
    }
    EXPECT_LE(distinct.size(), 3u);

    const auto C = space({1, 2}, {1.7, 1.7}, 3.0);
    const auto QC = quantize_exponent(C, 1.25);
    EXPECT_EQ(QC.exponent(0), QC.exponent(1));
    EXPECT_GE(QC.exponent(0), 1.7);
    EXPECT_LE(QC.exponent(0), 1.25 * 1.7);

    const auto R = space({1, 1, 1}, {1.0, 1.4, 2.0}, 2.0);
    const auto QR = quantize_exponent(R, 2.0);
    EXPECT_EQ(essential_range(QR), (std::vector<double>{2.0}));

    EXPECT_THROW(quantize_exponent(N, 1.0), DomainError);
    EXPECT_THROW(quantize_exponent(N, 0.5), DomainError);
}

TEST(Quantize, RatiosOnRandomSpaces) {
    Rng rng(43);
    for (int trial = 0; trial < 2000; ++trial) {
        const double r = rng.uniform(1.0, 6.0);
        const auto N = random_nakano(rng, 1 + rng.index(0, 30), 1.0, r, r);
        const double s = 1.0 + std::exp(rng.uniform(-8.0, 1.0));
        const auto Q = quantize_exponent(N, s);
        EXPECT_TRUE(exponent_ratio_within(N, Q, s));
        for (std::size_t i = 0; i < N.size(); ++i) {
            EXPECT_GE(Q.exponent(i), N.exponent(i));
            EXPECT_LE(Q.exponent(i), r);
        }
        const auto range = essential_range(Q);
        const double bound = std::ceil(std::log(r) / std::log(s)) + 1.0;
        EXPECT_LE(static_cast<double>(range.size()), bound);
    }
}

TEST(SignedPowerBound, TightAndTrivialPoints) {
    const auto c = compute_constants(1.0);
    const double lhs = std::fabs(signed_power(1.0, 1.0) - signed_power(0.0, 1.0));
    const double rhs = std::max(std::pow(1.0, c.A_lower), c.B_upper * 1.0);
    EXPECT_EQ(lhs, rhs);
    EXPECT_TRUE(verify_signed_power_bound(c, {21, 0, 1}).ok());
    EXPECT_EQ(std::fabs(signed_power(0.3, 1.7) - signed_power(0.3, 1.7)), 0.0);
}

TEST(SignedPowerBound, MillionPointGridAtTwo) {
    const auto rep = verify_signed_power_bound(cached_constants(2.0), {100, 10000, 3});
    EXPECT_TRUE(rep.ok()) << rep.worst_margin;
    EXPECT_EQ(rep.checked, 1000000u + 10000u);
}

TEST(ConcavityBound, Grid) {
    const auto rep = verify_concavity_bound({1000, 10000, 4});
    EXPECT_TRUE(rep.ok()) << rep.worst_margin;
    EXPECT_EQ(rep.checked, 1010000u);
}

TEST(ExponentMapVerifier, EqualFunctionsAndIdentity) {
    Rng rng(44);
    const auto N = random_nakano(rng, 8, 1.0, 2.5, 2.5);
    const auto& c = cached_constants(1.2);
    const auto rep = verify_exponent_map(N, N, c, 200, 5);
    EXPECT_TRUE(rep.ok());
    EXPECT_LE(rep.distance.worst_margin, c.C_upper);
    EXPECT_GE(rep.distance.worst_margin, c.C_upper - 1e-12);
}

TEST(ExponentMapVerifier, RandomPairsAtOnePointTwo) {
    Rng rng(45);
    const auto N = random_nakano(rng, 12, 1.0, 3.0, 3.6);
    const auto Q = quantize_exponent(N, 1.2);
    const auto rep = verify_exponent_map(N, Q, cached_constants(1.2), 10000, 6);
    EXPECT_TRUE(rep.forward.ok()) << rep.forward.worst_margin;
    EXPECT_TRUE(rep.backward.ok()) << rep.backward.worst_margin;
    EXPECT_TRUE(rep.algebra.ok());
    EXPECT_TRUE(rep.distance.ok()) << rep.distance.worst_margin;
    EXPECT_TRUE(rep.midpoint.ok()) << rep.midpoint.worst_margin;
    const auto mod = verify_exponent_map_modulus(N, Q, cached_constants(1.2), 100, 6);
    EXPECT_EQ(mod.distance.checked, 0u);
    EXPECT_GT(mod.forward.checked, 0u);
    const auto def = verify_exponent_map_defects(N, Q, cached_constants(1.2), 100, 6);
    EXPECT_EQ(def.forward.checked, 0u);
    EXPECT_GT(def.midpoint.checked, 0u);
}

TEST(ExponentMapVerifier, RatioOutsideRangeIsContractError) {
    const auto N = space({1, 1}, {1.0, 2.0}, 3.0);
    const auto Q = with_exponent(N, {1.0, 3.0});
    EXPECT_THROW(verify_exponent_map(N, Q, cached_constants(1.2), 10, 1), ContractError);
}

TEST(EpsilonPerturbation, IdentityPasses) {
    Rng rng(46);
    const auto N = random_nakano(rng, 10, 1.0, 3.0, 3.0);
    const auto probes = random_probes(N, 200, 8);
    const auto id = [](const SimpleFunction& f) { return f; };
    EXPECT_TRUE(is_epsilon_perturbation(N, N, id, probes, 0.0).passed);
    EXPECT_TRUE(is_epsilon_perturbation(N, N, id, probes, 0.5).passed);
}

TEST(EpsilonPerturbation, ScalingByTwoFails) {
    Rng rng(47);
    const auto N = random_nakano(rng, 10, 1.0, 3.0, 3.0);
    const auto probes = random_probes(N, 200, 9);
    const auto twice = [](const SimpleFunction& f) { return 2.0 * f; };
    const auto res = is_epsilon_perturbation(N, N, twice, probes, 0.05);
    EXPECT_FALSE(res.passed);
    bool norm_failed = false;
    for (const auto& c : res.conditions)
        if (c.name == "norm")
            norm_failed = !c.ok();
    EXPECT_TRUE(norm_failed);
}

TEST(EpsilonPerturbation, QuantizedMapAtBudget) {
    Rng rng(48);
    for (double eps : {1.0, 0.1, 0.01}) {
        const auto N = random_nakano(rng, 12, 1.0, 3.0, 3.0);
        const auto b = perturbation_budget(eps, N.r());
        ASSERT_TRUE(b.certified);
        const auto Q = quantize_exponent(N, b.s);
        const auto probes = random_probes(N, 500, 10);
        const auto res = is_epsilon_perturbation(
            N, Q, [&](const SimpleFunction& f) { return exponent_map(N, Q, f); }, probes, eps);
        for (const auto& c : res.conditions)
            EXPECT_TRUE(c.ok()) << "eps=" << eps << " " << c.name << " " << c.worst_margin;
    }
}

TEST(Budget, MonotoneInEps) {
    const auto b1 = perturbation_budget(1.0);
    const auto b2 = perturbation_budget(0.1);
    const auto b3 = perturbation_budget(0.01);
    EXPECT_TRUE(b1.certified && b2.certified && b3.certified);
    EXPECT_GT(b1.s, b2.s);
    EXPECT_GT(b2.s, b3.s);
    EXPECT_GT(b3.s, 1.0);
    EXPECT_LT(b3.s - 1.0, 1e-3);
}

TEST(Budget, LargeEpsGivesLargestGridValue) {
    EXPECT_EQ(perturbation_budget(1000.0).s, 1.5);
    EXPECT_EQ(perturbation_budget(1000.0, 1.3).s, 1.25);
    EXPECT_THROW(perturbation_budget(0.0), DomainError);
}

TEST(Budget, SelfConsistentWithDefects) {
    for (double eps : {1.0, 0.1}) {
        const auto b = perturbation_budget(eps);
        EXPECT_LE(b.constants.C_upper, eps);
        Rng rng(49);
        const auto N = random_nakano(rng, 10, 1.0, 3.0, 3.0);
        const auto Q = quantize_exponent(N, b.s);
        const auto rep = verify_exponent_map_defects(N, Q, b.constants, 500, 11);
        EXPECT_TRUE(rep.defects_ok());
        EXPECT_GE(rep.distance.worst_margin, 0.0);
        EXPECT_LE(b.constants.C_upper - rep.distance.worst_margin, eps);
    }
}
