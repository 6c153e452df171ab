#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "thermoplate/errors.hpp"
#include "thermoplate/multiplier.hpp"
#include "thermoplate/symbol.hpp"

using namespace thermoplate;

namespace {

double theta_at(double fraction) { return fraction * characteristic_roots().theta0; }

SectorSample small_sample(double lambda0, double theta, int n) {
    SectorSample s = SectorSample::defaults(lambda0, theta, n);
    s.lambda_moduli = log_spaced(1e-2, 1e2, 7);
    s.xi_moduli = log_spaced(1e-2, 1e2, 7);
    return s;
}

}  // namespace

TEST(Sample, Defaults) {
    const SectorSample s = SectorSample::defaults(1.0, theta_at(0.95), 2);
    EXPECT_EQ(s.lambda_moduli.size(), 32u);
    EXPECT_EQ(s.xi_moduli.size(), 32u);
    EXPECT_DOUBLE_EQ(s.xi_moduli.front(), 1e-3);
    EXPECT_NEAR(s.xi_moduli.back(), 1e3, 1e-9);
    EXPECT_EQ(s.arg_fractions.size(), 5u);
    EXPECT_EQ(s.directions.size(), 3u);
    EXPECT_EQ(s.dimension(), 2);
    EXPECT_NO_THROW(s.validate());
    SectorSample bad = s;
    bad.arg_fractions.push_back(1.0);
    EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(MultiIndices, CountsMatchBinomial) {
    // #{|alpha| <= k} in N variables = C(N+k, k)
    EXPECT_EQ(multi_indices(2, 3).size(), 10u);
    EXPECT_EQ(multi_indices(3, 4).size(), 35u);
    EXPECT_EQ(multi_indices(1, 0).size(), 1u);
    const auto idx = multi_indices(2, 1);
    EXPECT_EQ(idx[0], (std::vector<int>{0, 0}));
    EXPECT_EQ(idx[1], (std::vector<int>{1, 0}));
    EXPECT_EQ(idx[2], (std::vector<int>{0, 1}));
}

TEST(FiniteDifference, MatchesAnalyticDerivatives) {
    // m = |xi|^4 in 2D: d/dxi1 = 4 xi1 s, d2/dxi1 dxi2 = 8 xi1 xi2, d3/dxi1^3 = 24 xi1
    const Symbol m = [](std::span<const double> xi, Complex) {
        const double s = xi[0] * xi[0] + xi[1] * xi[1];
        return Complex(s * s);
    };
    const std::vector<double> xi{0.7, -1.3};
    const double s = 0.49 + 1.69;
    const std::vector<int> a1{1, 0}, a11{1, 1}, a3{3, 0};
    EXPECT_NEAR(finite_difference_derivative(m, xi, 1.0, a1).real(), 4 * 0.7 * s, 1e-8);
    EXPECT_NEAR(finite_difference_derivative(m, xi, 1.0, a11).real(), 8 * 0.7 * -1.3, 1e-5);
    EXPECT_NEAR(finite_difference_derivative(m, xi, 1.0, a3).real(), 24 * 0.7, 5e-3 * 24 * 0.7);
}

TEST(FiniteDifference, FirstDerivativesAccurateAwayFromOrigin) {
    // m = (1 + |xi|^2)^(1/2): d/dxi_k = xi_k / m
    const Symbol m = [](std::span<const double> xi, Complex) { return Complex(std::sqrt(1.0 + squared_norm(xi))); };
    for (double r : {1e-2, 0.3, 1.0, 50.0}) {
        const std::vector<double> xi{0.6 * r, -0.8 * r};
        const double mv = std::sqrt(1.0 + r * r);
        for (int k = 0; k < 2; ++k) {
            std::vector<int> a{0, 0};
            a[k] = 1;
            const double exact = xi[k] / mv;
            EXPECT_NEAR(finite_difference_derivative(m, xi, 1.0, a).real(), exact, 1e-6 * std::abs(exact)) << r;
        }
    }
}

TEST(OrderScan, LambdaHasZeroDerivatives) {
    const SectorSample s = small_sample(0.0, 0.9 * std::numbers::pi, 2);
    const auto rep = multiplier_order_scan("lambda", [](std::span<const double>, Complex l) { return l; }, 2.0, s, 3);
    EXPECT_TRUE(rep.pass);
    for (const auto& r : rep.records) {
        int total = 0;
        for (int a : r.alpha) total += a;
        if (total >= 1) EXPECT_EQ(r.constant, 0.0);
        else EXPECT_LE(r.constant, 1.0);
    }
}

TEST(OrderScan, TrivialBoundsOnExampleSymbols) {
    const SectorSample s = small_sample(1.0, theta_at(0.9), 2);
    const NamedSymbol xi2 = find_example_symbol("xi^2");
    const auto r2 = multiplier_order_scan(xi2.id, xi2.fn, xi2.order, s, 0);
    EXPECT_LE(r2.records[0].constant, 1.0);
    const NamedSymbol frac = find_example_symbol("xi/(1+xi^2)^(1/2)");
    const auto rf = multiplier_order_scan(frac.id, frac.fn, frac.order, s, 0);
    EXPECT_LE(rf.records[0].constant, 1.0);
    EXPECT_THROW(find_example_symbol("nope"), InvalidArgument);
}

TEST(OrderScan, NonFiniteSymbolIsReported) {
    const SectorSample s = small_sample(1.0, theta_at(0.9), 2);
    const Symbol bad = [](std::span<const double> xi, Complex) { return Complex(1.0 / (xi[0] - xi[0])); };
    EXPECT_THROW(multiplier_order_scan("bad", bad, 0.0, s, 1), EvaluationFailure);
    EXPECT_THROW(multiplier_order_scan("x", find_example_symbol("one").fn, 2.0, s, 5), InvalidArgument);
}

TEST(ExampleSuite, AllPositiveCasesPassOnDefaultSample) {
    SectorSample s = SectorSample::defaults(1.0, theta_at(0.95), 2);
    s.lambda_moduli = log_spaced(1e-3, 1e3, 12);
    s.xi_moduli = log_spaced(1e-3, 1e3, 12);
    for (const auto& r : example_suite(s, 2)) EXPECT_TRUE(r.pass) << r.symbol_id << " " << r.max_constant();
}

TEST(ExampleSuite, ConstantFailsNearOrigin) {
    SectorSample s = SectorSample::defaults(0.0, theta_at(0.95), 2);
    s.lambda_moduli = {1e-12, 1e-6, 1.0};
    s.xi_moduli = {1e-6, 1e-3, 1.0};
    const auto r = multiplier_order_scan("one", find_example_symbol("one").fn, 2.0, s, 0);
    // 1 / (1e-6 + 1e-6)^2
    EXPECT_NEAR(r.records[0].constant, 2.5e11, 1e3);
    EXPECT_FALSE(r.pass);
}

TEST(Lemma24, EntryMatchesScaledResolvent) {
    const std::vector<double> xi{0.6, 0.8};
    const Complex lambda(2.0, 1.0);
    const auto m = scaled_resolvent_symbol(1, 1.0, lambda);
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) EXPECT_EQ(lemma24_entry(1, k, l)(xi, lambda), m(k, l));
    EXPECT_THROW(lemma24_entry(0, 3, 0), InvalidArgument);
}

TEST(Lemma24, SmallScanPassesAndRejectsBadSectors) {
    const SectorSample s = small_sample(1.0, theta_at(0.95), 2);
    for (int j : {0, 2}) {
        const auto reps = lemma24_matrix_scan(j, s, 2);
        ASSERT_EQ(reps.size(), 9u);
        for (const auto& r : reps) EXPECT_TRUE(r.pass) << r.symbol_id;
        EXPECT_EQ(reps[4].symbol_id, "M" + std::to_string(j) + "_22");
    }
    EXPECT_THROW(lemma24_matrix_scan(0, small_sample(0.0, theta_at(0.9), 2), 1), InvalidArgument);
    EXPECT_THROW(lemma24_matrix_scan(0, small_sample(1.0, theta_at(1.01), 2), 1), InvalidArgument);
}

TEST(Witness, ClosedFormValues) {
    EXPECT_NEAR(nonsectoriality_witness(1.0), 0.4, 0.4e-12);
    EXPECT_NEAR(nonsectoriality_witness(10.0), 20.2, 20.2e-12);
    EXPECT_NEAR(nonsectoriality_witness(100.0), 2000.2, 2000.2e-12);
    double prev = 0.0;
    for (double k = 1.0; k < 1e4; k *= 3.0) {
        const double w = nonsectoriality_witness(k);
        EXPECT_GT(w, prev);
        prev = w;
    }
    EXPECT_THROW(nonsectoriality_witness(-1.0), InvalidArgument);
    EXPECT_THROW(nonsectoriality_witness(0.0), InvalidArgument);
}

TEST(OperatorNormProbe, Examples) {
    std::vector<std::vector<double>> grid;
    for (double x = -5.0; x <= 5.0; x += 0.25) grid.push_back({x, 0.5 * x});
    EXPECT_DOUBLE_EQ(operator_norm_probe([](std::span<const double>, Complex) { return Complex(1.0); }, 1.0, grid), 1.0);
    const Symbol ratio = [](std::span<const double> xi, Complex l) { return l / (l + squared_norm(xi)); };
    EXPECT_LE(operator_norm_probe(ratio, 1.0, grid), 1.0);
    // M^(0)_13 at lambda = k^-2 on a grid containing |xi| = 1/k dominates the witness
    const double k = 10.0;
    const std::vector<std::vector<double>> g2{{0.05}, {0.1}, {0.2}};
    EXPECT_GE(operator_norm_probe(lemma24_entry(0, 0, 2), 1.0 / (k * k), g2), 20.2 * (1 - 1e-12));
    EXPECT_THROW(operator_norm_probe(ratio, 1.0, {}), InvalidArgument);
}
