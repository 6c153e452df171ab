#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "thermoplate/errors.hpp"
#include "thermoplate/symbol.hpp"

using namespace thermoplate;

namespace {

// Real root of q(g) = g^3 - g^2 + 2g - 1 (so that p(-g) = 0) by bisection.
double gamma1_by_bisection() {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double q = ((mid - 1.0) * mid + 2.0) * mid - 1.0;
        (q < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Eigen::Matrix3cd plate_symbol(double s) {
    Eigen::Matrix3cd a = Eigen::Matrix3cd::Zero();
    a(0, 1) = 1.0;
    a(1, 0) = -s * s;
    a(1, 2) = s;
    a(2, 1) = -s;
    a(2, 2) = -s;
    return a;
}

Eigen::Matrix3cd direct_resolvent(double s, Complex lambda) {
    return (lambda * Eigen::Matrix3cd::Identity() - plate_symbol(s)).inverse();
}

}  // namespace

TEST(Roots, MatchBisectionAndVietaOracle) {
    const auto& r = characteristic_roots();
    const double g1 = gamma1_by_bisection();
    EXPECT_NEAR(r.gamma1, g1, 1e-14);
    // gamma2 + gamma3 = 1 - gamma1, gamma2 gamma3 = 1 / gamma1
    const double sum = 1.0 - g1, prod = 1.0 / g1;
    const Complex g2(0.5 * sum, 0.5 * std::sqrt(4.0 * prod - sum * sum));
    EXPECT_NEAR(std::abs(r.gamma2 - g2), 0.0, 1e-14);
    EXPECT_EQ(r.gamma3, std::conj(r.gamma2));
    EXPECT_NEAR(r.theta0, std::arg(-std::conj(g2)), 1e-14);
}

TEST(Roots, FrozenValues) {
    const auto& r = characteristic_roots();
    EXPECT_NEAR(r.gamma1, 0.569840290998053, 1e-13);
    EXPECT_NEAR(r.gamma2.real(), 0.215079854500973, 1e-13);
    EXPECT_NEAR(r.gamma2.imag(), 1.307141278682045, 1e-13);
    EXPECT_NEAR(r.theta0, 1.733877210986840, 1e-13);
}

TEST(Roots, StructuralInvariants) {
    const auto& r = characteristic_roots();
    EXPECT_GT(r.gamma1, 0.0);
    EXPECT_LT(r.gamma1, 1.0);
    EXPECT_GT(r.gamma2.real(), 0.0);
    EXPECT_LT(r.gamma2.real(), 0.5);
    EXPECT_GT(r.gamma2.imag(), 0.0);
    EXPECT_GT(r.theta0, std::numbers::pi / 2);
    EXPECT_LT(r.theta0, std::numbers::pi);
    EXPECT_LE(r.max_residual(), 1e-12);
    const auto g = r.gammas();
    EXPECT_NEAR(std::abs(g[0] + g[1] + g[2] - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(g[0] * g[1] + g[0] * g[2] + g[1] * g[2] - 2.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(g[0] * g[1] * g[2] - 1.0), 0.0, 1e-12);
}

TEST(Roots, PerturbedPolynomialIsRejected) {
    EXPECT_THROW(characteristic_roots_of({1.0, 2.0, 1.0 + 1e-6}), InvariantViolation);
    EXPECT_NO_THROW(characteristic_roots_of({1.0, 2.0, 1.0}));
}

TEST(Polynomial, Values) {
    EXPECT_DOUBLE_EQ(plate_polynomial(0.0), 1.0);
    EXPECT_DOUBLE_EQ(plate_polynomial(1.0), 5.0);
    EXPECT_DOUBLE_EQ(plate_polynomial(-1.0), -1.0);
}

TEST(SymbolMatrix, MatchesPlateSymbol) {
    for (double s : {0.0, 0.3, 1.0, 17.0}) EXPECT_LE((symbol_matrix(s) - plate_symbol(s)).norm(), 1e-15);
    const std::vector<double> xi{3.0, 4.0};
    EXPECT_LE((symbol_matrix(xi) - plate_symbol(25.0)).norm(), 1e-12);
}

TEST(Determinant, FrozenValueAtUnit) {
    // det(1 - A(1)) = p(1) = 5
    EXPECT_NEAR(std::abs(determinant(1.0, 1.0) - 5.0), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(determinant_shifted_roots(1.0, 1.0) - 5.0), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(determinant(0.0, 1.0) - 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(determinant_shifted_roots(0.0, 1.0) - 1.0), 0.0, 1e-15);
}

TEST(Determinant, AgreesWithDirectEvaluation) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ls(-3.0, 3.0), arg(-0.95 * characteristic_roots().theta0,
                                                               0.95 * characteristic_roots().theta0);
    for (int k = 0; k < 2000; ++k) {
        const double s = std::pow(10.0, ls(rng));
        const Complex lambda = 1.0 + std::pow(10.0, ls(rng)) * std::polar(1.0, arg(rng));
        const Complex direct = (lambda * Eigen::Matrix3cd::Identity() - plate_symbol(s)).determinant();
        EXPECT_LE(std::abs(determinant(s, lambda) - direct), 1e-9 * std::abs(direct));
        EXPECT_LE(std::abs(determinant(s, lambda) - determinant_shifted_roots(s, lambda)),
                  1e-10 * std::abs(direct));
    }
}

TEST(Resolvent, FrozenEntry) {
    // (1 - A(1))^{-1}_{13} = 1/5
    EXPECT_NEAR(std::abs(resolvent_matrix(1.0, 1.0)(0, 2) - 0.2), 0.0, 1e-14);
}

TEST(Resolvent, MatchesDirectInverse) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ls(-3.0, 3.0), arg(-3.0, 3.0);
    for (int k = 0; k < 2000; ++k) {
        const double s = std::pow(10.0, ls(rng));
        const Complex lambda = 1.0 + std::pow(10.0, ls(rng)) * std::polar(1.0, 0.55 * arg(rng));
        const Eigen::Matrix3cd r = resolvent_matrix(s, lambda);
        const Eigen::Matrix3cd e = (lambda * Eigen::Matrix3cd::Identity() - plate_symbol(s)) * r -
                                   Eigen::Matrix3cd::Identity();
        EXPECT_LE(e.cwiseAbs().maxCoeff(), 1e-10);
        using LC = std::complex<long double>;
        const Eigen::Matrix<LC, 3, 3> exact =
            (lambda * Eigen::Matrix3cd::Identity() - plate_symbol(s)).cast<LC>().inverse();
        for (int i = 0; i < 9; ++i) {
            const Complex x(static_cast<double>(exact(i).real()), static_cast<double>(exact(i).imag()));
            if (x != 0.0) EXPECT_LE(std::abs(r(i) - x), 1e-14 * std::abs(x));
        }
    }
}

TEST(Resolvent, SingularAtEigenvalue) {
    const double s = 2.0;
    EXPECT_THROW(resolvent_matrix(s, Complex(-characteristic_roots().gamma1 * s, 0.0)), SingularParameter);
    EXPECT_THROW(resolvent_matrix(0.0, 0.0), SingularParameter);
}

TEST(ScaledResolvent, FrozenEntries) {
    EXPECT_NEAR(std::abs(scaled_resolvent_symbol(0, 1.0, 1.0)(0, 0) - 1.2), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(scaled_resolvent_symbol(0, 1.0, 1.0)(1, 0) - (-0.4)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(scaled_resolvent_symbol(1, 1.0, 1.0)(1, 0) - (-0.2 * std::sqrt(2.0))), 0.0, 1e-14);
    Eigen::Matrix3cd expected;
    expected << 1, 1, 0, 0, 1, 0, 0, 0, 1;
    EXPECT_LE((scaled_resolvent_symbol(2, 0.0, 1.0) - expected).norm(), 1e-15);
}

TEST(ScaledResolvent, MatchesDefinitionWithDirectInverse) {
    for (int j = 0; j <= 2; ++j) {
        for (double s : {0.01, 1.0, 50.0}) {
            const Complex lambda(0.7, 1.9);
            const double w = 1.0 + s;
            Eigen::Matrix3cd sl = Eigen::Matrix3cd::Identity() * std::pow(w, (2.0 - j) / 2.0);
            sl(0, 0) *= w;
            Eigen::Matrix3cd sr_inv = Eigen::Matrix3cd::Identity();
            sr_inv(0, 0) = 1.0 / w;
            const Eigen::Matrix3cd expect = std::pow(std::sqrt(lambda), j) * sl * direct_resolvent(s, lambda) * sr_inv;
            EXPECT_LE((scaled_resolvent_symbol(j, s, lambda) - expect).norm(), 1e-12 * expect.norm());
        }
    }
    EXPECT_THROW(scaled_resolvent_symbol(3, 1.0, 1.0), InvalidArgument);
}

TEST(Sector, Membership) {
    const double th = 0.95 * characteristic_roots().theta0;
    EXPECT_TRUE(in_shifted_sector(2.0, 1.0, th));
    EXPECT_FALSE(in_shifted_sector(1.0, 1.0, th));
    EXPECT_FALSE(in_shifted_sector(Complex(-5.0, 0.0), 1.0, th));
    EXPECT_TRUE(in_shifted_sector(Complex(1.0, 3.0), 1.0, th));
    EXPECT_FALSE(in_shifted_sector(Complex(1.0, 3.0), 1.0, 0.9 * characteristic_roots().theta0));
}
