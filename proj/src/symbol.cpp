#include "thermoplate/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "thermoplate/errors.hpp"

namespace thermoplate {

namespace {

constexpr double kRootResidualTol = 1e-12;

template <typename T>
T monic_cubic(const std::array<double, 3>& c, T t) {
    return ((t + c[0]) * t + c[1]) * t + c[2];
}

template <typename T>
T monic_cubic_derivative(const std::array<double, 3>& c, T t) {
    return (3.0 * t + 2.0 * c[0]) * t + c[1];
}

void check_roots(const CharacteristicRoots& r) {
    auto fail = [](const std::string& what) {
        throw InvariantViolation("characteristic roots: " + what);
    };
    if (r.max_residual() > kRootResidualTol) fail("residual exceeds 1e-12");
    if (!(r.gamma1 > 0.0 && r.gamma1 < 1.0)) fail("gamma1 outside (0,1)");
    if (!(r.gamma2.imag() > 0.0)) fail("Im gamma2 not positive");
    if (!(r.gamma2.real() > 0.0 && r.gamma2.real() < 0.5)) fail("Re gamma2 outside (0,1/2)");
    const auto g = r.gammas();
    if (std::abs(g[0] * g[1] * g[2] - 1.0) > kRootResidualTol) fail("product of roots != 1");
    if (std::abs(g[0] + g[1] + g[2] - 1.0) > kRootResidualTol) fail("sum of roots != 1");
    const double half_pi = std::numbers::pi / 2;
    if (!(r.theta0 > half_pi && r.theta0 < std::numbers::pi)) fail("theta0 outside (pi/2, pi)");
}

}  // namespace

double plate_polynomial(double t) { return monic_cubic<double>({1.0, 2.0, 1.0}, t); }
Complex plate_polynomial(Complex t) { return monic_cubic<Complex>({1.0, 2.0, 1.0}, t); }

double CharacteristicRoots::max_residual() const {
    double worst = 0.0;
    for (const Complex& g : gammas()) worst = std::max(worst, std::abs(plate_polynomial(-g)));
    return worst;
}

CharacteristicRoots characteristic_roots_of(const std::array<double, 3>& c) {
    Eigen::Matrix3d companion;
    companion << -c[0], -c[1], -c[2],
                 1.0, 0.0, 0.0,
                 0.0, 1.0, 0.0;
    Eigen::EigenSolver<Eigen::Matrix3d> solver(companion, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw InvariantViolation("characteristic roots: companion eigensolver failed");
    }
    std::array<Complex, 3> roots;
    for (int i = 0; i < 3; ++i) {
        Complex t = solver.eigenvalues()(i);
        const Complex d = monic_cubic_derivative<Complex>(c, t);
        if (d != 0.0) t -= monic_cubic<Complex>(c, t) / d;
        roots[i] = t;
    }
    // The real root has the smallest |Im|; of the remaining pair, -gamma2 is the
    // root with negative imaginary part.
    std::sort(roots.begin(), roots.end(),
              [](Complex a, Complex b) { return std::abs(a.imag()) < std::abs(b.imag()); });
    const Complex upper = roots[1].imag() > 0.0 ? roots[1] : roots[2];

    CharacteristicRoots r;
    r.gamma1 = -roots[0].real();
    r.gamma3 = -upper;
    r.gamma2 = std::conj(r.gamma3);
    r.theta0 = std::arg(-r.gamma3);
    check_roots(r);
    return r;
}

const CharacteristicRoots& characteristic_roots() {
    static const CharacteristicRoots roots = characteristic_roots_of({1.0, 2.0, 1.0});
    return roots;
}

double squared_norm(std::span<const double> xi) {
    double s = 0.0;
    for (double x : xi) s += x * x;
    return s;
}

SymbolMatrix symbol_matrix(double s) {
    SymbolMatrix a = SymbolMatrix::Zero();
    a(0, 1) = 1.0;
    a(1, 0) = -s * s;
    a(1, 2) = s;
    a(2, 1) = -s;
    a(2, 2) = -s;
    return a;
}

SymbolMatrix symbol_matrix(std::span<const double> xi) { return symbol_matrix(squared_norm(xi)); }

Complex determinant(double s, Complex lambda) {
    Complex det = 1.0;
    for (const Complex& g : characteristic_roots().gammas()) det *= lambda / g + s;
    return det;
}

Complex determinant(std::span<const double> xi, Complex lambda) {
    return determinant(squared_norm(xi), lambda);
}

Complex determinant_shifted_roots(double s, Complex lambda) {
    Complex det = 1.0;
    for (const Complex& g : characteristic_roots().gammas()) det *= lambda + g * s;
    return det;
}

SymbolMatrix resolvent_matrix(double s, Complex lambda) {
    const Complex det = determinant_shifted_roots(s, lambda);
    if (!(std::abs(det) >= singular_det_threshold)) {
        throw SingularParameter("resolvent: lambda on the spectrum of A(xi) (|xi|^2 = " +
                                std::to_string(s) + ")");
    }
    const Complex ls = lambda + s;
    const double s2 = s * s;
    SymbolMatrix adj;
    adj << lambda * ls + s2, ls, s,
           -ls * s2, lambda * ls, lambda * s,
           s2 * s, -lambda * s, lambda * lambda + s2;
    return adj / det;
}

SymbolMatrix resolvent_matrix(std::span<const double> xi, Complex lambda) {
    return resolvent_matrix(squared_norm(xi), lambda);
}

SymbolMatrix scaling_matrix(int j, double s) {
    if (j < 0 || j > 2) throw InvalidArgument("scaling_matrix: j must be 0, 1 or 2");
    const double w = 1.0 + s;
    const double f = std::pow(w, 0.5 * j);
    SymbolMatrix m = SymbolMatrix::Zero();
    m(0, 0) = f * w;
    m(1, 1) = f;
    m(2, 2) = f;
    return m;
}

SymbolMatrix scaling_matrix(int j, std::span<const double> xi) {
    return scaling_matrix(j, squared_norm(xi));
}

Complex half_power(Complex lambda, int j) {
    switch (j) {
        case 0: return 1.0;
        case 1: return std::sqrt(lambda);
        case 2: return lambda;
        default: return std::pow(std::sqrt(lambda), j);
    }
}

SymbolMatrix scaled_resolvent_symbol(int j, double s, Complex lambda) {
    if (j < 0 || j > 2) throw InvalidArgument("scaled_resolvent_symbol: j must be 0, 1 or 2");
    const SymbolMatrix r = resolvent_matrix(s, lambda);
    const SymbolMatrix left = scaling_matrix(2 - j, s);
    // S_0^{-1} = diag(1/(1+s), 1, 1)
    SymbolMatrix m = left * r;
    m.col(0) /= 1.0 + s;
    return half_power(lambda, j) * m;
}

SymbolMatrix scaled_resolvent_symbol(int j, std::span<const double> xi, Complex lambda) {
    return scaled_resolvent_symbol(j, squared_norm(xi), lambda);
}

bool in_shifted_sector(Complex lambda, double lambda0, double theta) {
    const Complex z = lambda - lambda0;
    return z != 0.0 && std::abs(std::arg(z)) < theta;
}

bool SpectralPoint::in_sector() const { return in_shifted_sector(lambda, lambda0, theta); }

}  // namespace thermoplate
