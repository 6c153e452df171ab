#pragma once

#include <array>
#include <complex>
#include <span>

#include <Eigen/Dense>

namespace thermoplate {

using Complex = std::complex<double>;
using SymbolMatrix = Eigen::Matrix3cd;

// Roots of p(t) = t^3 + t^2 + 2t + 1 written as p(t) = (t+g1)(t+g2)(t+g3),
// with g1 real, g2 = conj(g3), Im g2 > 0. theta0 = arg(-g3).
struct CharacteristicRoots {
    double gamma1 = 0.0;
    Complex gamma2;
    Complex gamma3;
    double theta0 = 0.0;

    std::array<Complex, 3> gammas() const { return {Complex(gamma1, 0.0), gamma2, gamma3}; }
    // max_j |p(-gamma_j)|
    double max_residual() const;
};

// Computes the roots once (companion eigenvalues + one Newton polish per root)
// and returns a shared read-only copy. Throws InvariantViolation when the
// residual check fails.
const CharacteristicRoots& characteristic_roots();

// Same pipeline for an arbitrary monic cubic t^3 + c2 t^2 + c1 t + c0.
// The invariant checks are still made against the reference polynomial, so a
// perturbed input surfaces as an InvariantViolation.
CharacteristicRoots characteristic_roots_of(const std::array<double, 3>& c2_c1_c0);

double plate_polynomial(double t);
Complex plate_polynomial(Complex t);

// Every symbol below depends on xi only through s = |xi|^2; the span overloads
// reduce to s and forward.
double squared_norm(std::span<const double> xi);

SymbolMatrix symbol_matrix(double s);
SymbolMatrix symbol_matrix(std::span<const double> xi);

// det(lambda - A(xi)) as prod_i (lambda/gamma_i + s).
Complex determinant(double s, Complex lambda);
Complex determinant(std::span<const double> xi, Complex lambda);
// det(lambda - A(xi)) as prod_j (lambda + gamma_j s).
Complex determinant_shifted_roots(double s, Complex lambda);

// (lambda - A(xi))^{-1} through the closed-form adjugate. Throws
// SingularParameter when |det| < singular_det_threshold.
SymbolMatrix resolvent_matrix(double s, Complex lambda);
SymbolMatrix resolvent_matrix(std::span<const double> xi, Complex lambda);

inline constexpr double singular_det_threshold = 1e-300;

// S_j(xi) = (1+s)^{j/2} diag(1+s, 1, 1), j in {0,1,2}.
SymbolMatrix scaling_matrix(int j, double s);
SymbolMatrix scaling_matrix(int j, std::span<const double> xi);

// M^{(j)}(xi, lambda) = lambda^{j/2} S_{2-j}(xi) (lambda - A(xi))^{-1} S_0(xi)^{-1},
// principal branch for lambda^{j/2}.
SymbolMatrix scaled_resolvent_symbol(int j, double s, Complex lambda);
SymbolMatrix scaled_resolvent_symbol(int j, std::span<const double> xi, Complex lambda);

// Principal branch power lambda^{j/2}.
Complex half_power(Complex lambda, int j);

// Point (xi, lambda) together with the shifted sector lambda0 + Sigma_theta.
struct SpectralPoint {
    std::span<const double> xi;
    Complex lambda;
    double lambda0 = 0.0;
    double theta = 0.0;

    bool in_sector() const;
};

// lambda - lambda0 != 0 and |arg(lambda - lambda0)| < theta.
bool in_shifted_sector(Complex lambda, double lambda0, double theta);

}  // namespace thermoplate
