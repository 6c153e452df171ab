#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thermoplate/symbol.hpp"

namespace thermoplate {

// Periodic grid standing in for R^N: M points per axis (power of two, >= 4),
// period L per axis, mode frequencies xi_k = 2 pi k / L, k in [-M/2, M/2).
struct TorusGrid {
    std::vector<int> points;
    std::vector<double> lengths;

    TorusGrid() = default;
    TorusGrid(std::vector<int> points_per_axis, std::vector<double> period_per_axis);
    // Cube grid: same M and L on every axis.
    static TorusGrid cube(int dimension, int points_per_axis, double period);

    int dimension() const { return static_cast<int>(points.size()); }
    std::size_t size() const;
    void validate() const;

    // Signed wavenumber index of FFT position i along an axis.
    int wavenumber(int axis, int i) const { return i < points[axis] / 2 ? i : i - points[axis]; }
    double frequency(int axis, int i) const;
    // |xi|^2 for every mode, in row-major FFT order.
    std::vector<double> squared_frequencies() const;
    // Distinct |xi|^2 values, ascending.
    std::vector<double> distinct_squared_frequencies() const;
    // Frequency vectors of every mode (row-major FFT order).
    std::vector<std::vector<double>> frequency_vectors() const;

    bool operator==(const TorusGrid&) const = default;
};

// Real (u, v, theta) on a torus grid, row-major, last axis fastest.
template <typename T>
struct BasicStateField {
    TorusGrid grid;
    std::vector<T> u;
    std::vector<T> v;
    std::vector<T> theta;

    BasicStateField() = default;
    explicit BasicStateField(TorusGrid g)
        : grid(std::move(g)), u(grid.size(), T{}), v(grid.size(), T{}), theta(grid.size(), T{}) {}

    std::vector<T>& component(int c) { return c == 0 ? u : (c == 1 ? v : theta); }
    const std::vector<T>& component(int c) const { return c == 0 ? u : (c == 1 ? v : theta); }
};

using StateField = BasicStateField<double>;
using ComplexStateField = BasicStateField<Complex>;

ComplexStateField to_complex(const StateField& f);

// Coefficients of the unitary DFT of (u, v, theta): column m holds the 3-vector
// of mode m (FFT order).
struct ModalState {
    TorusGrid grid;
    Eigen::Matrix<Complex, 3, Eigen::Dynamic> coefficients;
};

ModalState to_modal(const StateField& f);
ModalState to_modal(const ComplexStateField& f);
ComplexStateField from_modal(const ModalState& m);
// Real part of the inverse transform; reports max |Im| / max |value| in
// imag_residue when non-null.
StateField from_modal_real(const ModalState& m, double* imag_residue = nullptr);

// exp(t A(xi)). s > 0: eigen-decomposition with eigenvalues -gamma_j s;
// s = 0: I + t A(0). Throws InvalidArgument for t < 0.
SymbolMatrix mode_exponential(double s, double t);
SymbolMatrix mode_exponential(std::span<const double> xi, double t);

struct EvolveResult {
    StateField state;
    double imag_residue = 0.0;
};

// e^{tA(D)} U on the torus, mode by mode.
StateField evolve(const StateField& state, double t);
EvolveResult evolve_with_diagnostics(const StateField& state, double t);

// A(D) applied spectrally.
StateField apply_generator(const StateField& state);
ComplexStateField apply_generator(const ComplexStateField& state);

// U with (lambda - A(D)) U = F. Throws SingularParameter naming the mode when
// lambda = -gamma_j |xi_k|^2 for some grid mode.
StateField apply_resolvent(const StateField& f, double lambda);
ComplexStateField apply_resolvent(const ComplexStateField& f, Complex lambda);

// (sum_modes (1 + |xi|^2)^order |f^(xi)|^2)^{1/2}, unitary DFT.
double sobolev_norm(std::span<const double> field, const TorusGrid& grid, double order);
// (||u||_{H^{2+j}}^2 + ||v||_{H^j}^2 + ||theta||_{H^j}^2)^{1/2}.
double e_norm(const StateField& state, int j);

// Max over all components of |a - b| / max(|b|, tiny).
double relative_difference(const StateField& a, const StateField& b);
double max_abs(const StateField& f);

// Seeded real initial data with random modal amplitudes on |k_i| <= max_wavenumber.
StateField random_smooth_state(const TorusGrid& grid, std::uint64_t seed, int max_wavenumber);

struct ResolventBound {
    Complex lambda;
    double bound = 0.0;        // sup over modes of ||M^{(j)}(xi, lambda)||_2
    double argmax_squared_frequency = 0.0;
};

// sup over the distinct |xi|^2 of the grid of the spectral norm of M^{(j)}.
ResolventBound resolvent_bound_at(int j, Complex lambda, const TorusGrid& grid);
ResolventBound resolvent_bound_at(int j, Complex lambda, std::span<const double> squared_frequencies);

struct ResolventSweep {
    int j = 0;
    double lambda0 = 0.0;
    double theta = 0.0;
    std::vector<ResolventBound> rows;

    const ResolventBound& max_row() const;
};

// B(lambda) for lambda = lambda0 + r e^{i f theta} over ray fractions f and
// moduli r. Requires theta < theta0.
ResolventSweep resolvent_bound_sweep(int j, double lambda0, double theta, const std::vector<double>& ray_fractions,
                                     const std::vector<double>& lambda_moduli, const TorusGrid& grid);

// Flat binary state format: "TPLT", u32 version, u32 N, u32 M per axis,
// f64 L per axis, then u, v, theta as row-major f64 (little endian).
inline constexpr std::uint32_t state_format_version = 1;
void write_state(std::ostream& os, const StateField& state);
StateField read_state(std::istream& is);
void write_state_file(const std::string& path, const StateField& state);
StateField read_state_file(const std::string& path);

}  // namespace thermoplate
