#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "thermoplate/symbol.hpp"

namespace thermoplate {

// A scalar symbol m(xi, lambda). Must be pure: scans evaluate it many times
// at shifted xi and rely on identical inputs giving identical outputs.
using Symbol = std::function<Complex(std::span<const double> xi, Complex lambda)>;

// Sample of (xi, lambda) with lambda = lambda0 + r e^{i f theta} and
// xi = rho * direction.
struct SectorSample {
    double lambda0 = 1.0;
    double theta = 0.0;
    std::vector<double> lambda_moduli;
    std::vector<double> arg_fractions;
    std::vector<double> xi_moduli;
    std::vector<std::vector<double>> directions;

    int dimension() const { return directions.empty() ? 0 : static_cast<int>(directions.front().size()); }
    std::size_t size() const {
        return lambda_moduli.size() * arg_fractions.size() * xi_moduli.size() * directions.size();
    }
    // Throws InvalidArgument on empty lists, non-positive moduli, fractions
    // outside (-1,1) or mismatched direction lengths.
    void validate() const;

    // 32 log-spaced |xi| and |lambda - lambda0| in [1e-3, 1e3], fractions
    // {0, +-0.5, +-0.99}, directions = coordinate axes plus the diagonal.
    static SectorSample defaults(double lambda0, double theta, int dimension = 2);
};

std::vector<double> log_spaced(double lo, double hi, int count);

// Coordinate axes of R^N followed by the normalized diagonal (N >= 2).
std::vector<std::vector<double>> axis_and_diagonal_directions(int dimension);

// All multi-indices with |alpha| <= max_order, ordered by |alpha| and then
// lexicographically (descending in the first coordinate).
std::vector<std::vector<int>> multi_indices(int dimension, int max_order);

// d^alpha m / dxi^alpha by nested central differences, step per coordinate
// h = cbrt(eps) * max(|xi_k|, |xi|) taken at the base point.
Complex finite_difference_derivative(const Symbol& m, std::span<const double> xi, Complex lambda,
                                     std::span<const int> alpha);

struct AlphaRecord {
    std::vector<int> alpha;
    double constant = 0.0;  // sup |d^alpha m| |xi|^|alpha| / (|lambda|^{1/2} + |xi|)^s
    std::vector<double> argmax_xi;
    Complex argmax_lambda;
};

struct MultiplierReport {
    std::string symbol_id;
    double order = 0.0;
    double lambda0 = 0.0;
    double theta = 0.0;
    std::size_t sample_size = 0;
    double relative_step = 0.0;  // cbrt(eps)
    double ceiling = 0.0;
    std::vector<AlphaRecord> records;
    bool pass = false;

    const AlphaRecord& record(std::span<const int> alpha) const;
    double max_constant() const;
};

inline constexpr double default_multiplier_ceiling = 1e6;

// Empirical Definition-of-class scan: for every |alpha| <= max_alpha the
// supremum over the sample of the weighted derivative ratio. Throws
// EvaluationFailure (naming the point) when m is non-finite somewhere.
MultiplierReport multiplier_order_scan(const std::string& symbol_id, const Symbol& m, double order,
                                       const SectorSample& sample, int max_alpha,
                                       double ceiling = default_multiplier_ceiling);

struct NamedSymbol {
    std::string id;
    double order = 0.0;
    Symbol fn;
    bool needs_shifted_sector = false;
};

// The built-in symbols: lambda, |xi|^2, |xi|^4, (lambda+|xi|^2)^{+-1/2},
// |xi|/(1+|xi|^2)^{1/2} and the constant 1 (order 2, shifted sector only).
std::vector<NamedSymbol> example_symbols();
NamedSymbol find_example_symbol(const std::string& id);

// Scans every built-in symbol. The constant symbol is scanned on the sample
// shifted to lambda0 = 1 when the given sample is unshifted.
std::vector<MultiplierReport> example_suite(const SectorSample& sample, int max_alpha = -1,
                                            double ceiling = default_multiplier_ceiling);

// Symbol of entry (k, l) (zero based) of M^{(j)}.
Symbol lemma24_entry(int j, int k, int l);

// Nine order-0 scans of the entries of M^{(j)}; requires lambda0 > 0 and
// theta < theta0.
std::vector<MultiplierReport> lemma24_matrix_scan(int j, const SectorSample& sample, int max_alpha = -1,
                                                  double ceiling = default_multiplier_ceiling);

// |lambda (1+s) s / prod_j (lambda + gamma_j s)| at lambda = k^-2, |xi| = k^-1.
double nonsectoriality_witness(double k);

// Closed form of the witness: (k^2 + 1) / 5.
double nonsectoriality_witness_closed_form(double k);

// sup over grid of |m(xi, lambda)|.
double operator_norm_probe(const Symbol& m, Complex lambda, const std::vector<std::vector<double>>& xi_grid);

}  // namespace thermoplate
