#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace thermoplate {

struct DomainSpec {
    enum class Kind { interval, rectangle };
    Kind kind = Kind::interval;
    double a = 0.0, b = 1.0;  // x extent
    double c = 0.0, d = 1.0;  // y extent (rectangle only)

    static DomainSpec interval(double a = 0.0, double b = 1.0);
    static DomainSpec rectangle(double a = 0.0, double b = 1.0, double c = 0.0, double d = 1.0);

    int dimension() const { return kind == Kind::interval ? 1 : 2; }
    void validate() const;
    std::string describe() const;
};

struct BCVariant {
    enum class Kind { free_beta, free_2d, lt_variant };
    Kind kind = Kind::free_beta;
    double beta = 0.5;
    double mu = 0.3;
    double b = 1.0;

    static BCVariant free_beta(double beta = 0.5);
    static BCVariant free_2d(double mu = 0.3);
    static BCVariant lt_variant(double mu = 0.3, double b = 1.0);

    void validate() const;
    std::string name() const;  // "free_beta", "free_2d", "lt"
    std::string describe() const;
};

// Finite-difference generator on the closed grid (boundary nodes included,
// ghost values eliminated). Unknown ordering: all u nodes, then v, then theta;
// node (i, j) has index i * ny + j with ny = 1 on the interval.
struct DiscreteGenerator {
    DomainSpec domain;
    BCVariant bc;
    std::vector<int> intervals;   // per axis
    std::vector<double> spacing;  // per axis
    Eigen::MatrixXd matrix;
    // Upper-triangular G with ||G x||^2 the discrete H^2 x L^2 x L^2 energy.
    Eigen::MatrixXd metric;
    std::size_t ghost_count = 0;

    int nx() const { return intervals[0] + 1; }
    int ny() const { return intervals.size() > 1 ? intervals[1] + 1 : 1; }
    std::size_t nodes() const { return static_cast<std::size_t>(nx()) * ny(); }
    std::size_t size() const { return 3 * nodes(); }
    std::array<double, 2> node_position(int i, int j) const;

    // Samples (u, v, theta)(x, y) at every node.
    Eigen::VectorXd sample(const std::function<std::array<double, 3>(double, double)>& field) const;
    // G A G^{-1}: the generator in energy-orthonormal coordinates.
    Eigen::MatrixXd metric_matrix() const;
    double energy_norm(const Eigen::VectorXd& x) const;
    std::string layout() const;
};

// grid_points = intervals per axis (>= 8); one entry per dimension, or a
// single entry reused for every axis.
DiscreteGenerator assemble_generator(const DomainSpec& domain, const std::vector<int>& grid_points,
                                     const BCVariant& bc);

inline constexpr double default_zero_tol_relative = 1e-6;
inline constexpr std::size_t max_dense_size = 20000;

struct SpectrumReport {
    std::vector<std::complex<double>> eigenvalues;  // Re descending, then Im descending
    double zero_tol = 0.0;
    // Singular values of the energy-scaled generator at or below zero_tol.
    int kernel_dimension = 0;
    // Eigenvalues with |lambda| <= zero_tol.
    int near_zero_count = 0;
    double decay_margin = 0.0;  // -max Re lambda over |lambda| > zero_tol
    double max_real_part = 0.0;
    std::vector<double> smallest_singular_values;  // ascending, up to 8
    std::size_t matrix_size = 0;
    std::vector<int> grid;
};

// zero_tol <= 0 selects default_zero_tol_relative * max |lambda|.
SpectrumReport spectrum(const DiscreteGenerator& gen, double zero_tol = -1.0);

struct KernelProjection {
    double zero_tol = 0.0;
    Eigen::MatrixXd kernel_basis;  // grid coordinates, energy-orthonormal columns
    int generalized_kernel_dimension = 0;
    Eigen::MatrixXd projection;  // grid coordinates
    double projector_norm = 0.0;  // energy norm of P
};

inline constexpr double max_projector_condition = 1e10;

KernelProjection kernel_and_projection(const DiscreteGenerator& gen, double zero_tol = -1.0);

// Exponential through the ordered real Schur form, with the near-zero cluster
// decoupled from the rest by a Sylvester solve.
class BoundedEvolver {
public:
    explicit BoundedEvolver(const DiscreteGenerator& gen, double zero_tol = -1.0);
    ~BoundedEvolver();
    BoundedEvolver(BoundedEvolver&&) noexcept;
    BoundedEvolver& operator=(BoundedEvolver&&) noexcept;

    Eigen::VectorXd evolve(const Eigen::VectorXd& u0, double t, bool project_off_kernel) const;
    // Same in energy-orthonormal coordinates.
    Eigen::VectorXd evolve_metric(const Eigen::VectorXd& y0, double t, bool project_off_kernel) const;
    Eigen::VectorXd project_off_kernel(const Eigen::VectorXd& u0) const;
    // Energy-coordinate states at t0, t0 + dt, ..., t0 + (count-1) dt.
    // Columns of y0 are independent initial states.
    std::vector<Eigen::MatrixXd> trajectory_metric(const Eigen::MatrixXd& y0, double t0, double dt, int count,
                                                   bool project_off_kernel) const;

    double zero_tol() const;
    int cluster_dimension() const;
    // Eigenvalues of the generator, near-zero cluster first.
    const Eigen::VectorXcd& eigenvalues() const;
    // -max Re over eigenvalues outside the cluster.
    double spectral_margin() const;
    const DiscreteGenerator& generator() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

Eigen::VectorXd evolve_bounded(const DiscreteGenerator& gen, const Eigen::VectorXd& u0, double t,
                               bool project_off_kernel);

struct DecaySample {
    double fitted_rate = 0.0;
    double relative_error = 0.0;
    bool decaying = false;
    std::vector<double> times;
    std::vector<double> norms;  // energy norm
};

struct DecayReport {
    double horizon = 0.0;
    double spectral_rate = 0.0;
    bool projected = true;
    std::vector<DecaySample> samples;
    bool pass = false;  // every sample within decay_tolerance of spectral_rate

    double mean_fitted_rate() const;
};

inline constexpr double decay_tolerance = 0.1;
inline constexpr double auto_horizon_factor = 30.0;

// Fits log ||U(t)|| on [horizon/2, horizon]; horizon <= 0 picks
// auto_horizon_factor / spectral_rate.
DecaySample decay_fit(const BoundedEvolver& evolver, const Eigen::VectorXd& u0, double horizon, bool project,
                      double spectral_rate, int time_points = 41);

// Random seeded initial data in energy coordinates.
DecayReport decay_rate_experiment(const BoundedEvolver& evolver, int samples, double horizon, std::uint64_t seed,
                                  bool project_off_kernel = true);

struct ConvergenceRow {
    int intervals = 0;
    std::vector<std::complex<double>> eigenvalues;  // tracked, matched to the coarsest grid
    std::vector<double> differences;                // |lambda_i - lambda_i(previous grid)|
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    std::vector<double> orders;  // per tracked eigenvalue, from the last three grids
    double order = 0.0;          // median of orders (NaN when undefined)
};

inline constexpr int tracked_eigenvalue_count = 5;

// Grids must be nested: each entry equals or doubles the previous one.
ConvergenceStudy convergence_study(const DomainSpec& domain, const BCVariant& bc, const std::vector<int>& grids);

void write_triplets(std::ostream& os, const DiscreteGenerator& gen);
void write_spectrum_csv(std::ostream& os, const SpectrumReport& report);
std::string spectrum_json(const SpectrumReport& report);

}  // namespace thermoplate
