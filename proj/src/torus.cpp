#include "thermoplate/torus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <random>

#include <fftw3.h>

#include "thermoplate/errors.hpp"

namespace thermoplate {

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Unitary in-place N-d DFT on a fixed buffer.
class FftPlan {
public:
    explicit FftPlan(const TorusGrid& grid) : size_(grid.size()) {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        buffer_ = fftw_alloc_complex(size_);
        const std::vector<int> dims(grid.points.begin(), grid.points.end());
        forward_ = fftw_plan_dft(grid.dimension(), dims.data(), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft(grid.dimension(), dims.data(), buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~FftPlan() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(buffer_);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    Complex* data() { return reinterpret_cast<Complex*>(buffer_); }
    void forward() { run(forward_); }
    void backward() { run(backward_); }

private:
    void run(fftw_plan plan) {
        fftw_execute(plan);
        const double scale = 1.0 / std::sqrt(static_cast<double>(size_));
        Complex* d = data();
        for (std::size_t i = 0; i < size_; ++i) d[i] *= scale;
    }

    std::size_t size_;
    fftw_complex* buffer_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

bool is_power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

// exp(tau A(1)) with A(1) = [[0,1,0],[-1,0,1],[0,-1,-1]], from the eigenpairs
// (-gamma_j, (1, mu, -mu/(mu+1))).
struct UnitModeBasis {
    Eigen::Matrix3cd vectors;
    Eigen::Matrix3cd inverse;
    std::array<Complex, 3> gammas;

    UnitModeBasis() {
        gammas = characteristic_roots().gammas();
        for (int j = 0; j < 3; ++j) {
            const Complex mu = -gammas[j];
            vectors(0, j) = 1.0;
            vectors(1, j) = mu;
            vectors(2, j) = -mu / (mu + 1.0);
        }
        inverse = vectors.inverse();
    }
};

const UnitModeBasis& unit_mode_basis() {
    static const UnitModeBasis basis;
    return basis;
}

template <typename T>
void check_same_sizes(const BasicStateField<T>& f) {
    f.grid.validate();
    const std::size_t n = f.grid.size();
    if (f.u.size() != n || f.v.size() != n || f.theta.size() != n) {
        throw InvalidArgument("state field: component size does not match grid");
    }
}

template <typename T>
ModalState to_modal_impl(const BasicStateField<T>& f) {
    check_same_sizes(f);
    const std::size_t n = f.grid.size();
    ModalState m{f.grid, Eigen::Matrix<Complex, 3, Eigen::Dynamic>(3, n)};
    FftPlan plan(f.grid);
    for (int c = 0; c < 3; ++c) {
        const auto& src = f.component(c);
        Complex* d = plan.data();
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(std::abs(Complex(src[i])))) {
                throw InvalidArgument("state field: non-finite value");
            }
            d[i] = src[i];
        }
        plan.forward();
        for (std::size_t i = 0; i < n; ++i) m.coefficients(c, i) = d[i];
    }
    return m;
}

ModalState apply_per_mode(const ModalState& in, const std::function<SymbolMatrix(std::size_t, double)>& op) {
    ModalState out{in.grid, Eigen::Matrix<Complex, 3, Eigen::Dynamic>(3, in.coefficients.cols())};
    const auto s = in.grid.squared_frequencies();
    for (std::size_t k = 0; k < s.size(); ++k) {
        out.coefficients.col(k) = op(k, s[k]) * in.coefficients.col(k);
    }
    return out;
}

}  // namespace

TorusGrid::TorusGrid(std::vector<int> points_per_axis, std::vector<double> period_per_axis)
    : points(std::move(points_per_axis)), lengths(std::move(period_per_axis)) {
    validate();
}

TorusGrid TorusGrid::cube(int dimension, int points_per_axis, double period) {
    return TorusGrid(std::vector<int>(dimension, points_per_axis), std::vector<double>(dimension, period));
}

std::size_t TorusGrid::size() const {
    std::size_t n = 1;
    for (int m : points) n *= static_cast<std::size_t>(m);
    return n;
}

void TorusGrid::validate() const {
    if (points.empty() || points.size() > 3) throw InvalidArgument("TorusGrid: dimension must be 1, 2 or 3");
    if (points.size() != lengths.size()) throw InvalidArgument("TorusGrid: points/lengths size mismatch");
    for (int m : points) {
        if (m < 4 || !is_power_of_two(m)) throw InvalidArgument("TorusGrid: points per axis must be a power of two >= 4");
    }
    for (double l : lengths) {
        if (!(l > 0.0) || !std::isfinite(l)) throw InvalidArgument("TorusGrid: periods must be positive");
    }
}

double TorusGrid::frequency(int axis, int i) const {
    return 2.0 * std::numbers::pi * wavenumber(axis, i) / lengths[axis];
}

std::vector<std::vector<double>> TorusGrid::frequency_vectors() const {
    const std::size_t n = size();
    const int d = dimension();
    std::vector<std::vector<double>> out(n, std::vector<double>(d));
    for (std::size_t idx = 0; idx < n; ++idx) {
        std::size_t rest = idx;
        for (int a = d - 1; a >= 0; --a) {
            const int i = static_cast<int>(rest % points[a]);
            rest /= points[a];
            out[idx][a] = frequency(a, i);
        }
    }
    return out;
}

std::vector<double> TorusGrid::squared_frequencies() const {
    const auto xs = frequency_vectors();
    std::vector<double> s(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) s[i] = squared_norm(xs[i]);
    return s;
}

std::vector<double> TorusGrid::distinct_squared_frequencies() const {
    auto s = squared_frequencies();
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

ComplexStateField to_complex(const StateField& f) {
    ComplexStateField c(f.grid);
    for (int k = 0; k < 3; ++k) {
        std::copy(f.component(k).begin(), f.component(k).end(), c.component(k).begin());
    }
    return c;
}

ModalState to_modal(const StateField& f) { return to_modal_impl(f); }
ModalState to_modal(const ComplexStateField& f) { return to_modal_impl(f); }

ComplexStateField from_modal(const ModalState& m) {
    ComplexStateField f(m.grid);
    const std::size_t n = m.grid.size();
    FftPlan plan(m.grid);
    for (int c = 0; c < 3; ++c) {
        Complex* d = plan.data();
        for (std::size_t i = 0; i < n; ++i) d[i] = m.coefficients(c, i);
        plan.backward();
        std::copy(d, d + n, f.component(c).begin());
    }
    return f;
}

StateField from_modal_real(const ModalState& m, double* imag_residue) {
    const ComplexStateField c = from_modal(m);
    StateField f(m.grid);
    double max_im = 0.0;
    double max_abs_value = 0.0;
    for (int k = 0; k < 3; ++k) {
        const auto& src = c.component(k);
        auto& dst = f.component(k);
        for (std::size_t i = 0; i < src.size(); ++i) {
            dst[i] = src[i].real();
            max_im = std::max(max_im, std::abs(src[i].imag()));
            max_abs_value = std::max(max_abs_value, std::abs(src[i]));
        }
    }
    if (imag_residue) *imag_residue = max_abs_value > 0.0 ? max_im / max_abs_value : 0.0;
    return f;
}

SymbolMatrix mode_exponential(double s, double t) {
    if (!(t >= 0.0)) throw InvalidArgument("mode_exponential: t must be >= 0");
    if (s == 0.0) {
        SymbolMatrix e = SymbolMatrix::Identity();
        e(0, 1) = t;
        return e;
    }
    // A(xi) = D (s A(1)) D^{-1} with D = diag(1, s, s).
    const auto& basis = unit_mode_basis();
    const double tau = t * s;
    Eigen::Vector3cd decay;
    for (int j = 0; j < 3; ++j) decay(j) = std::exp(-basis.gammas[j] * tau);
    const SymbolMatrix unit = basis.vectors * decay.asDiagonal() * basis.inverse;
    const double d[3] = {1.0, s, s};
    SymbolMatrix e;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) e(r, c) = Complex(unit(r, c).real() * d[r] / d[c], 0.0);
    }
    return e;
}

SymbolMatrix mode_exponential(std::span<const double> xi, double t) { return mode_exponential(squared_norm(xi), t); }

EvolveResult evolve_with_diagnostics(const StateField& state, double t) {
    if (!(t >= 0.0)) throw InvalidArgument("evolve: t must be >= 0");
    const ModalState m = to_modal(state);
    const ModalState e = apply_per_mode(m, [t](std::size_t, double s) { return mode_exponential(s, t); });
    EvolveResult r;
    r.state = from_modal_real(e, &r.imag_residue);
    return r;
}

StateField evolve(const StateField& state, double t) { return evolve_with_diagnostics(state, t).state; }

ComplexStateField apply_generator(const ComplexStateField& state) {
    const ModalState m = to_modal(state);
    return from_modal(apply_per_mode(m, [](std::size_t, double s) { return symbol_matrix(s); }));
}

StateField apply_generator(const StateField& state) {
    const ModalState m = to_modal(state);
    return from_modal_real(apply_per_mode(m, [](std::size_t, double s) { return symbol_matrix(s); }));
}

ComplexStateField apply_resolvent(const ComplexStateField& f, Complex lambda) {
    const ModalState m = to_modal(f);
    const ModalState r = apply_per_mode(m, [&](std::size_t k, double s) {
        try {
            return resolvent_matrix(s, lambda);
        } catch (const SingularParameter&) {
            throw SingularParameter("apply_resolvent: lambda hits the spectrum at mode index " + std::to_string(k) +
                                    " (|xi|^2 = " + std::to_string(s) + ")");
        }
    });
    return from_modal(r);
}

StateField apply_resolvent(const StateField& f, double lambda) {
    const ModalState m = to_modal(f);
    const ModalState r = apply_per_mode(m, [&](std::size_t k, double s) {
        try {
            return resolvent_matrix(s, Complex(lambda));
        } catch (const SingularParameter&) {
            throw SingularParameter("apply_resolvent: lambda hits the spectrum at mode index " + std::to_string(k) +
                                    " (|xi|^2 = " + std::to_string(s) + ")");
        }
    });
    return from_modal_real(r);
}

double sobolev_norm(std::span<const double> field, const TorusGrid& grid, double order) {
    StateField tmp(grid);
    if (field.size() != grid.size()) throw InvalidArgument("sobolev_norm: field size does not match grid");
    std::copy(field.begin(), field.end(), tmp.u.begin());
    const ModalState m = to_modal(tmp);
    const auto s = grid.squared_frequencies();
    double sum = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) sum += std::pow(1.0 + s[k], order) * std::norm(m.coefficients(0, k));
    return std::sqrt(sum);
}

double e_norm(const StateField& state, int j) {
    if (j < 0 || j > 2) throw InvalidArgument("e_norm: j must be 0, 1 or 2");
    const ModalState m = to_modal(state);
    const auto s = state.grid.squared_frequencies();
    double sum = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double w = 1.0 + s[k];
        sum += std::pow(w, 2 + j) * std::norm(m.coefficients(0, k));
        sum += std::pow(w, j) * (std::norm(m.coefficients(1, k)) + std::norm(m.coefficients(2, k)));
    }
    return std::sqrt(sum);
}

double max_abs(const StateField& f) {
    double m = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (double x : f.component(c)) m = std::max(m, std::abs(x));
    }
    return m;
}

double relative_difference(const StateField& a, const StateField& b) {
    if (!(a.grid == b.grid)) throw InvalidArgument("relative_difference: grids differ");
    double diff = 0.0;
    for (int c = 0; c < 3; ++c) {
        const auto& x = a.component(c);
        const auto& y = b.component(c);
        for (std::size_t i = 0; i < x.size(); ++i) diff = std::max(diff, std::abs(x[i] - y[i]));
    }
    const double scale = max_abs(b);
    return scale > 0.0 ? diff / scale : diff;
}

StateField random_smooth_state(const TorusGrid& grid, std::uint64_t seed, int max_wavenumber) {
    grid.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    ModalState m{grid, Eigen::Matrix<Complex, 3, Eigen::Dynamic>::Zero(3, grid.size())};
    const int d = grid.dimension();
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
        std::size_t rest = idx;
        bool inside = true;
        for (int a = d - 1; a >= 0; --a) {
            const int i = static_cast<int>(rest % grid.points[a]);
            rest /= grid.points[a];
            if (std::abs(grid.wavenumber(a, i)) > max_wavenumber) inside = false;
        }
        for (int c = 0; c < 3; ++c) {
            const double re = coef(rng);
            const double im = coef(rng);
            if (inside) m.coefficients(c, idx) = Complex(re, im);
        }
    }
    StateField f = from_modal_real(m);
    // Normalize so that max |value| = 1 (keeps test tolerances scale free).
    const double scale = max_abs(f);
    if (scale > 0.0) {
        for (int c = 0; c < 3; ++c) {
            for (double& x : f.component(c)) x /= scale;
        }
    }
    return f;
}

ResolventBound resolvent_bound_at(int j, Complex lambda, std::span<const double> squared_frequencies) {
    if (squared_frequencies.empty()) throw InvalidArgument("resolvent_bound_at: no modes");
    ResolventBound best{lambda, -1.0, 0.0};
    for (double s : squared_frequencies) {
        const SymbolMatrix m = scaled_resolvent_symbol(j, s, lambda);
        const double norm = Eigen::JacobiSVD<SymbolMatrix>(m).singularValues()(0);
        if (norm > best.bound) {
            best.bound = norm;
            best.argmax_squared_frequency = s;
        }
    }
    return best;
}

ResolventBound resolvent_bound_at(int j, Complex lambda, const TorusGrid& grid) {
    const auto s = grid.distinct_squared_frequencies();
    return resolvent_bound_at(j, lambda, s);
}

const ResolventBound& ResolventSweep::max_row() const {
    if (rows.empty()) throw InvalidArgument("ResolventSweep: empty");
    return *std::max_element(rows.begin(), rows.end(),
                             [](const ResolventBound& a, const ResolventBound& b) { return a.bound < b.bound; });
}

ResolventSweep resolvent_bound_sweep(int j, double lambda0, double theta, const std::vector<double>& ray_fractions,
                                     const std::vector<double>& lambda_moduli, const TorusGrid& grid) {
    if (j < 0 || j > 2) throw InvalidArgument("resolvent_bound_sweep: j must be 0, 1 or 2");
    if (!(theta > 0.0 && theta < characteristic_roots().theta0)) {
        throw InvalidArgument("resolvent_bound_sweep: theta must lie in (0, theta0)");
    }
    if (ray_fractions.empty() || lambda_moduli.empty()) throw InvalidArgument("resolvent_bound_sweep: empty sample");
    const auto s = grid.distinct_squared_frequencies();
    ResolventSweep sweep{j, lambda0, theta, {}};
    for (double f : ray_fractions) {
        for (double r : lambda_moduli) {
            sweep.rows.push_back(resolvent_bound_at(j, lambda0 + std::polar(r, f * theta), s));
        }
    }
    return sweep;
}

namespace {

template <typename T>
void put(std::ostream& os, T value) {
    static_assert(std::endian::native == std::endian::little, "state format is little endian");
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    os.write(bytes, sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    char bytes[sizeof(T)];
    if (!is.read(bytes, sizeof(T))) throw InvalidArgument("read_state: truncated input");
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

}  // namespace

void write_state(std::ostream& os, const StateField& state) {
    check_same_sizes(state);
    os.write("TPLT", 4);
    put<std::uint32_t>(os, state_format_version);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(state.grid.dimension()));
    for (int m : state.grid.points) put<std::uint32_t>(os, static_cast<std::uint32_t>(m));
    for (double l : state.grid.lengths) put<double>(os, l);
    for (int c = 0; c < 3; ++c) {
        for (double x : state.component(c)) put<double>(os, x);
    }
    if (!os) throw InvalidArgument("write_state: stream failure");
}

StateField read_state(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "TPLT", 4) != 0) throw InvalidArgument("read_state: bad magic");
    const auto version = get<std::uint32_t>(is);
    if (version != state_format_version) throw InvalidArgument("read_state: unsupported version");
    const auto dim = get<std::uint32_t>(is);
    if (dim < 1 || dim > 3) throw InvalidArgument("read_state: bad dimension");
    std::vector<int> points(dim);
    std::vector<double> lengths(dim);
    for (auto& m : points) m = static_cast<int>(get<std::uint32_t>(is));
    for (auto& l : lengths) l = get<double>(is);
    StateField f{TorusGrid(points, lengths)};
    for (int c = 0; c < 3; ++c) {
        for (double& x : f.component(c)) x = get<double>(is);
    }
    return f;
}

void write_state_file(const std::string& path, const StateField& state) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidArgument("cannot open " + path + " for writing");
    write_state(os, state);
}

StateField read_state_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidArgument("cannot open " + path);
    return read_state(is);
}

}  // namespace thermoplate
