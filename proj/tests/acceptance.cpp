// Acceptance run: one PASS/FAIL line per criterion.
// Usage: thermoplate_acceptance [path-to-thermoplate-cli] [--skip-slow]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <unistd.h>

#include "oracles.hpp"
#include "thermoplate/multiplier.hpp"
#include "thermoplate/plate_fd.hpp"
#include "thermoplate/symbol.hpp"
#include "thermoplate/torus.hpp"

using namespace thermoplate;
namespace fs = std::filesystem;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        notes.push_back((ok ? "" : "!! ") + what);
    }
};

using Criterion = std::function<Outcome()>;

Outcome roots_criterion() {
    Outcome o;
    const auto& r = characteristic_roots();
    const auto g = r.gammas();
    o.require(r.gamma1 > 0 && r.gamma1 < 1, fmt::format("gamma1 = {:.15f}", r.gamma1));
    o.require(r.gamma2.real() > 0 && r.gamma2.real() < 0.5 && r.gamma2 == std::conj(r.gamma3),
              fmt::format("Re gamma2 = Re gamma3 = {:.15f}", r.gamma2.real()));
    o.require(r.theta0 > std::numbers::pi / 2 && r.theta0 < std::numbers::pi, fmt::format("theta0 = {:.15f}", r.theta0));
    o.require(r.max_residual() <= 1e-12, fmt::format("max residual {:.2e}", r.max_residual()));
    const double vieta = std::max({std::abs(g[0] + g[1] + g[2] - 1.0),
                                   std::abs(g[0] * g[1] + g[1] * g[2] + g[0] * g[2] - 2.0),
                                   std::abs(g[0] * g[1] * g[2] - 1.0)});
    o.require(vieta <= 1e-12, fmt::format("Vieta {:.2e}", vieta));
    return o;
}

using LComplex = std::complex<long double>;
using LMatrix3 = Eigen::Matrix<LComplex, 3, 3>;

// max |((lambda - A) X - I)_ij| evaluated in long double
double long_residual(const LMatrix3& b, const Eigen::Matrix3cd& x) {
    const LMatrix3 e = b * x.cast<LComplex>() - LMatrix3::Identity();
    double m = 0.0;
    for (int i = 0; i < 9; ++i) m = std::max(m, static_cast<double>(std::abs(e(i))));
    return m;
}

Outcome resolvent_criterion() {
    Outcome o;
    std::mt19937_64 rng(20240601);
    const double theta = 0.95 * characteristic_roots().theta0;
    std::uniform_real_distribution<double> le(-3.0, 3.0), fr(-1.0, 1.0), ln(-3.0, 3.0);
    double worst_inv = 0.0, worst_det = 0.0, worst_rounded = 0.0, worst_entry = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double rho = std::pow(10.0, le(rng));
        const double s = rho * rho;
        const Complex lambda = 1.0 + std::pow(10.0, ln(rng)) * std::polar(1.0, fr(rng) * theta);
        const Eigen::Matrix3cd a = oracle::plate_symbol(s).cast<Complex>();
        const Eigen::Matrix3cd r = resolvent_matrix(s, lambda);
        const Eigen::Matrix3cd e = (lambda * Eigen::Matrix3cd::Identity() - a) * r - Eigen::Matrix3cd::Identity();
        worst_inv = std::max(worst_inv, e.cwiseAbs().maxCoeff());
        const Complex d1 = determinant(s, lambda), d2 = determinant_shifted_roots(s, lambda);
        worst_det = std::max(worst_det, std::abs(d1 - d2) / std::abs(d2));

        // baseline: the long double inverse rounded to binary64
        const LMatrix3 b = (lambda * Eigen::Matrix3cd::Identity() - a).cast<LComplex>();
        const LMatrix3 exact = b.inverse();
        Eigen::Matrix3cd rounded;
        for (int i = 0; i < 9; ++i) {
            rounded(i) = Complex(static_cast<double>(exact(i).real()), static_cast<double>(exact(i).imag()));
            if (rounded(i) != 0.0) worst_entry = std::max(worst_entry, std::abs(r(i) - rounded(i)) / std::abs(rounded(i)));
        }
        worst_rounded = std::max(worst_rounded, long_residual(b, rounded));
    }
    o.require(worst_inv <= 1e-10, fmt::format("max ||(lambda-A)R - I||_max = {:.2e}", worst_inv));
    o.require(worst_det <= 1e-10, fmt::format("max determinant mismatch {:.2e}", worst_det));
    o.notes.push_back(fmt::format("reference: correctly rounded inverse reaches {:.2e}; R entries match it to {:.2e} relative",
                                  worst_rounded, worst_entry));
    return o;
}

Outcome multiplier_criterion() {
    Outcome o;
    const double theta = 0.95 * characteristic_roots().theta0;
    const SectorSample sample = SectorSample::defaults(1.0, theta, 2);
    int passed = 0, total = 0;
    for (const auto& r : example_suite(sample, 3)) {
        ++total;
        passed += r.pass;
        if (!r.pass) o.require(false, r.symbol_id + " failed");
    }
    for (int j : {0, 2})
        for (const auto& r : lemma24_matrix_scan(j, sample, 3)) {
            ++total;
            passed += r.pass;
            if (!r.pass) o.require(false, r.symbol_id + " failed");
        }
    o.require(passed == total, fmt::format("{}/{} positive scans pass (|alpha| <= 3)", passed, total));

    SectorSample base = SectorSample::defaults(0.0, theta, 2);
    const Symbol one = find_example_symbol("one").fn;
    const double c_base = multiplier_order_scan("one", one, 2.0, base, 0).records[0].constant;
    SectorSample ext = base;
    ext.lambda_moduli.insert(ext.lambda_moduli.begin(), 1e-12);
    ext.xi_moduli.insert(ext.xi_moduli.begin(), 1e-6);
    const auto rep = multiplier_order_scan("one", one, 2.0, ext, 0);
    const double growth = rep.records[0].constant / c_base;
    o.require(!rep.pass && growth >= 1e3,
              fmt::format("constant 1 unshifted: C0 {:.3g} -> {:.3g} (growth {:.3g})", c_base,
                          rep.records[0].constant, growth));
    return o;
}

Outcome nonsectoriality_criterion() {
    Outcome o;
    double prev = 0.0;
    for (double k : {1.0, 10.0, 100.0}) {
        const double w = nonsectoriality_witness(k), c = (k * k + 1.0) / 5.0;
        o.require(std::abs(w - c) <= 1e-12 * c, fmt::format("witness({}) = {:.15g}", k, w));
    }
    for (double k : {1.0, 10.0, 100.0, 1000.0}) {
        // period 2 pi k puts |xi| = 1/k on the grid
        const TorusGrid g = TorusGrid::cube(1, 64, two_pi * k);
        const double b = resolvent_bound_at(0, 1.0 / (k * k), g).bound;
        o.require(b >= (k * k + 1.0) / 5.0 * (1 - 1e-12) && b > prev,
                  fmt::format("B(k^-2) = {:.6g} at k = {}", b, k));
        prev = b;
    }
    const double theta = 0.9 * characteristic_roots().theta0;
    const auto moduli = log_spaced(1e-3, 1e3, 32);
    const std::vector<double> fr{0.0, 0.5, -0.5, 0.99, -0.99};
    const double b1 = resolvent_bound_sweep(0, 1.0, theta, fr, moduli, TorusGrid::cube(2, 128, two_pi)).max_row().bound;
    const double b2 = resolvent_bound_sweep(0, 1.0, theta, fr, moduli, TorusGrid::cube(2, 256, two_pi)).max_row().bound;
    o.require(std::isfinite(b1) && std::abs(b2 - b1) <= 1e-6 * b1,
              fmt::format("shifted sector sup B = {:.10g} (M=128), {:.10g} (M=256)", b1, b2));
    return o;
}

double max_rel(const StateField& a, const StateField& b) { return relative_difference(a, b); }

Outcome semigroup_criterion() {
    Outcome o;
    const double g1 = characteristic_roots().gamma1, rg2 = characteristic_roots().gamma2.real();
    for (int n : {1, 2}) {
        const TorusGrid grid = TorusGrid::cube(n, n == 1 ? 128 : 64, two_pi);
        const StateField u = random_smooth_state(grid, 17, 6);
        double semi = 0.0;
        for (double a : {0.1, 0.5, 1.0})
            for (double b : {0.1, 0.5, 1.0}) semi = std::max(semi, max_rel(evolve(evolve(u, a), b), evolve(u, a + b)));
        o.require(semi <= 1e-9, fmt::format("N={} semigroup residual {:.2e}", n, semi));

        // eigenmode along the first axis with wavenumber 3
        const double s = 9.0;
        Eigen::EigenSolver<Eigen::Matrix3d> es(oracle::plate_symbol(s));
        int idx = 0;
        for (int i = 0; i < 3; ++i)
            if (std::abs(es.eigenvalues()(i).imag()) < 1e-12) idx = i;
        const Eigen::Vector3d e = es.eigenvectors().col(idx).real();
        StateField u0(grid);
        const int m = grid.points[0];
        const std::size_t stride = grid.size() / m;
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const double c = std::cos(3.0 * two_pi * static_cast<double>(p / stride) / m);
            u0.u[p] = e(0) * c;
            u0.v[p] = e(1) * c;
            u0.theta[p] = e(2) * c;
        }
        const double t = 0.3;
        StateField expect = u0;
        for (int c = 0; c < 3; ++c)
            for (auto& x : expect.component(c)) x *= std::exp(-g1 * s * t);
        const double err = max_rel(evolve(u0, t), expect);
        o.require(err <= 1e-8, fmt::format("N={} eigenmode vs exp(-gamma1 s t): {:.2e}", n, err));

        // slowest modal rate for generic data on one mode
        StateField w(grid);
        for (std::size_t p = 0; p < grid.size(); ++p) {
            const double x = two_pi * static_cast<double>(p / stride) / m;
            w.u[p] = 0.3 * std::cos(3 * x) + 0.1 * std::sin(3 * x);
            w.v[p] = -0.7 * std::cos(3 * x);
            w.theta[p] = 0.5 * std::sin(3 * x);
        }
        std::vector<double> times;
        std::vector<Eigen::Vector3cd> coeffs;
        const long col = static_cast<long>(3 * stride);
        for (int k = 0; k <= 40; ++k) {
            const double tk = (1.0 + 4.0 * k / 40.0) / s;
            times.push_back(tk);
            coeffs.push_back(to_modal(evolve(w, tk)).coefficients.col(col));
        }
        const auto rates = oracle::eigen_coordinate_rates(s, times, coeffs);
        const double slowest = *std::min_element(rates.begin(), rates.end());
        o.require(std::abs(slowest - rg2 * s) <= 1e-2 * rg2 * s,
                  fmt::format("N={} slowest modal rate {:.6f} vs Re gamma2 |xi|^2 = {:.6f}", n, slowest, rg2 * s));
    }
    // Laplace transform of the semigroup against the resolvent
    const TorusGrid g = TorusGrid::cube(1, 32, two_pi);
    const StateField f = random_smooth_state(g, 23, 3);
    const double lambda = 2.0, horizon = 20.0, dt = 0.002;
    const int steps = static_cast<int>(horizon / dt);
    StateField acc(g);
    for (int n = 0; n <= steps; ++n) {
        const double wgt = (n == 0 || n == steps ? 0.5 : 1.0) * dt * std::exp(-lambda * n * dt);
        const StateField e = evolve(f, n * dt);
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < g.size(); ++i) acc.component(c)[i] += wgt * e.component(c)[i];
    }
    const double lap = max_rel(acc, apply_resolvent(f, lambda));
    o.require(lap <= 1e-3, fmt::format("Laplace transform vs resolvent at lambda=2: {:.2e}", lap));
    return o;
}

Outcome bounded_spectrum_criterion() {
    Outcome o;
    for (int m : {50, 100, 200}) {
        const auto gen = assemble_generator(DomainSpec::interval(), {m}, BCVariant::free_beta(0.5));
        const SpectrumReport r = spectrum(gen);
        const KernelProjection kp = kernel_and_projection(gen);
        o.require(r.max_real_part <= r.zero_tol && r.kernel_dimension == 3 && kp.generalized_kernel_dimension >= 5,
                  fmt::format("M={}: max Re {:.2e} (tol {:.2e}), kernel {}, generalized kernel {}", m,
                              r.max_real_part, r.zero_tol, r.kernel_dimension, kp.generalized_kernel_dimension));
    }
    const ConvergenceStudy st = convergence_study(DomainSpec::interval(), BCVariant::free_beta(0.5), {50, 100, 200});
    std::string list;
    bool ok = !st.orders.empty();
    for (double q : st.orders) {
        list += fmt::format(" {:.3f}", q);
        ok = ok && q >= 1.5 && q <= 2.5;
    }
    o.require(ok, "convergence orders" + list);
    return o;
}

Outcome stability_criterion(bool skip_slow) {
    Outcome o;
    {
        const auto gen = assemble_generator(DomainSpec::interval(), {100}, BCVariant::free_beta(0.5));
        const BoundedEvolver ev(gen);
        const DecayReport r = decay_rate_experiment(ev, 3, 0.0, 20240601, true);
        o.require(r.pass, fmt::format("1D: fitted {:.5f} vs spectral {:.5f}", r.mean_fitted_rate(), r.spectral_rate));
    }
    if (skip_slow) {
        o.require(false, "2D 24x24 skipped (--skip-slow)");
        return o;
    }
    const auto gen = assemble_generator(DomainSpec::rectangle(), {24}, BCVariant::lt_variant(0.3, 1.0));
    const BoundedEvolver ev(gen);
    o.require(ev.cluster_dimension() == 0, fmt::format("2D lt: {} eigenvalues within zero_tol of 0", ev.cluster_dimension()));
    const DecayReport r = decay_rate_experiment(ev, 2, 0.0, 20240601, false);
    o.require(r.pass, fmt::format("2D lt full norm: fitted {:.5f} vs spectral {:.5f}", r.mean_fitted_rate(),
                                  r.spectral_rate));
    return o;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome reproducibility_criterion(const std::string& cli) {
    Outcome o;
    if (cli.empty()) {
        o.require(false, "no CLI path given");
        return o;
    }
    const fs::path root = fs::temp_directory_path() / fmt::format("thermoplate_repro_{}", ::getpid());
    const std::vector<std::string> commands{"roots",
                                            "witness 1 10 100",
                                            "multscan",
                                            "lemma24 --j 2",
                                            "sweep --torus_points 64",
                                            "evolve --torus_points 64",
                                            "spectrum --domain interval --bc free --beta 0.5 --grid 100",
                                            "decay --domain interval --grid 50",
                                            "converge --grids 25,50,100"};
    for (const auto& c : commands) {
        // same config (including the output directory) twice; keep a copy of the first run
        const fs::path d = root / c.substr(0, c.find(' '));
        const fs::path first = root / (c.substr(0, c.find(' ')) + ".first");
        for (int run = 0; run < 2; ++run) {
            const std::string cmd = fmt::format("\"{}\" --out \"{}\" {} > /dev/null 2>&1", cli, d.string(), c);
            const int rc = std::system(cmd.c_str());
            if (rc == -1 || !fs::exists(d / "manifest.json")) o.require(false, c + ": no manifest");
            if (run == 0) fs::copy(d, first, fs::copy_options::recursive);
        }
        const std::vector<fs::path> dirs{first, d};
        int files = 0;
        bool same = true;
        for (const auto& entry : fs::directory_iterator(dirs[0])) {
            const auto name = entry.path().filename();
            if (name == "manifest.json") continue;
            ++files;
            same = same && fs::exists(dirs[1] / name) && read_file(entry.path()) == read_file(dirs[1] / name);
        }
        o.require(same && files > 0, fmt::format("{}: {} data files byte-identical", c, files));
    }
    fs::remove_all(root);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli;
    bool skip_slow = false;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--skip-slow") skip_slow = true;
        else cli = a;
    }
    const std::vector<std::pair<std::string, Criterion>> criteria{
        {"1 root structure", roots_criterion},
        {"2 resolvent correctness", resolvent_criterion},
        {"3 multiplier suite", multiplier_criterion},
        {"4 non-sectoriality", nonsectoriality_criterion},
        {"5 semigroup evolution", semigroup_criterion},
        {"6 bounded-domain spectrum", bounded_spectrum_criterion},
        {"7 exponential stability", [&] { return stability_criterion(skip_slow); }},
        {"8 reproducibility", [&] { return reproducibility_criterion(cli); }},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << fmt::format("[{}] criterion {} ({:.1f} s)\n", o.pass ? "PASS" : "FAIL", name, secs);
        for (const auto& n : o.notes) std::cout << "       " << n << "\n";
        std::cout.flush();
        failures += !o.pass;
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
