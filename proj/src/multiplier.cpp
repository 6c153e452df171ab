#include "thermoplate/multiplier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "thermoplate/errors.hpp"

namespace thermoplate {

namespace {

const double kRelativeStep = std::cbrt(std::numeric_limits<double>::epsilon());

void enumerate_indices(int dimension, int remaining, std::vector<int>& current, int position,
                       std::vector<std::vector<int>>& out) {
    if (position == dimension - 1) {
        current[position] = remaining;
        out.push_back(current);
        return;
    }
    for (int a = remaining; a >= 0; --a) {
        current[position] = a;
        enumerate_indices(dimension, remaining - a, current, position + 1, out);
    }
}

Complex nested_difference(const Symbol& m, std::vector<double>& xi, Complex lambda, std::vector<int>& alpha,
                          std::span<const double> steps) {
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        if (alpha[k] == 0) continue;
        --alpha[k];
        const double base = xi[k];
        const double h = steps[k];
        xi[k] = base + h;
        const Complex plus = nested_difference(m, xi, lambda, alpha, steps);
        xi[k] = base - h;
        const Complex minus = nested_difference(m, xi, lambda, alpha, steps);
        xi[k] = base;
        ++alpha[k];
        return (plus - minus) / (2.0 * h);
    }
    return m(xi, lambda);
}

std::string describe_point(std::span<const double> xi, Complex lambda) {
    std::ostringstream os;
    os.precision(17);
    os << "xi=(";
    for (std::size_t i = 0; i < xi.size(); ++i) os << (i ? "," : "") << xi[i];
    os << ") lambda=" << lambda.real() << (lambda.imag() < 0 ? "" : "+") << lambda.imag() << "i";
    return os.str();
}

int default_alpha_cap(int dimension, int max_alpha) {
    return max_alpha >= 0 ? max_alpha : dimension + 1;
}

}  // namespace

std::vector<double> log_spaced(double lo, double hi, int count) {
    if (count < 1 || !(lo > 0.0) || !(hi >= lo)) throw InvalidArgument("log_spaced: bad range");
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (int i = 0; i < count; ++i) out[i] = std::pow(10.0, a + (b - a) * i / (count - 1));
    return out;
}

std::vector<std::vector<double>> axis_and_diagonal_directions(int dimension) {
    if (dimension < 1) throw InvalidArgument("directions: dimension must be >= 1");
    std::vector<std::vector<double>> dirs;
    for (int k = 0; k < dimension; ++k) {
        std::vector<double> e(dimension, 0.0);
        e[k] = 1.0;
        dirs.push_back(std::move(e));
    }
    if (dimension >= 2) dirs.emplace_back(dimension, 1.0 / std::sqrt(static_cast<double>(dimension)));
    return dirs;
}

void SectorSample::validate() const {
    if (lambda_moduli.empty() || arg_fractions.empty() || xi_moduli.empty() || directions.empty()) {
        throw InvalidArgument("SectorSample: lists must be non-empty");
    }
    if (!(lambda0 >= 0.0)) throw InvalidArgument("SectorSample: lambda0 must be >= 0");
    if (!(theta > 0.0 && theta < std::numbers::pi)) throw InvalidArgument("SectorSample: theta must lie in (0, pi)");
    for (double r : lambda_moduli) {
        if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("SectorSample: lambda moduli must be positive");
    }
    for (double r : xi_moduli) {
        if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("SectorSample: xi moduli must be positive");
    }
    for (double f : arg_fractions) {
        if (!(f > -1.0 && f < 1.0)) throw InvalidArgument("SectorSample: arg fractions must lie in (-1, 1)");
    }
    const std::size_t n = directions.front().size();
    for (const auto& d : directions) {
        if (d.size() != n || n == 0) throw InvalidArgument("SectorSample: direction lengths differ");
    }
}

SectorSample SectorSample::defaults(double lambda0, double theta, int dimension) {
    SectorSample s;
    s.lambda0 = lambda0;
    s.theta = theta;
    s.lambda_moduli = log_spaced(1e-3, 1e3, 32);
    s.xi_moduli = log_spaced(1e-3, 1e3, 32);
    s.arg_fractions = {0.0, 0.5, -0.5, 0.99, -0.99};
    s.directions = axis_and_diagonal_directions(dimension);
    return s;
}

std::vector<std::vector<int>> multi_indices(int dimension, int max_order) {
    std::vector<std::vector<int>> out;
    std::vector<int> current(dimension, 0);
    for (int order = 0; order <= max_order; ++order) enumerate_indices(dimension, order, current, 0, out);
    return out;
}

Complex finite_difference_derivative(const Symbol& m, std::span<const double> xi, Complex lambda,
                                     std::span<const int> alpha) {
    std::vector<double> point(xi.begin(), xi.end());
    std::vector<int> a(alpha.begin(), alpha.end());
    const double norm = std::sqrt(squared_norm(xi));
    std::vector<double> steps(point.size());
    for (std::size_t k = 0; k < point.size(); ++k) steps[k] = kRelativeStep * std::max(std::abs(point[k]), norm);
    return nested_difference(m, point, lambda, a, steps);
}

const AlphaRecord& MultiplierReport::record(std::span<const int> alpha) const {
    for (const auto& r : records) {
        if (std::equal(r.alpha.begin(), r.alpha.end(), alpha.begin(), alpha.end())) return r;
    }
    throw InvalidArgument("MultiplierReport: multi-index not scanned");
}

double MultiplierReport::max_constant() const {
    double c = 0.0;
    for (const auto& r : records) c = std::max(c, r.constant);
    return c;
}

MultiplierReport multiplier_order_scan(const std::string& symbol_id, const Symbol& m, double order,
                                       const SectorSample& sample, int max_alpha, double ceiling) {
    sample.validate();
    if (max_alpha < 0 || max_alpha > 4) throw InvalidArgument("multiplier_order_scan: max_alpha must be in [0, 4]");
    const int n = sample.dimension();
    const auto alphas = multi_indices(n, max_alpha);

    MultiplierReport report;
    report.symbol_id = symbol_id;
    report.order = order;
    report.lambda0 = sample.lambda0;
    report.theta = sample.theta;
    report.sample_size = sample.size();
    report.relative_step = kRelativeStep;
    report.ceiling = ceiling;
    for (const auto& a : alphas) report.records.push_back({a, 0.0, {}, {}});

    std::vector<double> xi(n);
    for (double r : sample.lambda_moduli) {
        for (double f : sample.arg_fractions) {
            const Complex lambda = sample.lambda0 + std::polar(r, f * sample.theta);
            const double lambda_root = std::sqrt(std::abs(lambda));
            for (double rho : sample.xi_moduli) {
                const double weight = std::pow(lambda_root + rho, order);
                for (const auto& dir : sample.directions) {
                    for (int k = 0; k < n; ++k) xi[k] = rho * dir[k];
                    for (auto& rec : report.records) {
                        const Complex d = finite_difference_derivative(m, xi, lambda, rec.alpha);
                        if (!std::isfinite(d.real()) || !std::isfinite(d.imag())) {
                            throw EvaluationFailure("symbol '" + symbol_id + "' non-finite at " +
                                                    describe_point(xi, lambda));
                        }
                        int total = 0;
                        for (int a : rec.alpha) total += a;
                        const double ratio = std::abs(d) * std::pow(rho, total) / weight;
                        if (ratio > rec.constant || rec.argmax_xi.empty()) {
                            rec.constant = std::max(rec.constant, ratio);
                            rec.argmax_xi = xi;
                            rec.argmax_lambda = lambda;
                        }
                    }
                }
            }
        }
    }
    report.pass = std::all_of(report.records.begin(), report.records.end(), [&](const AlphaRecord& r) {
        return std::isfinite(r.constant) && r.constant <= ceiling;
    });
    return report;
}

std::vector<NamedSymbol> example_symbols() {
    auto s_of = [](std::span<const double> xi) { return squared_norm(xi); };
    return {
        {"lambda", 2.0, [](std::span<const double>, Complex l) { return l; }, false},
        {"xi^2", 2.0, [=](std::span<const double> xi, Complex) { return Complex(s_of(xi)); }, false},
        {"xi^4", 4.0, [=](std::span<const double> xi, Complex) { const double s = s_of(xi); return Complex(s * s); }, false},
        {"(lambda+xi^2)^(1/2)", 1.0, [=](std::span<const double> xi, Complex l) { return std::sqrt(l + s_of(xi)); }, false},
        {"(lambda+xi^2)^(-1/2)", -1.0, [=](std::span<const double> xi, Complex l) { return 1.0 / std::sqrt(l + s_of(xi)); }, false},
        {"xi/(1+xi^2)^(1/2)", 0.0, [=](std::span<const double> xi, Complex) {
             const double s = s_of(xi);
             return Complex(std::sqrt(s / (1.0 + s)));
         }, false},
        {"one", 2.0, [](std::span<const double>, Complex) { return Complex(1.0); }, true},
    };
}

NamedSymbol find_example_symbol(const std::string& id) {
    for (auto& s : example_symbols()) {
        if (s.id == id) return s;
    }
    throw InvalidArgument("unknown symbol id '" + id + "'");
}

std::vector<MultiplierReport> example_suite(const SectorSample& sample, int max_alpha, double ceiling) {
    sample.validate();
    const int cap = default_alpha_cap(sample.dimension(), max_alpha);
    std::vector<MultiplierReport> reports;
    for (const auto& sym : example_symbols()) {
        SectorSample use = sample;
        if (sym.needs_shifted_sector && use.lambda0 <= 0.0) use.lambda0 = 1.0;
        reports.push_back(multiplier_order_scan(sym.id, sym.fn, sym.order, use, cap, ceiling));
    }
    return reports;
}

Symbol lemma24_entry(int j, int k, int l) {
    if (j < 0 || j > 2) throw InvalidArgument("lemma24_entry: j must be 0, 1 or 2");
    if (k < 0 || k > 2 || l < 0 || l > 2) throw InvalidArgument("lemma24_entry: entry out of range");
    return [=](std::span<const double> xi, Complex lambda) { return scaled_resolvent_symbol(j, xi, lambda)(k, l); };
}

std::vector<MultiplierReport> lemma24_matrix_scan(int j, const SectorSample& sample, int max_alpha, double ceiling) {
    if (j < 0 || j > 2) throw InvalidArgument("lemma24_matrix_scan: j must be 0, 1 or 2");
    sample.validate();
    if (!(sample.lambda0 > 0.0)) throw InvalidArgument("lemma24_matrix_scan: requires lambda0 > 0");
    if (!(sample.theta < characteristic_roots().theta0)) {
        throw InvalidArgument("lemma24_matrix_scan: requires theta < theta0");
    }
    const int cap = default_alpha_cap(sample.dimension(), max_alpha);
    std::vector<MultiplierReport> reports;
    for (int k = 0; k < 3; ++k) {
        for (int l = 0; l < 3; ++l) {
            const std::string id = "M" + std::to_string(j) + "_" + std::to_string(k + 1) + std::to_string(l + 1);
            reports.push_back(multiplier_order_scan(id, lemma24_entry(j, k, l), 0.0, sample, cap, ceiling));
        }
    }
    return reports;
}

double nonsectoriality_witness(double k) {
    if (!(k > 0.0) || !std::isfinite(k)) throw InvalidArgument("nonsectoriality_witness: k must be positive");
    const double lambda = 1.0 / (k * k);
    const double s = 1.0 / (k * k);
    Complex denom = 1.0;
    for (const Complex& g : characteristic_roots().gammas()) denom *= lambda + g * s;
    return std::abs(lambda * (1.0 + s) * s / denom);
}

double nonsectoriality_witness_closed_form(double k) { return (k * k + 1.0) / 5.0; }

double operator_norm_probe(const Symbol& m, Complex lambda, const std::vector<std::vector<double>>& xi_grid) {
    if (xi_grid.empty()) throw InvalidArgument("operator_norm_probe: empty grid");
    double sup = 0.0;
    for (const auto& xi : xi_grid) {
        const Complex v = m(xi, lambda);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw EvaluationFailure("operator_norm_probe: non-finite symbol at " + describe_point(xi, lambda));
        }
        sup = std::max(sup, std::abs(v));
    }
    return sup;
}

}  // namespace thermoplate
