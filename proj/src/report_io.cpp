#include "thermoplate/report_io.hpp"

#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

namespace thermoplate {

using ojson = nlohmann::ordered_json;

namespace {

std::string alpha_string(const std::vector<int>& alpha) {
    std::string s;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (i) s += ";";
        s += std::to_string(alpha[i]);
    }
    return s;
}

ojson complex_json(Complex z) { return ojson::array({z.real(), z.imag()}); }

// NaN and infinities as strings so the JSON stays valid.
ojson number(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

}  // namespace

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

std::string roots_json(const CharacteristicRoots& r) {
    ojson j;
    j["gamma1"] = r.gamma1;
    j["gamma2"] = complex_json(r.gamma2);
    j["gamma3"] = complex_json(r.gamma3);
    j["theta0"] = r.theta0;
    ojson res = ojson::array();
    for (auto g : r.gammas()) res.push_back(std::abs(plate_polynomial(-g)));
    j["residuals"] = res;
    const auto gs = r.gammas();
    j["product"] = complex_json(gs[0] * gs[1] * gs[2]);
    j["sum"] = complex_json(gs[0] + gs[1] + gs[2]);
    return j.dump(2) + "\n";
}

std::string roots_text(const CharacteristicRoots& r) {
    std::string out;
    const auto gs = r.gammas();
    for (int i = 0; i < 3; ++i)
        out += fmt::format("gamma{} = {:.17g} {:+.17g}i   |p(-gamma{})| = {:.3e}\n", i + 1, gs[i].real(), gs[i].imag(),
                           i + 1, std::abs(plate_polynomial(-gs[i])));
    out += fmt::format("theta0 = {:.17g}\n", r.theta0);
    return out;
}

std::string witness_csv(const std::vector<double>& k_list) {
    std::string out = "k,witness,closed_form,relative_difference\n";
    for (double k : k_list) {
        const double w = nonsectoriality_witness(k);
        const double c = nonsectoriality_witness_closed_form(k);
        out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", k, w, c, std::abs(w - c) / c);
    }
    return out;
}

std::string multiplier_csv(const std::vector<MultiplierReport>& reports) {
    std::string out = "symbol,order,lambda0,theta,alpha,constant,argmax_xi_norm,argmax_lambda_re,argmax_lambda_im,pass\n";
    for (const auto& r : reports) {
        for (const auto& a : r.records) {
            double xn = 0.0;
            for (double x : a.argmax_xi) xn += x * x;
            out += fmt::format("\"{}\",{:.17g},{:.17g},{:.17g},{},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", r.symbol_id,
                               r.order, r.lambda0, r.theta, alpha_string(a.alpha), a.constant, std::sqrt(xn),
                               a.argmax_lambda.real(), a.argmax_lambda.imag(), r.pass ? 1 : 0);
        }
    }
    return out;
}

std::string multiplier_json(const std::vector<MultiplierReport>& reports) {
    ojson arr = ojson::array();
    for (const auto& r : reports) {
        ojson j;
        j["symbol"] = r.symbol_id;
        j["order"] = r.order;
        j["lambda0"] = r.lambda0;
        j["theta"] = r.theta;
        j["sample_size"] = r.sample_size;
        j["relative_step"] = r.relative_step;
        j["ceiling"] = r.ceiling;
        j["pass"] = r.pass;
        ojson recs = ojson::array();
        for (const auto& a : r.records)
            recs.push_back({{"alpha", a.alpha},
                            {"constant", number(a.constant)},
                            {"argmax_xi", a.argmax_xi},
                            {"argmax_lambda", complex_json(a.argmax_lambda)}});
        j["records"] = recs;
        arr.push_back(j);
    }
    return arr.dump(2) + "\n";
}

std::string sweep_csv(const ResolventSweep& sweep) {
    std::string out = "lambda_re,lambda_im,bound,argmax_squared_frequency\n";
    for (const auto& r : sweep.rows)
        out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", r.lambda.real(), r.lambda.imag(), r.bound,
                           r.argmax_squared_frequency);
    return out;
}

std::string sweep_json(const ResolventSweep& sweep) {
    ojson j;
    j["j"] = sweep.j;
    j["lambda0"] = sweep.lambda0;
    j["theta"] = sweep.theta;
    if (!sweep.rows.empty()) {
        const auto& m = sweep.max_row();
        j["max_bound"] = m.bound;
        j["max_lambda"] = complex_json(m.lambda);
    }
    j["rows"] = sweep.rows.size();
    return j.dump(2) + "\n";
}

std::string decay_csv(const DecayReport& report) {
    std::string out = "sample,t,energy_norm\n";
    for (std::size_t s = 0; s < report.samples.size(); ++s)
        for (std::size_t i = 0; i < report.samples[s].times.size(); ++i)
            out += fmt::format("{},{:.17g},{:.17g}\n", s, report.samples[s].times[i], report.samples[s].norms[i]);
    return out;
}

std::string decay_json(const DecayReport& report) {
    ojson j;
    j["horizon"] = report.horizon;
    j["spectral_rate"] = number(report.spectral_rate);
    j["projected"] = report.projected;
    j["pass"] = report.pass;
    ojson s = ojson::array();
    for (const auto& d : report.samples)
        s.push_back({{"fitted_rate", d.fitted_rate}, {"relative_error", number(d.relative_error)}, {"decaying", d.decaying}});
    j["samples"] = s;
    return j.dump(2) + "\n";
}

std::string convergence_csv(const ConvergenceStudy& study) {
    std::string out = "grid,index,re,im,difference\n";
    for (const auto& row : study.rows)
        for (std::size_t e = 0; e < row.eigenvalues.size(); ++e)
            out += fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", row.intervals, e, row.eigenvalues[e].real(),
                               row.eigenvalues[e].imag(), e < row.differences.size() ? row.differences[e] : 0.0);
    return out;
}

std::string convergence_json(const ConvergenceStudy& study) {
    ojson j;
    ojson orders = ojson::array();
    for (double o : study.orders) orders.push_back(number(o));
    j["orders"] = orders;
    j["order"] = number(study.order);
    ojson grids = ojson::array();
    for (const auto& r : study.rows) grids.push_back(r.intervals);
    j["grids"] = grids;
    return j.dump(2) + "\n";
}

}  // namespace thermoplate
