// thermoplate: batch runner for the symbol, torus and bounded-domain analyses.
//
// Exit codes: 0 ok, 1 usage, 2 check failure, 3 numerical failure.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "thermoplate/errors.hpp"
#include "thermoplate/multiplier.hpp"
#include "thermoplate/plate_fd.hpp"
#include "thermoplate/report_io.hpp"
#include "thermoplate/run_config.hpp"
#include "thermoplate/symbol.hpp"
#include "thermoplate/torus.hpp"

namespace fs = std::filesystem;
using namespace thermoplate;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_check = 2;
constexpr int exit_numerical = 3;

constexpr const char* output_root_env = "THERMOPLATE_OUT";

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Collects data files and checks, then writes everything from one place.
class Run {
public:
    explicit Run(RunConfig cfg) : config_(std::move(cfg)), start_(std::chrono::steady_clock::now()) {
        const std::time_t now = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        started_ = buf;
    }

    const RunConfig& config() const { return config_; }

    void add_file(const std::string& name, std::string contents) { files_.emplace_back(name, std::move(contents)); }
    void check(const std::string& name, bool pass, const std::string& detail) {
        checks_.push_back({name, pass, detail});
    }
    bool all_passed() const {
        for (const auto& c : checks_)
            if (!c.pass) return false;
        return true;
    }

    fs::path output_dir() const {
        if (!config_.output_dir.empty()) return config_.output_dir;
        const char* root = std::getenv(output_root_env);
        return fs::path(root && *root ? root : "thermoplate_out") / config_.command;
    }

    void write() {
        const fs::path dir = output_dir();
        fs::create_directories(dir);
        RunManifest m;
        m.config = config_;
        m.version = tool_version();
        m.started_utc = started_;
        m.checks = checks_;
        for (const auto& [name, data] : files_) {
            std::ofstream out(dir / name, std::ios::binary);
            out << data;
            if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
            m.artifacts.push_back({name, sha256_hex(data), data.size()});
        }
        {
            std::ofstream out(dir / "config.txt", std::ios::binary);
            out << serialize_config(config_);
        }
        m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::ofstream out(dir / "manifest.json", std::ios::binary);
        out << manifest_json(m);
        for (const auto& c : checks_)
            std::cerr << fmt::format("[{}] {}: {}\n", c.pass ? "PASS" : "FAIL", c.name, c.detail);
        std::cerr << "outputs in " << dir.string() << "\n";
    }

private:
    RunConfig config_;
    std::chrono::steady_clock::time_point start_;
    std::string started_;
    std::vector<std::pair<std::string, std::string>> files_;
    std::vector<CheckResult> checks_;
};

double sector_theta(const RunConfig& c) {
    if (!(c.theta_fraction > 0.0 && c.theta_fraction < 1.0))
        throw InvalidArgument("theta_fraction must lie in (0, 1)");
    return c.theta_fraction * characteristic_roots().theta0;
}

DomainSpec domain_of(const RunConfig& c) {
    if (c.domain == "interval") return DomainSpec::interval();
    if (c.domain == "rectangle") return DomainSpec::rectangle();
    throw InvalidArgument("domain must be 'interval' or 'rectangle'");
}

BCVariant bc_of(const RunConfig& c) {
    if (c.bc == "free" || c.bc == "free_beta") return BCVariant::free_beta(c.beta);
    if (c.bc == "free_2d") return BCVariant::free_2d(c.mu);
    if (c.bc == "lt") return BCVariant::lt_variant(c.mu, c.b);
    throw InvalidArgument("bc must be one of free, free_beta, free_2d, lt");
}

std::string json_flag(bool b) { return b ? "true" : "false"; }

// ---- commands ----

void cmd_roots(Run& run, bool perturb) {
    const CharacteristicRoots r = perturb ? characteristic_roots_of({1.0, 2.0, 1.0 + 1e-6}) : characteristic_roots();
    const auto gs = r.gammas();
    const double pi = std::numbers::pi;
    double vieta = std::max(std::abs(gs[0] * gs[1] * gs[2] - 1.0), std::abs(gs[0] + gs[1] + gs[2] - 1.0));
    run.check("gamma1 in (0,1)", r.gamma1 > 0.0 && r.gamma1 < 1.0, format_double(r.gamma1));
    run.check("Re gamma2 in (0,1/2)", r.gamma2.real() > 0.0 && r.gamma2.real() < 0.5, format_double(r.gamma2.real()));
    run.check("gamma2 = conj(gamma3), Im gamma2 > 0", r.gamma2 == std::conj(r.gamma3) && r.gamma2.imag() > 0.0, "");
    run.check("theta0 in (pi/2,pi)", r.theta0 > pi / 2 && r.theta0 < pi, format_double(r.theta0));
    run.check("residual <= 1e-12", r.max_residual() <= 1e-12, format_double(r.max_residual()));
    run.check("Vieta <= 1e-12", vieta <= 1e-12, format_double(vieta));
    const std::string js = roots_json(r);
    run.add_file("roots.json", js);
    std::cout << (run.config().json ? js : roots_text(r));
}

void cmd_witness(Run& run) {
    const auto& ks = run.config().k_list;
    if (ks.empty()) throw UsageError("witness: empty k list");
    for (double k : ks)
        if (!(k > 0.0)) throw UsageError("witness: k must be positive");
    const std::string csv = witness_csv(ks);
    run.add_file("witness.csv", csv);
    std::cout << csv;
    double worst = 0.0;
    for (double k : ks) {
        const double c = nonsectoriality_witness_closed_form(k);
        worst = std::max(worst, std::abs(nonsectoriality_witness(k) - c) / c);
    }
    run.check("witness = (k^2+1)/5 to 1e-12", worst <= 1e-12, format_double(worst));
}

void cmd_multscan(Run& run) {
    const auto& c = run.config();
    const SectorSample sample = SectorSample::defaults(c.lambda0, sector_theta(c), c.dimension);
    std::vector<MultiplierReport> reports;
    if (c.symbol == "all") {
        reports = example_suite(sample, c.max_alpha);
    } else {
        const NamedSymbol s = find_example_symbol(c.symbol);
        reports.push_back(multiplier_order_scan(s.id, s.fn, s.order, sample, c.max_alpha));
    }
    run.add_file("multscan.csv", multiplier_csv(reports));
    run.add_file("multscan.json", multiplier_json(reports));
    for (const auto& r : reports) {
        run.check("order scan " + r.symbol_id, r.pass, "max C_alpha = " + format_double(r.max_constant()));
        std::cout << fmt::format("{:<24} order {:>4} max C = {:.6g} {}\n", r.symbol_id, r.order, r.max_constant(),
                                 r.pass ? "pass" : "FAIL");
    }
}

void cmd_lemma24(Run& run) {
    const auto& c = run.config();
    const SectorSample sample = SectorSample::defaults(c.lambda0, sector_theta(c), c.dimension);
    const auto reports = lemma24_matrix_scan(c.j, sample, c.max_alpha);
    run.add_file("lemma24.csv", multiplier_csv(reports));
    run.add_file("lemma24.json", multiplier_json(reports));
    for (const auto& r : reports) {
        run.check("order-0 scan " + r.symbol_id, r.pass, "max C_alpha = " + format_double(r.max_constant()));
        std::cout << fmt::format("{:<8} max C = {:.6g} {}\n", r.symbol_id, r.max_constant(), r.pass ? "pass" : "FAIL");
    }
}

void cmd_sweep(Run& run) {
    const auto& c = run.config();
    const double theta = sector_theta(c);
    const std::vector<double> fractions{0.0, 0.5, -0.5, 0.99, -0.99};
    const auto moduli = log_spaced(1e-3, 1e3, 32);
    const TorusGrid grid = TorusGrid::cube(c.dimension, c.torus_points, c.torus_length);
    const ResolventSweep sweep = resolvent_bound_sweep(c.j, c.lambda0, theta, fractions, moduli, grid);
    const TorusGrid fine = TorusGrid::cube(c.dimension, 2 * c.torus_points, c.torus_length);
    const ResolventSweep refined = resolvent_bound_sweep(c.j, c.lambda0, theta, fractions, moduli, fine);
    const double b = sweep.max_row().bound, bf = refined.max_row().bound;
    run.add_file("sweep.csv", sweep_csv(sweep));
    run.add_file("sweep.json", sweep_json(sweep));
    run.check("sup B(lambda) finite", std::isfinite(b), format_double(b));
    const double drift = std::abs(bf - b) / b;
    run.check("grid-stable under M -> 2M (1e-6)", drift <= 1e-6, format_double(drift));
    std::cout << fmt::format("j = {}  sup B = {:.12g}  (2M: {:.12g})\n", c.j, b, bf);
}

void cmd_evolve(Run& run) {
    const auto& c = run.config();
    if (!(c.time >= 0.0)) throw InvalidArgument("time must be >= 0");
    const TorusGrid grid = TorusGrid::cube(c.dimension, c.torus_points, c.torus_length);
    const StateField u0 = random_smooth_state(grid, c.seed, 4);
    const EvolveResult full = evolve_with_diagnostics(u0, c.time);
    const StateField half = evolve(evolve(u0, 0.5 * c.time), 0.5 * c.time);
    const double semigroup = relative_difference(half, full.state);
    std::ostringstream s0, s1;
    write_state(s0, u0);
    write_state(s1, full.state);
    run.add_file("initial.tplt", s0.str());
    run.add_file("final.tplt", s1.str());
    std::string csv = "t,e0_norm,e1_norm\n";
    for (int i = 0; i <= 20; ++i) {
        const double t = c.time * i / 20.0;
        const StateField st = evolve(u0, t);
        csv += fmt::format("{:.17g},{:.17g},{:.17g}\n", t, e_norm(st, 0), e_norm(st, 1));
    }
    run.add_file("norms.csv", csv);
    run.check("semigroup property (1e-9)", semigroup <= 1e-9, format_double(semigroup));
    run.check("real output (imag residue <= 1e-12)", full.imag_residue <= 1e-12, format_double(full.imag_residue));
    std::cout << fmt::format("evolved to t = {} on {}^{} grid; semigroup residual {:.3e}\n", c.time, c.torus_points,
                             c.dimension, semigroup);
}

void cmd_spectrum(Run& run) {
    const auto& c = run.config();
    const DiscreteGenerator gen = assemble_generator(domain_of(c), c.grid, bc_of(c));
    const SpectrumReport rep = spectrum(gen, c.zero_tol);
    std::ostringstream csv, trip;
    write_spectrum_csv(csv, rep);
    write_triplets(trip, gen);
    run.add_file("spectrum.csv", csv.str());
    run.add_file("spectrum.json", spectrum_json(rep));
    run.add_file("generator.txt", trip.str());
    run.check("max Re lambda <= zero_tol", rep.max_real_part <= rep.zero_tol,
              format_double(rep.max_real_part) + " vs " + format_double(rep.zero_tol));
    if (gen.bc.kind == BCVariant::Kind::lt_variant)
        run.check("no eigenvalue within zero_tol of 0", rep.near_zero_count == 0, std::to_string(rep.near_zero_count));
    std::cout << fmt::format(
        "size {}  zero_tol {:.3e}  max Re {:.3e}  kernel dim {}  near-zero eigenvalues {}  decay margin {:.6g}\n",
        rep.matrix_size, rep.zero_tol, rep.max_real_part, rep.kernel_dimension, rep.near_zero_count, rep.decay_margin);
}

void cmd_decay(Run& run) {
    const auto& c = run.config();
    const DiscreteGenerator gen = assemble_generator(domain_of(c), c.grid, bc_of(c));
    const BoundedEvolver ev(gen, c.zero_tol);
    const DecayReport rep = decay_rate_experiment(ev, c.samples, c.horizon, c.seed, c.project);
    run.add_file("decay.csv", decay_csv(rep));
    run.add_file("decay.json", decay_json(rep));
    run.check("fitted rate within 10% of spectral abscissa", rep.pass,
              format_double(rep.mean_fitted_rate()) + " vs " + format_double(rep.spectral_rate));
    if (gen.bc.kind == BCVariant::Kind::lt_variant)
        run.check("no eigenvalue within zero_tol of 0", ev.cluster_dimension() == 0,
                  std::to_string(ev.cluster_dimension()));
    std::cout << fmt::format("spectral rate {:.6g}  horizon {:.6g}  cluster {}  projected {}\n", rep.spectral_rate,
                             rep.horizon, ev.cluster_dimension(), json_flag(rep.projected));
    for (const auto& s : rep.samples)
        std::cout << fmt::format("  fitted {:.6g}  rel. error {:.3e}\n", s.fitted_rate, s.relative_error);
}

void cmd_converge(Run& run) {
    const auto& c = run.config();
    const ConvergenceStudy st = convergence_study(domain_of(c), bc_of(c), c.grids);
    run.add_file("converge.csv", convergence_csv(st));
    run.add_file("converge.json", convergence_json(st));
    bool ok = !st.orders.empty();
    for (double o : st.orders) ok = ok && o >= 1.5 && o <= 2.5;
    run.check("observed order in [1.5, 2.5]", ok, format_double(st.order));
    for (std::size_t e = 0; e < st.orders.size(); ++e)
        std::cout << fmt::format("eigenvalue {}: {:.10g}{:+.10g}i  order {:.4f}\n", e,
                                 st.rows.back().eigenvalues[e].real(), st.rows.back().eigenvalues[e].imag(),
                                 st.orders[e]);
}

struct Flag {
    std::string key;
    std::string help;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermoplate: thermoelastic plate symbol, semigroup and bounded-domain experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version());
    std::string config_file;
    std::string out_dir;
    app.add_option("--config", config_file, "key = value config file (flags override it)");
    app.add_option("--out", out_dir, std::string("output directory (default $") + output_root_env + "/<command>)");

    // Every config key can be given as --key on every subcommand; each
    // subcommand advertises its relevant subset.
    std::map<std::string, std::string> given;
    auto add_flags = [&](CLI::App* sub, const std::vector<Flag>& flags) {
        for (const auto& f : flags) {
            auto* opt = sub->add_option("--" + f.key, given[f.key], f.help);
            opt->type_name("VALUE");
        }
    };
    const std::vector<Flag> sector_flags{{"lambda0", "sector shift"},
                                         {"theta_fraction", "sector angle as a fraction of theta0"},
                                         {"dimension", "space dimension N"},
                                         {"max_alpha", "largest |alpha|"}};
    const std::vector<Flag> bounded_flags{{"domain", "interval | rectangle"},
                                          {"grid", "intervals per axis (comma list)"},
                                          {"bc", "free | free_beta | free_2d | lt"},
                                          {"beta", "free_beta parameter"},
                                          {"mu", "free_2d / lt parameter"},
                                          {"b", "lt Robin coefficient (> 0)"},
                                          {"zero_tol", "kernel tolerance (<= 0: relative default)"}};

    bool perturb = false;
    bool json = false;
    std::vector<double> k_positional;

    auto* roots = app.add_subcommand("roots", "characteristic roots and theta0");
    roots->add_flag("--json", json, "print JSON instead of text");
    roots->add_flag("--perturb-poly", perturb, "test hook: perturb the cubic")->group("");

    auto* witness = app.add_subcommand("witness", "non-sectoriality witness rows");
    witness->add_option("k", k_positional, "k values (default 1 10 100)");

    auto* multscan = app.add_subcommand("multscan", "multiplier-class order scans");
    add_flags(multscan, sector_flags);
    add_flags(multscan, {{"symbol", "symbol id or 'all'"}});

    auto* lemma24 = app.add_subcommand("lemma24", "order-0 scans of the entries of M^(j)");
    add_flags(lemma24, sector_flags);
    add_flags(lemma24, {{"j", "0, 1 or 2"}});

    auto* sweep = app.add_subcommand("sweep", "resolvent bound sweep over a shifted sector");
    add_flags(sweep, {{"lambda0", "sector shift"},
                      {"theta_fraction", "sector angle fraction"},
                      {"dimension", "torus dimension"},
                      {"torus_points", "points per axis"},
                      {"torus_length", "period"},
                      {"j", "0, 1 or 2"}});

    auto* evolve_cmd = app.add_subcommand("evolve", "spectral semigroup evolution on the torus");
    add_flags(evolve_cmd, {{"dimension", "torus dimension"},
                           {"torus_points", "points per axis"},
                           {"torus_length", "period"},
                           {"time", "final time"},
                           {"seed", "seed for initial data"}});

    auto* spectrum_cmd = app.add_subcommand("spectrum", "bounded-domain generator spectrum");
    add_flags(spectrum_cmd, bounded_flags);

    auto* decay_cmd = app.add_subcommand("decay", "measured exponential decay on a bounded domain");
    add_flags(decay_cmd, bounded_flags);
    add_flags(decay_cmd, {{"samples", "number of random initial states"},
                          {"horizon", "fit horizon (<= 0: automatic)"},
                          {"project", "project off the generalized kernel (true/false)"},
                          {"seed", "seed for initial data"}});

    auto* converge_cmd = app.add_subcommand("converge", "eigenvalue convergence study");
    add_flags(converge_cmd, {{"domain", "interval | rectangle"},
                             {"grids", "nested grid list, e.g. 50,100,200"},
                             {"bc", "free | free_beta | free_2d | lt"},
                             {"beta", "free_beta parameter"},
                             {"mu", "free_2d / lt parameter"},
                             {"b", "lt Robin coefficient"}});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    try {
        RunConfig cfg;
        if (!config_file.empty()) cfg = read_config_file(config_file, cfg);
        cfg.command = command;
        for (const auto& [key, value] : given) {
            const CLI::Option* opt = sub->get_option_no_throw("--" + key);
            if (opt != nullptr && opt->count() > 0) set_config_value(cfg, key, value);
        }
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (json) cfg.json = true;
        if (command == "witness" && !k_positional.empty()) cfg.k_list = k_positional;

        const bool needs_grid = command == "spectrum" || command == "decay";
        if (needs_grid && config_file.empty() && sub->get_option("--grid")->count() == 0)
            throw UsageError(command + ": --grid is required (or give it in --config)");

        Run run(cfg);
        if (command == "roots") cmd_roots(run, perturb);
        else if (command == "witness") cmd_witness(run);
        else if (command == "multscan") cmd_multscan(run);
        else if (command == "lemma24") cmd_lemma24(run);
        else if (command == "sweep") cmd_sweep(run);
        else if (command == "evolve") cmd_evolve(run);
        else if (command == "spectrum") cmd_spectrum(run);
        else if (command == "decay") cmd_decay(run);
        else if (command == "converge") cmd_converge(run);
        run.write();
        return run.all_passed() ? exit_ok : exit_check;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n\n" << sub->help();
        return exit_usage;
    } catch (const InvalidArgument& e) {
        std::cerr << "usage error: " << e.what() << "\n\n" << sub->help();
        return exit_usage;
    } catch (const InvariantViolation& e) {
        std::cerr << "check failure: " << e.what() << "\n";
        return exit_check;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const SingularParameter& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const EvaluationFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical;
    }
}
