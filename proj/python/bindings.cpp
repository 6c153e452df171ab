#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "thermoplate/errors.hpp"
#include "thermoplate/multiplier.hpp"
#include "thermoplate/plate_fd.hpp"
#include "thermoplate/report_io.hpp"
#include "thermoplate/run_config.hpp"
#include "thermoplate/symbol.hpp"
#include "thermoplate/torus.hpp"

namespace py = pybind11;
using namespace thermoplate;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (3, *grid.points) array -> StateField
StateField state_from_array(const TorusGrid& grid, const Array& a) {
    if (a.ndim() != grid.dimension() + 1 || a.shape(0) != 3)
        throw InvalidArgument("state array must have shape (3, *points)");
    for (int k = 0; k < grid.dimension(); ++k)
        if (a.shape(k + 1) != grid.points[k]) throw InvalidArgument("state array does not match the grid");
    StateField f(grid);
    const double* p = a.data();
    const std::size_t n = grid.size();
    for (int c = 0; c < 3; ++c) std::copy(p + c * n, p + (c + 1) * n, f.component(c).begin());
    return f;
}

Array state_to_array(const StateField& f) {
    std::vector<py::ssize_t> shape{3};
    for (int m : f.grid.points) shape.push_back(m);
    Array out(shape);
    double* p = out.mutable_data();
    const std::size_t n = f.grid.size();
    for (int c = 0; c < 3; ++c) std::copy(f.component(c).begin(), f.component(c).end(), p + c * n);
    return out;
}

BCVariant bc_from_name(const std::string& name, double beta, double mu, double b) {
    if (name == "free" || name == "free_beta") return BCVariant::free_beta(beta);
    if (name == "free_2d") return BCVariant::free_2d(mu);
    if (name == "lt") return BCVariant::lt_variant(mu, b);
    throw InvalidArgument("bc must be one of free, free_beta, free_2d, lt");
}

DomainSpec domain_from_name(const std::string& name) {
    if (name == "interval") return DomainSpec::interval();
    if (name == "rectangle") return DomainSpec::rectangle();
    throw InvalidArgument("domain must be 'interval' or 'rectangle'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "thermoelastic plate: symbols, torus semigroup, bounded-domain generator";
    m.attr("__version__") = tool_version();

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<SingularParameter>(m, "SingularParameter", PyExc_ArithmeticError);
    py::register_exception<EvaluationFailure>(m, "EvaluationFailure", PyExc_ArithmeticError);
    py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_RuntimeError);
    py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);

    py::class_<CharacteristicRoots>(m, "CharacteristicRoots")
        .def_readonly("gamma1", &CharacteristicRoots::gamma1)
        .def_readonly("gamma2", &CharacteristicRoots::gamma2)
        .def_readonly("gamma3", &CharacteristicRoots::gamma3)
        .def_readonly("theta0", &CharacteristicRoots::theta0)
        .def("gammas", &CharacteristicRoots::gammas)
        .def("max_residual", &CharacteristicRoots::max_residual);
    m.def("characteristic_roots", &characteristic_roots, py::return_value_policy::copy);
    m.def("characteristic_roots_of", &characteristic_roots_of, py::arg("c2_c1_c0"));
    m.def("symbol_matrix", py::overload_cast<double>(&symbol_matrix), py::arg("s"));
    m.def("determinant", py::overload_cast<double, Complex>(&determinant), py::arg("s"), py::arg("lam"));
    m.def("determinant_shifted_roots", &determinant_shifted_roots, py::arg("s"), py::arg("lam"));
    m.def("resolvent_matrix", py::overload_cast<double, Complex>(&resolvent_matrix), py::arg("s"), py::arg("lam"));
    m.def("scaled_resolvent_symbol", py::overload_cast<int, double, Complex>(&scaled_resolvent_symbol),
          py::arg("j"), py::arg("s"), py::arg("lam"));
    m.def("in_shifted_sector", &in_shifted_sector, py::arg("lam"), py::arg("lambda0"), py::arg("theta"));

    py::class_<MultiplierReport>(m, "MultiplierReport")
        .def_readonly("symbol_id", &MultiplierReport::symbol_id)
        .def_readonly("order", &MultiplierReport::order)
        .def_readonly("pass_", &MultiplierReport::pass)
        .def_property_readonly("constants",
                               [](const MultiplierReport& r) {
                                   std::vector<std::pair<std::vector<int>, double>> out;
                                   for (const auto& a : r.records) out.emplace_back(a.alpha, a.constant);
                                   return out;
                               })
        .def("max_constant", &MultiplierReport::max_constant);
    auto sample = [](double lambda0, double theta_fraction, int dimension) {
        return SectorSample::defaults(lambda0, theta_fraction * characteristic_roots().theta0, dimension);
    };
    m.def(
        "example_suite",
        [=](double lambda0, double theta_fraction, int dimension, int max_alpha) {
            return example_suite(sample(lambda0, theta_fraction, dimension), max_alpha);
        },
        py::arg("lambda0") = 1.0, py::arg("theta_fraction") = 0.95, py::arg("dimension") = 2, py::arg("max_alpha") = 3);
    m.def(
        "lemma24_matrix_scan",
        [=](int j, double lambda0, double theta_fraction, int dimension, int max_alpha) {
            return lemma24_matrix_scan(j, sample(lambda0, theta_fraction, dimension), max_alpha);
        },
        py::arg("j"), py::arg("lambda0") = 1.0, py::arg("theta_fraction") = 0.95, py::arg("dimension") = 2,
        py::arg("max_alpha") = 3);
    m.def(
        "multiplier_order_scan",
        [=](const std::function<Complex(std::vector<double>, Complex)>& fn, double order, double lambda0,
            double theta_fraction, int dimension, int max_alpha) {
            const Symbol sym = [&](std::span<const double> xi, Complex l) {
                return fn(std::vector<double>(xi.begin(), xi.end()), l);
            };
            return multiplier_order_scan("python", sym, order, sample(lambda0, theta_fraction, dimension), max_alpha);
        },
        py::arg("symbol"), py::arg("order"), py::arg("lambda0") = 1.0, py::arg("theta_fraction") = 0.95,
        py::arg("dimension") = 2, py::arg("max_alpha") = 2);
    m.def("nonsectoriality_witness", &nonsectoriality_witness, py::arg("k"));

    py::class_<TorusGrid>(m, "TorusGrid")
        .def(py::init<std::vector<int>, std::vector<double>>(), py::arg("points"), py::arg("lengths"))
        .def_static("cube", &TorusGrid::cube, py::arg("dimension"), py::arg("points"), py::arg("period"))
        .def_readonly("points", &TorusGrid::points)
        .def_readonly("lengths", &TorusGrid::lengths)
        .def("size", &TorusGrid::size);
    m.def("mode_exponential", py::overload_cast<double, double>(&mode_exponential), py::arg("s"), py::arg("t"));
    m.def(
        "evolve", [](const TorusGrid& g, const Array& u, double t) { return state_to_array(evolve(state_from_array(g, u), t)); },
        py::arg("grid"), py::arg("state"), py::arg("t"));
    m.def(
        "apply_resolvent",
        [](const TorusGrid& g, const Array& f, double lam) {
            return state_to_array(apply_resolvent(state_from_array(g, f), lam));
        },
        py::arg("grid"), py::arg("state"), py::arg("lam"));
    m.def(
        "e_norm", [](const TorusGrid& g, const Array& u, int j) { return e_norm(state_from_array(g, u), j); },
        py::arg("grid"), py::arg("state"), py::arg("j"));
    m.def(
        "random_smooth_state",
        [](const TorusGrid& g, std::uint64_t seed, int kmax) { return state_to_array(random_smooth_state(g, seed, kmax)); },
        py::arg("grid"), py::arg("seed"), py::arg("max_wavenumber") = 4);

    py::class_<DiscreteGenerator>(m, "DiscreteGenerator")
        .def_readonly("matrix", &DiscreteGenerator::matrix)
        .def_readonly("metric", &DiscreteGenerator::metric)
        .def_readonly("intervals", &DiscreteGenerator::intervals)
        .def("size", &DiscreteGenerator::size)
        .def("layout", &DiscreteGenerator::layout)
        .def("energy_norm", &DiscreteGenerator::energy_norm);
    m.def(
        "assemble_generator",
        [](const std::string& domain, std::vector<int> grid, const std::string& bc, double beta, double mu, double b) {
            return assemble_generator(domain_from_name(domain), grid, bc_from_name(bc, beta, mu, b));
        },
        py::arg("domain"), py::arg("grid"), py::arg("bc") = "free", py::arg("beta") = 0.5, py::arg("mu") = 0.3,
        py::arg("b") = 1.0);

    py::class_<SpectrumReport>(m, "SpectrumReport")
        .def_readonly("eigenvalues", &SpectrumReport::eigenvalues)
        .def_readonly("zero_tol", &SpectrumReport::zero_tol)
        .def_readonly("kernel_dimension", &SpectrumReport::kernel_dimension)
        .def_readonly("near_zero_count", &SpectrumReport::near_zero_count)
        .def_readonly("decay_margin", &SpectrumReport::decay_margin)
        .def_readonly("max_real_part", &SpectrumReport::max_real_part);
    m.def("spectrum", &spectrum, py::arg("generator"), py::arg("zero_tol") = -1.0);

    py::class_<KernelProjection>(m, "KernelProjection")
        .def_readonly("kernel_basis", &KernelProjection::kernel_basis)
        .def_readonly("generalized_kernel_dimension", &KernelProjection::generalized_kernel_dimension)
        .def_readonly("projection", &KernelProjection::projection)
        .def_readonly("projector_norm", &KernelProjection::projector_norm);
    m.def("kernel_and_projection", &kernel_and_projection, py::arg("generator"), py::arg("zero_tol") = -1.0);
    m.def("evolve_bounded", &evolve_bounded, py::arg("generator"), py::arg("u0"), py::arg("t"),
          py::arg("project_off_kernel"));

    py::class_<DecayReport>(m, "DecayReport")
        .def_readonly("horizon", &DecayReport::horizon)
        .def_readonly("spectral_rate", &DecayReport::spectral_rate)
        .def_readonly("pass_", &DecayReport::pass)
        .def_property_readonly("fitted_rates",
                               [](const DecayReport& r) {
                                   std::vector<double> v;
                                   for (const auto& s : r.samples) v.push_back(s.fitted_rate);
                                   return v;
                               })
        .def("mean_fitted_rate", &DecayReport::mean_fitted_rate);
    m.def(
        "decay_rate_experiment",
        [](const DiscreteGenerator& g, int samples, double horizon, std::uint64_t seed, bool project) {
            return decay_rate_experiment(BoundedEvolver(g), samples, horizon, seed, project);
        },
        py::arg("generator"), py::arg("samples") = 3, py::arg("horizon") = 0.0, py::arg("seed") = 20240601,
        py::arg("project") = true);

    py::class_<ConvergenceStudy>(m, "ConvergenceStudy")
        .def_readonly("orders", &ConvergenceStudy::orders)
        .def_readonly("order", &ConvergenceStudy::order);
    m.def(
        "convergence_study",
        [](const std::string& domain, const std::string& bc, std::vector<int> grids, double beta, double mu, double b) {
            return convergence_study(domain_from_name(domain), bc_from_name(bc, beta, mu, b), grids);
        },
        py::arg("domain"), py::arg("bc"), py::arg("grids"), py::arg("beta") = 0.5, py::arg("mu") = 0.3,
        py::arg("b") = 1.0);

    m.def(
        "parse_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
        py::arg("text"), "Normalize a key = value config (unknown keys raise ValueError).");
    m.def("config_keys", &run_config_keys);
}
