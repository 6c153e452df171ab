#include "thermoplate/plate_fd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "dense_lapack.hpp"
#include "thermoplate/errors.hpp"

namespace thermoplate {

DomainSpec DomainSpec::interval(double a, double b) {
    DomainSpec d;
    d.kind = Kind::interval;
    d.a = a;
    d.b = b;
    d.validate();
    return d;
}

DomainSpec DomainSpec::rectangle(double a, double b, double c, double d) {
    DomainSpec r;
    r.kind = Kind::rectangle;
    r.a = a;
    r.b = b;
    r.c = c;
    r.d = d;
    r.validate();
    return r;
}

void DomainSpec::validate() const {
    auto ok = [](double lo, double hi) { return std::isfinite(lo) && std::isfinite(hi) && hi > lo; };
    if (!ok(a, b)) throw InvalidArgument("domain: x extent must satisfy a < b");
    if (kind == Kind::rectangle && !ok(c, d)) throw InvalidArgument("domain: y extent must satisfy c < d");
}

std::string DomainSpec::describe() const {
    if (kind == Kind::interval) return fmt::format("interval({:.17g},{:.17g})", a, b);
    return fmt::format("rectangle({:.17g},{:.17g})x({:.17g},{:.17g})", a, b, c, d);
}

BCVariant BCVariant::free_beta(double beta) {
    BCVariant v;
    v.kind = Kind::free_beta;
    v.beta = beta;
    v.validate();
    return v;
}

BCVariant BCVariant::free_2d(double mu) {
    BCVariant v;
    v.kind = Kind::free_2d;
    v.mu = mu;
    v.validate();
    return v;
}

BCVariant BCVariant::lt_variant(double mu, double b) {
    BCVariant v;
    v.kind = Kind::lt_variant;
    v.mu = mu;
    v.b = b;
    v.validate();
    return v;
}

void BCVariant::validate() const {
    if (!std::isfinite(beta) || !std::isfinite(mu) || !std::isfinite(b)) throw InvalidArgument("bc: non-finite parameter");
    if (kind == Kind::lt_variant && !(b > 0.0)) throw InvalidArgument("bc: lt variant needs b > 0");
}

std::string BCVariant::name() const {
    switch (kind) {
        case Kind::free_beta: return "free_beta";
        case Kind::free_2d: return "free_2d";
        case Kind::lt_variant: return "lt";
    }
    return "?";
}

std::string BCVariant::describe() const {
    switch (kind) {
        case Kind::free_beta: return fmt::format("free_beta(beta={:.17g})", beta);
        case Kind::free_2d: return fmt::format("free_2d(mu={:.17g})", mu);
        case Kind::lt_variant: return fmt::format("lt(mu={:.17g},b={:.17g})", mu, b);
    }
    return "?";
}

namespace {

// Linear form over grid and ghost values. Key = (field, i, j) on the extended grid.
using Key = std::tuple<int, int, int>;
using Form = std::vector<std::pair<Key, double>>;

enum Field { U = 0, V = 1, T = 2 };

Form& operator+=(Form& a, const Form& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}
Form operator+(Form a, const Form& b) { return a += b; }
Form operator*(double s, Form a) {
    for (auto& [k, c] : a) c *= s;
    return a;
}

struct Stencils {
    int dim;
    double hx, hy;

    Form at(int f, int i, int j, double c = 1.0) const { return {{{f, i, j}, c}}; }
    Form st(int f, int i, int j, std::initializer_list<std::tuple<int, int, double>> pts) const {
        Form r;
        for (auto [di, dj, c] : pts) r.push_back({{f, i + di, j + dj}, c});
        return r;
    }
    Form dx(int f, int i, int j) const { return st(f, i, j, {{-1, 0, -0.5 / hx}, {1, 0, 0.5 / hx}}); }
    Form dy(int f, int i, int j) const { return st(f, i, j, {{0, -1, -0.5 / hy}, {0, 1, 0.5 / hy}}); }
    Form dxx(int f, int i, int j) const {
        const double a = 1.0 / (hx * hx);
        return st(f, i, j, {{-1, 0, a}, {0, 0, -2 * a}, {1, 0, a}});
    }
    Form dyy(int f, int i, int j) const {
        const double a = 1.0 / (hy * hy);
        return st(f, i, j, {{0, -1, a}, {0, 0, -2 * a}, {0, 1, a}});
    }
    Form dxy(int f, int i, int j) const {
        const double a = 0.25 / (hx * hy);
        return st(f, i, j, {{1, 1, a}, {-1, -1, a}, {1, -1, -a}, {-1, 1, -a}});
    }
    Form dxxx(int f, int i, int j) const {
        const double a = 0.5 / (hx * hx * hx);
        return st(f, i, j, {{2, 0, a}, {1, 0, -2 * a}, {-1, 0, 2 * a}, {-2, 0, -a}});
    }
    Form dyyy(int f, int i, int j) const {
        const double a = 0.5 / (hy * hy * hy);
        return st(f, i, j, {{0, 2, a}, {0, 1, -2 * a}, {0, -1, 2 * a}, {0, -2, -a}});
    }
    Form dxxy(int f, int i, int j) const { return (0.5 / hy) * dxx(f, i, j + 1) + (-0.5 / hy) * dxx(f, i, j - 1); }
    Form dxyy(int f, int i, int j) const { return (0.5 / hx) * dyy(f, i + 1, j) + (-0.5 / hx) * dyy(f, i - 1, j); }
    Form lap(int f, int i, int j) const { return dim == 1 ? dxx(f, i, j) : dxx(f, i, j) + dyy(f, i, j); }
    Form bih(int f, int i, int j) const {
        const double a = 1.0 / std::pow(hx, 4);
        if (dim == 1) return st(f, i, j, {{0, 0, 6 * a}, {1, 0, -4 * a}, {-1, 0, -4 * a}, {2, 0, a}, {-2, 0, a}});
        const double c = 1.0 / std::pow(hy, 4);
        const double d = 1.0 / (hx * hx * hy * hy);
        return st(f, i, j,
                  {{0, 0, 6 * a + 6 * c + 8 * d},
                   {1, 0, -4 * a - 4 * d},
                   {-1, 0, -4 * a - 4 * d},
                   {0, 1, -4 * c - 4 * d},
                   {0, -1, -4 * c - 4 * d},
                   {2, 0, a},
                   {-2, 0, a},
                   {0, 2, c},
                   {0, -2, c},
                   {1, 1, 2 * d},
                   {1, -1, 2 * d},
                   {-1, 1, 2 * d},
                   {-1, -1, 2 * d}});
    }
};

// Boundary equations at node (i, j) with outward normal (n1, n2).
std::array<Form, 4> boundary_rows(const Stencils& s, const BCVariant& bc, int i, int j, int n1, int n2) {
    const double nu1 = n1, nu2 = n2;
    const double t1 = -nu2, t2 = nu1;
    Form e1, e2, e3;
    if (s.dim == 1) {
        // Tangential Laplacian vanishes.
        e1 = s.dxx(U, i, j) + s.at(T, i, j);
        e2 = nu1 * s.dxxx(U, i, j);
        e3 = nu1 * s.dx(T, i, j);
    } else {
        const Form uxx = s.dxx(U, i, j), uyy = s.dyy(U, i, j), uxy = s.dxy(U, i, j);
        const Form uxxx = s.dxxx(U, i, j), uyyy = s.dyyy(U, i, j), uxxy = s.dxxy(U, i, j), uxyy = s.dxyy(U, i, j);
        const Form lap = uxx + uyy;
        const Form dn_lap = nu1 * (uxxx + uxyy) + nu2 * (uxxy + uyyy);
        const Form dn_theta = nu1 * s.dx(T, i, j) + nu2 * s.dy(T, i, j);
        if (bc.kind == BCVariant::Kind::free_beta) {
            const double k = 1.0 - bc.beta;
            const Form utt = t1 * t1 * uxx + 2 * t1 * t2 * uxy + t2 * t2 * uyy;
            const Form dn_utt = nu1 * (t1 * t1 * uxxx + 2 * t1 * t2 * uxxy + t2 * t2 * uxyy) +
                                nu2 * (t1 * t1 * uxxy + 2 * t1 * t2 * uxyy + t2 * t2 * uyyy);
            e1 = lap + (-k) * utt + s.at(T, i, j);
            e2 = dn_lap + k * dn_utt;
            e3 = dn_theta;
        } else {
            const double k = 1.0 - bc.mu;
            const Form b1 = (2 * nu1 * nu2) * uxy + (-nu1 * nu1) * uyy + (-nu2 * nu2) * uxx;
            const Form b2 = (nu1 * nu1 - nu2 * nu2) * (t1 * uxxy + t2 * uxyy) +
                            (nu1 * nu2) * (t1 * (uxyy + (-1.0) * uxxx) + t2 * (uyyy + (-1.0) * uxxy));
            e1 = lap + k * b1 + s.at(T, i, j);
            e2 = dn_lap + k * b2;
            e3 = dn_theta;
            if (bc.kind == BCVariant::Kind::lt_variant) {
                e2 += s.at(U, i, j, -1.0) + dn_theta;
                e3 += s.at(T, i, j, bc.b);
            }
        }
    }
    // v ghost: cubic extrapolation along the inward normal.
    Form e4 = s.at(V, i + n1, j + n2, 1.0) + s.at(V, i, j, -4.0) + s.at(V, i - n1, j - n2, 6.0) +
              s.at(V, i - 2 * n1, j - 2 * n2, -4.0) + s.at(V, i - 3 * n1, j - 3 * n2, 1.0);
    return {e1, e2, e3, e4};
}

class Indexer {
public:
    Indexer(int nx, int ny) : nx_(nx), ny_(ny), n_(static_cast<long>(nx) * ny) {}
    bool inside(int i, int j) const { return i >= 0 && i < nx_ && j >= 0 && j < ny_; }
    long grid_index(const Key& k) const {
        auto [f, i, j] = k;
        return f * n_ + static_cast<long>(i) * ny_ + j;
    }
    long ghost_index(const Key& k) {
        auto it = ghosts_.find(k);
        if (it != ghosts_.end()) return it->second;
        const long idx = static_cast<long>(ghosts_.size());
        ghosts_.emplace(k, idx);
        return idx;
    }
    long find_ghost(const Key& k) const {
        auto it = ghosts_.find(k);
        return it == ghosts_.end() ? -1 : it->second;
    }
    std::size_t ghost_count() const { return ghosts_.size(); }
    long unknowns() const { return 3 * n_; }

private:
    int nx_, ny_;
    long n_;
    std::map<Key, long> ghosts_;
};

Eigen::MatrixXd energy_metric(int nx, int ny, double hx, double hy, int dim) {
    const long n = static_cast<long>(nx) * ny;
    auto node = [ny](int i, int j) { return static_cast<long>(i) * ny + j; };
    Eigen::VectorXd w(n);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            double wij = dim == 1 ? hx : hx * hy;
            if (i == 0 || i == nx - 1) wij *= 0.5;
            if (dim == 2 && (j == 0 || j == ny - 1)) wij *= 0.5;
            w(node(i, j)) = wij;
        }
    }
    const double cell = dim == 1 ? hx : hx * hy;
    Eigen::MatrixXd hu = w.asDiagonal();
    auto add_rank_one = [&](const std::vector<std::pair<long, double>>& r, double weight) {
        for (auto [a, ca] : r)
            for (auto [b, cb] : r) hu(a, b) += weight * ca * cb;
    };
    const double ax = 1.0 / (hx * hx);
    for (int i = 1; i < nx - 1; ++i)
        for (int j = 0; j < ny; ++j) add_rank_one({{node(i - 1, j), ax}, {node(i, j), -2 * ax}, {node(i + 1, j), ax}}, cell);
    if (dim == 2) {
        const double ay = 1.0 / (hy * hy);
        for (int i = 0; i < nx; ++i)
            for (int j = 1; j < ny - 1; ++j)
                add_rank_one({{node(i, j - 1), ay}, {node(i, j), -2 * ay}, {node(i, j + 1), ay}}, cell);
        const double axy = 1.0 / (hx * hy);
        for (int i = 0; i < nx - 1; ++i)
            for (int j = 0; j < ny - 1; ++j)
                add_rank_one({{node(i, j), axy}, {node(i + 1, j + 1), axy}, {node(i + 1, j), -axy}, {node(i, j + 1), -axy}},
                             2 * cell);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(hu);
    if (llt.info() != Eigen::Success) throw NumericalFailure("energy metric is not positive definite");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    g.topLeftCorner(n, n) = llt.matrixU();
    for (long k = 0; k < n; ++k) {
        g(n + k, n + k) = std::sqrt(w(k));
        g(2 * n + k, 2 * n + k) = std::sqrt(w(k));
    }
    return g;
}

double resolve_zero_tol(const Eigen::VectorXcd& ev, double zero_tol) {
    if (zero_tol > 0.0) return zero_tol;
    return default_zero_tol_relative * ev.cwiseAbs().maxCoeff();
}

void require_dense_size(const DiscreteGenerator& gen) {
    if (gen.size() > max_dense_size)
        throw InvalidArgument(fmt::format("generator of size {} exceeds the dense limit {}", gen.size(), max_dense_size));
}

}  // namespace

std::array<double, 2> DiscreteGenerator::node_position(int i, int j) const {
    const double x = domain.a + i * spacing[0];
    const double y = domain.dimension() == 2 ? domain.c + j * spacing[1] : 0.0;
    return {x, y};
}

Eigen::VectorXd DiscreteGenerator::sample(const std::function<std::array<double, 3>(double, double)>& field) const {
    const long n = static_cast<long>(nodes());
    Eigen::VectorXd out(3 * n);
    for (int i = 0; i < nx(); ++i) {
        for (int j = 0; j < ny(); ++j) {
            const auto [x, y] = node_position(i, j);
            const auto val = field(x, y);
            const long k = static_cast<long>(i) * ny() + j;
            for (int f = 0; f < 3; ++f) out(f * n + k) = val[f];
        }
    }
    return out;
}

Eigen::MatrixXd DiscreteGenerator::metric_matrix() const {
    const Eigen::MatrixXd ga = metric * matrix;
    // (G A) G^{-1} = (G^{-T} (G A)^T)^T
    return metric.transpose().triangularView<Eigen::Lower>().solve(ga.transpose()).transpose();
}

double DiscreteGenerator::energy_norm(const Eigen::VectorXd& x) const {
    return (metric.triangularView<Eigen::Upper>() * x).norm();
}

std::string DiscreteGenerator::layout() const {
    return fmt::format(
        "unknowns u[0..{0}), v[{0}..{1}), theta[{1}..{2}); node (i,j) -> i*{3}+j; rows: u'=v, v'=-bih(u)-lap(theta), "
        "theta'=lap(theta)+lap(v); centered second-order stencils, {4}-point biharmonic; two u ghost layers, one v and "
        "one theta ghost layer per boundary, eliminated by one linear solve",
        nodes(), 2 * nodes(), 3 * nodes(), ny(), domain.dimension() == 1 ? 5 : 13);
}

DiscreteGenerator assemble_generator(const DomainSpec& domain, const std::vector<int>& grid_points, const BCVariant& bc) {
    domain.validate();
    bc.validate();
    const int dim = domain.dimension();
    if (dim == 1 && bc.kind != BCVariant::Kind::free_beta)
        throw InvalidArgument("bc '" + bc.name() + "' requires a rectangle");
    std::vector<int> m = grid_points;
    if (m.size() == 1 && dim == 2) m.push_back(m[0]);
    if (static_cast<int>(m.size()) != dim) throw InvalidArgument("grid_points must have one entry per axis");
    for (int mi : m)
        if (mi < 8) throw InvalidArgument("grid_points must be >= 8 per axis");

    DiscreteGenerator gen;
    gen.domain = domain;
    gen.bc = bc;
    gen.intervals = m;
    gen.spacing.push_back((domain.b - domain.a) / m[0]);
    if (dim == 2) gen.spacing.push_back((domain.d - domain.c) / m[1]);
    const int nx = gen.nx(), ny = gen.ny();
    const Stencils s{dim, gen.spacing[0], dim == 2 ? gen.spacing[1] : 1.0};

    // Boundary equations, edge by edge.
    std::vector<Form> eqs;
    auto edge = [&](int n1, int n2) {
        if (n1 != 0) {
            const int i = n1 < 0 ? 0 : nx - 1;
            for (int j = 0; j < ny; ++j)
                for (auto& e : boundary_rows(s, bc, i, j, n1, n2)) eqs.push_back(std::move(e));
        } else {
            const int j = n2 < 0 ? 0 : ny - 1;
            for (int i = 0; i < nx; ++i)
                for (auto& e : boundary_rows(s, bc, i, j, n1, n2)) eqs.push_back(std::move(e));
        }
    };
    edge(-1, 0);
    edge(1, 0);
    if (dim == 2) {
        edge(0, -1);
        edge(0, 1);
        // Corner diagonal ghosts: linear extrapolation along the diagonal.
        for (auto [ci, cj, di, dj] : std::vector<std::array<int, 4>>{
                 {0, 0, -1, -1}, {nx - 1, 0, 1, -1}, {0, ny - 1, -1, 1}, {nx - 1, ny - 1, 1, 1}}) {
            eqs.push_back(s.at(U, ci + di, cj + dj, 1.0) + s.at(U, ci, cj, -2.0) + s.at(U, ci - di, cj - dj, 1.0));
        }
    }

    std::vector<Form> rows;
    rows.reserve(3 * gen.nodes());
    for (int f = 0; f < 3; ++f) {
        for (int i = 0; i < nx; ++i) {
            for (int j = 0; j < ny; ++j) {
                if (f == U) rows.push_back(s.at(V, i, j));
                if (f == V) rows.push_back((-1.0) * s.bih(U, i, j) + (-1.0) * s.lap(T, i, j));
                if (f == T) rows.push_back(s.lap(T, i, j) + s.lap(V, i, j));
            }
        }
    }

    Indexer idx(nx, ny);
    for (const auto& e : eqs)
        for (const auto& [k, c] : e) {
            auto [f, i, j] = k;
            if (!idx.inside(i, j)) idx.ghost_index(k);
        }
    const long ng = static_cast<long>(idx.ghost_count());
    if (ng != static_cast<long>(eqs.size()))
        throw InvariantViolation(fmt::format("ghost elimination: {} equations for {} ghosts", eqs.size(), ng));

    const long nw = idx.unknowns();
    Eigen::MatrixXd cw = Eigen::MatrixXd::Zero(ng, nw);
    Eigen::MatrixXd cg = Eigen::MatrixXd::Zero(ng, ng);
    for (long r = 0; r < ng; ++r) {
        for (const auto& [k, c] : eqs[r]) {
            auto [f, i, j] = k;
            if (idx.inside(i, j))
                cw(r, idx.grid_index(k)) += c;
            else
                cg(r, idx.find_ghost(k)) += c;
        }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(cg);
    if (!lu.isInvertible()) throw InvariantViolation("ghost elimination system is singular");
    const Eigen::MatrixXd elim = -lu.solve(cw);  // ghosts = elim * grid values

    gen.matrix = Eigen::MatrixXd::Zero(nw, nw);
    for (long r = 0; r < nw; ++r) {
        for (const auto& [k, c] : rows[r]) {
            auto [f, i, j] = k;
            if (idx.inside(i, j)) {
                gen.matrix(r, idx.grid_index(k)) += c;
            } else {
                const long g = idx.find_ghost(k);
                if (g < 0) throw InvariantViolation("operator stencil reaches an unconstrained ghost");
                gen.matrix.row(r) += c * elim.row(g);
            }
        }
    }
    if (!gen.matrix.allFinite()) throw InvariantViolation("assembled generator has non-finite entries");
    gen.ghost_count = static_cast<std::size_t>(ng);
    gen.metric = energy_metric(nx, ny, gen.spacing[0], dim == 2 ? gen.spacing[1] : 1.0, dim);
    return gen;
}

SpectrumReport spectrum(const DiscreteGenerator& gen, double zero_tol) {
    require_dense_size(gen);
    const Eigen::MatrixXd as = gen.metric_matrix();
    const Eigen::VectorXcd ev = dense::eigenvalues(as);
    SpectrumReport rep;
    rep.matrix_size = gen.size();
    rep.grid = gen.intervals;
    rep.zero_tol = resolve_zero_tol(ev, zero_tol);
    rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(), [](auto a, auto b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    rep.max_real_part = rep.eigenvalues.front().real();
    double margin = std::numeric_limits<double>::infinity();
    for (auto l : rep.eigenvalues) {
        if (std::abs(l) <= rep.zero_tol)
            ++rep.near_zero_count;
        else
            margin = std::min(margin, -l.real());
    }
    rep.decay_margin = margin;
    Eigen::VectorXd sv = dense::singular_values(as);
    std::sort(sv.data(), sv.data() + sv.size());
    for (long k = 0; k < sv.size(); ++k) {
        if (sv(k) <= rep.zero_tol) ++rep.kernel_dimension;
        if (k < 8) rep.smallest_singular_values.push_back(sv(k));
    }
    return rep;
}

struct BoundedEvolver::Impl {
    DiscreteGenerator gen;
    double zero_tol = 0.0;
    int k = 0;            // cluster size
    Eigen::MatrixXd q;    // Schur vectors
    Eigen::MatrixXd t11;  // cluster block
    Eigen::MatrixXd t22;  // complement block
    Eigen::MatrixXd y;    // T = Z diag(T11, T22) Z^{-1} with Z = [[I, Y], [0, I]]
    double margin = 0.0;
    Eigen::VectorXcd eigenvalues;  // cluster first

    Eigen::VectorXd to_metric(const Eigen::VectorXd& x) const { return gen.metric.triangularView<Eigen::Upper>() * x; }
    Eigen::VectorXd from_metric(const Eigen::VectorXd& y0) const {
        return gen.metric.triangularView<Eigen::Upper>().solve(y0);
    }

    // Decoupled coordinates (c1, c2) of a metric-coordinate vector.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> split(const Eigen::VectorXd& y0, bool project) const {
        const long n = q.rows(), m = n - k;
        if (y0.size() != n) throw InvalidArgument("evolve_bounded: state size mismatch");
        const Eigen::VectorXd z = q.transpose() * y0;
        Eigen::VectorXd c1 = z.head(k) - y * z.tail(m);
        if (project) c1.setZero();
        return {c1, z.tail(m)};
    }
    Eigen::VectorXd join(const Eigen::VectorXd& c1, const Eigen::VectorXd& c2) const {
        const long n = q.rows(), m = n - k;
        Eigen::VectorXd z(n);
        z.head(k) = c1 + y * c2;
        z.tail(m) = c2;
        Eigen::VectorXd out = q * z;
        if (!out.allFinite()) throw NumericalFailure("evolve_bounded: overflow");
        return out;
    }
};

namespace {

Eigen::MatrixXd block_exponential(const Eigen::MatrixXd& t, double time) {
    if (t.rows() == 0) return t;
    if (time == 0.0) return Eigen::MatrixXd::Identity(t.rows(), t.cols());
    Eigen::MatrixXd e = (time * t).exp();
    if (!e.allFinite()) throw NumericalFailure("matrix exponential overflow");
    return e;
}

void check_time(double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolve_bounded: t must be finite and >= 0");
}

}  // namespace

BoundedEvolver::BoundedEvolver(const DiscreteGenerator& gen, double zero_tol) : impl_(std::make_unique<Impl>()) {
    require_dense_size(gen);
    auto& im = *impl_;
    im.gen = gen;
    dense::RealSchurForm form = dense::real_schur(gen.metric_matrix());
    im.zero_tol = resolve_zero_tol(form.eigenvalues, zero_tol);
    const double tol = im.zero_tol;
    for (long i = 0; i < form.eigenvalues.size(); ++i) {
        const auto l = form.eigenvalues(i);
        if (l.real() > 10.0 * tol)
            throw NumericalFailure(fmt::format("unstable discretization: eigenvalue {:.6g}{:+.6g}i exceeds 10*zero_tol",
                                               l.real(), l.imag()));
    }
    dense::OrderedSchur sch = dense::reorder(std::move(form), [tol](std::complex<double> l) { return std::abs(l) <= tol; });
    const long n = sch.t.rows();
    im.k = sch.selected;
    if (im.k > 0 && 1.0 / sch.cluster_rcond > max_projector_condition)
        throw NumericalFailure(fmt::format("spectral projection ill-conditioned (norm {:.3g})", 1.0 / sch.cluster_rcond));
    const long k = im.k, m = n - k;
    im.t11 = sch.t.topLeftCorner(k, k);
    im.t22 = sch.t.bottomRightCorner(m, m);
    im.y = dense::solve_sylvester(im.t11, im.t22, -sch.t.topRightCorner(k, m));
    im.q = std::move(sch.q);
    im.eigenvalues = sch.eigenvalues;
    double abscissa = -std::numeric_limits<double>::infinity();
    for (long i = k; i < n; ++i) abscissa = std::max(abscissa, sch.eigenvalues(i).real());
    im.margin = m > 0 ? -abscissa : std::numeric_limits<double>::infinity();
}

BoundedEvolver::~BoundedEvolver() = default;
BoundedEvolver::BoundedEvolver(BoundedEvolver&&) noexcept = default;
BoundedEvolver& BoundedEvolver::operator=(BoundedEvolver&&) noexcept = default;

double BoundedEvolver::zero_tol() const { return impl_->zero_tol; }
int BoundedEvolver::cluster_dimension() const { return impl_->k; }
const Eigen::VectorXcd& BoundedEvolver::eigenvalues() const { return impl_->eigenvalues; }
double BoundedEvolver::spectral_margin() const { return impl_->margin; }
const DiscreteGenerator& BoundedEvolver::generator() const { return impl_->gen; }

Eigen::VectorXd BoundedEvolver::evolve_metric(const Eigen::VectorXd& y0, double t, bool project_off_kernel) const {
    check_time(t);
    const auto& im = *impl_;
    auto [c1, c2] = im.split(y0, project_off_kernel);
    const Eigen::VectorXd c1t = project_off_kernel ? c1 : Eigen::VectorXd(block_exponential(im.t11, t) * c1);
    return im.join(c1t, block_exponential(im.t22, t) * c2);
}

std::vector<Eigen::MatrixXd> BoundedEvolver::trajectory_metric(const Eigen::MatrixXd& y0, double t0, double dt,
                                                               int count, bool project_off_kernel) const {
    check_time(t0);
    check_time(dt);
    if (count < 1) throw InvalidArgument("trajectory needs at least one time");
    const auto& im = *impl_;
    const long n = im.q.rows(), k = im.k, m = n - k;
    if (y0.rows() != n) throw InvalidArgument("trajectory: state size mismatch");
    const Eigen::MatrixXd z = im.q.transpose() * y0;
    Eigen::MatrixXd c1 = z.topRows(k) - im.y * z.bottomRows(m);
    Eigen::MatrixXd c2 = z.bottomRows(m);
    if (project_off_kernel) c1.setZero();
    // One exponential per block; t0 is reached by stepping when it is a
    // multiple of dt, which keeps stiff problems at a single expm.
    const Eigen::MatrixXd s11 = block_exponential(im.t11, dt), s22 = block_exponential(im.t22, dt);
    const double steps = dt > 0.0 ? t0 / dt : 0.0;
    const long whole = std::lround(steps);
    if (dt > 0.0 && std::abs(steps - static_cast<double>(whole)) <= 1e-9 * std::max(1.0, steps)) {
        for (long i = 0; i < whole; ++i) {
            c1 = s11 * c1;
            c2 = s22 * c2;
        }
    } else {
        c1 = block_exponential(im.t11, t0) * c1;
        c2 = block_exponential(im.t22, t0) * c2;
    }
    std::vector<Eigen::MatrixXd> out;
    for (int i = 0; i < count; ++i) {
        if (i > 0) {
            c1 = s11 * c1;
            c2 = s22 * c2;
        }
        Eigen::MatrixXd zt(n, y0.cols());
        zt.topRows(k) = c1 + im.y * c2;
        zt.bottomRows(m) = c2;
        out.push_back(im.q * zt);
        if (!out.back().allFinite()) throw NumericalFailure("evolve_bounded: overflow");
    }
    return out;
}

Eigen::VectorXd BoundedEvolver::evolve(const Eigen::VectorXd& u0, double t, bool project_off_kernel) const {
    return impl_->from_metric(evolve_metric(impl_->to_metric(u0), t, project_off_kernel));
}

Eigen::VectorXd BoundedEvolver::project_off_kernel(const Eigen::VectorXd& u0) const {
    const auto& im = *impl_;
    auto [c1, c2] = im.split(im.to_metric(u0), true);
    return im.from_metric(im.join(c1, c2));
}

Eigen::VectorXd evolve_bounded(const DiscreteGenerator& gen, const Eigen::VectorXd& u0, double t, bool project_off_kernel) {
    return BoundedEvolver(gen).evolve(u0, t, project_off_kernel);
}

KernelProjection kernel_and_projection(const DiscreteGenerator& gen, double zero_tol) {
    require_dense_size(gen);
    const Eigen::MatrixXd as = gen.metric_matrix();
    KernelProjection out;
    if (zero_tol <= 0.0) zero_tol = resolve_zero_tol(dense::eigenvalues(as), -1.0);
    out.zero_tol = zero_tol;

    const dense::Svd sv = dense::svd(as);
    std::vector<long> null_cols;
    for (long i = 0; i < sv.values.size(); ++i)
        if (sv.values(i) <= zero_tol) null_cols.push_back(i);
    Eigen::MatrixXd basis_metric(as.rows(), static_cast<long>(null_cols.size()));
    for (std::size_t c = 0; c < null_cols.size(); ++c) basis_metric.col(c) = sv.right.col(null_cols[c]);
    out.kernel_basis = gen.metric.triangularView<Eigen::Upper>().solve(basis_metric);

    const double tol = zero_tol;
    dense::OrderedSchur sch =
        dense::reorder(dense::real_schur(as), [tol](std::complex<double> l) { return std::abs(l) <= tol; });
    const long n = as.rows(), k = sch.selected, m = n - k;
    out.generalized_kernel_dimension = static_cast<int>(k);
    if (k == 0) {
        out.projection = Eigen::MatrixXd::Zero(n, n);
        out.projector_norm = 0.0;
        return out;
    }
    out.projector_norm = 1.0 / sch.cluster_rcond;
    if (out.projector_norm > max_projector_condition)
        throw NumericalFailure(fmt::format("spectral projection ill-conditioned (norm {:.3g})", out.projector_norm));
    const Eigen::MatrixXd y = dense::solve_sylvester(sch.t.topLeftCorner(k, k), sch.t.bottomRightCorner(m, m),
                                                     -sch.t.topRightCorner(k, m));
    // P = Q [[I, -Y], [0, 0]] Q^T in energy coordinates.
    Eigen::MatrixXd top(k, n);
    top.leftCols(k).setIdentity();
    top.rightCols(m) = -y;
    const Eigen::MatrixXd p_metric = sch.q.leftCols(k) * (top * sch.q.transpose());
    // Grid coordinates: G^{-1} P G.
    const Eigen::MatrixXd pg = p_metric * gen.metric.triangularView<Eigen::Upper>();
    out.projection = gen.metric.triangularView<Eigen::Upper>().solve(pg);
    return out;
}

double DecayReport::mean_fitted_rate() const {
    if (samples.empty()) return 0.0;
    double s = 0.0;
    for (const auto& d : samples) s += d.fitted_rate;
    return s / static_cast<double>(samples.size());
}

namespace {

std::vector<DecaySample> fit_metric(const BoundedEvolver& ev, const Eigen::MatrixXd& y0, double horizon, bool project,
                                    double spectral_rate, int time_points) {
    if (time_points < 2) throw InvalidArgument("decay fit needs at least two time points");
    if (!(horizon > 0.0)) {
        if (!(spectral_rate > 0.0) || !std::isfinite(spectral_rate))
            throw NumericalFailure("decay fit: no positive spectral rate to choose a horizon from");
        horizon = auto_horizon_factor / spectral_rate;
    }
    const double t0 = 0.5 * horizon, dt = 0.5 * horizon / (time_points - 1);
    const auto states = ev.trajectory_metric(y0, t0, dt, time_points, project);
    std::vector<DecaySample> out(static_cast<std::size_t>(y0.cols()));
    for (long c = 0; c < y0.cols(); ++c) {
        auto& d = out[c];
        std::vector<double> logs;
        for (int i = 0; i < time_points; ++i) {
            const double t = t0 + i * dt;
            const double nrm = states[i].col(c).norm();
            if (!(nrm > 1e-280) || !std::isfinite(nrm))
                throw NumericalFailure(fmt::format("decay fit: norm underflow at t = {:.6g} (horizon too long)", t));
            d.times.push_back(t);
            d.norms.push_back(nrm);
            logs.push_back(std::log(nrm));
        }
        const double tm = std::accumulate(d.times.begin(), d.times.end(), 0.0) / time_points;
        const double lm = std::accumulate(logs.begin(), logs.end(), 0.0) / time_points;
        double sxy = 0.0, sxx = 0.0;
        for (int i = 0; i < time_points; ++i) {
            sxy += (d.times[i] - tm) * (logs[i] - lm);
            sxx += (d.times[i] - tm) * (d.times[i] - tm);
        }
        d.fitted_rate = -sxy / sxx;
        d.relative_error = spectral_rate > 0.0 ? std::abs(d.fitted_rate - spectral_rate) / spectral_rate
                                               : std::numeric_limits<double>::infinity();
        d.decaying = spectral_rate > 0.0 && d.fitted_rate > 0.01 * spectral_rate;
    }
    return out;
}

}  // namespace

DecaySample decay_fit(const BoundedEvolver& evolver, const Eigen::VectorXd& u0, double horizon, bool project,
                      double spectral_rate, int time_points) {
    const Eigen::VectorXd y0 = evolver.generator().metric.triangularView<Eigen::Upper>() * u0;
    return fit_metric(evolver, Eigen::MatrixXd(y0), horizon, project, spectral_rate, time_points).front();
}

DecayReport decay_rate_experiment(const BoundedEvolver& evolver, int samples, double horizon, std::uint64_t seed,
                                  bool project_off_kernel) {
    if (samples < 1) throw InvalidArgument("decay experiment needs at least one sample");
    DecayReport rep;
    rep.spectral_rate = evolver.spectral_margin();
    if (!(rep.spectral_rate > 0.0)) throw NumericalFailure("decay experiment: spectrum off the kernel does not decay");
    rep.horizon = horizon > 0.0 ? horizon : auto_horizon_factor / rep.spectral_rate;
    rep.projected = project_off_kernel;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const long n = static_cast<long>(evolver.generator().size());
    Eigen::MatrixXd y0(n, samples);
    for (int s = 0; s < samples; ++s)
        for (long i = 0; i < n; ++i) y0(i, s) = dist(rng);
    rep.samples = fit_metric(evolver, y0, rep.horizon, project_off_kernel, rep.spectral_rate, 41);
    rep.pass = true;
    for (const auto& d : rep.samples)
        if (!(d.relative_error <= decay_tolerance)) rep.pass = false;
    return rep;
}

ConvergenceStudy convergence_study(const DomainSpec& domain, const BCVariant& bc, const std::vector<int>& grids) {
    if (grids.size() < 3) throw InvalidArgument("convergence study needs at least three grids");
    for (std::size_t i = 1; i < grids.size(); ++i)
        if (grids[i] != grids[i - 1] && grids[i] != 2 * grids[i - 1])
            throw InvalidArgument(fmt::format("grid list not nested: {} after {}", grids[i], grids[i - 1]));

    ConvergenceStudy out;
    std::vector<std::complex<double>> reference;
    for (std::size_t g = 0; g < grids.size(); ++g) {
        const DiscreteGenerator gen = assemble_generator(domain, {grids[g]}, bc);
        const SpectrumReport rep = spectrum(gen);
        std::vector<std::complex<double>> cand;
        for (auto l : rep.eigenvalues)
            if (std::abs(l) > rep.zero_tol && l.imag() >= -rep.zero_tol) cand.push_back(l);
        std::sort(cand.begin(), cand.end(), [](auto a, auto b) { return std::abs(a) < std::abs(b); });
        ConvergenceRow row;
        row.intervals = grids[g];
        if (g == 0) {
            if (cand.size() < static_cast<std::size_t>(tracked_eigenvalue_count))
                throw NumericalFailure("convergence study: too few nonzero eigenvalues on the coarsest grid");
            reference.assign(cand.begin(), cand.begin() + tracked_eigenvalue_count);
            row.eigenvalues = reference;
        } else {
            const auto& prev = out.rows.back().eigenvalues;
            for (std::size_t e = 0; e < prev.size(); ++e) {
                auto best = std::min_element(cand.begin(), cand.end(), [&](auto a, auto b) {
                    return std::abs(a - prev[e]) < std::abs(b - prev[e]);
                });
                const double dist = std::abs(*best - prev[e]);
                if (dist > 0.2 * std::abs(prev[e]))
                    throw NumericalFailure(fmt::format(
                        "eigenvalue matching failed on grid {}: tracked {:.6g}{:+.6g}i, nearest {:.6g}{:+.6g}i "
                        "(distance {:.3g})",
                        grids[g], prev[e].real(), prev[e].imag(), best->real(), best->imag(), dist));
                row.eigenvalues.push_back(*best);
                row.differences.push_back(dist);
            }
        }
        out.rows.push_back(std::move(row));
    }
    const std::size_t r = out.rows.size();
    std::vector<double> finite;
    for (int e = 0; e < tracked_eigenvalue_count; ++e) {
        const double d1 = out.rows[r - 2].differences[e];
        const double d2 = out.rows[r - 1].differences[e];
        const bool doubled = grids[r - 1] == 2 * grids[r - 2] && grids[r - 2] == 2 * grids[r - 3];
        double order = std::numeric_limits<double>::quiet_NaN();
        if (doubled && d1 > 0.0 && d2 > 0.0) order = std::log2(d1 / d2);
        out.orders.push_back(order);
        if (std::isfinite(order)) finite.push_back(order);
    }
    if (finite.size() == out.orders.size()) {
        std::sort(finite.begin(), finite.end());
        out.order = finite[finite.size() / 2];
    } else {
        out.order = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

void write_triplets(std::ostream& os, const DiscreteGenerator& gen) {
    const long n = gen.matrix.rows();
    long nnz = 0;
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            if (gen.matrix(i, j) != 0.0) ++nnz;
    os << "# thermoplate generator\n";
    os << "# domain " << gen.domain.describe() << "\n";
    os << "# bc " << gen.bc.describe() << "\n";
    os << "# grid";
    for (int m : gen.intervals) os << " " << m;
    os << "\n# layout " << gen.layout() << "\n";
    os << n << " " << n << " " << nnz << "\n";
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j)
            if (gen.matrix(i, j) != 0.0) os << fmt::format("{} {} {:.17g}\n", i, j, gen.matrix(i, j));
}

void write_spectrum_csv(std::ostream& os, const SpectrumReport& report) {
    os << "re,im\n";
    for (auto l : report.eigenvalues) os << fmt::format("{:.17g},{:.17g}\n", l.real(), l.imag());
}

std::string spectrum_json(const SpectrumReport& report) {
    nlohmann::ordered_json j;
    j["matrix_size"] = report.matrix_size;
    j["grid"] = report.grid;
    j["zero_tol"] = report.zero_tol;
    j["kernel_dimension"] = report.kernel_dimension;
    j["near_zero_count"] = report.near_zero_count;
    j["decay_margin"] = report.decay_margin;
    j["max_real_part"] = report.max_real_part;
    j["smallest_singular_values"] = report.smallest_singular_values;
    auto& ev = j["eigenvalues"] = nlohmann::ordered_json::array();
    for (auto l : report.eigenvalues) ev.push_back({l.real(), l.imag()});
    return j.dump(1);
}

}  // namespace thermoplate
