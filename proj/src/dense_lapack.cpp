#include "dense_lapack.hpp"

#include <algorithm>
#include <string>
#include <vector>

#define LAPACK_COMPLEX_CPP
#include <lapacke.h>

#include "thermoplate/errors.hpp"

extern "C" void dlanv2_(double* a, double* b, double* c, double* d, double* rt1r, double* rt1i, double* rt2r,
                        double* rt2i, double* cs, double* sn);

namespace thermoplate::dense {

namespace {

void require_square(const Eigen::MatrixXd& a, const char* what) {
    if (a.rows() != a.cols()) throw InvalidArgument(std::string(what) + ": matrix must be square");
}

// Brings every 2x2 diagonal block to standard form (equal diagonal, complex
// pair) and splits blocks with real eigenvalues, updating q alongside.
void standardize(Eigen::MatrixXd& t, Eigen::MatrixXd& q) {
    const Eigen::Index n = t.rows();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        if (t(i + 1, i) == 0.0) continue;
        double a = t(i, i), b = t(i, i + 1), c = t(i + 1, i), d = t(i + 1, i + 1);
        double rt1r, rt1i, rt2r, rt2i, cs, sn;
        dlanv2_(&a, &b, &c, &d, &rt1r, &rt1i, &rt2r, &rt2i, &cs, &sn);
        t(i, i) = a;
        t(i, i + 1) = b;
        t(i + 1, i) = c;
        t(i + 1, i + 1) = d;
        // Rotate the rest of rows i, i+1 and columns i, i+1.
        for (Eigen::Index j = i + 2; j < n; ++j) {
            const double x = t(i, j), y = t(i + 1, j);
            t(i, j) = cs * x + sn * y;
            t(i + 1, j) = -sn * x + cs * y;
        }
        for (Eigen::Index r = 0; r < i; ++r) {
            const double x = t(r, i), y = t(r, i + 1);
            t(r, i) = cs * x + sn * y;
            t(r, i + 1) = -sn * x + cs * y;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
            const double x = q(r, i), y = q(r, i + 1);
            q(r, i) = cs * x + sn * y;
            q(r, i + 1) = -sn * x + cs * y;
        }
        if (c != 0.0) ++i;
    }
    // Clear roundoff below the quasi-triangle.
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j + 2; i < n; ++i) t(i, j) = 0.0;
}

}  // namespace

Eigen::VectorXcd quasi_triangular_eigenvalues(const Eigen::MatrixXd& t) {
    const Eigen::Index n = t.rows();
    Eigen::VectorXcd ev(n);
    for (Eigen::Index i = 0; i < n;) {
        if (i + 1 < n && t(i + 1, i) != 0.0) {
            // Standard block: equal diagonal, b*c < 0.
            const double re = 0.5 * (t(i, i) + t(i + 1, i + 1));
            const double im = std::sqrt(std::abs(t(i, i + 1))) * std::sqrt(std::abs(t(i + 1, i)));
            ev(i) = {re, im};
            ev(i + 1) = {re, -im};
            i += 2;
        } else {
            ev(i) = t(i, i);
            ++i;
        }
    }
    return ev;
}

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& a) {
    require_square(a, "eigenvalues");
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    if (es.info() != Eigen::Success) throw NumericalFailure("eigensolver did not converge");
    return es.eigenvalues();
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) {
    Eigen::BDCSVD<Eigen::MatrixXd> s(a);
    if (s.info() != Eigen::Success) throw NumericalFailure("SVD did not converge");
    return s.singularValues();
}

Svd svd(const Eigen::MatrixXd& a) {
    require_square(a, "svd");
    Eigen::BDCSVD<Eigen::MatrixXd> s(a, Eigen::ComputeFullV);
    if (s.info() != Eigen::Success) throw NumericalFailure("SVD did not converge");
    return {s.singularValues(), s.matrixV()};
}

RealSchurForm real_schur(const Eigen::MatrixXd& a) {
    require_square(a, "real_schur");
    Eigen::RealSchur<Eigen::MatrixXd> rs(a, true);
    if (rs.info() != Eigen::Success) throw NumericalFailure("real Schur decomposition did not converge");
    RealSchurForm out{rs.matrixT(), rs.matrixU(), {}};
    standardize(out.t, out.q);
    out.eigenvalues = quasi_triangular_eigenvalues(out.t);
    return out;
}

OrderedSchur reorder(RealSchurForm form, const std::function<bool(std::complex<double>)>& select) {
    const lapack_int n = static_cast<lapack_int>(form.t.rows());
    OrderedSchur out;
    static_cast<RealSchurForm&>(out) = std::move(form);
    if (n == 0) return out;
    std::vector<lapack_logical> chosen(n, 0);
    for (lapack_int i = 0; i < n; ++i) chosen[i] = select(out.eigenvalues(i)) ? 1 : 0;
    for (lapack_int i = 0; i + 1 < n; ++i) {
        if (out.t(i + 1, i) != 0.0) {
            const lapack_logical both = (chosen[i] || chosen[i + 1]) ? 1 : 0;
            chosen[i] = chosen[i + 1] = both;
            ++i;
        }
    }
    std::vector<double> wr(n), wi(n);
    lapack_int m = 0;
    double s = 1.0, sep = 0.0;
    lapack_int msel = 0;
    for (auto c : chosen) msel += c;
    const lapack_int lwork = std::max<lapack_int>(1, 2 * msel * (n - msel));
    std::vector<double> work(lwork);
    std::vector<lapack_int> iwork(1);
    // The high-level LAPACKE entry point passes a null iwork for job 'E',
    // which dtrsen still writes to; supply the workspaces directly.
    const lapack_int info =
        LAPACKE_dtrsen_work(LAPACK_COL_MAJOR, 'E', 'V', chosen.data(), n, out.t.data(), n, out.q.data(), n, wr.data(),
                            wi.data(), &m, &s, &sep, work.data(), lwork, iwork.data(), 1);
    if (info == 1) throw NumericalFailure("dtrsen: reordering failed (eigenvalues too close)");
    if (info != 0) throw NumericalFailure("dtrsen: info " + std::to_string(info));
    out.selected = m;
    out.cluster_rcond = (m == 0 || m == n) ? 1.0 : s;
    for (lapack_int i = 0; i < n; ++i) out.eigenvalues(i) = {wr[i], wi[i]};
    return out;
}

Eigen::MatrixXd solve_sylvester(const Eigen::MatrixXd& t11, const Eigen::MatrixXd& t22, const Eigen::MatrixXd& c) {
    const lapack_int m = static_cast<lapack_int>(t11.rows());
    const lapack_int n = static_cast<lapack_int>(t22.rows());
    if (c.rows() != m || c.cols() != n) throw InvalidArgument("solve_sylvester: shape mismatch");
    if (m == 0 || n == 0) return Eigen::MatrixXd::Zero(m, n);
    Eigen::MatrixXd a = t11;
    Eigen::MatrixXd b = t22;
    Eigen::MatrixXd x = c;
    double scale = 1.0;
    const lapack_int info =
        LAPACKE_dtrsyl(LAPACK_COL_MAJOR, 'N', 'N', -1, m, n, a.data(), m, b.data(), n, x.data(), m, &scale);
    if (info < 0) throw NumericalFailure("dtrsyl: illegal argument " + std::to_string(-info));
    // info == 1 flags perturbed eigenvalues; the projector condition is
    // checked separately by the caller.
    return x / scale;
}

}  // namespace thermoplate::dense
