#pragma once

// Dense linear algebra used by the bounded-domain module. Factorizations run
// in Eigen; LAPACK supplies Schur reordering and the triangular Sylvester
// solver, which only touch level-1/2 BLAS.

#include <complex>
#include <functional>

#include <Eigen/Dense>

namespace thermoplate::dense {

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& a);

Eigen::VectorXd singular_values(const Eigen::MatrixXd& a);

struct Svd {
    Eigen::VectorXd values;  // descending
    Eigen::MatrixXd right;   // columns = right singular vectors
};
Svd svd(const Eigen::MatrixXd& a);

// a = q t q^T, t in standardized real Schur form.
struct RealSchurForm {
    Eigen::MatrixXd t;
    Eigen::MatrixXd q;
    Eigen::VectorXcd eigenvalues;  // in diagonal order
};
RealSchurForm real_schur(const Eigen::MatrixXd& a);

// Eigenvalues read off a standardized quasi-triangular matrix.
Eigen::VectorXcd quasi_triangular_eigenvalues(const Eigen::MatrixXd& t);

struct OrderedSchur : RealSchurForm {
    int selected = 0;
    // Reciprocal condition number of the cluster projector (1 when nothing
    // or everything is selected).
    double cluster_rcond = 1.0;
};
// Moves the selected eigenvalues to the leading block. Conjugate pairs are
// selected together.
OrderedSchur reorder(RealSchurForm form, const std::function<bool(std::complex<double>)>& select);

// Solves t11 y - y t22 = c for quasi-triangular t11, t22.
Eigen::MatrixXd solve_sylvester(const Eigen::MatrixXd& t11, const Eigen::MatrixXd& t22, const Eigen::MatrixXd& c);

}  // namespace thermoplate::dense
