#pragma once

// Dense Hermitian eigensolves with an automatic real-symmetric fast path.

#include "floq/basis.hpp"

#include <Eigen/Dense>

namespace floq {

struct EigenSystem {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXcd vectors; // columns, orthonormal; empty if not requested
};

inline bool is_numerically_real(const SparseMat& m, double tol = 1e-14) {
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMat::InnerIterator it(m, k); it; ++it)
            if (std::abs(it.value().imag()) > tol) return false;
    return true;
}

// Full eigensolve of a Hermitian operator. Real-valued matrices are routed
// through the real symmetric solver; results agree with the complex path to
// solver precision.
inline EigenSystem eigh(const Operator& op, bool with_vectors = true) {
    if (!is_hermitian(op, 1e-10)) throw std::invalid_argument("eigh: operator is not Hermitian");
    const int n = op.dim();
    EigenSystem out;
    const auto flag = with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;
    if (is_numerically_real(op.mat)) {
        Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
        for (int k = 0; k < op.mat.outerSize(); ++k)
            for (SparseMat::InnerIterator it(op.mat, k); it; ++it)
                dense(it.row(), it.col()) = it.value().real();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, flag);
        if (es.info() != Eigen::Success) throw std::runtime_error("eigh: real solver did not converge");
        out.values = es.eigenvalues();
        if (with_vectors) out.vectors = es.eigenvectors().cast<cplx>();
    } else {
        Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(n, n);
        for (int k = 0; k < op.mat.outerSize(); ++k)
            for (SparseMat::InnerIterator it(op.mat, k); it; ++it) dense(it.row(), it.col()) = it.value();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense, flag);
        if (es.info() != Eigen::Success) throw std::runtime_error("eigh: complex solver did not converge");
        out.values = es.eigenvalues();
        if (with_vectors) out.vectors = es.eigenvectors();
    }
    return out;
}

inline Eigen::MatrixXcd to_dense(const Operator& op) {
    Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(op.dim(), op.dim());
    for (int k = 0; k < op.mat.outerSize(); ++k)
        for (SparseMat::InnerIterator it(op.mat, k); it; ++it) dense(it.row(), it.col()) = it.value();
    return dense;
}

// exp(i s A)|psi> for Hermitian A given its eigensystem.
inline Vec evolve_with_eigensystem(const EigenSystem& es, const Vec& psi, double s) {
    Vec coef = es.vectors.adjoint() * psi;
    for (int i = 0; i < coef.size(); ++i) coef[i] *= std::polar(1.0, s * es.values[i]);
    return es.vectors * coef;
}

}  // namespace floq
