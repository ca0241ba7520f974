#pragma once

// Fock bases and operator algebras (boson, spin, qubit, Euclidean) plus
// tensor-product plumbing. Everything downstream builds Hamiltonians from
// the operators constructed here.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace floq {

using cplx = std::complex<double>;
using SparseMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using Vec = Eigen::VectorXcd;

inline void warn(const std::string& msg) {
    std::cerr << "[floq] warning: " << msg << "\n";
}

enum class FactorKind { boson, spin, qubit, euclidean };

enum class Boundary { open, periodic };

inline const char* to_string(FactorKind k) {
    switch (k) {
        case FactorKind::boson: return "boson";
        case FactorKind::spin: return "spin";
        case FactorKind::qubit: return "qubit";
        case FactorKind::euclidean: return "euclidean";
    }
    return "?";
}

// One tensor factor. `param` holds n_max (boson), 2S (spin), 0 (qubit) or
// M (euclidean); dimensions follow from it.
struct Factor {
    FactorKind kind;
    int dim;
    int param;

    static Factor boson(int n_max) { return {FactorKind::boson, n_max + 1, n_max}; }
    static Factor spin(int two_S) { return {FactorKind::spin, two_S + 1, two_S}; }
    static Factor qubit() { return {FactorKind::qubit, 2, 0}; }
    static Factor euclidean(int M) { return {FactorKind::euclidean, 2 * M + 1, M}; }

    // Quantum number of basis index i (ascending ordering for every kind).
    double label(int i) const {
        switch (kind) {
            case FactorKind::boson: return i;
            case FactorKind::spin: return i - param / 2.0;
            case FactorKind::qubit: return i == 0 ? -1.0 : 1.0;
            case FactorKind::euclidean: return i - param;
        }
        return 0.0;
    }

    bool operator==(const Factor& o) const {
        return kind == o.kind && dim == o.dim && param == o.param;
    }
};

struct BasisDescriptor {
    std::vector<Factor> factors;

    BasisDescriptor() = default;
    BasisDescriptor(std::initializer_list<Factor> fs) : factors(fs) {}
    explicit BasisDescriptor(Factor f) : factors{f} {}

    int dim() const {
        int d = 1;
        for (const auto& f : factors) d *= f.dim;
        return d;
    }

    // Linear index <-> per-factor indices, first factor slowest.
    std::vector<int> unravel(int idx) const {
        std::vector<int> out(factors.size());
        for (int k = static_cast<int>(factors.size()) - 1; k >= 0; --k) {
            out[k] = idx % factors[k].dim;
            idx /= factors[k].dim;
        }
        return out;
    }

    int ravel(const std::vector<int>& ids) const {
        int idx = 0;
        for (std::size_t k = 0; k < factors.size(); ++k) idx = idx * factors[k].dim + ids[k];
        return idx;
    }

    std::vector<double> labels_of(int idx) const {
        auto ids = unravel(idx);
        std::vector<double> out(ids.size());
        for (std::size_t k = 0; k < ids.size(); ++k) out[k] = factors[k].label(ids[k]);
        return out;
    }

    bool operator==(const BasisDescriptor& o) const { return factors == o.factors; }
    bool operator!=(const BasisDescriptor& o) const { return !(*this == o); }
};

// Sparse operator carrying its basis metadata. Entry ordering is row-major
// and assembly is deterministic, so identical inputs give identical matrices.
struct Operator {
    BasisDescriptor basis;
    SparseMat mat;

    Operator() = default;
    Operator(BasisDescriptor b, SparseMat m) : basis(std::move(b)), mat(std::move(m)) {
        if (mat.rows() != mat.cols()) throw std::invalid_argument("Operator: matrix not square");
        if (mat.rows() != basis.dim()) throw std::invalid_argument("Operator: dimension does not match basis");
    }

    int dim() const { return static_cast<int>(mat.rows()); }

    Operator adjoint() const {
        SparseMat a = mat.adjoint();
        a.makeCompressed();
        return Operator(basis, std::move(a));
    }
};

inline double hermiticity_defect(const Operator& op) {
    SparseMat d = SparseMat(op.mat - SparseMat(op.mat.adjoint()));
    double m = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
        for (SparseMat::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
    return m;
}

inline bool is_hermitian(const Operator& op, double tol = 1e-12) {
    return hermiticity_defect(op) <= tol;
}

inline double max_abs_entry(const SparseMat& m) {
    double v = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseMat::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
    return v;
}

namespace detail {
inline SparseMat from_triplets(int rows, int cols, const std::vector<Eigen::Triplet<cplx>>& ts) {
    SparseMat m(rows, cols);
    m.setFromTriplets(ts.begin(), ts.end());
    m.makeCompressed();
    return m;
}
}  // namespace detail

// ---- algebra on operators -------------------------------------------------

inline Operator operator*(cplx c, const Operator& a) {
    SparseMat m = a.mat * c;
    return Operator(a.basis, std::move(m));
}
inline Operator operator*(double c, const Operator& a) { return cplx(c, 0.0) * a; }

inline Operator operator+(const Operator& a, const Operator& b) {
    if (a.basis != b.basis) throw std::invalid_argument("operator+: basis mismatch");
    SparseMat m = a.mat + b.mat;
    m.makeCompressed();
    return Operator(a.basis, std::move(m));
}

inline Operator operator-(const Operator& a, const Operator& b) {
    if (a.basis != b.basis) throw std::invalid_argument("operator-: basis mismatch");
    SparseMat m = a.mat - b.mat;
    m.makeCompressed();
    return Operator(a.basis, std::move(m));
}

inline Operator operator*(const Operator& a, const Operator& b) {
    if (a.basis != b.basis) throw std::invalid_argument("operator*: basis mismatch");
    SparseMat m = SparseMat(a.mat * b.mat);
    m.makeCompressed();
    return Operator(a.basis, std::move(m));
}

inline Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

inline Operator identity(const BasisDescriptor& basis) {
    SparseMat m(basis.dim(), basis.dim());
    m.setIdentity();
    return Operator(basis, std::move(m));
}

// Kronecker product A (x) B, first factor slowest: index = iA*dimB + iB.
inline Operator kron(const Operator& a, const Operator& b) {
    std::vector<Eigen::Triplet<cplx>> ts;
    ts.reserve(static_cast<std::size_t>(a.mat.nonZeros()) * b.mat.nonZeros());
    const int db = b.dim();
    for (int ka = 0; ka < a.mat.outerSize(); ++ka)
        for (SparseMat::InnerIterator ia(a.mat, ka); ia; ++ia)
            for (int kb = 0; kb < b.mat.outerSize(); ++kb)
                for (SparseMat::InnerIterator ib(b.mat, kb); ib; ++ib)
                    ts.emplace_back(static_cast<int>(ia.row()) * db + static_cast<int>(ib.row()),
                                    static_cast<int>(ia.col()) * db + static_cast<int>(ib.col()),
                                    ia.value() * ib.value());
    BasisDescriptor basis;
    basis.factors = a.basis.factors;
    basis.factors.insert(basis.factors.end(), b.basis.factors.begin(), b.basis.factors.end());
    return Operator(basis, detail::from_triplets(a.dim() * db, a.dim() * db, ts));
}

// Tensor product of an ordered list of operators; identity placeholders are
// just identity operators on their factor.
inline Operator tensor(const std::vector<Operator>& ops) {
    if (ops.empty()) throw std::invalid_argument("tensor: empty factor list");
    Operator out = ops.front();
    for (std::size_t k = 1; k < ops.size(); ++k) out = kron(out, ops[k]);
    return out;
}

// Places `ops[k]` at factor position `positions[k]` of `basis`, identities on
// all unlisted factors.
inline Operator embed(const BasisDescriptor& basis,
                      const std::vector<std::pair<std::size_t, Operator>>& placed) {
    std::vector<Operator> slots;
    slots.reserve(basis.factors.size());
    for (std::size_t k = 0; k < basis.factors.size(); ++k) {
        const Operator* found = nullptr;
        for (const auto& [pos, op] : placed)
            if (pos == k) found = &op;
        if (found) {
            if (found->basis.factors.size() != 1 || !(found->basis.factors[0] == basis.factors[k]))
                throw std::invalid_argument("embed: operator does not match factor " + std::to_string(k));
            slots.push_back(*found);
        } else {
            slots.push_back(identity(BasisDescriptor(basis.factors[k])));
        }
    }
    return tensor(slots);
}

// ---- normalized states ----------------------------------------------------

struct StateVector {
    BasisDescriptor basis;
    Vec amps;

    StateVector() = default;
    StateVector(BasisDescriptor b, Vec a, bool renormalize = true)
        : basis(std::move(b)), amps(std::move(a)) {
        if (amps.size() != basis.dim()) throw std::invalid_argument("StateVector: size does not match basis");
        const double n = amps.norm();
        if (n == 0.0) throw std::invalid_argument("StateVector: zero vector");
        if (renormalize)
            amps /= n;
        else if (std::abs(n - 1.0) > 1e-10)
            throw std::invalid_argument("StateVector: not normalized");
    }

    int dim() const { return static_cast<int>(amps.size()); }
};

inline cplx overlap(const StateVector& a, const StateVector& b) {
    if (a.basis != b.basis) throw std::invalid_argument("overlap: basis mismatch");
    return a.amps.dot(b.amps);  // conjugates the left argument
}

inline StateVector apply(const Operator& op, const StateVector& psi, bool renormalize = false) {
    if (op.basis != psi.basis) throw std::invalid_argument("apply: basis mismatch");
    Vec v = op.mat * psi.amps;
    return StateVector(psi.basis, std::move(v), renormalize);
}

inline cplx matrix_element(const StateVector& bra, const Operator& op, const StateVector& ket) {
    if (op.basis != bra.basis || op.basis != ket.basis)
        throw std::invalid_argument("matrix_element: basis mismatch");
    return bra.amps.dot(op.mat * ket.amps);
}

inline double expectation_value(const Operator& op, const StateVector& psi) {
    const cplx v = matrix_element(psi, op, psi);
    return v.real();
}

// ---- generators: boson ------------------------------------------------------

struct BosonOps {
    Operator a, a_dag, n;
};

// a|n> = sqrt(n)|n-1> on the truncated space {|0>..|n_max>}.
inline BosonOps boson_ops(int n_max) {
    if (n_max < 1) throw std::invalid_argument("boson_ops: n_max must be >= 1");
    const BasisDescriptor basis{Factor::boson(n_max)};
    std::vector<Eigen::Triplet<cplx>> ta, tn;
    for (int n = 1; n <= n_max; ++n) ta.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
    for (int n = 0; n <= n_max; ++n) tn.emplace_back(n, n, static_cast<double>(n));
    Operator a(basis, detail::from_triplets(n_max + 1, n_max + 1, ta));
    return {a, a.adjoint(), Operator(basis, detail::from_triplets(n_max + 1, n_max + 1, tn))};
}

// ---- generators: spin -------------------------------------------------------

struct SpinOps {
    Operator Sx, Sy, Sz, Splus, Sminus;
};

// Basis |S,m> ordered by ascending m = -S..S; S+|m> = sqrt(S(S+1)-m(m+1))|m+1>.
inline SpinOps spin_ops_2s(int two_S) {
    if (two_S < 1) throw std::invalid_argument("spin_ops: S must be positive");
    const double S = two_S / 2.0;
    const int dim = two_S + 1;
    const BasisDescriptor basis{Factor::spin(two_S)};
    std::vector<Eigen::Triplet<cplx>> tp, tz;
    for (int i = 0; i + 1 < dim; ++i) {
        const double m = i - S;
        tp.emplace_back(i + 1, i, std::sqrt(S * (S + 1) - m * (m + 1)));
    }
    for (int i = 0; i < dim; ++i) tz.emplace_back(i, i, i - S);
    Operator Sp(basis, detail::from_triplets(dim, dim, tp));
    Operator Sm = Sp.adjoint();
    Operator Sx = 0.5 * (Sp + Sm);
    Operator Sy = cplx(0.0, -0.5) * (Sp - Sm);
    Operator Sz(basis, detail::from_triplets(dim, dim, tz));
    return {Sx, Sy, Sz, Sp, Sm};
}

inline SpinOps spin_ops(double S) {
    const double two_S = 2.0 * S;
    if (S <= 0.0 || std::abs(two_S - std::round(two_S)) > 1e-9)
        throw std::invalid_argument("spin_ops: S must be a positive half-integer");
    return spin_ops_2s(static_cast<int>(std::lround(two_S)));
}

// ---- generators: qubit ------------------------------------------------------

struct QubitOps {
    Operator sz, splus, sminus, sx, sy;
};

// Basis order |g>, |e> (sigma_z eigenvalues -1, +1); sigma+ = |e><g|.
inline QubitOps qubit_ops() {
    const BasisDescriptor basis{Factor::qubit()};
    std::vector<Eigen::Triplet<cplx>> tz{{0, 0, cplx(-1.0)}, {1, 1, cplx(1.0)}};
    std::vector<Eigen::Triplet<cplx>> tp{{1, 0, cplx(1.0)}};
    Operator sz(basis, detail::from_triplets(2, 2, tz));
    Operator sp(basis, detail::from_triplets(2, 2, tp));
    Operator sm = sp.adjoint();
    return {sz, sp, sm, sp + sm, cplx(0.0, -1.0) * (sp - sm)};
}

// ---- generators: Euclidean (Fourier-index lattice of the drive) -------------

struct EuclideanOps {
    Operator E0, Eplus, Eminus;
};

// E0|m> = m|m> on m = -M..M;  E+|m> = |m+1>.  Open boundary truncates
// (E+|M> = 0), periodic wraps (E+|M> = |-M>).
inline EuclideanOps euclidean_ops(int M, Boundary boundary = Boundary::open) {
    if (M < 1) throw std::invalid_argument("euclidean_ops: M must be >= 1");
    const int dim = 2 * M + 1;
    const BasisDescriptor basis{Factor::euclidean(M)};
    std::vector<Eigen::Triplet<cplx>> t0, tp;
    for (int i = 0; i < dim; ++i) t0.emplace_back(i, i, static_cast<double>(i - M));
    for (int i = 0; i + 1 < dim; ++i) tp.emplace_back(i + 1, i, cplx(1.0));
    if (boundary == Boundary::periodic) tp.emplace_back(0, dim - 1, cplx(1.0));
    Operator E0(basis, detail::from_triplets(dim, dim, t0));
    Operator Ep(basis, detail::from_triplets(dim, dim, tp));
    return {E0, Ep, Ep.adjoint()};
}

// Uniform-amplitude phase state e^{-i theta m}/sqrt(2M+1); under periodic
// boundary an eigenstate of E+ + E- with eigenvalue 2 cos(theta) whenever
// theta is a reciprocal-lattice angle 2 pi k/(2M+1).
inline StateVector phase_state(int M, double theta) {
    if (M < 1) throw std::invalid_argument("phase_state: M must be >= 1");
    const int dim = 2 * M + 1;
    Vec amps(dim);
    const double norm = 1.0 / std::sqrt(static_cast<double>(dim));
    for (int i = 0; i < dim; ++i) {
        const double m = i - M;
        amps[i] = std::polar(norm, -theta * m);
    }
    return StateVector(BasisDescriptor{Factor::euclidean(M)}, std::move(amps), false);
}

}  // namespace floq
