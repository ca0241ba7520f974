#pragma once

// Floquet Hamiltonians on the extended space H (x) T, quasi-energy spectra,
// collapse back to the physical space, the one-period propagator, and the
// Fourier-lattice momentum distribution.

#include "floq/basis.hpp"
#include "floq/linalg.hpp"
#include "floq/propagate.hpp"

#include <map>
#include <mutex>

namespace floq {

struct FloquetSpec {
    double omega;
    int M;
    Boundary boundary = Boundary::open;

    FloquetSpec(double omega_, int M_, Boundary b = Boundary::open) : omega(omega_), M(M_), boundary(b) {
        if (omega <= 0) throw std::invalid_argument("FloquetSpec: omega must be positive");
        if (M < 1) throw std::invalid_argument("FloquetSpec: M must be >= 1");
    }

    int sites() const { return 2 * M + 1; }
    double period() const { return 2.0 * M_PI / omega; }
};

inline double fold_quasienergy(double eps, double omega) {
    double y = std::fmod(eps + 0.5 * omega, omega);
    if (y < 0) y += omega;
    return y - 0.5 * omega;
}

// Central window [lo, hi) covering `fraction` of n sorted items.
inline std::pair<int, int> central_window(int n, double fraction) {
    const int lo = static_cast<int>(std::lround(n * (1.0 - fraction) / 2.0));
    return {lo, n - lo};
}

namespace detail {
// k-step raising operator on the Euclidean lattice: <m|hop_k|m'> = delta_{m,m'+k}.
inline Operator euclidean_hop(int M, int k, Boundary boundary) {
    auto ops = euclidean_ops(M, boundary);
    Operator hop = identity(BasisDescriptor{Factor::euclidean(M)});
    const Operator& step = k >= 0 ? ops.Eplus : ops.Eminus;
    for (int i = 0; i < std::abs(k); ++i) hop = step * hop;
    return hop;
}
}  // namespace detail

// Assembles the extended-space Hamiltonian from Fourier blocks H^{(m)} of
// H(t) = sum_m e^{i m w t} H^{(m)}: diagonal blocks H^{(0)} + m w, block
// (m, m') = H^{(m-m')}.
inline Operator build_floquet_from_blocks(const std::map<int, Operator>& blocks, const FloquetSpec& spec) {
    if (blocks.empty()) throw std::invalid_argument("build_floquet_from_blocks: no blocks");
    const BasisDescriptor& phys = blocks.begin()->second.basis;
    for (const auto& [k, op] : blocks) {
        if (op.basis != phys) throw std::invalid_argument("build_floquet_from_blocks: block basis mismatch");
        auto conj_it = blocks.find(-k);
        if (conj_it == blocks.end())
            throw std::invalid_argument("build_floquet_from_blocks: missing conjugate block for m=" +
                                        std::to_string(k));
        const double defect = max_abs_entry(SparseMat(op.mat - SparseMat(conj_it->second.mat.adjoint())));
        if (defect > 1e-12)
            throw std::invalid_argument("build_floquet_from_blocks: H^{(-m)} != (H^{(m)})^dag for m=" +
                                        std::to_string(k));
    }

    const BasisDescriptor tdesc{Factor::euclidean(spec.M)};
    auto eops = euclidean_ops(spec.M, spec.boundary);
    Operator HF = kron(identity(phys), spec.omega * eops.E0);
    for (const auto& [k, op] : blocks) HF = HF + kron(op, detail::euclidean_hop(spec.M, k, spec.boundary));
    return HF;
}

// Harmonic-drive shortcut for H(t) = H_static + cos(w t) H_drive:
// H_static (x) I + H_drive (x) (E+ + E-)/2 + I (x) w E0.
inline Operator build_floquet_harmonic(const Operator& H_static, const Operator& H_drive,
                                       const FloquetSpec& spec) {
    if (H_static.basis != H_drive.basis)
        throw std::invalid_argument("build_floquet_harmonic: static/drive basis mismatch");
    auto eops = euclidean_ops(spec.M, spec.boundary);
    return kron(H_static, identity(BasisDescriptor{Factor::euclidean(spec.M)})) +
           kron(H_drive, 0.5 * (eops.Eplus + eops.Eminus)) + kron(identity(H_static.basis), spec.omega * eops.E0);
}

struct QuasiSpectrum {
    FloquetSpec spec;
    BasisDescriptor extended_basis;
    Eigen::VectorXd raw;     // ascending
    Eigen::VectorXd folded;  // same ordering, mapped to [-w/2, w/2)
    Eigen::MatrixXcd vectors;

    int size() const { return static_cast<int>(raw.size()); }
};

namespace detail {
inline int euclidean_factor_index(const BasisDescriptor& basis) {
    for (std::size_t k = 0; k < basis.factors.size(); ++k)
        if (basis.factors[k].kind == FactorKind::euclidean) return static_cast<int>(k);
    throw std::invalid_argument("expected a Euclidean factor in the basis");
}
}  // namespace detail

inline QuasiSpectrum quasienergies(const Operator& HF, const FloquetSpec& spec, bool with_vectors = true) {
    if (!is_hermitian(HF, 1e-10)) throw std::invalid_argument("quasienergies: non-Hermitian input");
    const int ei = detail::euclidean_factor_index(HF.basis);
    if (ei != static_cast<int>(HF.basis.factors.size()) - 1)
        throw std::invalid_argument("quasienergies: Euclidean factor must be last");
    EigenSystem es = eigh(HF, with_vectors);
    QuasiSpectrum qs{spec, HF.basis, es.values, Eigen::VectorXd(es.values.size()), std::move(es.vectors)};
    for (int i = 0; i < qs.raw.size(); ++i) qs.folded[i] = fold_quasienergy(qs.raw[i], spec.omega);
    return qs;
}

// Weight of an extended-space vector on the outermost `edge_fraction` of
// Euclidean sites (per side).
inline double edge_weight(const Vec& ext, const BasisDescriptor& basis, double edge_fraction = 0.1) {
    const int ei = detail::euclidean_factor_index(basis);
    const int M = basis.factors[ei].param;
    const double cut = (1.0 - edge_fraction) * M;
    double w = 0.0;
    const int dim = basis.dim();
    for (int i = 0; i < dim; ++i) {
        const auto ids = basis.unravel(i);
        const int m = ids[ei] - M;
        if (std::abs(m) > cut) w += std::norm(ext[i]);
    }
    return w;
}

// Collapse of an extended-space vector onto the physical space at time t:
// psi_phys = sum_m e^{i m w t} Psi_m (Euclidean factor must be last).
inline Vec collapse_raw(const Vec& ext, const BasisDescriptor& ext_basis, double omega, double t) {
    const std::size_t nf = ext_basis.factors.size();
    if (nf < 2 || ext_basis.factors[nf - 1].kind != FactorKind::euclidean)
        throw std::invalid_argument("collapse: extended basis must end with a Euclidean factor");
    const int M = ext_basis.factors[nf - 1].param;
    const int dimT = 2 * M + 1;
    const int dimH = ext_basis.dim() / dimT;
    Vec phases(dimT);
    for (int j = 0; j < dimT; ++j) phases[j] = std::polar(1.0, (j - M) * omega * t);
    Vec out = Vec::Zero(dimH);
    for (int i = 0; i < dimH; ++i)
        for (int j = 0; j < dimT; ++j) out[i] += phases[j] * ext[i * dimT + j];
    return out;
}

inline StateVector collapse_to_physical(const StateVector& ext, double omega, double t) {
    Vec v = collapse_raw(ext.amps, ext.basis, omega, t);
    BasisDescriptor phys;
    phys.factors.assign(ext.basis.factors.begin(), ext.basis.factors.end() - 1);
    return StateVector(phys, std::move(v), true);
}

// Floquet state |psi_n(t)> = e^{-i eps_n t} sum_m e^{i m w t} |phi_n, m>,
// summed onto the physical space. States leaking more than 1% onto the
// outermost 10% of Euclidean sites are truncation-contaminated.
inline StateVector floquet_state(const QuasiSpectrum& qs, int n, double t, bool* contaminated = nullptr) {
    if (n < 0 || n >= qs.size()) throw std::invalid_argument("floquet_state: index out of range");
    Vec ext = qs.vectors.col(n);
    const double ew = edge_weight(ext, qs.extended_basis);
    if (contaminated)
        *contaminated = ew > 0.01;
    else if (ew > 0.01)
        warn("floquet_state: index " + std::to_string(n) + " carries " + std::to_string(ew) +
             " edge weight (truncation-contaminated)");
    Vec v = collapse_raw(ext, qs.extended_basis, qs.spec.omega, t);
    v *= std::polar(1.0, -qs.raw[n] * t);
    BasisDescriptor phys;
    phys.factors.assign(qs.extended_basis.factors.begin(), qs.extended_basis.factors.end() - 1);
    const double nn = v.norm();
    if (nn < 1e-12) throw std::runtime_error("floquet_state: collapsed state has vanishing norm");
    v /= nn;
    return StateVector(phys, std::move(v), false);
}

// One-period propagator U(T, 0) from column-wise integration of the drive.
inline Operator monodromy(const DriveProtocol& H, double T, double tol = 1e-10) {
    if (!(T > 0)) throw std::invalid_argument("monodromy: period must be positive");
    if (H.period && std::abs(*H.period - T) > 1e-12 * std::max(1.0, T))
        throw std::invalid_argument("monodromy: protocol period differs from requested T");
    if (periodicity_defect(H) > 1e-12) throw std::invalid_argument("monodromy: drive is not T-periodic");
    const int dim = H.basis.dim();
    Eigen::MatrixXcd U(dim, dim);
    EvolveOptions opt;
    opt.tol = tol;
    for (int j = 0; j < dim; ++j) {
        Vec e = Vec::Zero(dim);
        e[j] = 1.0;
        Trajectory traj = evolve(H, StateVector(H.basis, e, false), {0.0, T}, opt);
        U.col(j) = traj.states.back();
    }
    const double defect = (U.adjoint() * U - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff();
    if (defect > 1e-8)
        throw std::runtime_error("monodromy: unitarity defect " + std::to_string(defect) + " above 1e-8");
    std::vector<Eigen::Triplet<cplx>> ts;
    ts.reserve(static_cast<std::size_t>(dim) * dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            if (std::abs(U(i, j)) > 0) ts.emplace_back(i, j, U(i, j));
    return Operator(H.basis, detail::from_triplets(dim, dim, ts));
}

// Quasi-energies from monodromy eigenphases: eps = -arg(lambda)/T, already
// inside the Brillouin window [-w/2, w/2).
inline std::vector<double> monodromy_quasienergies(const Operator& U, double T) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(to_dense(U));
    if (es.info() != Eigen::Success) throw std::runtime_error("monodromy_quasienergies: eigensolver failed");
    std::vector<double> eps(U.dim());
    for (int i = 0; i < U.dim(); ++i) eps[i] = -std::arg(es.eigenvalues()[i]) / T;
    std::sort(eps.begin(), eps.end());
    return eps;
}

struct MomentumDistribution {
    Eigen::VectorXd k;  // 2 pi j/(2M+1), j = -M..M
    Eigen::VectorXd P;  // sums to 1 for a normalized state
};

namespace detail {
// DFT matrix rows F(j, m) = e^{-i k_j m}/sqrt(N); cached per lattice size.
inline const Eigen::MatrixXcd& momentum_dft(int M) {
    static std::map<int, Eigen::MatrixXcd> cache;
    static std::mutex mx;
    std::lock_guard<std::mutex> lock(mx);
    auto it = cache.find(M);
    if (it != cache.end()) return it->second;
    const int N = 2 * M + 1;
    Eigen::MatrixXcd F(N, N);
    const double s = 1.0 / std::sqrt(static_cast<double>(N));
    for (int j = 0; j < N; ++j) {
        const double k = 2.0 * M_PI * (j - M) / N;
        for (int m = 0; m < N; ++m) F(j, m) = std::polar(s, -k * (m - M));
    }
    return cache.emplace(M, std::move(F)).first->second;
}
}  // namespace detail

inline Eigen::VectorXd momentum_grid(int M) {
    const int N = 2 * M + 1;
    Eigen::VectorXd k(N);
    for (int j = 0; j < N; ++j) k[j] = 2.0 * M_PI * (j - M) / N;
    return k;
}

// P(k) = <k| tr_H rho |k> for an extended-space pure state; the plane-wave
// convention <m|k> = e^{ikm}/sqrt(N) makes a Wannier-Stark tilt drift the
// ridge as k(t) = k0 - w t.
inline MomentumDistribution momentum_distribution(const StateVector& psi_full) {
    const auto& basis = psi_full.basis;
    const std::size_t nf = basis.factors.size();
    if (nf < 1 || basis.factors[nf - 1].kind != FactorKind::euclidean)
        throw std::invalid_argument("momentum_distribution: state must end with a Euclidean factor");
    const int M = basis.factors[nf - 1].param;
    const int N = 2 * M + 1;
    const int dimH = basis.dim() / N;
    const auto& F = detail::momentum_dft(M);
    // reshape state to (N x dimH): column per physical index
    Eigen::MatrixXcd X(N, dimH);
    for (int i = 0; i < dimH; ++i)
        for (int m = 0; m < N; ++m) X(m, i) = psi_full.amps[i * N + m];
    Eigen::MatrixXcd Y = F * X;
    MomentumDistribution out{momentum_grid(M), Eigen::VectorXd(N)};
    for (int j = 0; j < N; ++j) out.P[j] = Y.row(j).squaredNorm();
    return out;
}

}  // namespace floq
