#pragma once

// Time-dependent Schroedinger integration for drive protocols
// H(t) = sum_k f_k(t) M_k, with expectation-value and averaging helpers.
//
// The stepper is a 4th-order commutator-free scheme (two exponentials per
// step, Gauss-Legendre nodes). Exponentials are applied either exactly via
// dense eigendecomposition (small systems) or by a Lanczos Krylov expansion,
// so every step is unitary up to the requested tolerance. Step size is
// controlled by step doubling.

#include "floq/basis.hpp"
#include "floq/linalg.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <memory>

namespace floq {

struct DriveTerm {
    Operator op;
    std::function<double(double)> coeff;
};

struct DriveProtocol {
    BasisDescriptor basis;
    std::vector<DriveTerm> terms;
    std::optional<double> period;  // set when the drive is periodic

    static DriveProtocol constant(const Operator& H) {
        return {H.basis, {{H, [](double) { return 1.0; }}}, std::nullopt};
    }
};

inline DriveProtocol make_protocol(std::vector<DriveTerm> terms, std::optional<double> period = std::nullopt) {
    if (terms.empty()) throw std::invalid_argument("make_protocol: no terms");
    for (std::size_t k = 1; k < terms.size(); ++k)
        if (terms[k].op.basis != terms[0].op.basis)
            throw std::invalid_argument("make_protocol: basis mismatch between terms");
    return {terms[0].op.basis, std::move(terms), period};
}

// Max deviation of |f(t+T) - f(t)| over sampled points; 0 for protocols
// without a declared period.
inline double periodicity_defect(const DriveProtocol& p, int samples = 17) {
    if (!p.period) return 0.0;
    const double T = *p.period;
    double worst = 0.0;
    for (const auto& term : p.terms)
        for (int i = 0; i < samples; ++i) {
            const double t = T * (i + 0.371) / samples;
            worst = std::max(worst, std::abs(term.coeff(t + T) - term.coeff(t)));
        }
    return worst;
}

struct Trajectory {
    BasisDescriptor basis;
    std::vector<double> times;
    std::vector<Vec> states;
    double norm_drift = 0.0;

    StateVector state_at(std::size_t i) const { return StateVector(basis, states.at(i), true); }
};

struct EvolveOptions {
    double tol = 1e-8;          // global norm/phase error budget over the grid span
    double h_init = 0.0;        // 0: choose automatically
    long max_steps = 20'000'000;
    int krylov_max = 64;
    int dense_eig_dim = 48;     // below this, exponentials use exact eigendecomposition
    int dense_matvec_dim = 512; // below this, terms are stored dense for matvec speed
};

namespace detail {

// Applies H(w) = sum_k w_k M_k; terms kept dense below a dimension threshold.
class HamiltonianApplier {
  public:
    HamiltonianApplier(const DriveProtocol& p, int dense_matvec_dim) : proto_(&p) {
        dim_ = p.basis.dim();
        dense_terms_ = dim_ <= dense_matvec_dim;
        if (dense_terms_)
            for (const auto& t : p.terms) dense_.push_back(to_dense(t.op));
    }

    int dim() const { return dim_; }
    std::size_t n_terms() const { return proto_->terms.size(); }

    std::vector<double> weights_at(double t) const {
        std::vector<double> w(n_terms());
        for (std::size_t k = 0; k < w.size(); ++k) {
            w[k] = proto_->terms[k].coeff(t);
            if (!std::isfinite(w[k]))
                throw std::runtime_error("evolve: non-finite drive coefficient at t=" + std::to_string(t));
        }
        return w;
    }

    void matvec(const std::vector<double>& w, const Vec& x, Vec& y) const {
        y.setZero(dim_);
        for (std::size_t k = 0; k < w.size(); ++k) {
            if (w[k] == 0.0) continue;
            if (dense_terms_)
                y.noalias() += w[k] * (dense_[k] * x);
            else
                y += w[k] * (proto_->terms[k].op.mat * x);
        }
    }

    Eigen::MatrixXcd materialize(const std::vector<double>& w) const {
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(dim_, dim_);
        for (std::size_t k = 0; k < w.size(); ++k) {
            if (w[k] == 0.0) continue;
            if (dense_terms_)
                H += w[k] * dense_[k];
            else
                H += w[k] * to_dense(proto_->terms[k].op);
        }
        return H;
    }

  private:
    const DriveProtocol* proto_;
    int dim_ = 0;
    bool dense_terms_ = false;
    std::vector<Eigen::MatrixXcd> dense_;
};

// psi <- exp(-i h H(w)) psi via Lanczos; splits the step when the Krylov
// space saturates (exact for a frozen H).
inline void krylov_exp_inplace(const HamiltonianApplier& ham, const std::vector<double>& w, double h,
                               Vec& psi, double abs_tol, int m_max) {
    const double nrm = psi.norm();
    if (nrm == 0.0) return;
    const int dim = ham.dim();
    const int mcap = std::min(m_max, dim);

    std::vector<Vec> basis;
    basis.reserve(mcap);
    basis.push_back(psi / nrm);
    std::vector<double> alpha, beta;
    Vec work(dim);

    Eigen::VectorXcd small_result;
    bool converged = false;
    double beta_next = 0.0;
    for (int j = 0; j < mcap; ++j) {
        ham.matvec(w, basis[j], work);
        cplx a = basis[j].dot(work);
        alpha.push_back(a.real());
        work -= a * basis[j];
        if (j > 0) work -= cplx(beta[j - 1]) * basis[j - 1];
        // full reorthogonalization keeps the small problem well conditioned
        for (const auto& b : basis) work -= b.dot(work) * b;
        beta_next = work.norm();

        const int m = j + 1;
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) T(i, i) = alpha[i];
        for (int i = 0; i + 1 < m; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        Eigen::VectorXcd phases(m);
        for (int i = 0; i < m; ++i) phases[i] = std::polar(1.0, -h * es.eigenvalues()[i]);
        Eigen::VectorXcd e1coef = es.eigenvectors().row(0).transpose().cast<cplx>();
        small_result = es.eigenvectors().cast<cplx>() * phases.cwiseProduct(e1coef);

        const double err_est = beta_next * std::abs(h) * std::abs(small_result[m - 1]);
        if (beta_next < 1e-13 || err_est < abs_tol / std::max(1.0, nrm)) {
            converged = true;
            break;
        }
        beta.push_back(beta_next);
        basis.push_back(work / beta_next);
    }

    if (!converged) {
        // Krylov space saturated: halve the step (exact splitting for frozen H).
        krylov_exp_inplace(ham, w, h / 2, psi, abs_tol / 2, m_max);
        krylov_exp_inplace(ham, w, h / 2, psi, abs_tol / 2, m_max);
        return;
    }
    Vec out = Vec::Zero(dim);
    for (std::size_t j = 0; j < basis.size() && static_cast<int>(j) < small_result.size(); ++j)
        out += small_result[static_cast<int>(j)] * basis[j];
    psi = nrm * out;
}

class Stepper {
  public:
    Stepper(const DriveProtocol& p, const EvolveOptions& opt)
        : ham_(p, opt.dense_matvec_dim), opt_(opt) {}

    // One CF4 step over [t, t+h].
    Vec cf4(const Vec& psi, double t, double h, double abs_tol) const {
        static const double kNode = std::sqrt(3.0) / 6.0;
        const double c1 = 0.5 - kNode, c2 = 0.5 + kNode;
        const double a1 = 0.25 - kNode, a2 = 0.25 + kNode;
        const auto w1 = ham_.weights_at(t + c1 * h);
        const auto w2 = ham_.weights_at(t + c2 * h);
        std::vector<double> early(w1.size()), late(w1.size());
        for (std::size_t k = 0; k < w1.size(); ++k) {
            early[k] = a2 * w1[k] + a1 * w2[k];  // first (rightmost) exponential
            late[k] = a1 * w1[k] + a2 * w2[k];
        }
        Vec out = psi;
        apply_exp(early, h, out, abs_tol / 2);
        apply_exp(late, h, out, abs_tol / 2);
        return out;
    }

    int dim() const { return ham_.dim(); }

  private:
    void apply_exp(const std::vector<double>& w, double h, Vec& psi, double abs_tol) const {
        if (ham_.dim() <= opt_.dense_eig_dim) {
            Eigen::MatrixXcd H = ham_.materialize(w);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
            Eigen::VectorXcd coef = es.eigenvectors().adjoint() * psi;
            for (int i = 0; i < coef.size(); ++i) coef[i] *= std::polar(1.0, -h * es.eigenvalues()[i]);
            psi = es.eigenvectors() * coef;
        } else {
            krylov_exp_inplace(ham_, w, h, psi, abs_tol, opt_.krylov_max);
        }
    }

    HamiltonianApplier ham_;
    EvolveOptions opt_;
};

}  // namespace detail

// Integrates H(t) from a normalized initial state, recording the state at
// every grid time. Unitary to within `tol` over the whole span.
inline Trajectory evolve(const DriveProtocol& H, const StateVector& psi0, const std::vector<double>& t_grid,
                         const EvolveOptions& opt = {}) {
    if (H.basis != psi0.basis) throw std::invalid_argument("evolve: state/protocol basis mismatch");
    if (t_grid.empty() || t_grid.front() != 0.0)
        throw std::invalid_argument("evolve: time grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (t_grid[i] <= t_grid[i - 1]) throw std::invalid_argument("evolve: time grid must be increasing");

    const double span = t_grid.back() - t_grid.front();
    const double rate = span > 0 ? opt.tol / span : opt.tol;  // error allowance per unit time
    const double h_min = std::max(1e-13, span * 1e-13);

    detail::Stepper stepper(H, opt);
    Trajectory traj;
    traj.basis = H.basis;
    traj.times = t_grid;
    traj.states.reserve(t_grid.size());
    traj.states.push_back(psi0.amps);

    Vec psi = psi0.amps;
    double h = opt.h_init > 0 ? opt.h_init : std::min(span > 0 ? span / 100 : 0.1, 0.1);
    long steps = 0;

    for (std::size_t g = 1; g < t_grid.size(); ++g) {
        double t = t_grid[g - 1];
        const double t_end = t_grid[g];
        while (t < t_end) {
            h = std::min(h, t_end - t);
            // roundoff floor keeps the controller from chasing noise at
            // tolerances near machine precision
            const double allow = std::max(rate * h, 64.0 * std::numeric_limits<double>::epsilon());
            Vec full = stepper.cf4(psi, t, h, allow);
            Vec mid = stepper.cf4(psi, t, h / 2, allow);
            Vec half = stepper.cf4(mid, t + h / 2, h / 2, allow);
            const double est = (full - half).norm() / 15.0;
            if (++steps > opt.max_steps)
                throw std::runtime_error("evolve: step budget exhausted at t=" + std::to_string(t) +
                                         " (tolerance unachievable)");
            if (est <= allow) {
                psi = std::move(half);
                t += h;
                const double grow = est > 0 ? 0.9 * std::pow(allow / est, 0.2) : 4.0;
                h *= std::clamp(grow, 1.0, 4.0);
            } else {
                const double shrink = 0.9 * std::pow(allow / est, 0.2);
                h *= std::clamp(shrink, 0.1, 0.9);
                if (h < h_min)
                    throw std::runtime_error("evolve: step-size underflow at t=" + std::to_string(t));
            }
        }
        traj.states.push_back(psi);
        traj.norm_drift = std::max(traj.norm_drift, std::abs(psi.norm() - 1.0));
    }
    if (traj.norm_drift > 10 * opt.tol)
        warn("evolve: norm drift " + std::to_string(traj.norm_drift) + " exceeds 10x tolerance");
    return traj;
}

// Evolution under a time-independent Hamiltonian, sampled on a grid. Small
// systems go through one exact eigendecomposition; larger ones step from
// sample to sample with Krylov exponentials.
inline Trajectory evolve_static(const Operator& H, const StateVector& psi0,
                                const std::vector<double>& t_grid, double tol = 1e-10) {
    if (H.basis != psi0.basis) throw std::invalid_argument("evolve_static: basis mismatch");
    if (t_grid.empty() || t_grid.front() != 0.0)
        throw std::invalid_argument("evolve_static: time grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (t_grid[i] <= t_grid[i - 1]) throw std::invalid_argument("evolve_static: grid must be increasing");

    Trajectory traj;
    traj.basis = H.basis;
    traj.times = t_grid;
    traj.states.reserve(t_grid.size());

    if (H.dim() <= 64) {
        EigenSystem es = eigh(H);
        for (double t : t_grid) traj.states.push_back(evolve_with_eigensystem(es, psi0.amps, -t));
    } else {
        DriveProtocol proto = DriveProtocol::constant(H);
        detail::HamiltonianApplier ham(proto, 512);
        const std::vector<double> w{1.0};
        const double per_exp = tol / static_cast<double>(t_grid.size());
        Vec psi = psi0.amps;
        traj.states.push_back(psi);
        for (std::size_t i = 1; i < t_grid.size(); ++i) {
            detail::krylov_exp_inplace(ham, w, t_grid[i] - t_grid[i - 1], psi, per_exp, 64);
            traj.states.push_back(psi);
        }
    }
    for (const auto& s : traj.states)
        traj.norm_drift = std::max(traj.norm_drift, std::abs(s.norm() - 1.0));
    return traj;
}

// <psi(t)|O|psi(t)> time series for Hermitian O.
inline std::vector<double> expectation(const Trajectory& traj, const Operator& O) {
    if (O.basis != traj.basis) throw std::invalid_argument("expectation: basis mismatch");
    if (!is_hermitian(O, 1e-12))
        throw std::invalid_argument("expectation: non-Hermitian operator (use expectation_complex)");
    std::vector<double> out(traj.states.size());
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const cplx v = traj.states[i].dot(O.mat * traj.states[i]);
        if (std::abs(v.imag()) > 1e-10)
            throw std::runtime_error("expectation: imaginary residue above 1e-10");
        out[i] = v.real();
    }
    return out;
}

inline std::vector<cplx> expectation_complex(const Trajectory& traj, const Operator& O) {
    if (O.basis != traj.basis) throw std::invalid_argument("expectation: basis mismatch");
    std::vector<cplx> out(traj.states.size());
    for (std::size_t i = 0; i < traj.states.size(); ++i) out[i] = traj.states[i].dot(O.mat * traj.states[i]);
    return out;
}

// Trapezoidal mean of a sampled series over [t_lo, t_hi].
inline double time_average(const std::vector<double>& times, const std::vector<double>& values,
                           double t_lo, double t_hi) {
    if (times.size() != values.size() || times.size() < 2)
        throw std::invalid_argument("time_average: mismatched or short series");
    if (!(t_hi > t_lo)) throw std::invalid_argument("time_average: empty window");
    if (t_lo < times.front() - 1e-12 || t_hi > times.back() + 1e-12)
        throw std::invalid_argument("time_average: window outside series support");
    double integral = 0.0;
    for (std::size_t i = 1; i < times.size(); ++i) {
        double a = std::max(times[i - 1], t_lo), b = std::min(times[i], t_hi);
        if (b <= a) continue;
        auto lerp = [&](double t) {
            const double u = (t - times[i - 1]) / (times[i] - times[i - 1]);
            return values[i - 1] + u * (values[i] - values[i - 1]);
        };
        integral += 0.5 * (lerp(a) + lerp(b)) * (b - a);
    }
    return integral / (t_hi - t_lo);
}

// Photon coherent state on the truncated Fock space. Warns when the cut
// tail carries more than 1e-8 probability, rejects above 1e-4.
inline StateVector coherent_state(cplx alpha, int n_max, double* tail_mass_out = nullptr) {
    if (n_max < 1) throw std::invalid_argument("coherent_state: n_max must be >= 1");
    Vec amps(n_max + 1);
    cplx c = std::exp(-0.5 * std::norm(alpha));
    double mass = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        amps[n] = c;
        mass += std::norm(c);
        c *= alpha / std::sqrt(static_cast<double>(n + 1));
    }
    const double tail = std::max(0.0, 1.0 - mass);
    if (tail_mass_out) *tail_mass_out = tail;
    if (tail > 1e-4)
        throw std::invalid_argument("coherent_state: truncation tail mass " + std::to_string(tail) +
                                    " exceeds 1e-4");
    if (tail > 1e-8)
        warn("coherent_state: truncation tail mass " + std::to_string(tail));
    return StateVector(BasisDescriptor{Factor::boson(n_max)}, std::move(amps), true);
}

}  // namespace floq
