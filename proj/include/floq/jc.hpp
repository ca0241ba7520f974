#pragma once

// Driven Jaynes-Cummings model with g(t) = g0 cos(w t): time-dependent
// Hamiltonian, the closed-form resonant inversion, the second-RWA block, the
// Wannier-Stark realization of the Floquet Hamiltonian, and the inversion /
// momentum-distribution pipelines.

#include "floq/basis.hpp"
#include "floq/floquet.hpp"
#include "floq/parallel.hpp"
#include "floq/propagate.hpp"

namespace floq {

// J_n(x) for all integer orders 0..n_max at once (downward recurrence with
// the sum-rule normalization J_0 + 2 J_2 + 2 J_4 + ... = 1).
inline std::vector<double> bessel_j_array(double x, int n_max) {
    std::vector<double> out(n_max + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    const double ax = std::abs(x);
    const int start = n_max + static_cast<int>(std::ceil(std::sqrt(40.0 * (n_max + 1)))) +
                      static_cast<int>(std::ceil(1.36 * ax)) + 20;
    double jp = 0.0, j = 1e-300;
    double sum = 0.0;
    for (int k = start; k >= 1; --k) {
        double jm = (2.0 * k / ax) * j - jp;
        jp = j;
        j = jm;
        if (k - 1 <= n_max) out[k - 1] = j;
        if (((k - 1) & 1) == 0) sum += (k - 1 == 0) ? j : 2.0 * j;
        if (std::abs(j) > 1e250) {  // rescale to dodge overflow
            j *= 1e-250;
            jp *= 1e-250;
            sum *= 1e-250;
            for (auto& v : out) v *= 1e-250;
        }
    }
    for (auto& v : out) v /= sum;
    if (x < 0)
        for (int k = 1; k <= n_max; k += 2) out[k] = -out[k];
    return out;
}

inline double bessel_jn(int n, double x) {
    double sign = 1.0;
    if (n < 0) {
        n = -n;
        if (n & 1) sign = -sign;
    }
    return sign * bessel_j_array(x, n)[n];
}

namespace jc {

struct JCParams {
    double Delta = 0.0;   // atom-field detuning
    double g0 = 1.0;      // coupling amplitude
    double omega = 0.025; // drive frequency
    double alpha = 5.0;   // initial coherent amplitude
    int n_max = 0;        // photon truncation; 0 = ceil(alpha^2 + 6 alpha)

    int resolved_n_max() const {
        return n_max > 0 ? n_max : static_cast<int>(std::ceil(alpha * alpha + 6.0 * std::abs(alpha)));
    }

    void validate() const {
        if (g0 < 0) throw std::invalid_argument("JCParams: g0 must be non-negative");
        if (omega <= 0) throw std::invalid_argument("JCParams: omega must be positive");
        const int need = static_cast<int>(std::ceil(alpha * alpha + 6.0 * std::abs(alpha)));
        if (resolved_n_max() < need)
            throw std::invalid_argument("JCParams: n_max below ceil(alpha^2 + 6 alpha) = " +
                                        std::to_string(need));
    }
};

struct JCTimescales {
    double t_tr;  // effective time reversal pi/(2w)
    double t_r;   // first JC revival 2 pi |alpha|/g0
    double t_R;   // inverse Rabi frequency pi/(g0 |alpha|)
    double t_c;   // collapse time 1/(2 g0)
};

inline JCTimescales timescales(const JCParams& p) {
    p.validate();
    if (p.g0 == 0 || p.alpha == 0) throw std::invalid_argument("timescales: need g0 > 0 and alpha != 0");
    return {M_PI / (2.0 * p.omega), 2.0 * M_PI * std::abs(p.alpha) / p.g0,
            M_PI / (p.g0 * std::abs(p.alpha)), 1.0 / (2.0 * p.g0)};
}

// H(t) = (Delta/2) sigma_z + g0 cos(w t)(a^dag sigma- + a sigma+) on
// qubit (x) boson; conserves N = n + sigma_z/2 exactly.
inline DriveProtocol jc_hamiltonian(const JCParams& p) {
    p.validate();
    auto q = qubit_ops();
    auto b = boson_ops(p.resolved_n_max());
    Operator coupling = kron(q.sminus, b.a_dag) + kron(q.splus, b.a);
    Operator detuning = kron(0.5 * p.Delta * q.sz, identity(b.n.basis));
    const double g0 = p.g0, w = p.omega;
    return make_protocol({{detuning, [](double) { return 1.0; }},
                          {coupling, [g0, w](double t) { return g0 * std::cos(w * t); }}},
                         2.0 * M_PI / w);
}

inline Operator jc_excitation_number(const JCParams& p) {
    auto q = qubit_ops();
    auto b = boson_ops(p.resolved_n_max());
    return kron(identity(q.sz.basis), b.n) + kron(0.5 * q.sz, identity(b.n.basis));
}

// Closed-form resonant inversion W(t) = sum_n 2|d_n|^2 cos(2 Omega_{n+1}(t))
// with Omega_n(t) = sqrt(n) g0 sin(w t)/w and Poissonian 2|d_n|^2.
inline double analytic_inversion(const JCParams& p, double t) {
    p.validate();
    if (p.Delta != 0.0)
        throw std::invalid_argument("analytic_inversion: closed form requires Delta = 0");
    const double mean = p.alpha * p.alpha;
    const double s = p.g0 * std::sin(p.omega * t) / p.omega;
    double w = 0.0, pn = std::exp(-mean), cum = 0.0;
    for (int n = 0; n < 100000; ++n) {
        w += pn * std::cos(2.0 * std::sqrt(n + 1.0) * s);
        cum += pn;
        if (1.0 - cum < 1e-12 && n > mean) break;
        pn *= mean / (n + 1);
    }
    return w;
}

// Second-RWA block on the {|n-1,e>, |n,g>} pair (approximation is dubious
// for slow drives w < g0).
inline Eigen::Matrix2d rwa_block(int n, const JCParams& p) {
    if (n < 0) throw std::invalid_argument("rwa_block: n must be non-negative");
    if (p.omega < p.g0) warn("rwa_block: omega < g0, second RWA dubious in the slow-drive regime");
    Eigen::Matrix2d h;
    const double off = 0.5 * p.g0 * std::sqrt(static_cast<double>(n));
    h << 0.5 * (p.Delta - p.omega), off, off, -0.5 * (p.Delta - p.omega);
    return h;
}

// x-basis Wannier-Stark chain for excitation sector nu and tau_z = tau:
// w E0 + tau (g0 sqrt(nu)/2)(E+ + E-).
inline Operator wannier_stark_chain(int nu, int tau, double g0, double omega, int M,
                                    Boundary boundary = Boundary::open) {
    if (nu < 1) throw std::invalid_argument("wannier_stark_chain: nu must be >= 1");
    if (tau != 1 && tau != -1) throw std::invalid_argument("wannier_stark_chain: tau must be +-1");
    auto e = euclidean_ops(M, boundary);
    return omega * e.E0 + (tau * 0.5 * g0 * std::sqrt(static_cast<double>(nu))) * (e.Eplus + e.Eminus);
}

struct WannierStarkState {
    double epsilon;
    StateVector state;
};

// Analytic ladder state: eps_j = j w, amplitudes J_{j-m}(g0 sqrt(n)/w).
inline WannierStarkState wannier_stark_analytic(int n, double g0, double omega, int j, int M) {
    if (n < 1) throw std::invalid_argument("wannier_stark_analytic: n must be >= 1");
    if (std::abs(j) > M) throw std::invalid_argument("wannier_stark_analytic: |j| must be <= M");
    const double x = g0 * std::sqrt(static_cast<double>(n)) / omega;
    const int max_order = M + std::abs(j);
    auto jv = bessel_j_array(std::abs(x), max_order);
    Vec amps(2 * M + 1);
    double norm2 = 0.0;
    for (int i = 0; i < 2 * M + 1; ++i) {
        const int m = i - M;
        int order = j - m;
        double sign = 1.0;
        if (order < 0) {
            order = -order;
            if (order & 1) sign = -sign;
        }
        double v = sign * jv[order];
        if (x < 0 && (order & 1)) v = -v;
        amps[i] = v;
        norm2 += v * v;
    }
    const double clipped = std::abs(1.0 - norm2);
    if (clipped > 1e-6)
        throw std::invalid_argument("wannier_stark_analytic: localization radius " + std::to_string(x) +
                                    " clipped by the truncation (missing mass " + std::to_string(clipped) + ")");
    if (clipped > 1e-8) warn("wannier_stark_analytic: truncation clips " + std::to_string(clipped));
    return {j * omega, StateVector(BasisDescriptor{Factor::euclidean(M)}, std::move(amps), true)};
}

enum class AtomState { excited, ground };

// ---- figure pipelines -------------------------------------------------------

struct InversionOptions {
    double t_max = 0.0;  // 0: one drive period 2 pi/w
    int samples = 601;
    AtomState atom0 = AtomState::excited;
    double tol = 1e-8;        // time-integration budget
    bool with_floquet = true; // also run the truncated-Floquet pipeline
    double chain_tol = 1e-9;  // per-chain Krylov budget
};

struct InversionCurves {
    std::vector<double> t;
    std::vector<double> analytic;  // empty when Delta != 0
    std::vector<double> timeint;
    std::vector<double> floquet;   // empty unless requested
    int floquet_sites = 0;
};

namespace detail {

// amplitudes d_{nu,tau} of the initial state in the x-basis sectors
// |nu>_{x,tau}, plus the decoupled |0,g> amplitude.
struct XBasisInit {
    std::vector<cplx> d_plus, d_minus;  // index nu-1, nu = 1..n_max+1
    cplx vac_g = 0.0;
};

inline XBasisInit x_basis_init(const JCParams& p, AtomState atom0) {
    StateVector coh = coherent_state(p.alpha, p.resolved_n_max());
    const int n_max = p.resolved_n_max();
    XBasisInit init;
    init.d_plus.assign(n_max + 1, 0.0);
    init.d_minus.assign(n_max + 1, 0.0);
    const double r = 1.0 / std::sqrt(2.0);
    if (atom0 == AtomState::excited) {
        // |n,e> = (|n+1>_{x+} + |n+1>_{x-})/sqrt(2), sector nu = n+1
        for (int n = 0; n <= n_max; ++n) {
            init.d_plus[n] = r * coh.amps[n];
            init.d_minus[n] = r * coh.amps[n];
        }
    } else {
        // |n,g> = (|n>_{x+} - |n>_{x-})/sqrt(2) for n >= 1; |0,g> decoupled
        init.vac_g = coh.amps[0];
        for (int n = 1; n <= n_max; ++n) {
            init.d_plus[n - 1] = r * coh.amps[n];
            init.d_minus[n - 1] = -r * coh.amps[n];
        }
    }
    return init;
}

}  // namespace detail

// Inversion W(t) three ways: closed form (Delta = 0), direct integration of
// the time-dependent Hamiltonian, and the truncated-Floquet chain pipeline
// initialized with the theta = 0 phase state.
inline InversionCurves run_fig1(const JCParams& p, int floquet_sites, const InversionOptions& opt = {}) {
    p.validate();
    if (floquet_sites % 2 == 0) throw std::invalid_argument("run_fig1: floquet_sites must be odd");
    const int M = (floquet_sites - 1) / 2;
    const double t_max = opt.t_max > 0 ? opt.t_max : 2.0 * M_PI / p.omega;
    InversionCurves out;
    out.floquet_sites = floquet_sites;
    out.t.resize(opt.samples);
    for (int i = 0; i < opt.samples; ++i) out.t[i] = t_max * i / (opt.samples - 1);

    if (p.Delta == 0.0) {
        out.analytic.resize(opt.samples);
        for (int i = 0; i < opt.samples; ++i) out.analytic[i] = analytic_inversion(p, out.t[i]);
    }

    // direct integration
    {
        auto q = qubit_ops();
        auto b = boson_ops(p.resolved_n_max());
        StateVector coh = coherent_state(p.alpha, p.resolved_n_max());
        Vec atom = Vec::Zero(2);
        atom[opt.atom0 == AtomState::excited ? 1 : 0] = 1.0;
        BasisDescriptor full{Factor::qubit(), Factor::boson(p.resolved_n_max())};
        Vec amps = Vec::Zero(full.dim());
        const int db = p.resolved_n_max() + 1;
        for (int s = 0; s < 2; ++s)
            for (int n = 0; n < db; ++n) amps[s * db + n] = atom[s] * coh.amps[n];
        EvolveOptions eopt;
        eopt.tol = opt.tol;
        Trajectory traj = evolve(jc_hamiltonian(p), StateVector(full, amps, true), out.t, eopt);
        out.timeint = expectation(traj, kron(q.sz, identity(b.n.basis)));
    }

    if (opt.with_floquet) {
        // drive-localization check: Bessel support g0 sqrt(nu)/w plus margin
        const double radius = p.g0 * std::sqrt(p.resolved_n_max() + 1.0) / p.omega;
        if (1.25 * radius > M)
            warn("run_fig1: truncation " + std::to_string(floquet_sites) +
                 " sites below 1.25x drive-localization radius " + std::to_string(radius));
        auto init = detail::x_basis_init(p, opt.atom0);
        const int n_sectors = static_cast<int>(init.d_plus.size());
        StateVector theta0 = phase_state(M, 0.0);
        const double rootN = std::sqrt(static_cast<double>(floquet_sites));

        // collapse phases e^{i m w t} per sample
        Eigen::MatrixXcd phases(floquet_sites, opt.samples);
        for (int i = 0; i < opt.samples; ++i)
            for (int m = 0; m < floquet_sites; ++m)
                phases(m, i) = std::polar(1.0, (m - M) * p.omega * out.t[i]);

        Eigen::MatrixXcd A_plus = Eigen::MatrixXcd::Zero(n_sectors, opt.samples);
        Eigen::MatrixXcd A_minus = Eigen::MatrixXcd::Zero(n_sectors, opt.samples);
        parallel_for(2 * n_sectors, [&](int job) {
            const int nu = job / 2 + 1;
            const int tau = (job % 2 == 0) ? 1 : -1;
            const cplx d = tau == 1 ? init.d_plus[nu - 1] : init.d_minus[nu - 1];
            if (std::abs(d) < 1e-14) return;
            Operator chain = wannier_stark_chain(nu, tau, p.g0, p.omega, M);
            Trajectory traj = evolve_static(chain, theta0, out.t, opt.chain_tol);
            for (int i = 0; i < opt.samples; ++i) {
                cplx val = 0.0;  // sum_m e^{i m w t} chi_m
                for (int m = 0; m < floquet_sites; ++m) val += phases(m, i) * traj.states[i][m];
                (tau == 1 ? A_plus : A_minus)(nu - 1, i) = d * val / rootN;
            }
        });

        out.floquet.resize(opt.samples);
        for (int i = 0; i < opt.samples; ++i) {
            double num = 0.0, den = std::norm(init.vac_g);
            num -= std::norm(init.vac_g);  // decoupled |0,g> sits at sigma_z = -1
            for (int s = 0; s < n_sectors; ++s) {
                num += 2.0 * std::real(A_plus(s, i) * std::conj(A_minus(s, i)));
                den += std::norm(A_plus(s, i)) + std::norm(A_minus(s, i));
            }
            out.floquet[i] = num / den;
        }
    }
    return out;
}

struct MomentumOptions {
    double t_max = 0.0;  // 0: one drive period
    int samples = 65;
    AtomState atom0 = AtomState::excited;
    double chain_tol = 1e-9;
};

struct MomentumMap {
    std::vector<double> t;
    Eigen::VectorXd k;   // 2 pi j / sites
    Eigen::MatrixXd P;   // sites x samples, column-normalized
};

// Time-resolved momentum distribution of the Euclidean factor for the
// phase-state-initialized Floquet pipeline.
inline MomentumMap run_fig2(const JCParams& p, int sites, const MomentumOptions& opt = {}) {
    p.validate();
    if (sites % 2 == 0) throw std::invalid_argument("run_fig2: sites must be odd");
    const int M = (sites - 1) / 2;
    const double t_max = opt.t_max > 0 ? opt.t_max : 2.0 * M_PI / p.omega;

    MomentumMap out;
    out.t.resize(opt.samples);
    for (int i = 0; i < opt.samples; ++i) out.t[i] = t_max * i / (opt.samples - 1);
    out.k = momentum_grid(M);
    out.P = Eigen::MatrixXd::Zero(sites, opt.samples);

    auto init = detail::x_basis_init(p, opt.atom0);
    const int n_sectors = static_cast<int>(init.d_plus.size());
    StateVector theta0 = phase_state(M, 0.0);
    const auto& F = floq::detail::momentum_dft(M);

    std::mutex acc;
    parallel_for(2 * n_sectors, [&](int job) {
        const int nu = job / 2 + 1;
        const int tau = (job % 2 == 0) ? 1 : -1;
        const cplx d = tau == 1 ? init.d_plus[nu - 1] : init.d_minus[nu - 1];
        if (std::abs(d) < 1e-14) return;
        Operator chain = wannier_stark_chain(nu, tau, p.g0, p.omega, M);
        Trajectory traj = evolve_static(chain, theta0, out.t, opt.chain_tol);
        Eigen::MatrixXcd X(sites, opt.samples);
        for (int i = 0; i < opt.samples; ++i) X.col(i) = d * traj.states[i];
        Eigen::MatrixXcd Y = F * X;
        Eigen::MatrixXd Psec = Y.cwiseAbs2();
        std::lock_guard<std::mutex> lock(acc);
        out.P += Psec;
    });
    if (std::abs(init.vac_g) > 1e-14) {
        // decoupled |0,g> sector keeps its initial phase-state distribution
        Eigen::VectorXcd y = F * theta0.amps;
        Eigen::VectorXd py = y.cwiseAbs2() * std::norm(init.vac_g);
        for (int i = 0; i < opt.samples; ++i) out.P.col(i) += py;
    }
    for (int i = 0; i < opt.samples; ++i) out.P.col(i) /= out.P.col(i).sum();
    return out;
}

struct RidgeFit {
    double slope = 0.0;      // d k_ridge / dt from a least-squares fit
    double max_off_ridge = 0.0;  // largest single off-ridge bin mass
};

// Tracks argmax_k P(k, t), unwraps it across the Brillouin zone and fits a
// line; off-ridge mass is measured outside +-exclusion (radians) around the
// ridge.
inline RidgeFit fit_bloch_ridge(const MomentumMap& map, double fit_fraction = 0.8,
                                double exclusion = 0.3) {
    const int samples = static_cast<int>(map.t.size());
    const int sites = static_cast<int>(map.k.size());
    std::vector<double> ridge(samples);
    std::vector<int> ridge_idx(samples);
    for (int i = 0; i < samples; ++i) {
        int best = 0;
        for (int j = 1; j < sites; ++j)
            if (map.P(j, i) > map.P(best, i)) best = j;
        ridge_idx[i] = best;
        ridge[i] = map.k[best];
    }
    // unwrap
    double shift = 0.0;
    std::vector<double> unwrapped(samples);
    unwrapped[0] = ridge[0];
    for (int i = 1; i < samples; ++i) {
        double d = ridge[i] - ridge[i - 1];
        if (d > M_PI) shift -= 2.0 * M_PI;
        if (d < -M_PI) shift += 2.0 * M_PI;
        unwrapped[i] = ridge[i] + shift;
    }
    const int n_fit = std::max(2, static_cast<int>(std::lround(fit_fraction * samples)));
    double st = 0, sk = 0, stt = 0, stk = 0;
    for (int i = 0; i < n_fit; ++i) {
        st += map.t[i];
        sk += unwrapped[i];
        stt += map.t[i] * map.t[i];
        stk += map.t[i] * unwrapped[i];
    }
    RidgeFit fit;
    fit.slope = (n_fit * stk - st * sk) / (n_fit * stt - st * st);
    for (int i = 0; i < samples; ++i)
        for (int j = 0; j < sites; ++j) {
            double dk = std::remainder(map.k[j] - ridge[i], 2.0 * M_PI);
            if (std::abs(dk) > exclusion) fit.max_off_ridge = std::max(fit.max_off_ridge, map.P(j, i));
        }
    return fit;
}

}  // namespace jc
}  // namespace floq
