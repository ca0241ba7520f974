#include <catch2/catch_amalgamated.hpp>

#include "floq/propagate.hpp"

#include <random>

using namespace floq;

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = a + (b - a) * i / (n - 1);
    return t;
}

Operator random_hermitian(const BasisDescriptor& basis, std::mt19937& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    const int n = basis.dim();
    Eigen::MatrixXcd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = cplx(g(rng), g(rng));
    Eigen::MatrixXcd H = 0.5 * (A + A.adjoint());
    std::vector<Eigen::Triplet<cplx>> ts;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ts.emplace_back(i, j, H(i, j));
    SparseMat m(n, n);
    m.setFromTriplets(ts.begin(), ts.end());
    return Operator(basis, std::move(m));
}

}  // namespace

TEST_CASE("constant sigma_z drive flips <sigma_x> at t = pi/Delta", "[propagate]") {
    const double Delta = 2.0;
    auto q = qubit_ops();
    DriveProtocol H = DriveProtocol::constant(0.5 * Delta * q.sz);
    Vec plus(2);
    plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    StateVector psi0(H.basis, plus, false);
    Trajectory traj = evolve(H, psi0, {0.0, M_PI / Delta});
    auto sx = expectation(traj, q.sx);
    CHECK(std::abs(sx[0] - 1.0) < 1e-10);
    CHECK(std::abs(sx[1] + 1.0) < 1e-8);
}

TEST_CASE("zero Hamiltonian leaves the state untouched", "[propagate]") {
    auto q = qubit_ops();
    DriveProtocol H = DriveProtocol::constant(0.0 * q.sz);
    Vec g = Vec::Zero(2);
    g[0] = 1.0;
    StateVector psi0(H.basis, g, false);
    Trajectory traj = evolve(H, psi0, linspace(0.0, 5.0, 6));
    for (const auto& s : traj.states) CHECK((s - g).norm() < 1e-12);
}

TEST_CASE("expectation basics", "[propagate]") {
    auto q = qubit_ops();
    DriveProtocol H = DriveProtocol::constant(0.0 * q.sz);
    Vec g = Vec::Zero(2);
    g[0] = 1.0;
    Trajectory traj = evolve(H, StateVector(H.basis, g, false), linspace(0.0, 1.0, 4));
    for (double v : expectation(traj, identity(H.basis))) CHECK(std::abs(v - 1.0) < 1e-12);
    for (double v : expectation(traj, q.sz)) CHECK(std::abs(v + 1.0) < 1e-12);
    CHECK_THROWS_AS(expectation(traj, q.splus), std::invalid_argument);
    CHECK_NOTHROW(expectation_complex(traj, q.splus));
}

TEST_CASE("time averaging", "[propagate]") {
    auto t = linspace(0.0, 10.0, 2001);
    std::vector<double> c(t.size(), 3.25);
    CHECK(std::abs(time_average(t, c, 0.0, 10.0) - 3.25) < 1e-12);

    const double omega = 2.0 * M_PI;  // integer periods on [0, 10]
    std::vector<double> s(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) s[i] = std::sin(omega * t[i]);
    CHECK(std::abs(time_average(t, s, 0.0, 10.0)) < 1e-8);

    CHECK_THROWS_AS(time_average(t, c, 2.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(time_average(t, c, 0.0, 11.0), std::invalid_argument);
}

TEST_CASE("coherent state construction", "[propagate]") {
    StateVector vac = coherent_state(0.0, 5);
    CHECK(std::abs(vac.amps[0] - cplx(1.0)) < 1e-15);

    double tail = 0.0;
    StateVector c5 = coherent_state(5.0, 60, &tail);
    CHECK(tail < 1e-8);
    auto b = boson_ops(60);
    CHECK(std::abs(expectation_value(b.n, c5) - 25.0) < 1e-6);
    for (int n : {3, 10, 24, 40})
        CHECK(std::abs(c5.amps[n + 1] / c5.amps[n] - cplx(5.0 / std::sqrt(n + 1.0))) < 1e-10);

    CHECK_THROWS_AS(coherent_state(5.0, 30), std::invalid_argument);  // tail above hard limit
}

TEST_CASE("unitarity and energy conservation for a static Hamiltonian", "[propagate]") {
    std::mt19937 rng(991);
    BasisDescriptor basis{Factor::spin(6)};
    Operator H0 = random_hermitian(basis, rng);
    DriveProtocol H = DriveProtocol::constant(H0);
    Vec v = Vec::Random(basis.dim());
    StateVector psi0(basis, v, true);
    Trajectory traj = evolve(H, psi0, linspace(0.0, 20.0, 41));
    CHECK(traj.norm_drift < 1e-8);
    auto e = expectation(traj, H0);
    for (double x : e) CHECK(std::abs(x - e[0]) < 1e-8);
}

TEST_CASE("evolution is linear", "[propagate]") {
    std::mt19937 rng(1871);
    BasisDescriptor basis{Factor::spin(4)};
    Operator A = random_hermitian(basis, rng);
    Operator B = random_hermitian(basis, rng);
    DriveProtocol H = make_protocol({{A, [](double) { return 1.0; }},
                                     {B, [](double t) { return std::sin(1.7 * t); }}});
    Vec v1 = Vec::Random(5), v2 = Vec::Random(5);
    StateVector p1(basis, v1, true), p2(basis, v2, true);
    const cplx a(0.3, 0.4), b(-0.7, 0.2);
    Vec combo = a * p1.amps + b * p2.amps;
    StateVector pc(basis, combo, true);
    const double scale = combo.norm();

    auto t = linspace(0.0, 3.0, 4);
    EvolveOptions opt;
    opt.tol = 1e-10;
    Vec end1 = evolve(H, p1, t, opt).states.back();
    Vec end2 = evolve(H, p2, t, opt).states.back();
    Vec endc = evolve(H, pc, t, opt).states.back();
    CHECK((endc * scale - (a * end1 + b * end2)).norm() < 1e-8);
}

TEST_CASE("reversing the drive returns the initial state", "[propagate]") {
    std::mt19937 rng(55);
    BasisDescriptor basis{Factor::spin(5)};
    Operator A = random_hermitian(basis, rng);
    Operator B = random_hermitian(basis, rng);
    const double T = 2.5;
    DriveProtocol fwd = make_protocol({{A, [](double t) { return std::cos(2.0 * t); }},
                                       {B, [](double t) { return 0.4 * t; }}});
    DriveProtocol bwd = make_protocol({{A, [T](double t) { return -std::cos(2.0 * (T - t)); }},
                                       {B, [T](double t) { return -0.4 * (T - t); }}});
    Vec v = Vec::Random(6);
    StateVector psi0(basis, v, true);
    EvolveOptions opt;
    opt.tol = 1e-10;
    Vec mid = evolve(fwd, psi0, {0.0, T}, opt).states.back();
    Vec back = evolve(bwd, StateVector(basis, mid, true), {0.0, T}, opt).states.back();
    CHECK((back - psi0.amps).norm() < 1e-8);
}

TEST_CASE("tolerance scaling against a tight reference", "[propagate]") {
    std::mt19937 rng(2024);
    BasisDescriptor basis{Factor::spin(7)};
    Operator A = random_hermitian(basis, rng, 2.0);
    Operator B = random_hermitian(basis, rng, 2.0);
    DriveProtocol H = make_protocol({{A, [](double) { return 1.0; }},
                                     {B, [](double t) { return std::cos(5.0 * t); }}});
    Vec v = Vec::Random(8);
    StateVector psi0(basis, v, true);
    auto t = linspace(0.0, 4.0, 3);
    EvolveOptions tight;
    tight.tol = 1e-12;
    Vec ref = evolve(H, psi0, t, tight).states.back();
    EvolveOptions loose;
    loose.tol = 1e-6;
    Vec got = evolve(H, psi0, t, loose).states.back();
    CHECK((got - ref).norm() < 1e-5);
    CHECK((got - ref).norm() > 1e-14);  // loose run really is coarser
}

TEST_CASE("Krylov path matches exact evolution above the dense threshold", "[propagate]") {
    std::mt19937 rng(77);
    BasisDescriptor basis{Factor::boson(79)};  // dim 80 > dense_eig_dim
    Operator H0 = random_hermitian(basis, rng, 0.5);
    DriveProtocol H = DriveProtocol::constant(H0);
    Vec v = Vec::Random(80);
    StateVector psi0(basis, v, true);
    EvolveOptions opt;
    opt.tol = 1e-10;
    Vec got = evolve(H, psi0, {0.0, 2.0}, opt).states.back();
    EigenSystem es = eigh(H0);
    Vec ref = evolve_with_eigensystem(es, psi0.amps, -2.0);
    CHECK((got - ref).norm() < 1e-8);
}

TEST_CASE("step budget exhaustion is reported", "[propagate]") {
    auto q = qubit_ops();
    DriveProtocol H = DriveProtocol::constant(q.sz);
    Vec g = Vec::Zero(2);
    g[0] = 1.0;
    EvolveOptions opt;
    opt.max_steps = 2;
    opt.h_init = 1e-6;
    CHECK_THROWS_AS(evolve(H, StateVector(H.basis, g, false), {0.0, 100.0}, opt), std::runtime_error);
}

TEST_CASE("grid validation", "[propagate]") {
    auto q = qubit_ops();
    DriveProtocol H = DriveProtocol::constant(q.sz);
    Vec g = Vec::Zero(2);
    g[0] = 1.0;
    StateVector psi0(H.basis, g, false);
    CHECK_THROWS_AS(evolve(H, psi0, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(evolve(H, psi0, {0.0, 2.0, 2.0}), std::invalid_argument);
}

TEST_CASE("periodicity defect detects aperiodic coefficients", "[propagate]") {
    auto q = qubit_ops();
    DriveProtocol good = make_protocol({{q.sz, [](double t) { return std::cos(2.0 * t); }}}, M_PI);
    CHECK(periodicity_defect(good) < 1e-12);
    DriveProtocol bad = make_protocol({{q.sz, [](double t) { return std::cos(2.1 * t); }}}, M_PI);
    CHECK(periodicity_defect(bad) > 1e-3);
}
