#include <doctest.h>

#include <cmath>

#include "qmf/manybody.hpp"
#include "support.hpp"

using namespace qmf;
using qt::max_abs;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

// symmetric first-quantised tensor of a bosonic sector vector, x1 slowest
CVec boson_tensor(const FockVector& psi, int N) {
    const int M = psi.basis->modes();
    long total = 1;
    for (int i = 0; i < N; ++i) total *= M;
    CVec t = CVec::Zero(total);
    for (long X = 0; X < total; ++X) {
        Occupation n(static_cast<size_t>(M), 0);
        long r = X;
        for (int i = 0; i < N; ++i) {
            n[static_cast<size_t>(r % M)]++;
            r /= M;
        }
        double w = 1;
        for (auto v : n) w *= factorial(v);
        t[X] = psi.amp[psi.basis->index(n)] * std::sqrt(w / factorial(N));
    }
    return t;
}

// C(N,k) Tr_{k+1..N} |t><t|
CMat contract(const CVec& t, int M, int N, int k) {
    long D = 1, R = 1;
    for (int i = 0; i < k; ++i) D *= M;
    for (int i = k; i < N; ++i) R *= M;
    Eigen::Map<const CMat> T(t.data(), R, D);  // column = particles 1..k
    double binom = factorial(N) / (factorial(k) * factorial(N - k));
    return binom * (T.transpose() * T.conjugate());
}

CVec normalized_gaussian(const Grid& g, double x0, double p) {
    CVec c(g.size());
    for (long j = 0; j < g.size(); ++j) {
        double x = g.x(static_cast<int>(j));
        c[j] = std::exp(-(x - x0) * (x - x0) / 2.0 + I * p * x);
    }
    return c.normalized();
}

}  // namespace

TEST_CASE("free evolution keeps product states") {
    Grid g(1, 8.0, 12);
    HamiltonianSpec hs;
    hs.grid = g;
    hs.V = PotentialSpec::zero();
    hs.N = 3;
    auto m = assemble_modes(hs);
    auto b = FockBasis::boson_sector(g.size(), 3);
    auto psi = product_state(b, normalized_gaussian(g, 0.5, 1.0), 3);
    PropagationReport rep;
    auto out = propagate(psi, fock_hamiltonian(*b, m), 0.7, 1e-2, 1.0, 20, &rep);
    CMat g1 = reduced_density_1(out) / 3.0;
    Vec ev = hermitian_eigenvalues(g1);
    CHECK(std::abs(ev.maxCoeff() - 1.0) < 1e-9);
    CHECK(ev.cwiseAbs().sum() - ev.maxCoeff() < 1e-9);
    CHECK(rep.norm_drift < 1e-9);
}

TEST_CASE("energy and norm conservation") {
    Grid g(1, 8.0, 10);
    HamiltonianSpec hs;
    hs.grid = g;
    hs.V = PotentialSpec::gaussian(2.0, 1.0);
    hs.N = 3;
    hs.v_ext = sample(g, [](const std::array<double, 3>& x) { return 0.3 * x[0] * x[0]; });
    auto m = assemble_modes(hs);
    auto b = FockBasis::boson_sector(g.size(), 3);
    SpMat H = fock_hamiltonian(*b, m);
    CHECK(max_abs(CMat(H) - CMat(H).adjoint()) < 1e-12);
    auto psi = product_state(b, normalized_gaussian(g, 1.0, 0.5), 3);
    PropagationReport rep;
    auto out = propagate(psi, H, 1.0, 1e-2, 1.0, 20, &rep);
    double e0 = std::real(psi.amp.dot(H * psi.amp));
    double e1 = std::real(out.amp.dot(H * out.amp));
    CHECK(std::abs(e1 - e0) < 1e-8 * std::max(1.0, std::abs(e0)));
    CHECK(rep.energy_drift < 1e-8);
    CHECK(std::abs(out.norm() - 1.0) < 1e-9);
}

TEST_CASE("two bosons against full diagonalisation") {
    Grid g(1, 6.0, 16);
    HamiltonianSpec hs;
    hs.grid = g;
    hs.V = PotentialSpec::gaussian(3.0, 0.8);
    hs.N = 2;
    auto m = assemble_modes(hs);
    auto b = FockBasis::boson_sector(16, 2);
    CMat H(fock_hamiltonian(*b, m));
    Eigen::SelfAdjointEigenSolver<CMat> es(H);
    auto psi = product_state(b, normalized_gaussian(g, -0.5, 2.0), 2);
    const double t = 0.8;
    CVec phases = (-I * t * es.eigenvalues().cast<cplx>()).array().exp();
    CVec oracle = es.eigenvectors() * phases.asDiagonal() * (es.eigenvectors().adjoint() * psi.amp);
    auto out = propagate(psi, fock_hamiltonian(*b, m), t, 1e-2);
    CHECK((out.amp - oracle).norm() < 1e-8);

    // fermionic time runs as i eps d/dt
    auto bf = FockBasis::fermion_sector(16, 2);
    CMat Hf(fock_hamiltonian(*bf, m));
    Eigen::SelfAdjointEigenSolver<CMat> ef(Hf);
    FockVector chi(bf, qt::random_cvec(bf->size()).normalized());
    const double eps = 0.5;
    CVec ph = (-I * (t / eps) * ef.eigenvalues().cast<cplx>()).array().exp();
    CVec oracle_f = ef.eigenvectors() * ph.asDiagonal() * (ef.eigenvectors().adjoint() * chi.amp);
    CHECK((propagate(chi, fock_hamiltonian(*bf, m), t, 1e-2, eps).amp - oracle_f).norm() < 1e-8);
}

TEST_CASE("reduced densities against tensor contraction") {
    const int M = 4, N = 3;
    auto b = FockBasis::boson_sector(M, N);
    FockVector psi(b, qt::random_cvec(b->size()).normalized());
    CVec t = boson_tensor(psi, N);
    CHECK(t.norm() == doctest::Approx(1.0));
    for (int k = 1; k <= N; ++k) {
        CMat gk = reduced_density_k(psi, k);
        CHECK(max_abs(gk - contract(t, M, N, k)) < 1e-12);
        CHECK(gk.trace().real() == doctest::Approx(factorial(N) / (factorial(k) * factorial(N - k))));
        CHECK(hermitian_eigenvalues(gk).minCoeff() > -1e-12);
    }
    CMat gN = reduced_density_k(psi, N);
    CHECK(max_abs(gN - t * t.adjoint()) < 1e-12);
    CHECK(max_abs(reduced_density_k(psi, 1) - reduced_density_1(psi)) < 1e-12);
    // Tr_{k+1} gamma^(k+1) = (N-k)/(k+1) gamma^(k)
    CMat g2 = reduced_density_k(psi, 2);
    CMat tr = CMat::Zero(M, M);
    for (int x = 0; x < M; ++x)
        for (int y = 0; y < M; ++y)
            for (int z = 0; z < M; ++z) tr(x, y) += g2(x * M + z, y * M + z);
    CHECK(max_abs(tr - reduced_density_1(psi) * (N - 1) / 2.0) < 1e-10);
    CHECK_THROWS_AS(reduced_density_k(psi, 4), Error);
}

TEST_CASE("condensate and Pauli bounds") {
    Grid g(1, 6.0, 8);
    auto b = FockBasis::boson_sector(8, 4);
    CVec c = normalized_gaussian(g, 0.0, 1.0);
    auto psi = product_state(b, c, 4);
    CHECK(max_abs(reduced_density_1(psi) - 4.0 * c * c.adjoint()) < 1e-12);
    FockVector r(b, qt::random_cvec(b->size()).normalized());
    CHECK(hermitian_eigenvalues(reduced_density_1(r)).maxCoeff() <= 4 + 1e-9);

    auto bf = FockBasis::fermion_sector(8, 3);
    FockVector f(bf, qt::random_cvec(bf->size()).normalized());
    Vec ev = hermitian_eigenvalues(reduced_density_1(f));
    CHECK(ev.maxCoeff() <= 1 + 1e-9);
    CHECK(ev.minCoeff() >= -1e-9);
    CMat g2 = reduced_density_k(f, 2);
    CHECK(g2.trace().real() == doctest::Approx(3.0));
    CMat tr = CMat::Zero(8, 8);
    for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y)
            for (int z = 0; z < 8; ++z) tr(x, y) += g2(x * 8 + z, y * 8 + z);
    CHECK(max_abs(tr - reduced_density_1(f)) < 1e-10);  // (N-1)/2 = 1
    auto slater = slater_state(bf, CMat::Identity(8, 8).leftCols(3).cast<cplx>());
    CHECK(std::abs(slater.norm() - 1.0) < 1e-12);
}

TEST_CASE("Sobolev norm") {
    Grid g(1, 2 * pi, 16);
    CVec c = CVec::Constant(16, 1.0).normalized();
    CHECK(sobolev_norm(g, c * c.adjoint(), 1) == doctest::Approx(1.0));
    for (int n : {1, 2, 5}) {
        CVec p(16);
        for (long j = 0; j < 16; ++j) p[j] = std::exp(I * double(n) * g.x(int(j)));
        p.normalize();
        double k2 = double(n) * n;
        CHECK(sobolev_norm(g, 3.0 * p * p.adjoint(), 1) == doctest::Approx(3.0 * (1 + k2)));
        CVec pp(256);
        for (int a = 0; a < 16; ++a) pp.segment(a * 16, 16) = p[a] * p;
        CHECK(sobolev_norm(g, pp * pp.adjoint(), 2) == doctest::Approx((1 + k2) * (1 + k2)));
    }
    // dense S from the kinetic matrix
    Grid h(1, 5.0, 10);
    CMat gam = qt::random_density(10, 4);
    Eigen::SelfAdjointEigenSolver<CMat> es(CMat::Identity(10, 10) + kinetic_matrix(h));
    CMat S = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    CMat A = S * gam * S;
    Eigen::SelfAdjointEigenSolver<CMat> ea(0.5 * (A + A.adjoint()));
    CHECK(sobolev_norm(h, gam, 1) == doctest::Approx(ea.eigenvalues().cwiseAbs().sum()).epsilon(1e-10));
}

TEST_CASE("energy estimate with the scattering correlation") {
    Grid g(3, 4.0, 4);
    const long P = g.size();
    // V = 0: plane waves make both sides explicit
    auto sol0 = solve_zero_energy(PotentialSpec::zero(), 10.0);
    CVec psi(P * P);
    std::array<double, 3> k1{2 * pi / 4, 0, 0}, k2{0, 2 * pi / 4, 2 * pi / 4};
    for (long a = 0; a < P; ++a)
        for (long b = 0; b < P; ++b) {
            auto xa = g.point(a), xb = g.point(b);
            double ph = 0;
            for (int i = 0; i < 3; ++i) ph += k1[size_t(i)] * xa[size_t(i)] + k2[size_t(i)] * xb[size_t(i)];
            psi[a * P + b] = std::exp(I * ph);
        }
    psi.normalize();
    auto r0 = gp_energy_estimate_check(g, 2, psi, PotentialSpec::zero(), sol0);
    double q1 = k1[0] * k1[0], q2 = k2[1] * k2[1] + k2[2] * k2[2];
    CHECK(r0.lhs == doctest::Approx((q1 + q2) * (q1 + q2)));
    CHECK(r0.rhs == doctest::Approx(2.0 * q1 * q2));
    CHECK(r0.rhs == doctest::Approx(r0.undivided));

    // correlated state: dividing by f_N recovers the envelope's mixed derivative
    auto V = PotentialSpec::gaussian(0.05, 2.0);
    auto sol = solve_zero_energy(V, 30.0);
    CVec corr(P * P);
    for (long a = 0; a < P; ++a)
        for (long b = 0; b < P; ++b) corr[a * P + b] = psi[a * P + b] * sol.f_at(2 * g.distance(a, b));
    auto rc = gp_energy_estimate_check(g, 2, corr, V, sol);
    CHECK(rc.rhs == doctest::Approx(r0.rhs).epsilon(1e-12));

    // ground state of the GP-scaled two-body problem
    Mat W = pair_matrix(g, V.scaled(4.0, 2.0));
    auto gs = first_quantized_ground_state(g, 2, W);
    CHECK(gs.residual < 1e-8);
    auto rg = gp_energy_estimate_check(g, 2, gs.vector, V, sol);
    CHECK(rg.ratio >= 1 - 1e-6);

    try {
        gp_energy_estimate_check(Grid(1, 4.0, 8), 2, CVec::Zero(64), V, sol);
        FAIL("1D must be refused");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::refused);
    }
    try {
        gp_energy_estimate_check(g, 3, CVec::Zero(P * P * P), V, sol);
        FAIL("unresolved N");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::refused);
    }
}
