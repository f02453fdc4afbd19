#include <doctest.h>

#include <cmath>

#include "qmf/expm.hpp"
#include "qmf/numerics.hpp"
#include "support.hpp"

using namespace qmf;
using qt::max_abs;

namespace {

// band-limited field: a few low Fourier modes with random coefficients
CVec low_modes(const Grid& g, int kmax_index) {
    CVec psi = CVec::Zero(g.size());
    for (int n = -kmax_index; n <= kmax_index; ++n) {
        cplx c(qt::gauss(), qt::gauss());
        double k = 2 * pi * n / g.L();
        for (long j = 0; j < g.size(); ++j) psi[j] += c * std::exp(I * k * g.x(static_cast<int>(j)));
    }
    return psi;
}

}  // namespace

TEST_CASE("grid bookkeeping") {
    Grid g(3, 6.0, 8);
    CHECK(g.size() == 512);
    CHECK(g.h() == doctest::Approx(0.75));
    CHECK(g.cell() == doctest::Approx(0.75 * 0.75 * 0.75));
    CHECK_THROWS_AS(Grid(2, 1.0, 8), Error);
    CHECK_THROWS_AS(Grid(1, 1.0, 7), Error);
    CHECK_THROWS_AS(Grid(1, 1.0, 2), Error);
    CHECK_THROWS_AS(Grid(1, -1.0, 8), Error);
}

TEST_CASE("laplacian of a constant vanishes") {
    for (double eps : {1.0, 0.3}) {
        Grid g(1, 5.0, 16);
        CVec c = CVec::Constant(g.size(), cplx(2.0, -1.0));
        CHECK(laplacian_apply(g, c, eps).cwiseAbs().maxCoeff() < 1e-12);
        Grid g3(3, 5.0, 8);
        CVec c3 = CVec::Constant(g3.size(), 1.0);
        CHECK(laplacian_apply(g3, c3, eps).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("plane waves are eigenfunctions") {
    Grid g(1, 2 * pi, 32);
    for (int n : {1, 3, -5, 10}) {
        CVec psi(g.size());
        for (long j = 0; j < g.size(); ++j) psi[j] = std::exp(I * double(n) * g.x(int(j)));
        CVec out = laplacian_apply(g, psi, 1.0);
        CHECK((out - double(n * n) * psi).cwiseAbs().maxCoeff() < 1e-10);
        CVec out_eps = laplacian_apply(g, psi, 0.5);
        CHECK((out_eps - 0.25 * n * n * psi).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("laplacian against a dense second-difference matrix") {
    Grid g(1, 10.0, 128);
    const int kmax_index = 3;
    CVec psi = low_modes(g, kmax_index);
    const long n = g.size();
    const double h = g.h();
    CMat fd = CMat::Zero(n, n);
    for (long j = 0; j < n; ++j) {
        fd(j, j) = 2.0 / (h * h);
        fd(j, (j + 1) % n) = -1.0 / (h * h);
        fd(j, (j + n - 1) % n) = -1.0 / (h * h);
    }
    CVec spec = laplacian_apply(g, psi);
    CVec oracle = fd * psi;
    // each mode: k^2 - (4/h^2) sin^2(kh/2) <= k^4 h^2 / 12
    double kmax = 2 * pi * kmax_index / g.L();
    double rel = (spec - oracle).norm() / spec.norm();
    CHECK(rel <= kmax * kmax * h * h / 12.0 * 1.01);
    CHECK(rel > 0.0);
    CHECK_THROWS_AS(laplacian_apply(g, CVec::Zero(5)), Error);
}

TEST_CASE("kinetic matrix agrees with the operator") {
    Grid g(1, 7.0, 12);
    CVec psi = qt::random_cvec(g.size());
    CMat K = kinetic_matrix(g, 0.7);
    CHECK((K * psi - laplacian_apply(g, psi, 0.7)).norm() < 1e-10);
    CHECK(hermiticity_defect(K) < 1e-12);
    CMat D = gradient_matrix(g, 0);
    CHECK((D + D.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Parseval") {
    for (int d : {1, 3}) {
        Grid g(d, 4.0, 8);
        CVec psi = qt::random_cvec(g.size());
        CVec ph = fft(g, psi);
        CHECK(std::abs(ph.norm() / std::sqrt(double(g.size())) - psi.norm()) < 1e-12 * psi.norm());
        CHECK((ifft(g, ph) - psi).norm() < 1e-12 * psi.norm());
    }
}

TEST_CASE("convolution with a single-site kernel is the identity") {
    Grid g(1, 3.0, 16);
    Vec delta = Vec::Zero(g.size());
    delta[0] = 1.0 / g.cell();
    Vec rho = Vec::Random(g.size());
    CHECK((convolve(g, delta, rho) - rho).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("convolution with a constant kernel integrates") {
    Grid g(3, 3.0, 8);
    Vec c = Vec::Constant(g.size(), 2.5);
    Vec rho = Vec::Random(g.size());
    double total = integrate(g, rho);
    CHECK((convolve(g, c, rho).array() - 2.5 * total).abs().maxCoeff() < 1e-10);
}

TEST_CASE("Gaussian convolution against a direct double sum") {
    Grid g(1, 12.0, 48);
    PotentialSpec V = PotentialSpec::gaussian(1.3, 0.8);
    Vec vd = sample_displacement(g, V);
    Vec rho = sample(g, [](const std::array<double, 3>& x) { return std::exp(-(x[0] - 0.5) * (x[0] - 0.5)); });
    Vec fast = convolve(g, vd, rho);
    Vec direct = Vec::Zero(g.size());
    for (long a = 0; a < g.size(); ++a)
        for (long b = 0; b < g.size(); ++b) direct[a] += g.cell() * V(g.distance(a, b)) * rho[b];
    CHECK((fast - direct).cwiseAbs().maxCoeff() < 1e-10);
    // symmetric in its two fields for even kernels
    Vec rho_disp = Vec::Zero(g.size());
    for (long j = 0; j < g.size(); ++j) rho_disp[j] = std::exp(-std::pow(g.wrap(j * g.h()), 2));
    Vec v_pos = sample(g, [&](const std::array<double, 3>& x) { return V(std::abs(x[0])); });
    Vec rho_pos = sample(g, [](const std::array<double, 3>& x) { return std::exp(-x[0] * x[0]); });
    CHECK((convolve(g, vd, rho_pos) - convolve(g, rho_disp, v_pos)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("potential families") {
    PotentialSpec w = PotentialSpec::square_well(2.0, 1.5);
    CHECK(w(1.0) == 2.0);
    CHECK(w(2.0) == 0.0);
    PotentialSpec r = w.rescaled(4.0, 1.0 / 3.0);
    CHECK(r(0.1) == doctest::Approx(4.0 * 2.0));
    CHECK(r(1.0) == 0.0);
    PotentialSpec same = w.rescaled(7.0, 0.0);
    for (double x : {0.0, 0.7, 1.4, 1.6}) CHECK(same(x) == w(x));
    PotentialSpec gp = PotentialSpec::gaussian(1.0, 1.0).scaled(9.0, 3.0);
    CHECK(gp(0.2) == doctest::Approx(9.0 * std::exp(-0.36 / 2)));
    CHECK(PotentialSpec::soft_coulomb(2.0, 1.0)(0.0) == doctest::Approx(2.0));
    PotentialSpec tab = PotentialSpec::tabulated({0.0, 1.0, 2.0}, {2.0, 1.0, 0.0});
    CHECK(tab(0.5) == doctest::Approx(1.5));
}

TEST_CASE("Hermitian norms") {
    CMat A = CMat::Zero(2, 2);
    A(0, 0) = 1;
    A(1, 1) = -2;
    CHECK(trace_norm(A) == doctest::Approx(3.0));
    CHECK(hs_norm(A) == doctest::Approx(std::sqrt(5.0)));
    CHECK(operator_norm(A) == doctest::Approx(2.0));

    CVec v = qt::random_cvec(6);
    v.normalize();
    CMat P = v * v.adjoint();
    CHECK(trace_norm(P) == doctest::Approx(1.0));
    CHECK(hs_norm(P) == doctest::Approx(1.0));

    for (int rep = 0; rep < 20; ++rep) {
        CMat H = qt::random_hermitian(8);
        double t = trace_norm(H), s = hs_norm(H), o = operator_norm(H);
        CHECK(t >= s - 1e-12);
        CHECK(s >= o - 1e-12);
        CHECK(s == doctest::Approx(H.norm()));
        // singular values of a Hermitian matrix are |eigenvalues|
        CHECK(t == doctest::Approx(trace_norm_general(H)));
        CMat D = qt::random_density(8, 3);
        CHECK(std::abs(trace_norm(D) - D.trace().real()) < 1e-10);
    }
    CMat bad = qt::random_cmat(3, 3);
    try {
        trace_norm(bad);
        FAIL("expected a contract error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::contract);
    }
}

TEST_CASE("hermitian_function") {
    CMat H = qt::random_hermitian(5);
    CMat sq = hermitian_function(H, [](double x) { return x * x; });
    CHECK(max_abs(sq - H * H) < 1e-10);
    CMat e = hermitian_function(H, [](double x) { return std::exp(x); });
    CHECK(max_abs(e - dense_expm(H)) < 1e-9);
}
