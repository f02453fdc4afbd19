#include <doctest.h>

#include <cmath>

#include "qmf/effective.hpp"
#include "support.hpp"

using namespace qmf;
using qt::max_abs;

namespace {

// grid normalised Gaussian packet
CVec packet(const Grid& g, double x0, double p, double w) {
    CVec c = CVec::Zero(g.size());
    for (long j = 0; j < g.size(); ++j) {
        auto x = g.point(j);
        double r2 = 0;
        for (int a = 0; a < g.d(); ++a) r2 += (x[size_t(a)] - x0) * (x[size_t(a)] - x0);
        c[j] = std::exp(-r2 / (4 * w * w) + I * p * x[0]);
    }
    return c / std::sqrt(g.cell() * c.squaredNorm());
}

double l2(const Grid& g, const CVec& a) { return std::sqrt(g.cell() * a.squaredNorm()); }

}  // namespace

TEST_CASE("free Hartree evolution is the free Gaussian") {
    Grid g(1, 60.0, 512);
    EffectiveConfig cfg;
    cfg.grid = g;
    cfg.sample_every = 1000;
    const double w = 1.0, p = 1.5, t = 0.5;
    auto tr = hartree_solve(packet(g, 0.0, p, w), PotentialSpec::zero(), cfg, t);
    // i d/dt psi = -psi'' : width w^2 -> w^2 + i t
    CVec exact(g.size());
    cplx s = w * w + I * t;
    for (long j = 0; j < g.size(); ++j) {
        double x = g.x(int(j));
        exact[j] = std::pow(2 * pi * w * w, -0.25) * std::sqrt(w * w / s) *
                   std::exp(-(x - 2 * p * t) * (x - 2 * p * t) / (4.0 * s) + I * p * (x - p * t));
    }
    CHECK(l2(g, tr.phi.back() - exact) < 1e-8);
}

TEST_CASE("plane waves rotate by k^2 plus the mean field") {
    Grid g(1, 2 * pi, 32);
    auto V = PotentialSpec::gaussian(1.5, 0.7);
    const int n = 3;
    CVec phi(g.size());
    for (long j = 0; j < g.size(); ++j) phi[j] = std::exp(I * double(n) * g.x(int(j))) / std::sqrt(g.L());
    double vhat0 = g.h() * sample_displacement(g, V).sum();
    EffectiveConfig cfg;
    cfg.grid = g;
    const double t = 0.3;
    auto tr = hartree_solve(phi, V, cfg, t);
    CVec expect = std::exp(-I * (double(n * n) + vhat0 / g.L()) * t) * phi;
    CHECK(l2(g, tr.phi.back() - expect) < 1e-10);
    // kinetic energy of the plane wave
    CHECK(hartree_energy(g, phi, PotentialSpec::zero()) == doctest::Approx(double(n * n)));
    CVec c = CVec::Constant(g.size(), 1.0 / std::sqrt(g.L()));
    CHECK(hartree_energy(g, c, V) == doctest::Approx(0.5 * vhat0 / g.L()));
}

TEST_CASE("Hartree energy against a direct double sum") {
    Grid g(1, 8.0, 24);
    auto V = PotentialSpec::soft_coulomb(1.0, 0.5);
    CVec phi = qt::random_cvec(g.size());
    phi /= l2(g, phi);
    Vec vext = sample(g, [](const std::array<double, 3>& x) { return 0.2 * x[0] * x[0]; });
    const double h = g.h();
    double kin = h * std::real(phi.dot(kinetic_matrix(g) * phi));
    double ext = 0, inter = 0;
    for (long a = 0; a < g.size(); ++a) {
        ext += h * vext[a] * std::norm(phi[a]);
        for (long b = 0; b < g.size(); ++b)
            inter += 0.5 * h * h * V(g.distance(a, b)) * std::norm(phi[a]) * std::norm(phi[b]);
    }
    CHECK(hartree_energy(g, phi, V, vext) == doctest::Approx(kin + ext + inter).epsilon(1e-12));
}

TEST_CASE("conservation and time reversal") {
    Grid g(1, 16.0, 128);
    EffectiveConfig cfg;
    cfg.grid = g;
    cfg.v_ext = sample(g, [](const std::array<double, 3>& x) { return 0.5 * x[0] * x[0]; });
    CVec phi0 = packet(g, 1.0, 0.8, 0.9);
    auto check = [&](const Trajectory& tr) {
        for (size_t i = 0; i < tr.t.size(); ++i) {
            CHECK(std::abs(tr.mass[i] - 1.0) < 1e-10);
            CHECK(std::abs(tr.energy[i] - tr.energy[0]) < 1e-8 * std::max(1.0, std::abs(tr.energy[0])));
        }
    };
    auto V = PotentialSpec::gaussian(2.0, 1.0);
    auto h = hartree_solve(phi0, V, cfg, 1.0);
    check(h);
    check(gp_solve(phi0, 0.05, cfg, 1.0));
    // conjugate, evolve again, conjugate: back to the start
    auto back = hartree_solve(h.phi.back().conjugate(), V, cfg, 1.0);
    CHECK(l2(g, back.phi.back().conjugate() - phi0) < 1e-7);

    Grid g3(3, 6.0, 12);
    EffectiveConfig c3;
    c3.grid = g3;
    auto sol = solve_zero_energy(PotentialSpec::gaussian(1.0, 1.0), 30.0);
    check(gp_modified_solve(packet(g3, 0.0, 0.5, 1.0), sol, 2.0, c3, 1.0));
}

TEST_CASE("Gross-Pitaevskii special cases") {
    Grid g(1, 10.0, 64);
    EffectiveConfig cfg;
    cfg.grid = g;
    CVec phi0 = packet(g, 0.0, 1.0, 1.0);
    auto a = gp_solve(phi0, 0.0, cfg, 0.4);
    auto b = hartree_solve(phi0, PotentialSpec::zero(), cfg, 0.4);
    CHECK(l2(g, a.phi.back() - b.phi.back()) < 1e-12);
    CVec c = CVec::Constant(g.size(), 1.0 / std::sqrt(g.L()));
    const double a0 = 0.3, t = 0.4;
    auto u = gp_solve(c, a0, cfg, t);
    CHECK(l2(g, u.phi.back() - std::exp(-I * (8 * pi) * a0 / g.L() * t) * c) < 1e-12);
    CHECK_THROWS_AS(gp_solve(phi0, -1.0, cfg, 0.1), Error);
}

TEST_CASE("modified Gross-Pitaevskii kernel") {
    Grid g(3, 4.0, 16);
    auto V = PotentialSpec::gaussian(1.0, 1.0);
    auto sol = solve_zero_energy(V, 30.0);
    Grid wide(3, 8.0, 32);
    for (double N : {2.0, 4.0}) {
        Vec k = gp_modified_kernel(wide, sol, N);
        CHECK(wide.cell() * k.sum() == doctest::Approx(8 * pi * sol.a0).epsilon(1e-6));
    }
    try {
        gp_modified_kernel(g, sol, 5.0);
        FAIL("unresolved scale");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::refused);
        CHECK(e.value() == doctest::Approx(4.0));
    }
    // f = 1 gives the plain rescaled potential
    ScatteringSolution flat = sol;
    for (size_t i = 0; i < flat.r.size(); ++i) {
        flat.u[i] = flat.r[i];
        flat.du[i] = 1.0;
        flat.f[i] = 1.0;
    }
    flat.a0 = 0.0;
    Vec k1 = gp_modified_kernel(g, flat, 2.0);
    Vec plain = sample_displacement(g, V.rescaled(2.0, 1.0));
    CHECK((k1 - plain).cwiseAbs().maxCoeff() < 1e-12 * plain.cwiseAbs().maxCoeff());
    // convolution against a direct sum on a small grid
    Grid s(3, 4.0, 6);
    Vec ks = gp_modified_kernel(s, sol, 1.0);
    CVec phi = qt::random_cvec(s.size());
    Vec rho = phi.cwiseAbs2();
    Vec U = mean_field_potential(s, Nonlinearity::convolution(ks), phi);
    for (long a = 0; a < s.size(); a += 7) {
        double direct = 0;
        for (long b = 0; b < s.size(); ++b) {
            double r = s.distance(a, b);
            direct += s.cell() * V(r) * sol.f_at(r) * rho[b];
        }
        CHECK(U[a] == doctest::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("modified GP approaches GP as N grows") {
    Grid g(3, 4.0, 16);
    auto V = PotentialSpec::gaussian(1.0, 1.0);
    auto sol = solve_zero_energy(V, 30.0);
    EffectiveConfig cfg;
    cfg.grid = g;
    cfg.sample_every = 1000;
    cfg.dt = 2e-3;
    CVec phi0 = packet(g, 0.0, 0.0, 0.6);
    const double t = 0.2;
    auto ref = gp_solve(phi0, sol.a0, cfg, t).phi.back();
    double prev = INFINITY;
    for (double N : {1.0, 2.0, 4.0}) {
        double d = l2(g, gp_modified_solve(phi0, sol, N, cfg, t).phi.back() - ref);
        CHECK(d < prev);
        prev = d;
    }
}

TEST_CASE("Hartree-Fock flow") {
    Grid g(1, 2 * pi, 16);
    HFConfig cfg;
    cfg.grid = g;
    cfg.V = PotentialSpec::gaussian(1.0, 0.8);
    cfg.N = 5;
    cfg.eps = 0.6;
    cfg.sample_every = 50;
    // translation invariant: stationary
    auto fs = free_fermi_ground_state(g, 5);
    auto st = hf_solve(fs.omega, cfg, 0.5);
    CHECK(max_abs(st.omega.back() - fs.omega) < 1e-10);

    // trapped projection released into a weaker trap
    Vec trap = sample(g, [](const std::array<double, 3>& x) { return x[0] * x[0]; });
    auto tr0 = trapped_orbitals(g, trap, cfg.eps, 5);
    cfg.v_ext = 0.3 * trap;
    auto tr = hf_solve(tr0.omega, cfg, 1.0);
    Vec ev0 = hermitian_eigenvalues(tr0.omega);
    for (size_t i = 0; i < tr.t.size(); ++i) {
        const CMat& w = tr.omega[i];
        CHECK((w * w - w).norm() < 1e-9);
        CHECK((hermitian_eigenvalues(w) - ev0).cwiseAbs().maxCoeff() < 1e-10);
        CHECK(std::abs(tr.trace[i] - 5.0) < 1e-10);
        CHECK(std::abs(tr.energy[i] - tr.energy[0]) < 1e-8 * std::max(1.0, std::abs(tr.energy[0])));
    }
    CHECK(max_abs(tr.omega.back() - tr0.omega) > 1e-3);

    // mixed state: isospectral
    Eigen::SelfAdjointEigenSolver<CMat> es(qt::random_hermitian(16));
    Vec occ = Vec::LinSpaced(16, 0.05, 0.95);
    CMat mixed = es.eigenvectors() * occ.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    cfg.N = occ.sum();
    auto tm = hf_solve(mixed, cfg, 0.5);
    CHECK((hermitian_eigenvalues(tm.omega.back()) - occ).cwiseAbs().maxCoeff() < 1e-10);

    CHECK_THROWS_AS(hf_solve(2.0 * tr0.omega, cfg, 0.1), Error);
}

TEST_CASE("exchange contribution is of order eps") {
    Grid g(1, 12.0, 64);
    std::vector<double> diff;
    for (double eps : {0.5, 0.25, 0.125}) {
        int N = static_cast<int>(std::lround(2 / eps));
        Vec trap = sample(g, [](const std::array<double, 3>& x) { return x[0] * x[0]; });
        auto fs = trapped_orbitals(g, trap, eps, N);
        HFConfig c;
        c.grid = g;
        c.V = PotentialSpec::gaussian(1.0, 1.0);
        c.eps = eps;
        c.N = N;
        c.dt = 5e-3;
        c.sample_every = 1000;
        c.v_ext = 0.5 * trap;
        auto with = hf_solve(fs.omega, c, 0.5);
        c.exchange = false;
        auto without = hf_solve(fs.omega, c, 0.5);
        diff.push_back(trace_norm(with.omega.back() - without.omega.back()) / N);
    }
    for (size_t i = 1; i < diff.size(); ++i) {
        double ratio = diff[i - 1] / diff[i];
        CHECK(ratio > 1.5);
        CHECK(ratio < 2.5);
    }
}

TEST_CASE("free Fermi ground states") {
    Grid g1(1, 1.0, 16);
    auto one = free_fermi_ground_state(g1, 1);
    CHECK(one.energy == 0.0);
    CHECK(max_abs(one.omega - CMat::Constant(16, 16, 1.0 / 16)) < 1e-14);

    Grid g(3, 1.0, 8);
    auto seven = free_fermi_ground_state(g, 7);
    CHECK(seven.energy == doctest::Approx(6 * 4 * pi * pi));
    CHECK(max_abs(seven.omega * seven.omega - seven.omega) < 1e-12);
    // closed shells: count lattice points with |n|^2 <= s and their energy
    const double cont = 4 * pi * pi * 0.6 * std::pow(3 / (4 * pi), 2.0 / 3.0);
    double first_dev = 0, last_dev = 0;
    for (int s : {1, 2, 3, 4, 5, 6, 8, 9}) {
        int count = 0;
        double e = 0;
        for (int a = -3; a <= 3; ++a)
            for (int b = -3; b <= 3; ++b)
                for (int c = -3; c <= 3; ++c)
                    if (a * a + b * b + c * c <= s) {
                        ++count;
                        e += 4 * pi * pi * (a * a + b * b + c * c);
                    }
        auto fs = free_fermi_ground_state(g, count);
        CHECK(fs.energy == doctest::Approx(e));
        double dev = std::abs(fs.energy / std::pow(count, 5.0 / 3.0) / cont - 1);
        if (s == 1) first_dev = dev;
        last_dev = dev;
    }
    CHECK(last_dev < first_dev);
    CHECK(last_dev < 0.1);
}
