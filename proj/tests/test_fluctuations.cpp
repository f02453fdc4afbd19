#include <doctest.h>

#include <cmath>

#include "qmf/effective.hpp"
#include "qmf/fluctuations.hpp"
#include "support.hpp"

using namespace qmf;
using qt::max_abs;

namespace {

MeanFieldModel dimer(double coupling) {
    MeanFieldModel m;
    m.T = CMat(2, 2);
    m.T << 1.0, -1.0, -1.0, 1.0;
    m.V = Mat(2, 2);
    m.V << 1.0, 0.5, 0.5, 1.0;
    m.V *= coupling;
    return m;
}

CVec dimer_c0() {
    CVec c(2);
    c << 1.0, 0.5;
    return c.normalized();
}

CVec grid_packet(const Grid& g, double x0, double p) {
    CVec c(g.size());
    for (long j = 0; j < g.size(); ++j) {
        auto x = g.point(j);
        double r2 = 0;
        for (int a = 0; a < g.d(); ++a) r2 += (x[size_t(a)] - x0) * (x[size_t(a)] - x0);
        c[j] = std::exp(-r2 / 2 + I * p * x[0]);
    }
    return c / std::sqrt(g.cell() * c.squaredNorm());
}

}  // namespace

TEST_CASE("Theta without interaction is the free propagator") {
    MeanFieldModel m = dimer(0.0);
    auto run = theta_propagate(m, dimer_c0(), 0.0, 0.7);
    CHECK(max_abs(run.theta.V) < 1e-14);
    CHECK(max_abs(run.theta.U - dense_expm(-I * 0.7 * m.T)) < 1e-10);
    auto same = theta_propagate(dimer(1.0), dimer_c0(), 0.3, 0.3);
    CHECK(max_abs(same.theta.full() - CMat::Identity(4, 4)) == 0.0);
}

TEST_CASE("Theta short-time expansion") {
    MeanFieldModel m = dimer(1.0);
    CVec c = dimer_c0();
    CMat D = quadratic_generator(m, c).D();
    CHECK(max_abs(quadratic_generator(m, c).A2 - quadratic_generator(m, c).A2.transpose()) < 1e-15);
    std::vector<double> err;
    for (double dt : {0.02, 0.01, 0.005}) {
        auto run = theta_propagate(m, c, 0.0, dt, 1e-4);
        err.push_back(max_abs(run.theta.full() - (CMat::Identity(4, 4) - I * dt * D)));
    }
    for (size_t i = 1; i < err.size(); ++i) CHECK(err[i - 1] / err[i] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("Theta constraints and composition") {
    Grid g(1, 8.0, 12);
    auto m = grid_model(g, PotentialSpec::gaussian(2.0, 1.0));
    CVec c0 = grid_packet(g, 0.5, 1.0) * std::sqrt(g.cell());
    auto full = theta_propagate(m, c0, 0.0, 1.0, 1e-3, 100);
    CHECK(full.max_residual < 1e-8);
    for (const auto& s : full.samples) {
        CHECK(s.constraint_residual() < 1e-8);
        CHECK(j_residual(s.full()) < 1e-12);
        CHECK(symplectic_residual(s.full()) < 1e-8);
    }
    auto first = theta_propagate(m, c0, 0.0, 0.4);
    auto second = theta_propagate(m, first.c_t, 0.4, 1.0);
    CHECK(max_abs((second.theta * first.theta).full() - full.theta.full()) < 1e-7);
    CHECK(max_abs((full.theta * full.theta.inverse()).full() - CMat::Identity(24, 24)) < 1e-8);
}

TEST_CASE("CLT variance") {
    Grid g(1, 6.0, 8);
    CVec phi = grid_packet(g, 0.3, 0.7) * std::sqrt(g.cell());
    auto id = BogoliubovMap::identity(8);
    CHECK(clt_variance(id, phi, phi, CMat::Identity(8, 8)) < 1e-14);
    const int N = 3;
    auto b = FockBasis::boson_sector(8, N);
    auto prod = product_state(b, phi, N);
    for (int rep = 0; rep < 10; ++rep) {
        CMat J = qt::random_hermitian(8);
        double mean = std::real(phi.dot(J * phi));
        double expect = std::real(phi.dot(J * J * phi)) - mean * mean;
        double s2 = clt_variance(id, phi, phi, J);
        CHECK(std::abs(s2 - expect) < 1e-12 * std::max(1.0, expect));
        // N-body variance of sum J_i on the product state, per particle
        SpMat dG = second_quantize(*b, J);
        CVec v = dG * prod.amp;
        double m1 = std::real(prod.amp.dot(v)), m2 = v.squaredNorm();
        CHECK(std::abs((m2 - m1 * m1) / N - s2) < 1e-10 * std::max(1.0, s2));
    }
}

TEST_CASE("linear terms cancel along a Hartree trajectory") {
    Grid g(1, 10.0, 32);
    auto V = PotentialSpec::gaussian(1.5, 1.0);
    EffectiveConfig cfg;
    cfg.grid = g;
    cfg.sample_every = 100;
    auto tr = hartree_solve(grid_packet(g, 0.0, 1.0), V, cfg, 0.5);
    for (const auto& phi : tr.phi) CHECK(generator_LN_mean_field(g, phi, V, 10.0).linear_norm < 1e-10);

    // mean-field generator on a small mode set has no linear part
    MeanFieldModel m = dimer(1.0);
    CVec c = dimer_c0();
    auto b = FockBasis::bosons(2, 6);
    auto rep = generator_LN(m, c, mode_hartree_rhs(m, c), 4.0, b);
    CHECK(rep.linear_norm < 1e-14);
    CHECK(CMat(rep.L - CMat(rep.L).adjoint()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("shifted Hamiltonian against explicit Weyl conjugation") {
    MeanFieldModel m = dimer(1.0);
    CVec c = dimer_c0();
    const double N = 4;
    auto b = FockBasis::bosons(2, 40);
    SpMat H = fock_hamiltonian(*b, m.fock_model(N));
    SpMat S = shifted_hamiltonian(m, c, N, *b);
    auto Om = FockVector::vacuum(b);
    auto WOm = weyl_apply(std::sqrt(N) * c, Om);
    double e0 = std::real(WOm.amp.dot(H * WOm.amp));
    for (long i = 0; i < b->size(); ++i) {
        if (b->total(i) > 3) continue;
        FockVector e(b, CVec::Unit(b->size(), i));
        auto We = weyl_apply(std::sqrt(N) * c, e);
        auto back = weyl_apply(-std::sqrt(N) * c, FockVector(b, H * We.amp), 1e-6);
        CHECK((back.amp - e0 * e.amp - S * e.amp).norm() < 1e-8);
    }
}

TEST_CASE("GP-mode linear coefficient") {
    Grid g(3, 4.0, 8);
    auto V = PotentialSpec::gaussian(1.0, 1.0);
    auto sol = solve_zero_energy(V, 30.0);
    const double N = 2;
    CVec phi = grid_packet(g, 0.0, 0.5);
    auto rep = generator_LN_gp(g, phi, sol, N);
    // sqrt N || (N^3 V(N.) w(N.) * |phi|^2) phi ||
    Vec rho = phi.cwiseAbs2();
    double acc = 0;
    for (long a = 0; a < g.size(); ++a) {
        double conv = 0;
        for (long b = 0; b < g.size(); ++b) {
            double r = N * g.distance(a, b);
            conv += g.cell() * N * N * N * V(r) * sol.omega_at(r) * rho[b];
        }
        acc += g.cell() * conv * conv * rho[a];
    }
    CHECK(rep.linear_norm == doctest::Approx(std::sqrt(N) * std::sqrt(acc)).epsilon(1e-10));
    CHECK(rep.linear_norm > 1e-3);

    // with f = 1 the GP generator is the mean-field one for N^3 V(N .)
    ScatteringSolution flat = sol;
    for (size_t i = 0; i < flat.r.size(); ++i) {
        flat.u[i] = flat.r[i];
        flat.du[i] = 1.0;
        flat.f[i] = 1.0;
    }
    auto gp0 = generator_LN_gp(g, phi, flat, N);
    auto mf = generator_LN_mean_field(g, phi, V.scaled(N * N * N, N), N);
    CHECK(gp0.linear_norm < 1e-10);
    CHECK((gp0.linear - mf.linear).norm() < 1e-10);
}

TEST_CASE("number growth") {
    auto b = FockBasis::bosons(2, default_fock_cap(6.0));
    auto free_run = fluctuation_growth_experiment(dimer(0.0), dimer_c0(), 6.0, FockVector::vacuum(b), 1.0, 5);
    for (double n : free_run.number) CHECK(std::abs(n) < 1e-8);

    FockVector xi(b, CVec::Zero(b->size()));
    xi.amp[b->index(Occupation{1, 1})] = 1.0;
    auto run = fluctuation_growth_experiment(dimer(1.0), dimer_c0(), 6.0, xi, 1.0, 8);
    CHECK(run.number[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(run.fit.holds);
    for (size_t i = 0; i < run.t.size(); ++i)
        CHECK(run.number[i] <= run.fit.D * std::exp(run.fit.K * run.t[i]) - 1 + 1e-12);
}

TEST_CASE("norm approximation special cases") {
    auto free_run = norm_approximation_experiment(dimer(0.0), dimer_c0(), 4.0, {0.0, 0.5, 1.0});
    for (double r : free_run.residual) CHECK(r < 1e-8);
    auto run = norm_approximation_experiment(dimer(1.0), dimer_c0(), 4.0, {0.0, 0.5});
    CHECK(run.residual[0] < 1e-7);
    CHECK(run.residual[1] > 1e-4);
    CHECK(phase_residual(dimer_c0(), I * dimer_c0()) < 1e-7);
}

TEST_CASE("excitation map") {
    const int M = 4, N = 3;
    CVec phi = qt::random_cvec(M).normalized();
    auto b = FockBasis::boson_sector(M, N);
    auto prod = product_state(b, phi, N);
    auto e = excitation_map(prod, phi);
    Vec w = e.sector_weights();
    CHECK(w[0] == doctest::Approx(1.0));
    CHECK(w.tail(N).sum() < 1e-20);

    CVec chi = qt::random_cvec(M);
    chi -= phi * phi.dot(chi);
    chi.normalize();
    // chi (x)_s phi^(N-1) = a*(chi) a*(phi)^(N-1) Omega / sqrt((N-1)!)
    auto full = FockBasis::bosons(M, N);
    CVec a = FockVector::vacuum(full).amp;
    for (int r = 1; r < N; ++r) a = creation_operator(*full, phi) * a / std::sqrt(double(r));
    a = creation_operator(*full, chi) * a;
    CVec amp(b->size());
    for (long i = 0; i < b->size(); ++i) amp[i] = a[full->index(b->state(i))];
    auto one = excitation_map(FockVector(b, amp), phi);
    CHECK(one.sector_weights()[1] == doctest::Approx(1.0));

    for (int rep = 0; rep < 3; ++rep) {
        FockVector psi(b, qt::random_cvec(b->size()).normalized());
        auto img = excitation_map(psi, phi);
        CHECK(std::abs(img.image.norm() - 1.0) < 1e-10);
        CHECK((excitation_inverse(img).amp - psi.amp).norm() < 1e-10);
    }
}

TEST_CASE("dressed energy without correlations") {
    Grid g(3, 4.0, 8);
    CMat modes = plane_wave_modes(g, 1);
    CHECK(modes.cols() == 7);
    CHECK(max_abs(modes.adjoint() * modes - CMat::Identity(7, 7)) < 1e-12);
    // condensate inside the span of the modes
    CVec coef = qt::random_cvec(7).normalized();
    CVec phi = modes * coef / std::sqrt(g.cell());
    Vec vext = sample(g, [](const std::array<double, 3>& x) { return 0.1 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); });
    auto sol = solve_zero_energy(PotentialSpec::zero(), 10.0);
    const double N = 1;
    auto s = dressed_setup(g, phi, vext, sol, N, modes);
    CHECK(max_abs(s.K) < 1e-12);
    auto r = gp_dressed_energy(s, 12, true);
    double kin = g.cell() * std::real(phi.dot(laplacian_apply(g, phi)));
    double ext = g.cell() * vext.dot(phi.cwiseAbs2());
    CHECK(r.formula.kinetic == doctest::Approx(N * kin).epsilon(1e-12));
    CHECK(r.formula.external == doctest::Approx(N * ext).epsilon(1e-12));
    CHECK(r.formula.interaction == 0.0);
    CHECK(std::abs(r.direct.total - r.formula.total) < 1e-8);
}

TEST_CASE("zero-energy equation inside the support") {
    auto sol = solve_zero_energy(PotentialSpec::gaussian(2.0, 1.0), 30.0);
    CHECK(voo_residual(sol) < 1e-5);
    auto well = solve_zero_energy(PotentialSpec::square_well(3.0, 1.0), 20.0);
    CHECK(voo_residual(well) < 1e-5);
}
