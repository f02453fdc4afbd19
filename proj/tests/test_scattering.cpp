#include <doctest.h>

#include <cmath>

#include "qmf/scattering.hpp"

using namespace qmf;

namespace {

double well_a0(double V0, double R) {
    double kappa = std::sqrt(V0 / 2);
    return R - std::tanh(kappa * R) / kappa;
}

}  // namespace

TEST_CASE("hard sphere scattering length is its radius") {
    auto s = solve_zero_energy(PotentialSpec::hard_sphere(0.5), 20.0);
    CHECK(std::abs(s.a0 - 0.5) < 1e-3);
    CHECK(s.f_at(0.3) == 0.0);
    CHECK(std::abs(scattering_length_integral(s, PotentialSpec::hard_sphere(0.5)) - 0.5) < 1e-3);
}

TEST_CASE("free equation") {
    auto s = solve_zero_energy(PotentialSpec::zero(), 10.0);
    CHECK(std::abs(s.a0) < 1e-10);
    for (double r : {0.01, 1.0, 5.0}) CHECK(s.f_at(r) == doctest::Approx(1.0));
    CHECK(scattering_length_integral(s, PotentialSpec::zero()) == 0.0);
    CHECK(smallness_parameter(PotentialSpec::zero()) == 0.0);
    auto fp = verify_fprop_bounds(s);
    CHECK(fp.c_lower == 0.0);
    CHECK(fp.c_grad == 0.0);
    CHECK(fp.pass);
}

TEST_CASE("square well against the matching formula") {
    for (double V0 : {0.5, 1.0, 4.0, 20.0}) {
        for (double R : {0.5, 1.0, 2.0}) {
            auto V = PotentialSpec::square_well(V0, R);
            auto s = solve_zero_energy(V, 30.0);
            double a = well_a0(V0, R);
            CHECK(std::abs(s.a0 - a) < 1e-6 * a);
            double est = scattering_length_integral(s, V);
            CHECK(std::abs(est - s.a0) < 1e-6 * s.a0);
            // exterior: f = 1 - a0/r
            CHECK(std::abs(s.f_at(R + 3) - (1 - a / (R + 3))) < 1e-6);
        }
    }
}

TEST_CASE("two estimators agree for repulsive potentials") {
    for (auto V : {PotentialSpec::gaussian(1.0, 1.0), PotentialSpec::gaussian(10.0, 0.5),
                   PotentialSpec::tabulated({0.0, 0.5, 1.0, 1.5}, {3.0, 2.0, 1.0, 0.0})}) {
        auto s = solve_zero_energy(V, 40.0);
        CHECK(s.a0 > 0);
        CHECK(std::abs(scattering_length_integral(s, V) - s.a0) < 1e-6 * s.a0);
    }
}

TEST_CASE("rescaled potential has scattering length a0/N") {
    for (auto V : {PotentialSpec::square_well(2.0, 1.0), PotentialSpec::gaussian(1.0, 1.0)}) {
        double base = solve_zero_energy(V, 40.0).a0;
        for (int N : {1, 2, 4, 8, 16}) {
            auto VN = V.scaled(double(N) * N, N);
            double aN = solve_zero_energy(VN, 40.0 / N).a0;
            CHECK(std::abs(aN * N - base) < 1e-8 * base);
        }
    }
}

TEST_CASE("smallness parameter") {
    CHECK(smallness_parameter(PotentialSpec::square_well(1.0, 1.0)) == doctest::Approx(1.5).epsilon(1e-6));
    auto g = PotentialSpec::gaussian(1.0, 0.7);
    double r1 = smallness_parameter(g);
    double r3 = smallness_parameter(PotentialSpec::gaussian(3.0, 0.7));
    CHECK(r3 == doctest::Approx(3 * r1).epsilon(1e-9));
    // Gaussian closed form: sup r^2 A e^{-r^2/2R^2} = 2 A R^2 / e, int r V = A R^2
    CHECK(r1 == doctest::Approx(0.49 * (2 / std::exp(1.0) + 1)).epsilon(1e-6));
}

TEST_CASE("profile bounds") {
    auto V = PotentialSpec::square_well(0.1, 1.0);
    auto s = solve_zero_energy(V, 20.0);
    auto fp = verify_fprop_bounds(s);
    CHECK(fp.pass);
    CHECK(fp.c_lower > 0);
    CHECK(std::isfinite(fp.c_grad));
    for (size_t i = 0; i < s.r.size(); i += 97) {
        CHECK(s.f[i] >= 1 - fp.c_lower * s.rho - 1e-12);
        CHECK(s.f[i] <= 1 + 1e-10);
        CHECK(s.f[i] >= 0);
    }
    auto sg = solve_zero_energy(PotentialSpec::gaussian(5.0, 1.0), 30.0);
    auto fg = verify_fprop_bounds(sg);
    CHECK(fg.monotone);
    for (size_t i = 1; i < sg.f.size(); ++i) REQUIRE(sg.f[i] >= sg.f[i - 1] - 1e-14);
}

TEST_CASE("errors") {
    try {
        solve_zero_energy(PotentialSpec::square_well(1.0, 5.0), 4.0);
        FAIL("support reaching R_max");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::domain);
    }
    try {
        solve_zero_energy(PotentialSpec::square_well(-20.0, 1.0), 10.0);
        FAIL("bound state");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unsupported);
    }
}
