#include "qmf/effective.hpp"

#include <algorithm>
#include <cmath>

namespace qmf {

Vec mean_field_potential(const Grid& g, const Nonlinearity& nl, const CVec& phi) {
    Vec rho = phi.cwiseAbs2();
    if (nl.kernel.size() == 0) return nl.g * rho;
    return convolve(g, nl.kernel, rho);
}

CVec effective_rhs(const Grid& g, const Nonlinearity& nl, const Vec& v_ext, const CVec& phi) {
    Vec U = mean_field_potential(g, nl, phi);
    if (v_ext.size() > 0) U += v_ext;
    return laplacian_apply(g, phi) + CVec(U.cast<cplx>().cwiseProduct(phi));
}

double effective_energy(const Grid& g, const Nonlinearity& nl, const Vec& v_ext, const CVec& phi) {
    const double c = g.cell();
    double kin = c * phi.dot(laplacian_apply(g, phi)).real();
    Vec rho = phi.cwiseAbs2();
    double ext = v_ext.size() > 0 ? c * v_ext.dot(rho) : 0.0;
    double inter = 0.5 * c * mean_field_potential(g, nl, phi).dot(rho);
    return kin + ext + inter;
}

namespace {

double mass(const Grid& g, const CVec& phi) { return g.cell() * phi.squaredNorm(); }

// exact potential phase step exp(-i tau (V_ext + U)); |phi| is invariant
void potential_step(const Grid& g, const Nonlinearity& nl, const Vec& v_ext, CVec& phi, double tau) {
    Vec U = mean_field_potential(g, nl, phi);
    if (v_ext.size() > 0) U += v_ext;
    double vmax = U.cwiseAbs().maxCoeff();
    if (vmax * std::abs(tau) > pi / 4)
        throw Error(ErrorKind::numerical, "phase rotation per step exceeds pi/4; reduce dt", vmax * std::abs(tau));
    for (long i = 0; i < phi.size(); ++i) phi[i] *= std::exp(-I * tau * U[i]);
}

void kinetic_step(const Grid& g, const Vec& k2, CVec& phi, double tau) {
    CVec ph = fft(g, phi);
    for (long i = 0; i < ph.size(); ++i) ph[i] *= std::exp(-I * tau * k2[i]);
    phi = ifft(g, ph);
}

void strang(const Grid& g, const Nonlinearity& nl, const Vec& v_ext, const Vec& k2, CVec& phi, double tau) {
    potential_step(g, nl, v_ext, phi, 0.5 * tau);
    kinetic_step(g, k2, phi, tau);
    potential_step(g, nl, v_ext, phi, 0.5 * tau);
}

}  // namespace

Trajectory effective_solve(const CVec& phi0, const Nonlinearity& nl, const EffectiveConfig& cfg, double T) {
    const Grid& g = cfg.grid;
    if (phi0.size() != g.size()) throw Error(ErrorKind::shape, "initial datum does not match the grid");
    if (cfg.v_ext.size() > 0 && cfg.v_ext.size() != g.size()) throw Error(ErrorKind::shape, "external potential");
    if (std::abs(mass(g, phi0) - 1.0) > 1e-8) throw Error(ErrorKind::contract, "initial datum is not normalised");
    if (cfg.dt <= 0) throw Error(ErrorKind::contract, "dt must be positive");
    if (cfg.order != 2 && cfg.order != 4) throw Error(ErrorKind::contract, "order must be 2 or 4");
    const int steps = std::max(1, static_cast<int>(std::llround(std::abs(T) / cfg.dt)));
    const double tau = T / steps;
    const double w1 = 1.0 / (2.0 - std::cbrt(2.0)), w0 = -std::cbrt(2.0) * w1;
    Vec k2 = g.k2();
    Trajectory tr;
    auto record = [&](double t, const CVec& phi) {
        tr.t.push_back(t);
        tr.phi.push_back(phi);
        tr.mass.push_back(mass(g, phi));
        tr.energy.push_back(effective_energy(g, nl, cfg.v_ext, phi));
    };
    CVec phi = phi0;
    record(0.0, phi);
    const int every = std::max(1, cfg.sample_every);
    for (int s = 1; s <= steps; ++s) {
        if (cfg.order == 2) {
            strang(g, nl, cfg.v_ext, k2, phi, tau);
        } else {
            strang(g, nl, cfg.v_ext, k2, phi, w1 * tau);
            strang(g, nl, cfg.v_ext, k2, phi, w0 * tau);
            strang(g, nl, cfg.v_ext, k2, phi, w1 * tau);
        }
        if (s % every == 0 || s == steps) record(s * tau, phi);
    }
    return tr;
}

Trajectory hartree_solve(const CVec& phi0, const PotentialSpec& V, const EffectiveConfig& cfg, double T) {
    return effective_solve(phi0, Nonlinearity::convolution(sample_displacement(cfg.grid, V)), cfg, T);
}

double hartree_energy(const Grid& g, const CVec& phi, const PotentialSpec& V, const Vec& v_ext) {
    return effective_energy(g, Nonlinearity::convolution(sample_displacement(g, V)), v_ext, phi);
}

Trajectory gp_solve(const CVec& phi0, double a0, const EffectiveConfig& cfg, double T) {
    if (a0 < 0) throw Error(ErrorKind::contract, "scattering length must be nonnegative");
    return effective_solve(phi0, Nonlinearity::local(8 * pi * a0), cfg, T);
}

double gp_energy(const Grid& g, const CVec& phi, double a0, const Vec& v_ext) {
    return effective_energy(g, Nonlinearity::local(8 * pi * a0), v_ext, phi);
}

Vec gp_modified_kernel(const Grid& g, const ScatteringSolution& sol, double N) {
    if (g.d() != 3) throw Error(ErrorKind::refused, "the modified GP kernel is three-dimensional");
    if (sol.V.is_hard_sphere()) throw Error(ErrorKind::domain, "hard sphere has no sampled kernel");
    double lim = sol.V.range / g.h();
    if (N > lim) throw Error(ErrorKind::refused, "kernel scale 1/N is not resolved: need N <= range/h", lim);
    Vec out(g.size());
    const double N3 = N * N * N;
    for (long i = 0; i < g.size(); ++i) {
        auto m = g.multi_index(i);
        double s = 0;
        for (int a = 0; a < 3; ++a) {
            double x = g.wrap(m[a] * g.h());
            s += x * x;
        }
        double r = N * std::sqrt(s);
        out[i] = N3 * sol.V(r) * sol.f_at(r);
    }
    return out;
}

Trajectory gp_modified_solve(const CVec& phi0, const ScatteringSolution& sol, double N, const EffectiveConfig& cfg,
                             double T) {
    return effective_solve(phi0, Nonlinearity::convolution(gp_modified_kernel(cfg.grid, sol, N)), cfg, T);
}

// ---------------------------------------------------------------- Hartree-Fock

CMat hf_hamiltonian(const HFConfig& cfg, const CMat& omega, const CMat& one_body, const Mat& Vpair) {
    const long n = omega.rows();
    CMat h = one_body;
    Vec diag = omega.diagonal().real();
    Vec direct = Vpair * diag / cfg.N;
    for (long j = 0; j < n; ++j) h(j, j) += direct[j];
    if (cfg.exchange) h -= (Vpair.cast<cplx>().cwiseProduct(omega)) / cfg.N;
    return 0.5 * (h + h.adjoint());
}

namespace {

CMat hf_one_body(const HFConfig& cfg) {
    CMat T = kinetic_matrix(cfg.grid, cfg.eps);
    if (cfg.v_ext.size() > 0) {
        if (cfg.v_ext.size() != cfg.grid.size()) throw Error(ErrorKind::shape, "external potential");
        T.diagonal() += cfg.v_ext.cast<cplx>();
    }
    return T;
}

double hf_energy_with(const HFConfig& cfg, const CMat& omega, const CMat& one_body, const Mat& Vpair) {
    double e = (one_body * omega).trace().real();
    Vec d = omega.diagonal().real();
    double inter = d.dot(Vpair * d);
    if (cfg.exchange) inter -= (Vpair.array() * omega.cwiseAbs2().array()).sum();
    return e + inter / (2 * cfg.N);
}

CMat unitary_of(const CMat& h, double tau) {
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    CVec ph(h.rows());
    for (long i = 0; i < h.rows(); ++i) ph[i] = std::exp(-I * tau * es.eigenvalues()[i]);
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

double hf_energy(const HFConfig& cfg, const CMat& omega) {
    return hf_energy_with(cfg, omega, hf_one_body(cfg), pair_matrix(cfg.grid, cfg.V));
}

HFTrajectory hf_solve(const CMat& omega0, const HFConfig& cfg, double T) {
    const long n = cfg.grid.size();
    if (omega0.rows() != n || omega0.cols() != n) throw Error(ErrorKind::shape, "omega does not match the grid");
    require_hermitian(omega0, 1e-10);
    Vec ev = hermitian_eigenvalues(omega0);
    if (ev.minCoeff() < -1e-10 || ev.maxCoeff() > 1 + 1e-10)
        throw Error(ErrorKind::contract, "omega must satisfy 0 <= omega <= 1");
    if (cfg.eps <= 0 || cfg.N <= 0 || cfg.dt <= 0) throw Error(ErrorKind::contract, "eps, N, dt must be positive");
    CMat h1 = hf_one_body(cfg);
    Mat Vp = pair_matrix(cfg.grid, cfg.V);
    const int steps = std::max(1, static_cast<int>(std::llround(std::abs(T) / cfg.dt)));
    const double tau = T / steps / cfg.eps;
    HFTrajectory tr;
    auto record = [&](double t, const CMat& w) {
        tr.t.push_back(t);
        tr.omega.push_back(w);
        tr.energy.push_back(hf_energy_with(cfg, w, h1, Vp));
        tr.trace.push_back(w.trace().real());
    };
    CMat w = omega0;
    record(0.0, w);
    const int every = std::max(1, cfg.sample_every);
    for (int s = 1; s <= steps; ++s) {
        CMat next = w;
        double change = INFINITY;
        int it = 0;
        for (; it < 100 && change > 1e-14; ++it) {
            CMat mid = 0.5 * (w + next);
            CMat U = unitary_of(hf_hamiltonian(cfg, mid, h1, Vp), tau);
            CMat cand = U * w * U.adjoint();
            cand = 0.5 * (cand + cand.adjoint());
            change = (cand - next).norm() / std::max(1.0, cand.norm());
            next.swap(cand);
        }
        if (change > 1e-11) throw Error(ErrorKind::numerical, "midpoint iteration did not converge; reduce dt", change);
        w.swap(next);
        if (s % every == 0 || s == steps) record(s * tau * cfg.eps, w);
    }
    return tr;
}

FermiState free_fermi_ground_state(const Grid& g, int N) {
    const int M = g.M();
    const int d = g.d();
    if (N < 0 || N > g.size()) throw Error(ErrorKind::contract, "N exceeds the number of plane waves");
    std::vector<std::array<int, 3>> ns;
    for (long i = 0; i < g.size(); ++i) {
        auto m = g.multi_index(i);
        std::array<int, 3> n{0, 0, 0};
        for (int a = 0; a < d; ++a) n[a] = m[a] < M / 2 ? m[a] : m[a] - M;
        ns.push_back(n);
    }
    auto n2 = [](const std::array<int, 3>& n) { return n[0] * n[0] + n[1] * n[1] + n[2] * n[2]; };
    std::stable_sort(ns.begin(), ns.end(), [&](const auto& a, const auto& b) {
        if (n2(a) != n2(b)) return n2(a) < n2(b);
        return a < b;
    });
    FermiState fs;
    fs.orbitals = CMat(g.size(), N);
    const double kf = 2 * pi / g.L();
    const double norm = 1.0 / std::sqrt(static_cast<double>(g.size()));
    for (int o = 0; o < N; ++o) {
        const auto& n = ns[static_cast<size_t>(o)];
        for (long i = 0; i < g.size(); ++i) {
            auto x = g.point(i);
            double ph = 0;
            for (int a = 0; a < d; ++a) ph += kf * n[a] * x[a];
            fs.orbitals(i, o) = norm * std::exp(I * ph);
        }
        fs.energy += kf * kf * n2(n);
    }
    fs.omega = fs.orbitals * fs.orbitals.adjoint();
    return fs;
}

FermiState trapped_orbitals(const Grid& g, const Vec& v_ext, double eps, int N) {
    CMat h = kinetic_matrix(g, eps);
    if (v_ext.size() > 0) h.diagonal() += v_ext.cast<cplx>();
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    if (N > h.rows()) throw Error(ErrorKind::contract, "N exceeds the number of modes");
    FermiState fs;
    fs.orbitals = es.eigenvectors().leftCols(N);
    fs.energy = es.eigenvalues().head(N).sum();
    fs.omega = fs.orbitals * fs.orbitals.adjoint();
    return fs;
}

}  // namespace qmf
