#include "qmf/semiclassics.hpp"

#include <algorithm>
#include <cmath>

namespace qmf {

// ---------------------------------------------------------------- Thomas-Fermi

Vec tf_potential(const TFConfig& cfg, const Vec& rho) {
    Vec phi = convolve(cfg.grid, sample_displacement(cfg.grid, cfg.V), rho);
    if (cfg.v_ext.size() > 0) phi += cfg.v_ext;
    return phi;
}

double tf_energy(const TFConfig& cfg, const Vec& rho) {
    const Grid& g = cfg.grid;
    double kin = 0.6 * cfg.c_tf * integrate(g, rho.array().pow(5.0 / 3.0).matrix());
    double ext = cfg.v_ext.size() > 0 ? integrate(g, cfg.v_ext.cwiseProduct(rho)) : 0.0;
    Vec w = convolve(g, sample_displacement(g, cfg.V), rho);
    return kin + ext + 0.5 * integrate(g, w.cwiseProduct(rho));
}

namespace {

Vec tf_profile(const Vec& phi, double mu, double c) {
    Vec r(phi.size());
    for (long i = 0; i < phi.size(); ++i) {
        double p = mu - phi[i];
        r[i] = p > 0 ? std::pow(p / c, 1.5) : 0.0;
    }
    return r;
}

// mu with int c^{-3/2} (mu - phi)_+^{3/2} = 1, and the normalised profile
double solve_mu(const Grid& g, const Vec& phi, double c, Vec& rho) {
    double lo = phi.minCoeff(), step = 1.0;
    double hi = lo + step;
    while (integrate(g, tf_profile(phi, hi, c)) < 1.0) {
        step *= 2;
        hi = lo + step;
        if (step > 1e12) throw Error(ErrorKind::numerical, "chemical potential bracket failed");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        double mid = 0.5 * (lo + hi);
        (integrate(g, tf_profile(phi, mid, c)) < 1.0 ? lo : hi) = mid;
    }
    double mu = 0.5 * (lo + hi);
    rho = tf_profile(phi, mu, c);
    rho /= integrate(g, rho);
    return mu;
}

double el_residual(const Vec& rho, const Vec& phi, double mu, double c) {
    double r = 0;
    for (long i = 0; i < rho.size(); ++i)
        r = std::max(r, std::abs(c * std::pow(rho[i], 2.0 / 3.0) - std::max(0.0, mu - phi[i])));
    return r;
}

}  // namespace

TFState tf_minimize(const TFConfig& cfg) {
    const Grid& g = cfg.grid;
    if (cfg.c_tf <= 0) throw Error(ErrorKind::contract, "c_TF must be positive");
    if (cfg.v_ext.size() > 0 && cfg.v_ext.size() != g.size()) throw Error(ErrorKind::shape, "external potential");
    TFState s;
    s.c_tf = cfg.c_tf;
    Vec rho = Vec::Constant(g.size(), 1.0 / std::pow(g.L(), g.d()));
    double E = tf_energy(cfg, rho);
    s.energy_history.push_back(E);
    for (int it = 0; it < cfg.max_iter; ++it) {
        Vec phi = tf_potential(cfg, rho);
        Vec target;
        double mu = solve_mu(g, phi, cfg.c_tf, target);
        double res = el_residual(rho, phi, mu, cfg.c_tf);
        s.iterations = it;
        if (res < cfg.tol) {
            s.rho = rho;
            s.mu = mu;
            s.residual = res;
            s.energy = E;
            return s;
        }
        double lam = cfg.damping;
        for (;;) {
            Vec trial = (1 - lam) * rho + lam * target;
            double Et = tf_energy(cfg, trial);
            if (Et <= E + 1e-14 * (1 + std::abs(E)) || lam < 1e-12) {
                rho = trial / integrate(g, trial);
                E = Et;
                break;
            }
            lam *= 0.5;
        }
        s.energy_history.push_back(E);
    }
    Vec phi = tf_potential(cfg, rho);
    Vec target;
    double mu = solve_mu(g, phi, cfg.c_tf, target);
    throw Error(ErrorKind::numerical, "Thomas-Fermi iteration did not converge", el_residual(rho, phi, mu, cfg.c_tf));
}

// ---------------------------------------------------------------- phase space

namespace {

void require_1d(const Grid& g) {
    if (g.d() != 1) throw Error(ErrorKind::unsupported, "phase-space transforms are implemented in one dimension");
}

}  // namespace

Vec PhaseSpaceDensity::X() const {
    const int M = grid.M();
    Vec x(2 * M - 1);
    for (int m = 0; m < 2 * M - 1; ++m) x[m] = grid.x(0) + 0.5 * m * grid.h();
    return x;
}

Vec PhaseSpaceDensity::v() const {
    const int M = grid.M();
    Vec v(M);
    for (int r = 0; r < M; ++r) v[r] = dv() * (r - M / 2);
    return v;
}

double PhaseSpaceDensity::integral() const { return 0.5 * grid.h() * dv() * occ.sum(); }

CMat weyl_quantize(const PhaseSpaceDensity& m) {
    const Grid& g = m.grid;
    require_1d(g);
    const int M = g.M();
    if (m.occ.rows() != 2 * M - 1 || m.occ.cols() != M) throw Error(ErrorKind::shape, "phase-space lattice size");
    CMat w(M, M);
    for (int j = 0; j < M; ++j)
        for (int k = 0; k < M; ++k) {
            cplx s = 0;
            const int mu = j + k, dm = j - k;
            for (int r = 0; r < M; ++r) s += m.occ(mu, r) * std::exp(I * (pi * (r - M / 2) * dm / M));
            w(j, k) = s / (2.0 * M);
        }
    return w;
}

PhaseSpaceDensity wigner_transform(const CMat& omega, const Grid& g, double eps) {
    require_1d(g);
    const int M = g.M();
    if (omega.rows() != M || omega.cols() != M) throw Error(ErrorKind::shape, "omega does not match the grid");
    if (eps <= 0) throw Error(ErrorKind::contract, "eps must be positive");
    PhaseSpaceDensity p{g, eps, Mat::Zero(2 * M - 1, M)};
    for (int mu = 0; mu < 2 * M - 1; ++mu)
        for (int r = 0; r < M; ++r) {
            cplx s = 0;
            for (int j = std::max(0, mu - M + 1); j <= std::min(mu, M - 1); ++j) {
                int k = mu - j;
                s += 2.0 * omega(j, k) * std::exp(-I * (pi * (r - M / 2) * (j - k) / M));
            }
            p.occ(mu, r) = s.real();
        }
    return p;
}

PhaseSpaceDensity sample_phase_space(const Grid& g, double eps, const std::function<double(double, double)>& f,
                                     double alias_tol) {
    require_1d(g);
    PhaseSpaceDensity p{g, eps, Mat()};
    Vec X = p.X(), v = p.v();
    p.occ = Mat(X.size(), v.size());
    for (long a = 0; a < X.size(); ++a)
        for (long r = 0; r < v.size(); ++r) p.occ(a, r) = f(X[a], v[r]);
    double peak = p.occ.cwiseAbs().maxCoeff();
    double edge = p.occ.col(0).cwiseAbs().maxCoeff();
    if (peak > 0 && edge > alias_tol * peak)
        throw Error(ErrorKind::refused,
                    "phase-space density does not vanish at the velocity cutoff pi eps / (2h) = " +
                        std::to_string(-v[0]),
                    -v[0]);
    return p;
}

PhaseSpaceDensity fermi_sea(const Grid& g, double eps, const std::function<double(double)>& v_F) {
    require_1d(g);
    PhaseSpaceDensity p{g, eps, Mat()};
    Vec X = p.X(), v = p.v();
    p.occ = Mat(X.size(), v.size());
    const double dv = p.dv();
    for (long a = 0; a < X.size(); ++a) {
        double vf = v_F(X[a]);
        for (long r = 0; r < v.size(); ++r) p.occ(a, r) = std::clamp((vf - std::abs(v[r])) / dv + 0.5, 0.0, 1.0);
    }
    return p;
}

FermiDiracState fermi_dirac_state(const Grid& g, double eps, const Vec& rho, double T, double mu, double N) {
    require_1d(g);
    const int M = g.M();
    if (rho.size() != M) throw Error(ErrorKind::shape, "density does not match the grid");
    if (T <= 0 || N <= 0) throw Error(ErrorKind::contract, "T and N must be positive");
    Vec rx(2 * M - 1);
    for (int m = 0; m < 2 * M - 1; ++m)
        rx[m] = m % 2 == 0 ? rho[m / 2] : 0.5 * (rho[m / 2] + rho[m / 2 + 1]);
    FermiDiracState st;
    st.psd = PhaseSpaceDensity{g, eps, Mat(2 * M - 1, M)};
    Vec v = st.psd.v();
    auto fill = [&](double c) {
        for (int a = 0; a < 2 * M - 1; ++a) {
            double e0 = c * std::pow(std::max(0.0, rx[a]), 2.0 / 3.0);
            for (int r = 0; r < M; ++r) st.psd.occ(a, r) = 1.0 / (1.0 + std::exp((v[r] * v[r] - e0 - mu) / T));
        }
        double tr = 0;
        for (int a = 0; a < 2 * M - 1; a += 2) tr += st.psd.occ.row(a).sum();
        return tr / (2.0 * M);
    };
    double lo = 0, hi = 1;
    if (fill(lo) > N) throw Error(ErrorKind::domain, "Fermi-Dirac state already holds more than N particles at c = 0");
    while (fill(hi) < N) {
        hi *= 2;
        if (hi > 1e12) throw Error(ErrorKind::domain, "N is not reachable on this phase-space lattice");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (fill(mid) < N ? lo : hi) = mid;
    }
    st.c = 0.5 * (lo + hi);
    fill(st.c);
    st.omega = weyl_quantize(st.psd);
    return st;
}

// ---------------------------------------------------------------- diagnostics

CommutatorNorms commutator_norms(const CMat& A, const Grid& g, double eps) {
    CommutatorNorms out;
    const long n = g.size();
    if (A.rows() != n || A.cols() != n) throw Error(ErrorKind::shape, "matrix does not match the grid");
    for (int a = 0; a < g.d(); ++a) {
        CMat C(n, n);
        for (long j = 0; j < n; ++j)
            for (long k = 0; k < n; ++k) C(j, k) = (g.point(j)[a] - g.point(k)[a]) * A(j, k);
        out.x_tr.push_back(trace_norm_general(C));
        out.x_hs.push_back(C.norm());
        CMat D = gradient_matrix(g, a);
        CMat G = eps * (D * A - A * D);
        out.grad_tr.push_back(trace_norm_general(G));
        out.grad_hs.push_back(G.norm());
    }
    return out;
}

CommutatorReport commutator_diagnostics(const CMat& omega, const Grid& g, double eps) {
    CMat w = 0.5 * (omega + omega.adjoint());
    Vec ev = hermitian_eigenvalues(w);
    if (ev.minCoeff() < -1e-10 || ev.maxCoeff() > 1 + 1e-10)
        throw Error(ErrorKind::contract, "commutator diagnostics need 0 <= omega <= 1");
    CommutatorReport r;
    r.omega = commutator_norms(w, g, eps);
    r.sqrt_omega = commutator_norms(hermitian_function(w, [](double x) { return std::sqrt(std::max(0.0, x)); }), g, eps);
    r.sqrt_one_minus =
        commutator_norms(hermitian_function(w, [](double x) { return std::sqrt(std::max(0.0, 1 - x)); }), g, eps);
    return r;
}

GrowthFit fit_growth(const std::vector<double>& t, const std::vector<double>& c) {
    const long n = static_cast<long>(t.size());
    if (n < 3 || static_cast<long>(c.size()) != n) throw Error(ErrorKind::contract, "need at least three samples");
    Mat A(n, 3);
    Vec y(n);
    for (long i = 0; i < n; ++i) {
        A(i, 0) = 1;
        A(i, 1) = t[static_cast<size_t>(i)];
        A(i, 2) = t[static_cast<size_t>(i)] * t[static_cast<size_t>(i)];
        y[i] = std::log(std::max(c[static_cast<size_t>(i)], 1e-300));
    }
    Vec p = A.colPivHouseholderQr().solve(y);
    GrowthFit f;
    f.a = p[0];
    f.b = p[1];
    f.q = p[2];
    f.residual = (A * p - y).norm() / std::sqrt(static_cast<double>(n));
    double span = t.back() - t.front();
    f.super_exponential = f.q > 0 && f.q * span * span > 1;
    f.accepted = std::isfinite(f.a) && std::isfinite(f.b) && std::isfinite(f.q) && !f.super_exponential;
    return f;
}

CommutatorPropagation commutator_propagation_experiment(const CMat& omega0, const HFConfig& cfg, double T,
                                                        int samples) {
    if (samples < 2) throw Error(ErrorKind::contract, "need at least two sample intervals");
    HFConfig c = cfg;
    const int steps = std::max(1, static_cast<int>(std::llround(T / cfg.dt)));
    c.sample_every = std::max(1, steps / samples);
    HFTrajectory tr = hf_solve(omega0, c, T);
    CommutatorPropagation out;
    for (size_t i = 0; i < tr.t.size(); ++i) {
        CommutatorNorms nrm = commutator_norms(tr.omega[i], cfg.grid, cfg.eps);
        double xs = 0, gs = 0;
        for (size_t a = 0; a < nrm.x_tr.size(); ++a) {
            xs += nrm.x_tr[a];
            gs += nrm.grad_tr[a];
        }
        out.t.push_back(tr.t[i]);
        out.x_tr.push_back(xs);
        out.grad_tr.push_back(gs);
        out.energy.push_back(tr.energy[i]);
    }
    out.fit_x = fit_growth(out.t, out.x_tr);
    out.fit_grad = fit_growth(out.t, out.grad_tr);
    return out;
}

CMat exchange_operator(const CMat& omega, const Grid& g, const PotentialSpec& V, double N) {
    const long n = g.size();
    if (omega.rows() != n) throw Error(ErrorKind::shape, "omega does not match the grid");
    // Vhat(p) = h^d sum_x V(x) e^{-ipx}; kernel(z) = L^{-d} sum_p Vhat(p) e^{ipz}
    CVec vhat = fft(g, sample_displacement(g, V).cast<cplx>()) * g.cell();
    // ifft carries 1/n = h^d / L^d
    CVec kern = ifft(g, vhat) / g.cell();
    const int M = g.M();
    CMat X(n, n);
    for (long a = 0; a < n; ++a) {
        auto ma = g.multi_index(a);
        for (long b = 0; b < n; ++b) {
            auto mb = g.multi_index(b);
            long idx = 0;
            for (int ax = 0; ax < g.d(); ++ax) idx = idx * M + ((ma[ax] - mb[ax]) % M + M) % M;
            X(a, b) = kern[idx] * omega(a, b) / N;
        }
    }
    return X;
}

double exchange_commutator(const CMat& omega, const Grid& g, const PotentialSpec& V, double N) {
    CMat X = exchange_operator(omega, g, V, N);
    return trace_norm_general(X * omega - omega * X);
}

double lieb_thirring_ratio(const CMat& omega, const Grid& g) {
    const long n = g.size();
    if (omega.rows() != n || omega.cols() != n) throw Error(ErrorKind::shape, "omega does not match the grid");
    CMat lap(n, n);
    for (long j = 0; j < n; ++j) lap.col(j) = laplacian_apply(g, omega.col(j));
    double kin = lap.trace().real();
    const double p = 1.0 + 2.0 / g.d();
    Vec rho = omega.diagonal().real() / g.cell();
    double denom = integrate(g, rho.cwiseMax(0.0).array().pow(p).matrix());
    if (denom <= 0) throw Error(ErrorKind::contract, "zero density");
    return kin / denom;
}

}  // namespace qmf
