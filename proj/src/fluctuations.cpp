#include "qmf/fluctuations.hpp"

#include <algorithm>
#include <cmath>

#include "qmf/effective.hpp"

namespace qmf {

MeanFieldModel grid_model(const Grid& g, const PotentialSpec& V, const Vec& v_ext) {
    MeanFieldModel m;
    m.T = kinetic_matrix(g);
    if (v_ext.size() > 0) {
        if (v_ext.size() != g.size()) throw Error(ErrorKind::shape, "external potential length");
        m.T.diagonal() += v_ext.cast<cplx>();
    }
    m.V = pair_matrix(g, V);
    return m;
}

CVec mode_hartree_rhs(const MeanFieldModel& m, const CVec& c) {
    Vec dens = m.V * c.cwiseAbs2();
    return m.T * c + CVec(dens.cast<cplx>().cwiseProduct(c));
}

ModeTrajectory mode_hartree(const MeanFieldModel& m, const CVec& c0, double T, double dt, int sample_every) {
    if (c0.size() != m.modes()) throw Error(ErrorKind::shape, "condensate length");
    const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(T) / dt - 1e-9)));
    const double tau = T / steps;
    auto f = [&](const CVec& c) { return CVec(-I * mode_hartree_rhs(m, c)); };
    ModeTrajectory tr;
    CVec c = c0;
    tr.t.push_back(0.0);
    tr.c.push_back(c);
    const int every = std::max(1, sample_every);
    for (int s = 1; s <= steps; ++s) {
        CVec k1 = f(c), k2 = f(c + 0.5 * tau * k1), k3 = f(c + 0.5 * tau * k2), k4 = f(c + tau * k3);
        c += tau / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (s % every == 0 || s == steps) {
            tr.t.push_back(s * tau);
            tr.c.push_back(c);
        }
    }
    return tr;
}

CMat QuadraticGenerator::D() const {
    const long M = h.rows();
    CMat d(2 * M, 2 * M);
    d << h, -A2, A2.conjugate(), -h.conjugate();
    return d;
}

QuadraticGenerator quadratic_generator(const MeanFieldModel& m, const CVec& c) {
    QuadraticGenerator q;
    const long M = c.size();
    Vec dens = m.V * c.cwiseAbs2();
    q.A1 = CMat(M, M);
    q.A2 = CMat(M, M);
    for (long j = 0; j < M; ++j)
        for (long k = 0; k < M; ++k) {
            q.A1(j, k) = m.V(j, k) * c[j] * std::conj(c[k]);
            q.A2(j, k) = m.V(j, k) * c[j] * c[k];
        }
    q.h = m.T + q.A1;
    q.h.diagonal() += dens.cast<cplx>();
    return q;
}

// ---------------------------------------------------------------- Bogoliubov maps

BogoliubovMap BogoliubovMap::identity(int M) { return {CMat::Identity(M, M), CMat::Zero(M, M)}; }

CMat BogoliubovMap::full() const {
    const long M = U.rows();
    CMat t(2 * M, 2 * M);
    t << U, V.conjugate(), V, U.conjugate();
    return t;
}

BogoliubovMap BogoliubovMap::operator*(const BogoliubovMap& o) const {
    return {U * o.U + V.conjugate() * o.V, V * o.U + U.conjugate() * o.V};
}

BogoliubovMap BogoliubovMap::inverse() const {
    // S Theta* S = [[U*, -V*], [-V^T, U^T]]
    return {U.adjoint(), CMat(-V.transpose())};
}

double BogoliubovMap::constraint_residual() const {
    const long M = U.rows();
    double a = (U.adjoint() * U - V.adjoint() * V - CMat::Identity(M, M)).cwiseAbs().maxCoeff();
    double b = (U.transpose() * V - V.transpose() * U).cwiseAbs().maxCoeff();
    return std::max(a, b);
}

double j_residual(const CMat& th) {
    const long M = th.rows() / 2;
    double a = (th.bottomRightCorner(M, M) - th.topLeftCorner(M, M).conjugate()).cwiseAbs().maxCoeff();
    double b = (th.bottomLeftCorner(M, M) - th.topRightCorner(M, M).conjugate()).cwiseAbs().maxCoeff();
    return std::max(a, b);
}

double symplectic_residual(const CMat& th) {
    const long M = th.rows() / 2;
    Vec s(2 * M);
    s << Vec::Ones(M), -Vec::Ones(M);
    CMat S = s.cast<cplx>().asDiagonal();
    return (th.adjoint() * S * th - S).cwiseAbs().maxCoeff();
}

namespace {

// Theta <- Theta G^{-1/2}, G = S Theta* S Theta
BogoliubovMap reproject(const BogoliubovMap& th) {
    const long M = th.U.rows();
    CMat T = th.full();
    Vec s(2 * M);
    s << Vec::Ones(M), -Vec::Ones(M);
    CMat S = s.cast<cplx>().asDiagonal();
    CMat E = S * T.adjoint() * S * T - CMat::Identity(2 * M, 2 * M);
    CMat E2 = E * E;
    CMat corr = CMat::Identity(2 * M, 2 * M) - 0.5 * E + 0.375 * E2 - 0.3125 * E2 * E;
    CMat Tn = T * corr;
    return {Tn.topLeftCorner(M, M), Tn.bottomLeftCorner(M, M)};
}

}  // namespace

ThetaRun theta_propagate(const MeanFieldModel& m, const CVec& c_s, double s, double t, double dt, int sample_every) {
    const int M = m.modes();
    if (c_s.size() != M) throw Error(ErrorKind::shape, "condensate length");
    if (dt <= 0) throw Error(ErrorKind::contract, "dt must be positive");
    const int steps = t == s ? 0 : std::max(1, static_cast<int>(std::ceil(std::abs(t - s) / dt - 1e-9)));
    const double tau = steps ? (t - s) / steps : 0.0;
    struct State {
        CVec c;
        CMat U, V;
    };
    auto deriv = [&](const State& x) {
        QuadraticGenerator q = quadratic_generator(m, x.c);
        State d;
        d.c = -I * mode_hartree_rhs(m, x.c);
        d.U = -I * (q.h * x.U - q.A2 * x.V);
        d.V = -I * (q.A2.conjugate() * x.U - q.h.conjugate() * x.V);
        return d;
    };
    auto axpy = [](const State& x, double a, const State& d) {
        return State{x.c + a * d.c, x.U + a * d.U, x.V + a * d.V};
    };
    ThetaRun run;
    State x{c_s, CMat::Identity(M, M), CMat::Zero(M, M)};
    auto record = [&](double time) {
        run.t.push_back(time);
        run.samples.push_back({x.U, x.V});
        run.c.push_back(x.c);
    };
    if (sample_every > 0) record(s);
    for (int k = 1; k <= steps; ++k) {
        State k1 = deriv(x), k2 = deriv(axpy(x, 0.5 * tau, k1)), k3 = deriv(axpy(x, 0.5 * tau, k2)),
              k4 = deriv(axpy(x, tau, k3));
        x.c += tau / 6.0 * (k1.c + 2 * k2.c + 2 * k3.c + k4.c);
        x.U += tau / 6.0 * (k1.U + 2 * k2.U + 2 * k3.U + k4.U);
        x.V += tau / 6.0 * (k1.V + 2 * k2.V + 2 * k3.V + k4.V);
        BogoliubovMap p = reproject({x.U, x.V});
        x.U = p.U;
        x.V = p.V;
        double r = p.constraint_residual();
        run.max_residual = std::max(run.max_residual, r);
        if (r > 1e-8) throw Error(ErrorKind::numerical, "Bogoliubov constraint residual blew up; reduce dt", r);
        if (sample_every > 0 && (k % sample_every == 0 || k == steps)) record(s + k * tau);
    }
    run.theta = {x.U, x.V};
    run.c_t = x.c;
    return run;
}

FockVector bogoliubov_vacuum(const BogoliubovMap& theta, BasisPtr b, double max_leakage) {
    if (b->statistics() != Statistics::boson) throw Error(ErrorKind::contract, "bosonic basis required");
    if (theta.U.rows() != b->modes()) throw Error(ErrorKind::shape, "map and basis mode counts differ");
    CMat Ub = theta.U.conjugate();
    Eigen::FullPivLU<CMat> lu(Ub);
    if (!lu.isInvertible()) throw Error(ErrorKind::numerical, "U block is not invertible");
    CMat K = -theta.V.conjugate() * lu.inverse();
    K = 0.5 * (K + K.transpose());
    SpMat Q = 0.5 * pair_creation(*b, K);
    FockVector v = FockVector::vacuum(b);
    CVec term = v.amp, acc = v.amp;
    for (int n = 1; n <= b->n_max() / 2 + 1; ++n) {
        term = (Q * term) / static_cast<double>(n);
        acc += term;
        if (term.norm() < 1e-17 * acc.norm()) break;
    }
    acc /= acc.norm();
    FockVector out(b, acc);
    double bm = out.boundary_mass();
    if (bm > max_leakage) throw Error(ErrorKind::truncation, "Gaussian state leaks through the truncation", bm);
    return out;
}

double clt_variance(const BogoliubovMap& theta, const CVec& phi0, const CVec& phi_t, const CMat& J) {
    const long M = phi_t.size();
    if (J.rows() != M || J.cols() != M || phi0.size() != M) throw Error(ErrorKind::shape, "sizes differ");
    if (std::abs(phi_t.norm() - 1.0) > 1e-10 || std::abs(phi0.norm() - 1.0) > 1e-10)
        throw Error(ErrorKind::contract, "condensates must be normalised");
    CVec Jp = J * phi_t;
    CVec q = Jp - phi_t * phi_t.dot(Jp);
    BogoliubovMap H = theta.inverse();
    CVec top = H.U * q + H.V.conjugate() * q.conjugate();
    CVec bot = H.V * q + H.U.conjugate() * q.conjugate();
    double nrm2 = top.squaredNorm() + bot.squaredNorm();
    cplx ip = (top.dot(phi0) + bot.dot(CVec(phi0.conjugate()))) / std::sqrt(2.0);
    double s2 = 0.5 * (nrm2 - std::norm(ip));
    if (s2 < -1e-10) throw Error(ErrorKind::contract, "negative variance", s2);
    return std::max(0.0, s2);
}

// ---------------------------------------------------------------- fluctuation generator

namespace {

struct Term {
    cplx coef;
    std::vector<Ladder> ops;  // applied right to left
};

SpMat assemble_terms(const FockBasis& b, const std::vector<Term>& terms) {
    std::vector<Eigen::Triplet<cplx>> t;
    for (long i = 0; i < b.size(); ++i)
        for (const auto& term : terms) {
            Occupation n = b.state(i);
            double s = apply_ladder_string(b.statistics(), term.ops, n);
            if (s == 0.0) continue;
            long k = b.index(n);
            if (k >= 0) t.emplace_back(k, i, term.coef * s);
        }
    SpMat m(b.size(), b.size());
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

// quadratic + cubic + quartic parts of the shifted Hamiltonian
SpMat fluctuation_body(const MeanFieldModel& m, const CVec& c, double N, const FockBasis& b) {
    const int M = m.modes();
    if (b.modes() != M) throw Error(ErrorKind::shape, "basis and model mode counts differ");
    if (b.statistics() != Statistics::boson) throw Error(ErrorKind::contract, "bosonic basis required");
    QuadraticGenerator q = quadratic_generator(m, c);
    SpMat L = second_quantize(b, q.h);
    std::vector<Term> pair, cubic;
    for (int x = 0; x < M; ++x)
        for (int y = 0; y < M; ++y) {
            if (q.A2(x, y) != cplx(0)) {
                pair.push_back({0.5 * q.A2(x, y), {{x, true}, {y, true}}});
                pair.push_back({0.5 * std::conj(q.A2(x, y)), {{y, false}, {x, false}}});
            }
            cplx w = m.V(x, y) * c[y] / std::sqrt(N);
            if (w != cplx(0)) {
                cubic.push_back({w, {{x, true}, {y, true}, {x, false}}});
                cubic.push_back({std::conj(w), {{x, true}, {y, false}, {x, false}}});
            }
        }
    L += assemble_terms(b, pair);
    L += assemble_terms(b, cubic);
    L += pair_interaction(b, m.V / N);
    return L;
}

}  // namespace

SpMat shifted_hamiltonian(const MeanFieldModel& m, const CVec& c, double N, const FockBasis& b) {
    CVec g = std::sqrt(N) * mode_hartree_rhs(m, c);
    return fluctuation_body(m, c, N, b) + creation_operator(b, g) + annihilation_operator(b, g);
}

GeneratorReport generator_LN(const MeanFieldModel& m, const CVec& c, const CVec& i_cdot, double N, BasisPtr b) {
    if (c.size() != m.modes() || i_cdot.size() != m.modes()) throw Error(ErrorKind::shape, "condensate length");
    GeneratorReport r;
    r.linear = std::sqrt(N) * (mode_hartree_rhs(m, c) - i_cdot);
    r.linear_norm = r.linear.norm();
    if (b) {
        if (b->n_max() < 3) throw Error(ErrorKind::truncation, "basis too small for the cubic and quartic terms");
        r.L = fluctuation_body(m, c, N, *b) + creation_operator(*b, r.linear) + annihilation_operator(*b, r.linear);
    }
    return r;
}

GeneratorReport generator_LN_mean_field(const Grid& g, const CVec& phi, const PotentialSpec& V, double N,
                                        const Vec& v_ext, BasisPtr b) {
    const double s = std::sqrt(g.cell());
    CVec rhs = effective_rhs(g, Nonlinearity::convolution(sample_displacement(g, V)), v_ext, phi);
    return generator_LN(grid_model(g, V, v_ext), phi * s, rhs * s, N, std::move(b));
}

GeneratorReport generator_LN_gp(const Grid& g, const CVec& phi, const ScatteringSolution& sol, double N,
                                const Vec& v_ext, BasisPtr b) {
    const double s = std::sqrt(g.cell());
    CVec rhs = effective_rhs(g, Nonlinearity::convolution(gp_modified_kernel(g, sol, N)), v_ext, phi);
    PotentialSpec vN = sol.V.scaled(N * N * N, N);
    return generator_LN(grid_model(g, vN, v_ext), phi * s, rhs * s, N, std::move(b));
}

// ---------------------------------------------------------------- experiments

EnvelopeFit fit_envelope(const std::vector<double>& t, const std::vector<double>& y) {
    const size_t n = t.size();
    if (n < 2 || y.size() != n) throw Error(ErrorKind::contract, "need at least two samples");
    Vec ly(n);
    double mt = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        ly[i] = std::log1p(std::max(0.0, y[i]));
        mt += t[i];
        my += ly[i];
    }
    mt /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (t[i] - mt) * (t[i] - mt);
        sxy += (t[i] - mt) * (ly[i] - my);
    }
    EnvelopeFit f;
    f.K = sxx > 0 ? sxy / sxx : 0.0;
    double a = my - f.K * mt;
    double worst = 0;
    for (size_t i = 0; i < n; ++i) worst = std::max(worst, ly[i] - (a + f.K * t[i]));
    f.D = std::exp(a + worst);
    f.holds = true;
    for (size_t i = 0; i < n; ++i)
        if (y[i] > f.D * std::exp(f.K * t[i]) - 1 + 1e-12 * (1 + y[i])) f.holds = false;
    return f;
}

int default_fock_cap(double N) { return static_cast<int>(std::ceil(N + 8 * std::sqrt(N) + 12)); }

GrowthResult fluctuation_growth_experiment(const MeanFieldModel& m, const CVec& c0, double N, const FockVector& xi,
                                           double T, int samples, double dt) {
    const auto& b = xi.basis;
    if (b->modes() != m.modes()) throw Error(ErrorKind::shape, "basis and model mode counts differ");
    if (m.modes() > 4) throw Error(ErrorKind::refused, "fluctuation experiments are limited to M <= 4 modes");
    if (samples < 1) throw Error(ErrorKind::contract, "need at least one sample interval");
    const double leak = 1e-4;
    const double sq = std::sqrt(N);
    SpMat H = fock_hamiltonian(*b, m.fock_model(N));
    GrowthResult res;
    FockVector psi = weyl_apply(sq * c0, xi, leak);
    CVec c = c0;
    const double dT = T / samples;
    for (int k = 0; k <= samples; ++k) {
        if (k > 0) {
            psi = propagate(psi, H, dT, dT);
            c = mode_hartree(m, c, dT, dt, 1 << 30).c.back();
        }
        res.max_boundary = std::max(res.max_boundary, psi.boundary_mass());
        if (psi.boundary_mass() > leak)
            throw Error(ErrorKind::truncation, "many-body state leaks through the truncation", psi.boundary_mass());
        FockVector x = weyl_apply(-sq * c, psi, leak);
        res.t.push_back(k * dT);
        res.number.push_back(x.number_expectation() / x.amp.squaredNorm());
    }
    res.fit = fit_envelope(res.t, res.number);
    return res;
}

double phase_residual(const CVec& a, const CVec& b) {
    double ov = std::abs(a.dot(b)) / (a.norm() * b.norm());
    return std::sqrt(std::max(0.0, 2.0 - 2.0 * ov));
}

namespace {

NormResult norm_run(const MeanFieldModel& m, const CVec& c0, double N, const std::vector<double>& times, int n_max,
                    double dt) {
    NormResult res;
    res.n_max = n_max;
    auto b = FockBasis::bosons(m.modes(), n_max);
    const double sq = std::sqrt(N);
    SpMat H = fock_hamiltonian(*b, m.fock_model(N));
    FockVector psi = coherent_state(sq * c0, b, 1e-10);
    BogoliubovMap theta = BogoliubovMap::identity(m.modes());
    CVec c = c0;
    double now = 0.0;
    for (double t : times) {
        if (t < now) throw Error(ErrorKind::contract, "times must be nondecreasing");
        if (t > now) {
            psi = propagate(psi, H, t - now, t - now);
            ThetaRun run = theta_propagate(m, c, now, t, dt);
            theta = run.theta * theta;
            c = run.c_t;
            now = t;
        }
        if (psi.boundary_mass() > 1e-10)
            throw Error(ErrorKind::truncation, "many-body state leaks through the truncation", psi.boundary_mass());
        FockVector g = bogoliubov_vacuum(theta, b, 1e-10);
        FockVector approx = weyl_apply(sq * c, g, 1e-10);
        res.t.push_back(t);
        res.residual.push_back(phase_residual(psi.amp, approx.amp));
    }
    return res;
}

}  // namespace

NormResult norm_approximation_experiment(const MeanFieldModel& m, const CVec& c0, double N,
                                         const std::vector<double>& times, int n_max, double dt) {
    if (m.modes() > 4) throw Error(ErrorKind::refused, "fluctuation experiments are limited to M <= 4 modes");
    if (n_max > 0) return norm_run(m, c0, N, times, n_max, dt);
    // squeezing gives the quasi-free part geometric tails: enlarge the cap until they fit
    const long max_dim = 400000;
    for (int cap = default_fock_cap(N);; cap += cap / 2) {
        double dim = std::exp(std::lgamma(cap + m.modes() + 1.0) - std::lgamma(cap + 1.0) - std::lgamma(m.modes() + 1.0));
        if (dim > max_dim) throw Error(ErrorKind::refused, "no Fock cap within the dimension budget holds the states");
        try {
            return norm_run(m, c0, N, times, cap, dt);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::truncation) throw;
        }
    }
}

Vec ExcitationImage::sector_weights() const {
    Vec w = Vec::Zero(N + 1);
    for (long i = 0; i < image.basis->size(); ++i) w[image.basis->total(i)] += std::norm(image.amp[i]);
    return w;
}

namespace {

CMat frame_with_first(const CVec& phi) {
    const long M = phi.size();
    CMat A = CMat::Identity(M, M);
    A.col(0) = phi;
    // keep the remaining columns linearly independent of phi
    long skip = 0;
    phi.cwiseAbs().maxCoeff(&skip);
    long col = 1;
    for (long j = 0; j < M && col < M; ++j) {
        if (j == skip) continue;
        A.col(col).setZero();
        A(j, col) = 1.0;
        ++col;
    }
    Eigen::HouseholderQR<CMat> qr(A);
    CMat Q = qr.householderQ() * CMat::Identity(M, M);
    cplx ph = Q.col(0).dot(phi);
    Q.col(0) *= ph / std::abs(ph);
    return Q;
}

// the frame states prod_k a*(u_k)^{m_k}/sqrt(m_k!) Omega in the sector basis
CVec frame_state(const FockBasis& full, const std::vector<SpMat>& cre, const std::vector<int>& occ,
                 const FockBasis& sector) {
    CVec a = CVec::Zero(full.size());
    a[full.index(Occupation(static_cast<size_t>(full.modes()), 0))] = 1.0;
    for (size_t k = 0; k < occ.size(); ++k)
        for (int r = 1; r <= occ[k]; ++r) a = (cre[k] * a) / std::sqrt(static_cast<double>(r));
    CVec out(sector.size());
    for (long i = 0; i < sector.size(); ++i) out[i] = a[full.index(sector.state(i))];
    return out;
}

}  // namespace

ExcitationImage excitation_map(const FockVector& psi, const CVec& phi) {
    const auto& b = *psi.basis;
    if (b.statistics() != Statistics::boson || b.n_min() != b.n_max())
        throw Error(ErrorKind::contract, "excitation map needs a bosonic N-particle sector");
    const int M = b.modes(), N = b.n_max();
    if (phi.size() != M) throw Error(ErrorKind::shape, "condensate length");
    if (std::abs(phi.norm() - 1.0) > 1e-10) throw Error(ErrorKind::contract, "phi must be normalised");
    if (M < 2) throw Error(ErrorKind::contract, "need at least two modes");
    ExcitationImage e;
    e.N = N;
    e.frame = frame_with_first(phi);
    auto full = FockBasis::bosons(M, N);
    std::vector<SpMat> cre;
    for (int k = 0; k < M; ++k) cre.push_back(creation_operator(*full, e.frame.col(k)));
    auto comp = FockBasis::bosons(M - 1, N);
    CVec amp(comp->size());
    for (long i = 0; i < comp->size(); ++i) {
        const Occupation& m = comp->state(i);
        std::vector<int> occ(static_cast<size_t>(M));
        occ[0] = N - comp->total(i);
        for (int k = 1; k < M; ++k) occ[static_cast<size_t>(k)] = m[static_cast<size_t>(k - 1)];
        amp[i] = frame_state(*full, cre, occ, b).dot(psi.amp);
    }
    e.image = FockVector(comp, amp);
    return e;
}

FockVector excitation_inverse(const ExcitationImage& e) {
    const int M = static_cast<int>(e.frame.rows()), N = e.N;
    auto sector = FockBasis::boson_sector(M, N);
    auto full = FockBasis::bosons(M, N);
    std::vector<SpMat> cre;
    for (int k = 0; k < M; ++k) cre.push_back(creation_operator(*full, e.frame.col(k)));
    CVec out = CVec::Zero(sector->size());
    const auto& comp = *e.image.basis;
    for (long i = 0; i < comp.size(); ++i) {
        if (e.image.amp[i] == cplx(0)) continue;
        const Occupation& m = comp.state(i);
        std::vector<int> occ(static_cast<size_t>(M));
        occ[0] = N - comp.total(i);
        for (int k = 1; k < M; ++k) occ[static_cast<size_t>(k)] = m[static_cast<size_t>(k - 1)];
        out += e.image.amp[i] * frame_state(*full, cre, occ, *sector);
    }
    return FockVector(sector, out);
}

// ---------------------------------------------------------------- dressed energy

CMat plane_wave_modes(const Grid& g, int n2_max) {
    const int M = g.M(), d = g.d();
    std::vector<std::array<int, 3>> ns;
    for (long i = 0; i < g.size(); ++i) {
        auto m = g.multi_index(i);
        std::array<int, 3> n{0, 0, 0};
        int n2 = 0;
        for (int a = 0; a < d; ++a) {
            n[a] = m[a] < M / 2 ? m[a] : m[a] - M;
            n2 += n[a] * n[a];
        }
        if (n2 <= n2_max) ns.push_back(n);
    }
    auto n2 = [](const std::array<int, 3>& n) { return n[0] * n[0] + n[1] * n[1] + n[2] * n[2]; };
    std::stable_sort(ns.begin(), ns.end(), [&](const auto& a, const auto& b) {
        if (n2(a) != n2(b)) return n2(a) < n2(b);
        return a < b;
    });
    CMat U(g.size(), static_cast<long>(ns.size()));
    const double kf = 2 * pi / g.L(), nrm = 1.0 / std::sqrt(static_cast<double>(g.size()));
    for (size_t o = 0; o < ns.size(); ++o)
        for (long i = 0; i < g.size(); ++i) {
            auto x = g.point(i);
            double ph = 0;
            for (int a = 0; a < d; ++a) ph += kf * ns[o][a] * x[a];
            U(i, static_cast<long>(o)) = nrm * std::exp(I * ph);
        }
    return U;
}

DressedSetup dressed_setup(const Grid& g, const CVec& phi, const Vec& v_ext, const ScatteringSolution& sol, double N,
                           const CMat& modes) {
    if (g.d() != 3) throw Error(ErrorKind::refused, "the dressed energy is evaluated on 3D grids");
    if (sol.V.is_hard_sphere()) throw Error(ErrorKind::domain, "hard sphere has no sampled interaction");
    require_gp_resolved(g, sol.V, N);
    const long P = g.size();
    if (modes.rows() != P || phi.size() != P) throw Error(ErrorKind::shape, "modes and phi must live on the grid");
    const long m = modes.cols();
    if ((modes.adjoint() * modes - CMat::Identity(m, m)).cwiseAbs().maxCoeff() > 1e-10)
        throw Error(ErrorKind::contract, "modes must be orthonormal");
    DressedSetup s;
    s.N = N;
    CVec cpix = phi * std::sqrt(g.cell());
    s.c = modes.adjoint() * cpix;
    if ((modes * s.c - cpix).norm() > 1e-10) throw Error(ErrorKind::contract, "phi is not in the span of the modes");
    CMat lap(P, m);
    for (long a = 0; a < m; ++a) lap.col(a) = laplacian_apply(g, modes.col(a));
    s.kinetic = modes.adjoint() * lap;
    s.external = CMat::Zero(m, m);
    if (v_ext.size() > 0) s.external = modes.adjoint() * v_ext.cast<cplx>().asDiagonal() * modes;
    Mat W = pair_matrix(g, sol.V.scaled(N * N, N));
    // rho_bc(y) = conj u_b(y) u_c(y)
    CMat R(P, m * m);
    for (long b = 0; b < m; ++b)
        for (long c = 0; c < m; ++c) R.col(b * m + c) = modes.col(b).conjugate().cwiseProduct(modes.col(c));
    CMat WR = W.cast<cplx>() * R;
    CMat V4 = R.transpose() * WR;  // (a d) x (b c): sum_x conj u_a u_d (W rho_bc)
    s.v.assign(static_cast<size_t>(m * m * m * m), cplx(0));
    for (long a = 0; a < m; ++a)
        for (long b = 0; b < m; ++b)
            for (long c = 0; c < m; ++c)
                for (long d = 0; d < m; ++d)
                    s.v[static_cast<size_t>(((a * m + b) * m + c) * m + d)] = V4(a * m + d, b * m + c);
    CMat k(P, P);
    const double h3 = g.cell();
    for (long j = 0; j < P; ++j)
        for (long l = 0; l < P; ++l) k(j, l) = -h3 * N * sol.omega_at(N * g.distance(j, l)) * phi[j] * phi[l];
    s.K = modes.adjoint() * k * modes.conjugate();
    s.K = 0.5 * (s.K + s.K.transpose());
    return s;
}

namespace {

DressedEnergy direct_energy(const DressedSetup& s, int n_max, bool with_T0, double max_leakage, double* boundary) {
    const int m = s.modes();
    auto b = FockBasis::bosons(m, n_max);
    FockVector psi = FockVector::vacuum(b);
    if (with_T0) {
        LeakageInfo info;
        psi = bogoliubov_apply(s.K, psi, max_leakage, &info);
        if (boundary) *boundary = info.boundary_mass;
    } else if (boundary) {
        *boundary = 0.0;
    }
    const CVec sh = std::sqrt(s.N) * s.c;
    std::vector<CVec> y(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) y[static_cast<size_t>(j)] = b->annihilator(j) * psi.amp + sh[j] * psi.amp;
    DressedEnergy e;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            cplx ov = y[static_cast<size_t>(i)].dot(y[static_cast<size_t>(j)]);
            e.kinetic += (s.kinetic(i, j) * ov).real();
            e.external += (s.external(i, j) * ov).real();
        }
    std::vector<CVec> w(static_cast<size_t>(m * m));
    for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) {
            const CVec& yd = y[static_cast<size_t>(d)];
            w[static_cast<size_t>(c * m + d)] = b->annihilator(c) * yd + sh[c] * yd;
        }
    cplx inter = 0;
    for (int a = 0; a < m; ++a)
        for (int bb = 0; bb < m; ++bb)
            for (int c = 0; c < m; ++c)
                for (int d = 0; d < m; ++d) {
                    cplx v = s.v[static_cast<size_t>(((a * m + bb) * m + c) * m + d)];
                    if (v == cplx(0)) continue;
                    inter += v * w[static_cast<size_t>(bb * m + a)].dot(w[static_cast<size_t>(c * m + d)]);
                }
    e.interaction = 0.5 * inter.real();
    e.total = e.kinetic + e.external + e.interaction;
    return e;
}

DressedEnergy formula_energy(const DressedSetup& s, bool with_T0) {
    const int m = s.modes();
    CMat G = CMat::Zero(m, m), A = CMat::Zero(m, m);  // <b*_i b_j>, <b_i b_j>
    if (with_T0) {
        CoshSinh cs = cosh_sinh(s.K);
        G = cs.sh.adjoint() * cs.sh;
        A = cs.ch * cs.sh;
    }
    const CVec z = std::sqrt(s.N) * s.c;
    auto Ad = [&](int i, int j) { return std::conj(A(j, i)); };  // <b*_i b*_j>
    DressedEnergy e;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            cplx ex = G(i, j) + std::conj(z[i]) * z[j];
            e.kinetic += (s.kinetic(i, j) * ex).real();
            e.external += (s.external(i, j) * ex).real();
        }
    cplx inter = 0;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int c = 0; c < m; ++c)
                for (int d = 0; d < m; ++d) {
                    cplx v = s.v[static_cast<size_t>(((a * m + b) * m + c) * m + d)];
                    if (v == cplx(0)) continue;
                    cplx za = std::conj(z[a]), zb = std::conj(z[b]), zc = z[c], zd = z[d];
                    cplx ex = za * zb * zc * zd + Ad(a, b) * zc * zd + za * zb * A(c, d) + G(a, c) * zb * zd +
                              G(a, d) * zb * zc + G(b, c) * za * zd + G(b, d) * za * zc + Ad(a, b) * A(c, d) +
                              G(a, c) * G(b, d) + G(a, d) * G(b, c);
                    inter += v * ex;
                }
    e.interaction = 0.5 * inter.real();
    e.total = e.kinetic + e.external + e.interaction;
    return e;
}

}  // namespace

DressedEnergyReport gp_dressed_energy(const DressedSetup& s, int n_max, bool with_T0, double max_leakage) {
    if (n_max < 6) throw Error(ErrorKind::contract, "n_max must be at least 6");
    DressedEnergyReport r;
    r.n_max = n_max;
    r.with_T0 = with_T0;
    r.direct = direct_energy(s, n_max, with_T0, max_leakage, &r.boundary_mass);
    r.formula = formula_energy(s, with_T0);
    double coarse = direct_energy(s, n_max - 4, with_T0, 1.0, nullptr).total;
    r.truncation_error = std::abs(r.direct.total - coarse) + 1e-9 * (1 + std::abs(r.direct.total));
    return r;
}

double voo_residual(const ScatteringSolution& sol) {
    const auto& r = sol.r;
    double worst = 0, scale = 0;
    std::vector<bool> edge(r.size(), false);
    for (size_t e : sol.seg_end) {
        for (size_t k = e > 1 ? e - 1 : 0; k <= e + 1 && k < r.size(); ++k) edge[k] = true;
    }
    for (size_t i = 1; i + 1 < r.size(); ++i) {
        if (edge[i] || r[i] > sol.R_V) continue;
        double upp = (sol.du[i + 1] - sol.du[i - 1]) / (r[i + 1] - r[i - 1]);
        double rhs = 0.5 * sol.V(r[i]) * sol.u[i];
        worst = std::max(worst, std::abs(upp - rhs));
        scale = std::max(scale, std::abs(rhs));
    }
    return scale > 0 ? worst / scale : worst;
}

}  // namespace qmf
