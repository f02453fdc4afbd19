#include "qmf/manybody.hpp"

#include <cmath>

namespace qmf {

double gp_resolution_limit(const Grid& g, const PotentialSpec& V) { return V.range / g.h(); }

void require_gp_resolved(const Grid& g, const PotentialSpec& V, double N) {
    double lim = gp_resolution_limit(g, V);
    if (N > lim)
        throw Error(ErrorKind::refused,
                    "N^2 V(N x) is not resolved by the grid: need N <= range/h = " + std::to_string(lim), lim);
}

ModeModel assemble_modes(const HamiltonianSpec& H) {
    const Grid& g = H.grid;
    if (H.eps <= 0 || H.N <= 0) throw Error(ErrorKind::contract, "eps and N must be positive");
    ModeModel m;
    m.T = kinetic_matrix(g, H.eps);
    if (H.v_ext.size() > 0) {
        if (H.v_ext.size() != g.size()) throw Error(ErrorKind::shape, "external potential length");
        m.T.diagonal() += H.v_ext.cast<cplx>();
    }
    if (H.coupling == Coupling::mean_field) {
        m.W = pair_matrix(g, H.V) / H.N;
    } else {
        require_gp_resolved(g, H.V, H.N);
        m.W = pair_matrix(g, H.V.scaled(H.N * H.N, H.N));
    }
    double d = hermiticity_defect(m.T);
    if (d > 1e-12) throw Error(ErrorKind::numerical, "assembled one-body operator is not Hermitian", d);
    return m;
}

SpMat fock_hamiltonian(const FockBasis& b, const ModeModel& m) {
    if (m.modes() != b.modes()) throw Error(ErrorKind::shape, "model and basis mode counts differ");
    SpMat H = second_quantize(b, m.T);
    if (m.W.size() > 0) H += pair_interaction(b, m.W);
    return H;
}

FockVector product_state(BasisPtr b, const CVec& c, int N) {
    if (b->statistics() != Statistics::boson) throw Error(ErrorKind::contract, "product states are bosonic");
    if (c.size() != b->modes()) throw Error(ErrorKind::shape, "coefficient length");
    if (N < b->n_min() || N > b->n_max()) throw Error(ErrorKind::contract, "N outside the basis");
    CVec a = CVec::Zero(b->size());
    for (long i = 0; i < b->size(); ++i) {
        if (b->total(i) != N) continue;
        const Occupation& n = b->state(i);
        double lf = std::lgamma(N + 1.0);
        cplx p = 1.0;
        for (int j = 0; j < b->modes(); ++j) {
            lf -= std::lgamma(n[j] + 1.0);
            if (n[j] > 0) p *= std::pow(c[j], static_cast<int>(n[j]));
        }
        a[i] = std::exp(0.5 * lf) * p;
    }
    return FockVector(std::move(b), a);
}

FockVector slater_state(BasisPtr b, const CMat& F) {
    if (b->statistics() != Statistics::fermion) throw Error(ErrorKind::contract, "Slater states are fermionic");
    if (F.rows() != b->modes()) throw Error(ErrorKind::shape, "orbital length");
    const int N = static_cast<int>(F.cols());
    CVec a = CVec::Zero(b->size());
    for (long i = 0; i < b->size(); ++i) {
        if (b->total(i) != N) continue;
        const Occupation& n = b->state(i);
        CMat sub(N, N);
        int r = 0;
        for (int j = 0; j < b->modes(); ++j)
            if (n[j]) sub.row(r++) = F.row(j);
        a[i] = N == 0 ? cplx(1.0) : sub.determinant();
    }
    return FockVector(std::move(b), a);
}

FockVector propagate(const FockVector& psi, const SpMat& H, double t, double dt, double eps, int krylov_dim,
                     PropagationReport* report) {
    if (H.rows() != psi.amp.size()) throw Error(ErrorKind::shape, "Hamiltonian and state sizes differ");
    if (dt <= 0 || eps <= 0) throw Error(ErrorKind::contract, "dt and eps must be positive");
    LinearOp op = [&H](const CVec& v) { return CVec(H * v); };
    const double n0 = psi.norm();
    const double e0 = psi.amp.dot(H * psi.amp).real() / (n0 * n0);
    CVec v = psi.amp;
    KrylovStats st;
    const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t) / dt - 1e-9)));
    const double tau = t / steps / eps;
    for (int s = 0; s < steps; ++s) v = krylov_expm(op, v, tau, krylov_dim, 1e-13, &st);
    FockVector out(psi.basis, v);
    if (report) {
        double n1 = v.norm();
        double e1 = v.dot(H * v).real() / (n1 * n1);
        report->norm_drift = std::abs(n1 - n0);
        report->energy_drift = std::abs(e1 - e0) / std::max(1.0, std::abs(e0));
        report->krylov = st;
    }
    return out;
}

namespace {

bool is_sector(const FockBasis& b) { return b.n_min() == b.n_max(); }


}  // namespace

CMat reduced_density_k(const FockVector& psi, int k) {
    const int M = psi.basis->modes();
    if (k < 1) throw Error(ErrorKind::contract, "k must be positive");
    if (is_sector(*psi.basis) && k > psi.basis->n_max()) throw Error(ErrorKind::contract, "k exceeds N");
    if (k > 2 && M > 32) throw Error(ErrorKind::refused, "reduced densities with k > 2 need M <= 32");
    // columns a_xk .. a_x1 psi for every tuple, built one level at a time
    std::vector<CVec> cols{psi.amp};
    BasisPtr cur = psi.basis;
    for (int level = 0; level < k; ++level) {
        BasisPtr next = lowered_sector(cur);
        std::vector<SpMat> ops;
        for (int j = 0; j < M; ++j) ops.push_back(annihilator_between(*cur, *next, j));
        std::vector<CVec> nc;
        nc.reserve(cols.size() * static_cast<size_t>(M));
        for (const auto& c : cols)
            for (int j = 0; j < M; ++j) nc.push_back(ops[static_cast<size_t>(j)] * c);
        cols.swap(nc);
        cur = next;
    }
    const long D = static_cast<long>(cols.size());
    CMat A(cur->size(), D);
    for (long i = 0; i < D; ++i) A.col(i) = cols[static_cast<size_t>(i)];
    double kf = std::tgamma(k + 1.0);
    CMat g = (A.adjoint() * A).transpose() / kf;
    return 0.5 * (g + g.adjoint());
}

double sobolev_norm(const Grid& g, const CMat& gamma, int k) {
    const long n = g.size();
    long dim = 1;
    for (int i = 0; i < k; ++i) dim *= n;
    if (gamma.rows() != dim || gamma.cols() != dim) throw Error(ErrorKind::shape, "gamma size is not M^k");
    CMat S = spectral_function_matrix(g, [](double k2) { return std::sqrt(1.0 + k2); });
    CMat Sk = S;
    for (int i = 1; i < k; ++i) {
        CMat next(Sk.rows() * n, Sk.cols() * n);
        for (long a = 0; a < Sk.rows(); ++a)
            for (long b = 0; b < Sk.cols(); ++b) next.block(a * n, b * n, n, n) = Sk(a, b) * S;
        Sk.swap(next);
    }
    CMat A = Sk * gamma * Sk;
    return trace_norm(0.5 * (A + A.adjoint()));
}

// ---------------------------------------------------------------- first-quantised

CVec apply_axis(const Grid& g, int N, const CVec& psi, int particle, int axis, const CMat& op1d) {
    const long P = g.size();
    const int M = g.M();
    long total = 1;
    for (int i = 0; i < N; ++i) total *= P;
    if (psi.size() != total) throw Error(ErrorKind::shape, "tensor length is not (M^d)^N");
    // stride of the chosen coordinate in the flattened index
    long stride = 1;
    for (int i = particle + 1; i < N; ++i) stride *= P;
    long axis_stride = 1;
    for (int a = axis + 1; a < g.d(); ++a) axis_stride *= M;
    stride *= axis_stride;
    CVec out = CVec::Zero(total);
    CVec line(M), res(M);
    const long block = stride * M;
    for (long base = 0; base < total; base += block) {
        for (long off = 0; off < stride; ++off) {
            for (int m = 0; m < M; ++m) line[m] = psi[base + off + m * stride];
            res.noalias() = op1d * line;
            for (int m = 0; m < M; ++m) out[base + off + m * stride] = res[m];
        }
    }
    return out;
}

namespace {

Grid axis_grid(const Grid& g) { return Grid(1, g.L(), g.M()); }

// multi-index of each particle for a flattened tensor index
void split_index(long idx, long P, int N, std::vector<long>& out) {
    for (int i = N - 1; i >= 0; --i) {
        out[static_cast<size_t>(i)] = idx % P;
        idx /= P;
    }
}

}  // namespace

CVec first_quantized_apply(const Grid& g, int N, const CVec& psi, const Mat& W, const Vec& v_ext) {
    const long P = g.size();
    CMat K1 = kinetic_matrix(axis_grid(g));
    CVec out = CVec::Zero(psi.size());
    for (int p = 0; p < N; ++p)
        for (int a = 0; a < g.d(); ++a) out += apply_axis(g, N, psi, p, a, K1);
    std::vector<long> ix(static_cast<size_t>(N));
    for (long i = 0; i < psi.size(); ++i) {
        split_index(i, P, N, ix);
        double pot = 0;
        for (int p = 0; p < N; ++p) {
            if (v_ext.size() > 0) pot += v_ext[ix[p]];
            for (int q = p + 1; q < N; ++q) pot += W(ix[p], ix[q]);
        }
        out[i] += pot * psi[i];
    }
    return out;
}

GroundState first_quantized_ground_state(const Grid& g, int N, const Mat& W, double tol) {
    long total = 1;
    for (int i = 0; i < N; ++i) total *= g.size();
    CVec v0 = CVec::Constant(total, 1.0);
    LinearOp H = [&](const CVec& v) { return first_quantized_apply(g, N, v, W); };
    return lanczos_ground_state(H, v0, 40, tol, 400);
}

GpEstimateReport gp_energy_estimate_check(const Grid& g, int N, const CVec& psi, const PotentialSpec& V,
                                          const ScatteringSolution& sol) {
    if (g.d() != 3) throw Error(ErrorKind::refused, "the energy estimate check is three-dimensional");
    if (N < 2) throw Error(ErrorKind::contract, "need at least two particles");
    if (V.is_hard_sphere()) throw Error(ErrorKind::domain, "hard sphere has f = 0 inside the core");
    if (V.kind != PotentialSpec::Kind::zero) require_gp_resolved(g, V, N);
    const long P = g.size();
    Mat W = pair_matrix(g, V.scaled(double(N) * N, N));
    CVec Hpsi = first_quantized_apply(g, N, psi, W);
    GpEstimateReport r;
    r.lhs = Hpsi.squaredNorm();
    // psi / f(N(x1 - x2))
    CVec q = psi;
    std::vector<long> ix(static_cast<size_t>(N));
    for (long i = 0; i < psi.size(); ++i) {
        split_index(i, P, N, ix);
        double f = sol.f_at(N * g.distance(ix[0], ix[1]));
        q[i] /= f;
    }
    CMat D = gradient_matrix(axis_grid(g), 0);
    auto mixed = [&](const CVec& u) {
        double s = 0;
        for (int a = 0; a < 3; ++a) {
            CVec da = apply_axis(g, N, u, 0, a, D);
            for (int b = 0; b < 3; ++b) s += apply_axis(g, N, da, 1, b, D).squaredNorm();
        }
        return s;
    };
    const double pref = 0.5 * N * N;
    r.rhs = pref * mixed(q);
    r.undivided = pref * mixed(psi);
    r.ratio = r.rhs > 0 ? r.lhs / r.rhs : INFINITY;
    return r;
}

}  // namespace qmf
