#include "qmf/bbgky.hpp"

#include <cmath>

#include "qmf/manybody.hpp"

namespace qmf {

namespace {

long ipow(long b, int e) {
    long r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

// coordinate of slot j in a k-tuple index
inline long digit(long X, int j, int k, long P) { return (X / ipow(P, k - 1 - j)) % P; }

}  // namespace

CMat collision_apply(const CMat& g, const Mat& Vpair, int k) {
    if (k < 1) throw Error(ErrorKind::contract, "k must be positive");
    const long P = Vpair.rows();
    if (g.rows() != ipow(P, k + 1) || g.cols() != g.rows()) throw Error(ErrorKind::shape, "gamma is not (k+1)-particle");
    const long D = ipow(P, k);
    CMat out = CMat::Zero(D, D);
    std::vector<long> xs(static_cast<size_t>(k)), ys(static_cast<size_t>(k));
    for (long X = 0; X < D; ++X) {
        for (int j = 0; j < k; ++j) xs[static_cast<size_t>(j)] = digit(X, j, k, P);
        for (long Y = 0; Y < D; ++Y) {
            for (int j = 0; j < k; ++j) ys[static_cast<size_t>(j)] = digit(Y, j, k, P);
            cplx s = 0;
            for (long z = 0; z < P; ++z) {
                double w = 0;
                for (int j = 0; j < k; ++j) w += Vpair(xs[static_cast<size_t>(j)], z) - Vpair(ys[static_cast<size_t>(j)], z);
                if (w != 0.0) s += w * g(X * P + z, Y * P + z);
            }
            out(X, Y) = s;
        }
    }
    return out;
}

double collision_trace_bound_check(const CMat& g, const Mat& Vpair, int k) {
    double vinf = Vpair.cwiseAbs().maxCoeff();
    double gtr = trace_norm_general(g);
    if (vinf == 0.0 || gtr == 0.0) return 0.0;
    return trace_norm_general(collision_apply(g, Vpair, k)) / (2.0 * k * vinf * gtr);
}

CMat product_density(const CVec& c, int k) {
    CVec v = c;
    for (int i = 1; i < k; ++i) {
        CVec n(v.size() * c.size());
        for (long a = 0; a < v.size(); ++a) n.segment(a * c.size(), c.size()) = v[a] * c;
        v.swap(n);
    }
    return v * v.adjoint();
}

CMat slot_operator(const CMat& T, int j, int k) {
    const long P = T.rows();
    CMat out = CMat::Identity(1, 1);
    for (int s = 0; s < k; ++s) {
        const CMat& f = s == j ? T : CMat(CMat::Identity(P, P));
        CMat n = CMat::Zero(out.rows() * P, out.cols() * P);
        for (long a = 0; a < out.rows(); ++a)
            for (long b = 0; b < out.cols(); ++b)
                if (out(a, b) != cplx(0)) n.block(a * P, b * P, P, P) = out(a, b) * f;
        out.swap(n);
    }
    return out;
}

CMat partial_trace_last(const CMat& g, long P) {
    const long D = g.rows() / P;
    CMat out = CMat::Zero(D, D);
    for (long X = 0; X < D; ++X)
        for (long Y = 0; Y < D; ++Y)
            for (long z = 0; z < P; ++z) out(X, Y) += g(X * P + z, Y * P + z);
    return out;
}

namespace {

// T_j g, with T acting on slot j of the row index
CMat slot_left(const CMat& T, int j, int k, const CMat& g) {
    const long P = T.rows();
    const long stride = ipow(P, k - 1 - j);
    CMat out = CMat::Zero(g.rows(), g.cols());
    for (long X = 0; X < g.rows(); ++X) {
        long xj = (X / stride) % P;
        long base = X - xj * stride;
        for (long a = 0; a < P; ++a) {
            cplx t = T(xj, a);
            if (t != cplx(0)) out.row(X) += t * g.row(base + a * stride);
        }
    }
    return out;
}

CMat level_rhs(const CMat& g, const CMat* next, int k, int N, const CMat& T, const Mat& Vpair, bool infinite) {
    const long P = T.rows();
    if (g.rows() != ipow(P, k)) throw Error(ErrorKind::shape, "level size does not match the grid");
    CMat r = CMat::Zero(g.rows(), g.cols());
    for (int j = 0; j < k; ++j) {
        CMat tg = slot_left(T, j, k, g);
        r += tg - tg.adjoint();  // [T_j, g] for Hermitian g
    }
    if (!infinite && k >= 2) {
        const long D = g.rows();
        for (long X = 0; X < D; ++X)
            for (long Y = 0; Y < D; ++Y) {
                double w = 0;
                for (int i = 0; i < k; ++i)
                    for (int j = i + 1; j < k; ++j)
                        w += Vpair(digit(X, i, k, P), digit(X, j, k, P)) - Vpair(digit(Y, i, k, P), digit(Y, j, k, P));
                r(X, Y) += w * g(X, Y) / static_cast<double>(N);
            }
    }
    double factor = infinite ? 1.0 : static_cast<double>(N - k) / N;
    if (factor != 0.0 && next) r += factor * collision_apply(*next, Vpair, k);
    return r;
}

}  // namespace

std::vector<CMat> hierarchy_rhs(const HierarchyState& s, const CMat& T, const Mat& Vpair, bool infinite) {
    const long P = T.rows();
    const int K = s.k_max();
    if (K < 1) throw Error(ErrorKind::contract, "empty hierarchy");
    CMat closure;
    if (s.closure == Closure::factorized) {
        // extend gamma^(1) by tensor powers through its leading eigenvector
        Eigen::SelfAdjointEigenSolver<CMat> es(s.gamma[0]);
        CVec c = es.eigenvectors().col(P - 1) * std::sqrt(std::max(0.0, es.eigenvalues()[P - 1]));
        closure = product_density(c, K + 1);
    }
    std::vector<CMat> out;
    for (int k = 1; k <= K; ++k) {
        const CMat* next = k < K ? &s.gamma[static_cast<size_t>(k)] : (closure.size() ? &closure : nullptr);
        out.push_back(level_rhs(s.gamma[static_cast<size_t>(k - 1)], next, k, s.N, T, Vpair, infinite));
    }
    return out;
}

HierarchyState hierarchy_from_state(const FockVector& psi, int k_max, Closure closure) {
    const auto& b = *psi.basis;
    if (b.n_min() != b.n_max()) throw Error(ErrorKind::contract, "needs an N-particle sector");
    HierarchyState s;
    s.N = b.n_max();
    s.closure = closure;
    if (k_max > s.N) throw Error(ErrorKind::contract, "k_max exceeds N");
    if (k_max > 3) throw Error(ErrorKind::refused, "hierarchies are capped at k = 3");
    for (int k = 1; k <= k_max; ++k) {
        double binom = std::exp(std::lgamma(s.N + 1.0) - std::lgamma(k + 1.0) - std::lgamma(s.N - k + 1.0));
        s.gamma.push_back(reduced_density_k(psi, k) / binom);
    }
    return s;
}

ConsistencyReport exact_consistency_check(const FockVector& before, const FockVector& mid, const FockVector& after,
                                          double dt, int k, const CMat& T, const Mat& Vpair) {
    const int N = mid.basis->n_max();
    const int top = std::min(k + 1, N);
    HierarchyState sm = hierarchy_from_state(mid, top);
    HierarchyState sb = hierarchy_from_state(before, k);
    HierarchyState sa = hierarchy_from_state(after, k);
    CMat deriv = I * (sa.gamma[static_cast<size_t>(k - 1)] - sb.gamma[static_cast<size_t>(k - 1)]) / (2 * dt);
    std::vector<CMat> rhs = hierarchy_rhs(sm, T, Vpair);
    ConsistencyReport r;
    r.residual = (deriv - rhs[static_cast<size_t>(k - 1)]).norm();
    r.derivative_norm = deriv.norm();
    return r;
}

double infinite_hierarchy_residual(const CVec& c, const CVec& i_cdot, int k, const CMat& T, const Mat& Vpair) {
    const long P = c.size();
    if (i_cdot.size() != P || T.rows() != P || Vpair.rows() != P) throw Error(ErrorKind::shape, "sizes differ");
    CMat p = c * c.adjoint();
    CMat d = i_cdot * c.adjoint() - c * i_cdot.adjoint();
    // i d/dt p^{(x)k} = sum_j p (x) .. d .. (x) p
    CMat deriv = CMat::Zero(ipow(P, k), ipow(P, k));
    for (int j = 0; j < k; ++j) {
        CMat t = CMat::Identity(1, 1);
        for (int s = 0; s < k; ++s) {
            const CMat& f = s == j ? d : p;
            CMat n(t.rows() * P, t.cols() * P);
            for (long a = 0; a < t.rows(); ++a)
                for (long b = 0; b < t.cols(); ++b) n.block(a * P, b * P, P, P) = t(a, b) * f;
            t.swap(n);
        }
        deriv += t;
    }
    CMat next = product_density(c, k + 1);
    return (deriv - level_rhs(product_density(c, k), &next, k, 1, T, Vpair, true)).norm();
}

}  // namespace qmf
