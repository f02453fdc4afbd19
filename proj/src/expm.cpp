#include "qmf/expm.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace qmf {

namespace {

double one_norm(const SpMat& G) {
    // row sums of |G|; equals the column-sum norm for skew-Hermitian G
    double m = 0;
    for (int k = 0; k < G.outerSize(); ++k) {
        double s = 0;
        for (SpMat::InnerIterator it(G, k); it; ++it) s += std::abs(it.value());
        m = std::max(m, s);
    }
    return m;
}

}  // namespace

CVec exp_skew_apply(const SpMat& G, const CVec& v, double t) {
    if (G.rows() != v.size() || G.cols() != v.size()) throw Error(ErrorKind::shape, "generator and vector sizes differ");
    const double nrm = one_norm(G) * std::abs(t);
    const int steps = std::max(1, static_cast<int>(std::ceil(nrm)));
    const double tau = t / steps;
    const double v_norm = v.norm();
    CVec x = v;
    for (int s = 0; s < steps; ++s) {
        CVec term = x;
        CVec acc = x;
        for (int k = 1; k <= 60; ++k) {
            term = (G * term) * (tau / k);
            acc += term;
            if (term.norm() <= 1e-17 * (acc.norm() + 1e-300)) break;
        }
        double an = acc.norm();
        x = an > 0 ? CVec(acc * (v_norm / an)) : acc;
    }
    return x;
}

CVec krylov_expm(const LinearOp& H, const CVec& v, double t, int m, double tol, KrylovStats* stats) {
    const long n = v.size();
    const double beta0 = v.norm();
    if (beta0 == 0.0 || t == 0.0) return v;
    CVec w = v;
    double remaining = t;
    double tau = t;
    KrylovStats local;
    m = static_cast<int>(std::min<long>(m, n));
    while (std::abs(remaining) > 1e-15 * std::abs(t)) {
        if (std::abs(tau) > std::abs(remaining)) tau = remaining;
        // Lanczos basis
        CMat Q(n, m + 1);
        Vec alpha = Vec::Zero(m), beta = Vec::Zero(m);
        double wn = w.norm();
        Q.col(0) = w / wn;
        int k_used = m;
        double beta_last = 0.0;
        for (int j = 0; j < m; ++j) {
            CVec z = H(Q.col(j));
            alpha[j] = Q.col(j).dot(z).real();
            for (int i = 0; i <= j; ++i) z -= Q.col(i) * Q.col(i).dot(z);
            for (int i = 0; i <= j; ++i) z -= Q.col(i) * Q.col(i).dot(z);
            double b = z.norm();
            if (j + 1 < m) beta[j] = b;
            beta_last = b;
            if (b < 1e-13 * std::max(1.0, std::abs(alpha[j]))) {
                k_used = j + 1;
                beta_last = 0.0;
                break;
            }
            Q.col(j + 1) = z / b;
        }
        Mat T = Mat::Zero(k_used, k_used);
        for (int j = 0; j < k_used; ++j) {
            T(j, j) = alpha[j];
            if (j + 1 < k_used) T(j, j + 1) = T(j + 1, j) = beta[j];
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(T);
        for (;;) {
            CVec coeff(k_used);
            for (int j = 0; j < k_used; ++j) {
                cplx s = 0;
                for (int l = 0; l < k_used; ++l)
                    s += es.eigenvectors()(j, l) * std::exp(-I * tau * es.eigenvalues()[l]) * es.eigenvectors()(0, l);
                coeff[j] = s;
            }
            double err = beta_last * std::abs(coeff[k_used - 1]) * wn;
            if (err <= tol * beta0 || std::abs(tau) < 1e-10 * std::abs(t)) {
                w = Q.leftCols(k_used) * coeff * wn;
                remaining -= tau;
                local.substeps++;
                local.max_error = std::max(local.max_error, err);
                if (err < 0.01 * tol * beta0) tau *= 1.5;
                break;
            }
            tau *= 0.5;
            local.fallbacks++;
        }
    }
    if (stats) {
        stats->substeps += local.substeps;
        stats->fallbacks += local.fallbacks;
        stats->max_error = std::max(stats->max_error, local.max_error);
    }
    return w;
}

GroundState lanczos_ground_state(const LinearOp& H, const CVec& v0, int m, double tol, int max_restarts) {
    const long n = v0.size();
    if (v0.norm() == 0.0) throw Error(ErrorKind::contract, "zero start vector");
    m = static_cast<int>(std::min<long>(m, n));
    GroundState gs;
    CVec x = v0 / v0.norm();
    for (int r = 0; r < max_restarts; ++r) {
        CMat Q(n, m);
        Vec alpha = Vec::Zero(m), beta = Vec::Zero(m);
        Q.col(0) = x;
        int k_used = m;
        for (int j = 0; j < m; ++j) {
            CVec z = H(Q.col(j));
            alpha[j] = Q.col(j).dot(z).real();
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i <= j; ++i) z -= Q.col(i) * Q.col(i).dot(z);
            double b = z.norm();
            if (j + 1 == m) break;
            if (b < 1e-13 * std::max(1.0, std::abs(alpha[j]))) {
                k_used = j + 1;
                break;
            }
            beta[j] = b;
            Q.col(j + 1) = z / b;
        }
        Mat T = Mat::Zero(k_used, k_used);
        for (int j = 0; j < k_used; ++j) {
            T(j, j) = alpha[j];
            if (j + 1 < k_used) T(j, j + 1) = T(j + 1, j) = beta[j];
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(T);
        x = Q.leftCols(k_used) * es.eigenvectors().col(0).cast<cplx>();
        x /= x.norm();
        CVec hx = H(x);
        gs.energy = x.dot(hx).real();
        gs.residual = (hx - gs.energy * x).norm();
        gs.vector = x;
        if (gs.residual < tol) return gs;
    }
    throw Error(ErrorKind::numerical, "Lanczos ground state did not converge", gs.residual);
}

CMat dense_expm(const CMat& A) { return A.exp(); }

}  // namespace qmf
