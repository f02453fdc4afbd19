#include "qmf/fock.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "qmf/expm.hpp"
#include "qmf/numerics.hpp"

namespace qmf {

namespace {

std::string key_of(const Occupation& n) { return std::string(n.begin(), n.end()); }

using Triplets = std::vector<Eigen::Triplet<cplx>>;

SpMat from_triplets(long rows, long cols, const Triplets& t) {
    SpMat m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

}  // namespace

// ---------------------------------------------------------------- basis

void FockBasis::finalize() {
    std::sort(states_.begin(), states_.end());
    totals_.resize(states_.size());
    index_.reserve(states_.size() * 2);
    for (size_t i = 0; i < states_.size(); ++i) {
        int s = 0;
        for (auto v : states_[i]) s += v;
        totals_[i] = s;
        index_[key_of(states_[i])] = static_cast<long>(i);
    }
}

std::shared_ptr<const FockBasis> FockBasis::bosons(int M, int n_max) {
    if (M < 1 || n_max < 0 || n_max > 255) throw Error(ErrorKind::contract, "invalid bosonic basis parameters");
    auto b = std::shared_ptr<FockBasis>(new FockBasis());
    b->stats_ = Statistics::boson;
    b->M_ = M;
    b->n_min_ = 0;
    b->n_max_ = n_max;
    Occupation n(static_cast<size_t>(M), 0);
    std::function<void(int, int)> rec = [&](int j, int left) {
        if (j == M) {
            b->states_.push_back(n);
            return;
        }
        for (int k = 0; k <= left; ++k) {
            n[static_cast<size_t>(j)] = static_cast<unsigned char>(k);
            rec(j + 1, left - k);
        }
        n[static_cast<size_t>(j)] = 0;
    };
    rec(0, n_max);
    b->finalize();
    return b;
}

std::shared_ptr<const FockBasis> FockBasis::boson_sector(int M, int N) {
    if (M < 1 || N < 0 || N > 255) throw Error(ErrorKind::contract, "invalid bosonic sector parameters");
    auto b = std::shared_ptr<FockBasis>(new FockBasis());
    b->stats_ = Statistics::boson;
    b->M_ = M;
    b->n_min_ = N;
    b->n_max_ = N;
    Occupation n(static_cast<size_t>(M), 0);
    std::function<void(int, int)> rec = [&](int j, int left) {
        if (j == M - 1) {
            n[static_cast<size_t>(j)] = static_cast<unsigned char>(left);
            b->states_.push_back(n);
            n[static_cast<size_t>(j)] = 0;
            return;
        }
        for (int k = 0; k <= left; ++k) {
            n[static_cast<size_t>(j)] = static_cast<unsigned char>(k);
            rec(j + 1, left - k);
        }
        n[static_cast<size_t>(j)] = 0;
    };
    rec(0, N);
    b->finalize();
    return b;
}

std::shared_ptr<const FockBasis> FockBasis::fermions(int M) {
    if (M < 1 || M > 20) throw Error(ErrorKind::contract, "fermionic mode count out of range");
    auto b = std::shared_ptr<FockBasis>(new FockBasis());
    b->stats_ = Statistics::fermion;
    b->M_ = M;
    b->n_min_ = 0;
    b->n_max_ = M;
    for (long mask = 0; mask < (1L << M); ++mask) {
        Occupation n(static_cast<size_t>(M), 0);
        for (int j = 0; j < M; ++j) n[static_cast<size_t>(j)] = (mask >> (M - 1 - j)) & 1;
        b->states_.push_back(n);
    }
    b->finalize();
    return b;
}

std::shared_ptr<const FockBasis> FockBasis::fermion_sector(int M, int N) {
    if (M < 1 || M > 30 || N < 0 || N > M) throw Error(ErrorKind::contract, "invalid fermionic sector");
    auto b = std::shared_ptr<FockBasis>(new FockBasis());
    b->stats_ = Statistics::fermion;
    b->M_ = M;
    b->n_min_ = N;
    b->n_max_ = N;
    Occupation n(static_cast<size_t>(M), 0);
    std::function<void(int, int)> rec = [&](int j, int left) {
        if (left == 0) {
            b->states_.push_back(n);
            return;
        }
        if (M - j < left) return;
        n[static_cast<size_t>(j)] = 1;
        rec(j + 1, left - 1);
        n[static_cast<size_t>(j)] = 0;
        rec(j + 1, left);
    };
    rec(0, N);
    b->finalize();
    return b;
}

long FockBasis::index(const Occupation& n) const {
    auto it = index_.find(key_of(n));
    return it == index_.end() ? -1 : it->second;
}

std::string FockBasis::label(long i) const {
    std::string s;
    const auto& n = state(i);
    for (size_t j = 0; j < n.size(); ++j) {
        if (j) s += '.';
        s += std::to_string(static_cast<int>(n[j]));
    }
    return s;
}

double apply_ladder_string(Statistics s, const std::vector<Ladder>& ops, Occupation& n) {
    double c = 1.0;
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
        auto& nj = n[static_cast<size_t>(it->mode)];
        if (s == Statistics::boson) {
            if (it->dagger) {
                if (nj == 255) return 0.0;
                ++nj;
                c *= std::sqrt(static_cast<double>(nj));
            } else {
                if (nj == 0) return 0.0;
                c *= std::sqrt(static_cast<double>(nj));
                --nj;
            }
        } else {
            if (it->dagger == (nj == 1)) return 0.0;
            int below = 0;
            for (int i = 0; i < it->mode; ++i) below += n[static_cast<size_t>(i)];
            if (below % 2) c = -c;
            nj = it->dagger ? 1 : 0;
        }
    }
    return c;
}

SpMat annihilator_between(const FockBasis& from, const FockBasis& to, int j) {
    if (from.modes() != to.modes() || from.statistics() != to.statistics())
        throw Error(ErrorKind::shape, "incompatible bases");
    if (j < 0 || j >= from.modes()) throw Error(ErrorKind::shape, "mode index out of range");
    Triplets t;
    for (long i = 0; i < from.size(); ++i) {
        Occupation n = from.state(i);
        double c = apply_ladder_string(from.statistics(), {{j, false}}, n);
        if (c == 0.0) continue;
        long k = to.index(n);
        if (k >= 0) t.emplace_back(k, i, c);
    }
    return from_triplets(to.size(), from.size(), t);
}

const SpMat& FockBasis::annihilator(int j) const {
    if (j < 0 || j >= M_) throw Error(ErrorKind::shape, "mode index out of range");
    std::call_once(ladder_once_, [this] {
        ladder_.resize(static_cast<size_t>(M_));
        for (int m = 0; m < M_; ++m) ladder_[static_cast<size_t>(m)] = annihilator_between(*this, *this, m);
    });
    return ladder_[static_cast<size_t>(j)];
}

// ---------------------------------------------------------------- vectors

FockVector::FockVector(BasisPtr b, CVec a) : basis(std::move(b)), amp(std::move(a)) {
    if (amp.size() != basis->size()) throw Error(ErrorKind::shape, "amplitude length does not match basis");
}

FockVector FockVector::vacuum(BasisPtr b) {
    Occupation n(static_cast<size_t>(b->modes()), 0);
    return basis_state(std::move(b), n);
}

FockVector FockVector::basis_state(BasisPtr b, const Occupation& n) {
    long i = b->index(n);
    if (i < 0) throw Error(ErrorKind::contract, "occupation not in basis");
    CVec a = CVec::Zero(b->size());
    a[i] = 1.0;
    return FockVector(std::move(b), a);
}

double FockVector::number_expectation() const {
    double s = 0;
    for (long i = 0; i < amp.size(); ++i) s += std::norm(amp[i]) * basis->total(i);
    return s;
}

double FockVector::boundary_mass() const {
    if (basis->statistics() != Statistics::boson || basis->n_min() == basis->n_max()) return 0.0;
    double s = 0;
    for (long i = 0; i < amp.size(); ++i)
        if (basis->total(i) == basis->n_max()) s += std::norm(amp[i]);
    return s;
}

Vec FockVector::number_distribution() const {
    Vec p = Vec::Zero(basis->n_max() + 1);
    for (long i = 0; i < amp.size(); ++i) p[basis->total(i)] += std::norm(amp[i]);
    return p;
}

cplx FockVector::dot(const FockVector& o) const {
    if (basis.get() != o.basis.get() && basis->size() != o.basis->size())
        throw Error(ErrorKind::shape, "vectors live on different bases");
    return amp.dot(o.amp);
}

// ---------------------------------------------------------------- ladder operators

SpMat annihilation_operator(const FockBasis& b, const CVec& f) {
    if (f.size() != b.modes()) throw Error(ErrorKind::shape, "mode vector length does not match basis");
    SpMat A(b.size(), b.size());
    for (int j = 0; j < b.modes(); ++j)
        if (f[j] != cplx(0)) A += std::conj(f[j]) * b.annihilator(j);
    return A;
}

SpMat creation_operator(const FockBasis& b, const CVec& f) { return SpMat(annihilation_operator(b, f).adjoint()); }

FockVector annihilate(const CVec& f, const FockVector& psi) {
    return FockVector(psi.basis, annihilation_operator(*psi.basis, f) * psi.amp);
}

FockVector create(const CVec& f, const FockVector& psi) {
    return FockVector(psi.basis, creation_operator(*psi.basis, f) * psi.amp);
}

namespace {

double restricted_norm(const CMat& C, const FockBasis& b, int cap) {
    std::vector<long> keep;
    for (long i = 0; i < b.size(); ++i)
        if (b.total(i) <= cap) keep.push_back(i);
    CMat R(keep.size(), keep.size());
    for (size_t r = 0; r < keep.size(); ++r)
        for (size_t c = 0; c < keep.size(); ++c) R(r, c) = C(keep[r], keep[c]);
    return operator_norm(R);
}

}  // namespace

double ccr_residual(const CVec& f, const CVec& g, const FockBasis& b, int cap) {
    if (b.statistics() != Statistics::boson) throw Error(ErrorKind::contract, "CCR check needs a bosonic basis");
    SpMat A = annihilation_operator(b, f), Ad = creation_operator(b, g);
    CMat C = CMat(A * Ad) - CMat(Ad * A);
    C -= f.dot(g) * CMat::Identity(b.size(), b.size());
    return restricted_norm(C, b, cap);
}

double car_residual(const CVec& f, const CVec& g, const FockBasis& b) {
    if (b.statistics() != Statistics::fermion) throw Error(ErrorKind::contract, "CAR check needs a fermionic basis");
    SpMat A = annihilation_operator(b, f), Ad = creation_operator(b, g);
    CMat C = CMat(A * Ad) + CMat(Ad * A);
    C -= f.dot(g) * CMat::Identity(b.size(), b.size());
    return operator_norm(C);
}

// ---------------------------------------------------------------- second quantisation

SpMat second_quantize(const FockBasis& b, const CMat& J) {
    const int M = b.modes();
    if (J.rows() != M || J.cols() != M) throw Error(ErrorKind::shape, "one-body kernel does not match mode count");
    Triplets t;
    for (long i = 0; i < b.size(); ++i) {
        for (int p = 0; p < M; ++p)
            for (int q = 0; q < M; ++q) {
                if (J(p, q) == cplx(0)) continue;
                Occupation n = b.state(i);
                double c = apply_ladder_string(b.statistics(), {{p, true}, {q, false}}, n);
                if (c == 0.0) continue;
                long k = b.index(n);
                if (k >= 0) t.emplace_back(k, i, J(p, q) * c);
            }
    }
    return from_triplets(b.size(), b.size(), t);
}

SpMat pair_interaction(const FockBasis& b, const Mat& W) {
    const int M = b.modes();
    if (W.rows() != M || W.cols() != M) throw Error(ErrorKind::shape, "pair kernel does not match mode count");
    Triplets t;
    for (long i = 0; i < b.size(); ++i) {
        const auto& n = b.state(i);
        double e = 0;
        for (int j = 0; j < M; ++j) {
            double nj = n[static_cast<size_t>(j)];
            if (nj == 0) continue;
            e += 0.5 * W(j, j) * nj * (nj - 1);
            for (int k = 0; k < M; ++k)
                if (k != j) e += 0.5 * W(j, k) * nj * n[static_cast<size_t>(k)];
        }
        if (e != 0.0) t.emplace_back(i, i, e);
    }
    return from_triplets(b.size(), b.size(), t);
}

SpMat two_body_operator(const FockBasis& b, const std::vector<cplx>& v) {
    const int M = b.modes();
    if (static_cast<long>(v.size()) != static_cast<long>(M) * M * M * M)
        throw Error(ErrorKind::shape, "two-body tensor does not match mode count");
    Triplets t;
    for (long i = 0; i < b.size(); ++i)
        for (int a = 0; a < M; ++a)
            for (int bb = 0; bb < M; ++bb)
                for (int c = 0; c < M; ++c)
                    for (int d = 0; d < M; ++d) {
                        cplx coef = v[static_cast<size_t>(((a * M + bb) * M + c) * M + d)];
                        if (coef == cplx(0)) continue;
                        Occupation n = b.state(i);
                        double s = apply_ladder_string(b.statistics(), {{a, true}, {bb, true}, {c, false}, {d, false}}, n);
                        if (s == 0.0) continue;
                        long k = b.index(n);
                        if (k >= 0) t.emplace_back(k, i, 0.5 * coef * s);
                    }
    return from_triplets(b.size(), b.size(), t);
}

SpMat pair_creation(const FockBasis& b, const CMat& K) {
    const int M = b.modes();
    if (K.rows() != M || K.cols() != M) throw Error(ErrorKind::shape, "pair kernel does not match mode count");
    Triplets t;
    for (long i = 0; i < b.size(); ++i)
        for (int p = 0; p < M; ++p)
            for (int q = 0; q < M; ++q) {
                if (K(p, q) == cplx(0)) continue;
                Occupation n = b.state(i);
                double c = apply_ladder_string(b.statistics(), {{p, true}, {q, true}}, n);
                if (c == 0.0) continue;
                long k = b.index(n);
                if (k >= 0) t.emplace_back(k, i, K(p, q) * c);
            }
    return from_triplets(b.size(), b.size(), t);
}

FockVector apply_second_quantized(const CMat& J, const FockVector& psi) {
    const auto& b = *psi.basis;
    const int M = b.modes();
    if (J.rows() != M || J.cols() != M) throw Error(ErrorKind::shape, "one-body kernel does not match mode count");
    CVec out = CVec::Zero(b.size());
    std::vector<CVec> ax(static_cast<size_t>(M));
    for (int q = 0; q < M; ++q) ax[static_cast<size_t>(q)] = b.annihilator(q) * psi.amp;
    for (int p = 0; p < M; ++p) {
        CVec s = CVec::Zero(b.size());
        for (int q = 0; q < M; ++q)
            if (J(p, q) != cplx(0)) s += J(p, q) * ax[static_cast<size_t>(q)];
        out += b.annihilator(p).adjoint() * s;
    }
    return FockVector(psi.basis, out);
}

// ---------------------------------------------------------------- Weyl and Bogoliubov

namespace {

void check_leakage(const FockVector& v, double max_leakage, LeakageInfo* info, const char* what) {
    double m = v.boundary_mass();
    if (info) info->boundary_mass = m;
    if (m > max_leakage * std::max(1e-300, v.amp.squaredNorm()))
        throw Error(ErrorKind::truncation, std::string(what) + ": weight on the truncation boundary exceeds threshold", m);
}

}  // namespace

FockVector weyl_apply(const CVec& f, const FockVector& psi, double max_leakage, LeakageInfo* info) {
    const auto& b = *psi.basis;
    if (b.statistics() != Statistics::boson) throw Error(ErrorKind::contract, "Weyl operators act on bosonic spaces");
    SpMat G = creation_operator(b, f) - annihilation_operator(b, f);
    FockVector out(psi.basis, exp_skew_apply(G, psi.amp, 1.0));
    check_leakage(out, max_leakage, info, "weyl_apply");
    return out;
}

FockVector coherent_state(const CVec& f, BasisPtr b, double max_leakage) {
    return weyl_apply(f, FockVector::vacuum(std::move(b)), max_leakage);
}

FockVector bogoliubov_apply(const CMat& K, const FockVector& psi, double max_leakage, LeakageInfo* info) {
    const auto& b = *psi.basis;
    if (b.statistics() != Statistics::boson) throw Error(ErrorKind::contract, "Bogoliubov maps here act on bosonic spaces");
    if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, K.cwiseAbs().maxCoeff()))
        throw Error(ErrorKind::contract, "pair kernel must be symmetric");
    SpMat P = pair_creation(b, K);
    SpMat G = 0.5 * (P - SpMat(P.adjoint()));
    FockVector out(psi.basis, exp_skew_apply(G, psi.amp, 1.0));
    check_leakage(out, max_leakage, info, "bogoliubov_apply");
    return out;
}

CoshSinh cosh_sinh(const CMat& K) {
    Eigen::JacobiSVD<CMat> svd(K, Eigen::ComputeFullU);
    const CMat& U = svd.matrixU();
    Vec s = svd.singularValues();
    Vec c(s.size()), q(s.size());
    for (long i = 0; i < s.size(); ++i) {
        c[i] = std::cosh(s[i]);
        q[i] = s[i] > 1e-8 ? std::sinh(s[i]) / s[i] : 1.0 + s[i] * s[i] / 6.0;
    }
    CoshSinh r;
    r.ch = U * c.cast<cplx>().asDiagonal() * U.adjoint();
    r.sh = U * q.cast<cplx>().asDiagonal() * U.adjoint() * K;
    return r;
}

// ---------------------------------------------------------------- fermions

CMat fermion_gamma_unitary(const FockBasis& b, const CMat& U) {
    if (b.statistics() != Statistics::fermion) throw Error(ErrorKind::contract, "needs a fermionic basis");
    const int M = b.modes();
    if (U.rows() != M || U.cols() != M) throw Error(ErrorKind::shape, "unitary does not match mode count");
    CMat G = CMat::Zero(b.size(), b.size());
    std::vector<std::vector<int>> occ(static_cast<size_t>(b.size()));
    for (long i = 0; i < b.size(); ++i)
        for (int j = 0; j < M; ++j)
            if (b.state(i)[static_cast<size_t>(j)]) occ[static_cast<size_t>(i)].push_back(j);
    for (long c = 0; c < b.size(); ++c)
        for (long r = 0; r < b.size(); ++r) {
            const auto& S = occ[static_cast<size_t>(c)];
            const auto& T = occ[static_cast<size_t>(r)];
            if (S.size() != T.size()) continue;
            if (S.empty()) {
                G(r, c) = 1.0;
                continue;
            }
            CMat sub(T.size(), S.size());
            for (size_t a = 0; a < T.size(); ++a)
                for (size_t d = 0; d < S.size(); ++d) sub(a, d) = U(T[a], S[d]);
            G(r, c) = sub.determinant();
        }
    return G;
}

CMat particle_hole_operator(const FockBasis& b, const CMat& F) {
    if (b.statistics() != Statistics::fermion || b.n_min() != 0 || b.n_max() != b.modes())
        throw Error(ErrorKind::contract, "particle-hole map needs the full fermionic Fock space");
    const int M = b.modes();
    const int N = static_cast<int>(F.cols());
    if (F.rows() != M) throw Error(ErrorKind::shape, "orbitals do not match mode count");
    if (N > 0) {
        double d = (F.adjoint() * F - CMat::Identity(N, N)).cwiseAbs().maxCoeff();
        if (d > 1e-10) throw Error(ErrorKind::contract, "orbitals are not orthonormal", d);
    }
    const long dim = b.size();
    CMat R0 = CMat::Identity(dim, dim);
    if (N == 0) return R0;

    // R0 = c_1 ... c_N Gamma(D) P^N in the standard modes, c_j = a_j + a*_j,
    // D = -1 on the first N modes, P the parity
    CMat C = CMat::Identity(dim, dim);
    for (int j = 0; j < N; ++j) {
        CMat a = CMat(b.annihilator(j));
        C = C * (a + a.adjoint());
    }
    CMat DP = CMat::Zero(dim, dim);
    for (long i = 0; i < dim; ++i) {
        int occ_low = 0;
        for (int j = 0; j < N; ++j) occ_low += b.state(i)[static_cast<size_t>(j)];
        int parity = (N % 2) ? b.total(i) : 0;
        DP(i, i) = ((occ_low + parity) % 2) ? -1.0 : 1.0;
    }
    R0 = C * DP;

    // complete the orbitals to a unitary U with U e_i = f_i
    CMat U(M, M);
    U.leftCols(N) = F;
    if (N < M) {
        Eigen::HouseholderQR<CMat> qr(F);
        CMat Q = qr.householderQ() * CMat::Identity(M, M);
        U.rightCols(M - N) = Q.rightCols(M - N);
    }
    CMat G = fermion_gamma_unitary(b, U);
    return G * R0 * G.adjoint();
}

FockVector particle_hole_apply(const CMat& F, const FockVector& psi) {
    return FockVector(psi.basis, particle_hole_operator(*psi.basis, F) * psi.amp);
}

// ---------------------------------------------------------------- densities

BasisPtr lowered_sector(const BasisPtr& b) {
    if (b->n_min() != b->n_max()) return b;
    if (b->n_max() == 0) throw Error(ErrorKind::contract, "cannot lower the vacuum sector");
    return b->statistics() == Statistics::boson ? FockBasis::boson_sector(b->modes(), b->n_max() - 1)
                                                : FockBasis::fermion_sector(b->modes(), b->n_max() - 1);
}

CMat reduced_density_1(const FockVector& psi) {
    const auto& b = *psi.basis;
    const int M = b.modes();
    if (b.n_max() == 0) return CMat::Zero(M, M);
    BasisPtr low = lowered_sector(psi.basis);
    CMat A(low->size(), M);
    for (int x = 0; x < M; ++x)
        A.col(x) = (low.get() == &b ? b.annihilator(x) : annihilator_between(b, *low, x)) * psi.amp;
    CMat g = (A.adjoint() * A).transpose();
    return 0.5 * (g + g.adjoint());
}

CMat pairing_density(const FockVector& psi) {
    const auto& b = *psi.basis;
    const int M = b.modes();
    CMat A(b.size(), M), C(b.size(), M);
    for (int x = 0; x < M; ++x) {
        A.col(x) = b.annihilator(x) * psi.amp;
        C.col(x) = b.annihilator(x).adjoint() * psi.amp;
    }
    // alpha(x,y) = <a*_y psi, a_x psi>
    return (C.adjoint() * A).transpose();
}

std::string fock_vector_csv(const FockVector& psi) {
    std::ostringstream os;
    os.precision(17);
    os << "index,occupation,re,im\n";
    for (long i = 0; i < psi.amp.size(); ++i)
        os << i << ',' << psi.basis->label(i) << ',' << psi.amp[i].real() << ',' << psi.amp[i].imag() << '\n';
    return os.str();
}

}  // namespace qmf
