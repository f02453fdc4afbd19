#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "qmf/core.hpp"

namespace qmf {

enum class Statistics { boson, fermion };

using Occupation = std::vector<unsigned char>;

// Occupation-number basis in lexicographic order.  Bosons: all n with
// n_min <= sum n <= n_max.  Fermions: subsets, optionally a fixed sector.
class FockBasis {
public:
    static std::shared_ptr<const FockBasis> bosons(int M, int n_max);
    static std::shared_ptr<const FockBasis> boson_sector(int M, int N);
    static std::shared_ptr<const FockBasis> fermions(int M);
    static std::shared_ptr<const FockBasis> fermion_sector(int M, int N);

    Statistics statistics() const { return stats_; }
    int modes() const { return M_; }
    int n_min() const { return n_min_; }
    int n_max() const { return n_max_; }
    long size() const { return static_cast<long>(states_.size()); }
    const Occupation& state(long i) const { return states_[static_cast<size_t>(i)]; }
    int total(long i) const { return totals_[static_cast<size_t>(i)]; }
    // -1 when the occupation is not in the basis
    long index(const Occupation& n) const;
    std::string label(long i) const;

    // a_j as a sparse matrix within this basis (truncated bosonic spaces drop
    // amplitude pushed past n_max by the adjoint)
    const SpMat& annihilator(int j) const;
    SpMat creator(int j) const { return SpMat(annihilator(j).adjoint()); }

private:
    FockBasis() = default;
    void finalize();

    Statistics stats_ = Statistics::boson;
    int M_ = 0, n_min_ = 0, n_max_ = 0;
    std::vector<Occupation> states_;
    std::vector<int> totals_;
    std::unordered_map<std::string, long> index_;
    mutable std::once_flag ladder_once_;
    mutable std::vector<SpMat> ladder_;
};

using BasisPtr = std::shared_ptr<const FockBasis>;

struct FockVector {
    BasisPtr basis;
    CVec amp;

    FockVector() = default;
    FockVector(BasisPtr b, CVec a);
    static FockVector vacuum(BasisPtr b);
    static FockVector basis_state(BasisPtr b, const Occupation& n);

    double norm() const { return amp.norm(); }
    double number_expectation() const;
    // weight on the top shell sum n = n_max of a truncated bosonic space
    double boundary_mass() const;
    bool stale() const { return boundary_mass() > 1e-8; }
    // probability of finding n particles, n = 0..n_max
    Vec number_distribution() const;
    cplx dot(const FockVector& o) const;  // <this, o>
};

// Ladder-string application on one occupation vector.  ops are applied right
// to left; returns 0 when the string annihilates the state.
struct Ladder {
    int mode;
    bool dagger;
};
double apply_ladder_string(Statistics s, const std::vector<Ladder>& ops, Occupation& n);

// a(f) = sum conj(f_j) a_j, a*(f) = sum f_j a*_j
SpMat annihilation_operator(const FockBasis& b, const CVec& f);
SpMat creation_operator(const FockBasis& b, const CVec& f);
// a_j from basis `from` into basis `to` (e.g. between particle-number sectors)
SpMat annihilator_between(const FockBasis& from, const FockBasis& to, int j);
// the (N-1)-particle sector below a fixed-N sector; other bases map to themselves
BasisPtr lowered_sector(const BasisPtr& b);

FockVector annihilate(const CVec& f, const FockVector& psi);
FockVector create(const CVec& f, const FockVector& psi);

// operator norm of [a(f), a*(g)] - <f,g> on states with sum n <= cap
double ccr_residual(const CVec& f, const CVec& g, const FockBasis& b, int cap);
// operator norm of {a(f), a*(g)} - <f,g> on the full fermionic space
double car_residual(const CVec& f, const CVec& g, const FockBasis& b);

// second quantisation: dGamma(J) = sum J_ij a*_i a_j
SpMat second_quantize(const FockBasis& b, const CMat& J);
// 1/2 sum_jk W_jk a*_j a*_k a_k a_j (diagonal in occupation numbers)
SpMat pair_interaction(const FockBasis& b, const Mat& W);
// 1/2 sum v(a,b,c,d) a*_a a*_b a_c a_d with v stored as v[((a*M+b)*M+c)*M+d]
SpMat two_body_operator(const FockBasis& b, const std::vector<cplx>& v);
// sum K_ij a*_i a*_j and its adjoint
SpMat pair_creation(const FockBasis& b, const CMat& K);
// matrix-free dGamma(J) applied to a vector
FockVector apply_second_quantized(const CMat& J, const FockVector& psi);

struct LeakageInfo {
    double boundary_mass = 0.0;
};

// W(f) = exp(a*(f) - a(f)) by stepped integration; throws truncation errors
// when the weight on the top shell exceeds max_leakage
FockVector weyl_apply(const CVec& f, const FockVector& psi, double max_leakage = 1e-8, LeakageInfo* info = nullptr);
FockVector coherent_state(const CVec& f, BasisPtr b, double max_leakage = 1e-8);

// T = exp(1/2 sum (K_ij a*_i a*_j - conj(K_ij) a_i a_j)), K symmetric
FockVector bogoliubov_apply(const CMat& K, const FockVector& psi, double max_leakage = 1e-8,
                            LeakageInfo* info = nullptr);

struct CoshSinh {
    CMat ch, sh;
};
// ch = sum (K conj K)^n/(2n)!, sh = sum (K conj K)^n K/(2n+1)!, through the SVD of K
CoshSinh cosh_sinh(const CMat& K);

// second quantisation of a one-particle unitary on a fermionic basis
CMat fermion_gamma_unitary(const FockBasis& b, const CMat& U);

// R with R a(f_i) R* = a*(f_i) for i <= N and a(f_i) otherwise; orbitals are
// the columns of F.  R Omega is the Slater determinant of the orbitals.
CMat particle_hole_operator(const FockBasis& b, const CMat& F);
FockVector particle_hole_apply(const CMat& F, const FockVector& psi);

// gamma(x;y) = <psi, a*_y a_x psi>, alpha(x,y) = <psi, a_y a_x psi>
CMat reduced_density_1(const FockVector& psi);
CMat pairing_density(const FockVector& psi);

std::string fock_vector_csv(const FockVector& psi);

}  // namespace qmf
