#pragma once

#include <vector>

#include "qmf/fock.hpp"
#include "qmf/numerics.hpp"

namespace qmf {

// k-particle operators are P^k x P^k matrices on the pixel basis (P grid
// points), particle 1 slowest.  Vpair(a,b) = V(x_a - x_b).

// sum_j Tr_{k+1} [V(x_j - x_{k+1}), gamma^(k+1)]
CMat collision_apply(const CMat& gamma_k1, const Mat& Vpair, int k);
// ||B gamma||_tr / (2k ||V||_inf ||gamma||_tr)
double collision_trace_bound_check(const CMat& gamma_k1, const Mat& Vpair, int k);

// |c><c|^{(x)k}
CMat product_density(const CVec& c, int k);
// T acting on slot j of a k-particle space
CMat slot_operator(const CMat& T, int j, int k);
// Tr over the last particle
CMat partial_trace_last(const CMat& gamma, long P);

enum class Closure { zero, factorized };

struct HierarchyState {
    int N = 1;
    std::vector<CMat> gamma;  // gamma[k-1] = normalised gamma^(k), Tr = 1
    Closure closure = Closure::zero;
    int k_max() const { return static_cast<int>(gamma.size()); }
};

// right-hand sides i d/dt gamma^(k), k = 1..k_max.  T is the one-particle
// kinetic matrix; infinite = true drops the 1/N terms and the (N-k)/N factor.
std::vector<CMat> hierarchy_rhs(const HierarchyState& s, const CMat& T, const Mat& Vpair, bool infinite = false);

// normalised reduced densities of an N-particle Fock vector
HierarchyState hierarchy_from_state(const FockVector& psi, int k_max, Closure closure = Closure::zero);

struct ConsistencyReport {
    double residual = 0.0;  // HS norm of i d/dt gamma^(k) - rhs at the middle time
    double derivative_norm = 0.0;
};

// central difference of gamma^(k) over the triple (psi(t-dt), psi(t), psi(t+dt))
ConsistencyReport exact_consistency_check(const FockVector& before, const FockVector& mid, const FockVector& after,
                                          double dt, int k, const CMat& T, const Mat& Vpair);

// residual of |c><c|^{(x)k} in the infinite hierarchy given i dc/dt
double infinite_hierarchy_residual(const CVec& c, const CVec& i_cdot, int k, const CMat& T, const Mat& Vpair);

}  // namespace qmf
