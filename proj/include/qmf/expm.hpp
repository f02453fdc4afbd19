#pragma once

#include <functional>

#include "qmf/core.hpp"

namespace qmf {

// exp(t G) v for skew-Hermitian G by Taylor steps with ||t G|| / steps <= 1;
// the norm of v is restored after every step.
CVec exp_skew_apply(const SpMat& G, const CVec& v, double t);

struct KrylovStats {
    int substeps = 0;
    int fallbacks = 0;     // substeps halved after an error-estimate rejection
    double max_error = 0;  // largest a-posteriori error estimate accepted
};

using LinearOp = std::function<CVec(const CVec&)>;

// exp(-i t H) v for Hermitian H (Lanczos with full reorthogonalisation)
CVec krylov_expm(const LinearOp& H, const CVec& v, double t, int m = 20, double tol = 1e-12,
                 KrylovStats* stats = nullptr);

struct GroundState {
    double energy = 0.0;
    CVec vector;
    double residual = 0.0;  // ||H v - E v||
};

// lowest eigenpair of a Hermitian operator by restarted Lanczos from v0; the
// iteration stays in any symmetry sector that v0 lies in
GroundState lanczos_ground_state(const LinearOp& H, const CVec& v0, int m = 40, double tol = 1e-10,
                                 int max_restarts = 200);

// exp(A) for a small dense matrix
CMat dense_expm(const CMat& A);

}  // namespace qmf
