#pragma once

#include "qmf/expm.hpp"
#include "qmf/fock.hpp"
#include "qmf/numerics.hpp"
#include "qmf/scattering.hpp"

namespace qmf {

// H = dGamma(T) + 1/2 sum_jk W_jk a*_j a*_k a_k a_j on a set of modes
struct ModeModel {
    CMat T;
    Mat W;
    int modes() const { return static_cast<int>(T.rows()); }
};

enum class Coupling { mean_field, gross_pitaevskii };

struct HamiltonianSpec {
    Grid grid;
    double eps = 1.0;  // kinetic scale; time runs as i eps d/dt
    Vec v_ext;         // empty means zero
    PotentialSpec V;
    Coupling coupling = Coupling::mean_field;
    double N = 1.0;
};

// N^2 V(N .) is resolved when range / N >= h
double gp_resolution_limit(const Grid& g, const PotentialSpec& V);
void require_gp_resolved(const Grid& g, const PotentialSpec& V, double N);

// grid points as modes: T = eps^2(-Delta) + V_ext; W = V/N or N^2 V(N .)
ModeModel assemble_modes(const HamiltonianSpec& H);
SpMat fock_hamiltonian(const FockBasis& b, const ModeModel& m);

// phi^{(x)N} for mode coefficients c (||c|| = 1)
FockVector product_state(BasisPtr b, const CVec& c, int N);
// Slater determinant of the columns of F
FockVector slater_state(BasisPtr b, const CMat& F);

struct PropagationReport {
    double norm_drift = 0.0;
    double energy_drift = 0.0;  // relative to max(1, |E_0|)
    KrylovStats krylov;
};

// exp(-i H t / eps) psi, Krylov steps of length dt
FockVector propagate(const FockVector& psi, const SpMat& H, double t, double dt = 1e-3, double eps = 1.0,
                     int krylov_dim = 20, PropagationReport* report = nullptr);

// gamma^(k)(x;y) = (1/k!) <psi, a*_y1..a*_yk a_xk..a_x1 psi>, Tr = C(N,k).
// Indices x = (x1,..,xk) flattened with x1 slowest.
CMat reduced_density_k(const FockVector& psi, int k);

// Tr|S_1..S_k gamma S_k..S_1| with S = (1 - Delta)^{1/2}
double sobolev_norm(const Grid& g, const CMat& gamma, int k);

// ---- first-quantised tensors on (M^d)^N, particle 1 slowest, sum |psi|^2 = 1

// apply a one-axis operator (M x M) to one coordinate axis of one particle
CVec apply_axis(const Grid& g, int N, const CVec& psi, int particle, int axis, const CMat& op1d);
// sum_j (-Delta_j + v_ext(x_j)) + sum_{i<j} W(x_i - x_j), W given as pair matrix
CVec first_quantized_apply(const Grid& g, int N, const CVec& psi, const Mat& W, const Vec& v_ext = Vec());
// lowest eigenstate by Lanczos from the symmetric constant start
GroundState first_quantized_ground_state(const Grid& g, int N, const Mat& W, double tol = 1e-10);

struct GpEstimateReport {
    double lhs = 0.0;        // <psi, H^2 psi>
    double rhs = 0.0;        // N^2/2 int |grad_1 grad_2 (psi / f_N)|^2
    double ratio = 0.0;      // lhs / rhs
    double undivided = 0.0;  // N^2/2 int |grad_1 grad_2 psi|^2
};

// GP-scaled H on a 3D grid; refuses d != 3 and unresolved N
GpEstimateReport gp_energy_estimate_check(const Grid& g, int N, const CVec& psi, const PotentialSpec& V,
                                          const ScatteringSolution& sol);

}  // namespace qmf
