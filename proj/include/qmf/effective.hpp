#pragma once

#include <vector>

#include "qmf/numerics.hpp"
#include "qmf/scattering.hpp"

namespace qmf {

// Wave functions are grid samples with h^d sum |phi|^2 = 1.

struct EffectiveConfig {
    Grid grid;
    Vec v_ext;  // empty means zero
    double dt = 1e-3;
    int order = 4;           // 2: Strang, 4: Yoshida composition of Strang steps
    int sample_every = 100;  // steps between stored samples
};

struct Trajectory {
    std::vector<double> t;
    std::vector<CVec> phi;
    std::vector<double> mass, energy;
};

// Nonlinearity of a wave-function equation: either a convolution kernel
// (Hartree, modified GP) or a local cubic term g |phi|^2 (GP).
struct Nonlinearity {
    Vec kernel;        // indexed by displacement, empty when local
    double g = 0.0;    // local coupling
    static Nonlinearity convolution(Vec k) { return {std::move(k), 0.0}; }
    static Nonlinearity local(double g) { return {Vec(), g}; }
};

// U(phi) = kernel * |phi|^2 or g |phi|^2
Vec mean_field_potential(const Grid& g, const Nonlinearity& nl, const CVec& phi);
// i d/dt phi = -Delta phi + V_ext phi + U(phi) phi
CVec effective_rhs(const Grid& g, const Nonlinearity& nl, const Vec& v_ext, const CVec& phi);
// int |grad phi|^2 + int V_ext |phi|^2 + 1/2 int U(phi) |phi|^2
double effective_energy(const Grid& g, const Nonlinearity& nl, const Vec& v_ext, const CVec& phi);
Trajectory effective_solve(const CVec& phi0, const Nonlinearity& nl, const EffectiveConfig& cfg, double T);

Trajectory hartree_solve(const CVec& phi0, const PotentialSpec& V, const EffectiveConfig& cfg, double T);
double hartree_energy(const Grid& g, const CVec& phi, const PotentialSpec& V, const Vec& v_ext = Vec());

// i d/dt phi = -Delta phi + 8 pi a0 |phi|^2 phi
Trajectory gp_solve(const CVec& phi0, double a0, const EffectiveConfig& cfg, double T);
double gp_energy(const Grid& g, const CVec& phi, double a0, const Vec& v_ext = Vec());

// kernel N^3 V(N x) f(N x) sampled by displacement; refuses unresolved N
Vec gp_modified_kernel(const Grid& g, const ScatteringSolution& sol, double N);
Trajectory gp_modified_solve(const CVec& phi0, const ScatteringSolution& sol, double N, const EffectiveConfig& cfg,
                             double T);

// ---------------------------------------------------------------- Hartree-Fock

struct HFConfig {
    Grid grid;
    Vec v_ext;
    PotentialSpec V;
    double eps = 1.0;
    double N = 1.0;
    bool exchange = true;
    double dt = 1e-3;
    int sample_every = 100;
};

struct HFTrajectory {
    std::vector<double> t;
    std::vector<CMat> omega;
    std::vector<double> energy, trace;
};

// eps^2(-Delta) + V_ext + V * rho - X, in the pixel basis (omega_jk = h^d omega(x_j; x_k))
CMat hf_hamiltonian(const HFConfig& cfg, const CMat& omega, const CMat& one_body, const Mat& Vpair);
double hf_energy(const HFConfig& cfg, const CMat& omega);
// i eps d/dt omega = [h_HF(omega), omega] by unitary conjugation with the
// exponential of h_HF at the midpoint state (fixed point iteration)
HFTrajectory hf_solve(const CMat& omega0, const HFConfig& cfg, double T);

struct FermiState {
    CMat omega;
    CMat orbitals;  // columns
    double energy = 0.0;
};

// N lowest plane waves on the torus, ordered by |n|^2 then lexicographically
FermiState free_fermi_ground_state(const Grid& g, int N);
// N lowest eigenvectors of eps^2(-Delta) + V_ext
FermiState trapped_orbitals(const Grid& g, const Vec& v_ext, double eps, int N);

}  // namespace qmf
