#pragma once

#include <vector>

#include "qmf/fock.hpp"
#include "qmf/manybody.hpp"
#include "qmf/numerics.hpp"
#include "qmf/scattering.hpp"

namespace qmf {

// H_N = dGamma(T) + 1/(2N) sum_jk V_jk a*_j a*_k a_k a_j on a set of modes.
// Mode coefficients c relate to grid samples by c_j = phi(x_j) sqrt(h^d).
struct MeanFieldModel {
    CMat T;
    Mat V;
    int modes() const { return static_cast<int>(T.rows()); }
    ModeModel fock_model(double N) const { return {T, V / N}; }
};

MeanFieldModel grid_model(const Grid& g, const PotentialSpec& V, const Vec& v_ext = Vec());

// discrete Hartree: i dc/dt = T c + (V |c|^2) c
CVec mode_hartree_rhs(const MeanFieldModel& m, const CVec& c);

struct ModeTrajectory {
    std::vector<double> t;
    std::vector<CVec> c;
};
// RK4; samples at t = 0, every sample_every steps and at T
ModeTrajectory mode_hartree(const MeanFieldModel& m, const CVec& c0, double T, double dt = 1e-3, int sample_every = 1);

struct QuadraticGenerator {
    CMat h, A1, A2;
    // D = [[h, -A2], [conj A2, -conj h]]
    CMat D() const;
};
QuadraticGenerator quadratic_generator(const MeanFieldModel& m, const CVec& c);

// Theta = [[U, conj V], [V, conj U]] acting on pairs (f, g).  Stored as the
// Schroedinger-picture map: U_inf A(F) U_inf* = A(Theta F), A(f,g) = a(f) + a*(conj g).
struct BogoliubovMap {
    CMat U, V;

    static BogoliubovMap identity(int M);
    CMat full() const;
    BogoliubovMap operator*(const BogoliubovMap& o) const;
    // S Theta* S
    BogoliubovMap inverse() const;
    // max(||U*U - V*V - 1||, ||U^T V - V^T U||), elementwise maximum
    double constraint_residual() const;
};

// Theta J = J Theta for a general 2M x 2M matrix
double j_residual(const CMat& theta);
// Theta* S Theta - S for a general 2M x 2M matrix
double symplectic_residual(const CMat& theta);

struct ThetaRun {
    BogoliubovMap theta;  // Theta(t; s)
    CVec c_t;
    double max_residual = 0.0;
    std::vector<double> t;
    std::vector<BogoliubovMap> samples;
    std::vector<CVec> c;
};

// joint RK4 integration of (c, Theta) with polar re-projection after every step
ThetaRun theta_propagate(const MeanFieldModel& m, const CVec& c_s, double s, double t, double dt = 1e-3,
                         int sample_every = 0);

// U_inf Omega for the map Theta: proportional to exp(1/2 a* K a*) Omega with K = -conj(V) conj(U)^{-1}
FockVector bogoliubov_vacuum(const BogoliubovMap& theta, BasisPtr b, double max_leakage = 1e-8);

// sigma^2 = 1/2 [ ||Theta_H F||^2 - |<Theta_H F, (phi0, conj phi0)/sqrt 2>|^2 ],
// F = (Q J phi_t, conj(Q J phi_t)), Q = 1 - |phi_t><phi_t|, Theta_H = Theta^{-1}
double clt_variance(const BogoliubovMap& theta, const CVec& phi0, const CVec& phi_t, const CMat& J);

struct GeneratorReport {
    CVec linear;  // coefficient of a*(.) + a(.)
    double linear_norm = 0.0;
    SpMat L;  // empty when no basis was supplied
};

// Fluctuation generator on a truncated Fock space.  i_cdot is i dc/dt of the
// condensate as produced by the effective solver.
GeneratorReport generator_LN(const MeanFieldModel& m, const CVec& c, const CVec& i_cdot, double N,
                             BasisPtr b = nullptr);
// grid wrappers: mean-field mode (Hartree right-hand side) and GP mode
// (interaction N^3 V(N .), condensate driven by the modified GP equation)
GeneratorReport generator_LN_mean_field(const Grid& g, const CVec& phi, const PotentialSpec& V, double N,
                                        const Vec& v_ext = Vec(), BasisPtr b = nullptr);
GeneratorReport generator_LN_gp(const Grid& g, const CVec& phi, const ScatteringSolution& sol, double N,
                                const Vec& v_ext = Vec(), BasisPtr b = nullptr);
// the shifted Hamiltonian W(sqrt N c)* H_N W(sqrt N c) minus its constant, as a
// sparse matrix (quadratic, cubic, quartic and linear parts)
SpMat shifted_hamiltonian(const MeanFieldModel& m, const CVec& c, double N, const FockBasis& b);

// log(1 + y) = a + K t fitted by least squares; D = exp(a + max residual)
struct EnvelopeFit {
    double D = 0.0, K = 0.0;
    bool holds = false;  // y <= D e^{K t} - 1 at every sample
};
EnvelopeFit fit_envelope(const std::vector<double>& t, const std::vector<double>& y);

struct GrowthResult {
    std::vector<double> t, number;
    EnvelopeFit fit;
    double max_boundary = 0.0;
};

// xi_t = W(sqrt N c_t)* e^{-i H_N t} W(sqrt N c_0) xi
GrowthResult fluctuation_growth_experiment(const MeanFieldModel& m, const CVec& c0, double N, const FockVector& xi,
                                           double T, int samples, double dt = 1e-3);

// Fock truncation that holds W(sqrt N c) Omega with margin
int default_fock_cap(double N);

struct NormResult {
    std::vector<double> t, residual;
    int n_max = 0;
};

// || e^{-i H_N t} W(sqrt N c) Omega - W(sqrt N c_t) U_inf(t;0) Omega ||, minimised over a global phase.
// n_max = 0 picks the smallest cap (from default_fock_cap upward) that holds every state.
NormResult norm_approximation_experiment(const MeanFieldModel& m, const CVec& c0, double N,
                                         const std::vector<double>& times, int n_max = 0, double dt = 1e-3);

// sqrt(2 - 2 |<a, b>|) for unit vectors
double phase_residual(const CVec& a, const CVec& b);

struct ExcitationImage {
    CMat frame;         // unitary, first column phi
    FockVector image;   // over the M-1 complementary modes, sum n <= N
    int N = 0;
    // weight of the n-excitation sector
    Vec sector_weights() const;
};

ExcitationImage excitation_map(const FockVector& psi, const CVec& phi);
FockVector excitation_inverse(const ExcitationImage& e);

// Appendix-type energy of W(sqrt N phi) T_0 Omega in a reduced mode set.
struct DressedSetup {
    CMat kinetic, external;    // one-body blocks in the mode set
    std::vector<cplx> v;       // two-body tensor v[((a m + b) m + c) m + d]
    CMat K;                    // pair kernel of T_0
    CVec c;                    // condensate coordinates, ||c|| = 1
    double N = 1.0;
    int modes() const { return static_cast<int>(c.size()); }
};

// modes: orthonormal columns on the pixel basis of a 3D grid containing phi;
// H = sum(-Delta + V_ext) + sum N^2 V(N(x_i - x_j)); k_0 = -N omega(N(x-y)) phi(x) phi(y)
DressedSetup dressed_setup(const Grid& g, const CVec& phi, const Vec& v_ext, const ScatteringSolution& sol, double N,
                           const CMat& modes);
// plane waves e^{i p x} for |n|^2 <= n2_max as orthonormal pixel columns
CMat plane_wave_modes(const Grid& g, int n2_max);

struct DressedEnergy {
    double total = 0.0, kinetic = 0.0, external = 0.0, interaction = 0.0;
};

struct DressedEnergyReport {
    DressedEnergy direct;   // expectation of the shifted Hamiltonian in the truncated space
    DressedEnergy formula;  // Wick evaluation with cosh/sinh of K
    double truncation_error = 0.0;
    double boundary_mass = 0.0;
    int n_max = 0;
    bool with_T0 = true;
};

DressedEnergyReport gp_dressed_energy(const DressedSetup& s, int n_max, bool with_T0, double max_leakage = 1e-6);

// zero-energy equation residual u'' - V u / 2 relative to max |V u / 2|
double voo_residual(const ScatteringSolution& sol);

}  // namespace qmf
