#pragma once

#include <vector>

#include "qmf/effective.hpp"
#include "qmf/numerics.hpp"

namespace qmf {

// ---------------------------------------------------------------- Thomas-Fermi

struct TFConfig {
    Grid grid;
    Vec v_ext;  // empty means zero
    PotentialSpec V;
    double c_tf = 1.0;
    double tol = 1e-10;
    int max_iter = 20000;
    double damping = 0.5;
};

struct TFState {
    Vec rho;  // int rho = 1
    double mu = 0.0;
    double c_tf = 1.0;
    double residual = 0.0;  // max |c rho^{2/3} - (mu - phi)_+|
    double energy = 0.0;
    int iterations = 0;
    std::vector<double> energy_history;
};

// 3/5 c int rho^{5/3} + int v_ext rho + 1/2 int int V rho rho
double tf_energy(const TFConfig& cfg, const Vec& rho);
// phi = v_ext + V * rho
Vec tf_potential(const TFConfig& cfg, const Vec& rho);
TFState tf_minimize(const TFConfig& cfg);

// ---------------------------------------------------------------- phase space (1D)

// Samples on midpoints X_mu = x_0 + mu h/2 (mu = 0..2M-2, non-wrapped box)
// and velocities v_r = pi eps r / L (r = -M/2..M/2-1).  occ is the
// phase-space occupation M(x,v) of the Weyl formula.
struct PhaseSpaceDensity {
    Grid grid;
    double eps = 1.0;
    Mat occ;

    Vec X() const;
    Vec v() const;
    double dv() const { return pi * eps / grid.L(); }
    // int int M dx dv on the midpoint lattice
    double integral() const;
    // the Wigner function normalised as eps^d/(2 pi)^d int dy omega(x - eps y/2; x + eps y/2) e^{i v y}
    Mat wigner() const { return occ / (2 * pi); }
};

// omega_jk = (2 pi eps)^{-1} h int dv M((x_j+x_k)/2, v) e^{i v (x_j - x_k)/eps}
CMat weyl_quantize(const PhaseSpaceDensity& m);
PhaseSpaceDensity wigner_transform(const CMat& omega, const Grid& g, double eps);
// sample a phase-space function on the lattice; refuses when it does not
// decay at the velocity cutoff (aliasing)
PhaseSpaceDensity sample_phase_space(const Grid& g, double eps,
                                     const std::function<double(double, double)>& f, double alias_tol = 1e-10);
// chi(|v| <= v_F(x)) mollified linearly over one velocity cell
PhaseSpaceDensity fermi_sea(const Grid& g, double eps, const std::function<double(double)>& v_F);

struct FermiDiracState {
    PhaseSpaceDensity psd;
    CMat omega;
    double c = 0.0;  // chosen so that Tr omega = N
};

// M(x,v) = 1/(1 + exp((v^2 - c rho^{2/3}(x) - mu)/T))
FermiDiracState fermi_dirac_state(const Grid& g, double eps, const Vec& rho, double T, double mu, double N);

// ---------------------------------------------------------------- diagnostics

struct CommutatorNorms {
    std::vector<double> x_tr, x_hs;      // per axis
    std::vector<double> grad_tr, grad_hs;
};

struct CommutatorReport {
    CommutatorNorms omega, sqrt_omega, sqrt_one_minus;
};

CommutatorNorms commutator_norms(const CMat& A, const Grid& g, double eps);
CommutatorReport commutator_diagnostics(const CMat& omega, const Grid& g, double eps);

// log c(t) = a + b t + q t^2 by least squares
struct GrowthFit {
    double a = 0.0, b = 0.0, q = 0.0;
    double residual = 0.0;
    bool super_exponential = false;  // q > 0 and q T^2 > 1
    bool accepted = false;
};
GrowthFit fit_growth(const std::vector<double>& t, const std::vector<double>& c);

struct CommutatorPropagation {
    std::vector<double> t, x_tr, grad_tr, energy;
    GrowthFit fit_x, fit_grad;
};

CommutatorPropagation commutator_propagation_experiment(const CMat& omega0, const HFConfig& cfg, double T,
                                                        int samples);

// X = (1/N) (1/L^d) sum_p Vhat(p) e^{ipx} omega e^{-ipx}, Vhat(p) = h^d sum V(x) e^{-ipx}
CMat exchange_operator(const CMat& omega, const Grid& g, const PotentialSpec& V, double N);
// Tr |[X, omega]|
double exchange_commutator(const CMat& omega, const Grid& g, const PotentialSpec& V, double N);

// Tr(-Delta omega) / int rho^{1 + 2/d}, rho(x) = omega(x;x)
double lieb_thirring_ratio(const CMat& omega, const Grid& g);

}  // namespace qmf
