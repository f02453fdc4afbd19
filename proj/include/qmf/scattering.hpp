#pragma once

#include <vector>

#include "qmf/numerics.hpp"

namespace qmf {

// Zero-energy scattering solution for a radial 3D potential, u = r f.
struct ScatteringSolution {
    PotentialSpec V;
    std::vector<double> r, u, du, f;
    std::vector<size_t> seg_end;  // node index closing each mesh segment
    double a0 = 0.0;
    double rho = 0.0;      // smallness parameter
    double R_V = 0.0;      // support radius
    double R_max = 0.0;
    double fit_residual = 0.0;  // rms of u - (r - a0) over the fit window

    // f(r) at any r >= 0; cubic Hermite in u between nodes, linear u below the
    // first node, 1 - a0/r beyond R_max
    double f_at(double r) const;
    double omega_at(double r) const { return 1.0 - f_at(r); }
};

ScatteringSolution solve_zero_energy(const PotentialSpec& V, double R_max, int mesh = 10000);

// (1/8pi) int V f d^3x; for the hard sphere the distributional limit R is used
double scattering_length_integral(const ScatteringSolution& sol, const PotentialSpec& V);

// sup r^2 V(r) + int_0^inf r V(r) dr
double smallness_parameter(const PotentialSpec& V, int mesh = 20000);

struct FpropReport {
    double c_lower = 0.0;  // smallest c with f >= 1 - c rho on the mesh
    double c_grad = 0.0;   // smallest c with r |f'| <= c rho on the mesh
    double f_max = 0.0;
    bool monotone = true;  // f nondecreasing on the mesh
    bool pass = false;
};

FpropReport verify_fprop_bounds(const ScatteringSolution& sol);

}  // namespace qmf
