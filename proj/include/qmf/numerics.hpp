#pragma once

#include <array>
#include <functional>
#include <vector>

#include "qmf/core.hpp"

namespace qmf {

// Periodic uniform grid on [-L/2, L/2)^d.  Points x_j = -L/2 + j h, flattened
// row-major (first axis slowest).
class Grid {
public:
    Grid() = default;
    Grid(int d, double L, int M);

    int d() const { return d_; }
    double L() const { return L_; }
    int M() const { return M_; }
    double h() const { return L_ / M_; }
    double cell() const;  // h^d
    long size() const { return n_; }

    double x(int j) const { return -0.5 * L_ + j * h(); }
    std::array<double, 3> point(long idx) const;
    std::array<int, 3> multi_index(long idx) const;
    // per-axis angular wavenumbers in FFT order
    const std::vector<double>& k_axis() const { return k_; }
    // |k|^2 for every flattened point, FFT order
    Vec k2() const;
    // minimum-image displacement |x_a - x_b|
    double distance(long a, long b) const;
    // shortest representative of n*h on the circle, per axis
    double wrap(double x) const;

    bool operator==(const Grid& o) const { return d_ == o.d_ && M_ == o.M_ && L_ == o.L_; }

private:
    int d_ = 1;
    double L_ = 1.0;
    int M_ = 4;
    long n_ = 4;
    std::vector<double> k_;
};

// Radial potential V(r) with optional rescaling  s * V0(lambda * r).
struct PotentialSpec {
    enum class Kind { zero, gaussian, square_well, hard_sphere, soft_coulomb, tabulated };

    Kind kind = Kind::zero;
    double amplitude = 0.0;
    double range = 1.0;
    double prefactor = 1.0;
    double dilation = 1.0;
    std::vector<double> tab_r, tab_v;

    static PotentialSpec zero();
    // A exp(-r^2 / (2 R^2))
    static PotentialSpec gaussian(double A, double R);
    // A for r <= R
    static PotentialSpec square_well(double A, double R);
    static PotentialSpec hard_sphere(double R);
    // A / sqrt(r^2 + R^2)
    static PotentialSpec soft_coulomb(double A, double R);
    static PotentialSpec tabulated(std::vector<double> r, std::vector<double> v);

    // N^{3 alpha} V(N^alpha x); alpha = 0 returns the base potential
    PotentialSpec rescaled(double N, double alpha) const;
    // s V(lambda x), e.g. (N^2, N) for the Gross-Pitaevskii scaling
    PotentialSpec scaled(double s, double lambda) const;

    double operator()(double r) const;
    // radius beyond which V vanishes; +inf for non-compact kinds.  The
    // Gaussian is cut where it drops below 1e-18 of its peak.
    double support() const;
    bool is_hard_sphere() const { return kind == Kind::hard_sphere; }
    // sup |V|
    double sup_abs() const;
    // points where V may jump (square well edge, table nodes)
    std::vector<double> breakpoints() const;

    static Kind kind_from_string(const std::string& s);
    static const char* kind_name(Kind k);
};

// V(x_j) at grid points with x measured from the origin
Vec sample_positions(const Grid& g, const PotentialSpec& V);
// V(wrap(x_n)) indexed by displacement n (FFT order), for convolution
Vec sample_displacement(const Grid& g, const PotentialSpec& V);
// V(x_a - x_b), minimum image
Mat pair_matrix(const Grid& g, const PotentialSpec& V);
// arbitrary function of position, sampled
Vec sample(const Grid& g, const std::function<double(const std::array<double, 3>&)>& f);

// unnormalized forward / normalized inverse DFT
CVec fft(const Grid& g, const CVec& f);
CVec ifft(const Grid& g, const CVec& fh);

// -eps^2 Laplacian, spectral
CVec laplacian_apply(const Grid& g, const CVec& psi, double eps = 1.0);
// d/dx_axis, spectral (Nyquist mode dropped so the operator is skew)
CVec gradient_apply(const Grid& g, const CVec& psi, int axis);
// dense matrices of the same operators on the pixel basis
CMat kinetic_matrix(const Grid& g, double eps = 1.0);
CMat gradient_matrix(const Grid& g, int axis);
// f(-Delta) as a dense matrix
CMat spectral_function_matrix(const Grid& g, const std::function<double(double)>& f_of_k2);

// periodic convolution (v * rho)(x_j) = sum_k h^d v(x_j - x_k) rho(x_k);
// v indexed by displacement as returned by sample_displacement
Vec convolve(const Grid& g, const Vec& v_disp, const Vec& rho);

double integrate(const Grid& g, const Vec& f);
double l2_norm(const Grid& g, const CVec& psi);

// Hermitian-matrix norms through eigendecomposition
double hermiticity_defect(const CMat& A);
void require_hermitian(const CMat& A, double tol = 1e-10);
double trace_norm(const CMat& A);
double hs_norm(const CMat& A);
double operator_norm(const CMat& A);
// trace norm of an arbitrary square matrix (sum of singular values)
double trace_norm_general(const CMat& A);
// f(A) for Hermitian A
CMat hermitian_function(const CMat& A, const std::function<double(double)>& f);
Vec hermitian_eigenvalues(const CMat& A);

}  // namespace qmf
