#include "qmf/numerics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

namespace qmf {

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::shape: return "shape";
        case ErrorKind::contract: return "contract";
        case ErrorKind::domain: return "domain";
        case ErrorKind::unsupported: return "unsupported";
        case ErrorKind::refused: return "refused";
        case ErrorKind::truncation: return "truncation";
        case ErrorKind::numerical: return "numerical";
        case ErrorKind::missing_input: return "missing-input";
    }
    return "unknown";
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::missing_input: return 2;
        case ErrorKind::truncation:
        case ErrorKind::numerical: return 3;
        default: return 1;
    }
}

Grid::Grid(int d, double L, int M) : d_(d), L_(L), M_(M) {
    if (d != 1 && d != 3) throw Error(ErrorKind::contract, "grid dimension must be 1 or 3");
    if (M < 4 || M % 2 != 0) throw Error(ErrorKind::contract, "points per axis must be even and >= 4");
    if (!(L > 0)) throw Error(ErrorKind::contract, "box length must be positive");
    n_ = 1;
    for (int a = 0; a < d; ++a) n_ *= M;
    k_.resize(M);
    for (int m = 0; m < M; ++m) {
        int mm = m < M / 2 ? m : m - M;
        k_[m] = 2.0 * pi * mm / L;
    }
}

double Grid::cell() const { return std::pow(h(), d_); }

std::array<int, 3> Grid::multi_index(long idx) const {
    std::array<int, 3> m{0, 0, 0};
    for (int a = d_ - 1; a >= 0; --a) {
        m[a] = static_cast<int>(idx % M_);
        idx /= M_;
    }
    return m;
}

std::array<double, 3> Grid::point(long idx) const {
    auto m = multi_index(idx);
    std::array<double, 3> p{0, 0, 0};
    for (int a = 0; a < d_; ++a) p[a] = x(m[a]);
    return p;
}

Vec Grid::k2() const {
    Vec out(n_);
    for (long i = 0; i < n_; ++i) {
        auto m = multi_index(i);
        double s = 0;
        for (int a = 0; a < d_; ++a) s += k_[m[a]] * k_[m[a]];
        out[i] = s;
    }
    return out;
}

double Grid::wrap(double x) const { return x - L_ * std::round(x / L_); }

double Grid::distance(long a, long b) const {
    auto pa = point(a), pb = point(b);
    double s = 0;
    for (int i = 0; i < d_; ++i) {
        double dx = wrap(pa[i] - pb[i]);
        s += dx * dx;
    }
    return std::sqrt(s);
}

// ---------------------------------------------------------------- potentials

PotentialSpec PotentialSpec::zero() { return {}; }

PotentialSpec PotentialSpec::gaussian(double A, double R) {
    PotentialSpec p;
    p.kind = Kind::gaussian;
    p.amplitude = A;
    p.range = R;
    return p;
}

PotentialSpec PotentialSpec::square_well(double A, double R) {
    PotentialSpec p;
    p.kind = Kind::square_well;
    p.amplitude = A;
    p.range = R;
    return p;
}

PotentialSpec PotentialSpec::hard_sphere(double R) {
    PotentialSpec p;
    p.kind = Kind::hard_sphere;
    p.range = R;
    p.amplitude = std::numeric_limits<double>::infinity();
    return p;
}

PotentialSpec PotentialSpec::soft_coulomb(double A, double R) {
    PotentialSpec p;
    p.kind = Kind::soft_coulomb;
    p.amplitude = A;
    p.range = R;
    return p;
}

PotentialSpec PotentialSpec::tabulated(std::vector<double> r, std::vector<double> v) {
    if (r.size() != v.size() || r.size() < 2) throw Error(ErrorKind::shape, "tabulated potential needs matching r, V arrays");
    for (size_t i = 1; i < r.size(); ++i)
        if (!(r[i] > r[i - 1])) throw Error(ErrorKind::contract, "tabulated radii must increase");
    PotentialSpec p;
    p.kind = Kind::tabulated;
    p.tab_r = std::move(r);
    p.tab_v = std::move(v);
    p.range = p.tab_r.back();
    return p;
}

PotentialSpec PotentialSpec::rescaled(double N, double alpha) const {
    return scaled(std::pow(N, 3.0 * alpha), std::pow(N, alpha));
}

PotentialSpec PotentialSpec::scaled(double s, double lambda) const {
    if (!(lambda > 0)) throw Error(ErrorKind::contract, "dilation must be positive");
    PotentialSpec p = *this;
    p.prefactor *= s;
    p.dilation *= lambda;
    return p;
}

double PotentialSpec::operator()(double r) const {
    double y = dilation * std::abs(r);
    double v = 0.0;
    switch (kind) {
        case Kind::zero: return 0.0;
        case Kind::gaussian: v = amplitude * std::exp(-0.5 * y * y / (range * range)); break;
        case Kind::square_well: v = y <= range ? amplitude : 0.0; break;
        case Kind::hard_sphere:
            throw Error(ErrorKind::contract, "hard-sphere potential cannot be sampled; it is a boundary condition");
        case Kind::soft_coulomb: v = amplitude / std::sqrt(y * y + range * range); break;
        case Kind::tabulated: {
            if (y > tab_r.back()) return 0.0;
            if (y <= tab_r.front()) {
                v = tab_v.front();
                break;
            }
            auto it = std::upper_bound(tab_r.begin(), tab_r.end(), y);
            size_t i = static_cast<size_t>(it - tab_r.begin());
            double t = (y - tab_r[i - 1]) / (tab_r[i] - tab_r[i - 1]);
            v = (1 - t) * tab_v[i - 1] + t * tab_v[i];
            break;
        }
    }
    if (kind == Kind::gaussian && y > range * std::sqrt(2.0 * std::log(1e18))) return 0.0;
    return prefactor * v;
}

double PotentialSpec::support() const {
    switch (kind) {
        case Kind::zero: return 0.0;
        case Kind::gaussian: return range * std::sqrt(2.0 * std::log(1e18)) / dilation;
        case Kind::square_well:
        case Kind::hard_sphere: return range / dilation;
        case Kind::soft_coulomb: return std::numeric_limits<double>::infinity();
        case Kind::tabulated: return tab_r.back() / dilation;
    }
    return 0.0;
}

double PotentialSpec::sup_abs() const {
    switch (kind) {
        case Kind::zero: return 0.0;
        case Kind::gaussian:
        case Kind::square_well: return std::abs(prefactor * amplitude);
        case Kind::hard_sphere: return std::numeric_limits<double>::infinity();
        case Kind::soft_coulomb: return std::abs(prefactor * amplitude / range);
        case Kind::tabulated: {
            double m = 0;
            for (double v : tab_v) m = std::max(m, std::abs(v));
            return std::abs(prefactor) * m;
        }
    }
    return 0.0;
}

std::vector<double> PotentialSpec::breakpoints() const {
    std::vector<double> b;
    if (kind == Kind::square_well || kind == Kind::hard_sphere) b.push_back(range / dilation);
    if (kind == Kind::tabulated)
        for (double r : tab_r) b.push_back(r / dilation);
    return b;
}

PotentialSpec::Kind PotentialSpec::kind_from_string(const std::string& s) {
    if (s == "zero") return Kind::zero;
    if (s == "gaussian") return Kind::gaussian;
    if (s == "square_well") return Kind::square_well;
    if (s == "hard_sphere") return Kind::hard_sphere;
    if (s == "soft_coulomb") return Kind::soft_coulomb;
    if (s == "tabulated") return Kind::tabulated;
    throw Error(ErrorKind::contract, "unknown potential kind '" + s + "'");
}

const char* PotentialSpec::kind_name(Kind k) {
    switch (k) {
        case Kind::zero: return "zero";
        case Kind::gaussian: return "gaussian";
        case Kind::square_well: return "square_well";
        case Kind::hard_sphere: return "hard_sphere";
        case Kind::soft_coulomb: return "soft_coulomb";
        case Kind::tabulated: return "tabulated";
    }
    return "?";
}

Vec sample(const Grid& g, const std::function<double(const std::array<double, 3>&)>& f) {
    Vec out(g.size());
    for (long i = 0; i < g.size(); ++i) out[i] = f(g.point(i));
    return out;
}

Vec sample_positions(const Grid& g, const PotentialSpec& V) {
    return sample(g, [&](const std::array<double, 3>& p) {
        return V(std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
    });
}

Vec sample_displacement(const Grid& g, const PotentialSpec& V) {
    Vec out(g.size());
    for (long i = 0; i < g.size(); ++i) {
        auto m = g.multi_index(i);
        double s = 0;
        for (int a = 0; a < g.d(); ++a) {
            double x = g.wrap(m[a] * g.h());
            s += x * x;
        }
        out[i] = V(std::sqrt(s));
    }
    return out;
}

Mat pair_matrix(const Grid& g, const PotentialSpec& V) {
    Vec vd = sample_displacement(g, V);
    const long n = g.size();
    Mat out(n, n);
    const int M = g.M();
    for (long a = 0; a < n; ++a) {
        auto ma = g.multi_index(a);
        for (long b = 0; b < n; ++b) {
            auto mb = g.multi_index(b);
            long idx = 0;
            for (int ax = 0; ax < g.d(); ++ax) idx = idx * M + ((ma[ax] - mb[ax]) % M + M) % M;
            out(a, b) = vd[idx];
        }
    }
    return out;
}

// ---------------------------------------------------------------- FFT

namespace {

struct PlanKey {
    int d, M, sign;
    bool operator<(const PlanKey& o) const { return std::tie(d, M, sign) < std::tie(o.d, o.M, o.sign); }
};

std::mutex plan_mutex;
std::map<PlanKey, fftw_plan> plans;

fftw_plan get_plan(const Grid& g, int sign) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    PlanKey key{g.d(), g.M(), sign};
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    int n[3] = {g.M(), g.M(), g.M()};
    auto* buf = fftw_alloc_complex(static_cast<size_t>(g.size()));
    fftw_plan p = fftw_plan_dft(g.d(), n, buf, buf, sign, FFTW_ESTIMATE);
    fftw_free(buf);
    plans[key] = p;
    return p;
}

CVec run_fft(const Grid& g, const CVec& f, int sign) {
    if (f.size() != g.size()) throw Error(ErrorKind::shape, "field length does not match grid");
    fftw_plan p = get_plan(g, sign);
    auto* buf = fftw_alloc_complex(static_cast<size_t>(g.size()));
    std::copy(f.data(), f.data() + f.size(), reinterpret_cast<cplx*>(buf));
    fftw_execute_dft(p, buf, buf);
    CVec out(g.size());
    std::copy(reinterpret_cast<cplx*>(buf), reinterpret_cast<cplx*>(buf) + g.size(), out.data());
    fftw_free(buf);
    return out;
}

}  // namespace

CVec fft(const Grid& g, const CVec& f) { return run_fft(g, f, FFTW_FORWARD); }

CVec ifft(const Grid& g, const CVec& fh) {
    CVec out = run_fft(g, fh, FFTW_BACKWARD);
    out /= static_cast<double>(g.size());
    return out;
}

CVec laplacian_apply(const Grid& g, const CVec& psi, double eps) {
    if (!(eps > 0)) throw Error(ErrorKind::contract, "eps must be positive");
    CVec ph = fft(g, psi);
    Vec k2 = g.k2();
    for (long i = 0; i < g.size(); ++i) ph[i] *= eps * eps * k2[i];
    return ifft(g, ph);
}

CVec gradient_apply(const Grid& g, const CVec& psi, int axis) {
    if (axis < 0 || axis >= g.d()) throw Error(ErrorKind::contract, "axis out of range");
    CVec ph = fft(g, psi);
    const int M = g.M();
    for (long i = 0; i < g.size(); ++i) {
        int m = g.multi_index(i)[axis];
        double k = (m == M / 2) ? 0.0 : g.k_axis()[m];
        ph[i] *= I * k;
    }
    return ifft(g, ph);
}

CMat spectral_function_matrix(const Grid& g, const std::function<double(double)>& f_of_k2) {
    const long n = g.size();
    Vec k2 = g.k2();
    CMat out(n, n);
    CVec e = CVec::Zero(n);
    for (long j = 0; j < n; ++j) {
        e.setZero();
        e[j] = 1.0;
        CVec eh = fft(g, e);
        for (long i = 0; i < n; ++i) eh[i] *= f_of_k2(k2[i]);
        out.col(j) = ifft(g, eh);
    }
    return 0.5 * (out + out.adjoint());
}

CMat kinetic_matrix(const Grid& g, double eps) {
    return spectral_function_matrix(g, [eps](double k2) { return eps * eps * k2; });
}

CMat gradient_matrix(const Grid& g, int axis) {
    const long n = g.size();
    CMat out(n, n);
    CVec e = CVec::Zero(n);
    for (long j = 0; j < n; ++j) {
        e.setZero();
        e[j] = 1.0;
        out.col(j) = gradient_apply(g, e, axis);
    }
    return 0.5 * (out - out.adjoint());
}

Vec convolve(const Grid& g, const Vec& v_disp, const Vec& rho) {
    if (v_disp.size() != g.size() || rho.size() != g.size())
        throw Error(ErrorKind::shape, "convolution operands do not match grid");
    CVec a = fft(g, v_disp.cast<cplx>());
    CVec b = fft(g, rho.cast<cplx>());
    CVec c = ifft(g, a.cwiseProduct(b));
    return c.real() * g.cell();
}

double integrate(const Grid& g, const Vec& f) {
    if (f.size() != g.size()) throw Error(ErrorKind::shape, "field length does not match grid");
    return f.sum() * g.cell();
}

double l2_norm(const Grid& g, const CVec& psi) {
    if (psi.size() != g.size()) throw Error(ErrorKind::shape, "field length does not match grid");
    return std::sqrt(psi.squaredNorm() * g.cell());
}

// ---------------------------------------------------------------- matrix norms

double hermiticity_defect(const CMat& A) {
    if (A.rows() != A.cols()) throw Error(ErrorKind::shape, "matrix must be square");
    return (A - A.adjoint()).cwiseAbs().maxCoeff();
}

void require_hermitian(const CMat& A, double tol) {
    double d = hermiticity_defect(A);
    double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if (d > tol * scale) throw Error(ErrorKind::contract, "matrix is not Hermitian", d);
}

Vec hermitian_eigenvalues(const CMat& A) {
    require_hermitian(A);
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (A + A.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double trace_norm(const CMat& A) { return hermitian_eigenvalues(A).cwiseAbs().sum(); }

double hs_norm(const CMat& A) {
    require_hermitian(A);
    return A.norm();
}

double operator_norm(const CMat& A) {
    if (A.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMat> svd(A);
    return svd.singularValues()(0);
}

double trace_norm_general(const CMat& A) {
    if (A.size() == 0) return 0.0;
    Eigen::BDCSVD<CMat> svd(A);
    double s = svd.singularValues().sum();
    if (std::isfinite(s)) return s;
    // divide-and-conquer occasionally breaks down on clustered spectra
    Eigen::JacobiSVD<CMat> jac(A);
    s = jac.singularValues().sum();
    if (!std::isfinite(s)) throw Error(ErrorKind::numerical, "singular value decomposition failed", s);
    return s;
}

CMat hermitian_function(const CMat& A, const std::function<double(double)>& f) {
    require_hermitian(A);
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (A + A.adjoint()));
    Vec ev = es.eigenvalues();
    for (long i = 0; i < ev.size(); ++i) ev[i] = f(ev[i]);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace qmf
