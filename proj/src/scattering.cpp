#include "qmf/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qmf {

namespace {

struct Segment {
    double a, b;
    int n;  // intervals, even
};

int even_at_least(double x, int lo) {
    int n = std::max(lo, static_cast<int>(std::ceil(x)));
    return n % 2 ? n + 1 : n;
}

// Segments whose ends are the breakpoints of V; half of the intervals go to
// the support so that rescaled potentials are resolved identically.
std::vector<Segment> build_mesh(const PotentialSpec& V, double R_V, double R_max, int mesh) {
    std::vector<double> cuts{0.0};
    for (double b : V.breakpoints())
        if (b > 0 && b < R_V) cuts.push_back(b);
    if (R_V > 0) cuts.push_back(R_V);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<Segment> segs;
    int n_in = R_V > 0 ? mesh / 2 : 0;
    int n_out = mesh - n_in;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double len = cuts[i + 1] - cuts[i];
        segs.push_back({cuts[i], cuts[i + 1], even_at_least(n_in * len / R_V, 2)});
    }
    segs.push_back({cuts.back(), R_max, even_at_least(n_out, 4)});
    return segs;
}

// V at a + c (b - a), kept strictly inside the open segment
double v_inside(const PotentialSpec& V, double a, double b, double c) {
    const double d = 1e-12;
    c = std::clamp(c, d, 1.0 - d);
    return V(a + c * (b - a));
}

}  // namespace

ScatteringSolution solve_zero_energy(const PotentialSpec& V, double R_max, int mesh) {
    if (mesh < 16) throw Error(ErrorKind::contract, "mesh too small");
    if (!(R_max > 0)) throw Error(ErrorKind::contract, "R_max must be positive");
    const double R_V = V.support();
    if (!(R_V < R_max))
        throw Error(ErrorKind::domain, "potential support reaches R_max", R_V);

    ScatteringSolution sol;
    sol.V = V;
    sol.R_V = R_V;
    sol.R_max = R_max;
    auto segs = build_mesh(V, R_V, R_max, mesh);

    sol.r.push_back(0.0);
    sol.u.push_back(0.0);
    sol.du.push_back(1.0);

    const bool hard = V.is_hard_sphere();
    for (size_t s = 0; s < segs.size(); ++s) {
        const auto& sg = segs[s];
        const double dr = (sg.b - sg.a) / sg.n;
        const bool inside_core = hard && s + 1 < segs.size();
        if (hard && s + 1 == segs.size()) {
            // restart at the sphere with u(R) = 0, u'(R) = 1
            sol.u.back() = 0.0;
            sol.du.back() = 1.0;
        }
        for (int i = 0; i < sg.n; ++i) {
            double u = sol.u.back(), du = sol.du.back();
            double r0 = sg.a + i * dr;
            if (inside_core) {
                sol.r.push_back(r0 + dr);
                sol.u.push_back(0.0);
                sol.du.push_back(0.0);
                continue;
            }
            double c0 = static_cast<double>(i) / sg.n, ch = (i + 0.5) / sg.n, c1 = (i + 1.0) / sg.n;
            double v0 = hard ? 0.0 : 0.5 * v_inside(V, sg.a, sg.b, c0);
            double vh = hard ? 0.0 : 0.5 * v_inside(V, sg.a, sg.b, ch);
            double v1 = hard ? 0.0 : 0.5 * v_inside(V, sg.a, sg.b, c1);
            double k1u = du, k1d = v0 * u;
            double k2u = du + 0.5 * dr * k1d, k2d = vh * (u + 0.5 * dr * k1u);
            double k3u = du + 0.5 * dr * k2d, k3d = vh * (u + 0.5 * dr * k2u);
            double k4u = du + dr * k3d, k4d = v1 * (u + dr * k3u);
            sol.r.push_back(r0 + dr);
            sol.u.push_back(u + dr / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u));
            sol.du.push_back(du + dr / 6.0 * (k1d + 2 * k2d + 2 * k3d + k4d));
        }
        sol.seg_end.push_back(sol.r.size() - 1);
    }

    const size_t n = sol.r.size();
    const double r_core = hard ? R_V : 0.0;
    for (size_t i = 1; i < n; ++i)
        if (sol.r[i] > r_core && sol.u[i] <= 0.0)
            throw Error(ErrorKind::unsupported, "u crosses zero: bound state or attractive core", sol.r[i]);

    // least squares u = alpha r + beta on the outer quarter beyond the support
    const double r_fit = std::max(0.75 * R_max, R_V);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (size_t i = 0; i < n; ++i) {
        if (sol.r[i] < r_fit) continue;
        sx += sol.r[i];
        sy += sol.u[i];
        sxx += sol.r[i] * sol.r[i];
        sxy += sol.r[i] * sol.u[i];
        ++m;
    }
    if (m < 3) throw Error(ErrorKind::domain, "fit window beyond the support has fewer than 3 points");
    double alpha = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    double beta = (sy - alpha * sx) / m;
    if (!(alpha > 0)) throw Error(ErrorKind::unsupported, "non-positive asymptotic slope");
    sol.a0 = -beta / alpha;

    sol.f.resize(n);
    double ss = 0;
    for (size_t i = 0; i < n; ++i) {
        sol.u[i] /= alpha;
        sol.du[i] /= alpha;
        sol.f[i] = sol.r[i] > 0 ? sol.u[i] / sol.r[i] : sol.du[i];
        if (sol.r[i] >= r_fit) {
            double e = sol.u[i] - (sol.r[i] - sol.a0);
            ss += e * e;
        }
    }
    if (hard) sol.f[0] = 0.0;
    sol.fit_residual = std::sqrt(ss / m);
    sol.rho = hard ? std::numeric_limits<double>::infinity() : smallness_parameter(V);
    return sol;
}

double ScatteringSolution::f_at(double rr) const {
    if (rr < 0) rr = -rr;
    if (rr >= R_max) return 1.0 - a0 / rr;
    if (V.is_hard_sphere() && rr < R_V) return 0.0;
    if (rr <= r[1]) {
        if (rr == 0.0) return f[0];
        // linear extrapolation of u through the first node
        return u[1] / r[1];
    }
    auto it = std::upper_bound(r.begin(), r.end(), rr);
    size_t i = static_cast<size_t>(it - r.begin());
    if (i >= r.size()) i = r.size() - 1;
    double r0 = r[i - 1], r1 = r[i], h = r1 - r0;
    double t = (rr - r0) / h;
    double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
    double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
    double uu = h00 * u[i - 1] + h10 * h * du[i - 1] + h01 * u[i] + h11 * h * du[i];
    return uu / rr;
}

double scattering_length_integral(const ScatteringSolution& sol, const PotentialSpec& V) {
    if (V.kind != sol.V.kind || V.prefactor != sol.V.prefactor || V.dilation != sol.V.dilation ||
        V.amplitude != sol.V.amplitude || V.range != sol.V.range)
        throw Error(ErrorKind::contract, "solution was produced from a different potential");
    if (V.is_hard_sphere()) {
        // int r u'' dr with u'' = delta(r - R) u'(R+)
        return sol.R_V;
    }
    // a0 = (1/2) int_0^inf r V(r) u(r) dr; Simpson on each segment of the mesh
    double total = 0.0;
    const auto& r = sol.r;
    size_t start = 0;
    for (size_t end : sol.seg_end) {
        size_t len = end - start;
        double a = r[start], b = r[end];
        double h = (b - a) / len;
        auto g = [&](size_t i) {
            double c = static_cast<double>(i - start) / len;
            return r[i] * v_inside(V, a, b, c) * sol.u[i];
        };
        double s = g(start) + g(end);
        for (size_t i = start + 1; i < end; ++i) s += ((i - start) % 2 ? 4.0 : 2.0) * g(i);
        total += s * h / 3.0;
        start = end;
    }
    return 0.5 * total;
}

double smallness_parameter(const PotentialSpec& V, int mesh) {
    if (V.kind == PotentialSpec::Kind::zero) return 0.0;
    const double R = V.support();
    if (!std::isfinite(R)) throw Error(ErrorKind::domain, "int r V(r) dr diverges for a non-compact potential");
    std::vector<double> cuts{0.0};
    for (double b : V.breakpoints())
        if (b > 0 && b < R) cuts.push_back(b);
    cuts.push_back(R);
    std::sort(cuts.begin(), cuts.end());
    double sup = 0.0, integral = 0.0;
    for (size_t s = 0; s + 1 < cuts.size(); ++s) {
        double a = cuts[s], b = cuts[s + 1];
        int n = even_at_least(mesh * (b - a) / R, 2);
        double h = (b - a) / n;
        double acc = 0.0;
        for (int i = 0; i <= n; ++i) {
            double c = static_cast<double>(i) / n;
            double r = a + i * h;
            // one-sided values at the ends so jumps sit on segment boundaries
            double v = v_inside(V, a, b, c);
            // the sup uses the closed-interval value V(r) as well
            double vr = V(r);
            sup = std::max({sup, r * r * v, r * r * vr});
            double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * r * v;
        }
        integral += acc * h / 3.0;
    }
    return sup + integral;
}

FpropReport verify_fprop_bounds(const ScatteringSolution& sol) {
    FpropReport rep;
    rep.f_max = -std::numeric_limits<double>::infinity();
    double max_deficit = 0.0, max_grad = 0.0;
    for (size_t i = 0; i < sol.r.size(); ++i) {
        rep.f_max = std::max(rep.f_max, sol.f[i]);
        max_deficit = std::max(max_deficit, 1.0 - sol.f[i]);
        if (sol.r[i] > 0) max_grad = std::max(max_grad, std::abs(sol.du[i] - sol.f[i]));
        if (i > 0 && sol.f[i] < sol.f[i - 1] - 1e-12) rep.monotone = false;
    }
    if (sol.rho > 0 && std::isfinite(sol.rho)) {
        rep.c_lower = max_deficit / sol.rho;
        rep.c_grad = max_grad / sol.rho;
    } else if (sol.rho == 0) {
        rep.c_lower = max_deficit > 1e-10 ? std::numeric_limits<double>::infinity() : 0.0;
        rep.c_grad = max_grad > 1e-10 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    rep.pass = std::isfinite(rep.c_lower) && std::isfinite(rep.c_grad) && rep.f_max <= 1.0 + 1e-10;
    return rep;
}

}  // namespace qmf
