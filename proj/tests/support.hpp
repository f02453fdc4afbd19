#pragma once

#include <random>

#include "qmf/core.hpp"

namespace qt {

using namespace qmf;

inline std::mt19937_64& rng() {
    static std::mt19937_64 r(20240611);
    return r;
}

inline double gauss() {
    static std::normal_distribution<double> n;
    return n(rng());
}

inline CVec random_cvec(long n) {
    CVec v(n);
    for (long i = 0; i < n; ++i) v[i] = cplx(gauss(), gauss());
    return v;
}

inline CMat random_cmat(long r, long c) {
    CMat m(r, c);
    for (long i = 0; i < m.size(); ++i) m.data()[i] = cplx(gauss(), gauss());
    return m;
}

inline CMat random_hermitian(long n) {
    CMat a = random_cmat(n, n);
    return 0.5 * (a + a.adjoint());
}

inline CMat random_density(long n, long rank) {
    CMat a = random_cmat(n, rank);
    CMat g = a * a.adjoint();
    return g / g.trace().real();
}

inline double max_abs(const CMat& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace qt
