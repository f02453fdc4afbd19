#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace qmf {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

constexpr double pi = 3.14159265358979323846;
constexpr cplx I{0.0, 1.0};

enum class ErrorKind {
    shape,        // size mismatch
    contract,     // precondition or invariant violated
    domain,       // input outside the supported domain
    unsupported,  // e.g. bound states in scattering
    refused,      // cost or resolution guard
    truncation,   // Fock-space leakage
    numerical,    // divergence, non-convergence
    missing_input
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg, double value = 0.0)
        : std::runtime_error(msg), kind_(kind), value_(value) {}
    ErrorKind kind() const { return kind_; }
    // measured quantity that triggered the error (leakage, residual, bound)
    double value() const { return value_; }

private:
    ErrorKind kind_;
    double value_;
};

// exit code convention of the command line tool
int exit_code(ErrorKind k);

}  // namespace qmf
