// operators.hpp — charge/Fock operator construction, tensor embedding and
// dense Hermitian eigensolution

#pragma once

#include <complex>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "djt/errors.hpp"

namespace djt {

using Complex = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;

// Charge states n in [-cutoff, cutoff]; dimension 2*cutoff + 1.
struct ChargeBasis {
    int cutoff = 15;
    int dim() const { return 2 * cutoff + 1; }
};

// Fock states |0> ... |cutoff-1>.
struct FockBasis {
    int cutoff = 8;
    int dim() const { return cutoff; }
};

struct OperatorMatrix {
    MatrixXc mat;
    bool hermitian = false;

    Eigen::Index dim() const { return mat.rows(); }
};

inline double hermiticity_defect(const MatrixXc& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline OperatorMatrix make_hermitian_operator(MatrixXc m) {
    OperatorMatrix op{std::move(m), true};
    if (op.mat.rows() != op.mat.cols())
        throw ConfigError("operator matrix must be square");
    if (hermiticity_defect(op.mat) >= 1e-12)
        throw NumericError("operator violates the Hermiticity contract");
    return op;
}

inline OperatorMatrix identity_op(Eigen::Index dim) {
    return {MatrixXc::Identity(dim, dim), true};
}

// n = diag(-cutoff ... cutoff).
inline OperatorMatrix charge_op(ChargeBasis basis) {
    if (basis.cutoff < 1) throw ConfigError("charge cutoff must be >= 1");
    const int d = basis.dim();
    MatrixXc m = MatrixXc::Zero(d, d);
    for (int i = 0; i < d; ++i) m(i, i) = double(i - basis.cutoff);
    return {std::move(m), true};
}

// cos(k*phi) = (shift by +k + shift by -k)/2 in the charge index.
inline OperatorMatrix cos_k_phi_op(ChargeBasis basis, int k) {
    if (k <= 0) throw ConfigError("harmonic index k must be positive");
    const int d = basis.dim();
    if (k >= d)
        throw ConfigError("harmonic index k=" + std::to_string(k) +
                          " exceeds charge basis span (need cutoff >= " +
                          std::to_string((k + 1) / 2) + ")");
    MatrixXc m = MatrixXc::Zero(d, d);
    for (int i = 0; i + k < d; ++i) {
        m(i, i + k) = 0.5;
        m(i + k, i) = 0.5;
    }
    return {std::move(m), true};
}

struct ResonatorOps {
    OperatorMatrix n;   // charge quadrature, i*n_zp*(adag - a)
    OperatorMatrix phi; // phase quadrature, phi_zp*(a + adag)
    double f = 0.0;     // oscillator frequency sqrt(8*ECr*EL) [GHz]
};

// Quadratures scaled so 4*ECr*n^2 + (EL/2)*phi^2 = f*(adag a + 1/2).
inline ResonatorOps resonator_ops(FockBasis basis, double ecr, double el) {
    if (basis.cutoff < 2) throw ConfigError("Fock cutoff must be >= 2");
    if (!(ecr > 0.0) || !(el > 0.0))
        throw ConfigError("resonator energies must be positive");
    const int d = basis.dim();
    const double n_zp = std::pow(el / (32.0 * ecr), 0.25);
    const double phi_zp = std::pow(2.0 * ecr / el, 0.25);
    MatrixXc a = MatrixXc::Zero(d, d);
    for (int i = 0; i + 1 < d; ++i) a(i, i + 1) = std::sqrt(double(i + 1));
    const MatrixXc adag = a.adjoint();
    ResonatorOps ops;
    ops.n = {Complex(0.0, 1.0) * n_zp * (adag - a), true};
    ops.phi = {phi_zp * (a + adag), true};
    ops.f = std::sqrt(8.0 * ecr * el);
    return ops;
}

inline MatrixXc kron(const MatrixXc& a, const MatrixXc& b) {
    MatrixXc out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// Labeled tensor-product space; factor 0 is the slowest index.
class TensorSpace {
public:
    explicit TensorSpace(std::vector<Eigen::Index> dims) : dims_(std::move(dims)) {
        for (auto d : dims_)
            if (d < 1) throw ConfigError("tensor factor dimension must be >= 1");
    }

    Eigen::Index factors() const { return Eigen::Index(dims_.size()); }
    Eigen::Index factor_dim(std::size_t i) const { return dims_.at(i); }
    Eigen::Index dim() const {
        Eigen::Index d = 1;
        for (auto x : dims_) d *= x;
        return d;
    }

    // Kronecker embedding of the given per-factor operators, identity on
    // unlisted factors.
    OperatorMatrix embed(const std::map<std::size_t, const OperatorMatrix*>& ops) const {
        for (const auto& [idx, op] : ops) {
            if (idx >= dims_.size()) throw ConfigError("tensor factor index out of range");
            if (op->dim() != dims_[idx])
                throw ConfigError("operator dimension does not match tensor factor");
        }
        MatrixXc acc = MatrixXc::Identity(1, 1);
        bool herm = true;
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            auto it = ops.find(i);
            if (it == ops.end()) {
                acc = kron(acc, MatrixXc::Identity(dims_[i], dims_[i]));
            } else {
                acc = kron(acc, it->second->mat);
                herm = herm && it->second->hermitian;
            }
        }
        return {std::move(acc), herm};
    }

    OperatorMatrix embed(std::size_t factor, const OperatorMatrix& op) const {
        return embed({{factor, &op}});
    }

private:
    std::vector<Eigen::Index> dims_;
};

struct EigenSolution {
    Eigen::VectorXd values; // ascending
    MatrixXc vectors;       // orthonormal columns matching values
};

// Lowest num_levels eigenpairs of a Hermitian matrix. Real-symmetric input is
// routed through the real solver, which matters for the larger product spaces.
inline EigenSolution eigensolve(const OperatorMatrix& h, Eigen::Index num_levels) {
    if (h.mat.rows() != h.mat.cols()) throw ConfigError("eigensolve: matrix must be square");
    const double scale = std::max(h.mat.cwiseAbs().maxCoeff(), 1.0);
    if (hermiticity_defect(h.mat) > 1e-12 * scale)
        throw ConfigError("eigensolve: matrix is not Hermitian");
    if (num_levels < 1 || num_levels > h.dim())
        throw ConfigError("eigensolve: invalid number of requested levels");

    EigenSolution sol;
    if (h.mat.imag().cwiseAbs().maxCoeff() < 1e-14 * scale) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.mat.real());
        if (es.info() != Eigen::Success) throw NumericError("eigensolve failed to converge");
        sol.values = es.eigenvalues().head(num_levels);
        sol.vectors = es.eigenvectors().leftCols(num_levels).cast<Complex>();
    } else {
        Eigen::SelfAdjointEigenSolver<MatrixXc> es(h.mat);
        if (es.info() != Eigen::Success) throw NumericError("eigensolve failed to converge");
        sol.values = es.eigenvalues().head(num_levels);
        sol.vectors = es.eigenvectors().leftCols(num_levels);
    }
    return sol;
}

} // namespace djt
