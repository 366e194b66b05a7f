#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "kvp/errors.hpp"

namespace kvp {

/// Symmetric sparse matrix in compressed-row form. Assembled once from
/// accumulated triplets, immutable afterwards.
class SparseSpd {
public:
    explicit SparseSpd(int n = 0) : n_(n) {}

    int size() const { return n_; }

    void add(int i, int j, double v) { coo_[{i, j}] += v; }

    void finalize() {
        row_ptr_.assign(n_ + 1, 0);
        col_.clear();
        val_.clear();
        col_.reserve(coo_.size());
        val_.reserve(coo_.size());
        for (const auto& [ij, v] : coo_) row_ptr_[ij.first + 1]++;
        for (int i = 0; i < n_; ++i) row_ptr_[i + 1] += row_ptr_[i];
        for (const auto& [ij, v] : coo_) {
            col_.push_back(ij.second);
            val_.push_back(v);
        }
        coo_.clear();
        finalized_ = true;
    }

    std::vector<double> multiply(const std::vector<double>& x) const {
        std::vector<double> y(n_, 0.0);
        for (int i = 0; i < n_; ++i)
            for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                y[i] += val_[k] * x[col_[k]];
        return y;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(n_, 0.0);
        for (int i = 0; i < n_; ++i)
            for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
                if (col_[k] == i) d[i] = val_[k];
        return d;
    }

    bool finalized() const { return finalized_; }

private:
    int n_;
    bool finalized_ = false;
    std::map<std::pair<int, int>, double> coo_;
    std::vector<int> row_ptr_;
    std::vector<int> col_;
    std::vector<double> val_;
};

inline double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double vec_norm(const std::vector<double>& a) { return std::sqrt(vec_dot(a, a)); }

/// Jacobi-preconditioned conjugate gradients. Stops when
/// ||b - Ax|| <= tol ||b||; throws SolverFailure otherwise.
inline std::vector<double> cg_solve(const SparseSpd& A, const std::vector<double>& rhs,
                                    double tol = 1e-10, int max_iter = 10000) {
    const int n = A.size();
    std::vector<double> x(n, 0.0);
    const double bnorm = vec_norm(rhs);
    if (bnorm == 0.0) return x;

    std::vector<double> invdiag = A.diagonal();
    for (double& d : invdiag) d = (d != 0.0) ? 1.0 / d : 1.0;

    std::vector<double> r = rhs;             // r = b - A*0
    std::vector<double> z(n), p(n), Ap(n);
    for (int i = 0; i < n; ++i) z[i] = invdiag[i] * r[i];
    p = z;
    double rz = vec_dot(r, z);

    for (int it = 0; it < max_iter; ++it) {
        if (vec_norm(r) <= tol * bnorm) return x;
        Ap = A.multiply(p);
        const double pAp = vec_dot(p, Ap);
        if (pAp <= 0.0)
            throw SolverFailure("cg_solve: matrix not positive definite", vec_norm(r));
        const double alpha = rz / pAp;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
        }
        for (int i = 0; i < n; ++i) z[i] = invdiag[i] * r[i];
        const double rz_new = vec_dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    const double res = vec_norm(r);
    if (res <= tol * bnorm) return x;
    throw SolverFailure("cg_solve: no convergence after " + std::to_string(max_iter) +
                            " iterations (residual " + std::to_string(res) + ")",
                        res);
}

} // namespace kvp
