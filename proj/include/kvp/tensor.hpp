#pragma once

#include <array>
#include <cmath>
#include <cstdlib>

#include "kvp/errors.hpp"

namespace kvp {

/// Symmetric d x d matrix (d in {2,3}) storing the packed upper triangle.
/// Component order: xx, yy [, zz], xy [, yz, xz].
class SymTensor {
public:
    explicit SymTensor(int dim = 2) : dim_(dim), c_{} {
        if (dim != 2 && dim != 3) throw BadInput("SymTensor: dim must be 2 or 3");
    }

    static SymTensor zero(int dim) { return SymTensor(dim); }

    static SymTensor identity(int dim) {
        SymTensor t(dim);
        for (int i = 0; i < dim; ++i) t(i, i) = 1.0;
        return t;
    }

    int dim() const { return dim_; }
    int ncoeff() const { return dim_ * (dim_ + 1) / 2; }

    double& operator()(int i, int j) { return c_[idx(i, j)]; }
    double operator()(int i, int j) const { return c_[idx(i, j)]; }

    double& coeff(int k) { return c_[k]; }
    double coeff(int k) const { return c_[k]; }

    double trace() const {
        double s = 0.0;
        for (int i = 0; i < dim_; ++i) s += c_[i];
        return s;
    }

    SymTensor& operator+=(const SymTensor& o) {
        for (int k = 0; k < ncoeff(); ++k) c_[k] += o.c_[k];
        return *this;
    }
    SymTensor& operator-=(const SymTensor& o) {
        for (int k = 0; k < ncoeff(); ++k) c_[k] -= o.c_[k];
        return *this;
    }
    SymTensor& operator*=(double s) {
        for (int k = 0; k < ncoeff(); ++k) c_[k] *= s;
        return *this;
    }

    friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
    friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
    friend SymTensor operator*(SymTensor a, double s) { return a *= s; }
    friend SymTensor operator*(double s, SymTensor a) { return a *= s; }
    friend SymTensor operator-(SymTensor a) { return a *= -1.0; }

    bool operator==(const SymTensor& o) const {
        if (dim_ != o.dim_) return false;
        for (int k = 0; k < ncoeff(); ++k)
            if (c_[k] != o.c_[k]) return false;
        return true;
    }

private:
    int idx(int i, int j) const {
        if (i == j) return i;
        if (i > j) std::swap(i, j);
        if (dim_ == 2) return 2;       // xy
        if (i == 0 && j == 1) return 3; // xy
        if (i == 1 && j == 2) return 4; // yz
        return 5;                       // xz
    }

    int dim_;
    std::array<double, 6> c_;
};

/// Frobenius inner product A:B (off-diagonal entries count twice).
inline double ddot(const SymTensor& a, const SymTensor& b) {
    const int d = a.dim();
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += a.coeff(i) * b.coeff(i);
    for (int k = d; k < a.ncoeff(); ++k) s += 2.0 * a.coeff(k) * b.coeff(k);
    return s;
}

inline double frob_norm(const SymTensor& a) { return std::sqrt(ddot(a, a)); }

/// A - (tr A / d) I, the trace-free part.
inline SymTensor deviator(const SymTensor& a) {
    SymTensor r = a;
    const double m = a.trace() / a.dim();
    for (int i = 0; i < a.dim(); ++i) r(i, i) -= m;
    return r;
}

/// Homogeneous isotropic material data; rho = 1 throughout.
struct MaterialParams {
    double E = 1.0;      // Young's modulus, > 0
    double nu = 0.0;     // Poisson's ratio, -1 < nu < 1/(d-1)
    double eta = 1.0;    // Kelvin-Voigt viscosity, > 0
    double a = 1.0;      // kinematic hardening coefficient, > 0

    double b() const { return a * (1.0 + nu) / E; }

    void validate(int dim) const {
        if (E <= 0.0) throw BadInput("MaterialParams: E must be positive");
        if (!(nu > -1.0 && nu < 1.0 / (dim - 1)))
            throw BadInput("MaterialParams: nu out of range (-1, 1/(d-1))");
        if (eta <= 0.0) throw BadInput("MaterialParams: eta must be positive");
        if (a <= 0.0) throw BadInput("MaterialParams: hardening a must be positive");
    }
};

/// Compliance: S tau = ((1+nu)/E) tau - (nu/E)(tr tau) I.
inline SymTensor apply_S(const MaterialParams& p, const SymTensor& tau) {
    SymTensor r = tau * ((1.0 + p.nu) / p.E);
    const double m = (p.nu / p.E) * tau.trace();
    for (int i = 0; i < tau.dim(); ++i) r(i, i) -= m;
    return r;
}

/// Stiffness, the inverse of S:
/// C eps = (E/(1+nu)) (eps + nu/(1-(d-1)nu) (tr eps) I).
inline SymTensor apply_C(const MaterialParams& p, const SymTensor& eps) {
    const int d = eps.dim();
    const double k = p.E / (1.0 + p.nu);
    const double m = p.nu / (1.0 - (d - 1) * p.nu) * eps.trace();
    SymTensor r = eps;
    for (int i = 0; i < d; ++i) r(i, i) += m;
    return r * k;
}

inline double norm_S_sq(const MaterialParams& p, const SymTensor& tau) {
    return ddot(apply_S(p, tau), tau);
}

inline double norm_C_sq(const MaterialParams& p, const SymTensor& eps) {
    return ddot(apply_C(p, eps), eps);
}

/// Two-sided equivalence constant between |.| and the S/C energy norms.
inline double equivalence_constant(const MaterialParams& p, int dim) {
    const double lo = (1.0 + p.nu) / p.E;
    const double hi = (1.0 - (dim - 1) * p.nu) / p.E;
    return std::max(std::max(lo, hi), std::max(1.0 / lo, 1.0 / hi));
}

} // namespace kvp
