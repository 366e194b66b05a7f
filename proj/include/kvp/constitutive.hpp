#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "kvp/tensor.hpp"

namespace kvp {

/// Radius of the deviatoric von Mises ball. R = 0 is admitted;
/// R = infinity acts as an "unbounded" sentinel (projection is the identity).
struct YieldBound {
    double R = 0.0;

    static YieldBound unbounded() {
        return {std::numeric_limits<double>::infinity()};
    }
    bool is_unbounded() const { return std::isinf(R); }
};

/// Pointwise projection onto { A : |A^D| <= R }. The spherical part is kept,
/// the deviator is radially scaled back when it exceeds R.
inline SymTensor project(YieldBound yb, const SymTensor& a) {
    const SymTensor dev = deviator(a);
    const double nd = frob_norm(dev);
    if (nd <= yb.R) return a;
    // nd > R >= 0, so the ray dev/nd is well defined
    SymTensor r = dev * (yb.R / nd);
    const double m = a.trace() / a.dim();
    for (int i = 0; i < a.dim(); ++i) r(i, i) += m;
    return r;
}

struct ReturnMapResult {
    SymTensor sigma;  // stress after projection
    SymTensor alpha;  // updated backstress
    SymTensor xi;     // plastic strain rate over the step
    bool plastic = false;
};

/// Coupled stress/backstress update for one time step.
/// With X = sigma_trial - alpha_old and D = X - Pi_R(X):
///   alpha = alpha_old + b/(b+1) D,   sigma = sigma_trial - 1/(b+1) D,
///   xi = S(sigma_trial - sigma)/dt.
/// Traces of sigma_trial and alpha_old are preserved. The 1/(b+1) form keeps
/// the update well conditioned as the hardening coefficient a -> 0.
inline ReturnMapResult return_map(const MaterialParams& p, double dt,
                                  const SymTensor& sigma_trial,
                                  const SymTensor& alpha_old, YieldBound yb) {
    const SymTensor x = sigma_trial - alpha_old;
    const SymTensor d = x - project(yb, x);
    const double b = p.b();

    ReturnMapResult res{SymTensor(sigma_trial.dim()), SymTensor(sigma_trial.dim()),
                        SymTensor(sigma_trial.dim()), false};
    res.alpha = alpha_old + d * (b / (b + 1.0));
    res.sigma = sigma_trial - d * (1.0 / (b + 1.0));
    res.xi = apply_S(p, sigma_trial - res.sigma) * (1.0 / dt);
    res.plastic = frob_norm(deviator(x)) > yb.R;
    return res;
}

/// Max of (xi, tau - (sigma - alpha)) over the sampled feasible tau.
/// Nonpositive (up to round-off) when the update is a valid projection.
inline double check_vi(const ReturnMapResult& res, YieldBound yb,
                       std::span<const SymTensor> samples) {
    if (samples.empty()) return 0.0;
    double worst = -std::numeric_limits<double>::infinity();
    const SymTensor center = res.sigma - res.alpha;
    for (const SymTensor& tau : samples) {
        const double nd = frob_norm(deviator(tau));
        if (nd > yb.R * (1.0 + 1e-12) + 1e-12)
            throw BadInput("check_vi: sample violates |tau^D| <= R (|tau^D| = " +
                           std::to_string(nd) + ", R = " + std::to_string(yb.R) + ")");
        worst = std::max(worst, ddot(res.xi, tau - center));
    }
    return worst;
}

} // namespace kvp
