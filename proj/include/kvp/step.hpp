#pragma once

#include <iostream>
#include <vector>

#include "kvp/constitutive.hpp"
#include "kvp/fem.hpp"
#include "kvp/monitor.hpp"
#include "kvp/state.hpp"

namespace kvp {

/// One time step of the projection scheme: trial solve for (v_n, sigma*_n),
/// then the cellwise return map. The step matrix and its preconditioner are
/// assembled once per dt (constant coefficients).
class Stepper {
public:
    Stepper(const Mesh& mesh, const DofMap& dm, const MaterialParams& params, double dt,
            double cg_tol = 1e-12, int cg_max_iter = 20000)
        : mesh_(&mesh), dm_(&dm), params_(params), dt_(dt), cg_tol_(cg_tol),
          cg_max_iter_(cg_max_iter), matrix_(assemble_step_matrix(mesh, dm, params, dt)),
          mass_(assemble_mass(mesh, dm)) {
        params.validate(2);
        if (dt > 1.0)
            std::cerr << "warning: dt = " << dt
                      << " > 1; the stability bounds assume dt <= 1\n";
    }

    double dt() const { return dt_; }
    const SparseSpd& mass() const { return mass_; }
    const SparseSpd& matrix() const { return matrix_; }
    const MaterialParams& params() const { return params_; }

    /// Solves the first two equations of the step: v_n on the free dofs and
    /// the trial stress sigma*_n = sigma_{n-1} + dt C(E(v_n) + h_n).
    std::pair<std::vector<double>, ElementField> trial_solve(const State& prev,
                                                             const SlabData& data) const {
        const std::vector<double> rhs = assemble_rhs(*mesh_, *dm_, params_, dt_, mass_,
                                                     prev.v, prev.sigma, data.load, data.h);
        const std::vector<double> vf = cg_solve(matrix_, rhs, cg_tol_, cg_max_iter_);

        std::vector<double> v(dm_->num_dofs(), 0.0);
        for (int d = 0; d < dm_->num_dofs(); ++d)
            if (dm_->free_index[d] >= 0) v[d] = vf[dm_->free_index[d]];

        const ElementField ev = strain(*mesh_, v);
        ElementField sigma_star(mesh_->num_cells(), SymTensor(2));
        for (int c = 0; c < mesh_->num_cells(); ++c)
            sigma_star[c] = prev.sigma[c] + dt_ * apply_C(params_, ev[c] + data.h[c]);
        return {std::move(v), std::move(sigma_star)};
    }

    /// Full step; restores all State invariants and optionally records an
    /// energy ledger row.
    State advance(const State& prev, const SlabData& data,
                  EnergyLedger* ledger = nullptr) const {
        auto [v, sigma_star] = trial_solve(prev, data);

        State next = prev;
        next.t = prev.t + dt_;
        next.v = std::move(v);
        next.sigma_star = std::move(sigma_star);
        next.g = data.g_new;

        for (int c = 0; c < mesh_->num_cells(); ++c) {
            const ReturnMapResult rm = return_map(params_, dt_, next.sigma_star[c],
                                                  prev.alpha[c], YieldBound{data.g_new[c]});
            next.sigma[c] = rm.sigma;
            next.alpha[c] = rm.alpha;
            next.xi[c] = rm.xi;
        }

        check_step_invariants(prev, next);
        if (ledger)
            ledger->add(compute_row(*mesh_, params_, mass_, dt_, prev, next,
                                    load_pairing(*mesh_, data.load, next.v),
                                    field_inner(*mesh_, data.h, next.sigma_star)));
        return next;
    }

private:
    void check_step_invariants(const State& prev, const State& next) const {
        for (int c = 0; c < mesh_->num_cells(); ++c) {
            const double g = next.g[c];
            const double nd = frob_norm(deviator(next.sigma[c] - next.alpha[c]));
            if (!std::isinf(g) && nd > g + 1e-10 * (1.0 + g))
                throw InvariantViolation(
                    "constraint violated at t = " + std::to_string(next.t) + ", cell " +
                    std::to_string(c) + ": |sigma^D - alpha^D| = " + std::to_string(nd) +
                    " > g = " + std::to_string(g));
            const double trs = next.sigma[c].trace(), trss = next.sigma_star[c].trace();
            const double tra = next.alpha[c].trace(), trap = prev.alpha[c].trace();
            const double scale_s = 1.0 + std::abs(trss);
            const double scale_a = 1.0 + std::abs(trap);
            if (std::abs(trs - trss) > 1e-13 * scale_s ||
                std::abs(tra - trap) > 1e-13 * scale_a)
                throw InvariantViolation("trace conservation violated at t = " +
                                         std::to_string(next.t) + ", cell " +
                                         std::to_string(c));
        }
    }

    const Mesh* mesh_;
    const DofMap* dm_;
    MaterialParams params_;
    double dt_;
    double cg_tol_;
    int cg_max_iter_;
    SparseSpd matrix_;
    SparseSpd mass_;
};

} // namespace kvp
