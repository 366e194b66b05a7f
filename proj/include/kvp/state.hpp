#pragma once

#include <string>
#include <vector>

#include "kvp/fem.hpp"

namespace kvp {

/// All unknowns at one time level. v spans every dof (constrained entries
/// zero for n >= 1); the tensor fields are cellwise constant.
struct State {
    double t = 0.0;
    std::vector<double> v;
    ElementField sigma;
    ElementField sigma_star;
    ElementField alpha;
    ElementField xi;
    ScalarField g;     // yield bound at this time level, per cell
};

/// Data for one time slab (t_{n-1}, t_n]: slab-averaged load and h,
/// and the yield bound sampled at t_n.
struct SlabData {
    LoadData load;
    ElementField h;
    ScalarField g_new;
};

inline State make_zero_state(const Mesh& mesh, const DofMap& dm) {
    State s;
    s.v.assign(dm.num_dofs(), 0.0);
    s.sigma.assign(mesh.num_cells(), SymTensor(2));
    s.sigma_star.assign(mesh.num_cells(), SymTensor(2));
    s.alpha.assign(mesh.num_cells(), SymTensor(2));
    s.xi.assign(mesh.num_cells(), SymTensor(2));
    s.g.assign(mesh.num_cells(), 0.0);
    return s;
}

/// Initial data must satisfy |sigma0^D - alpha0^D| <= g(0) on every cell.
inline void check_initial_feasibility(const Mesh& mesh, const State& s0) {
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const double nd = frob_norm(deviator(s0.sigma[c] - s0.alpha[c]));
        if (nd > s0.g[c] + 1e-10 * (1.0 + s0.g[c]))
            throw BadInput("initial stress infeasible on cell " + std::to_string(c) +
                           ": |sigma0^D - alpha0^D| = " + std::to_string(nd) +
                           " > g = " + std::to_string(s0.g[c]));
    }
}

} // namespace kvp
