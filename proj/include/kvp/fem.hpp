#pragma once

#include <vector>

#include "kvp/mesh.hpp"
#include "kvp/sparse.hpp"
#include "kvp/tensor.hpp"

namespace kvp {

/// One SymTensor per cell; stress, trial stress, backstress, and plastic
/// strain rate all live here (cellwise constant, matching E(P1)).
using ElementField = std::vector<SymTensor>;
using ScalarField = std::vector<double>;

/// Velocity dofs: two components per vertex, interleaved (2v, 2v+1).
/// Dofs of Gamma1 vertices are constrained to zero.
struct DofMap {
    int num_vertices = 0;
    std::vector<bool> constrained;   // per dof
    std::vector<int> free_index;     // per dof; -1 if constrained
    int num_free = 0;

    int dof(int vertex, int comp) const { return 2 * vertex + comp; }
    int num_dofs() const { return 2 * num_vertices; }
};

inline DofMap make_dofmap(const Mesh& mesh) {
    DofMap dm;
    dm.num_vertices = mesh.num_vertices();
    std::vector<bool> on_gamma1(mesh.num_vertices(), false);
    for (const auto& e : mesh.boundary)
        if (e.tag == BoundaryTag::gamma1) {
            on_gamma1[e.a] = true;
            on_gamma1[e.b] = true;
        }
    dm.constrained.assign(dm.num_dofs(), false);
    dm.free_index.assign(dm.num_dofs(), -1);
    for (int v = 0; v < dm.num_vertices; ++v)
        for (int c = 0; c < 2; ++c) {
            const int d = dm.dof(v, c);
            if (on_gamma1[v]) {
                dm.constrained[d] = true;
            } else {
                dm.free_index[d] = dm.num_free++;
            }
        }
    return dm;
}

namespace detail {

/// Barycentric gradients grad(lambda_i) = (gx_i, gy_i) of a P1 triangle.
inline std::array<Vec2, 3> cell_gradients(const Mesh& mesh, int c) {
    const auto& k = mesh.cells[c];
    const Vec2 p0 = mesh.vertices[k[0]], p1 = mesh.vertices[k[1]], p2 = mesh.vertices[k[2]];
    const double inv2A = 1.0 / (2.0 * mesh.area[c]);
    return {Vec2{(p1.y - p2.y) * inv2A, (p2.x - p1.x) * inv2A},
            Vec2{(p2.y - p0.y) * inv2A, (p0.x - p2.x) * inv2A},
            Vec2{(p0.y - p1.y) * inv2A, (p1.x - p0.x) * inv2A}};
}

} // namespace detail

/// Cellwise-constant symmetric gradient of a P1 nodal field
/// (v indexed over all dofs, including constrained ones).
inline ElementField strain(const Mesh& mesh, const std::vector<double>& v) {
    ElementField e(mesh.num_cells(), SymTensor(2));
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto g = detail::cell_gradients(mesh, c);
        SymTensor s(2);
        for (int i = 0; i < 3; ++i) {
            const int vtx = mesh.cells[c][i];
            const double vx = v[2 * vtx], vy = v[2 * vtx + 1];
            s(0, 0) += vx * g[i].x;
            s(1, 1) += vy * g[i].y;
            s(0, 1) += 0.5 * (vx * g[i].y + vy * g[i].x);
        }
        e[c] = s;
    }
    return e;
}

/// Consistent P1 mass matrix over all dofs (component-decoupled blocks
/// (A/12)[[2,1,1],[1,2,1],[1,1,2]] per cell).
inline SparseSpd assemble_mass(const Mesh& mesh, const DofMap& dm) {
    SparseSpd M(dm.num_dofs());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const double w = mesh.area[c] / 12.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double mij = w * (i == j ? 2.0 : 1.0);
                for (int comp = 0; comp < 2; ++comp)
                    M.add(dm.dof(mesh.cells[c][i], comp), dm.dof(mesh.cells[c][j], comp),
                          mij);
            }
    }
    M.finalize();
    return M;
}

/// Discrete inner product (u, v)_H on the velocity space.
inline double mass_inner(const SparseSpd& M, const std::vector<double>& u,
                         const std::vector<double>& v) {
    return vec_dot(u, M.multiply(v));
}

namespace detail {

/// Adds w * (D E(u), E(phi)) cell contributions for a constitutive map D
/// given in Voigt form acting on (exx, eyy, exy). The inner product weights
/// the shear component by 2.
template <class VoigtOp>
inline void add_strain_form(SparseSpd& A, const Mesh& mesh, const DofMap& dm, int c,
                            double w, VoigtOp&& dmat) {
    const auto g = cell_gradients(mesh, c);
    // B: rows (exx, eyy, exy), columns (v0x, v0y, v1x, v1y, v2x, v2y)
    double B[3][6] = {};
    for (int i = 0; i < 3; ++i) {
        B[0][2 * i] = g[i].x;
        B[1][2 * i + 1] = g[i].y;
        B[2][2 * i] = 0.5 * g[i].y;
        B[2][2 * i + 1] = 0.5 * g[i].x;
    }
    double DB[3][6];
    for (int j = 0; j < 6; ++j) {
        const std::array<double, 3> col = dmat(B[0][j], B[1][j], B[2][j]);
        DB[0][j] = col[0];
        DB[1][j] = col[1];
        DB[2][j] = col[2];
    }
    const double wa = w * mesh.area[c];
    for (int li = 0; li < 6; ++li) {
        const int gi = dm.dof(mesh.cells[c][li / 2], li % 2);
        const int fi = dm.free_index[gi];
        if (fi < 0) continue;
        for (int lj = 0; lj < 6; ++lj) {
            const int gj = dm.dof(mesh.cells[c][lj / 2], lj % 2);
            const int fj = dm.free_index[gj];
            if (fj < 0) continue;
            // E:E' = exx exx' + eyy eyy' + 2 exy exy'
            const double v =
                B[0][li] * DB[0][lj] + B[1][li] * DB[1][lj] + 2.0 * B[2][li] * DB[2][lj];
            A.add(fi, fj, wa * v);
        }
    }
}

} // namespace detail

/// (1/dt) M + eta K + dt K_C on the free dofs, Dirichlet rows/columns
/// eliminated symmetrically. K is (E(v), E(phi)), K_C is (C E(v), E(phi)).
inline SparseSpd assemble_step_matrix(const Mesh& mesh, const DofMap& dm,
                                      const MaterialParams& p, double dt) {
    if (dt <= 0.0) throw BadInput("assemble_step_matrix: dt must be positive");
    SparseSpd A(dm.num_free);
    const double k = p.E / (1.0 + p.nu);
    const double m = p.nu / (1.0 - p.nu);   // d = 2
    const auto ident = [](double exx, double eyy, double exy) {
        return std::array<double, 3>{exx, eyy, exy};
    };
    const auto cmat = [k, m](double exx, double eyy, double exy) {
        const double tr = m * (exx + eyy);
        return std::array<double, 3>{k * (exx + tr), k * (eyy + tr), k * exy};
    };
    for (int c = 0; c < mesh.num_cells(); ++c) {
        // mass part
        const double w = mesh.area[c] / 12.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int comp = 0; comp < 2; ++comp) {
                    const int fi = dm.free_index[dm.dof(mesh.cells[c][i], comp)];
                    const int fj = dm.free_index[dm.dof(mesh.cells[c][j], comp)];
                    if (fi < 0 || fj < 0) continue;
                    A.add(fi, fj, (w / dt) * (i == j ? 2.0 : 1.0));
                }
        detail::add_strain_form(A, mesh, dm, c, p.eta, ident);
        detail::add_strain_form(A, mesh, dm, c, dt, cmat);
    }
    A.finalize();
    return A;
}

/// Pure viscous stiffness eta (E(v), E(phi)) on free dofs; used in tests and
/// for the Galerkin energy identity.
inline SparseSpd assemble_viscous_stiffness(const Mesh& mesh, const DofMap& dm,
                                            double eta) {
    SparseSpd A(dm.num_free);
    const auto ident = [](double exx, double eyy, double exy) {
        return std::array<double, 3>{exx, eyy, exy};
    };
    for (int c = 0; c < mesh.num_cells(); ++c)
        detail::add_strain_form(A, mesh, dm, c, eta, ident);
    A.finalize();
    return A;
}

/// Spatially constant body force and Gamma2 traction for one time slab.
struct LoadData {
    Vec2 body{0.0, 0.0};
    Vec2 traction{0.0, 0.0};
};

/// Right-hand side on free dofs:
///   (1/dt)(M v_prev, phi) + <f_n, phi> - (sigma_prev + dt C h_n, E(phi)).
/// v_prev is a full nodal field; h is per cell.
inline std::vector<double> assemble_rhs(const Mesh& mesh, const DofMap& dm,
                                        const MaterialParams& p, double dt,
                                        const SparseSpd& mass_full,
                                        const std::vector<double>& v_prev,
                                        const ElementField& sigma_prev,
                                        const LoadData& load, const ElementField& h) {
    std::vector<double> rhs(dm.num_free, 0.0);

    const std::vector<double> Mv = mass_full.multiply(v_prev);
    for (int d = 0; d < dm.num_dofs(); ++d) {
        const int f = dm.free_index[d];
        if (f >= 0) rhs[f] += Mv[d] / dt;
    }

    for (int c = 0; c < mesh.num_cells(); ++c) {
        const auto g = detail::cell_gradients(mesh, c);
        const SymTensor s = sigma_prev[c] + dt * apply_C(p, h[c]);
        const double A = mesh.area[c];
        for (int i = 0; i < 3; ++i) {
            const int vtx = mesh.cells[c][i];
            const int fx = dm.free_index[dm.dof(vtx, 0)];
            const int fy = dm.free_index[dm.dof(vtx, 1)];
            // body force: exact P1 integration of a constant load
            if (fx >= 0) rhs[fx] += A / 3.0 * load.body.x;
            if (fy >= 0) rhs[fy] += A / 3.0 * load.body.y;
            // -(sigma + dt C h, E(phi))
            if (fx >= 0) rhs[fx] -= A * (s(0, 0) * g[i].x + s(0, 1) * g[i].y);
            if (fy >= 0) rhs[fy] -= A * (s(1, 1) * g[i].y + s(0, 1) * g[i].x);
        }
    }

    for (const auto& e : mesh.boundary) {
        if (e.tag != BoundaryTag::gamma2) continue;
        const double len = (mesh.vertices[e.b] - mesh.vertices[e.a]).norm();
        for (int vtx : {e.a, e.b}) {
            const int fx = dm.free_index[dm.dof(vtx, 0)];
            const int fy = dm.free_index[dm.dof(vtx, 1)];
            if (fx >= 0) rhs[fx] += 0.5 * len * load.traction.x;
            if (fy >= 0) rhs[fy] += 0.5 * len * load.traction.y;
        }
    }
    return rhs;
}

/// <f_n, v> for the assembled load: exact P1 integration of body force and
/// traction against a nodal field.
inline double load_pairing(const Mesh& mesh, const LoadData& load,
                           const std::vector<double>& v) {
    double s = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        Vec2 avg{0.0, 0.0};
        for (int i = 0; i < 3; ++i) {
            const int vtx = mesh.cells[c][i];
            avg += Vec2{v[2 * vtx], v[2 * vtx + 1]};
        }
        s += mesh.area[c] / 3.0 * dot(load.body, avg);
    }
    for (const auto& e : mesh.boundary) {
        if (e.tag != BoundaryTag::gamma2) continue;
        const double len = (mesh.vertices[e.b] - mesh.vertices[e.a]).norm();
        const Vec2 sum{v[2 * e.a] + v[2 * e.b], v[2 * e.a + 1] + v[2 * e.b + 1]};
        s += 0.5 * len * dot(load.traction, sum);
    }
    return s;
}

/// Slab average by two-point Gauss quadrature (exact for cubic-in-time data).
template <class F>
auto time_average(F&& f, double t0, double t1) {
    const double mid = 0.5 * (t0 + t1);
    const double off = 0.5 * (t1 - t0) / std::sqrt(3.0);
    return 0.5 * (f(mid - off) + f(mid + off));
}

/// L2(Omega) inner product of cellwise-constant tensor fields.
inline double field_inner(const Mesh& mesh, const ElementField& a, const ElementField& b) {
    double s = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) s += mesh.area[c] * ddot(a[c], b[c]);
    return s;
}

inline double field_norm_sq(const Mesh& mesh, const ElementField& a) {
    return field_inner(mesh, a, a);
}

/// Energy norm ||tau||_S^2 of a cellwise-constant field.
inline double field_norm_S_sq(const Mesh& mesh, const MaterialParams& p,
                              const ElementField& a) {
    double s = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) s += mesh.area[c] * norm_S_sq(p, a[c]);
    return s;
}

} // namespace kvp
