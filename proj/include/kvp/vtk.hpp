#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include "kvp/mesh.hpp"
#include "kvp/state.hpp"

namespace kvp {

namespace detail {

inline void write_vtk_header(std::ostream& os, const Mesh& mesh, const std::string& title) {
    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\n";
    os << "DATASET UNSTRUCTURED_GRID\n";
    os << "POINTS " << mesh.num_vertices() << " double\n";
    os.precision(12);
    for (const auto& v : mesh.vertices) os << v.x << " " << v.y << " 0\n";
    os << "CELLS " << mesh.num_cells() << " " << 4 * mesh.num_cells() << "\n";
    for (const auto& c : mesh.cells) os << "3 " << c[0] << " " << c[1] << " " << c[2] << "\n";
    os << "CELL_TYPES " << mesh.num_cells() << "\n";
    for (int c = 0; c < mesh.num_cells(); ++c) os << "5\n";
}

inline void write_vtk_tensor(std::ostream& os, const std::string& name,
                             const ElementField& f) {
    os << "TENSORS " << name << " double\n";
    for (const auto& t : f) {
        os << t(0, 0) << " " << t(0, 1) << " 0\n";
        os << t(0, 1) << " " << t(1, 1) << " 0\n";
        os << "0 0 0\n";
    }
}

} // namespace detail

/// Legacy ASCII VTK export of the mesh alone, for inspection.
inline void write_mesh_vtk(const Mesh& mesh, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw BadInput("write_mesh_vtk: cannot open '" + path + "'");
    detail::write_vtk_header(os, mesh, "mesh");
    os << "CELL_DATA " << mesh.num_cells() << "\n";
    os << "SCALARS cell_area double 1\nLOOKUP_TABLE default\n";
    for (double a : mesh.area) os << a << "\n";
}

/// Snapshot with velocity as point data and sigma, alpha, and the yield
/// utilization |sigma^D - alpha^D| / g as cell data.
inline void write_state_vtk(const Mesh& mesh, const State& state, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw BadInput("write_state_vtk: cannot open '" + path + "'");
    detail::write_vtk_header(os, mesh, "state t=" + std::to_string(state.t));

    os << "POINT_DATA " << mesh.num_vertices() << "\n";
    os << "VECTORS velocity double\n";
    for (int v = 0; v < mesh.num_vertices(); ++v)
        os << state.v[2 * v] << " " << state.v[2 * v + 1] << " 0\n";

    os << "CELL_DATA " << mesh.num_cells() << "\n";
    detail::write_vtk_tensor(os, "sigma", state.sigma);
    detail::write_vtk_tensor(os, "alpha", state.alpha);
    os << "SCALARS yield_utilization double 1\nLOOKUP_TABLE default\n";
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const double nd = frob_norm(deviator(state.sigma[c] - state.alpha[c]));
        const double g = state.g[c];
        os << (std::isinf(g) ? 0.0 : (g > 0.0 ? nd / g : (nd > 0.0 ? 1.0 : 0.0))) << "\n";
    }
}

} // namespace kvp
