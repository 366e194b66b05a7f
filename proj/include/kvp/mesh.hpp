#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kvp/errors.hpp"

namespace kvp {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend Vec2 operator-(Vec2 a, const Vec2& b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
    friend Vec2 operator*(double s, Vec2 a) { return a * s; }
    friend double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
    double norm() const { return std::hypot(x, y); }
};

enum class BoundaryTag : int { gamma1 = 1, gamma2 = 2 };

struct BoundaryEdge {
    int a = 0, b = 0;     // vertex indices
    BoundaryTag tag = BoundaryTag::gamma2;
};

/// Immutable simplicial 2D mesh with a Dirichlet (Gamma1) / traction (Gamma2)
/// boundary split. Gamma1 must be nonempty; every boundary edge carries a tag.
struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> cells;
    std::vector<BoundaryEdge> boundary;
    std::vector<double> area;       // per cell, positive

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_cells() const { return static_cast<int>(cells.size()); }

    Vec2 centroid(int c) const {
        const auto& k = cells[c];
        return (vertices[k[0]] + vertices[k[1]] + vertices[k[2]]) * (1.0 / 3.0);
    }

    double total_area() const {
        double s = 0.0;
        for (double a : area) s += a;
        return s;
    }

    bool has_gamma2() const {
        for (const auto& e : boundary)
            if (e.tag == BoundaryTag::gamma2) return true;
        return false;
    }
};

namespace detail {

inline double signed_area(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
    return 0.5 * ((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
}

inline std::pair<int, int> edge_key(int a, int b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

} // namespace detail

/// Checks all structural invariants; throws BadInput with a description.
inline void validate_mesh(Mesh& mesh) {
    const int nv = mesh.num_vertices();
    mesh.area.resize(mesh.cells.size());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        for (int k : mesh.cells[c])
            if (k < 0 || k >= nv)
                throw BadInput("mesh: cell " + std::to_string(c) + " references vertex " +
                               std::to_string(k) + " out of range");
        const auto& t = mesh.cells[c];
        const double a = detail::signed_area(mesh.vertices[t[0]], mesh.vertices[t[1]],
                                             mesh.vertices[t[2]]);
        if (a == 0.0)
            throw BadInput("mesh: degenerate cell " + std::to_string(c));
        if (a < 0.0)
            throw BadInput("mesh: inverted cell " + std::to_string(c));
        mesh.area[c] = a;
    }

    // count cell incidences per undirected edge
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : mesh.cells)
        for (int e = 0; e < 3; ++e)
            edge_count[detail::edge_key(t[e], t[(e + 1) % 3])]++;

    for (const auto& [key, cnt] : edge_count)
        if (cnt > 2)
            throw BadInput("mesh: edge (" + std::to_string(key.first) + "," +
                           std::to_string(key.second) + ") shared by " +
                           std::to_string(cnt) + " cells");

    std::map<std::pair<int, int>, int> tagged;
    for (const auto& e : mesh.boundary) {
        const auto key = detail::edge_key(e.a, e.b);
        auto it = edge_count.find(key);
        if (it == edge_count.end())
            throw BadInput("mesh: tagged boundary edge (" + std::to_string(e.a) + "," +
                           std::to_string(e.b) + ") is not an edge of any cell");
        if (it->second != 1)
            throw BadInput("mesh: tagged edge (" + std::to_string(e.a) + "," +
                           std::to_string(e.b) + ") is interior");
        if (++tagged[key] > 1)
            throw BadInput("mesh: boundary edge (" + std::to_string(e.a) + "," +
                           std::to_string(e.b) + ") tagged twice");
    }
    for (const auto& [key, cnt] : edge_count)
        if (cnt == 1 && tagged.find(key) == tagged.end())
            throw BadInput("mesh: untagged boundary edge (" + std::to_string(key.first) +
                           "," + std::to_string(key.second) + ")");

    bool has_g1 = false;
    for (const auto& e : mesh.boundary)
        if (e.tag == BoundaryTag::gamma1) has_g1 = true;
    if (!has_g1) throw BadInput("mesh: Gamma1 is empty");
}

/// Structured mesh of [0,1]^2, two triangles per quad with alternating
/// diagonals. gamma1_spec is a comma-separated subset of
/// left,right,bottom,top or "all"; the remaining sides become Gamma2.
inline Mesh unit_square_mesh(int nx, int ny, const std::string& gamma1_spec) {
    if (nx < 1 || ny < 1) throw BadInput("unit_square_mesh: nx, ny must be >= 1");

    bool g1_left = false, g1_right = false, g1_bottom = false, g1_top = false;
    {
        std::stringstream ss(gamma1_spec);
        std::string side;
        bool any = false;
        while (std::getline(ss, side, ',')) {
            side.erase(0, side.find_first_not_of(" \t"));
            side.erase(side.find_last_not_of(" \t") + 1);
            if (side.empty()) continue;
            any = true;
            if (side == "left") g1_left = true;
            else if (side == "right") g1_right = true;
            else if (side == "bottom") g1_bottom = true;
            else if (side == "top") g1_top = true;
            else if (side == "all") g1_left = g1_right = g1_bottom = g1_top = true;
            else throw BadInput("unit_square_mesh: unknown side '" + side + "'");
        }
        if (!any) throw BadInput("unit_square_mesh: Gamma1 spec is empty");
    }

    Mesh mesh;
    const auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            mesh.vertices.push_back({double(i) / nx, double(j) / ny});

    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j);
            const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            if ((i + j) % 2 == 0) {
                mesh.cells.push_back({v00, v10, v11});
                mesh.cells.push_back({v00, v11, v01});
            } else {
                mesh.cells.push_back({v00, v10, v01});
                mesh.cells.push_back({v10, v11, v01});
            }
        }

    const auto tag_of = [](bool g1) {
        return g1 ? BoundaryTag::gamma1 : BoundaryTag::gamma2;
    };
    for (int i = 0; i < nx; ++i) {
        mesh.boundary.push_back({vid(i, 0), vid(i + 1, 0), tag_of(g1_bottom)});
        mesh.boundary.push_back({vid(i, ny), vid(i + 1, ny), tag_of(g1_top)});
    }
    for (int j = 0; j < ny; ++j) {
        mesh.boundary.push_back({vid(0, j), vid(0, j + 1), tag_of(g1_left)});
        mesh.boundary.push_back({vid(nx, j), vid(nx, j + 1), tag_of(g1_right)});
    }

    validate_mesh(mesh);
    return mesh;
}

/// Plain-text mesh format:
///   vertices <n>    followed by n lines "x y"
///   cells <m>       followed by m lines "v0 v1 v2"
///   boundary <k>    followed by k lines "v0 v1 tag" (tag 1 = Gamma1, 2 = Gamma2)
/// Blank lines and lines starting with '#' are ignored.
inline void save_mesh(const Mesh& mesh, std::ostream& os) {
    os << "# simplicial 2d mesh\n";
    os << "vertices " << mesh.num_vertices() << "\n";
    os.precision(17);
    for (const auto& v : mesh.vertices) os << v.x << " " << v.y << "\n";
    os << "cells " << mesh.num_cells() << "\n";
    for (const auto& c : mesh.cells) os << c[0] << " " << c[1] << " " << c[2] << "\n";
    os << "boundary " << mesh.boundary.size() << "\n";
    for (const auto& e : mesh.boundary)
        os << e.a << " " << e.b << " " << static_cast<int>(e.tag) << "\n";
}

inline void save_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw BadInput("save_mesh: cannot open '" + path + "'");
    save_mesh(mesh, os);
}

inline Mesh load_mesh(std::istream& is, const std::string& name = "<stream>") {
    Mesh mesh;
    int lineno = 0;
    std::string line;
    const auto fail = [&](const std::string& msg) -> void {
        throw BadInput(name + ":" + std::to_string(lineno) + ": " + msg);
    };
    const auto next_line = [&](std::string& out) {
        while (std::getline(is, line)) {
            ++lineno;
            const auto pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos || line[pos] == '#') continue;
            out = line;
            return true;
        }
        return false;
    };

    std::string cur;
    enum { none, vert, cell, bdry } expect = none;
    int remaining = 0;
    while (next_line(cur)) {
        std::istringstream ss(cur);
        if (remaining == 0) {
            std::string section;
            ss >> section >> remaining;
            if (ss.fail() || remaining < 0) fail("expected section header '<name> <count>'");
            if (section == "vertices") expect = vert;
            else if (section == "cells") expect = cell;
            else if (section == "boundary") expect = bdry;
            else fail("unknown section '" + section + "'");
            continue;
        }
        switch (expect) {
        case vert: {
            Vec2 v;
            ss >> v.x >> v.y;
            if (ss.fail()) fail("malformed vertex line");
            mesh.vertices.push_back(v);
            break;
        }
        case cell: {
            std::array<int, 3> c{};
            ss >> c[0] >> c[1] >> c[2];
            if (ss.fail()) fail("malformed cell line");
            mesh.cells.push_back(c);
            break;
        }
        case bdry: {
            int a, b, tag;
            ss >> a >> b >> tag;
            if (ss.fail()) fail("malformed boundary line");
            if (tag != 1 && tag != 2) fail("boundary tag must be 1 or 2");
            mesh.boundary.push_back({a, b, static_cast<BoundaryTag>(tag)});
            break;
        }
        default:
            fail("data line outside of a section");
        }
        --remaining;
    }
    if (remaining != 0)
        throw BadInput(name + ": truncated file, " + std::to_string(remaining) +
                       " lines missing");
    validate_mesh(mesh);
    return mesh;
}

inline Mesh load_mesh(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw BadInput("load_mesh: cannot open '" + path + "'");
    return load_mesh(is, path);
}

} // namespace kvp
