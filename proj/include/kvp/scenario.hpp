#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kvp/monitor.hpp"
#include "kvp/step.hpp"
#include "kvp/vtk.hpp"

namespace kvp {

// ---------------------------------------------------------------------------
// analytic data descriptors
// ---------------------------------------------------------------------------

/// Scalar-in-time factor of a separable data descriptor.
///   const            -> 1
///   sin omega phase  -> sin(omega t + phase)
///   ramp c0 c1       -> c0 + (c1 - c0) t / T
///   fwdrev ts        -> +1 for t < ts, -1 afterwards
///   step ts c0 c1    -> c0 for t < ts, c1 afterwards
/// Slab averages are closed-form so the discrete data are exact.
struct TimeProfile {
    enum class Kind { constant, sine, ramp, fwdrev, step };
    Kind kind = Kind::constant;
    double p0 = 0.0, p1 = 0.0, p2 = 0.0;

    double eval(double t, double T) const {
        switch (kind) {
        case Kind::constant: return 1.0;
        case Kind::sine: return std::sin(p0 * t + p1);
        case Kind::ramp: return p0 + (p1 - p0) * t / T;
        case Kind::fwdrev: return t < p0 ? 1.0 : -1.0;
        case Kind::step: return t < p0 ? p1 : p2;
        }
        return 1.0;
    }

    /// Exact mean value over (t0, t1).
    double average(double t0, double t1, double T) const {
        const double len = t1 - t0;
        switch (kind) {
        case Kind::constant: return 1.0;
        case Kind::sine:
            if (p0 == 0.0) return std::sin(p1);
            return (std::cos(p0 * t0 + p1) - std::cos(p0 * t1 + p1)) / (p0 * len);
        case Kind::ramp: return p0 + (p1 - p0) * 0.5 * (t0 + t1) / T;
        case Kind::fwdrev:
            if (t1 <= p0) return 1.0;
            if (t0 >= p0) return -1.0;
            return (2.0 * p0 - t0 - t1) / len;
        case Kind::step:
            if (t1 <= p0) return p1;
            if (t0 >= p0) return p2;
            return (p1 * (p0 - t0) + p2 * (t1 - p0)) / len;
        }
        return 1.0;
    }

    bool operator==(const TimeProfile&) const = default;
};

struct VectorData {
    Vec2 amp{0.0, 0.0};
    TimeProfile profile;

    Vec2 eval(double t, double T) const { return amp * profile.eval(t, T); }
    Vec2 average(double t0, double t1, double T) const {
        return amp * profile.average(t0, t1, T);
    }
    bool is_zero() const { return amp.x == 0.0 && amp.y == 0.0; }
    bool operator==(const VectorData& o) const {
        return amp.x == o.amp.x && amp.y == o.amp.y && profile == o.profile;
    }
};

struct TensorData {
    double xx = 0.0, yy = 0.0, xy = 0.0;
    TimeProfile profile;

    SymTensor with_factor(double f) const {
        SymTensor s(2);
        s(0, 0) = xx * f;
        s(1, 1) = yy * f;
        s(0, 1) = xy * f;
        return s;
    }
    SymTensor eval(double t, double T) const { return with_factor(profile.eval(t, T)); }
    SymTensor average(double t0, double t1, double T) const {
        return with_factor(profile.average(t0, t1, T));
    }
    bool is_zero() const { return xx == 0.0 && yy == 0.0 && xy == 0.0; }
    bool operator==(const TensorData&) const = default;
};

/// Yield bound descriptor: amplitude x time profile x optional
/// piecewise-constant space factor, or the unbounded sentinel.
struct YieldData {
    bool unbounded = false;
    double amp = 0.0;
    TimeProfile profile;
    bool split = false;          // split_x x0 lo hi: scale lo for x < x0, hi otherwise
    double split_x0 = 0.0, split_lo = 1.0, split_hi = 1.0;

    double eval(double t, double T, const Vec2& x) const {
        if (unbounded) return std::numeric_limits<double>::infinity();
        double v = amp * profile.eval(t, T);
        if (split) v *= (x.x < split_x0 ? split_lo : split_hi);
        return v;
    }
    bool operator==(const YieldData&) const = default;
};

// ---------------------------------------------------------------------------
// scenario definition
// ---------------------------------------------------------------------------

struct MeshSpec {
    enum class Kind { unit_square, file };
    Kind kind = Kind::unit_square;
    int nx = 1, ny = 1;
    std::string gamma1 = "left";
    std::string path;            // for Kind::file

    bool operator==(const MeshSpec&) const = default;
};

struct OutputSpec {
    std::string energy_csv;      // empty disables
    int vtk_every = 0;           // 0 disables snapshots

    bool operator==(const OutputSpec&) const = default;
};

struct Scenario {
    std::string name = "scenario";
    MeshSpec mesh;
    MaterialParams material;
    double T = 1.0;
    int N = 1;
    VectorData force;
    VectorData traction;
    TensorData h;
    YieldData g{true};           // default unbounded
    Vec2 v0{0.0, 0.0};
    SymTensor sigma0{2};
    SymTensor alpha0{2};
    TensorData path;             // 0D strain-rate path, for the material-point driver
    OutputSpec output;

    double dt() const { return T / N; }

    /// Basename of the scenario file without extension, for output naming.
    std::string name_stem() const {
        const std::string stem = std::filesystem::path(name).stem().string();
        return stem.empty() ? "scenario" : stem;
    }

    bool operator==(const Scenario& o) const {
        return name == o.name && mesh == o.mesh && material.E == o.material.E &&
               material.nu == o.material.nu && material.eta == o.material.eta &&
               material.a == o.material.a && T == o.T && N == o.N && force == o.force &&
               traction == o.traction && h == o.h && g == o.g && v0.x == o.v0.x &&
               v0.y == o.v0.y && sigma0 == o.sigma0 && alpha0 == o.alpha0 &&
               path == o.path && output == o.output;
    }
};

// ---------------------------------------------------------------------------
// scenario text format
// ---------------------------------------------------------------------------
//
// Sections [mesh], [material], [time], [data], [initial], [path], [output]
// with "key = value" lines; '#' starts a comment. Data values are
// "<amplitude...> * <profile>" with the profiles documented on TimeProfile;
// g additionally accepts "unbounded" and a trailing "| split_x x0 lo hi".

namespace detail {

inline std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

inline double to_num(const std::string& s, const std::string& ctx) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw BadInput(ctx + ": not a number: '" + s + "'");
    }
}

inline TimeProfile parse_profile(const std::vector<std::string>& tok, std::size_t pos,
                                 std::size_t end, const std::string& ctx) {
    if (pos >= end) throw BadInput(ctx + ": missing time profile");
    TimeProfile p;
    const std::string& kind = tok[pos];
    const auto need = [&](std::size_t n) {
        if (end - pos - 1 != n)
            throw BadInput(ctx + ": profile '" + kind + "' expects " + std::to_string(n) +
                           " parameter(s)");
    };
    if (kind == "const") {
        need(0);
        p.kind = TimeProfile::Kind::constant;
    } else if (kind == "sin") {
        need(2);
        p.kind = TimeProfile::Kind::sine;
        p.p0 = to_num(tok[pos + 1], ctx);
        p.p1 = to_num(tok[pos + 2], ctx);
    } else if (kind == "ramp") {
        need(2);
        p.kind = TimeProfile::Kind::ramp;
        p.p0 = to_num(tok[pos + 1], ctx);
        p.p1 = to_num(tok[pos + 2], ctx);
    } else if (kind == "fwdrev") {
        need(1);
        p.kind = TimeProfile::Kind::fwdrev;
        p.p0 = to_num(tok[pos + 1], ctx);
    } else if (kind == "step") {
        need(3);
        p.kind = TimeProfile::Kind::step;
        p.p0 = to_num(tok[pos + 1], ctx);
        p.p1 = to_num(tok[pos + 2], ctx);
        p.p2 = to_num(tok[pos + 3], ctx);
    } else {
        throw BadInput(ctx + ": unknown time profile '" + kind + "'");
    }
    return p;
}

inline std::size_t find_star(const std::vector<std::string>& tok, const std::string& ctx) {
    for (std::size_t i = 0; i < tok.size(); ++i)
        if (tok[i] == "*") return i;
    throw BadInput(ctx + ": expected '<amplitude> * <profile>'");
}

inline VectorData parse_vector_data(const std::string& val, const std::string& ctx) {
    const auto tok = tokenize(val);
    if (tok.size() == 1 && tok[0] == "zero") return {};
    const std::size_t star = find_star(tok, ctx);
    if (star != 2) throw BadInput(ctx + ": vector amplitude needs 2 components");
    VectorData d;
    d.amp = {to_num(tok[0], ctx), to_num(tok[1], ctx)};
    d.profile = parse_profile(tok, star + 1, tok.size(), ctx);
    return d;
}

inline TensorData parse_tensor_data(const std::string& val, const std::string& ctx) {
    const auto tok = tokenize(val);
    if (tok.size() == 1 && tok[0] == "zero") return {};
    const std::size_t star = find_star(tok, ctx);
    if (star != 3)
        throw BadInput(ctx + ": tensor amplitude needs 3 components (xx yy xy)");
    TensorData d;
    d.xx = to_num(tok[0], ctx);
    d.yy = to_num(tok[1], ctx);
    d.xy = to_num(tok[2], ctx);
    d.profile = parse_profile(tok, star + 1, tok.size(), ctx);
    return d;
}

inline YieldData parse_yield_data(const std::string& val, const std::string& ctx) {
    auto tok = tokenize(val);
    if (tok.size() == 1 && tok[0] == "unbounded") return YieldData{true};
    YieldData d;
    // optional trailing "| split_x x0 lo hi"
    for (std::size_t i = 0; i < tok.size(); ++i)
        if (tok[i] == "|") {
            if (tok.size() - i != 5 || tok[i + 1] != "split_x")
                throw BadInput(ctx + ": expected '| split_x x0 lo hi'");
            d.split = true;
            d.split_x0 = to_num(tok[i + 2], ctx);
            d.split_lo = to_num(tok[i + 3], ctx);
            d.split_hi = to_num(tok[i + 4], ctx);
            tok.resize(i);
            break;
        }
    const std::size_t star = find_star(tok, ctx);
    if (star != 1) throw BadInput(ctx + ": scalar amplitude needs 1 component");
    d.amp = to_num(tok[0], ctx);
    if (d.amp < 0.0) throw BadInput(ctx + ": yield bound amplitude must be >= 0");
    d.profile = parse_profile(tok, star + 1, tok.size(), ctx);
    return d;
}

inline std::string profile_str(const TimeProfile& p) {
    std::ostringstream os;
    os.precision(17);
    switch (p.kind) {
    case TimeProfile::Kind::constant: os << "const"; break;
    case TimeProfile::Kind::sine: os << "sin " << p.p0 << " " << p.p1; break;
    case TimeProfile::Kind::ramp: os << "ramp " << p.p0 << " " << p.p1; break;
    case TimeProfile::Kind::fwdrev: os << "fwdrev " << p.p0; break;
    case TimeProfile::Kind::step: os << "step " << p.p0 << " " << p.p1 << " " << p.p2; break;
    }
    return os.str();
}

} // namespace detail

inline Scenario parse_scenario(std::istream& is, const std::string& name = "<stream>") {
    Scenario sc;
    sc.name = name;
    std::string line, section;
    int lineno = 0;
    const auto fail = [&](const std::string& msg) -> void {
        throw BadInput(name + ":" + std::to_string(lineno) + ": " + msg);
    };

    while (std::getline(is, line)) {
        ++lineno;
        const auto cpos = line.find('#');
        if (cpos != std::string::npos) line.erase(cpos);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);

        if (line.front() == '[') {
            if (line.back() != ']') fail("malformed section header");
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected 'key = value'");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        val.erase(0, val.find_first_not_of(" \t"));
        const std::string ctx = name + ":" + std::to_string(lineno) + ": " + key;

        if (section == "mesh") {
            if (key == "kind") {
                if (val == "unit_square") sc.mesh.kind = MeshSpec::Kind::unit_square;
                else if (val == "file") sc.mesh.kind = MeshSpec::Kind::file;
                else fail("unknown mesh kind '" + val + "'");
            } else if (key == "nx") sc.mesh.nx = static_cast<int>(detail::to_num(val, ctx));
            else if (key == "ny") sc.mesh.ny = static_cast<int>(detail::to_num(val, ctx));
            else if (key == "gamma1") sc.mesh.gamma1 = val;
            else if (key == "file") sc.mesh.path = val;
            else fail("unknown mesh key '" + key + "'");
        } else if (section == "material") {
            if (key == "E") sc.material.E = detail::to_num(val, ctx);
            else if (key == "nu") sc.material.nu = detail::to_num(val, ctx);
            else if (key == "eta") sc.material.eta = detail::to_num(val, ctx);
            else if (key == "a") sc.material.a = detail::to_num(val, ctx);
            else fail("unknown material key '" + key + "'");
        } else if (section == "time") {
            if (key == "T") sc.T = detail::to_num(val, ctx);
            else if (key == "N") sc.N = static_cast<int>(detail::to_num(val, ctx));
            else fail("unknown time key '" + key + "'");
        } else if (section == "data") {
            if (key == "force") sc.force = detail::parse_vector_data(val, ctx);
            else if (key == "traction") sc.traction = detail::parse_vector_data(val, ctx);
            else if (key == "h") sc.h = detail::parse_tensor_data(val, ctx);
            else if (key == "g") sc.g = detail::parse_yield_data(val, ctx);
            else fail("unknown data key '" + key + "'");
        } else if (section == "initial") {
            const auto tok = detail::tokenize(val);
            if (key == "v0") {
                if (tok.size() != 2) fail("v0 expects 2 components");
                sc.v0 = {detail::to_num(tok[0], ctx), detail::to_num(tok[1], ctx)};
            } else if (key == "sigma0" || key == "alpha0") {
                if (tok.size() != 3) fail(key + " expects 3 components (xx yy xy)");
                SymTensor t(2);
                t(0, 0) = detail::to_num(tok[0], ctx);
                t(1, 1) = detail::to_num(tok[1], ctx);
                t(0, 1) = detail::to_num(tok[2], ctx);
                (key == "sigma0" ? sc.sigma0 : sc.alpha0) = t;
            } else fail("unknown initial key '" + key + "'");
        } else if (section == "path") {
            if (key == "rate") sc.path = detail::parse_tensor_data(val, ctx);
            else fail("unknown path key '" + key + "'");
        } else if (section == "output") {
            if (key == "energy_csv") sc.output.energy_csv = val;
            else if (key == "vtk_every")
                sc.output.vtk_every = static_cast<int>(detail::to_num(val, ctx));
            else fail("unknown output key '" + key + "'");
        } else {
            fail(section.empty() ? "key outside of any section"
                                 : "unknown section '" + section + "'");
        }
    }

    if (sc.T <= 0.0) throw BadInput(name + ": T must be positive");
    if (sc.N < 1) throw BadInput(name + ": N must be >= 1");
    sc.material.validate(2);
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw BadInput("load_scenario: cannot open '" + path + "'");
    return parse_scenario(is, path);
}

inline void save_scenario(const Scenario& sc, std::ostream& os) {
    os.precision(17);
    os << "[mesh]\n";
    if (sc.mesh.kind == MeshSpec::Kind::unit_square) {
        os << "kind = unit_square\nnx = " << sc.mesh.nx << "\nny = " << sc.mesh.ny
           << "\ngamma1 = " << sc.mesh.gamma1 << "\n";
    } else {
        os << "kind = file\nfile = " << sc.mesh.path << "\n";
    }
    os << "\n[material]\nE = " << sc.material.E << "\nnu = " << sc.material.nu
       << "\neta = " << sc.material.eta << "\na = " << sc.material.a << "\n";
    os << "\n[time]\nT = " << sc.T << "\nN = " << sc.N << "\n";
    os << "\n[data]\n";
    os << "force = " << sc.force.amp.x << " " << sc.force.amp.y << " * "
       << detail::profile_str(sc.force.profile) << "\n";
    os << "traction = " << sc.traction.amp.x << " " << sc.traction.amp.y << " * "
       << detail::profile_str(sc.traction.profile) << "\n";
    os << "h = " << sc.h.xx << " " << sc.h.yy << " " << sc.h.xy << " * "
       << detail::profile_str(sc.h.profile) << "\n";
    if (sc.g.unbounded) {
        os << "g = unbounded\n";
    } else {
        os << "g = " << sc.g.amp << " * " << detail::profile_str(sc.g.profile);
        if (sc.g.split)
            os << " | split_x " << sc.g.split_x0 << " " << sc.g.split_lo << " "
               << sc.g.split_hi;
        os << "\n";
    }
    os << "\n[initial]\nv0 = " << sc.v0.x << " " << sc.v0.y << "\n";
    os << "sigma0 = " << sc.sigma0(0, 0) << " " << sc.sigma0(1, 1) << " " << sc.sigma0(0, 1)
       << "\n";
    os << "alpha0 = " << sc.alpha0(0, 0) << " " << sc.alpha0(1, 1) << " " << sc.alpha0(0, 1)
       << "\n";
    os << "\n[path]\nrate = " << sc.path.xx << " " << sc.path.yy << " " << sc.path.xy
       << " * " << detail::profile_str(sc.path.profile) << "\n";
    os << "\n[output]\n";
    if (!sc.output.energy_csv.empty()) os << "energy_csv = " << sc.output.energy_csv << "\n";
    os << "vtk_every = " << sc.output.vtk_every << "\n";
}

inline void save_scenario(const Scenario& sc, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw BadInput("save_scenario: cannot open '" + path + "'");
    save_scenario(sc, os);
}

// ---------------------------------------------------------------------------
// running a scenario
// ---------------------------------------------------------------------------

struct Discretization {
    Mesh mesh;
    DofMap dm;
};

inline Discretization discretize(const Scenario& sc) {
    Discretization d;
    d.mesh = sc.mesh.kind == MeshSpec::Kind::unit_square
                 ? unit_square_mesh(sc.mesh.nx, sc.mesh.ny, sc.mesh.gamma1)
                 : load_mesh(sc.mesh.path);
    d.dm = make_dofmap(d.mesh);
    return d;
}

struct RunOptions {
    bool record_history = false;
    std::string output_dir;      // empty: no files written
    bool quiet = true;
    std::function<void(int, const State&)> on_step;   // after each completed step
    int override_N = 0;          // > 0 replaces sc.N (convergence studies)
};

struct RunResult {
    double dt = 0.0;
    int N = 0;
    State final_state;
    EnergyLedger ledger;
    StateHistory history;        // includes the initial state when recorded
};

inline State make_initial_state(const Scenario& sc, const Discretization& d) {
    State s = make_zero_state(d.mesh, d.dm);
    for (int v = 0; v < d.mesh.num_vertices(); ++v) {
        s.v[2 * v] = sc.v0.x;
        s.v[2 * v + 1] = sc.v0.y;
    }
    for (int c = 0; c < d.mesh.num_cells(); ++c) {
        s.sigma[c] = sc.sigma0;
        s.sigma_star[c] = sc.sigma0;
        s.alpha[c] = sc.alpha0;
        s.g[c] = sc.g.eval(0.0, sc.T, d.mesh.centroid(c));
    }
    check_initial_feasibility(d.mesh, s);
    return s;
}

inline SlabData make_slab_data(const Scenario& sc, const Discretization& d, double t0,
                               double t1) {
    SlabData sd;
    sd.load.body = sc.force.average(t0, t1, sc.T);
    sd.load.traction = sc.traction.average(t0, t1, sc.T);
    const SymTensor h = sc.h.average(t0, t1, sc.T);
    sd.h.assign(d.mesh.num_cells(), h);
    sd.g_new.resize(d.mesh.num_cells());
    for (int c = 0; c < d.mesh.num_cells(); ++c)
        sd.g_new[c] = sc.g.eval(t1, sc.T, d.mesh.centroid(c));
    return sd;
}

inline RunResult run(const Scenario& sc, const Discretization& d,
                     const RunOptions& opts = {}) {
    const int N = opts.override_N > 0 ? opts.override_N : sc.N;
    const double dt = sc.T / N;

    RunResult res;
    res.dt = dt;
    res.N = N;

    const bool write_files = !opts.output_dir.empty();
    if (write_files) std::filesystem::create_directories(opts.output_dir);
    const auto out_path = [&](const std::string& f) {
        return (std::filesystem::path(opts.output_dir) / f).string();
    };

    Stepper stepper(d.mesh, d.dm, sc.material, dt);
    State s = make_initial_state(sc, d);
    if (opts.record_history) res.history.push_back(s);
    if (write_files && sc.output.vtk_every > 0)
        write_state_vtk(d.mesh, s, out_path("state_00000.vtk"));

    for (int n = 1; n <= N; ++n) {
        const SlabData sd = make_slab_data(sc, d, (n - 1) * dt, n * dt);
        s = stepper.advance(s, sd, &res.ledger);
        if (opts.record_history) res.history.push_back(s);
        if (opts.on_step) opts.on_step(n, s);
        if (write_files && sc.output.vtk_every > 0 && n % sc.output.vtk_every == 0) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "state_%05d.vtk", n);
            write_state_vtk(d.mesh, s, out_path(buf));
        }
    }

    if (write_files && !sc.output.energy_csv.empty())
        res.ledger.write_csv(out_path(sc.output.energy_csv));
    res.final_state = std::move(s);
    return res;
}

inline RunResult run(const Scenario& sc, const RunOptions& opts = {}) {
    return run(sc, discretize(sc), opts);
}

// ---------------------------------------------------------------------------
// 0D material-point driver
// ---------------------------------------------------------------------------

struct MaterialPointSample {
    double t = 0.0;
    SymTensor sigma{2};
    SymTensor sigma_star{2};
    SymTensor alpha{2};
    SymTensor xi{2};
    bool plastic = false;
};

/// Iterates the trial/return-map pair on a single material point driven by a
/// prescribed strain-rate path; isolates the constitutive update from the
/// momentum equation.
inline std::vector<MaterialPointSample> material_point(
    const MaterialParams& p, const TensorData& rate_path, const YieldData& g, double T,
    int N, const SymTensor& sigma0 = SymTensor(2), const SymTensor& alpha0 = SymTensor(2)) {
    p.validate(2);
    if (N < 1) throw BadInput("material_point: N must be >= 1");
    const double dt = T / N;

    std::vector<MaterialPointSample> out;
    out.reserve(N + 1);
    MaterialPointSample cur;
    cur.sigma = sigma0;
    cur.sigma_star = sigma0;
    cur.alpha = alpha0;
    out.push_back(cur);

    for (int n = 1; n <= N; ++n) {
        const double t0 = (n - 1) * dt, t1 = n * dt;
        const SymTensor rate = rate_path.average(t0, t1, T);
        const SymTensor sigma_star = cur.sigma + dt * apply_C(p, rate);
        const YieldBound yb{g.eval(t1, T, Vec2{0.0, 0.0})};
        const ReturnMapResult rm = return_map(p, dt, sigma_star, cur.alpha, yb);
        cur.t = t1;
        cur.sigma = rm.sigma;
        cur.sigma_star = sigma_star;
        cur.alpha = rm.alpha;
        cur.xi = rm.xi;
        cur.plastic = rm.plastic;
        out.push_back(cur);
    }
    return out;
}

inline void write_material_point_csv(const std::vector<MaterialPointSample>& series,
                                     std::ostream& os) {
    os << "t,sigma_xx,sigma_yy,sigma_xy,alpha_xx,alpha_yy,alpha_xy,"
          "xi_xx,xi_yy,xi_xy,plastic,sigma_dev_norm\n";
    os.precision(17);
    for (const auto& s : series)
        os << s.t << ',' << s.sigma(0, 0) << ',' << s.sigma(1, 1) << ',' << s.sigma(0, 1)
           << ',' << s.alpha(0, 0) << ',' << s.alpha(1, 1) << ',' << s.alpha(0, 1) << ','
           << s.xi(0, 0) << ',' << s.xi(1, 1) << ',' << s.xi(0, 1) << ','
           << (s.plastic ? 1 : 0) << ',' << frob_norm(deviator(s.sigma)) << '\n';
}

// ---------------------------------------------------------------------------
// convergence study
// ---------------------------------------------------------------------------

struct ConvergenceRow {
    int level = 0;
    double dt = 0.0;
    // discrete L2(0,T) differences against the previous (coarser) level,
    // measured at the coarse step endpoints; zero on the first row
    double diff_v = 0.0;
    double diff_sigma = 0.0;
    double diff_alpha = 0.0;
    double sigma_gap = 0.0;      // ||sigma*_bar - sigma_bar||_{L2(0,T;H)} at this level
};

/// Runs the scenario at dt, dt/2, ..., dt/2^{levels-1} and tabulates
/// inter-level differences and the per-level trial-stress gap.
inline std::vector<ConvergenceRow> converge(const Scenario& sc, int levels) {
    if (levels < 2) throw BadInput("converge: need at least 2 levels");
    const Discretization d = discretize(sc);
    const SparseSpd mass = assemble_mass(d.mesh, d.dm);

    std::vector<ConvergenceRow> table(levels);
    StateHistory prev_hist;

    for (int l = 0; l < levels; ++l) {
        const int Nl = sc.N << l;
        RunOptions opts;
        opts.record_history = (l + 1 < levels);   // next level diffs against us

        double acc_v = 0.0, acc_s = 0.0, acc_a = 0.0;
        const double dt_coarse = sc.T / (sc.N << (l - 1 >= 0 ? l - 1 : 0));
        if (l > 0) {
            // accumulate against the stored coarser history on the fly
            opts.on_step = [&](int n, const State& s) {
                if (n % 2 != 0) return;
                const State& coarse = prev_hist[n / 2];
                std::vector<double> ev(s.v.size());
                for (std::size_t i = 0; i < ev.size(); ++i) ev[i] = s.v[i] - coarse.v[i];
                acc_v += dt_coarse * mass_inner(mass, ev, ev);
                for (int c = 0; c < d.mesh.num_cells(); ++c) {
                    acc_s += dt_coarse * d.mesh.area[c] *
                             norm_S_sq(sc.material, s.sigma[c] - coarse.sigma[c]);
                    const SymTensor da = s.alpha[c] - coarse.alpha[c];
                    acc_a += dt_coarse * d.mesh.area[c] * ddot(da, da);
                }
            };
        }
        opts.override_N = Nl;
        RunResult res = run(sc, d, opts);

        table[l].level = l;
        table[l].dt = sc.T / Nl;
        table[l].sigma_gap = aggregate(res.ledger, sc.T / Nl, sc.material).sigma_gap_L2;
        if (l > 0) {
            table[l].diff_v = std::sqrt(acc_v);
            table[l].diff_sigma = std::sqrt(acc_s);
            table[l].diff_alpha = std::sqrt(acc_a);
        }
        prev_hist = std::move(res.history);
    }
    return table;
}

inline void write_convergence_csv(const std::vector<ConvergenceRow>& table,
                                  std::ostream& os) {
    os << "level,dt,diff_v,diff_sigma,diff_alpha,sigma_gap\n";
    os.precision(17);
    for (const auto& r : table)
        os << r.level << ',' << r.dt << ',' << r.diff_v << ',' << r.diff_sigma << ','
           << r.diff_alpha << ',' << r.sigma_gap << '\n';
}

} // namespace kvp
