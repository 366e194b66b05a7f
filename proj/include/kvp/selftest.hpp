#pragma once

#include <random>
#include <sstream>
#include <vector>

#include "kvp/scenario.hpp"

namespace kvp {

// ---------------------------------------------------------------------------
// randomized property suite, shared by `check` and the test binaries
// ---------------------------------------------------------------------------

inline SymTensor random_sym_tensor(std::mt19937_64& rng, double scale = 1.0, int dim = 2) {
    std::uniform_real_distribution<double> u(-scale, scale);
    SymTensor t(dim);
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) t(i, j) = u(rng);
    return t;
}

/// Independent reference for the return map: damped fixed-point iteration on
/// the coupled projection/hardening pair
///   sigma = alpha + proj_g(sigma* - alpha),  alpha = alpha_old + a S(sigma* - sigma)
/// instead of the closed form.
inline ReturnMapResult fixed_point_return_map(const MaterialParams& p, double dt,
                                              const SymTensor& sigma_star,
                                              const SymTensor& alpha_old,
                                              const YieldBound& g, double tol = 1e-15,
                                              int max_iter = 500000) {
    // (sigma*, alpha_old) solves the system whenever it is feasible
    if (g.is_unbounded() || frob_norm(deviator(sigma_star - alpha_old)) <= g.R)
        return {sigma_star, alpha_old, SymTensor(sigma_star.dim()), false};

    SymTensor alpha = alpha_old;
    SymTensor sigma = sigma_star;
    const double scale = 1.0 + frob_norm(sigma_star) + frob_norm(alpha_old) + g.R;
    // the update map has slope in [-b, 0] around the solution; uniform
    // damping 1/(1+b) keeps every mode contractive
    const double omega = 1.0 / (1.0 + p.b());
    for (int it = 0; it < max_iter; ++it) {
        const SymTensor sigma_new = alpha + project(g, sigma_star - alpha);
        const SymTensor target = alpha_old + p.a * apply_S(p, sigma_star - sigma_new);
        SymTensor alpha_new = alpha + omega * (target - alpha);
        const double delta = frob_norm(sigma_new - sigma) + frob_norm(alpha_new - alpha);
        sigma = sigma_new;
        alpha = alpha_new;
        if (delta < tol * scale)
            return {sigma, alpha, (1.0 / dt) * apply_S(p, sigma_star - sigma), true};
    }
    throw SolverFailure("fixed_point_return_map: no convergence", 0.0);
}

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline CheckResult check_projection_properties(std::mt19937_64& rng) {
    CheckResult res{"projection_properties"};
    std::uniform_real_distribution<double> ur(0.05, 3.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const SymTensor A = random_sym_tensor(rng, 2.0);
        const SymTensor B = random_sym_tensor(rng, 2.0);
        const double R1 = ur(rng), R2 = ur(rng);
        const SymTensor pA = project(YieldBound{R1}, A);
        const SymTensor pB = project(YieldBound{R1}, B);
        const SymTensor pA2 = project(YieldBound{R2}, A);
        // feasibility, trace preservation, 1-Lipschitz in both arguments,
        // and the obtuse-angle property (A - pA) : (pA - C) >= 0 for |C^D| <= R1
        worst = std::max(worst, frob_norm(deviator(pA)) - R1);
        worst = std::max(worst, std::abs(pA.trace() - A.trace()));
        worst = std::max(worst, frob_norm(pA - pB) - frob_norm(A - B));
        worst = std::max(worst, frob_norm(pA - pA2) - std::abs(R1 - R2));
        SymTensor C = random_sym_tensor(rng, 2.0);
        C = project(YieldBound{R1}, C);
        worst = std::max(worst, -ddot(A - pA, pA - C));
        // identity inside the feasible set and with the unbounded sentinel
        const SymTensor small = (R1 / (1.0 + frob_norm(deviator(A)))) * 0.5 * A;
        worst = std::max(worst, frob_norm(project(YieldBound{R1}, small) - small));
        worst = std::max(
            worst, frob_norm(project(YieldBound{std::numeric_limits<double>::infinity()},
                                     A) - A));
    }
    res.pass = worst <= 1e-12;
    res.detail = "max violation " + std::to_string(worst);
    return res;
}

inline CheckResult check_return_map_oracle(std::mt19937_64& rng) {
    CheckResult res{"return_map_oracle"};
    std::uniform_real_distribution<double> ur(0.05, 2.0);
    std::uniform_real_distribution<double> umat(0.2, 5.0);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        MaterialParams p;
        p.E = umat(rng);
        p.nu = 0.3 * ur(rng);
        p.eta = 1.0;
        p.a = umat(rng);
        const double dt = 0.01;
        const SymTensor sigma_star = random_sym_tensor(rng, 3.0);
        const SymTensor alpha_old = random_sym_tensor(rng, 1.0);
        const YieldBound g{ur(rng)};
        const ReturnMapResult a = return_map(p, dt, sigma_star, alpha_old, g);
        const ReturnMapResult b = fixed_point_return_map(p, dt, sigma_star, alpha_old, g);
        worst = std::max(worst, frob_norm(a.sigma - b.sigma));
        worst = std::max(worst, frob_norm(a.alpha - b.alpha));
    }
    res.pass = worst <= 1e-10;
    res.detail = "max deviation " + std::to_string(worst);
    return res;
}

inline CheckResult check_return_map_invariants(std::mt19937_64& rng) {
    CheckResult res{"return_map_invariants"};
    std::uniform_real_distribution<double> ur(0.05, 2.0);
    double worst = 0.0;
    for (int k = 0; k < 500; ++k) {
        MaterialParams p;
        p.E = 2.0;
        p.nu = 0.3;
        p.eta = 1.0;
        p.a = ur(rng);
        const SymTensor sigma_star = random_sym_tensor(rng, 3.0);
        const SymTensor alpha_old = random_sym_tensor(rng, 1.0);
        const YieldBound g{ur(rng)};
        const ReturnMapResult r = return_map(p, 0.01, sigma_star, alpha_old, g);
        worst = std::max(worst, frob_norm(deviator(r.sigma - r.alpha)) - g.R - 1e-12);
        worst = std::max(worst, std::abs(r.sigma.trace() - sigma_star.trace()));
        worst = std::max(worst, std::abs(r.alpha.trace() - alpha_old.trace()));
        // variational inequality xi : (tau - (sigma - alpha)) <= 0 on samples
        std::vector<SymTensor> samples;
        for (int s = 0; s < 20; ++s) {
            SymTensor tau = random_sym_tensor(rng, 2.0);
            samples.push_back(project(g, tau));
        }
        worst = std::max(worst, check_vi(r, g, samples));
    }
    res.pass = worst <= 1e-10;
    res.detail = "max violation " + std::to_string(worst);
    return res;
}

inline CheckResult check_mass_quadrature(std::mt19937_64& rng) {
    CheckResult res{"mass_matrix_quadrature"};
    const Mesh mesh = unit_square_mesh(4, 3, "left");
    const DofMap dm = make_dofmap(mesh);
    const SparseSpd mass = assemble_mass(mesh, dm);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        std::vector<double> a(dm.num_dofs()), b(dm.num_dofs());
        for (auto& x : a) x = u(rng);
        for (auto& x : b) x = u(rng);
        // edge-midpoint quadrature is exact for the quadratic integrand a . b
        double exact = 0.0;
        for (int c = 0; c < mesh.num_cells(); ++c) {
            const auto& cell = mesh.cells[c];
            for (int e = 0; e < 3; ++e) {
                const int i = cell[e], j = cell[(e + 1) % 3];
                for (int comp = 0; comp < 2; ++comp) {
                    const double am = 0.5 * (a[2 * i + comp] + a[2 * j + comp]);
                    const double bm = 0.5 * (b[2 * i + comp] + b[2 * j + comp]);
                    exact += mesh.area[c] / 3.0 * am * bm;
                }
            }
        }
        worst = std::max(worst, std::abs(mass_inner(mass, a, b) - exact));
    }
    res.pass = worst <= 1e-12;
    res.detail = "max deviation " + std::to_string(worst);
    return res;
}

inline CheckResult check_step_matrix_spd(std::mt19937_64& rng) {
    CheckResult res{"step_matrix_spd"};
    const Mesh mesh = unit_square_mesh(4, 4, "left");
    const DofMap dm = make_dofmap(mesh);
    MaterialParams p;
    p.E = 2.0;
    p.nu = 0.3;
    p.eta = 0.5;
    p.a = 1.0;
    const SparseSpd A = assemble_step_matrix(mesh, dm, p, 0.05);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    bool pos = true;
    for (int k = 0; k < 100; ++k) {
        std::vector<double> x(dm.num_free), y(dm.num_free);
        for (auto& v : x) v = u(rng);
        for (auto& v : y) v = u(rng);
        const auto Ax = A.multiply(x);
        const auto Ay = A.multiply(y);
        worst = std::max(worst, std::abs(vec_dot(y, Ax) - vec_dot(x, Ay)));
        if (vec_dot(x, Ax) <= 0.0) pos = false;
    }
    res.pass = pos && worst <= 1e-10;
    res.detail = pos ? "max asymmetry " + std::to_string(worst)
                     : "indefinite quadratic form";
    return res;
}

inline Scenario selftest_plastic_scenario() {
    Scenario sc;
    sc.mesh = {MeshSpec::Kind::unit_square, 8, 8, "left", ""};
    sc.material = {2.0, 0.3, 0.5, 1.0};
    sc.T = 1.0;
    sc.N = 25;
    sc.traction = {{0.0, 0.4}, {TimeProfile::Kind::sine, 3.0, 0.0}};
    sc.h = {0.0, 0.0, 0.3, {TimeProfile::Kind::sine, 2.0, 0.5}};
    sc.g = {false, 0.25, {TimeProfile::Kind::constant}, false, 0.0, 1.0, 1.0};
    return sc;
}

inline CheckResult check_energy_monitors() {
    CheckResult res{"energy_monitors"};
    const Scenario sc = selftest_plastic_scenario();
    const RunResult r = run(sc);
    const LedgerSummary s = aggregate(r.ledger, r.dt, sc.material);
    const bool ok = s.max_slack2 <= 1e-10 * s.scale && s.max_slack1 <= 1e-9 * s.scale &&
                    s.telescope_residual <= 1e-9 * s.scale;
    res.pass = ok;
    std::ostringstream os;
    os << "slack1 " << s.max_slack1 << ", slack2 " << s.max_slack2 << ", telescope "
       << s.telescope_residual << " (scale " << s.scale << ")";
    res.detail = os.str();
    return res;
}

inline CheckResult check_viscoelastic_limit() {
    CheckResult res{"viscoelastic_limit"};
    Scenario sc = selftest_plastic_scenario();
    sc.g = YieldData{true};
    const RunResult r = run(sc);
    double worst = 0.0;
    const auto& s = r.final_state;
    for (std::size_t c = 0; c < s.sigma.size(); ++c) {
        worst = std::max(worst, frob_norm(s.sigma[c] - s.sigma_star[c]));
        worst = std::max(worst, frob_norm(s.alpha[c]));
        worst = std::max(worst, frob_norm(s.xi[c]));
    }
    res.pass = worst == 0.0;
    res.detail = "max projection correction " + std::to_string(worst);
    return res;
}

inline CheckResult check_scenario_roundtrip() {
    CheckResult res{"scenario_roundtrip"};
    Scenario sc = selftest_plastic_scenario();
    sc.g.split = true;
    sc.g.split_x0 = 0.5;
    sc.g.split_lo = 0.8;
    sc.g.split_hi = 1.2;
    sc.path = {0.1, -0.1, 0.2, {TimeProfile::Kind::fwdrev, 0.5, 0.0}};
    std::ostringstream os;
    save_scenario(sc, os);
    std::istringstream is(os.str());
    Scenario back = parse_scenario(is, sc.name);
    res.pass = back == sc;
    res.detail = res.pass ? "round-trip equal" : "round-trip mismatch";
    return res;
}

} // namespace detail

inline std::vector<CheckResult> run_selftest(unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::vector<CheckResult> out;
    out.push_back(detail::check_projection_properties(rng));
    out.push_back(detail::check_return_map_oracle(rng));
    out.push_back(detail::check_return_map_invariants(rng));
    out.push_back(detail::check_mass_quadrature(rng));
    out.push_back(detail::check_step_matrix_spd(rng));
    out.push_back(detail::check_energy_monitors());
    out.push_back(detail::check_viscoelastic_limit());
    out.push_back(detail::check_scenario_roundtrip());
    return out;
}

} // namespace kvp
