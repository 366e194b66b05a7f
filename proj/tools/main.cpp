#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "kvp/selftest.hpp"

namespace {

struct GlobalOpts {
    std::string output_dir = ".";
    bool quiet = false;
    unsigned long long seed = 12345;
};

void print_summary(const kvp::RunResult& res, const kvp::MaterialParams& p,
                   const GlobalOpts& g) {
    const kvp::LedgerSummary s = kvp::aggregate(res.ledger, res.dt, p);
    std::cout << "steps:            " << res.N << " (dt = " << res.dt << ")\n";
    std::cout << "final time:       " << res.final_state.t << "\n";
    std::cout << "max |v|_H^2:      " << s.linf_v_sq << "\n";
    std::cout << "max |sigma|_S^2:  " << s.linf_sig_S_sq << "\n";
    std::cout << "max |alpha|^2:    " << s.linf_alpha_sq << "\n";
    std::cout << "sigma gap L2:     " << s.sigma_gap_L2 << "\n";
    std::cout << "max slack1:       " << s.max_slack1 << "  (tol " << 1e-9 * s.scale
              << ")\n";
    std::cout << "max slack2:       " << s.max_slack2 << "  (tol " << 1e-10 * s.scale
              << ")\n";
    std::cout << "telescope resid:  " << s.telescope_residual << "\n";
    const bool ok = s.max_slack1 <= 1e-9 * s.scale && s.max_slack2 <= 1e-10 * s.scale;
    std::cout << "energy monitors:  " << (ok ? "PASS" : "FAIL") << "\n";
    if (!ok) throw kvp::InvariantViolation("energy monitor out of tolerance");
    (void)g;
}

int cmd_run(const std::string& scenario_path, const GlobalOpts& g) {
    const kvp::Scenario sc = kvp::load_scenario(scenario_path);
    kvp::RunOptions opts;
    opts.output_dir = g.output_dir;
    opts.quiet = g.quiet;
    const auto t0 = std::chrono::steady_clock::now();
    const kvp::RunResult res = kvp::run(sc, opts);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!g.quiet) {
        std::cout << "scenario:         " << scenario_path << "\n";
        std::cout << "wall time:        " << wall << " s\n";
        print_summary(res, sc.material, g);
        if (!sc.output.energy_csv.empty())
            std::cout << "energy csv:       "
                      << (std::filesystem::path(g.output_dir) / sc.output.energy_csv)
                             .string()
                      << "\n";
    } else {
        // still enforce the monitors; only the report is suppressed
        const kvp::LedgerSummary s = kvp::aggregate(res.ledger, res.dt, sc.material);
        if (s.max_slack1 > 1e-9 * s.scale || s.max_slack2 > 1e-10 * s.scale)
            throw kvp::InvariantViolation("energy monitor out of tolerance");
    }
    return 0;
}

int cmd_converge(const std::string& scenario_path, int levels, const GlobalOpts& g) {
    const kvp::Scenario sc = kvp::load_scenario(scenario_path);
    const auto table = kvp::converge(sc, levels);
    std::filesystem::create_directories(g.output_dir);
    const auto csv =
        std::filesystem::path(g.output_dir) / (sc.name_stem() + "_convergence.csv");
    {
        std::ofstream os(csv);
        if (!os) throw kvp::BadInput("cannot open '" + csv.string() + "'");
        kvp::write_convergence_csv(table, os);
    }
    if (!g.quiet) {
        std::cout << "level        dt         diff_v     diff_sigma  diff_alpha  sigma_gap\n";
        for (const auto& r : table)
            std::printf("%5d  %10.4e %10.4e %10.4e %10.4e %10.4e\n", r.level, r.dt,
                        r.diff_v, r.diff_sigma, r.diff_alpha, r.sigma_gap);
        std::cout << "convergence csv:  " << csv.string() << "\n";
    }
    return 0;
}

int cmd_mpoint(const std::string& scenario_path, const GlobalOpts& g) {
    const kvp::Scenario sc = kvp::load_scenario(scenario_path);
    const auto series = kvp::material_point(sc.material, sc.path, sc.g, sc.T, sc.N,
                                            sc.sigma0, sc.alpha0);
    std::filesystem::create_directories(g.output_dir);
    const auto csv = std::filesystem::path(g.output_dir) / (sc.name_stem() + "_mpoint.csv");
    {
        std::ofstream os(csv);
        if (!os) throw kvp::BadInput("cannot open '" + csv.string() + "'");
        kvp::write_material_point_csv(series, os);
    }
    if (!g.quiet) {
        int plastic_steps = 0;
        for (const auto& s : series) plastic_steps += s.plastic ? 1 : 0;
        std::cout << "steps:            " << sc.N << " (dt = " << sc.dt() << ")\n";
        std::cout << "plastic steps:    " << plastic_steps << "\n";
        std::cout << "final |sigma^D|:  "
                  << kvp::frob_norm(kvp::deviator(series.back().sigma)) << "\n";
        std::cout << "mpoint csv:       " << csv.string() << "\n";
    }
    return 0;
}

int cmd_check(const GlobalOpts& g) {
    const auto results = kvp::run_selftest(g.seed);
    bool all = true;
    for (const auto& r : results) {
        all = all && r.pass;
        if (!g.quiet)
            std::printf("%-26s %s  (%s)\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                        r.detail.c_str());
    }
    if (!all) throw kvp::InvariantViolation("self-test failure");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Projection-scheme solver for viscoplasticity with kinematic hardening"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--output-dir", g.output_dir, "Directory for output files");
    app.add_flag("--quiet", g.quiet, "Suppress the report on stdout");
    app.add_option("--seed", g.seed, "Seed for the randomized property checks");

    std::string scenario_path;
    int levels = 3;

    auto* run_cmd = app.add_subcommand("run", "Time-step a scenario and verify monitors");
    run_cmd->add_option("scenario", scenario_path, "Scenario file")->required();

    auto* conv_cmd = app.add_subcommand("converge", "Time-step refinement study");
    conv_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
    conv_cmd->add_option("--levels", levels, "Number of dt-halving levels (>= 2)");

    auto* mp_cmd = app.add_subcommand("mpoint", "0D material-point driver");
    mp_cmd->add_option("scenario", scenario_path, "Scenario file")->required();

    app.add_subcommand("check", "Run the built-in property suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);   // --help
        app.exit(e);
        return 4;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(scenario_path, g);
        if (conv_cmd->parsed()) return cmd_converge(scenario_path, levels, g);
        if (mp_cmd->parsed()) return cmd_mpoint(scenario_path, g);
        return cmd_check(g);
    } catch (const kvp::BadInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const kvp::SolverFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const kvp::InvariantViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
