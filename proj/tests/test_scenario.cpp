#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "kvp/scenario.hpp"
#include "kvp/selftest.hpp"

using namespace kvp;

namespace {

Scenario parse(const std::string& text) {
    std::istringstream is(text);
    return parse_scenario(is, "inline");
}

const char* kMinimal = R"([mesh]
kind = unit_square
nx = 2
ny = 2
gamma1 = left

[material]
E = 2
nu = 0.3
eta = 0.5
a = 1

[time]
T = 1
N = 5
)";

} // namespace

TEST(ScenarioParse, MinimalFileAndDefaults) {
    const Scenario sc = parse(kMinimal);
    EXPECT_EQ(sc.N, 5);
    EXPECT_TRUE(sc.g.unbounded);
    EXPECT_TRUE(sc.force.is_zero());
    EXPECT_TRUE(sc.h.is_zero());
    EXPECT_EQ(sc.output.vtk_every, 0);
}

TEST(ScenarioParse, Errors) {
    EXPECT_THROW(parse("[mesh]\nbogus = 1\n"), BadInput);
    EXPECT_THROW(parse("[nosuch]\nk = v\n"), BadInput);
    EXPECT_THROW(parse("k = v\n"), BadInput);                       // outside any section
    EXPECT_THROW(parse("[data]\nforce = 1 2 sin 1 0\n"), BadInput); // missing '*'
    EXPECT_THROW(parse("[data]\nforce = 1 * const\n"), BadInput);   // wrong arity
    EXPECT_THROW(parse("[data]\nh = 1 2 3 * wiggle\n"), BadInput);  // unknown profile
    EXPECT_THROW(parse("[data]\ng = -1 * const\n"), BadInput);      // negative bound
    EXPECT_THROW(parse("[data]\ng = 1 * sin 2\n"), BadInput);       // missing parameter
    EXPECT_THROW(parse("[data]\ng = 1 * const | split_x 0.5\n"), BadInput);
    EXPECT_THROW(parse("[initial]\nv0 = 1\n"), BadInput);
    EXPECT_THROW(parse("[time]\nT = x\n"), BadInput);
    EXPECT_THROW(parse(std::string(kMinimal) + "[time]\nN = 0\n"), BadInput);
    EXPECT_THROW(parse(std::string(kMinimal) + "[time]\nT = -1\n"), BadInput);
    EXPECT_THROW(load_scenario("/nonexistent/file.scn"), BadInput);
    try {
        parse("[mesh]\nmalformed line without equals\n");
        FAIL() << "expected BadInput";
    } catch (const BadInput& e) {
        EXPECT_NE(std::string(e.what()).find("inline:2"), std::string::npos) << e.what();
    }
}

TEST(ScenarioParse, RoundTripAllProfiles) {
    Scenario sc = parse(kMinimal);
    sc.force = {{0.25, -1.5}, {TimeProfile::Kind::ramp, 0.0, 2.0}};
    sc.traction = {{0.0, 0.125}, {TimeProfile::Kind::sine, 3.5, 0.25}};
    sc.h = {0.1, -0.2, 0.3, {TimeProfile::Kind::fwdrev, 0.625, 0.0}};
    sc.g = {false, 1.0, {TimeProfile::Kind::step, 0.5, 0.3, 0.18}, true, 0.5, 0.75, 1.25};
    sc.v0 = {0.375, -0.0625};
    sc.sigma0(0, 1) = 0.01;
    sc.alpha0(1, 1) = -0.02;
    sc.path = {0.0, 0.0, 0.875, {TimeProfile::Kind::fwdrev, 0.5, 0.0}};
    sc.output = {"energy.csv", 10};

    std::ostringstream os;
    save_scenario(sc, os);
    std::istringstream is(os.str());
    const Scenario back = parse_scenario(is, "inline");
    EXPECT_TRUE(back == sc);
}

TEST(ScenarioParse, ShippedFixturesLoad) {
    for (const char* name :
         {"flagship.scn", "viscoelastic.scn", "gshrink.scn", "bauschinger.scn"}) {
        const auto path = std::filesystem::path(SCENARIO_DIR) / name;
        EXPECT_NO_THROW(load_scenario(path.string())) << name;
    }
    const Scenario fl =
        load_scenario((std::filesystem::path(SCENARIO_DIR) / "flagship.scn").string());
    EXPECT_EQ(fl.mesh.nx, 32);
    EXPECT_EQ(fl.N, 200);
    EXPECT_EQ(fl.name_stem(), "flagship");
}

TEST(Profiles, AveragesAreExact) {
    // exact means vs a fine Riemann sum
    const double T = 2.0;
    for (const TimeProfile p :
         {TimeProfile{TimeProfile::Kind::constant, 0, 0, 0},
          TimeProfile{TimeProfile::Kind::sine, 3.0, 0.7, 0},
          TimeProfile{TimeProfile::Kind::ramp, 0.5, 2.5, 0},
          TimeProfile{TimeProfile::Kind::fwdrev, 0.77, 0, 0},
          TimeProfile{TimeProfile::Kind::step, 0.77, 1.5, -0.25}}) {
        for (const auto& [t0, t1] : {std::pair{0.1, 0.9}, {0.7, 0.85}, {0.5, 1.9}}) {
            // midpoint-rule error is O(dt^2) for the smooth profiles and
            // O(dt * jump) at a discontinuity
            const int n = 500'000;
            double sum = 0.0;
            const double dt = (t1 - t0) / n;
            for (int i = 0; i < n; ++i) sum += p.eval(t0 + (i + 0.5) * dt, T);
            EXPECT_NEAR(p.average(t0, t1, T), sum / n, 1e-5);
        }
    }
}

TEST(YieldDescriptor, SpaceSplitAndSentinel) {
    YieldData g{false, 2.0, {TimeProfile::Kind::constant}, true, 0.5, 0.75, 1.25};
    EXPECT_DOUBLE_EQ(g.eval(0.3, 1.0, {0.2, 0.9}), 1.5);
    EXPECT_DOUBLE_EQ(g.eval(0.3, 1.0, {0.8, 0.1}), 2.5);
    const YieldData ub{true};
    EXPECT_TRUE(std::isinf(ub.eval(0.0, 1.0, {0.0, 0.0})));
}

TEST(Run, DeterministicAndReproducible) {
    const Scenario sc = detail::selftest_plastic_scenario();
    RunOptions opts;
    opts.record_history = true;
    const RunResult a = run(sc, opts);
    const RunResult b = run(sc, opts);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t n = 0; n < a.history.size(); ++n) {
        EXPECT_TRUE(a.history[n].v == b.history[n].v);
        for (std::size_t c = 0; c < a.history[n].sigma.size(); ++c) {
            EXPECT_TRUE(a.history[n].sigma[c] == b.history[n].sigma[c]);
            EXPECT_TRUE(a.history[n].alpha[c] == b.history[n].alpha[c]);
        }
    }
}

TEST(Run, WritesRequestedOutputs) {
    Scenario sc = detail::selftest_plastic_scenario();
    sc.N = 6;
    sc.output = {"energy.csv", 3};
    const auto dir = std::filesystem::temp_directory_path() / "kvp_run_outputs";
    std::filesystem::remove_all(dir);
    RunOptions opts;
    opts.output_dir = dir.string();
    run(sc, opts);
    EXPECT_TRUE(std::filesystem::exists(dir / "energy.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "state_00000.vtk"));
    EXPECT_TRUE(std::filesystem::exists(dir / "state_00003.vtk"));
    EXPECT_TRUE(std::filesystem::exists(dir / "state_00006.vtk"));
    EXPECT_FALSE(std::filesystem::exists(dir / "state_00004.vtk"));

    // snapshot must be a legacy-format VTK unstructured grid
    std::ifstream vtk(dir / "state_00003.vtk");
    std::string l1, l2;
    std::getline(vtk, l1);
    std::getline(vtk, l2);
    EXPECT_EQ(l1, "# vtk DataFile Version 3.0");
}

TEST(Converge, TableShapeAndDeterminism) {
    Scenario sc = detail::selftest_plastic_scenario();
    sc.N = 5;
    const auto t1 = converge(sc, 3);
    const auto t2 = converge(sc, 3);
    ASSERT_EQ(t1.size(), std::size_t(3));
    EXPECT_EQ(t1[0].diff_v, 0.0);
    EXPECT_EQ(t1[2].level, 2);
    EXPECT_DOUBLE_EQ(t1[1].dt, sc.T / 10.0);
    for (std::size_t l = 0; l < t1.size(); ++l) {
        EXPECT_EQ(t1[l].diff_v, t2[l].diff_v);
        EXPECT_EQ(t1[l].sigma_gap, t2[l].sigma_gap);
        EXPECT_GT(t1[l].sigma_gap, 0.0);
    }
    EXPECT_THROW(converge(sc, 1), BadInput);

    std::ostringstream os;
    write_convergence_csv(t1, os);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "level,dt,diff_v,diff_sigma,diff_alpha,sigma_gap");
}

TEST(MaterialPoint, ElasticPathMatchesClosedForm) {
    // below yield: sigma = C (cumulative strain), alpha untouched
    MaterialParams p{2.0, 0.3, 0.5, 1.0};
    TensorData rate{0.05, -0.02, 0.03, {TimeProfile::Kind::constant}};
    YieldData g{false, 10.0, {TimeProfile::Kind::constant}, false, 0.0, 1.0, 1.0};
    const auto series = material_point(p, rate, g, 1.0, 20);
    ASSERT_EQ(series.size(), std::size_t(21));
    for (std::size_t n = 0; n < series.size(); ++n) {
        const double t = n * 0.05;
        EXPECT_LT(frob_norm(series[n].sigma - apply_C(p, rate.with_factor(t))), 1e-13);
        EXPECT_EQ(frob_norm(series[n].alpha), 0.0);
        EXPECT_FALSE(series[n].plastic);
    }
}

TEST(MaterialPoint, ClosedPlasticLoopEnclosesArea) {
    MaterialParams p{2.0, 0.3, 0.5, 0.5};
    const double T = 1.0;
    const int N = 1000;
    TensorData rate{0.0, 0.0, 0.9, {TimeProfile::Kind::sine, 2.0 * M_PI / T, 0.0}};
    const YieldData tight{false, 0.2, {TimeProfile::Kind::constant}, false, 0.0, 1.0, 1.0};
    const YieldData loose{true};

    const auto loop_area = [&](const YieldData& g) {
        const auto s = material_point(p, rate, g, T, N);
        double strain = 0.0, area = 0.0;
        for (int n = 1; n <= N; ++n) {
            const double de = rate.average((n - 1) * T / N, n * T / N, T).coeff(2) * T / N;
            area += 0.5 * (s[n].sigma(0, 1) + s[n - 1].sigma(0, 1)) * de;
            strain += de;
        }
        EXPECT_NEAR(strain, 0.0, 1e-12);   // the loop closes
        return area;
    };
    EXPECT_GT(loop_area(tight), 1e-3);         // hysteresis
    EXPECT_NEAR(loop_area(loose), 0.0, 1e-12); // elastic loop stores no work
}

TEST(MaterialPoint, CsvOutput) {
    MaterialParams p{2.0, 0.3, 0.5, 1.0};
    TensorData rate{0.0, 0.0, 0.5, {TimeProfile::Kind::constant}};
    YieldData g{false, 0.3, {TimeProfile::Kind::constant}, false, 0.0, 1.0, 1.0};
    std::ostringstream os;
    write_material_point_csv(material_point(p, rate, g, 1.0, 5), os);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header,
              "t,sigma_xx,sigma_yy,sigma_xy,alpha_xx,alpha_yy,alpha_xy,"
              "xi_xx,xi_yy,xi_xy,plastic,sigma_dev_norm");
    int rows = 0;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    EXPECT_EQ(rows, 6);
}

TEST(Selftest, AllChecksPass) {
    for (const auto& r : run_selftest(987654321ull)) EXPECT_TRUE(r.pass) << r.name;
}
