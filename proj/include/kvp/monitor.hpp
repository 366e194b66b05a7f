#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "kvp/state.hpp"

namespace kvp {

/// Per-step scalar diagnostics. Signed slacks: <= 0 (up to round-off) means
/// the corresponding per-step inequality is satisfied.
///
/// slack2: ||sigma_n||_S^2 - ||sigma*_n||_S^2 + ||sigma_n - sigma*_n||_S^2
///         + (1/a)(||alpha_n||^2 - ||alpha_{n-1}||^2 + ||alpha_n - alpha_{n-1}||^2)
/// slack1: residual of the per-step energy identity obtained by pairing the
///         momentum equation with v_n and the trial relation with sigma*_n:
///         (1/dt)(||v_n||^2 - ||v_{n-1}||^2 + ||sigma*_n||_S^2 - ||sigma_{n-1}||_S^2
///                + ||v_n - v_{n-1}||^2 + ||sigma*_n - sigma_{n-1}||_S^2)
///         + 2 eta ||E(v_n)||^2 - 2 <f_n, v_n> - 2 (h_n, sigma*_n),
///         which is zero up to the linear-solver residual and bounds the
///         Young-inequality form of the per-step energy estimate.
struct LedgerRow {
    int n = 0;
    double t = 0.0;
    double v_sq = 0.0;            // ||v_n||_H^2
    double sigstar_S_sq = 0.0;    // ||sigma*_n||_S^2
    double sig_S_sq = 0.0;        // ||sigma_n||_S^2
    double alpha_sq = 0.0;        // ||alpha_n||_H^2
    double strain_sq = 0.0;       // ||E(v_n)||_H^2
    double gap_S_sq = 0.0;        // ||sigma*_n - sigma_n||_S^2
    double dv_sq = 0.0;           // ||v_n - v_{n-1}||_H^2
    double dalpha_sq = 0.0;       // ||alpha_n - alpha_{n-1}||_H^2
    double xi_sq = 0.0;           // ||xi_n||_H^2
    double slack1 = 0.0;
    double slack2 = 0.0;
    double gap_H_sq = 0.0;        // ||sigma*_n - sigma_n||_H^2

    // carried for the telescoped aggregate check, not part of the CSV
    double v_prev_sq = 0.0;
    double sig_prev_S_sq = 0.0;
    double alpha_prev_sq = 0.0;
    double dsigstar_S_sq = 0.0;   // ||sigma*_n - sigma_{n-1}||_S^2
    double f_pair = 0.0;          // <f_n, v_n>
    double h_pair = 0.0;          // (h_n, sigma*_n)
};

class EnergyLedger {
public:
    void add(LedgerRow row) {
        row.n = static_cast<int>(rows_.size()) + 1;
        rows_.push_back(std::move(row));
    }
    const std::vector<LedgerRow>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }

    /// 1 + the largest energy entry seen; tolerance scale for the slacks.
    double scale() const {
        double m = 0.0;
        for (const auto& r : rows_)
            m = std::max({m, r.v_sq, r.sigstar_S_sq, r.sig_S_sq, r.alpha_sq,
                          r.v_prev_sq, r.sig_prev_S_sq, r.alpha_prev_sq});
        return 1.0 + m;
    }

    double max_slack1() const {
        double m = 0.0;
        for (const auto& r : rows_) m = std::max(m, std::abs(r.slack1));
        return m;
    }

    double max_slack2() const {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& r : rows_) m = std::max(m, r.slack2);
        return rows_.empty() ? 0.0 : m;
    }

    /// Column order: n, t, v_sq, sigstar_S_sq, sig_S_sq, alpha_sq, strain_sq,
    /// gap_S_sq, dv_sq, dalpha_sq, xi_sq, slack1, slack2, gap_H_sq.
    void write_csv(std::ostream& os) const {
        os << "n,t,v_sq,sigstar_S_sq,sig_S_sq,alpha_sq,strain_sq,gap_S_sq,"
              "dv_sq,dalpha_sq,xi_sq,slack1,slack2,gap_H_sq\n";
        os.precision(17);
        for (const auto& r : rows_)
            os << r.n << ',' << r.t << ',' << r.v_sq << ',' << r.sigstar_S_sq << ','
               << r.sig_S_sq << ',' << r.alpha_sq << ',' << r.strain_sq << ','
               << r.gap_S_sq << ',' << r.dv_sq << ',' << r.dalpha_sq << ',' << r.xi_sq
               << ',' << r.slack1 << ',' << r.slack2 << ',' << r.gap_H_sq << '\n';
    }

    void write_csv(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw BadInput("EnergyLedger: cannot open '" + path + "'");
        write_csv(os);
    }

private:
    std::vector<LedgerRow> rows_;
};

/// All ledger scalars for one completed step. f_pair = <f_n, v_n> and
/// h_pair = (h_n, sigma*_n) are supplied by the caller, which knows the load.
inline LedgerRow compute_row(const Mesh& mesh, const MaterialParams& p,
                             const SparseSpd& mass_full, double dt, const State& prev,
                             const State& next, double f_pair, double h_pair) {
    LedgerRow r;
    r.t = next.t;

    r.v_sq = mass_inner(mass_full, next.v, next.v);
    r.v_prev_sq = mass_inner(mass_full, prev.v, prev.v);
    std::vector<double> dv(next.v.size());
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = next.v[i] - prev.v[i];
    r.dv_sq = mass_inner(mass_full, dv, dv);

    const ElementField ev = strain(mesh, next.v);
    r.strain_sq = field_norm_sq(mesh, ev);

    r.sigstar_S_sq = field_norm_S_sq(mesh, p, next.sigma_star);
    r.sig_S_sq = field_norm_S_sq(mesh, p, next.sigma);
    r.sig_prev_S_sq = field_norm_S_sq(mesh, p, prev.sigma);
    r.alpha_sq = field_norm_sq(mesh, next.alpha);
    r.alpha_prev_sq = field_norm_sq(mesh, prev.alpha);
    r.xi_sq = field_norm_sq(mesh, next.xi);

    double gap_S = 0.0, gap_H = 0.0, dalpha = 0.0, dss = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const SymTensor gap = next.sigma_star[c] - next.sigma[c];
        gap_S += mesh.area[c] * norm_S_sq(p, gap);
        gap_H += mesh.area[c] * ddot(gap, gap);
        const SymTensor da = next.alpha[c] - prev.alpha[c];
        dalpha += mesh.area[c] * ddot(da, da);
        const SymTensor ds = next.sigma_star[c] - prev.sigma[c];
        dss += mesh.area[c] * norm_S_sq(p, ds);
    }
    r.gap_S_sq = gap_S;
    r.gap_H_sq = gap_H;
    r.dalpha_sq = dalpha;
    r.dsigstar_S_sq = dss;
    r.f_pair = f_pair;
    r.h_pair = h_pair;

    r.slack2 = r.sig_S_sq - r.sigstar_S_sq + r.gap_S_sq +
               (r.alpha_sq - r.alpha_prev_sq + r.dalpha_sq) / p.a;
    r.slack1 = (r.v_sq - r.v_prev_sq + r.sigstar_S_sq - r.sig_prev_S_sq + r.dv_sq +
                r.dsigstar_S_sq) / dt +
               2.0 * p.eta * r.strain_sq - 2.0 * f_pair - 2.0 * h_pair;
    return r;
}

/// Run-level aggregates of the ledger.
struct LedgerSummary {
    double linf_v_sq = 0.0;
    double linf_sigstar_S_sq = 0.0;
    double linf_sig_S_sq = 0.0;
    double linf_alpha_sq = 0.0;
    double dt_sum_strain_sq = 0.0;     // dt * sum ||E(v_n)||^2
    double dt_sum_xi_sq = 0.0;         // dt * sum ||xi_n||^2
    double sigma_gap_L2 = 0.0;         // ||sigma*_bar - sigma_bar||_{L2(0,T;H)}
    double max_slack1 = 0.0;
    double max_slack2 = 0.0;
    double scale = 1.0;
    /// Residual of the telescoped per-step estimates against the summed
    /// slacks; an exact identity up to round-off.
    double telescope_residual = 0.0;
};

inline LedgerSummary aggregate(const EnergyLedger& ledger, double dt,
                               const MaterialParams& p) {
    LedgerSummary s;
    s.scale = ledger.scale();
    s.max_slack1 = ledger.max_slack1();
    s.max_slack2 = ledger.max_slack2();
    const auto& rows = ledger.rows();
    double gap_sum = 0.0, slack_sum = 0.0, acc = 0.0;
    for (const auto& r : rows) {
        s.linf_v_sq = std::max(s.linf_v_sq, r.v_sq);
        s.linf_sigstar_S_sq = std::max(s.linf_sigstar_S_sq, r.sigstar_S_sq);
        s.linf_sig_S_sq = std::max(s.linf_sig_S_sq, r.sig_S_sq);
        s.linf_alpha_sq = std::max(s.linf_alpha_sq, r.alpha_sq);
        s.dt_sum_strain_sq += dt * r.strain_sq;
        s.dt_sum_xi_sq += dt * r.xi_sq;
        gap_sum += dt * r.gap_H_sq;
        slack_sum += dt * r.slack1 + r.slack2;
        acc += 2.0 * p.eta * dt * r.strain_sq + r.dv_sq + r.dsigstar_S_sq + r.gap_S_sq +
               r.dalpha_sq / p.a - 2.0 * dt * (r.f_pair + r.h_pair);
    }
    s.sigma_gap_L2 = std::sqrt(gap_sum);
    if (!rows.empty()) {
        const auto& first = rows.front();
        const auto& last = rows.back();
        const double tele = (last.v_sq - first.v_prev_sq) +
                            (last.sig_S_sq - first.sig_prev_S_sq) +
                            (last.alpha_sq - first.alpha_prev_sq) / p.a + acc;
        s.telescope_residual = std::abs(tele - slack_sum);
    }
    return s;
}

/// History of states from one run, for cross-run comparisons.
using StateHistory = std::vector<State>;

/// Difference energy G_n = 1/2 ||e_v||_H^2 + 1/2 ||e_sigma||_S^2
/// + 1/(2a) ||e_alpha||^2 between two runs on the same mesh and dt.
inline std::vector<double> difference_energy(const Mesh& mesh, const SparseSpd& mass_full,
                                             const MaterialParams& p,
                                             const StateHistory& run_a,
                                             const StateHistory& run_b) {
    if (run_a.size() != run_b.size())
        throw BadInput("difference_energy: runs have different step counts");
    std::vector<double> g;
    g.reserve(run_a.size());
    for (std::size_t n = 0; n < run_a.size(); ++n) {
        const State& a = run_a[n];
        const State& b = run_b[n];
        if (a.v.size() != b.v.size() || a.sigma.size() != b.sigma.size())
            throw BadInput("difference_energy: runs use different discretizations");
        std::vector<double> ev(a.v.size());
        for (std::size_t i = 0; i < ev.size(); ++i) ev[i] = a.v[i] - b.v[i];
        double es = 0.0, ea = 0.0;
        for (int c = 0; c < mesh.num_cells(); ++c) {
            es += mesh.area[c] * norm_S_sq(p, a.sigma[c] - b.sigma[c]);
            const SymTensor da = a.alpha[c] - b.alpha[c];
            ea += mesh.area[c] * ddot(da, da);
        }
        g.push_back(0.5 * mass_inner(mass_full, ev, ev) + 0.5 * es + ea / (2.0 * p.a));
    }
    return g;
}

} // namespace kvp
