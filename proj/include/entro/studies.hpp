#pragma once

#include <string>
#include <vector>

#include "entro/scheme.hpp"

namespace entro::studies {

/// The bounded quantities of the first uniform estimate, evaluated on a
/// completed trajectory.
struct EnergyQuantities {
    double stab_theta_sup_h_sq = 0.0;   // tau^{1/2} * max_i ||theta^i||_H^2
    double stab_dtheta_l2_sq = 0.0;     // tau^{3/2} * sum tau ||dtheta/tau||_H^2
    double theta_sup_l1 = 0.0;          // max_i ||theta^i||_L1
    double grad_theta_l2_sq = 0.0;      // sum tau ||grad theta^i||^2
    double dchi_l2_sq = 0.0;            // sum tau ||dchi/tau||_H^2
    double chi_sup_v_sq = 0.0;          // max_i ||chi^i||_V^2
    double tau_dchi_v_sq = 0.0;         // tau * sum tau ||dchi/tau||_V^2
    double beta_sup_l1 = 0.0;           // max_i int beta_tilde_eps(chi^i)

    std::vector<double> as_vector() const;
    static std::vector<std::string> names();
};

EnergyQuantities energy_quantities(const scheme::Trajectory& traj);

struct EnergyMonitorReport {
    std::vector<EnergyQuantities> per_run;  // ordered by decreasing tau
    std::vector<bool> quantity_ok;          // ratio test per quantity
    bool all_ok = true;
    std::string summary() const;
};

/// Ratio test across a tau-halving family (coarsest first): each quantity
/// at the finer run must satisfy v_fine <= 1.25 * v_coarse + 0.1 * scale.
EnergyMonitorReport energy_monitor(const std::vector<scheme::Trajectory>& runs,
                                   double scenario_scale = 1.0);

/// Max over steps of the chi obstacle violation of one run.
double obstacle_violation(const scheme::Trajectory& traj);

/// Violation table across an eps ladder (fixed-eps runs of the same
/// scenario); rows are (eps, violation).
std::vector<std::pair<double, double>>
obstacle_violation_table(const scheme::SchemeConfig& base,
                         const std::vector<double>& eps_ladder);

struct StudyReport {
    std::vector<double> ladder;              // tau or eps values, decreasing
    // discrete norms of differences against the finest run (one per
    // non-finest ladder member)
    std::vector<double> diff_lntheta_vprime;  // C0([0,T]; V')
    std::vector<double> diff_chi_v;           // C0([0,T]; V)
    std::vector<double> diff_sqrt_theta_l2h;  // L2(0,T; H) of theta^{1/2}
    // successive-pair Cauchy differences (ladder.size()-1 entries)
    std::vector<double> cauchy_lntheta_vprime;
    std::vector<double> cauchy_chi_v;
    double order_lntheta = 0.0, order_chi = 0.0, order_sqrt_theta = 0.0;

    std::string to_csv() const;
    std::string summary() const;
};

/// Self-convergence study over a tau ladder given as step counts
/// (ascending N, each dividing the finest); the finest run is the
/// reference. Duplicate entries produce zero differences and are skipped
/// by the order fit.
StudyReport tau_study(const scheme::SchemeConfig& base,
                      const std::vector<int>& step_counts, int jobs = 1);

/// Same scenario at fixed tau over a decreasing eps ladder (fixed-eps
/// policy per member).
StudyReport eps_study(const scheme::SchemeConfig& base,
                      const std::vector<double>& eps_ladder, int jobs = 1);

/// Least-squares slope of log(diff) against log(ladder), skipping
/// non-positive differences; 0 when fewer than two usable points.
double fit_order(const std::vector<double>& ladder_values,
                 const std::vector<double>& diffs);

}  // namespace entro::studies
