#include "entro/studies.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace entro::studies {

using scheme::SchemeConfig;
using scheme::Trajectory;

std::vector<double> EnergyQuantities::as_vector() const {
    return {stab_theta_sup_h_sq, stab_dtheta_l2_sq, theta_sup_l1,
            grad_theta_l2_sq, dchi_l2_sq, chi_sup_v_sq, tau_dchi_v_sq,
            beta_sup_l1};
}

std::vector<std::string> EnergyQuantities::names() {
    return {"tau^1/2 sup ||theta||_H^2", "tau^3/2 ||dtheta/dt||_L2H^2",
            "sup ||theta||_L1",          "||grad theta||_L2H^2",
            "||dchi/dt||_L2H^2",         "sup ||chi||_V^2",
            "tau ||dchi/dt||_L2V^2",     "sup int beta_eps(chi)"};
}

EnergyQuantities energy_quantities(const Trajectory& traj) {
    const double tau = traj.config.tau();
    const double s = std::sqrt(tau);
    EnergyQuantities q;
    for (int i = 1; i <= traj.n_steps(); ++i) {
        const Field& th = traj.theta_at(i);
        const Field& ch = traj.chi_at(i);
        q.stab_theta_sup_h_sq = std::fmax(q.stab_theta_sup_h_sq, s * inner_h(th, th));
        q.theta_sup_l1 = std::fmax(q.theta_sup_l1, norm_l1(th));
        const Field dth = th - traj.theta_at(i - 1);
        q.stab_dtheta_l2_sq += s * tau * tau * std::pow(norm_h(dth) / tau, 2);
        q.grad_theta_l2_sq += tau * grad_sq(th);
        const Field dch = ch - traj.chi_at(i - 1);
        const double dchi_h_sq = std::pow(norm_h(dch) / tau, 2);
        q.dchi_l2_sq += tau * dchi_h_sq;
        q.tau_dchi_v_sq += tau * tau * (dchi_h_sq + grad_sq(dch) / (tau * tau));
        q.chi_sup_v_sq = std::fmax(q.chi_sup_v_sq, inner_h(ch, ch) + grad_sq(ch));
        q.beta_sup_l1 = std::fmax(q.beta_sup_l1, traj.ledger[i - 1].beta_moreau_integral);
    }
    return q;
}

EnergyMonitorReport energy_monitor(const std::vector<Trajectory>& runs,
                                   double scenario_scale) {
    if (runs.size() < 2)
        throw std::invalid_argument("energy monitor needs at least two runs");
    EnergyMonitorReport rep;
    for (const auto& t : runs) rep.per_run.push_back(energy_quantities(t));
    const std::size_t nq = rep.per_run.front().as_vector().size();
    rep.quantity_ok.assign(nq, true);
    for (std::size_t r = 1; r < rep.per_run.size(); ++r) {
        const auto coarse = rep.per_run[r - 1].as_vector();
        const auto fine = rep.per_run[r].as_vector();
        for (std::size_t k = 0; k < nq; ++k) {
            if (!(fine[k] <= 1.25 * coarse[k] + 0.1 * scenario_scale)) {
                rep.quantity_ok[k] = false;
                rep.all_ok = false;
            }
        }
    }
    return rep;
}

std::string EnergyMonitorReport::summary() const {
    std::ostringstream os;
    const auto names = EnergyQuantities::names();
    for (std::size_t k = 0; k < names.size(); ++k) {
        os << (quantity_ok[k] ? "  ok   " : "  FAIL ") << names[k] << ':';
        for (const auto& q : per_run) os << ' ' << q.as_vector()[k];
        os << '\n';
    }
    return os.str();
}

double obstacle_violation(const Trajectory& traj) {
    double v = 0.0;
    for (const auto& row : traj.ledger)
        v = std::fmax(v, row.obstacle_violation);
    return v;
}

std::vector<std::pair<double, double>>
obstacle_violation_table(const SchemeConfig& base,
                         const std::vector<double>& eps_ladder) {
    std::vector<std::pair<double, double>> table;
    for (double eps : eps_ladder) {
        SchemeConfig cfg = base;
        cfg.epsilon.policy = scheme::EpsPolicy::Fixed;
        cfg.epsilon.fixed_eps = eps;
        table.emplace_back(eps, obstacle_violation(scheme::run(cfg)));
    }
    return table;
}

double fit_order(const std::vector<double>& ladder_values,
                 const std::vector<double>& diffs) {
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < diffs.size() && j < ladder_values.size(); ++j) {
        if (diffs[j] > 0.0) {
            xs.push_back(std::log(ladder_values[j]));
            ys.push_back(std::log(diffs[j]));
        }
    }
    if (xs.size() < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) { mx += xs[j]; my += ys[j]; }
    mx /= xs.size(); my /= ys.size();
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        num += (xs[j] - mx) * (ys[j] - my);
        den += (xs[j] - mx) * (xs[j] - mx);
    }
    return den > 0.0 ? num / den : 0.0;
}

namespace {

void run_members(std::vector<SchemeConfig> configs,
                 std::vector<Trajectory>& out, int jobs) {
    out.resize(configs.size());
    if (jobs < 1) jobs = 1;
    std::size_t next = 0;
    while (next < configs.size()) {
        const std::size_t batch = std::min<std::size_t>(jobs, configs.size() - next);
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> errors(batch);
        for (std::size_t b = 0; b < batch; ++b) {
            threads.emplace_back([&, b, idx = next + b] {
                try { out[idx] = scheme::run(configs[idx]); }
                catch (...) { errors[b] = std::current_exception(); }
            });
        }
        for (auto& t : threads) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
        next += batch;
    }
}

struct NodeNorms {
    double lntheta_vprime = 0.0;  // C0 nodes, V' surrogate
    double chi_v = 0.0;           // C0 nodes, V norm
    double sqrt_theta_l2 = 0.0;   // piecewise constant L2(0,T;H)
};

// compares run a (coarser, N_a nodes) against run b at a's nodes;
// stride_b maps a-node k to b-node k*stride_b
NodeNorms compare_runs(const Trajectory& a, const Trajectory& b, int stride_b) {
    NodeNorms n;
    const double tau_a = a.config.tau();
    for (int k = 0; k <= a.n_steps(); ++k) {
        const int kb = k * stride_b;
        const Field dln = a.ln_theta_at(k) - b.ln_theta_at(kb);
        n.lntheta_vprime = std::fmax(n.lntheta_vprime, dual_norm_vprime(dln));
        const Field dchi = a.chi_at(k) - b.chi_at(kb);
        n.chi_v = std::fmax(n.chi_v, norm_v(dchi));
        if (k >= 1) {
            Field dsq = a.theta_at(k);
            const Field& tb = b.theta_at(kb);
            for (std::size_t c = 0; c < dsq.size(); ++c)
                dsq[c] = std::sqrt(std::fmax(dsq[c], 0.0)) -
                         std::sqrt(std::fmax(tb[c], 0.0));
            n.sqrt_theta_l2 += tau_a * inner_h(dsq, dsq);
        }
    }
    n.sqrt_theta_l2 = std::sqrt(n.sqrt_theta_l2);
    return n;
}

}  // namespace

StudyReport tau_study(const SchemeConfig& base,
                      const std::vector<int>& step_counts, int jobs) {
    if (step_counts.size() < 3)
        throw std::invalid_argument("tau study needs a ladder of at least 3 entries");
    const int finest = step_counts.back();
    for (std::size_t j = 0; j < step_counts.size(); ++j) {
        if (j > 0 && step_counts[j] < step_counts[j - 1])
            throw std::invalid_argument("tau ladder step counts must be ascending");
        if (finest % step_counts[j] != 0)
            throw std::invalid_argument(
                "tau ladder must be nested: every N must divide the finest N");
    }

    std::vector<SchemeConfig> configs;
    for (int n : step_counts) {
        SchemeConfig cfg = base;
        cfg.steps = n;
        configs.push_back(cfg);
    }
    std::vector<Trajectory> runs;
    run_members(std::move(configs), runs, jobs);

    StudyReport rep;
    for (int n : step_counts) rep.ladder.push_back(base.final_time / n);
    const Trajectory& ref = runs.back();
    std::vector<double> tau_for_fit;
    for (std::size_t j = 0; j + 1 < runs.size(); ++j) {
        const NodeNorms n = compare_runs(runs[j], ref, finest / step_counts[j]);
        rep.diff_lntheta_vprime.push_back(n.lntheta_vprime);
        rep.diff_chi_v.push_back(n.chi_v);
        rep.diff_sqrt_theta_l2h.push_back(n.sqrt_theta_l2);
        tau_for_fit.push_back(rep.ladder[j]);
    }
    for (std::size_t j = 0; j + 1 < runs.size(); ++j) {
        const NodeNorms n =
            compare_runs(runs[j], runs[j + 1], step_counts[j + 1] / step_counts[j]);
        rep.cauchy_lntheta_vprime.push_back(n.lntheta_vprime);
        rep.cauchy_chi_v.push_back(n.chi_v);
    }
    rep.order_lntheta = fit_order(tau_for_fit, rep.diff_lntheta_vprime);
    rep.order_chi = fit_order(tau_for_fit, rep.diff_chi_v);
    rep.order_sqrt_theta = fit_order(tau_for_fit, rep.diff_sqrt_theta_l2h);
    return rep;
}

StudyReport eps_study(const SchemeConfig& base,
                      const std::vector<double>& eps_ladder, int jobs) {
    if (eps_ladder.size() < 3)
        throw std::invalid_argument("eps study needs a ladder of at least 3 entries");
    for (std::size_t j = 1; j < eps_ladder.size(); ++j)
        if (!(eps_ladder[j] <= eps_ladder[j - 1]))
            throw std::invalid_argument("eps ladder must be decreasing");

    std::vector<SchemeConfig> configs;
    for (double eps : eps_ladder) {
        SchemeConfig cfg = base;
        cfg.epsilon.policy = scheme::EpsPolicy::Fixed;
        cfg.epsilon.fixed_eps = eps;
        configs.push_back(cfg);
    }
    std::vector<Trajectory> runs;
    run_members(std::move(configs), runs, jobs);

    StudyReport rep;
    rep.ladder = eps_ladder;
    std::vector<double> eps_for_fit;
    for (std::size_t j = 0; j + 1 < runs.size(); ++j) {
        const NodeNorms n = compare_runs(runs[j], runs.back(), 1);
        rep.diff_lntheta_vprime.push_back(n.lntheta_vprime);
        rep.diff_chi_v.push_back(n.chi_v);
        rep.diff_sqrt_theta_l2h.push_back(n.sqrt_theta_l2);
        eps_for_fit.push_back(eps_ladder[j]);
    }
    for (std::size_t j = 0; j + 1 < runs.size(); ++j) {
        const NodeNorms n = compare_runs(runs[j], runs[j + 1], 1);
        rep.cauchy_lntheta_vprime.push_back(n.lntheta_vprime);
        rep.cauchy_chi_v.push_back(n.chi_v);
    }
    rep.order_lntheta = fit_order(eps_for_fit, rep.diff_lntheta_vprime);
    rep.order_chi = fit_order(eps_for_fit, rep.diff_chi_v);
    rep.order_sqrt_theta = fit_order(eps_for_fit, rep.diff_sqrt_theta_l2h);
    return rep;
}

std::string StudyReport::to_csv() const {
    std::ostringstream os;
    os << "ladder,diff_lntheta_vprime,diff_chi_v,diff_sqrt_theta_l2h,"
          "cauchy_lntheta_vprime,cauchy_chi_v\n";
    char buf[32];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (std::size_t j = 0; j < ladder.size(); ++j) {
        os << fmt(ladder[j]);
        auto cell = [&](const std::vector<double>& v) {
            os << ',';
            if (j < v.size()) os << fmt(v[j]);
        };
        cell(diff_lntheta_vprime);
        cell(diff_chi_v);
        cell(diff_sqrt_theta_l2h);
        cell(cauchy_lntheta_vprime);
        cell(cauchy_chi_v);
        os << '\n';
    }
    return os.str();
}

std::string StudyReport::summary() const {
    std::ostringstream os;
    os << "fitted self-convergence orders (vs finest run):\n";
    os << "  ln(theta) in C0([0,T]; V'): " << order_lntheta << '\n';
    os << "  chi in C0([0,T]; V):        " << order_chi << '\n';
    os << "  theta^1/2 in L2(0,T; H):    " << order_sqrt_theta << '\n';
    return os.str();
}

}  // namespace entro::studies
