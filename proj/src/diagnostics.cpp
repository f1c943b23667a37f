#include "entro/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace entro::diagnostics {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string LedgerRow::csv_header() {
    return "step,time,eps,theta_min,theta_max,theta_h,theta_gradsq,theta_l1,"
           "chi_v_sq,beta_moreau_integral,zeta_h,xi_h,obstacle_violation,"
           "entropy_defect,cum_tau_gradsq_theta,cum_tau_dchi_sq,"
           "outer_iters,newton_iters,cg_iters,residual_theta,residual_chi,"
           "positivity_ok";
}

std::string LedgerRow::to_csv() const {
    std::ostringstream os;
    os << step << ',' << fmt(time) << ',' << fmt(eps) << ',' << fmt(theta_min)
       << ',' << fmt(theta_max) << ',' << fmt(theta_h) << ',' << fmt(theta_gradsq)
       << ',' << fmt(theta_l1) << ',' << fmt(chi_v_sq) << ','
       << fmt(beta_moreau_integral) << ',' << fmt(zeta_h) << ',' << fmt(xi_h)
       << ',' << fmt(obstacle_violation) << ',' << fmt(entropy_defect) << ','
       << fmt(cum_tau_gradsq_theta) << ',' << fmt(cum_tau_dchi_sq) << ','
       << outer_iters << ',' << newton_iters << ',' << cg_iters << ','
       << fmt(residual_theta) << ',' << fmt(residual_chi) << ','
       << (positivity_ok ? 1 : 0);
    return os.str();
}

LedgerRow LedgerRow::from_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') { cells.push_back(cur); cur.clear(); }
        else cur.push_back(c);
    }
    cells.push_back(cur);
    if (cells.size() != 22) throw std::runtime_error("ledger row has wrong arity");
    LedgerRow r;
    std::size_t i = 0;
    auto d = [&]() { return std::stod(cells[i++]); };
    r.step = std::stoi(cells[i++]);
    r.time = d(); r.eps = d();
    r.theta_min = d(); r.theta_max = d();
    r.theta_h = d(); r.theta_gradsq = d(); r.theta_l1 = d();
    r.chi_v_sq = d(); r.beta_moreau_integral = d();
    r.zeta_h = d(); r.xi_h = d();
    r.obstacle_violation = d(); r.entropy_defect = d();
    r.cum_tau_gradsq_theta = d(); r.cum_tau_dchi_sq = d();
    r.outer_iters = std::stoi(cells[i++]);
    r.newton_iters = std::stoi(cells[i++]);
    r.cg_iters = std::stoi(cells[i++]);
    r.residual_theta = d(); r.residual_chi = d();
    r.positivity_ok = cells[i++] == "1";
    return r;
}

double entropy_defect(const Field& theta, const Field& theta_prev,
                      const Field& ln_step, const Field& ln_prev,
                      const Field& chi, const Field& chi_prev,
                      const Field& zeta, const Field& f_avg,
                      double tau, double ell, double stab_coeff) {
    require_same_grid(theta, theta_prev);
    double sum = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        sum += stab_coeff * (theta[i] - theta_prev[i]) +
               (ln_step[i] - ln_prev[i]) + ell * (chi[i] - chi_prev[i]) +
               tau * zeta[i] - tau * f_avg[i];
    }
    return std::fabs(sum * theta.grid.cell_volume());
}

double gronwall_bound(double a0, std::span<const double> b, int m) {
    if (a0 < 0.0) throw std::invalid_argument("gronwall_bound: a0 must be >= 0");
    if (m < 1 || static_cast<std::size_t>(m) > b.size() + 1)
        throw std::invalid_argument("gronwall_bound: m out of range");
    double s = 0.0;
    for (int n = 1; n <= m - 1; ++n) {
        if (b[n - 1] < 0.0)
            throw std::invalid_argument("gronwall_bound: b must be >= 0");
        s += b[n - 1];
    }
    return a0 * std::exp(s);
}

std::pair<double, double> log_pair_inequality(double a, double b) {
    if (!(a > 0.0 && b > 0.0))
        throw std::invalid_argument("log_pair_inequality needs positive inputs");
    const double lhs = std::fabs(a - b);
    const double rhs = std::fabs(std::log(a * a) - std::log(b * b)) * (a + b);
    return {lhs, rhs};
}

}  // namespace entro::diagnostics
