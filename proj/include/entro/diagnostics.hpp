#pragma once

#include <span>
#include <string>
#include <vector>

#include "entro/grid.hpp"
#include "entro/monotone.hpp"
#include "entro/stepper.hpp"

namespace entro::diagnostics {

/// One per-step diagnostic record. Column order is fixed and documented
/// in docs/formats.md; to_csv/from_csv round-trip exactly.
struct LedgerRow {
    int step = 0;
    double time = 0.0;
    double eps = 0.0;
    double theta_min = 0.0, theta_max = 0.0;
    double theta_h = 0.0, theta_gradsq = 0.0, theta_l1 = 0.0;
    double chi_v_sq = 0.0;
    double beta_moreau_integral = 0.0;
    double zeta_h = 0.0, xi_h = 0.0;
    double obstacle_violation = 0.0;
    double entropy_defect = 0.0;
    double cum_tau_gradsq_theta = 0.0;   // tau * sum ||grad theta^i||^2
    double cum_tau_dchi_sq = 0.0;        // tau * sum ||(chi^i-chi^{i-1})/tau||^2
    int outer_iters = 0, newton_iters = 0, cg_iters = 0;
    double residual_theta = 0.0, residual_chi = 0.0;
    bool positivity_ok = true;

    std::string to_csv() const;
    static LedgerRow from_csv(const std::string& line);
    static std::string csv_header();

    bool operator==(const LedgerRow&) const = default;
};

/// Entropy conservation defect of one accepted step: the absolute value
/// of the cell integral of the discrete entropy balance as solved, i.e.
///   | int [ s*(Th - th_prev) + (ln_step(Th) - ln_prev) + ell*(X - chi_prev)
///           + tau*zeta - tau*F_i ] dV |,
/// where ln_step is the step's own regularized log of Theta and ln_prev
/// the stored log field that entered g. The Laplacian integrates to zero
/// by the Neumann structure, so this is bounded by the solver residual.
double entropy_defect(const Field& theta, const Field& theta_prev,
                      const Field& ln_step, const Field& ln_prev,
                      const Field& chi, const Field& chi_prev,
                      const Field& zeta, const Field& f_avg,
                      double tau, double ell, double stab_coeff);

/// Discrete Gronwall bound a0 * exp(sum_{n=1}^{m-1} b_n).
double gronwall_bound(double a0, std::span<const double> b, int m);

/// Returns (|a - b|, |ln a^2 - ln b^2|(a + b)); the first is <= the
/// second for all strictly positive a, b (symmetric form of the
/// elementary logarithm estimate).
std::pair<double, double> log_pair_inequality(double a, double b);

}  // namespace entro::diagnostics
