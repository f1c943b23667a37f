#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "entro/grid.hpp"
#include "entro/monotone.hpp"

namespace entro::stepper {

struct StepParams {
    double tau = 1e-3;
    double eps = 1e-3;
    double k0 = 1.0;
    double ell = 0.0;
    double outer_tol = 1e-8;
    double newton_tol = 1e-10;
    double cg_tol = 1e-12;
    int outer_maxit = 200;
    int newton_maxit = 60;
    int cg_maxit = 20000;
    bool stabilization = true;  // the tau^{1/2} viscosity term of the scheme

    double stab_coeff() const;  // tau^{1/2} when on, else 0

    /// Throws std::invalid_argument naming the violated condition:
    /// tau < 1/(8 ell^4), tau < 1/(2 C_pi), tau <= min(1,T), eps in (0,1].
    void validate(double c_pi, double final_time) const;
};

struct StepInputs {
    Field g;           // right-hand side of the theta equation
    Field h;           // previous chi
    Field theta_star;  // reference temperature, positive everywhere
    monotone::ScalarGraph beta;
    monotone::NonlocalOp op_a;
    monotone::PiFunction pi;
};

struct StepResult {
    Field theta, chi, zeta, xi;
    int outer_iters = 0;
    int total_newton_iters = 0;
    int total_cg_iters = 0;
    std::vector<double> contraction_ratios;
    double residual_theta = 0.0;  // L-inf residuals recomputed from scratch
    double residual_chi = 0.0;
};

struct StepFailure : std::runtime_error {
    int newton_iters = 0;
    double last_residual = 0.0;
    StepFailure(const std::string& what, int iters, double res)
        : std::runtime_error(what + " (iters " + std::to_string(iters) +
                             ", residual " + std::to_string(res) + ")"),
          newton_iters(iters), last_residual(res) {}
};

struct SolveStats {
    int newton = 0;
    int cg = 0;
};

/// Semismooth Newton solve of
///   X - tau*Lap(X) + tau*beta_eps(X) + tau*pi(X) = h + tau*ell*theta_bar
/// to L-inf residual <= newton_tol.
Field solve_chi(const Field& theta_bar, const StepInputs& in,
                const StepParams& p, SolveStats* stats = nullptr);

/// Picard-on-A_eps / Newton solve of
///   s*Theta + ln_eps(Theta) + tau*A_eps(Theta - theta_star) - tau*k0*Lap(Theta)
///     = -ell*X + g,   s = stab coefficient,
/// to L-inf residual <= newton_tol. `guess` warm-starts Newton; when null
/// the start is the pointwise scalar solve of s*t + ln_eps(t) = g - ell*X.
/// `zeta_out`, when given, receives A_eps(Theta - theta_star).
Field solve_theta(const Field& x_field, const StepInputs& in,
                  const StepParams& p, const Field* guess = nullptr,
                  Field* zeta_out = nullptr, SolveStats* stats = nullptr);

/// One step of the regularized problem by the contraction fixed point:
/// alternate solve_chi / solve_theta from `warm_start` (or the pointwise
/// cold start) until successive Theta iterates differ by <= outer_tol in H.
StepResult fixed_point_step(const StepInputs& in, const StepParams& p,
                            const Field* warm_start = nullptr);

/// Runs fixed_point_step along a strictly decreasing eps ladder, warm
/// starting each rung from the previous solution; the last entry must be
/// params.eps. `cauchy_diffs`, when given, receives the successive H-norm
/// Theta differences along the ladder.
StepResult epsilon_ladder_step(const StepInputs& in, const StepParams& p,
                               std::span<const double> ladder,
                               std::vector<double>* cauchy_diffs = nullptr,
                               const Field* warm_start = nullptr);

/// Recomputes both equation residuals in L-inf by direct substitution,
/// independently of the Newton assembly.
std::pair<double, double> step_residuals(const StepResult& r,
                                         const StepInputs& in,
                                         const StepParams& p);

/// Pointwise scalar solve of s*t + ln_eps(t) = c (the cold start).
double scalar_theta_solve(double s, double eps, double c);

}  // namespace entro::stepper
