#include "entro/stepper.hpp"

#include <algorithm>
#include <cmath>

namespace entro::stepper {

using monotone::ScalarGraph;
using monotone::YosidaEval;

double StepParams::stab_coeff() const {
    return stabilization ? std::sqrt(tau) : 0.0;
}

void StepParams::validate(double c_pi, double final_time) const {
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
    if (!(k0 > 0.0)) throw std::invalid_argument("k0 must be positive");
    if (ell != 0.0) {
        const double l4 = std::pow(std::fabs(ell), 4);
        if (!(tau < 1.0 / (8.0 * l4)))
            throw std::invalid_argument(
                "tau = " + std::to_string(tau) +
                " violates the contraction restriction tau < 1/(8 ell^4) = " +
                std::to_string(1.0 / (8.0 * l4)));
    }
    if (c_pi > 0.0 && !(tau < 1.0 / (2.0 * c_pi)))
        throw std::invalid_argument(
            "tau = " + std::to_string(tau) +
            " violates the monotonicity restriction tau < 1/(2 C_pi) = " +
            std::to_string(1.0 / (2.0 * c_pi)));
    if (!(tau <= std::fmin(1.0, final_time)))
        throw std::invalid_argument("tau must satisfy tau <= min(1, T)");
    if (!(eps > 0.0 && eps <= 1.0))
        throw std::invalid_argument("eps must lie in (0, 1]");
    if (!(outer_tol > 0.0 && newton_tol > 0.0 && cg_tol > 0.0))
        throw std::invalid_argument("tolerances must be positive");
}

double scalar_theta_solve(double s, double eps, double c) {
    auto f = [&](double t) { return s * t + monotone::log_yosida(eps, t).value - c; };
    // bracket by doubling around the data value
    double lo = std::fmin(c, 0.0) - 1.0, hi = std::fmax(c, 0.0) + 1.0;
    while (f(lo) > 0.0) lo = 2.0 * lo - 1.0;
    while (f(hi) < 0.0) hi = 2.0 * hi + 1.0;
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const YosidaEval e = monotone::log_yosida(eps, t);
        const double val = s * t + e.value - c;
        if (std::fabs(val) <= 1e-15 * std::fmax(1.0, std::fabs(c))) return t;
        if (val > 0.0) hi = t; else lo = t;
        double t_next = t - val / (s + e.derivative);
        if (!(t_next > lo && t_next < hi)) t_next = 0.5 * (lo + hi);
        if (t_next == t) return t;
        t = t_next;
    }
    return t;
}

namespace {

// residual of the chi equation at X
void chi_residual(const Field& X, const Field& theta_bar, const StepInputs& in,
                  const StepParams& p, Field& lap, Field& out) {
    laplacian_neumann(X, lap);
    for (std::size_t i = 0; i < X.size(); ++i) {
        const double beta_val = in.beta.yosida(p.eps, X[i]).value;
        out[i] = X[i] - p.tau * lap[i] + p.tau * beta_val + p.tau * in.pi(X[i]) -
                 in.h[i] - p.tau * p.ell * theta_bar[i];
    }
}

// residual of the theta equation at T with a given zeta field
void theta_residual(const Field& T, const Field& zeta, const Field& X,
                    const StepInputs& in, const StepParams& p, Field& lap,
                    Field& out) {
    laplacian_neumann(T, lap);
    const double s = p.stab_coeff();
    for (std::size_t i = 0; i < T.size(); ++i) {
        const double ln_val = monotone::log_yosida(p.eps, T[i]).value;
        out[i] = s * T[i] + ln_val + p.tau * zeta[i] - p.tau * p.k0 * lap[i] +
                 p.ell * X[i] - in.g[i];
    }
}

}  // namespace

Field solve_chi(const Field& theta_bar, const StepInputs& in,
                const StepParams& p, SolveStats* stats) {
    const GridSpec& grid = in.h.grid;
    Field X = in.h;
    Field lap(grid), res(grid), trial_res(grid), bderiv(grid);
    const Field lap_diag = laplacian_diag(grid);

    chi_residual(X, theta_bar, in, p, lap, res);
    double res_h = norm_h(res);
    for (int it = 0; it < p.newton_maxit; ++it) {
        if (norm_linf(res) <= p.newton_tol) return X;
        for (std::size_t i = 0; i < X.size(); ++i)
            bderiv[i] = in.beta.yosida(p.eps, X[i]).derivative;
        const double a0 = 1.0 + p.tau * in.pi.p1;
        auto apply = [&](const Field& v, Field& out) {
            laplacian_neumann(v, out);
            for (std::size_t i = 0; i < v.size(); ++i)
                out[i] = a0 * v[i] + p.tau * bderiv[i] * v[i] - p.tau * out[i];
        };
        Field diag(grid);
        for (std::size_t i = 0; i < diag.size(); ++i)
            diag[i] = a0 + p.tau * bderiv[i] + p.tau * lap_diag[i];
        Field rhs = -1.0 * res;
        int cg_iters = 0;
        Field delta = cg_solve(apply, rhs, p.cg_tol, p.cg_maxit, diag, &cg_iters);
        if (stats) { stats->cg += cg_iters; ++stats->newton; }

        // damped step: halve until the H-norm merit decreases
        double alpha = 1.0;
        bool accepted = false;
        Field X_trial(grid);
        for (int back = 0; back <= 20; ++back) {
            X_trial = X;
            axpy(alpha, delta, X_trial);
            chi_residual(X_trial, theta_bar, in, p, lap, trial_res);
            const double trial_h = norm_h(trial_res);
            if (trial_h < res_h || norm_linf(trial_res) <= p.newton_tol) {
                X = X_trial;
                res = trial_res;
                res_h = trial_h;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) throw StepFailure("chi Newton line search stalled", it, res_h);
    }
    if (norm_linf(res) <= p.newton_tol) return X;
    throw StepFailure("chi Newton did not converge", p.newton_maxit, norm_linf(res));
}

Field solve_theta(const Field& x_field, const StepInputs& in,
                  const StepParams& p, const Field* guess, Field* zeta_out,
                  SolveStats* stats) {
    const GridSpec& grid = in.g.grid;
    const double s = p.stab_coeff();
    Field T(grid);
    if (guess) {
        T = *guess;
    } else {
        for (std::size_t i = 0; i < T.size(); ++i)
            T[i] = scalar_theta_solve(s, p.eps, in.g[i] - p.ell * x_field[i]);
    }

    Field ts_diff(grid), zeta(grid), zeta_new(grid);
    const bool has_a = in.op_a.kind != monotone::NonlocalOp::Kind::Zero;
    auto eval_a = [&](const Field& theta) {
        for (std::size_t i = 0; i < ts_diff.size(); ++i)
            ts_diff[i] = theta[i] - in.theta_star[i];
        return in.op_a.yosida(p.eps, ts_diff);
    };
    if (has_a) zeta = eval_a(T);

    Field lap(grid), res(grid), trial_res(grid), lnderiv(grid);
    const Field lap_diag = laplacian_diag(grid);
    const int picard_max = has_a ? 200 : 1;
    double omega = 1.0;
    double prev_full = std::numeric_limits<double>::infinity();

    for (int sweep = 0; sweep < picard_max + 1; ++sweep) {
        // Newton on the system with frozen zeta
        theta_residual(T, zeta, x_field, in, p, lap, res);
        double res_h = norm_h(res);
        for (int it = 0; it < p.newton_maxit; ++it) {
            if (norm_linf(res) <= p.newton_tol) break;
            for (std::size_t i = 0; i < T.size(); ++i)
                lnderiv[i] = monotone::log_yosida(p.eps, T[i]).derivative;
            auto apply = [&](const Field& v, Field& out) {
                laplacian_neumann(v, out);
                for (std::size_t i = 0; i < v.size(); ++i)
                    out[i] = s * v[i] + lnderiv[i] * v[i] - p.tau * p.k0 * out[i];
            };
            Field diag(grid);
            for (std::size_t i = 0; i < diag.size(); ++i)
                diag[i] = s + lnderiv[i] + p.tau * p.k0 * lap_diag[i];
            Field rhs = -1.0 * res;
            int cg_iters = 0;
            Field delta = cg_solve(apply, rhs, p.cg_tol, p.cg_maxit, diag, &cg_iters);
            if (stats) { stats->cg += cg_iters; ++stats->newton; }

            double alpha = 1.0;
            bool accepted = false;
            Field T_trial(grid);
            for (int back = 0; back <= 20; ++back) {
                T_trial = T;
                axpy(alpha, delta, T_trial);
                theta_residual(T_trial, zeta, x_field, in, p, lap, trial_res);
                const double trial_h = norm_h(trial_res);
                if (trial_h < res_h || norm_linf(trial_res) <= p.newton_tol) {
                    T = T_trial;
                    res = trial_res;
                    res_h = trial_h;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted)
                throw StepFailure("theta Newton line search stalled", it, res_h);
        }
        if (norm_linf(res) > p.newton_tol)
            throw StepFailure("theta Newton did not converge", p.newton_maxit,
                              norm_linf(res));

        if (!has_a) {
            if (zeta_out) *zeta_out = zeta;
            return T;
        }

        // full residual with freshly evaluated A_eps
        zeta_new = eval_a(T);
        theta_residual(T, zeta_new, x_field, in, p, lap, trial_res);
        const double full_inf = norm_linf(trial_res);
        if (full_inf <= p.newton_tol) {
            if (zeta_out) *zeta_out = zeta_new;
            return T;
        }
        // relaxed Picard update on the frozen term; halve the mixing
        // weight if the residual failed to shrink
        const double full_h = norm_h(trial_res);
        if (full_h >= prev_full) omega = std::fmax(omega * 0.5, 1.0 / 64.0);
        prev_full = full_h;
        for (std::size_t i = 0; i < zeta.size(); ++i)
            zeta[i] += omega * (zeta_new[i] - zeta[i]);
    }
    throw StepFailure("theta Picard sweeps on A_eps did not converge",
                      picard_max, prev_full);
}

StepResult fixed_point_step(const StepInputs& in, const StepParams& p,
                            const Field* warm_start) {
    const GridSpec& grid = in.g.grid;
    Field theta_bar(grid);
    if (warm_start) {
        theta_bar = *warm_start;
    } else {
        const double s = p.stab_coeff();
        for (std::size_t i = 0; i < theta_bar.size(); ++i)
            theta_bar[i] = scalar_theta_solve(s, p.eps, in.g[i]);
    }

    StepResult result;
    SolveStats stats;
    Field X(grid), Theta(grid), zeta(grid);
    double prev_diff = -1.0;
    bool converged = false;
    for (int k = 1; k <= p.outer_maxit; ++k) {
        X = solve_chi(theta_bar, in, p, &stats);
        Theta = solve_theta(X, in, p, &theta_bar, &zeta, &stats);
        const double diff = norm_h(Theta - theta_bar);
        if (prev_diff > 0.0) result.contraction_ratios.push_back(diff / prev_diff);
        theta_bar = Theta;
        result.outer_iters = k;
        if (diff <= p.outer_tol) { converged = true; break; }
        prev_diff = diff;
    }
    if (!converged)
        throw StepFailure("outer fixed point did not converge", p.outer_maxit,
                          prev_diff);

    result.theta = Theta;
    result.chi = X;
    result.zeta = zeta;
    result.xi = Field(grid);
    for (std::size_t i = 0; i < X.size(); ++i)
        result.xi[i] = in.beta.yosida(p.eps, X[i]).value;
    result.total_newton_iters = stats.newton;
    result.total_cg_iters = stats.cg;
    const auto [rt, rc] = step_residuals(result, in, p);
    result.residual_theta = rt;
    result.residual_chi = rc;
    return result;
}

StepResult epsilon_ladder_step(const StepInputs& in, const StepParams& p,
                               std::span<const double> ladder,
                               std::vector<double>* cauchy_diffs,
                               const Field* warm_start) {
    if (ladder.empty()) throw std::invalid_argument("empty eps ladder");
    if (!(ladder.front() <= 1.0))
        throw std::invalid_argument("eps ladder must start at or below 1");
    for (std::size_t j = 1; j < ladder.size(); ++j)
        if (!(ladder[j] < ladder[j - 1]))
            throw std::invalid_argument("eps ladder must be strictly decreasing");
    if (ladder.back() != p.eps)
        throw std::invalid_argument("eps ladder must end at params.eps");

    StepResult result;
    Field warm;
    const Field* start = warm_start;
    int newton_sum = 0, cg_sum = 0, outer_sum = 0;
    for (std::size_t j = 0; j < ladder.size(); ++j) {
        StepParams rung = p;
        rung.eps = ladder[j];
        StepResult r = fixed_point_step(in, rung, start);
        if (j > 0 && cauchy_diffs)
            cauchy_diffs->push_back(norm_h(r.theta - result.theta));
        newton_sum += r.total_newton_iters;
        cg_sum += r.total_cg_iters;
        outer_sum += r.outer_iters;
        result = std::move(r);
        warm = result.theta;
        start = &warm;
    }
    result.total_newton_iters = newton_sum;
    result.total_cg_iters = cg_sum;
    result.outer_iters = outer_sum;
    return result;
}

std::pair<double, double> step_residuals(const StepResult& r,
                                         const StepInputs& in,
                                         const StepParams& p) {
    const GridSpec& grid = in.g.grid;
    const double s = p.stab_coeff();

    // theta equation, with A_eps evaluated afresh
    Field diff(grid);
    for (std::size_t i = 0; i < diff.size(); ++i)
        diff[i] = r.theta[i] - in.theta_star[i];
    const Field zeta = in.op_a.yosida(p.eps, diff);
    const Field lap_t = laplacian_neumann(r.theta);
    double res_t = 0.0;
    for (std::size_t i = 0; i < grid.total_cells(); ++i) {
        const double v = s * r.theta[i] + monotone::log_yosida(p.eps, r.theta[i]).value +
                         p.tau * zeta[i] - p.tau * p.k0 * lap_t[i] +
                         p.ell * r.chi[i] - in.g[i];
        res_t = std::fmax(res_t, std::fabs(v));
    }

    const Field lap_c = laplacian_neumann(r.chi);
    double res_c = 0.0;
    for (std::size_t i = 0; i < grid.total_cells(); ++i) {
        const double v = r.chi[i] - p.tau * lap_c[i] +
                         p.tau * in.beta.yosida(p.eps, r.chi[i]).value +
                         p.tau * in.pi(r.chi[i]) - in.h[i] -
                         p.tau * p.ell * r.theta[i];
        res_c = std::fmax(res_c, std::fabs(v));
    }
    return {res_t, res_c};
}

}  // namespace entro::stepper
