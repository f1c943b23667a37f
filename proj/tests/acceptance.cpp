// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit when
// any criterion fails. Runs the shipped scenarios and shells out to the
// command-line tool for the determinism checks.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <sys/wait.h>
#include <vector>

#include "entro/config.hpp"
#include "entro/scheme.hpp"
#include "entro/stepper.hpp"
#include "entro/studies.hpp"
#include "scalar_oracle.hpp"

using namespace entro;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("criterion %d (%s): %s%s%s\n", idx, name.c_str(),
                ok ? "PASS" : "FAIL", detail.empty() ? "" : " -- ",
                detail.c_str());
    if (!ok) ++g_failures;
}

scheme::SchemeConfig load_scenario(const std::string& name) {
    return config::parse_file(std::string(ENTRO_SCENARIO_DIR) + "/" + name);
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// --- 1: outer contraction ratios ---------------------------------------------

void criterion_contraction() {
    std::mt19937 rng(90210);
    std::normal_distribution<double> nd(0.0, 1.0);
    const auto g = GridSpec::box1d(64);
    const double tau = 1e-3, eps = 1e-2;
    bool ok = true;
    std::string detail;
    int instance = 0;
    for (double ell : {0.5, 1.0}) {
        const double bound = 2.0 * std::sqrt(tau) * ell * ell * 1.05;
        for (int trial = 0; trial < 10; ++trial, ++instance) {
            stepper::StepParams p;
            p.tau = tau;
            p.eps = eps;
            p.ell = ell;
            p.outer_tol = 1e-8;
            p.newton_tol = 1e-12;
            p.cg_tol = 1e-14;
            stepper::StepInputs in;
            in.g = Field(g);
            in.h = Field(g);
            in.theta_star = Field(g, 1.0);
            in.beta = trial % 2 ? monotone::ScalarGraph::power(3)
                                : monotone::ScalarGraph::indicator_box(-1.0, 1.0);
            in.pi = {0.3, 0.1};
            for (std::size_t c = 0; c < in.g.size(); ++c) {
                in.g[c] = 1.0 + 0.4 * nd(rng);
                in.h[c] = 0.3 * nd(rng);
            }
            const auto r = stepper::fixed_point_step(in, p);
            for (double ratio : r.contraction_ratios) {
                if (ratio > bound + 1e-9) {
                    ok = false;
                    detail = "instance " + std::to_string(instance) + " ratio " +
                             std::to_string(ratio) + " > " + std::to_string(bound);
                }
            }
        }
    }
    report(1, "outer contraction ratio bound", ok, detail);
}

// --- 2: scalar-oracle equivalence --------------------------------------------

void criterion_scalar_oracle() {
    auto cfg = load_scenario("constant.cfg");
    cfg.newton_tol = 1e-12;
    cfg.outer_tol = 1e-11;
    cfg.cg_tol = 1e-14;
    const scheme::Trajectory traj = scheme::run(cfg);

    const double tau = cfg.tau(), eps = cfg.epsilon.working_eps();
    const double s = cfg.step_params().stab_coeff();
    const double ell = cfg.ell;
    double theta = cfg.theta0_spec.base, chi = cfg.chi0_spec.base;
    double lnv = std::log(theta);
    const double fsrc = cfg.source.coeffs[0];

    bool ok = true;
    std::string detail;
    for (int i = 1; i <= cfg.steps; ++i) {
        const double gval = tau * fsrc + s * theta + lnv + ell * chi;
        const auto ref = oracle::constant_step(s, tau, eps, ell, gval, chi,
                                               cfg.beta.exponent, cfg.pi.p1,
                                               cfg.pi.p0);
        const Field& th = traj.theta_at(i);
        const Field& xh = traj.chi_at(i);
        for (std::size_t c = 0; c < th.size(); ++c) {
            if (std::fabs(th[c] - ref.theta) > 1e-9 ||
                std::fabs(xh[c] - ref.chi) > 1e-9) {
                ok = false;
                detail = "step " + std::to_string(i);
            }
        }
        theta = ref.theta;
        chi = ref.chi;
        lnv = oracle::log_yosida(eps, theta);
    }
    report(2, "constant-data scalar oracle equivalence", ok, detail);
}

// --- 3: entropy ledger --------------------------------------------------------

void criterion_entropy_ledger() {
    bool ok = true;
    std::string detail;
    for (const char* name :
         {"stationary.cfg", "constant.cfg", "smooth.cfg", "obstacle_sign.cfg"}) {
        const auto cfg = load_scenario(name);
        const auto traj = scheme::run(cfg);
        const double bound = 100.0 * cfg.newton_tol * cfg.grid.volume();
        for (const auto& row : traj.ledger) {
            if (row.entropy_defect > bound) {
                ok = false;
                detail = std::string(name) + " step " + std::to_string(row.step) +
                         " defect " + std::to_string(row.entropy_defect);
            }
        }
    }
    report(3, "entropy defect within solver tolerance", ok, detail);
}

// --- 4: monotone machinery ----------------------------------------------------

void criterion_monotone_suite() {
    std::mt19937 rng(424242);
    std::uniform_real_distribution<double> ux(-8.0, 8.0);
    std::uniform_real_distribution<double> ue(-5.0, 0.0);
    bool ok = true;
    std::string detail;
    auto fail = [&](const std::string& why) {
        ok = false;
        if (detail.empty()) detail = why;
    };

    for (int i = 0; i < 10000 && ok; ++i) {
        const double eps = std::pow(10.0, ue(rng));
        const double x1 = ux(rng), x2 = ux(rng);
        const double y1 = monotone::log_resolvent(eps, x1);
        const double y2 = monotone::log_resolvent(eps, x2);
        // identity only checkable while exp(x/eps) stays representable
        if (!(x1 < 0.0 && x1 / eps < -600.0) &&
            std::fabs(y1 + eps * std::log(y1) - x1) >
                1e-12 * std::fmax(1.0, std::fabs(x1)))
            fail("log resolvent identity");
        if (std::fabs(y1 - y2) > std::fabs(x1 - x2) + 1e-12)
            fail("log resolvent nonexpansive");
        const double v1 = monotone::log_yosida(eps, x1).value;
        const double v2 = monotone::log_yosida(eps, x2).value;
        if (std::fabs(v1 - v2) > std::fabs(x1 - x2) / eps * (1 + 1e-10) + 1e-12)
            fail("log yosida 1/eps-Lipschitz");
        if (x1 > 0.0 && std::fabs(v1) > std::fabs(std::log(x1)) + 1e-12)
            fail("|ln_eps| <= |ln|");
        if (x1 > 0.0) {
            const double m = monotone::log_moreau(eps, x1);
            if (m < 0.0 || m > monotone::log_primitive(x1) + 1e-12)
                fail("0 <= Lambda_eps <= Lambda");
        }
        const auto box = monotone::ScalarGraph::indicator_box(-1.0, 1.0);
        const double b1 = box.resolvent(eps, x1), b2 = box.resolvent(eps, x2);
        if (std::fabs(b1 - b2) > std::fabs(x1 - x2) + 1e-12)
            fail("box resolvent nonexpansive");
    }

    const auto g = GridSpec::box1d(32);
    std::normal_distribution<double> nd(0.0, 1.0);
    const auto a = monotone::NonlocalOp::sign_nonlocal();
    for (int i = 0; i < 200 && ok; ++i) {
        Field v(g);
        for (std::size_t c = 0; c < v.size(); ++c) v[c] = nd(rng);
        const double eps = std::pow(10.0, ue(rng));
        if (norm_h(a.yosida(eps, v)) >
            a.growth_constant() * (1.0 + norm_h(v)) + 1e-12)
            fail("||A_eps v|| growth bound");
    }
    report(4, "monotone machinery property suite", ok, detail);
}

// --- 5: lemma suite -----------------------------------------------------------

void criterion_lemma_suite() {
    std::mt19937 rng(5150);
    bool ok = true;
    std::string detail;
    auto fail = [&](const std::string& why) {
        ok = false;
        if (detail.empty()) detail = why;
    };

    // discrete Gronwall dominates the saturated recursion
    std::uniform_real_distribution<double> ub(0.0, 0.4);
    std::uniform_real_distribution<double> ua(0.0, 5.0);
    for (int trial = 0; trial < 10000 && ok; ++trial) {
        const double a0 = ua(rng);
        const int m = 1 + trial % 30;
        std::vector<double> b(m);
        for (double& x : b) x = ub(rng);
        std::vector<double> a(m + 1, a0);
        for (int n = 1; n <= m; ++n) {
            double s = a0;
            for (int k = 0; k < n; ++k) s += b[k] * a[k];
            a[n] = s;
        }
        if (a[m] > diagnostics::gronwall_bound(a0, b, m + 1) * (1.0 + 1e-12) + 1e-300)
            fail("gronwall recursion domination");
    }

    // elementary log-pair inequality
    std::uniform_real_distribution<double> uexp(-8.0, 8.0);
    for (int trial = 0; trial < 100000 && ok; ++trial) {
        const double x = std::pow(10.0, uexp(rng));
        const double y = std::pow(10.0, uexp(rng));
        const auto [lhs, rhs] = diagnostics::log_pair_inequality(x, y);
        if (lhs > rhs + 1e-12 * std::fmax(1.0, std::fabs(rhs)))
            fail("log pair inequality");
    }

    // interpolant identities, closed forms against Simpson-exact integrals
    const auto g = GridSpec::box1d(6);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int trial = 0; trial < 50 && ok; ++trial) {
        const int n = 3 + trial % 5;
        std::vector<Field> z;
        for (int i = 0; i <= n; ++i) {
            Field f(g);
            for (std::size_t c = 0; c < f.size(); ++c) f[c] = nd(rng);
            z.push_back(f);
        }
        const double T = 0.5 + 0.1 * trial;
        const double tau = T / n;
        // per-interval Simpson is exact: the gap is linear in t on each piece
        double gap = 0.0, dsq = 0.0, bar = 0.0;
        double gap_q = 0.0, dsq_q = 0.0, bar_q = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double inc = norm_h(z[i] - z[i - 1]);
            gap += tau / 3.0 * inc * inc;
            dsq += inc * inc / tau;
            const double nh = norm_h(z[i]);
            bar += tau * nh * nh;
            // 3-point Gauss rule per interval, exact for the quadratic
            // integrands of all three identities
            static const double gp[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
            static const double gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
            for (int q = 0; q < 3; ++q) {
                const double tg = (i - 1) * tau + gp[q] * tau;
                const Field zbg = scheme::interp_const(z, T, tg);
                const Field zhg = scheme::interp_lin(z, T, tg);
                const double dgap = norm_h(zbg - zhg);
                gap_q += tau * gw[q] * dgap * dgap;
                const Field der = (1.0 / tau) * (z[i] - z[i - 1]);
                dsq_q += tau * gw[q] * norm_h(der) * norm_h(der);
                const double nb = norm_h(zbg);
                bar_q += tau * gw[q] * nb * nb;
            }
        }
        auto close = [](double u, double v) {
            return std::fabs(u - v) <= 1e-13 * std::fmax(1.0, std::fmax(std::fabs(u), std::fabs(v)));
        };
        if (!close(gap, gap_q)) fail("interpolant gap identity");
        if (!close(dsq, dsq_q)) fail("interpolant derivative identity");
        if (!close(bar, bar_q)) fail("piecewise-constant norm identity");
    }
    report(5, "lemma and interpolant identity suite", ok, detail);
}

// --- 6: singular-limit behavior ----------------------------------------------

void criterion_singular_limit() {
    auto base = load_scenario("obstacle_sign.cfg");
    bool ok = true;
    std::string detail;

    std::vector<double> eps_ladder;
    for (double e = 1e-2; e > 0.99e-5; e *= 0.5) eps_ladder.push_back(e);

    std::vector<double> violations;
    std::vector<double> theta_mins;
    for (double eps : eps_ladder) {
        auto cfg = base;
        cfg.epsilon.policy = scheme::EpsPolicy::Ladder;
        cfg.epsilon.ladder_start = 1e-1;
        cfg.epsilon.ladder_factor = 0.5;
        cfg.epsilon.ladder_min = eps;
        const auto traj = scheme::run(cfg);
        double viol = 0.0, tmin = 1e300;
        for (const auto& row : traj.ledger) {
            viol = std::fmax(viol, row.obstacle_violation);
            tmin = std::fmin(tmin, row.theta_min);
        }
        violations.push_back(viol);
        theta_mins.push_back(tmin);
    }

    for (std::size_t k = 0; k < eps_ladder.size(); ++k) {
        if (eps_ladder[k] <= 1e-4 && !(theta_mins[k] > 0.0)) {
            ok = false;
            detail = "theta lost positivity at eps " + std::to_string(eps_ladder[k]);
        }
    }
    // halving ratio in the resolved regime (violation well above round-off)
    int checked = 0;
    for (std::size_t k = 0; k + 1 < violations.size(); ++k) {
        if (violations[k] < 1e3 * base.outer_tol) continue;
        const double ratio = violations[k + 1] / violations[k];
        ++checked;
        if (ratio < 0.3 || ratio > 0.7) {
            ok = false;
            detail = "violation ratio " + std::to_string(ratio) + " at eps " +
                     std::to_string(eps_ladder[k]);
        }
    }
    if (checked == 0) {
        ok = false;
        detail = "no resolved violations to compare";
    }
    report(6, "obstacle violation halves with eps", ok, detail);
}

// --- 7: tau self-convergence --------------------------------------------------

void criterion_tau_convergence() {
    bool ok = true;
    std::string detail;

    auto smooth = load_scenario("smooth.cfg");
    const auto rs = studies::tau_study(smooth, {10, 20, 40, 80, 160}, 4);
    if (rs.order_chi < 0.9) {
        ok = false;
        detail = "smooth chi order " + std::to_string(rs.order_chi);
    }

    auto hard = load_scenario("obstacle_sign.cfg");
    const auto rh = studies::tau_study(hard, {25, 50, 100, 200}, 4);
    for (std::size_t k = 0; k + 1 < rh.cauchy_lntheta_vprime.size(); ++k) {
        if (rh.cauchy_lntheta_vprime[k + 1] >= rh.cauchy_lntheta_vprime[k]) {
            ok = false;
            detail = "ln(theta) Cauchy differences not decreasing";
        }
    }
    std::ostringstream note;
    note << "smooth chi order " << rs.order_chi << ", singular ln(theta) order "
         << rh.order_lntheta;
    report(7, "tau self-convergence", ok, ok ? note.str() : detail);
}

// --- 8: solver-path agreement -------------------------------------------------

void criterion_path_agreement() {
    bool ok = true;
    std::string detail;
    for (const char* name :
         {"stationary.cfg", "constant.cfg", "smooth.cfg", "obstacle_sign.cfg"}) {
        auto cfg = load_scenario(name);
        cfg.outer_init = scheme::OuterInit::Warm;
        const auto warm = scheme::run(cfg);
        cfg.outer_init = scheme::OuterInit::Cold;
        const auto cold = scheme::run(cfg);
        const int last = cfg.steps;
        const double dt = norm_h(warm.theta_at(last) - cold.theta_at(last));
        const double dc = norm_h(warm.chi_at(last) - cold.chi_at(last));
        if (dt > 10.0 * cfg.outer_tol || dc > 10.0 * cfg.outer_tol) {
            ok = false;
            detail = std::string(name) + " diverged (" + std::to_string(dt) +
                     ", " + std::to_string(dc) + ")";
        }
    }
    report(8, "independent solver paths agree", ok, detail);
}

// --- 9: determinism and verification -----------------------------------------

void criterion_determinism() {
    bool ok = true;
    std::string detail;
    const fs::path work = fs::temp_directory_path() / "entro_accept";
    fs::remove_all(work);
    fs::create_directories(work);
    const std::string cli = ENTRO_CLI_PATH;
    const std::string cfg = std::string(ENTRO_SCENARIO_DIR) + "/constant.cfg";

    auto shell = [&](const std::string& cmd) {
        const int rc = std::system(cmd.c_str());
        return rc == -1 ? -1 : WEXITSTATUS(rc);
    };

    const std::string a = (work / "a").string(), b = (work / "b").string();
    if (shell(cli + " run --config " + cfg + " --out " + a + " >/dev/null 2>&1") != 0 ||
        shell(cli + " run --config " + cfg + " --out " + b + " >/dev/null 2>&1") != 0) {
        report(9, "determinism and checkpoint verification", false, "run failed");
        return;
    }
    if (read_bytes(a + "/ledger.csv") != read_bytes(b + "/ledger.csv")) {
        ok = false;
        detail = "repeated runs differ";
    }
    if (read_bytes(a + "/checkpoint.entc") != read_bytes(b + "/checkpoint.entc")) {
        ok = false;
        detail = "repeated checkpoints differ";
    }
    if (shell(cli + " check " + a + "/checkpoint.entc >/dev/null 2>&1") != 0) {
        ok = false;
        detail = "check rejected a fresh checkpoint";
    }
    {  // flip one byte and expect check to fail with the verification code
        std::string bytes = read_bytes(a + "/checkpoint.entc");
        bytes[bytes.size() / 2] ^= 0x01;
        std::ofstream out(a + "/checkpoint.entc", std::ios::binary);
        out << bytes;
    }
    if (shell(cli + " check " + a + "/checkpoint.entc >/dev/null 2>&1") != 4) {
        ok = false;
        detail = "check accepted a corrupted checkpoint";
    }
    fs::remove_all(work);
    report(9, "determinism and checkpoint verification", ok, detail);
}

}  // namespace

int main() {
    criterion_contraction();
    criterion_scalar_oracle();
    criterion_entropy_ledger();
    criterion_monotone_suite();
    criterion_lemma_suite();
    criterion_singular_limit();
    criterion_tau_convergence();
    criterion_path_agreement();
    criterion_determinism();
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
