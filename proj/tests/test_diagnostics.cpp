#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "entro/diagnostics.hpp"

using namespace entro;
using namespace entro::diagnostics;

TEST_CASE("ledger row csv round trip is exact") {
    LedgerRow row;
    row.step = 42;
    row.time = 1.0 / 3.0;
    row.eps = 1e-300;
    row.theta_min = 0.1234567890123456789;
    row.theta_max = 12345.6789e77;
    row.theta_h = std::nextafter(1.0, 2.0);
    row.theta_gradsq = 2.2250738585072014e-308;  // smallest normal
    row.theta_l1 = -0.0;
    row.chi_v_sq = 7.0;
    row.beta_moreau_integral = M_PI;
    row.zeta_h = std::exp(1.0);
    row.xi_h = 1e-17;
    row.obstacle_violation = 3.5e-5;
    row.entropy_defect = 9.999999999999999e-9;
    row.cum_tau_gradsq_theta = 123.456;
    row.cum_tau_dchi_sq = 0.0;
    row.outer_iters = 7;
    row.newton_iters = 31;
    row.cg_iters = 20000;
    row.residual_theta = 5e-13;
    row.residual_chi = 4e-13;
    row.positivity_ok = false;

    const LedgerRow back = LedgerRow::from_csv(row.to_csv());
    CHECK(back == row);
    CHECK(back.to_csv() == row.to_csv());
    // header has the same number of columns as a row
    const auto count = [](const std::string& s) {
        std::size_t n = 1;
        for (char c : s) n += (c == ',');
        return n;
    };
    CHECK(count(LedgerRow::csv_header()) == count(row.to_csv()));
}

TEST_CASE("discrete Gronwall bound dominates the direct recursion (1e4 cases)") {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> ub(0.0, 0.5);
    std::uniform_real_distribution<double> ua(0.0, 10.0);
    std::uniform_int_distribution<int> um(1, 40);
    for (int trial = 0; trial < 10000; ++trial) {
        const double a0 = ua(rng);
        const int m = um(rng);
        std::vector<double> b(m);
        for (double& x : b) x = ub(rng);
        // recursion a_n <= a_0 + sum_{k<n} b_k a_k, saturated
        std::vector<double> a(m + 1);
        a[0] = a0;
        for (int n = 1; n <= m; ++n) {
            double s = a0;
            for (int k = 0; k < n; ++k) s += b[k] * a[k];
            a[n] = s;
        }
        const double bound = gronwall_bound(a0, b, m + 1);
        CHECK(a[m] <= bound * (1.0 + 1e-12) + 1e-300);
        // closed form: a0 * exp(sum of the first m coefficients)
        double acc = 0.0;
        for (int k = 0; k < m; ++k) acc += b[k];
        CHECK(bound == doctest::Approx(a0 * std::exp(acc)).epsilon(1e-13));
    }
}

TEST_CASE("log pair inequality holds on 1e5 positive pairs") {
    std::mt19937 rng(20240515);
    std::uniform_real_distribution<double> ue(-8.0, 8.0);
    for (int trial = 0; trial < 100000; ++trial) {
        const double a = std::pow(10.0, ue(rng));
        const double b = std::pow(10.0, ue(rng));
        const auto [lhs, rhs] = log_pair_inequality(a, b);
        CHECK(lhs == doctest::Approx(std::fabs(a - b)).epsilon(1e-14));
        CHECK(rhs >= 0.0);
        CHECK(lhs <= rhs + 1e-12 * std::fmax(1.0, std::fabs(rhs)));
    }
    // equality at a == b
    const auto [l0, r0] = log_pair_inequality(2.5, 2.5);
    CHECK(l0 == 0.0);
    CHECK(r0 == 0.0);
    // extreme ratios stay finite and ordered
    const auto [le, re] = log_pair_inequality(1e8, 1e-8);
    CHECK(std::isfinite(re));
    CHECK(le <= re);
}

TEST_CASE("entropy defect equals the hand-computed cell sum") {
    const auto g = GridSpec::box1d(4, 2.0);  // dV = 0.5
    Field th(g), thp(g), lns(g), lnp(g), chi(g), chip(g), zeta(g), f(g);
    for (std::size_t i = 0; i < th.size(); ++i) {
        th[i] = 1.0 + 0.1 * double(i);
        thp[i] = 1.0;
        lns[i] = std::log(th[i]);
        lnp[i] = 0.0;
        chi[i] = 0.2 * double(i);
        chip[i] = 0.1;
        zeta[i] = 0.05;
        f[i] = 1.0;
    }
    const double tau = 0.01, ell = 0.5, s = std::sqrt(tau);
    double expect = 0.0;
    for (std::size_t i = 0; i < th.size(); ++i)
        expect += s * (th[i] - thp[i]) + (lns[i] - lnp[i]) +
                  ell * (chi[i] - chip[i]) + tau * zeta[i] - tau * f[i];
    expect = std::fabs(expect * 0.5);
    CHECK(entropy_defect(th, thp, lns, lnp, chi, chip, zeta, f, tau, ell, s) ==
          doctest::Approx(expect).epsilon(1e-14));
    // a balanced update has zero defect
    CHECK(entropy_defect(thp, thp, lnp, lnp, chip, chip, Field(g), Field(g),
                         tau, ell, s) == 0.0);
}
