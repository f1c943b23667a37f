#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "entro/grid.hpp"

using namespace entro;

namespace {

Field random_field(const GridSpec& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Field f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = nd(rng);
    return f;
}

/// Dense homogeneous-Neumann Laplacian in 1D built independently of the
/// library stencil, with mirrored ghost cells.
std::vector<std::vector<double>> dense_lap_1d(int n, double h) {
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    const double w = 1.0 / (h * h);
    for (int i = 0; i < n; ++i) {
        const int left = i > 0 ? i - 1 : i;       // mirrored ghost
        const int right = i < n - 1 ? i + 1 : i;
        m[i][left] += w;
        m[i][right] += w;
        m[i][i] -= 2.0 * w;
    }
    return m;
}

std::vector<double> gauss_solve(std::vector<std::vector<double>> a,
                                std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (int r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    std::vector<double> x(n);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
        x[r] = s / a[r][r];
    }
    return x;
}

}  // namespace

TEST_CASE("grid spec basics") {
    const auto g = GridSpec::box2d(4, 8, 2.0, 1.0);
    CHECK(g.total_cells() == 32);
    CHECK(g.spacing(0) == 0.5);
    CHECK(g.spacing(1) == 0.125);
    CHECK(g.cell_volume() == doctest::Approx(0.0625));
    CHECK(g.volume() == doctest::Approx(2.0));
    CHECK_THROWS(GridSpec::box1d(0));
}

TEST_CASE("1D stencil example") {
    const auto g = GridSpec::box1d(3, 3.0);  // h = 1
    Field u(g);
    u[0] = 0.0; u[1] = 1.0; u[2] = 0.0;
    const Field lap = laplacian_neumann(u);
    CHECK(lap[0] == doctest::Approx(1.0));
    CHECK(lap[1] == doctest::Approx(-2.0));
    CHECK(lap[2] == doctest::Approx(1.0));
}

TEST_CASE("Laplacian conserves mass and is symmetric") {
    for (const GridSpec& g : {GridSpec::box1d(17, 1.3), GridSpec::box2d(6, 9, 2.0, 0.7),
                              GridSpec::box3d(4, 3, 5)}) {
        const Field u = random_field(g, 1);
        const Field v = random_field(g, 2);
        const Field lu = laplacian_neumann(u);
        double integral = 0.0;
        for (std::size_t i = 0; i < lu.size(); ++i) integral += lu[i];
        integral *= g.cell_volume();
        CHECK(std::fabs(integral) <= 1e-13 * norm_linf(u) * double(u.size()));
        CHECK(inner_h(lu, v) == doctest::Approx(inner_h(u, laplacian_neumann(v))).epsilon(1e-12));
        // summation by parts: grad_sq(u) = (u, -Lap u)_H
        CHECK(grad_sq(u) == doctest::Approx(inner_h(u, -1.0 * lu)).epsilon(1e-12));
        CHECK(grad_sq(Field(g, 3.7)) == 0.0);  // constants are in the kernel
    }
}

TEST_CASE("cg matches a dense direct solve (1D n=8 and n=16)") {
    for (int n : {8, 16}) {
        const auto g = GridSpec::box1d(n, 1.0);
        const double tau = 0.05;
        const Field b = random_field(g, 42 + n);
        auto dense = dense_lap_1d(n, g.spacing(0));
        std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m[i][j] = (i == j ? 1.0 : 0.0) - tau * dense[i][j];
        const auto xref = gauss_solve(m, b.values);

        Field diag = laplacian_diag(g);
        for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = 1.0 + tau * diag[i];
        int iters = 0;
        const Field x = cg_solve(
            [&](const Field& in, Field& out) {
                laplacian_neumann(in, out);
                for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] - tau * out[i];
            },
            b, 1e-13, 1000, diag, &iters);
        CHECK(iters > 0);
        for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(xref[i]).epsilon(1e-9));
    }
}

TEST_CASE("cg failure is reported") {
    const auto g = GridSpec::box1d(32);
    const Field b = random_field(g, 7);
    Field diag(g, 1.0);
    CHECK_THROWS_AS(cg_solve([](const Field& in, Field& out) {
                        laplacian_neumann(in, out);
                        for (std::size_t i = 0; i < out.size(); ++i)
                            out[i] = in[i] - 50.0 * out[i];
                    },
                    b, 1e-15, 2, diag),
                    CgFailure);
}

TEST_CASE("V' surrogate norm") {
    const auto g = GridSpec::box1d(48, 2.0);
    const Field u = random_field(g, 5);
    CHECK(dual_norm_vprime(u) <= norm_h(u) * (1.0 + 1e-10));
    // constants are fixed points of (I - Lap)^{-1}
    const Field c(g, 1.5);
    CHECK(dual_norm_vprime(c) == doctest::Approx(norm_h(c)).epsilon(1e-10));
    CHECK(norm_v(u) * norm_v(u) ==
          doctest::Approx(norm_h(u) * norm_h(u) + grad_sq(u)).epsilon(1e-12));
}

TEST_CASE("grid mismatch is detected") {
    const Field a(GridSpec::box1d(4));
    const Field b(GridSpec::box1d(5));
    CHECK_THROWS_AS(a + b, GridMismatch);
    CHECK_THROWS_AS(inner_h(a, b), GridMismatch);
}

TEST_CASE("snapshot round trip and corruption") {
    const auto g = GridSpec::box2d(5, 3, 1.0, 2.0);
    const Field u = random_field(g, 11);
    std::ostringstream out;
    write_field(out, u);
    const std::string bytes = out.str();
    CHECK(bytes.size() == 32 + 8 * u.size());
    CHECK(bytes.substr(0, 4) == "ENTF");

    std::istringstream in(bytes);
    const Field v = read_field(in, g);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(v[i] == u[i]);

    std::string bad = bytes;
    bad[1] = 'X';
    std::istringstream bin(bad);
    CHECK_THROWS_AS(read_field(bin, g), SnapshotError);

    std::istringstream tin(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_field(tin, g), SnapshotError);

    // wrong grid is rejected
    std::istringstream win(bytes);
    CHECK_THROWS_AS(read_field(win, GridSpec::box2d(3, 5)), SnapshotError);
}
