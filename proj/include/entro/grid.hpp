#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace entro {

/// Uniform axis-aligned box discretization of Omega in R^d, d = 1,2,3.
/// Cell-centered finite volumes; unused axes carry one cell of extent 1.
struct GridSpec {
    int dim = 1;
    std::array<double, 3> extent{1.0, 1.0, 1.0};
    std::array<int, 3> cells{2, 1, 1};

    static GridSpec box1d(int n, double length = 1.0);
    static GridSpec box2d(int nx, int ny, double lx = 1.0, double ly = 1.0);
    static GridSpec box3d(int nx, int ny, int nz, double lx = 1.0, double ly = 1.0, double lz = 1.0);

    double spacing(int axis) const { return extent[axis] / cells[axis]; }
    double cell_volume() const;
    double volume() const;
    std::size_t total_cells() const;
    void validate() const;

    bool operator==(const GridSpec& o) const = default;
};

/// One real value per cell, row-major (x fastest).
struct Field {
    GridSpec grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const GridSpec& g, double fill = 0.0)
        : grid(g), values(g.total_cells(), fill) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
    bool all_finite() const;

    bool operator==(const Field&) const = default;
};

struct GridMismatch : std::runtime_error {
    GridMismatch() : std::runtime_error("fields live on different grids") {}
};

void require_same_grid(const Field& a, const Field& b);

// elementwise helpers
Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double s, const Field& a);
void axpy(double a, const Field& x, Field& y);   // y += a*x
void scale(Field& x, double s);

/// Homogeneous-Neumann Laplacian: second differences with mirrored ghost
/// cells, so that the output integrates to zero in exact arithmetic.
Field laplacian_neumann(const Field& u);
void laplacian_neumann(const Field& u, Field& out);

/// Diagonal of -Delta_h (boundary cells have the smaller stencil weight).
Field laplacian_diag(const GridSpec& g);

double inner_h(const Field& u, const Field& v);
double norm_h(const Field& u);
double norm_l1(const Field& u);
double norm_linf(const Field& u);

/// Sum over interior faces of (difference/h)^2 * dV; equals
/// inner_h(u, -laplacian_neumann(u)) by summation by parts.
double grad_sq(const Field& u);

/// sqrt(norm_h^2 + grad_sq), the discrete V norm.
double norm_v(const Field& u);

struct CgFailure : std::runtime_error {
    double final_residual;
    CgFailure(int maxit, double res)
        : std::runtime_error("CG did not converge in " + std::to_string(maxit) +
                             " iterations (residual " + std::to_string(res) + ")"),
          final_residual(res) {}
};

/// Jacobi-preconditioned conjugate gradients for SPD maps on a grid.
/// Returns x with ||apply(x) - b||_H <= tol * max(1, ||b||_H).
Field cg_solve(const std::function<void(const Field&, Field&)>& apply,
               const Field& b, double tol, int maxit,
               const Field& jacobi_diag, int* iters = nullptr);

/// Discrete surrogate of the V' norm: solve (I - Delta_h) w = u and
/// return sqrt(inner_h(u, w)).
double dual_norm_vprime(const Field& u, double cg_tol = 1e-12);

// --- binary snapshot format -------------------------------------------------
// 32-byte header: magic "ENTF", version u32, dim u32, n per axis u32 x3,
// float64 flag u32; then row-major float64 values, little-endian.

struct SnapshotError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_field(std::ostream& out, const Field& f);
Field read_field(std::istream& in, const GridSpec& grid);

}  // namespace entro
