#include "entro/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

namespace entro {

GridSpec GridSpec::box1d(int n, double length) {
    GridSpec g;
    g.dim = 1;
    g.extent = {length, 1.0, 1.0};
    g.cells = {n, 1, 1};
    g.validate();
    return g;
}

GridSpec GridSpec::box2d(int nx, int ny, double lx, double ly) {
    GridSpec g;
    g.dim = 2;
    g.extent = {lx, ly, 1.0};
    g.cells = {nx, ny, 1};
    g.validate();
    return g;
}

GridSpec GridSpec::box3d(int nx, int ny, int nz, double lx, double ly, double lz) {
    GridSpec g;
    g.dim = 3;
    g.extent = {lx, ly, lz};
    g.cells = {nx, ny, nz};
    g.validate();
    return g;
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (int k = 0; k < dim; ++k) v *= spacing(k);
    return v;
}

double GridSpec::volume() const {
    double v = 1.0;
    for (int k = 0; k < dim; ++k) v *= extent[k];
    return v;
}

std::size_t GridSpec::total_cells() const {
    std::size_t n = 1;
    for (int k = 0; k < dim; ++k) n *= static_cast<std::size_t>(cells[k]);
    return n;
}

void GridSpec::validate() const {
    if (dim < 1 || dim > 3) throw std::invalid_argument("grid dim must be 1, 2 or 3");
    for (int k = 0; k < dim; ++k) {
        if (cells[k] < 2) throw std::invalid_argument("grid needs at least 2 cells per axis");
        if (!(extent[k] > 0.0)) throw std::invalid_argument("grid extent must be positive");
    }
    for (int k = dim; k < 3; ++k) {
        if (cells[k] != 1) throw std::invalid_argument("unused grid axes must have one cell");
    }
}

bool Field::all_finite() const {
    return std::all_of(values.begin(), values.end(),
                       [](double v) { return std::isfinite(v); });
}

void require_same_grid(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) throw GridMismatch();
}

Field operator+(const Field& a, const Field& b) {
    require_same_grid(a, b);
    Field r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

Field operator-(const Field& a, const Field& b) {
    require_same_grid(a, b);
    Field r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

Field operator*(double s, const Field& a) {
    Field r = a;
    scale(r, s);
    return r;
}

void axpy(double a, const Field& x, Field& y) {
    require_same_grid(x, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

void scale(Field& x, double s) {
    for (double& v : x.values) v *= s;
}

namespace {

// strides for row-major layout, x fastest
std::array<std::size_t, 3> strides(const GridSpec& g) {
    return {1, static_cast<std::size_t>(g.cells[0]),
            static_cast<std::size_t>(g.cells[0]) * g.cells[1]};
}

}  // namespace

void laplacian_neumann(const Field& u, Field& out) {
    const GridSpec& g = u.grid;
    if (!(out.grid == g)) out = Field(g);
    std::fill(out.values.begin(), out.values.end(), 0.0);
    const auto st = strides(g);
    const int nx = g.cells[0], ny = g.cells[1], nz = g.cells[2];
    for (int axis = 0; axis < g.dim; ++axis) {
        const double inv_h2 = 1.0 / (g.spacing(axis) * g.spacing(axis));
        const std::size_t s = st[axis];
        const int n = g.cells[axis];
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    const int idx3[3] = {i, j, k};
                    const int a = idx3[axis];
                    const std::size_t c = i + st[1] * j + st[2] * k;
                    // mirrored ghost at the boundary: zero-flux face
                    const double um = (a > 0) ? u[c - s] : u[c];
                    const double up = (a < n - 1) ? u[c + s] : u[c];
                    out[c] += (um - 2.0 * u[c] + up) * inv_h2;
                }
    }
}

Field laplacian_neumann(const Field& u) {
    Field out(u.grid);
    laplacian_neumann(u, out);
    return out;
}

Field laplacian_diag(const GridSpec& g) {
    Field d(g, 0.0);
    const auto st = strides(g);
    const int nx = g.cells[0], ny = g.cells[1], nz = g.cells[2];
    for (int axis = 0; axis < g.dim; ++axis) {
        const double inv_h2 = 1.0 / (g.spacing(axis) * g.spacing(axis));
        const int n = g.cells[axis];
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    const int idx3[3] = {i, j, k};
                    const int a = idx3[axis];
                    const std::size_t c = i + st[1] * j + st[2] * k;
                    const int faces = (a > 0 ? 1 : 0) + (a < n - 1 ? 1 : 0);
                    d[c] += faces * inv_h2;
                }
    }
    return d;
}

double inner_h(const Field& u, const Field& v) {
    require_same_grid(u, v);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s * u.grid.cell_volume();
}

double norm_h(const Field& u) { return std::sqrt(std::max(0.0, inner_h(u, u))); }

double norm_l1(const Field& u) {
    double s = 0.0;
    for (double v : u.values) s += std::abs(v);
    return s * u.grid.cell_volume();
}

double norm_linf(const Field& u) {
    double m = 0.0;
    for (double v : u.values) m = std::max(m, std::abs(v));
    return m;
}

double grad_sq(const Field& u) {
    const GridSpec& g = u.grid;
    const auto st = strides(g);
    const int nx = g.cells[0], ny = g.cells[1], nz = g.cells[2];
    const double dv = g.cell_volume();
    double total = 0.0;
    for (int axis = 0; axis < g.dim; ++axis) {
        const double inv_h = 1.0 / g.spacing(axis);
        const std::size_t s = st[axis];
        const int n = g.cells[axis];
        for (int k = 0; k < nz; ++k)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    const int idx3[3] = {i, j, k};
                    if (idx3[axis] >= n - 1) continue;
                    const std::size_t c = i + st[1] * j + st[2] * k;
                    const double d = (u[c + s] - u[c]) * inv_h;
                    total += d * d * dv;
                }
    }
    return total;
}

double norm_v(const Field& u) {
    return std::sqrt(inner_h(u, u) + grad_sq(u));
}

Field cg_solve(const std::function<void(const Field&, Field&)>& apply,
               const Field& b, double tol, int maxit,
               const Field& jacobi_diag, int* iters) {
    require_same_grid(b, jacobi_diag);
    for (double d : jacobi_diag.values)
        if (!(d > 0.0)) throw std::invalid_argument("Jacobi diagonal must be positive");

    const double target = tol * std::max(1.0, norm_h(b));
    Field x(b.grid, 0.0);
    Field r = b;
    Field z(b.grid), q(b.grid), p(b.grid);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = r[i] / jacobi_diag[i];
    p = z;
    double rz = inner_h(r, z);
    int it = 0;
    double rnorm = norm_h(r);
    while (rnorm > target) {
        if (it >= maxit) throw CgFailure(maxit, rnorm);
        apply(p, q);
        const double pq = inner_h(p, q);
        if (!(pq > 0.0)) throw std::runtime_error("CG: operator not positive definite");
        const double alpha = rz / pq;
        axpy(alpha, p, x);
        axpy(-alpha, q, r);
        rnorm = norm_h(r);
        ++it;
        if (rnorm <= target) break;
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = r[i] / jacobi_diag[i];
        const double rz_new = inner_h(r, z);
        const double beta = rz_new / rz;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
        rz = rz_new;
    }
    if (iters) *iters += it;
    return x;
}

double dual_norm_vprime(const Field& u, double cg_tol) {
    Field diag = laplacian_diag(u.grid);
    for (double& d : diag.values) d += 1.0;
    Field lap(u.grid);
    auto apply = [&lap](const Field& v, Field& out) {
        laplacian_neumann(v, out);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i] - out[i];
    };
    Field w = cg_solve(apply, u, cg_tol, 10000, diag);
    return std::sqrt(std::max(0.0, inner_h(u, w)));
}

// --- snapshot IO -------------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'E', 'N', 'T', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw SnapshotError("truncated snapshot header");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
           (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}
}  // namespace

void write_field(std::ostream& out, const Field& f) {
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(f.grid.dim));
    for (int k = 0; k < 3; ++k) put_u32(out, static_cast<std::uint32_t>(f.grid.cells[k]));
    put_u32(out, 1);  // float64 flag
    put_u32(out, 0);  // reserved, pads the header to 32 bytes
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!out) throw SnapshotError("snapshot write failed");
}

Field read_field(std::istream& in, const GridSpec& grid) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw SnapshotError("bad snapshot magic");
    if (get_u32(in) != kVersion) throw SnapshotError("unsupported snapshot version");
    const auto dim = get_u32(in);
    std::uint32_t n[3];
    for (auto& v : n) v = get_u32(in);
    if (get_u32(in) != 1) throw SnapshotError("unsupported snapshot value type");
    (void)get_u32(in);  // reserved
    if (dim != static_cast<std::uint32_t>(grid.dim) ||
        n[0] != static_cast<std::uint32_t>(grid.cells[0]) ||
        n[1] != static_cast<std::uint32_t>(grid.cells[1]) ||
        n[2] != static_cast<std::uint32_t>(grid.cells[2]))
        throw SnapshotError("snapshot grid does not match expectation");
    Field f(grid);
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!in) throw SnapshotError("truncated snapshot payload");
    return f;
}

}  // namespace entro
