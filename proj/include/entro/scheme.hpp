#pragma once

#include <optional>
#include <string>
#include <vector>

#include "entro/diagnostics.hpp"
#include "entro/grid.hpp"
#include "entro/monotone.hpp"
#include "entro/stepper.hpp"

namespace entro::scheme {

/// Closed-form spatial profile, evaluated at cell centers.
struct FieldSpec {
    enum class Kind { Constant, Linear, Cosine, Gaussian };
    Kind kind = Kind::Constant;
    // Constant: base; Linear: base + slope*x0;
    // Cosine:   base + amp*cos(k*pi*x0/L0)  (Neumann-compatible);
    // Gaussian: base + amp*exp(-((x0/L0 - center)/width)^2)
    double base = 0.0, amp = 0.0, slope = 0.0, center = 0.5, width = 0.1;
    int mode = 1;

    Field materialize(const GridSpec& grid) const;
    bool operator==(const FieldSpec&) const = default;
};

/// Source term F(t, x) = p(t) * profile(x), p a polynomial in t, or a
/// tabulated time series of fields (linear in t between frames).
struct SourceSpec {
    enum class Kind { Zero, Polynomial, Tabulated };
    Kind kind = Kind::Zero;
    std::vector<double> coeffs;   // p(t) = sum coeffs[k] * t^k
    FieldSpec profile;            // spatial factor for Polynomial
    std::vector<double> times;    // Tabulated: strictly increasing
    std::vector<Field> frames;
    std::string table_path;       // provenance of a Tabulated source

    Field evaluate(const GridSpec& grid, double t) const;
    /// L-infinity bound of F over [t0, t1] (exact for Polynomial,
    /// frame-wise for Tabulated).
    double linf_bound(const GridSpec& grid, double t0, double t1) const;
    bool operator==(const SourceSpec&) const = default;
};

/// F^i = (1/tau) * integral of F over ((i-1)tau, i*tau): exact for
/// polynomial-in-t sources, 4-point Gauss-Legendre per window otherwise.
Field discretize_source(const SourceSpec& source, const GridSpec& grid,
                        double tau, int i);

enum class EpsPolicy { Fixed, Ladder };
enum class OuterInit { Warm, Cold };

struct EpsilonSpec {
    EpsPolicy policy = EpsPolicy::Ladder;
    double fixed_eps = 1e-3;
    double ladder_start = 1e-1;
    double ladder_factor = 0.5;
    double ladder_min = 1e-5;

    double working_eps() const {
        return policy == EpsPolicy::Fixed ? fixed_eps : ladder_min;
    }
    std::vector<double> ladder() const;
    bool operator==(const EpsilonSpec&) const = default;
};

struct SchemeConfig {
    double final_time = 0.1;
    int steps = 100;
    GridSpec grid = GridSpec::box1d(64);
    double k0 = 1.0;
    double ell = 0.0;
    monotone::ScalarGraph beta;
    monotone::PiFunction pi;
    monotone::NonlocalOp op_a;
    FieldSpec theta_star_spec{FieldSpec::Kind::Constant, 1.0};
    FieldSpec theta0_spec{FieldSpec::Kind::Constant, 1.0};
    FieldSpec chi0_spec{FieldSpec::Kind::Constant, 0.0};
    SourceSpec source;
    EpsilonSpec epsilon;
    double outer_tol = 1e-8, newton_tol = 1e-10, cg_tol = 1e-12;
    int outer_maxit = 200, newton_maxit = 60, cg_maxit = 20000;
    OuterInit outer_init = OuterInit::Warm;
    bool stabilization = true;
    int snapshot_every = 0;  // 0 = max(1, N/50)

    double tau() const { return final_time / steps; }
    stepper::StepParams step_params() const;

    /// Throws std::invalid_argument naming the violated condition
    /// (positivity of theta0/theta_star, chi0 in D(beta), tau and eps
    /// restrictions). Returns warnings (per-window source smallness).
    std::vector<std::string> validate() const;

    bool operator==(const SchemeConfig&) const = default;
};

struct Trajectory {
    SchemeConfig config;
    Field theta0, chi0, ln_theta0;
    std::vector<stepper::StepResult> steps;    // i = 1..N
    std::vector<Field> ln_theta;               // working-regularization log per step
    std::vector<diagnostics::LedgerRow> ledger;

    int n_steps() const { return static_cast<int>(steps.size()); }
    const Field& theta_at(int i) const { return i == 0 ? theta0 : steps[i - 1].theta; }
    const Field& chi_at(int i) const { return i == 0 ? chi0 : steps[i - 1].chi; }
    const Field& ln_theta_at(int i) const { return i == 0 ? ln_theta0 : ln_theta[i - 1]; }
};

struct StepAbort : std::runtime_error {
    int step;
    Trajectory partial;
    StepAbort(int i, std::string why, Trajectory t)
        : std::runtime_error("step " + std::to_string(i) + " failed: " + std::move(why)),
          step(i), partial(std::move(t)) {}
};

/// Inputs for step i (1-based) from the trajectory so far. The log term
/// in g uses exact ln(theta_0) at i = 1 and the stored working log
/// afterwards; h is the previous chi.
stepper::StepInputs assemble_step_inputs(const Trajectory& traj, int i,
                                         const Field& theta_star);

/// Runs the full time loop. Deterministic for a fixed config; throws
/// StepAbort with the partial trajectory on step failure.
Trajectory run(const SchemeConfig& config);

// --- interpolants (piecewise constant zbar / piecewise linear zhat) ---------
// At nodes t = i*tau both conventions return z^i.

Field interp_const(std::span<const Field> states, double final_time, double t);
Field interp_lin(std::span<const Field> states, double final_time, double t);

Field interp_theta_lin(const Trajectory& traj, double t);
Field interp_chi_lin(const Trajectory& traj, double t);

// --- checkpointing -----------------------------------------------------------

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Versioned binary checkpoint: config text, initial data, one block per
/// step (theta, chi, zeta, xi, ln_theta), ledger CSV; every block is
/// CRC-protected. Round-trips bit-exactly.
void checkpoint_save(const Trajectory& traj, const std::string& path);
Trajectory checkpoint_load(const std::string& path);

}  // namespace entro::scheme
