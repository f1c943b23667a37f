#include "entro/scheme.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "entro/config.hpp"

namespace entro::scheme {

using stepper::StepInputs;
using stepper::StepParams;
using stepper::StepResult;

// --- field specs -------------------------------------------------------------

Field FieldSpec::materialize(const GridSpec& grid) const {
    Field f(grid);
    const double h0 = grid.spacing(0);
    const double l0 = grid.extent[0];
    const int nx = grid.cells[0];
    const std::size_t planes = grid.total_cells() / nx;
    for (std::size_t pl = 0; pl < planes; ++pl) {
        for (int i = 0; i < nx; ++i) {
            const double x = (i + 0.5) * h0;
            double v = base;
            switch (kind) {
                case Kind::Constant: break;
                case Kind::Linear: v += slope * x; break;
                case Kind::Cosine: v += amp * std::cos(mode * M_PI * x / l0); break;
                case Kind::Gaussian: {
                    const double u = (x / l0 - center) / width;
                    v += amp * std::exp(-u * u);
                    break;
                }
            }
            f[pl * nx + i] = v;
        }
    }
    return f;
}

// --- sources -----------------------------------------------------------------

namespace {

double poly_eval(const std::vector<double>& c, double t) {
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * t + c[k];
    return v;
}

}  // namespace

Field SourceSpec::evaluate(const GridSpec& grid, double t) const {
    switch (kind) {
        case Kind::Zero:
            return Field(grid, 0.0);
        case Kind::Polynomial: {
            Field f = profile.materialize(grid);
            scale(f, poly_eval(coeffs, t));
            return f;
        }
        case Kind::Tabulated: {
            if (times.empty() || t < times.front() - 1e-12 || t > times.back() + 1e-12)
                throw std::runtime_error(
                    "tabulated source does not cover t = " + std::to_string(t));
            if (t <= times.front()) return frames.front();
            if (t >= times.back()) return frames.back();
            std::size_t j = 1;
            while (times[j] < t) ++j;
            const double s = (t - times[j - 1]) / (times[j] - times[j - 1]);
            Field f = (1.0 - s) * frames[j - 1];
            axpy(s, frames[j], f);
            return f;
        }
    }
    throw std::logic_error("bad source kind");
}

double SourceSpec::linf_bound(const GridSpec& grid, double t0, double t1) const {
    switch (kind) {
        case Kind::Zero:
            return 0.0;
        case Kind::Polynomial: {
            double pmax = 0.0;
            for (int k = 0; k <= 8; ++k)
                pmax = std::fmax(pmax, std::fabs(poly_eval(coeffs, t0 + (t1 - t0) * k / 8.0)));
            return pmax * norm_linf(profile.materialize(grid));
        }
        case Kind::Tabulated: {
            double m = 0.0;
            for (std::size_t j = 0; j < frames.size(); ++j)
                if (times[j] >= t0 - 1e-12 && times[j] <= t1 + 1e-12)
                    m = std::fmax(m, norm_linf(frames[j]));
            m = std::fmax(m, norm_linf(evaluate(grid, t0)));
            m = std::fmax(m, norm_linf(evaluate(grid, t1)));
            return m;
        }
    }
    throw std::logic_error("bad source kind");
}

Field discretize_source(const SourceSpec& source, const GridSpec& grid,
                        double tau, int i) {
    const double t0 = (i - 1) * tau, t1 = i * tau;
    switch (source.kind) {
        case SourceSpec::Kind::Zero:
            return Field(grid, 0.0);
        case SourceSpec::Kind::Polynomial: {
            // exact window average of the time polynomial
            double avg = 0.0;
            for (std::size_t k = 0; k < source.coeffs.size(); ++k)
                avg += source.coeffs[k] *
                       (std::pow(t1, k + 1) - std::pow(t0, k + 1)) / ((k + 1) * tau);
            Field f = source.profile.materialize(grid);
            scale(f, avg);
            return f;
        }
        case SourceSpec::Kind::Tabulated: {
            // 4-point Gauss-Legendre on the window (exact to degree 7)
            static const double node[4] = {-0.8611363115940526, -0.3399810435848563,
                                           0.3399810435848563, 0.8611363115940526};
            static const double weight[4] = {0.3478548451374538, 0.6521451548625461,
                                             0.6521451548625461, 0.3478548451374538};
            Field f(grid, 0.0);
            for (int q = 0; q < 4; ++q) {
                const double t = 0.5 * (t0 + t1) + 0.5 * tau * node[q];
                axpy(0.5 * weight[q], source.evaluate(grid, t), f);
            }
            return f;
        }
    }
    throw std::logic_error("bad source kind");
}

// --- config ------------------------------------------------------------------

std::vector<double> EpsilonSpec::ladder() const {
    std::vector<double> l;
    double v = ladder_start;
    while (v > ladder_min * (1.0 + 1e-12)) {
        l.push_back(v);
        v *= ladder_factor;
    }
    l.push_back(ladder_min);
    return l;
}

StepParams SchemeConfig::step_params() const {
    StepParams p;
    p.tau = tau();
    p.eps = epsilon.working_eps();
    p.k0 = k0;
    p.ell = ell;
    p.outer_tol = outer_tol;
    p.newton_tol = newton_tol;
    p.cg_tol = cg_tol;
    p.outer_maxit = outer_maxit;
    p.newton_maxit = newton_maxit;
    p.cg_maxit = cg_maxit;
    p.stabilization = stabilization;
    return p;
}

std::vector<std::string> SchemeConfig::validate() const {
    grid.validate();
    if (steps < 1) throw std::invalid_argument("step count N must be >= 1");
    if (!(final_time > 0.0)) throw std::invalid_argument("final time T must be positive");
    if (epsilon.policy == EpsPolicy::Ladder) {
        if (!(epsilon.ladder_start > 0.0 && epsilon.ladder_start <= 1.0))
            throw std::invalid_argument("eps ladder must start in (0, 1]");
        if (!(epsilon.ladder_factor > 0.0 && epsilon.ladder_factor < 1.0))
            throw std::invalid_argument("eps ladder factor must lie in (0, 1)");
        if (!(epsilon.ladder_min > 0.0 && epsilon.ladder_min <= epsilon.ladder_start))
            throw std::invalid_argument("eps ladder minimum must lie in (0, start]");
    }
    step_params().validate(pi.lipschitz(), final_time);

    const Field th0 = theta0_spec.materialize(grid);
    for (double v : th0.values)
        if (!(v > 0.0))
            throw std::invalid_argument(
                "theta0 must be positive everywhere (theta0 > 0 a.e.)");
    const Field ths = theta_star_spec.materialize(grid);
    for (double v : ths.values)
        if (!(v > 0.0))
            throw std::invalid_argument(
                "theta_star must be positive everywhere (theta* > 0)");
    const Field c0 = chi0_spec.materialize(grid);
    for (double v : c0.values)
        if (!beta.in_domain(v))
            throw std::invalid_argument(
                "chi0 must lie in D(beta) everywhere (chi0 in D(beta) a.e.)");

    std::vector<std::string> warnings;
    const double dt = tau();
    for (int i = 1; i <= steps; ++i) {
        const double window = dt * source.linf_bound(grid, (i - 1) * dt, i * dt);
        if (window > 0.25) {
            warnings.push_back(
                "per-window source smallness violated at step " + std::to_string(i) +
                ": tau*||F||_Linf = " + std::to_string(window) + " > 1/4");
            break;
        }
    }
    return warnings;
}

// --- the time loop -----------------------------------------------------------

StepInputs assemble_step_inputs(const Trajectory& traj, int i,
                                const Field& theta_star) {
    const SchemeConfig& cfg = traj.config;
    const double dt = cfg.tau();
    const double s = cfg.step_params().stab_coeff();
    if (i == 1 && !traj.ln_theta0.all_finite())
        throw std::invalid_argument("ln(theta0) is not finite: theta0 has a nonpositive cell");

    StepInputs in;
    in.g = discretize_source(cfg.source, cfg.grid, dt, i);
    scale(in.g, dt);
    axpy(s, traj.theta_at(i - 1), in.g);
    axpy(1.0, traj.ln_theta_at(i - 1), in.g);
    axpy(cfg.ell, traj.chi_at(i - 1), in.g);
    in.h = traj.chi_at(i - 1);
    in.theta_star = theta_star;
    in.beta = cfg.beta;
    in.op_a = cfg.op_a;
    in.pi = cfg.pi;
    return in;
}

Trajectory run(const SchemeConfig& config) {
    config.validate();
    const Field theta_star = config.theta_star_spec.materialize(config.grid);

    Trajectory traj;
    traj.config = config;
    traj.theta0 = config.theta0_spec.materialize(config.grid);
    traj.chi0 = config.chi0_spec.materialize(config.grid);
    traj.ln_theta0 = traj.theta0;
    for (double& v : traj.ln_theta0.values) v = std::log(v);

    const StepParams params = config.step_params();
    const bool ladder_policy = config.epsilon.policy == EpsPolicy::Ladder;
    const std::vector<double> ladder =
        ladder_policy ? config.epsilon.ladder() : std::vector<double>{};
    const double dt = config.tau();

    double cum_gradsq = 0.0, cum_dchi = 0.0;
    for (int i = 1; i <= config.steps; ++i) {
        StepInputs inputs = assemble_step_inputs(traj, i, theta_star);
        const Field* warm = (config.outer_init == OuterInit::Warm && i > 1)
                                ? &traj.steps.back().theta
                                : nullptr;
        StepResult res;
        try {
            res = ladder_policy
                      ? stepper::epsilon_ladder_step(inputs, params, ladder, nullptr, warm)
                      : stepper::fixed_point_step(inputs, params, warm);
        } catch (const stepper::StepFailure& e) {
            throw StepAbort(i, e.what(), std::move(traj));
        }

        // working-regularization log of the accepted state
        Field ln_i(config.grid);
        bool positive = true;
        for (std::size_t c = 0; c < ln_i.size(); ++c) {
            if (!(res.theta[c] > 0.0)) positive = false;
            if (ladder_policy) {
                ln_i[c] = std::log(std::fmax(res.theta[c],
                                             std::numeric_limits<double>::min()));
            } else {
                ln_i[c] = monotone::log_yosida(params.eps, res.theta[c]).value;
            }
        }

        // the log term actually solved at this step (differs from the stored
        // working log under the ladder policy, where the exact log is kept
        // for the next right-hand side)
        Field ln_eq = ln_i;
        if (ladder_policy) {
            for (std::size_t c = 0; c < ln_eq.size(); ++c)
                ln_eq[c] = monotone::log_yosida(params.eps, res.theta[c]).value;
        }

        const Field f_avg = discretize_source(config.source, config.grid, dt, i);
        diagnostics::LedgerRow row;
        row.step = i;
        row.time = i * dt;
        row.eps = params.eps;
        row.theta_min = *std::min_element(res.theta.values.begin(), res.theta.values.end());
        row.theta_max = *std::max_element(res.theta.values.begin(), res.theta.values.end());
        row.theta_h = norm_h(res.theta);
        row.theta_gradsq = grad_sq(res.theta);
        row.theta_l1 = norm_l1(res.theta);
        row.chi_v_sq = inner_h(res.chi, res.chi) + grad_sq(res.chi);
        double moreau_sum = 0.0, viol = 0.0;
        for (double v : res.chi.values) {
            moreau_sum += config.beta.moreau(params.eps, v);
            viol = std::fmax(viol, config.beta.domain_distance(v));
        }
        row.beta_moreau_integral = moreau_sum * config.grid.cell_volume();
        row.obstacle_violation = viol;
        row.zeta_h = norm_h(res.zeta);
        row.xi_h = norm_h(res.xi);
        row.entropy_defect = diagnostics::entropy_defect(
            res.theta, traj.theta_at(i - 1), ln_eq, traj.ln_theta_at(i - 1),
            res.chi, traj.chi_at(i - 1), res.zeta, f_avg, dt, config.ell,
            params.stab_coeff());
        cum_gradsq += dt * row.theta_gradsq;
        const Field dchi = res.chi - traj.chi_at(i - 1);
        cum_dchi += dt * std::pow(norm_h(dchi) / dt, 2);
        row.cum_tau_gradsq_theta = cum_gradsq;
        row.cum_tau_dchi_sq = cum_dchi;
        row.outer_iters = res.outer_iters;
        row.newton_iters = res.total_newton_iters;
        row.cg_iters = res.total_cg_iters;
        row.residual_theta = res.residual_theta;
        row.residual_chi = res.residual_chi;
        row.positivity_ok = positive;

        traj.steps.push_back(std::move(res));
        traj.ln_theta.push_back(std::move(ln_i));
        traj.ledger.push_back(row);
    }
    return traj;
}

// --- interpolants ------------------------------------------------------------

namespace {

void check_time(double t, double final_time) {
    if (t < -1e-12 || t > final_time * (1.0 + 1e-12))
        throw std::out_of_range("interpolation time outside [0, T]");
}

}  // namespace

Field interp_const(std::span<const Field> states, double final_time, double t) {
    check_time(t, final_time);
    const int n = static_cast<int>(states.size()) - 1;
    const double tau = final_time / n;
    const double u = t / tau;
    const int i = std::min(static_cast<int>(std::floor(u)), n);
    if (u == static_cast<double>(i)) return states[i];  // node convention: z^i
    return states[std::min(i + 1, n)];
}

Field interp_lin(std::span<const Field> states, double final_time, double t) {
    check_time(t, final_time);
    const int n = static_cast<int>(states.size()) - 1;
    const double tau = final_time / n;
    const double u = t / tau;
    const int i = std::min(static_cast<int>(std::floor(u)), n - 1);
    const double s = u - i;
    Field r = (1.0 - s) * states[i];
    axpy(s, states[i + 1], r);
    return r;
}

namespace {

std::vector<Field> gather(const Trajectory& traj, bool chi) {
    std::vector<Field> v;
    v.reserve(traj.n_steps() + 1);
    for (int i = 0; i <= traj.n_steps(); ++i)
        v.push_back(chi ? traj.chi_at(i) : traj.theta_at(i));
    return v;
}

}  // namespace

Field interp_theta_lin(const Trajectory& traj, double t) {
    const auto states = gather(traj, false);
    return interp_lin(states, traj.config.final_time, t);
}

Field interp_chi_lin(const Trajectory& traj, double t) {
    const auto states = gather(traj, true);
    return interp_lin(states, traj.config.final_time, t);
}

// --- checkpointing -----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'E', 'N', 'T', 'C'};
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
    if (!in) throw CheckpointError("truncated checkpoint");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
           (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

std::uint32_t crc_of(const std::string& bytes) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
                static_cast<uInt>(bytes.size())));
}

void write_block(std::ostream& out, const std::string& bytes) {
    put_u32(out, static_cast<std::uint32_t>(bytes.size()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    put_u32(out, crc_of(bytes));
}

std::string read_block(std::istream& in, const std::string& what) {
    const std::uint32_t len = get_u32(in);
    std::string bytes(len, '\0');
    in.read(bytes.data(), len);
    if (!in) throw CheckpointError("truncated checkpoint in " + what);
    const std::uint32_t crc = get_u32(in);
    if (crc != crc_of(bytes))
        throw CheckpointError("checksum mismatch in " + what);
    return bytes;
}

std::string field_bytes(const Field& f) {
    std::ostringstream os(std::ios::binary);
    write_field(os, f);
    return os.str();
}

Field field_from_bytes(const std::string& bytes, const GridSpec& g) {
    std::istringstream is(bytes, std::ios::binary);
    return read_field(is, g);
}

}  // namespace

void checkpoint_save(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    write_block(out, config::serialize(traj.config));
    put_u32(out, static_cast<std::uint32_t>(traj.n_steps()));
    write_block(out, field_bytes(traj.theta0));
    write_block(out, field_bytes(traj.chi0));
    write_block(out, field_bytes(traj.ln_theta0));
    for (int i = 0; i < traj.n_steps(); ++i) {
        const auto& s = traj.steps[i];
        write_block(out, field_bytes(s.theta));
        write_block(out, field_bytes(s.chi));
        write_block(out, field_bytes(s.zeta));
        write_block(out, field_bytes(s.xi));
        write_block(out, field_bytes(traj.ln_theta[i]));
    }
    std::ostringstream csv;
    csv << diagnostics::LedgerRow::csv_header() << '\n';
    for (const auto& row : traj.ledger) csv << row.to_csv() << '\n';
    write_block(out, csv.str());
    if (!out) throw CheckpointError("checkpoint write failed: " + path);
}

Trajectory checkpoint_load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointError("bad checkpoint magic");
    if (get_u32(in) != kVersion)
        throw CheckpointError("unsupported checkpoint version");

    Trajectory traj;
    traj.config = config::parse_text(read_block(in, "config"));
    const GridSpec& grid = traj.config.grid;
    const std::uint32_t n = get_u32(in);
    traj.theta0 = field_from_bytes(read_block(in, "theta0"), grid);
    traj.chi0 = field_from_bytes(read_block(in, "chi0"), grid);
    traj.ln_theta0 = field_from_bytes(read_block(in, "ln_theta0"), grid);
    for (std::uint32_t i = 1; i <= n; ++i) {
        const std::string tag = "step " + std::to_string(i);
        StepResult s;
        s.theta = field_from_bytes(read_block(in, tag + " theta"), grid);
        s.chi = field_from_bytes(read_block(in, tag + " chi"), grid);
        s.zeta = field_from_bytes(read_block(in, tag + " zeta"), grid);
        s.xi = field_from_bytes(read_block(in, tag + " xi"), grid);
        traj.ln_theta.push_back(field_from_bytes(read_block(in, tag + " ln_theta"), grid));
        traj.steps.push_back(std::move(s));
    }
    std::istringstream csv(read_block(in, "ledger"));
    std::string line;
    std::getline(csv, line);
    if (line != diagnostics::LedgerRow::csv_header())
        throw CheckpointError("unexpected ledger header");
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        traj.ledger.push_back(diagnostics::LedgerRow::from_csv(line));
    }
    if (traj.ledger.size() != traj.steps.size())
        throw CheckpointError("ledger row count does not match step count");
    // restore iteration counters and residuals from the ledger rows
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
        traj.steps[i].outer_iters = traj.ledger[i].outer_iters;
        traj.steps[i].total_newton_iters = traj.ledger[i].newton_iters;
        traj.steps[i].total_cg_iters = traj.ledger[i].cg_iters;
        traj.steps[i].residual_theta = traj.ledger[i].residual_theta;
        traj.steps[i].residual_chi = traj.ledger[i].residual_chi;
    }
    return traj;
}

}  // namespace entro::scheme
