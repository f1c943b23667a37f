#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "entro/config.hpp"
#include "entro/scheme.hpp"
#include "entro/studies.hpp"

namespace fs = std::filesystem;
using namespace entro;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStep = 3;
constexpr int kExitVerify = 4;
constexpr int kExitIo = 5;

struct Manifest {
    fs::path dir;
    std::string config_echo;
    std::vector<std::string> artifacts;

    void write(bool complete) const {
        std::ofstream out(dir / "manifest.txt");
        if (!out) throw std::ios_base::failure("cannot write manifest");
        out << "status = " << (complete ? "complete" : "running") << "\n";
        out << "config = config.cfg\n";
        for (const auto& a : artifacts) out << "artifact " << a << "\n";
        if (!out) throw std::ios_base::failure("manifest write failed");
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::ios_base::failure("cannot write " + path.string());
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            int snapshot_every) {
    scheme::SchemeConfig cfg;
    try {
        cfg = config::parse_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (snapshot_every >= 0) cfg.snapshot_every = snapshot_every;
    for (const auto& w : cfg.validate()) std::cerr << "warning: " << w << "\n";

    try {
        fs::create_directories(out_dir);
        Manifest manifest{out_dir, config::serialize(cfg),
                          {"ledger.csv", "checkpoint.entc"}};
        write_text(fs::path(out_dir) / "config.cfg", manifest.config_echo);
        manifest.write(false);

        scheme::Trajectory traj;
        try {
            traj = scheme::run(cfg);
        } catch (const scheme::StepAbort& e) {
            std::cerr << "step failure: " << e.what() << "\n";
            return kExitStep;
        }

        std::ostringstream csv;
        csv << diagnostics::LedgerRow::csv_header() << '\n';
        for (const auto& row : traj.ledger) csv << row.to_csv() << '\n';
        write_text(fs::path(out_dir) / "ledger.csv", csv.str());

        const int cadence = cfg.snapshot_every > 0
                                ? cfg.snapshot_every
                                : std::max(1, cfg.steps / 50);
        fs::create_directories(fs::path(out_dir) / "snapshots");
        for (int i = 1; i <= traj.n_steps(); ++i) {
            if (i % cadence != 0 && i != traj.n_steps()) continue;
            char name[64];
            std::snprintf(name, sizeof name, "snapshots/theta_%06d.entf", i);
            std::ofstream ts(fs::path(out_dir) / name, std::ios::binary);
            write_field(ts, traj.theta_at(i));
            manifest.artifacts.push_back(name);
            std::snprintf(name, sizeof name, "snapshots/chi_%06d.entf", i);
            std::ofstream cs(fs::path(out_dir) / name, std::ios::binary);
            write_field(cs, traj.chi_at(i));
            manifest.artifacts.push_back(name);
        }
        scheme::checkpoint_save(traj, (fs::path(out_dir) / "checkpoint.entc").string());
        manifest.write(true);
        std::cout << "run complete: " << traj.n_steps() << " steps, ledger and "
                  << "checkpoint written to " << out_dir << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    }
}

int cmd_check(const std::string& checkpoint_path) {
    scheme::Trajectory traj;
    try {
        traj = scheme::checkpoint_load(checkpoint_path);
    } catch (const std::exception& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return kExitVerify;
    }
    const auto& cfg = traj.config;
    const Field theta_star = cfg.theta_star_spec.materialize(cfg.grid);
    const auto params = cfg.step_params();
    const double defect_bound = 100.0 * cfg.newton_tol * cfg.grid.volume();
    const bool ladder_policy = cfg.epsilon.policy == scheme::EpsPolicy::Ladder;

    bool ok = true;
    for (int i = 1; i <= traj.n_steps(); ++i) {
        const auto inputs = scheme::assemble_step_inputs(traj, i, theta_star);
        const auto [rt, rc] = stepper::step_residuals(traj.steps[i - 1], inputs, params);
        if (rt > 10.0 * cfg.newton_tol || rc > 10.0 * cfg.newton_tol) {
            std::cerr << "check failed: residuals at step " << i << " ("
                      << rt << ", " << rc << ")\n";
            ok = false;
            continue;
        }
        // recompute the working log and the ledger row from scratch
        Field ln_i(cfg.grid);
        for (std::size_t c = 0; c < ln_i.size(); ++c) {
            const double th = traj.steps[i - 1].theta[c];
            ln_i[c] = ladder_policy
                          ? std::log(std::fmax(th, std::numeric_limits<double>::min()))
                          : monotone::log_yosida(params.eps, th).value;
        }
        for (std::size_t c = 0; c < ln_i.size(); ++c) {
            if (ln_i[c] != traj.ln_theta[i - 1][c]) {
                std::cerr << "check failed: stored log field differs at step " << i << "\n";
                ok = false;
                break;
            }
        }
        // defect uses the log term the step equation actually solved
        Field ln_eq = ln_i;
        if (ladder_policy) {
            for (std::size_t c = 0; c < ln_eq.size(); ++c)
                ln_eq[c] = monotone::log_yosida(params.eps, traj.steps[i - 1].theta[c]).value;
        }
        const Field f_avg = scheme::discretize_source(cfg.source, cfg.grid, cfg.tau(), i);
        const double defect = diagnostics::entropy_defect(
            traj.steps[i - 1].theta, traj.theta_at(i - 1), ln_eq,
            traj.ln_theta_at(i - 1), traj.steps[i - 1].chi, traj.chi_at(i - 1),
            traj.steps[i - 1].zeta, f_avg, cfg.tau(), cfg.ell, params.stab_coeff());
        if (defect > defect_bound) {
            std::cerr << "check failed: entropy defect at step " << i << " ("
                      << defect << " > " << defect_bound << ")\n";
            ok = false;
        }
        const auto& row = traj.ledger[i - 1];
        if (row.theta_h != norm_h(traj.steps[i - 1].theta) ||
            row.zeta_h != norm_h(traj.steps[i - 1].zeta) ||
            row.xi_h != norm_h(traj.steps[i - 1].xi) ||
            row.entropy_defect != defect) {
            std::cerr << "check failed: ledger row mismatch at step " << i << "\n";
            ok = false;
        }
    }
    if (ok) {
        std::cout << "check passed: " << traj.n_steps() << " steps verified\n";
        return kExitOk;
    }
    return kExitVerify;
}

template <typename Fn>
int cmd_study(const std::string& config_path, const std::string& out_dir,
              Fn&& make_report) {
    scheme::SchemeConfig cfg;
    try {
        cfg = config::parse_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        studies::StudyReport report;
        try {
            report = make_report(cfg);
        } catch (const scheme::StepAbort& e) {
            std::cerr << "step failure: " << e.what() << "\n";
            return kExitStep;
        } catch (const std::invalid_argument& e) {
            std::cerr << "study error: " << e.what() << "\n";
            return kExitConfig;
        }
        fs::create_directories(out_dir);
        write_text(fs::path(out_dir) / "study.csv", report.to_csv());
        write_text(fs::path(out_dir) / "study.txt", report.summary());
        std::cout << report.summary();
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    }
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') { out.push_back(cur); cur.clear(); }
        else cur.push_back(c);
    }
    out.push_back(cur);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"entro: singular phase-field solver and verification harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", ladder_spec, checkpoint_path;
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;
    int snapshot_every = -1;

    auto* run = app.add_subcommand("run", "run one scenario");
    run->add_option("--config", config_path)->required();
    run->add_option("--out", out_dir);
    run->add_option("--snapshot-every", snapshot_every);

    auto* study_tau = app.add_subcommand("study-tau", "tau self-convergence study");
    study_tau->add_option("--config", config_path)->required();
    study_tau->add_option("--out", out_dir);
    study_tau->add_option("--ladder", ladder_spec, "comma list of step counts")->required();
    study_tau->add_option("--jobs", jobs);

    auto* study_eps = app.add_subcommand("study-eps", "eps refinement study");
    study_eps->add_option("--config", config_path)->required();
    study_eps->add_option("--out", out_dir);
    study_eps->add_option("--ladder", ladder_spec, "comma list of eps values")->required();
    study_eps->add_option("--jobs", jobs);

    auto* check = app.add_subcommand("check", "verify a checkpoint from scratch");
    check->add_option("checkpoint", checkpoint_path)->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path, out_dir, snapshot_every);
    if (study_tau->parsed()) {
        return cmd_study(config_path, out_dir, [&](const scheme::SchemeConfig& cfg) {
            std::vector<int> ns;
            for (const auto& t : split_commas(ladder_spec)) ns.push_back(std::stoi(t));
            return studies::tau_study(cfg, ns, jobs);
        });
    }
    if (study_eps->parsed()) {
        return cmd_study(config_path, out_dir, [&](const scheme::SchemeConfig& cfg) {
            std::vector<double> eps;
            for (const auto& t : split_commas(ladder_spec)) eps.push_back(std::stod(t));
            return studies::eps_study(cfg, eps, jobs);
        });
    }
    if (check->parsed()) return cmd_check(checkpoint_path);
    return kExitConfig;
}
