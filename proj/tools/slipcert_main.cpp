#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "slipcert/config.hpp"
#include "slipcert/errors.hpp"
#include "slipcert/fdi.hpp"
#include "slipcert/simulate.hpp"
#include "slipcert/slip_bounds.hpp"

namespace {

using namespace slipcert;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNoCertificate = 2;
constexpr int kExitNumerical = 3;

std::string default_out_dir() {
    const char* env = std::getenv("SLIPCERT_OUT_DIR");
    return env ? env : ".";
}

std::filesystem::path out_path(const std::string& dir, const std::string& flag,
                               const std::string& fallback) {
    if (!flag.empty()) return flag;
    std::filesystem::create_directories(dir);
    return std::filesystem::path(dir) / fallback;
}

double default_horizon(const SystemModel& model) {
    if (model.example) return 200.0 * model.example->T;
    return 200.0 / model.decay_r;
}

double default_step(const SystemModel& model, double mu) {
    double s = model.example ? model.example->T : 1.0 / model.decay_r;
    double h = model.transfer.min_positive_delay();
    if (h > 0.0) s = std::min(s, h);
    if (mu > 0.0) s = std::min(s, mu);
    return s / 20.0;
}

Multipliers multipliers_for(const RunConfig& cfg, const SystemModel& model) {
    if (cfg.task.multipliers) return *cfg.task.multipliers;
    if (model.example) {
        return pll_recipe_multipliers(model.example->T, model.example->s, model.example->h0);
    }
    return Multipliers{};
}

int cmd_reproduce_paper() {
    auto rows = reproduce_example_rows();
    const int expected[] = {1, 2, 5};
    std::printf("%8s %8s %14s %12s %14s %4s\n", "beta", "gamma0", "2sqrt(ed)", "q",
                "denominator", "r0");
    bool ok = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::printf("%8.2f %8.4f %14.9f %12.9f %14.9f %4d\n", row.beta, row.g0,
                    row.two_sqrt_eps_delta, row.q, row.denominator, row.r0);
        if (row.r0 != expected[i]) {
            std::printf("  mismatch: expected r0 = %d for beta = %.2f, got %d\n",
                        expected[i], row.beta, row.r0);
            ok = false;
        }
    }
    return ok ? kExitOk : kExitNumerical;
}

int cmd_certify(const RunConfig& cfg, std::uint64_t seed, const std::string& theorem_flag,
                const std::string& out_flag, const std::string& out_dir) {
    SystemModel model = build_model(cfg);
    SearchBudget budget;
    budget.k_max = cfg.task.k_max;
    budget.iterations = cfg.task.iterations;
    budget.restarts = cfg.task.restarts;
    budget.seed = seed;
    budget.user_Q = cfg.task.Q;
    budget.root_start = cfg.task.root_start;
    Theorem theorem = theorem_from_name(theorem_flag.empty() ? cfg.task.theorem : theorem_flag);

    SearchDiagnostics diag;
    auto cert = certify(model, theorem, budget, &diag);
    if (!cert) {
        std::fprintf(stderr,
                     "no certificate within budget (k up to %d); best margin %.6g at "
                     "theta=%.6g eps=%.6g delta=%.6g tau=%.6g a=%.6g\n",
                     diag.k_reached, diag.best_score, diag.best_multipliers.theta,
                     diag.best_multipliers.eps, diag.best_multipliers.delta,
                     diag.best_multipliers.tau, diag.best_multipliers.a);
        return kExitNoCertificate;
    }
    auto path = out_path(out_dir, out_flag, "certificate.txt");
    std::ofstream out(path);
    out << serialize_certificate(*cert);
    out.close();

    std::printf("certificate: %s\n", theorem_name(cert->theorem).c_str());
    std::printf("  k_bound     = %d  (slips fewer than k_bound cycles)\n", cert->k_bound);
    std::printf("  max_slips   = %d\n", cert->max_slips());
    std::printf("  q_used      = %.9g\n", cert->q_used);
    std::printf("  fdi_margin  = %.6g  (%s)\n", cert->fdi_margin, cert->fdi_method.c_str());
    std::printf("  pd_margin   = %.6g\n", cert->pd_margin);
    std::printf("  root_start  = %s\n", cert->requires_root_start ? "required" : "not required");
    std::printf("  written to  = %s\n", path.string().c_str());

    if (theorem == Theorem::T4 && cfg.task.mu > 0.0) {
        // Empirical probe of mu_0: the largest tested mu at which the
        // perturbed slip count matches the certificate's bound.
        double sigma0 = model.nonlinearity.roots_on_period().front();
        double horizon = default_horizon(model);
        double mu = cfg.task.mu;
        double mu_ok = 0.0;
        for (int i = 0; i < 8; ++i) {
            Trajectory t = integrate_singular(model, mu, InitialData::constant(sigma0),
                                              horizon, mu / 10.0);
            if (t.slips() <= cert->max_slips()) {
                mu_ok = mu;
                break;
            }
            mu /= 2.0;
        }
        std::printf("  empirical mu_0 >= %.6g (probe only, not part of the certificate)\n",
                    mu_ok);
    }
    return kExitOk;
}

int cmd_verify(const std::string& cert_path, const RunConfig& cfg) {
    std::ifstream in(cert_path);
    if (!in) {
        std::fprintf(stderr, "cannot open certificate %s\n", cert_path.c_str());
        return kExitUsage;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    SlipCertificate cert = parse_certificate(buf.str());
    SystemModel model = build_model(cfg);
    bool ok = verify_certificate(model, cert);
    std::printf("certificate %s: %s\n", cert_path.c_str(), ok ? "VALID" : "INVALID");
    return ok ? kExitOk : kExitNoCertificate;
}

int cmd_simulate(const RunConfig& cfg, double horizon_flag, double step_flag, double mu_flag,
                 const std::string& out_flag, const std::string& out_dir) {
    SystemModel model = build_model(cfg);
    double mu = mu_flag > 0.0 ? mu_flag : cfg.task.mu;
    double horizon = horizon_flag > 0.0 ? horizon_flag
                     : cfg.task.horizon > 0.0 ? cfg.task.horizon
                                              : default_horizon(model);
    double step = step_flag > 0.0 ? step_flag
                  : cfg.task.step > 0.0 ? cfg.task.step
                                        : default_step(model, mu);
    double sigma0 = cfg.task.sigma0 ? *cfg.task.sigma0
                                    : model.nonlinearity.roots_on_period().front();
    InitialData init = InitialData::constant(sigma0, cfg.task.sigma_dot0);

    Trajectory traj;
    if (mu > 0.0) {
        traj = integrate_singular(model, mu, init, horizon, step);
    } else if (model.example) {
        traj = integrate_pll_example(*model.example, init, horizon, step);
    } else {
        traj = integrate_volterra(model, init, horizon, step);
    }
    auto it_values = monitor_IT(traj, model.nonlinearity, multipliers_for(cfg, model));

    auto path = out_path(out_dir, out_flag, "trajectory.csv");
    std::ofstream out(path);
    out << "t,sigma,sigma_dot,slips_so_far,I_T\n";
    int running = 0;
    char line[160];
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        running = std::max(running, static_cast<int>(std::floor(
                                        std::abs(traj.sigma[i] - traj.sigma[0]) / traj.period)));
        std::snprintf(line, sizeof(line), "%.10g,%.12g,%.12g,%d,%.12g\n", traj.times[i],
                      traj.sigma[i], traj.sigma_dot[i], running, it_values[i]);
        out << line;
    }
    std::printf("trajectory: %zu samples, %d slips, written to %s\n", traj.times.size(),
                traj.slips(), path.string().c_str());
    return kExitOk;
}

int cmd_dump_fdi(const RunConfig& cfg, const std::string& out_flag,
                 const std::string& out_dir) {
    SystemModel model = build_model(cfg);
    Multipliers mult = multipliers_for(cfg, model);
    FdiReport rep = check_fdi(model.transfer, model.nonlinearity, mult, {});
    auto path = out_path(out_dir, out_flag, "fdi.csv");
    std::ofstream out(path);
    out << "omega,fdi_value\n";
    const int n = 2000;
    char line[80];
    for (int i = 0; i <= n; ++i) {
        double w = rep.grid.omega_max * i / n;
        std::snprintf(line, sizeof(line), "%.10g,%.12g\n", w,
                      fdi_value(model.transfer, model.nonlinearity, mult, w));
        out << line;
    }
    std::printf("fdi: holds=%s min_margin=%.6g at omega=%.6g, written to %s\n",
                rep.holds ? "true" : "false", rep.min_margin, rep.argmin_omega,
                path.string().c_str());
    return rep.holds ? kExitOk : kExitNoCertificate;
}

struct SweepCell {
    double beta, T, h0, s;
    std::string certified;  // r0 or "fail"
    int r0 = -1;
    int max_slips = -1;
};

int cmd_sweep(const RunConfig& cfg, int jobs, const std::string& out_flag,
              const std::string& out_dir) {
    if (cfg.linear_part.preset != "pll_pi_filter") {
        std::fprintf(stderr, "sweep: only the pll_pi_filter preset family is supported\n");
        return kExitUsage;
    }
    auto axis = [](const std::vector<double>& v, double base) {
        return v.empty() ? std::vector<double>{base} : v;
    };
    auto betas = axis(cfg.task.sweep.beta, cfg.nonlinearity.beta);
    auto Ts = axis(cfg.task.sweep.T, cfg.linear_part.T);
    auto h0s = axis(cfg.task.sweep.h0, cfg.linear_part.h0);
    auto ss = axis(cfg.task.sweep.s, cfg.linear_part.s);
    const std::size_t total = betas.size() * Ts.size() * h0s.size() * ss.size();
    if (total > 10000) {
        std::fprintf(stderr, "sweep: grid too large (%zu cells, limit 10000)\n", total);
        return kExitUsage;
    }

    std::vector<SweepCell> cells;
    cells.reserve(total);
    for (double beta : betas)
        for (double T : Ts)
            for (double h0 : h0s)
                for (double s : ss) cells.push_back({beta, T, h0, s, "", -1, -1});

    const int n_inits = std::max(1, cfg.task.sweep.inits);
    auto run_cell = [&](SweepCell& cell) {
        try {
            cell.r0 = example_r0(cell.T, cell.s, cell.beta, cell.h0);
            cell.certified = std::to_string(cell.r0);
        } catch (const NoCertificate&) {
            cell.certified = "fail";
        }
        try {
            double sigma0 = std::asin(cell.beta);
            double horizon = 200.0 * cell.T;
            double step = std::min(cell.T, cell.h0 > 0 ? cell.h0 * cell.T : cell.T) / 20.0;
            PllExampleParams params{cell.T, cell.s, cell.beta, cell.h0};
            int worst = 0;
            for (int i = 0; i < n_inits; ++i) {
                double v0 = n_inits == 1 ? 0.0 : -2.0 + 4.0 * i / (n_inits - 1);
                Trajectory t = integrate_pll_example(params, InitialData::constant(sigma0, v0),
                                                     horizon, step);
                worst = std::max(worst, t.slips());
            }
            cell.max_slips = worst;
        } catch (const std::exception&) {
            cell.max_slips = -1;  // recorded per-row, never aborts the sweep
        }
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            run_cell(cells[i]);
        }
    };
    std::vector<std::thread> pool;
    for (int i = 1; i < std::max(1, jobs); ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    auto path = out_path(out_dir, out_flag, "sweep.csv");
    std::ofstream out(path);
    out << "beta,T,h0,s,certified_r0,empirical_max_slips\n";
    char line[160];
    for (const auto& c : cells) {
        std::snprintf(line, sizeof(line), "%.10g,%.10g,%.10g,%.10g,%s,%d\n", c.beta, c.T,
                      c.h0, c.s, c.certified.c_str(), c.max_slips);
        out << line;
    }

    // Monotonicity summary: certified r0 should be non-decreasing along each
    // of the beta, T and h0 axes.
    auto find_cell = [&](double beta, double T, double h0, double s) -> const SweepCell* {
        for (const auto& c : cells)
            if (c.beta == beta && c.T == T && c.h0 == h0 && c.s == s) return &c;
        return nullptr;
    };
    auto axis_monotone = [&](int which) {
        for (double beta : betas)
            for (double T : Ts)
                for (double h0 : h0s)
                    for (double s : ss) {
                        const auto* cur = find_cell(beta, T, h0, s);
                        const std::vector<double>& ax = which == 0 ? betas
                                                        : which == 1 ? Ts
                                                                     : h0s;
                        double val = which == 0 ? beta : which == 1 ? T : h0;
                        auto it = std::find(ax.begin(), ax.end(), val);
                        if (it == ax.begin() || !cur || cur->r0 < 0) continue;
                        double prev_val = *(it - 1);
                        const auto* prev = find_cell(which == 0 ? prev_val : beta,
                                                     which == 1 ? prev_val : T,
                                                     which == 2 ? prev_val : h0, s);
                        if (prev && prev->r0 >= 0 && prev->r0 > cur->r0) return false;
                    }
        return true;
    };
    const char* names[] = {"beta", "T", "h0"};
    for (int which = 0; which < 3; ++which) {
        out << "# monotonicity " << names[which] << ": "
            << (axis_monotone(which) ? "ok" : "violated") << "\n";
    }
    std::printf("sweep: %zu cells written to %s\n", cells.size(), path.string().c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"slipcert: cycle-slip certificates for PLL-type systems with delay"};
    app.require_subcommand(1);

    std::string config_path, out_flag, theorem_flag, cert_path;
    std::string out_dir = default_out_dir();
    std::uint64_t seed = 1;
    int jobs = 1;
    double horizon = 0.0, step = 0.0, mu = 0.0;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", config_path, "system/task config (JSON)");
        if (needs_config) opt->required();
        sub->add_option("--out", out_flag, "output file path");
        sub->add_option("--out-dir", out_dir, "output directory (env SLIPCERT_OUT_DIR)");
    };

    auto* certify_cmd = app.add_subcommand("certify", "search for a slip certificate");
    add_common(certify_cmd, true);
    certify_cmd->add_option("--seed", seed, "search seed");
    certify_cmd->add_option("--theorem", theorem_flag, "T1|T2|T3|T4 (overrides config)");
    certify_cmd->add_option("--mu", mu, "probe mu for T4 reporting");

    auto* verify_cmd = app.add_subcommand("verify", "re-check an emitted certificate");
    add_common(verify_cmd, true);
    verify_cmd->add_option("--certificate", cert_path, "certificate file")->required();

    auto* simulate_cmd = app.add_subcommand("simulate", "integrate and export a trajectory");
    add_common(simulate_cmd, true);
    simulate_cmd->add_option("--horizon", horizon, "integration horizon");
    simulate_cmd->add_option("--step", step, "integration step");
    simulate_cmd->add_option("--mu", mu, "singular perturbation parameter");

    auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep to CSV");
    add_common(sweep_cmd, true);
    sweep_cmd->add_option("--jobs", jobs, "worker threads");

    auto* repro_cmd = app.add_subcommand("reproduce-paper", "reproduce the worked-example table");
    (void)repro_cmd;

    auto* dump_cmd = app.add_subcommand("dump-fdi", "dump the frequency-domain inequality curve");
    add_common(dump_cmd, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (app.got_subcommand("reproduce-paper")) return cmd_reproduce_paper();
        RunConfig cfg = load_config(config_path);
        if (app.got_subcommand("certify")) {
            if (!certify_cmd->count("--seed")) seed = cfg.task.seed;
            return cmd_certify(cfg, seed, theorem_flag, out_flag, out_dir);
        }
        if (app.got_subcommand("verify")) return cmd_verify(cert_path, cfg);
        if (app.got_subcommand("simulate")) {
            return cmd_simulate(cfg, horizon, step, mu, out_flag, out_dir);
        }
        if (app.got_subcommand("sweep")) return cmd_sweep(cfg, jobs, out_flag, out_dir);
        if (app.got_subcommand("dump-fdi")) return cmd_dump_fdi(cfg, out_flag, out_dir);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const NoCertificate& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNoCertificate;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
    return kExitUsage;
}
