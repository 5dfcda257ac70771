#include "slipcert/slip_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "slipcert/errors.hpp"

namespace slipcert {

namespace {

constexpr double kRecipeDeltaNudge = 1e-6;  // keeps certificate margins strictly positive

bool slopes_symmetric(const PeriodicNonlinearity& nl) {
    double scale = std::max(std::abs(nl.slope_low()), std::abs(nl.slope_high()));
    return std::abs(nl.slope_low() + nl.slope_high()) <= 1e-9 * scale;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string theorem_name(Theorem t) {
    switch (t) {
        case Theorem::T1: return "T1";
        case Theorem::T2: return "T2";
        case Theorem::T3: return "T3";
        case Theorem::T4: return "T4";
    }
    return "T3";
}

Theorem theorem_from_name(const std::string& name) {
    if (name == "T1") return Theorem::T1;
    if (name == "T2") return Theorem::T2;
    if (name == "T3") return Theorem::T3;
    if (name == "T4") return Theorem::T4;
    throw std::invalid_argument("unknown theorem identifier: " + name);
}

RCoefficients r_coefficients(const PeriodicNonlinearity& nl, int k, double theta,
                             double eps, double tau, double x) {
    if (k < 1) throw std::invalid_argument("r_coefficients: k must be >= 1");
    if (!(theta > 0.0)) throw std::invalid_argument("r_coefficients: theta must be > 0");
    using IK = PeriodicNonlinearity::IntegralKind;
    const double mean = nl.period_integral(IK::Phi);
    const double den = nl.period_integral(IK::AbsPhi);
    const double den0 = nl.period_integral(IK::AbsPhiTimesSlopeWeight);
    const double den1 = nl.period_integral(IK::AbsPhiTimesCombinedWeight, eps, tau);
    const double num1 = mean - x / (theta * k);
    const double num2 = mean + x / (theta * k);
    return {num1 / den, num2 / den, num1 / den0, num2 / den0, num1 / den1, num2 / den1};
}

Eigen::Matrix3d matrix_Tj(const Multipliers& mult, double rj, double r0j) {
    mult.validate();
    Eigen::Matrix3d m;
    const double c12 = mult.a * mult.theta * rj / 2.0;
    const double c23 = mult.a0() * mult.theta * r0j / 2.0;
    m << mult.eps, c12, 0.0,
         c12, mult.delta, c23,
         0.0, c23, mult.tau;
    return m;
}

bool is_positive_definite(const Eigen::Matrix3d& m) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw ModelViolation("is_positive_definite: matrix is not symmetric");
    }
    if (!(m(0, 0) > 0.0)) return false;
    const double det2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    if (!(det2 > 0.0)) return false;
    return m.determinant() > 0.0;
}

double min_eigenvalue(const Eigen::Matrix3d& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double q_general(const SystemModel& model, const Multipliers& mult) {
    // No strict multiplier validation: the formula is well-defined for any
    // nonnegative eps, tau, including the eps = tau = 0 limit.
    const double M = model.decay_M, r = model.decay_r;
    if (!(M > 0.0) || !(r > 0.0)) {
        throw std::invalid_argument("q_general: decay constants must be positive");
    }
    const double m = model.nonlinearity.sup_abs();
    const double rho = model.transfer.rho();
    const double et = mult.eps + mult.tau;
    return (mult.theta * M * m + 2.0 * et * M * m * (M / r + rho) + et * M * M / 2.0) / r;
}

double example_q(double T, double s, double beta, double h0) {
    const double A = 3.5 * beta * beta + 3.0;
    const double B = 3.0 * (1.0 - s) * (1.0 + beta) * (3.0 * beta + 1.0);
    const double C = 1.5 * (1.0 - s) * (1.0 - s) * (1.0 + beta) * (1.0 + beta);
    return T * T * (A + B * h0 + C * h0 * h0);
}

int example_r0(double T, double s, double beta, double h0) {
    const double g0 = std::max(0.5 * s * h0 * h0, 0.5 * (h0 + 1.0 - s) * (h0 + 1.0 - s));
    const double two_sqrt_eps_delta = 1.0 - g0 * std::pow(T, 4);
    const double denom = 4.0 * two_sqrt_eps_delta *
                             (beta * std::asin(beta) + std::sqrt(1.0 - beta * beta)) -
                         2.0 * M_PI * beta;
    if (!(denom > 0.0)) {
        throw NoCertificate("example_r0: bias dominates, algebraic condition has no solution");
    }
    return static_cast<int>(std::floor(example_q(T, s, beta, h0) / denom));
}

double q0_singular(const SystemModel& model, const Multipliers& mult) {
    const double q = q_general(model, mult);
    const double M = model.decay_M, r = model.decay_r;
    const double m = model.nonlinearity.sup_abs();
    const double rho = model.transfer.rho();
    const double h = model.transfer.rho_delay();
    const double et = mult.eps + mult.tau;
    return q + (mult.theta * M * m + 2.0 * et * M * m * (M / r + rho)) * rho * m * h +
           et * rho * rho * m * m * h;
}

std::vector<ExampleRow> reproduce_example_rows() {
    const double T = 0.1, s = 0.4, h0 = 1.0;
    std::vector<ExampleRow> rows;
    for (double beta : {0.9, 0.92, 0.95}) {
        const double g0 = std::max(0.5 * s * h0 * h0, 0.5 * (h0 + 1.0 - s) * (h0 + 1.0 - s));
        const double tsed = 1.0 - g0 * std::pow(T, 4);
        const double q = example_q(T, s, beta, h0);
        const double denom =
            4.0 * tsed * (beta * std::asin(beta) + std::sqrt(1.0 - beta * beta)) -
            2.0 * M_PI * beta;
        rows.push_back({beta, g0, tsed, q, denom, example_r0(T, s, beta, h0)});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Certification search
// ---------------------------------------------------------------------------

namespace {

// Period integrals that do not depend on the multiplier tuple.
struct FixedIntegrals {
    double mean, abs, abs_slope;
    explicit FixedIntegrals(const PeriodicNonlinearity& nl)
        : mean(nl.period_integral(PeriodicNonlinearity::IntegralKind::Phi)),
          abs(nl.period_integral(PeriodicNonlinearity::IntegralKind::AbsPhi)),
          abs_slope(nl.period_integral(
              PeriodicNonlinearity::IntegralKind::AbsPhiTimesSlopeWeight)) {}
};

struct CertifyContext {
    const SystemModel& model;
    Theorem theorem;
    const SearchBudget& budget;
    FixedIntegrals ints;
    bool example_family;  // minorant FDI path applicable at theta = 1

    CertifyContext(const SystemModel& m, Theorem t, const SearchBudget& b)
        : model(m), theorem(t), budget(b), ints(m.nonlinearity),
          example_family(m.example.has_value() && slopes_symmetric(m.nonlinearity)) {}

    double x_value(const Multipliers& mult, std::string* source = nullptr) const {
        switch (theorem) {
            case Theorem::T1:
            case Theorem::T2:
                if (budget.user_Q) {
                    if (source) *source = "user";
                    return *budget.user_Q;
                }
                if (source) *source = "general";
                return q_general(model, mult);
            case Theorem::T3:
                if (source) *source = "general";
                return q_general(model, mult);
            case Theorem::T4:
                if (source) *source = "general";
                return q0_singular(model, mult);
        }
        return 0.0;
    }

    // Algebraic margin of the theorem's condition 2) at this k and tuple.
    double algebraic_margin(const Multipliers& mult, int k, double x) const {
        const double num1 = ints.mean - x / (mult.theta * k);
        const double num2 = ints.mean + x / (mult.theta * k);
        if (theorem == Theorem::T1) {
            const double den1 = model.nonlinearity.period_integral(
                PeriodicNonlinearity::IntegralKind::AbsPhiTimesCombinedWeight,
                mult.eps, mult.tau);
            double worst = std::numeric_limits<double>::infinity();
            for (double num : {num1, num2}) {
                double r1j = num / den1;
                worst = std::min(worst,
                                 4.0 * mult.delta - mult.theta * mult.theta * r1j * r1j);
            }
            return worst;
        }
        double worst = std::numeric_limits<double>::infinity();
        for (double num : {num1, num2}) {
            Eigen::Matrix3d tj = matrix_Tj(mult, num / ints.abs, num / ints.abs_slope);
            worst = std::min(worst, min_eigenvalue(tj));
        }
        return worst;
    }

    double fdi_margin(const Multipliers& mult, bool coarse) const {
        GridSpec grid;
        if (coarse) {
            grid.points = 512;
            grid.refine_minima = 2;
        }
        FdiReport rep = check_fdi(model.transfer, model.nonlinearity, mult, grid);
        if (!rep.tail_ok) return -std::numeric_limits<double>::infinity();
        return rep.min_margin;
    }

    double score(const Multipliers& mult, int k, bool coarse) const {
        double x = x_value(mult);
        return std::min(fdi_margin(mult, coarse), algebraic_margin(mult, k, x));
    }
};

Multipliers default_seed_tuple(const SystemModel& model) {
    double k0 = std::abs(model.transfer.eval_freq(0.0).real());
    if (!(k0 > 0.0)) k0 = 1.0;
    return {1.0, 0.3 / k0, 0.3 * k0, 0.1 * k0, 1.0};
}

// Coordinate descent with multiplicative steps on (theta, eps, delta, tau)
// and clipped additive steps on a.
Multipliers coordinate_descent(const CertifyContext& ctx, Multipliers start, int k,
                               int passes, double* out_score) {
    Multipliers best = start;
    double best_score = ctx.score(best, k, /*coarse=*/true);
    double factor = 2.0;
    double a_step = 0.25;
    double Multipliers::* fields[] = {&Multipliers::theta, &Multipliers::eps,
                                      &Multipliers::delta, &Multipliers::tau};
    for (int pass = 0; pass < passes; ++pass) {
        bool improved = false;
        for (auto field : fields) {
            for (double f : {factor, 1.0 / factor}) {
                Multipliers trial = best;
                trial.*field = best.*field * f;
                double sc = ctx.score(trial, k, true);
                if (sc > best_score) {
                    best = trial;
                    best_score = sc;
                    improved = true;
                }
            }
        }
        for (double da : {a_step, -a_step}) {
            Multipliers trial = best;
            trial.a = std::clamp(best.a + da, 0.0, 1.0);
            if (trial.a != best.a) {
                double sc = ctx.score(trial, k, true);
                if (sc > best_score) {
                    best = trial;
                    best_score = sc;
                    improved = true;
                }
            }
        }
        if (!improved) {
            if (best_score > 0.0) break;
            factor = std::sqrt(factor);
            a_step *= 0.5;
            if (factor < 1.0005) break;
        }
    }
    *out_score = best_score;
    return best;
}

struct Verified {
    double fdi_margin;
    double pd_margin;
    std::string method;
    bool ok;
};

Verified full_verify(const CertifyContext& ctx, const Multipliers& mult, int k, double x) {
    Verified v{};
    bool minorant = ctx.example_family && mult.theta == 1.0;
    if (minorant) {
        const auto& ex = *ctx.model.example;
        FdiReport rep = check_fdi_minorant(ex.T, ex.s, ex.h(), mult);
        v.fdi_margin = rep.min_margin;
        v.method = "minorant";
        v.ok = rep.holds;
    } else {
        FdiReport rep = check_fdi(ctx.model.transfer, ctx.model.nonlinearity, mult, {});
        v.fdi_margin = rep.min_margin;
        v.method = "grid";
        v.ok = rep.holds;
    }
    v.pd_margin = ctx.algebraic_margin(mult, k, x);
    v.ok = v.ok && v.pd_margin > 0.0;
    return v;
}

}  // namespace

std::optional<SlipCertificate> certify(const SystemModel& model, Theorem theorem,
                                       const SearchBudget& budget,
                                       SearchDiagnostics* diag) {
    const bool symmetric = slopes_symmetric(model.nonlinearity);
    if ((theorem == Theorem::T3 || theorem == Theorem::T4) && !symmetric) {
        throw std::invalid_argument("certify: T3/T4 require alpha_2 = -alpha_1");
    }
    if (theorem == Theorem::T4 && !budget.root_start) {
        throw std::invalid_argument("certify: T4 requires sigma(0) at a root of phi");
    }
    if ((theorem == Theorem::T1 || theorem == Theorem::T2) && !budget.user_Q &&
        !(budget.root_start && symmetric)) {
        throw std::invalid_argument(
            "certify: T1/T2 need a user-supplied Q unless the q fallback applies "
            "(root start and symmetric slopes)");
    }

    CertifyContext ctx(model, theorem, budget);

    auto make_cert = [&](int k, const Multipliers& mult, double x,
                         const std::string& q_source, const Verified& v) {
        SlipCertificate cert;
        cert.k_bound = k;
        cert.theorem = theorem;
        cert.multipliers = mult;
        cert.q_used = x;
        cert.fdi_margin = v.fdi_margin;
        cert.pd_margin = v.pd_margin;
        cert.k_plus_one_applied = false;
        if (!budget.root_start && theorem == Theorem::T3) {
            cert.k_bound = k + 1;
            cert.k_plus_one_applied = true;
        }
        cert.requires_root_start = q_source != "user" && !cert.k_plus_one_applied;
        cert.fdi_method = v.method;
        cert.seed = budget.seed;
        return cert;
    };

    // Closed-form path for the worked example: the fixed recipe multipliers
    // with the sharp q = T^2(A + B h0 + C h0^2). The delta nudge trades an
    // infinitesimal slice of the algebraic gap for a strictly positive
    // frequency-domain margin.
    std::optional<SlipCertificate> recipe_cert;
    if (ctx.example_family && (theorem == Theorem::T3 || theorem == Theorem::T4)) {
        const auto& ex = *model.example;
        Multipliers recipe = pll_recipe_multipliers(ex.T, ex.s, ex.h0);
        recipe.delta *= 1.0 - kRecipeDeltaNudge;
        double q_ex = example_q(ex.T, ex.s, ex.beta, ex.h0);
        std::string q_source = "example";
        if (theorem == Theorem::T4) {
            q_ex = q_ex + q0_singular(model, recipe) - q_general(model, recipe);
            q_source = "example_q0";
        }
        for (int k = 1; k <= budget.k_max; ++k) {
            Verified v = full_verify(ctx, recipe, k, q_ex);
            if (v.ok) {
                recipe_cert = make_cert(k, recipe, q_ex, q_source, v);
                break;
            }
        }
    }

    // Search path: smallest k admitting a tuple under the generic q (or the
    // user's Q). When the recipe path already certified some k, the search
    // only needs to look below it.
    const int k_cap = recipe_cert ? recipe_cert->k_bound - 1 -
                                        (recipe_cert->k_plus_one_applied ? 1 : 0)
                                  : budget.k_max;
    std::mt19937_64 rng(budget.seed);
    std::uniform_real_distribution<double> log_jitter(-3.0, 3.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SearchDiagnostics local_diag;
    local_diag.best_score = -std::numeric_limits<double>::infinity();
    std::optional<Multipliers> warm;
    std::optional<SlipCertificate> search_cert;

    for (int k = 1; k <= k_cap && !search_cert; ++k) {
        local_diag.k_reached = k;
        std::vector<Multipliers> seeds;
        if (warm) seeds.push_back(*warm);
        seeds.push_back(default_seed_tuple(model));
        if (ctx.example_family) {
            const auto& ex = *model.example;
            Multipliers recipe = pll_recipe_multipliers(ex.T, ex.s, ex.h0);
            recipe.delta *= 1.0 - kRecipeDeltaNudge;
            seeds.push_back(recipe);
        }
        while (static_cast<int>(seeds.size()) < budget.restarts + (warm ? 1 : 0)) {
            Multipliers m = default_seed_tuple(model);
            m.theta *= std::exp(log_jitter(rng));
            m.eps *= std::exp(log_jitter(rng));
            m.delta *= std::exp(log_jitter(rng));
            m.tau *= std::exp(log_jitter(rng));
            m.a = unit(rng);
            seeds.push_back(m);
        }
        for (const auto& seed : seeds) {
            double sc = 0.0;
            Multipliers tuned = coordinate_descent(ctx, seed, k, budget.iterations, &sc);
            if (sc > local_diag.best_score) {
                local_diag.best_score = sc;
                local_diag.best_multipliers = tuned;
            }
            if (sc > 0.0) {
                std::string q_source;
                double x = ctx.x_value(tuned, &q_source);
                Verified v = full_verify(ctx, tuned, k, x);
                if (v.ok) {
                    search_cert = make_cert(k, tuned, x, q_source, v);
                    warm = tuned;
                    break;
                }
            }
        }
        if (!warm && local_diag.best_score > -std::numeric_limits<double>::infinity()) {
            warm = local_diag.best_multipliers;
        }
    }

    if (diag) *diag = local_diag;
    if (search_cert && (!recipe_cert || search_cert->k_bound < recipe_cert->k_bound)) {
        return search_cert;
    }
    return recipe_cert;
}

bool verify_certificate(const SystemModel& model, const SlipCertificate& cert) {
    try {
        cert.multipliers.validate();
        if (cert.k_bound < 1) return false;
        SearchBudget budget;
        budget.user_Q = cert.q_used;  // conditions are rechecked at the recorded x
        CertifyContext ctx(model, cert.theorem, budget);
        int k = cert.k_bound - (cert.k_plus_one_applied ? 1 : 0);
        if (k < 1) return false;
        bool minorant = cert.fdi_method == "minorant";
        if (minorant && !ctx.example_family) return false;
        Verified v{};
        if (minorant) {
            const auto& ex = *model.example;
            FdiReport rep = check_fdi_minorant(ex.T, ex.s, ex.h(), cert.multipliers);
            v.ok = rep.holds;
        } else {
            FdiReport rep = check_fdi(model.transfer, model.nonlinearity, cert.multipliers, {});
            v.ok = rep.holds;
        }
        double pd = ctx.algebraic_margin(cert.multipliers, k, cert.q_used);
        return v.ok && pd > 0.0;
    } catch (const std::exception&) {
        return false;
    }
}

std::string serialize_certificate(const SlipCertificate& cert) {
    std::ostringstream out;
    out << "slipcert-certificate v1\n";
    out << "theorem = " << theorem_name(cert.theorem) << "\n";
    out << "k_bound = " << cert.k_bound << "\n";
    out << "max_slips = " << cert.max_slips() << "\n";
    out << "theta = " << format_double(cert.multipliers.theta) << "\n";
    out << "eps = " << format_double(cert.multipliers.eps) << "\n";
    out << "delta = " << format_double(cert.multipliers.delta) << "\n";
    out << "tau = " << format_double(cert.multipliers.tau) << "\n";
    out << "a = " << format_double(cert.multipliers.a) << "\n";
    out << "q_used = " << format_double(cert.q_used) << "\n";
    out << "fdi_margin = " << format_double(cert.fdi_margin) << "\n";
    out << "pd_margin = " << format_double(cert.pd_margin) << "\n";
    out << "fdi_method = " << cert.fdi_method << "\n";
    out << "requires_root_start = " << (cert.requires_root_start ? "true" : "false") << "\n";
    out << "k_plus_one_applied = " << (cert.k_plus_one_applied ? "true" : "false") << "\n";
    out << "seed = " << cert.seed << "\n";
    return out.str();
}

SlipCertificate parse_certificate(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "slipcert-certificate v1") {
        throw std::invalid_argument("certificate: bad header");
    }
    SlipCertificate cert;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto pos = line.find(" = ");
        if (pos == std::string::npos) {
            throw std::invalid_argument("certificate: malformed line: " + line);
        }
        std::string key = line.substr(0, pos);
        std::string value = line.substr(pos + 3);
        if (key == "theorem") cert.theorem = theorem_from_name(value);
        else if (key == "k_bound") cert.k_bound = std::stoi(value);
        else if (key == "max_slips") { /* derived */ }
        else if (key == "theta") cert.multipliers.theta = std::stod(value);
        else if (key == "eps") cert.multipliers.eps = std::stod(value);
        else if (key == "delta") cert.multipliers.delta = std::stod(value);
        else if (key == "tau") cert.multipliers.tau = std::stod(value);
        else if (key == "a") cert.multipliers.a = std::stod(value);
        else if (key == "q_used") cert.q_used = std::stod(value);
        else if (key == "fdi_margin") cert.fdi_margin = std::stod(value);
        else if (key == "pd_margin") cert.pd_margin = std::stod(value);
        else if (key == "fdi_method") cert.fdi_method = value;
        else if (key == "requires_root_start") cert.requires_root_start = value == "true";
        else if (key == "k_plus_one_applied") cert.k_plus_one_applied = value == "true";
        else if (key == "seed") cert.seed = std::stoull(value);
        else throw std::invalid_argument("certificate: unknown key: " + key);
    }
    return cert;
}

}  // namespace slipcert
