#include "slipcert/fdi.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "slipcert/errors.hpp"

namespace slipcert {

namespace {

// Margins this close to zero count as satisfying the nonstrict inequality;
// the example's recipe is tight at omega = 0 by construction.
constexpr double kMarginTol = 1e-12;

// Minimize f on [lo, hi] by golden-section search; returns {argmin, value}.
std::pair<double, double> golden_min(const std::function<double(double)>& f,
                                     double lo, double hi) {
    const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < 100; ++i) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    double x = 0.5 * (a + b);
    return {x, f(x)};
}

}  // namespace

void Multipliers::validate() const {
    if (!(theta > 0.0) || !(eps > 0.0) || !(delta > 0.0) || !(tau > 0.0)) {
        throw std::invalid_argument("multipliers: theta, eps, delta, tau must be > 0");
    }
    if (!(a >= 0.0) || !(a <= 1.0)) {
        throw std::invalid_argument("multipliers: a must lie in [0, 1]");
    }
}

double fdi_value(const DelayRationalTransfer& tf, const PeriodicNonlinearity& nl,
                 const Multipliers& mult, double omega) {
    const std::complex<double> k = tf.eval_freq(omega);
    const std::complex<double> iw(0.0, omega);
    const std::complex<double> f1 = k + iw / nl.slope_low();
    const std::complex<double> f2 = k + iw / nl.slope_high();
    return mult.theta * k.real() - mult.tau * (std::conj(f1) * f2).real() -
           mult.eps * std::norm(k) - mult.delta;
}

FdiReport check_fdi(const DelayRationalTransfer& tf, const PeriodicNonlinearity& nl,
                    const Multipliers& mult, GridSpec grid) {
    mult.validate();
    if (grid.points < 2) throw std::invalid_argument("check_fdi: need at least 2 grid points");

    const double a1 = nl.slope_low(), a2 = nl.slope_high();

    // Dominant tail coefficient of -tau Re{(K + iw/a1)^*(K + iw/a2)}.
    const double c_tail = -mult.tau / (a1 * a2);
    if (std::abs(c_tail) <= 1e-12) {
        throw IndeterminateTail("check_fdi: dominant tail coefficient is numerically zero");
    }
    const bool tail_ok = c_tail > 0.0;

    // Quadratic lower bound fdi(w) >= c w^2 - b w - d with |K| <= k_max;
    // beyond its positive root the inequality holds unconditionally, so the
    // grid is extended to cover that root.
    const double k_max = tf.gain_bound();
    const double b_lin = mult.tau * k_max * (1.0 / std::abs(a1) + 1.0 / std::abs(a2));
    const double d_cst = mult.theta * k_max + (mult.tau + mult.eps) * k_max * k_max + mult.delta;
    double omega_max = grid.omega_max;
    if (omega_max <= 0.0) {
        double rate = tf.slowest_decay_rate();
        double dly = tf.min_positive_delay();
        omega_max = 100.0 * std::max({rate, dly > 0.0 ? 1.0 / dly : 0.0, 1.0});
    }
    if (tail_ok) {
        double root = (b_lin + std::sqrt(b_lin * b_lin + 4.0 * c_tail * d_cst)) / (2.0 * c_tail);
        omega_max = std::max(omega_max, 1.05 * root);
    }

    auto value = [&](double w) { return fdi_value(tf, nl, mult, w); };

    // Hybrid grid: linear near zero, log-spaced above omega_max / 1000.
    const int n = grid.points;
    const int n_lin = std::max(2, n / 4);
    const int n_log = n - n_lin;
    const double split = omega_max / 1000.0;
    std::vector<double> omegas;
    omegas.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n_lin; ++i) omegas.push_back(split * i / n_lin);
    for (int i = 0; i < n_log; ++i) {
        omegas.push_back(split * std::pow(omega_max / split, (i + 1) / static_cast<double>(n_log)));
    }

    std::vector<double> vals(omegas.size());
    double min_margin = std::numeric_limits<double>::infinity();
    double argmin = 0.0;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        vals[i] = value(omegas[i]);
        if (vals[i] < min_margin) {
            min_margin = vals[i];
            argmin = omegas[i];
        }
    }

    // Refine around the lowest interior local minima.
    if (grid.refine_minima > 0) {
        std::vector<std::size_t> minima;
        for (std::size_t i = 1; i + 1 < vals.size(); ++i) {
            if (vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1]) minima.push_back(i);
        }
        std::sort(minima.begin(), minima.end(),
                  [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        if (minima.size() > static_cast<std::size_t>(grid.refine_minima)) {
            minima.resize(static_cast<std::size_t>(grid.refine_minima));
        }
        for (std::size_t i : minima) {
            auto [w, v] = golden_min(value, omegas[i - 1], omegas[i + 1]);
            if (v < min_margin) {
                min_margin = v;
                argmin = w;
            }
        }
    }

    const double scale = std::max(1.0, mult.theta * std::abs(tf.eval_freq(0.0)));
    FdiReport report;
    report.min_margin = min_margin;
    report.argmin_omega = argmin;
    report.tail_ok = tail_ok;
    report.holds = tail_ok && min_margin >= -kMarginTol * scale;
    report.grid = grid;
    report.grid.omega_max = omega_max;
    report.method = "grid";
    return report;
}

double EvenQuartic::eval(double omega) const {
    double u = omega * omega;
    return (c4 * u + c2) * u + c0;
}

double EvenQuartic::min_value() const {
    if (c4 < 0.0) return -std::numeric_limits<double>::infinity();
    if (c4 == 0.0) {
        return c2 >= 0.0 ? c0 : -std::numeric_limits<double>::infinity();
    }
    double vertex = -c2 / (2.0 * c4);
    if (vertex <= 0.0) return c0;
    return c0 - c2 * c2 / (4.0 * c4);
}

double omega_poly(double T, double s, double h, const Multipliers& mult, double omega) {
    const double eps = mult.eps, delta = mult.delta, tau = mult.tau;
    const double w = omega, w2 = omega * omega;
    return tau * T * T * w2 * w2 +
           w2 * (T * T * T * s * std::cos(w * h) - std::pow(T, 4) * s * s * (eps + tau) +
                 tau - delta * T * T) -
           T * T * (1.0 - s) * w * std::sin(w * h) + T * std::cos(w * h) -
           (eps + tau) * T * T - delta;
}

EvenQuartic omega_poly_lower_bound(double T, double s, double h, const Multipliers& mult) {
    const double eps = mult.eps, delta = mult.delta, tau = mult.tau;
    EvenQuartic q;
    q.c4 = tau * T * T - 0.5 * T * T * T * s * h * h;
    q.c2 = T * T * T * s - std::pow(T, 4) * s * s * (eps + tau) + tau - delta * T * T -
           0.5 * T * h * h - (1.0 - s) * T * T * h;
    q.c0 = T - (eps + tau) * T * T - delta;
    return q;
}

FdiReport check_fdi_minorant(double T, double s, double h, const Multipliers& mult) {
    mult.validate();
    EvenQuartic q = omega_poly_lower_bound(T, s, h, mult);
    const double tol = kMarginTol * std::max(1.0, T);
    FdiReport report;
    report.min_margin = q.min_value();
    report.tail_ok = q.c4 > 0.0 || (q.c4 == 0.0 && q.c2 >= 0.0);
    report.holds = report.tail_ok && report.min_margin >= -tol;
    if (q.c4 > 0.0) {
        double vertex = -q.c2 / (2.0 * q.c4);
        report.argmin_omega = vertex > 0.0 ? std::sqrt(vertex) : 0.0;
    }
    report.method = "minorant";
    return report;
}

Multipliers pll_recipe_multipliers(double T, double s, double h0) {
    const double g0 = std::max(0.5 * s * h0 * h0, 0.5 * (h0 + 1.0 - s) * (h0 + 1.0 - s));
    const double slack = 1.0 - g0 * std::pow(T, 4);
    if (!(slack > 0.0)) {
        throw NoCertificate("recipe multipliers: 1 - g0 T^4 must be positive");
    }
    const double half = 0.5 * slack;
    Multipliers mult;
    mult.theta = 1.0;
    mult.eps = half / T;
    mult.delta = half * T;
    mult.tau = g0 * T * T * T;
    mult.a = 1.0;
    return mult;
}

}  // namespace slipcert
