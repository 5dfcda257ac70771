#include "slipcert/linear_part.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "slipcert/errors.hpp"
#include "slipcert/quadrature.hpp"

namespace slipcert {

namespace {

std::complex<double> poly_eval(const std::vector<double>& c, std::complex<double> p) {
    std::complex<double> v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * p + *it;
    return v;
}

std::complex<double> poly_deriv_eval(const std::vector<double>& c, std::complex<double> p) {
    std::complex<double> v = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) v = v * p + c[i] * static_cast<double>(i);
    return v;
}

std::size_t effective_degree(const std::vector<double>& c) {
    std::size_t d = c.size();
    while (d > 1 && std::abs(c[d - 1]) < 1e-300) --d;
    return d - 1;
}

std::vector<std::complex<double>> poly_roots(const std::vector<double>& c) {
    std::size_t deg = effective_degree(c);
    if (deg == 0) return {};
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
    for (std::size_t i = 0; i + 1 < deg; ++i) companion(i + 1, i) = 1.0;
    for (std::size_t i = 0; i < deg; ++i) companion(i, deg - 1) = -c[i] / c[deg];
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> roots(deg);
    for (std::size_t i = 0; i < deg; ++i) roots[i] = es.eigenvalues()(static_cast<long>(i));
    return roots;
}

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

}  // namespace

DelayRationalTransfer::DelayRationalTransfer(std::vector<RationalDelayTerm> terms,
                                             double rho, double h)
    : terms_(std::move(terms)), rho_(rho), rho_delay_(h) {
    if (h < 0.0) throw std::invalid_argument("transfer: dead time must be >= 0");
    for (const auto& t : terms_) {
        if (t.num.empty() || t.den.empty()) {
            throw std::invalid_argument("transfer: empty coefficient list");
        }
        if (t.delay < 0.0) throw std::invalid_argument("transfer: term delay must be >= 0");
        if (effective_degree(t.num) > effective_degree(t.den)) {
            throw ModelViolation("transfer: term is not proper");
        }
        for (auto root : poly_roots(t.den)) {
            if (root.real() >= -1e-9) {
                throw ModelViolation("transfer: denominator is not Hurwitz");
            }
        }
    }
}

std::complex<double> DelayRationalTransfer::eval_freq(double omega) const {
    if (omega < 0.0) throw std::invalid_argument("eval_freq: omega must be >= 0");
    const std::complex<double> p(0.0, omega);
    std::complex<double> k = -rho_ * std::exp(-p * rho_delay_);
    for (const auto& t : terms_) {
        k += poly_eval(t.num, p) / poly_eval(t.den, p) * std::exp(-p * t.delay);
    }
    return k;
}

double DelayRationalTransfer::gain_bound() const {
    double rate = slowest_decay_rate();
    double scale = rate > 0.0 ? rate : 1.0;
    double best = std::abs(eval_freq(0.0));
    for (int i = 0; i < 4096; ++i) {
        double omega = scale * 1e-3 * std::pow(1e7, i / 4095.0);
        best = std::max(best, std::abs(eval_freq(omega)));
    }
    // High-frequency limit: sum of leading-coefficient ratios plus |rho|.
    double hf = std::abs(rho_);
    for (const auto& t : terms_) {
        if (effective_degree(t.num) == effective_degree(t.den)) {
            hf += std::abs(t.num[effective_degree(t.num)] / t.den[effective_degree(t.den)]);
        }
    }
    return 1.05 * std::max(best, hf);
}

double DelayRationalTransfer::slowest_decay_rate() const {
    double rate = std::numeric_limits<double>::infinity();
    for (const auto& t : terms_) {
        for (auto root : poly_roots(t.den)) rate = std::min(rate, -root.real());
    }
    return std::isfinite(rate) ? rate : 0.0;
}

double DelayRationalTransfer::min_positive_delay() const {
    double d = std::numeric_limits<double>::infinity();
    if (rho_ != 0.0 && rho_delay_ > 0.0) d = std::min(d, rho_delay_);
    for (const auto& t : terms_) {
        if (t.delay > 0.0) d = std::min(d, t.delay);
    }
    return std::isfinite(d) ? d : 0.0;
}

DelayRationalTransfer DelayRationalTransfer::perturb_singular(double mu) const {
    if (!(mu > 0.0)) throw std::invalid_argument("perturb_singular: mu must be > 0");
    std::vector<RationalDelayTerm> terms;
    terms.reserve(terms_.size() + 1);
    for (const auto& t : terms_) {
        terms.push_back({t.num, poly_mul(t.den, {1.0, mu}), t.delay});
    }
    if (rho_ != 0.0) {
        terms.push_back({{-rho_}, {1.0, mu}, rho_delay_});
    }
    return DelayRationalTransfer(std::move(terms), 0.0, 0.0);
}

std::vector<KernelMode> kernel_modes(const DelayRationalTransfer& tf) {
    std::vector<KernelMode> modes;
    for (const auto& t : tf.terms()) {
        if (effective_degree(t.num) >= effective_degree(t.den)) {
            throw UnsupportedKernel("kernel: term must be strictly proper");
        }
        auto roots = poly_roots(t.den);
        double scale = 0.0;
        for (auto r : roots) scale = std::max(scale, std::abs(r));
        for (std::size_t i = 0; i < roots.size(); ++i) {
            for (std::size_t j = i + 1; j < roots.size(); ++j) {
                if (std::abs(roots[i] - roots[j]) < 1e-7 * std::max(scale, 1.0)) {
                    throw UnsupportedKernel("kernel: repeated denominator pole");
                }
            }
        }
        for (auto r : roots) {
            std::complex<double> res = poly_eval(t.num, r) / poly_deriv_eval(t.den, r);
            modes.push_back({res, -r, t.delay});
        }
    }
    return modes;
}

double kernel_value(const std::vector<KernelMode>& modes, double t) {
    double g = 0.0;
    for (const auto& m : modes) {
        if (t >= m.delay) {
            g += (m.amplitude * std::exp(-m.rate * (t - m.delay))).real();
        }
    }
    return g;
}

double pll_decay_M(const PllExampleParams& params, double sup_abs_phi, double abs_b) {
    const double T = params.T, s = params.s, h = params.h();
    const double r = 1.0 / T;
    // |J(t)| <= m * integral_{-h}^0 exp((l+h)/T) dl, uniformly in t.
    const double j_bound = sup_abs_phi * T * (std::exp(h / T) - 1.0);
    const double alpha_env = abs_b + (1.0 - s) * j_bound;  // times exp(-t/T)
    double tightest = 0.0;
    for (int i = 0; i < 256; ++i) {
        double t = 1e-6 * T * std::pow(5e7, i / 255.0);
        double gamma = t >= h ? (1.0 - s) * std::exp(-(t - h) / T) : 0.0;
        double env = gamma + alpha_env * std::exp(-r * t);
        tightest = std::max(tightest, env * std::exp(r * t));
    }
    return 1.05 * tightest;
}

std::function<double(double)> SystemModel::forcing(const InitialData& init) const {
    if (custom_forcing) return custom_forcing(init);
    if (!example) {
        return [](double) { return 0.0; };
    }
    const double T = example->T, s = example->s, h = example->h();
    auto phi = [nl = nonlinearity](double x) { return nl.eval(x); };
    const double b = init.sigma_dot0 + s * T * phi(init.history(-h));
    auto g = [phi, hist = init.history, T, h](double lambda) {
        return std::exp((lambda + h) / T) * phi(hist(lambda));
    };
    double j_full = h > 0.0 ? integrate(g, -h, 0.0, 1e-10, 1e-11) : 0.0;
    return [=](double t) {
        double j = j_full;
        if (t < h) j = integrate(g, -h, t - h, 1e-10, 1e-11);
        return std::exp(-t / T) * (b - (1.0 - s) * j);
    };
}

SystemModel SystemModel::with_forcing_b(double b) const {
    SystemModel out = *this;
    out.forcing_b = b;
    if (example) {
        out.decay_M = pll_decay_M(*example, nonlinearity.sup_abs(), std::abs(b));
    }
    return out;
}

SystemModel make_pll_example(double T, double s, double beta, double h0) {
    if (!(T > 0.0)) throw std::invalid_argument("make_pll_example: T must be > 0");
    if (!(s > 0.0) || !(s < 1.0)) throw std::invalid_argument("make_pll_example: s must be in (0,1)");
    if (!(beta > 0.0) || !(beta <= 1.0)) {
        throw std::invalid_argument("make_pll_example: beta must be in (0,1]");
    }
    if (h0 < 0.0) throw std::invalid_argument("make_pll_example: h0 must be >= 0");

    PllExampleParams params{T, s, beta, h0};
    const double h = params.h();
    DelayRationalTransfer transfer({{{(1.0 - s) * T}, {1.0, T}, h}}, -s * T, h);
    PeriodicNonlinearity nl = PeriodicNonlinearity::sine_minus_beta(beta);
    const double b = T * beta;  // b = K(0) beta
    SystemModel model{std::move(transfer),
                      std::move(nl),
                      0.0,
                      1.0 / T,
                      b,
                      params,
                      {}};
    model.decay_M = pll_decay_M(params, model.nonlinearity.sup_abs(), std::abs(b));
    return model;
}

}  // namespace slipcert
