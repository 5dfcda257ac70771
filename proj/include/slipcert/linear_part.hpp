#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "slipcert/nonlinearity.hpp"

namespace slipcert {

// One rational factor with a dead-time: num(p)/den(p) * exp(-delay * p).
// Coefficients are stored in ascending powers of p.
struct RationalDelayTerm {
    std::vector<double> num;
    std::vector<double> den;
    double delay = 0.0;
};

// Initial data for the delayed equations: the history segment on [-h, 0]
// and, for the second-order forms, the initial velocity.
struct InitialData {
    std::function<double(double)> history;        // sigma on [-h, 0]
    std::function<double(double)> history_deriv;  // d/dt of the history
    double sigma_dot0 = 0.0;

    static InitialData constant(double sigma0, double sigma_dot0 = 0.0) {
        return {[sigma0](double) { return sigma0; }, [](double) { return 0.0; }, sigma_dot0};
    }
};

/// Transfer function of the linear block,
///   K(p) = -rho * exp(-h p) + sum_i num_i(p)/den_i(p) * exp(-h_i p),
/// where the sum is the transform of the Volterra kernel. Every denominator
/// must be Hurwitz and every term proper. Immutable after construction.
class DelayRationalTransfer {
public:
    DelayRationalTransfer(std::vector<RationalDelayTerm> terms, double rho, double h);

    // K(i omega); conjugate symmetry K(-i omega) = conj(K(i omega)) holds by
    // construction since all coefficients are real.
    std::complex<double> eval_freq(double omega) const;

    const std::vector<RationalDelayTerm>& terms() const { return terms_; }
    double rho() const { return rho_; }
    double rho_delay() const { return rho_delay_; }

    // Upper bound on sup_omega |K(i omega)| (grid estimate inflated by 5%);
    // used by the frequency-domain tail analysis.
    double gain_bound() const;

    // Smallest |Re pole| across all denominators (> 0 since Hurwitz).
    double slowest_decay_rate() const;

    // Smallest strictly positive delay, or 0 when all delays vanish.
    double min_positive_delay() const;

    // K_mu(p) = K(p) / (1 + mu p). The dead-time gain moves into a rational
    // term so the result is again in standard form.
    DelayRationalTransfer perturb_singular(double mu) const;

private:
    std::vector<RationalDelayTerm> terms_;
    double rho_ = 0.0;
    double rho_delay_ = 0.0;
};

// Exponential kernel mode: contributes Re(amplitude * exp(-rate (t - delay)))
// to gamma(t) for t >= delay. Complex poles appear as conjugate pairs.
struct KernelMode {
    std::complex<double> amplitude;
    std::complex<double> rate;  // Re(rate) > 0
    double delay = 0.0;
};

// Partial-fraction expansion of the rational terms into exponential modes.
// Throws UnsupportedKernel for repeated poles or non-strictly-proper terms.
std::vector<KernelMode> kernel_modes(const DelayRationalTransfer& tf);

// gamma(t) reconstructed from the modes.
double kernel_value(const std::vector<KernelMode>& modes, double t);

// Parameters of the delayed PLL with a proportional-integral low-pass filter.
struct PllExampleParams {
    double T = 0.1;
    double s = 0.4;
    double beta = 0.9;
    double h0 = 1.0;
    double h() const { return h0 * T; }
};

/// The full plant: linear block, detector characteristic, exponential decay
/// envelope |alpha(t)| + |gamma(t)| <= M exp(-r t), and the forcing data.
class SystemModel {
public:
    DelayRationalTransfer transfer;
    PeriodicNonlinearity nonlinearity;
    double decay_M = 0.0;
    double decay_r = 0.0;
    double forcing_b = 0.0;  // convention used by the certificates
    std::optional<PllExampleParams> example;

    // Forcing alpha(t) for the given initial data. Zero unless the model was
    // built from the PLL preset or a custom forcing was installed.
    std::function<double(double)> forcing(const InitialData& init) const;
    std::function<std::function<double(double)>(const InitialData&)> custom_forcing;

    // Copy with the forcing amplitude replaced; for the PLL preset the decay
    // constant M is recomputed for the new |b|.
    SystemModel with_forcing_b(double b) const;
};

// The delayed PLL of the worked example: K(p) = T (T s p + 1)/(T p + 1) e^{-ph},
// kernel gamma(t) = (1-s) exp(-(t-h)/T) for t >= h, rho = -sT, b = K(0) beta.
SystemModel make_pll_example(double T, double s, double beta, double h0);

// Tightest decay constant M for the preset envelopes given |b| (log-spaced
// grid scan, inflated by 5%).
double pll_decay_M(const PllExampleParams& params, double sup_abs_phi, double abs_b);

}  // namespace slipcert
