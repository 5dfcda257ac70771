#pragma once

#include <functional>
#include <vector>

namespace slipcert {

/// Delta-periodic C1 phase-detector characteristic with known slope bounds.
///
/// The characteristic must have exactly two simple roots per period and a
/// nonpositive mean over one period. Instances are immutable after
/// construction and safe to share across threads.
class PeriodicNonlinearity {
public:
    enum class IntegralKind {
        Phi,              // integral of phi over one period
        AbsPhi,           // integral of |phi|
        AbsPhiTimesSlopeWeight,  // integral of |phi| * Phi(sigma)
        AbsPhiTimesCombinedWeight  // integral of |phi| * P(eps, tau, sigma)
    };

    // phi(sigma) = sin(sigma) - beta, beta in (0, 1]. Note beta = 1 is
    // accepted here but fails root validation (tangential double root).
    static PeriodicNonlinearity sine_minus_beta(double beta);

    // Tabulated characteristic on [0, period]: nodes sigma (strictly
    // increasing, sigma.front() == 0, sigma.back() == period), values phi and
    // derivatives dphi at the nodes. Evaluation uses cubic Hermite
    // interpolation; slope bounds and sup|phi| come from a dense scan.
    static PeriodicNonlinearity tabulated(std::vector<double> sigma,
                                          std::vector<double> phi,
                                          std::vector<double> dphi,
                                          double period);

    double period() const { return period_; }
    double eval(double sigma) const { return eval_(sigma); }
    double deriv(double sigma) const { return deriv_(sigma); }
    double slope_low() const { return slope_low_; }    // alpha_1 < 0
    double slope_high() const { return slope_high_; }  // alpha_2 > 0
    double sup_abs() const { return sup_abs_; }        // m = sup |phi|

    // sqrt((1 - phi'/alpha_1)(1 - phi'/alpha_2)); nonnegative by the slope bounds.
    double slope_weight(double sigma) const;
    // sqrt(eps + tau * slope_weight^2)
    double combined_weight(double eps, double tau, double sigma) const;

    // The two roots of phi on [0, period), sorted. Throws ModelViolation if
    // the count differs from two or a root is not simple.
    const std::vector<double>& roots_on_period() const;

    // Adaptive quadrature over one period, split at the roots of phi so the
    // |phi| kinks do not degrade convergence. Relative tolerance 1e-10.
    double period_integral(IntegralKind kind, double eps = 0.0, double tau = 0.0) const;

private:
    PeriodicNonlinearity() = default;
    void finalize();  // computes roots, validates invariants

    double period_ = 0.0;
    std::function<double(double)> eval_;
    std::function<double(double)> deriv_;
    double slope_low_ = 0.0;
    double slope_high_ = 0.0;
    double sup_abs_ = 0.0;
    std::vector<double> roots_;
    std::vector<double> weight_kinks_;  // zeros of the slope weight (|.|-type kinks)
};

}  // namespace slipcert
