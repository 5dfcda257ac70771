#pragma once

#include <vector>

#include "slipcert/fdi.hpp"
#include "slipcert/linear_part.hpp"
#include "slipcert/nonlinearity.hpp"

namespace slipcert {

/// Uniformly sampled solution with its history segment and slip counter.
struct Trajectory {
    double step = 0.0;
    double period = 0.0;  // nonlinearity period, for slip counting
    std::vector<double> times;
    std::vector<double> sigma;
    std::vector<double> sigma_dot;
    InitialData init;

    // max over samples of floor(|sigma(t) - sigma(0)| / period)
    int slips() const;
};

// Second-order delayed PLL form:
//   sigma'' + sigma'/T + phi(sigma(t-h)) + s T phi'(sigma(t-h)) sigma'(t-h) = 0.
// Classical 4th-order one-step integration (method of steps); the delayed
// state is read from cubic Hermite interpolation of the stored past.
Trajectory integrate_pll_example(const PllExampleParams& params, const InitialData& init,
                                 double horizon, double step);

// First-order Volterra form:
//   sigma' = alpha(t) + rho phi(sigma(t-h)) - int_0^t gamma(t-u) phi(sigma(u)) du.
// The convolution is carried by one auxiliary state per exponential kernel
// mode, updated inside the same one-step scheme.
Trajectory integrate_volterra(const SystemModel& model, const InitialData& init,
                              double horizon, double step);

// Singularly perturbed form: mu sigma'' + sigma' = (same right-hand side).
// Requires step <= mu / 5 to resolve the fast mode.
Trajectory integrate_singular(const SystemModel& model, double mu, const InitialData& init,
                              double horizon, double step);

// Running values of the integral quadratic functional
//   I_T = int_0^T { theta s' phi + eps s'^2 + delta phi^2
//                   + tau (phi'/a1 - 1)(phi'/a2 - 1) s'^2 } dt
// accumulated by the trapezoidal rule at the trajectory samples; one value
// per sample horizon. phi-dot is formed by the chain rule, never by
// differencing the samples.
std::vector<double> monitor_IT(const Trajectory& traj, const PeriodicNonlinearity& nl,
                               const Multipliers& mult);

}  // namespace slipcert
