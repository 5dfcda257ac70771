#pragma once

#include <string>

#include "slipcert/linear_part.hpp"
#include "slipcert/nonlinearity.hpp"

namespace slipcert {

// Free parameters of the certificate. theta, eps, delta, tau are strictly
// positive; a lies in [0, 1] and only enters the algebraic matrix condition.
struct Multipliers {
    double theta = 1.0;
    double eps = 1.0;
    double delta = 1.0;
    double tau = 1.0;
    double a = 1.0;
    double a0() const { return 1.0 - a; }
    void validate() const;
};

struct GridSpec {
    double omega_max = 0.0;  // 0 => auto from pole/delay time scales
    int points = 4096;
    int refine_minima = 10;  // golden-section passes at the lowest local minima
};

struct FdiReport {
    bool holds = false;
    double min_margin = 0.0;
    double argmin_omega = 0.0;
    bool tail_ok = false;
    GridSpec grid;
    std::string method;  // "grid" or "minorant"
};

// Left-hand side of the frequency-domain inequality at a single frequency:
//   Re{theta K - tau (K + i w/alpha_1)^* (K + i w/alpha_2)} - eps |K|^2 - delta.
double fdi_value(const DelayRationalTransfer& tf, const PeriodicNonlinearity& nl,
                 const Multipliers& mult, double omega);

// Numerical check of the inequality over [0, omega_max]: hybrid linear+log
// grid, golden-section refinement around local minima, analytic quadratic
// bound for the tail beyond the grid. Best-effort for general delay systems.
FdiReport check_fdi(const DelayRationalTransfer& tf, const PeriodicNonlinearity& nl,
                    const Multipliers& mult, GridSpec grid = {});

// Even quartic c4 w^4 + c2 w^2 + c0.
struct EvenQuartic {
    double c0 = 0.0, c2 = 0.0, c4 = 0.0;
    double eval(double omega) const;
    // Infimum over all real omega.
    double min_value() const;
    bool nonnegative(double tol = 1e-12) const { return min_value() >= -tol; }
};

// The transcendental left-hand side for the PLL example family, cleared of
// the positive denominator 1 + T^2 w^2 (theta = 1, alpha_2 = -alpha_1 = 1):
//   fdi_value(w) * (1 + T^2 w^2).
double omega_poly(double T, double s, double h, const Multipliers& mult, double omega);

// Polynomial minorant of omega_poly obtained from cos x >= 1 - x^2/2 and
// |sin x| <= |x|; nonnegativity of this quartic certifies the inequality
// rigorously for the example family.
EvenQuartic omega_poly_lower_bound(double T, double s, double h, const Multipliers& mult);

// Rigorous check of the inequality for the PLL example via the minorant.
FdiReport check_fdi_minorant(double T, double s, double h, const Multipliers& mult);

// The example's multiplier recipe: theta = 1, eps = b0/T, delta = a0 T,
// tau = g0 T^3 with a0 = b0 = (1 - g0 T^4)/2 and
// g0 = max{s h0^2 / 2, (h0 + 1 - s)^2 / 2}; a = 1.
Multipliers pll_recipe_multipliers(double T, double s, double h0);

}  // namespace slipcert
