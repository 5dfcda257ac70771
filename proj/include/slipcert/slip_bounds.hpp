#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "slipcert/fdi.hpp"
#include "slipcert/linear_part.hpp"
#include "slipcert/nonlinearity.hpp"

namespace slipcert {

enum class Theorem { T1, T2, T3, T4 };

std::string theorem_name(Theorem t);
Theorem theorem_from_name(const std::string& name);

// The six ratio coefficients sharing the numerator
//   integral(phi) + (-1)^j x / (theta k), j = 1, 2,
// over the |phi|-, Phi|phi|- and P|phi|-weighted period integrals.
struct RCoefficients {
    double r1, r2;    // |phi| denominator
    double r01, r02;  // slope-weighted denominator
    double r11, r12;  // combined-weight denominator (depends on eps, tau)
};

RCoefficients r_coefficients(const PeriodicNonlinearity& nl, int k, double theta,
                             double eps, double tau, double x);

// Symmetric 3x3 with diagonal (eps, delta, tau) and off-diagonal couplings
// a*theta*r_j/2 and (1-a)*theta*r0j/2.
Eigen::Matrix3d matrix_Tj(const Multipliers& mult, double rj, double r0j);

// Sylvester leading-minor test; throws ModelViolation if the input is
// asymmetric beyond 1e-12.
bool is_positive_definite(const Eigen::Matrix3d& m);

// Smallest eigenvalue of a symmetric 3x3 (used as the PD margin).
double min_eigenvalue(const Eigen::Matrix3d& m);

// Generic functional bound q = (theta M m + 2(eps+tau) M m (M/r + rho)
// + (eps+tau) M^2 / 2) / r. Valid as a bound for the integral functional only
// when phi(sigma(0)) = 0 and alpha_2 = -alpha_1.
double q_general(const SystemModel& model, const Multipliers& mult);

// The example's sharper constant q = T^2 (A + B h0 + C h0^2) under the
// b = K(0) beta convention.
double example_q(double T, double s, double beta, double h0);

// Closed-form bound on the slipped-cycle count for the example family:
// r0 = floor(q / (8 sqrt(eps delta) (beta asin beta + sqrt(1-beta^2)) - 2 pi beta))
// with 2 sqrt(eps delta) = 1 - g0 T^4. Throws NoCertificate when the
// denominator is nonpositive.
int example_r0(double T, double s, double beta, double h0);

// q0 = q + (theta M m + 2(eps+tau) M m (M/r + rho)) rho m h + (eps+tau) rho^2 m^2 h,
// the perturbation-robust constant used by the singular case.
double q0_singular(const SystemModel& model, const Multipliers& mult);

struct SlipCertificate {
    int k_bound = 0;  // solutions slip fewer than k_bound cycles
    Theorem theorem = Theorem::T3;
    Multipliers multipliers;
    double q_used = 0.0;
    double fdi_margin = 0.0;
    double pd_margin = 0.0;  // min eigenvalue of the T_j matrices (or the
                             // scaled 4*delta - theta^2 r1j^2 gap for T1)
    bool requires_root_start = false;
    bool k_plus_one_applied = false;
    std::string fdi_method;  // "grid" or "minorant"
    std::uint64_t seed = 0;

    // Largest slip count consistent with the certificate. k_bound already
    // includes the k+1 adjustment when it was applied.
    int max_slips() const { return k_bound - 1; }
};

struct SearchBudget {
    int k_max = 100;
    int iterations = 80;  // coordinate-descent passes per restart
    int restarts = 3;
    std::uint64_t seed = 1;
    std::optional<double> user_Q;  // required for T1/T2 unless the q fallback applies
    bool root_start = true;        // phi(sigma(0)) = 0 holds for the intended runs
};

struct SearchDiagnostics {
    double best_score = 0.0;  // best min(fdi, pd) margin seen, even on failure
    Multipliers best_multipliers;
    int k_reached = 0;
};

// Smallest k (within budget) for which the frequency-domain inequality and
// the theorem's algebraic condition admit multipliers. Returns nullopt with
// diagnostics when the budget is exhausted.
std::optional<SlipCertificate> certify(const SystemModel& model, Theorem theorem,
                                       const SearchBudget& budget,
                                       SearchDiagnostics* diag = nullptr);

// Deterministic single-pass recheck of an emitted certificate.
bool verify_certificate(const SystemModel& model, const SlipCertificate& cert);

std::string serialize_certificate(const SlipCertificate& cert);
SlipCertificate parse_certificate(const std::string& text);

// One row of the worked-example reproduction table.
struct ExampleRow {
    double beta, g0, two_sqrt_eps_delta, q, denominator;
    int r0;
};
std::vector<ExampleRow> reproduce_example_rows();

}  // namespace slipcert
