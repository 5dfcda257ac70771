#pragma once

#include <cmath>
#include <functional>

#include "slipcert/errors.hpp"

namespace slipcert {

// Adaptive quadrature of a smooth integrand over [a, b].
// Throws NumericError when the error estimate exceeds
// max(rel_tol * |I|, abs_floor).
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-11, double abs_floor = 1e-13);

}  // namespace slipcert
