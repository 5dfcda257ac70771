#include "slipcert/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace slipcert {

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, double abs_floor) {
    if (a == b) return 0.0;
    double error = 0.0;
    using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
    double value = gk::integrate(f, a, b, 15, rel_tol, &error);
    double allowed = std::max(rel_tol * std::abs(value), abs_floor);
    if (!(error <= allowed) || !std::isfinite(value)) {
        throw NumericError("quadrature did not converge to requested tolerance", error);
    }
    return value;
}

}  // namespace slipcert
