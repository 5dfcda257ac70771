#pragma once

#include <stdexcept>
#include <string>

namespace slipcert {

// The system data violates a structural assumption (e.g. wrong number of
// nonlinearity roots, non-Hurwitz denominator).
class ModelViolation : public std::runtime_error {
public:
    explicit ModelViolation(const std::string& what) : std::runtime_error(what) {}
};

// A numerical routine failed to reach its requested tolerance.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_tolerance(achieved) {}
    double achieved_tolerance;
};

// Kernel reconstruction is only supported for transfer terms with simple poles.
class UnsupportedKernel : public std::runtime_error {
public:
    explicit UnsupportedKernel(const std::string& what) : std::runtime_error(what) {}
};

// The high-frequency tail of the frequency-domain inequality could not be
// classified (dominant coefficient numerically zero).
class IndeterminateTail : public std::runtime_error {
public:
    explicit IndeterminateTail(const std::string& what) : std::runtime_error(what) {}
};

// Integration blew up; carries the last time at which the state was finite.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, double t)
        : std::runtime_error(what), last_valid_time(t) {}
    double last_valid_time;
};

// No slip certificate exists for the requested data (e.g. the bias term
// dominates and the algebraic condition has no admissible k).
class NoCertificate : public std::runtime_error {
public:
    explicit NoCertificate(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace slipcert
