#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slipcert/fdi.hpp"
#include "slipcert/linear_part.hpp"

namespace slipcert {

struct NonlinearityConfig {
    std::string preset = "sine_minus_beta";  // or "tabulated"
    double beta = 0.9;
    double period = 0.0;
    std::vector<double> sigma, phi, dphi;  // tabulated only
};

struct LinearPartConfig {
    std::string preset = "pll_pi_filter";  // or "explicit"
    // pll_pi_filter
    double T = 0.1, s = 0.4, h0 = 1.0;
    // explicit
    std::vector<RationalDelayTerm> terms;
    double rho = 0.0, h = 0.0;
    double M = 1.0, r = 1.0, b = 0.0;
};

struct SweepGrid {
    std::vector<double> beta, T, h0, s;
    int inits = 5;
};

struct TaskConfig {
    std::string name = "certify";  // certify | simulate | sweep | verify |
                                   // reproduce-paper | dump-fdi
    std::string theorem = "T3";
    int k_max = 100;
    int iterations = 80;
    int restarts = 3;
    std::uint64_t seed = 1;
    std::optional<double> Q;
    bool root_start = true;
    double mu = 0.0;       // > 0 selects the singularly perturbed form
    double horizon = 0.0;  // 0 => 200 T for presets
    double step = 0.0;     // 0 => min(T, h, mu) / 20 for presets
    std::optional<double> sigma0;
    double sigma_dot0 = 0.0;
    std::optional<Multipliers> multipliers;
    SweepGrid sweep;
};

struct RunConfig {
    NonlinearityConfig nonlinearity;
    LinearPartConfig linear_part;
    TaskConfig task;
    std::string output_dir;
};

// Strict JSON parse: unknown keys are rejected with their JSON-pointer
// location. parse(serialize(parse(x))) == parse(x).
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& config);

SystemModel build_model(const RunConfig& config);
PeriodicNonlinearity build_nonlinearity(const NonlinearityConfig& config);

}  // namespace slipcert
