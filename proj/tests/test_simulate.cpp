#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "slipcert/errors.hpp"
#include "slipcert/fdi.hpp"
#include "slipcert/quadrature.hpp"
#include "slipcert/simulate.hpp"
#include "slipcert/slip_bounds.hpp"

using namespace slipcert;

namespace {

const PllExampleParams kRef{0.1, 0.4, 0.9, 1.0};

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

// Driftless model: no kernel, no delayed feedback, custom forcing only.
SystemModel forcing_only_model(std::function<double(double)> alpha) {
    SystemModel model{DelayRationalTransfer({}, 0.0, 0.0),
                      PeriodicNonlinearity::sine_minus_beta(0.5),
                      1.0, 1.0, 0.0, std::nullopt, {}};
    model.custom_forcing = [alpha](const InitialData&) { return alpha; };
    return model;
}

}  // namespace

TEST_CASE("equilibrium start stays stationary") {
    double root = std::asin(kRef.beta);
    auto traj = integrate_pll_example(kRef, InitialData::constant(root), 20.0, 0.005);
    double worst = 0.0;
    for (double s : traj.sigma) worst = std::max(worst, std::abs(s - root));
    CHECK(worst < 1e-9);
    CHECK(traj.slips() == 0);
}

TEST_CASE("step validation and sampling layout") {
    CHECK_THROWS_AS(integrate_pll_example(kRef, InitialData::constant(1.0), 1.0, 0.2),
                    std::invalid_argument);
    CHECK_THROWS_AS(integrate_pll_example(kRef, InitialData::constant(1.0), 1.0, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(integrate_pll_example(kRef, InitialData::constant(1.0), -1.0, 0.01),
                    std::invalid_argument);
    auto traj = integrate_pll_example(kRef, InitialData::constant(1.0), 1.0, 0.01);
    REQUIRE(traj.times.size() == 101);
    for (std::size_t i = 1; i < traj.times.size(); ++i) {
        CHECK(traj.times[i] - traj.times[i - 1] == doctest::Approx(0.01).epsilon(1e-12));
    }
}

TEST_CASE("self-convergence at fourth order on a smooth segment") {
    // Delay-free configuration keeps the classical one-step order intact.
    PllExampleParams smooth{0.1, 0.4, 0.9, 0.0};
    InitialData init = InitialData::constant(std::asin(0.9) + 0.4, 1.0);
    auto ref = integrate_pll_example(smooth, init, 1.0, 1.0 / 2560.0);
    std::vector<double> errs;
    // Steps coarse enough that truncation error stays well above roundoff.
    for (double step : {1.0 / 40.0, 1.0 / 80.0, 1.0 / 160.0}) {
        auto traj = integrate_pll_example(smooth, init, 1.0, step);
        errs.push_back(std::abs(traj.sigma.back() - ref.sigma.back()));
    }
    double order1 = std::log2(errs[0] / errs[1]);
    double order2 = std::log2(errs[1] / errs[2]);
    CHECK(order1 > 3.8);
    CHECK(order2 > 3.8);
}

TEST_CASE("slip count is invariant under step refinement") {
    InitialData init = InitialData::constant(std::asin(0.9), 2.0);
    auto coarse = integrate_pll_example(kRef, init, 20.0, 0.005);
    auto fine = integrate_pll_example(kRef, init, 20.0, 0.0025);
    CHECK(coarse.slips() == fine.slips());
}

TEST_CASE("phase-shift equivariance by one period") {
    double delta = 2.0 * M_PI;
    InitialData a = InitialData::constant(0.9, 1.5);
    InitialData b = InitialData::constant(0.9 + delta, 1.5);
    auto ta = integrate_pll_example(kRef, a, 10.0, 0.005);
    auto tb = integrate_pll_example(kRef, b, 10.0, 0.005);
    double worst = 0.0;
    for (std::size_t i = 0; i < ta.sigma.size(); ++i) {
        worst = std::max(worst, std::abs(tb.sigma[i] - ta.sigma[i] - delta));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("slips field is recomputable from the samples") {
    InitialData init = InitialData::constant(std::asin(0.95), 2.0);
    PllExampleParams biased{0.1, 0.4, 0.95, 1.0};
    auto traj = integrate_pll_example(biased, init, 20.0, 0.005);
    int manual = 0;
    for (double s : traj.sigma) {
        manual = std::max(manual,
                          static_cast<int>(std::floor(std::abs(s - traj.sigma[0]) / traj.period)));
    }
    CHECK(traj.slips() == manual);
}

TEST_CASE("volterra with trivial kernel has the closed-form solution") {
    auto model = forcing_only_model([](double t) { return std::exp(-t); });
    auto traj = integrate_volterra(model, InitialData::constant(0.7), 5.0, 0.005);
    double expected = 0.7 + 1.0 - std::exp(-5.0);
    CHECK(std::abs(traj.sigma.back() - expected) < 1e-10);
}

TEST_CASE("volterra reduction matches the second-order form") {
    auto model = make_pll_example(kRef.T, kRef.s, kRef.beta, kRef.h0);
    InitialData init = InitialData::constant(std::asin(kRef.beta) + 0.5, 1.0);
    auto ode = integrate_pll_example(kRef, init, 20.0, 0.000625);
    auto vol = integrate_volterra(model, init, 20.0, 0.000625);
    CHECK(max_abs_diff(ode.sigma, vol.sigma) < 1e-6);
}

TEST_CASE("incremental convolution matches direct quadrature of the kernel") {
    auto model = make_pll_example(kRef.T, kRef.s, kRef.beta, kRef.h0);
    InitialData init = InitialData::constant(std::asin(kRef.beta), 1.0);
    const double step = kRef.T / 80.0;
    auto traj = integrate_volterra(model, init, 4.0, step);
    auto alpha = model.forcing(init);
    const double h = kRef.h0 * kRef.T;
    const double rho = model.transfer.rho();
    auto& nl = model.nonlinearity;

    // Cubic Hermite read-back of the stored solution; exact at the nodes.
    auto sigma_at = [&](double t) {
        std::size_t i = static_cast<std::size_t>(t / step);
        if (i + 1 >= traj.sigma.size()) return traj.sigma.back();
        double u = t / step - i;
        double p0 = traj.sigma[i], p1 = traj.sigma[i + 1];
        double m0 = traj.sigma_dot[i] * step, m1 = traj.sigma_dot[i + 1] * step;
        double u2 = u * u, u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 +
               (-2 * u3 + 3 * u2) * p1 + (u3 - u2) * m1;
    };
    for (int c = 1; c <= 10; ++c) {
        double t = 0.38 * c;
        std::size_t idx = static_cast<std::size_t>(std::llround(t / step));
        t = traj.times[idx];
        // Panel-wise Simpson between sample nodes (the integrand is smooth
        // inside each panel; t - h lands exactly on a node).
        double conv = 0.0;
        if (t > h) {
            auto f = [&](double u) {
                return (1.0 - kRef.s) * std::exp(-(t - u - h) / kRef.T) *
                       nl.eval(sigma_at(u));
            };
            std::size_t panels = static_cast<std::size_t>(std::llround((t - h) / step));
            for (std::size_t i = 0; i < panels; ++i) {
                double a = i * step, b = (i + 1) * step;
                conv += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
            }
        }
        double delayed = t >= h ? sigma_at(t - h) : init.history(t - h);
        double rhs = alpha(t) + rho * nl.eval(delayed) - conv;
        CHECK(std::abs(traj.sigma_dot[idx] - rhs) < 1e-8 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("volterra rejects steps beyond the smallest delay") {
    auto model = make_pll_example(kRef.T, kRef.s, kRef.beta, kRef.h0);
    CHECK_THROWS_AS(integrate_volterra(model, InitialData::constant(1.0), 1.0, 0.2),
                    std::invalid_argument);
}

TEST_CASE("divergent forcing is reported with the last valid time") {
    auto model = forcing_only_model([](double t) { return 1e7 * t; });
    CHECK_THROWS_AS(integrate_volterra(model, InitialData::constant(0.0), 5.0, 0.01),
                    DivergenceError);
    try {
        integrate_volterra(model, InitialData::constant(0.0), 5.0, 0.01);
    } catch (const DivergenceError& e) {
        CHECK(e.last_valid_time >= 0.0);
        CHECK(e.last_valid_time < 5.0);
    }
}

TEST_CASE("singular integrator validates mu and step") {
    auto model = forcing_only_model([](double) { return 0.0; });
    CHECK_THROWS_AS(integrate_singular(model, 0.0, InitialData::constant(0.0), 1.0, 0.001),
                    std::invalid_argument);
    // step > mu/5 is refused as unresolvably stiff.
    CHECK_THROWS_AS(integrate_singular(model, 0.01, InitialData::constant(0.0), 1.0, 0.005),
                    std::invalid_argument);
}

TEST_CASE("singular form reproduces the linear filter response") {
    // With no feedback: mu v' + v = e^{-t}, sigma' = v.
    const double mu = 0.01, v0 = 0.3;
    auto model = forcing_only_model([](double t) { return std::exp(-t); });
    InitialData init = InitialData::constant(0.0, v0);
    auto traj = integrate_singular(model, mu, init, 3.0, mu / 10.0);
    const double c = 1.0 / (1.0 - mu);
    for (std::size_t i = 0; i < traj.times.size(); i += 250) {
        double t = traj.times[i];
        double v = (v0 - c) * std::exp(-t / mu) + c * std::exp(-t);
        CHECK(std::abs(traj.sigma_dot[i] - v) < 1e-9);
        double sigma = -mu * (v0 - c) * (std::exp(-t / mu) - 1.0) - c * (std::exp(-t) - 1.0);
        CHECK(std::abs(traj.sigma[i] - sigma) < 1e-9);
    }
}

TEST_CASE("singular trajectories approach the unperturbed one as mu shrinks") {
    auto model = make_pll_example(kRef.T, kRef.s, kRef.beta, kRef.h0);
    InitialData init = InitialData::constant(std::asin(kRef.beta), 1.0);
    const double horizon = 6.0, t1 = 0.5;
    auto base = integrate_volterra(model, init, horizon, 1e-3);
    double prev = std::numeric_limits<double>::infinity();
    for (double mu : {1e-2, 1e-3, 1e-4}) {
        auto pert = integrate_singular(model, mu, init, horizon, std::min(1e-3, mu / 5.0));
        double worst = 0.0;
        std::size_t stride = pert.sigma.size() / base.sigma.size();
        if (stride == 0) stride = 1;
        for (std::size_t i = 0; i < base.sigma.size(); ++i) {
            if (base.times[i] < t1) continue;
            std::size_t j = std::min(i * stride, pert.sigma.size() - 1);
            worst = std::max(worst, std::abs(pert.sigma[j] - base.sigma[i]));
        }
        CHECK(worst < prev);
        prev = worst;
    }
    CHECK(prev < 1e-3);
}

TEST_CASE("functional monitor vanishes on the stationary trajectory") {
    double root = std::asin(kRef.beta);
    auto traj = integrate_pll_example(kRef, InitialData::constant(root), 20.0, 0.005);
    Multipliers mult = pll_recipe_multipliers(kRef.T, kRef.s, kRef.h0);
    auto nl = PeriodicNonlinearity::sine_minus_beta(kRef.beta);
    auto it = monitor_IT(traj, nl, mult);
    REQUIRE(it.size() == traj.sigma.size());
    for (double v : it) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("functional monitor matches a hand trapezoid on synthetic data") {
    auto nl = PeriodicNonlinearity::sine_minus_beta(0.5);
    Multipliers mult{1.1, 0.4, 0.2, 0.3, 1.0};
    Trajectory traj;
    traj.step = 0.1;
    traj.period = nl.period();
    for (int i = 0; i <= 10; ++i) {
        traj.times.push_back(0.1 * i);
        traj.sigma.push_back(0.3 + 0.05 * i);
        traj.sigma_dot.push_back(0.5);
    }
    auto it = monitor_IT(traj, nl, mult);
    auto f = [&](std::size_t i) {
        double s = traj.sigma[i], v = traj.sigma_dot[i];
        double p = nl.eval(s), dp = nl.deriv(s);
        return mult.theta * v * p + mult.eps * v * v + mult.delta * p * p +
               mult.tau * (dp * v / -1.0 - v) * (dp * v / 1.0 - v);
    };
    double acc = 0.0;
    for (std::size_t i = 1; i < traj.sigma.size(); ++i) {
        acc += 0.05 * (f(i - 1) + f(i));
        CHECK(it[i] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("empirical slips never exceed the certified bound") {
    auto model = make_pll_example(kRef.T, kRef.s, kRef.beta, kRef.h0);
    auto cert = certify(model, Theorem::T3, SearchBudget{});
    REQUIRE(cert.has_value());
    double root = std::asin(kRef.beta);
    for (int i = 0; i <= 20; ++i) {
        double v0 = -2.0 + 4.0 * i / 20.0;
        auto traj = integrate_pll_example(kRef, InitialData::constant(root, v0), 20.0, 0.005);
        CHECK(traj.slips() <= cert->max_slips());
    }
}
