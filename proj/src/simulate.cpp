#include "slipcert/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "slipcert/errors.hpp"

namespace slipcert {

namespace {

constexpr double kDivergenceLimit = 1e6;

// Cubic Hermite read-back of a uniformly sampled signal given its values and
// derivatives at the nodes.
struct SampledPath {
    double step;
    const std::vector<double>* values;
    const std::vector<double>* derivs;

    double at(double u) const {
        const auto& v = *values;
        const auto& d = *derivs;
        if (v.size() < 2) return v.front();
        std::size_t i = static_cast<std::size_t>(std::max(0.0, std::floor(u / step)));
        if (i + 1 >= v.size()) i = v.size() - 2;
        double x = u / step - static_cast<double>(i);
        double p0 = v[i], p1 = v[i + 1];
        double m0 = d[i] * step, m1 = d[i + 1] * step;
        double x2 = x * x, x3 = x2 * x;
        return (2 * x3 - 3 * x2 + 1) * p0 + (x3 - 2 * x2 + x) * m0 +
               (-2 * x3 + 3 * x2) * p1 + (x3 - x2) * m1;
    }
};

void check_finite(double sigma, double rate, double t) {
    if (!std::isfinite(sigma) || !std::isfinite(rate) || std::abs(rate) > kDivergenceLimit) {
        throw DivergenceError("integration diverged", t);
    }
}

int steps_for(double horizon, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("integrate: step must be > 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("integrate: horizon must be > 0");
    return static_cast<int>(std::ceil(horizon / step - 1e-9));
}

}  // namespace

int Trajectory::slips() const {
    int worst = 0;
    for (double s : sigma) {
        worst = std::max(worst, static_cast<int>(std::floor(std::abs(s - sigma.front()) / period)));
    }
    return worst;
}

Trajectory integrate_pll_example(const PllExampleParams& params, const InitialData& init,
                                 double horizon, double step) {
    const double T = params.T, s = params.s, h = params.h();
    if (h > 0.0 && step > h) {
        throw std::invalid_argument("integrate_pll_example: step must not exceed the delay");
    }
    const int n = steps_for(horizon, step);
    PeriodicNonlinearity nl = PeriodicNonlinearity::sine_minus_beta(params.beta);

    Trajectory traj;
    traj.step = step;
    traj.period = nl.period();
    traj.init = init;
    auto& sig = traj.sigma;
    auto& vel = traj.sigma_dot;
    std::vector<double> acc;
    sig.reserve(n + 1);
    vel.reserve(n + 1);
    acc.reserve(n + 1);
    traj.times.reserve(n + 1);

    SampledPath sig_path{step, &sig, &vel};
    SampledPath vel_path{step, &vel, &acc};

    // Delayed pair (sigma, sigma_dot) at time u <= current node time.
    auto delayed = [&](double u, double& sd, double& vd) {
        if (u <= 0.0) {
            sd = init.history(u);
            vd = init.history_deriv(u);
        } else {
            sd = sig_path.at(u);
            vd = vel_path.at(u);
        }
    };

    auto rhs = [&](double t, double y_sig, double y_vel, double& d_sig, double& d_vel) {
        double sd, vd;
        if (h > 0.0) {
            delayed(t - h, sd, vd);
        } else {
            sd = y_sig;
            vd = y_vel;
        }
        d_sig = y_vel;
        d_vel = -y_vel / T - nl.eval(sd) - s * T * nl.deriv(sd) * vd;
    };

    double y_sig = init.history(0.0);
    double y_vel = init.sigma_dot0;
    double d_sig, d_vel;
    rhs(0.0, y_sig, y_vel, d_sig, d_vel);
    traj.times.push_back(0.0);
    sig.push_back(y_sig);
    vel.push_back(y_vel);
    acc.push_back(d_vel);

    for (int i = 0; i < n; ++i) {
        const double t = i * step;
        double k1s, k1v, k2s, k2v, k3s, k3v, k4s, k4v;
        rhs(t, y_sig, y_vel, k1s, k1v);
        rhs(t + 0.5 * step, y_sig + 0.5 * step * k1s, y_vel + 0.5 * step * k1v, k2s, k2v);
        rhs(t + 0.5 * step, y_sig + 0.5 * step * k2s, y_vel + 0.5 * step * k2v, k3s, k3v);
        rhs(t + step, y_sig + step * k3s, y_vel + step * k3v, k4s, k4v);
        y_sig += step / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s);
        y_vel += step / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        check_finite(y_sig, y_vel, t);
        rhs(t + step, y_sig, y_vel, d_sig, d_vel);
        traj.times.push_back((i + 1) * step);
        sig.push_back(y_sig);
        vel.push_back(y_vel);
        acc.push_back(d_vel);
    }
    return traj;
}

namespace {

// Shared state layout for the Volterra and singularly perturbed forms:
// sigma [, velocity] followed by one complex convolution mode per kernel pole.
struct VolterraSystem {
    const SystemModel* model;
    const InitialData* init;
    std::vector<KernelMode> modes;
    std::function<double(double)> alpha;
    double rho, rho_delay;
    double step;
    const std::vector<double>* sig;
    const std::vector<double>* sig_dot;

    VolterraSystem(const SystemModel& m, const InitialData& i, double step_)
        : model(&m), init(&i), modes(kernel_modes(m.transfer)),
          alpha(m.forcing(i)), rho(m.transfer.rho()),
          rho_delay(m.transfer.rho_delay()), step(step_) {
        double dmin = m.transfer.min_positive_delay();
        if (dmin > 0.0 && step > dmin) {
            throw std::invalid_argument("integrate: step must not exceed the smallest delay");
        }
    }

    double phi(double x) const { return model->nonlinearity.eval(x); }

    // phi at the solution sample sigma(u), u >= 0; sigma_stage covers reads at
    // the current stage time (zero-delay terms).
    double phi_at(double u, double t_stage, double sigma_stage) const {
        if (u >= t_stage) return phi(sigma_stage);
        SampledPath path{step, sig, sig_dot};
        return phi(path.at(u));
    }

    // Right-hand side of the unperturbed first-order equation.
    double sigma_rate(double t, double sigma_stage,
                      const std::vector<std::complex<double>>& w) const {
        double z = 0.0;
        for (std::size_t i = 0; i < modes.size(); ++i) {
            z += (modes[i].amplitude * w[i]).real();
        }
        double fb = 0.0;
        if (rho != 0.0) {
            double u = t - rho_delay;
            double sd = u <= 0.0 ? init->history(u)
                                 : (u >= t ? sigma_stage : SampledPath{step, sig, sig_dot}.at(u));
            fb = rho * phi(sd);
        }
        return alpha(t) + fb - z;
    }

    void mode_rates(double t, double sigma_stage,
                    const std::vector<std::complex<double>>& w,
                    std::vector<std::complex<double>>& dw) const {
        for (std::size_t i = 0; i < modes.size(); ++i) {
            if (t >= modes[i].delay) {
                dw[i] = -modes[i].rate * w[i] + phi_at(t - modes[i].delay, t, sigma_stage);
            } else {
                dw[i] = 0.0;
            }
        }
    }
};

}  // namespace

Trajectory integrate_volterra(const SystemModel& model, const InitialData& init,
                              double horizon, double step) {
    const int n = steps_for(horizon, step);
    Trajectory traj;
    traj.step = step;
    traj.period = model.nonlinearity.period();
    traj.init = init;
    VolterraSystem sys(model, init, step);
    sys.sig = &traj.sigma;
    sys.sig_dot = &traj.sigma_dot;

    const std::size_t nm = sys.modes.size();
    double y = init.history(0.0);
    std::vector<std::complex<double>> w(nm, 0.0), wt(nm), dw1(nm), dw2(nm), dw3(nm), dw4(nm);

    traj.times.push_back(0.0);
    traj.sigma.push_back(y);
    traj.sigma_dot.push_back(sys.sigma_rate(0.0, y, w));

    for (int i = 0; i < n; ++i) {
        const double t = i * step;
        double k1 = sys.sigma_rate(t, y, w);
        sys.mode_rates(t, y, w, dw1);

        double y2 = y + 0.5 * step * k1;
        for (std::size_t j = 0; j < nm; ++j) wt[j] = w[j] + 0.5 * step * dw1[j];
        double k2 = sys.sigma_rate(t + 0.5 * step, y2, wt);
        sys.mode_rates(t + 0.5 * step, y2, wt, dw2);

        double y3 = y + 0.5 * step * k2;
        for (std::size_t j = 0; j < nm; ++j) wt[j] = w[j] + 0.5 * step * dw2[j];
        double k3 = sys.sigma_rate(t + 0.5 * step, y3, wt);
        sys.mode_rates(t + 0.5 * step, y3, wt, dw3);

        double y4 = y + step * k3;
        for (std::size_t j = 0; j < nm; ++j) wt[j] = w[j] + step * dw3[j];
        double k4 = sys.sigma_rate(t + step, y4, wt);
        sys.mode_rates(t + step, y4, wt, dw4);

        y += step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        for (std::size_t j = 0; j < nm; ++j) {
            w[j] += step / 6.0 * (dw1[j] + 2.0 * dw2[j] + 2.0 * dw3[j] + dw4[j]);
        }
        check_finite(y, k1, t);
        traj.times.push_back((i + 1) * step);
        traj.sigma.push_back(y);
        traj.sigma_dot.push_back(sys.sigma_rate((i + 1) * step, y, w));
    }
    return traj;
}

Trajectory integrate_singular(const SystemModel& model, double mu, const InitialData& init,
                              double horizon, double step) {
    if (!(mu > 0.0)) throw std::invalid_argument("integrate_singular: mu must be > 0");
    if (step > mu / 5.0) {
        throw std::invalid_argument(
            "integrate_singular: step too large for the fast mode (need step <= mu/5)");
    }
    const int n = steps_for(horizon, step);
    Trajectory traj;
    traj.step = step;
    traj.period = model.nonlinearity.period();
    traj.init = init;
    VolterraSystem sys(model, init, step);
    sys.sig = &traj.sigma;
    sys.sig_dot = &traj.sigma_dot;

    const std::size_t nm = sys.modes.size();
    double y = init.history(0.0);
    double v = init.sigma_dot0;
    std::vector<std::complex<double>> w(nm, 0.0), wt(nm), dw1(nm), dw2(nm), dw3(nm), dw4(nm);

    // v' = (rhs - v)/mu where rhs is the unperturbed right-hand side.
    auto v_rate = [&](double t, double sigma_stage, double v_stage,
                      const std::vector<std::complex<double>>& wk) {
        return (sys.sigma_rate(t, sigma_stage, wk) - v_stage) / mu;
    };

    traj.times.push_back(0.0);
    traj.sigma.push_back(y);
    traj.sigma_dot.push_back(v);

    for (int i = 0; i < n; ++i) {
        const double t = i * step;
        double k1s = v, k1v = v_rate(t, y, v, w);
        sys.mode_rates(t, y, w, dw1);

        double y2 = y + 0.5 * step * k1s, v2 = v + 0.5 * step * k1v;
        for (std::size_t j = 0; j < nm; ++j) wt[j] = w[j] + 0.5 * step * dw1[j];
        double k2s = v2, k2v = v_rate(t + 0.5 * step, y2, v2, wt);
        sys.mode_rates(t + 0.5 * step, y2, wt, dw2);

        double y3 = y + 0.5 * step * k2s, v3 = v + 0.5 * step * k2v;
        for (std::size_t j = 0; j < nm; ++j) wt[j] = w[j] + 0.5 * step * dw2[j];
        double k3s = v3, k3v = v_rate(t + 0.5 * step, y3, v3, wt);
        sys.mode_rates(t + 0.5 * step, y3, wt, dw3);

        double y4 = y + step * k3s, v4 = v + step * k3v;
        for (std::size_t j = 0; j < nm; ++j) wt[j] = w[j] + step * dw3[j];
        double k4s = v4, k4v = v_rate(t + step, y4, v4, wt);
        sys.mode_rates(t + step, y4, wt, dw4);

        y += step / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s);
        v += step / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        for (std::size_t j = 0; j < nm; ++j) {
            w[j] += step / 6.0 * (dw1[j] + 2.0 * dw2[j] + 2.0 * dw3[j] + dw4[j]);
        }
        check_finite(y, v, t);
        traj.times.push_back((i + 1) * step);
        traj.sigma.push_back(y);
        traj.sigma_dot.push_back(v);
    }
    return traj;
}

std::vector<double> monitor_IT(const Trajectory& traj, const PeriodicNonlinearity& nl,
                               const Multipliers& mult) {
    const std::size_t n = traj.sigma.size();
    std::vector<double> out(n, 0.0);
    if (n == 0) return out;
    const double a1 = nl.slope_low(), a2 = nl.slope_high();
    auto integrand = [&](std::size_t i) {
        const double s = traj.sigma[i], v = traj.sigma_dot[i];
        const double p = nl.eval(s), dp = nl.deriv(s);
        // phi-dot via the chain rule: d/dt phi(sigma) = phi'(sigma) sigma'.
        const double f1 = dp * v / a1 - v;
        const double f2 = dp * v / a2 - v;
        return mult.theta * v * p + mult.eps * v * v + mult.delta * p * p +
               mult.tau * f1 * f2;
    };
    double prev = integrand(0);
    for (std::size_t i = 1; i < n; ++i) {
        double cur = integrand(i);
        out[i] = out[i - 1] + 0.5 * traj.step * (prev + cur);
        prev = cur;
    }
    return out;
}

}  // namespace slipcert
