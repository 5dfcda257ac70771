#include "slipcert/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "slipcert/errors.hpp"
#include "slipcert/quadrature.hpp"

namespace slipcert {

namespace {

constexpr int kScanPoints = 8192;
constexpr double kRootTol = 1e-12;
constexpr double kSimpleSlopeTol = 1e-8;

double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        double fm = f(mid);
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Maximize f on [lo, hi] by golden-section search.
double golden_max(const std::function<double(double)>& f, double lo, double hi) {
    const double invphi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < 120; ++i) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    double x = 0.5 * (a + b);
    return std::max({f(x), fc, fd});
}

}  // namespace

PeriodicNonlinearity PeriodicNonlinearity::sine_minus_beta(double beta) {
    if (!(beta > 0.0) || !(beta <= 1.0)) {
        throw std::invalid_argument("sine_minus_beta: beta must lie in (0, 1]");
    }
    PeriodicNonlinearity nl;
    nl.period_ = 2.0 * M_PI;
    nl.eval_ = [beta](double s) { return std::sin(s) - beta; };
    nl.deriv_ = [](double s) { return std::cos(s); };
    nl.slope_low_ = -1.0;
    nl.slope_high_ = 1.0;
    nl.sup_abs_ = 1.0 + beta;
    nl.finalize();
    return nl;
}

PeriodicNonlinearity PeriodicNonlinearity::tabulated(std::vector<double> sigma,
                                                     std::vector<double> phi,
                                                     std::vector<double> dphi,
                                                     double period) {
    const std::size_t n = sigma.size();
    if (n < 4 || phi.size() != n || dphi.size() != n) {
        throw std::invalid_argument("tabulated: need >= 4 nodes with matching phi/dphi");
    }
    if (!(period > 0.0) || sigma.front() != 0.0 || std::abs(sigma.back() - period) > 1e-12) {
        throw std::invalid_argument("tabulated: nodes must span [0, period]");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(sigma[i] > sigma[i - 1])) {
            throw std::invalid_argument("tabulated: sigma nodes must be strictly increasing");
        }
    }
    if (std::abs(phi.front() - phi.back()) > 1e-10 ||
        std::abs(dphi.front() - dphi.back()) > 1e-10) {
        throw ModelViolation("tabulated: endpoint values must match for periodicity");
    }

    auto nodes = std::make_shared<std::vector<double>>(std::move(sigma));
    auto vals = std::make_shared<std::vector<double>>(std::move(phi));
    auto ders = std::make_shared<std::vector<double>>(std::move(dphi));

    // Cubic Hermite segment lookup with periodic wrap.
    auto segment = [nodes, period](double s, std::size_t& i, double& u, double& dx) {
        s = std::fmod(s, period);
        if (s < 0.0) s += period;
        auto it = std::upper_bound(nodes->begin(), nodes->end(), s);
        i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - nodes->begin())) - 1;
        if (i >= nodes->size() - 1) i = nodes->size() - 2;
        dx = (*nodes)[i + 1] - (*nodes)[i];
        u = (s - (*nodes)[i]) / dx;
    };

    PeriodicNonlinearity nl;
    nl.period_ = period;
    nl.eval_ = [segment, vals, ders](double s) {
        std::size_t i; double u, dx;
        segment(s, i, u, dx);
        double p0 = (*vals)[i], p1 = (*vals)[i + 1];
        double m0 = (*ders)[i] * dx, m1 = (*ders)[i + 1] * dx;
        double u2 = u * u, u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 +
               (-2 * u3 + 3 * u2) * p1 + (u3 - u2) * m1;
    };
    nl.deriv_ = [segment, vals, ders](double s) {
        std::size_t i; double u, dx;
        segment(s, i, u, dx);
        double p0 = (*vals)[i], p1 = (*vals)[i + 1];
        double m0 = (*ders)[i] * dx, m1 = (*ders)[i + 1] * dx;
        double u2 = u * u;
        return ((6 * u2 - 6 * u) * p0 + (3 * u2 - 4 * u + 1) * m0 +
                (-6 * u2 + 6 * u) * p1 + (3 * u2 - 2 * u) * m1) / dx;
    };

    // Slope bounds and sup|phi| from a dense scan plus local refinement.
    double lo = 0.0, hi = 0.0, m = 0.0;
    for (int i = 0; i < 4096; ++i) {
        double s = period * i / 4096.0;
        lo = std::min(lo, nl.deriv_(s));
        hi = std::max(hi, nl.deriv_(s));
        m = std::max(m, std::abs(nl.eval_(s)));
    }
    double dx = period / 4096.0;
    for (int i = 0; i < 4096; ++i) {
        double s = period * i / 4096.0;
        if (std::abs(nl.eval_(s)) > m - 1e-6) {
            m = std::max(m, golden_max([&](double x) { return std::abs(nl.eval_(x)); },
                                       s - dx, s + dx));
        }
    }
    nl.slope_low_ = lo;
    nl.slope_high_ = hi;
    nl.sup_abs_ = m;
    nl.finalize();
    return nl;
}

void PeriodicNonlinearity::finalize() {
    if (!(slope_low_ < 0.0) || !(slope_high_ > 0.0)) {
        throw ModelViolation("nonlinearity: slope bounds must satisfy alpha_1 < 0 < alpha_2");
    }

    // Roots on [0, period) via sign-change scan + bisection.
    const double dx = period_ / kScanPoints;
    double prev = eval_(0.0);
    for (int i = 1; i <= kScanPoints; ++i) {
        double s = i * dx;
        double cur = eval_(s);
        if ((prev <= 0.0) != (cur <= 0.0)) {
            double root = bisect(eval_, s - dx, s);
            if (std::abs(eval_(root)) >= kRootTol) {
                throw ModelViolation("nonlinearity: root refinement failed");
            }
            if (std::abs(deriv_(root)) < kSimpleSlopeTol) {
                throw ModelViolation("nonlinearity: root is not simple");
            }
            if (root < period_) roots_.push_back(root);
        }
        prev = cur;
    }

    // Tangential (double) roots do not change sign; detect them at interior
    // extrema whose value is numerically zero.
    double prevd = deriv_(0.0);
    for (int i = 1; i <= kScanPoints; ++i) {
        double s = i * dx;
        double curd = deriv_(s);
        if ((prevd <= 0.0) != (curd <= 0.0)) {
            double ext = bisect(deriv_, s - dx, s);
            if (std::abs(eval_(ext)) < 1e-9 && std::abs(deriv_(ext)) < kSimpleSlopeTol) {
                bool is_known = false;
                for (double r : roots_) is_known |= std::abs(r - ext) < 10 * dx;
                if (!is_known) {
                    throw ModelViolation("nonlinearity: degenerate double root detected");
                }
            }
        }
        prevd = curd;
    }

    std::sort(roots_.begin(), roots_.end());
    if (roots_.size() != 2) {
        throw ModelViolation("nonlinearity: expected exactly 2 simple roots per period, found " +
                             std::to_string(roots_.size()));
    }

    // Sign convention: the mean of phi over one period must be nonpositive.
    if (period_integral(IntegralKind::Phi) > 1e-10) {
        throw ModelViolation("nonlinearity: integral of phi over one period must be <= 0");
    }

    // Declared slope bounds must hold on a dense grid.
    for (int i = 0; i < 4096; ++i) {
        double d = deriv_(period_ * i / 4096.0);
        if (d < slope_low_ - 1e-9 || d > slope_high_ + 1e-9) {
            throw ModelViolation("nonlinearity: derivative leaves declared slope bounds");
        }
    }

    // Zeros of the slope weight (phi' touching a slope bound) are |.|-type
    // kinks of the weighted integrands; record them as quadrature cuts.
    auto w = [this](double s) { return slope_weight(s); };
    for (int i = 1; i <= kScanPoints; ++i) {
        double sm = (i - 1) * dx, s0 = i * dx, sp = (i + 1) * dx;
        if (w(s0) <= w(sm) && w(s0) <= w(sp)) {
            double lo = sm, hi = sp;
            for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
                double c = lo + (hi - lo) / 3.0, d2 = hi - (hi - lo) / 3.0;
                if (w(c) < w(d2)) hi = d2; else lo = c;
            }
            double x = 0.5 * (lo + hi);
            if (w(x) < 1e-5 && x > 1e-12 && x < period_ - 1e-12) {
                bool dup = false;
                for (double k : weight_kinks_) dup |= std::abs(k - x) < 10 * dx;
                if (!dup) weight_kinks_.push_back(x);
            }
        }
    }
    std::sort(weight_kinks_.begin(), weight_kinks_.end());
}

double PeriodicNonlinearity::slope_weight(double sigma) const {
    double d = deriv_(sigma);
    double prod = (1.0 - d / slope_low_) * (1.0 - d / slope_high_);
    return std::sqrt(std::max(0.0, prod));
}

double PeriodicNonlinearity::combined_weight(double eps, double tau, double sigma) const {
    double w = slope_weight(sigma);
    return std::sqrt(eps + tau * w * w);
}

const std::vector<double>& PeriodicNonlinearity::roots_on_period() const {
    return roots_;
}

double PeriodicNonlinearity::period_integral(IntegralKind kind, double eps, double tau) const {
    if (kind == IntegralKind::AbsPhiTimesCombinedWeight && (eps < 0.0 || tau < 0.0)) {
        throw std::invalid_argument("period_integral: eps and tau must be nonnegative");
    }

    std::function<double(double)> f;
    switch (kind) {
        case IntegralKind::Phi:
            f = [this](double s) { return eval_(s); };
            break;
        case IntegralKind::AbsPhi:
            f = [this](double s) { return std::abs(eval_(s)); };
            break;
        case IntegralKind::AbsPhiTimesSlopeWeight:
            f = [this](double s) { return std::abs(eval_(s)) * slope_weight(s); };
            break;
        case IntegralKind::AbsPhiTimesCombinedWeight:
            f = [this, eps, tau](double s) {
                return std::abs(eval_(s)) * combined_weight(eps, tau, s);
            };
            break;
    }

    // Split at the roots of phi (kinks of |phi|), then subdivide each smooth
    // piece so the slope_weight sqrt-kinks stay cheap for the adaptive rule.
    std::vector<double> cuts{0.0};
    for (double r : roots_) {
        if (r > 1e-15 && r < period_ - 1e-15) cuts.push_back(r);
    }
    if (kind == IntegralKind::AbsPhiTimesSlopeWeight ||
        kind == IntegralKind::AbsPhiTimesCombinedWeight) {
        cuts.insert(cuts.end(), weight_kinks_.begin(), weight_kinks_.end());
    }
    cuts.push_back(period_);
    std::sort(cuts.begin(), cuts.end());

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const int sub = 8;
        for (int j = 0; j < sub; ++j) {
            double a = cuts[i] + (cuts[i + 1] - cuts[i]) * j / sub;
            double b = cuts[i] + (cuts[i + 1] - cuts[i]) * (j + 1) / sub;
            // Per-panel absolute floor 1e-12: with at most a few dozen panels
            // the accumulated error stays inside the 1e-10 relative contract
            // for O(1) period integrals.
            total += integrate(f, a, b, 1e-11, 1e-12);
        }
    }
    return total;
}

}  // namespace slipcert
