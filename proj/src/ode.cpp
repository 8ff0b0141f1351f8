#include "finsler/ode.hpp"

#include <algorithm>
#include <cmath>

namespace finsler {

namespace {

// Dormand-Prince 5(4) tableau (FSAL).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// 4th-order embedded weights.
constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                 e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

Vec hermite(double t, double t0, double t1, const Vec& y0, const Vec& f0, const Vec& y1,
            const Vec& f1) {
    double h = t1 - t0;
    double s = (t - t0) / h;
    double s2 = s * s, s3 = s2 * s;
    double h00 = 2 * s3 - 3 * s2 + 1;
    double h10 = s3 - 2 * s2 + s;
    double h01 = -2 * s3 + 3 * s2;
    double h11 = s3 - s2;
    return h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1;
}

Vec hermite_deriv(double t, double t0, double t1, const Vec& y0, const Vec& f0, const Vec& y1,
                  const Vec& f1) {
    double h = t1 - t0;
    double s = (t - t0) / h;
    double s2 = s * s;
    double d00 = (6 * s2 - 6 * s) / h;
    double d10 = 3 * s2 - 4 * s + 1;
    double d01 = (-6 * s2 + 6 * s) / h;
    double d11 = 3 * s2 - 2 * s;
    return d00 * y0 + d10 * f0 + d01 * y1 + d11 * f1;
}

}  // namespace

int OdeSolution::interval_of(double t) const {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    int i = static_cast<int>(it - times.begin()) - 1;
    return std::clamp(i, 0, static_cast<int>(times.size()) - 2);
}

Vec OdeSolution::eval(double t) const {
    if (times.size() == 1 || t <= times.front()) return states.front();
    if (t >= times.back()) return states.back();
    int i = interval_of(t);
    return hermite(t, times[i], times[i + 1], states[i], derivs[i], states[i + 1], derivs[i + 1]);
}

Vec OdeSolution::eval_deriv(double t) const {
    if (times.size() == 1) return derivs.front();
    if (t <= times.front()) return derivs.front();
    if (t >= times.back()) return derivs.back();
    int i = interval_of(t);
    return hermite_deriv(t, times[i], times[i + 1], states[i], derivs[i], states[i + 1],
                         derivs[i + 1]);
}

OdeSolution integrate_ode(const std::function<Vec(double, const Vec&)>& f, const Vec& y0,
                          double t0, double t1, const OdeOptions& opts,
                          const std::function<bool(const Vec&)>& inside) {
    OdeSolution sol;
    double t = t0;
    Vec y = y0;
    Vec k1 = f(t, y);
    sol.times.push_back(t);
    sol.states.push_back(y);
    sol.derivs.push_back(k1);

    double span = t1 - t0;
    double h = std::min(opts.h_init, span);
    if (opts.h_max > 0) h = std::min(h, opts.h_max);

    for (int step = 0; step < opts.max_steps && t < t1; ++step) {
        h = std::min(h, t1 - t);
        Vec k2 = f(t + c2 * h, Vec(y + h * (a21 * k1)));
        Vec k3 = f(t + c3 * h, Vec(y + h * (a31 * k1 + a32 * k2)));
        Vec k4 = f(t + c4 * h, Vec(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
        Vec k5 = f(t + c5 * h, Vec(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
        Vec k6 = f(t + h, Vec(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
        Vec y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        Vec k7 = f(t + h, y5);
        Vec y4 = y + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err = 0.0;
        for (int i = 0; i < y.size(); ++i) {
            double sc = opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
            double e = (y5[i] - y4[i]) / sc;
            err += e * e;
        }
        err = std::sqrt(err / static_cast<double>(y.size()));

        bool forced = h <= opts.h_min * std::max(1.0, std::abs(t));
        if (err <= 1.0 || forced) {
            if (inside && !inside(y5)) {
                // Bisect for the boundary crossing on the Hermite interpolant.
                double lo = 0.0, hi = 1.0;
                for (int it = 0; it < 60; ++it) {
                    double mid = 0.5 * (lo + hi);
                    Vec ym = hermite(t + mid * h, t, t + h, y, k1, y5, k7);
                    (inside(ym) ? lo : hi) = mid;
                }
                double tc = t + lo * h;
                if (lo > 0.0) {
                    Vec yc = hermite(tc, t, t + h, y, k1, y5, k7);
                    sol.times.push_back(tc);
                    sol.states.push_back(yc);
                    sol.derivs.push_back(f(tc, yc));
                }
                sol.stopped_at_boundary = true;
                return sol;
            }
            t += h;
            y = y5;
            k1 = k7;  // FSAL
            sol.times.push_back(t);
            sol.states.push_back(y);
            sol.derivs.push_back(k1);
            double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
            h *= std::clamp(fac, 0.2, 5.0);
        } else {
            double fac = 0.9 * std::pow(err, -0.2);
            h *= std::clamp(fac, 0.1, 1.0);
        }
        if (opts.h_max > 0) h = std::min(h, opts.h_max);
        if (h < opts.h_min * std::max(1.0, std::abs(t)) && t < t1) {
            sol.step_failed = true;
            return sol;
        }
    }
    if (t < t1 && !sol.stopped_at_boundary) sol.step_failed = true;
    return sol;
}

}  // namespace finsler
