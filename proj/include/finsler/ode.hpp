#pragma once

#include <functional>

#include "finsler/types.hpp"

namespace finsler {

// Adaptive Dormand-Prince 5(4) with cubic-Hermite dense output on accepted
// steps. The optional `inside` predicate stops integration at the domain
// boundary: the crossing is located by bisection on the dense output and the
// trajectory is truncated there.
struct OdeSolution {
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> derivs;
    bool stopped_at_boundary = false;
    bool step_failed = false;

    double t_end() const { return times.back(); }
    Vec eval(double t) const;
    Vec eval_deriv(double t) const;

private:
    int interval_of(double t) const;
};

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-9;
    double h_init = 1e-3;
    double h_min = 1e-14;
    double h_max = 0.0;  // 0 = no cap
    int max_steps = 200000;
};

OdeSolution integrate_ode(const std::function<Vec(double, const Vec&)>& f, const Vec& y0,
                          double t0, double t1, const OdeOptions& opts,
                          const std::function<bool(const Vec&)>& inside = nullptr);

}  // namespace finsler
