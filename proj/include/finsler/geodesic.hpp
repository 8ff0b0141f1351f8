#pragma once

#include <functional>

#include "finsler/metric.hpp"
#include "finsler/ode.hpp"

namespace finsler {

// Dense output of an integrated geodesic. Velocities are coordinate
// velocities; F(gamma(t), gamma'(t)) is constant along the record up to the
// integrator tolerance.
struct GeodesicRecord {
    enum class Termination { time_end, chart_exit, step_failure };

    std::vector<double> times;
    std::vector<Vec> points;
    std::vector<Vec> velocities;
    std::vector<Vec> accelerations;  // for Hermite dense output
    Termination terminated_by = Termination::time_end;

    double t_end() const { return times.back(); }
    Vec point_at(double t) const;
    Vec velocity_at(double t) const;
    const Vec& start_point() const { return points.front(); }
    const Vec& start_velocity() const { return velocities.front(); }
};

struct JacobiRecord {
    std::vector<double> times;
    std::vector<Vec> J_values;
    std::vector<Vec> DJ_values;  // covariant derivative along the geodesic
    std::vector<Vec> J_derivs;   // coordinate derivatives, for dense output
    std::vector<Vec> DJ_derivs;
    GeodesicRecord along;

    Vec J_at(double t) const;
    Vec DJ_at(double t) const;
};

// Geodesic spray coefficients G^i(x, y):
//   G^i = 1/4 g^{il} [ 2 (d_k g_lj) y^j y^k - (d_l g_jk) y^j y^k ].
// 2-homogeneous in y; identically zero for translation-invariant metrics.
Vec spray_coefficients(const Metric& m, const TangentVector& v);

// Solve x'' + 2 G(x, x') = 0. Stops at the chart boundary (terminated_by =
// chart_exit); throws StepFailure if the controller cannot meet tol.
GeodesicRecord integrate_geodesic(const Metric& m, const TangentVector& v0, double t_end,
                                  double tol = 1e-9);

// exp_p(v) = gamma_v(1), exp_p(0) = p exactly. Throws OutsideDomain when the
// geodesic leaves the chart before t = 1.
Vec exp_map(const Metric& m, const TangentVector& v);

// Chern connection coefficients at reference (p, v): Gamma[l](j, k), built
// from horizontal derivatives of g through the nonlinear connection
// N^i_j = dG^i/dy^j. Symmetric in (j, k).
std::vector<Mat> chern_coefficients(const Metric& m, const TangentVector& v);

// Covariant derivative along a curve at time t, with reference field W:
//   (D X)^l = X'(t)^l + Gamma^l_{jk}(c(t), W(t)) c'(t)^j X(t)^k.
using CurveField = std::function<Vec(double)>;
Vec covariant_derivative(const Metric& m, const CurveField& curve, const CurveField& W,
                         const CurveField& X, double t);

// Curvature tensor R^v(X, Y)Z at p, from central x-differences of the Chern
// coefficients with the reference vector parallel-propagated to first order.
Vec curvature_tensor(const Metric& m, const TangentVector& v, const Vec& X, const Vec& Y,
                     const Vec& Z);

// Flag curvature of span{v, w} with flagpole v. Throws DegenerateFlag when
// the flag is numerically degenerate.
double flag_curvature(const Metric& m, const TangentVector& v, const Vec& w);

// Jacobi field along the geodesic with gamma's initial data, solving
// D^2 J = R^{gamma'}(gamma', J) gamma' jointly with the geodesic.
JacobiRecord jacobi_field(const Metric& m, const GeodesicRecord& gamma, const Vec& J0,
                          const Vec& DJ0, double tol = 1e-9);

}  // namespace finsler
