#include "finsler/geodesic.hpp"

#include <algorithm>
#include <cmath>

namespace finsler {

namespace {

double vscale(const Vec& v) { return std::max(1.0, v.norm()); }

int locate(const std::vector<double>& ts, double t) {
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    int i = static_cast<int>(it - ts.begin()) - 1;
    return std::clamp(i, 0, static_cast<int>(ts.size()) - 2);
}

Vec hermite_vec(double t, double t0, double t1, const Vec& y0, const Vec& d0, const Vec& y1,
                const Vec& d1) {
    double h = t1 - t0, s = (t - t0) / h;
    double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + ((s3 - 2 * s2 + s) * h) * d0 + (-2 * s3 + 3 * s2) * y1 +
           ((s3 - s2) * h) * d1;
}

}  // namespace

Vec GeodesicRecord::point_at(double t) const {
    if (t <= times.front()) return points.front();
    if (t >= times.back()) return points.back();
    int i = locate(times, t);
    return hermite_vec(t, times[i], times[i + 1], points[i], velocities[i], points[i + 1],
                       velocities[i + 1]);
}

Vec GeodesicRecord::velocity_at(double t) const {
    if (t <= times.front()) return velocities.front();
    if (t >= times.back()) return velocities.back();
    int i = locate(times, t);
    return hermite_vec(t, times[i], times[i + 1], velocities[i], accelerations[i],
                       velocities[i + 1], accelerations[i + 1]);
}

Vec JacobiRecord::J_at(double t) const {
    if (t <= times.front()) return J_values.front();
    if (t >= times.back()) return J_values.back();
    int i = locate(times, t);
    return hermite_vec(t, times[i], times[i + 1], J_values[i], J_derivs[i], J_values[i + 1],
                       J_derivs[i + 1]);
}

Vec JacobiRecord::DJ_at(double t) const {
    if (t <= times.front()) return DJ_values.front();
    if (t >= times.back()) return DJ_values.back();
    int i = locate(times, t);
    return hermite_vec(t, times[i], times[i + 1], DJ_values[i], DJ_derivs[i], DJ_values[i + 1],
                       DJ_derivs[i + 1]);
}

namespace detail {

// Core spray evaluation without the chart-domain precondition: the adaptive
// integrator probes trial stages that may momentarily leave the chart; those
// stages are either rejected or cut at the boundary by the step filter.
Vec spray_raw(const Metric& m, const Vec& x, const Vec& y) {
    const int d = m.dim();
    if (m.translation_invariant()) return Vec::Zero(d);
    Mat gv = m.g(x, y);
    Vec rhs(d);
    std::vector<Mat> dg(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) dg[static_cast<std::size_t>(k)] = m.dg_dx(x, y, k);
    for (int l = 0; l < d; ++l) {
        // 2 (d_k g_lj) y^j y^k  -  d(F^2)/dx^l
        double acc = 0.0;
        for (int k = 0; k < d; ++k) acc += (dg[static_cast<std::size_t>(k)].row(l).dot(y)) * y[k];
        rhs[l] = 2.0 * acc - m.dF2_dx(x, y, l);
    }
    return 0.25 * gv.ldlt().solve(rhs);
}

}  // namespace detail

Vec spray_coefficients(const Metric& m, const TangentVector& v) {
    m.require_in_domain(v.point);
    m.require_nonzero(v.components);
    return detail::spray_raw(m, v.point, v.components);
}

GeodesicRecord integrate_geodesic(const Metric& m, const TangentVector& v0, double t_end,
                                  double tol) {
    m.require_in_domain(v0.point);
    m.require_nonzero(v0.components);
    if (t_end <= 0) fail(ErrorCode::InvalidArgument, "integrate_geodesic: t_end must be positive");
    const int d = m.dim();
    Vec s0(2 * d);
    s0.head(d) = v0.point;
    s0.tail(d) = v0.components;
    auto f = [&m, d](double, const Vec& s) {
        Vec out(2 * d);
        Vec x = s.head(d), y = s.tail(d);
        out.head(d) = y;
        out.tail(d) = -2.0 * detail::spray_raw(m, x, y);
        return out;
    };
    auto inside = [&m, d](const Vec& s) { return m.in_domain(Vec(s.head(d))); };
    OdeOptions opts;
    opts.rtol = opts.atol = tol;
    OdeSolution sol = integrate_ode(f, s0, 0.0, t_end, opts, inside);

    GeodesicRecord rec;
    rec.times = sol.times;
    rec.points.reserve(sol.states.size());
    rec.velocities.reserve(sol.states.size());
    rec.accelerations.reserve(sol.states.size());
    for (std::size_t i = 0; i < sol.states.size(); ++i) {
        rec.points.push_back(sol.states[i].head(d));
        rec.velocities.push_back(sol.states[i].tail(d));
        rec.accelerations.push_back(sol.derivs[i].tail(d));
    }
    if (sol.stopped_at_boundary)
        rec.terminated_by = GeodesicRecord::Termination::chart_exit;
    else if (sol.step_failed) {
        rec.terminated_by = GeodesicRecord::Termination::step_failure;
        fail(ErrorCode::StepFailure, "integrate_geodesic: step controller failed at t = " +
                                         std::to_string(rec.times.back()));
    } else
        rec.terminated_by = GeodesicRecord::Termination::time_end;
    return rec;
}

Vec exp_map(const Metric& m, const TangentVector& v) {
    m.require_in_domain(v.point);
    if (v.components.norm() < 1e-300) return v.point;  // exp_p(0) = p exactly
    GeodesicRecord rec = integrate_geodesic(m, v, 1.0);
    if (rec.terminated_by == GeodesicRecord::Termination::chart_exit)
        fail(ErrorCode::OutsideDomain, "exp_map: geodesic left the chart before t = 1");
    return rec.points.back();
}

namespace detail {

std::vector<Mat> chern_raw(const Metric& m, const Vec& x, const Vec& y) {
    const int d = m.dim();
    std::vector<Mat> Gamma(static_cast<std::size_t>(d), Mat::Zero(d, d));
    if (m.translation_invariant()) return Gamma;

    // Nonlinear connection N^i_j = dG^i/dy^j by central differences of the
    // spray; analytic-backed sprays tolerate a small step.
    const double hy = (m.has_analytic_tensors() ? 1e-6 : 1e-3) * vscale(y);
    Mat N(d, d);
    for (int j = 0; j < d; ++j) {
        Vec ej = Vec::Zero(d);
        ej[j] = hy;
        Vec gp = spray_raw(m, x, Vec(y + ej));
        Vec gm = spray_raw(m, x, Vec(y - ej));
        N.col(j) = (gp - gm) / (2.0 * hy);
    }

    // Horizontal derivatives delta_k g_ij = d_k g_ij - 2 N^m_k C_ijm.
    auto C = m.cartan_full(x, y);
    std::vector<Mat> dgh(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        Mat h = m.dg_dx(x, y, k);
        for (int mm = 0; mm < d; ++mm) h -= 2.0 * N(mm, k) * C[static_cast<std::size_t>(mm)];
        dgh[static_cast<std::size_t>(k)] = h;
    }

    Mat ginv = m.g(x, y).inverse();
    for (int l = 0; l < d; ++l) {
        Mat& Gl = Gamma[static_cast<std::size_t>(l)];
        for (int j = 0; j < d; ++j)
            for (int k = j; k < d; ++k) {
                double s = 0.0;
                for (int i = 0; i < d; ++i)
                    s += ginv(l, i) * (dgh[static_cast<std::size_t>(k)](i, j) +
                                       dgh[static_cast<std::size_t>(j)](i, k) -
                                       dgh[static_cast<std::size_t>(i)](j, k));
                Gl(j, k) = Gl(k, j) = 0.5 * s;
            }
    }
    return Gamma;
}

}  // namespace detail

std::vector<Mat> chern_coefficients(const Metric& m, const TangentVector& v) {
    m.require_in_domain(v.point);
    m.require_nonzero(v.components);
    return detail::chern_raw(m, v.point, v.components);
}

namespace {

Vec gamma_apply(const std::vector<Mat>& Gamma, const Vec& a, const Vec& b) {
    const int d = static_cast<int>(Gamma.size());
    Vec out(d);
    for (int l = 0; l < d; ++l) out[l] = a.dot(Gamma[static_cast<std::size_t>(l)] * b);
    return out;
}

}  // namespace

Vec covariant_derivative(const Metric& m, const CurveField& curve, const CurveField& W,
                         const CurveField& X, double t) {
    Vec w = W(t);
    if (w.norm() < 1e-10) fail(ErrorCode::ZeroReference, "covariant_derivative: W(t) = 0");
    const double h = 1e-5;
    Vec xdot = (curve(t + h) - curve(t - h)) / (2.0 * h);
    Vec Xdot = (X(t + h) - X(t - h)) / (2.0 * h);
    auto Gamma = chern_coefficients(m, TangentVector{curve(t), w});
    return Xdot + gamma_apply(Gamma, xdot, X(t));
}

namespace detail {

Vec curvature_raw(const Metric& m, const Vec& p, const Vec& w, const Vec& X, const Vec& Y,
                  const Vec& Z) {
    const int d = m.dim();
    if (m.translation_invariant()) return Vec::Zero(d);
    auto G0 = chern_raw(m, p, w);
    const double hx = 5e-4 * std::max(1.0, p.norm());

    // dGamma[j] ~ total x_j-derivative of Gamma at the parallel-propagated
    // reference (first-order transport kills the dGamma/dy V' term).
    std::vector<std::vector<Mat>> dG(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        Vec ej = Vec::Zero(d);
        ej[j] = hx;
        Vec transport = gamma_apply(G0, Vec(ej / hx), w);  // Gamma(e_j, w)
        auto Gp = chern_raw(m, Vec(p + ej), Vec(w - hx * transport));
        auto Gm = chern_raw(m, Vec(p - ej), Vec(w + hx * transport));
        std::vector<Mat> diff(static_cast<std::size_t>(d));
        for (int l = 0; l < d; ++l)
            diff[static_cast<std::size_t>(l)] =
                (Gp[static_cast<std::size_t>(l)] - Gm[static_cast<std::size_t>(l)]) / (2.0 * hx);
        dG[static_cast<std::size_t>(j)] = std::move(diff);
    }

    // R^l_{m j k} = d_j Gamma^l_{km} - d_k Gamma^l_{jm}
    //              + Gamma^l_{ji} Gamma^i_{km} - Gamma^l_{ki} Gamma^i_{jm}
    Vec out = Vec::Zero(d);
    for (int l = 0; l < d; ++l) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) {
                if (X[j] * Y[k] == 0.0) continue;
                for (int mm = 0; mm < d; ++mm) {
                    double term = dG[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)](
                                      k, mm) -
                                  dG[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)](
                                      j, mm);
                    for (int i = 0; i < d; ++i)
                        term += G0[static_cast<std::size_t>(l)](j, i) *
                                    G0[static_cast<std::size_t>(i)](k, mm) -
                                G0[static_cast<std::size_t>(l)](k, i) *
                                    G0[static_cast<std::size_t>(i)](j, mm);
                    acc += X[j] * Y[k] * Z[mm] * term;
                }
            }
        out[l] = acc;
    }
    return out;
}

}  // namespace detail

Vec curvature_tensor(const Metric& m, const TangentVector& v, const Vec& X, const Vec& Y,
                     const Vec& Z) {
    m.require_in_domain(v.point);
    if (v.components.norm() < 1e-10)
        fail(ErrorCode::ZeroReference, "curvature_tensor: reference vector is zero");
    return detail::curvature_raw(m, v.point, v.components, X, Y, Z);
}

double flag_curvature(const Metric& m, const TangentVector& v, const Vec& w) {
    m.require_in_domain(v.point);
    m.require_nonzero(v.components);
    Mat gv = m.g(v.point, v.components);
    const Vec& vv = v.components;
    double gvv = vv.dot(gv * vv);
    double gww = w.dot(gv * w);
    double gvw = vv.dot(gv * w);
    double denom = gvv * gww - gvw * gvw;
    if (denom < 1e-12 * gvv * gww)
        fail(ErrorCode::DegenerateFlag, "flag_curvature: degenerate 2-plane");
    Vec r = curvature_tensor(m, v, vv, w, w);
    return vv.dot(gv * r) / denom;
}

JacobiRecord jacobi_field(const Metric& m, const GeodesicRecord& gamma, const Vec& J0,
                          const Vec& DJ0, double tol) {
    const int d = m.dim();
    // Joint state (x, y, J, U) with U = DJ along the geodesic:
    //   J' = U - Gamma(y, J),  U' = R^y(y, J) y - Gamma(y, U).
    Vec s0(4 * d);
    s0.head(d) = gamma.start_point();
    s0.segment(d, d) = gamma.start_velocity();
    s0.segment(2 * d, d) = J0;
    s0.tail(d) = DJ0;
    const bool flat = m.translation_invariant();
    auto f = [&m, d, flat](double, const Vec& s) {
        Vec x = s.head(d), y = s.segment(d, d), J = s.segment(2 * d, d), U = s.tail(d);
        Vec out(4 * d);
        if (flat) {
            out.head(d) = y;
            out.segment(d, d) = Vec::Zero(d);
            out.segment(2 * d, d) = U;
            out.tail(d) = Vec::Zero(d);
            return out;
        }
        auto Gamma = detail::chern_raw(m, x, y);
        out.head(d) = y;
        out.segment(d, d) = -2.0 * detail::spray_raw(m, x, y);
        out.segment(2 * d, d) = U - gamma_apply(Gamma, y, J);
        out.tail(d) = detail::curvature_raw(m, x, y, y, J, y) - gamma_apply(Gamma, y, U);
        return out;
    };
    auto inside = [&m, d](const Vec& s) { return m.in_domain(Vec(s.head(d))); };
    OdeOptions opts;
    opts.rtol = opts.atol = tol;
    OdeSolution sol = integrate_ode(f, s0, 0.0, gamma.t_end(), opts, inside);
    if (sol.step_failed)
        fail(ErrorCode::StepFailure, "jacobi_field: integration failed");

    JacobiRecord jr;
    jr.times = sol.times;
    jr.along.times = sol.times;
    jr.along.terminated_by = sol.stopped_at_boundary ? GeodesicRecord::Termination::chart_exit
                                                     : GeodesicRecord::Termination::time_end;
    for (std::size_t i = 0; i < sol.states.size(); ++i) {
        jr.along.points.push_back(sol.states[i].head(d));
        jr.along.velocities.push_back(sol.states[i].segment(d, d));
        jr.along.accelerations.push_back(sol.derivs[i].segment(d, d));
        jr.J_values.push_back(sol.states[i].segment(2 * d, d));
        jr.DJ_values.push_back(sol.states[i].tail(d));
        jr.J_derivs.push_back(sol.derivs[i].segment(2 * d, d));
        jr.DJ_derivs.push_back(sol.derivs[i].tail(d));
    }
    return jr;
}

}  // namespace finsler
