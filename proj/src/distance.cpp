#include "finsler/distance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace finsler {

namespace {

double angle_of(const Vec& v) { return std::atan2(v[1], v[0]); }

double angle_gap(double a, double b) {
    double d = std::fmod(std::abs(a - b), 2 * M_PI);
    return std::min(d, 2 * M_PI - d);
}

GeodesicRecord straight_record(const Vec& p, const Vec& q, double d) {
    GeodesicRecord rec;
    Vec v = (q - p) / d;  // F(v) = 1 by construction
    rec.times = {0.0, d};
    rec.points = {p, q};
    rec.velocities = {v, v};
    rec.accelerations = {Vec::Zero(p.size()), Vec::Zero(p.size())};
    rec.terminated_by = GeodesicRecord::Termination::time_end;
    return rec;
}

// Integrate to time 1 with initial velocity w; empty optional when the chart
// is left early.
std::optional<Vec> endpoint(const Metric& m, const Vec& p, const Vec& w, double tol) {
    GeodesicRecord rec = integrate_geodesic(m, {p, w}, 1.0, tol);
    if (rec.terminated_by != GeodesicRecord::Termination::time_end) return std::nullopt;
    return rec.points.back();
}

struct Basin {
    double approach;
    double theta;
    double t_best;
};

struct Solution {
    Vec w;        // velocity reaching q at time 1
    double dist;  // F(p, w)
};

double golden_minimize(const std::function<double(double)>& f, double lo, double hi, int iters,
                       double* fmin) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    double xm = 0.5 * (a + b);
    if (fmin) *fmin = f(xm);
    return xm;
}

}  // namespace

DistanceResult distance_point(const Metric& m, const Vec& p, const Vec& q,
                              const DistanceOptions& opts) {
    m.require_in_domain(p);
    m.require_in_domain(q);
    const int d = m.dim();
    DistanceResult out;

    if ((q - p).norm() < 1e-14) {
        out.value = 0.0;
        out.method = DistanceResult::Method::closed_form;
        out.initial_direction = Vec::Zero(d);
        return out;
    }

    const bool want_shooting = opts.force == DistanceOptions::Force::shooting;
    if (!want_shooting) {
        auto cf = m.closed_form_distance(p, q);
        if (cf) {
            out.value = *cf;
            out.method = DistanceResult::Method::closed_form;
            auto dir = m.closed_form_direction(p, q);
            if (dir) {
                out.initial_direction = *dir;
                if (opts.want_minimizer) {
                    if (m.translation_invariant())
                        out.minimizer = straight_record(p, q, out.value);
                    else
                        out.minimizer = integrate_geodesic(m, {p, *dir}, out.value);
                }
            } else {
                out.degenerate = true;  // antipodal-type: no unique direction
            }
            return out;
        }
        if (opts.force == DistanceOptions::Force::closed_form)
            fail(ErrorCode::InvalidArgument, "distance_point: no closed form for this metric");
    }

    if (d != 2)
        fail(ErrorCode::InvalidArgument, "distance_point: shooting is implemented for dim 2");

    // --- multi-start shooting over the F-unit sphere at p ---
    double t_cap = opts.t_cap_factor * m.F(p, Vec(q - p));
    std::vector<Basin> basins;
    for (int attempt = 0; attempt < 3 && basins.empty(); ++attempt, t_cap *= 2.0) {
        std::vector<Basin> all;
        for (int k = 0; k < opts.multi_starts; ++k) {
            double th = 2 * M_PI * k / opts.multi_starts;
            Vec dir = vec2(std::cos(th), std::sin(th));
            dir /= m.F(p, dir);
            GeodesicRecord rec;
            try {
                rec = integrate_geodesic(m, {p, dir}, t_cap, opts.basin_tol);
            } catch (const Error&) {
                continue;  // step failure on this ray only
            }
            double best = (rec.points.front() - q).norm();
            double tb = 0.0;
            const int probes = 12;
            for (std::size_t i = 0; i + 1 < rec.times.size(); ++i)
                for (int s = 0; s <= probes; ++s) {
                    double t = rec.times[i] + (rec.times[i + 1] - rec.times[i]) * s / probes;
                    double a = (rec.point_at(t) - q).norm();
                    if (a < best) {
                        best = a;
                        tb = t;
                    }
                }
            all.push_back({best, th, std::max(tb, 1e-6)});
        }
        if (all.empty()) continue;
        std::sort(all.begin(), all.end(),
                  [](const Basin& a, const Basin& b) { return a.approach < b.approach; });
        for (const auto& b : all) {
            bool dup = false;
            for (const auto& kept : basins)
                if (angle_gap(kept.theta, b.theta) < 3.0 * 2 * M_PI / opts.multi_starts) dup = true;
            if (!dup) basins.push_back(b);
            if (static_cast<int>(basins.size()) >= opts.refine_basins) break;
        }
    }
    if (basins.empty()) fail(ErrorCode::Unreachable, "distance_point: all shots left the chart");

    // --- damped Newton on the endpoint map, unknowns = initial velocity ---
    const double scale = 1.0 + (q - p).norm();
    std::vector<Solution> sols;
    for (const auto& b : basins) {
        Vec dir = vec2(std::cos(b.theta), std::sin(b.theta));
        dir /= m.F(p, dir);
        Vec w = b.t_best * dir;
        auto r0 = endpoint(m, p, w, opts.shoot_tol);
        if (!r0) continue;
        Vec R = *r0 - q;
        bool ok = false;
        for (int it = 0; it < 30; ++it) {
            if (R.norm() <= 1e-9 * scale) {
                ok = true;
                break;
            }
            const double eps = 1e-7 * (1.0 + w.norm());
            Mat J(d, d);
            bool jac_ok = true;
            for (int c = 0; c < d; ++c) {
                Vec e = Vec::Zero(d);
                e[c] = eps;
                auto rp = endpoint(m, p, Vec(w + e), opts.shoot_tol);
                auto rm = endpoint(m, p, Vec(w - e), opts.shoot_tol);
                if (!rp || !rm) {
                    jac_ok = false;
                    break;
                }
                J.col(c) = (*rp - *rm) / (2 * eps);
            }
            if (!jac_ok) break;
            Vec dw = J.partialPivLu().solve(Vec(-R));
            double step = 1.0;
            bool improved = false;
            for (int h = 0; h < 12 && !improved; ++h, step *= 0.5) {
                Vec wn = w + step * dw;
                if (wn.norm() < 1e-10) continue;
                auto rn = endpoint(m, p, wn, opts.shoot_tol);
                if (rn && (*rn - q).norm() < R.norm()) {
                    w = wn;
                    R = *rn - q;
                    improved = true;
                }
            }
            if (!improved) break;
        }
        if (ok || R.norm() <= 1e-8 * scale) sols.push_back({w, m.F(p, w)});
    }
    if (sols.empty()) fail(ErrorCode::Unreachable, "distance_point: no shooting basin converged");

    std::sort(sols.begin(), sols.end(),
              [](const Solution& a, const Solution& b) { return a.dist < b.dist; });
    out.value = sols.front().dist;
    out.method = DistanceResult::Method::shooting;
    out.initial_direction = sols.front().w / out.value;

    // Count minimizer clusters by departure angle.
    std::vector<double> angles;
    for (const auto& s : sols) {
        if (s.dist > out.value + opts.cluster_value * (1.0 + out.value)) continue;
        double a = angle_of(s.w);
        bool dup = false;
        for (double ex : angles)
            if (angle_gap(ex, a) <= opts.cluster_angle) dup = true;
        if (!dup) angles.push_back(a);
    }
    out.multiplicity = std::max<int>(1, static_cast<int>(angles.size()));

    if (opts.want_minimizer)
        out.minimizer = integrate_geodesic(m, {p, out.initial_direction}, out.value);
    return out;
}

DistanceResult distance_to_submanifold(const Metric& m, const SubmanifoldSpec& N, const Vec& q,
                                       const DistanceOptions& opts) {
    m.require_in_domain(q);
    if (N.param_dim == 0) {
        DistanceResult r = distance_point(m, N.point(Vec(0)), q, opts);
        r.foot_param = Vec(0);
        return r;
    }
    if (N.param_dim != 1)
        fail(ErrorCode::InvalidArgument, "distance_to_submanifold: 1-parameter submanifolds only");

    DistanceOptions value_only = opts;
    value_only.want_minimizer = false;

    auto dist_at = [&](double u) {
        return distance_point(m, N.point(Vec(Vec::Constant(1, u))), q, value_only).value;
    };

    const bool per = !N.periodic.empty() && N.periodic[0];
    const double lo = N.u_lo[0], hi = N.u_hi[0], period = hi - lo;
    const int K = opts.sweep_samples;
    std::vector<double> us(static_cast<std::size_t>(K)), ds(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) {
        us[static_cast<std::size_t>(i)] = per ? lo + period * i / K : lo + (hi - lo) * i / (K - 1);
        ds[static_cast<std::size_t>(i)] = dist_at(us[static_cast<std::size_t>(i)]);
    }

    // Discrete local minima -> bracketed golden-section refinement.
    struct Candidate {
        double u, val;
    };
    std::vector<Candidate> cands;
    for (int i = 0; i < K; ++i) {
        double dl, dr;
        if (per) {
            dl = ds[static_cast<std::size_t>((i + K - 1) % K)];
            dr = ds[static_cast<std::size_t>((i + 1) % K)];
        } else {
            dl = (i == 0) ? ds[0] + 1 : ds[static_cast<std::size_t>(i - 1)];
            dr = (i == K - 1) ? ds.back() + 1 : ds[static_cast<std::size_t>(i + 1)];
        }
        double di = ds[static_cast<std::size_t>(i)];
        if (di <= dl && di <= dr) {
            // Fine subdivision inside the bracket: a single coarse cell can
            // hide several nearby minima (e.g. the two feet straddling the
            // C^1 point), so split before refining. Value-only callers skip
            // the subdivision.
            double step = per ? period / K : (hi - lo) / (K - 1);
            double a = us[static_cast<std::size_t>(i)] - step;
            double b = us[static_cast<std::size_t>(i)] + step;
            const int F = opts.multiplicity_resolve ? 64 : 2;
            std::vector<double> fu(F + 1), fd(F + 1);
            for (int s = 0; s <= F; ++s) {
                fu[static_cast<std::size_t>(s)] = a + (b - a) * s / F;
                fd[static_cast<std::size_t>(s)] = dist_at(fu[static_cast<std::size_t>(s)]);
            }
            for (int s = 1; s < F; ++s) {
                if (fd[static_cast<std::size_t>(s)] <= fd[static_cast<std::size_t>(s - 1)] &&
                    fd[static_cast<std::size_t>(s)] <= fd[static_cast<std::size_t>(s + 1)]) {
                    double fv;
                    double u_star = golden_minimize(dist_at, fu[static_cast<std::size_t>(s - 1)],
                                                    fu[static_cast<std::size_t>(s + 1)], 70, &fv);
                    cands.push_back({u_star, fv});
                }
            }
        }
    }
    if (cands.empty()) fail(ErrorCode::Unreachable, "distance_to_submanifold: sweep found nothing");
    std::sort(cands.begin(), cands.end(),
              [](const Candidate& a, const Candidate& b) { return a.val < b.val; });

    const double best = cands.front().val;
    const double scale = std::max(1.0, std::abs(best));
    const double win = opts.cluster_value * scale;

    // Degenerate all-directions case: most sweep samples already sit at the
    // minimum (e.g. the circle center).
    int near = 0;
    for (double v : ds)
        if (v <= best + 10 * win) ++near;
    bool degenerate = near > (6 * K) / 10;

    // Cluster tied minimizers by foot point / departure direction.
    struct Foot {
        double u;
        Vec x;
        Vec dir;
    };
    std::vector<Foot> feet;
    for (const auto& c : cands) {
        if (c.val > best + win) continue;
        Vec uu = N.canonical_param(Vec(Vec::Constant(1, c.u)));
        Vec x = N.point(uu);
        Vec dir = distance_point(m, x, q, value_only).initial_direction;
        bool dup = false;
        for (const auto& f : feet) {
            bool foot_close = (f.x - x).norm() <= opts.cluster_foot * scale;
            bool dir_close = dir.size() > 0 && f.dir.size() > 0 &&
                             angle_gap(angle_of(f.dir), angle_of(dir)) <= opts.cluster_angle;
            if (foot_close && (dir_close || dir.size() == 0)) dup = true;
        }
        if (!dup) feet.push_back({uu[0], x, dir});
    }

    Vec u_star = N.canonical_param(Vec(Vec::Constant(1, cands.front().u)));
    DistanceResult out = distance_point(m, N.point(u_star), q, opts);
    out.foot_param = u_star;
    out.multiplicity = std::max<int>(1, static_cast<int>(feet.size()));
    for (const auto& f : feet) out.foot_points.push_back(f.x);
    out.degenerate = degenerate;

    // First-variation residual: departure velocity g-orthogonal to T_N.
    if (out.initial_direction.size() > 0 && out.value > 1e-12) {
        Mat W = N.frame(u_star);
        Mat gv = m.g(N.point(u_star), out.initial_direction);
        double res = 0.0;
        for (int a = 0; a < W.cols(); ++a)
            res = std::max(res,
                           std::abs(out.initial_direction.dot(gv * W.col(a))) / W.col(a).norm());
        out.normal_residual = res;
    }
    return out;
}

GridOracle::GridOracle(const Metric& m, const Vec& lo, const Vec& hi, double h)
    : m_(&m), lo_(lo), hi_(hi), h_(h) {
    if (m.dim() != 2) fail(ErrorCode::InvalidArgument, "GridOracle: dim 2 only");
    nx_ = static_cast<int>(std::floor((hi[0] - lo[0]) / h)) + 1;
    ny_ = static_cast<int>(std::floor((hi[1] - lo[1]) / h)) + 1;
    // Primitive offsets with max-norm <= 3: the classic 32-neighbor stencil.
    for (int a = -3; a <= 3; ++a)
        for (int b = -3; b <= 3; ++b) {
            if (a == 0 && b == 0) continue;
            if (std::gcd(std::abs(a), std::abs(b)) != 1) continue;
            stencil_.emplace_back(a, b);
        }
}

Vec GridOracle::coord(int i, int j) const { return vec2(lo_[0] + i * h_, lo_[1] + j * h_); }

double GridOracle::distance(const Vec& p, const Vec& q) const {
    for (const Vec* z : {&p, &q})
        if ((*z)[0] < lo_[0] || (*z)[0] > hi_[0] || (*z)[1] < lo_[1] || (*z)[1] > hi_[1])
            fail(ErrorCode::OutOfBox, "GridOracle: endpoint outside the box");

    auto edge = [&](const Vec& a, const Vec& b) {
        Vec mid = 0.5 * (a + b);
        Vec delta = b - a;
        return m_->F(mid, delta);
    };

    const int n = nx_ * ny_;
    const int target = n;  // virtual node for q
    std::vector<double> dist(static_cast<std::size_t>(n) + 1,
                             std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;

    // Link p into the grid.
    int pi = static_cast<int>(std::round((p[0] - lo_[0]) / h_));
    int pj = static_cast<int>(std::round((p[1] - lo_[1]) / h_));
    for (int a = -3; a <= 3; ++a)
        for (int b = -3; b <= 3; ++b) {
            int i = pi + a, j = pj + b;
            if (i < 0 || i >= nx_ || j < 0 || j >= ny_) continue;
            Vec c = coord(i, j);
            if ((c - p).norm() < 1e-12) continue;
            double w = edge(p, c);
            int id = node_of(i, j);
            if (w < dist[static_cast<std::size_t>(id)]) {
                dist[static_cast<std::size_t>(id)] = w;
                heap.emplace(w, id);
            }
        }
    // Degenerate short hop: p and q inside one stencil cell.
    if (std::abs(p[0] - q[0]) <= 3 * h_ && std::abs(p[1] - q[1]) <= 3 * h_) {
        double w = edge(p, q);
        if (w < dist[static_cast<std::size_t>(target)]) {
            dist[static_cast<std::size_t>(target)] = w;
            heap.emplace(w, target);
        }
    }

    int qi = static_cast<int>(std::round((q[0] - lo_[0]) / h_));
    int qj = static_cast<int>(std::round((q[1] - lo_[1]) / h_));
    auto near_target = [&](int i, int j) { return std::abs(i - qi) <= 3 && std::abs(j - qj) <= 3; };

    while (!heap.empty()) {
        auto [du, u] = heap.top();
        heap.pop();
        if (u == target) return du;
        if (du > dist[static_cast<std::size_t>(u)]) continue;
        int i = u % nx_, j = u / nx_;
        Vec cu = coord(i, j);
        for (auto [a, b] : stencil_) {
            int i2 = i + a, j2 = j + b;
            if (i2 < 0 || i2 >= nx_ || j2 < 0 || j2 >= ny_) continue;
            int v = node_of(i2, j2);
            double nd = du + edge(cu, coord(i2, j2));
            if (nd < dist[static_cast<std::size_t>(v)]) {
                dist[static_cast<std::size_t>(v)] = nd;
                heap.emplace(nd, v);
            }
        }
        if (near_target(i, j)) {
            Vec cq = q;
            if ((cu - cq).norm() > 1e-12) {
                double nd = du + edge(cu, cq);
                if (nd < dist[static_cast<std::size_t>(target)]) {
                    dist[static_cast<std::size_t>(target)] = nd;
                    heap.emplace(nd, target);
                }
            }
        }
    }
    if (!std::isfinite(dist[static_cast<std::size_t>(target)]))
        fail(ErrorCode::Unreachable, "GridOracle: target not reached");
    return dist[static_cast<std::size_t>(target)];
}

}  // namespace finsler
