#include "finsler/cut_analysis.hpp"

#include <algorithm>
#include <cmath>

namespace finsler {

namespace {

Vec u1v(double x) { return Vec::Constant(1, x); }

// Golden-ratio low-discrepancy sequence on [0, 1).
double golden_seq(int i) {
    const double phi = 0.6180339887498949;
    double v = std::fmod((i + 1) * phi, 1.0);
    return v;
}

double dist_value(const Metric& m, const SubmanifoldSpec& N, const Vec& q,
                  const DistanceOptions& base) {
    DistanceOptions o = base;
    o.want_minimizer = false;
    o.multiplicity_resolve = false;
    return distance_to_submanifold(m, N, q, o).value;
}

}  // namespace

double submanifold_diameter_estimate(const Metric& m, const SubmanifoldSpec& N, int samples) {
    if (N.param_dim == 0) return 1.0;
    double best = 0.0;
    std::vector<Vec> pts;
    for (int i = 0; i < samples; ++i) {
        double u = N.u_lo[0] + (N.u_hi[0] - N.u_lo[0]) * i / samples;
        pts.push_back(N.point(u1v(u)));
    }
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (i == j) continue;
            auto cf = m.closed_form_distance(pts[i], pts[j]);
            best = std::max(best, cf ? *cf : (pts[i] - pts[j]).norm());
        }
    return std::max(best, 1e-3);
}

std::optional<double> first_focal_time(const Metric& m, const SubmanifoldSpec& N,
                                       const NormalVector& n, double t_max, double tol) {
    GeodesicRecord gamma = integrate_geodesic(m, n.n, t_max, tol);
    JacobiRecord jr;
    if (N.param_dim == 0) {
        // Point submanifold: conjugate-point field J(0) = 0, DJ(0) _|_ gamma'.
        Mat gv = m.g(n.n.point, n.n.components);
        Vec e = vec2(-n.n.components[1], n.n.components[0]);
        Vec w = e - (n.n.components.dot(gv * e) / n.n.components.dot(gv * n.n.components)) *
                        n.n.components;
        w /= std::sqrt(w.dot(gv * w));
        jr = jacobi_field(m, gamma, Vec(Vec::Zero(2)), w, tol);
    } else {
        Mat W = N.frame(n.u);
        jr = n_jacobi_field(m, N, n.u, gamma, Vec(W.col(0)), tol);
    }
    auto det = [&](double t) {
        Vec J = jr.J_at(t), v = jr.along.velocity_at(t);
        return J[0] * v[1] - J[1] * v[0];
    };
    const double t_end = jr.times.back();
    const int K = std::max<int>(64, static_cast<int>(jr.times.size()));
    double prev_t = 1e-9 * t_end;
    double prev_d = det(prev_t);
    for (int i = 1; i <= K; ++i) {
        double t = t_end * i / K;
        double d = det(t);
        if (prev_d * d <= 0.0 && (prev_d != 0.0 || d != 0.0)) {
            double lo = prev_t, hi = t;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (lo + hi);
                (det(lo) * det(mid) <= 0.0 ? hi : lo) = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev_t = t;
        prev_d = d;
    }
    return std::nullopt;
}

CutSample cut_time(const Metric& m, const SubmanifoldSpec& N, const NormalVector& n,
                   const CutOptions& opts) {
    CutSample out;
    out.normal = n;
    const double t_max =
        opts.t_max > 0 ? opts.t_max : 10.0 * submanifold_diameter_estimate(m, N);

    GeodesicRecord gamma = integrate_geodesic(m, n.n, t_max, opts.geo_tol);
    const double t_end = gamma.t_end();
    const bool exited = gamma.terminated_by == GeodesicRecord::Termination::chart_exit;

    auto gap_fires = [&](double t) {
        Vec x = gamma.point_at(t);
        double d = dist_value(m, N, x, opts.dist);
        return d < t - opts.tol_d;
    };

    // Doubling bracket from t = 1e-3 (clipped to the record).
    double t_lo = 0.0, t_hi = -1.0;
    double t = 1e-3;
    for (;;) {
        double tc = std::min(t, t_end);
        if (gap_fires(tc)) {
            t_hi = tc;
            break;
        }
        t_lo = tc;
        if (tc >= t_end) break;
        t *= 2.0;
    }

    if (t_hi < 0) {
        // Predicate never fired: horizon- or chart-limited.
        out.rho = exited ? t_end : kInfSentinel;
        out.limiting_reason = exited ? CutSample::Reason::chart_exit : CutSample::Reason::horizon;
        out.bracket_lo = t_end;
        out.bracket_hi = kInfSentinel;
        return out;
    }

    for (int it = 0; it < 60 && (t_hi - t_lo) > 1e-9 * std::max(1.0, t_hi); ++it) {
        double mid = 0.5 * (t_lo + t_hi);
        (gap_fires(mid) ? t_hi : t_lo) = mid;
    }
    out.rho = 0.5 * (t_lo + t_hi);
    out.bracket_lo = t_lo;
    out.bracket_hi = t_hi;
    out.cut_point = gamma.point_at(out.rho);
    out.limiting_reason = CutSample::Reason::separating;

    if (opts.classify) {
        auto focal = first_focal_time(m, N, n, std::min(t_end, out.rho * 1.5 + 1e-2),
                                      opts.geo_tol);
        if (focal) out.focal_time = *focal;
        double width = std::max(t_hi - t_lo, 10.0 * opts.tol_d);
        DistanceOptions dm = opts.dist;
        dm.want_minimizer = false;
        auto post = distance_to_submanifold(m, N, Vec(gamma.point_at(out.rho + width)), dm);
        out.multiplicity_at_cut = post.multiplicity;
        bool is_focal = focal && std::abs(out.rho - *focal) <= 3.0 * width;
        // Both may hold (degenerate centers); focal wins per the convention.
        out.limiting_reason =
            is_focal ? CutSample::Reason::focal : CutSample::Reason::separating;
    }
    return out;
}

InjRadiusTable inj_radius_submanifold(const Metric& m, const SubmanifoldSpec& N, int sample_count,
                                      const CutOptions& opts, int workers) {
    InjRadiusTable table;
    table.samples.resize(static_cast<std::size_t>(sample_count));
    const bool hyper = N.param_dim == N.ambient_dim - 1 && N.param_dim >= 1;
    parallel_for(sample_count, workers, [&](int i) {
        double frac = golden_seq(i);
        double u = N.u_lo[0] + (N.u_hi[0] - N.u_lo[0]) * frac;
        int side = (i % 2 == 0) ? +1 : -1;
        NormalVector n = hyper ? normal_side(m, N, u1v(u), side)
                               : normal_side(m, N, u1v(u), +1);
        table.samples[static_cast<std::size_t>(i)] = cut_time(m, N, n, opts);
    });
    for (int i = 0; i < sample_count; ++i) {
        double r = table.samples[static_cast<std::size_t>(i)].rho;
        if (r < table.inj_plus) {
            table.inj_plus = r;
            table.argmin = i;
        }
    }
    return table;
}

std::vector<int> separating_points(const Metric& m, const SubmanifoldSpec& N,
                                   const std::vector<Vec>& queries, const CutOptions& opts) {
    std::vector<int> out;
    DistanceOptions d = opts.dist;
    d.want_minimizer = false;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        auto r = distance_to_submanifold(m, N, queries[i], d);
        if (r.multiplicity >= 2 || r.degenerate) out.push_back(static_cast<int>(i));
    }
    return out;
}

CutCloud cut_locus_sample(const Metric& m, const SubmanifoldSpec& N, int normal_count,
                          const CutOptions& opts, int workers) {
    CutCloud cloud;
    auto table = inj_radius_submanifold(m, N, normal_count, opts, workers);
    cloud.inj_estimate = table.inj_plus;
    DistanceOptions d = opts.dist;
    d.want_minimizer = false;
    d.multiplicity_resolve = false;
    for (auto& s : table.samples) {
        if (!s.cut_bracketed()) continue;
        double dn = distance_to_submanifold(m, N, s.cut_point, d).value;
        cloud.min_dist_to_N = std::min(cloud.min_dist_to_N, dn);
        cloud.samples.push_back(std::move(s));
    }
    return cloud;
}

TubularReport tubular_verify(const Metric& m, const SubmanifoldSpec& N, double epsilon,
                             int probe_count, const CutOptions& opts, int workers) {
    if (epsilon <= 0) fail(ErrorCode::InvalidArgument, "tubular_verify: epsilon must be positive");
    TubularReport rep;
    rep.epsilon = epsilon;

    CutOptions coarse = opts;
    coarse.classify = false;
    coarse.t_max = 4.0 * epsilon;
    rep.inj_plus = inj_radius_submanifold(m, N, 48, coarse, workers).inj_plus;

    // Sample the epsilon-cone neighborhood (u, side, t).
    const int Ku = 64, Kt = 10;
    struct Sample {
        double u;
        int side;
        double t;
        Vec image;
        double d_back;
    };
    std::vector<Sample> samples(static_cast<std::size_t>(Ku * Kt * 2));
    DistanceOptions dv = opts.dist;
    dv.want_minimizer = false;
    dv.multiplicity_resolve = false;
    parallel_for(Ku * Kt * 2, workers, [&](int idx) {
        int iu = idx / (Kt * 2);
        int rem = idx % (Kt * 2);
        int it = rem / 2;
        int side = (rem % 2 == 0) ? +1 : -1;
        double u = N.u_lo[0] + (N.u_hi[0] - N.u_lo[0]) * iu / Ku;
        double t = epsilon * (it + 1) / (Kt + 0.5);
        NormalVector n = normal_side(m, N, u1v(u), side);
        GeodesicRecord g = integrate_geodesic(m, n.n, t, opts.geo_tol);
        Sample s;
        s.u = u;
        s.side = side;
        s.t = t;
        s.image = g.points.back();
        s.d_back = (g.terminated_by == GeodesicRecord::Termination::time_end)
                       ? distance_to_submanifold(m, N, s.image, dv).value
                       : -1.0;
        samples[static_cast<std::size_t>(idx)] = std::move(s);
    });

    // A verified collision: the image point is reached by a strictly shorter
    // N-segment than its own preimage ray, so two distinct preimages map to
    // (nearly) the same point.
    const double tol_col = 50.0 * opts.tol_d;
    for (const auto& s : samples) {
        if (s.d_back < 0) continue;  // left the chart before t (no image)
        if (s.d_back < s.t - tol_col) {
            ++rep.collision_count;
            if (rep.collision_count == 1) {
                DistanceOptions df = opts.dist;
                df.want_minimizer = false;
                auto r = distance_to_submanifold(m, N, s.image, df);
                Vec a(3), b(3);
                a << s.u, static_cast<double>(s.side), s.t;
                b << (r.foot_param.size() ? r.foot_param[0] : 0.0), 0.0, r.value;
                rep.collision_pre_a = a;
                rep.collision_pre_b = b;
            }
        }
    }

    // Pairwise image separation among samples with distant preimages.
    const double du_far = 4.0 * (N.u_hi[0] - N.u_lo[0]) / Ku;
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const auto& a = samples[i];
            const auto& b = samples[j];
            if (a.d_back < 0 || b.d_back < 0) continue;
            double du = std::abs(a.u - b.u);
            if (!N.periodic.empty() && N.periodic[0])
                du = std::min(du, (N.u_hi[0] - N.u_lo[0]) - du);
            bool far = a.side != b.side || du > du_far || std::abs(a.t - b.t) > 0.3 * epsilon;
            if (!far) continue;
            rep.min_pairwise_image_separation =
                std::min(rep.min_pairwise_image_separation, (a.image - b.image).norm());
        }

    // Image characterization: points with d(N, x) < epsilon are reproduced by
    // exp^nu at their own foot data.
    Rng rng(20240 + probe_count);
    rep.probe_count = probe_count;
    DistanceOptions df = opts.dist;
    df.want_minimizer = false;
    int made = 0, guard = 0;
    while (made < probe_count && guard < 100 * probe_count) {
        ++guard;
        double u = rng.uniform(N.u_lo[0], N.u_hi[0]);
        double t = rng.uniform(1e-3, epsilon * 0.999);
        int side = rng.uniform(0, 1) ? +1 : -1;
        NormalVector n = normal_side(m, N, u1v(u), side);
        GeodesicRecord g = integrate_geodesic(m, n.n, t, opts.geo_tol);
        if (g.terminated_by != GeodesicRecord::Termination::time_end) continue;
        Vec x = g.points.back();
        auto r = distance_to_submanifold(m, N, x, df);
        if (r.value >= epsilon) continue;
        ++made;
        // reproduce x from its minimizing foot
        NormalVector nf = normal_side(m, N, r.foot_param, +1);
        double align = (r.initial_direction.size() > 0)
                           ? nf.n.components.dot(r.initial_direction)
                           : 1.0;
        if (align < 0) nf = normal_side(m, N, r.foot_param, -1);
        GeodesicRecord back = integrate_geodesic(m, nf.n, std::max(r.value, 1e-9), opts.geo_tol);
        if ((back.points.back() - x).norm() > 1e-4) ++rep.probe_failures;
    }
    return rep;
}

SingletonReport singleton_intersection_check(const Metric& m, const SubmanifoldSpec& N,
                                             const Vec& q, double tol, const CutOptions& opts) {
    DistanceOptions d = opts.dist;
    d.want_minimizer = false;
    d.cluster_value = tol;
    auto r = distance_to_submanifold(m, N, q, d);
    SingletonReport rep;
    rep.value = r.value;
    rep.witnesses = r.foot_points;
    if (rep.witnesses.empty()) rep.witnesses.push_back(N.point(r.foot_param));
    rep.unique = !r.degenerate && r.multiplicity <= 1;
    return rep;
}

namespace {

void require_euclidean(const Metric& m) {
    for (const Vec& v : {vec2(1, 0), vec2(0, 1), vec2(-0.6, 0.8)}) {
        if (std::abs(m.F(Vec(Vec::Zero(2)), v) - v.norm()) > 1e-12)
            fail(ErrorCode::NotPlanar, "sphere_condition: euclidean ambient required");
    }
}

}  // namespace

SphereConditionReport sphere_condition(const Metric& m, const SubmanifoldSpec& N, const Vec& u,
                                       double r, const CutOptions& opts) {
    require_euclidean(m);
    CutOptions o = opts;
    o.classify = false;
    if (o.t_max <= 0) o.t_max = std::max(4.0 * r, 2.0);
    SphereConditionReport rep;
    CutSample in = cut_time(m, N, normal_side(m, N, u, +1), o);
    CutSample out = cut_time(m, N, normal_side(m, N, u, -1), o);
    rep.rho_inward = in.rho;
    rep.rho_outward = out.rho;
    rep.interior = in.rho >= r;
    rep.exterior = out.rho >= r;
    return rep;
}

SphereConditionReport uniform_sphere_condition(const Metric& m, const SubmanifoldSpec& N,
                                               double r, int samples, const CutOptions& opts) {
    SphereConditionReport rep;
    rep.interior = rep.exterior = true;
    rep.rho_inward = rep.rho_outward = kInfSentinel;
    for (int i = 0; i < samples; ++i) {
        double u = N.u_lo[0] + (N.u_hi[0] - N.u_lo[0]) * golden_seq(i);
        auto s = sphere_condition(m, N, u1v(u), r, opts);
        rep.interior = rep.interior && s.interior;
        rep.exterior = rep.exterior && s.exterior;
        rep.rho_inward = std::min(rep.rho_inward, s.rho_inward);
        rep.rho_outward = std::min(rep.rho_outward, s.rho_outward);
    }
    return rep;
}

std::vector<Vec> front_cone_sample(const Metric& m, const SubmanifoldSpec& N, const Vec& u,
                                   double r, int dir_samples, const CutOptions& opts) {
    if (r <= 0) fail(ErrorCode::InvalidArgument, "front_cone_sample: r must be positive");
    std::vector<NormalVector> dirs;
    if (N.param_dim == N.ambient_dim - 1 && N.param_dim >= 1) {
        dirs.push_back(normal_side(m, N, u, +1));
        dirs.push_back(normal_side(m, N, u, -1));
    } else if (N.param_dim == 0) {
        Vec p = N.point(Vec(0));
        for (int k = 0; k < dir_samples; ++k) {
            double th = 2 * M_PI * k / dir_samples;
            Vec v = vec2(std::cos(th), std::sin(th));
            v /= m.F(p, v);
            NormalVector nv;
            nv.u = Vec(0);
            nv.n = TangentVector{p, v};
            nv.annihilator = Covector{p, v};
            dirs.push_back(nv);
        }
    } else {
        fail(ErrorCode::InvalidArgument, "front_cone_sample: unsupported codimension");
    }

    DistanceOptions dv = opts.dist;
    dv.want_minimizer = false;
    dv.multiplicity_resolve = false;
    std::vector<Vec> images;
    for (const auto& n : dirs) {
        GeodesicRecord g = integrate_geodesic(m, n.n, r, opts.geo_tol);
        if (g.terminated_by != GeodesicRecord::Termination::time_end)
            fail(ErrorCode::RadiusBeyondInjectivity, "front_cone_sample: geodesic left the chart");
        Vec x = g.points.back();
        double d = distance_to_submanifold(m, N, x, dv).value;
        if (std::abs(d - r) > 1e-4)
            fail(ErrorCode::RadiusBeyondInjectivity,
                 "front_cone_sample: level-set containment fails, r beyond the cut");
        images.push_back(x);
    }
    for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t j = i + 1; j < images.size(); ++j)
            if ((images[i] - images[j]).norm() < 1e-9)
                fail(ErrorCode::RadiusBeyondInjectivity,
                     "front_cone_sample: sampled images collide");
    return images;
}

}  // namespace finsler
