#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "finsler/distance.hpp"

using namespace finsler;

namespace {

Vec u1(double x) { return Vec::Constant(1, x); }

// Dense-scan oracle for d(N, q) on a 1-parameter submanifold: brute force
// over a fine grid, no refinement machinery shared with the library.
double scan_oracle(const Metric& m, const SubmanifoldSpec& N, const Vec& q, int K = 20000) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < K; ++i) {
        double u = N.u_lo[0] + N.period(0) * i / K;
        auto cf = m.closed_form_distance(N.point(u1(u)), q);
        best = std::min(best, *cf);
    }
    return best;
}

}  // namespace

TEST_CASE("point distances: closed forms and asymmetry") {
    Metric e2 = metrics::euclidean(2);
    auto r = distance_point(e2, vec2(0, 0), vec2(3, 4));
    CHECK(r.value == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(r.method == DistanceResult::Method::closed_form);
    CHECK(std::abs(e2.F(r.minimizer.points.front(), r.minimizer.velocities.front()) - 1.0) <=
          1e-12);

    Metric rd = metrics::randers(vec2(0.5, 0.0));
    CHECK(distance_point(rd, vec2(0, 0), vec2(1, 0)).value == doctest::Approx(1.5));
    CHECK(distance_point(rd, vec2(1, 0), vec2(0, 0)).value == doctest::Approx(0.5));

    Metric sp = metrics::sphere_stereographic();
    // chart point at spherical distance 1 from the origin along the x-axis:
    // s = tan((d - pi)/2 + pi/2) measured from the south pole
    double target = std::tan(1.0 / 2.0);  // chart radius of spherical distance 1
    auto rs = distance_point(sp, vec2(0, 0), vec2(target, 0));
    CHECK(rs.value == doctest::Approx(1.0).epsilon(1e-10));
    CHECK((rs.minimizer.points.back() - vec2(target, 0)).norm() <= 1e-7);
}

TEST_CASE("shooting agrees with closed forms") {
    DistanceOptions shoot;
    shoot.force = DistanceOptions::Force::shooting;
    Rng rng(3);

    SUBCASE("flat randers") {
        Metric rd = metrics::randers(vec2(0.5, 0.0));
        for (int i = 0; i < 10; ++i) {
            Vec p = rng.vector(2, -1, 1), q = rng.vector(2, -1, 1);
            if ((q - p).norm() < 0.2) continue;
            auto cf = distance_point(rd, p, q);
            auto sh = distance_point(rd, p, q, shoot);
            CHECK(sh.method == DistanceResult::Method::shooting);
            CHECK(sh.value == doctest::Approx(cf.value).epsilon(1e-7));
        }
    }

    SUBCASE("sphere and hyperbolic charts") {
        std::vector<Metric> ms;
        ms.push_back(metrics::sphere_stereographic());
        ms.push_back(metrics::hyperbolic_disk());
        for (const auto& m : ms) {
            for (int i = 0; i < 6; ++i) {
                Vec p = rng.vector(2, -0.45, 0.45), q = rng.vector(2, -0.45, 0.45);
                if ((q - p).norm() < 0.3) continue;
                auto cf = distance_point(m, p, q);
                auto sh = distance_point(m, p, q, shoot);
                CHECK(sh.value == doctest::Approx(cf.value).epsilon(1e-6));
                // unit-speed minimizer, endpoint within tolerance
                CHECK(std::abs(m.F(p, sh.initial_direction) - 1.0) <= 1e-6);
                CHECK((sh.minimizer.points.back() - q).norm() <= 1e-6);
            }
        }
    }

    SUBCASE("reverse-metric duality d_m(p,q) = d_rev(q,p)") {
        Metric sp = metrics::sphere_stereographic();
        Metric spr = reverse_metric(sp);
        for (int i = 0; i < 4; ++i) {
            Vec p = rng.vector(2, -0.4, 0.4), q = rng.vector(2, -0.4, 0.4);
            if ((q - p).norm() < 0.3) continue;
            auto a = distance_point(sp, p, q, shoot);
            auto b = distance_point(spr, q, p, shoot);
            CHECK(std::abs(a.value - b.value) <= 1e-6);
        }
    }
}

TEST_CASE("grid oracle") {
    Metric e2 = metrics::euclidean(2);
    GridOracle g(e2, vec2(-1.6, -1.6), vec2(1.6, 1.6), 0.04);
    CHECK(g.distance(vec2(0, 0), vec2(1, 1)) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(0.03));

    Metric rd = metrics::randers(vec2(0.5, 0.0));
    GridOracle gr(rd, vec2(-1.6, -1.6), vec2(1.6, 1.6), 0.04);
    CHECK(gr.distance(vec2(0, 0), vec2(1, 0)) == doctest::Approx(1.5).epsilon(0.03));
    CHECK(gr.distance(vec2(1, 0), vec2(0, 0)) == doctest::Approx(0.5).epsilon(0.03));

    SUBCASE("triangle property on random triples") {
        Rng rng(11);
        for (int i = 0; i < 5; ++i) {
            Vec p = rng.vector(2, -1, 1), q = rng.vector(2, -1, 1), r = rng.vector(2, -1, 1);
            double pq = gr.distance(p, q), pr = gr.distance(p, r), rq = gr.distance(r, q);
            CHECK(pq <= pr + rq + 1e-9);
        }
    }

    SUBCASE("out-of-box endpoints are rejected") {
        CHECK_THROWS_AS(g.distance(vec2(0, 0), vec2(5, 0)), Error);
    }

    SUBCASE("shooting within 3% of the oracle") {
        DistanceOptions shoot;
        shoot.force = DistanceOptions::Force::shooting;
        Metric sp = metrics::sphere_stereographic();
        GridOracle gs(sp, vec2(-1.6, -1.6), vec2(1.6, 1.6), 0.04);
        Rng rng(13);
        for (int i = 0; i < 4; ++i) {
            Vec p = rng.vector(2, -1, 1), q = rng.vector(2, -1, 1);
            if ((q - p).norm() < 0.5) continue;
            double ds = distance_point(sp, p, q, shoot).value;
            double dg = gs.distance(p, q);
            CHECK(std::abs(ds - dg) <= 0.03 * ds);
        }
    }
}

TEST_CASE("distance to a submanifold") {
    Metric e2 = metrics::euclidean(2);
    auto circ = submanifolds::circle(1.0);

    SUBCASE("circle center: degenerate all-directions minimum") {
        auto r = distance_to_submanifold(e2, circ, vec2(0, 0));
        CHECK(r.value == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(r.degenerate);
    }

    SUBCASE("interior point with a unique foot") {
        auto r = distance_to_submanifold(e2, circ, vec2(0.5, 0));
        CHECK(r.value == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(r.multiplicity == 1);
        CHECK_FALSE(r.degenerate);
        CHECK((circ.point(r.foot_param) - vec2(1, 0)).norm() <= 1e-6);
        CHECK(r.normal_residual <= 1e-6);
        CHECK((r.minimizer.points.back() - vec2(0.5, 0)).norm() <= 1e-9);
    }

    SUBCASE("the C1 curve splits the distance at the symmetry axis") {
        auto n = submanifolds::x32_curve();
        auto r = distance_to_submanifold(e2, n, vec2(0, 0.1));
        CHECK(r.multiplicity == 2);
        CHECK(r.value < 0.1);
        CHECK(r.value == doctest::Approx(scan_oracle(e2, n, vec2(0, 0.1))).epsilon(1e-6));
        CHECK(std::abs(r.foot_param[0]) > 1e-3);  // feet sit off the singular point
        CHECK(r.normal_residual <= 1e-6);
    }

    SUBCASE("randers circle distance matches a dense scan") {
        Metric rd = metrics::randers(vec2(0.5, 0.0));
        Rng rng(17);
        for (int i = 0; i < 6; ++i) {
            Vec q = rng.vector(2, -0.6, 0.6);
            auto r = distance_to_submanifold(rd, circ, q);
            CHECK(r.value == doctest::Approx(scan_oracle(rd, circ, q)).epsilon(1e-6));
            CHECK(r.normal_residual <= 1e-6);
        }
    }

    SUBCASE("sphere equator from a meridian point") {
        Metric sp = metrics::sphere_stereographic();
        auto r = distance_to_submanifold(sp, circ, vec2(0.3, 0));
        // chart radius 0.3 is spherical distance pi/2 - 2*atan(0.3) from the equator
        double want = M_PI / 2 - 2 * std::atan(0.3);
        CHECK(r.value == doctest::Approx(want).epsilon(1e-8));
    }
}
