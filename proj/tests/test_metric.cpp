#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "finsler/metric.hpp"

using namespace finsler;

namespace {

// Independent nested-central-difference oracle for the Cartan tensor,
// straight from the definition C = (1/4) d^3(F^2) in the fiber. Kept separate
// from the library's implementation on purpose.
double cartan_fd_oracle(const Metric& m, const Vec& p, const Vec& v, const Vec& a, const Vec& b,
                        const Vec& c, double h = 1e-4) {
    auto f2 = [&](double s1, double s2, double s3) {
        double f = m.F(p, Vec(v + s1 * a + s2 * b + s3 * c));
        return f * f;
    };
    auto d1 = [&](double s2, double s3) { return (f2(h, s2, s3) - f2(-h, s2, s3)) / (2 * h); };
    auto d2 = [&](double s3) { return (d1(h, s3) - d1(-h, s3)) / (2 * h); };
    return 0.25 * (d2(h) - d2(-h)) / (2 * h);
}

// Strip analytic overrides so the finite-difference fallbacks get exercised.
Metric fd_only(const Metric& m) {
    auto base = std::make_shared<Metric>(m);
    Metric out(m.dim(), MetricKind::Custom, m.domain(),
               [base](const Vec& p, const Vec& v) { return base->F(p, v); });
    out.set_translation_invariant(m.translation_invariant());
    return out;
}

Metric quartic_custom() {
    // Smooth strongly convex perturbation of the Euclidean norm; exercises the
    // pure finite-difference path (no analytic overrides at all).
    return metrics::minkowski(2, [](const Vec&, const Vec& v) {
        double q = v[0] * v[0] * v[0] * v[0] + v[1] * v[1] * v[1] * v[1];
        double e = v.squaredNorm();
        return std::pow(e * e + 0.5 * q, 0.25);
    });
}

}  // namespace

TEST_CASE("norm evaluation on the built-in families") {
    Metric e2 = metrics::euclidean(2);
    CHECK(e2.F(vec2(0, 0), vec2(3, 4)) == doctest::Approx(5.0).epsilon(1e-12));

    Metric rd = metrics::randers(vec2(0.5, 0.0));
    CHECK(rd.F(vec2(0, 0), vec2(1, 0)) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(rd.F(vec2(0, 0), vec2(-1, 0)) == doctest::Approx(0.5).epsilon(1e-12));

    Metric sp = metrics::sphere_stereographic();
    CHECK(sp.F(vec2(0, 0), vec2(1, 0)) == doctest::Approx(2.0).epsilon(1e-12));

    CHECK_THROWS_AS(e2.F(vec2(0, 0), vec2(0, 0)), Error);
    CHECK_THROWS_AS(e2.F(vec2(100, 0), vec2(1, 0)), Error);
}

TEST_CASE("positive homogeneity") {
    Rng rng(11);
    std::vector<Metric> corpus;
    corpus.push_back(metrics::euclidean(2));
    corpus.push_back(metrics::randers(vec2(0.5, 0.0)));
    corpus.push_back(metrics::sphere_stereographic());
    corpus.push_back(metrics::hyperbolic_disk());
    corpus.push_back(quartic_custom());
    for (const auto& m : corpus) {
        for (int i = 0; i < 200; ++i) {
            Vec p = rng.vector(2, -0.6, 0.6);
            Vec v = rng.direction(2) * rng.uniform(0.2, 2.0);
            double lam = rng.uniform(0.1, 10.0);
            double lhs = m.F(p, Vec(lam * v));
            double rhs = lam * m.F(p, v);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(rhs));
        }
    }
}

TEST_CASE("fundamental tensor: anchors and the g_v(v,v) = F^2 identity") {
    Metric e2 = metrics::euclidean(2);
    Mat ge = e2.g(vec2(0.3, -0.2), vec2(1.7, 0.4));
    CHECK((ge - Mat::Identity(2, 2)).norm() <= 1e-12);

    Metric rd = metrics::randers(vec2(0.5, 0.0));
    Vec v10 = vec2(1, 0);
    Mat gr = rd.g(vec2(0, 0), v10);
    CHECK(v10.dot(gr * v10) == doctest::Approx(2.25).epsilon(1e-12));

    // Stereographic chart at the origin: conformal factor 2, so g = 4 I.
    Metric sp = metrics::sphere_stereographic();
    Mat gs = sp.g(vec2(0, 0), vec2(1, 0));
    CHECK((gs - 4.0 * Mat::Identity(2, 2)).norm() <= 1e-12);

    Rng rng(17);
    std::vector<Metric> corpus;
    corpus.push_back(e2);
    corpus.push_back(rd);
    corpus.push_back(sp);
    corpus.push_back(metrics::hyperbolic_disk());
    for (const auto& m : corpus) {
        Metric fd = fd_only(m);
        for (int i = 0; i < 250; ++i) {
            Vec p = rng.vector(2, -0.6, 0.6);
            Vec v = rng.direction(2);
            v *= rng.uniform(0.5, 2.0) / m.F(p, v);  // F-normalized scale
            double f = m.F(p, v);
            Mat g = m.g(p, v);
            CHECK(std::abs(v.dot(g * v) - f * f) <= 1e-9);
            Eigen::SelfAdjointEigenSolver<Mat> es(g);
            CHECK(es.eigenvalues().minCoeff() > 0.0);
            Mat gf = fd.g(p, v);
            CHECK(std::abs(v.dot(gf * v) - f * f) <= 1e-6);
        }
    }
}

TEST_CASE("cartan tensor identities") {
    Metric rd = metrics::randers(vec2(0.5, 0.0));
    Rng rng(23);

    SUBCASE("vanishes on Riemannian metrics") {
        Metric sp = metrics::sphere_stereographic();
        for (int i = 0; i < 50; ++i) {
            Vec p = rng.vector(2, -0.5, 0.5);
            Vec v = rng.direction(2);
            Vec a = rng.direction(2), b = rng.direction(2), c = rng.direction(2);
            CHECK(std::abs(sp.cartan({p, v}, a, b, c)) <= 1e-12);
        }
    }

    SUBCASE("first-slot contraction vanishes") {
        for (int i = 0; i < 100; ++i) {
            Vec p = vec2(0, 0);
            Vec v = rng.direction(2) * rng.uniform(0.3, 2.0);
            Vec u = rng.direction(2), w = rng.direction(2);
            CHECK(std::abs(rd.cartan({p, v}, v, u, w)) <= 1e-6 * u.norm() * w.norm());
        }
    }

    SUBCASE("analytic Randers value matches the FD oracle") {
        Vec p = vec2(0, 0), v = vec2(0, 1), e1 = vec2(1, 0);
        double analytic = rd.cartan({p, v}, e1, e1, e1);
        double oracle = cartan_fd_oracle(rd, p, v, e1, e1, e1);
        CHECK(analytic != 0.0);
        CHECK(analytic == doctest::Approx(oracle).epsilon(1e-5));
    }

    SUBCASE("total symmetry under all six permutations") {
        for (int i = 0; i < 40; ++i) {
            Vec p = vec2(0, 0);
            Vec v = rng.direction(2) * rng.uniform(0.5, 1.5);
            Vec a = rng.direction(2), b = rng.direction(2), c = rng.direction(2);
            double ref = rd.cartan({p, v}, a, b, c);
            CHECK(std::abs(rd.cartan({p, v}, a, c, b) - ref) <= 1e-8);
            CHECK(std::abs(rd.cartan({p, v}, b, a, c) - ref) <= 1e-8);
            CHECK(std::abs(rd.cartan({p, v}, b, c, a) - ref) <= 1e-8);
            CHECK(std::abs(rd.cartan({p, v}, c, a, b) - ref) <= 1e-8);
            CHECK(std::abs(rd.cartan({p, v}, c, b, a) - ref) <= 1e-8);
        }
    }

    SUBCASE("finite-difference fallback on a custom norm") {
        Metric cu = quartic_custom();
        for (int i = 0; i < 30; ++i) {
            Vec p = vec2(0, 0);
            Vec v = rng.direction(2) * rng.uniform(0.5, 2.0);
            Vec u = rng.direction(2), w = rng.direction(2);
            CHECK(std::abs(cu.cartan({p, v}, v, u, w)) <= 1e-6);
            double ref = cu.cartan({p, v}, u, w, v + u);
            double orc = cartan_fd_oracle(cu, p, v, u, w, Vec(v + u), 2e-3);
            CHECK(std::abs(ref - orc) <= 2e-4);
        }
    }
}

TEST_CASE("legendre transform and inverse") {
    Metric e2 = metrics::euclidean(2);
    Covector xi = e2.legendre({vec2(0, 0), vec2(3, 4)});
    CHECK((xi.components - vec2(3, 4)).norm() <= 1e-12);

    Metric rd = metrics::randers(vec2(0.5, 0.0));
    Covector xr = rd.legendre({vec2(0, 0), vec2(1, 0)});
    CHECK((xr.components - vec2(2.25, 0)).norm() <= 1e-10);

    TangentVector back = rd.legendre_inverse({vec2(0, 0), vec2(2.25, 0)});
    CHECK((back.components - vec2(1, 0)).norm() <= 1e-9);

    // L(0) = 0 extension.
    Covector z = e2.legendre({vec2(0, 0), vec2(0, 0)});
    CHECK(z.components.norm() == 0.0);
    CHECK_THROWS_AS(e2.legendre_inverse({vec2(0, 0), vec2(0, 0)}), Error);

    SUBCASE("roundtrip on random covectors, all families") {
        Rng rng(31);
        std::vector<Metric> corpus;
        corpus.push_back(e2);
        corpus.push_back(rd);
        corpus.push_back(metrics::sphere_stereographic());
        corpus.push_back(metrics::hyperbolic_disk());
        corpus.push_back(quartic_custom());
        for (std::size_t k = 0; k < corpus.size(); ++k) {
            const Metric& m = corpus[k];
            // The pure-FD custom norm is limited by stencil noise in g.
            double rel = m.has_analytic_tensors() ? 1e-8 : 1e-5;
            for (int i = 0; i < 200; ++i) {
                Vec p = rng.vector(2, -0.5, 0.5);
                Vec v = rng.direction(2) * rng.uniform(0.2, 3.0);
                Covector lv = m.legendre({p, v});
                TangentVector vb = m.legendre_inverse(lv);
                CHECK((vb.components - v).norm() <= rel * v.norm());
                // L(v)(v) = F(v)^2
                double f = m.F(p, v);
                CHECK(std::abs(lv.components.dot(v) - f * f) <= 1e-6 * f * f);
            }
        }
    }
}

TEST_CASE("reverse metric relations") {
    Metric e2 = metrics::euclidean(2);
    Metric e2r = reverse_metric(e2);
    CHECK(e2r.F(vec2(0, 0), vec2(3, 4)) == doctest::Approx(5.0));

    Metric rd = metrics::randers(vec2(0.5, 0.0));
    Metric rdr = reverse_metric(rd);
    CHECK(rdr.F(vec2(0, 0), vec2(1, 0)) == doctest::Approx(0.5).epsilon(1e-12));

    Rng rng(41);
    for (int i = 0; i < 500; ++i) {
        Vec p = vec2(0, 0);
        Vec v = rng.direction(2) * rng.uniform(0.3, 2.0);
        Mat lhs = rdr.g(p, v);
        Mat rhs = rd.g(p, Vec(-v));
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
        Vec a = rng.direction(2), b = rng.direction(2), c = rng.direction(2);
        double cl = rdr.cartan({p, v}, a, b, c);
        double cr = -rd.cartan({p, Vec(-v)}, a, b, c);
        CHECK(std::abs(cl - cr) <= 1e-9);
    }

    // Double reversal is the identity.
    Metric rdrr = reverse_metric(rdr);
    for (int i = 0; i < 20; ++i) {
        Vec v = rng.direction(2) * rng.uniform(0.3, 2.0);
        CHECK(rdrr.F(vec2(0, 0), v) == doctest::Approx(rd.F(vec2(0, 0), v)).epsilon(1e-12));
    }
}
