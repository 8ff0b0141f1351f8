#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "finsler/geodesic.hpp"

using namespace finsler;

namespace {

// Independent spray oracle: evaluates
//   G^i = 1/4 g^{il} [ y^k d^2(F^2)/dx^k dy^l - d(F^2)/dx^l ]
// with raw finite-difference stencils on F^2 only (no shared code with the
// library path, which goes through analytic dg/dx).
Vec spray_oracle(const Metric& m, const Vec& x, const Vec& y) {
    const int d = m.dim();
    auto f2 = [&](const Vec& p, const Vec& v) {
        double f = m.F(p, v);
        return f * f;
    };
    const double h = 1e-4;
    Vec rhs(d);
    for (int l = 0; l < d; ++l) {
        Vec el = Vec::Zero(d);
        el[l] = h;
        double mixed = 0.0;
        for (int k = 0; k < d; ++k) {
            Vec ek = Vec::Zero(d);
            ek[k] = h;
            double m2 = (f2(x + ek, y + el) - f2(x + ek, y - el) - f2(x - ek, y + el) +
                         f2(x - ek, y - el)) /
                        (4 * h * h);
            mixed += y[k] * m2;
        }
        double dx = (f2(x + el, y) - f2(x - el, y)) / (2 * h);
        rhs[l] = mixed - dx;
    }
    return 0.25 * m.g(x, y).ldlt().solve(rhs);
}

// Levi-Civita Christoffels of the conformal metric phi^2 delta, sigma = log(phi):
//   Gamma^i_{jk} = delta^i_j s_k + delta^i_k s_j - delta_{jk} s^i.
std::vector<Mat> conformal_christoffel_oracle(const Vec& sigma_grad) {
    int d = static_cast<int>(sigma_grad.size());
    std::vector<Mat> G(d, Mat::Zero(d, d));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k) {
                double v = 0.0;
                if (i == j) v += sigma_grad[k];
                if (i == k) v += sigma_grad[j];
                if (j == k) v -= sigma_grad[i];
                G[i](j, k) = v;
            }
    return G;
}

// Gauss curvature of phi^2 delta in 2d: K = -Laplacian(log phi) / phi^2,
// evaluated by finite differences of phi.
double gauss_curvature_oracle(const std::function<double(const Vec&)>& phi, const Vec& p) {
    const double h = 1e-4;
    auto lp = [&](const Vec& q) { return std::log(phi(q)); };
    double lap = 0.0;
    for (int i = 0; i < 2; ++i) {
        Vec e = Vec::Zero(2);
        e[i] = h;
        lap += (lp(p + e) - 2 * lp(p) + lp(p - e)) / (h * h);
    }
    double f = phi(p);
    return -lap / (f * f);
}

double speed_drift(const Metric& m, const GeodesicRecord& rec) {
    double f0 = m.F(rec.points.front(), rec.velocities.front());
    double worst = 0.0;
    for (std::size_t i = 0; i < rec.times.size(); ++i)
        worst = std::max(worst, std::abs(m.F(rec.points[i], rec.velocities[i]) - f0));
    return worst;
}

Vec sphere_point(const Vec& x) {
    Vec X(3);
    double r2 = x.squaredNorm();
    X << 2 * x[0], 2 * x[1], r2 - 1;
    return X / (1 + r2);
}

}  // namespace

TEST_CASE("spray coefficients") {
    Metric e2 = metrics::euclidean(2);
    Metric rd = metrics::randers(vec2(0.5, 0.0));
    Metric sp = metrics::sphere_stereographic();
    Rng rng(7);

    for (int i = 0; i < 20; ++i) {
        Vec p = rng.vector(2, -1, 1), v = rng.direction(2);
        CHECK(spray_coefficients(e2, {p, v}).norm() == 0.0);
        CHECK(spray_coefficients(rd, {p, v}).norm() == 0.0);
    }

    CHECK(spray_coefficients(sp, {vec2(0, 0), vec2(0.7, -0.2)}).norm() <= 1e-12);

    SUBCASE("matches the dual-stencil oracle off-center") {
        Vec p = vec2(0.3, 0.0), v = vec2(0, 1);
        Vec lib = spray_coefficients(sp, {p, v});
        Vec orc = spray_oracle(sp, p, v);
        CHECK((lib - orc).norm() <= 1e-6 * std::max(1.0, lib.norm()));
        CHECK(lib.norm() > 1e-3);  // genuinely nonzero there
    }

    SUBCASE("2-homogeneity in y") {
        for (int i = 0; i < 25; ++i) {
            Vec p = rng.vector(2, -0.8, 0.8), v = rng.direction(2) * rng.uniform(0.5, 1.5);
            for (double lam : {0.5, 2.0}) {
                Vec a = spray_coefficients(sp, {p, Vec(lam * v)});
                Vec b = lam * lam * spray_coefficients(sp, {p, v});
                CHECK((a - b).norm() <= 1e-8 * std::max(1.0, b.norm()));
            }
        }
    }
}

TEST_CASE("geodesic integration") {
    Metric e2 = metrics::euclidean(2);
    Metric rd = metrics::randers(vec2(0.5, 0.0));
    Metric sp = metrics::sphere_stereographic();

    SUBCASE("flat metrics run straight") {
        auto rec = integrate_geodesic(e2, {vec2(0, 0), vec2(1, 0)}, 2.0);
        CHECK(rec.terminated_by == GeodesicRecord::Termination::time_end);
        CHECK((rec.points.back() - vec2(2, 0)).norm() <= 1e-10);

        auto rr = integrate_geodesic(rd, {vec2(0, 0), vec2(0, 1)}, 1.5);
        CHECK((rr.points.back() - vec2(0, 1.5)).norm() <= 1e-10);
    }

    SUBCASE("stereographic great circle against the closed form") {
        // Unit F-speed start at the chart origin; the image on the sphere is
        // gamma(t) = (sin t, 0, -cos t).
        auto rec = integrate_geodesic(sp, {vec2(0, 0), vec2(0.5, 0)}, 3.0, 1e-11);
        for (double t : {0.3, 0.9, 1.57, 2.2, 2.9}) {
            Vec X = sphere_point(rec.point_at(t));
            Vec want(3);
            want << std::sin(t), 0.0, -std::cos(t);
            CHECK((X - want).norm() <= 1e-7);
        }
        CHECK(speed_drift(sp, rec) <= 1e-8);
    }

    SUBCASE("termination near the excluded point is a chart exit") {
        auto rec = integrate_geodesic(sp, {vec2(0, 0), vec2(0.5, 0)}, 3.3, 1e-11);
        CHECK(rec.terminated_by == GeodesicRecord::Termination::chart_exit);
        CHECK(rec.t_end() > 3.1);  // exits just shy of t = pi
    }

    SUBCASE("speed conservation on random starts") {
        Rng rng(19);
        std::vector<Metric> corpus;
        corpus.push_back(e2);
        corpus.push_back(rd);
        corpus.push_back(sp);
        corpus.push_back(metrics::hyperbolic_disk());
        for (const auto& m : corpus) {
            int done = 0;
            while (done < 15) {
                Vec p = rng.vector(2, -0.4, 0.4);
                Vec v = rng.direction(2);
                v /= m.F(p, v);
                auto rec = integrate_geodesic(m, {p, v}, 5.0);
                if (rec.terminated_by != GeodesicRecord::Termination::time_end) continue;
                CHECK(speed_drift(m, rec) <= 1e-6);
                ++done;
            }
        }
    }
}

TEST_CASE("exponential map") {
    Metric e2 = metrics::euclidean(2);
    CHECK((exp_map(e2, {vec2(1, 1), vec2(0, 0)}) - vec2(1, 1)).norm() == 0.0);
    CHECK((exp_map(e2, {vec2(1, 1), vec2(2, 0)}) - vec2(3, 1)).norm() <= 1e-8);

    Metric sp = metrics::sphere_stereographic();
    // F-length pi/2 from the origin lands at spherical distance pi/2.
    Vec v = vec2((3.14159265358979 / 2) / 2.0, 0);
    Vec q = exp_map(sp, {vec2(0, 0), v});
    Vec X = sphere_point(q), P = sphere_point(vec2(0, 0));
    double ang = std::acos(std::clamp(X.dot(P), -1.0, 1.0));
    CHECK(ang == doctest::Approx(3.14159265358979 / 2).epsilon(1e-7));
}

TEST_CASE("chern connection coefficients") {
    Metric e2 = metrics::euclidean(2);
    Metric rd = metrics::randers(vec2(0.5, 0.0));
    Rng rng(29);

    for (int i = 0; i < 10; ++i) {
        Vec p = rng.vector(2, -1, 1), v = rng.direction(2);
        for (const auto& G : chern_coefficients(e2, {p, v})) CHECK(G.norm() == 0.0);
        for (const auto& G : chern_coefficients(rd, {p, v})) CHECK(G.norm() == 0.0);
    }

    SUBCASE("conformal metrics reproduce Levi-Civita") {
        Metric sp = metrics::sphere_stereographic();
        for (int i = 0; i < 10; ++i) {
            Vec p = rng.vector(2, -0.8, 0.8), v = rng.direction(2);
            auto lib = chern_coefficients(sp, {p, v});
            double phi = 2.0 / (1.0 + p.squaredNorm());
            Vec sigma = -phi * p;  // grad log(phi) for the sphere chart
            auto orc = conformal_christoffel_oracle(sigma);
            for (int l = 0; l < 2; ++l) CHECK((lib[l] - orc[l]).cwiseAbs().maxCoeff() <= 1e-6);
            // torsion symmetry is exact by construction
            for (int l = 0; l < 2; ++l)
                CHECK((lib[l] - lib[l].transpose()).cwiseAbs().maxCoeff() == 0.0);
        }
    }

    SUBCASE("almost metric compatibility on random smooth fields") {
        Metric sp = metrics::sphere_stereographic();
        auto field = [&](double a, double b, double c, double d) {
            return [=](const Vec& x) { return vec2(a + c * std::sin(x[1]), b + d * x[0]); };
        };
        for (int trial = 0; trial < 8; ++trial) {
            auto V = field(1 + 0.1 * trial, 0.4, 0.3, 0.2);
            auto X = field(0.5, -0.3, 0.1, 0.4);
            auto Y = field(-0.2, 0.8, 0.25, -0.15);
            auto Z = field(0.9, 0.1, -0.2, 0.3);
            Vec p = rng.vector(2, -0.5, 0.5);
            const double h = 1e-5;
            auto gYZ = [&](const Vec& x) { return Y(x).dot(sp.g(x, V(x)) * Z(x)); };
            Vec xp = p + h * X(p), xm = p - h * X(p);
            double lhs = (gYZ(xp) - gYZ(xm)) / (2 * h);

            auto Gamma = chern_coefficients(sp, {p, V(p)});
            auto nabla = [&](const std::function<Vec(const Vec&)>& W) {
                Vec dW = (W(xp) - W(xm)) / (2 * h);
                Vec corr(2);
                for (int l = 0; l < 2; ++l) corr[l] = X(p).dot(Gamma[l] * W(p));
                return Vec(dW + corr);
            };
            Mat gv = sp.g(p, V(p));
            double rhs = nabla(Y).dot(gv * Z(p)) + Y(p).dot(gv * nabla(Z)) +
                         2.0 * sp.cartan({p, V(p)}, nabla(V), Y(p), Z(p));
            CHECK(std::abs(lhs - rhs) <= 1e-5);
        }
    }
}

TEST_CASE("covariant derivative along curves") {
    Metric e2 = metrics::euclidean(2);
    auto line = [](double t) { return vec2(t, 0.3 * t); };
    auto constX = [](double) { return vec2(0.7, -0.4); };
    CHECK(covariant_derivative(e2, line, line, constX, 0.5).norm() <= 1e-9);

    SUBCASE("metric-compatibility identity along a sphere geodesic") {
        Metric sp = metrics::sphere_stereographic();
        auto rec = integrate_geodesic(sp, {vec2(0.1, -0.2), vec2(0.3, 0.35)}, 2.0);
        auto curve = [&](double t) { return rec.point_at(t); };
        auto W = [&](double t) { return rec.velocity_at(t); };
        auto X = [&](double t) { return vec2(std::cos(t), 0.4 * t); };
        auto Y = [&](double t) { return vec2(0.2 * t * t - 1.0, std::sin(0.7 * t)); };
        for (double t : {0.4, 1.0, 1.6}) {
            const double h = 1e-5;
            auto gXY = [&](double s) { return X(s).dot(sp.g(curve(s), W(s)) * Y(s)); };
            double lhs = (gXY(t + h) - gXY(t - h)) / (2 * h);
            Mat gv = sp.g(curve(t), W(t));
            Vec DX = covariant_derivative(sp, curve, W, X, t);
            Vec DY = covariant_derivative(sp, curve, W, Y, t);
            Vec DW = covariant_derivative(sp, curve, W, W, t);
            double rhs = DX.dot(gv * Y(t)) + X(t).dot(gv * DY) +
                         2.0 * sp.cartan({curve(t), W(t)}, DW, X(t), Y(t));
            CHECK(std::abs(lhs - rhs) <= 1e-6);
        }
    }
}

TEST_CASE("curvature tensor and flag curvature") {
    Metric e2 = metrics::euclidean(2);
    Metric rd = metrics::randers(vec2(0.5, 0.0));
    Metric sp = metrics::sphere_stereographic();
    Metric hy = metrics::hyperbolic_disk();
    Rng rng(37);

    for (int i = 0; i < 5; ++i) {
        Vec p = rng.vector(2, -1, 1), v = rng.direction(2);
        Vec X = rng.direction(2), Y = rng.direction(2), Z = rng.direction(2);
        CHECK(curvature_tensor(e2, {p, v}, X, Y, Z).norm() == 0.0);
        CHECK(curvature_tensor(rd, {p, v}, X, Y, Z).norm() == 0.0);
        CHECK(std::abs(flag_curvature(e2, {p, v}, Vec(v + rng.direction(2)))) <= 1e-6);
    }

    SUBCASE("antisymmetry in the first pair") {
        for (int i = 0; i < 10; ++i) {
            Vec p = rng.vector(2, -0.7, 0.7), v = rng.direction(2);
            Vec X = rng.direction(2), Y = rng.direction(2), Z = rng.direction(2);
            Vec a = curvature_tensor(sp, {p, v}, X, Y, Z);
            Vec b = curvature_tensor(sp, {p, v}, Y, X, Z);
            CHECK((a + b).norm() <= 1e-8 * std::max(1.0, a.norm()));
        }
    }

    SUBCASE("constant-curvature anchors") {
        auto phi_sp = [](const Vec& p) { return 2.0 / (1.0 + p.squaredNorm()); };
        auto phi_hy = [](const Vec& p) { return 2.0 / (1.0 - p.squaredNorm()); };
        for (int i = 0; i < 15; ++i) {
            Vec p = rng.vector(2, -0.6, 0.6);
            Vec v = rng.direction(2), w = rng.direction(2);
            if (std::abs(v.dot(w)) > 0.95) continue;
            double ks = flag_curvature(sp, {p, v}, w);
            CHECK(ks == doctest::Approx(1.0).epsilon(1e-3));
            CHECK(gauss_curvature_oracle(phi_sp, p) == doctest::Approx(1.0).epsilon(1e-5));
            double kh = flag_curvature(hy, {p, v}, w);
            CHECK(kh == doctest::Approx(-1.0).epsilon(1e-3));
            CHECK(gauss_curvature_oracle(phi_hy, p) == doctest::Approx(-1.0).epsilon(1e-5));
        }
        // invariance under w -> w + cv and w -> lambda w
        Vec p = vec2(0.2, -0.1), v = vec2(1, 0.2), w = vec2(0.1, 1);
        double k0 = flag_curvature(sp, {p, v}, w);
        CHECK(flag_curvature(sp, {p, v}, Vec(w + 0.7 * v)) == doctest::Approx(k0).epsilon(1e-6));
        CHECK(flag_curvature(sp, {p, v}, Vec(3.0 * w)) == doctest::Approx(k0).epsilon(1e-6));
        CHECK_THROWS_AS(flag_curvature(sp, {p, v}, Vec(2.0 * v)), Error);
    }
}

TEST_CASE("jacobi fields") {
    Metric e2 = metrics::euclidean(2);

    SUBCASE("flat: J(t) = t e2") {
        auto rec = integrate_geodesic(e2, {vec2(0, 0), vec2(1, 0)}, 3.0);
        auto jr = jacobi_field(e2, rec, vec2(0, 0), vec2(0, 1));
        for (double t : {0.5, 1.0, 2.5}) CHECK((jr.J_at(t) - vec2(0, t)).norm() <= 1e-9);
    }

    SUBCASE("sphere: |J|_g = sin t; hyperbolic: sinh t") {
        struct Case {
            Metric m;
            std::function<double(double)> profile;
            double tmax;
        };
        std::vector<Case> cases;
        cases.push_back({metrics::sphere_stereographic(), [](double t) { return std::sin(t); }, 2.8});
        cases.push_back({metrics::hyperbolic_disk(), [](double t) { return std::sinh(t); }, 2.0});
        Rng rng(43);
        for (auto& cs : cases) {
            Vec p = vec2(0.05, -0.1);
            Vec v = rng.direction(2);
            v /= cs.m.F(p, v);
            Mat gv = cs.m.g(p, v);
            // g-orthonormal transverse direction
            Vec e = rng.direction(2);
            Vec w = e - (v.dot(gv * e) / v.dot(gv * v)) * v;
            w /= std::sqrt(w.dot(gv * w));
            auto rec = integrate_geodesic(cs.m, {p, v}, cs.tmax);
            auto jr = jacobi_field(cs.m, rec, Vec(Vec::Zero(2)), w);
            for (double t : {0.4, 1.0, 1.7}) {
                Vec J = jr.J_at(t);
                Vec x = jr.along.point_at(t), u = jr.along.velocity_at(t);
                double norm = std::sqrt(J.dot(cs.m.g(x, u) * J));
                CHECK(norm == doctest::Approx(cs.profile(t)).epsilon(2e-3));
            }
        }
    }

    SUBCASE("matches a central-difference geodesic variation") {
        Metric sp = metrics::sphere_stereographic();
        Vec p = vec2(0.15, 0.1);
        Vec v = vec2(0.4, -0.3);
        v /= sp.F(p, v);
        Vec J0 = vec2(0.3, 0.5), DJ0 = vec2(-0.2, 0.4);
        auto rec = integrate_geodesic(sp, {p, v}, 2.0, 1e-10);
        auto jr = jacobi_field(sp, rec, J0, DJ0, 1e-10);

        auto Gamma = chern_coefficients(sp, {p, v});
        Vec corr(2);
        for (int l = 0; l < 2; ++l) corr[l] = J0.dot(Gamma[l] * v);
        Vec dV = DJ0 - corr;
        const double h = 1e-4;
        auto lam = [&](double s, double t) {
            Vec ps = p + s * J0;
            Vec vs = v + s * dV;
            return integrate_geodesic(sp, {ps, vs}, t + 0.01, 1e-10).point_at(t);
        };
        for (double t : {0.3, 0.8, 1.4, 1.9}) {
            Vec num = (lam(h, t) - lam(-h, t)) / (2 * h);
            CHECK((jr.J_at(t) - num).norm() <= 1e-4);
        }
    }
}
