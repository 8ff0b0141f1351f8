#include "finsler/metric.hpp"

#include <cmath>

namespace finsler {

namespace {

// Finite-difference steps. First-order x-derivatives use h1, v-Hessians of
// F^2 use h2; the third-order (Cartan) and mixed x/v stencils need a larger
// step because roundoff grows like eps / h^3.
constexpr double kH1 = 1e-5;
constexpr double kH2 = 1e-4;
constexpr double kH3 = 1.5e-3;

double vscale(const Vec& v) { return std::max(1.0, v.norm()); }
double xscale(const Vec& p) { return std::max(1.0, p.norm()); }

}  // namespace

std::string to_string(MetricKind k) {
    switch (k) {
        case MetricKind::RiemannianConformal: return "riemannian-conformal";
        case MetricKind::Randers: return "randers";
        case MetricKind::Minkowski: return "minkowski";
        case MetricKind::Custom: return "custom";
    }
    return "?";
}

Metric::Metric(int dim, MetricKind kind, ChartDomain domain, ScalarFn F)
    : dim_(dim), kind_(kind), domain_(std::move(domain)), F_fn_(std::move(F)) {}

void Metric::require_in_domain(const Vec& p) const {
    if (!in_domain(p)) fail(ErrorCode::OutsideChart, "point outside chart domain");
}

void Metric::require_nonzero(const Vec& v) const {
    if (v.norm() < 1e-10) fail(ErrorCode::ZeroVector, "tensor undefined for the zero vector");
}

double Metric::F(const TangentVector& v) const {
    require_in_domain(v.point);
    require_nonzero(v.components);
    return F_fn_(v.point, v.components);
}

Mat Metric::g_fd(const Vec& p, const Vec& v) const {
    const double h = kH2 * vscale(v);
    auto f2 = [&](const Vec& w) {
        double f = F_fn_(p, w);
        return f * f;
    };
    Mat g(dim_, dim_);
    const double f0 = f2(v);
    for (int i = 0; i < dim_; ++i) {
        Vec ei = Vec::Zero(dim_);
        ei[i] = h;
        g(i, i) = 0.5 * (f2(v + ei) - 2.0 * f0 + f2(v - ei)) / (h * h);
        for (int j = i + 1; j < dim_; ++j) {
            Vec ej = Vec::Zero(dim_);
            ej[j] = h;
            double c = (f2(v + ei + ej) - f2(v + ei - ej) - f2(v - ei + ej) + f2(v - ei - ej)) /
                       (4.0 * h * h);
            g(i, j) = g(j, i) = 0.5 * c;
        }
    }
    return g;
}

Mat Metric::g(const Vec& p, const Vec& v) const {
    if (v.norm() < 1e-10) fail(ErrorCode::ZeroVector, "fundamental tensor undefined at 0");
    if (g_fn_) return g_fn_(p, v);
    return g_fd(p, v);
}

SymmetricBilinear Metric::fundamental_tensor(const TangentVector& v) const {
    require_in_domain(v.point);
    require_nonzero(v.components);
    return SymmetricBilinear{v.point, v.components, g(v.point, v.components)};
}

std::vector<Mat> Metric::cartan_full(const Vec& p, const Vec& v) const {
    if (v.norm() < 1e-10) fail(ErrorCode::ZeroVector, "Cartan tensor undefined at 0");
    std::vector<Mat> C(static_cast<std::size_t>(dim_));
    if (cartan_fn_) {
        for (int k = 0; k < dim_; ++k) {
            Mat Ck(dim_, dim_);
            Vec ek = Vec::Zero(dim_);
            ek[k] = 1.0;
            for (int i = 0; i < dim_; ++i) {
                Vec ei = Vec::Zero(dim_);
                ei[i] = 1.0;
                for (int j = i; j < dim_; ++j) {
                    Vec ej = Vec::Zero(dim_);
                    ej[j] = 1.0;
                    Ck(i, j) = Ck(j, i) = cartan_fn_(p, v, ei, ej, ek);
                }
            }
            C[static_cast<std::size_t>(k)] = Ck;
        }
        return C;
    }
    // C_ijk = 1/2 d(g_ij)/dv^k, nested central differences at a common step.
    const double h = kH3 * vscale(v);
    for (int k = 0; k < dim_; ++k) {
        Vec ek = Vec::Zero(dim_);
        ek[k] = h;
        C[static_cast<std::size_t>(k)] = 0.5 * (g_fd(p, v + ek) - g_fd(p, v - ek)) / (2.0 * h);
    }
    // Enforce the structural identity C_v(v, ., .) = 0 exactly by projecting
    // every slot g_v-orthogonally to v; this is the identity map on the true
    // tensor and removes the dominant FD noise component.
    Mat gv = g(p, v);
    Vec gvv = gv * v;
    double f2 = v.dot(gvv);
    Mat P = Mat::Identity(dim_, dim_) - (v * gvv.transpose()) / f2;
    std::vector<Mat> Cp(static_cast<std::size_t>(dim_), Mat::Zero(dim_, dim_));
    for (int k = 0; k < dim_; ++k)
        for (int c = 0; c < dim_; ++c)
            Cp[static_cast<std::size_t>(k)] +=
                P.transpose() * C[static_cast<std::size_t>(c)] * P * P(c, k);
    return Cp;
}

double Metric::cartan(const TangentVector& v, const Vec& v1, const Vec& v2, const Vec& v3) const {
    require_in_domain(v.point);
    require_nonzero(v.components);
    if (cartan_fn_) return cartan_fn_(v.point, v.components, v1, v2, v3);
    auto C = cartan_full(v.point, v.components);
    double s = 0.0;
    for (int k = 0; k < dim_; ++k) s += v3[k] * v1.dot(C[static_cast<std::size_t>(k)] * v2);
    return s;
}

Covector Metric::legendre(const TangentVector& v) const {
    require_in_domain(v.point);
    if (v.components.norm() < 1e-300)
        return Covector{v.point, Vec::Zero(dim_)};  // L(0) = 0 extension
    Mat gv = g(v.point, v.components);
    return Covector{v.point, gv * v.components};
}

TangentVector Metric::legendre_inverse(const Covector& xi) const {
    require_in_domain(xi.point);
    if (xi.components.norm() < 1e-10)
        fail(ErrorCode::ZeroVector, "legendre_inverse requires a nonzero covector");
    // L is 1-homogeneous: solve for the normalized covector, rescale after.
    const double s = xi.components.norm();
    const Vec target = xi.components / s;
    Vec v = target;  // Euclidean-dual initial guess
    // FD fundamental tensors carry ~eps/h^2 evaluation noise, which caps the
    // attainable residual; analytic tensors go to machine accuracy.
    const double tol = g_fn_ ? 1e-12 : 5e-7;
    double res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 60; ++it) {
        Mat gv = g(xi.point, v);
        Vec r = gv * v - target;
        res = r.norm();
        if (res <= tol * 0.01) break;
        // Jacobian of v -> g_v v is exactly g_v (Cartan identity), so this is
        // a plain Newton step, damped to stay away from the zero section.
        Vec dv = gv.ldlt().solve(-r);
        double step = 1.0;
        bool improved = false;
        for (int halve = 0; halve < 30 && !improved; ++halve) {
            Vec vn = v + step * dv;
            if (vn.norm() > 1e-8) {
                double rn = (g(xi.point, vn) * vn - target).norm();
                if (rn < res) {
                    v = vn;
                    res = rn;
                    improved = true;
                }
            }
            step *= 0.5;
        }
        if (!improved) break;  // residual at its numerical floor
    }
    if (!(res <= tol))
        fail(ErrorCode::NoConvergence,
             "legendre_inverse: no convergence, residual " + std::to_string(res));
    return TangentVector{xi.point, s * v};
}

Mat Metric::dg_dx(const Vec& p, const Vec& v, int k) const {
    if (translation_invariant_) return Mat::Zero(dim_, dim_);
    if (dg_dx_fn_) return dg_dx_fn_(p, v, k);
    // Central x-difference of the FD fundamental tensor. The smooth part of
    // the inner-stencil truncation cancels in the outer difference, so a
    // larger inner step keeps roundoff in check.
    const double hx = kH3 * xscale(p);
    const double hv = kH3 * vscale(v);
    auto gat = [&](const Vec& q) {
        auto f2 = [&](const Vec& w) {
            double f = F_fn_(q, w);
            return f * f;
        };
        Mat gq(dim_, dim_);
        const double f0 = f2(v);
        for (int i = 0; i < dim_; ++i) {
            Vec ei = Vec::Zero(dim_);
            ei[i] = hv;
            gq(i, i) = 0.5 * (f2(v + ei) - 2.0 * f0 + f2(v - ei)) / (hv * hv);
            for (int j = i + 1; j < dim_; ++j) {
                Vec ej = Vec::Zero(dim_);
                ej[j] = hv;
                double c = (f2(v + ei + ej) - f2(v + ei - ej) - f2(v - ei + ej) + f2(v - ei - ej)) /
                           (4.0 * hv * hv);
                gq(i, j) = gq(j, i) = 0.5 * c;
            }
        }
        return gq;
    };
    Vec ek = Vec::Zero(dim_);
    ek[k] = hx;
    return (gat(p + ek) - gat(p - ek)) / (2.0 * hx);
}

double Metric::dF2_dx(const Vec& p, const Vec& v, int k) const {
    if (translation_invariant_) return 0.0;
    if (dF2_dx_fn_) return dF2_dx_fn_(p, v, k);
    const double h = kH1 * xscale(p);
    Vec ek = Vec::Zero(dim_);
    ek[k] = h;
    double fp = F_fn_(p + ek, v), fm = F_fn_(p - ek, v);
    return (fp * fp - fm * fm) / (2.0 * h);
}

std::optional<double> Metric::closed_form_distance(const Vec& p, const Vec& q) const {
    if (dist_fn_) return dist_fn_(p, q);
    if (translation_invariant_) {
        Vec d = q - p;
        if (d.norm() < 1e-300) return 0.0;
        return F_fn_(p, d);
    }
    return std::nullopt;
}

std::optional<Vec> Metric::closed_form_direction(const Vec& p, const Vec& q) const {
    if (dir_fn_) {
        Vec v = dir_fn_(p, q);
        if (v.size() == 0) return std::nullopt;
        return v;
    }
    if (translation_invariant_) {
        Vec d = q - p;
        if (d.norm() < 1e-300) return std::nullopt;
        return Vec(d / F_fn_(p, d));
    }
    return std::nullopt;
}

void Metric::set_analytic_tensors(MatrixFn g, MatrixDxFn dg, CartanFn cartan) {
    g_fn_ = std::move(g);
    dg_dx_fn_ = std::move(dg);
    cartan_fn_ = std::move(cartan);
}

void Metric::set_analytic_dF2_dx(std::function<double(const Vec&, const Vec&, int)> fn) {
    dF2_dx_fn_ = std::move(fn);
}

void Metric::set_closed_form(DistFn dist, DirFn dir) {
    dist_fn_ = std::move(dist);
    dir_fn_ = std::move(dir);
}

Metric reverse_metric(const Metric& m) {
    auto base = std::make_shared<Metric>(m);
    Metric rev(m.dim(), m.kind(), m.domain(),
               [base](const Vec& p, const Vec& v) { return base->F(p, Vec(-v)); });
    rev.set_translation_invariant(m.translation_invariant());
    if (m.has_analytic_tensors()) {
        rev.set_analytic_tensors(
            [base](const Vec& p, const Vec& v) { return base->g(p, Vec(-v)); },
            [base](const Vec& p, const Vec& v, int k) { return base->dg_dx(p, Vec(-v), k); },
            [base](const Vec& p, const Vec& v, const Vec& a, const Vec& b, const Vec& c) {
                return -base->cartan(TangentVector{p, Vec(-v)}, a, b, c);
            });
        rev.set_analytic_dF2_dx(
            [base](const Vec& p, const Vec& v, int k) { return base->dF2_dx(p, Vec(-v), k); });
    }
    if (m.has_closed_form_distance() && !m.translation_invariant()) {
        // Only the reversible conformal charts carry stored closed forms, so
        // the reversed minimizer p -> q is the forward one traversed backward
        // and its departure direction coincides with the forward direction.
        rev.set_closed_form(
            [base](const Vec& p, const Vec& q) { return *base->closed_form_distance(q, p); },
            [base](const Vec& p, const Vec& q) -> Vec {
                auto dep = base->closed_form_direction(p, q);
                return dep ? *dep : Vec();
            });
    }
    return rev;
}

namespace metrics {

Metric euclidean(int dim, double half_width) {
    Metric m(dim, MetricKind::Minkowski, ChartDomain::box(dim, half_width),
             [](const Vec&, const Vec& v) { return v.norm(); });
    m.set_translation_invariant(true);
    int d = dim;
    m.set_analytic_tensors(
        [d](const Vec&, const Vec&) { return Mat(Mat::Identity(d, d)); },
        [d](const Vec&, const Vec&, int) { return Mat(Mat::Zero(d, d)); },
        [](const Vec&, const Vec&, const Vec&, const Vec&, const Vec&) { return 0.0; });
    m.set_analytic_dF2_dx([](const Vec&, const Vec&, int) { return 0.0; });
    return m;
}

Metric randers(const Vec& b, double half_width) {
    const int d = static_cast<int>(b.size());
    if (b.norm() >= 1.0) fail(ErrorCode::InvalidArgument, "randers drift must satisfy |b| < 1");
    Metric m(d, MetricKind::Randers, ChartDomain::box(d, half_width),
             [b](const Vec&, const Vec& v) { return v.norm() + b.dot(v); });
    m.set_translation_invariant(true);
    m.set_analytic_tensors(
        [b, d](const Vec&, const Vec& v) {
            double a = v.norm();
            Vec l = v / a;
            double f = a + b.dot(v);
            Mat h = Mat::Identity(d, d) - l * l.transpose();
            Vec lb = l + b;
            return Mat((f / a) * h + lb * lb.transpose());
        },
        [d](const Vec&, const Vec&, int) { return Mat(Mat::Zero(d, d)); },
        [b](const Vec&, const Vec& v, const Vec& u1, const Vec& u2, const Vec& u3) {
            // C_ijk = [ (a b_k - beta l_k) h_ij + cyclic ] / (2 a^2),
            // h = I - l l^T, l = v / |v|.
            double a = v.norm();
            Vec l = v / a;
            double beta = b.dot(v);
            auto h = [&](const Vec& x, const Vec& y) { return x.dot(y) - l.dot(x) * l.dot(y); };
            auto w = [&](const Vec& x) { return a * b.dot(x) - beta * l.dot(x); };
            return (w(u3) * h(u1, u2) + w(u2) * h(u1, u3) + w(u1) * h(u2, u3)) / (2.0 * a * a);
        });
    m.set_analytic_dF2_dx([](const Vec&, const Vec&, int) { return 0.0; });
    return m;
}

Metric conformal(int dim, std::function<double(const Vec&)> phi,
                 std::function<Vec(const Vec&)> grad_phi, ChartDomain domain) {
    Metric m(dim, MetricKind::RiemannianConformal, std::move(domain),
             [phi](const Vec& p, const Vec& v) { return phi(p) * v.norm(); });
    int d = dim;
    m.set_analytic_tensors(
        [phi, d](const Vec& p, const Vec&) {
            double f = phi(p);
            return Mat(f * f * Mat::Identity(d, d));
        },
        [phi, grad_phi, d](const Vec& p, const Vec&, int k) {
            return Mat(2.0 * phi(p) * grad_phi(p)[k] * Mat::Identity(d, d));
        },
        [](const Vec&, const Vec&, const Vec&, const Vec&, const Vec&) { return 0.0; });
    m.set_analytic_dF2_dx([phi, grad_phi](const Vec& p, const Vec& v, int k) {
        return 2.0 * phi(p) * grad_phi(p)[k] * v.squaredNorm();
    });
    return m;
}

namespace {

// Stereographic chart point -> unit sphere in R^{d+1} (last coordinate is the
// projection axis; the chart origin maps to the "south" pole).
Vec to_sphere(const Vec& x) {
    int d = static_cast<int>(x.size());
    Vec X(d + 1);
    double r2 = x.squaredNorm();
    X.head(d) = 2.0 * x;
    X[d] = r2 - 1.0;
    return X / (1.0 + r2);
}

Vec to_hyperboloid(const Vec& x) {
    int d = static_cast<int>(x.size());
    Vec X(d + 1);
    double r2 = x.squaredNorm();
    X[0] = 1.0 + r2;
    X.tail(d) = 2.0 * x;
    return X / (1.0 - r2);
}

}  // namespace

Metric sphere_stereographic(double chart_radius) {
    const int d = 2;
    ChartDomain dom = ChartDomain::box(d, chart_radius * 1.05);
    double R = chart_radius;
    dom.predicate = [R](const Vec& p) { return p.norm() < R; };
    auto phi = [](const Vec& p) { return 2.0 / (1.0 + p.squaredNorm()); };
    auto grad = [phi](const Vec& p) {
        double f = phi(p);
        return Vec(-f * f * p);
    };
    Metric m = conformal(d, phi, grad, dom);
    m.set_closed_form(
        [](const Vec& p, const Vec& q) {
            Vec X = to_sphere(p), Y = to_sphere(q);
            double c = std::clamp(X.dot(Y), -1.0, 1.0);
            Vec w = Y - c * X;
            return std::atan2(w.norm(), c);
        },
        [phi](const Vec& p, const Vec& q) -> Vec {
            Vec X = to_sphere(p), Y = to_sphere(q);
            double c = std::clamp(X.dot(Y), -1.0, 1.0);
            Vec w = Y - c * X;
            double s = w.norm();
            if (s < 1e-14) return Vec();  // coincident or antipodal: no unique direction
            Vec T = w / s;
            int n = static_cast<int>(p.size());
            double den = 1.0 - X[n];
            Vec v(n);
            for (int i = 0; i < n; ++i) v[i] = T[i] / den + X[i] * T[n] / (den * den);
            return Vec(v / (phi(p) * v.norm()));
        });
    return m;
}

Metric hyperbolic_disk() {
    const int d = 2;
    ChartDomain dom = ChartDomain::box(d, 1.0);
    dom.predicate = [](const Vec& p) { return p.norm() < 1.0 - 1e-9; };
    auto phi = [](const Vec& p) { return 2.0 / (1.0 - p.squaredNorm()); };
    auto grad = [phi](const Vec& p) {
        double f = phi(p);
        return Vec(f * f * p);
    };
    Metric m = conformal(d, phi, grad, dom);
    auto lprod = [](const Vec& X, const Vec& Y) {
        return -X[0] * Y[0] + X.tail(X.size() - 1).dot(Y.tail(Y.size() - 1));
    };
    m.set_closed_form(
        [lprod](const Vec& p, const Vec& q) {
            double c = std::max(1.0, -lprod(to_hyperboloid(p), to_hyperboloid(q)));
            return std::acosh(c);
        },
        [phi, lprod](const Vec& p, const Vec& q) -> Vec {
            Vec X = to_hyperboloid(p), Y = to_hyperboloid(q);
            double c = std::max(1.0, -lprod(X, Y));
            double dist = std::acosh(c);
            Vec T;
            if (dist < 1e-9) {
                T = Y - X;
                if (T.norm() < 1e-300) return Vec();
            } else {
                T = (Y - std::cosh(dist) * X) / std::sinh(dist);
            }
            int n = static_cast<int>(p.size());
            double den = 1.0 + X[0];
            Vec v(n);
            for (int i = 0; i < n; ++i) v[i] = T[i + 1] / den - X[i + 1] * T[0] / (den * den);
            return Vec(v / (phi(p) * v.norm()));
        });
    return m;
}

Metric minkowski(int dim, Metric::ScalarFn F, double half_width) {
    Metric m(dim, MetricKind::Minkowski, ChartDomain::box(dim, half_width), std::move(F));
    m.set_translation_invariant(true);
    return m;
}

}  // namespace metrics

}  // namespace finsler
