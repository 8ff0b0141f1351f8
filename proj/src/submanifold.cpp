#include "finsler/submanifold.hpp"

#include <algorithm>
#include <cmath>

namespace finsler {

namespace {

double uscale(const Vec& u) { return std::max(1.0, u.norm()); }

// Frame-coordinate solve: coefficients c with W c = x in the least-squares
// sense (x tangent, W full rank).
Vec frame_coords(const Mat& W, const Vec& x) {
    return (W.transpose() * W).ldlt().solve(W.transpose() * x);
}

Vec gamma_contract(const std::vector<Mat>& Gamma, const Vec& a, const Vec& b) {
    const int d = static_cast<int>(Gamma.size());
    Vec out(d);
    for (int l = 0; l < d; ++l) out[l] = a.dot(Gamma[static_cast<std::size_t>(l)] * b);
    return out;
}

// Tangential part of v in the g_n-decomposition T_pN + (T_pN)^perp.
Vec tangential_part(const Mat& W, const Mat& gn, const Vec& v, Vec* coords = nullptr) {
    if (W.cols() == 0) {
        if (coords) *coords = Vec();
        return Vec::Zero(v.size());
    }
    Mat M = W.transpose() * gn * W;
    Vec rhs = W.transpose() * gn * v;
    Vec c = M.ldlt().solve(rhs);
    if (coords) *coords = c;
    return W * c;
}

// Hypersurface annihilator covector at u, via the null space of the frame,
// oriented consistently with `ref` when given.
Vec annihilator_covector(const Mat& W, const Vec* ref) {
    const int n = static_cast<int>(W.rows());
    Vec xi;
    if (n == 2 && W.cols() == 1) {
        xi = vec2(-W(1, 0), W(0, 0));
    } else {
        Eigen::JacobiSVD<Mat> svd(Mat(W.transpose()), Eigen::ComputeFullV);
        xi = svd.matrixV().col(n - 1);
    }
    xi.normalize();
    if (ref && xi.dot(*ref) < 0) xi = -xi;
    return xi;
}

}  // namespace

Mat SubmanifoldSpec::frame(const Vec& u) const {
    if (jacobian) return jacobian(u);
    Mat J(ambient_dim, param_dim);
    const double h = 1e-6 * uscale(u);
    for (int a = 0; a < param_dim; ++a) {
        Vec e = Vec::Zero(param_dim);
        e[a] = h;
        J.col(a) = (immersion(u + e) - immersion(u - e)) / (2.0 * h);
    }
    return J;
}

Vec SubmanifoldSpec::second_deriv(const Vec& u, int a, int b) const {
    if (second_derivative) return second_derivative(u, a, b);
    const double h = 1e-4 * uscale(u);
    Vec ea = Vec::Zero(param_dim), eb = Vec::Zero(param_dim);
    ea[a] = h;
    eb[b] = h;
    if (a == b)
        return (immersion(u + ea) - 2.0 * immersion(u) + immersion(u - ea)) / (h * h);
    return (immersion(u + ea + eb) - immersion(u + ea - eb) - immersion(u - ea + eb) +
            immersion(u - ea - eb)) /
           (4.0 * h * h);
}

Vec SubmanifoldSpec::canonical_param(Vec u) const {
    for (int a = 0; a < param_dim; ++a) {
        if (a < static_cast<int>(periodic.size()) && periodic[a]) {
            double p = period(a);
            u[a] = u_lo[a] + std::fmod(std::fmod(u[a] - u_lo[a], p) + p, p);
        } else {
            u[a] = std::clamp(u[a], u_lo[a], u_hi[a]);
        }
    }
    return u;
}

double SubmanifoldSpec::param_distance(const Vec& a, const Vec& b) const {
    double s = 0.0;
    for (int i = 0; i < param_dim; ++i) {
        double d = std::abs(a[i] - b[i]);
        if (i < static_cast<int>(periodic.size()) && periodic[i]) d = std::min(d, period(i) - d);
        s += d * d;
    }
    return std::sqrt(s);
}

bool SubmanifoldSpec::near_c2_singularity(const Vec& u) const {
    if (smoothness != Smoothness::c1_only || param_dim != 1) return false;
    Vec cu = canonical_param(u);
    for (double s : c2_singular_params) {
        double d = std::abs(cu[0] - s);
        if (!periodic.empty() && periodic[0]) d = std::min(d, period(0) - d);
        if (d < c2_guard) return true;
    }
    return false;
}

void SubmanifoldSpec::require_c2(const Vec& u) const {
    if (near_c2_singularity(u))
        fail(ErrorCode::NotC2, "curvature data undefined at a C^1-only parameter");
}

NormalVector unit_normal_sample(const Metric& m, const SubmanifoldSpec& N, const Vec& u_in,
                                const Covector& xi_dir) {
    Vec u = N.canonical_param(u_in);
    Vec p = N.point(u);
    Mat W = N.frame(u);
    if (xi_dir.components.norm() < 1e-12)
        fail(ErrorCode::ZeroVector, "unit_normal_sample: zero annihilator");
    for (int a = 0; a < W.cols(); ++a) {
        if (std::abs(xi_dir.components.dot(W.col(a))) >
            1e-6 * xi_dir.components.norm() * W.col(a).norm())
            fail(ErrorCode::NotNormal, "unit_normal_sample: covector does not annihilate T_pN");
    }
    TangentVector raw = m.legendre_inverse(Covector{p, xi_dir.components});
    double f = m.F(raw);
    NormalVector out;
    out.u = u;
    out.n = TangentVector{p, raw.components / f};
    out.annihilator = Covector{p, xi_dir.components / xi_dir.components.norm()};
    Mat gn = m.g(p, out.n.components);
    double res = 0.0;
    for (int a = 0; a < W.cols(); ++a)
        res = std::max(res, std::abs(out.n.components.dot(gn * W.col(a))) / W.col(a).norm());
    out.residual = res;
    return out;
}

NormalVector normal_side(const Metric& m, const SubmanifoldSpec& N, const Vec& u_in, int side) {
    if (N.param_dim != N.ambient_dim - 1)
        fail(ErrorCode::InvalidArgument, "normal_side needs a hypersurface");
    Vec u = N.canonical_param(u_in);
    Mat W = N.frame(u);
    Vec xi = annihilator_covector(W, nullptr);
    // Factory curves run counterclockwise, so the +90-degree rotation of the
    // tangent (which the 2-d null-space convention yields) points inward.
    NormalVector nv = unit_normal_sample(m, N, u, Covector{N.point(u), Vec(side * xi)});
    nv.side = side;
    return nv;
}

Vec second_fundamental_form(const Metric& m, const SubmanifoldSpec& N, const Vec& u_in,
                            const NormalVector& n, const Vec& x, const Vec& y) {
    Vec u = N.canonical_param(u_in);
    N.require_c2(u);
    Vec p = N.point(u);
    Mat W = N.frame(u);
    Mat gn = m.g(p, n.n.components);
    if (n.residual > 1e-6) fail(ErrorCode::NotNormal, "second_fundamental_form: n not normal");
    Vec cx = frame_coords(W, x), cy = frame_coords(W, y);
    // nabla_X Y at p for extensions along N: second immersion derivative plus
    // the connection term at reference n.
    Vec d2 = Vec::Zero(N.ambient_dim);
    for (int a = 0; a < N.param_dim; ++a)
        for (int b = 0; b < N.param_dim; ++b) d2 += cx[a] * cy[b] * N.second_deriv(u, a, b);
    auto Gamma = chern_coefficients(m, n.n);
    Vec nab = d2 + gamma_contract(Gamma, x, y);
    return nab - tangential_part(W, gn, nab);
}

ShapeOperator shape_operator_via_ii(const Metric& m, const SubmanifoldSpec& N, const Vec& u_in,
                                    const NormalVector& n) {
    Vec u = N.canonical_param(u_in);
    N.require_c2(u);
    Vec p = N.point(u);
    Mat W = N.frame(u);
    Mat gn = m.g(p, n.n.components);
    const int k = N.param_dim;
    Mat S(k, k), M = W.transpose() * gn * W;
    for (int a = 0; a < k; ++a)
        for (int b = a; b < k; ++b) {
            Vec pi = second_fundamental_form(m, N, u, n, W.col(a), W.col(b));
            S(a, b) = S(b, a) = n.n.components.dot(gn * pi);
        }
    return ShapeOperator{Mat(M.ldlt().solve(S)), M, W};
}

ShapeOperator shape_operator(const Metric& m, const SubmanifoldSpec& N, const Vec& u_in,
                             const NormalVector& n) {
    Vec u = N.canonical_param(u_in);
    N.require_c2(u);
    const int k = N.param_dim;
    if (k == 0) return ShapeOperator{Mat(0, 0), Mat(0, 0), Mat(N.ambient_dim, 0)};
    if (N.param_dim != N.ambient_dim - 1) {
        // The extension route below builds the unit normal field from the
        // hypersurface annihilator; higher codimension goes through the
        // second fundamental form instead.
        return shape_operator_via_ii(m, N, u, n);
    }
    Vec p = N.point(u);
    Mat W = N.frame(u);
    Mat gn = m.g(p, n.n.components);
    Vec xi_ref = n.annihilator.components;

    // Unit normal field u' -> n~(u') along N via the annihilator and the
    // Legendre inverse, differentiated through the parametrization.
    auto normal_at = [&](const Vec& uu) {
        Mat Wu = N.frame(uu);
        Vec xi = annihilator_covector(Wu, &xi_ref);
        TangentVector raw = m.legendre_inverse(Covector{N.point(uu), xi});
        return Vec(raw.components / m.F(raw));
    };

    auto Gamma = chern_coefficients(m, n.n);
    Mat A(k, k), M = W.transpose() * gn * W;
    for (int a = 0; a < k; ++a) {
        const double h = 1e-4 * uscale(u);
        Vec e = Vec::Zero(k);
        e[a] = h;
        Vec dn = (normal_at(Vec(u + e)) - normal_at(Vec(u - e))) / (2.0 * h);
        // d/du_a pulls back to the ambient direction w_a = frame column a.
        Vec nab = dn + gamma_contract(Gamma, W.col(a), n.n.components);
        Vec coords;
        tangential_part(W, gn, nab, &coords);
        A.col(a) = -coords;
    }
    return ShapeOperator{A, M, W};
}

PrincipalCurvatures principal_curvatures(const Metric& m, const SubmanifoldSpec& N, const Vec& u,
                                         const NormalVector& n) {
    ShapeOperator so = shape_operator(m, N, u, n);
    PrincipalCurvatures pc;
    if (so.A.rows() == 0) return pc;
    Mat S = so.M * so.A;
    S = 0.5 * (S + S.transpose());  // self-adjoint w.r.t. M up to FD noise
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(S, so.M);
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        pc.kappas.push_back(es.eigenvalues()[i]);
        pc.absolute = std::max(pc.absolute, std::abs(es.eigenvalues()[i]));
    }
    std::sort(pc.kappas.begin(), pc.kappas.end());
    return pc;
}

DominanceReport eigen_dominance_check(const Mat& A, const Mat& B, const SymmetricBilinear& inner,
                                      double selfadjoint_tol) {
    const Mat& M = inner.matrix;
    Mat SA = M * A, SB = M * B;
    if ((SA - SA.transpose()).cwiseAbs().maxCoeff() > selfadjoint_tol ||
        (SB - SB.transpose()).cwiseAbs().maxCoeff() > selfadjoint_tol)
        fail(ErrorCode::NotSelfAdjoint, "eigen_dominance_check: operator not self-adjoint");
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ea(Mat(0.5 * (SA + SA.transpose())), M);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> eb(Mat(0.5 * (SB + SB.transpose())), M);
    DominanceReport rep;
    rep.min_eig_A = ea.eigenvalues().minCoeff();
    rep.max_eig_B = eb.eigenvalues().maxCoeff();
    rep.dominates = rep.min_eig_A > rep.max_eig_B;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ed(
        Mat(0.5 * (SA + SA.transpose()) - 0.5 * (SB + SB.transpose())), M);
    rep.min_eig_diff = ed.eigenvalues().minCoeff();
    return rep;
}

JacobiRecord n_jacobi_field(const Metric& m, const SubmanifoldSpec& N, const Vec& u,
                            const GeodesicRecord& gamma, const Vec& J0, double tol) {
    Vec p = gamma.start_point();
    Vec v0 = gamma.start_velocity();
    Mat W = N.frame(N.canonical_param(u));
    Mat gv = m.g(p, v0);
    for (int a = 0; a < W.cols(); ++a) {
        if (std::abs(v0.dot(gv * W.col(a))) > 1e-6 * W.col(a).norm())
            fail(ErrorCode::NotNormal, "n_jacobi_field: initial velocity not in the normal cone");
    }
    Vec DJ0;
    if (N.param_dim == 0) {
        DJ0 = Vec::Zero(m.dim());
    } else {
        NormalVector nv;
        nv.u = N.canonical_param(u);
        nv.n = TangentVector{p, v0};
        nv.annihilator = Covector{p, annihilator_covector(W, nullptr)};
        nv.residual = 0.0;
        ShapeOperator so = shape_operator(m, N, u, nv);
        Vec c = frame_coords(W, J0);
        DJ0 = -W * (so.A * c);
    }
    return jacobi_field(m, gamma, J0, DJ0, tol);
}

namespace submanifolds {

SubmanifoldSpec circle(double radius, const Vec& center) {
    SubmanifoldSpec s;
    s.ambient_dim = 2;
    s.param_dim = 1;
    Vec c = center;
    double r = radius;
    s.immersion = [c, r](const Vec& u) {
        return vec2(c[0] + r * std::cos(u[0]), c[1] + r * std::sin(u[0]));
    };
    s.jacobian = [r](const Vec& u) {
        Mat J(2, 1);
        J << -r * std::sin(u[0]), r * std::cos(u[0]);
        return J;
    };
    s.second_derivative = [r](const Vec& u, int, int) {
        return vec2(-r * std::cos(u[0]), -r * std::sin(u[0]));
    };
    s.u_lo = Vec::Zero(1);
    s.u_hi = Vec::Constant(1, 2.0 * M_PI);
    s.periodic = {true};
    return s;
}

SubmanifoldSpec ellipse(double a, double b) {
    SubmanifoldSpec s;
    s.ambient_dim = 2;
    s.param_dim = 1;
    s.immersion = [a, b](const Vec& u) { return vec2(a * std::cos(u[0]), b * std::sin(u[0])); };
    s.jacobian = [a, b](const Vec& u) {
        Mat J(2, 1);
        J << -a * std::sin(u[0]), b * std::cos(u[0]);
        return J;
    };
    s.second_derivative = [a, b](const Vec& u, int, int) {
        return vec2(-a * std::cos(u[0]), -b * std::sin(u[0]));
    };
    s.u_lo = Vec::Zero(1);
    s.u_hi = Vec::Constant(1, 2.0 * M_PI);
    s.periodic = {true};
    return s;
}

SubmanifoldSpec line(const Vec& p0, const Vec& dir, double half_extent) {
    SubmanifoldSpec s;
    s.ambient_dim = static_cast<int>(p0.size());
    s.param_dim = 1;
    Vec d = dir / dir.norm();
    s.immersion = [p0, d](const Vec& u) { return Vec(p0 + u[0] * d); };
    s.jacobian = [p0, d](const Vec&) {
        Mat J(p0.size(), 1);
        J.col(0) = d;
        return J;
    };
    s.second_derivative = [p0](const Vec&, int, int) { return Vec(Vec::Zero(p0.size())); };
    s.u_lo = Vec::Constant(1, -half_extent);
    s.u_hi = Vec::Constant(1, half_extent);
    s.periodic = {false};
    return s;
}

SubmanifoldSpec point(const Vec& p) {
    SubmanifoldSpec s;
    s.ambient_dim = static_cast<int>(p.size());
    s.param_dim = 0;
    s.immersion = [p](const Vec&) { return p; };
    s.jacobian = [p](const Vec&) { return Mat(p.size(), 0); };
    s.u_lo = Vec(0);
    s.u_hi = Vec(0);
    return s;
}

namespace {

// Quintic Hermite on [0, 1] with prescribed endpoint position, first and
// second derivative.
Vec quintic(double s, const Vec& P0, const Vec& T0, const Vec& A0, const Vec& P1, const Vec& T1,
            const Vec& A1) {
    double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
    double h0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
    double h1 = s - 6 * s3 + 8 * s4 - 3 * s5;
    double h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
    double h3 = 0.5 * s3 - s4 + 0.5 * s5;
    double h4 = -4 * s3 + 7 * s4 - 3 * s5;
    double h5 = 10 * s3 - 15 * s4 + 6 * s5;
    return h0 * P0 + h1 * T0 + h2 * A0 + h3 * A1 + h4 * T1 + h5 * P1;
}

}  // namespace

SubmanifoldSpec x32_curve() {
    SubmanifoldSpec s;
    s.ambient_dim = 2;
    s.param_dim = 1;
    s.smoothness = SubmanifoldSpec::Smoothness::c1_only;
    s.c2_singular_params = {0.0};
    // Lower part (u, |u|^{3/2}) for |u| <= u0; upper closure is a quintic arc
    // from (u0, u0^{3/2}) to the apex (0, 2.2), mirrored for u < 0. C^2 at the
    // junctions and the apex, C^1 only at u = 0.
    const double u0 = 0.8, span = 1.6;
    const Vec P0 = vec2(u0, std::pow(u0, 1.5));
    const Vec T0 = span * vec2(1.0, 1.5 * std::sqrt(u0));
    const Vec A0 = span * span * vec2(0.0, 0.75 / std::sqrt(u0));
    const Vec P1 = vec2(0.0, 2.2);
    const Vec T1 = span * vec2(-1.2, 0.0);
    const Vec A1 = span * span * vec2(0.0, -0.9);
    auto closure = [=](double u) { return quintic((u - u0) / span, P0, T0, A0, P1, T1, A1); };
    s.immersion = [=](const Vec& uu) -> Vec {
        double u = uu[0];
        if (std::abs(u) <= u0) return vec2(u, std::pow(std::abs(u), 1.5));
        double a = std::abs(u);
        Vec q = closure(a);
        if (u < 0) q[0] = -q[0];
        return q;
    };
    s.u_lo = Vec::Constant(1, -(u0 + span));
    s.u_hi = Vec::Constant(1, u0 + span);
    s.periodic = {true};
    return s;
}

SubmanifoldSpec param_table(const std::vector<Vec>& pts) {
    const int n = static_cast<int>(pts.size());
    if (n < 3) fail(ErrorCode::InvalidArgument, "param_table needs at least 3 points");
    const int d = static_cast<int>(pts[0].size());
    // Periodic natural cubic spline, uniform parameter t_i = i. Second
    // derivatives solve M_{i-1} + 4 M_i + M_{i+1} = 6 (y_{i-1} - 2y_i + y_{i+1}).
    Mat sys = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        sys(i, (i + n - 1) % n) += 1.0;
        sys(i, i) += 4.0;
        sys(i, (i + 1) % n) += 1.0;
    }
    Mat rhs(n, d);
    for (int i = 0; i < n; ++i) {
        Vec r = 6.0 * (pts[(i + n - 1) % n] - 2.0 * pts[i] + pts[(i + 1) % n]);
        rhs.row(i) = r.transpose();
    }
    Mat M2 = sys.partialPivLu().solve(rhs);  // row i: second derivative at node i

    auto yv = std::make_shared<std::vector<Vec>>(pts);
    auto mv = std::make_shared<Mat>(M2);
    SubmanifoldSpec s;
    s.ambient_dim = d;
    s.param_dim = 1;
    auto eval = [yv, mv, n](double t, int deriv) {
        double tw = std::fmod(std::fmod(t, static_cast<double>(n)) + n, static_cast<double>(n));
        int i = std::min(static_cast<int>(tw), n - 1);
        double s1 = tw - i;
        Vec yi = (*yv)[static_cast<std::size_t>(i)];
        Vec yj = (*yv)[static_cast<std::size_t>((i + 1) % n)];
        Vec mi = mv->row(i).transpose(), mj = mv->row((i + 1) % n).transpose();
        double a = 1 - s1, b = s1;
        if (deriv == 0)
            return Vec((a * a * a * mi + b * b * b * mj) / 6.0 + (yi - mi / 6.0) * a +
                       (yj - mj / 6.0) * b);
        if (deriv == 1)
            return Vec((-3 * a * a * mi + 3 * b * b * mj) / 6.0 - (yi - mi / 6.0) +
                       (yj - mj / 6.0));
        return Vec(a * mi + b * mj);
    };
    s.immersion = [eval](const Vec& u) { return eval(u[0], 0); };
    s.jacobian = [eval, d](const Vec& u) {
        Mat J(d, 1);
        J.col(0) = eval(u[0], 1);
        return J;
    };
    s.second_derivative = [eval](const Vec& u, int, int) { return eval(u[0], 2); };
    s.u_lo = Vec::Zero(1);
    s.u_hi = Vec::Constant(1, static_cast<double>(n));
    s.periodic = {true};
    return s;
}

}  // namespace submanifolds

}  // namespace finsler
