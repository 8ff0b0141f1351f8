#pragma once

#include <functional>
#include <optional>

#include "finsler/geodesic.hpp"
#include "finsler/metric.hpp"

namespace finsler {

// A parametrized immersion u -> x(u) over a box with optional periodic
// directions. Derivatives fall back to central differences when no analytic
// Jacobian / second derivative is supplied.
struct SubmanifoldSpec {
    enum class Smoothness { smooth, c1_only };

    int ambient_dim = 2;
    int param_dim = 1;
    std::function<Vec(const Vec&)> immersion;
    std::function<Mat(const Vec&)> jacobian;                    // optional analytic frame
    std::function<Vec(const Vec&, int, int)> second_derivative; // optional analytic d2x/du_a du_b
    Vec u_lo, u_hi;
    std::vector<bool> periodic;
    Smoothness smoothness = Smoothness::smooth;
    std::vector<double> c2_singular_params;  // 1-d parameter values where C^2 fails
    double c2_guard = 1e-3;

    Vec point(const Vec& u) const { return immersion(u); }
    // Tangent frame: column a is dx/du_a.
    Mat frame(const Vec& u) const;
    Vec second_deriv(const Vec& u, int a, int b) const;

    // Wrap/clamp a parameter into the domain.
    Vec canonical_param(Vec u) const;
    double param_distance(const Vec& a, const Vec& b) const;
    double period(int a) const { return u_hi[a] - u_lo[a]; }

    bool near_c2_singularity(const Vec& u) const;
    void require_c2(const Vec& u) const;
};

// A unit normal at x(u): F(n) = 1 and g_n(n, w) = 0 for all tangent w.
struct NormalVector {
    Vec u;
    TangentVector n;
    Covector annihilator;
    int side = +1;  // codimension-1 co-orientation tag (+1 inward for the factories here)
    double residual = 0.0;
};

// Shape operator data at (u, n): operator matrix in the tangent-frame basis,
// together with the induced inner product M_ab = g_n(w_a, w_b).
struct ShapeOperator {
    Mat A;      // frame-basis operator matrix
    Mat M;      // g_n restricted to the frame
    Mat frame;  // ambient frame columns
};

// L^{-1} of an annihilator covector, normalized to F = 1.
NormalVector unit_normal_sample(const Metric& m, const SubmanifoldSpec& N, const Vec& u,
                                const Covector& xi_dir);

// Codimension-1 helper: the two unit normals at u, ordered (inward, outward)
// for the counterclockwise factory curves. `side` +1 selects inward.
NormalVector normal_side(const Metric& m, const SubmanifoldSpec& N, const Vec& u, int side);

// Second fundamental form value Pi^n(x, y), an ambient vector g_n-orthogonal
// to T_pN. x, y are ambient vectors tangent to N at x(u).
Vec second_fundamental_form(const Metric& m, const SubmanifoldSpec& N, const Vec& u,
                            const NormalVector& n, const Vec& x, const Vec& y);

// Shape operator via the normal-extension formula A_n x = -(grad^n_x n~)^T,
// with n~ the Legendre-pullback extension of the unit annihilator field.
ShapeOperator shape_operator(const Metric& m, const SubmanifoldSpec& N, const Vec& u,
                             const NormalVector& n);

// Same operator assembled from the second fundamental form (Def. route);
// used as the cross-check of the two constructions.
ShapeOperator shape_operator_via_ii(const Metric& m, const SubmanifoldSpec& N, const Vec& u,
                                    const NormalVector& n);

struct PrincipalCurvatures {
    std::vector<double> kappas;  // ascending
    double absolute = 0.0;       // max |kappa_i|
};

PrincipalCurvatures principal_curvatures(const Metric& m, const SubmanifoldSpec& N, const Vec& u,
                                         const NormalVector& n);

// min eig(A) > max eig(B) for two self-adjoint operators w.r.t. `inner`;
// when true, also certifies A - B positive definite and reports its smallest
// eigenvalue.
struct DominanceReport {
    bool dominates = false;
    double min_eig_A = 0.0;
    double max_eig_B = 0.0;
    double min_eig_diff = 0.0;
};

DominanceReport eigen_dominance_check(const Mat& A, const Mat& B, const SymmetricBilinear& inner,
                                      double selfadjoint_tol = 1e-7);

// N-Jacobi field along an N-geodesic: J(0) = J0 in T_pN and
// DJ(0) + A_{gamma'(0)} J0 normal to N. Throws NotNormal when gamma'(0) is
// not in the unit normal cone at x(u).
JacobiRecord n_jacobi_field(const Metric& m, const SubmanifoldSpec& N, const Vec& u,
                            const GeodesicRecord& gamma, const Vec& J0, double tol = 1e-9);

namespace submanifolds {

SubmanifoldSpec circle(double radius = 1.0, const Vec& center = Vec::Zero(2));
SubmanifoldSpec ellipse(double a, double b);
SubmanifoldSpec line(const Vec& p0, const Vec& dir, double half_extent = 10.0);
// Single point; the normal cone is the whole punctured tangent space.
SubmanifoldSpec point(const Vec& p);
// Closed C^1 curve equal to y = |x|^(3/2) for |x| <= 0.8, closed off by a
// smooth arc through (0, 2.2). C^2 fails exactly at the origin (u = 0).
SubmanifoldSpec x32_curve();
// Closed curve through the given points (periodic cubic spline).
SubmanifoldSpec param_table(const std::vector<Vec>& pts);

}  // namespace submanifolds

}  // namespace finsler
