#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "finsler/types.hpp"

namespace finsler {

// Axis-aligned box, optionally tightened by a predicate (e.g. an open disk).
struct ChartDomain {
    Vec lo;
    Vec hi;
    std::function<bool(const Vec&)> predicate;  // optional extra restriction

    bool contains(const Vec& p) const {
        for (int i = 0; i < p.size(); ++i)
            if (p[i] < lo[i] || p[i] > hi[i]) return false;
        return !predicate || predicate(p);
    }

    static ChartDomain box(int dim, double half_width) {
        ChartDomain d;
        d.lo = Vec::Constant(dim, -half_width);
        d.hi = Vec::Constant(dim, half_width);
        return d;
    }
};

enum class MetricKind { RiemannianConformal, Randers, Minkowski, Custom };

std::string to_string(MetricKind k);

// A Finsler metric on a single coordinate chart. F must be positively
// 1-homogeneous and smooth away from the zero section, with g_v positive
// definite. Built-in families carry closed-form tensors; anything missing
// falls back to finite differences of F^2.
//
// Immutable after construction; every operation is a pure function of the
// inputs, so instances may be shared freely across threads.
class Metric {
public:
    using ScalarFn = std::function<double(const Vec&, const Vec&)>;
    using MatrixFn = std::function<Mat(const Vec&, const Vec&)>;
    using MatrixDxFn = std::function<Mat(const Vec&, const Vec&, int)>;
    using CartanFn = std::function<double(const Vec&, const Vec&, const Vec&, const Vec&, const Vec&)>;
    using DistFn = std::function<double(const Vec&, const Vec&)>;
    using DirFn = std::function<Vec(const Vec&, const Vec&)>;

    Metric(int dim, MetricKind kind, ChartDomain domain, ScalarFn F);

    int dim() const { return dim_; }
    MetricKind kind() const { return kind_; }
    const ChartDomain& domain() const { return domain_; }
    bool in_domain(const Vec& p) const { return domain_.contains(p); }

    // True when F does not depend on the base point (Minkowski / Randers with
    // constant data): spray, connection and curvature vanish identically.
    bool translation_invariant() const { return translation_invariant_; }

    bool has_analytic_tensors() const { return static_cast<bool>(g_fn_); }
    bool has_closed_form_distance() const { return static_cast<bool>(dist_fn_); }

    // --- pointwise norm and tensors -------------------------------------

    double F(const TangentVector& v) const;
    double F(const Vec& p, const Vec& v) const { return F(TangentVector{p, v}); }

    // Fundamental tensor g_v (symmetric positive definite).
    SymmetricBilinear fundamental_tensor(const TangentVector& v) const;
    Mat g(const Vec& p, const Vec& v) const;

    // Cartan tensor C_v(v1, v2, v3); full coordinate tensor also available.
    double cartan(const TangentVector& v, const Vec& v1, const Vec& v2, const Vec& v3) const;
    // cartan_full[k] is the matrix C(.,.,e_k).
    std::vector<Mat> cartan_full(const Vec& p, const Vec& v) const;

    // Legendre transformation L(v) = g_v(v, .), extended by L(0) = 0.
    Covector legendre(const TangentVector& v) const;
    // Inverse by damped Newton on g_v(v, .) = xi; throws NoConvergence if the
    // iteration stalls (numerical strong-convexity failure).
    TangentVector legendre_inverse(const Covector& xi) const;

    // --- coordinate derivatives used by the geodesic machinery ----------

    // d g_ij / d x^k at fixed vector components.
    Mat dg_dx(const Vec& p, const Vec& v, int k) const;
    // d F^2 / d x^k at fixed vector components.
    double dF2_dx(const Vec& p, const Vec& v, int k) const;

    // --- optional closed-form global geometry ----------------------------

    // Exact distance d(p, q) when the family admits one (flat families,
    // constant-curvature conformal charts).
    std::optional<double> closed_form_distance(const Vec& p, const Vec& q) const;
    // Initial velocity (unit F-norm) of the minimizer p -> q, when known.
    std::optional<Vec> closed_form_direction(const Vec& p, const Vec& q) const;

    // --- construction hooks ----------------------------------------------

    void set_analytic_tensors(MatrixFn g, MatrixDxFn dg_dx, CartanFn cartan);
    void set_analytic_dF2_dx(std::function<double(const Vec&, const Vec&, int)> fn);
    void set_closed_form(DistFn dist, DirFn dir);
    void set_translation_invariant(bool ti) { translation_invariant_ = ti; }

    void require_in_domain(const Vec& p) const;
    void require_nonzero(const Vec& v) const;

private:
    Mat g_fd(const Vec& p, const Vec& v) const;

    int dim_;
    MetricKind kind_;
    ChartDomain domain_;
    ScalarFn F_fn_;
    bool translation_invariant_ = false;

    MatrixFn g_fn_;
    MatrixDxFn dg_dx_fn_;
    CartanFn cartan_fn_;
    std::function<double(const Vec&, const Vec&, int)> dF2_dx_fn_;
    DistFn dist_fn_;
    DirFn dir_fn_;
};

// Reverse metric: F_rev(v) = F(-v). Closed-form data and analytic tensors are
// carried over via the reversal identities (g_rev_v = g_{-v}, C_rev = -C_{-v}).
Metric reverse_metric(const Metric& m);

namespace metrics {

// Euclidean R^d.
Metric euclidean(int dim = 2, double half_width = 30.0);

// Randers norm F(v) = |v| + <b, v> with constant drift |b| < 1 (flat).
Metric randers(const Vec& b, double half_width = 30.0);

// Round sphere via the stereographic chart, conformal factor 2 / (1 + |p|^2).
// Covers the sphere minus one point; the chart is cut off at |p| = radius.
Metric sphere_stereographic(double chart_radius = 2.0e4);

// Hyperbolic plane, Poincare disk factor 2 / (1 - |p|^2).
Metric hyperbolic_disk();

// Generic conformally-Euclidean metric F = phi(p) |v| with analytic phi and
// grad phi.
Metric conformal(int dim, std::function<double(const Vec&)> phi,
                 std::function<Vec(const Vec&)> grad_phi, ChartDomain domain);

// Translation-invariant norm given only by its evaluator; all tensors by
// finite differences.
Metric minkowski(int dim, Metric::ScalarFn F, double half_width = 30.0);

}  // namespace metrics

}  // namespace finsler
