#pragma once

#include <limits>

#include "finsler/distance.hpp"

namespace finsler {

inline constexpr double kInfSentinel = std::numeric_limits<double>::infinity();

// One cut-time computation along a unit normal. `rho` is the last time the
// normal geodesic realizes d(N, gamma(t)) = t; chart_exit / horizon samples
// carry the last certified minimizing time instead of a true cut value.
struct CutSample {
    enum class Reason { separating, focal, chart_exit, horizon };

    NormalVector normal;
    double rho = kInfSentinel;
    Vec cut_point;  // empty unless the cut was bracketed
    Reason limiting_reason = Reason::horizon;
    double bracket_lo = 0.0, bracket_hi = 0.0;
    double focal_time = kInfSentinel;  // first focal time along the record, if any
    int multiplicity_at_cut = 1;

    bool cut_bracketed() const {
        return limiting_reason == Reason::separating || limiting_reason == Reason::focal;
    }
};

struct CutOptions {
    double t_max = 0.0;    // 0: use 10x a submanifold diameter estimate
    double tol_d = 1e-5;   // distance-predicate tolerance
    double geo_tol = 1e-9;
    bool classify = true;  // focal time + multiplicity classification
    DistanceOptions dist;
};

// Bisection on the predicate d(N, gamma_n(t)) < t - tol_d; valid because
// {t : d(N, gamma(t)) = t} is an interval containing 0.
CutSample cut_time(const Metric& m, const SubmanifoldSpec& N, const NormalVector& n,
                   const CutOptions& opts = {});

// First zero of the transverse N-Jacobi determinant along the normal
// geodesic; empty when no focal point occurs before t_max / chart exit.
std::optional<double> first_focal_time(const Metric& m, const SubmanifoldSpec& N,
                                       const NormalVector& n, double t_max,
                                       double tol = 1e-9);

struct InjRadiusTable {
    double inj_plus = kInfSentinel;
    int argmin = -1;
    std::vector<CutSample> samples;
};

// Infimum of cut_time over a low-discrepancy sample of the unit normal cone
// (both co-orientations for hypersurfaces).
InjRadiusTable inj_radius_submanifold(const Metric& m, const SubmanifoldSpec& N, int sample_count,
                                      const CutOptions& opts = {}, int workers = 1);

// Indices of queries reached by >= 2 distinct N-segments (or a degenerate
// all-directions minimum).
std::vector<int> separating_points(const Metric& m, const SubmanifoldSpec& N,
                                   const std::vector<Vec>& queries,
                                   const CutOptions& opts = {});

struct CutCloud {
    std::vector<CutSample> samples;   // finite-cut samples only
    double min_dist_to_N = kInfSentinel;
    double inj_estimate = kInfSentinel;  // over all samples, incl. non-bracketed
};

CutCloud cut_locus_sample(const Metric& m, const SubmanifoldSpec& N, int normal_count,
                          const CutOptions& opts = {}, int workers = 1);

struct TubularReport {
    double epsilon = 0.0;
    double inj_plus = 0.0;  // coarse estimate used for context
    int collision_count = 0;
    // first verified collision: two preimages mapping to (nearly) one point
    Vec collision_pre_a, collision_pre_b;  // (u, side, t) triples
    double min_pairwise_image_separation = kInfSentinel;
    int probe_count = 0;
    int probe_failures = 0;  // image-characterization probes not reproduced

    bool epsilon_too_large() const { return collision_count > 0; }
};

// Certifies injectivity of the normal exponential on the epsilon-cone
// neighborhood by sampled pair analysis (verified through the interval
// structure of d(N, .)), plus image-characterization probes.
TubularReport tubular_verify(const Metric& m, const SubmanifoldSpec& N, double epsilon,
                             int probe_count, const CutOptions& opts = {}, int workers = 1);

struct SingletonReport {
    bool unique = true;
    std::vector<Vec> witnesses;
    double value = 0.0;
};

// All minimizers of x in N -> d(x, q) within tol of the global minimum: the
// numerical form of "S_-(q, d(N,q)) intersects N in a singleton".
SingletonReport singleton_intersection_check(const Metric& m, const SubmanifoldSpec& N,
                                             const Vec& q, double tol,
                                             const CutOptions& opts = {});

struct SphereConditionReport {
    bool interior = false;
    bool exterior = false;
    double rho_inward = 0.0, rho_outward = 0.0;
};

// Interior/exterior sphere condition of the region bounded by a closed planar
// curve, at boundary parameter u and radius r. Euclidean ambient only.
SphereConditionReport sphere_condition(const Metric& m, const SubmanifoldSpec& N, const Vec& u,
                                       double r, const CutOptions& opts = {});

// Uniform variant: infimum over sampled boundary points.
SphereConditionReport uniform_sphere_condition(const Metric& m, const SubmanifoldSpec& N,
                                               double r, int samples,
                                               const CutOptions& opts = {});

// Images exp^nu(r v) over v in S(nu_p): the front-cone slice at radius r.
// Verifies pairwise distinctness and containment in {d(N, .) = r}; throws
// RadiusBeyondInjectivity when containment fails.
std::vector<Vec> front_cone_sample(const Metric& m, const SubmanifoldSpec& N, const Vec& u,
                                   double r, int dir_samples = 64,
                                   const CutOptions& opts = {});

// Crude F-diameter estimate of a compact submanifold (max pairwise chart
// distance over a parameter sample), used for default horizons.
double submanifold_diameter_estimate(const Metric& m, const SubmanifoldSpec& N, int samples = 32);

}  // namespace finsler
