#pragma once

#include <optional>

#include "finsler/submanifold.hpp"

namespace finsler {

struct DistanceOptions {
    enum class Force { automatic, closed_form, shooting };
    Force force = Force::automatic;
    bool want_minimizer = true;
    int multi_starts = 64;
    int refine_basins = 4;
    double shoot_tol = 1e-10;       // endpoint residual (relative to scale)
    double basin_tol = 1e-6;        // integrator tolerance during the sweep
    double cluster_angle = 0.05;    // radians; distinct-minimizer rule
    double cluster_foot = 1e-3;     // foot-point separation rule (times scale)
    double cluster_value = 1e-4;    // value window for counting minimizers
    int sweep_samples = 96;         // submanifold coarse sweep resolution
    bool multiplicity_resolve = true;  // fine bracket subdivision + clustering
    double t_cap_factor = 3.0;
};

struct DistanceResult {
    enum class Method { closed_form, shooting, grid_oracle };

    double value = 0.0;
    GeodesicRecord minimizer;  // empty when want_minimizer is false
    Vec initial_direction;     // unit-F departure velocity
    int multiplicity = 1;
    bool degenerate = false;  // all-directions minima (resolved by sampling only)
    Method method = Method::closed_form;
    Vec foot_param;                // submanifold distances: minimizing parameter
    std::vector<Vec> foot_points;  // one representative per tied minimizer cluster
    double normal_residual = 0.0;  // first-variation residual at the foot
};

// Finsler distance d(p, q): closed form for flat metrics and for charts with
// stored global formulas, multi-start geodesic shooting otherwise (or when
// forced). Throws Unreachable when every shot leaves the chart.
DistanceResult distance_point(const Metric& m, const Vec& p, const Vec& q,
                              const DistanceOptions& opts = {});

// d(N, q) = inf_u d(x(u), q): coarse parameter sweep, local refinement, and
// minimizer clustering. The returned minimizer is an N-segment whose initial
// velocity lies in the normal cone of N up to `normal_residual`.
DistanceResult distance_to_submanifold(const Metric& m, const SubmanifoldSpec& N, const Vec& q,
                                       const DistanceOptions& opts = {});

// Independent brute-force oracle: shortest paths on a regular grid with a
// 32-neighbor stencil, edge weight F(midpoint, edge vector). 2-d only.
class GridOracle {
public:
    GridOracle(const Metric& m, const Vec& lo, const Vec& hi, double h);

    // Endpoints are linked into the graph as off-grid nodes, so the only
    // systematic error is stencil metrication (about 1.3% angular).
    double distance(const Vec& p, const Vec& q) const;

    double step() const { return h_; }

private:
    int node_of(int i, int j) const { return j * nx_ + i; }
    Vec coord(int i, int j) const;

    const Metric* m_;
    Vec lo_, hi_;
    double h_;
    int nx_ = 0, ny_ = 0;
    std::vector<std::pair<int, int>> stencil_;
};

}  // namespace finsler
