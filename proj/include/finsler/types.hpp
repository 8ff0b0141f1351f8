#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace finsler {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error taxonomy shared by all modules. Preconditions throw; recoverable
// findings (e.g. a tubular collision) are reported in result structs instead.
enum class ErrorCode {
    ZeroVector,
    OutsideChart,
    OutsideDomain,
    NoConvergence,
    StepFailure,
    DegenerateFlag,
    ZeroReference,
    NotNormal,
    NotSelfAdjoint,
    NotC2,
    NotPlanar,
    Unreachable,
    OutOfBox,
    SingularPoint,
    PoleCrossing,
    RadiusTooLarge,
    RadiusBeyondInjectivity,
    SchemaError,
    TaskError,
    InvalidArgument,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

// A tangent vector anchored at a chart point. Components are coordinate
// velocities in chart units.
struct TangentVector {
    Vec point;
    Vec components;
};

// A covector (dual components) anchored at a chart point.
struct Covector {
    Vec point;
    Vec components;
};

// A symmetric bilinear form at a point, tagged with the reference vector it
// was evaluated at (the fundamental tensor g_v, a hessian, ...).
struct SymmetricBilinear {
    Vec point;
    Vec reference_vector;
    Mat matrix;

    double operator()(const Vec& a, const Vec& b) const { return a.dot(matrix * b); }
};

inline TangentVector tangent(const Vec& p, const Vec& v) { return TangentVector{p, v}; }

inline Vec vec2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

// Deterministic RNG used by samplers and verification suites.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(gen_);
    }

    int uniform_int(int lo, int hi) {
        std::uniform_int_distribution<int> d(lo, hi);
        return d(gen_);
    }

    Vec vector(int dim, double lo, double hi) {
        Vec v(dim);
        for (int i = 0; i < dim; ++i) v[i] = uniform(lo, hi);
        return v;
    }

    // Nonzero direction, Euclidean-normalized.
    Vec direction(int dim) {
        std::normal_distribution<double> d(0.0, 1.0);
        Vec v(dim);
        do {
            for (int i = 0; i < dim; ++i) v[i] = d(gen_);
        } while (v.norm() < 1e-12);
        return v / v.norm();
    }

    std::uint64_t next() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

// Chunked parallel map over [0, n). Results are written by index, so the
// output is independent of scheduling. The first exception thrown by any
// worker is rethrown on the calling thread after the join.
template <typename F>
void parallel_for(int n, int workers, F&& body) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    int k = std::min(workers, n);
    pool.reserve(static_cast<std::size_t>(k));
    for (int w = 0; w < k; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

inline int default_workers() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace finsler
