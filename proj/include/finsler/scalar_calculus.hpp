#pragma once

#include "finsler/submanifold.hpp"

namespace finsler {

// A scalar function on the chart; derivatives fall back to central
// differences at step fd_step * max(1, |p|) when no differential is given.
// Evaluation points are assumed to be smooth points of f.
struct ScalarField {
    std::function<double(const Vec&)> eval;
    std::function<Vec(const Vec&)> differential;  // optional analytic df
    double fd_step = 1e-5;

    Vec df(const Vec& p) const;
};

// Finslerian gradient L^{-1}(df). Throws SingularPoint when df vanishes.
TangentVector gradient(const Metric& m, const ScalarField& f, const Vec& p);

// Hessian via XY(f) - (nabla_X Y)(f) with constant-component extensions:
//   Hess_ij = d2f/dx_i dx_j - Gamma^l_ij(p, grad f) df_l.
SymmetricBilinear hessian(const Metric& m, const ScalarField& f, const Vec& p);

// The alternative formula g_{grad f}(nabla_X grad f, Y); agrees with
// `hessian` up to finite-difference noise and is kept as the cross-check.
Mat hessian_via_gradient(const Metric& m, const ScalarField& f, const Vec& p);

// Shape operator of the level set P = f^{-1}(f(p)) along the normalized
// gradient, recovered from g_n(A x, y) = -Hess(f)(x, y) / F(grad f).
ShapeOperator level_set_shape_from_hessian(const Metric& m, const ScalarField& f, const Vec& p);

}  // namespace finsler
