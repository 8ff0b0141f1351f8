#include "finsler/scalar_calculus.hpp"

#include <cmath>

namespace finsler {

Vec ScalarField::df(const Vec& p) const {
    if (differential) return differential(p);
    const int d = static_cast<int>(p.size());
    const double h = fd_step * std::max(1.0, p.norm());
    Vec out(d);
    for (int i = 0; i < d; ++i) {
        Vec e = Vec::Zero(d);
        e[i] = h;
        out[i] = (eval(p + e) - eval(p - e)) / (2 * h);
    }
    return out;
}

TangentVector gradient(const Metric& m, const ScalarField& f, const Vec& p) {
    m.require_in_domain(p);
    Vec dfp = f.df(p);
    if (dfp.norm() < 1e-10)
        fail(ErrorCode::SingularPoint, "gradient: df vanishes, hessian machinery undefined");
    return m.legendre_inverse(Covector{p, dfp});
}

SymmetricBilinear hessian(const Metric& m, const ScalarField& f, const Vec& p) {
    const int d = m.dim();
    TangentVector gf = gradient(m, f, p);
    Vec dfp = f.df(p);
    const double h = f.fd_step * std::max(1.0, p.norm());
    Mat H(d, d);
    const double f0 = f.eval(p);
    for (int i = 0; i < d; ++i) {
        Vec ei = Vec::Zero(d);
        ei[i] = h;
        H(i, i) = (f.eval(p + ei) - 2 * f0 + f.eval(p - ei)) / (h * h);
        for (int j = i + 1; j < d; ++j) {
            Vec ej = Vec::Zero(d);
            ej[j] = h;
            H(i, j) = H(j, i) = (f.eval(p + ei + ej) - f.eval(p + ei - ej) - f.eval(p - ei + ej) +
                                 f.eval(p - ei - ej)) /
                                (4 * h * h);
        }
    }
    auto Gamma = chern_coefficients(m, gf);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int l = 0; l < d; ++l) H(i, j) -= Gamma[static_cast<std::size_t>(l)](i, j) * dfp[l];
    return SymmetricBilinear{p, gf.components, H};
}

Mat hessian_via_gradient(const Metric& m, const ScalarField& f, const Vec& p) {
    const int d = m.dim();
    TangentVector gf = gradient(m, f, p);
    Mat gv = m.g(p, gf.components);
    auto Gamma = chern_coefficients(m, gf);
    const double h = f.fd_step * std::max(1.0, p.norm());
    Mat B(d, d);
    for (int i = 0; i < d; ++i) {
        Vec e = Vec::Zero(d);
        e[i] = h;
        Vec gp = gradient(m, f, Vec(p + e)).components;
        Vec gm = gradient(m, f, Vec(p - e)).components;
        Vec dgrad = (gp - gm) / (2 * h);
        for (int l = 0; l < d; ++l)
            dgrad[l] += Gamma[static_cast<std::size_t>(l)].row(i).dot(gf.components);
        B.row(i) = (gv * dgrad).transpose();
    }
    return B;
}

ShapeOperator level_set_shape_from_hessian(const Metric& m, const ScalarField& f, const Vec& p) {
    const int d = m.dim();
    TangentVector gf = gradient(m, f, p);  // throws SingularPoint when df = 0
    double fn = m.F(gf);
    Vec nhat = gf.components / fn;
    Mat gn = m.g(p, nhat);
    SymmetricBilinear H = hessian(m, f, p);

    // Tangent frame of the level set: kernel of df.
    Vec dfp = f.df(p);
    Mat W(d, d - 1);
    if (d == 2) {
        W.col(0) = vec2(-dfp[1], dfp[0]) / dfp.norm();
    } else {
        Eigen::JacobiSVD<Mat> svd(Mat(dfp.transpose()), Eigen::ComputeFullV);
        for (int c = 0; c < d - 1; ++c) W.col(c) = svd.matrixV().col(c + 1);
    }
    Mat M = W.transpose() * gn * W;
    Mat S = -(W.transpose() * H.matrix * W) / fn;
    return ShapeOperator{Mat(M.ldlt().solve(S)), M, W};
}

}  // namespace finsler
