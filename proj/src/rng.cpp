#include "catadist/rng.hpp"

#include <Eigen/QR>

namespace catadist {

Mat random_ginibre(Rng& rng, int rows, int cols) {
    Mat g(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) g(i, j) = rng.cnormal();
    }
    return g;
}

Mat random_unitary(Rng& rng, int d) {
    Mat g = random_ginibre(rng, d, d);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    // fix phases so the distribution is Haar
    for (int j = 0; j < d; ++j) {
        cplx rjj = r(j, j);
        double a = std::abs(rjj);
        q.col(j) *= (a > 0) ? rjj / a : cplx(1.0);
    }
    return q;
}

CVec random_pure(Rng& rng, int d) {
    CVec v(d);
    for (int i = 0; i < d; ++i) v(i) = rng.cnormal();
    v.normalize();
    return v;
}

Mat random_density(Rng& rng, int d) {
    Mat g = random_ginibre(rng, d, d);
    Mat rho = g * g.adjoint();
    rho /= rho.trace();
    return hermitized(rho);
}

std::vector<Mat> random_cptp_kraus(Rng& rng, int d_in, int d_out, int env_dim) {
    // isometry V: C^{d_in} -> C^{d_out * env}, rows indexed (o, e)
    Mat g = random_ginibre(rng, d_out * env_dim, d_in);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    Mat v = q.leftCols(d_in);
    std::vector<Mat> kraus;
    kraus.reserve(env_dim);
    for (int e = 0; e < env_dim; ++e) {
        Mat k(d_out, d_in);
        for (int o = 0; o < d_out; ++o) k.row(o) = v.row(o * env_dim + e);
        kraus.push_back(std::move(k));
    }
    return kraus;
}

}  // namespace catadist
