#include "catadist/sdp.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace catadist {

std::vector<Mat> hermitian_basis(int d) {
    std::vector<Mat> basis;
    basis.reserve(d * d);
    const double r = 1.0 / std::sqrt(2.0);
    for (int a = 0; a < d; ++a) basis.push_back(basis_op(d, a, a));
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            Mat re = r * (basis_op(d, a, b) + basis_op(d, b, a));
            Mat im = cplx(0, 1) * r * (basis_op(d, a, b) - basis_op(d, b, a));
            basis.push_back(std::move(re));
            basis.push_back(std::move(im));
        }
    }
    return basis;
}

namespace {

using BlockVec = std::vector<Mat>;

double re_inner(const Mat& a, const Mat& b) {
    return a.conjugate().cwiseProduct(b).sum().real();
}

double inner_terms(const std::vector<SdpTerm>& terms, const BlockVec& x) {
    double acc = 0.0;
    for (const auto& t : terms) acc += re_inner(t.coeff, x[t.block]);
    return acc;
}

double block_fnorm(const BlockVec& v) {
    double acc = 0.0;
    for (const auto& m : v) acc += m.squaredNorm();
    return std::sqrt(acc);
}

// Largest step alpha in [0, cap] keeping X + alpha*D PSD.
double step_to_boundary(const Mat& x, const Mat& d, double cap) {
    Eigen::SelfAdjointEigenSolver<Mat> es(x);
    RVec ev = es.eigenvalues();
    double floor = std::max(ev.maxCoeff(), 1.0) * 1e-15;
    RVec inv_sqrt = ev.cwiseMax(floor).cwiseSqrt().cwiseInverse();
    Mat s = inv_sqrt.asDiagonal() * es.eigenvectors().adjoint() * d * es.eigenvectors() *
            inv_sqrt.asDiagonal();
    double lo = Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (s + Mat(s.adjoint())))
                    .eigenvalues()
                    .minCoeff();
    if (lo >= -1e-14) return cap;
    return std::min(cap, 1.0 / (-lo));
}

struct Scaling {
    BlockVec w;       // NT scaling point
    BlockVec z_inv;   // Z^{-1}
};

Scaling nt_scaling(const BlockVec& x, const BlockVec& z) {
    Scaling s;
    s.w.resize(x.size());
    s.z_inv.resize(x.size());
    for (size_t b = 0; b < x.size(); ++b) {
        Eigen::SelfAdjointEigenSolver<Mat> ez(z[b]);
        RVec zev = ez.eigenvalues().cwiseMax(1e-300);
        Mat u = ez.eigenvectors();
        Mat z_half = u * zev.cwiseSqrt().asDiagonal() * u.adjoint();
        Mat z_ihalf = u * zev.cwiseSqrt().cwiseInverse().asDiagonal() * u.adjoint();
        s.z_inv[b] = u * zev.cwiseInverse().asDiagonal() * u.adjoint();
        Mat t = z_half * x[b] * z_half;
        Eigen::SelfAdjointEigenSolver<Mat> et(0.5 * (t + Mat(t.adjoint())));
        Mat t_half = et.eigenvectors() * et.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                     et.eigenvectors().adjoint();
        Mat w = z_ihalf * t_half * z_ihalf;
        s.w[b] = 0.5 * (w + Mat(w.adjoint()));
    }
    return s;
}

}  // namespace

SdpResult solve_sdp(const SdpProblem& prob) {
    const int nb = static_cast<int>(prob.block_dims.size());
    const int m = static_cast<int>(prob.constraints.size());
    int ntot = 0;
    for (int d : prob.block_dims) ntot += d;

    BlockVec c(nb);
    for (int b = 0; b < nb; ++b) c[b] = Mat::Zero(prob.block_dims[b], prob.block_dims[b]);
    for (const auto& t : prob.objective) c[t.block] += hermitized(t.coeff);

    RVec bvec(m);
    for (int i = 0; i < m; ++i) bvec(i) = prob.constraints[i].rhs;
    const double bnorm = bvec.norm();
    const double cnorm = block_fnorm(c);

    // group constraint terms by block for the Schur assembly
    std::vector<std::vector<std::pair<int, const Mat*>>> by_block(nb);
    for (int i = 0; i < m; ++i) {
        for (const auto& t : prob.constraints[i].terms) {
            by_block[t.block].push_back({i, &t.coeff});
        }
    }

    BlockVec x(nb), z(nb);
    for (int b = 0; b < nb; ++b) {
        x[b] = identity_mat(prob.block_dims[b]);
        z[b] = identity_mat(prob.block_dims[b]);
    }
    std::vector<double> y(m, 0.0);

    SdpResult res;
    const double tau = 0.98;

    for (int iter = 0; iter < prob.max_iters; ++iter) {
        double pobj = 0.0;
        for (int b = 0; b < nb; ++b) pobj += re_inner(c[b], x[b]);
        double dobj = 0.0;
        for (int i = 0; i < m; ++i) dobj += bvec(i) * y[i];

        RVec rp(m);
        for (int i = 0; i < m; ++i) rp(i) = bvec(i) - inner_terms(prob.constraints[i].terms, x);
        BlockVec rd(nb);
        for (int b = 0; b < nb; ++b) rd[b] = c[b] - z[b];
        for (int i = 0; i < m; ++i) {
            for (const auto& t : prob.constraints[i].terms) rd[t.block] -= y[i] * t.coeff;
        }

        double mu = 0.0;
        for (int b = 0; b < nb; ++b) mu += re_inner(x[b], z[b]);
        mu /= ntot;

        double pinf = rp.norm() / (1.0 + bnorm);
        double dinf = block_fnorm(rd) / (1.0 + cnorm);
        double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

        res.log.push_back({iter, mu, pinf, dinf, pobj, dobj, 0.0, 0.0});
        res.primal_value = pobj;
        res.dual_value = dobj;
        res.gap = relgap;
        res.pinfeas = pinf;
        res.dinfeas = dinf;
        res.iterations = iter;
        res.x = x;
        res.z = z;
        res.y = y;
        if (pinf < prob.tol && dinf < prob.tol && relgap < prob.tol) {
            res.status = SdpStatus::optimal;
            return res;
        }

        Scaling sc = nt_scaling(x, z);

        // Schur complement M_ij = sum_b <A_ib, W_b A_jb W_b>
        Eigen::MatrixXd schur = Eigen::MatrixXd::Zero(m, m);
        std::vector<std::vector<Mat>> q(nb);
        for (int b = 0; b < nb; ++b) {
            const auto& members = by_block[b];
            q[b].resize(members.size());
            for (size_t j = 0; j < members.size(); ++j) {
                q[b][j] = sc.w[b] * (*members[j].second) * sc.w[b];
            }
            for (size_t i = 0; i < members.size(); ++i) {
                for (size_t j = i; j < members.size(); ++j) {
                    double v = re_inner(*members[i].second, q[b][j]);
                    schur(members[i].first, members[j].first) += v;
                    if (members[i].first != members[j].first)
                        schur(members[j].first, members[i].first) += v;
                }
            }
        }

        Eigen::LDLT<Eigen::MatrixXd> fact;
        double ridge = 0.0;
        for (int attempt = 0; attempt < 6; ++attempt) {
            Eigen::MatrixXd reg = schur;
            if (ridge > 0) reg += ridge * Eigen::MatrixXd::Identity(m, m);
            fact.compute(reg);
            if (fact.info() == Eigen::Success && fact.isPositive()) break;
            ridge = (ridge == 0.0) ? 1e-12 : ridge * 100;
        }
        if (fact.info() != Eigen::Success) {
            res.status = SdpStatus::numerical_failure;
            return res;
        }

        BlockVec wrdw(nb);
        for (int b = 0; b < nb; ++b) wrdw[b] = sc.w[b] * rd[b] * sc.w[b];

        auto solve_direction = [&](double sigma_mu, BlockVec& dx, std::vector<double>& dy,
                                   BlockVec& dz) {
            BlockVec rc(nb);
            for (int b = 0; b < nb; ++b) rc[b] = sigma_mu * sc.z_inv[b] - x[b];
            RVec rhs(m);
            for (int i = 0; i < m; ++i) {
                rhs(i) = rp(i) - inner_terms(prob.constraints[i].terms, rc) +
                         inner_terms(prob.constraints[i].terms, wrdw);
            }
            RVec dyv = fact.solve(rhs);
            dy.assign(dyv.data(), dyv.data() + m);
            dz = rd;
            for (int i = 0; i < m; ++i) {
                for (const auto& t : prob.constraints[i].terms) dz[t.block] -= dy[i] * t.coeff;
            }
            dx.resize(nb);
            for (int b = 0; b < nb; ++b) {
                Mat d = rc[b] - sc.w[b] * dz[b] * sc.w[b];
                dx[b] = 0.5 * (d + Mat(d.adjoint()));
                dz[b] = 0.5 * (dz[b] + Mat(dz[b].adjoint()));
            }
        };

        // predictor
        BlockVec dx, dz;
        std::vector<double> dy;
        solve_direction(0.0, dx, dy, dz);
        double ap = 1.0, ad = 1.0;
        for (int b = 0; b < nb; ++b) {
            ap = std::min(ap, tau * step_to_boundary(x[b], dx[b], 1.0 / tau));
            ad = std::min(ad, tau * step_to_boundary(z[b], dz[b], 1.0 / tau));
        }
        double mu_aff = 0.0;
        for (int b = 0; b < nb; ++b) {
            mu_aff += re_inner(x[b] + ap * dx[b], z[b] + ad * dz[b]);
        }
        mu_aff = std::max(mu_aff / ntot, 0.0);
        double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
        sigma = std::clamp(sigma, 1e-10, 0.99);

        // corrector
        solve_direction(sigma * mu, dx, dy, dz);
        ap = 1.0;
        ad = 1.0;
        for (int b = 0; b < nb; ++b) {
            ap = std::min(ap, tau * step_to_boundary(x[b], dx[b], 1.0 / tau));
            ad = std::min(ad, tau * step_to_boundary(z[b], dz[b], 1.0 / tau));
        }
        ap = std::min(ap, 1.0);
        ad = std::min(ad, 1.0);
        res.log.back().step_primal = ap;
        res.log.back().step_dual = ad;

        for (int b = 0; b < nb; ++b) {
            x[b] = hermitized(x[b] + ap * dx[b]);
            z[b] = hermitized(z[b] + ad * dz[b]);
        }
        for (int i = 0; i < m; ++i) y[i] += ad * dy[i];
    }

    res.status = SdpStatus::max_iters;
    return res;
}

}  // namespace catadist
