#include "catadist/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace catadist {

DiamondResult diamond_distance_full(const QuantumOp& n, const QuantumOp& m, double tol) {
    if (n.in_dim() != m.in_dim() || n.out_dim() != m.out_dim())
        throw DimensionError("diamond_distance: channel dimensions differ");
    const int di = n.in_dim();
    const int dout = n.out_dim();
    const int d = di * dout;
    Mat j = hermitized(n.choi() - m.choi());

    SdpProblem prob;
    prob.tol = tol;
    prob.block_dims = {d, d, di};  // W, slack S = rho ox I - W, rho
    prob.objective = {{0, -j}};    // maximize <J, W>

    auto basis = hermitian_basis(d);
    std::vector<int> pt_dims = {di, dout};
    for (const auto& bmat : basis) {
        SdpConstraint con;
        con.terms.push_back({0, bmat});
        con.terms.push_back({1, bmat});
        con.terms.push_back({2, -partial_trace_indices(bmat, pt_dims, {0})});
        con.rhs = 0.0;
        prob.constraints.push_back(std::move(con));
    }
    SdpConstraint trace_con;
    trace_con.terms.push_back({2, identity_mat(di)});
    trace_con.rhs = 1.0;
    prob.constraints.push_back(std::move(trace_con));

    SdpResult r = solve_sdp(prob);
    DiamondResult out;
    out.value = std::max(0.0, -0.5 * (r.primal_value + r.dual_value));
    out.gap = r.gap;
    out.iterations = r.iterations;
    out.status = r.status;
    out.pinfeas = r.pinfeas;
    out.dinfeas = r.dinfeas;
    out.log = r.log;
    return out;
}

double diamond_distance(const QuantumOp& n, const QuantumOp& m, double tol) {
    DiamondResult r = diamond_distance_full(n, m, tol);
    if (r.status != SdpStatus::optimal) {
        throw InvariantError("diamond_distance: SDP did not converge (iters " +
                             std::to_string(r.iterations) + ", pinfeas " +
                             std::to_string(r.pinfeas) + ", dinfeas " +
                             std::to_string(r.dinfeas) + ", gap " + std::to_string(r.gap) + ")");
    }
    return r.value;
}

double entropy_bits(const Mat& rho) {
    RVec ev = eigvalsh(rho);
    double s = 0.0;
    for (int i = 0; i < ev.size(); ++i) {
        double p = ev(i);
        if (p > 1e-15) s -= p * std::log2(p);
    }
    return s;
}

namespace {

// complementary channel output from a Kraus list:
// Nc(rho)_{ij} = tr(K_i rho K_j^dag)
Mat complementary_apply(const std::vector<Mat>& kraus, const Mat& rho) {
    const int e = static_cast<int>(kraus.size());
    Mat out(e, e);
    for (int i = 0; i < e; ++i) {
        Mat ki_rho = kraus[i] * rho;
        for (int j = 0; j < e; ++j) {
            out(i, j) = (ki_rho * kraus[j].adjoint()).trace();
        }
    }
    return hermitized(out);
}

Mat adjoint_apply(const std::vector<Mat>& kraus, const Mat& y) {
    Mat out = Mat::Zero(kraus[0].cols(), kraus[0].cols());
    for (const auto& k : kraus) out.noalias() += k.adjoint() * y * k;
    return out;
}

Mat complementary_adjoint_apply(const std::vector<Mat>& kraus, const Mat& y) {
    const int e = static_cast<int>(kraus.size());
    Mat out = Mat::Zero(kraus[0].cols(), kraus[0].cols());
    for (int i = 0; i < e; ++i) {
        for (int j = 0; j < e; ++j) {
            out.noalias() += y(j, i) * kraus[j].adjoint() * kraus[i];
        }
    }
    return hermitized(out);
}

// log2 with eigenvalue floor, for entropy gradients near the boundary
Mat log2_floored(const Mat& rho, double floor) {
    RVec ev;
    Mat u;
    eigh(rho, ev, u);
    RVec lg(ev.size());
    for (int i = 0; i < ev.size(); ++i) lg(i) = std::log2(std::max(ev(i), floor));
    return u * lg.asDiagonal() * u.adjoint();
}

}  // namespace

double mutual_info_of_input(const QuantumOp& n, const Mat& rho) {
    // S(rho) + S(N(rho)) - S(Nc(rho)); the last term equals the entropy of
    // the joint output on a purification.
    const auto& ks = n.kraus();
    Mat nr = n.apply_mat(rho);
    Mat ncr = complementary_apply(ks, rho);
    return entropy_bits(rho) + entropy_bits(nr) - entropy_bits(ncr);
}

Mat project_to_density(const Mat& h) {
    RVec ev;
    Mat u;
    eigh(h, ev, u);
    // project eigenvalues onto the probability simplex
    const int d = static_cast<int>(ev.size());
    std::vector<double> v(ev.data(), ev.data() + d);
    std::sort(v.begin(), v.end(), std::greater<>());
    double cum = 0.0;
    double theta = 0.0;
    int k = 0;
    for (int i = 0; i < d; ++i) {
        cum += v[i];
        double t = (cum - 1.0) / (i + 1);
        if (v[i] - t > 0) {
            theta = t;
            k = i + 1;
        }
    }
    (void)k;
    RVec proj(d);
    for (int i = 0; i < d; ++i) proj(i) = std::max(ev(i) - theta, 0.0);
    return u * proj.asDiagonal() * u.adjoint();
}

MutualInfoResult channel_mutual_information(const QuantumOp& n, double tol, int max_iters) {
    if (n.trace_class() != TraceClass::preserving)
        throw InvariantError("channel_mutual_information: channel must be CPTP");
    const int d = n.in_dim();
    const auto& ks = n.kraus();
    const double floor = 1e-18;
    const double ln2 = std::log(2.0);

    Mat rho = identity_mat(d) / static_cast<double>(d);
    double value = mutual_info_of_input(n, rho);

    MutualInfoResult res;
    double step = 0.5;
    for (int iter = 0; iter < max_iters; ++iter) {
        Mat g = -log2_floored(rho, floor) - adjoint_apply(ks, log2_floored(n.apply_mat(rho), floor)) +
                complementary_adjoint_apply(ks, log2_floored(complementary_apply(ks, rho), floor));
        g = hermitized(g);
        // concavity gap: max_sigma <G, sigma - rho> = lambda_max(G) - <G, rho>
        double gmax = eigvalsh(g).maxCoeff();
        double gap = gmax - g.conjugate().cwiseProduct(rho).sum().real();
        res.log.push_back({iter, value, gap, step});
        res.value = value;
        res.optimizer_rho = rho;
        res.iterations = iter;
        res.gap_estimate = gap;
        if (gap < tol) {
            res.converged = true;
            return res;
        }
        double trial = std::min(step * 4.0, 64.0 / ln2);
        bool improved = false;
        while (trial > 1e-14) {
            Mat cand = project_to_density(rho + trial * g);
            double cand_val = mutual_info_of_input(n, cand);
            if (cand_val > value + 1e-15) {
                rho = cand;
                value = cand_val;
                step = trial;
                improved = true;
                break;
            }
            trial *= 0.5;
        }
        if (!improved) {
            // stationary within line-search resolution; report current gap
            res.converged = gap < std::max(tol, 1e-6);
            return res;
        }
    }
    res.converged = false;
    return res;
}

double binary_entropy(double x) {
    if (x < 0.0 || x > 1.0) throw DimensionError("binary_entropy: argument outside [0, 1]");
    double s = 0.0;
    if (x > 0.0) s -= x * std::log2(x);
    if (x < 1.0) s -= (1.0 - x) * std::log2(1.0 - x);
    return s;
}

double continuity_bound(double eps, int d_ab) {
    if (eps < 0.0 || eps > 1.0) throw DimensionError("continuity_bound: eps outside [0, 1]");
    if (d_ab < 1) throw DimensionError("continuity_bound: dimension must be positive");
    return 3.0 * eps * std::log2(static_cast<double>(d_ab)) + 3.0 * binary_entropy(eps);
}

}  // namespace catadist
