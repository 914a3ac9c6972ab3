#pragma once

#include "catadist/channel.hpp"
#include "catadist/sdp.hpp"

namespace catadist {

struct DiamondResult {
    double value = 0.0;  // (1/2) ||N - M||_diamond
    double gap = 0.0;
    int iterations = 0;
    SdpStatus status = SdpStatus::numerical_failure;
    double pinfeas = 0.0, dinfeas = 0.0;
    std::vector<SdpIterRecord> log;
};

/// Diamond distance (1/2)||N - M||_diamond via the SDP
///   max { <J(N-M), W> : 0 <= W <= rho ox I_out, tr rho = 1 }.
DiamondResult diamond_distance_full(const QuantumOp& n, const QuantumOp& m, double tol = 1e-9);
/// Throws on non-convergence, reporting residuals.
double diamond_distance(const QuantumOp& n, const QuantumOp& m, double tol = 1e-9);

struct MutualInfoIterRecord {
    int iter = 0;
    double value = 0.0, gap = 0.0, step = 0.0;
};

struct MutualInfoResult {
    double value = 0.0;  // bits
    Mat optimizer_rho;
    int iterations = 0;
    double gap_estimate = 0.0;
    bool converged = false;
    std::vector<MutualInfoIterRecord> log;
};

/// Von Neumann entropy in bits.
double entropy_bits(const Mat& rho);
/// Mutual information I(B:R) of the channel output on a purification of rho.
double mutual_info_of_input(const QuantumOp& n, const Mat& rho);

/// I(N) = sup_rho I(B:R), maximized by entropy-gradient ascent with
/// projection to the spectrahedron; the quantity is concave in rho.
MutualInfoResult channel_mutual_information(const QuantumOp& n, double tol = 1e-7,
                                            int max_iters = 5000);

double binary_entropy(double x);
/// f(eps) = 3 eps log2(d_ab) + 3 h2(eps); eps must lie in [0, 1].
double continuity_bound(double eps, int d_ab);

/// Euclidean projection onto density matrices (eigenvalue simplex projection).
Mat project_to_density(const Mat& h);

}  // namespace catadist
