#pragma once

#include <vector>

#include "catadist/matrix.hpp"

namespace catadist {

/// One block term of a constraint or objective: a Hermitian coefficient
/// acting on variable block `block`.
struct SdpTerm {
    int block = 0;
    Mat coeff;
};

/// <A_i, X> = rhs with A_i given by Hermitian block terms.
struct SdpConstraint {
    std::vector<SdpTerm> terms;
    double rhs = 0.0;
};

/// Standard-form semidefinite program over Hermitian block variables:
///   minimize <C, X>  s.t.  <A_i, X> = b_i,  X >= 0 (block-diagonal).
struct SdpProblem {
    std::vector<int> block_dims;
    std::vector<SdpTerm> objective;
    std::vector<SdpConstraint> constraints;
    double tol = 1e-9;
    int max_iters = 200;
};

enum class SdpStatus { optimal, max_iters, numerical_failure };

struct SdpIterRecord {
    int iter = 0;
    double mu = 0, pinfeas = 0, dinfeas = 0, pobj = 0, dobj = 0;
    double step_primal = 0, step_dual = 0;
};

struct SdpResult {
    SdpStatus status = SdpStatus::numerical_failure;
    double primal_value = 0, dual_value = 0;
    double gap = 0, pinfeas = 0, dinfeas = 0;
    int iterations = 0;
    std::vector<Mat> x, z;
    std::vector<double> y;
    std::vector<SdpIterRecord> log;
};

/// Primal-dual interior-point method (Nesterov-Todd scaling, Mehrotra
/// centering heuristic), dense, for desk-scale problems.
SdpResult solve_sdp(const SdpProblem& prob);

/// Orthonormal Hermitian basis of a d-dimensional matrix space (d^2 items).
std::vector<Mat> hermitian_basis(int d);

}  // namespace catadist
