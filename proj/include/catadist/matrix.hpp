#pragma once

#include <complex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "catadist/errors.hpp"

namespace catadist {

using cplx = std::complex<double>;
using Mat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;

/// Desk-scale cap on the dimension of any single matrix.
inline constexpr int kMaxTotalDim = 4096;

void check_dim_cap(long long rows, long long cols);

/// One labeled tensor factor.
struct Subsystem {
    std::string label;
    int dim = 0;
};

/// Ordered list of labeled subsystem dimensions; the bookkeeping spine for
/// all tensor operations. Labels are unique, total dimension is capped.
class SystemLayout {
  public:
    SystemLayout() = default;
    explicit SystemLayout(std::vector<Subsystem> subsystems);

    static SystemLayout single(std::string label, int dim);
    /// Labels "<prefix>1".."<prefix>count", all of dimension `dim`.
    static SystemLayout uniform(const std::string& prefix, int count, int dim);

    int size() const { return static_cast<int>(subs_.size()); }
    int total_dim() const { return total_; }
    int dim(int i) const { return subs_.at(i).dim; }
    const std::string& label(int i) const { return subs_.at(i).label; }
    const std::vector<Subsystem>& subsystems() const { return subs_; }
    std::vector<int> dims() const;

    int index_of(std::string_view label) const;
    bool has_label(std::string_view label) const;
    std::vector<int> indices_of(std::span<const std::string> labels) const;

    /// Sub-layout of the given subsystem indices, in the given order.
    SystemLayout select(const std::vector<int>& indices) const;
    /// Sub-layout of everything except the given indices, in layout order.
    SystemLayout drop(const std::vector<int>& indices) const;
    SystemLayout concat(const SystemLayout& other) const;
    SystemLayout with_suffix(const std::string& suffix) const;

    bool operator==(const SystemLayout& other) const;

  private:
    std::vector<Subsystem> subs_;
    int total_ = 1;
};

// ---- construction helpers ----

Mat identity_mat(int n);
Mat zero_mat(int rows, int cols);
/// |i><j| in dimension d.
Mat basis_op(int d, int i, int j);

// ---- core tensor algebra ----

Mat kron(const Mat& a, const Mat& b);
/// kron of `copies` copies of a (copies == 0 gives the 1x1 identity).
Mat kron_power(const Mat& a, int copies);

/// Reduce `m` to the subsystems in `keep_indices` (result in layout order).
Mat partial_trace_indices(const Mat& m, const std::vector<int>& dims,
                          std::vector<int> keep_indices);
Mat partial_trace(const Mat& m, const SystemLayout& layout,
                  std::span<const std::string> keep_labels);

/// Conjugate by the permutation unitary. new_order[j] is the index of the old
/// subsystem placed at position j; the result lives on the permuted layout.
Mat permute_subsystems(const Mat& m, const SystemLayout& layout,
                       const std::vector<int>& new_order);
SystemLayout permute_layout(const SystemLayout& layout, const std::vector<int>& new_order);

/// Transpose only the listed subsystems.
Mat partial_transpose(const Mat& m, const SystemLayout& layout,
                      std::span<const std::string> labels);

// ---- scalar functionals ----

double trace_norm(const Mat& m);
/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 for PSD inputs.
double fidelity(const Mat& rho, const Mat& sigma);

// ---- Hermitian helpers ----

double max_offhermiticity(const Mat& m);
Mat hermitized(const Mat& m);
/// Eigenvalues of a Hermitian matrix, ascending. Symmetrizes drift below
/// 1e-10 off-Hermiticity; larger asymmetry is an error.
RVec eigvalsh(const Mat& m);
void eigh(const Mat& m, RVec& evals, Mat& evecs);
double min_eigenvalue(const Mat& m);
/// PSD square root; eigenvalues in [-1e-10, 0) are clipped to 0.
Mat sqrt_psd(const Mat& m, double neg_tol = 1e-10);
void check_psd(const Mat& m, double tol, const std::string& what);

// ---- structured slot contraction ----
// The operator (I_a x K x I_b) applied without materializing the kron.

/// (I_a x K x I_b) * x, where x has a*din*b rows.
Mat lmul_structured(const Mat& k, const Mat& x, int a, int b);
/// x * (I_a x K x I_b)^dagger, where x has a*din*b columns.
Mat rmul_structured_dagger(const Mat& x, const Mat& k, int a, int b);
/// (I_a x K x I_b) x (I_a x K x I_b)^dagger.
Mat sandwich_structured(const Mat& k, const Mat& x, int a, int b);
/// Sum of sandwich_structured over a Kraus list.
Mat apply_kraus_structured(const std::vector<Mat>& kraus, const Mat& x, int a, int b);

}  // namespace catadist
