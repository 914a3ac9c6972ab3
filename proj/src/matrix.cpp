#include "catadist/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace catadist {

void check_dim_cap(long long rows, long long cols) {
    if (rows > kMaxTotalDim || cols > kMaxTotalDim) {
        throw CapExceededError("matrix dimension " + std::to_string(rows) + "x" +
                               std::to_string(cols) + " exceeds desk-scale cap " +
                               std::to_string(kMaxTotalDim));
    }
}

SystemLayout::SystemLayout(std::vector<Subsystem> subsystems) : subs_(std::move(subsystems)) {
    std::set<std::string> seen;
    long long total = 1;
    for (const auto& s : subs_) {
        if (s.dim < 1) throw DimensionError("subsystem '" + s.label + "' has non-positive dim");
        if (!seen.insert(s.label).second) {
            throw DimensionError("duplicate subsystem label '" + s.label + "'");
        }
        total *= s.dim;
        if (total > kMaxTotalDim) {
            throw CapExceededError("layout total dimension exceeds cap " +
                                   std::to_string(kMaxTotalDim));
        }
    }
    total_ = static_cast<int>(total);
}

SystemLayout SystemLayout::single(std::string label, int dim) {
    return SystemLayout({{std::move(label), dim}});
}

SystemLayout SystemLayout::uniform(const std::string& prefix, int count, int dim) {
    std::vector<Subsystem> subs;
    subs.reserve(count);
    for (int i = 1; i <= count; ++i) subs.push_back({prefix + std::to_string(i), dim});
    return SystemLayout(std::move(subs));
}

std::vector<int> SystemLayout::dims() const {
    std::vector<int> d(subs_.size());
    for (size_t i = 0; i < subs_.size(); ++i) d[i] = subs_[i].dim;
    return d;
}

int SystemLayout::index_of(std::string_view label) const {
    for (size_t i = 0; i < subs_.size(); ++i) {
        if (subs_[i].label == label) return static_cast<int>(i);
    }
    throw DimensionError("unknown subsystem label '" + std::string(label) + "'");
}

bool SystemLayout::has_label(std::string_view label) const {
    for (const auto& s : subs_) {
        if (s.label == label) return true;
    }
    return false;
}

std::vector<int> SystemLayout::indices_of(std::span<const std::string> labels) const {
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(index_of(l));
    return out;
}

SystemLayout SystemLayout::select(const std::vector<int>& indices) const {
    std::vector<Subsystem> subs;
    subs.reserve(indices.size());
    for (int i : indices) subs.push_back(subs_.at(i));
    return SystemLayout(std::move(subs));
}

SystemLayout SystemLayout::drop(const std::vector<int>& indices) const {
    std::set<int> dropped(indices.begin(), indices.end());
    std::vector<Subsystem> subs;
    for (int i = 0; i < size(); ++i) {
        if (!dropped.count(i)) subs.push_back(subs_[i]);
    }
    return SystemLayout(std::move(subs));
}

SystemLayout SystemLayout::concat(const SystemLayout& other) const {
    std::vector<Subsystem> subs = subs_;
    subs.insert(subs.end(), other.subs_.begin(), other.subs_.end());
    return SystemLayout(std::move(subs));
}

SystemLayout SystemLayout::with_suffix(const std::string& suffix) const {
    std::vector<Subsystem> subs = subs_;
    for (auto& s : subs) s.label += suffix;
    return SystemLayout(std::move(subs));
}

bool SystemLayout::operator==(const SystemLayout& other) const {
    if (subs_.size() != other.subs_.size()) return false;
    for (size_t i = 0; i < subs_.size(); ++i) {
        if (subs_[i].label != other.subs_[i].label || subs_[i].dim != other.subs_[i].dim)
            return false;
    }
    return true;
}

Mat identity_mat(int n) { return Mat::Identity(n, n); }

Mat zero_mat(int rows, int cols) { return Mat::Zero(rows, cols); }

Mat basis_op(int d, int i, int j) {
    Mat m = Mat::Zero(d, d);
    m(i, j) = 1.0;
    return m;
}

Mat kron(const Mat& a, const Mat& b) {
    check_dim_cap(a.rows() * b.rows(), a.cols() * b.cols());
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Mat kron_power(const Mat& a, int copies) {
    if (copies < 0) throw DimensionError("kron_power: negative copy count");
    Mat out = Mat::Ones(1, 1);
    for (int i = 0; i < copies; ++i) out = kron(out, a);
    return out;
}

namespace {

// Mixed-radix offsets of every multi-index over the chosen subsystems,
// with strides taken from the full layout.
std::vector<long long> index_offsets(const std::vector<int>& dims,
                                     const std::vector<long long>& strides,
                                     const std::vector<int>& chosen) {
    long long count = 1;
    for (int i : chosen) count *= dims[i];
    std::vector<long long> offsets(count, 0);
    long long repeat = count;
    for (int i : chosen) {
        repeat /= dims[i];
        long long idx = 0;
        long long block = repeat * dims[i];
        for (long long pos = 0; pos < count; ++pos) {
            long long digit = (pos % block) / repeat;
            offsets[pos] += digit * strides[i];
            (void)idx;
        }
    }
    return offsets;
}

std::vector<long long> layout_strides(const std::vector<int>& dims) {
    std::vector<long long> strides(dims.size(), 1);
    for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i) {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    return strides;
}

}  // namespace

Mat partial_trace_indices(const Mat& m, const std::vector<int>& dims,
                          std::vector<int> keep_indices) {
    long long total = 1;
    for (int d : dims) total *= d;
    if (m.rows() != m.cols() || m.rows() != total) {
        throw DimensionError("partial_trace: matrix does not match layout dims");
    }
    std::sort(keep_indices.begin(), keep_indices.end());
    for (size_t i = 0; i < keep_indices.size(); ++i) {
        if (keep_indices[i] < 0 || keep_indices[i] >= static_cast<int>(dims.size()))
            throw DimensionError("partial_trace: subsystem index out of range");
        if (i > 0 && keep_indices[i] == keep_indices[i - 1])
            throw DimensionError("partial_trace: duplicate subsystem index");
    }
    std::vector<int> traced;
    for (int i = 0; i < static_cast<int>(dims.size()); ++i) {
        if (!std::binary_search(keep_indices.begin(), keep_indices.end(), i)) traced.push_back(i);
    }
    auto strides = layout_strides(dims);
    auto keep_off = index_offsets(dims, strides, keep_indices);
    auto tr_off = index_offsets(dims, strides, traced);

    const long long dk = static_cast<long long>(keep_off.size());
    Mat out = Mat::Zero(dk, dk);
    for (long long r = 0; r < dk; ++r) {
        for (long long c = 0; c < dk; ++c) {
            cplx acc = 0.0;
            for (long long t : tr_off) acc += m(keep_off[r] + t, keep_off[c] + t);
            out(r, c) = acc;
        }
    }
    return out;
}

Mat partial_trace(const Mat& m, const SystemLayout& layout,
                  std::span<const std::string> keep_labels) {
    return partial_trace_indices(m, layout.dims(), layout.indices_of(keep_labels));
}

SystemLayout permute_layout(const SystemLayout& layout, const std::vector<int>& new_order) {
    if (static_cast<int>(new_order.size()) != layout.size())
        throw DimensionError("permute: order size does not match layout");
    std::vector<bool> seen(new_order.size(), false);
    for (int i : new_order) {
        if (i < 0 || i >= layout.size() || seen[i])
            throw DimensionError("permute: not a permutation of subsystem indices");
        seen[i] = true;
    }
    return layout.select(new_order);
}

Mat permute_subsystems(const Mat& m, const SystemLayout& layout,
                       const std::vector<int>& new_order) {
    permute_layout(layout, new_order);  // validates
    auto dims = layout.dims();
    if (m.rows() != layout.total_dim() || m.cols() != layout.total_dim())
        throw DimensionError("permute: matrix does not match layout");
    auto old_strides = layout_strides(dims);
    const int n = layout.size();
    const long long total = layout.total_dim();

    // map new flat index -> old flat index
    std::vector<long long> to_old(total);
    std::vector<int> new_dims(n);
    for (int j = 0; j < n; ++j) new_dims[j] = dims[new_order[j]];
    auto new_strides = layout_strides(new_dims);
    for (long long x = 0; x < total; ++x) {
        long long rem = x;
        long long old_idx = 0;
        for (int j = 0; j < n; ++j) {
            long long digit = rem / new_strides[j];
            rem %= new_strides[j];
            old_idx += digit * old_strides[new_order[j]];
        }
        to_old[x] = old_idx;
    }
    Mat out(total, total);
    for (long long r = 0; r < total; ++r) {
        for (long long c = 0; c < total; ++c) out(r, c) = m(to_old[r], to_old[c]);
    }
    return out;
}

Mat partial_transpose(const Mat& m, const SystemLayout& layout,
                      std::span<const std::string> labels) {
    auto dims = layout.dims();
    if (m.rows() != layout.total_dim() || m.cols() != layout.total_dim())
        throw DimensionError("partial_transpose: matrix does not match layout");
    auto idx = layout.indices_of(labels);
    std::sort(idx.begin(), idx.end());
    std::vector<int> rest;
    for (int i = 0; i < layout.size(); ++i) {
        if (!std::binary_search(idx.begin(), idx.end(), i)) rest.push_back(i);
    }
    auto strides = layout_strides(dims);
    auto t_off = index_offsets(dims, strides, idx);
    auto r_off = index_offsets(dims, strides, rest);
    Mat out(m.rows(), m.cols());
    for (long long ra : r_off) {
        for (long long rb : r_off) {
            for (long long ta : t_off) {
                for (long long tb : t_off) {
                    out(ra + ta, rb + tb) = m(ra + tb, rb + ta);
                }
            }
        }
    }
    return out;
}

double max_offhermiticity(const Mat& m) {
    if (m.rows() != m.cols()) throw DimensionError("expected a square matrix");
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

Mat hermitized(const Mat& m) { return 0.5 * (m + Mat(m.adjoint())); }

void eigh(const Mat& m, RVec& evals, Mat& evecs) {
    if (m.rows() != m.cols()) throw DimensionError("eigh: expected a square matrix");
    double off = max_offhermiticity(m);
    if (off > 1e-10) {
        throw InvariantError("eigh: matrix is not Hermitian (off-Hermiticity " +
                             std::to_string(off) + ")");
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitized(m));
    if (es.info() != Eigen::Success) throw InvariantError("eigh: decomposition failed");
    evals = es.eigenvalues();
    evecs = es.eigenvectors();
}

RVec eigvalsh(const Mat& m) {
    RVec evals;
    Mat evecs;
    eigh(m, evals, evecs);
    return evals;
}

double min_eigenvalue(const Mat& m) {
    RVec ev = eigvalsh(m);
    return ev.minCoeff();
}

double trace_norm(const Mat& m) {
    if (m.rows() != m.cols()) throw DimensionError("trace_norm: expected a square matrix");
    if (max_offhermiticity(m) <= 1e-10) {
        return eigvalsh(m).cwiseAbs().sum();
    }
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues().sum();
}

Mat sqrt_psd(const Mat& m, double neg_tol) {
    RVec evals;
    Mat evecs;
    eigh(m, evals, evecs);
    if (evals.minCoeff() < -neg_tol) {
        throw InvariantError("sqrt_psd: matrix is not PSD (min eigenvalue " +
                             std::to_string(evals.minCoeff()) + ")");
    }
    RVec root = evals.cwiseMax(0.0).cwiseSqrt();
    return evecs * root.asDiagonal() * evecs.adjoint();
}

void check_psd(const Mat& m, double tol, const std::string& what) {
    double lo = min_eigenvalue(m);
    if (lo < -tol) {
        throw InvariantError(what + ": not PSD within tolerance (min eigenvalue " +
                             std::to_string(lo) + ")");
    }
}

double fidelity(const Mat& rho, const Mat& sigma) {
    if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
        throw DimensionError("fidelity: dimension mismatch");
    Mat a = sqrt_psd(rho);
    Mat inner = a * sigma * a;
    RVec evals;
    Mat evecs;
    eigh(inner, evals, evecs);
    if (evals.minCoeff() < -1e-10)
        throw InvariantError("fidelity: inner matrix not PSD; inputs must be PSD");
    double tr = evals.cwiseMax(0.0).cwiseSqrt().sum();
    return tr * tr;
}

Mat lmul_structured(const Mat& k, const Mat& x, int a, int b) {
    const long long din = k.cols(), dout = k.rows();
    if (x.rows() != a * din * b) throw DimensionError("lmul_structured: row mismatch");
    const long long cols = x.cols();
    Mat out(a * dout * b, cols);
    // For fixed outer index, the slab over (slot, inner*cols) is a contiguous
    // row-major block, so each outer index is one small GEMM.
    using CMap = Eigen::Map<const Mat>;
    using MMap = Eigen::Map<Mat>;
    for (int ia = 0; ia < a; ++ia) {
        CMap slab(x.data() + ia * din * b * cols, din, b * cols);
        MMap oslab(out.data() + ia * dout * b * cols, dout, b * cols);
        oslab.noalias() = k * slab;
    }
    return out;
}

Mat rmul_structured_dagger(const Mat& x, const Mat& k, int a, int b) {
    const long long din = k.cols(), dout = k.rows();
    if (x.cols() != a * din * b) throw DimensionError("rmul_structured_dagger: col mismatch");
    const long long rows = x.rows();
    Mat out(rows, a * dout * b);
    Mat kc = k.conjugate();  // x * (I x K x I)^dag contracts with conj(K)
    using CMap = Eigen::Map<const Mat>;
    using MMap = Eigen::Map<Mat>;
    for (long long r = 0; r < rows; ++r) {
        for (int ia = 0; ia < a; ++ia) {
            CMap seg(x.data() + r * x.cols() + ia * din * b, din, b);
            MMap oseg(out.data() + r * out.cols() + ia * dout * b, dout, b);
            oseg.noalias() = kc * seg;
        }
    }
    return out;
}

Mat sandwich_structured(const Mat& k, const Mat& x, int a, int b) {
    return rmul_structured_dagger(lmul_structured(k, x, a, b), k, a, b);
}

Mat apply_kraus_structured(const std::vector<Mat>& kraus, const Mat& x, int a, int b) {
    if (kraus.empty()) throw DimensionError("apply_kraus_structured: empty Kraus list");
    Mat out = sandwich_structured(kraus[0], x, a, b);
    for (size_t i = 1; i < kraus.size(); ++i) out += sandwich_structured(kraus[i], x, a, b);
    return out;
}

}  // namespace catadist
