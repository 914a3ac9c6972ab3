#include "catadist/state.hpp"

#include <cmath>

namespace catadist {

State::State(Mat m, SystemLayout l, NormClass nc, bool do_validate)
    : mat(std::move(m)), layout(std::move(l)), norm_class(nc) {
    if (mat.rows() != layout.total_dim() || mat.cols() != layout.total_dim()) {
        throw DimensionError("State: matrix does not match layout total dimension");
    }
    if (do_validate) validate();
}

State State::pure(const CVec& amplitudes, SystemLayout l) {
    if (amplitudes.size() != l.total_dim())
        throw DimensionError("State::pure: amplitude count does not match layout");
    CVec v = amplitudes.normalized();
    Mat m = v * v.adjoint();
    return State(std::move(m), std::move(l), NormClass::normalized);
}

State State::max_mixed(SystemLayout l) {
    int d = l.total_dim();
    return State(identity_mat(d) / static_cast<double>(d), std::move(l), NormClass::normalized);
}

State State::basis(SystemLayout l, int index) {
    int d = l.total_dim();
    if (index < 0 || index >= d) throw DimensionError("State::basis: index out of range");
    return State(basis_op(d, index, index), std::move(l), NormClass::normalized);
}

State State::scalar() { return State(Mat::Ones(1, 1), SystemLayout{}, NormClass::normalized); }

void State::validate(double psd_tol, double trace_tol) const {
    if (max_offhermiticity(mat) > psd_tol) {
        throw InvariantError("State: matrix is not Hermitian within tolerance");
    }
    check_psd(mat, psd_tol, "State");
    double tr = trace_real();
    if (norm_class == NormClass::normalized) {
        if (std::abs(tr - 1.0) > trace_tol)
            throw InvariantError("State: trace " + std::to_string(tr) + " is not 1");
    } else {
        if (tr < -trace_tol || tr > 1.0 + trace_tol)
            throw InvariantError("State: subnormalized trace " + std::to_string(tr) +
                                 " outside [0, 1]");
    }
}

State State::flattened(const std::string& label) const {
    return State(mat, SystemLayout::single(label, total_dim()), norm_class, false);
}

State State::relayout(SystemLayout l) const {
    if (l.total_dim() != total_dim())
        throw DimensionError("relayout: total dimension mismatch");
    return State(mat, std::move(l), norm_class, false);
}

bool State::is_pure(double tol) const {
    double purity = (mat * mat).trace().real();
    double tr = trace_real();
    return std::abs(purity - tr * tr) <= tol;
}

State tensor(const State& a, const State& b) {
    NormClass nc = (a.norm_class == NormClass::normalized && b.norm_class == NormClass::normalized)
                       ? NormClass::normalized
                       : NormClass::subnormalized;
    return State(kron(a.mat, b.mat), a.layout.concat(b.layout), nc, false);
}

State tensor_power(const State& s, int copies, const std::string& label_prefix) {
    if (copies < 0) throw DimensionError("tensor_power: negative copy count");
    State out = State::scalar();
    for (int i = 1; i <= copies; ++i) {
        State copy = s.relayout(s.layout.with_suffix("@" + label_prefix + std::to_string(i)));
        out = tensor(out, copy);
    }
    return out;
}

double trace_distance(const State& a, const State& b) {
    if (a.total_dim() != b.total_dim())
        throw DimensionError("trace_distance: dimension mismatch");
    return 0.5 * trace_norm(a.mat - b.mat);
}

State partial_trace_state(const State& s, std::span<const std::string> keep_labels) {
    Mat m = partial_trace(s.mat, s.layout, keep_labels);
    auto idx = s.layout.indices_of(keep_labels);
    std::sort(idx.begin(), idx.end());
    return State(std::move(m), s.layout.select(idx), s.norm_class, false);
}

State permute_state(const State& s, const std::vector<int>& new_order) {
    return State(permute_subsystems(s.mat, s.layout, new_order),
                 permute_layout(s.layout, new_order), s.norm_class, false);
}

EmbeddingSpec EmbeddingSpec::append(State free_state) {
    free_state.validate();
    if (free_state.norm_class != NormClass::normalized)
        throw InvariantError("EmbeddingSpec::append: free state must be normalized");
    EmbeddingSpec spec;
    spec.kind = Kind::append_free;
    spec.free_state = std::move(free_state);
    return spec;
}

EmbeddingSpec EmbeddingSpec::orthogonal(int extra_dim) {
    if (extra_dim < 1) throw DimensionError("EmbeddingSpec::orthogonal: extra_dim must be >= 1");
    EmbeddingSpec spec;
    spec.kind = Kind::orthogonal_direct_sum;
    spec.extra_dim = extra_dim;
    return spec;
}

State embed_append(const State& s, const EmbeddingSpec& spec, int copies) {
    if (spec.kind != EmbeddingSpec::Kind::append_free || !spec.free_state)
        throw DimensionError("embed_append: spec is not append_free");
    if (copies < 0) throw DimensionError("embed_append: negative copy count");
    State out = s;
    for (int i = 1; i <= copies; ++i) {
        State pi = spec.free_state->relayout(
            spec.free_state->layout.with_suffix("@pi" + std::to_string(i)));
        out = tensor(out, pi);
    }
    return out;
}

Mat orth_embed_isometry(int d, int extra) {
    Mat v = Mat::Zero(d + extra, d);
    v.topRows(d) = identity_mat(d);
    return v;
}

State embed_orthogonal(const State& s, const EmbeddingSpec& spec, const std::string& label) {
    if (spec.kind != EmbeddingSpec::Kind::orthogonal_direct_sum)
        throw DimensionError("embed_orthogonal: spec is not orthogonal_direct_sum");
    int d = s.total_dim();
    Mat v = orth_embed_isometry(d, spec.extra_dim);
    Mat m = v * s.mat * v.adjoint();
    return State(std::move(m), SystemLayout::single(label, d + spec.extra_dim), s.norm_class,
                 false);
}

State reverse_embed(const State& s, std::span<const std::string> keep_labels) {
    return partial_trace_state(s, keep_labels);
}

State apply_kraus_on_subsystems(const State& s, const std::vector<Mat>& kraus, int first,
                                int count, const SystemLayout& out_sub, NormClass out_norm) {
    if (first < 0 || count < 0 || first + count > s.layout.size())
        throw DimensionError("apply_kraus_on_subsystems: subsystem range out of bounds");
    long long a = 1, din = 1, b = 1;
    for (int i = 0; i < first; ++i) a *= s.layout.dim(i);
    for (int i = first; i < first + count; ++i) din *= s.layout.dim(i);
    for (int i = first + count; i < s.layout.size(); ++i) b *= s.layout.dim(i);
    if (kraus.empty()) throw DimensionError("apply_kraus_on_subsystems: empty Kraus list");
    for (const auto& k : kraus) {
        if (k.cols() != din || k.rows() != out_sub.total_dim())
            throw DimensionError("apply_kraus_on_subsystems: Kraus shape mismatch");
    }
    check_dim_cap(a * out_sub.total_dim() * b, a * out_sub.total_dim() * b);
    Mat out = apply_kraus_structured(kraus, s.mat, static_cast<int>(a), static_cast<int>(b));

    std::vector<int> prefix, suffix;
    for (int i = 0; i < first; ++i) prefix.push_back(i);
    for (int i = first + count; i < s.layout.size(); ++i) suffix.push_back(i);
    SystemLayout l = s.layout.select(prefix).concat(out_sub).concat(s.layout.select(suffix));
    return State(std::move(out), std::move(l), out_norm, false);
}

}  // namespace catadist
