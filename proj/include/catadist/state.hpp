#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "catadist/matrix.hpp"

namespace catadist {

enum class NormClass { normalized, subnormalized };

/// Density operator (possibly subnormalized) over a SystemLayout.
struct State {
    Mat mat;
    SystemLayout layout;
    NormClass norm_class = NormClass::normalized;

    State() = default;
    State(Mat m, SystemLayout l, NormClass nc = NormClass::normalized, bool validate = true);

    /// Pure state from an amplitude vector on a single subsystem.
    static State pure(const CVec& amplitudes, SystemLayout l);
    /// Maximally mixed state on the given layout.
    static State max_mixed(SystemLayout l);
    /// Computational basis state |index><index|.
    static State basis(SystemLayout l, int index);
    /// Trivial state on an empty layout (total dimension 1).
    static State scalar();

    int total_dim() const { return layout.total_dim(); }
    double trace_real() const { return mat.trace().real(); }
    void validate(double psd_tol = 1e-10, double trace_tol = 1e-10) const;

    /// Same matrix viewed as a single unlabeled subsystem.
    State flattened(const std::string& label) const;
    /// Same matrix with a different layout of identical total dimension.
    State relayout(SystemLayout l) const;

    bool is_pure(double tol = 1e-10) const;
};

/// Tensor product; labels must not collide.
State tensor(const State& a, const State& b);
State tensor_power(const State& s, int copies, const std::string& label_prefix);

double trace_distance(const State& a, const State& b);

State partial_trace_state(const State& s, std::span<const std::string> keep_labels);
State permute_state(const State& s, const std::vector<int>& new_order);

/// Specification of the two embedding maps used by the conversions.
struct EmbeddingSpec {
    enum class Kind { append_free, orthogonal_direct_sum };
    Kind kind = Kind::append_free;
    std::optional<State> free_state;  // append_free: normalized free state
    int extra_dim = 1;                // orthogonal_direct_sum: dim of W

    static EmbeddingSpec append(State free_state);
    static EmbeddingSpec orthogonal(int extra_dim);
};

/// s ox pi^{ox copies}; trace preserved, trace distance invariant.
State embed_append(const State& s, const EmbeddingSpec& spec, int copies);

/// Isometry [I; 0] from dimension d into dimension d + extra.
Mat orth_embed_isometry(int d, int extra);

/// Places s in the top-left block of a (dim+extra)-dimensional space,
/// flattened to a single subsystem with the given label.
State embed_orthogonal(const State& s, const EmbeddingSpec& spec, const std::string& label);

/// Partial trace over everything not in keep_labels; inverts embed_append.
State reverse_embed(const State& s, std::span<const std::string> keep_labels);

/// Applies a CP map given by Kraus operators to the contiguous subsystem
/// range [first, first+count) of s. The Kraus operators map the product of
/// those dims to out_sub.total_dim(); the result layout splices out_sub in.
State apply_kraus_on_subsystems(const State& s, const std::vector<Mat>& kraus, int first,
                                int count, const SystemLayout& out_sub,
                                NormClass out_norm = NormClass::subnormalized);

}  // namespace catadist
