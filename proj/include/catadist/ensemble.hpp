#pragma once

#include <functional>
#include <vector>

#include "catadist/state.hpp"

namespace catadist {

/// One classically labeled branch of a flagged ensemble.
struct Branch {
    double weight = 0.0;
    State body;
    int label = 0;
};

/// Sum_i w_i rho_i ox |i><i| kept branch-wise; the block-diagonal matrix is
/// only materialized on demand (small sizes, tests).
class FlaggedEnsemble {
  public:
    FlaggedEnsemble() = default;
    explicit FlaggedEnsemble(std::vector<Branch> branches, bool validate = true);

    int branch_count() const { return static_cast<int>(branches_.size()); }
    const Branch& branch(int i) const { return branches_.at(i); }
    const std::vector<Branch>& branches() const { return branches_; }
    std::vector<Branch>& mutable_branches() { return branches_; }

    double total_weight() const;
    int body_dim() const;
    /// Highest label value (labels are 1-based).
    int max_label() const;
    const Branch& branch_with_label(int label) const;

    void validate() const;

    /// Sum_i w_i rho_i ox |label_i-1><label_i-1| with a flag register of the
    /// given dimension (default: max label). Bodies are flattened.
    State materialize(int flag_dim = 0) const;

    /// Mixture marginal over kept subsystem indices, discarding the flag:
    /// Sum_i w_i tr_rest(rho_i). All bodies must share the kept dims.
    State average_marginal(const std::vector<int>& keep_indices) const;

    /// Branch-wise partial trace, flag kept.
    FlaggedEnsemble branch_marginal(const std::vector<int>& keep_indices) const;
    FlaggedEnsemble map_bodies(const std::function<State(const State&)>& fn) const;

  private:
    std::vector<Branch> branches_;
};

/// Trace distance between two flagged states with identical label sets,
/// computed block-wise: Sum_i 0.5 || w_i rho_i - w'_i rho'_i ||_1.
double flagged_trace_distance(const FlaggedEnsemble& a, const FlaggedEnsemble& b);

/// Branch with label i gets label i+1; label m gets 1. Labels must be 1..m.
FlaggedEnsemble cyclic_shift_labels(const FlaggedEnsemble& e);

/// Conjugates each branch body by the cyclic slot permutation i -> i+1,
/// m -> 1 over `slots` equal-dimension contiguous slot groups.
FlaggedEnsemble cyclic_shift_quantum(const FlaggedEnsemble& e, int slots);

/// Splits the subsystems of `layout` into `slots` contiguous groups of equal
/// total dimension; errors if impossible.
std::vector<std::vector<int>> slot_groups(const SystemLayout& layout, int slots);

}  // namespace catadist
