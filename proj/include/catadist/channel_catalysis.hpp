#pragma once

#include <string>
#include <vector>

#include "catadist/optim.hpp"

namespace catadist {

/// (1/n) sum_k (...) ox |k><k| held branch-wise; the flag register is only
/// folded into a single Choi when a computation needs the actual channel.
struct FlaggedChannelBranch {
    double weight = 0.0;
    QuantumOp op;
    int label = 0;
};

class FlaggedChannel {
  public:
    FlaggedChannel() = default;
    explicit FlaggedChannel(std::vector<FlaggedChannelBranch> branches, bool validate = true);

    int branch_count() const { return static_cast<int>(branches_.size()); }
    const FlaggedChannelBranch& branch(int i) const { return branches_.at(i); }
    const std::vector<FlaggedChannelBranch>& branches() const { return branches_; }
    const FlaggedChannelBranch& branch_with_label(int label) const;
    void validate() const;

    /// The channel rho -> sum_k w_k N_k(rho) ox |k><k| with the flag as a
    /// trailing classical output register.
    QuantumOp to_quantum_op() const;

  private:
    std::vector<FlaggedChannelBranch> branches_;
};

/// Superchannel realized as CPTP pre/post processing around n uses of the
/// base channel, with a memory register of the given dimension.
struct ChannelCode {
    std::string name;
    QuantumOp pre;   // code input -> base input ox memory
    QuantumOp post;  // base output ox memory -> code output
    int memory_dim = 1;
};

/// P^n = post o (N^{ox n} ox id_mem) o pre.
QuantumOp apply_code(const ChannelCode& code, const QuantumOp& base_n, int n);

/// Reduced channel of p_n on its first `count` slots (maximally mixed
/// reference on the rest). count == 0 gives the trivial scalar channel.
QuantumOp reduced_prefix_channel(const QuantumOp& p_n, int n, int count);

/// C_n = (1/n) sum_k N^{ox k-1} ox P^n_{1:n-k} ox |k><k|.
FlaggedChannel build_channel_catalyst(const QuantumOp& n_ch, const QuantumOp& p_n, int n);

struct ChannelConvertReport {
    int n = 0;
    std::string code;
    /// ||P^n - M^{ox n}||_diamond (unhalved), the measured transformation error.
    double measured_eps = 0.0;
    std::vector<double> marginal_restoration;  // per-branch diamond distance
    double marginal_restoration_max = 0.0;
    std::vector<double> branch_distances;      // per-branch (1/2)||.||_diamond
    /// (1/2)||G3 - M ox C_n||_diamond via the branch-wise weighted sum.
    double g3_half_diamond = 0.0;
    double g3_half_diamond_max_branch = 0.0;
    std::vector<double> telescoping_residuals;  // per prefix length, diamond
    double telescoping_max = 0.0;
    bool marginal_pass = false;
    bool bound_pass = false;
    bool telescoping_pass = false;
    bool pass = false;
};

/// Builds G1 -> G2 -> G3 from N and the coded P^n, certifies that G2's
/// reduced channel restores C_n and that (1/2)||G3 - M ox C_n||_diamond
/// stays within the measured error.
ChannelConvertReport catalytic_channel_convert(const QuantumOp& n_ch, const ChannelCode& code,
                                               const QuantumOp& m_ch, int n);

struct MutualInfoCriterion {
    double i_n = 0.0;
    double i_m = 0.0;
    bool transformable = false;
    double gap_n = 0.0, gap_m = 0.0;
};

/// Necessary condition for catalytic channel transformation: I(N) >= I(M).
MutualInfoCriterion mutual_info_criterion(const QuantumOp& n_ch, const QuantumOp& m_ch);

struct MutualInfoSlack {
    double i_m_with_catalyst = 0.0;
    double i_n_with_catalyst = 0.0;
    double bound = 0.0;  // f(2 eps) at the composite dimension
    bool holds = false;
};

/// Checks I(M ox C_n) <= I(N ox C_n) + f(2 eps) with eps the measured
/// (1/2)||G3 - M ox C_n||_diamond.
MutualInfoSlack mutual_info_slack_check(const QuantumOp& n_ch, const QuantumOp& m_ch,
                                        const FlaggedChannel& c_n, double half_diamond_eps);

// ---- demo code registry ----

struct CodeEntry {
    std::string key;
    std::string description;
};
const std::vector<CodeEntry>& code_registry();
/// Builds (N, M, code) for a registered demo key at the given slot count.
void make_code_demo(const std::string& key, int n, QuantumOp& n_ch, QuantumOp& m_ch,
                    ChannelCode& code, double depol = 0.25);

}  // namespace catadist
