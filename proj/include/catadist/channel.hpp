#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "catadist/ensemble.hpp"
#include "catadist/state.hpp"

namespace catadist {

enum class TraceClass { preserving, nonincreasing };

/// Completely positive map in Kraus and/or Choi form. The Choi matrix lives
/// on [in-subsystems, out-subsystems] with the convention
///   C = sum_ij |i><j|_in ox N(|i><j|)_out,
/// so trace preservation reads tr_out C = I_in.
class QuantumOp {
  public:
    QuantumOp() = default;

    static QuantumOp from_kraus(std::vector<Mat> kraus, SystemLayout in, SystemLayout out,
                                TraceClass tc, bool validate = true);
    static QuantumOp from_choi(Mat choi, SystemLayout in, SystemLayout out, TraceClass tc,
                               bool validate = true);
    static QuantumOp identity(const SystemLayout& l);
    static QuantumOp from_unitary(const Mat& u, const SystemLayout& l);
    /// Builds the Choi by applying `action` to all matrix units of the input.
    static QuantumOp from_action(const std::function<Mat(const Mat&)>& action, SystemLayout in,
                                 SystemLayout out, TraceClass tc, bool validate = true);
    /// Channel that traces the input and prepares `s` (R^pi in the text).
    static QuantumOp trace_and_prepare(const State& s, const SystemLayout& in);

    const SystemLayout& in_layout() const { return in_; }
    const SystemLayout& out_layout() const { return out_; }
    int in_dim() const { return in_.total_dim(); }
    int out_dim() const { return out_.total_dim(); }
    TraceClass trace_class() const { return tc_; }

    bool has_choi() const { return choi_.has_value(); }
    bool has_kraus() const { return kraus_.has_value(); }
    /// Computes (and caches) the missing representation on demand.
    const Mat& choi() const;
    const std::vector<Mat>& kraus() const;

    Mat apply_mat(const Mat& rho) const;
    State apply(const State& s) const;

    QuantumOp relabeled(SystemLayout in, SystemLayout out) const;
    void validate(double psd_tol = 1e-10, double trace_tol = 1e-9) const;

  private:
    SystemLayout in_, out_;
    TraceClass tc_ = TraceClass::preserving;
    mutable std::optional<Mat> choi_;
    mutable std::optional<std::vector<Mat>> kraus_;
};

/// Choi of a Kraus list (convention above).
Mat choi_from_kraus(const std::vector<Mat>& kraus, int d_in, int d_out);
/// Kraus operators from a Choi eigendecomposition; eigenvalues below the
/// cutoff are dropped, negative ones beyond tolerance are an error.
std::vector<Mat> kraus_from_choi(const Mat& choi, int d_in, int d_out, double cutoff = 1e-12);

/// a ox b; colliding labels in b get a "#2" suffix.
QuantumOp tensor_op(const QuantumOp& a, const QuantumOp& b);
/// a after b.
QuantumOp compose(const QuantumOp& a, const QuantumOp& b);

/// N^pi(.) = tr_{discarded out} N((.) ox pi), keeping the given labels.
/// pi must be normalized on the discarded input labels (in layout order).
QuantumOp reduced_channel(const QuantumOp& n, std::span<const std::string> keep_in,
                          std::span<const std::string> keep_out, const State& pi);

/// The partition naming the "far side" whose input must not signal into the
/// kept output: checks tr_B2 o N == tr_B2 o N o R^pi_A2 in diamond distance.
struct NsPartition {
    std::vector<std::string> a2_in_labels;
    std::vector<std::string> b2_out_labels;
};
bool is_non_signaling(const QuantumOp& n, const NsPartition& partition, double tol);

/// Classically controlled transformation acting on a FlaggedEnsemble.
struct ControlledCase {
    int label = 0;
    double scaling = 1.0;
    std::function<State(const State&)> action;  // CP map on a branch body
};
struct ControlledOp {
    std::vector<ControlledCase> cases;
    static ControlledOp identity_except(int branch_count, int special_label, double scaling,
                                        std::function<State(const State&)> special_action);
};
struct ControlledResult {
    FlaggedEnsemble out;
    double weight_sum = 0.0;
};
ControlledResult apply_controlled(const ControlledOp& c, const FlaggedEnsemble& e);

}  // namespace catadist
