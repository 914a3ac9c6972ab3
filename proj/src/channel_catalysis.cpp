#include "catadist/channel_catalysis.hpp"

#include <algorithm>
#include <cmath>

namespace catadist {

namespace {

QuantumOp trivial_op() {
    return QuantumOp::from_choi(Mat::Ones(1, 1), SystemLayout{}, SystemLayout{},
                                TraceClass::preserving, false);
}

/// Tensor chain relabeled to uniform slot labels a1.., b1.. .
QuantumOp tensor_chain(const std::vector<const QuantumOp*>& parts) {
    QuantumOp acc = trivial_op();
    std::vector<Subsystem> ins, outs;
    for (const QuantumOp* part : parts) {
        acc = tensor_op(acc, *part);
        for (const auto& s : part->in_layout().subsystems()) ins.push_back(s);
        for (const auto& s : part->out_layout().subsystems()) outs.push_back(s);
    }
    std::vector<Subsystem> in_labels, out_labels;
    for (size_t i = 0; i < ins.size(); ++i)
        in_labels.push_back({"a" + std::to_string(i + 1), ins[i].dim});
    for (size_t i = 0; i < outs.size(); ++i)
        out_labels.push_back({"b" + std::to_string(i + 1), outs[i].dim});
    return acc.relabeled(SystemLayout(std::move(in_labels)), SystemLayout(std::move(out_labels)));
}

QuantumOp op_power(const QuantumOp& op, int copies) {
    std::vector<const QuantumOp*> parts(copies, &op);
    return tensor_chain(parts);
}

}  // namespace

FlaggedChannel::FlaggedChannel(std::vector<FlaggedChannelBranch> branches, bool do_validate)
    : branches_(std::move(branches)) {
    if (do_validate) validate();
}

const FlaggedChannelBranch& FlaggedChannel::branch_with_label(int label) const {
    for (const auto& b : branches_) {
        if (b.label == label) return b;
    }
    throw DimensionError("FlaggedChannel: no branch with label " + std::to_string(label));
}

void FlaggedChannel::validate() const {
    if (branches_.empty()) throw InvariantError("FlaggedChannel: empty");
    int din = branches_.front().op.in_dim();
    int dout = branches_.front().op.out_dim();
    double w = 0.0;
    std::vector<int> labels;
    for (const auto& b : branches_) {
        if (b.op.in_dim() != din || b.op.out_dim() != dout)
            throw InvariantError("FlaggedChannel: branch dimensions differ");
        if (std::find(labels.begin(), labels.end(), b.label) != labels.end())
            throw InvariantError("FlaggedChannel: duplicate label");
        labels.push_back(b.label);
        w += b.weight;
    }
    if (std::abs(w - 1.0) > 1e-10)
        throw InvariantError("FlaggedChannel: weights sum to " + std::to_string(w));
}

QuantumOp FlaggedChannel::to_quantum_op() const {
    int flag = 0;
    for (const auto& b : branches_) flag = std::max(flag, b.label);
    int din = branches_.front().op.in_dim();
    int dout = branches_.front().op.out_dim();
    check_dim_cap(static_cast<long long>(din) * dout * flag,
                  static_cast<long long>(din) * dout * flag);
    Mat c = Mat::Zero(din * dout * flag, din * dout * flag);
    for (const auto& b : branches_) {
        c += b.weight * kron(b.op.choi(), basis_op(flag, b.label - 1, b.label - 1));
    }
    SystemLayout in = branches_.front().op.in_layout();
    SystemLayout out =
        branches_.front().op.out_layout().concat(SystemLayout::single("flag", flag));
    return QuantumOp::from_choi(std::move(c), in, out, TraceClass::preserving, false);
}

QuantumOp apply_code(const ChannelCode& code, const QuantumOp& base_n, int n) {
    QuantumOp uses = op_power(base_n, n);
    QuantumOp middle = uses;
    if (code.memory_dim > 1) {
        QuantumOp mem = QuantumOp::identity(SystemLayout::single("mem", code.memory_dim));
        middle = tensor_op(uses, mem);
    }
    if (code.pre.out_dim() != middle.in_dim() || code.post.in_dim() != middle.out_dim())
        throw DimensionError("apply_code: code does not fit the base channel uses");
    QuantumOp p = compose(code.post, compose(middle, code.pre));
    // standard per-slot labels on the code's outer interface
    std::vector<Subsystem> ins, outs;
    for (int i = 0; i < n; ++i) {
        for (const auto& s : base_n.in_layout().subsystems())
            ins.push_back({"a" + std::to_string(ins.size() + 1), s.dim});
        for (const auto& s : base_n.out_layout().subsystems())
            outs.push_back({"b" + std::to_string(outs.size() + 1), s.dim});
    }
    return p.relabeled(SystemLayout(std::move(ins)), SystemLayout(std::move(outs)));
}

QuantumOp reduced_prefix_channel(const QuantumOp& p_n, int n, int count) {
    if (count < 0 || count > n) throw DimensionError("reduced_prefix_channel: bad count");
    if (count == n) return p_n;
    if (count == 0) return trivial_op();
    const SystemLayout& in = p_n.in_layout();
    const SystemLayout& out = p_n.out_layout();
    int per_in = in.size() / n;
    int per_out = out.size() / n;
    std::vector<std::string> keep_in, keep_out;
    std::vector<int> rest_in;
    for (int i = 0; i < count * per_in; ++i) keep_in.push_back(in.label(i));
    for (int i = count * per_in; i < in.size(); ++i) rest_in.push_back(i);
    for (int i = 0; i < count * per_out; ++i) keep_out.push_back(out.label(i));
    State pi = State::max_mixed(in.select(rest_in));
    return reduced_channel(p_n, keep_in, keep_out, pi);
}

FlaggedChannel build_channel_catalyst(const QuantumOp& n_ch, const QuantumOp& p_n, int n) {
    if (n < 1) throw DimensionError("build_channel_catalyst: n must be >= 1");
    if (p_n.in_dim() != static_cast<int>(std::llround(std::pow(n_ch.in_dim(), n))))
        throw DimensionError("build_channel_catalyst: P^n does not act on n slots");
    std::vector<FlaggedChannelBranch> branches;
    for (int k = 1; k <= n; ++k) {
        QuantumOp left = op_power(n_ch, k - 1);
        QuantumOp right = reduced_prefix_channel(p_n, n, n - k);
        std::vector<const QuantumOp*> parts = {&left, &right};
        branches.push_back({1.0 / n, tensor_chain(parts), k});
    }
    return FlaggedChannel(std::move(branches));
}

ChannelConvertReport catalytic_channel_convert(const QuantumOp& n_ch, const ChannelCode& code,
                                               const QuantumOp& m_ch, int n) {
    if (n < 1 || n > 3)
        throw CapExceededError("catalytic_channel_convert: n is capped at 3 slots");
    ChannelConvertReport rep;
    rep.n = n;
    rep.code = code.name;

    QuantumOp p_n = apply_code(code, n_ch, n);
    QuantumOp m_pow = op_power(m_ch, n);
    rep.measured_eps = 2.0 * diamond_distance(p_n, m_pow, 1e-9);

    std::vector<QuantumOp> prefixes;  // P^n_{1:i} for i = 0..n
    for (int i = 0; i <= n; ++i) prefixes.push_back(reduced_prefix_channel(p_n, n, i));

    FlaggedChannel c_n = build_channel_catalyst(n_ch, p_n, n);

    // G2 branch k: N^{ox k-1} ox P^n_{1:n-k+1}
    std::vector<QuantumOp> g2;
    for (int k = 1; k <= n; ++k) {
        QuantumOp left = op_power(n_ch, k - 1);
        std::vector<const QuantumOp*> parts = {&left, &prefixes[n - k + 1]};
        g2.push_back(tensor_chain(parts));
    }

    // (i) the reduced channel of G2 restores C_n branch-wise
    for (int k = 1; k <= n; ++k) {
        QuantumOp red = reduced_prefix_channel(g2[k - 1], n, n - 1);
        double dist = (n == 1) ? 0.0
                               : diamond_distance(red, c_n.branch_with_label(k).op, 1e-9);
        rep.marginal_restoration.push_back(dist);
        rep.marginal_restoration_max = std::max(rep.marginal_restoration_max, dist);
    }

    // (ii) branch distances; the common N^{ox k-1} factor drops out since
    // the diamond norm is stable under tensoring a fixed CPTP factor
    for (int k = 1; k <= n; ++k) {
        std::vector<const QuantumOp*> parts = {&prefixes[n - k], &m_ch};
        QuantumOp rhs = tensor_chain(parts);
        double dist = diamond_distance(prefixes[n - k + 1], rhs, 1e-9);
        rep.branch_distances.push_back(dist);
        rep.g3_half_diamond += dist / n;
        rep.g3_half_diamond_max_branch = std::max(rep.g3_half_diamond_max_branch, dist);
    }

    // telescoping: tr o P^n_{1:i+1}((.) ox pi) = P^n_{1:i}
    for (int i = 0; i < n; ++i) {
        QuantumOp tele = reduced_prefix_channel(prefixes[i + 1], i + 1, i);
        double dist = (i == 0) ? (tele.choi() - prefixes[0].choi()).cwiseAbs().maxCoeff()
                               : diamond_distance(tele, prefixes[i], 1e-9);
        rep.telescoping_residuals.push_back(dist);
        rep.telescoping_max = std::max(rep.telescoping_max, dist);
    }

    rep.marginal_pass = rep.marginal_restoration_max <= 1e-8;
    rep.bound_pass = rep.g3_half_diamond <= rep.measured_eps + 1e-9;
    rep.telescoping_pass = rep.telescoping_max <= 1e-9;
    rep.pass = rep.marginal_pass && rep.bound_pass && rep.telescoping_pass;
    return rep;
}

MutualInfoCriterion mutual_info_criterion(const QuantumOp& n_ch, const QuantumOp& m_ch) {
    MutualInfoCriterion out;
    MutualInfoResult rn = channel_mutual_information(n_ch, 1e-7);
    MutualInfoResult rm = channel_mutual_information(m_ch, 1e-7);
    out.i_n = rn.value;
    out.i_m = rm.value;
    out.gap_n = rn.gap_estimate;
    out.gap_m = rm.gap_estimate;
    out.transformable = out.i_n >= out.i_m - 1e-6;
    return out;
}

MutualInfoSlack mutual_info_slack_check(const QuantumOp& n_ch, const QuantumOp& m_ch,
                                        const FlaggedChannel& c_n, double half_diamond_eps) {
    MutualInfoSlack out;
    QuantumOp c_full = c_n.to_quantum_op();
    QuantumOp nc = tensor_op(n_ch, c_full);
    QuantumOp mc = tensor_op(m_ch, c_full);
    out.i_n_with_catalyst = channel_mutual_information(nc, 1e-6).value;
    out.i_m_with_catalyst = channel_mutual_information(mc, 1e-6).value;
    int d_ab = mc.in_dim() * mc.out_dim();
    double arg = std::min(1.0, 2.0 * half_diamond_eps);
    out.bound = continuity_bound(arg, d_ab);
    out.holds = out.i_m_with_catalyst <= out.i_n_with_catalyst + out.bound + 1e-6;
    return out;
}

namespace {

QuantumOp qubit_depolarizing(double lambda) {
    Mat x(2, 2), y(2, 2), z(2, 2);
    x << 0, 1, 1, 0;
    y << 0, cplx(0, -1), cplx(0, 1), 0;
    z << 1, 0, 0, -1;
    std::vector<Mat> kraus = {std::sqrt(1.0 - 0.75 * lambda) * identity_mat(2),
                              std::sqrt(lambda / 4.0) * x, std::sqrt(lambda / 4.0) * y,
                              std::sqrt(lambda / 4.0) * z};
    return QuantumOp::from_kraus(std::move(kraus), SystemLayout::single("a", 2),
                                 SystemLayout::single("b", 2), TraceClass::preserving);
}

QuantumOp qubit_dephasing_full() {
    std::vector<Mat> kraus = {basis_op(2, 0, 0), basis_op(2, 1, 1)};
    return QuantumOp::from_kraus(std::move(kraus), SystemLayout::single("a", 2),
                                 SystemLayout::single("b", 2), TraceClass::preserving);
}

const std::vector<CodeEntry> kCodes = {
    {"trivial", "identity code: P^n = N^{ox n}, M = N, zero error"},
    {"measure_prepare", "computational-basis measure-and-prepare on every output line"},
};

}  // namespace

const std::vector<CodeEntry>& code_registry() { return kCodes; }

void make_code_demo(const std::string& key, int n, QuantumOp& n_ch, QuantumOp& m_ch,
                    ChannelCode& code, double depol) {
    if (key == "trivial") {
        n_ch = qubit_depolarizing(depol);
        m_ch = n_ch;
        SystemLayout slots_in = SystemLayout::uniform("a", n, 2);
        SystemLayout slots_out = SystemLayout::uniform("b", n, 2);
        code.name = "trivial";
        code.pre = QuantumOp::identity(slots_in);
        code.post = QuantumOp::identity(slots_out);
        code.memory_dim = 1;
        return;
    }
    if (key == "measure_prepare") {
        n_ch = QuantumOp::identity(SystemLayout::single("a", 2))
                   .relabeled(SystemLayout::single("a", 2), SystemLayout::single("b", 2));
        m_ch = n_ch;
        code.name = "measure_prepare";
        code.pre = QuantumOp::identity(SystemLayout::uniform("a", n, 2));
        QuantumOp deph = qubit_dephasing_full();
        code.post = op_power(deph, n);
        code.memory_dim = 1;
        return;
    }
    throw UnknownKeyError("unknown channel code '" + key + "'");
}

}  // namespace catadist
