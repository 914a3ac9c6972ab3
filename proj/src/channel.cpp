#include "catadist/channel.hpp"

#include <algorithm>
#include <cmath>

#include "catadist/optim.hpp"

namespace catadist {

Mat choi_from_kraus(const std::vector<Mat>& kraus, int d_in, int d_out) {
    check_dim_cap(static_cast<long long>(d_in) * d_out, static_cast<long long>(d_in) * d_out);
    Mat c = Mat::Zero(d_in * d_out, d_in * d_out);
    for (const auto& k : kraus) {
        if (k.rows() != d_out || k.cols() != d_in)
            throw DimensionError("choi_from_kraus: Kraus shape mismatch");
        // |w> = sum_i |i> ox K|i>, i.e. w[(i,o)] = K(o,i)
        CVec w(d_in * d_out);
        for (int i = 0; i < d_in; ++i) {
            for (int o = 0; o < d_out; ++o) w(i * d_out + o) = k(o, i);
        }
        c.noalias() += w * w.adjoint();
    }
    return c;
}

std::vector<Mat> kraus_from_choi(const Mat& choi, int d_in, int d_out, double cutoff) {
    RVec evals;
    Mat evecs;
    eigh(choi, evals, evecs);
    if (evals.minCoeff() < -1e-10)
        throw InvariantError("kraus_from_choi: Choi matrix is not PSD");
    std::vector<Mat> kraus;
    for (int v = 0; v < evals.size(); ++v) {
        if (evals(v) <= cutoff) continue;
        double s = std::sqrt(evals(v));
        Mat k(d_out, d_in);
        for (int i = 0; i < d_in; ++i) {
            for (int o = 0; o < d_out; ++o) k(o, i) = s * evecs(i * d_out + o, v);
        }
        kraus.push_back(std::move(k));
    }
    if (kraus.empty()) kraus.push_back(Mat::Zero(d_out, d_in));
    return kraus;
}

QuantumOp QuantumOp::from_kraus(std::vector<Mat> kraus, SystemLayout in, SystemLayout out,
                                TraceClass tc, bool do_validate) {
    QuantumOp op;
    op.in_ = std::move(in);
    op.out_ = std::move(out);
    op.tc_ = tc;
    for (const auto& k : kraus) {
        if (k.rows() != op.out_.total_dim() || k.cols() != op.in_.total_dim())
            throw DimensionError("from_kraus: Kraus shape does not match layouts");
    }
    op.kraus_ = std::move(kraus);
    if (do_validate) op.validate();
    return op;
}

QuantumOp QuantumOp::from_choi(Mat choi, SystemLayout in, SystemLayout out, TraceClass tc,
                               bool do_validate) {
    QuantumOp op;
    op.in_ = std::move(in);
    op.out_ = std::move(out);
    op.tc_ = tc;
    long long d = static_cast<long long>(op.in_.total_dim()) * op.out_.total_dim();
    if (choi.rows() != d || choi.cols() != d)
        throw DimensionError("from_choi: Choi dimension does not match layouts");
    op.choi_ = std::move(choi);
    if (do_validate) op.validate();
    return op;
}

QuantumOp QuantumOp::identity(const SystemLayout& l) {
    return from_kraus({identity_mat(l.total_dim())}, l, l, TraceClass::preserving, false);
}

QuantumOp QuantumOp::from_unitary(const Mat& u, const SystemLayout& l) {
    if (u.rows() != l.total_dim() || u.cols() != l.total_dim())
        throw DimensionError("from_unitary: shape mismatch");
    return from_kraus({u}, l, l, TraceClass::preserving, false);
}

QuantumOp QuantumOp::from_action(const std::function<Mat(const Mat&)>& action, SystemLayout in,
                                 SystemLayout out, TraceClass tc, bool do_validate) {
    int di = in.total_dim();
    int dout = out.total_dim();
    check_dim_cap(static_cast<long long>(di) * dout, static_cast<long long>(di) * dout);
    Mat c = Mat::Zero(di * dout, di * dout);
    for (int i = 0; i < di; ++i) {
        for (int j = 0; j < di; ++j) {
            Mat img = action(basis_op(di, i, j));
            if (img.rows() != dout || img.cols() != dout)
                throw DimensionError("from_action: image dimension mismatch");
            c.block(i * dout, j * dout, dout, dout) = img;
        }
    }
    return from_choi(std::move(c), std::move(in), std::move(out), tc, do_validate);
}

QuantumOp QuantumOp::trace_and_prepare(const State& s, const SystemLayout& in) {
    // Kraus: sqrt(lambda_a) |v_a><i| over the spectral decomposition of s.
    RVec evals;
    Mat evecs;
    eigh(s.mat, evals, evecs);
    std::vector<Mat> kraus;
    int din = in.total_dim();
    int dout = s.total_dim();
    for (int a = 0; a < evals.size(); ++a) {
        if (evals(a) <= 1e-14) continue;
        double r = std::sqrt(evals(a));
        for (int i = 0; i < din; ++i) {
            Mat k = Mat::Zero(dout, din);
            k.col(i) = r * evecs.col(a);
            kraus.push_back(std::move(k));
        }
    }
    return from_kraus(std::move(kraus), in, s.layout, TraceClass::preserving, false);
}

const Mat& QuantumOp::choi() const {
    if (!choi_) {
        if (!kraus_) throw InvariantError("QuantumOp: no representation present");
        choi_ = choi_from_kraus(*kraus_, in_.total_dim(), out_.total_dim());
    }
    return *choi_;
}

const std::vector<Mat>& QuantumOp::kraus() const {
    if (!kraus_) {
        if (!choi_) throw InvariantError("QuantumOp: no representation present");
        kraus_ = kraus_from_choi(*choi_, in_.total_dim(), out_.total_dim());
    }
    return *kraus_;
}

Mat QuantumOp::apply_mat(const Mat& rho) const {
    if (rho.rows() != in_.total_dim() || rho.cols() != in_.total_dim())
        throw DimensionError("QuantumOp::apply: input dimension mismatch");
    if (kraus_ || !choi_) {
        const auto& ks = kraus();
        Mat out = Mat::Zero(out_.total_dim(), out_.total_dim());
        for (const auto& k : ks) out.noalias() += k * rho * k.adjoint();
        return out;
    }
    // Choi route: N(rho) = tr_in[ C (rho^T ox I_out) ]
    const Mat& c = *choi_;
    int di = in_.total_dim(), dout = out_.total_dim();
    Mat out = Mat::Zero(dout, dout);
    for (int i = 0; i < di; ++i) {
        for (int j = 0; j < di; ++j) {
            out += rho(i, j) * c.block(i * dout, j * dout, dout, dout);
        }
    }
    return out;
}

State QuantumOp::apply(const State& s) const {
    Mat out = apply_mat(s.mat);
    NormClass nc = (tc_ == TraceClass::preserving) ? s.norm_class : NormClass::subnormalized;
    return State(std::move(out), out_, nc, false);
}

QuantumOp QuantumOp::relabeled(SystemLayout in, SystemLayout out) const {
    if (in.total_dim() != in_.total_dim() || out.total_dim() != out_.total_dim())
        throw DimensionError("relabeled: total dimensions must match");
    QuantumOp op = *this;
    op.in_ = std::move(in);
    op.out_ = std::move(out);
    return op;
}

void QuantumOp::validate(double psd_tol, double trace_tol) const {
    int di = in_.total_dim();
    auto check_trace_condition = [&](const Mat& tr_out_c) {
        if (tc_ == TraceClass::preserving) {
            double dev = (tr_out_c - identity_mat(di)).cwiseAbs().maxCoeff();
            if (dev > trace_tol)
                throw InvariantError("QuantumOp: not trace-preserving (deviation " +
                                     std::to_string(dev) + ")");
        } else {
            check_psd(identity_mat(di) - tr_out_c, trace_tol, "QuantumOp trace-nonincreasing");
        }
    };
    if (kraus_) {
        Mat acc = Mat::Zero(di, di);
        for (const auto& k : *kraus_) acc.noalias() += k.adjoint() * k;
        check_trace_condition(acc);
    }
    if (choi_) {
        check_psd(*choi_, psd_tol, "QuantumOp Choi");
        std::vector<int> dims = {di, out_.total_dim()};
        Mat tr_out = partial_trace_indices(*choi_, dims, {0});
        check_trace_condition(tr_out);
    }
    if (kraus_ && choi_) {
        Mat rebuilt = choi_from_kraus(*kraus_, di, out_.total_dim());
        double dev = (rebuilt - *choi_).cwiseAbs().maxCoeff();
        if (dev > trace_tol)
            throw InvariantError("QuantumOp: Kraus and Choi forms disagree (deviation " +
                                 std::to_string(dev) + ")");
    }
}

namespace {

SystemLayout concat_disjoint(const SystemLayout& a, const SystemLayout& b) {
    std::vector<Subsystem> subs = a.subsystems();
    for (auto s : b.subsystems()) {
        std::string base = s.label;
        int suffix = 2;
        while (std::any_of(subs.begin(), subs.end(),
                           [&](const Subsystem& t) { return t.label == s.label; })) {
            s.label = base + "#" + std::to_string(suffix++);
        }
        subs.push_back(std::move(s));
    }
    return SystemLayout(std::move(subs));
}

}  // namespace

QuantumOp tensor_op(const QuantumOp& a, const QuantumOp& b) {
    SystemLayout in = concat_disjoint(a.in_layout(), b.in_layout());
    SystemLayout out = concat_disjoint(a.out_layout(), b.out_layout());
    TraceClass tc = (a.trace_class() == TraceClass::preserving &&
                     b.trace_class() == TraceClass::preserving)
                        ? TraceClass::preserving
                        : TraceClass::nonincreasing;
    if (a.has_kraus() || b.has_kraus()) {
        std::vector<Mat> kraus;
        for (const auto& ka : a.kraus()) {
            for (const auto& kb : b.kraus()) kraus.push_back(kron(ka, kb));
        }
        return QuantumOp::from_kraus(std::move(kraus), in, out, tc, false);
    }
    // Choi route: kron gives [inA,outA,inB,outB]; reorder to [inA,inB,outA,outB].
    Mat c = kron(a.choi(), b.choi());
    SystemLayout mixed = SystemLayout({{"ia", a.in_dim()}, {"oa", a.out_dim()},
                                       {"ib", b.in_dim()}, {"ob", b.out_dim()}});
    Mat reordered = permute_subsystems(c, mixed, {0, 2, 1, 3});
    return QuantumOp::from_choi(std::move(reordered), in, out, tc, false);
}

QuantumOp compose(const QuantumOp& a, const QuantumOp& b) {
    if (a.in_dim() != b.out_dim())
        throw DimensionError("compose: inner dimensions do not match");
    TraceClass tc = (a.trace_class() == TraceClass::preserving &&
                     b.trace_class() == TraceClass::preserving)
                        ? TraceClass::preserving
                        : TraceClass::nonincreasing;
    size_t product_count = a.kraus().size() * b.kraus().size();
    if (product_count <= 128) {
        std::vector<Mat> kraus;
        kraus.reserve(product_count);
        for (const auto& ka : a.kraus()) {
            for (const auto& kb : b.kraus()) kraus.push_back(ka * kb);
        }
        return QuantumOp::from_kraus(std::move(kraus), b.in_layout(), a.out_layout(), tc, false);
    }
    return QuantumOp::from_action([&](const Mat& x) { return a.apply_mat(b.apply_mat(x)); },
                                  b.in_layout(), a.out_layout(), tc, false);
}

QuantumOp reduced_channel(const QuantumOp& n, std::span<const std::string> keep_in,
                          std::span<const std::string> keep_out, const State& pi) {
    const SystemLayout& in = n.in_layout();
    const SystemLayout& out = n.out_layout();
    auto keep_in_idx = in.indices_of(keep_in);
    auto keep_out_idx = out.indices_of(keep_out);
    std::sort(keep_in_idx.begin(), keep_in_idx.end());
    std::sort(keep_out_idx.begin(), keep_out_idx.end());
    std::vector<int> drop_in_idx, drop_out_idx;
    for (int i = 0; i < in.size(); ++i) {
        if (!std::binary_search(keep_in_idx.begin(), keep_in_idx.end(), i))
            drop_in_idx.push_back(i);
    }
    for (int i = 0; i < out.size(); ++i) {
        if (!std::binary_search(keep_out_idx.begin(), keep_out_idx.end(), i))
            drop_out_idx.push_back(i);
    }
    SystemLayout drop_in = in.select(drop_in_idx);
    if (pi.total_dim() != drop_in.total_dim())
        throw DimensionError("reduced_channel: reference state does not match discarded input");
    if (pi.norm_class != NormClass::normalized)
        throw InvariantError("reduced_channel: reference state must be normalized");

    // Operator pi^T placed on the discarded input factors (identity on kept).
    int dk = 1;
    for (int i : keep_in_idx) dk *= in.dim(i);
    Mat block = kron(identity_mat(dk), pi.mat.transpose());
    // reorder [keeps..., drops...] back to layout order
    SystemLayout grouped = in.select(keep_in_idx).concat(in.select(drop_in_idx));
    std::vector<int> back(in.size());
    {
        std::vector<int> grouped_order = keep_in_idx;
        grouped_order.insert(grouped_order.end(), drop_in_idx.begin(), drop_in_idx.end());
        for (int pos = 0; pos < in.size(); ++pos) {
            int orig = grouped_order[pos];
            back[orig] = pos;
        }
    }
    Mat pi_in = permute_subsystems(block, grouped, back);

    // sandwich on the Choi and trace out the discarded factors
    const Mat& c = n.choi();
    Mat weighted = kron(pi_in, identity_mat(out.total_dim())) * c;
    std::vector<int> choi_dims = in.dims();
    for (int d : out.dims()) choi_dims.push_back(d);
    std::vector<int> keep_all = keep_in_idx;
    for (int i : keep_out_idx) keep_all.push_back(in.size() + i);
    Mat red = partial_trace_indices(weighted, choi_dims, keep_all);
    return QuantumOp::from_choi(std::move(red), in.select(keep_in_idx), out.select(keep_out_idx),
                                n.trace_class(), false);
}

bool is_non_signaling(const QuantumOp& n, const NsPartition& partition, double tol) {
    const SystemLayout& in = n.in_layout();
    const SystemLayout& out = n.out_layout();
    auto a2 = in.indices_of(partition.a2_in_labels);
    auto b2 = out.indices_of(partition.b2_out_labels);
    std::sort(a2.begin(), a2.end());
    std::sort(b2.begin(), b2.end());
    std::vector<std::string> keep_out;
    for (int i = 0; i < out.size(); ++i) {
        if (!std::binary_search(b2.begin(), b2.end(), i)) keep_out.push_back(out.label(i));
    }

    // D1 = tr_B2 o N
    std::vector<int> choi_keep;
    for (int i = 0; i < in.size(); ++i) choi_keep.push_back(i);
    for (int i = 0; i < out.size(); ++i) {
        if (!std::binary_search(b2.begin(), b2.end(), i)) choi_keep.push_back(in.size() + i);
    }
    std::vector<int> choi_dims = in.dims();
    for (int d : out.dims()) choi_dims.push_back(d);
    std::vector<std::string> keep_out_labels = keep_out;
    Mat c1 = partial_trace_indices(n.choi(), choi_dims, choi_keep);
    SystemLayout out_kept = out.select(out.indices_of(keep_out_labels));
    QuantumOp d1 = QuantumOp::from_choi(std::move(c1), in, out_kept, n.trace_class(), false);

    // D2 = tr_B2 o N o (id ox R^pi) with pi maximally mixed on A2
    SystemLayout a2_layout = in.select(a2);
    State pi = State::max_mixed(a2_layout);
    auto a2_sorted = a2;
    QuantumOp d2 = QuantumOp::from_action(
        [&](const Mat& x) {
            // replace the A2 factors of x by pi, then apply D1
            Mat traced = partial_trace_indices(
                x, in.dims(), [&] {
                    std::vector<int> keep;
                    for (int i = 0; i < in.size(); ++i) {
                        if (!std::binary_search(a2_sorted.begin(), a2_sorted.end(), i))
                            keep.push_back(i);
                    }
                    return keep;
                }());
            Mat replaced = kron(traced, pi.mat);
            // reorder [keeps..., a2...] back to layout order
            std::vector<int> grouped_order;
            for (int i = 0; i < in.size(); ++i) {
                if (!std::binary_search(a2_sorted.begin(), a2_sorted.end(), i))
                    grouped_order.push_back(i);
            }
            grouped_order.insert(grouped_order.end(), a2_sorted.begin(), a2_sorted.end());
            SystemLayout grouped = in.select(grouped_order);
            std::vector<int> back(in.size());
            for (int pos = 0; pos < in.size(); ++pos) back[grouped_order[pos]] = pos;
            Mat x2 = permute_subsystems(replaced, grouped, back);
            return d1.apply_mat(x2);
        },
        in, out_kept, n.trace_class(), false);

    double dist = diamond_distance(d1, d2, 1e-9);
    return dist <= tol;
}

ControlledOp ControlledOp::identity_except(int branch_count, int special_label, double scaling,
                                           std::function<State(const State&)> special_action) {
    ControlledOp c;
    for (int i = 1; i <= branch_count; ++i) {
        if (i == special_label) {
            c.cases.push_back({i, scaling, std::move(special_action)});
        } else {
            c.cases.push_back({i, 1.0, [](const State& s) { return s; }});
        }
    }
    return c;
}

ControlledResult apply_controlled(const ControlledOp& c, const FlaggedEnsemble& e) {
    std::vector<Branch> out;
    double weight_sum = 0.0;
    for (const auto& b : e.branches()) {
        const ControlledCase* cs = nullptr;
        for (const auto& candidate : c.cases) {
            if (candidate.label == b.label) cs = &candidate;
        }
        if (!cs)
            throw DimensionError("apply_controlled: no case for label " +
                                 std::to_string(b.label));
        State img = cs->action(b.body);
        double t = img.trace_real() * cs->scaling;
        double w = b.weight * t;
        weight_sum += w;
        if (t > 1e-300) {
            img.mat *= cs->scaling / t;
            img.norm_class = NormClass::normalized;
            out.push_back({w, std::move(img), b.label});
        }
    }
    return {FlaggedEnsemble(std::move(out), false), weight_sum};
}

}  // namespace catadist
