#include "catadist/catalysis.hpp"

#include <algorithm>
#include <cmath>

namespace catadist {

namespace {

SystemLayout uniform_layout(const std::string& prefix, int count, int dim) {
    return SystemLayout::uniform(prefix, count, dim);
}

State keep_first(const State& s, int count) {
    std::vector<int> keep(count);
    for (int i = 0; i < count; ++i) keep[i] = i;
    Mat m = partial_trace_indices(s.mat, s.layout.dims(), keep);
    return State(std::move(m), s.layout.select(keep), s.norm_class, false);
}

State keep_range(const State& s, int first, int count) {
    std::vector<int> keep(count);
    for (int i = 0; i < count; ++i) keep[i] = first + i;
    Mat m = partial_trace_indices(s.mat, s.layout.dims(), keep);
    return State(std::move(m), s.layout.select(keep), s.norm_class, false);
}

/// Inserts pi^{ox (k-1)} after each of the m trailing output slots of s
/// (the slots [first, first+m) must be the last subsystems).
State embed_hat_at(const State& s, const State& pi_flat, int first, int m, int k) {
    if (first + m != s.layout.size())
        throw DimensionError("embed_hat_at: output slots must be trailing");
    State t = s;
    for (int c = 0; c < m * (k - 1); ++c) {
        t = tensor(t, pi_flat.relayout(SystemLayout::single(
                          "pi@" + std::to_string(first) + "_" + std::to_string(c),
                          pi_flat.total_dim())));
    }
    std::vector<int> order;
    for (int i = 0; i < first; ++i) order.push_back(i);
    for (int i = 0; i < m; ++i) {
        order.push_back(first + i);
        for (int j = 0; j < k - 1; ++j) order.push_back(first + m + i * (k - 1) + j);
    }
    return permute_state(t, order);
}

State move_subsystem_to_front(const State& s, int idx) {
    std::vector<int> order;
    order.push_back(idx);
    for (int i = 0; i < s.layout.size(); ++i) {
        if (i != idx) order.push_back(i);
    }
    return permute_state(s, order);
}

double sum_weights(const FlaggedEnsemble& e) { return e.total_weight(); }

}  // namespace

void MultiShotProtocol::validate(double tol) const {
    if (n < 1 || m < 1 || m > n) throw InvariantError("MultiShotProtocol: need n >= m >= 1");
    int slots = 0, outs = 0;
    for (const auto& f : factors) {
        f.op.validate();
        slots += f.n_in;
        outs += f.m_out;
    }
    if (slots != n || outs != m)
        throw InvariantError("MultiShotProtocol: factor slots do not cover (n, m)");
    State rho_n = tensor_power(source.flattened("s"), n, "c").relayout(
        uniform_layout("q", n, d()));
    State out = apply_multishot(*this, rho_n);
    double p = out.trace_real();
    if (std::abs(p - declared_p) > tol)
        throw InvariantError("MultiShotProtocol: measured success weight " + std::to_string(p) +
                             " differs from declared " + std::to_string(declared_p));
    Mat eta = out.mat / p;
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
        Mat marg = partial_trace_indices(eta, out.layout.dims(), {i});
        worst = std::max(worst, 0.5 * trace_norm(marg - target.mat));
    }
    if (worst > declared_eps + tol)
        throw InvariantError("MultiShotProtocol: marginal error " + std::to_string(worst) +
                             " exceeds declared " + std::to_string(declared_eps));
}

State apply_multishot(const MultiShotProtocol& p, const State& in, int first_slot) {
    State s = in;
    int off = first_slot;
    int fi = 0;
    for (const auto& f : p.factors) {
        SystemLayout out_sub =
            uniform_layout("y" + std::to_string(first_slot) + "_" + std::to_string(fi++) + "_",
                           f.m_out, p.d());
        s = apply_kraus_on_subsystems(s, f.op.kraus(), off, f.n_in, out_sub,
                                      NormClass::subnormalized);
        off += f.m_out;
    }
    return s;
}

MultiShotProtocol measure_protocol(std::string name, int n, int m, State source, State target,
                                   std::vector<ProtocolFactor> factors,
                                   std::optional<std::vector<ProtocolFactor>> complement,
                                   std::optional<State> failure_state) {
    MultiShotProtocol p;
    p.name = std::move(name);
    p.n = n;
    p.m = m;
    p.source = std::move(source);
    p.target = std::move(target);
    p.factors = std::move(factors);
    p.complement = std::move(complement);
    int d = p.d();
    if (failure_state) {
        p.failure_state = failure_state->flattened("junk");
    } else {
        long long dm = 1;
        for (int i = 0; i < m; ++i) dm *= d;
        check_dim_cap(dm, dm);
        p.failure_state = State::max_mixed(SystemLayout::single("junk", static_cast<int>(dm)));
    }
    State rho_n =
        tensor_power(p.source.flattened("s"), n, "c").relayout(uniform_layout("q", n, d));
    State out = apply_multishot(p, rho_n);
    p.declared_p = out.trace_real();
    if (p.declared_p <= 1e-12)
        throw InvariantError("measure_protocol: success weight is zero on the source");
    Mat eta = out.mat / p.declared_p;
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
        Mat marg = partial_trace_indices(eta, out.layout.dims(), {i});
        worst = std::max(worst, 0.5 * trace_norm(marg - p.target.mat));
    }
    p.declared_eps = worst;
    return p;
}

MultiShotProtocol make_deterministic(const MultiShotProtocol& p, const State& junk_per_factor) {
    std::vector<ProtocolFactor> factors;
    RVec jev;
    Mat jvec;
    eigh(junk_per_factor.mat, jev, jvec);
    for (const auto& f : p.factors) {
        if (junk_per_factor.total_dim() != f.op.out_dim())
            throw DimensionError("make_deterministic: junk state does not match factor output");
        std::vector<Mat> kraus = f.op.kraus();
        Mat acc = Mat::Zero(f.op.in_dim(), f.op.in_dim());
        for (const auto& k : kraus) acc.noalias() += k.adjoint() * k;
        Mat fail = identity_mat(f.op.in_dim()) - acc;
        RVec fev;
        Mat fvec;
        eigh(fail, fev, fvec);
        for (int a = 0; a < jev.size(); ++a) {
            if (jev(a) <= 1e-14) continue;
            for (int b = 0; b < fev.size(); ++b) {
                if (fev(b) <= 1e-14) continue;
                Mat k = std::sqrt(jev(a) * fev(b)) * jvec.col(a) * fvec.col(b).adjoint();
                kraus.push_back(std::move(k));
            }
        }
        QuantumOp det = QuantumOp::from_kraus(std::move(kraus), f.op.in_layout(),
                                              f.op.out_layout(), TraceClass::preserving);
        factors.push_back({std::move(det), f.n_in, f.m_out});
    }
    return measure_protocol(p.name + "_det", p.n, p.m, p.source, p.target, std::move(factors));
}

MultiShotProtocol product_protocol(const MultiShotProtocol& p, int copies) {
    if (copies < 1) throw DimensionError("product_protocol: copies must be >= 1");
    if (copies == 1) return p;
    std::vector<ProtocolFactor> factors;
    for (int c = 0; c < copies; ++c) {
        for (const auto& f : p.factors) factors.push_back(f);
    }
    long long full = 1;
    for (int i = 0; i < p.n * copies; ++i) full *= p.d();
    if (full <= kMaxTotalDim) {
        return measure_protocol(p.name + "_x" + std::to_string(copies), p.n * copies,
                                p.m * copies, p.source, p.target, std::move(factors));
    }
    // too large to simulate whole; performance follows from independence
    MultiShotProtocol big = p;
    big.name = p.name + "_x" + std::to_string(copies);
    big.n = p.n * copies;
    big.m = p.m * copies;
    big.factors = std::move(factors);
    big.complement.reset();
    big.declared_p = std::pow(p.declared_p, copies);
    return big;
}

CatalystShape block_catalyst_shape(int n, int m, int d) {
    if (n < 1 || m < 1 || m > n) throw DimensionError("block_catalyst_shape: need n >= m >= 1");
    CatalystShape shape;
    shape.k = (n + m - 1) / m;
    shape.branches = m;
    shape.branch_body_dim = 1;
    for (int i = 0; i < shape.k * (m - 1); ++i) shape.branch_body_dim *= d;
    return shape;
}

std::string variant_name(ProtocolVariant v) {
    switch (v) {
        case ProtocolVariant::theorem_s1: return "s1";
        case ProtocolVariant::theorem_s4: return "s4";
        case ProtocolVariant::s4_alternative_catalyst: return "s4_alt";
    }
    return "?";
}

namespace {

struct S1Pieces {
    int k = 0;
    int d = 0;
    State pi;        // flattened free state, dim d
    State zeta;      // k slots of d
    State eta;       // m slots of d (normalized protocol output)
    State eta_hat;   // m*k slots of d
    double p = 1.0;
};

S1Pieces make_s1_pieces(const MultiShotProtocol& p, const State& free_pi, int k) {
    S1Pieces out;
    out.k = k;
    out.d = p.d();
    out.pi = free_pi.flattened("pi");
    if (out.pi.total_dim() != out.d)
        throw DimensionError("free state dimension does not match the source copy");
    out.zeta = tensor_power(p.source.flattened("s"), k, "z")
                   .relayout(uniform_layout("q", k, out.d));
    State rho_n = tensor_power(p.source.flattened("s"), p.n, "c")
                      .relayout(uniform_layout("q", p.n, out.d));
    State raw = apply_multishot(p, rho_n);
    out.p = raw.trace_real();
    out.eta = State(raw.mat / out.p, uniform_layout("e", p.m, out.d), NormClass::normalized,
                    false);
    State hat = embed_hat_at(out.eta, out.pi, 0, p.m, k);
    out.eta_hat = hat.relayout(uniform_layout("h", p.m * k, out.d));
    return out;
}

State s1_branch_body(const S1Pieces& pc, int m, int i) {
    // zeta^{ox i-1} ox eta_hat_{1:m-i}, flattened to uniform labels
    State z = tensor_power(pc.zeta, i - 1, "b");
    State tail = keep_first(pc.eta_hat, (m - i) * pc.k);
    State body = tensor(z, tail.relayout(tail.layout.with_suffix("@t")));
    return body.relayout(uniform_layout("a", (m - 1) * pc.k, pc.d));
}

}  // namespace

FlaggedEnsemble build_block_catalyst(const MultiShotProtocol& p, const State& free_pi) {
    CatalystShape shape = block_catalyst_shape(p.n, p.m, p.d());
    if (shape.branch_body_dim > kMaxTotalDim)
        throw CapExceededError("build_block_catalyst: branch dimension " +
                               std::to_string(shape.branch_body_dim) + " exceeds cap");
    S1Pieces pc = make_s1_pieces(p, free_pi, shape.k);
    std::vector<Branch> branches;
    for (int i = 1; i <= p.m; ++i) {
        branches.push_back({1.0 / p.m, s1_branch_body(pc, p.m, i), i});
    }
    return FlaggedEnsemble(std::move(branches));
}

CatalyticProtocol convert_to_catalytic(const MultiShotProtocol& p, const State& free_pi) {
    CatalyticProtocol cp;
    cp.base = p;
    cp.free_pi = free_pi.flattened("pi");
    cp.variant = ProtocolVariant::theorem_s1;
    cp.k = block_catalyst_shape(p.n, p.m, p.d()).k;
    cp.g = p.m;
    cp.extra_dim = 0;
    cp.catalyst = build_block_catalyst(p, free_pi);
    S1Pieces pc = make_s1_pieces(p, free_pi, cp.k);
    // expected output: reverse-embedded average of the output marginals
    Mat mix = Mat::Zero(pc.d, pc.d);
    for (int i = 0; i < p.m; ++i) {
        mix += partial_trace_indices(pc.eta.mat, pc.eta.layout.dims(), {i}) / p.m;
    }
    cp.expected_eps = 0.5 * trace_norm(mix - p.target.mat);
    cp.expected_p = pc.p;
    cp.steps = {
        {"controlled-op", "apply (1/p) L2 on classical branch m=" + std::to_string(p.m)},
        {"classical-shift", "labels i -> i+1, m -> 1"},
        {"quantum-shift", "slots i -> i+1, m -> 1"},
        {"reverse-embed", "trace the k-1 appended free registers of the output slot"},
    };
    return cp;
}

namespace {

struct S4Pieces {
    int k = 0, g = 0, d = 0, dk = 0, dt = 0;
    State pi;
    Mat v;           // isometry d^k -> dT
    State zeta_t;    // 1 slot of dT
    State theta_t;   // 1 slot of dT (orthogonal free state)
    State eta;       // m slots of d
    State eta_t;     // m slots of dT
    double p = 1.0;
};

/// Regroups j*k d-slots into j slots of d^k and embeds each into dT.
State embed_t_groups(const State& s, int j, int k, int d, const Mat& v) {
    if (j == 0) return State::scalar();
    int dk = 1;
    for (int i = 0; i < k; ++i) dk *= d;
    State grouped = s.relayout(uniform_layout("g", j, dk));
    std::vector<Mat> iso = {v};
    for (int slot = 0; slot < j; ++slot) {
        grouped = apply_kraus_on_subsystems(
            grouped, iso, slot, 1,
            SystemLayout::single("t" + std::to_string(slot + 1) + "e", static_cast<int>(v.rows())),
            grouped.norm_class);
    }
    return grouped.relayout(uniform_layout("t", j, static_cast<int>(v.rows())));
}

S4Pieces make_s4_pieces(const MultiShotProtocol& p, const State& free_pi, int k, int extra) {
    S4Pieces out;
    out.k = k;
    out.d = p.d();
    out.g = (p.n + k - 1) / k;
    out.dk = 1;
    for (int i = 0; i < k; ++i) out.dk *= out.d;
    out.dt = out.dk + extra;
    out.pi = free_pi.flattened("pi");
    if (out.pi.total_dim() != out.d)
        throw DimensionError("free state dimension does not match the source copy");
    out.v = orth_embed_isometry(out.dk, extra);
    State zeta = tensor_power(p.source.flattened("s"), k, "z")
                     .relayout(uniform_layout("q", k, out.d));
    out.zeta_t = embed_t_groups(zeta, 1, k, out.d, out.v).relayout(
        SystemLayout::single("t", out.dt));
    out.theta_t = State::basis(SystemLayout::single("t", out.dt), out.dk);
    State rho_n = tensor_power(p.source.flattened("s"), p.n, "c")
                      .relayout(uniform_layout("q", p.n, out.d));
    State raw = apply_multishot(p, rho_n);
    out.p = raw.trace_real();
    out.eta = State(raw.mat / out.p, uniform_layout("e", p.m, out.d), NormClass::normalized,
                    false);
    State hat = embed_hat_at(out.eta, out.pi, 0, p.m, k)
                    .relayout(uniform_layout("h", p.m * k, out.d));
    out.eta_t = embed_t_groups(hat, p.m, k, out.d, out.v);
    return out;
}

State s4_branch_tail(const S4Pieces& pc, int count) {
    // first `count` T-slots of eta_t
    return keep_first(pc.eta_t, count);
}

State assemble_t_body(const S4Pieces& pc, const std::vector<State>& parts, int slots) {
    State body = State::scalar();
    int tag = 0;
    for (const auto& part : parts) {
        body = tensor(body, part.relayout(part.layout.with_suffix("@p" + std::to_string(tag++))));
    }
    return body.relayout(uniform_layout("t", slots, pc.dt));
}

FlaggedEnsemble build_s4_catalyst(const S4Pieces& pc, int m, bool alt) {
    const int g = pc.g;
    std::vector<Branch> branches;
    for (int i = 1; i <= g; ++i) {
        std::vector<State> parts;
        State zpow = tensor_power(pc.zeta_t, i - 1, "zz");
        parts.push_back(zpow);
        if (!alt) {
            if (i <= g - m - 1) {
                parts.push_back(pc.eta_t);
                parts.push_back(tensor_power(pc.theta_t, g - m - i, "th"));
            } else {
                parts.push_back(s4_branch_tail(pc, g - i));
            }
        } else {
            if (i <= g - m) {
                parts.push_back(s4_branch_tail(pc, m - 1));
                parts.push_back(tensor_power(pc.theta_t, g - m - i + 1, "th"));
            } else {
                parts.push_back(s4_branch_tail(pc, g - i));
            }
        }
        branches.push_back({1.0 / g, assemble_t_body(pc, parts, g - 1), i});
    }
    return FlaggedEnsemble(std::move(branches));
}

}  // namespace

CatalyticProtocol tradeoff_convert(const MultiShotProtocol& p, int k, bool alt_catalyst,
                                   const State& free_pi, int extra_dim) {
    if (k < 1 || static_cast<long long>(k) * p.m > p.n)
        throw DimensionError("tradeoff_convert: require 1 <= k <= n/m");
    if (extra_dim < 1) throw DimensionError("tradeoff_convert: extra_dim must be >= 1");
    CatalyticProtocol cp;
    cp.base = p;
    cp.free_pi = free_pi.flattened("pi");
    cp.variant = alt_catalyst ? ProtocolVariant::s4_alternative_catalyst
                              : ProtocolVariant::theorem_s4;
    cp.k = k;
    cp.extra_dim = extra_dim;
    S4Pieces pc = make_s4_pieces(p, free_pi, k, extra_dim);
    cp.g = pc.g;
    long long joint = 1;
    for (int i = 0; i < pc.g; ++i) {
        joint *= pc.dt;
        if (joint > kMaxTotalDim)
            throw CapExceededError("tradeoff_convert: joint dimension exceeds cap");
    }
    cp.catalyst = build_s4_catalyst(pc, p.m, alt_catalyst);
    Mat mix = Mat::Zero(pc.d, pc.d);
    for (int i = 0; i < p.m; ++i) {
        mix += partial_trace_indices(pc.eta.mat, pc.eta.layout.dims(), {i}) / p.m;
    }
    cp.expected_eps = 0.5 * trace_norm(mix - p.target.mat);
    cp.expected_p = pc.p * p.m / pc.g;
    cp.steps = {
        {"controlled-op", "apply (1/p) L2 on classical branch g=" + std::to_string(pc.g)},
        {"classical-shift", "labels i -> i+1, g -> 1"},
        {"quantum-shift", alt_catalyst
                              ? "branch 1 moves slot m to front; others move slot g to front"
                              : "slots i -> i+1, g -> 1"},
        {"project", "projective measurement {P_Sk, P_W} on the output slot"},
        {"reverse-embed", "trace the k-1 appended free registers of the output slot"},
    };
    return cp;
}

namespace {

void record_check(VerificationReport& rep, bool ok, const std::string& what) {
    if (!ok) {
        rep.pass = false;
        rep.failures.push_back(what);
    }
}

// Branch-wise Delta(nu_SA, phi ox nu_A) for an ensemble whose bodies carry
// the output subsystem first.
double flagged_correlation_lhs(const FlaggedEnsemble& nu, const Mat& phi) {
    double acc = 0.0;
    for (const auto& b : nu.branches()) {
        std::vector<int> rest;
        for (int i = 1; i < b.body.layout.size(); ++i) rest.push_back(i);
        Mat a = partial_trace_indices(b.body.mat, b.body.layout.dims(), rest);
        acc += 0.5 * b.weight * trace_norm(b.body.mat - kron(phi, a));
    }
    return acc;
}

}  // namespace

VerificationReport verify_catalytic(const CatalyticProtocol& cp) {
    const MultiShotProtocol& p = cp.base;
    VerificationReport rep;
    rep.multi_shot_marginal_error = p.declared_eps;
    rep.catalyst_quantum_dim = cp.catalyst.body_dim();
    rep.catalyst_classical_dim = cp.catalyst.branch_count();
    rep.expected_success_weight = cp.expected_p;

    const bool s4 = cp.variant != ProtocolVariant::theorem_s1;
    const bool alt = cp.variant == ProtocolVariant::s4_alternative_catalyst;

    if (!s4) {
        S1Pieces pc = make_s1_pieces(p, cp.free_pi, cp.k);
        const int m = p.m;
        const int mk = m * cp.k;

        auto joint_with = [&](const FlaggedEnsemble& cat) {
            return cat.map_bodies([&](const State& body) {
                State j = tensor(pc.zeta, body.relayout(body.layout.with_suffix("@w")));
                return j.relayout(uniform_layout("j", mk, pc.d));
            });
        };
        auto l2 = [&](const State& body) {
            State s = keep_first(body, p.n);
            State out = apply_multishot(p, s);
            State hat = embed_hat_at(
                out.relayout(uniform_layout("e", m, pc.d)), pc.pi, 0, m, cp.k);
            return hat.relayout(uniform_layout("j", mk, pc.d));
        };

        FlaggedEnsemble joint = joint_with(cp.catalyst);
        ControlledOp ctrl = ControlledOp::identity_except(m, m, 1.0 / pc.p, l2);
        ControlledResult cres = apply_controlled(ctrl, joint);
        rep.controlled_weight_sum = cres.weight_sum;
        FlaggedEnsemble nu2 = cyclic_shift_labels(cres.out);
        FlaggedEnsemble nu3 = cyclic_shift_quantum(nu2, m);

        // catalyst restoration on the trailing m-1 slot groups
        std::vector<int> rest;
        for (int i = cp.k; i < mk; ++i) rest.push_back(i);
        FlaggedEnsemble nu_a = nu3.branch_marginal(rest);
        rep.catalyst_restoration_error = flagged_trace_distance(nu_a, cp.catalyst);

        // reverse embedding of the output slot
        std::vector<int> keep = {0};
        for (int i = cp.k; i < mk; ++i) keep.push_back(i);
        FlaggedEnsemble nu = nu3.branch_marginal(keep);

        State nu_s = nu.average_marginal({0});
        rep.output_error = 0.5 * trace_norm(nu_s.mat - p.target.mat);
        Mat mix = Mat::Zero(pc.d, pc.d);
        for (int i = 0; i < m; ++i) {
            mix += partial_trace_indices(pc.eta.mat, pc.eta.layout.dims(), {i}) / m;
        }
        rep.output_vs_mixture = 0.5 * trace_norm(nu_s.mat - mix);
        rep.success_weight = pc.p;
        rep.accept_weight = 1.0;
        rep.expected_accept_weight = 1.0;

        if (p.target.is_pure()) {
            rep.correlation_checked = true;
            rep.correlation_lhs = flagged_correlation_lhs(nu, p.target.mat);
            double eps = rep.output_error;
            rep.correlation_rhs = eps + 3.0 * std::sqrt(eps);
            rep.correlation_pass = rep.correlation_lhs <= rep.correlation_rhs + 1e-9;
            record_check(rep, rep.correlation_pass, "correlation bound");
        }

        // failure branch bookkeeping
        rep.catalyst_loss_probability = (1.0 - pc.p) / m;
        if (pc.p < 1.0 - 1e-12) {
            auto fail_action = [&](const State& body) {
                State s = keep_first(body, p.n);
                double w_in = s.trace_real();
                State fs;
                if (p.complement) {
                    MultiShotProtocol q = p;
                    q.factors = *p.complement;
                    fs = apply_multishot(q, s);
                } else {
                    double w_fail = w_in - apply_multishot(p, s).trace_real();
                    fs = State(w_fail * p.failure_state.mat,
                               p.failure_state.layout, NormClass::subnormalized, false);
                }
                State hat = embed_hat_at(
                    State(fs.mat, uniform_layout("e", m, pc.d), NormClass::subnormalized, false),
                    pc.pi, 0, m, cp.k);
                return hat.relayout(uniform_layout("j", mk, pc.d));
            };
            ControlledOp fail_ctrl =
                ControlledOp::identity_except(m, m, 1.0 / (1.0 - pc.p), fail_action);
            // conditioned on the failure event: only branch m fires
            FlaggedEnsemble only_m(
                {Branch{1.0, joint.branch_with_label(m).body, m}});
            ControlledResult fres = apply_controlled(fail_ctrl, only_m);
            // the classical shift sends label m to 1
            FlaggedEnsemble f1({Branch{1.0, fres.out.branch_with_label(m).body, 1}}, false);
            FlaggedEnsemble f3 = cyclic_shift_quantum(f1, m);
            FlaggedEnsemble f_a = f3.branch_marginal(rest);
            rep.post_failure_catalyst_distance = flagged_trace_distance(f_a, cp.catalyst);
        }

        record_check(rep, rep.catalyst_restoration_error < 1e-9, "catalyst restoration");
        record_check(rep, rep.output_error <= cp.expected_eps + 1e-9, "output error");
        record_check(rep, std::abs(rep.success_weight - cp.expected_p) <= 1e-9,
                     "success weight");
        record_check(rep, std::abs(rep.controlled_weight_sum - 1.0) <= 1e-9,
                     "controlled weight sum");
        record_check(rep, rep.catalyst_loss_probability <= (1.0 - pc.p) + 1e-9,
                     "catalyst loss probability");
        return rep;
    }

    // ---- Theorem S4 variants ----
    S4Pieces pc = make_s4_pieces(p, cp.free_pi, cp.k, cp.extra_dim);
    const int g = pc.g;
    const int m = p.m;

    FlaggedEnsemble joint = cp.catalyst.map_bodies([&](const State& body) {
        State j = tensor(pc.zeta_t.relayout(SystemLayout::single("t0", pc.dt)),
                         body.relayout(body.layout.with_suffix("@w")));
        return j.relayout(uniform_layout("t", g, pc.dt));
    });
    auto l2 = [&](const State& body) {
        // restrict every slot to the S^k block
        State s = body;
        std::vector<Mat> vdag = {Mat(pc.v.adjoint())};
        for (int slot = 0; slot < g; ++slot) {
            s = apply_kraus_on_subsystems(
                s, vdag, slot, 1,
                SystemLayout::single("r" + std::to_string(slot), pc.dk),
                NormClass::subnormalized);
        }
        s = s.relayout(uniform_layout("q", g * cp.k, pc.d));
        s = keep_first(s, p.n);
        State out = apply_multishot(p, s);
        State hat = embed_hat_at(out.relayout(uniform_layout("e", m, pc.d)), pc.pi, 0, m, cp.k)
                        .relayout(uniform_layout("h", m * cp.k, pc.d));
        State tilde = embed_t_groups(hat, m, cp.k, pc.d, pc.v);
        for (int t = 0; t < g - m; ++t) {
            tilde = tensor(tilde, pc.theta_t.relayout(SystemLayout::single(
                                      "th" + std::to_string(t), pc.dt)));
        }
        return tilde.relayout(uniform_layout("t", g, pc.dt));
    };

    ControlledOp ctrl = ControlledOp::identity_except(g, g, 1.0 / pc.p, l2);
    ControlledResult cres = apply_controlled(ctrl, joint);
    rep.controlled_weight_sum = cres.weight_sum;
    FlaggedEnsemble nu2 = cyclic_shift_labels(cres.out);

    // The alternative catalyst returns the target from a branch-dependent
    // slot, so its quantum shift is classically controlled.
    auto alt_shift = [&](const FlaggedEnsemble& e) {
        std::vector<Branch> shifted;
        for (const auto& b : e.branches()) {
            int src = (b.label == 1) ? (m - 1) : (g - 1);
            shifted.push_back({b.weight, move_subsystem_to_front(b.body, src), b.label});
        }
        return FlaggedEnsemble(std::move(shifted), false);
    };
    FlaggedEnsemble nu3 = alt ? alt_shift(nu2) : cyclic_shift_quantum(nu2, g);

    std::vector<int> rest;
    for (int i = 1; i < g; ++i) rest.push_back(i);
    FlaggedEnsemble nu_a = nu3.branch_marginal(rest);
    rep.catalyst_restoration_error = flagged_trace_distance(nu_a, cp.catalyst);

    // projective measurement {P_Sk, P_W} on the output slot
    State nu_prime = nu3.average_marginal({0});
    Mat accepted = pc.v.adjoint() * nu_prime.mat * pc.v;
    rep.accept_weight = accepted.trace().real();
    rep.expected_accept_weight = static_cast<double>(m) / g;
    Mat nu_pp = accepted / rep.accept_weight;
    {
        Mat pw = identity_mat(pc.dt) - pc.v * pc.v.adjoint();
        rep.leak_weight = (pw * (pc.v * nu_pp * pc.v.adjoint())).trace().real();
    }
    // reverse embedding of the accepted block
    State acc_state(nu_pp, uniform_layout("q", cp.k, pc.d), NormClass::normalized, false);
    State out_state = keep_first(acc_state, 1);
    rep.output_error = 0.5 * trace_norm(out_state.mat - p.target.mat);
    Mat mix = Mat::Zero(pc.d, pc.d);
    for (int i = 0; i < m; ++i) {
        mix += partial_trace_indices(pc.eta.mat, pc.eta.layout.dims(), {i}) / m;
    }
    rep.output_vs_mixture = 0.5 * trace_norm(out_state.mat - mix);
    rep.success_weight = pc.p * rep.accept_weight;

    if (p.target.is_pure()) {
        // post-selected joint state: accept on the output slot, reverse-embed
        std::vector<Branch> acc_branches;
        double total = 0.0;
        std::vector<Mat> vdag = {Mat(pc.v.adjoint())};
        for (const auto& b : nu3.branches()) {
            State s = apply_kraus_on_subsystems(b.body, vdag, 0, 1,
                                                SystemLayout::single("acc", pc.dk),
                                                NormClass::subnormalized);
            double w = b.weight * s.trace_real();
            if (w <= 1e-14) continue;
            Mat norm = s.mat / s.trace_real();
            std::vector<int> dims = {pc.dk};
            for (int i = 1; i < g; ++i) dims.push_back(pc.dt);
            SystemLayout lay =
                SystemLayout::single("acc", pc.dk)
                    .concat(uniform_layout("t", g - 1, pc.dt));
            State body(norm, lay, NormClass::normalized, false);
            // split the accepted slot into k copies and keep the first
            SystemLayout split = uniform_layout("q", cp.k, pc.d).concat(
                uniform_layout("t", g - 1, pc.dt));
            body = body.relayout(split);
            std::vector<int> keep = {0};
            for (int i = cp.k; i < split.size(); ++i) keep.push_back(i);
            Mat red = partial_trace_indices(body.mat, body.layout.dims(), keep);
            acc_branches.push_back(
                {w, State(red, body.layout.select(keep), NormClass::normalized, false),
                 b.label});
            total += w;
        }
        for (auto& b : acc_branches) b.weight /= total;
        FlaggedEnsemble nu_acc(std::move(acc_branches), false);
        rep.correlation_checked = true;
        rep.correlation_lhs = flagged_correlation_lhs(nu_acc, p.target.mat);
        State nu_acc_s = nu_acc.average_marginal({0});
        double eps = 0.5 * trace_norm(nu_acc_s.mat - p.target.mat);
        rep.correlation_rhs = eps + 3.0 * std::sqrt(eps);
        rep.correlation_pass = rep.correlation_lhs <= rep.correlation_rhs + 1e-9;
        record_check(rep, rep.correlation_pass, "correlation bound");
    }

    rep.catalyst_loss_probability = (1.0 - pc.p) / g;
    if (pc.p < 1.0 - 1e-12) {
        auto fail_action = [&](const State& body) {
            State s = body;
            std::vector<Mat> vdag = {Mat(pc.v.adjoint())};
            for (int slot = 0; slot < g; ++slot) {
                s = apply_kraus_on_subsystems(s, vdag, slot, 1,
                                              SystemLayout::single("r" + std::to_string(slot),
                                                                   pc.dk),
                                              NormClass::subnormalized);
            }
            s = s.relayout(uniform_layout("q", g * cp.k, pc.d));
            s = keep_first(s, p.n);
            double w_fail = s.trace_real() - apply_multishot(p, s).trace_real();
            State fs(w_fail * p.failure_state.mat, p.failure_state.layout,
                     NormClass::subnormalized, false);
            State hat = embed_hat_at(
                State(fs.mat, uniform_layout("e", m, pc.d), NormClass::subnormalized, false),
                pc.pi, 0, m, cp.k)
                            .relayout(uniform_layout("h", m * cp.k, pc.d));
            State tilde = embed_t_groups(hat, m, cp.k, pc.d, pc.v);
            for (int t = 0; t < g - m; ++t) {
                tilde = tensor(tilde, pc.theta_t.relayout(SystemLayout::single(
                                          "th" + std::to_string(t), pc.dt)));
            }
            return tilde.relayout(uniform_layout("t", g, pc.dt));
        };
        ControlledOp fail_ctrl =
            ControlledOp::identity_except(g, g, 1.0 / (1.0 - pc.p), fail_action);
        FlaggedEnsemble only_g({Branch{1.0, joint.branch_with_label(g).body, g}});
        ControlledResult fres = apply_controlled(fail_ctrl, only_g);
        // the classical shift sends label g to 1
        FlaggedEnsemble f2({Branch{1.0, fres.out.branch_with_label(g).body, 1}}, false);
        FlaggedEnsemble f3 = alt ? alt_shift(f2) : cyclic_shift_quantum(f2, g);
        rep.post_failure_catalyst_distance =
            flagged_trace_distance(f3.branch_marginal(rest), cp.catalyst);
    }

    record_check(rep, rep.catalyst_restoration_error < 1e-9, "catalyst restoration");
    record_check(rep, rep.output_error <= cp.expected_eps + 1e-9, "output error");
    record_check(rep, std::abs(rep.accept_weight - rep.expected_accept_weight) <= 1e-9,
                 "acceptance weight");
    record_check(rep, std::abs(rep.success_weight - cp.expected_p) <= 1e-9, "success weight");
    record_check(rep, std::abs(rep.leak_weight) <= 1e-12, "orthogonal leak");
    record_check(rep, std::abs(rep.controlled_weight_sum - 1.0) <= 1e-9,
                 "controlled weight sum");
    record_check(rep, rep.catalyst_loss_probability <= (1.0 - pc.p) + 1e-9,
                 "catalyst loss probability");
    return rep;
}

VerificationReport simulate_reuse(const CatalyticProtocol& cp, int rounds) {
    if (cp.variant != ProtocolVariant::theorem_s1)
        throw InvariantError("simulate_reuse: only the block (S1) construction is reusable here");
    if (std::abs(cp.expected_p - 1.0) > 1e-9)
        throw InvariantError("simulate_reuse: non-deterministic protocol rejected");
    if (rounds < 1) throw DimensionError("simulate_reuse: rounds must be >= 1");

    const MultiShotProtocol& p = cp.base;
    S1Pieces pc = make_s1_pieces(p, cp.free_pi, cp.k);
    const int m = p.m;
    const int k = cp.k;
    const int acount = (m - 1) * k;

    VerificationReport rep;
    rep.multi_shot_marginal_error = p.declared_eps;
    rep.catalyst_quantum_dim = cp.catalyst.body_dim();
    rep.catalyst_classical_dim = cp.catalyst.branch_count();
    rep.expected_success_weight = 1.0;
    rep.success_weight = 1.0;
    rep.accept_weight = 1.0;
    rep.expected_accept_weight = 1.0;
    rep.controlled_weight_sum = 1.0;

    FlaggedEnsemble ens = cp.catalyst;
    for (int r = 1; r <= rounds; ++r) {
        const int pre = r - 1;
        // insert a fresh source block between the outputs and the catalyst
        ens = ens.map_bodies([&](const State& body) {
            State j = tensor(body, pc.zeta.relayout(pc.zeta.layout.with_suffix("@f")));
            std::vector<int> order;
            for (int i = 0; i < pre; ++i) order.push_back(i);
            for (int i = 0; i < k; ++i) order.push_back(pre + acount + i);
            for (int i = 0; i < acount; ++i) order.push_back(pre + i);
            State moved = permute_state(j, order);
            return moved.relayout(
                uniform_layout("s", pre, pc.d).concat(uniform_layout("j", m * k, pc.d)));
        });
        auto l2 = [&](const State& body) {
            std::vector<int> keep;
            for (int i = 0; i < pre + p.n; ++i) keep.push_back(i);
            Mat red = partial_trace_indices(body.mat, body.layout.dims(), keep);
            State s(red, body.layout.select(keep), NormClass::normalized, false);
            State out = apply_multishot(p, s, pre);
            State relabeled = out.relayout(
                uniform_layout("s", pre, pc.d).concat(uniform_layout("e", m, pc.d)));
            State hat = embed_hat_at(relabeled, pc.pi, pre, m, k);
            return hat.relayout(
                uniform_layout("s", pre, pc.d).concat(uniform_layout("j", m * k, pc.d)));
        };
        ControlledOp ctrl = ControlledOp::identity_except(m, m, 1.0, l2);
        ControlledResult cres = apply_controlled(ctrl, ens);
        rep.controlled_weight_sum = cres.weight_sum;
        FlaggedEnsemble nu2 = cyclic_shift_labels(cres.out);
        // rotate the m slot groups within the region, outputs untouched
        FlaggedEnsemble nu3 = nu2.map_bodies([&](const State& body) {
            std::vector<int> order;
            for (int i = 0; i < pre; ++i) order.push_back(i);
            for (int i = 0; i < k; ++i) order.push_back(pre + (m - 1) * k + i);
            for (int i = 0; i < (m - 1) * k; ++i) order.push_back(pre + i);
            return permute_state(body, order);
        });
        // reverse-embed the output slot
        FlaggedEnsemble nu = nu3.branch_marginal([&] {
            std::vector<int> keep;
            for (int i = 0; i < pre; ++i) keep.push_back(i);
            keep.push_back(pre);
            for (int i = pre + k; i < pre + m * k; ++i) keep.push_back(i);
            return keep;
        }());
        ens = nu.map_bodies([&](const State& body) {
            return body.relayout(
                uniform_layout("s", r, pc.d).concat(uniform_layout("a", acount, pc.d)));
        });

        // per-round certificates
        std::vector<int> arange;
        for (int i = r; i < r + acount; ++i) arange.push_back(i);
        double restoration = flagged_trace_distance(ens.branch_marginal(arange), cp.catalyst);
        rep.per_round_restoration.push_back(restoration);
        double worst = 0.0;
        std::vector<Mat> outs;
        for (int i = 0; i < r; ++i) {
            State si = ens.average_marginal({i});
            outs.push_back(si.mat);
            worst = std::max(worst, 0.5 * trace_norm(si.mat - p.target.mat));
        }
        rep.per_round_output_errors.push_back(worst);
        for (size_t i = 0; i < outs.size(); ++i) {
            for (size_t j = i + 1; j < outs.size(); ++j) {
                rep.output_marginal_max_pairwise =
                    std::max(rep.output_marginal_max_pairwise,
                             0.5 * trace_norm(outs[i] - outs[j]));
            }
        }
    }

    rep.catalyst_restoration_error = rep.per_round_restoration.back();
    State nu_s = ens.average_marginal({0});
    rep.output_error = 0.5 * trace_norm(nu_s.mat - p.target.mat);
    rep.output_vs_mixture = 0.0;

    record_check(rep, rep.catalyst_restoration_error < 1e-9, "catalyst restoration");
    for (double e : rep.per_round_output_errors) {
        record_check(rep, e <= p.declared_eps + 1e-9, "per-round output error");
    }
    record_check(rep, rep.output_marginal_max_pairwise <= 1e-9,
                 "output marginals pairwise equal");
    return rep;
}

CorrelationBound correlation_check(const State& nu_sa, const State& phi, int s_count) {
    if (!phi.is_pure(1e-10))
        throw InvariantError("correlation_check: phi is not pure within tolerance");
    if (s_count < 1 || s_count > nu_sa.layout.size())
        throw DimensionError("correlation_check: invalid subsystem count");
    int ds = 1;
    for (int i = 0; i < s_count; ++i) ds *= nu_sa.layout.dim(i);
    if (phi.total_dim() != ds)
        throw DimensionError("correlation_check: phi does not match the S factor");
    State nu_s = keep_first(nu_sa, s_count);
    std::vector<int> rest;
    for (int i = s_count; i < nu_sa.layout.size(); ++i) rest.push_back(i);
    Mat nu_a = partial_trace_indices(nu_sa.mat, nu_sa.layout.dims(), rest);
    CorrelationBound out;
    out.eps = 0.5 * trace_norm(nu_s.mat - phi.mat);
    out.lhs = 0.5 * trace_norm(nu_sa.mat - kron(phi.mat, nu_a));
    out.rhs = out.eps + 3.0 * std::sqrt(out.eps);
    out.pass = out.lhs <= out.rhs + 1e-9;
    return out;
}

}  // namespace catadist
