#include "catadist/protocols.hpp"

#include <algorithm>
#include <cmath>

#include "catadist/rng.hpp"
#include "catadist/sdp.hpp"

namespace catadist {

namespace {

Mat pauli_x() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
Mat pauli_y() {
    Mat m(2, 2);
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}
Mat pauli_z() {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Mat pauli_string(const std::string& s) {
    Mat m = Mat::Ones(1, 1);
    for (char c : s) {
        switch (c) {
            case 'I': m = kron(m, identity_mat(2)); break;
            case 'X': m = kron(m, pauli_x()); break;
            case 'Y': m = kron(m, pauli_y()); break;
            case 'Z': m = kron(m, pauli_z()); break;
            default: throw DimensionError("pauli_string: bad symbol");
        }
    }
    return m;
}

SystemLayout pair_layout(int d) {
    return SystemLayout({{"A", d}, {"B", d}});
}

}  // namespace

State max_entangled(int d) {
    CVec v = CVec::Zero(d * d);
    for (int i = 0; i < d; ++i) v(i * d + i) = 1.0 / std::sqrt(static_cast<double>(d));
    return State::pure(v, pair_layout(d));
}

State isotropic_state(double f, int d) {
    if (f < 0.0 || f > 1.0) throw DimensionError("isotropic_state: f outside [0, 1]");
    State phi = max_entangled(d);
    Mat rest = (identity_mat(d * d) - phi.mat) / static_cast<double>(d * d - 1);
    return State(f * phi.mat + (1.0 - f) * rest, pair_layout(d), NormClass::normalized);
}

State t_state() {
    double r = 1.0 / std::sqrt(3.0);
    Mat m = 0.5 * (identity_mat(2) + r * (pauli_x() + pauli_y() + pauli_z()));
    return State(m, SystemLayout::single("S", 2), NormClass::normalized);
}

State noisy_t_state(double q) {
    if (q < 0.0 || q > 1.0) throw DimensionError("noisy_t_state: q outside [0, 1]");
    Mat m = (1.0 - q) * t_state().mat + q * identity_mat(2) / 2.0;
    return State(m, SystemLayout::single("S", 2), NormClass::normalized);
}

MultiShotProtocol recurrence_protocol(double f) {
    if (f <= 0.5 || f > 1.0)
        throw DimensionError("recurrence_protocol: f must lie in (1/2, 1]");
    // basis |a1 b1 a2 b2>; bilateral CNOT a1->a2, b1->b2
    auto bit = [](int x, int pos) { return (x >> (3 - pos)) & 1; };
    Mat u = Mat::Zero(16, 16);
    for (int x = 0; x < 16; ++x) {
        int a1 = bit(x, 0), b1 = bit(x, 1), a2 = bit(x, 2), b2 = bit(x, 3);
        int y = (a1 << 3) | (b1 << 2) | ((a2 ^ a1) << 1) | (b2 ^ b1);
        u(y, x) = 1.0;
    }
    auto measured = [&](int z1, int z2) {
        Mat k = Mat::Zero(4, 16);
        for (int a1 = 0; a1 < 2; ++a1) {
            for (int b1 = 0; b1 < 2; ++b1) {
                int row = (a1 << 1) | b1;
                int sel = (a1 << 3) | (b1 << 2) | (z1 << 1) | z2;
                k.row(row) = u.row(sel);
            }
        }
        return k;
    };
    SystemLayout in = SystemLayout::uniform("c", 2, 4);
    SystemLayout out = SystemLayout::single("o", 4);
    QuantumOp keep = QuantumOp::from_kraus({measured(0, 0), measured(1, 1)}, in, out,
                                           TraceClass::nonincreasing);
    QuantumOp fail = QuantumOp::from_kraus({measured(0, 1), measured(1, 0)}, in, out,
                                           TraceClass::nonincreasing);
    State src = isotropic_state(f, 2);
    State tgt = max_entangled(2);
    return measure_protocol("recurrence", 2, 1, src, tgt, {{keep, 2, 1}},
                            std::vector<ProtocolFactor>{{fail, 2, 1}});
}

namespace {

struct FiveQubitCode {
    Mat decode;  // 2 x 32, includes the Clifford fix-up
};

const FiveQubitCode& five_qubit_code() {
    static const FiveQubitCode code = [] {
        const char* gens[] = {"XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"};
        Mat proj = identity_mat(32);
        for (const char* gstr : gens) {
            proj = proj * (identity_mat(32) + pauli_string(gstr)) / 2.0;
        }
        CVec v0 = proj.col(0);
        v0.normalize();
        CVec v1 = pauli_string("XXXXX") * v0;
        Mat enc(32, 2);
        enc.col(0) = v0;
        enc.col(1) = v1;
        Mat dec = enc.adjoint();

        // At zero noise the decoded state is a face state; conjugate by the
        // Clifford rotation that carries it onto |T><T|.
        Mat t5 = kron_power(t_state().mat, 5);
        Mat out0 = dec * t5 * dec.adjoint();
        out0 /= out0.trace();
        const Mat target = t_state().mat;
        for (const Mat& c : single_qubit_cliffords()) {
            Mat rotated = c * out0 * c.adjoint();
            if (0.5 * trace_norm(rotated - target) < 1e-9) {
                FiveQubitCode fc;
                fc.decode = c * dec;
                return fc;
            }
        }
        throw InvariantError("five_qubit_code: no Clifford fix-up found");
    }();
    return code;
}

}  // namespace

MultiShotProtocol five_qubit_t_protocol(double depolarization) {
    const FiveQubitCode& code = five_qubit_code();
    SystemLayout in = SystemLayout::uniform("c", 5, 2);
    SystemLayout out = SystemLayout::single("o", 2);
    QuantumOp decode =
        QuantumOp::from_kraus({code.decode}, in, out, TraceClass::nonincreasing);
    State src = noisy_t_state(depolarization);
    State tgt = t_state();
    MultiShotProtocol p =
        measure_protocol("five_qubit_t", 5, 1, src, tgt, {{decode, 5, 1}});
    double eps_in = 0.5 * trace_norm(src.mat - tgt.mat);
    p.in_working_regime = p.declared_eps < eps_in || depolarization == 0.0;
    return p;
}

MultiShotProtocol random_protocol(Rng& rng, int n, int m, int d, double p_scale) {
    if (p_scale <= 0.0 || p_scale > 1.0)
        throw DimensionError("random_protocol: p_scale outside (0, 1]");
    long long din = 1, dout = 1;
    for (int i = 0; i < n; ++i) din *= d;
    for (int i = 0; i < m; ++i) dout *= d;
    check_dim_cap(din, din);
    auto kraus = random_cptp_kraus(rng, static_cast<int>(din), static_cast<int>(dout),
                                   std::min<long long>(4, din));
    double root = std::sqrt(p_scale);
    for (auto& k : kraus) k *= root;
    SystemLayout in = SystemLayout::uniform("c", n, d);
    SystemLayout out = SystemLayout::uniform("o", m, d);
    QuantumOp op = QuantumOp::from_kraus(std::move(kraus), in, out, TraceClass::nonincreasing);

    // declare the first output marginal as the target
    State source(random_density(rng, d), SystemLayout::single("S", d), NormClass::normalized);
    MultiShotProtocol tmp;
    tmp.n = n;
    tmp.m = m;
    tmp.source = source;
    tmp.factors = {{op, n, m}};
    State rho_n = tensor_power(source.flattened("s"), n, "c")
                      .relayout(SystemLayout::uniform("q", n, d));
    State raw = apply_multishot(tmp, rho_n);
    Mat eta = raw.mat / raw.trace_real();
    Mat first = partial_trace_indices(eta, raw.layout.dims(), {0});
    State tgt(hermitized(first), SystemLayout::single("S", d), NormClass::normalized);
    return measure_protocol("random", n, m, source, tgt, {{op, n, m}});
}

bool free_membership(const FreeSetOracle& oracle, const State& s) {
    if (oracle.theory == FreeTheory::entanglement_ppt) {
        if (s.layout.size() != 2)
            throw DimensionError("PPT oracle: state must be bipartite");
        std::vector<std::string> b = {s.layout.label(1)};
        Mat pt = partial_transpose(s.mat, s.layout, b);
        return min_eigenvalue(pt) >= -1e-10;
    }
    return stabilizer_polytope_residual(s) <= oracle.tol;
}

const std::vector<Mat>& single_qubit_cliffords() {
    static const std::vector<Mat> cliffords = [] {
        Mat h(2, 2);
        h << 1, 1, 1, -1;
        h /= std::sqrt(2.0);
        Mat sph(2, 2);
        sph << 1, 0, 0, cplx(0, 1);
        auto canon = [](const Mat& u) {
            // divide by the phase of the largest entry, snap to a grid
            Eigen::Index r = 0, c = 0;
            u.cwiseAbs().maxCoeff(&r, &c);
            cplx ph = u(r, c) / std::abs(u(r, c));
            Mat v = u / ph;
            std::string key;
            for (Eigen::Index i = 0; i < 2; ++i) {
                for (Eigen::Index j = 0; j < 2; ++j) {
                    long re = std::lround(v(i, j).real() * 1e6);
                    long im = std::lround(v(i, j).imag() * 1e6);
                    if (re == 0) re = 0;  // normalize -0
                    if (im == 0) im = 0;
                    key += std::to_string(re) + "," + std::to_string(im) + ";";
                }
            }
            return key;
        };
        std::vector<Mat> group = {identity_mat(2)};
        std::vector<std::string> keys = {canon(group[0])};
        size_t frontier = 0;
        while (frontier < group.size()) {
            Mat base = group[frontier++];
            for (const Mat* gen : {&h, &sph}) {
                Mat cand = (*gen) * base;
                std::string key = canon(cand);
                if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                    keys.push_back(key);
                    group.push_back(cand);
                }
            }
        }
        if (group.size() != 24)
            throw InvariantError("single_qubit_cliffords: expected 24, got " +
                                 std::to_string(group.size()));
        return group;
    }();
    return cliffords;
}

const std::vector<Mat>& stabilizer_projectors(int qubits) {
    static const std::vector<Mat> one_qubit = [] {
        std::vector<Mat> states;
        auto add = [&](const Mat& pauli, double sign) {
            states.push_back(0.5 * (identity_mat(2) + sign * pauli));
        };
        for (const Mat& p : {pauli_x(), pauli_y(), pauli_z()}) {
            add(p, 1.0);
            add(p, -1.0);
        }
        return states;
    }();
    static const std::vector<Mat> two_qubit = [] {
        std::vector<Mat> states;
        for (const Mat& a : one_qubit) {
            for (const Mat& b : one_qubit) states.push_back(kron(a, b));
        }
        // maximally entangled stabilizer states: (C ox I)|Phi+>
        State phi = max_entangled(2);
        for (const Mat& c : single_qubit_cliffords()) {
            Mat u = kron(c, identity_mat(2));
            states.push_back(u * phi.mat * u.adjoint());
        }
        // sanity: all projectors distinct
        for (size_t i = 0; i < states.size(); ++i) {
            for (size_t j = i + 1; j < states.size(); ++j) {
                if ((states[i] - states[j]).cwiseAbs().maxCoeff() < 1e-9)
                    throw InvariantError("stabilizer_projectors: duplicate state");
            }
        }
        if (states.size() != 60)
            throw InvariantError("stabilizer_projectors: expected 60 two-qubit states");
        return states;
    }();
    if (qubits == 1) return one_qubit;
    if (qubits == 2) return two_qubit;
    throw DimensionError("stabilizer oracle supports 1 or 2 qubits only");
}

double stabilizer_polytope_residual(const State& s) {
    int qubits = 0;
    if (s.total_dim() == 2) {
        qubits = 1;
    } else if (s.total_dim() == 4) {
        qubits = 2;
    } else {
        throw DimensionError("stabilizer oracle supports 1 or 2 qubits only");
    }
    const auto& verts = stabilizer_projectors(qubits);
    const int d = s.total_dim();
    const int neq = d * d;  // real parametrization of a Hermitian matrix
    const int nv = static_cast<int>(verts.size());

    // LP as a diagonal SDP: min sum(s+) + sum(s-)
    // s.t. sum_i q_i vec(V_i) + s+ - s- = vec(rho), sum q_i = 1, all >= 0.
    auto basis = hermitian_basis(d);
    SdpProblem prob;
    prob.tol = 1e-10;
    prob.block_dims.assign(nv + 2 * neq, 1);
    for (int j = 0; j < 2 * neq; ++j) {
        prob.objective.push_back({nv + j, Mat::Ones(1, 1)});
    }
    for (int e = 0; e < neq; ++e) {
        SdpConstraint con;
        for (int i = 0; i < nv; ++i) {
            double coeff = basis[e].conjugate().cwiseProduct(verts[i]).sum().real();
            if (std::abs(coeff) > 1e-14) con.terms.push_back({i, coeff * Mat::Ones(1, 1)});
        }
        con.terms.push_back({nv + e, Mat::Ones(1, 1)});
        con.terms.push_back({nv + neq + e, -Mat::Ones(1, 1)});
        con.rhs = basis[e].conjugate().cwiseProduct(s.mat).sum().real();
        prob.constraints.push_back(std::move(con));
    }
    SdpConstraint norm;
    for (int i = 0; i < nv; ++i) norm.terms.push_back({i, Mat::Ones(1, 1)});
    norm.rhs = 1.0;
    prob.constraints.push_back(std::move(norm));

    SdpResult r = solve_sdp(prob);
    if (r.status != SdpStatus::optimal)
        throw InvariantError("stabilizer oracle: LP did not converge");
    return std::max(0.0, 0.5 * (r.primal_value + r.dual_value));
}

namespace {

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

MultiShotProtocol make_recurrence(const std::map<std::string, double>& params) {
    return recurrence_protocol(param_or(params, "f", 0.85));
}
MultiShotProtocol make_recurrence_x2(const std::map<std::string, double>& params) {
    return product_protocol(make_recurrence(params), 2);
}
MultiShotProtocol make_recurrence_det(const std::map<std::string, double>& params) {
    MultiShotProtocol base = make_recurrence(params);
    // deterministic variant: failures prepare the free product state |00><00|
    State junk = State::basis(SystemLayout::single("o", 4), 0);
    return make_deterministic(base, junk);
}
MultiShotProtocol make_recurrence_det_x2(const std::map<std::string, double>& params) {
    return product_protocol(make_recurrence_det(params), 2);
}
MultiShotProtocol make_five_qubit_t(const std::map<std::string, double>& params) {
    return five_qubit_t_protocol(param_or(params, "depol", 0.05));
}
MultiShotProtocol make_random_5_2(const std::map<std::string, double>& params) {
    Rng rng(static_cast<std::uint64_t>(param_or(params, "seed", 7.0)));
    return random_protocol(rng, 5, 2, 2, param_or(params, "p", 0.7));
}

const std::vector<ProtocolEntry> kRegistry = {
    {"recurrence", "two-copy entanglement recurrence on isotropic input (2 -> 1)",
     {{"f", 0.85}}, &make_recurrence, true},
    {"recurrence_x2", "two independent recurrence rounds (4 -> 2)", {{"f", 0.85}},
     &make_recurrence_x2, true},
    {"recurrence_det", "recurrence with the failure branch mixed in (deterministic 2 -> 1)",
     {{"f", 0.85}}, &make_recurrence_det, true},
    {"recurrence_det_x2", "two deterministic recurrence rounds (4 -> 2)", {{"f", 0.85}},
     &make_recurrence_det_x2, true},
    {"five_qubit_t", "five-qubit-code T-state distillation (5 -> 1)", {{"depol", 0.05}},
     &make_five_qubit_t, true},
    {"random_5_2", "seeded random 5 -> 2 protocol with measured performance",
     {{"seed", 7.0}, {"p", 0.7}}, &make_random_5_2, false},
};

}  // namespace

const std::vector<ProtocolEntry>& protocol_registry() { return kRegistry; }

MultiShotProtocol make_protocol(const std::string& key,
                                const std::map<std::string, double>& params) {
    for (const auto& entry : kRegistry) {
        if (entry.key == key) {
            std::map<std::string, double> merged = entry.default_params;
            for (const auto& [k, v] : params) merged[k] = v;
            return entry.make(merged);
        }
    }
    throw UnknownKeyError("unknown protocol '" + key + "'");
}

State default_free_state(const std::string& key, const std::map<std::string, double>& params) {
    (void)params;
    if (key.rfind("recurrence", 0) == 0 || key.rfind("random", 0) == 0) {
        // entanglement-flavored demos: maximally mixed is free
        int d = (key.rfind("random", 0) == 0) ? 2 : 4;
        return State::max_mixed(SystemLayout::single("pi", d));
    }
    if (key == "five_qubit_t") {
        // magic demos: |0><0| is a stabilizer state
        return State::basis(SystemLayout::single("pi", 2), 0);
    }
    throw UnknownKeyError("unknown protocol '" + key + "'");
}

}  // namespace catadist
