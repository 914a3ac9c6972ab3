#include "catadist/io.hpp"

#include <cmath>
#include <sstream>

#include "catadist/protocols.hpp"
#include "catadist/version.hpp"

namespace catadist {

double round_sig(double x, int digits) {
    if (x == 0.0 || !std::isfinite(x)) return x == 0.0 ? 0.0 : x;
    double mag = std::pow(10.0, digits - 1 - std::floor(std::log10(std::abs(x))));
    return std::round(x * mag) / mag;
}

json state_to_json(const State& s) {
    json layout = json::array();
    for (const auto& sub : s.layout.subsystems()) layout.push_back({sub.label, sub.dim});
    json entries = json::array();
    for (Eigen::Index r = 0; r < s.mat.rows(); ++r) {
        for (Eigen::Index c = 0; c < s.mat.cols(); ++c) {
            entries.push_back({s.mat(r, c).real(), s.mat(r, c).imag()});
        }
    }
    return json{{"layout", layout},
                {"norm_class",
                 s.norm_class == NormClass::normalized ? "normalized" : "subnormalized"},
                {"entries", entries}};
}

State state_from_json(const json& j) {
    std::vector<Subsystem> subs;
    for (const auto& item : j.at("layout")) {
        subs.push_back({item.at(0).get<std::string>(), item.at(1).get<int>()});
    }
    SystemLayout layout(std::move(subs));
    const auto& entries = j.at("entries");
    int d = layout.total_dim();
    if (static_cast<int>(entries.size()) != d * d)
        throw DimensionError("state_from_json: entry count does not match layout");
    Mat m(d, d);
    int idx = 0;
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            m(r, c) = cplx(entries[idx][0].get<double>(), entries[idx][1].get<double>());
            ++idx;
        }
    }
    NormClass nc = j.at("norm_class").get<std::string>() == "normalized"
                       ? NormClass::normalized
                       : NormClass::subnormalized;
    return State(std::move(m), std::move(layout), nc);
}

json quantum_op_to_json(const QuantumOp& op) {
    json in = json::array(), out = json::array();
    for (const auto& sub : op.in_layout().subsystems()) in.push_back({sub.label, sub.dim});
    for (const auto& sub : op.out_layout().subsystems()) out.push_back({sub.label, sub.dim});
    const Mat& c = op.choi();
    json entries = json::array();
    for (Eigen::Index r = 0; r < c.rows(); ++r) {
        for (Eigen::Index cc = 0; cc < c.cols(); ++cc) {
            entries.push_back({c(r, cc).real(), c(r, cc).imag()});
        }
    }
    return json{{"in_layout", in},
                {"out_layout", out},
                {"trace_class",
                 op.trace_class() == TraceClass::preserving ? "preserving" : "nonincreasing"},
                {"choi", entries}};
}

QuantumOp quantum_op_from_json(const json& j) {
    auto parse_layout = [](const json& arr) {
        std::vector<Subsystem> subs;
        for (const auto& item : arr) {
            subs.push_back({item.at(0).get<std::string>(), item.at(1).get<int>()});
        }
        return SystemLayout(std::move(subs));
    };
    SystemLayout in = parse_layout(j.at("in_layout"));
    SystemLayout out = parse_layout(j.at("out_layout"));
    long long d = static_cast<long long>(in.total_dim()) * out.total_dim();
    const auto& entries = j.at("choi");
    if (static_cast<long long>(entries.size()) != d * d)
        throw DimensionError("quantum_op_from_json: entry count mismatch");
    Mat c(d, d);
    long long idx = 0;
    for (long long r = 0; r < d; ++r) {
        for (long long cc = 0; cc < d; ++cc) {
            c(r, cc) = cplx(entries[idx][0].get<double>(), entries[idx][1].get<double>());
            ++idx;
        }
    }
    TraceClass tc = j.at("trace_class").get<std::string>() == "preserving"
                        ? TraceClass::preserving
                        : TraceClass::nonincreasing;
    return QuantumOp::from_choi(std::move(c), std::move(in), std::move(out), tc);
}

namespace {

json round_leaves(const json& j) {
    if (j.is_number_float()) return round_sig(j.get<double>());
    if (j.is_object()) {
        json out = json::object();
        for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = round_leaves(it.value());
        return out;
    }
    if (j.is_array()) {
        json out = json::array();
        for (const auto& item : j) out.push_back(round_leaves(item));
        return out;
    }
    return j;
}

}  // namespace

json verification_report_to_json(const VerificationReport& rep) {
    json j{{"catalyst_restoration_error", rep.catalyst_restoration_error},
           {"output_error", rep.output_error},
           {"multi_shot_marginal_error", rep.multi_shot_marginal_error},
           {"output_vs_mixture", rep.output_vs_mixture},
           {"success_weight", rep.success_weight},
           {"expected_success_weight", rep.expected_success_weight},
           {"controlled_weight_sum", rep.controlled_weight_sum},
           {"accept_weight", rep.accept_weight},
           {"expected_accept_weight", rep.expected_accept_weight},
           {"leak_weight", rep.leak_weight},
           {"catalyst_loss_probability", rep.catalyst_loss_probability},
           {"post_failure_catalyst_distance", rep.post_failure_catalyst_distance},
           {"catalyst_quantum_dim", rep.catalyst_quantum_dim},
           {"catalyst_classical_dim", rep.catalyst_classical_dim},
           {"pass", rep.pass},
           {"failures", rep.failures}};
    if (rep.correlation_checked) {
        j["correlation"] = json{{"lhs", rep.correlation_lhs},
                                {"rhs", rep.correlation_rhs},
                                {"pass", rep.correlation_pass}};
    }
    if (!rep.per_round_output_errors.empty()) {
        j["per_round_output_errors"] = rep.per_round_output_errors;
        j["per_round_restoration"] = rep.per_round_restoration;
        j["output_marginal_max_pairwise"] = rep.output_marginal_max_pairwise;
    }
    return round_leaves(j);
}

json channel_report_to_json(const ChannelConvertReport& rep) {
    json j{{"n", rep.n},
           {"code", rep.code},
           {"measured_eps_diamond", rep.measured_eps},
           {"marginal_restoration", rep.marginal_restoration},
           {"marginal_restoration_max", rep.marginal_restoration_max},
           {"branch_distances", rep.branch_distances},
           {"g3_half_diamond", rep.g3_half_diamond},
           {"g3_half_diamond_max_branch", rep.g3_half_diamond_max_branch},
           {"telescoping_residuals", rep.telescoping_residuals},
           {"telescoping_max", rep.telescoping_max},
           {"marginal_pass", rep.marginal_pass},
           {"bound_pass", rep.bound_pass},
           {"telescoping_pass", rep.telescoping_pass},
           {"pass", rep.pass}};
    return round_leaves(j);
}

json catalytic_protocol_to_json(const CatalyticProtocol& cp, json* catalyst_states) {
    json steps = json::array();
    for (const auto& s : cp.steps) steps.push_back({{"kind", s.kind}, {"detail", s.detail}});
    json branches = json::array();
    json states = json::object();
    for (const auto& b : cp.catalyst.branches()) {
        std::string fname = "catalyst_branch_" + std::to_string(b.label) + ".state.json";
        branches.push_back(
            {{"label", b.label}, {"weight", b.weight}, {"state_file", fname}});
        states[fname] = state_to_json(b.body);
    }
    if (catalyst_states) *catalyst_states = states;
    json j{{"variant", variant_name(cp.variant)},
           {"base",
            {{"name", cp.base.name},
             {"n", cp.base.n},
             {"m", cp.base.m},
             {"declared_eps", round_sig(cp.base.declared_eps)},
             {"declared_p", round_sig(cp.base.declared_p)}}},
           {"k", cp.k},
           {"g", cp.g},
           {"extra_dim", cp.extra_dim},
           {"expected_eps", round_sig(cp.expected_eps)},
           {"expected_p", round_sig(cp.expected_p)},
           {"steps", steps},
           {"catalyst_branches", branches}};
    return j;
}

namespace {

std::map<std::string, double> params_from_json(const json& config) {
    std::map<std::string, double> params;
    if (config.contains("params")) {
        for (auto it = config.at("params").begin(); it != config.at("params").end(); ++it) {
            params[it.key()] = it.value().get<double>();
        }
    }
    return params;
}

json tolerances_json() {
    return json{{"restoration", 1e-9},
                {"psd", 1e-10},
                {"report_digits", 12},
                {"verify", 1e-9}};
}

}  // namespace

json run_cli_command(const json& config) {
    json bundle;
    bundle["config"] = config;
    bundle["versions"] = json{{"catadist", kVersion}};
    bundle["tolerances"] = tolerances_json();

    const std::string command = config.at("command").get<std::string>();
    if (command == "convert") {
        const std::string key = config.at("protocol").get<std::string>();
        auto params = params_from_json(config);
        MultiShotProtocol p = make_protocol(key, params);
        State pi = default_free_state(key, params);
        std::string variant = config.value("variant", "s1");
        CatalyticProtocol cp;
        if (variant == "s1") {
            cp = convert_to_catalytic(p, pi);
        } else if (variant == "s4" || variant == "s4_alt") {
            int k = config.value("k", 1);
            cp = tradeoff_convert(p, k, variant == "s4_alt", pi);
        } else {
            throw UnknownKeyError("unknown variant '" + variant + "'");
        }
        VerificationReport rep = verify_catalytic(cp);
        json states;
        bundle["protocol"] = catalytic_protocol_to_json(cp, &states);
        bundle["catalyst_states"] = states;
        bundle["report"] = verification_report_to_json(rep);
        bundle["pass"] = rep.pass;
        return bundle;
    }
    if (command == "reuse") {
        const std::string key = config.at("protocol").get<std::string>();
        auto params = params_from_json(config);
        MultiShotProtocol p = make_protocol(key, params);
        State pi = default_free_state(key, params);
        CatalyticProtocol cp = convert_to_catalytic(p, pi);
        int rounds = config.value("rounds", 3);
        VerificationReport rep = simulate_reuse(cp, rounds);
        bundle["report"] = verification_report_to_json(rep);
        bundle["pass"] = rep.pass;
        return bundle;
    }
    if (command == "channel") {
        const std::string key = config.at("code").get<std::string>();
        int n = config.value("n", 2);
        auto params = params_from_json(config);
        double depol = params.count("depol") ? params["depol"] : 0.25;
        QuantumOp n_ch, m_ch;
        ChannelCode code;
        make_code_demo(key, n, n_ch, m_ch, code, depol);
        ChannelConvertReport rep = catalytic_channel_convert(n_ch, code, m_ch, n);
        MutualInfoCriterion mic = mutual_info_criterion(n_ch, m_ch);
        bundle["report"] = channel_report_to_json(rep);
        bundle["report"]["mutual_information"] =
            json{{"i_n", round_sig(mic.i_n)},
                 {"i_m", round_sig(mic.i_m)},
                 {"transformable", mic.transformable}};
        bundle["pass"] = rep.pass && mic.transformable;
        return bundle;
    }
    throw UnknownKeyError("unknown command '" + command + "'");
}

namespace {

void collect_mismatches(const json& a, const json& b, const std::string& path, double tol,
                        std::vector<std::string>& out) {
    if (a.is_object() && b.is_object()) {
        for (auto it = a.begin(); it != a.end(); ++it) {
            if (!b.contains(it.key())) {
                out.push_back(path + "/" + it.key() + " (missing)");
                continue;
            }
            collect_mismatches(it.value(), b.at(it.key()), path + "/" + it.key(), tol, out);
        }
        for (auto it = b.begin(); it != b.end(); ++it) {
            if (!a.contains(it.key())) out.push_back(path + "/" + it.key() + " (extra)");
        }
        return;
    }
    if (a.is_array() && b.is_array()) {
        if (a.size() != b.size()) {
            out.push_back(path + " (array size)");
            return;
        }
        for (size_t i = 0; i < a.size(); ++i) {
            collect_mismatches(a[i], b[i], path + "/" + std::to_string(i), tol, out);
        }
        return;
    }
    if (a.is_number() && b.is_number()) {
        double xa = a.get<double>();
        double xb = b.get<double>();
        if (std::abs(xa - xb) > tol * std::max(1.0, std::max(std::abs(xa), std::abs(xb)))) {
            out.push_back(path);
        }
        return;
    }
    if (a != b) out.push_back(path);
}

}  // namespace

std::vector<std::string> verify_report_bundle(const json& stored) {
    json fresh = run_cli_command(stored.at("config"));
    double tol = stored.contains("tolerances") && stored["tolerances"].contains("verify")
                     ? stored["tolerances"]["verify"].get<double>()
                     : 1e-9;
    std::vector<std::string> mismatches;
    collect_mismatches(stored, fresh, "", tol, mismatches);
    return mismatches;
}

std::string csv_header() {
    return "command,protocol,variant,n,m,k,g,declared_eps,declared_p,"
           "restoration,output_error,success_weight,pass";
}

namespace {

std::string num_str(const json& j, const char* key) {
    if (!j.contains(key)) return "";
    std::ostringstream os;
    os.precision(12);
    os << j.at(key).get<double>();
    return os.str();
}

}  // namespace

std::string csv_summary(const json& bundle) {
    const json& config = bundle.at("config");
    std::ostringstream os;
    os << config.at("command").get<std::string>() << ",";
    os << (config.contains("protocol") ? config.at("protocol").get<std::string>()
                                       : config.value("code", std::string{}))
       << ",";
    os << config.value("variant", std::string{}) << ",";
    if (bundle.contains("protocol")) {
        const json& p = bundle.at("protocol");
        os << p.at("base").at("n").get<int>() << "," << p.at("base").at("m").get<int>() << ","
           << p.at("k").get<int>() << "," << p.at("g").get<int>() << ","
           << num_str(p.at("base"), "declared_eps") << "," << num_str(p.at("base"), "declared_p")
           << ",";
    } else {
        os << ",,,,,,";
    }
    const json& rep = bundle.at("report");
    os << num_str(rep, "catalyst_restoration_error") << "," << num_str(rep, "output_error") << ","
       << num_str(rep, "success_weight") << ",";
    os << (bundle.at("pass").get<bool>() ? "1" : "0");
    return os.str();
}

}  // namespace catadist
