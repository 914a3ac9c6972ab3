#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "catadist/catalysis.hpp"
#include "catadist/channel_catalysis.hpp"

namespace catadist {

using json = nlohmann::ordered_json;

/// Rounds to `digits` significant digits (report fields only; state files
/// stay bit-exact).
double round_sig(double x, int digits = 12);

// ---- state / channel file formats ----

json state_to_json(const State& s);
State state_from_json(const json& j);

json quantum_op_to_json(const QuantumOp& op);
QuantumOp quantum_op_from_json(const json& j);

// ---- report assembly ----

json verification_report_to_json(const VerificationReport& rep);
json channel_report_to_json(const ChannelConvertReport& rep);

/// Serialized protocol description; catalyst branch states are inlined
/// under "states" keyed by the file names the CLI writes them to.
json catalytic_protocol_to_json(const CatalyticProtocol& cp, json* catalyst_states);

/// Runs one CLI command described by `config` and returns the full bundle
/// (config, report, optional protocol/catalyst). Deterministic: identical
/// config yields identical bytes.
/// config fields: command = convert | reuse | channel,
///   protocol, params{}, variant (s1|s4|s4_alt), k, rounds, code, n, seed.
json run_cli_command(const json& config);

/// Re-runs the stored config and compares every numeric leaf of the report
/// bundle; returns the list of mismatched paths (empty = verified).
std::vector<std::string> verify_report_bundle(const json& stored);

/// One-line CSV summary of a bundle (header available separately).
std::string csv_header();
std::string csv_summary(const json& bundle);

}  // namespace catadist
