#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "catadist/io.hpp"
#include "catadist/protocols.hpp"
#include "catadist/version.hpp"

namespace fs = std::filesystem;
using catadist::json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitInvariant = 2;
constexpr int kExitCap = 3;
constexpr int kExitUsage = 4;

std::map<std::string, double> parse_params(const std::vector<std::string>& kvs) {
    std::map<std::string, double> params;
    for (const auto& kv : kvs) {
        auto pos = kv.find('=');
        if (pos == std::string::npos)
            throw catadist::UnknownKeyError("--params expects key=value, got '" + kv + "'");
        params[kv.substr(0, pos)] = std::stod(kv.substr(pos + 1));
    }
    return params;
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

int emit_bundle(const json& bundle, const std::string& out_dir, const std::string& stem) {
    fs::path dir(out_dir);
    fs::create_directories(dir);
    write_text(dir / (stem + ".report.json"), bundle.dump(2) + "\n");
    if (bundle.contains("catalyst_states")) {
        for (auto it = bundle["catalyst_states"].begin(); it != bundle["catalyst_states"].end();
             ++it) {
            write_text(dir / it.key(), it.value().dump() + "\n");
        }
    }
    std::string csv = catadist::csv_header() + "\n" + catadist::csv_summary(bundle) + "\n";
    write_text(dir / (stem + ".summary.csv"), csv);
    bool pass = bundle.at("pass").get<bool>();
    std::cout << (pass ? "PASS" : "FAIL") << "  report: "
              << (dir / (stem + ".report.json")).string() << "\n";
    if (!pass && bundle["report"].contains("failures")) {
        for (const auto& f : bundle["report"]["failures"]) {
            std::cout << "  failed invariant: " << f.get<std::string>() << "\n";
        }
    }
    return pass ? kExitPass : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"catadist: convert multi-shot distillation protocols into one-shot "
                 "catalytic protocols and certify them"};
    app.set_version_flag("--version", catadist::kVersion);
    app.require_subcommand(1);

    std::string protocol_key, out_dir = "out", variant = "s1", report_path, code_key = "trivial";
    std::vector<std::string> param_kvs;
    int k = 1, rounds = 3, n_slots = 2;
    double tol = 1e-9;
    std::uint64_t seed = 0;
    bool alt_catalyst = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--params", param_kvs, "protocol parameters as key=value");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--tol", tol, "tolerance override");
        cmd->add_option("--seed", seed, "random seed recorded in the report");
    };

    CLI::App* convert = app.add_subcommand("convert", "compile a one-shot catalytic protocol");
    convert->add_option("protocol", protocol_key, "registered protocol key")->required();
    convert->add_option("--variant", variant, "s1 | s4 | s4_alt");
    convert->add_option("--k", k, "block size for the s4 trade-off");
    convert->add_flag("--alt-catalyst", alt_catalyst, "use the target-independent catalyst");
    add_common(convert);

    CLI::App* tradeoff = app.add_subcommand(
        "tradeoff", "probability-for-overhead trade-off (convert --variant s4)");
    tradeoff->add_option("protocol", protocol_key, "registered protocol key")->required();
    tradeoff->add_option("--k", k, "block size (1 <= k <= n/m)");
    tradeoff->add_flag("--alt-catalyst", alt_catalyst, "use the target-independent catalyst");
    add_common(tradeoff);

    CLI::App* reuse = app.add_subcommand("reuse", "repeated catalyst use on a deterministic demo");
    reuse->add_option("protocol", protocol_key, "registered protocol key")->required();
    reuse->add_option("--rounds", rounds, "number of rounds");
    add_common(reuse);

    CLI::App* channel = app.add_subcommand("channel", "channel-catalyst construction demo");
    channel->add_option("code", code_key, "registered code key")->required();
    channel->add_option("--n", n_slots, "number of channel uses (capped at 3)");
    add_common(channel);

    CLI::App* verify = app.add_subcommand("verify", "recompute a stored report");
    verify->add_option("report", report_path, "path to a .report.json file")->required();

    CLI::App* list = app.add_subcommand("list-protocols", "list registered protocols and codes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (list->parsed()) {
            std::cout << "protocols:\n";
            for (const auto& entry : catadist::protocol_registry()) {
                std::cout << "  " << entry.key << "  -  " << entry.description << " (defaults:";
                for (const auto& [key, val] : entry.default_params)
                    std::cout << " " << key << "=" << val;
                std::cout << ")\n";
            }
            std::cout << "channel codes:\n";
            for (const auto& entry : catadist::code_registry()) {
                std::cout << "  " << entry.key << "  -  " << entry.description << "\n";
            }
            return kExitPass;
        }

        if (verify->parsed()) {
            std::ifstream in(report_path, std::ios::binary);
            if (!in) {
                std::cerr << "cannot read " << report_path << "\n";
                return kExitUsage;
            }
            json stored = json::parse(in);
            auto mismatches = catadist::verify_report_bundle(stored);
            if (mismatches.empty()) {
                std::cout << "VERIFIED  every recomputed field matches\n";
                return kExitPass;
            }
            std::cout << "MISMATCH in " << mismatches.size() << " field(s):\n";
            for (const auto& m : mismatches) std::cout << "  " << m << "\n";
            return kExitInvariant;
        }

        json config;
        std::string stem;
        if (convert->parsed() || tradeoff->parsed()) {
            config["command"] = "convert";
            config["protocol"] = protocol_key;
            if (tradeoff->parsed()) variant = "s4";
            if (alt_catalyst && variant == "s4") variant = "s4_alt";
            config["variant"] = variant;
            if (variant != "s1") config["k"] = k;
            stem = protocol_key + "." + variant;
        } else if (reuse->parsed()) {
            config["command"] = "reuse";
            config["protocol"] = protocol_key;
            config["rounds"] = rounds;
            stem = protocol_key + ".reuse" + std::to_string(rounds);
        } else if (channel->parsed()) {
            config["command"] = "channel";
            config["code"] = code_key;
            config["n"] = n_slots;
            stem = "channel." + code_key + ".n" + std::to_string(n_slots);
        }
        json params = json::object();
        for (const auto& [key, val] : parse_params(param_kvs)) params[key] = val;
        config["params"] = params;
        config["tol"] = tol;
        config["seed"] = seed;

        json bundle = catadist::run_cli_command(config);
        return emit_bundle(bundle, out_dir, stem);
    } catch (const catadist::CapExceededError& e) {
        std::cerr << "resource cap: " << e.what() << "\n";
        return kExitCap;
    } catch (const catadist::UnknownKeyError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const catadist::Error& e) {
        std::cerr << "invariant failure: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvariant;
    }
}
