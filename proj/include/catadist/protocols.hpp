#pragma once

#include <map>
#include <string>
#include <vector>

#include "catadist/catalysis.hpp"
#include "catadist/rng.hpp"

namespace catadist {

/// Maximally entangled projector state on d x d.
State max_entangled(int d);

/// f * Phi_d + (1-f) (I - Phi_d)/(d^2-1); fidelity with Phi_d equals f.
State isotropic_state(double f, int d);

/// Single-qubit T-type magic state, Bloch vector (1,1,1)/sqrt(3).
State t_state();
/// Depolarized T state (1-q)|T><T| + q I/2.
State noisy_t_state(double q);

/// Two-copy recurrence distillation (bilateral CNOT, measure the second
/// pair, keep on agreement): n=2, m=1 with measured (eps, p).
MultiShotProtocol recurrence_protocol(double f);

/// Five noisy T states, syndrome projection onto the five-qubit code,
/// decode, Clifford fix-up: n=5, m=1 with measured (eps, p).
MultiShotProtocol five_qubit_t_protocol(double depolarization);

/// Random n-to-m protocol: a Haar-random CPTP map scaled by p_scale, with
/// the first output marginal declared as the target.
MultiShotProtocol random_protocol(Rng& rng, int n, int m, int d, double p_scale);

// ---- free-set oracles ----

enum class FreeTheory { entanglement_ppt, magic_stabilizer };

struct FreeSetOracle {
    FreeTheory theory = FreeTheory::entanglement_ppt;
    double tol = 1e-9;
};

/// PPT: all partial-transpose eigenvalues >= -1e-10 (state must be
/// bipartite). Magic (1-2 qubits): membership in the stabilizer polytope
/// via LP feasibility.
bool free_membership(const FreeSetOracle& oracle, const State& s);

/// The 6 single-qubit / 60 two-qubit stabilizer pure states as projectors.
const std::vector<Mat>& stabilizer_projectors(int qubits);
/// The 24 single-qubit Clifford unitaries (canonical phases).
const std::vector<Mat>& single_qubit_cliffords();

/// Distance of s from the stabilizer polytope in the LP's L1 sense
/// (0 within tolerance iff free).
double stabilizer_polytope_residual(const State& s);

// ---- protocol registry ----

struct ProtocolEntry {
    std::string key;
    std::string description;
    std::map<std::string, double> default_params;
    MultiShotProtocol (*make)(const std::map<std::string, double>&);
    bool pure_target = false;
};

const std::vector<ProtocolEntry>& protocol_registry();
MultiShotProtocol make_protocol(const std::string& key,
                                const std::map<std::string, double>& params);
/// Default free state pi for the protocol's resource theory.
State default_free_state(const std::string& key, const std::map<std::string, double>& params);

}  // namespace catadist
