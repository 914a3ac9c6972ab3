#pragma once

#include <optional>
#include <string>
#include <vector>

#include "catadist/channel.hpp"
#include "catadist/ensemble.hpp"

namespace catadist {

/// One tensor factor of a multi-shot map, acting on n_in consecutive source
/// slots and producing m_out target slots.
struct ProtocolFactor {
    QuantumOp op;
    int n_in = 0;
    int m_out = 0;
};

/// A concrete n-to-m distillation protocol with measured performance.
struct MultiShotProtocol {
    std::string name;
    int n = 0, m = 0;
    State source;  // single copy
    State target;  // single copy
    std::vector<ProtocolFactor> factors;
    /// CP failure map of a single-factor protocol, when known.
    std::optional<std::vector<ProtocolFactor>> complement;
    /// Post-failure junk on the (flattened) m-copy output space.
    State failure_state;
    double declared_eps = 0.0;
    double declared_p = 1.0;
    bool in_working_regime = true;

    int d() const { return source.total_dim(); }
    void validate(double tol = 1e-9) const;
};

/// Applies the protocol's factors to a state whose first n subsystems (each
/// of dimension d) hold the source copies; returns the subnormalized output.
State apply_multishot(const MultiShotProtocol& p, const State& in, int first_slot = 0);

/// Measures (eps, p) of the map on source^{ox n} and fills the declared
/// fields; eps is the worst marginal trace distance to the target.
MultiShotProtocol measure_protocol(std::string name, int n, int m, State source, State target,
                                   std::vector<ProtocolFactor> factors,
                                   std::optional<std::vector<ProtocolFactor>> complement = {},
                                   std::optional<State> failure_state = {});

/// CPTP version: routes the failure weight of every factor into `junk`
/// (a state on that factor's output space) and re-measures.
MultiShotProtocol make_deterministic(const MultiShotProtocol& p, const State& junk_per_factor);

/// n copies of p run independently side by side.
MultiShotProtocol product_protocol(const MultiShotProtocol& p, int copies);

struct CatalystShape {
    int k = 0;
    int branches = 0;
    long long branch_body_dim = 0;
};
/// Structural data of the block catalyst without building any state.
CatalystShape block_catalyst_shape(int n, int m, int d);

enum class ProtocolVariant { theorem_s1, theorem_s4, s4_alternative_catalyst };
std::string variant_name(ProtocolVariant v);

struct StepDesc {
    std::string kind;    // controlled-op | classical-shift | quantum-shift |
                         // reverse-embed | project
    std::string detail;
};

/// The compiled one-shot catalytic protocol.
struct CatalyticProtocol {
    MultiShotProtocol base;
    State free_pi;  // free state on the (flattened) single-copy space
    ProtocolVariant variant = ProtocolVariant::theorem_s1;
    int k = 0;          // block size (copies consumed per run)
    int g = 0;          // number of slot groups (S1: m)
    int extra_dim = 0;  // dimension of the orthogonal subspace W (S4 only)
    FlaggedEnsemble catalyst;
    std::vector<StepDesc> steps;
    double expected_eps = 0.0;
    double expected_p = 0.0;
};

struct VerificationReport {
    double catalyst_restoration_error = 0.0;
    double output_error = 0.0;
    double multi_shot_marginal_error = 0.0;
    double output_vs_mixture = 0.0;
    double success_weight = 0.0;
    double expected_success_weight = 0.0;
    double controlled_weight_sum = 0.0;
    double accept_weight = 0.0;          // S4 measurement branch
    double expected_accept_weight = 0.0;
    double leak_weight = 0.0;            // tr(P_W nu'') after projection
    bool correlation_checked = false;
    double correlation_lhs = 0.0;
    double correlation_rhs = 0.0;
    bool correlation_pass = true;
    double catalyst_loss_probability = 0.0;
    double post_failure_catalyst_distance = 0.0;
    long long catalyst_quantum_dim = 0;
    int catalyst_classical_dim = 0;
    std::vector<double> per_round_output_errors;   // reuse only
    std::vector<double> per_round_restoration;     // reuse only
    double output_marginal_max_pairwise = 0.0;     // reuse only
    bool pass = true;
    std::vector<std::string> failures;
};

/// The catalyst of the block construction:
/// omega = (1/m) sum_i zeta^{ox i-1} ox eta_hat_{1:m-i} ox |i><i|.
FlaggedEnsemble build_block_catalyst(const MultiShotProtocol& p, const State& free_pi);

/// Theorem-level conversion: multi-shot (n, m) -> one-shot catalytic with
/// block size k = ceil(n/m) and identical (eps, p).
CatalyticProtocol convert_to_catalytic(const MultiShotProtocol& p, const State& free_pi);

/// Probability-for-overhead trade-off: block size k with 1 <= k <= n/m and
/// success weight p * m / ceil(n/k); alt_catalyst selects the target-
/// independent catalyst variant.
CatalyticProtocol tradeoff_convert(const MultiShotProtocol& p, int k, bool alt_catalyst,
                                   const State& free_pi, int extra_dim = 1);

/// Runs the steps on zeta ox omega and certifies every claim.
VerificationReport verify_catalytic(const CatalyticProtocol& cp);

/// Theorem-S2 reuse: l rounds with fresh sources, one joint state.
VerificationReport simulate_reuse(const CatalyticProtocol& cp, int rounds);

struct CorrelationBound {
    double lhs = 0.0;
    double rhs = 0.0;
    double eps = 0.0;
    bool pass = true;
};
/// lhs = Delta(nu_SA, phi ox nu_A), rhs = eps + 3 sqrt(eps) with
/// eps = Delta(nu_S, phi); phi must be pure on the leading s_count
/// subsystems of nu_sa.
CorrelationBound correlation_check(const State& nu_sa, const State& phi, int s_count);

}  // namespace catadist
