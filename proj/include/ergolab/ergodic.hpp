#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ergolab/measure.hpp"
#include "ergolab/subadditive.hpp"

namespace ergolab {

/// Per-state liminf phi_n/n. On finite systems the additive and cocycle
/// kinds admit an exact cycle formula (the liminf is a limit); custom
/// generators fall back to a labeled horizon estimate.
struct LiminfProfile {
    enum class Method { ExactCycle, HorizonEstimate };
    std::vector<double> values;
    Method method = Method::ExactCycle;
    int horizon_used = 0;

    double at(StateId x) const { return values[static_cast<size_t>(x)]; }
};

LiminfProfile liminf_profile(const DiscreteSystem& sys, const SubadditiveProcess& proc, int horizon_cap = 1 << 14,
                             double stabilize_tol = 1e-6);

/// (1/n) sum_{j<n} phi(f^j x) for a named observable.
double birkhoff_average(const DiscreteSystem& sys, const std::string& observable, StateId x, int n);

/// E_k^eps = { x : phi_j(x) <= j (phi_-(x)+eps) for some j <= k }, nested in
/// k; membership uses <= with absolute tolerance 1e-12. first_entry[x] is
/// the smallest such j (or 0 when none up to k_max).
struct EkFamily {
    double epsilon = 0.0;
    int k_max = 0;
    std::vector<SetIndicator> sets; // sets[k-1] holds E_k
    std::vector<int> first_entry;   // 0 = never entered within k_max
    std::optional<int> covering_k;

    const SetIndicator& at(int k) const { return sets[static_cast<size_t>(k - 1)]; }
};

EkFamily build_ek_family(const DiscreteSystem& sys, const SubadditiveProcess& proc, const LiminfProfile& profile,
                         double epsilon, int k_max);

enum class Verdict { Holds, Fails, Undecided };
std::string verdict_name(Verdict v);

struct ConditionAReport {
    bool holds = true;
    double worst_violation = 0.0;
    StateId worst_state = 0;
    int worst_j = 0;
};

/// Condition (a): phi_- constant along the orbit of every atom of positive
/// weight (null sets of a point mass are exactly the zero-weight states).
ConditionAReport check_condition_a(const DiscreteSystem& sys, const LiminfProfile& profile,
                                   const PointMassMeasure& mu, double tol = 1e-9);

/// One exact Cesaro limsup value: on finite systems the sequence
/// i -> mu(f^-i(M \ E_k)) is eventually periodic, so the limsup equals the
/// mean over one period past the preperiod.
struct CesaroValue {
    int k = 0;
    double limsup_value = 0.0;
    int preperiod = 0;
    int period = 1;
    bool exact = true; // false when periodicity was not detected (probe max)
};

struct ConditionBReport {
    double epsilon = 0.0;
    std::vector<CesaroValue> per_k;
    double k_limit = 0.0;
    std::optional<int> covering_k;
    Verdict verdict = Verdict::Undecided;
};

ConditionBReport check_condition_b(const DiscreteSystem& sys, const PointMassMeasure& mu, const EkFamily& family,
                                   int n_probe = 4096);

struct ConditionCWitness {
    int i = 0;
    int k = 0;
    double epsilon = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct ConditionCReport {
    bool holds = true;
    std::optional<ConditionCWitness> witness;
    int i_max_checked = 0;
};

/// Condition (c): mu(f^-i(M\E_k)) <= mu(M\E_k) for all i, k. Checked for
/// i up to the iterate-cycle bound (then the inequality repeats).
ConditionCReport check_condition_c(const DiscreteSystem& sys, const PointMassMeasure& mu, const EkFamily& family,
                                   std::optional<int> i_max = std::nullopt);

struct TheoremAOptions {
    int n_max = 1024;
    int ell_max = 3;
    int k_max = 64;
    int n_probe = 4096;
    double tol = 1e-9;
    double lim_tol = 1e-6;
};

struct TheoremAReport {
    ConditionAReport condition_a;
    std::vector<ConditionBReport> condition_b; // one per ell = 1..ell_max
    ConditionCReport condition_c;
    double beta = 0.0;
    bool hypotheses_hold = false;
    std::string failed_hypothesis; // empty when hypotheses hold

    double L = 0.0;                 // integral of phi_- d mu, exact atom sum
    std::vector<double> R;          // R[n-1] = (1/n) integral of phi_n d mu
    double min_R = 0.0;
    int argmin_n = 1;
    double gap = 0.0;               // |min_R - L|

    bool asserted = false;          // equality asserted (hypotheses held)
    Verdict verdict = Verdict::Undecided;

    std::optional<double> gamma;    // set when the lower-rate bound applies
    bool gamma_bound_ok = false;    // phi_n/n >= -gamma verified on the table
    double tail_sup_gap = 0.0;      // sup |R_n - L| over the tail window
    bool limit_holds = false;       // only meaningful when gamma is set
};

/// Checks (a), (b) (and (c) as a diagnostic), then compares
/// L = integral phi_- d mu with inf_n (1/n) integral phi_n d mu. Refuses to
/// assert the equality when a hypothesis fails; the gap is still reported.
TheoremAReport verify_theorem_a(const DiscreteSystem& sys, const PointMassMeasure& mu, const SubadditiveProcess& proc,
                                const TheoremAOptions& opts = {});

struct GoodaEpsilonEntry {
    double epsilon = 0.0;
    int k_eps = 0;
    int j_eps = 0;
    bool satisfied = false;
};

struct GoodaReport {
    bool i = false, ii = false, iii = false, iv = false;
    std::vector<GoodaEpsilonEntry> per_epsilon;
    double birkhoff_limit = 0.0; // exact cycle mean when any condition holds
    bool any_holds = false;
    // Claim 1: { j : f^j(x) not in E_k^eps } is finite; verified over one
    // preperiod + cycle window.
    bool claim1_finite = false;
    int claim1_violations_preperiod = 0;
};

GoodaReport check_gooda_conditions(const DiscreteSystem& sys, const std::string& observable, StateId x,
                                   const std::vector<double>& epsilons = {1.0, 0.5, 0.25}, int k_max = 64);

struct Lemma1Result {
    bool holds = false;
    double slack = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
};

/// Lemma: phi_n(x) <= sum_{i<n-k} psi_k(f^i x) + sum_{i=n-k}^{n-1}
/// max(psi_k, phi_1)(f^i x), where psi_k = phi_- + eps on E_k^eps and phi_1
/// off it. Requires n > k >= 1.
Lemma1Result check_lemma1_inequality(const DiscreteSystem& sys, const SubadditiveProcess& proc, double epsilon, int k,
                                     int n, StateId x, double tol = 1e-9);

/// Random search for finite systems + non-invariant measures where
/// condition (b) fails alongside a Theorem A gap; also records systems
/// where the hypotheses hold but the inf-form equality still has a gap.
struct CounterexampleFinding {
    std::vector<int> map_table;
    std::vector<double> phi;
    std::vector<double> weights;
    double L = 0.0;
    double min_R = 0.0;
    double gap = 0.0;
    bool condition_b_failed = false;
};

struct CounterexampleSearch {
    int systems_tried = 0;
    int max_states = 0;
    std::optional<CounterexampleFinding> b_failure_with_gap;
    std::vector<CounterexampleFinding> gap_with_hypotheses_holding;
};

CounterexampleSearch search_condition_b_counterexamples(unsigned long long seed, int n_trials, int max_states,
                                                        int n_max = 256);

} // namespace ergolab
