#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ergolab/linalg.hpp"
#include "ergolab/measure.hpp"

namespace ergolab {

/// Real sequence a_n for n >= 1 with cached evaluation, so repeated reads
/// of the same index agree exactly even for stateful generators.
class ScalarSequence {
public:
    ScalarSequence(std::function<double(int)> generator, int horizon);

    double at(int n) const; // 1-based
    int horizon() const { return horizon_; }

private:
    std::function<double(int)> generator_;
    int horizon_;
    mutable std::vector<double> cache_;
    mutable std::vector<char> have_;
};

struct FeketeOptions {
    double divergence_floor = -1e6;
    /// Exhaustive pair checking up to this horizon, sampled above it.
    int exhaustive_horizon = 64;
    int sample_pairs = 4096;
    unsigned long long seed = 42;
};

struct FeketeResult {
    double inf_over_horizon = 0.0;
    int argmin_n = 1;
    bool diverged_to_minus_inf = false;
    double floor_used = 0.0;
    /// min over n <= horizon of a_n / n; -inf when the floor was crossed.
    double estimate() const;
};

/// Fekete: for subadditive (a_n), lim a_n/n = inf a_n/n. Verifies
/// subadditivity on the horizon first (throws SubadditivityViolation with
/// the witness pair), then scans a_n/n.
FeketeResult fekete_limit(const ScalarSequence& seq, int n_max, const FeketeOptions& opts = {});

struct DerriennicResult {
    double estimate = 0.0;       // a_n/n at the horizon
    double inf_over_horizon = 0.0;
    double tail_c_over_n = 0.0;  // max of c_n/n over the tail window
};

/// Derriennic: a_{n+m} <= a_n + a_m + c_n with c_n >= 0 and c_n/n -> 0.
/// Rejects negative c, inequality violations (with witness), and c
/// sequences whose c_n/n shows no decay over the horizon.
DerriennicResult derriennic_limit(const ScalarSequence& a, const ScalarSequence& c, int n_max,
                                  const FeketeOptions& opts = {});

/// Subadditive process over a DiscreteSystem: phi_n with
/// phi_{m+n} <= phi_m + phi_n o f^m. Three kinds:
///   additive       phi_n = sum_{j<n} phi o f^j for a named observable
///   matrix_cocycle phi_n = log || A(f^{n-1}x) ... A(x) ||
///   custom         caller-supplied generator
/// An optional truncation level k turns phi_n into max(phi_n, -k n).
class SubadditiveProcess {
public:
    enum class Kind { Additive, MatrixCocycle, Custom };
    using Generator = std::function<double(const DiscreteSystem&, StateId, int)>;

    static SubadditiveProcess additive(std::string observable_name);
    static SubadditiveProcess matrix_cocycle(std::vector<Matrix> per_state, MatrixNorm norm = MatrixNorm::Spectral);
    static SubadditiveProcess custom(Generator gen, double beta_hint);

    Kind kind() const { return kind_; }
    int truncation_level() const { return truncation_; } // 0 means untruncated
    const std::string& observable_name() const { return observable_name_; }
    const std::vector<Matrix>& matrices() const { return matrices_; }
    MatrixNorm norm() const { return norm_; }

    std::optional<double> gamma() const { return gamma_; }
    void set_gamma(double g) { gamma_ = g; }

    /// phi_n(x) for n >= 1 (with the truncation floor applied, if any).
    double evaluate(const DiscreteSystem& sys, StateId x, int n) const;

    /// Exact sup over states of phi_1; the beta of the upper bound phi_1 <= beta.
    double beta(const DiscreteSystem& sys) const;

    /// Per-state table values[n-1][x] = phi_n(x) for n = 1..n_max, built
    /// incrementally (cocycle products are kept log-scaled, no overflow).
    std::vector<std::vector<double>> phi_table(const DiscreteSystem& sys, int n_max) const;

    /// Requires matrices sized to the system and square; throws otherwise.
    void validate(const DiscreteSystem& sys) const;

private:
    Kind kind_ = Kind::Additive;
    std::string observable_name_;
    std::vector<Matrix> matrices_;
    MatrixNorm norm_ = MatrixNorm::Spectral;
    Generator generator_;
    double beta_hint_ = 0.0;
    std::optional<double> gamma_;
    int truncation_ = 0;

    friend SubadditiveProcess truncate(const SubadditiveProcess& base, int k);
    double evaluate_raw(const DiscreteSystem& sys, StateId x, int n) const;
};

/// Truncation ladder step: phi_n^k = max(phi_n, -k n). Truncating an
/// already-truncated process keeps the tighter (smaller) floor level.
SubadditiveProcess truncate(const SubadditiveProcess& base, int k);

/// Audits phi_{m+n} <= phi_m + phi_n o f^m with slack tol; exhaustive for
/// m+n <= opts.exhaustive_horizon, seeded sampling above. Returns the first
/// violating witness or nullopt.
struct SubadditivityWitness {
    StateId x;
    int m;
    int n;
    double lhs;
    double rhs;
};
std::optional<SubadditivityWitness> audit_subadditivity(const SubadditiveProcess& proc, const DiscreteSystem& sys,
                                                        int horizon, double tol = 1e-9,
                                                        const FeketeOptions& opts = {});

/// Parses {"kind":...} process documents; a bare {"matrices":[...]} document
/// is read as a matrix cocycle, one row-major square matrix per state.
SubadditiveProcess load_process_json(const std::string& text);
SubadditiveProcess load_process_file(const std::string& path);

} // namespace ergolab
