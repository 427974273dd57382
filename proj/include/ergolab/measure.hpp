#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ergolab {

using StateId = int;

/// Subset of a finite state space {0,...,n-1}.
class SetIndicator {
public:
    explicit SetIndicator(int n_states) : bits_(static_cast<size_t>(n_states), false) {}

    static SetIndicator empty_set(int n_states) { return SetIndicator(n_states); }
    static SetIndicator full_set(int n_states);

    int n_states() const { return static_cast<int>(bits_.size()); }
    bool contains(StateId s) const;
    void insert(StateId s);
    int count() const;
    bool is_empty() const { return count() == 0; }
    bool is_full() const { return count() == n_states(); }

    SetIndicator complement() const;
    bool is_subset_of(const SetIndicator& other) const;
    std::vector<StateId> members() const;

    bool operator==(const SetIndicator& other) const { return bits_ == other.bits_; }

private:
    std::vector<bool> bits_;
};

/// Finite measure as weighted atoms over state indices. Weights need not
/// sum to 1; normalization is the caller's choice.
struct PointMassMeasure {
    std::vector<std::pair<StateId, double>> atoms;
    double total_mass = 0.0;

    static PointMassMeasure from_atoms(std::vector<std::pair<StateId, double>> atoms);
    static PointMassMeasure uniform(int n_states);
    static PointMassMeasure dirac(StateId x, double weight = 1.0);

    double weight_of(StateId s) const;
    /// Checks the type invariants against a state count. Throws StructuralError.
    void validate(int n_states) const;
};

/// Finite state set with a total self-map and named real observables.
class DiscreteSystem {
public:
    DiscreteSystem(int n_states, std::vector<int> map_table);

    int n_states() const { return n_states_; }
    StateId apply(StateId x) const;
    StateId iterate(StateId x, int k) const;
    const std::vector<int>& map_table() const { return map_table_; }

    void add_observable(const std::string& name, std::vector<double> values);
    bool has_observable(const std::string& name) const;
    const std::vector<double>& observable(const std::string& name) const;
    const std::map<std::string, std::vector<double>>& observables() const { return observables_; }

private:
    int n_states_;
    std::vector<int> map_table_;
    std::map<std::string, std::vector<double>> observables_;
};

/// Sum of atom weights inside s. Additive over disjoint sets.
double measure_of(const PointMassMeasure& mu, const SetIndicator& s);

/// { x : f^i(x) in s }. preimage(s, 0) == s.
SetIndicator preimage(const DiscreteSystem& sys, const SetIndicator& s, int i);

struct OrbitDecomposition {
    std::vector<StateId> preperiod;
    std::vector<StateId> cycle;
    int preperiod_length() const { return static_cast<int>(preperiod.size()); }
    int period() const { return static_cast<int>(cycle.size()); }
};

/// Walks the forward orbit of x until it repeats. preperiod + cycle is
/// exactly the forward orbit; the cycle is never empty.
OrbitDecomposition orbit_decomposition(const DiscreteSystem& sys, StateId x);

/// Eventual periodicity of the iterate sequence i -> f^i (as a function
/// table): f^(i+period) == f^i for all i >= preperiod. Exact on finite
/// systems; detection walks the iterate tables until one repeats.
struct IterateCycle {
    int preperiod = 0;
    int period = 1;
    bool detected = true;
};
IterateCycle function_iterate_cycle(const DiscreteSystem& sys, int cap = 1 << 20);

/// True when measure_of(preimage(s,1)) == measure_of(s) for every singleton,
/// within tol. For point masses this characterizes invariance of mu under f.
bool is_invariant_measure(const DiscreteSystem& sys, const PointMassMeasure& mu, double tol = 1e-12);

/// Half-invariance diagnostic: mu(f^-1(B)) <= mu(B) for every B. Both
/// sides are additive over singletons, so the singleton check decides it.
bool is_half_invariant_measure(const DiscreteSystem& sys, const PointMassMeasure& mu, double tol = 1e-12);

/// Loads {"n_states":..,"map":[..],"observables":{..},"measure":[[s,w],..]}.
/// The measure entry is optional in a system document.
struct SystemBundle {
    DiscreteSystem system;
    std::optional<PointMassMeasure> measure;
};
SystemBundle load_system_json(const std::string& text);
SystemBundle load_system_file(const std::string& path);
PointMassMeasure load_measure_json(const std::string& text);
PointMassMeasure load_measure_file(const std::string& path);

} // namespace ergolab
