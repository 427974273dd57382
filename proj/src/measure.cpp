#include "ergolab/measure.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ergolab/errors.hpp"

namespace ergolab {

SetIndicator SetIndicator::full_set(int n_states) {
    SetIndicator s(n_states);
    for (StateId i = 0; i < n_states; ++i) s.insert(i);
    return s;
}

bool SetIndicator::contains(StateId s) const {
    if (s < 0 || s >= n_states()) throw StructuralError("state index " + std::to_string(s) + " out of range");
    return bits_[static_cast<size_t>(s)];
}

void SetIndicator::insert(StateId s) {
    if (s < 0 || s >= n_states()) throw StructuralError("state index " + std::to_string(s) + " out of range");
    bits_[static_cast<size_t>(s)] = true;
}

int SetIndicator::count() const {
    int c = 0;
    for (bool b : bits_)
        if (b) ++c;
    return c;
}

SetIndicator SetIndicator::complement() const {
    SetIndicator out(n_states());
    for (int i = 0; i < n_states(); ++i)
        if (!bits_[static_cast<size_t>(i)]) out.insert(i);
    return out;
}

bool SetIndicator::is_subset_of(const SetIndicator& other) const {
    if (n_states() != other.n_states()) throw StructuralError("set size mismatch");
    for (int i = 0; i < n_states(); ++i)
        if (bits_[static_cast<size_t>(i)] && !other.bits_[static_cast<size_t>(i)]) return false;
    return true;
}

std::vector<StateId> SetIndicator::members() const {
    std::vector<StateId> out;
    for (int i = 0; i < n_states(); ++i)
        if (bits_[static_cast<size_t>(i)]) out.push_back(i);
    return out;
}

PointMassMeasure PointMassMeasure::from_atoms(std::vector<std::pair<StateId, double>> atoms) {
    PointMassMeasure mu;
    mu.atoms = std::move(atoms);
    double total = 0.0;
    for (const auto& [s, w] : mu.atoms) total += w;
    mu.total_mass = total;
    return mu;
}

PointMassMeasure PointMassMeasure::uniform(int n_states) {
    std::vector<std::pair<StateId, double>> atoms;
    atoms.reserve(static_cast<size_t>(n_states));
    for (StateId i = 0; i < n_states; ++i) atoms.emplace_back(i, 1.0 / n_states);
    return from_atoms(std::move(atoms));
}

PointMassMeasure PointMassMeasure::dirac(StateId x, double weight) {
    return from_atoms({{x, weight}});
}

double PointMassMeasure::weight_of(StateId s) const {
    double w = 0.0;
    for (const auto& [id, wt] : atoms)
        if (id == s) w += wt;
    return w;
}

void PointMassMeasure::validate(int n_states) const {
    std::set<StateId> seen;
    double total = 0.0;
    for (const auto& [s, w] : atoms) {
        if (s < 0 || s >= n_states) throw StructuralError("measure atom state " + std::to_string(s) + " out of range");
        if (!(w >= 0.0)) throw StructuralError("measure atom weight must be nonnegative");
        if (!seen.insert(s).second) throw StructuralError("duplicate measure atom for state " + std::to_string(s));
        total += w;
    }
    if (!std::isfinite(total)) throw StructuralError("measure total mass must be finite");
    const double scale = std::max(std::fabs(total), std::fabs(total_mass));
    if (std::fabs(total - total_mass) > 1e-12 * std::max(1.0, scale)) {
        throw StructuralError("total_mass is inconsistent with the atom weights");
    }
}

DiscreteSystem::DiscreteSystem(int n_states, std::vector<int> map_table)
    : n_states_(n_states), map_table_(std::move(map_table)) {
    if (n_states_ <= 0) throw StructuralError("n_states must be positive");
    if (static_cast<int>(map_table_.size()) != n_states_) {
        throw StructuralError("map table length must equal n_states");
    }
    for (int v : map_table_) {
        if (v < 0 || v >= n_states_) throw StructuralError("map table entry " + std::to_string(v) + " out of range");
    }
}

StateId DiscreteSystem::apply(StateId x) const {
    if (x < 0 || x >= n_states_) throw StructuralError("state index " + std::to_string(x) + " out of range");
    return map_table_[static_cast<size_t>(x)];
}

StateId DiscreteSystem::iterate(StateId x, int k) const {
    if (k < 0) throw StructuralError("iteration count must be nonnegative");
    StateId cur = x;
    for (int i = 0; i < k; ++i) cur = apply(cur);
    return cur;
}

void DiscreteSystem::add_observable(const std::string& name, std::vector<double> values) {
    if (name.empty()) throw StructuralError("observable name must be nonempty");
    if (static_cast<int>(values.size()) != n_states_) {
        throw StructuralError("observable '" + name + "' length must equal n_states");
    }
    observables_[name] = std::move(values);
}

bool DiscreteSystem::has_observable(const std::string& name) const {
    return observables_.count(name) != 0;
}

const std::vector<double>& DiscreteSystem::observable(const std::string& name) const {
    auto it = observables_.find(name);
    if (it == observables_.end()) throw StructuralError("unknown observable '" + name + "'");
    return it->second;
}

double measure_of(const PointMassMeasure& mu, const SetIndicator& s) {
    double total = 0.0;
    for (const auto& [id, w] : mu.atoms) {
        if (s.contains(id)) total += w; // contains() validates the index
    }
    return total;
}

SetIndicator preimage(const DiscreteSystem& sys, const SetIndicator& s, int i) {
    if (i < 0) throw StructuralError("preimage iterate must be nonnegative");
    if (s.n_states() != sys.n_states()) throw StructuralError("set size does not match system");
    SetIndicator cur = s;
    for (int step = 0; step < i; ++step) {
        SetIndicator next(sys.n_states());
        for (StateId x = 0; x < sys.n_states(); ++x) {
            if (cur.contains(sys.apply(x))) next.insert(x);
        }
        cur = next;
    }
    return cur;
}

OrbitDecomposition orbit_decomposition(const DiscreteSystem& sys, StateId x) {
    std::vector<int> first_visit(static_cast<size_t>(sys.n_states()), -1);
    std::vector<StateId> path;
    StateId cur = x;
    while (first_visit[static_cast<size_t>(cur)] < 0) {
        first_visit[static_cast<size_t>(cur)] = static_cast<int>(path.size());
        path.push_back(cur);
        cur = sys.apply(cur);
    }
    const int entry = first_visit[static_cast<size_t>(cur)];
    OrbitDecomposition out;
    out.preperiod.assign(path.begin(), path.begin() + entry);
    out.cycle.assign(path.begin() + entry, path.end());
    return out;
}

IterateCycle function_iterate_cycle(const DiscreteSystem& sys, int cap) {
    const int n = sys.n_states();
    std::vector<int> table(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) table[static_cast<size_t>(i)] = i; // f^0 = id
    std::map<std::vector<int>, int> seen;
    for (int i = 0; i <= cap; ++i) {
        auto [it, inserted] = seen.emplace(table, i);
        if (!inserted) {
            IterateCycle c;
            c.preperiod = it->second;
            c.period = i - it->second;
            return c;
        }
        for (int s = 0; s < n; ++s) table[static_cast<size_t>(s)] = sys.apply(table[static_cast<size_t>(s)]);
    }
    IterateCycle c;
    c.detected = false;
    c.preperiod = cap;
    c.period = 1;
    return c;
}

bool is_invariant_measure(const DiscreteSystem& sys, const PointMassMeasure& mu, double tol) {
    for (StateId s = 0; s < sys.n_states(); ++s) {
        SetIndicator single(sys.n_states());
        single.insert(s);
        const double direct = measure_of(mu, single);
        const double pulled = measure_of(mu, preimage(sys, single, 1));
        if (std::fabs(direct - pulled) > tol) return false;
    }
    return true;
}

bool is_half_invariant_measure(const DiscreteSystem& sys, const PointMassMeasure& mu, double tol) {
    for (StateId s = 0; s < sys.n_states(); ++s) {
        SetIndicator single(sys.n_states());
        single.insert(s);
        if (measure_of(mu, preimage(sys, single, 1)) > measure_of(mu, single) + tol) return false;
    }
    return true;
}

namespace {

PointMassMeasure parse_measure(const nlohmann::json& j) {
    if (!j.is_array()) throw StructuralError("measure must be an array of [state, weight] pairs");
    std::vector<std::pair<StateId, double>> atoms;
    for (const auto& entry : j) {
        if (!entry.is_array() || entry.size() != 2) {
            throw StructuralError("measure entries must be [state, weight] pairs");
        }
        atoms.emplace_back(entry[0].get<int>(), entry[1].get<double>());
    }
    return PointMassMeasure::from_atoms(std::move(atoms));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

SystemBundle load_system_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("system document is not valid JSON: ") + e.what());
    }
    if (!j.contains("n_states") || !j.contains("map")) {
        throw StructuralError("system document requires 'n_states' and 'map' fields");
    }
    const int n = j["n_states"].get<int>();
    std::vector<int> table = j["map"].get<std::vector<int>>();
    DiscreteSystem sys(n, std::move(table));
    if (j.contains("observables")) {
        for (auto it = j["observables"].begin(); it != j["observables"].end(); ++it) {
            sys.add_observable(it.key(), it.value().get<std::vector<double>>());
        }
    }
    SystemBundle out{std::move(sys), std::nullopt};
    if (j.contains("measure")) {
        PointMassMeasure mu = parse_measure(j["measure"]);
        mu.validate(n);
        out.measure = std::move(mu);
    }
    return out;
}

SystemBundle load_system_file(const std::string& path) { return load_system_json(read_file(path)); }

PointMassMeasure load_measure_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("measure document is not valid JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("measure")) return parse_measure(j["measure"]);
    return parse_measure(j);
}

PointMassMeasure load_measure_file(const std::string& path) { return load_measure_json(read_file(path)); }

} // namespace ergolab
