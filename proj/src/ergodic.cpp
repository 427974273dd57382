#include "ergolab/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ergolab/errors.hpp"

namespace ergolab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMembershipTol = 1e-12;
} // namespace

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Holds: return "holds";
        case Verdict::Fails: return "fails";
        case Verdict::Undecided: return "undecided";
    }
    return "undecided";
}

LiminfProfile liminf_profile(const DiscreteSystem& sys, const SubadditiveProcess& proc, int horizon_cap,
                             double stabilize_tol) {
    const int ns = sys.n_states();
    LiminfProfile out;
    out.values.assign(static_cast<size_t>(ns), 0.0);

    if (proc.kind() != SubadditiveProcess::Kind::Custom) {
        out.method = LiminfProfile::Method::ExactCycle;
        // Cycle values are shared by every state entering the same cycle;
        // compute once per cycle entry point.
        std::vector<char> done(static_cast<size_t>(ns), 0);
        for (StateId x = 0; x < ns; ++x) {
            if (done[static_cast<size_t>(x)]) continue;
            const OrbitDecomposition orb = orbit_decomposition(sys, x);
            double cycle_value = 0.0;
            if (proc.kind() == SubadditiveProcess::Kind::Additive) {
                const std::vector<double>& phi = sys.observable(proc.observable_name());
                double s = 0.0;
                for (StateId c : orb.cycle) s += phi[static_cast<size_t>(c)];
                cycle_value = s / orb.period();
            } else {
                proc.validate(sys);
                Matrix prod = proc.matrices()[static_cast<size_t>(orb.cycle.front())];
                double logscale = 0.0;
                for (size_t i = 1; i < orb.cycle.size(); ++i) {
                    prod = proc.matrices()[static_cast<size_t>(orb.cycle[i])] * prod;
                    const double f = frobenius_norm(prod);
                    if (f == 0.0) {
                        logscale = -kInf;
                        break;
                    }
                    logscale += std::log(f);
                    prod = prod.scaled(1.0 / f);
                }
                cycle_value = (logscale == -kInf) ? -kInf : (logscale + log_spectral_radius(prod)) / orb.period();
            }
            if (proc.truncation_level() > 0) {
                cycle_value = std::max(cycle_value, -static_cast<double>(proc.truncation_level()));
            }
            for (StateId s : orb.preperiod) {
                out.values[static_cast<size_t>(s)] = cycle_value;
                done[static_cast<size_t>(s)] = 1;
            }
            for (StateId s : orb.cycle) {
                out.values[static_cast<size_t>(s)] = cycle_value;
                done[static_cast<size_t>(s)] = 1;
            }
        }
        return out;
    }

    // Custom generators: dyadic horizon estimation, declared stable when
    // three successive tail-window minima agree within stabilize_tol.
    out.method = LiminfProfile::Method::HorizonEstimate;
    for (StateId x = 0; x < ns; ++x) {
        double prev2 = kInf, prev1 = kInf, cur = kInf;
        int h = 64;
        while (true) {
            double tail_min = kInf;
            for (int n = h / 2 + 1; n <= h; ++n) tail_min = std::min(tail_min, proc.evaluate(sys, x, n) / n);
            prev2 = prev1;
            prev1 = cur;
            cur = tail_min;
            out.horizon_used = h;
            if (std::isfinite(prev2) && std::fabs(cur - prev1) <= stabilize_tol &&
                std::fabs(prev1 - prev2) <= stabilize_tol) {
                break;
            }
            if (h >= horizon_cap) break;
            h *= 2;
        }
        out.values[static_cast<size_t>(x)] = cur;
    }
    return out;
}

double birkhoff_average(const DiscreteSystem& sys, const std::string& observable, StateId x, int n) {
    if (n < 1) throw StructuralError("birkhoff average requires n >= 1");
    const std::vector<double>& phi = sys.observable(observable);
    double sum = 0.0;
    StateId cur = x;
    for (int j = 0; j < n; ++j) {
        sum += phi[static_cast<size_t>(cur)];
        cur = sys.apply(cur);
    }
    return sum / n;
}

EkFamily build_ek_family(const DiscreteSystem& sys, const SubadditiveProcess& proc, const LiminfProfile& profile,
                         double epsilon, int k_max) {
    if (epsilon <= 0.0) throw StructuralError("epsilon must be positive");
    if (k_max < 1) throw StructuralError("k_max must be >= 1");
    const int ns = sys.n_states();
    const auto table = proc.phi_table(sys, k_max);

    EkFamily fam;
    fam.epsilon = epsilon;
    fam.k_max = k_max;
    fam.first_entry.assign(static_cast<size_t>(ns), 0);
    for (StateId x = 0; x < ns; ++x) {
        const double target_rate = profile.at(x) + epsilon;
        for (int j = 1; j <= k_max; ++j) {
            const double lhs = table[static_cast<size_t>(j - 1)][static_cast<size_t>(x)];
            const double rhs = j * target_rate;
            const bool member = (lhs <= rhs + kMembershipTol) || (lhs == -kInf && rhs == -kInf);
            if (member) {
                fam.first_entry[static_cast<size_t>(x)] = j;
                break;
            }
        }
    }
    fam.sets.reserve(static_cast<size_t>(k_max));
    for (int k = 1; k <= k_max; ++k) {
        SetIndicator s(ns);
        for (StateId x = 0; x < ns; ++x) {
            const int fe = fam.first_entry[static_cast<size_t>(x)];
            if (fe >= 1 && fe <= k) s.insert(x);
        }
        if (!fam.covering_k && s.is_full()) fam.covering_k = k;
        fam.sets.push_back(std::move(s));
    }
    return fam;
}

ConditionAReport check_condition_a(const DiscreteSystem& sys, const LiminfProfile& profile,
                                   const PointMassMeasure& mu, double tol) {
    ConditionAReport rep;
    for (const auto& [x, w] : mu.atoms) {
        if (w <= 0.0) continue; // zero-weight states are the null sets here
        const OrbitDecomposition orb = orbit_decomposition(sys, x);
        const double base = profile.at(x);
        const int span = orb.preperiod_length() + orb.period();
        StateId cur = x;
        for (int j = 0; j < span; ++j) {
            const double v = profile.at(cur);
            double viol;
            if (base == v) viol = 0.0; // covers the matched -inf case
            else if (!std::isfinite(base) || !std::isfinite(v)) viol = kInf;
            else viol = std::fabs(v - base);
            if (viol > rep.worst_violation) {
                rep.worst_violation = viol;
                rep.worst_state = x;
                rep.worst_j = j;
            }
            cur = sys.apply(cur);
        }
    }
    rep.holds = rep.worst_violation <= tol;
    return rep;
}

namespace {

// Exact Cesaro limsup of i -> mu(f^-i(target)): mean over one period of
// the (eventually periodic) preimage-measure sequence.
CesaroValue cesaro_preimage_limsup(const DiscreteSystem& sys, const PointMassMeasure& mu, const SetIndicator& target,
                                   int k, int n_probe) {
    CesaroValue val;
    val.k = k;
    if (target.is_empty()) {
        val.limsup_value = 0.0;
        return val;
    }
    const IterateCycle ic = function_iterate_cycle(sys, std::max(n_probe, 1 << 16));
    if (ic.detected) {
        val.preperiod = ic.preperiod;
        val.period = ic.period;
        SetIndicator cur = target;
        for (int i = 0; i < ic.preperiod; ++i) cur = preimage(sys, cur, 1);
        double sum = 0.0;
        for (int i = 0; i < ic.period; ++i) {
            sum += measure_of(mu, cur);
            cur = preimage(sys, cur, 1);
        }
        val.limsup_value = sum / ic.period;
        val.exact = true;
        return val;
    }
    // Fallback probe window: max of the partial Cesaro sums near the end.
    val.exact = false;
    SetIndicator cur = target;
    double partial = 0.0;
    double best = 0.0;
    for (int i = 0; i < n_probe; ++i) {
        partial += measure_of(mu, cur);
        cur = preimage(sys, cur, 1);
        const int n = i + 1 + k + 1; // n - k - 1 = i + 1 terms summed
        if (i > n_probe / 2) best = std::max(best, partial / n);
    }
    val.limsup_value = best;
    val.preperiod = 0;
    val.period = n_probe;
    return val;
}

} // namespace

ConditionBReport check_condition_b(const DiscreteSystem& sys, const PointMassMeasure& mu, const EkFamily& family,
                                   int n_probe) {
    ConditionBReport rep;
    rep.epsilon = family.epsilon;
    rep.covering_k = family.covering_k;
    const int k_top = family.covering_k.value_or(family.k_max);
    for (int k = 1; k <= k_top; ++k) {
        rep.per_k.push_back(cesaro_preimage_limsup(sys, mu, family.at(k).complement(), k, n_probe));
    }
    rep.k_limit = rep.per_k.empty() ? 0.0 : rep.per_k.back().limsup_value;
    if (family.covering_k) {
        rep.verdict = rep.k_limit <= kMembershipTol ? Verdict::Holds : Verdict::Fails;
    } else {
        // E_k never covered within k_max, so the k -> infinity limit is
        // not pinned down; report the best bound seen.
        rep.verdict = rep.k_limit <= kMembershipTol ? Verdict::Holds : Verdict::Undecided;
    }
    return rep;
}

ConditionCReport check_condition_c(const DiscreteSystem& sys, const PointMassMeasure& mu, const EkFamily& family,
                                   std::optional<int> i_max) {
    ConditionCReport rep;
    int bound = 0;
    if (i_max) {
        bound = *i_max;
    } else {
        const IterateCycle ic = function_iterate_cycle(sys);
        bound = ic.preperiod + ic.period;
    }
    rep.i_max_checked = bound;
    const int k_top = family.covering_k.value_or(family.k_max);
    for (int k = 1; k <= k_top; ++k) {
        const SetIndicator target = family.at(k).complement();
        const double rhs = measure_of(mu, target);
        SetIndicator cur = target;
        for (int i = 1; i <= bound; ++i) {
            cur = preimage(sys, cur, 1);
            const double lhs = measure_of(mu, cur);
            if (lhs > rhs + kMembershipTol) {
                rep.holds = false;
                rep.witness = ConditionCWitness{i, k, family.epsilon, lhs, rhs};
                return rep;
            }
        }
    }
    return rep;
}

TheoremAReport verify_theorem_a(const DiscreteSystem& sys, const PointMassMeasure& mu, const SubadditiveProcess& proc,
                                const TheoremAOptions& opts) {
    mu.validate(sys.n_states());
    proc.validate(sys);
    TheoremAReport rep;

    const LiminfProfile profile = liminf_profile(sys, proc);
    rep.beta = proc.beta(sys);
    rep.condition_a = check_condition_a(sys, profile, mu);

    std::vector<EkFamily> families;
    families.reserve(static_cast<size_t>(opts.ell_max));
    for (int ell = 1; ell <= opts.ell_max; ++ell) {
        families.push_back(build_ek_family(sys, proc, profile, 1.0 / ell, opts.k_max));
    }
    bool b_holds = true;
    for (const EkFamily& fam : families) {
        rep.condition_b.push_back(check_condition_b(sys, mu, fam, opts.n_probe));
        if (rep.condition_b.back().verdict != Verdict::Holds) b_holds = false;
    }
    rep.condition_c = check_condition_c(sys, mu, families.front());

    rep.hypotheses_hold = rep.condition_a.holds && b_holds && std::isfinite(rep.beta);
    if (!rep.condition_a.holds) rep.failed_hypothesis = "condition_a";
    else if (!b_holds) rep.failed_hypothesis = "condition_b";
    else if (!std::isfinite(rep.beta)) rep.failed_hypothesis = "beta_bound";

    // Both sides of the equality, exact atom sums over the phi table.
    double L = 0.0;
    bool L_minus_inf = false;
    for (const auto& [x, w] : mu.atoms) {
        if (w <= 0.0) continue;
        const double v = profile.at(x);
        if (v == -kInf) L_minus_inf = true;
        else L += w * v;
    }
    rep.L = L_minus_inf ? -kInf : L;

    const auto table = proc.phi_table(sys, opts.n_max);
    rep.R.resize(static_cast<size_t>(opts.n_max));
    rep.min_R = kInf;
    for (int n = 1; n <= opts.n_max; ++n) {
        double s = 0.0;
        bool minus_inf = false;
        for (const auto& [x, w] : mu.atoms) {
            if (w <= 0.0) continue;
            const double v = table[static_cast<size_t>(n - 1)][static_cast<size_t>(x)];
            if (v == -kInf) minus_inf = true;
            else s += w * v;
        }
        const double rn = minus_inf ? -kInf : s / n;
        rep.R[static_cast<size_t>(n - 1)] = rn;
        if (rn < rep.min_R) {
            rep.min_R = rn;
            rep.argmin_n = n;
        }
    }
    if (rep.min_R == -kInf && rep.L == -kInf) rep.gap = 0.0;
    else rep.gap = std::fabs(rep.min_R - rep.L);

    rep.asserted = rep.hypotheses_hold;
    if (!rep.asserted) {
        rep.verdict = Verdict::Undecided;
    } else {
        rep.verdict = rep.gap <= opts.tol ? Verdict::Holds : Verdict::Fails;
    }

    // Lower-rate bound gamma: configured explicitly or implied by truncation.
    std::optional<double> gamma = proc.gamma();
    if (!gamma && proc.truncation_level() > 0) gamma = static_cast<double>(proc.truncation_level());
    if (gamma) {
        rep.gamma = gamma;
        rep.gamma_bound_ok = true;
        for (int n = 1; n <= opts.n_max && rep.gamma_bound_ok; ++n) {
            for (StateId x = 0; x < sys.n_states(); ++x) {
                if (table[static_cast<size_t>(n - 1)][static_cast<size_t>(x)] / n < -*gamma - kMembershipTol) {
                    rep.gamma_bound_ok = false;
                    break;
                }
            }
        }
        double tail_sup = 0.0;
        for (int n = opts.n_max / 2; n <= opts.n_max; ++n) {
            tail_sup = std::max(tail_sup, std::fabs(rep.R[static_cast<size_t>(n - 1)] - rep.L));
        }
        rep.tail_sup_gap = tail_sup;
        rep.limit_holds = rep.asserted && rep.gamma_bound_ok && tail_sup <= opts.lim_tol;
    }
    return rep;
}

GoodaReport check_gooda_conditions(const DiscreteSystem& sys, const std::string& observable, StateId x,
                                   const std::vector<double>& epsilons, int k_max) {
    GoodaReport rep;
    const SubadditiveProcess proc = SubadditiveProcess::additive(observable);
    const LiminfProfile profile = liminf_profile(sys, proc);
    const OrbitDecomposition orb = orbit_decomposition(sys, x);

    // Exact Birkhoff limit for an eventually periodic orbit: the cycle mean.
    const std::vector<double>& phi = sys.observable(observable);
    double cyc = 0.0;
    for (StateId c : orb.cycle) cyc += phi[static_cast<size_t>(c)];
    rep.birkhoff_limit = cyc / orb.period();

    bool all_eps_ok = true;
    const PointMassMeasure dirac = PointMassMeasure::dirac(x);
    bool dirac_b_ok = true;
    std::optional<EkFamily> smallest_eps_family;
    size_t smallest_eps_index = 0;
    for (double eps : epsilons) {
        const EkFamily fam = build_ek_family(sys, proc, profile, eps, k_max);
        GoodaEpsilonEntry entry;
        entry.epsilon = eps;
        // (ii): k_eps covering every orbit state makes f^j(x) a member for
        // all j >= 0, so j_eps = 0 certifies the condition.
        int k_eps = 0;
        bool ok = true;
        auto consider = [&](StateId s) {
            const int fe = fam.first_entry[static_cast<size_t>(s)];
            if (fe == 0) ok = false;
            else k_eps = std::max(k_eps, fe);
        };
        for (StateId s : orb.preperiod) consider(s);
        for (StateId s : orb.cycle) consider(s);
        entry.k_eps = k_eps;
        entry.j_eps = 0;
        entry.satisfied = ok;
        all_eps_ok = all_eps_ok && ok;
        rep.per_epsilon.push_back(entry);

        const ConditionBReport b = check_condition_b(sys, dirac, fam);
        if (b.verdict != Verdict::Holds) dirac_b_ok = false;
        if (!smallest_eps_family || eps < smallest_eps_family->epsilon) {
            smallest_eps_family = fam;
            smallest_eps_index = rep.per_epsilon.size() - 1;
        }
    }

    rep.ii = all_eps_ok;
    rep.i = dirac_b_ok;
    rep.iii = rep.ii; // interior = set itself in the discrete topology
    rep.iv = true;    // omega-limit of a finite orbit is its (finite) cycle
    rep.any_holds = rep.i || rep.ii || rep.iii || rep.iv;

    // Claim 1 audit on the smallest epsilon at k = k_eps: violations may
    // only live in the preperiod; one full cycle must be violation-free.
    if (smallest_eps_family) {
        const GoodaEpsilonEntry& entry = rep.per_epsilon[smallest_eps_index];
        const int k = std::max(1, entry.k_eps);
        const SetIndicator& ek = smallest_eps_family->at(std::min(k, smallest_eps_family->k_max));
        bool cycle_clean = true;
        StateId cur = x;
        for (int j = 0; j < orb.preperiod_length(); ++j) {
            if (!ek.contains(cur)) ++rep.claim1_violations_preperiod;
            cur = sys.apply(cur);
        }
        for (int j = 0; j < orb.period(); ++j) {
            if (!ek.contains(cur)) cycle_clean = false;
            cur = sys.apply(cur);
        }
        rep.claim1_finite = cycle_clean;
    }
    return rep;
}

Lemma1Result check_lemma1_inequality(const DiscreteSystem& sys, const SubadditiveProcess& proc, double epsilon, int k,
                                     int n, StateId x, double tol) {
    if (k < 1) throw StructuralError("lemma inequality requires k >= 1");
    if (n <= k) throw StructuralError("lemma inequality requires n > k");
    const LiminfProfile profile = liminf_profile(sys, proc);
    const EkFamily fam = build_ek_family(sys, proc, profile, epsilon, k);
    const SetIndicator& ek = fam.at(k);

    auto psi_k = [&](StateId s) {
        return ek.contains(s) ? profile.at(s) + epsilon : proc.evaluate(sys, s, 1);
    };

    Lemma1Result res;
    res.lhs = proc.evaluate(sys, x, n);
    double rhs = 0.0;
    StateId cur = x;
    for (int i = 0; i < n; ++i) {
        if (i <= n - k - 1) {
            rhs += psi_k(cur);
        } else {
            rhs += std::max(psi_k(cur), proc.evaluate(sys, cur, 1));
        }
        cur = sys.apply(cur);
    }
    res.rhs = rhs;
    res.slack = rhs - res.lhs;
    res.holds = res.slack >= -tol;
    return res;
}

CounterexampleSearch search_condition_b_counterexamples(unsigned long long seed, int n_trials, int max_states,
                                                        int n_max) {
    CounterexampleSearch out;
    out.max_states = max_states;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uphi(-1.0, 1.0);
    std::uniform_real_distribution<double> uw(0.0, 1.0);

    TheoremAOptions opts;
    opts.n_max = n_max;
    opts.ell_max = 2;
    opts.k_max = 32;

    for (int trial = 0; trial < n_trials; ++trial) {
        std::uniform_int_distribution<int> usize(2, max_states);
        const int ns = usize(rng);
        std::uniform_int_distribution<int> ustate(0, ns - 1);
        std::vector<int> table(static_cast<size_t>(ns));
        for (int& t : table) t = ustate(rng);
        DiscreteSystem sys(ns, table);
        std::vector<double> phi(static_cast<size_t>(ns));
        for (double& v : phi) v = uphi(rng);
        sys.add_observable("phi", phi);

        std::vector<std::pair<StateId, double>> atoms;
        for (StateId s = 0; s < ns; ++s) {
            const double w = uw(rng);
            if (w > 0.2) atoms.emplace_back(s, w);
        }
        if (atoms.empty()) atoms.emplace_back(0, 1.0);
        const PointMassMeasure mu = PointMassMeasure::from_atoms(atoms);
        if (is_invariant_measure(sys, mu)) continue;

        ++out.systems_tried;
        const TheoremAReport rep =
            verify_theorem_a(sys, mu, SubadditiveProcess::additive("phi"), opts);

        CounterexampleFinding f;
        f.map_table = table;
        f.phi = phi;
        f.weights.assign(static_cast<size_t>(ns), 0.0);
        for (const auto& [s, w] : atoms) f.weights[static_cast<size_t>(s)] = w;
        f.L = rep.L;
        f.min_R = rep.min_R;
        f.gap = rep.gap;
        f.condition_b_failed = rep.failed_hypothesis == "condition_b";

        if (f.condition_b_failed && f.gap > 1e-6 && !out.b_failure_with_gap) {
            out.b_failure_with_gap = f;
        } else if (rep.hypotheses_hold && rep.verdict == Verdict::Fails &&
                   out.gap_with_hypotheses_holding.size() < 8) {
            out.gap_with_hypotheses_holding.push_back(f);
        }
    }
    return out;
}

} // namespace ergolab
