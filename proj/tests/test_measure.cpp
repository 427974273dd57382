#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "ergolab/errors.hpp"
#include "ergolab/measure.hpp"
#include "oracles.hpp"

using namespace ergolab;

namespace {

DiscreteSystem three_cycle() { return DiscreteSystem(3, {1, 2, 0}); }

SetIndicator singleton(int n, StateId s) {
    SetIndicator set(n);
    set.insert(s);
    return set;
}

} // namespace

TEST_CASE("measure_of on point masses") {
    const PointMassMeasure uni = PointMassMeasure::uniform(3);
    CHECK(measure_of(uni, singleton(3, 0)) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(measure_of(uni, SetIndicator::full_set(3)) == doctest::Approx(uni.total_mass).epsilon(1e-15));

    const PointMassMeasure mu = PointMassMeasure::from_atoms({{0, 0.2}, {1, 0.5}, {2, 0.3}});
    SetIndicator s(3);
    s.insert(1);
    s.insert(2);
    CHECK(measure_of(mu, s) == doctest::Approx(0.8).epsilon(1e-15));

    // Additivity over disjoint sets.
    CHECK(measure_of(mu, singleton(3, 1)) + measure_of(mu, singleton(3, 2)) ==
          doctest::Approx(measure_of(mu, s)).epsilon(1e-15));

    // Out-of-range atom is a structural error.
    const PointMassMeasure bad = PointMassMeasure::from_atoms({{5, 1.0}});
    CHECK_THROWS_AS(measure_of(bad, singleton(3, 0)), StructuralError);
}

TEST_CASE("measure invariants validate") {
    PointMassMeasure mu = PointMassMeasure::from_atoms({{0, 0.5}, {1, 0.5}});
    CHECK_NOTHROW(mu.validate(2));
    mu.total_mass = 2.0;
    CHECK_THROWS_AS(mu.validate(2), StructuralError);
    CHECK_THROWS_AS(PointMassMeasure::from_atoms({{0, -1.0}}).validate(2), StructuralError);
    CHECK_THROWS_AS(PointMassMeasure::from_atoms({{0, 0.5}, {0, 0.5}}).validate(2), StructuralError);
}

TEST_CASE("preimage basics") {
    const DiscreteSystem id(4, {0, 1, 2, 3});
    SetIndicator s(4);
    s.insert(1);
    s.insert(3);
    for (int i : {0, 1, 5}) CHECK(preimage(id, s, i) == s);

    const DiscreteSystem cyc = three_cycle();
    CHECK(preimage(cyc, singleton(3, 0), 1) == singleton(3, 2));

    const DiscreteSystem constant(3, {0, 0, 0});
    CHECK(preimage(constant, singleton(3, 1), 1).is_empty());

    // Composition law on a scrambled map.
    const DiscreteSystem sys(5, {3, 0, 4, 2, 1});
    SetIndicator t(5);
    t.insert(2);
    t.insert(4);
    for (int a = 0; a <= 3; ++a) {
        for (int b = 0; b <= 3; ++b) {
            CHECK(preimage(sys, preimage(sys, t, a), b) == preimage(sys, t, a + b));
        }
    }
}

TEST_CASE("orbit decomposition") {
    const DiscreteSystem fix(2, {0, 0});
    const auto o1 = orbit_decomposition(fix, 0);
    CHECK(o1.preperiod.empty());
    const std::vector<StateId> just_zero = {0};
    CHECK(o1.cycle == just_zero);

    const DiscreteSystem tail(3, {1, 2, 1});
    const auto o2 = orbit_decomposition(tail, 0);
    const std::vector<StateId> expect_pre = {0};
    const std::vector<StateId> expect_cycle = {1, 2};
    CHECK(o2.preperiod == expect_pre);
    CHECK(o2.cycle == expect_cycle);

    const DiscreteSystem four(4, {1, 2, 3, 0});
    const auto o3 = orbit_decomposition(four, 2);
    CHECK(o3.preperiod.empty());
    CHECK(o3.cycle.size() == 4);

    // f^{j+p}(x) = f^j(x) for all j >= preperiod, checked directly.
    const DiscreteSystem sys(6, {2, 0, 4, 2, 5, 2});
    for (StateId x = 0; x < 6; ++x) {
        const auto orb = orbit_decomposition(sys, x);
        for (int j = orb.preperiod_length(); j < orb.preperiod_length() + 2 * orb.period(); ++j) {
            CHECK(sys.iterate(x, j + orb.period()) == sys.iterate(x, j));
        }
    }
}

TEST_CASE("monotonicity of measure_of") {
    const PointMassMeasure mu = PointMassMeasure::from_atoms({{0, 0.1}, {1, 0.4}, {2, 0.2}, {3, 0.3}});
    SetIndicator small(4);
    small.insert(1);
    SetIndicator big = small;
    big.insert(3);
    CHECK(small.is_subset_of(big));
    CHECK(measure_of(mu, small) <= measure_of(mu, big));
}

TEST_CASE("invariant measures push through preimages exhaustively") {
    // Two cycles (0 1 2) and (3 4), uniform weight per cycle: invariant.
    const DiscreteSystem sys(5, {1, 2, 0, 4, 3});
    const PointMassMeasure mu =
        PointMassMeasure::from_atoms({{0, 0.1}, {1, 0.1}, {2, 0.1}, {3, 0.35}, {4, 0.35}});
    REQUIRE(is_invariant_measure(sys, mu));
    for (StateId s = 0; s < 5; ++s) {
        SetIndicator single(5);
        single.insert(s);
        for (int i = 0; i <= 25; ++i) { // n_states^2
            CHECK(measure_of(mu, preimage(sys, single, i)) ==
                  doctest::Approx(measure_of(mu, single)).epsilon(1e-12));
        }
    }

    // A non-invariant measure must fail the singleton check somewhere.
    const PointMassMeasure skew = PointMassMeasure::from_atoms({{0, 0.9}, {1, 0.1}});
    const DiscreteSystem tail(2, {1, 1});
    CHECK(!is_invariant_measure(tail, skew));

    // Largest exhaustive case: 8 states, i up to n_states^2.
    const DiscreteSystem eight(8, {1, 2, 3, 0, 5, 4, 7, 6});
    const PointMassMeasure mu8 = PointMassMeasure::from_atoms(
        {{0, 0.05}, {1, 0.05}, {2, 0.05}, {3, 0.05}, {4, 0.2}, {5, 0.2}, {6, 0.2}, {7, 0.2}});
    REQUIRE(is_invariant_measure(eight, mu8));
    for (StateId s = 0; s < 8; ++s) {
        SetIndicator single(8);
        single.insert(s);
        for (int i = 0; i <= 64; ++i) {
            CHECK(measure_of(mu8, preimage(eight, single, i)) ==
                  doctest::Approx(measure_of(mu8, single)).epsilon(1e-12));
        }
    }
}

TEST_CASE("half-invariance diagnostic") {
    // Invariant implies half-invariant.
    const DiscreteSystem cyc(3, {1, 2, 0});
    CHECK(is_half_invariant_measure(cyc, PointMassMeasure::uniform(3)));

    // f: 0 -> 1 -> 1 with mass upstream: the pullback onto {1} collects
    // strictly more than it holds.
    const DiscreteSystem tail(2, {1, 1});
    CHECK(!is_half_invariant_measure(tail, PointMassMeasure::from_atoms({{0, 0.9}, {1, 0.1}})));

    // For finite total mass the pullback masses sum to the total, so
    // half-invariance forces invariance; sample the equivalence.
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> ustate(0, 4);
    std::uniform_real_distribution<double> uw(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> map(5);
        for (int& v : map) v = ustate(rng);
        const DiscreteSystem sys(5, map);
        std::vector<std::pair<StateId, double>> atoms;
        for (StateId s = 0; s < 5; ++s) atoms.emplace_back(s, uw(rng));
        const PointMassMeasure mu = PointMassMeasure::from_atoms(atoms);
        CHECK(is_half_invariant_measure(sys, mu) == is_invariant_measure(sys, mu));
    }
}

TEST_CASE("iterate cycle of the function semigroup") {
    const DiscreteSystem sys(4, {1, 2, 1, 0});
    const IterateCycle ic = function_iterate_cycle(sys);
    REQUIRE(ic.detected);
    for (StateId x = 0; x < 4; ++x) {
        for (int j = ic.preperiod; j < ic.preperiod + 6; ++j) {
            CHECK(sys.iterate(x, j + ic.period) == sys.iterate(x, j));
        }
    }
}

TEST_CASE("json loading") {
    const std::string doc = R"({
      "n_states": 3,
      "map": [1, 2, 0],
      "observables": {"phi": [1.0, 0.0, 0.0]},
      "measure": [[0, 0.25], [1, 0.25], [2, 0.5]]
    })";
    const SystemBundle bundle = load_system_json(doc);
    CHECK(bundle.system.n_states() == 3);
    CHECK(bundle.system.apply(2) == 0);
    CHECK(bundle.system.observable("phi")[0] == 1.0);
    REQUIRE(bundle.measure.has_value());
    CHECK(bundle.measure->total_mass == doctest::Approx(1.0));

    CHECK_THROWS_AS(load_system_json("{\"n_states\": 2}"), StructuralError);
    CHECK_THROWS_AS(load_system_json("not json"), StructuralError);
    CHECK_THROWS_AS(load_system_json(R"({"n_states": 2, "map": [0, 5]})"), StructuralError);
    CHECK_THROWS_AS(bundle.system.observable("nope"), StructuralError);
}
