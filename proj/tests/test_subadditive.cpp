#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ergolab/errors.hpp"
#include "ergolab/subadditive.hpp"
#include "oracles.hpp"

using namespace ergolab;

namespace {

DiscreteSystem three_cycle_with_indicator() {
    DiscreteSystem sys(3, {1, 2, 0});
    sys.add_observable("ind0", {1.0, 0.0, 0.0});
    return sys;
}

} // namespace

TEST_CASE("fekete on a linear sequence") {
    ScalarSequence seq([](int n) { return 2.5 * n; }, 128);
    const FeketeResult res = fekete_limit(seq, 128);
    CHECK(res.inf_over_horizon == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(!res.diverged_to_minus_inf);
}

TEST_CASE("fekete on n + log(n+1)") {
    ScalarSequence seq([](int n) { return n + std::log(n + 1.0); }, 1000);
    const FeketeResult res = fekete_limit(seq, 1000);
    CHECK(res.inf_over_horizon >= 1.0);
    CHECK(res.inf_over_horizon == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(res.argmin_n == 1000); // a_n/n decreases toward 1 from above
}

TEST_CASE("fekete on sqrt(n) heads to zero") {
    ScalarSequence seq([](int n) { return std::sqrt(static_cast<double>(n)); }, 10000);
    const FeketeResult res = fekete_limit(seq, 10000);
    CHECK(res.inf_over_horizon == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("fekete inf is monotone in the horizon") {
    ScalarSequence seq([](int n) { return n + std::log(n + 1.0); }, 2048);
    double prev = fekete_limit(seq, 64).inf_over_horizon;
    for (int h : {128, 256, 512, 1024, 2048}) {
        const double cur = fekete_limit(seq, h).inf_over_horizon;
        CHECK(cur <= prev + 1e-15);
        prev = cur;
    }
}

TEST_CASE("fekete rejects non-subadditive input with a witness") {
    ScalarSequence seq([](int n) { return static_cast<double>(n) * n; }, 64);
    CHECK_THROWS_AS(fekete_limit(seq, 64), SubadditivityViolation);
    try {
        fekete_limit(seq, 64);
    } catch (const SubadditivityViolation& e) {
        CHECK(e.m == 1);
        CHECK(e.n == 1);
        CHECK(e.lhs == doctest::Approx(4.0));
    }
}

TEST_CASE("fekete divergence floor") {
    ScalarSequence seq([](int n) { return -std::exp2(static_cast<double>(std::min(n, 100))); }, 64);
    // -2^n is subadditive (a_{m+n} <= a_m + a_n since 2^{m+n} >= 2^m + 2^n).
    FeketeOptions opts;
    opts.divergence_floor = -1e3;
    const FeketeResult res = fekete_limit(seq, 64, opts);
    CHECK(res.diverged_to_minus_inf);
    CHECK(res.estimate() == -std::numeric_limits<double>::infinity());
}

TEST_CASE("derriennic reduces to fekete when c is zero") {
    ScalarSequence a([](int n) { return 1.5 * n; }, 512);
    ScalarSequence c([](int) { return 0.0; }, 512);
    const DerriennicResult res = derriennic_limit(a, c, 512);
    CHECK(res.estimate == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(res.inf_over_horizon == doctest::Approx(fekete_limit(a, 512).inf_over_horizon).epsilon(1e-15));
}

TEST_CASE("derriennic on n + sqrt(n) with c = 2 sqrt(n)") {
    const int horizon = 10000;
    ScalarSequence a([](int n) { return n + std::sqrt(static_cast<double>(n)); }, horizon);
    ScalarSequence c([](int n) { return 2.0 * std::sqrt(static_cast<double>(n)); }, horizon);
    const DerriennicResult res = derriennic_limit(a, c, horizon);
    CHECK(res.estimate == doctest::Approx(1.0).epsilon(2e-2));
}

TEST_CASE("derriennic rejects quadratic growth with witness (1,1)") {
    ScalarSequence a([](int n) { return static_cast<double>(n) * n; }, 64);
    ScalarSequence c([](int) { return 0.0; }, 64);
    CHECK_THROWS_AS(derriennic_limit(a, c, 64), SubadditivityViolation);
    try {
        derriennic_limit(a, c, 64);
    } catch (const SubadditivityViolation& e) {
        CHECK(e.m == 1);
        CHECK(e.n == 1);
    }
}

TEST_CASE("derriennic rejects negative c and non-decaying c") {
    ScalarSequence a([](int n) { return 1.0 * n; }, 64);
    ScalarSequence cneg([](int n) { return n == 3 ? -1.0 : 0.0; }, 64);
    CHECK_THROWS_AS(derriennic_limit(a, cneg, 64), StructuralError);

    ScalarSequence big([](int n) { return 10.0 * n; }, 64);
    ScalarSequence clin([](int n) { return 2.0 * n; }, 64);
    CHECK_THROWS_AS(derriennic_limit(big, clin, 64), StructuralError);
}

TEST_CASE("evaluate constant additive observable") {
    DiscreteSystem sys(4, {1, 2, 3, 0});
    sys.add_observable("c", {0.7, 0.7, 0.7, 0.7});
    const auto proc = SubadditiveProcess::additive("c");
    for (int n : {1, 5, 32}) {
        CHECK(proc.evaluate(sys, 2, n) == doctest::Approx(0.7 * n).epsilon(1e-14));
    }
}

TEST_CASE("constant diagonal cocycle gives n log 2") {
    DiscreteSystem sys(2, {1, 0});
    const Matrix a = Matrix::diagonal({2.0, 0.5});
    const auto proc = SubadditiveProcess::matrix_cocycle({a, a});
    for (int n : {1, 3, 10, 100}) {
        CHECK(proc.evaluate(sys, 0, n) == doctest::Approx(n * std::log(2.0)).epsilon(1e-10));
    }
}

TEST_CASE("additive indicator on the 3-cycle") {
    const DiscreteSystem sys = three_cycle_with_indicator();
    const auto proc = SubadditiveProcess::additive("ind0");
    CHECK(proc.evaluate(sys, 0, 3) == doctest::Approx(1.0));
    CHECK(proc.evaluate(sys, 0, 7) ==
          doctest::Approx(oracles::birkhoff_sum({1, 2, 0}, {1.0, 0.0, 0.0}, 0, 7)));
}

TEST_CASE("phi table matches pointwise evaluation") {
    DiscreteSystem sys(3, {1, 2, 1});
    sys.add_observable("phi", {0.3, -1.2, 0.8});
    const auto additive = SubadditiveProcess::additive("phi");
    const auto cocycle = SubadditiveProcess::matrix_cocycle(
        {Matrix(2, {1.0, 1.0, 0.0, 1.0}), Matrix(2, {0.5, 0.0, 0.3, 2.0}), Matrix(2, {0.0, -1.0, 1.0, 0.0})});
    for (const auto& proc : {additive, cocycle}) {
        const auto table = proc.phi_table(sys, 16);
        for (int n = 1; n <= 16; ++n) {
            for (StateId x = 0; x < 3; ++x) {
                CHECK(table[n - 1][x] == doctest::Approx(proc.evaluate(sys, x, n)).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("subadditivity audit passes for additive and cocycle kinds") {
    DiscreteSystem sys(5, {2, 0, 4, 2, 1});
    sys.add_observable("phi", {0.5, -0.25, 1.5, -2.0, 0.75});
    CHECK(!audit_subadditivity(SubadditiveProcess::additive("phi"), sys, 64).has_value());

    std::vector<Matrix> mats;
    for (int i = 0; i < 5; ++i) {
        const double s = 0.3 * i - 0.6;
        mats.push_back(Matrix(2, {1.0 + s, 0.2, -0.4, 0.8 - s}));
    }
    CHECK(!audit_subadditivity(SubadditiveProcess::matrix_cocycle(mats), sys, 64).has_value());
}

TEST_CASE("audit catches a non-subadditive custom generator") {
    DiscreteSystem sys(2, {1, 0});
    const auto bad = SubadditiveProcess::custom(
        [](const DiscreteSystem&, StateId, int n) { return static_cast<double>(n) * n; }, 1.0);
    const auto witness = audit_subadditivity(bad, sys, 16);
    REQUIRE(witness.has_value());
    CHECK(witness->lhs > witness->rhs);
}

TEST_CASE("truncation is inactive above the floor") {
    const DiscreteSystem sys = three_cycle_with_indicator();
    const auto proc = SubadditiveProcess::additive("ind0"); // phi_n >= 0 >= -n
    const auto trunc = truncate(proc, 2);
    for (StateId x = 0; x < 3; ++x) {
        for (int n = 1; n <= 12; ++n) {
            CHECK(trunc.evaluate(sys, x, n) == proc.evaluate(sys, x, n));
        }
    }
}

TEST_CASE("truncation saturates a steeply negative process") {
    DiscreteSystem sys(2, {1, 0});
    const auto proc = SubadditiveProcess::custom(
        [](const DiscreteSystem&, StateId, int n) { return -5.0 * n; }, 0.0);
    const auto trunc = truncate(proc, 2);
    for (int n = 1; n <= 9; ++n) {
        CHECK(trunc.evaluate(sys, 0, n) == doctest::Approx(-2.0 * n));
    }
    CHECK_THROWS_AS(truncate(proc, 0), StructuralError);
}

TEST_CASE("truncation ladder on a cocycle with a singular direction") {
    // State 2 carries a rank-one matrix; products through it lose a
    // direction and phi_n can reach -inf, which the ladder floors.
    DiscreteSystem sys(4, {1, 2, 3, 0});
    std::vector<Matrix> mats = {Matrix(2, {2.0, 0.0, 0.0, 0.5}), Matrix(2, {1.0, 0.5, 0.0, 1.0}),
                                Matrix(2, {1.0, 0.0, 0.0, 0.0}), Matrix(2, {0.25, 0.0, 0.0, 4.0})};
    const auto base = SubadditiveProcess::matrix_cocycle(mats);
    const auto t1 = truncate(base, 1);
    const auto t2 = truncate(base, 2);
    for (StateId x = 0; x < 4; ++x) {
        for (int n = 1; n <= 12; ++n) {
            const double v = base.evaluate(sys, x, n);
            const double v2 = t2.evaluate(sys, x, n);
            const double v1 = t1.evaluate(sys, x, n);
            CHECK(v1 >= v2);
            const bool above_base = v2 >= v || v == -std::numeric_limits<double>::infinity();
            CHECK(above_base);
            CHECK(v1 >= -1.0 * n);
            CHECK(v2 >= -2.0 * n);
        }
    }
    // Ladder items (i)-(iii) on this fixture: truncated processes stay
    // subadditive, phi_1^k bounded above, phi_n^k / n >= -k.
    CHECK(!audit_subadditivity(t1, sys, 24).has_value());
    CHECK(!audit_subadditivity(t2, sys, 24).has_value());
    const double beta1 = t1.beta(sys);
    for (StateId x = 0; x < 4; ++x) CHECK(t1.evaluate(sys, x, 1) <= beta1 + 1e-12);
}

TEST_CASE("beta is the exact sup of phi_1") {
    DiscreteSystem sys(3, {0, 2, 1});
    sys.add_observable("phi", {-0.5, 2.25, 1.0});
    CHECK(SubadditiveProcess::additive("phi").beta(sys) == doctest::Approx(2.25));
}

TEST_CASE("process json loading") {
    const auto additive = load_process_json(R"({"kind": "additive", "observable": "phi"})");
    CHECK(additive.kind() == SubadditiveProcess::Kind::Additive);
    CHECK(additive.observable_name() == "phi");

    const auto cocycle = load_process_json(R"({"matrices": [[2.0, 0.0, 0.0, 0.5], [1.0, 0.0, 0.0, 1.0]]})");
    CHECK(cocycle.kind() == SubadditiveProcess::Kind::MatrixCocycle);
    CHECK(cocycle.matrices().size() == 2);
    CHECK(cocycle.norm() == MatrixNorm::Spectral);

    const auto frob = load_process_json(
        R"({"kind": "matrix_cocycle", "matrices": [[1.0, 0.0, 0.0, 1.0]], "norm": "frobenius", "gamma": 3.0})");
    CHECK(frob.norm() == MatrixNorm::Frobenius);
    REQUIRE(frob.gamma().has_value());
    CHECK(frob.gamma().value() == 3.0);

    CHECK_THROWS_AS(load_process_json(R"({"kind": "additive"})"), StructuralError);
    CHECK_THROWS_AS(load_process_json(R"({"matrices": [[1.0, 2.0, 3.0]]})"), StructuralError);
}
