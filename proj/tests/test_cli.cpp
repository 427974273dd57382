#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef ERGOLAB_BIN
#error "ERGOLAB_BIN must point at the CLI binary"
#endif
#ifndef ERGOLAB_FIXTURES
#error "ERGOLAB_FIXTURES must point at the fixtures directory"
#endif

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(ERGOLAB_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fixture(const std::string& name) { return std::string(ERGOLAB_FIXTURES) + "/" + name; }

bool has_tag(const nlohmann::json& report, const std::string& tag) {
    for (const auto& t : report["tags"]) {
        if (t.get<std::string>() == tag) return true;
    }
    return false;
}

} // namespace

TEST_CASE("fekete command reports an estimate near 1") {
    REQUIRE(run_cli("fekete --gen \"n+log(n+1)\" --horizon 1000 --report cli_fekete.json") == 0);
    const auto rep = nlohmann::json::parse(slurp("cli_fekete.json"));
    CHECK(rep["command"] == "fekete");
    CHECK(has_tag(rep, "Fekete"));
    const double est = rep["results"]["estimate"].get<double>();
    CHECK(est >= 1.0);
    CHECK(est <= 1.02);
    CHECK(rep["config"]["horizon"] == 1000);
}

TEST_CASE("check command on the 3-cycle fixture") {
    const std::string args = "check --system " + fixture("sys_3cycle.json") + " --process " +
                             fixture("proc_additive_ind0.json") + " --nmax 256 --report cli_check.json";
    REQUIRE(run_cli(args) == 0);
    const auto rep = nlohmann::json::parse(slurp("cli_check.json"));
    CHECK(has_tag(rep, "TheoremA"));
    CHECK(has_tag(rep, "CorollaryB"));
    const auto& res = rep["results"];
    CHECK(res["condition_a"]["holds"] == true);
    for (const auto& b : res["condition_b"]) CHECK(b["verdict"] == "holds");
    CHECK(res["condition_c"]["holds"] == true);
    CHECK(res["verdict"] == "holds");
    CHECK(std::fabs(res["L"].get<double>() - 1.0 / 3) <= 1e-12);
    CHECK(std::fabs(res["min_R"].get<double>() - 1.0 / 3) <= 1e-12);

    // CSV sidecar with the R_n table.
    const std::string csv = slurp("cli_check.csv");
    CHECK(csv.rfind("n,R_n,L,gap\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 257); // header + 256 rows
}

TEST_CASE("reports are byte-identical across reruns and config round-trips") {
    const std::string args = "check --system " + fixture("sys_swap.json") + " --process " +
                             fixture("proc_additive_phi.json") +
                             " --epsilon 0.1 --kmax 16 --nmax 128 --seed 42 --report cli_rt.json";
    REQUIRE(run_cli(args) == 0);
    const std::string first = slurp("cli_rt.json");

    // Rerun with flags reconstructed from the echoed config.
    const auto rep = nlohmann::json::parse(first);
    const auto& cfg = rep["config"];
    std::ostringstream rebuilt;
    rebuilt << "check --system " << cfg["system"].get<std::string>() << " --process "
            << cfg["process"].get<std::string>() << " --epsilon " << cfg["epsilon"].get<double>() << " --kmax "
            << cfg["kmax"].get<int>() << " --nmax " << cfg["nmax"].get<int>() << " --ell-max "
            << cfg["ell_max"].get<int>() << " --seed " << cfg["seed"].get<long long>() << " --report "
            << cfg["report"].get<std::string>();
    REQUIRE(run_cli(rebuilt.str()) == 0);
    CHECK(slurp("cli_rt.json") == first);
}

TEST_CASE("kingman command emits the truncation ladder") {
    const std::string args = "kingman --system " + fixture("sys_swap.json") + " --process " +
                             fixture("proc_additive_phi.json") + " --nmax 64 --ktrunc 4 --report cli_kingman.json";
    REQUIRE(run_cli(args) == 0);
    const auto rep = nlohmann::json::parse(slurp("cli_kingman.json"));
    CHECK(has_tag(rep, "LemmaAssumpa"));
    CHECK(rep["results"]["truncation_ladder"].size() == 4);
    for (const auto& entry : rep["results"]["r3a"]) {
        CHECK(entry["gap"].get<double>() <= 1e-9);
    }
}

TEST_CASE("flow command writes the trace csv") {
    REQUIRE(run_cli("flow --field sink --dim 1 --x0 1.0 --T 50 --observable x2 --checkpoints 64 "
                    "--trace cli_flow.csv --report cli_flow.json") == 0);
    const std::string csv = slurp("cli_flow.csv");
    CHECK(csv.rfind("T,running_average,liminf_est,limsup_est\n", 0) == 0);
    const auto rep = nlohmann::json::parse(slurp("cli_flow.json"));
    CHECK(rep["results"]["complete"] == true);
    const double avg = rep["results"]["final_average"].get<double>();
    CHECK(std::fabs(avg - 0.01) <= 1e-4); // (1 - e^{-100}) / 100
}

TEST_CASE("bowen-hybrid matches the geometric oracle") {
    REQUIRE(run_cli("bowen-hybrid --alpha-minus 1.4142135623730951 --alpha-plus 1 "
                    "--beta-minus 1.4142135623730951 --beta-plus 1 --a 0 --b 1 --epochs 400 "
                    "--transit-ab 0 --transit-ba 0 --out cli_hybrid.json") == 0);
    const auto rep = nlohmann::json::parse(slurp("cli_hybrid.json"));
    CHECK(has_tag(rep, "CorBowen"));
    const auto& res = rep["results"];
    CHECK(std::fabs(res["lambda_sigma"].get<double>() - 2.0) <= 1e-12);
    const double r = std::sqrt(2.0);
    CHECK(std::fabs(res["limsup_est"].get<double>() - (2.0 - r)) <= 1e-9);
    CHECK(std::fabs(res["liminf_est"].get<double>() - (r - 1.0)) <= 1e-9);
}

TEST_CASE("validation failures exit with code 2") {
    CHECK(run_cli("flow --field sink --x0 1.0 --T 5 --observable \"\"") == 2);
    CHECK(run_cli("flow --field sink --x0 1.0 --T 5 --observable nonsense") == 2);
    CHECK(run_cli("check --system does_not_exist.json --process also_missing.json") == 2);
    CHECK(run_cli("fekete --gen unknown-generator") == 2);
    CHECK(run_cli("definitely-not-a-subcommand") == 2);
    // x0 outside the eye interior.
    CHECK(run_cli("bowen --observable x --x0 0,-0.5 --tmax 100") == 2);
}

TEST_CASE("fully defaulted commands are runnable") {
    CHECK(run_cli("fekete --report cli_default_fekete.json") == 0);
    CHECK(run_cli("flow --T 5 --report cli_default_flow.json") == 0);
}

TEST_CASE("bowen command produces report and trace") {
    REQUIRE(run_cli("bowen --observable x --x0 0.0,0.45 --tmax 200 --out cli_bowen.json --trace cli_bowen.csv") ==
            0);
    const auto rep = nlohmann::json::parse(slurp("cli_bowen.json"));
    CHECK(has_tag(rep, "CorBowen"));
    const auto& res = rep["results"];
    CHECK(std::fabs(res["phi_A"].get<double>() + 1.0) <= 1e-9);
    CHECK(std::fabs(res["phi_B"].get<double>() - 1.0) <= 1e-9);
    CHECK(res["predicted"] == "OSCILLATING");
    CHECK(res["attraction_mechanism"] == "dissipation");
    CHECK(res["windows"].size() == 3);
    const std::string csv = slurp("cli_bowen.csv");
    CHECK(csv.rfind("T,running_average,liminf_est,limsup_est\n", 0) == 0);
}

TEST_CASE("flow command runs the membership and omega checks") {
    REQUIRE(run_cli("flow --field sink --dim 1 --x0 1.0 --T 60 --observable x2 --gooda11 0.5,0.25 "
                    "--gooda11-tprobe 20 --theorem-c --two-d --omega-burn-in 8 --report cli_flow_checks.json") == 0);
    const auto rep = nlohmann::json::parse(slurp("cli_flow_checks.json"));
    CHECK(has_tag(rep, "Gooda11"));
    CHECK(has_tag(rep, "TheoremC"));
    CHECK(has_tag(rep, "LemmaFixedPoint"));
    CHECK(rep["results"]["gooda11"]["all_hold"] == true);
    CHECK(rep["results"]["theorem_c"]["inequality_holds"] == true);
    CHECK(rep["results"]["two_d_point"]["is_2d_point"] == true);
}

TEST_CASE("polynomial field and observable documents") {
    {
        std::ofstream f("cli_field.json");
        f << R"({"dimension": 1, "components": [[{"coef": -1.0, "powers": [1]}]]})";
    }
    {
        std::ofstream f("cli_obs.json");
        f << R"({"terms": [{"coef": 1.0, "powers": [2]}]})";
    }
    REQUIRE(run_cli("flow --field cli_field.json --x0 1.0 --T 50 --observable file:cli_obs.json "
                    "--report cli_poly.json") == 0);
    const auto rep = nlohmann::json::parse(slurp("cli_poly.json"));
    // Same sink/x^2 pair as the builtin route: (1 - e^{-100}) / 100.
    CHECK(std::fabs(rep["results"]["final_average"].get<double>() - 0.01) <= 1e-4);
}

TEST_CASE("integration failure exits 3 with partial outputs") {
    {
        std::ofstream f("cli_blowup.json");
        f << R"({"dimension": 1, "components": [[{"coef": 1.0, "powers": [2]}]]})";
    }
    CHECK(run_cli("flow --field cli_blowup.json --x0 1.0 --T 2 --observable x "
                  "--trace cli_partial.csv --report cli_partial.json") == 3);
    const auto rep = nlohmann::json::parse(slurp("cli_partial.json"));
    CHECK(rep["results"]["complete"] == false);
    CHECK(rep["results"]["last_good_time"].get<double>() > 0.9);
    const std::string csv = slurp("cli_partial.csv");
    CHECK(csv.rfind("T,running_average,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') > 5); // partial trace rows
}

TEST_CASE("thread cap from the environment is echoed") {
    const std::string cmd = std::string("ERGOLAB_THREADS=4 ") + ERGOLAB_BIN +
                            " fekete --gen \"sqrt(n)\" --horizon 100 --report cli_threads.json >/dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    const auto rep = nlohmann::json::parse(slurp("cli_threads.json"));
    CHECK(rep["config"]["threads"] == 4);
}

TEST_CASE("cocycle checks accept the norm flag") {
    const std::string args = "check --system " + fixture("sys_swap.json") + " --process " +
                             fixture("proc_diag_cocycle.json") +
                             " --nmax 64 --norm frobenius --report cli_frob.json";
    REQUIRE(run_cli(args) == 0);
    const auto rep = nlohmann::json::parse(slurp("cli_frob.json"));
    // The Frobenius norm of a submultiplicative family still yields the
    // diagonal growth rate log 2 in the limit integral.
    CHECK(std::fabs(rep["results"]["L"].get<double>() - std::log(2.0)) <= 1e-9);
    CHECK(rep["config"]["norm"] == "frobenius");
}

TEST_CASE("gooda flags surface in the check report") {
    const std::string args = "check --system " + fixture("sys_3cycle.json") + " --process " +
                             fixture("proc_additive_ind0.json") + " --nmax 64 --gooda-x 0 --report cli_gooda.json";
    REQUIRE(run_cli(args) == 0);
    const auto rep = nlohmann::json::parse(slurp("cli_gooda.json"));
    CHECK(has_tag(rep, "Gooda_ii"));
    CHECK(rep["results"]["gooda"]["ii"] == true);
    CHECK(std::fabs(rep["results"]["gooda"]["birkhoff_limit"].get<double>() - 1.0 / 3) <= 1e-12);
}
