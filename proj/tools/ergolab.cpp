// ergolab: command-line laboratory for subadditive/Birkhoff averaging
// experiments on finite systems and planar flows.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ergolab/bowen.hpp"
#include "ergolab/builtins.hpp"
#include "ergolab/ergodic.hpp"
#include "ergolab/errors.hpp"
#include "ergolab/flow.hpp"
#include "ergolab/measure.hpp"
#include "ergolab/report.hpp"
#include "ergolab/subadditive.hpp"

using namespace ergolab;

namespace {

int env_threads() {
    const char* env = std::getenv("ERGOLAB_THREADS");
    if (!env) return 1;
    const int v = std::atoi(env);
    return v >= 1 ? v : 1;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StructuralError("cannot write file '" + path + "'");
    out << content;
}

std::string csv_sidecar_path(const std::string& report_path) {
    const std::string suffix = ".json";
    if (report_path.size() > suffix.size() &&
        report_path.compare(report_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return report_path.substr(0, report_path.size() - suffix.size()) + ".csv";
    }
    return report_path + ".csv";
}

Vec parse_point(const std::string& text) {
    Vec out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw StructuralError("could not parse point '" + text + "'");
    return out;
}

JsonValue vec_json(const Vec& v) {
    JsonValue arr = JsonValue::array();
    for (double x : v) arr.push(JsonValue::number(x));
    return arr;
}

JsonValue tags_json(const std::vector<std::string>& tags) {
    JsonValue arr = JsonValue::array();
    for (const std::string& t : tags) arr.push(JsonValue::str(t));
    return arr;
}

JsonValue condition_b_json(const ConditionBReport& b) {
    JsonValue jb = JsonValue::object();
    jb.set("epsilon", JsonValue::number(b.epsilon));
    jb.set("verdict", JsonValue::str(verdict_name(b.verdict)));
    jb.set("k_limit", JsonValue::number(b.k_limit));
    jb.set("covering_k", b.covering_k ? JsonValue::integer(*b.covering_k) : JsonValue::null());
    JsonValue per_k = JsonValue::array();
    for (const CesaroValue& v : b.per_k) {
        JsonValue jv = JsonValue::object();
        jv.set("k", JsonValue::integer(v.k));
        jv.set("limsup", JsonValue::number(v.limsup_value));
        jv.set("preperiod", JsonValue::integer(v.preperiod));
        jv.set("period", JsonValue::integer(v.period));
        jv.set("exact", JsonValue::boolean(v.exact));
        per_k.push(std::move(jv));
    }
    jb.set("per_k", std::move(per_k));
    return jb;
}

JsonValue theorem_a_json(const TheoremAReport& rep) {
    JsonValue res = JsonValue::object();
    res.set("beta", JsonValue::number(rep.beta));
    JsonValue ja = JsonValue::object();
    ja.set("holds", JsonValue::boolean(rep.condition_a.holds));
    ja.set("worst_violation", JsonValue::number(rep.condition_a.worst_violation));
    res.set("condition_a", std::move(ja));
    JsonValue jbs = JsonValue::array();
    for (const ConditionBReport& b : rep.condition_b) jbs.push(condition_b_json(b));
    res.set("condition_b", std::move(jbs));
    JsonValue jc = JsonValue::object();
    jc.set("holds", JsonValue::boolean(rep.condition_c.holds));
    jc.set("i_max_checked", JsonValue::integer(rep.condition_c.i_max_checked));
    if (rep.condition_c.witness) {
        JsonValue jw = JsonValue::object();
        jw.set("i", JsonValue::integer(rep.condition_c.witness->i));
        jw.set("k", JsonValue::integer(rep.condition_c.witness->k));
        jw.set("epsilon", JsonValue::number(rep.condition_c.witness->epsilon));
        jw.set("lhs", JsonValue::number(rep.condition_c.witness->lhs));
        jw.set("rhs", JsonValue::number(rep.condition_c.witness->rhs));
        jc.set("witness", std::move(jw));
    } else {
        jc.set("witness", JsonValue::null());
    }
    res.set("condition_c", std::move(jc));
    res.set("hypotheses_hold", JsonValue::boolean(rep.hypotheses_hold));
    res.set("failed_hypothesis", JsonValue::str(rep.failed_hypothesis));
    res.set("L", JsonValue::number(rep.L));
    res.set("min_R", JsonValue::number(rep.min_R));
    res.set("argmin_n", JsonValue::integer(rep.argmin_n));
    res.set("gap", JsonValue::number(rep.gap));
    res.set("asserted", JsonValue::boolean(rep.asserted));
    res.set("verdict", JsonValue::str(verdict_name(rep.verdict)));
    res.set("gamma", rep.gamma ? JsonValue::number(*rep.gamma) : JsonValue::null());
    if (rep.gamma) {
        res.set("gamma_bound_ok", JsonValue::boolean(rep.gamma_bound_ok));
        res.set("tail_sup_gap", JsonValue::number(rep.tail_sup_gap));
        res.set("limit_holds", JsonValue::boolean(rep.limit_holds));
    }
    return res;
}

std::string trace_csv(const AverageTrace& trace) {
    // liminf/limsup estimates at each checkpoint use the window [t/2, t].
    std::string csv = "T,running_average,liminf_est,limsup_est\n";
    for (size_t i = 0; i < trace.sample_times.size(); ++i) {
        const double t = trace.sample_times[i];
        const auto [lo, hi] = trace.window_range(t / 2.0, t);
        csv += format_double_17(t) + "," + format_double_17(trace.running_average[i]) + "," +
               format_double_17(lo) + "," + format_double_17(hi) + "\n";
    }
    return csv;
}

struct CommonOpts {
    unsigned long long seed = 42;
};

// ---------------------------------------------------------------- fekete

struct FeketeCmd {
    std::string gen;
    std::string c_gen; // enables the Derriennic variant
    int horizon = 1000;
    double floor = -1e6;
    std::string report_path;
};

int run_fekete(const FeketeCmd& cmd, const CommonOpts& common) {
    const ScalarSequence seq = make_scalar_sequence(cmd.gen, cmd.horizon);
    FeketeOptions opts;
    opts.divergence_floor = cmd.floor;
    opts.seed = common.seed;

    JsonValue root = JsonValue::object();
    root.set("command", JsonValue::str("fekete"));
    JsonValue config = JsonValue::object();
    config.set("gen", JsonValue::str(cmd.gen));
    config.set("c_gen", JsonValue::str(cmd.c_gen));
    config.set("horizon", JsonValue::integer(cmd.horizon));
    config.set("floor", JsonValue::number(cmd.floor));
    config.set("seed", JsonValue::integer(static_cast<long long>(common.seed)));
    config.set("threads", JsonValue::integer(env_threads()));
    config.set("report", JsonValue::str(cmd.report_path));
    root.set("config", std::move(config));

    JsonValue results = JsonValue::object();
    if (cmd.c_gen.empty()) {
        root.set("tags", tags_json({"Fekete"}));
        const FeketeResult res = fekete_limit(seq, cmd.horizon, opts);
        results.set("estimate", JsonValue::number(res.estimate()));
        results.set("inf_over_horizon", JsonValue::number(res.inf_over_horizon));
        results.set("argmin_n", JsonValue::integer(res.argmin_n));
        results.set("diverged_to_minus_inf", JsonValue::boolean(res.diverged_to_minus_inf));
        std::cout << "fekete estimate = " << format_double_17(res.estimate()) << " (argmin n = " << res.argmin_n
                  << ")\n";
    } else {
        root.set("tags", tags_json({"Derriennic"}));
        const ScalarSequence cseq = make_scalar_sequence(cmd.c_gen, cmd.horizon);
        const DerriennicResult res = derriennic_limit(seq, cseq, cmd.horizon, opts);
        results.set("estimate", JsonValue::number(res.estimate));
        results.set("inf_over_horizon", JsonValue::number(res.inf_over_horizon));
        results.set("tail_c_over_n", JsonValue::number(res.tail_c_over_n));
        std::cout << "derriennic estimate = " << format_double_17(res.estimate) << "\n";
    }
    root.set("results", std::move(results));
    if (!cmd.report_path.empty()) write_text_file(cmd.report_path, root.dump());
    return 0;
}

// ----------------------------------------------------------------- check

struct CheckCmd {
    std::string system_path;
    std::string process_path;
    std::string measure_path;
    double epsilon = 0.1;
    int k_max = 32;
    int n_max = 4096;
    int ell_max = 3;
    std::string norm = "spectral";
    std::string report_path;
    int gooda_state = -1;
};

int run_check(const CheckCmd& cmd, const CommonOpts& common) {
    SystemBundle bundle = load_system_file(cmd.system_path);
    SubadditiveProcess proc = load_process_file(cmd.process_path);
    if (proc.kind() == SubadditiveProcess::Kind::MatrixCocycle && cmd.norm == "frobenius") {
        proc = SubadditiveProcess::matrix_cocycle(proc.matrices(), MatrixNorm::Frobenius);
    }
    PointMassMeasure mu = [&]() {
        if (!cmd.measure_path.empty()) return load_measure_file(cmd.measure_path);
        if (bundle.measure) return *bundle.measure;
        throw StructuralError("no measure: pass --measure or embed one in the system document");
    }();
    mu.validate(bundle.system.n_states());
    proc.validate(bundle.system);

    TheoremAOptions opts;
    opts.n_max = cmd.n_max;
    opts.k_max = cmd.k_max;
    opts.ell_max = cmd.ell_max;
    const TheoremAReport rep = verify_theorem_a(bundle.system, mu, proc, opts);

    std::vector<std::string> tags = {"TheoremA"};
    if (proc.kind() == SubadditiveProcess::Kind::Additive) tags.push_back("CorollaryB");

    JsonValue root = JsonValue::object();
    root.set("command", JsonValue::str("check"));
    JsonValue config = JsonValue::object();
    config.set("system", JsonValue::str(cmd.system_path));
    config.set("process", JsonValue::str(cmd.process_path));
    config.set("measure", JsonValue::str(cmd.measure_path));
    config.set("epsilon", JsonValue::number(cmd.epsilon));
    config.set("kmax", JsonValue::integer(cmd.k_max));
    config.set("nmax", JsonValue::integer(cmd.n_max));
    config.set("ell_max", JsonValue::integer(cmd.ell_max));
    config.set("norm", JsonValue::str(cmd.norm));
    config.set("gooda_state", JsonValue::integer(cmd.gooda_state));
    config.set("seed", JsonValue::integer(static_cast<long long>(common.seed)));
    config.set("threads", JsonValue::integer(env_threads()));
    config.set("report", JsonValue::str(cmd.report_path));
    root.set("config", std::move(config));

    JsonValue results = theorem_a_json(rep);

    // Requested-epsilon family summary plus the condition (c) diagnostic.
    {
        const LiminfProfile profile = liminf_profile(bundle.system, proc);
        const EkFamily fam = build_ek_family(bundle.system, proc, profile, cmd.epsilon, cmd.k_max);
        JsonValue jf = JsonValue::object();
        jf.set("epsilon", JsonValue::number(cmd.epsilon));
        jf.set("covering_k", fam.covering_k ? JsonValue::integer(*fam.covering_k) : JsonValue::null());
        JsonValue sizes = JsonValue::array();
        for (int k = 1; k <= fam.k_max; ++k) sizes.push(JsonValue::integer(fam.at(k).count()));
        jf.set("set_sizes", std::move(sizes));
        results.set("ek_family", std::move(jf));
    }

    if (cmd.gooda_state >= 0) {
        if (proc.kind() != SubadditiveProcess::Kind::Additive) {
            throw StructuralError("--gooda-x needs an additive process");
        }
        const GoodaReport g =
            check_gooda_conditions(bundle.system, proc.observable_name(), cmd.gooda_state);
        JsonValue jg = JsonValue::object();
        jg.set("i", JsonValue::boolean(g.i));
        jg.set("ii", JsonValue::boolean(g.ii));
        jg.set("iii", JsonValue::boolean(g.iii));
        jg.set("iv", JsonValue::boolean(g.iv));
        jg.set("birkhoff_limit", JsonValue::number(g.birkhoff_limit));
        jg.set("claim1_finite", JsonValue::boolean(g.claim1_finite));
        results.set("gooda", std::move(jg));
        tags.insert(tags.end(), {"Gooda_i", "Gooda_ii", "Gooda_iii", "Gooda_iv"});
    }
    root.set("tags", tags_json(tags));
    root.set("results", std::move(results));

    if (!cmd.report_path.empty()) {
        write_text_file(cmd.report_path, root.dump());
        std::string csv = "n,R_n,L,gap\n";
        for (size_t i = 0; i < rep.R.size(); ++i) {
            csv += std::to_string(i + 1) + "," + format_double_17(rep.R[i]) + "," + format_double_17(rep.L) + "," +
                   format_double_17(rep.R[i] - rep.L) + "\n";
        }
        write_text_file(csv_sidecar_path(cmd.report_path), csv);
    }
    std::cout << "theorem A verdict: " << verdict_name(rep.verdict) << " (L = " << format_double_17(rep.L)
              << ", min R_n = " << format_double_17(rep.min_R) << ", gap = " << format_double_17(rep.gap) << ")\n";
    return 0;
}

// ---------------------------------------------------------------- kingman

struct KingmanCmd {
    std::string system_path;
    std::string process_path;
    std::string measure_path;
    int n_max = 1024;
    int k_trunc = 8;
    std::string report_path;
};

int run_kingman(const KingmanCmd& cmd, const CommonOpts& common) {
    SystemBundle bundle = load_system_file(cmd.system_path);
    const SubadditiveProcess proc = load_process_file(cmd.process_path);
    PointMassMeasure mu = [&]() {
        if (!cmd.measure_path.empty()) return load_measure_file(cmd.measure_path);
        if (bundle.measure) return *bundle.measure;
        throw StructuralError("no measure: pass --measure or embed one in the system document");
    }();
    mu.validate(bundle.system.n_states());
    proc.validate(bundle.system);

    TheoremAOptions opts;
    opts.n_max = cmd.n_max;

    JsonValue root = JsonValue::object();
    root.set("command", JsonValue::str("kingman"));
    root.set("tags", tags_json({"TheoremA", "LemmaAssumpa"}));
    JsonValue config = JsonValue::object();
    config.set("system", JsonValue::str(cmd.system_path));
    config.set("process", JsonValue::str(cmd.process_path));
    config.set("measure", JsonValue::str(cmd.measure_path));
    config.set("nmax", JsonValue::integer(cmd.n_max));
    config.set("ktrunc", JsonValue::integer(cmd.k_trunc));
    config.set("seed", JsonValue::integer(static_cast<long long>(common.seed)));
    config.set("threads", JsonValue::integer(env_threads()));
    config.set("report", JsonValue::str(cmd.report_path));
    root.set("config", std::move(config));

    JsonValue results = JsonValue::object();
    const TheoremAReport base = verify_theorem_a(bundle.system, mu, proc, opts);
    results.set("untruncated", theorem_a_json(base));

    JsonValue ladder = JsonValue::array();
    for (int k = 1; k <= cmd.k_trunc; ++k) {
        const TheoremAReport rep = verify_theorem_a(bundle.system, mu, truncate(proc, k), opts);
        JsonValue jk = JsonValue::object();
        jk.set("k", JsonValue::integer(k));
        jk.set("L", JsonValue::number(rep.L));
        jk.set("min_R", JsonValue::number(rep.min_R));
        jk.set("gap", JsonValue::number(rep.gap));
        jk.set("verdict", JsonValue::str(verdict_name(rep.verdict)));
        jk.set("limit_holds", JsonValue::boolean(rep.limit_holds));
        ladder.push(std::move(jk));
    }
    results.set("truncation_ladder", std::move(ladder));

    // inf_k of the truncated integrals against the untruncated integral,
    // evaluated past the saturation level of each n.
    JsonValue r3a = JsonValue::array();
    const auto table = proc.phi_table(bundle.system, cmd.n_max);
    for (int n = 1; n <= cmd.n_max; n *= 2) {
        double plain = 0.0;
        double worst = 0.0;
        for (const auto& [x, w] : mu.atoms) plain += w * table[static_cast<size_t>(n - 1)][static_cast<size_t>(x)];
        for (StateId x = 0; x < bundle.system.n_states(); ++x) {
            worst = std::max(worst, -table[static_cast<size_t>(n - 1)][static_cast<size_t>(x)] / n);
        }
        const int saturation = static_cast<int>(std::ceil(std::max(1.0, worst))) + 1;
        double inf_k = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= std::max(cmd.k_trunc, saturation); ++k) {
            double v = 0.0;
            for (const auto& [x, w] : mu.atoms) {
                v += w * std::max(table[static_cast<size_t>(n - 1)][static_cast<size_t>(x)],
                                  -static_cast<double>(k) * n);
            }
            inf_k = std::min(inf_k, v);
        }
        JsonValue jn = JsonValue::object();
        jn.set("n", JsonValue::integer(n));
        jn.set("integral_phi_n", JsonValue::number(plain));
        jn.set("inf_k_truncated", JsonValue::number(inf_k));
        jn.set("gap", JsonValue::number(std::fabs(plain - inf_k)));
        r3a.push(std::move(jn));
    }
    results.set("r3a", std::move(r3a));
    root.set("results", std::move(results));

    if (!cmd.report_path.empty()) write_text_file(cmd.report_path, root.dump());
    std::cout << "kingman ladder done (untruncated verdict: " << verdict_name(base.verdict) << ")\n";
    return 0;
}

// ------------------------------------------------------------------ flow

struct FlowCmd {
    std::string field = "sink";
    int dim = 1;
    double eps = 0.1;
    std::string x0_text = "1.0";
    double T = 100.0;
    std::string observable = "x";
    int checkpoints = 512;
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double max_step = 0.25;
    std::string trace_path;
    std::string report_path;
    std::string gooda11_eps; // comma list enables the check
    int gooda11_kmax = 64;
    double gooda11_tprobe = 100.0;
    bool theorem_c = false;
    bool two_d = false;
    double omega_burn_in = 50.0;
    int omega_samples = 1024;
};

int run_flow(const FlowCmd& cmd, const CommonOpts& common) {
    FlowSpec flow = make_flow(cmd.field, cmd.dim, cmd.eps);
    flow.integ.abs_tol = cmd.abs_tol;
    flow.integ.rel_tol = cmd.rel_tol;
    flow.integ.max_step = cmd.max_step;
    const NamedObservable obs = make_observable(cmd.observable);
    const Vec x0 = parse_point(cmd.x0_text);
    if (static_cast<int>(x0.size()) != flow.dimension) {
        throw StructuralError("x0 dimension does not match the field");
    }

    std::vector<std::string> tags;
    const AverageTrace trace = time_average(flow, obs.fn, x0, cmd.T, cmd.checkpoints);
    if (!cmd.trace_path.empty()) write_text_file(cmd.trace_path, trace_csv(trace));

    JsonValue root = JsonValue::object();
    root.set("command", JsonValue::str("flow"));
    JsonValue config = JsonValue::object();
    config.set("field", JsonValue::str(cmd.field));
    config.set("dim", JsonValue::integer(flow.dimension));
    config.set("eps", JsonValue::number(cmd.eps));
    config.set("x0", vec_json(x0));
    config.set("T", JsonValue::number(cmd.T));
    config.set("observable", JsonValue::str(cmd.observable));
    config.set("checkpoints", JsonValue::integer(cmd.checkpoints));
    config.set("abs_tol", JsonValue::number(cmd.abs_tol));
    config.set("rel_tol", JsonValue::number(cmd.rel_tol));
    config.set("max_step", JsonValue::number(cmd.max_step));
    config.set("gooda11_eps", JsonValue::str(cmd.gooda11_eps));
    config.set("gooda11_kmax", JsonValue::integer(cmd.gooda11_kmax));
    config.set("gooda11_tprobe", JsonValue::number(cmd.gooda11_tprobe));
    config.set("theorem_c", JsonValue::boolean(cmd.theorem_c));
    config.set("two_d", JsonValue::boolean(cmd.two_d));
    config.set("omega_burn_in", JsonValue::number(cmd.omega_burn_in));
    config.set("omega_samples", JsonValue::integer(cmd.omega_samples));
    config.set("seed", JsonValue::integer(static_cast<long long>(common.seed)));
    config.set("threads", JsonValue::integer(env_threads()));
    config.set("trace", JsonValue::str(cmd.trace_path));
    config.set("report", JsonValue::str(cmd.report_path));
    root.set("config", std::move(config));

    JsonValue results = JsonValue::object();
    results.set("final_average", JsonValue::number(trace.final_average()));
    results.set("liminf_est", JsonValue::number(trace.liminf_est));
    results.set("limsup_est", JsonValue::number(trace.limsup_est));
    results.set("tail_window", JsonValue::array()
                                   .push(JsonValue::number(trace.tail_window_lo))
                                   .push(JsonValue::number(trace.tail_window_hi)));
    results.set("sup_abs_phi", JsonValue::number(trace.sup_abs_phi));
    results.set("complete", JsonValue::boolean(trace.complete));
    if (!trace.complete) {
        results.set("last_good_time", JsonValue::number(trace.last_good_time));
        results.set("error", JsonValue::str(trace.error));
    }

    std::optional<OmegaEstimate> omega;
    if (cmd.theorem_c || cmd.two_d) {
        omega = estimate_omega(flow, x0, cmd.omega_burn_in, cmd.omega_samples);
        JsonValue jo = JsonValue::object();
        jo.set("stable", JsonValue::boolean(omega->stable));
        jo.set("points", JsonValue::integer(static_cast<long long>(omega->points.size())));
        jo.set("hausdorff_gap", JsonValue::number(omega->hausdorff_gap));
        jo.set("burn_in_used", JsonValue::number(omega->burn_in_used));
        results.set("omega", std::move(jo));
    }
    if (cmd.theorem_c) {
        tags.push_back("TheoremC");
        const TheoremCReport c = check_theorem_c(flow, obs.fn, x0, *omega, cmd.T);
        JsonValue jc = JsonValue::object();
        jc.set("undecided", JsonValue::boolean(c.undecided));
        jc.set("inequality_holds", JsonValue::boolean(c.inequality_holds));
        jc.set("liminf_x0", JsonValue::number(c.liminf_x0));
        jc.set("max_limsup_omega", JsonValue::number(c.max_limsup_omega));
        jc.set("margin", JsonValue::number(c.margin));
        jc.set("average_stabilizes", JsonValue::boolean(c.average_stabilizes));
        jc.set("probe_horizon", JsonValue::number(c.horizon));
        results.set("theorem_c", std::move(jc));
    }
    if (cmd.two_d) {
        tags.push_back("LemmaFixedPoint");
        const TwoDPointReport td = check_2d_point(flow, x0, *omega);
        JsonValue jt = JsonValue::object();
        jt.set("is_2d_point", JsonValue::boolean(td.is_2d_point));
        jt.set("undecided", JsonValue::boolean(td.undecided));
        JsonValue fps = JsonValue::array();
        for (const Vec& p : td.fixed_points) fps.push(vec_json(p));
        jt.set("fixed_points", std::move(fps));
        results.set("two_d_point", std::move(jt));
    }
    if (!cmd.gooda11_eps.empty()) {
        tags.push_back("Gooda11");
        std::vector<double> eps_list;
        std::stringstream ss(cmd.gooda11_eps);
        std::string item;
        while (std::getline(ss, item, ',')) eps_list.push_back(std::stod(item));
        const Gooda11Report g = check_gooda11(flow, obs.fn, x0, eps_list, cmd.gooda11_kmax, cmd.gooda11_tprobe);
        JsonValue jg = JsonValue::object();
        jg.set("all_hold", JsonValue::boolean(g.all_hold));
        jg.set("undecided", JsonValue::boolean(g.undecided));
        jg.set("probe_horizon", JsonValue::number(g.probe_horizon));
        JsonValue per = JsonValue::array();
        for (const Gooda11Entry& e : g.per_epsilon) {
            JsonValue je = JsonValue::object();
            je.set("epsilon", JsonValue::number(e.epsilon));
            je.set("satisfied", JsonValue::boolean(e.satisfied));
            je.set("k_eps", JsonValue::integer(e.k_eps));
            je.set("t_eps", JsonValue::number(e.t_eps));
            per.push(std::move(je));
        }
        jg.set("per_epsilon", std::move(per));
        results.set("gooda11", std::move(jg));
    }
    if (tags.empty()) tags.push_back("TheoremC"); // the trace is its raw material
    root.set("tags", tags_json(tags));
    root.set("results", std::move(results));
    if (!cmd.report_path.empty()) write_text_file(cmd.report_path, root.dump());
    std::cout << "flow average at T=" << format_double_17(cmd.T) << ": " << format_double_17(trace.final_average())
              << (trace.complete ? "" : " [partial]") << "\n";
    return trace.complete ? 0 : 3;
}

// ----------------------------------------------------------------- bowen

struct BowenCmd {
    std::string observable = "x";
    std::string x0_text = "0.0,0.5";
    double t_max = 1e5;
    double eps = 0.1;
    std::string out_path;
    std::string trace_path;
};

int run_bowen(const BowenCmd& cmd, const CommonOpts& common) {
    const NamedObservable obs = make_observable(cmd.observable);
    const Vec x0 = parse_point(cmd.x0_text);
    BowenExperimentOptions opts;
    opts.eps = cmd.eps;
    const BowenExperimentReport rep = run_bowen_experiment(obs.fn, x0, cmd.t_max, opts);

    if (!cmd.trace_path.empty()) {
        FlowSpec flow = bowen_field(cmd.eps);
        const AverageTrace trace = time_average(flow, obs.fn, x0, cmd.t_max, 4096);
        write_text_file(cmd.trace_path, trace_csv(trace));
    }

    JsonValue root = JsonValue::object();
    root.set("command", JsonValue::str("bowen"));
    std::vector<std::string> tags = {"CorBowen"};
    if (rep.predicted == BowenClass::Convergent) tags.push_back("CorApp");
    root.set("tags", tags_json(tags));
    JsonValue config = JsonValue::object();
    config.set("observable", JsonValue::str(cmd.observable));
    config.set("x0", vec_json(x0));
    config.set("tmax", JsonValue::number(cmd.t_max));
    config.set("eps", JsonValue::number(cmd.eps));
    config.set("seed", JsonValue::integer(static_cast<long long>(common.seed)));
    config.set("threads", JsonValue::integer(env_threads()));
    config.set("out", JsonValue::str(cmd.out_path));
    config.set("trace", JsonValue::str(cmd.trace_path));
    root.set("config", std::move(config));

    JsonValue results = JsonValue::object();
    results.set("classification", JsonValue::str(bowen_class_name(rep.classification)));
    results.set("predicted", JsonValue::str(bowen_class_name(rep.predicted)));
    results.set("matches_prediction", JsonValue::boolean(rep.matches_prediction));
    results.set("final_average", JsonValue::number(rep.final_average));
    results.set("phi_A", JsonValue::number(rep.phi_a));
    results.set("phi_B", JsonValue::number(rep.phi_b));
    results.set("min_phi", JsonValue::number(rep.min_phi));
    results.set("width_min", JsonValue::number(rep.width_min));
    results.set("tol", JsonValue::number(rep.tol));
    results.set("attraction_mechanism", JsonValue::str(rep.attraction_mechanism));
    results.set("complete", JsonValue::boolean(rep.complete));
    JsonValue windows = JsonValue::array();
    for (const BowenWindow& w : rep.windows) {
        JsonValue jw = JsonValue::object();
        jw.set("horizon", JsonValue::number(w.horizon));
        jw.set("width", JsonValue::number(w.width));
        jw.set("average", JsonValue::number(w.average));
        windows.push(std::move(jw));
    }
    results.set("windows", std::move(windows));
    root.set("results", std::move(results));
    if (!cmd.out_path.empty()) write_text_file(cmd.out_path, root.dump());
    std::cout << "bowen classification: " << bowen_class_name(rep.classification)
              << " (predicted " << bowen_class_name(rep.predicted) << ")\n";
    return rep.complete ? 0 : 3;
}

// ---------------------------------------------------------- bowen-hybrid

struct HybridCmd {
    double alpha_minus = 2.0;
    double alpha_plus = 1.0;
    double beta_minus = 2.0;
    double beta_plus = 1.0;
    double a = 0.0;
    double b = 1.0;
    int epochs = 1000;
    double transit_ab = 1.0;
    double transit_ba = 1.0;
    double transit_value = 0.5;
    double initial_gap = 1e-3;
    std::string out_path;
};

int run_hybrid(const HybridCmd& cmd, const CommonOpts& common) {
    HybridDwellModel model;
    model.saddle_a = SaddleData{{-1.0, 0.0}, cmd.alpha_plus, cmd.alpha_minus};
    model.saddle_b = SaddleData{{1.0, 0.0}, cmd.beta_plus, cmd.beta_minus};
    model.value_a = cmd.a;
    model.value_b = cmd.b;
    model.transit_ab = cmd.transit_ab;
    model.transit_ba = cmd.transit_ba;
    model.transit_value = cmd.transit_value;
    model.initial_gap = cmd.initial_gap;
    const HybridResult res = hybrid_averages(model, cmd.epochs);

    JsonValue root = JsonValue::object();
    root.set("command", JsonValue::str("bowen-hybrid"));
    root.set("tags", tags_json({"CorBowen"}));
    JsonValue config = JsonValue::object();
    config.set("alpha_minus", JsonValue::number(cmd.alpha_minus));
    config.set("alpha_plus", JsonValue::number(cmd.alpha_plus));
    config.set("beta_minus", JsonValue::number(cmd.beta_minus));
    config.set("beta_plus", JsonValue::number(cmd.beta_plus));
    config.set("a", JsonValue::number(cmd.a));
    config.set("b", JsonValue::number(cmd.b));
    config.set("epochs", JsonValue::integer(cmd.epochs));
    config.set("transit_ab", JsonValue::number(cmd.transit_ab));
    config.set("transit_ba", JsonValue::number(cmd.transit_ba));
    config.set("transit_value", JsonValue::number(cmd.transit_value));
    config.set("initial_gap", JsonValue::number(cmd.initial_gap));
    config.set("seed", JsonValue::integer(static_cast<long long>(common.seed)));
    config.set("threads", JsonValue::integer(env_threads()));
    config.set("out", JsonValue::str(cmd.out_path));
    root.set("config", std::move(config));

    JsonValue results = JsonValue::object();
    results.set("lambda", JsonValue::number(res.moduli.lambda));
    results.set("sigma", JsonValue::number(res.moduli.sigma));
    results.set("lambda_sigma", JsonValue::number(res.moduli.product));
    results.set("attracting", JsonValue::boolean(res.moduli.attracting));
    results.set("attraction_mechanism",
                JsonValue::str(res.moduli.product > 1.0 + 1e-9 ? "eigenvalue" : "dissipation"));
    results.set("liminf_est", JsonValue::number(res.liminf_est));
    results.set("limsup_est", JsonValue::number(res.limsup_est));
    results.set("width", JsonValue::number(res.limsup_est - res.liminf_est));
    results.set("epochs_run", JsonValue::integer(res.epochs_run));
    results.set("saturated", JsonValue::boolean(res.saturated));
    JsonValue dwell = JsonValue::array();
    for (size_t i = 0; i < res.dwell_times.size() && i < 10; ++i) dwell.push(JsonValue::number(res.dwell_times[i]));
    results.set("first_dwell_times", std::move(dwell));
    root.set("results", std::move(results));
    if (!cmd.out_path.empty()) write_text_file(cmd.out_path, root.dump());
    std::cout << "hybrid width = " << format_double_17(res.limsup_est - res.liminf_est) << " over "
              << res.epochs_run << " epochs\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ergolab: subadditive and Birkhoff averaging laboratory"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand name
    CommonOpts common;
    app.add_option("--seed", common.seed, "seed for randomized audits")->capture_default_str();

    FeketeCmd fekete;
    fekete.gen = "n+log(n+1)";
    auto* cmd_fekete =
        app.add_subcommand("fekete", "scalar subadditive limits, lim a_n/n = inf a_n/n [Fekete, Derriennic]");
    cmd_fekete->add_option("--gen", fekete.gen, "sequence generator name")->capture_default_str();
    cmd_fekete->add_option("--c-gen", fekete.c_gen, "slack generator c_n (Derriennic variant)");
    cmd_fekete->add_option("--horizon", fekete.horizon, "evaluation horizon")->capture_default_str();
    cmd_fekete->add_option("--floor", fekete.floor, "divergence floor for a_n/n")->capture_default_str();
    cmd_fekete->add_option("--report", fekete.report_path, "JSON report path");

    CheckCmd check;
    auto* cmd_check = app.add_subcommand("check", "hypothesis checkers and the subadditive-limit equality [TheoremA, CorollaryB]");
    cmd_check->add_option("--system", check.system_path, "system JSON")->required();
    cmd_check->add_option("--process", check.process_path, "process JSON")->required();
    cmd_check->add_option("--measure", check.measure_path, "measure JSON");
    cmd_check->add_option("--epsilon", check.epsilon, "epsilon for the reported E_k family")->capture_default_str();
    cmd_check->add_option("--kmax", check.k_max, "largest k for E_k families")->capture_default_str();
    cmd_check->add_option("--nmax", check.n_max, "horizon for the R_n table")->capture_default_str();
    cmd_check->add_option("--ell-max", check.ell_max, "epsilon ladder depth (eps = 1/l)")->capture_default_str();
    cmd_check->add_option("--norm", check.norm, "cocycle norm: spectral|frobenius")->capture_default_str();
    cmd_check->add_option("--gooda-x", check.gooda_state, "also check the pointwise-limit conditions at this state [Gooda_i..Gooda_iv]");
    cmd_check->add_option("--report", check.report_path, "JSON report path (CSV sidecar written next to it)");

    KingmanCmd kingman;
    auto* cmd_kingman = app.add_subcommand("kingman", "truncation-ladder study of the limit equality [TheoremA, LemmaAssumpa]");
    cmd_kingman->add_option("--system", kingman.system_path, "system JSON")->required();
    cmd_kingman->add_option("--process", kingman.process_path, "process JSON")->required();
    cmd_kingman->add_option("--measure", kingman.measure_path, "measure JSON");
    cmd_kingman->add_option("--nmax", kingman.n_max, "horizon for the R_n table")->capture_default_str();
    cmd_kingman->add_option("--ktrunc", kingman.k_trunc, "truncation levels to sweep")->capture_default_str();
    cmd_kingman->add_option("--report", kingman.report_path, "JSON report path");

    FlowCmd flowc;
    auto* cmd_flow = app.add_subcommand("flow", "time averages along a flow [Gooda11, TheoremC, LemmaFixedPoint]");
    cmd_flow->add_option("--field", flowc.field, "sink|rotation|bowen|<field.json>")->capture_default_str();
    cmd_flow->add_option("--dim", flowc.dim, "dimension for the sink field")->capture_default_str();
    cmd_flow->add_option("--eps", flowc.eps, "dissipation strength for the bowen field")->capture_default_str();
    cmd_flow->add_option("--x0", flowc.x0_text, "start point, comma separated")->capture_default_str();
    cmd_flow->add_option("--T", flowc.T, "horizon")->capture_default_str();
    cmd_flow->add_option("--observable", flowc.observable, "observable name")->capture_default_str();
    cmd_flow->add_option("--checkpoints", flowc.checkpoints, "trace checkpoints")->capture_default_str();
    cmd_flow->add_option("--abs-tol", flowc.abs_tol, "integrator absolute tolerance")->capture_default_str();
    cmd_flow->add_option("--rel-tol", flowc.rel_tol, "integrator relative tolerance")->capture_default_str();
    cmd_flow->add_option("--max-step", flowc.max_step, "integrator max step")->capture_default_str();
    cmd_flow->add_option("--trace", flowc.trace_path, "trace CSV path");
    cmd_flow->add_option("--report", flowc.report_path, "JSON report path");
    cmd_flow->add_option("--gooda11", flowc.gooda11_eps, "epsilon list: run the integer-time membership check");
    cmd_flow->add_option("--gooda11-kmax", flowc.gooda11_kmax, "k cap for the membership check")->capture_default_str();
    cmd_flow->add_option("--gooda11-tprobe", flowc.gooda11_tprobe, "probe horizon")->capture_default_str();
    cmd_flow->add_flag("--theorem-c", flowc.theorem_c, "run the omega-limit average comparison");
    cmd_flow->add_flag("--two-d", flowc.two_d, "run the 2d-point test");
    cmd_flow->add_option("--omega-burn-in", flowc.omega_burn_in, "omega estimate burn-in")->capture_default_str();
    cmd_flow->add_option("--omega-samples", flowc.omega_samples, "omega sample cap")->capture_default_str();

    BowenCmd bowen;
    auto* cmd_bowen = app.add_subcommand("bowen", "eye-field experiment with oscillation classifier [CorBowen, CorApp]");
    cmd_bowen->add_option("--observable", bowen.observable, "x|eye-symmetric|const:<v>|file:<path>")
        ->capture_default_str();
    cmd_bowen->add_option("--x0", bowen.x0_text, "interior start point a,b")->capture_default_str();
    cmd_bowen->add_option("--tmax", bowen.t_max, "largest horizon")->capture_default_str();
    cmd_bowen->add_option("--eps", bowen.eps, "dissipation strength")->capture_default_str();
    cmd_bowen->add_option("--out", bowen.out_path, "JSON report path");
    cmd_bowen->add_option("--trace", bowen.trace_path, "trace CSV path");

    HybridCmd hybrid;
    auto* cmd_hybrid = app.add_subcommand("bowen-hybrid", "linearized dwell-time model [CorBowen]");
    cmd_hybrid->add_option("--alpha-minus", hybrid.alpha_minus, "contracting eigenvalue at A")->capture_default_str();
    cmd_hybrid->add_option("--alpha-plus", hybrid.alpha_plus, "expanding eigenvalue at A")->capture_default_str();
    cmd_hybrid->add_option("--beta-minus", hybrid.beta_minus, "contracting eigenvalue at B")->capture_default_str();
    cmd_hybrid->add_option("--beta-plus", hybrid.beta_plus, "expanding eigenvalue at B")->capture_default_str();
    cmd_hybrid->add_option("--a", hybrid.a, "observable value at A")->capture_default_str();
    cmd_hybrid->add_option("--b", hybrid.b, "observable value at B")->capture_default_str();
    cmd_hybrid->add_option("--epochs", hybrid.epochs, "epochs to run")->capture_default_str();
    cmd_hybrid->add_option("--transit-ab", hybrid.transit_ab, "travel time A->B")->capture_default_str();
    cmd_hybrid->add_option("--transit-ba", hybrid.transit_ba, "travel time B->A")->capture_default_str();
    cmd_hybrid->add_option("--transit-value", hybrid.transit_value, "observable value along connections")
        ->capture_default_str();
    cmd_hybrid->add_option("--initial-gap", hybrid.initial_gap, "entry distance seeding the dwell recurrence")
        ->capture_default_str();
    cmd_hybrid->add_option("--out", hybrid.out_path, "JSON report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_fekete->parsed()) return run_fekete(fekete, common);
        if (cmd_check->parsed()) return run_check(check, common);
        if (cmd_kingman->parsed()) return run_kingman(kingman, common);
        if (cmd_flow->parsed()) return run_flow(flowc, common);
        if (cmd_bowen->parsed()) return run_bowen(bowen, common);
        if (cmd_hybrid->parsed()) return run_hybrid(hybrid, common);
    } catch (const StructuralError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IntegrationError& e) {
        std::cerr << "integration failure: " << e.what() << " (last good time " << e.last_good_time << ")\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
