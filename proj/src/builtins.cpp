#include "ergolab/builtins.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "ergolab/bowen.hpp"
#include "ergolab/errors.hpp"

namespace ergolab {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct PolyTerm {
    double coef;
    std::vector<int> powers;
};

std::vector<PolyTerm> parse_terms(const nlohmann::json& j) {
    std::vector<PolyTerm> terms;
    for (const auto& t : j) {
        PolyTerm term;
        term.coef = t.at("coef").get<double>();
        term.powers = t.at("powers").get<std::vector<int>>();
        terms.push_back(std::move(term));
    }
    return terms;
}

double eval_terms(const std::vector<PolyTerm>& terms, const Vec& p) {
    double sum = 0.0;
    for (const PolyTerm& t : terms) {
        double v = t.coef;
        for (size_t i = 0; i < t.powers.size() && i < p.size(); ++i) {
            for (int k = 0; k < t.powers[i]; ++k) v *= p[i];
        }
        sum += v;
    }
    return sum;
}

} // namespace

FlowSpec make_flow(const std::string& spec, int dim, double eps) {
    if (spec == "sink") {
        FlowSpec flow;
        flow.name = "sink";
        flow.dimension = dim;
        flow.field = [](const Vec& p, Vec& out) {
            for (size_t i = 0; i < p.size(); ++i) out[i] = -p[i];
        };
        return flow;
    }
    if (spec == "rotation") {
        FlowSpec flow;
        flow.name = "rotation";
        flow.dimension = 2;
        flow.field = [](const Vec& p, Vec& out) {
            out[0] = -p[1];
            out[1] = p[0];
        };
        return flow;
    }
    if (spec == "bowen") return bowen_field(eps);

    // Polynomial vector field from a JSON document.
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(spec));
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("field document is not valid JSON: ") + e.what());
    }
    const int d = j.at("dimension").get<int>();
    if (d < 1) throw StructuralError("field dimension must be positive");
    std::vector<std::vector<PolyTerm>> comps;
    for (const auto& c : j.at("components")) comps.push_back(parse_terms(c));
    if (static_cast<int>(comps.size()) != d) throw StructuralError("field needs one component list per dimension");
    FlowSpec flow;
    flow.name = spec;
    flow.dimension = d;
    flow.field = [comps](const Vec& p, Vec& out) {
        for (size_t i = 0; i < comps.size(); ++i) out[i] = eval_terms(comps[i], p);
    };
    return flow;
}

NamedObservable make_observable(const std::string& spec) {
    if (spec.empty()) throw StructuralError("observable name must be nonempty");
    if (spec == "x") return {"x", [](const Vec& p) { return p[0]; }};
    if (spec == "x2") return {"x2", [](const Vec& p) { return p[0] * p[0]; }};
    if (spec == "norm2") {
        return {"norm2", [](const Vec& p) {
                    double s = 0.0;
                    for (double v : p) s += v * v;
                    return s;
                }};
    }
    if (spec == "cos") {
        return {"cos", [](const Vec& p) {
                    double s = 0.0;
                    for (double v : p) s += v * v;
                    const double r = std::sqrt(s);
                    return r > 0.0 ? p[0] / r : 1.0;
                }};
    }
    if (spec == "eye-symmetric") {
        return {"eye-symmetric", [](const Vec& p) {
                    const double a = p[0] * p[0] - 1.0;
                    return a * a + p[1] * p[1];
                }};
    }
    if (spec.rfind("const:", 0) == 0) {
        const double c = std::stod(spec.substr(6));
        return {spec, [c](const Vec&) { return c; }};
    }
    if (spec.rfind("file:", 0) == 0) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(spec.substr(5)));
        } catch (const nlohmann::json::exception& e) {
            throw StructuralError(std::string("observable document is not valid JSON: ") + e.what());
        }
        auto terms = parse_terms(j.at("terms"));
        return {spec, [terms](const Vec& p) { return eval_terms(terms, p); }};
    }
    throw StructuralError("unknown observable '" + spec + "'");
}

ScalarSequence make_scalar_sequence(const std::string& spec, int horizon) {
    if (spec == "n+log(n+1)") {
        return ScalarSequence([](int n) { return n + std::log(n + 1.0); }, horizon);
    }
    if (spec == "sqrt(n)") {
        return ScalarSequence([](int n) { return std::sqrt(static_cast<double>(n)); }, horizon);
    }
    if (spec == "n+sqrt(n)") {
        return ScalarSequence([](int n) { return n + std::sqrt(static_cast<double>(n)); }, horizon);
    }
    if (spec.rfind("linear:", 0) == 0) {
        const double c = std::stod(spec.substr(7));
        return ScalarSequence([c](int n) { return c * n; }, horizon);
    }
    if (spec.rfind("affine:", 0) == 0) {
        const std::string rest = spec.substr(7);
        const size_t comma = rest.find(',');
        if (comma == std::string::npos) throw StructuralError("affine generator needs 'affine:a,b'");
        const double a = std::stod(rest.substr(0, comma));
        const double b = std::stod(rest.substr(comma + 1));
        if (b < 0.0) throw StructuralError("affine:a,b requires b >= 0 for subadditivity");
        return ScalarSequence([a, b](int n) { return a * n + b; }, horizon);
    }
    throw StructuralError("unknown scalar generator '" + spec + "'");
}

} // namespace ergolab
