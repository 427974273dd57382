#include "ergolab/subadditive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ergolab/errors.hpp"

namespace ergolab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

ScalarSequence::ScalarSequence(std::function<double(int)> generator, int horizon)
    : generator_(std::move(generator)), horizon_(horizon) {
    if (horizon_ < 1) throw StructuralError("scalar sequence horizon must be >= 1");
    cache_.resize(static_cast<size_t>(horizon_) + 1, 0.0);
    have_.resize(static_cast<size_t>(horizon_) + 1, 0);
}

double ScalarSequence::at(int n) const {
    if (n < 1) throw StructuralError("scalar sequences are indexed from 1");
    if (n > horizon_) throw StructuralError("index " + std::to_string(n) + " beyond sequence horizon");
    if (!have_[static_cast<size_t>(n)]) {
        cache_[static_cast<size_t>(n)] = generator_(n);
        have_[static_cast<size_t>(n)] = 1;
    }
    return cache_[static_cast<size_t>(n)];
}

double FeketeResult::estimate() const {
    return diverged_to_minus_inf ? -kInf : inf_over_horizon;
}

namespace {

// Subadditivity audit for scalar sequences, with an optional c_n slack term.
void check_scalar_subadditivity(const ScalarSequence& a, const ScalarSequence* c, int n_max,
                                const FeketeOptions& opts) {
    const double tol = 1e-9;
    auto slack = [&](int n) { return c ? c->at(n) : 0.0; };
    auto check_pair = [&](int m, int n) {
        const double lhs = a.at(m + n);
        const double rhs = a.at(m) + a.at(n) + slack(n);
        if (lhs > rhs + tol * std::max(1.0, std::fabs(rhs))) {
            std::ostringstream msg;
            msg << "subadditivity violated at (m,n)=(" << m << "," << n << "): a_{m+n}=" << lhs
                << " > " << rhs;
            throw SubadditivityViolation(m, n, lhs, rhs, msg.str());
        }
    };
    const int exhaustive = std::min(n_max, opts.exhaustive_horizon);
    for (int m = 1; m < exhaustive; ++m) {
        for (int n = 1; m + n <= exhaustive; ++n) check_pair(m, n);
    }
    if (n_max > exhaustive) {
        std::mt19937_64 rng(opts.seed);
        std::uniform_int_distribution<int> pick(1, n_max - 1);
        for (int i = 0; i < opts.sample_pairs; ++i) {
            const int m = pick(rng);
            if (m + 1 > n_max) continue;
            std::uniform_int_distribution<int> pick_n(1, n_max - m);
            check_pair(m, pick_n(rng));
        }
    }
}

} // namespace

FeketeResult fekete_limit(const ScalarSequence& seq, int n_max, const FeketeOptions& opts) {
    if (n_max < 1 || n_max > seq.horizon()) throw StructuralError("fekete horizon out of range");
    check_scalar_subadditivity(seq, nullptr, n_max, opts);
    FeketeResult res;
    res.floor_used = opts.divergence_floor;
    res.inf_over_horizon = kInf;
    for (int n = 1; n <= n_max; ++n) {
        const double v = seq.at(n) / n;
        if (v < res.inf_over_horizon) {
            res.inf_over_horizon = v;
            res.argmin_n = n;
        }
        if (v < opts.divergence_floor) res.diverged_to_minus_inf = true;
    }
    return res;
}

DerriennicResult derriennic_limit(const ScalarSequence& a, const ScalarSequence& c, int n_max,
                                  const FeketeOptions& opts) {
    if (n_max < 2 || n_max > a.horizon() || n_max > c.horizon()) {
        throw StructuralError("derriennic horizon out of range");
    }
    for (int n = 1; n <= n_max; ++n) {
        if (c.at(n) < 0.0) throw StructuralError("derriennic requires c_n >= 0 (violated at n=" + std::to_string(n) + ")");
    }
    check_scalar_subadditivity(a, &c, n_max, opts);

    // c_n/n -> 0 over the horizon: the tail-window max must show decay
    // against the head window (or already be negligible).
    double head_max = 0.0, tail_max = 0.0;
    for (int n = 1; n <= n_max / 2; ++n) head_max = std::max(head_max, c.at(n) / n);
    for (int n = n_max / 2 + 1; n <= n_max; ++n) tail_max = std::max(tail_max, c.at(n) / n);
    if (!(tail_max <= 0.75 * head_max || tail_max <= 1e-3)) {
        throw StructuralError("c_n/n shows no decay over the horizon (tail max " + std::to_string(tail_max) + ")");
    }

    DerriennicResult res;
    res.estimate = a.at(n_max) / n_max;
    res.tail_c_over_n = tail_max;
    res.inf_over_horizon = kInf;
    for (int n = 1; n <= n_max; ++n) res.inf_over_horizon = std::min(res.inf_over_horizon, a.at(n) / n);
    return res;
}

SubadditiveProcess SubadditiveProcess::additive(std::string observable_name) {
    SubadditiveProcess p;
    p.kind_ = Kind::Additive;
    p.observable_name_ = std::move(observable_name);
    return p;
}

SubadditiveProcess SubadditiveProcess::matrix_cocycle(std::vector<Matrix> per_state, MatrixNorm norm) {
    SubadditiveProcess p;
    p.kind_ = Kind::MatrixCocycle;
    p.matrices_ = std::move(per_state);
    p.norm_ = norm;
    return p;
}

SubadditiveProcess SubadditiveProcess::custom(Generator gen, double beta_hint) {
    SubadditiveProcess p;
    p.kind_ = Kind::Custom;
    p.generator_ = std::move(gen);
    p.beta_hint_ = beta_hint;
    return p;
}

void SubadditiveProcess::validate(const DiscreteSystem& sys) const {
    if (kind_ == Kind::Additive) {
        if (!sys.has_observable(observable_name_)) {
            throw StructuralError("process references unknown observable '" + observable_name_ + "'");
        }
    } else if (kind_ == Kind::MatrixCocycle) {
        if (static_cast<int>(matrices_.size()) != sys.n_states()) {
            throw StructuralError("cocycle needs one matrix per state");
        }
        const int d = matrices_.empty() ? 0 : matrices_[0].size();
        if (d == 0) throw StructuralError("cocycle matrices must be nonempty and square");
        for (const Matrix& m : matrices_) {
            if (m.size() != d) throw StructuralError("cocycle matrices must share one square dimension");
        }
    }
}

double SubadditiveProcess::evaluate_raw(const DiscreteSystem& sys, StateId x, int n) const {
    if (n < 1) throw StructuralError("phi_n requires n >= 1");
    switch (kind_) {
        case Kind::Additive: {
            const std::vector<double>& phi = sys.observable(observable_name_);
            double sum = 0.0;
            StateId cur = x;
            for (int j = 0; j < n; ++j) {
                sum += phi[static_cast<size_t>(cur)];
                cur = sys.apply(cur);
            }
            return sum;
        }
        case Kind::MatrixCocycle: {
            validate(sys);
            // Product A(f^{n-1}x)...A(x), normalized each step; the log of
            // the running Frobenius scale keeps huge/tiny products in range.
            Matrix prod = matrices_[static_cast<size_t>(x)];
            double logscale = 0.0;
            StateId cur = sys.apply(x);
            for (int j = 1; j < n; ++j) {
                prod = matrices_[static_cast<size_t>(cur)] * prod;
                const double f = frobenius_norm(prod);
                if (f == 0.0) return -kInf;
                logscale += std::log(f);
                prod = prod.scaled(1.0 / f);
                cur = sys.apply(cur);
            }
            const double nm = matrix_norm(prod, norm_);
            if (nm == 0.0) return -kInf;
            return logscale + std::log(nm);
        }
        case Kind::Custom:
            return generator_(sys, x, n);
    }
    throw StructuralError("unreachable process kind");
}

double SubadditiveProcess::evaluate(const DiscreteSystem& sys, StateId x, int n) const {
    const double v = evaluate_raw(sys, x, n);
    if (truncation_ > 0) return std::max(v, -static_cast<double>(truncation_) * n);
    return v;
}

double SubadditiveProcess::beta(const DiscreteSystem& sys) const {
    double b = -kInf;
    for (StateId x = 0; x < sys.n_states(); ++x) b = std::max(b, evaluate(sys, x, 1));
    if (kind_ == Kind::Custom && !(b > -kInf)) b = beta_hint_;
    return b;
}

std::vector<std::vector<double>> SubadditiveProcess::phi_table(const DiscreteSystem& sys, int n_max) const {
    if (n_max < 1) throw StructuralError("phi table horizon must be >= 1");
    const int ns = sys.n_states();
    std::vector<std::vector<double>> table(static_cast<size_t>(n_max),
                                           std::vector<double>(static_cast<size_t>(ns), 0.0));
    auto truncated = [&](double v, int n) {
        if (truncation_ > 0) return std::max(v, -static_cast<double>(truncation_) * n);
        return v;
    };
    if (kind_ == Kind::Additive) {
        const std::vector<double>& phi = sys.observable(observable_name_);
        std::vector<double> run(phi.begin(), phi.end());
        std::vector<StateId> front(static_cast<size_t>(ns));
        for (StateId x = 0; x < ns; ++x) front[static_cast<size_t>(x)] = sys.apply(x);
        for (int n = 1; n <= n_max; ++n) {
            for (StateId x = 0; x < ns; ++x) table[static_cast<size_t>(n - 1)][static_cast<size_t>(x)] =
                truncated(run[static_cast<size_t>(x)], n);
            if (n == n_max) break;
            for (StateId x = 0; x < ns; ++x) {
                run[static_cast<size_t>(x)] += phi[static_cast<size_t>(front[static_cast<size_t>(x)])];
                front[static_cast<size_t>(x)] = sys.apply(front[static_cast<size_t>(x)]);
            }
        }
        return table;
    }
    if (kind_ == Kind::MatrixCocycle) {
        validate(sys);
        std::vector<Matrix> prod;
        std::vector<double> logscale(static_cast<size_t>(ns), 0.0);
        std::vector<StateId> front(static_cast<size_t>(ns));
        std::vector<char> dead(static_cast<size_t>(ns), 0);
        prod.reserve(static_cast<size_t>(ns));
        for (StateId x = 0; x < ns; ++x) {
            prod.push_back(matrices_[static_cast<size_t>(x)]);
            front[static_cast<size_t>(x)] = sys.apply(x);
        }
        for (int n = 1; n <= n_max; ++n) {
            for (StateId x = 0; x < ns; ++x) {
                double v;
                if (dead[static_cast<size_t>(x)]) {
                    v = -kInf;
                } else {
                    const double nm = matrix_norm(prod[static_cast<size_t>(x)], norm_);
                    v = (nm == 0.0) ? -kInf : logscale[static_cast<size_t>(x)] + std::log(nm);
                }
                table[static_cast<size_t>(n - 1)][static_cast<size_t>(x)] = truncated(v, n);
            }
            if (n == n_max) break;
            for (StateId x = 0; x < ns; ++x) {
                if (dead[static_cast<size_t>(x)]) continue;
                prod[static_cast<size_t>(x)] =
                    matrices_[static_cast<size_t>(front[static_cast<size_t>(x)])] * prod[static_cast<size_t>(x)];
                const double f = frobenius_norm(prod[static_cast<size_t>(x)]);
                if (f == 0.0) {
                    dead[static_cast<size_t>(x)] = 1;
                } else {
                    logscale[static_cast<size_t>(x)] += std::log(f);
                    prod[static_cast<size_t>(x)] = prod[static_cast<size_t>(x)].scaled(1.0 / f);
                }
                front[static_cast<size_t>(x)] = sys.apply(front[static_cast<size_t>(x)]);
            }
        }
        return table;
    }
    for (int n = 1; n <= n_max; ++n) {
        for (StateId x = 0; x < ns; ++x) {
            table[static_cast<size_t>(n - 1)][static_cast<size_t>(x)] = evaluate(sys, x, n);
        }
    }
    return table;
}

SubadditiveProcess truncate(const SubadditiveProcess& base, int k) {
    if (k < 1) throw StructuralError("truncation level must be >= 1");
    SubadditiveProcess out = base;
    out.truncation_ = base.truncation_ > 0 ? std::min(base.truncation_, k) : k;
    return out;
}

std::optional<SubadditivityWitness> audit_subadditivity(const SubadditiveProcess& proc, const DiscreteSystem& sys,
                                                        int horizon, double tol, const FeketeOptions& opts) {
    auto check = [&](StateId x, int m, int n) -> std::optional<SubadditivityWitness> {
        const double lhs = proc.evaluate(sys, x, m + n);
        const double rhs = proc.evaluate(sys, x, m) + proc.evaluate(sys, sys.iterate(x, m), n);
        if (lhs > rhs + tol * std::max(1.0, std::fabs(rhs))) {
            return SubadditivityWitness{x, m, n, lhs, rhs};
        }
        return std::nullopt;
    };
    const int exhaustive = std::min(horizon, opts.exhaustive_horizon);
    for (StateId x = 0; x < sys.n_states(); ++x) {
        for (int m = 1; m < exhaustive; ++m) {
            for (int n = 1; m + n <= exhaustive; ++n) {
                if (auto w = check(x, m, n)) return w;
            }
        }
    }
    if (horizon > exhaustive) {
        std::mt19937_64 rng(opts.seed);
        std::uniform_int_distribution<int> pick_x(0, sys.n_states() - 1);
        std::uniform_int_distribution<int> pick_m(1, horizon - 1);
        for (int i = 0; i < opts.sample_pairs; ++i) {
            const int m = pick_m(rng);
            std::uniform_int_distribution<int> pick_n(1, horizon - m);
            if (auto w = check(pick_x(rng), m, pick_n(rng))) return w;
        }
    }
    return std::nullopt;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

SubadditiveProcess load_process_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw StructuralError(std::string("process document is not valid JSON: ") + e.what());
    }
    SubadditiveProcess proc = [&]() {
        const std::string kind = j.contains("kind") ? j["kind"].get<std::string>()
                                                    : (j.contains("matrices") ? "matrix_cocycle" : "");
        if (kind == "additive") {
            if (!j.contains("observable")) throw StructuralError("additive process requires an 'observable' name");
            return SubadditiveProcess::additive(j["observable"].get<std::string>());
        }
        if (kind == "matrix_cocycle") {
            if (!j.contains("matrices")) throw StructuralError("matrix cocycle requires a 'matrices' array");
            std::vector<Matrix> mats;
            for (const auto& raw : j["matrices"]) {
                std::vector<double> flat = raw.get<std::vector<double>>();
                const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(flat.size()))));
                if (static_cast<size_t>(d) * d != flat.size()) {
                    throw StructuralError("cocycle matrix entries must form a square row-major matrix");
                }
                mats.emplace_back(d, std::move(flat));
            }
            MatrixNorm norm = MatrixNorm::Spectral;
            if (j.contains("norm")) {
                const std::string n = j["norm"].get<std::string>();
                if (n == "frobenius") norm = MatrixNorm::Frobenius;
                else if (n != "spectral") throw StructuralError("norm must be 'spectral' or 'frobenius'");
            }
            return SubadditiveProcess::matrix_cocycle(std::move(mats), norm);
        }
        throw StructuralError("process document requires kind 'additive' or 'matrix_cocycle'");
    }();
    if (j.contains("gamma")) proc.set_gamma(j["gamma"].get<double>());
    if (j.contains("truncate_k")) return truncate(proc, j["truncate_k"].get<int>());
    return proc;
}

SubadditiveProcess load_process_file(const std::string& path) { return load_process_json(read_file(path)); }

} // namespace ergolab
