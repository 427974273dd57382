#include "ergolab/bowen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergolab/errors.hpp"

namespace ergolab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double bowen_hamiltonian(double x, double y) { return y * (x * x + y * y - 1.0); }

FlowSpec bowen_field(double eps) {
    FlowSpec flow;
    flow.name = "bowen";
    flow.dimension = 2;
    flow.field = [eps](const Vec& p, Vec& out) {
        const double x = p[0], y = p[1];
        const double h = y * (x * x + y * y - 1.0);
        const double hx = 2.0 * x * y;
        const double hy = x * x + 3.0 * y * y - 1.0;
        out[0] = hy - eps * h * hx;
        out[1] = -hx - eps * h * hy;
    };
    flow.integ.abs_tol = 1e-10;
    flow.integ.rel_tol = 1e-10;
    flow.integ.max_step = 0.25;
    return flow;
}

SaddleData saddle_data(const FlowSpec& flow, const Vec& guess) {
    const std::optional<Vec> zero = refine_field_zero(flow, guess, 1e-12, 60);
    if (!zero) throw StructuralError("saddle refinement failed from the given guess");
    const Matrix j = numerical_jacobian(flow.field, *zero, 1e-6);
    if (j.size() != 2) throw StructuralError("saddle data expects a planar field");
    const double tr = j.at(0, 0) + j.at(1, 1);
    const double det = j.at(0, 0) * j.at(1, 1) - j.at(0, 1) * j.at(1, 0);
    const double disc = tr * tr / 4.0 - det;
    if (disc < 0.0) throw StructuralError("fixed point is not a saddle (complex eigenvalues)");
    const double r = std::sqrt(disc);
    const double l1 = tr / 2.0 + r;
    const double l2 = tr / 2.0 - r;
    if (!(l1 > 0.0 && l2 < 0.0)) throw StructuralError("fixed point is not a saddle (eigenvalues not split)");
    SaddleData s;
    s.position = *zero;
    s.expanding = l1;
    s.contracting = -l2;
    return s;
}

CycleModuli cycle_moduli(const SaddleData& a, const SaddleData& b) {
    if (!(a.expanding > 0.0 && a.contracting > 0.0 && b.expanding > 0.0 && b.contracting > 0.0)) {
        throw StructuralError("cycle moduli require positive eigenvalue magnitudes");
    }
    CycleModuli m;
    m.lambda = a.contracting / b.expanding;
    m.sigma = b.contracting / a.expanding;
    m.product = m.lambda * m.sigma;
    m.attracting = a.contracting * b.contracting > a.expanding * b.expanding;
    return m;
}

HybridResult hybrid_averages(const HybridDwellModel& model, int n_epochs) {
    if (n_epochs < 2) throw StructuralError("hybrid model needs at least two epochs");
    if (!(model.initial_gap > 0.0)) throw StructuralError("initial gap must be positive");

    HybridResult res;
    res.moduli = cycle_moduli(model.saddle_a, model.saddle_b);

    double t_a = std::max(std::log(1.0 / model.initial_gap) / model.saddle_a.expanding, 1e-6);
    double total_time = 0.0;
    double total_value = 0.0; // integral of the piecewise-constant observable

    auto push_segment = [&](double duration, double value) {
        total_time += duration;
        total_value += duration * value;
        res.epoch_times.push_back(total_time);
        res.epoch_averages.push_back(total_value / total_time);
    };

    for (int k = 0; k < n_epochs; ++k) {
        if (total_time > 1e290) {
            res.saturated = true;
            break;
        }
        const double t_b = res.moduli.sigma * t_a + model.transit_ab;

        res.dwell_times.push_back(t_a);
        push_segment(t_a, model.value_a);
        res.end_of_a_average.push_back(res.epoch_averages.back());
        if (model.transit_ab > 0.0) push_segment(model.transit_ab, model.transit_value);

        res.dwell_times.push_back(t_b);
        push_segment(t_b, model.value_b);
        res.end_of_b_average.push_back(res.epoch_averages.back());
        if (model.transit_ba > 0.0) push_segment(model.transit_ba, model.transit_value);

        t_a = res.moduli.lambda * t_b + model.transit_ba;
        ++res.epochs_run;
    }

    // liminf/limsup over the tail half of the epoch record.
    const size_t n = res.end_of_a_average.size();
    double lo = kInf, hi = -kInf;
    for (size_t k = n / 2; k < n; ++k) {
        lo = std::min({lo, res.end_of_a_average[k], res.end_of_b_average[k]});
        hi = std::max({hi, res.end_of_a_average[k], res.end_of_b_average[k]});
    }
    res.liminf_est = lo == kInf ? 0.0 : lo;
    res.limsup_est = hi == -kInf ? 0.0 : hi;
    return res;
}

std::string bowen_class_name(BowenClass c) {
    switch (c) {
        case BowenClass::Oscillating: return "OSCILLATING";
        case BowenClass::Convergent: return "CONVERGENT";
        case BowenClass::Undecided: return "UNDECIDED";
    }
    return "UNDECIDED";
}

double min_phi_over_eye(const Observable& phi) {
    // Coarse grid over the closed upper eye, then window refinement.
    auto inside = [](double x, double y) { return y >= 0.0 && x * x + y * y <= 1.0 + 1e-12; };
    double best = kInf;
    double bx = 0.0, by = 0.0;
    Vec p(2);
    const int nx = 401, ny = 201;
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const double x = -1.0 + 2.0 * i / (nx - 1);
            const double y = 1.0 * j / (ny - 1);
            if (!inside(x, y)) continue;
            p[0] = x;
            p[1] = y;
            const double v = phi(p);
            if (v < best) {
                best = v;
                bx = x;
                by = y;
            }
        }
    }
    double half = 0.02;
    for (int round = 0; round < 8; ++round) {
        double nbx = bx, nby = by;
        for (int i = -10; i <= 10; ++i) {
            for (int j = -10; j <= 10; ++j) {
                double x = bx + half * i / 10.0;
                double y = by + half * j / 10.0;
                y = std::max(y, 0.0);
                const double r = std::sqrt(x * x + y * y);
                if (r > 1.0) {
                    x /= r;
                    y /= r;
                }
                p[0] = x;
                p[1] = y;
                const double v = phi(p);
                if (v < best) {
                    best = v;
                    nbx = x;
                    nby = y;
                }
            }
        }
        bx = nbx;
        by = nby;
        half *= 0.3;
    }
    return best;
}

BowenExperimentReport run_bowen_experiment(const Observable& phi, const Vec& x0, double t_max,
                                           const BowenExperimentOptions& opts) {
    if (x0.size() != 2) throw StructuralError("bowen experiment expects a planar start point");
    const double h0 = bowen_hamiltonian(x0[0], x0[1]);
    if (!(h0 < 0.0 && x0[1] > 0.0)) {
        throw StructuralError("start point must lie strictly inside the upper eye (H < 0, y > 0)");
    }
    if (t_max < 16.0) throw StructuralError("t_max too small for three doubling windows");

    const FlowSpec flow = bowen_field(opts.eps);
    const SaddleData sa = saddle_data(flow, {-1.0, 0.0});
    const SaddleData sb = saddle_data(flow, {1.0, 0.0});
    const CycleModuli moduli = cycle_moduli(sa, sb);

    BowenExperimentReport rep;
    rep.tol = opts.tol;
    rep.attraction_mechanism = moduli.product > 1.0 + 1e-9 ? "eigenvalue" : "dissipation";
    Vec p(2);
    p = sa.position;
    rep.phi_a = phi(p);
    p = sb.position;
    rep.phi_b = phi(p);
    rep.min_phi = min_phi_over_eye(phi);
    rep.width_min = 0.1 * std::fabs(rep.phi_a - rep.phi_b);

    if (std::fabs(rep.phi_a - rep.phi_b) > 1e-12) {
        rep.predicted = BowenClass::Oscillating;
    } else if (std::fabs(rep.phi_a - rep.min_phi) <= 1e-6) {
        rep.predicted = BowenClass::Convergent;
    } else {
        rep.predicted = BowenClass::Undecided;
    }

    const AverageTrace trace = time_average(flow, phi, x0, t_max, opts.n_checkpoints);
    rep.complete = trace.complete;
    rep.error = trace.error;
    rep.final_average = trace.final_average();
    for (int d = 2; d >= 0; --d) {
        const double horizon = t_max / std::pow(2.0, d);
        const auto [lo, hi] = trace.window_range(horizon / 2.0, horizon);
        rep.windows.push_back(BowenWindow{horizon, hi - lo, 0.0});
        // average at the window end: nearest checkpoint value
        double best_dt = kInf;
        for (size_t i = 0; i < trace.sample_times.size(); ++i) {
            const double dt = std::fabs(trace.sample_times[i] - horizon);
            if (dt < best_dt) {
                best_dt = dt;
                rep.windows.back().average = trace.running_average[i];
            }
        }
    }

    const double w1 = rep.windows[0].width, w2 = rep.windows[1].width, w3 = rep.windows[2].width;
    if (w1 >= w2 && w2 >= w3 && w3 < opts.tol) {
        rep.classification = BowenClass::Convergent;
    } else if (rep.width_min > 0.0 && w1 >= rep.width_min && w2 >= rep.width_min && w3 >= rep.width_min) {
        rep.classification = BowenClass::Oscillating;
    } else {
        rep.classification = BowenClass::Undecided;
    }
    rep.matches_prediction = rep.classification == rep.predicted;
    return rep;
}

DwellIntervals detect_dwell_intervals(const FlowSpec& flow, const Vec& x0, double T, double threshold) {
    DwellIntervals out;
    out.total_time = T;
    Vec f(static_cast<size_t>(flow.dimension));
    bool in_dwell = false;
    double dwell_start = 0.0;
    double prev_t = 0.0;
    PathCallbacks cb;
    cb.on_step = [&](double t, const Vec& x, double) {
        flow.field(x, f);
        double mag = 0.0;
        for (double v : f) mag += v * v;
        mag = std::sqrt(mag);
        const bool near = mag < threshold;
        if (near) out.time_near += t - prev_t;
        if (near && !in_dwell) {
            in_dwell = true;
            dwell_start = t;
        } else if (!near && in_dwell) {
            in_dwell = false;
            out.start.push_back(dwell_start);
            out.length.push_back(t - dwell_start);
        }
        prev_t = t;
    };
    integrate_path(flow, x0, T, nullptr, nullptr, &cb);
    if (in_dwell) {
        out.start.push_back(dwell_start);
        out.length.push_back(T - dwell_start);
    }
    return out;
}

} // namespace ergolab
