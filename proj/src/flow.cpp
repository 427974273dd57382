#include "ergolab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ergolab/errors.hpp"

namespace ergolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dormand-Prince 5(4) tableau.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84;
constexpr double E1 = 35.0 / 384 - 5179.0 / 57600, E3 = 500.0 / 1113 - 7571.0 / 16695,
                 E4 = 125.0 / 192 - 393.0 / 640, E5 = -2187.0 / 6784 + 92097.0 / 339200,
                 E6 = 11.0 / 84 - 187.0 / 2100, E7 = -1.0 / 40;

struct PhiStats {
    double sup_abs = 0.0;
    double lo = kInf;
    double hi = -kInf;
    void feed(double v) {
        sup_abs = std::max(sup_abs, std::fabs(v));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
};

class PathDriver {
public:
    PathDriver(const FlowSpec& flow, const Observable* phi, double max_displacement)
        : flow_(flow), phi_(phi), dim_(flow.dimension), m_(flow.dimension + (phi ? 1 : 0)),
          max_disp_(max_displacement) {
        if (dim_ <= 0) throw StructuralError("flow dimension must be positive");
        xs_.resize(static_cast<size_t>(dim_));
        fs_.resize(static_cast<size_t>(dim_));
        for (auto* k : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_}) k->resize(static_cast<size_t>(m_));
        ytmp_.resize(static_cast<size_t>(m_));
        ynew_.resize(static_cast<size_t>(m_));
    }

    PathResult run(const Vec& x0, double T, const std::vector<double>* hit_times, const PathCallbacks* cb) {
        if (static_cast<int>(x0.size()) != dim_) throw StructuralError("initial state dimension mismatch");
        if (T < 0.0) throw StructuralError("integration time must be nonnegative");
        y_.assign(x0.begin(), x0.end());
        y_.resize(static_cast<size_t>(m_), 0.0);
        t_ = 0.0;
        if (phi_) stats_.feed((*phi_)(x0));

        size_t hit_idx = 0;
        if (hit_times) {
            while (hit_idx < hit_times->size() && (*hit_times)[hit_idx] <= 0.0) ++hit_idx;
        }
        double h = std::min(flow_.integ.initial_step, flow_.integ.max_step);
        bool have_k1 = false;
        int rejects_in_a_row = 0;

        while (t_ < T) {
            double t_stop = T;
            bool stop_is_hit = false;
            if (hit_times && hit_idx < hit_times->size() && (*hit_times)[hit_idx] <= T) {
                t_stop = (*hit_times)[hit_idx];
                stop_is_hit = true;
            }
            if (stop_is_hit && t_stop <= t_ + 1e-13 * std::max(1.0, std::fabs(t_stop))) {
                // Hit time (numerically) already reached.
                if (cb && cb->on_hit) cb->on_hit(t_stop, state(), integral());
                ++hit_idx;
                continue;
            }

            if (!have_k1) {
                deriv(y_, k1_);
                have_k1 = true;
            }
            double fmag = 0.0;
            for (int i = 0; i < dim_; ++i) fmag += k1_[static_cast<size_t>(i)] * k1_[static_cast<size_t>(i)];
            fmag = std::sqrt(fmag);
            if (fmag < flow_.integ.lin_patch_threshold) {
                if (run_patch(t_stop, cb)) {
                    have_k1 = false;
                    if (stop_is_hit && t_ >= t_stop) {
                        if (cb && cb->on_hit) cb->on_hit(t_, state(), integral());
                        ++hit_idx;
                    }
                    continue;
                }
            }

            double h_try = std::min({h, flow_.integ.max_step, t_stop - t_});
            if (max_disp_ > 0.0 && fmag > 0.0) h_try = std::min(h_try, max_disp_ / fmag);
            bool landing = false;
            if (t_ + h_try >= t_stop - 1e-14 * std::max(1.0, std::fabs(t_stop))) {
                h_try = t_stop - t_;
                landing = true;
            }
            if (h_try < 1e-14 * std::max(1.0, std::fabs(t_))) {
                throw IntegrationError(t_, state(), "step size underflow at t=" + std::to_string(t_));
            }

            const double err = rk_step(h_try);
            ++steps_;
            if (steps_ > flow_.integ.max_steps) {
                throw IntegrationError(t_, state(), "step budget exhausted");
            }
            if (err <= 1.0) {
                rejects_in_a_row = 0;
                y_.swap(ynew_);
                k1_.swap(k7_); // FSAL
                t_ = landing ? t_stop : t_ + h_try;
                project_into_domain();
                if (cb && cb->on_step) cb->on_step(t_, state(), integral());
                if (landing && stop_is_hit) {
                    if (cb && cb->on_hit) cb->on_hit(t_, state(), integral());
                    ++hit_idx;
                }
                const double grow = err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
                // Keep controller memory across landings: a stop-capped step
                // says nothing about the error-optimal size.
                h = landing ? std::max(h, h_try * grow) : h_try * grow;
            } else {
                if (++rejects_in_a_row > 60) {
                    throw IntegrationError(t_, state(), "step control stalled (60 consecutive rejections)");
                }
                h = h_try * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
            }
        }

        PathResult out;
        out.x = state();
        out.integral = integral();
        out.sup_abs_phi = stats_.sup_abs;
        out.min_phi = stats_.lo == kInf ? 0.0 : stats_.lo;
        out.max_phi = stats_.hi == -kInf ? 0.0 : stats_.hi;
        out.steps = steps_;
        return out;
    }

private:
    Vec state() const { return Vec(y_.begin(), y_.begin() + dim_); }
    double integral() const { return phi_ ? y_[static_cast<size_t>(dim_)] : 0.0; }

    void field_at(const Vec& y, Vec& out) {
        std::copy(y.begin(), y.begin() + dim_, xs_.begin());
        flow_.field(xs_, out);
    }

    void deriv(const Vec& y, Vec& dy) {
        std::copy(y.begin(), y.begin() + dim_, xs_.begin());
        flow_.field(xs_, fs_);
        std::copy(fs_.begin(), fs_.end(), dy.begin());
        if (phi_) {
            const double v = (*phi_)(xs_);
            dy[static_cast<size_t>(dim_)] = v;
            stats_.feed(v);
        }
    }

    static double norm(const Vec& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    }

    // One embedded step from (t_, y_) of size h into ynew_, returning the
    // scaled error norm (accept when <= 1).
    double rk_step(double h) {
        const size_t m = static_cast<size_t>(m_);
        auto stage = [&](const std::initializer_list<std::pair<double, const Vec*>>& terms, Vec& k_out) {
            for (size_t i = 0; i < m; ++i) {
                double acc = y_[i];
                for (const auto& [c, k] : terms) acc += h * c * (*k)[i];
                ytmp_[i] = acc;
            }
            deriv(ytmp_, k_out);
        };
        stage({{A21, &k1_}}, k2_);
        stage({{A31, &k1_}, {A32, &k2_}}, k3_);
        stage({{A41, &k1_}, {A42, &k2_}, {A43, &k3_}}, k4_);
        stage({{A51, &k1_}, {A52, &k2_}, {A53, &k3_}, {A54, &k4_}}, k5_);
        stage({{A61, &k1_}, {A62, &k2_}, {A63, &k3_}, {A64, &k4_}, {A65, &k5_}}, k6_);
        for (size_t i = 0; i < m; ++i) {
            ynew_[i] = y_[i] + h * (B1 * k1_[i] + B3 * k3_[i] + B4 * k4_[i] + B5 * k5_[i] + B6 * k6_[i]);
        }
        deriv(ynew_, k7_);
        double err2 = 0.0;
        for (size_t i = 0; i < m; ++i) {
            const double e = h * (E1 * k1_[i] + E3 * k3_[i] + E4 * k4_[i] + E5 * k5_[i] + E6 * k6_[i] + E7 * k7_[i]);
            const double sc = flow_.integ.abs_tol +
                              flow_.integ.rel_tol * std::max(std::fabs(y_[i]), std::fabs(ynew_[i]));
            err2 += (e / sc) * (e / sc);
        }
        return std::sqrt(err2 / m);
    }

    void project_into_domain() {
        if (!flow_.domain || !flow_.domain->project) return;
        for (int i = 0; i < dim_; ++i) {
            y_[static_cast<size_t>(i)] =
                std::clamp(y_[static_cast<size_t>(i)], flow_.domain->lo[static_cast<size_t>(i)],
                           flow_.domain->hi[static_cast<size_t>(i)]);
        }
    }

    // Local linearization around the nearest refined zero. Advances until
    // the field magnitude re-enters the nonlinear region or t_stop. Returns
    // false when no usable zero is found (caller falls back to RK).
    bool run_patch(double t_stop, const PathCallbacks* cb) {
        Vec x = state();
        field_at(y_, fs_);
        const double fmag0 = norm(fs_);
        auto phi_here = [&](const Vec& p) { return phi_ ? (*phi_)(p) : 0.0; };

        if (fmag0 == 0.0) {
            // Exact equilibrium: the state never moves again.
            if (phi_) {
                const double v = phi_here(x);
                stats_.feed(v);
                y_[static_cast<size_t>(dim_)] += v * (t_stop - t_);
            }
            t_ = t_stop;
            ++steps_;
            if (cb && cb->on_step) cb->on_step(t_, state(), integral());
            return true;
        }

        std::optional<Vec> zero = refine_field_zero(flow_, x, 1e-13, 30);
        if (!zero) return false;
        double dist = 0.0;
        for (int i = 0; i < dim_; ++i) dist += (x[static_cast<size_t>(i)] - (*zero)[static_cast<size_t>(i)]) *
                                               (x[static_cast<size_t>(i)] - (*zero)[static_cast<size_t>(i)]);
        if (std::sqrt(dist) > 0.5) return false;

        const Matrix jac = numerical_jacobian(flow_.field, *zero, 1e-6);
        double h_sub = std::min(flow_.integ.max_step, t_stop - t_);
        Matrix expj = matrix_exponential(jac.scaled(h_sub));
        double expj_h = h_sub;
        const double exit_mag = 2.0 * flow_.integ.lin_patch_threshold;

        Vec delta(static_cast<size_t>(dim_));
        while (t_ < t_stop) {
            const double hs = std::min(h_sub, t_stop - t_);
            if (hs != expj_h) {
                expj = matrix_exponential(jac.scaled(hs));
                expj_h = hs;
            }
            for (int i = 0; i < dim_; ++i) delta[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] -
                                                                            (*zero)[static_cast<size_t>(i)];
            const Vec moved = expj.apply(delta);
            Vec xn = *zero;
            for (int i = 0; i < dim_; ++i) xn[static_cast<size_t>(i)] += moved[static_cast<size_t>(i)];
            if (phi_) {
                const double va = phi_here(x);
                const double vb = phi_here(xn);
                stats_.feed(va);
                stats_.feed(vb);
                y_[static_cast<size_t>(dim_)] += hs * 0.5 * (va + vb);
            }
            const bool land = hs >= t_stop - t_;
            x = xn;
            for (int i = 0; i < dim_; ++i) y_[static_cast<size_t>(i)] = x[static_cast<size_t>(i)];
            t_ = land ? t_stop : t_ + hs;
            ++steps_;
            if (steps_ > flow_.integ.max_steps) throw IntegrationError(t_, state(), "step budget exhausted");
            if (cb && cb->on_step) cb->on_step(t_, state(), integral());
            field_at(y_, fs_);
            if (norm(fs_) >= exit_mag) return true;
        }
        return true;
    }

    const FlowSpec& flow_;
    const Observable* phi_;
    int dim_;
    int m_;
    double max_disp_;
    Vec y_, xs_, fs_;
    Vec k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_;
    double t_ = 0.0;
    long long steps_ = 0;
    PhiStats stats_;
};

} // namespace

Vec integrate(const FlowSpec& flow, const Vec& x0, double t) {
    PathDriver driver(flow, nullptr, 0.0);
    return driver.run(x0, t, nullptr, nullptr).x;
}

PathResult integrate_path(const FlowSpec& flow, const Vec& x0, double T, const Observable* phi,
                          const std::vector<double>* hit_times, const PathCallbacks* cb, double max_displacement) {
    PathDriver driver(flow, phi, max_displacement);
    return driver.run(x0, T, hit_times, cb);
}

std::pair<double, double> AverageTrace::window_range(double lo, double hi) const {
    double wmin = kInf, wmax = -kInf;
    for (size_t i = 0; i < sample_times.size(); ++i) {
        if (sample_times[i] >= lo && sample_times[i] <= hi) {
            wmin = std::min(wmin, running_average[i]);
            wmax = std::max(wmax, running_average[i]);
        }
    }
    if (wmin == kInf) return {0.0, 0.0};
    return {wmin, wmax};
}

AverageTrace time_average(const FlowSpec& flow, const Observable& phi, const Vec& x0, double T, int n_checkpoints) {
    if (T <= 0.0) throw StructuralError("time average requires T > 0");
    if (n_checkpoints < 2) throw StructuralError("need at least two checkpoints");

    std::vector<double> times;
    times.reserve(static_cast<size_t>(n_checkpoints));
    const double t_min = std::max(T * 1e-4, 1e-8);
    const double ratio = std::pow(T / t_min, 1.0 / (n_checkpoints - 1));
    double cur = t_min;
    for (int i = 0; i < n_checkpoints; ++i) {
        times.push_back(std::min(cur, T));
        cur *= ratio;
    }
    times.back() = T;
    times.erase(std::unique(times.begin(), times.end()), times.end());

    AverageTrace trace;
    PathCallbacks cb;
    cb.on_hit = [&](double t, const Vec&, double integral) {
        trace.sample_times.push_back(t);
        trace.running_average.push_back(integral / t);
    };
    try {
        const PathResult res = integrate_path(flow, x0, T, &phi, &times, &cb);
        trace.sup_abs_phi = res.sup_abs_phi;
        trace.min_phi = res.min_phi;
        trace.max_phi = res.max_phi;
        trace.last_good_time = T;
    } catch (const IntegrationError& e) {
        trace.complete = false;
        trace.last_good_time = e.last_good_time;
        trace.error = e.what();
    }
    trace.tail_window_lo = T / 2.0;
    trace.tail_window_hi = T;
    const auto [lo, hi] = trace.window_range(trace.tail_window_lo, trace.tail_window_hi);
    trace.liminf_est = lo;
    trace.limsup_est = hi;
    return trace;
}

PsiReduction psi_reduce(const FlowSpec& flow_in, const Observable& phi) {
    PsiReduction red;
    // Captured by value: the reduction outlives the caller's FlowSpec.
    const FlowSpec flow = flow_in;
    red.psi = [flow, phi](const Vec& y) {
        return integrate_path(flow, y, 1.0, &phi).integral;
    };
    red.unit_map = [flow](const Vec& y) { return integrate(flow, y, 1.0); };
    red.discrete_average = [flow, phi](const Vec& y, int n) {
        if (n < 1) throw StructuralError("discrete average requires n >= 1");
        Vec cur = y;
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            sum += integrate_path(flow, cur, 1.0, &phi).integral;
            cur = integrate(flow, cur, 1.0);
        }
        return sum / n;
    };
    red.continuous_average = [flow, phi](const Vec& y, double T) {
        return integrate_path(flow, y, T, &phi).integral / T;
    };
    return red;
}

double boundary_term(const FlowSpec& flow, const Observable& phi, const Vec& y, double T) {
    if (T <= 0.0) throw StructuralError("boundary term requires T > 0");
    const double floor_T = std::floor(T);
    double i_floor = 0.0;
    std::vector<double> hits = {floor_T};
    PathCallbacks cb;
    cb.on_hit = [&](double, const Vec&, double integral) { i_floor = integral; };
    const PathResult res = integrate_path(flow, y, T, &phi, floor_T > 0.0 ? &hits : nullptr, &cb);
    return std::fabs(res.integral - i_floor) / T;
}

namespace {

struct CellAccum {
    Vec sum;
    long long count = 0;
    double time_weight = 0.0;
};

using CellMap = std::map<std::vector<int32_t>, CellAccum>;

std::vector<int32_t> cell_key(const Vec& x, double res) {
    std::vector<int32_t> key(x.size());
    for (size_t i = 0; i < x.size(); ++i) key[i] = static_cast<int32_t>(std::floor(x[i] / res));
    return key;
}

std::vector<Vec> centroids_of(const CellMap& cells) {
    std::vector<Vec> pts;
    pts.reserve(cells.size());
    for (const auto& [key, acc] : cells) {
        Vec c(acc.sum.size());
        for (size_t i = 0; i < c.size(); ++i) c[i] = acc.sum[i] / acc.count;
        pts.push_back(std::move(c));
    }
    return pts;
}

double hausdorff_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    if (a.empty() || b.empty()) return kInf;
    auto one_sided = [](const std::vector<Vec>& from, const std::vector<Vec>& to) {
        double worst = 0.0;
        for (const Vec& p : from) {
            double best = kInf;
            for (const Vec& q : to) {
                double d2 = 0.0;
                for (size_t i = 0; i < p.size(); ++i) d2 += (p[i] - q[i]) * (p[i] - q[i]);
                best = std::min(best, d2);
            }
            worst = std::max(worst, best);
        }
        return std::sqrt(worst);
    };
    return std::max(one_sided(a, b), one_sided(b, a));
}

} // namespace

OmegaEstimate estimate_omega(const FlowSpec& flow, const Vec& x0, double burn_in_T, int sample_count,
                             const OmegaOptions& opts) {
    if (burn_in_T <= 0.0) throw StructuralError("burn-in time must be positive");
    if (sample_count < 1) throw StructuralError("sample count must be positive");

    OmegaEstimate est;
    est.resolution = opts.resolution;

    // Burn in, then process windows [B,2B], [2B,4B], ... continuing the
    // same trajectory; stop when successive windows' cell centroids agree.
    Vec state = integrate_path(flow, x0, burn_in_T, nullptr, nullptr, nullptr, 0.0).x;
    double window_start = burn_in_T;
    std::vector<Vec> prev_centroids;
    CellMap final_cells;

    for (int doubling = 0; doubling <= opts.max_doublings; ++doubling) {
        const double window_len = window_start;
        CellMap cells;
        Vec prev_state = state;
        double prev_t = 0.0;
        bool overflow = false;

        auto paint = [&](const Vec& p, double weight) {
            auto key = cell_key(p, opts.resolution);
            CellAccum& acc = cells[key];
            if (acc.sum.empty()) acc.sum.assign(p.size(), 0.0);
            for (size_t i = 0; i < p.size(); ++i) acc.sum[i] += p[i];
            acc.count += 1;
            acc.time_weight += weight;
        };
        PathCallbacks cb;
        cb.on_step = [&](double t, const Vec& x, double) {
            const double dt = t - prev_t;
            prev_t = t;
            // Paint the chord from the previous step point at half-cell
            // spacing; step displacement is capped so the chord stays
            // within the grid resolution of the true arc.
            double chord2 = 0.0;
            for (size_t i = 0; i < x.size(); ++i) chord2 += (x[i] - prev_state[i]) * (x[i] - prev_state[i]);
            const double chord = std::sqrt(chord2);
            const int pieces = std::max(1, static_cast<int>(std::ceil(chord / (opts.resolution / 2.0))));
            Vec p(x.size());
            for (int s = 1; s <= pieces; ++s) {
                const double f = static_cast<double>(s) / pieces;
                for (size_t i = 0; i < x.size(); ++i) p[i] = prev_state[i] + f * (x[i] - prev_state[i]);
                paint(p, dt / pieces);
            }
            prev_state = x;
            if (static_cast<long long>(cells.size()) > opts.max_cells) overflow = true;
        };
        paint(state, 0.0); // seed the window with its first point
        state = integrate_path(flow, state, window_len, nullptr, nullptr, &cb, opts.max_displacement).x;
        if (overflow) throw StructuralError("omega estimate cell budget exceeded; raise the resolution");

        const std::vector<Vec> cents = centroids_of(cells);
        if (!prev_centroids.empty()) {
            est.hausdorff_gap = hausdorff_distance(prev_centroids, cents);
            if (est.hausdorff_gap < opts.gap_threshold) {
                est.stable = true;
                final_cells = std::move(cells);
                est.burn_in_used = window_start;
                break;
            }
        }
        prev_centroids = cents;
        final_cells = std::move(cells);
        window_start *= 2.0;
        est.burn_in_used = window_start;
    }

    // Points out: dominant-weight cells first (so downstream probes always
    // see where the orbit actually dwells), then an even-stride coverage
    // subsample over the key-ordered cell list.
    std::vector<std::pair<double, const CellAccum*>> by_weight;
    std::vector<const CellAccum*> ordered;
    for (const auto& [key, acc] : final_cells) {
        by_weight.emplace_back(acc.time_weight, &acc);
        ordered.push_back(&acc);
    }
    std::stable_sort(by_weight.begin(), by_weight.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<Vec> cents;
    std::vector<double> wts;
    cents.reserve(ordered.size());
    for (const CellAccum* acc : ordered) {
        Vec c(acc->sum.size());
        for (size_t i = 0; i < c.size(); ++i) c[i] = acc->sum[i] / acc->count;
        cents.push_back(std::move(c));
        wts.push_back(acc->time_weight);
    }
    const size_t want = std::min<size_t>(static_cast<size_t>(sample_count), cents.size());
    std::vector<char> taken(cents.size(), 0);
    auto take = [&](size_t idx) {
        taken[idx] = 1;
        est.points.push_back(cents[idx]);
        est.weights.push_back(wts[idx]);
    };
    // Dominant-weight cells first, then greedy farthest-point coverage of
    // the rest (a fixed stride can resonate with the cell key order and
    // leave arcs of the attractor unsampled).
    for (size_t i = 0; i < std::min<size_t>(8, by_weight.size()) && est.points.size() < want; ++i) {
        const size_t idx = static_cast<size_t>(
            std::find(ordered.begin(), ordered.end(), by_weight[i].second) - ordered.begin());
        if (idx < taken.size() && !taken[idx]) take(idx);
    }
    if (!cents.empty() && est.points.empty()) take(0);
    std::vector<double> mind(cents.size(), std::numeric_limits<double>::infinity());
    auto refresh = [&](const Vec& p) {
        for (size_t i = 0; i < cents.size(); ++i) {
            double d2 = 0.0;
            for (size_t c = 0; c < p.size(); ++c) d2 += (cents[i][c] - p[c]) * (cents[i][c] - p[c]);
            mind[i] = std::min(mind[i], d2);
        }
    };
    for (const Vec& p : est.points) refresh(p);
    while (est.points.size() < want) {
        size_t best = cents.size();
        double best_d = -1.0;
        for (size_t i = 0; i < cents.size(); ++i) {
            if (!taken[i] && mind[i] > best_d) {
                best_d = mind[i];
                best = i;
            }
        }
        if (best == cents.size()) break;
        take(best);
        refresh(cents[best]);
    }
    return est;
}

std::optional<Vec> refine_field_zero(const FlowSpec& flow, const Vec& guess, double tol, int max_iter) {
    Vec z = guess;
    Vec f(z.size());
    for (int it = 0; it < max_iter; ++it) {
        flow.field(z, f);
        double mag = 0.0;
        for (double v : f) mag += v * v;
        mag = std::sqrt(mag);
        if (mag <= tol) return z;
        const Matrix jac = numerical_jacobian(flow.field, z, 1e-6);
        bool singular = false;
        Vec rhs = f;
        for (double& v : rhs) v = -v;
        const Vec step = solve_linear(jac, rhs, &singular);
        if (singular) return std::nullopt;
        for (size_t i = 0; i < z.size(); ++i) z[i] += step[i];
    }
    flow.field(z, f);
    double mag = 0.0;
    for (double v : f) mag += v * v;
    return std::sqrt(mag) <= tol ? std::optional<Vec>(z) : std::nullopt;
}

TheoremCReport check_theorem_c(const FlowSpec& flow, const Observable& phi, const Vec& x0, const OmegaEstimate& omega,
                               double horizon, const TheoremCOptions& opts) {
    TheoremCReport rep;
    rep.horizon = horizon;
    if (!omega.stable) {
        rep.undecided = true;
        return rep;
    }
    const AverageTrace base = time_average(flow, phi, x0, horizon);
    if (!base.complete) {
        rep.undecided = true;
        return rep;
    }
    rep.liminf_x0 = base.liminf_est;
    rep.tail_width_x0 = base.tail_width();

    const double omega_horizon = std::max(1.0, horizon * opts.omega_horizon_fraction);
    double max_limsup = -kInf;
    int used = 0;
    const size_t step = std::max<size_t>(1, omega.points.size() / static_cast<size_t>(opts.max_omega_samples));
    for (size_t i = 0; i < omega.points.size() && used < opts.max_omega_samples; i += step) {
        const AverageTrace tr = time_average(flow, phi, omega.points[i], omega_horizon);
        if (!tr.complete) {
            rep.undecided = true;
            return rep;
        }
        max_limsup = std::max(max_limsup, tr.limsup_est);
        ++used;
    }
    rep.omega_samples_used = used;
    rep.max_limsup_omega = max_limsup;
    // The margin covers the estimator noise at the base point only; the
    // omega-sample limsup windows are the quantity under test.
    rep.margin = rep.tail_width_x0 + opts.extra_margin;
    rep.inequality_holds = max_limsup <= rep.liminf_x0 + rep.margin;
    rep.average_stabilizes = rep.inequality_holds && rep.tail_width_x0 < opts.stabilize_tol;
    return rep;
}

Gooda11Report check_gooda11(const FlowSpec& flow, const Observable& phi, const Vec& x0,
                            const std::vector<double>& epsilon_list, int k_max, double t_probe) {
    if (k_max < 1) throw StructuralError("k_max must be >= 1");
    if (t_probe < 1.0) throw StructuralError("t_probe must be >= 1");
    Gooda11Report rep;
    rep.probe_horizon = t_probe;

    const int liminf_window = std::max(4 * k_max, 64);
    rep.liminf_window = liminf_window;
    const int total = static_cast<int>(t_probe) + liminf_window;

    // One pass records I(j) at every integer time; every probed average is
    // then (I(j+n) - I(j)) / n.
    std::vector<double> integer_times;
    integer_times.reserve(static_cast<size_t>(total));
    for (int j = 1; j <= total; ++j) integer_times.push_back(static_cast<double>(j));
    std::vector<double> I(static_cast<size_t>(total) + 1, 0.0);
    PathCallbacks cb;
    cb.on_hit = [&](double t, const Vec&, double integral) {
        const int j = static_cast<int>(std::lround(t));
        if (j >= 0 && j <= total) I[static_cast<size_t>(j)] = integral;
    };
    const PathResult path = integrate_path(flow, x0, static_cast<double>(total), &phi, &integer_times, &cb);
    I[static_cast<size_t>(total)] = path.integral;

    auto avg_from = [&](int j, int n) { return (I[static_cast<size_t>(j + n)] - I[static_cast<size_t>(j)]) / n; };

    const int j_top = static_cast<int>(t_probe);
    // phi_{*,-}(f_j x0): tail-window minimum of the averages from time j.
    std::vector<double> liminf_at(static_cast<size_t>(j_top) + 1, 0.0);
    bool stable = true;
    for (int j = 0; j <= j_top; ++j) {
        const int n_hi = std::min(liminf_window, total - j);
        double tail_min = kInf, prev_half_min = kInf;
        for (int n = n_hi / 2 + 1; n <= n_hi; ++n) tail_min = std::min(tail_min, avg_from(j, n));
        for (int n = std::max(1, n_hi / 4 + 1); n <= n_hi / 2; ++n) prev_half_min = std::min(prev_half_min, avg_from(j, n));
        liminf_at[static_cast<size_t>(j)] = tail_min;
        if (std::fabs(tail_min - prev_half_min) > 0.05 * std::max(1.0, std::fabs(tail_min))) stable = false;
    }
    rep.undecided = !stable;

    const double mem_tol = 1e-9;
    for (double eps : epsilon_list) {
        if (eps <= 0.0) throw StructuralError("epsilon must be positive");
        Gooda11Entry entry;
        entry.epsilon = eps;
        // Minimal n certifying membership of f_j(x0), capped by k_max.
        std::vector<int> need(static_cast<size_t>(j_top) + 1, 0);
        for (int j = 0; j <= j_top; ++j) {
            const int n_cap = std::min(k_max, total - j);
            for (int n = 1; n <= n_cap; ++n) {
                if (avg_from(j, n) <= liminf_at[static_cast<size_t>(j)] + eps + mem_tol) {
                    need[static_cast<size_t>(j)] = n;
                    break;
                }
            }
        }
        // Smallest t_eps whose suffix is fully covered.
        int best_t = -1, best_k = 0;
        int suffix_max = 0;
        bool suffix_ok = true;
        std::vector<std::pair<int, int>> suffix(static_cast<size_t>(j_top) + 1);
        for (int j = j_top; j >= 0; --j) {
            if (need[static_cast<size_t>(j)] == 0) suffix_ok = false;
            suffix_max = std::max(suffix_max, need[static_cast<size_t>(j)]);
            suffix[static_cast<size_t>(j)] = {suffix_ok ? 1 : 0, suffix_max};
        }
        for (int j = 0; j <= j_top; ++j) {
            if (suffix[static_cast<size_t>(j)].first == 1) {
                best_t = j;
                best_k = suffix[static_cast<size_t>(j)].second;
                break;
            }
        }
        entry.satisfied = best_t >= 0;
        entry.t_eps = best_t >= 0 ? static_cast<double>(best_t) : -1.0;
        entry.k_eps = best_k;
        rep.per_epsilon.push_back(entry);
    }
    rep.all_hold = std::all_of(rep.per_epsilon.begin(), rep.per_epsilon.end(),
                               [](const Gooda11Entry& e) { return e.satisfied; });
    return rep;
}

TwoDPointReport check_2d_point(const FlowSpec& flow, const Vec& x0, const OmegaEstimate& omega,
                               const TwoDPointOptions& opts) {
    (void)x0; // the decision runs entirely off the omega samples
    TwoDPointReport rep;
    if (!omega.stable) {
        rep.undecided = true;
        return rep;
    }
    auto near = [&](const Vec& a, const Vec& b) {
        double d2 = 0.0;
        for (size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
        return std::sqrt(d2);
    };

    std::vector<Vec> zeros;
    bool all_pass = true;
    const size_t step = std::max<size_t>(1, omega.points.size() / static_cast<size_t>(opts.max_omega_samples));
    for (size_t i = 0; i < omega.points.size() && rep.samples_tested < opts.max_omega_samples; i += step) {
        const Vec& y = omega.points[i];
        ++rep.samples_tested;

        // Measure how much of the probe tail the orbit from y spends inside
        // a small ball around a refined field zero.
        double dwell_time = 0.0;
        double window_time = 0.0;
        double prev_t = 0.0;
        const double t_lo = opts.probe_T / 2.0;
        Vec f(y.size());
        PathCallbacks cb;
        cb.on_step = [&](double t, const Vec& x, double) {
            const double dt = t - prev_t;
            prev_t = t;
            if (t < t_lo) return;
            window_time += dt;
            flow.field(x, f);
            double mag = 0.0;
            for (double v : f) mag += v * v;
            if (std::sqrt(mag) < opts.near_zero_radius) {
                for (const Vec& known : zeros) {
                    if (near(known, x) <= 2.0 * opts.near_zero_radius) {
                        dwell_time += dt;
                        return;
                    }
                }
                const std::optional<Vec> z = refine_field_zero(flow, x, opts.field_zero_tol, 30);
                if (z && near(*z, x) <= 2.0 * opts.near_zero_radius) {
                    dwell_time += dt;
                    zeros.push_back(*z);
                }
            }
        };
        try {
            integrate_path(flow, y, opts.probe_T, nullptr, nullptr, &cb);
        } catch (const IntegrationError&) {
            rep.undecided = true;
            return rep;
        }
        const double fraction = window_time > 0.0 ? dwell_time / window_time : 0.0;
        if (fraction < opts.dwell_fraction) all_pass = false;
    }
    rep.is_2d_point = all_pass;
    rep.fixed_points = std::move(zeros);
    return rep;
}

} // namespace ergolab
