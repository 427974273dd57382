#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ergolab/linalg.hpp"

namespace ergolab {

using Vec = std::vector<double>;
using VectorField = std::function<void(const Vec&, Vec&)>;
using Observable = std::function<double(const Vec&)>;

struct IntegratorConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double max_step = 0.25;
    double initial_step = 1e-3;
    /// Below this field magnitude the stepper hands over to the local
    /// linearization around the nearest refined zero; it resumes normal
    /// stepping once the field magnitude re-enters the nonlinear region.
    double lin_patch_threshold = 1e-10;
    long long max_steps = 200000000;
};

struct DomainBox {
    Vec lo;
    Vec hi;
    bool project = false;
};

struct FlowSpec {
    std::string name;
    int dimension = 0;
    VectorField field;
    std::optional<DomainBox> domain;
    IntegratorConfig integ;
};

/// f_t(x0): adaptive embedded RK 4/5 (Dormand-Prince), FSAL.
Vec integrate(const FlowSpec& flow, const Vec& x0, double t);

/// Core path driver. Integrates over [0, T]; when phi is given the
/// observable integral I(t) = int_0^t phi is carried as an extra
/// error-controlled state component. Steps land exactly on hit_times.
struct PathCallbacks {
    /// Every accepted step / patch substep: (t, state, integral).
    std::function<void(double, const Vec&, double)> on_step;
    /// Exact landings on hit_times, same signature.
    std::function<void(double, const Vec&, double)> on_hit;
};

struct PathResult {
    Vec x;
    double integral = 0.0;
    double sup_abs_phi = 0.0;
    double min_phi = 0.0;
    double max_phi = 0.0;
    long long steps = 0;
};

PathResult integrate_path(const FlowSpec& flow, const Vec& x0, double T, const Observable* phi,
                          const std::vector<double>* hit_times = nullptr, const PathCallbacks* cb = nullptr,
                          double max_displacement = 0.0 /* 0 = unlimited */);

/// Running time averages (1/T) int_0^T phi o f_t with geometric
/// checkpoints; liminf/limsup estimated as min/max of the running average
/// over the tail window [T/2, T].
struct AverageTrace {
    std::vector<double> sample_times;
    std::vector<double> running_average;
    double liminf_est = 0.0;
    double limsup_est = 0.0;
    double tail_window_lo = 0.0;
    double tail_window_hi = 0.0;
    double sup_abs_phi = 0.0;
    double min_phi = 0.0;
    double max_phi = 0.0;
    bool complete = true;
    double last_good_time = 0.0;
    std::string error;

    double final_average() const { return running_average.empty() ? 0.0 : running_average.back(); }
    double tail_width() const { return limsup_est - liminf_est; }
    /// min/max of the running average over checkpoints in [lo, hi].
    std::pair<double, double> window_range(double lo, double hi) const;
};

AverageTrace time_average(const FlowSpec& flow, const Observable& phi, const Vec& x0, double T,
                          int n_checkpoints = 512);

/// psi(y) = int_0^1 phi o f_t(y) dt and the unit-time map f_1, both by
/// fresh integrations, so (1/n) sum psi(f_j y) checks the continuous
/// average through an independent numerical route.
struct PsiReduction {
    std::function<double(const Vec&)> psi;
    std::function<Vec(const Vec&)> unit_map;
    std::function<double(const Vec&, int)> discrete_average;    // (1/n) sum_{j<n} psi(f_j y)
    std::function<double(const Vec&, double)> continuous_average; // (1/T) int_0^T phi
};
PsiReduction psi_reduce(const FlowSpec& flow, const Observable& phi);

/// |(1/T) int_[T]^T phi o f_t(y) dt|, the floor-to-T remainder.
double boundary_term(const FlowSpec& flow, const Observable& phi, const Vec& y, double T);

/// Omega-limit estimate: grid cells at `resolution` painted along the
/// trajectory tail (recording is displacement-triggered so connections are
/// covered, cell weights accumulate trajectory time), doubling the burn-in
/// until successive windows agree in Hausdorff distance.
struct OmegaEstimate {
    std::vector<Vec> points;     // cell centroids, dominant-weight + coverage subsample
    std::vector<double> weights; // trajectory time spent in each cell
    double hausdorff_gap = 0.0;
    bool stable = false;
    double burn_in_used = 0.0;
    double resolution = 0.0;
};

struct OmegaOptions {
    double resolution = 1e-3;
    double gap_threshold = 1e-3;
    int max_doublings = 12;
    long long max_cells = 4000000;
    /// Step cap during windows. Cells between step endpoints are painted
    /// along the chord, so this can stay well above the resolution; forcing
    /// steps down to the resolution would let the dissipative restoring
    /// terms round to zero per step near invariant sets.
    double max_displacement = 0.05;
};

OmegaEstimate estimate_omega(const FlowSpec& flow, const Vec& x0, double burn_in_T, int sample_count,
                             const OmegaOptions& opts = {});

/// Newton refinement of a vector-field zero from a starting guess.
std::optional<Vec> refine_field_zero(const FlowSpec& flow, const Vec& guess, double tol = 1e-12, int max_iter = 50);

struct TheoremCReport {
    bool undecided = false;
    bool inequality_holds = false;
    double liminf_x0 = 0.0;
    double max_limsup_omega = 0.0;
    double margin = 0.0;
    bool average_stabilizes = false;
    double tail_width_x0 = 0.0;
    double horizon = 0.0;
    int omega_samples_used = 0;
};

struct TheoremCOptions {
    int max_omega_samples = 16;
    double omega_horizon_fraction = 0.25; // horizon used at each omega sample
    double stabilize_tol = 1e-2;
    double extra_margin = 1e-9;
};

/// Finite-window proxy for: limsup of averages started anywhere on omega(x)
/// does not exceed the liminf at x. The report carries the probe horizon;
/// it never claims the exact-limit hypothesis itself.
TheoremCReport check_theorem_c(const FlowSpec& flow, const Observable& phi, const Vec& x0, const OmegaEstimate& omega,
                               double horizon, const TheoremCOptions& opts = {});

struct Gooda11Entry {
    double epsilon = 0.0;
    bool satisfied = false;
    int k_eps = 0;
    double t_eps = 0.0;
};

struct Gooda11Report {
    std::vector<Gooda11Entry> per_epsilon;
    bool all_hold = false;
    bool undecided = false;
    double probe_horizon = 0.0;
    int liminf_window = 0;
};

/// Integer-time membership probe for the flow E*_k^eps sets: searches
/// (t_eps, k_eps) such that every probed j in [t_eps, t_probe] has
/// f_j(x0) in E*_{k_eps}^eps, with memberships evaluated by quadrature.
Gooda11Report check_gooda11(const FlowSpec& flow, const Observable& phi, const Vec& x0,
                            const std::vector<double>& epsilon_list, int k_max, double t_probe);

struct TwoDPointReport {
    bool is_2d_point = false;
    bool undecided = false;
    std::vector<Vec> fixed_points; // omega(x) intersect Fix X, refined
    int samples_tested = 0;
};

struct TwoDPointOptions {
    int max_omega_samples = 8;
    double probe_T = 400.0;
    double near_zero_radius = 0.05;
    double dwell_fraction = 0.5;
    double field_zero_tol = 1e-8;
};

/// Tests whether the orbit from each omega-sample spends the dominant
/// share of its probe tail dwelling at refined field zeros; collects the
/// zeros as omega(x) intersect Fix X.
TwoDPointReport check_2d_point(const FlowSpec& flow, const Vec& x0, const OmegaEstimate& omega,
                               const TwoDPointOptions& opts = {});

} // namespace ergolab
