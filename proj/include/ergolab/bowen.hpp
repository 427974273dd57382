#pragma once

#include <string>
#include <vector>

#include "ergolab/flow.hpp"

namespace ergolab {

/// H(x,y) = y (x^2 + y^2 - 1); level set H = 0 (unit circle plus x-axis)
/// carries the heteroclinic eye boundary.
double bowen_hamiltonian(double x, double y);

/// Planar eye field X = X_H + eps * D with D = -H grad H. Saddles at
/// (-1,0) and (1,0) with eigenvalues +-2 for every eps; H = 0 invariant;
/// interior orbits of the upper eye spiral out to the boundary.
FlowSpec bowen_field(double eps = 0.1);

struct SaddleData {
    Vec position;
    double expanding = 0.0;  // alpha_+ / beta_+
    double contracting = 0.0; // alpha_- / beta_-
};

/// Refines the saddle positions of a planar field from the given guesses
/// and reads the eigenvalues off the numerical Jacobian.
SaddleData saddle_data(const FlowSpec& flow, const Vec& guess);

struct CycleModuli {
    double lambda = 0.0; // alpha_- / beta_+
    double sigma = 0.0;  // beta_- / alpha_+
    double product = 0.0;
    bool attracting = false; // alpha_- beta_- > alpha_+ beta_+
};

CycleModuli cycle_moduli(const SaddleData& a, const SaddleData& b);

/// Linearized passage model: dwell times alternate A/B under
///   T^B_k = sigma T^A_k + c_B,  T^A_{k+1} = lambda T^B_k + c_A
/// with c taken from the connection travel times. The observable takes
/// value a during A-dwells, b during B-dwells, and the configured transit
/// values along the connections.
struct HybridDwellModel {
    SaddleData saddle_a;
    SaddleData saddle_b;
    double initial_gap = 1e-3;
    double value_a = 0.0;
    double value_b = 1.0;
    double transit_ab = 1.0; // travel time A -> B (upper connection)
    double transit_ba = 1.0; // travel time B -> A (lower connection)
    double transit_value = 0.5;
};

struct HybridResult {
    std::vector<double> epoch_times;      // absolute time at each segment end
    std::vector<double> epoch_averages;   // running average there
    std::vector<double> end_of_a_average; // per epoch
    std::vector<double> end_of_b_average; // per epoch
    std::vector<double> dwell_times;      // T^A_1, T^B_1, T^A_2, ...
    double liminf_est = 0.0;              // min over the tail half of epochs
    double limsup_est = 0.0;
    CycleModuli moduli;
    bool saturated = false; // accumulation stopped before overflow
    int epochs_run = 0;
};

HybridResult hybrid_averages(const HybridDwellModel& model, int n_epochs);

enum class BowenClass { Oscillating, Convergent, Undecided };
std::string bowen_class_name(BowenClass c);

struct BowenWindow {
    double horizon = 0.0;
    double width = 0.0;
    double average = 0.0;
};

struct BowenExperimentReport {
    BowenClass classification = BowenClass::Undecided;
    BowenClass predicted = BowenClass::Undecided;
    bool matches_prediction = false;
    std::vector<BowenWindow> windows; // three doublings, oldest first
    double final_average = 0.0;
    double phi_a = 0.0;
    double phi_b = 0.0;
    double min_phi = 0.0;
    double width_min = 0.0;
    double tol = 5e-2;
    std::string attraction_mechanism; // "dissipation" or "eigenvalue"
    bool complete = true;
    std::string error;
};

struct BowenExperimentOptions {
    double eps = 0.1;
    int n_checkpoints = 20000;
    double tol = 5e-2;
};

/// Simulates the built-in eye from an interior point and classifies the
/// running average as oscillating or convergent from the widths of the
/// tail windows across three horizon doublings.
BowenExperimentReport run_bowen_experiment(const Observable& phi, const Vec& x0, double t_max,
                                           const BowenExperimentOptions& opts = {});

/// Numerical minimum of phi over the closed upper eye (grid + refinement).
double min_phi_over_eye(const Observable& phi);

/// Near-saddle dwell intervals (|field| < threshold) along the orbit.
struct DwellIntervals {
    std::vector<double> start;
    std::vector<double> length;
    double time_near = 0.0;
    double total_time = 0.0;
};
DwellIntervals detect_dwell_intervals(const FlowSpec& flow, const Vec& x0, double T, double threshold = 0.05);

} // namespace ergolab
