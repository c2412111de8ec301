#pragma once

#include <string>
#include <utility>
#include <vector>

#include "echoflow/model.hpp"

namespace echoflow {

struct TrainConfig {
    int epochs = 50;
    double learning_rate = 1e-3;
    double huber_delta = 1.0;
    int batch_size = 32;
    double train_frac = 0.70, val_frac = 0.10, test_frac = 0.20;
    std::uint64_t seed = 0;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    // Reservoir trajectories are a pure function of the data and the frozen
    // reservoir block; caching them is loss-invariant. Off = recompute the
    // full prefix per window, Algorithm-1 style.
    bool cache_trajectories = true;

    void validate() const;
};

struct EpochStats {
    double train_loss = 0.0;
    double val_mse = 0.0;
    double val_mae = 0.0;
    double wall_s = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;
    double test_mse = 0.0, test_mae = 0.0;
    double baseline_mse = 0.0, baseline_mae = 0.0;
    std::size_t trainable_params = 0;
    double total_wall_s = 0.0;
    // Per-step training losses in window-visit order; used by the cache
    // equivalence check.
    std::vector<double> step_losses;
};

// Mean over entries of the piecewise quadratic/linear loss.
double huber(const Vec& target, const Vec& pred, double delta);
double huber(const Mat& target, const Mat& pred, double delta);
// d(huber)/d(pred), same mean scaling.
void huber_grad(const Mat& target, const Mat& pred, double delta, Mat& g);

// Rolling (window, target) index pairs: origins t (0-based index of the last
// window row) from k-1 to T-1-tau.
std::vector<int> window_origins(int T, int k, int tau);

struct WindowPair {
    Mat window;  // k x N_u
    Mat target;  // tau x N_u
};

std::vector<WindowPair> build_windows(const Mat& series, int k, int tau);

// Per-unit reservoir state trajectories over a full series, computed with the
// model's frozen reservoir block.
struct Trajectory {
    std::vector<Mat> states;  // unit -> T x N_r, state after consuming row t

    void compute(ForecastModel& model, const Mat& norm_values);
    std::vector<Vec> states_at(int t) const;
};

TrainReport train(ForecastModel& model, const SeriesSplits& data,
                  const TrainConfig& cfg);

// MSE/MAE on the given windows of a normalized series, eval mode.
std::pair<double, double> evaluate_windows(ForecastModel& model,
                                           const Mat& norm_values,
                                           const Trajectory& traj,
                                           const std::vector<int>& origins);

// Test-split metrics for a trained model (uses model.normalizer).
std::pair<double, double> evaluate(ForecastModel& model, const SeriesSplits& data);

struct GradCheckEntry {
    std::string param;
    double max_rel_err = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_err = 0.0;
    std::string worst_param;
};

// Central finite differences (step 1e-6) against the analytic backward pass
// for every trainable tensor, on one window of toy data.
GradCheckReport grad_check(ForecastModel& model, const Mat& window,
                           const Mat& target, const std::vector<Vec>& states,
                           double fd_step = 1e-6, int max_entries_per_tensor = 0);

}  // namespace echoflow
