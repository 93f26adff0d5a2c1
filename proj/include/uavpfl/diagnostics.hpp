#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uavpfl/learning.hpp"
#include "uavpfl/random.hpp"

namespace uavpfl {

// Plug-in estimates of the quantities that drive the convergence bound.
// v_theta = sigma_theta / |S_t| + samp_var + beta_sel^2 by construction.
struct BoundEstimates {
  double beta_sel = 0.0;
  double samp_var = 0.0;
  double sigma_theta = 0.0;   // minibatch variance of the base gradient
  double v_theta = 0.0;
  double grad_norm_sq = 0.0;  // ||mean_k full-batch base gradient||^2
  int num_selected = 0;
  std::vector<double> tracking_err;  // empty unless requested
};

double compose_v_theta(double sigma_theta, int num_selected, double samp_var, double beta_sel);

// || sum_S |D_k| g_k / sum_S |D_k|  -  (1/K) sum_k g_k ||_2 over per-device
// full-batch base gradients.
double estimate_selection_bias(std::span<const Vector> full_grads, std::span<const int> selected,
                               std::span<const int> weights);

// Mean squared deviation of n_batches minibatch base gradients around the
// full-batch gradient of the device.
double estimate_gradient_variance(const ModelShape& shape, const Vector& base, const Vector& head,
                                  const DeviceDataset& data, int n_batches, int batch_size,
                                  Rng& rng);

// |S| times the spread of the weighted mean over `draws` random subsets of
// size subset_size.
double estimate_sampling_variance(std::span<const Vector> full_grads, std::span<const int> weights,
                                  int subset_size, int draws, Rng& rng);

// Head reached by inner_steps full-batch head-only descent steps from `head`
// at frozen base; step 1/L with L the smoothness bound of the softmax head.
Vector inner_head_descent(const ModelShape& shape, const Vector& base, const Vector& head,
                          const DeviceDataset& data, int inner_steps);

// || head - inner_head_descent(...) ||_2. inner_steps = 0 returns 0.
double estimate_tracking_error(const ModelShape& shape, const Vector& base, const Vector& head,
                               const DeviceDataset& data, int inner_steps = 500);

struct DiagnosticsRequest {
  int diag_batches = 8;
  int subset_draws = 16;
  int batch_size = 10;
  int tracking_steps = 0;  // 0 skips the tracking error
};

// All estimates at the current round. bases[k] is device k's view of theta.
BoundEstimates estimate_bounds(const ModelShape& shape, std::span<const Vector* const> bases,
                               std::span<const Vector> heads, const FederatedData& data,
                               std::span<const int> selected, const DiagnosticsRequest& req,
                               Rng& rng);

// Per-round series of one run, labelled by its selection ratio.
struct BoundSeries {
  std::string label;
  double alpha = 0.0;
  std::vector<int> rounds;
  std::vector<BoundEstimates> estimates;
};

struct TrendRow {
  int round = 0;
  double v_theta = 0.0;
  double beta_sel = 0.0;
  double variance_term = 0.0;       // sigma_theta / |S_t|
  double running_grad_norm_sq = 0.0;
};

struct TrendSeries {
  std::string label;
  double alpha = 0.0;
  std::vector<TrendRow> rows;
};

struct BoundTrendReport {
  std::vector<TrendSeries> series;
};

BoundTrendReport bound_trend_report(std::span<const BoundSeries> runs);
nlohmann::json to_json(const BoundTrendReport& report);

}  // namespace uavpfl
