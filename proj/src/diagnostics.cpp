#include "uavpfl/diagnostics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace uavpfl {

double compose_v_theta(double sigma_theta, int num_selected, double samp_var, double beta_sel) {
  const double variance_term = num_selected > 0 ? sigma_theta / num_selected : 0.0;
  return variance_term + samp_var + beta_sel * beta_sel;
}

namespace {

Vector weighted_mean(std::span<const Vector> grads, std::span<const int> members,
                     std::span<const int> weights) {
  Vector acc = Vector::Zero(grads.front().size());
  double total = 0.0;
  for (int k : members) {
    const double w = weights[static_cast<std::size_t>(k)];
    acc += w * grads[static_cast<std::size_t>(k)];
    total += w;
  }
  return total > 0.0 ? Vector(acc / total) : acc;
}

Vector plain_mean(std::span<const Vector> grads) {
  Vector acc = Vector::Zero(grads.front().size());
  for (const auto& g : grads) acc += g;
  return acc / static_cast<double>(grads.size());
}

}  // namespace

double estimate_selection_bias(std::span<const Vector> full_grads, std::span<const int> selected,
                               std::span<const int> weights) {
  if (full_grads.empty() || selected.empty()) return 0.0;
  return (weighted_mean(full_grads, selected, weights) - plain_mean(full_grads)).norm();
}

double estimate_gradient_variance(const ModelShape& shape, const Vector& base, const Vector& head,
                                  const DeviceDataset& data, int n_batches, int batch_size,
                                  Rng& rng) {
  if (n_batches <= 0) throw std::invalid_argument("n_batches must be positive");
  const int n = data.train_size();
  const int b = std::min(batch_size, n);
  const Vector full = full_batch_gradients(shape, base, head, data).g_theta;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  double acc = 0.0;
  for (int i = 0; i < n_batches; ++i) {
    // Partial Fisher-Yates: the first b entries form a uniform subset.
    for (int j = 0; j < b; ++j) {
      std::uniform_int_distribution<int> pick(j, n - 1);
      std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(pick(rng))]);
    }
    const auto batch = gather(data.train_x, data.train_y,
                              std::span<const int>(order).first(static_cast<std::size_t>(b)));
    const auto g = compute_gradients(shape, base, head, batch.x, batch.y);
    acc += (g.g_theta - full).squaredNorm();
  }
  return acc / n_batches;
}

double estimate_sampling_variance(std::span<const Vector> full_grads, std::span<const int> weights,
                                  int subset_size, int draws, Rng& rng) {
  const int K = static_cast<int>(full_grads.size());
  if (K == 0 || subset_size <= 0 || subset_size >= K || draws < 2) return 0.0;
  std::vector<int> all(static_cast<std::size_t>(K));
  std::iota(all.begin(), all.end(), 0);
  std::vector<Vector> means;
  means.reserve(static_cast<std::size_t>(draws));
  for (int i = 0; i < draws; ++i) {
    std::vector<int> subset;
    std::sample(all.begin(), all.end(), std::back_inserter(subset), subset_size, rng);
    means.push_back(weighted_mean(full_grads, subset, weights));
  }
  const Vector centre = plain_mean(means);
  double spread = 0.0;
  for (const auto& m : means) spread += (m - centre).squaredNorm();
  spread /= static_cast<double>(draws - 1);
  return spread * subset_size;
}

Vector inner_head_descent(const ModelShape& shape, const Vector& base, const Vector& head,
                          const DeviceDataset& data, int inner_steps) {
  Vector phi = head;
  if (inner_steps <= 0) return phi;
  const Matrix features = base_features(shape, base, data.train_x);
  // Smoothness of the mean softmax cross-entropy in (W, b):
  // L <= 1/2 * mean_j ||[h_j; 1]||^2.
  const double smooth = 0.5 * (features.colwise().squaredNorm().array() + 1.0).mean();
  const double step = 1.0 / smooth;
  for (int i = 0; i < inner_steps; ++i) {
    phi -= step * head_gradient(shape, phi, features, data.train_y);
  }
  return phi;
}

double estimate_tracking_error(const ModelShape& shape, const Vector& base, const Vector& head,
                               const DeviceDataset& data, int inner_steps) {
  return (head - inner_head_descent(shape, base, head, data, inner_steps)).norm();
}

BoundEstimates estimate_bounds(const ModelShape& shape, std::span<const Vector* const> bases,
                               std::span<const Vector> heads, const FederatedData& data,
                               std::span<const int> selected, const DiagnosticsRequest& req,
                               Rng& rng) {
  const auto K = data.devices.size();
  BoundEstimates est;
  est.num_selected = static_cast<int>(selected.size());
  if (K == 0) return est;

  std::vector<Vector> full(K);
  const auto weights = data.train_sizes();
  double sigma = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& dev = data.devices[k];
    full[k] = full_batch_gradients(shape, *bases[k], heads[k], dev).g_theta;
    sigma += estimate_gradient_variance(shape, *bases[k], heads[k], dev, req.diag_batches,
                                        req.batch_size, rng);
    if (req.tracking_steps > 0) {
      est.tracking_err.push_back(
          estimate_tracking_error(shape, *bases[k], heads[k], dev, req.tracking_steps));
    }
  }
  est.sigma_theta = sigma / static_cast<double>(K);
  est.beta_sel = estimate_selection_bias(full, selected, weights);
  est.samp_var = estimate_sampling_variance(full, weights, est.num_selected, req.subset_draws, rng);
  est.grad_norm_sq = plain_mean(full).squaredNorm();
  est.v_theta = compose_v_theta(est.sigma_theta, est.num_selected, est.samp_var, est.beta_sel);
  return est;
}

BoundTrendReport bound_trend_report(std::span<const BoundSeries> runs) {
  BoundTrendReport report;
  for (const auto& run : runs) {
    TrendSeries series;
    series.label = run.label;
    series.alpha = run.alpha;
    double running = 0.0;
    for (std::size_t i = 0; i < run.estimates.size(); ++i) {
      const auto& e = run.estimates[i];
      running += e.grad_norm_sq;
      TrendRow row;
      row.round = run.rounds[i];
      row.v_theta = e.v_theta;
      row.beta_sel = e.beta_sel;
      row.variance_term = e.num_selected > 0 ? e.sigma_theta / e.num_selected : 0.0;
      row.running_grad_norm_sq = running / static_cast<double>(i + 1);
      series.rows.push_back(row);
    }
    report.series.push_back(std::move(series));
  }
  return report;
}

nlohmann::json to_json(const BoundTrendReport& report) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& s : report.series) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : s.rows) {
      rows.push_back({{"round", r.round},
                      {"v_theta", r.v_theta},
                      {"beta_sel", r.beta_sel},
                      {"variance_term", r.variance_term},
                      {"running_grad_norm_sq", r.running_grad_norm_sq}});
    }
    doc.push_back({{"label", s.label}, {"alpha", s.alpha}, {"rows", std::move(rows)}});
  }
  return doc;
}

}  // namespace uavpfl
