#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "uavpfl/config.hpp"
#include "uavpfl/random.hpp"

namespace uavpfl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Samples are stored column-wise: features is feature_dim x n.
struct DeviceDataset {
  Matrix train_x;
  std::vector<int> train_y;
  Matrix test_x;
  std::vector<int> test_y;
  std::vector<int> classes;  // ascending

  int train_size() const { return static_cast<int>(train_y.size()); }
};

struct FederatedData {
  Matrix prototypes;  // feature_dim x (num_classes * modes_per_class), class-major
  std::vector<DeviceDataset> devices;

  std::vector<int> train_sizes() const;
};

// Every class is a mixture of modes_per_class Gaussian prototypes; device k holds min(c, C) classes taken
// round-robin over a seeded class permutation, with samples split evenly over
// them and an 80/20 train/test split. Throws DataError if c > num_classes.
FederatedData generate_federated_data(const ScenarioConfig& cfg, int num_devices, Rng& rng);

nlohmann::json to_json(const FederatedData& data);
FederatedData federated_data_from_json(const nlohmann::json& doc);

// feature -> hidden -> hidden (tanh) shared base, hidden -> classes head.
struct ModelShape {
  int feature_dim = 32;
  int hidden_dim = 64;
  int num_classes = 10;

  static ModelShape from(const ScenarioConfig& cfg) {
    return {cfg.feature_dim, cfg.hidden_dim, cfg.num_classes};
  }
  Eigen::Index base_size() const {
    return Eigen::Index{hidden_dim} * feature_dim + hidden_dim +
           Eigen::Index{hidden_dim} * hidden_dim + hidden_dim;
  }
  Eigen::Index head_size() const {
    return Eigen::Index{num_classes} * hidden_dim + num_classes;
  }
};

// Shared base theta plus one private head phi_k per device.
struct SplitModel {
  ModelShape shape;
  Vector base;
  std::vector<Vector> heads;
};

// Glorot-uniform weights, zero biases; every head starts from the same draw.
SplitModel init_model(const ModelShape& shape, int num_devices, Rng& rng);

struct Batch {
  Matrix x;
  std::vector<int> y;
};

Batch gather(const Matrix& x, std::span<const int> labels, std::span<const int> columns);

struct GradientPair {
  Vector g_theta;
  Vector g_phi;
  double g_theta_l2 = 0.0;
  double loss = 0.0;
};

// Mean softmax cross-entropy of the batch.
double forward_loss(const ModelShape& shape, const Vector& base, const Vector& head,
                    const Matrix& x, std::span<const int> y);

// Exact backpropagation of forward_loss w.r.t. base and head.
GradientPair compute_gradients(const ModelShape& shape, const Vector& base, const Vector& head,
                               const Matrix& x, std::span<const int> y);

// Penultimate-layer features (hidden x n) at the given base.
Matrix base_features(const ModelShape& shape, const Vector& base, const Matrix& x);

// Head-only quantities on precomputed features; the head problem is convex.
double head_loss(const ModelShape& shape, const Vector& head, const Matrix& features,
                 std::span<const int> y);
Vector head_gradient(const ModelShape& shape, const Vector& head, const Matrix& features,
                     std::span<const int> y);

// phi <- phi - gamma * g_phi
void local_personal_update(Vector& head, const Vector& g_phi, double gamma);

// Result of one device's local pass of tau epochs over its train split.
// g_theta / g_phi are the summed step gradients (the model delta over -lr),
// which equal the plain minibatch gradients when the pass is one step.
struct LocalUpdate {
  Vector g_theta;
  Vector g_phi;
  Vector base_after;
  Vector head_after;
  double g_theta_l2 = 0.0;
  double mean_loss = 0.0;
};

LocalUpdate local_pass(const ModelShape& shape, const Vector& base, const Vector& head,
                       const DeviceDataset& data, const ScenarioConfig& cfg, Rng& rng);

// Full-batch gradient over the device's train split.
GradientPair full_batch_gradients(const ModelShape& shape, const Vector& base,
                                  const Vector& head, const DeviceDataset& data);

double accuracy(const ModelShape& shape, const Vector& base, const Vector& head,
                const Matrix& x, std::span<const int> y);

struct Evaluation {
  std::vector<double> per_device;
  double mean = 0.0;
};

// Local test accuracy of theta + phi_k for every device; unweighted mean.
Evaluation evaluate(const SplitModel& model, const FederatedData& data);
// Same with a per-device base (per-UAV FedAvg keeps one base per cluster).
Evaluation evaluate(const ModelShape& shape, std::span<const Vector* const> bases,
                    std::span<const Vector> heads, const FederatedData& data);

}  // namespace uavpfl
