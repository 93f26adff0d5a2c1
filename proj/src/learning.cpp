#include "uavpfl/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace uavpfl {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

// Views of the flat parameter vectors.
struct BaseView {
  ConstMap w1, w2;
  Eigen::Map<const Vector> b1, b2;
};

struct HeadView {
  ConstMap w3;
  Eigen::Map<const Vector> b3;
};

BaseView view_base(const ModelShape& s, const Vector& base) {
  const Eigen::Index h = s.hidden_dim, d = s.feature_dim;
  const double* p = base.data();
  return {ConstMap(p, h, d), ConstMap(p + h * d + h, h, h), Eigen::Map<const Vector>(p + h * d, h),
          Eigen::Map<const Vector>(p + h * d + h + h * h, h)};
}

HeadView view_head(const ModelShape& s, const Vector& head) {
  const Eigen::Index c = s.num_classes, h = s.hidden_dim;
  return {ConstMap(head.data(), c, h), Eigen::Map<const Vector>(head.data() + c * h, c)};
}

void check_shapes(const ModelShape& s, const Vector& base, const Vector& head, const Matrix& x,
                  std::span<const int> y) {
  if (base.size() != s.base_size() || head.size() != s.head_size()) {
    throw std::invalid_argument("parameter vector does not match the model shape");
  }
  if (x.rows() != s.feature_dim || x.cols() != static_cast<Eigen::Index>(y.size()) || y.empty()) {
    throw std::invalid_argument("batch does not match the model shape");
  }
}

// Column-wise softmax in place; returns the summed negative log-likelihood.
double softmax_nll(Matrix& logits, std::span<const int> y) {
  double nll = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    auto col = logits.col(j);
    const double m = col.maxCoeff();
    const double shifted_target = col(y[static_cast<std::size_t>(j)]) - m;
    col = (col.array() - m).exp();
    const double z = col.sum();
    nll -= shifted_target - std::log(z);
    col /= z;
  }
  return nll;
}

struct Forward {
  Matrix h1, h2, logits;
};

Forward forward(const ModelShape& s, const Vector& base, const Vector& head, const Matrix& x) {
  const auto b = view_base(s, base);
  const auto h = view_head(s, head);
  Forward f;
  f.h1 = ((b.w1 * x).colwise() + b.b1).array().tanh();
  f.h2 = ((b.w2 * f.h1).colwise() + b.b2).array().tanh();
  f.logits = (h.w3 * f.h2).colwise() + h.b3;
  return f;
}

}  // namespace

std::vector<int> FederatedData::train_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(devices.size());
  for (const auto& d : devices) sizes.push_back(d.train_size());
  return sizes;
}

FederatedData generate_federated_data(const ScenarioConfig& cfg, int num_devices, Rng& rng) {
  const int C = cfg.num_classes;
  const int c = cfg.heterogeneity_c;
  const int D = cfg.feature_dim;
  if (c > C) throw DataError("heterogeneity c exceeds the number of classes");
  if (c < 1) throw DataError("heterogeneity c must be positive");

  std::normal_distribution<double> normal(0.0, 1.0);
  FederatedData data;
  const int M = cfg.modes_per_class;
  data.prototypes.resize(D, Eigen::Index{C} * M);
  for (Eigen::Index j = 0; j < data.prototypes.cols(); ++j) {
    for (Eigen::Index i = 0; i < D; ++i) data.prototypes(i, j) = cfg.class_separation * normal(rng);
  }

  std::vector<int> order(static_cast<std::size_t>(C));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  const int n_total = cfg.samples_per_device;
  const int n_train = static_cast<int>(std::lround(0.8 * n_total));
  const int n_test = n_total - n_train;

  std::uniform_int_distribution<int> pick_mode(0, M - 1);
  auto draw = [&](const std::vector<int>& classes, int n, Matrix& x, std::vector<int>& y) {
    x.resize(D, n);
    y.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const int label = classes[static_cast<std::size_t>(i) % classes.size()];
      y[static_cast<std::size_t>(i)] = label;
      const Eigen::Index col = Eigen::Index{label} * M + (M > 1 ? pick_mode(rng) : 0);
      for (Eigen::Index r = 0; r < D; ++r) {
        x(r, i) = data.prototypes(r, col) + cfg.feature_noise * normal(rng);
      }
    }
  };

  data.devices.resize(static_cast<std::size_t>(num_devices));
  for (int k = 0; k < num_devices; ++k) {
    auto& dev = data.devices[static_cast<std::size_t>(k)];
    for (int j = 0; j < c; ++j) {
      dev.classes.push_back(order[static_cast<std::size_t>((k * c + j) % C)]);
    }
    std::sort(dev.classes.begin(), dev.classes.end());
    draw(dev.classes, n_train, dev.train_x, dev.train_y);
    draw(dev.classes, n_test, dev.test_x, dev.test_y);
  }
  return data;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json cols = nlohmann::json::array();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    cols.push_back(std::vector<double>(m.col(j).data(), m.col(j).data() + m.rows()));
  }
  return cols;
}

Matrix matrix_from_json(const nlohmann::json& cols, Eigen::Index rows) {
  Matrix m(rows, static_cast<Eigen::Index>(cols.size()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const auto col = cols.at(static_cast<std::size_t>(j)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(col.size()) != rows) throw DataError("ragged feature matrix");
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = col[static_cast<std::size_t>(i)];
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const FederatedData& data) {
  nlohmann::json doc;
  doc["feature_dim"] = data.prototypes.rows();
  doc["prototypes"] = matrix_to_json(data.prototypes);
  doc["devices"] = nlohmann::json::array();
  for (const auto& d : data.devices) {
    doc["devices"].push_back({{"classes", d.classes},
                              {"train_x", matrix_to_json(d.train_x)},
                              {"train_y", d.train_y},
                              {"test_x", matrix_to_json(d.test_x)},
                              {"test_y", d.test_y}});
  }
  return doc;
}

FederatedData federated_data_from_json(const nlohmann::json& doc) {
  FederatedData data;
  const auto rows = doc.at("feature_dim").get<Eigen::Index>();
  data.prototypes = matrix_from_json(doc.at("prototypes"), rows);
  for (const auto& d : doc.at("devices")) {
    DeviceDataset dev;
    dev.classes = d.at("classes").get<std::vector<int>>();
    dev.train_x = matrix_from_json(d.at("train_x"), rows);
    dev.train_y = d.at("train_y").get<std::vector<int>>();
    dev.test_x = matrix_from_json(d.at("test_x"), rows);
    dev.test_y = d.at("test_y").get<std::vector<int>>();
    data.devices.push_back(std::move(dev));
  }
  return data;
}

SplitModel init_model(const ModelShape& shape, int num_devices, Rng& rng) {
  SplitModel m;
  m.shape = shape;
  m.base = Vector::Zero(shape.base_size());
  const Eigen::Index h = shape.hidden_dim, d = shape.feature_dim, c = shape.num_classes;
  auto fill = [&](double* p, Eigen::Index fan_out, Eigen::Index fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index i = 0; i < fan_out * fan_in; ++i) p[i] = u(rng);
  };
  fill(m.base.data(), h, d);
  fill(m.base.data() + h * d + h, h, h);
  Vector head = Vector::Zero(shape.head_size());
  fill(head.data(), c, h);
  m.heads.assign(static_cast<std::size_t>(num_devices), head);
  return m;
}

Batch gather(const Matrix& x, std::span<const int> labels, std::span<const int> columns) {
  Batch b;
  b.x.resize(x.rows(), static_cast<Eigen::Index>(columns.size()));
  b.y.resize(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    b.x.col(static_cast<Eigen::Index>(j)) = x.col(columns[j]);
    b.y[j] = labels[static_cast<std::size_t>(columns[j])];
  }
  return b;
}

double forward_loss(const ModelShape& shape, const Vector& base, const Vector& head,
                    const Matrix& x, std::span<const int> y) {
  check_shapes(shape, base, head, x, y);
  auto f = forward(shape, base, head, x);
  return softmax_nll(f.logits, y) / static_cast<double>(y.size());
}

GradientPair compute_gradients(const ModelShape& shape, const Vector& base, const Vector& head,
                               const Matrix& x, std::span<const int> y) {
  check_shapes(shape, base, head, x, y);
  const Eigen::Index h = shape.hidden_dim, d = shape.feature_dim, c = shape.num_classes;
  const double n = static_cast<double>(y.size());
  auto f = forward(shape, base, head, x);

  GradientPair g;
  g.loss = softmax_nll(f.logits, y) / n;
  Matrix& dz = f.logits;  // now probabilities
  for (Eigen::Index j = 0; j < dz.cols(); ++j) dz(y[static_cast<std::size_t>(j)], j) -= 1.0;
  dz /= n;

  const auto b = view_base(shape, base);
  const auto hv = view_head(shape, head);
  g.g_phi.resize(shape.head_size());
  MutMap(g.g_phi.data(), c, h).noalias() = dz * f.h2.transpose();
  g.g_phi.segment(c * h, c) = dz.rowwise().sum();

  Matrix da2 = (hv.w3.transpose() * dz).array() * (1.0 - f.h2.array().square());
  Matrix da1 = (b.w2.transpose() * da2).array() * (1.0 - f.h1.array().square());

  g.g_theta.resize(shape.base_size());
  double* p = g.g_theta.data();
  MutMap(p, h, d).noalias() = da1 * x.transpose();
  Eigen::Map<Vector>(p + h * d, h) = da1.rowwise().sum();
  MutMap(p + h * d + h, h, h).noalias() = da2 * f.h1.transpose();
  Eigen::Map<Vector>(p + h * d + h + h * h, h) = da2.rowwise().sum();

  g.g_theta_l2 = g.g_theta.norm();
  return g;
}

Matrix base_features(const ModelShape& shape, const Vector& base, const Matrix& x) {
  const auto b = view_base(shape, base);
  Matrix h1 = ((b.w1 * x).colwise() + b.b1).array().tanh();
  return ((b.w2 * h1).colwise() + b.b2).array().tanh();
}

double head_loss(const ModelShape& shape, const Vector& head, const Matrix& features,
                 std::span<const int> y) {
  const auto hv = view_head(shape, head);
  Matrix logits = (hv.w3 * features).colwise() + hv.b3;
  return softmax_nll(logits, y) / static_cast<double>(y.size());
}

Vector head_gradient(const ModelShape& shape, const Vector& head, const Matrix& features,
                     std::span<const int> y) {
  const Eigen::Index c = shape.num_classes, h = shape.hidden_dim;
  const auto hv = view_head(shape, head);
  Matrix dz = (hv.w3 * features).colwise() + hv.b3;
  softmax_nll(dz, y);
  for (Eigen::Index j = 0; j < dz.cols(); ++j) dz(y[static_cast<std::size_t>(j)], j) -= 1.0;
  dz /= static_cast<double>(y.size());
  Vector g(shape.head_size());
  MutMap(g.data(), c, h).noalias() = dz * features.transpose();
  g.segment(c * h, c) = dz.rowwise().sum();
  return g;
}

void local_personal_update(Vector& head, const Vector& g_phi, double gamma) {
  head -= gamma * g_phi;
}

LocalUpdate local_pass(const ModelShape& shape, const Vector& base, const Vector& head,
                       const DeviceDataset& data, const ScenarioConfig& cfg, Rng& rng) {
  LocalUpdate out;
  out.base_after = base;
  out.head_after = head;
  out.g_theta = Vector::Zero(shape.base_size());
  out.g_phi = Vector::Zero(shape.head_size());

  const int n = data.train_size();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  int steps = 0;
  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int len = std::min(cfg.batch_size, n - start);
      const auto batch = gather(data.train_x, data.train_y,
                                std::span<const int>(order).subspan(static_cast<std::size_t>(start),
                                                                    static_cast<std::size_t>(len)));
      const auto g = compute_gradients(shape, out.base_after, out.head_after, batch.x, batch.y);
      out.base_after -= cfg.lr_base * g.g_theta;
      out.head_after -= cfg.lr_head * g.g_phi;
      out.g_theta += g.g_theta;
      out.g_phi += g.g_phi;
      out.mean_loss += g.loss;
      ++steps;
    }
  }
  if (steps > 0) out.mean_loss /= steps;
  out.g_theta_l2 = out.g_theta.norm();
  return out;
}

GradientPair full_batch_gradients(const ModelShape& shape, const Vector& base,
                                  const Vector& head, const DeviceDataset& data) {
  return compute_gradients(shape, base, head, data.train_x, data.train_y);
}

double accuracy(const ModelShape& shape, const Vector& base, const Vector& head,
                const Matrix& x, std::span<const int> y) {
  if (y.empty()) return 0.0;
  const auto f = forward(shape, base, head, x);
  int correct = 0;
  for (Eigen::Index j = 0; j < f.logits.cols(); ++j) {
    Eigen::Index arg = 0;
    f.logits.col(j).maxCoeff(&arg);
    correct += (arg == y[static_cast<std::size_t>(j)]) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

Evaluation evaluate(const SplitModel& model, const FederatedData& data) {
  std::vector<const Vector*> bases(data.devices.size(), &model.base);
  return evaluate(model.shape, bases, model.heads, data);
}

Evaluation evaluate(const ModelShape& shape, std::span<const Vector* const> bases,
                    std::span<const Vector> heads, const FederatedData& data) {
  Evaluation ev;
  ev.per_device.reserve(data.devices.size());
  for (std::size_t k = 0; k < data.devices.size(); ++k) {
    const auto& d = data.devices[k];
    ev.per_device.push_back(accuracy(shape, *bases[k], heads[k], d.test_x, d.test_y));
  }
  if (!ev.per_device.empty()) {
    ev.mean = std::accumulate(ev.per_device.begin(), ev.per_device.end(), 0.0) /
              static_cast<double>(ev.per_device.size());
  }
  return ev;
}

}  // namespace uavpfl
