#include <doctest.h>

#include <cmath>
#include <set>

#include "uavpfl/learning.hpp"

using namespace uavpfl;

namespace {

// Scalar-loop forward pass, written against the documented parameter layout:
// base = [W1 (h x d), b1, W2 (h x h), b2], head = [W3 (C x h), b3], column-major.
double naive_loss(const ModelShape& s, const Vector& base, const Vector& head, const Matrix& x,
                  const std::vector<int>& y) {
  const int d = s.feature_dim, h = s.hidden_dim, c = s.num_classes;
  const double* w1 = base.data();
  const double* b1 = w1 + h * d;
  const double* w2 = b1 + h;
  const double* b2 = w2 + h * h;
  const double* w3 = head.data();
  const double* b3 = w3 + c * h;
  double total = 0.0;
  for (int n = 0; n < static_cast<int>(y.size()); ++n) {
    std::vector<double> a1(h), a2(h), z(c);
    for (int i = 0; i < h; ++i) {
      double acc = b1[i];
      for (int j = 0; j < d; ++j) acc += w1[i + j * h] * x(j, n);
      a1[i] = std::tanh(acc);
    }
    for (int i = 0; i < h; ++i) {
      double acc = b2[i];
      for (int j = 0; j < h; ++j) acc += w2[i + j * h] * a1[j];
      a2[i] = std::tanh(acc);
    }
    double zmax = -INFINITY;
    for (int i = 0; i < c; ++i) {
      double acc = b3[i];
      for (int j = 0; j < h; ++j) acc += w3[i + j * c] * a2[j];
      z[i] = acc;
      zmax = std::max(zmax, acc);
    }
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    total += -(z[static_cast<std::size_t>(y[static_cast<std::size_t>(n)])] - zmax - std::log(sum));
  }
  return total / static_cast<double>(y.size());
}

struct Fixture {
  ScenarioConfig cfg = default_config();
  ModelShape shape = ModelShape::from(cfg);
  FederatedData data;
  SplitModel model;

  explicit Fixture(int c = 6, int devices = 24, std::uint64_t seed = 1) {
    cfg.heterogeneity_c = c;
    cfg.seed = seed;
    auto rng = make_rng(seed, Stream::kData);
    data = generate_federated_data(cfg, devices, rng);
    auto init = make_rng(seed, Stream::kModelInit);
    model = init_model(shape, devices, init);
  }
};

}  // namespace

TEST_CASE("model dimensions") {
  const ModelShape s{32, 64, 10};
  CHECK(s.base_size() == 32 * 64 + 64 + 64 * 64 + 64);
  CHECK(s.head_size() == 64 * 10 + 10);
  const double ratio = static_cast<double>(s.head_size()) / static_cast<double>(s.base_size() + s.head_size());
  CHECK(ratio < 0.2);
  Fixture f;
  CHECK(f.model.base.allFinite());
  CHECK(f.model.heads.size() == 24);
  for (const auto& h : f.model.heads) CHECK(h == f.model.heads[0]);
}

TEST_CASE("partition with c = 6") {
  Fixture f;
  std::set<int> coverage;
  for (const auto& d : f.data.devices) {
    CHECK(d.classes.size() == 6);
    CHECK(d.train_size() == 200);
    CHECK(d.test_y.size() == 50);
    const std::set<int> own(d.classes.begin(), d.classes.end());
    for (int y : d.train_y) CHECK(own.contains(y));
    for (int y : d.test_y) CHECK(own.contains(y));
    coverage.insert(own.begin(), own.end());
  }
  CHECK(coverage.size() == 10);
  CHECK(f.data.prototypes.cols() == 10 * f.cfg.modes_per_class);
}

TEST_CASE("partition extremes") {
  Fixture iid(10, 4);
  for (const auto& d : iid.data.devices) CHECK(d.classes.size() == 10);
  Fixture single(1, 12);
  for (const auto& d : single.data.devices) {
    REQUIRE(d.classes.size() == 1);
    for (int y : d.train_y) CHECK(y == d.classes[0]);
  }
  auto cfg = default_config();
  cfg.heterogeneity_c = 11;
  auto rng = make_rng(1, Stream::kData);
  CHECK_THROWS_AS(generate_federated_data(cfg, 4, rng), DataError);
}

TEST_CASE("data generation is deterministic and serialisable") {
  Fixture a;
  Fixture b;
  const auto ja = to_json(a.data);
  CHECK(ja == to_json(b.data));
  const auto back = federated_data_from_json(ja);
  CHECK(back.prototypes == a.data.prototypes);
  REQUIRE(back.devices.size() == a.data.devices.size());
  for (std::size_t k = 0; k < back.devices.size(); ++k) {
    CHECK(back.devices[k].train_x == a.data.devices[k].train_x);
    CHECK(back.devices[k].train_y == a.data.devices[k].train_y);
    CHECK(back.devices[k].test_x == a.data.devices[k].test_x);
    CHECK(back.devices[k].classes == a.data.devices[k].classes);
  }
}

TEST_CASE("loss at uniform logits and at a large margin") {
  Fixture f;
  const auto& d = f.data.devices[0];
  const Vector zero_head = Vector::Zero(f.shape.head_size());
  CHECK(forward_loss(f.shape, f.model.base, zero_head, d.train_x, d.train_y) ==
        doctest::Approx(std::log(10.0)).epsilon(1e-14));

  Vector confident = Vector::Zero(f.shape.head_size());
  const int label = d.train_y[0];
  confident(f.shape.num_classes * f.shape.hidden_dim + label) = 60.0;
  const Matrix one = d.train_x.col(0);
  CHECK(forward_loss(f.shape, f.model.base, confident, one, std::vector<int>{label}) < 1e-20);
}

TEST_CASE("forward pass agrees with a scalar re-implementation") {
  Fixture f;
  auto rng = make_rng(99, Stream::kModelInit);
  std::normal_distribution<double> n(0.0, 0.3);
  Vector head(f.shape.head_size());
  for (auto& v : head) v = n(rng);
  for (int k = 0; k < 3; ++k) {
    const auto& d = f.data.devices[static_cast<std::size_t>(k)];
    const Matrix x = d.train_x.leftCols(7);
    const std::vector<int> y(d.train_y.begin(), d.train_y.begin() + 7);
    CHECK(forward_loss(f.shape, f.model.base, head, x, y) ==
          doctest::Approx(naive_loss(f.shape, f.model.base, head, x, y)).epsilon(1e-13));
  }
}

TEST_CASE("shape mismatches are rejected") {
  Fixture f;
  const auto& d = f.data.devices[0];
  const Vector short_head = Vector::Zero(5);
  CHECK_THROWS_AS(forward_loss(f.shape, f.model.base, short_head, d.train_x, d.train_y),
                  std::invalid_argument);
  CHECK_THROWS_AS(compute_gradients(f.shape, f.model.base, f.model.heads[0], d.train_x, {}),
                  std::invalid_argument);
}

TEST_CASE("finite differences on every parameter block") {
  Fixture f;
  auto rng = make_rng(7, Stream::kModelInit);
  std::normal_distribution<double> n(0.0, 0.5);
  Vector head(f.shape.head_size());
  for (auto& v : head) v = n(rng);
  Vector base = f.model.base;
  for (auto& v : base) v += 0.1 * n(rng);
  const auto& d = f.data.devices[1];
  const Matrix x = d.train_x.leftCols(10);
  const std::vector<int> y(d.train_y.begin(), d.train_y.begin() + 10);
  const auto g = compute_gradients(f.shape, base, head, x, y);
  CHECK(g.g_theta_l2 == doctest::Approx(g.g_theta.norm()).epsilon(1e-15));
  CHECK(g.loss == doctest::Approx(forward_loss(f.shape, base, head, x, y)).epsilon(1e-15));

  const Eigen::Index h = 64, dd = 32, c = 10;
  const std::vector<std::pair<Eigen::Index, Eigen::Index>> base_blocks{
      {0, h * dd}, {h * dd, h}, {h * dd + h, h * h}, {h * dd + h + h * h, h}};
  const std::vector<std::pair<Eigen::Index, Eigen::Index>> head_blocks{{0, c * h}, {c * h, c}};
  const double step = 1e-6;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto rel = [](double fd, double an) { return std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3}); };

  for (const auto& [start, len] : base_blocks) {
    for (int i = 0; i < 10; ++i) {
      const Eigen::Index j = start + static_cast<Eigen::Index>(u(rng) * static_cast<double>(len));
      Vector p = base, m = base;
      p(j) += step;
      m(j) -= step;
      const double fd = (forward_loss(f.shape, p, head, x, y) - forward_loss(f.shape, m, head, x, y)) / (2 * step);
      CHECK(rel(fd, g.g_theta(j)) < 1e-5);
    }
  }
  for (const auto& [start, len] : head_blocks) {
    for (int i = 0; i < 10; ++i) {
      const Eigen::Index j = start + static_cast<Eigen::Index>(u(rng) * static_cast<double>(len));
      Vector p = head, m = head;
      p(j) += step;
      m(j) -= step;
      const double fd = (forward_loss(f.shape, base, p, x, y) - forward_loss(f.shape, base, m, x, y)) / (2 * step);
      CHECK(rel(fd, g.g_phi(j)) < 1e-5);
    }
  }
}

TEST_CASE("zero model: head-bias gradient equals class-frequency deviation") {
  Fixture f;
  const auto& d = f.data.devices[2];
  const Vector base = Vector::Zero(f.shape.base_size());
  const Vector head = Vector::Zero(f.shape.head_size());
  const auto g = compute_gradients(f.shape, base, head, d.train_x, d.train_y);
  std::vector<double> freq(10, 0.0);
  for (int y : d.train_y) freq[static_cast<std::size_t>(y)] += 1.0 / d.train_size();
  for (int cls = 0; cls < 10; ++cls) {
    CHECK(g.g_phi(640 + cls) == doctest::Approx(0.1 - freq[static_cast<std::size_t>(cls)]).epsilon(1e-14));
  }
  CHECK(g.g_theta.isZero(0.0));
}

TEST_CASE("full-batch gradient is the mean of single-sample gradients") {
  Fixture f;
  const auto& d = f.data.devices[3];
  const Matrix x = d.train_x.leftCols(25);
  const std::vector<int> y(d.train_y.begin(), d.train_y.begin() + 25);
  const auto full = compute_gradients(f.shape, f.model.base, f.model.heads[3], x, y);
  Vector t = Vector::Zero(full.g_theta.size());
  Vector p = Vector::Zero(full.g_phi.size());
  for (int i = 0; i < 25; ++i) {
    const Matrix xi = x.col(i);
    const auto gi = compute_gradients(f.shape, f.model.base, f.model.heads[3], xi, std::vector<int>{y[static_cast<std::size_t>(i)]});
    t += gi.g_theta / 25.0;
    p += gi.g_phi / 25.0;
  }
  CHECK((t - full.g_theta).norm() <= 1e-12 * full.g_theta.norm());
  CHECK((p - full.g_phi).norm() <= 1e-12 * full.g_phi.norm());
}

TEST_CASE("identical data and heads give identical gradients") {
  Fixture f(10, 2);
  auto copy = f.data.devices[0];
  const auto a = full_batch_gradients(f.shape, f.model.base, f.model.heads[0], f.data.devices[0]);
  const auto b = full_batch_gradients(f.shape, f.model.base, f.model.heads[1], copy);
  CHECK(a.g_theta == b.g_theta);
  CHECK(a.g_phi == b.g_phi);
}

TEST_CASE("personal update") {
  Fixture f;
  const auto& d = f.data.devices[0];
  Vector head = f.model.heads[0];
  const Vector before = head;
  const Matrix feats = base_features(f.shape, f.model.base, d.train_x);
  const Vector g = head_gradient(f.shape, head, feats, d.train_y);

  local_personal_update(head, g, 0.0);
  CHECK(head == before);
  local_personal_update(head, Vector::Zero(g.size()), 0.3);
  CHECK(head == before);

  const auto full = full_batch_gradients(f.shape, f.model.base, head, d);
  CHECK((full.g_phi - g).norm() <= 1e-13 * g.norm());
  local_personal_update(head, g, 0.05);
  CHECK(head == before - 0.05 * g);
  CHECK(head_loss(f.shape, head, feats, d.train_y) < head_loss(f.shape, before, feats, d.train_y));
}

TEST_CASE("single-batch local pass reduces to one gradient step") {
  Fixture f;
  auto cfg = f.cfg;
  cfg.batch_size = 1000;
  const auto& d = f.data.devices[4];
  auto rng = make_rng(1, Stream::kLocalTraining, {4, 0});
  const auto up = local_pass(f.shape, f.model.base, f.model.heads[4], d, cfg, rng);
  const auto g = full_batch_gradients(f.shape, f.model.base, f.model.heads[4], d);
  CHECK((up.g_theta - g.g_theta).norm() <= 1e-12 * g.g_theta.norm());
  CHECK((up.g_phi - g.g_phi).norm() <= 1e-12 * g.g_phi.norm());
  CHECK((up.base_after - (f.model.base - cfg.lr_base * up.g_theta)).norm() == doctest::Approx(0.0));
  CHECK((up.head_after - (f.model.heads[4] - cfg.lr_head * up.g_phi)).norm() == doctest::Approx(0.0));
  CHECK(up.g_theta_l2 == up.g_theta.norm());
}

TEST_CASE("multi-step pass accumulates the pseudo-gradient") {
  Fixture f;
  auto cfg = f.cfg;
  cfg.local_epochs = 2;
  const auto& d = f.data.devices[5];
  auto rng = make_rng(1, Stream::kLocalTraining, {5, 0});
  const auto up = local_pass(f.shape, f.model.base, f.model.heads[5], d, cfg, rng);
  const Vector delta = (f.model.base - up.base_after) / cfg.lr_base;
  CHECK((delta - up.g_theta).norm() <= 1e-9 * up.g_theta.norm());
  auto again = make_rng(1, Stream::kLocalTraining, {5, 0});
  const auto up2 = local_pass(f.shape, f.model.base, f.model.heads[5], d, cfg, again);
  CHECK(up2.base_after == up.base_after);
}

TEST_CASE("evaluation") {
  Fixture f(10, 24);
  const auto a = evaluate(f.model, f.data);
  const auto b = evaluate(f.model, f.data);
  CHECK(a.per_device == b.per_device);
  CHECK(a.mean == b.mean);
  CHECK(a.per_device.size() == 24);
  CHECK(a.mean == doctest::Approx(0.10).epsilon(0.3));  // 1200 test points, +-0.03

  // Single-class devices: a head whose bias favours the class is always right.
  Fixture one(1, 6);
  auto model = one.model;
  for (int k = 0; k < 6; ++k) {
    model.heads[static_cast<std::size_t>(k)].setZero();
    model.heads[static_cast<std::size_t>(k)](640 + one.data.devices[static_cast<std::size_t>(k)].classes[0]) = 1.0;
  }
  const auto ev = evaluate(model, one.data);
  CHECK(ev.mean == 1.0);
}
