#include <doctest.h>

#include <cmath>
#include <numeric>

#include "uavpfl/diagnostics.hpp"
#include "uavpfl/federation.hpp"
#include "uavpfl/trace.hpp"

using namespace uavpfl;

namespace {

struct Fixture {
  ScenarioConfig cfg = default_config();
  ModelShape shape = ModelShape::from(cfg);
  FederatedData data;
  SplitModel model;

  Fixture() {
    auto rng = make_rng(3, Stream::kData);
    data = generate_federated_data(cfg, 8, rng);
    auto init = make_rng(3, Stream::kModelInit);
    model = init_model(shape, 8, init);
  }
};

// Every input appears once with every label, so the zero head is optimal.
DeviceDataset ambiguous_dataset(const ModelShape& s, int points, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  DeviceDataset d;
  d.train_x.resize(s.feature_dim, points * s.num_classes);
  for (int p = 0; p < points; ++p) {
    Vector x(s.feature_dim);
    for (auto& v : x) v = n(rng);
    for (int c = 0; c < s.num_classes; ++c) {
      d.train_x.col(p * s.num_classes + c) = x;
      d.train_y.push_back(c);
    }
  }
  for (int c = 0; c < s.num_classes; ++c) d.classes.push_back(c);
  return d;
}

}  // namespace

TEST_CASE("composition identity") {
  CHECK(compose_v_theta(2.0, 4, 0.25, 0.5) == 2.0 / 4 + 0.25 + 0.25);
  CHECK(compose_v_theta(2.0, 0, 0.1, 0.0) == 0.1);
}

TEST_CASE("selection bias") {
  Rng rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Vector> g(12, Vector(5));
  for (auto& v : g) for (auto& x : v) x = n(rng);
  std::vector<int> all(12);
  std::iota(all.begin(), all.end(), 0);
  const std::vector<int> equal(12, 40);
  CHECK(estimate_selection_bias(g, all, equal) <= 1e-12);

  const std::vector<Vector> same(12, g[0]);
  CHECK(estimate_selection_bias(same, std::vector<int>{1, 5}, equal) <= 1e-15);

  std::uniform_int_distribution<int> sz(1, 100);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> w(12);
    for (auto& x : w) x = sz(rng);
    std::vector<int> subset;
    std::sample(all.begin(), all.end(), std::back_inserter(subset), 1 + trial % 11, rng);
    Vector num = Vector::Zero(5);
    double den = 0.0;
    Vector mean = Vector::Zero(5);
    for (int k : subset) {
      num += w[static_cast<std::size_t>(k)] * g[static_cast<std::size_t>(k)];
      den += w[static_cast<std::size_t>(k)];
    }
    for (const auto& v : g) mean += v / 12.0;
    const double direct = (num / den - mean).norm();
    CHECK(estimate_selection_bias(g, subset, w) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("gradient variance") {
  Fixture f;
  const auto& d = f.data.devices[0];
  Rng rng(8);
  CHECK(estimate_gradient_variance(f.shape, f.model.base, f.model.heads[0], d, 5, d.train_size(), rng) <=
        1e-24);

  // One batch of n-1 samples: the result is one of the leave-one-out deviations.
  const int n = 12;
  DeviceDataset tiny = d;
  tiny.train_x = d.train_x.leftCols(n);
  tiny.train_y.assign(d.train_y.begin(), d.train_y.begin() + n);
  const double one = estimate_gradient_variance(f.shape, f.model.base, f.model.heads[0], tiny, 1, n - 1, rng);
  const Vector full = full_batch_gradients(f.shape, f.model.base, f.model.heads[0], tiny).g_theta;
  bool matched = false;
  for (int skip = 0; skip < n; ++skip) {
    std::vector<int> cols;
    for (int j = 0; j < n; ++j) if (j != skip) cols.push_back(j);
    const auto b = gather(tiny.train_x, tiny.train_y, cols);
    const double dev = (compute_gradients(f.shape, f.model.base, f.model.heads[0], b.x, b.y).g_theta - full).squaredNorm();
    matched = matched || std::abs(dev - one) <= 1e-12 * std::max(dev, 1e-30);
  }
  CHECK(matched);
}

TEST_CASE("gradient variance recovers the sampling-without-replacement variance") {
  Fixture f;
  const auto& d = f.data.devices[1];
  const int n = d.train_size();
  const int b = 10;
  // Exact variance of a size-b minibatch mean drawn without replacement.
  const Vector full = full_batch_gradients(f.shape, f.model.base, f.model.heads[1], d).g_theta;
  double spread = 0.0;
  for (int i = 0; i < n; ++i) {
    const Matrix x = d.train_x.col(i);
    const auto g = compute_gradients(f.shape, f.model.base, f.model.heads[1], x, std::vector<int>{d.train_y[static_cast<std::size_t>(i)]});
    spread += (g.g_theta - full).squaredNorm() / n;
  }
  const double exact = spread / b * (n - b) / (n - 1.0);
  Rng rng(12);
  const double est = estimate_gradient_variance(f.shape, f.model.base, f.model.heads[1], d, 1000, b, rng);
  CHECK(std::abs(est - exact) / exact < 0.10);
}

TEST_CASE("sampling variance") {
  Rng rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Vector> g(10, Vector(4));
  for (auto& v : g) for (auto& x : v) x = n(rng);
  const std::vector<int> w(10, 1);
  CHECK(estimate_sampling_variance(g, w, 10, 16, rng) == 0.0);
  CHECK(estimate_sampling_variance(g, w, 3, 1, rng) == 0.0);
  const std::vector<Vector> same(10, g[0]);
  CHECK(estimate_sampling_variance(same, w, 3, 16, rng) <= 1e-28);

  // |S| Var(mean of S) = (K - |S|)/(K - 1) * per-device spread.
  Vector mean = Vector::Zero(4);
  for (const auto& v : g) mean += v / 10.0;
  double spread = 0.0;
  for (const auto& v : g) spread += (v - mean).squaredNorm() / 9.0;
  const double exact = spread * (10.0 - 3.0) / 10.0;
  const double est = estimate_sampling_variance(g, w, 3, 20000, rng);
  CHECK(std::abs(est - exact) / exact < 0.05);
}

TEST_CASE("tracking error") {
  const ModelShape s{8, 6, 10};
  Rng rng(9);
  const auto d = ambiguous_dataset(s, 12, rng);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Vector base(s.base_size());
  for (auto& v : base) v = u(rng);
  const Vector zero = Vector::Zero(s.head_size());
  CHECK(estimate_tracking_error(s, base, zero, d, 500) <= 1e-6);

  Vector head(s.head_size());
  for (auto& v : head) v = u(rng);
  CHECK(estimate_tracking_error(s, base, head, d, 0) == 0.0);
  CHECK(inner_head_descent(s, base, head, d, 0) == head);

  // Head-only descent on the convex final layer: distance to the optimum
  // (the zero head) never increases along the iterates.
  double prev = head.norm();
  for (int steps = 1; steps <= 60; ++steps) {
    const double dist = inner_head_descent(s, base, head, d, steps).norm();
    CHECK(dist <= prev + 1e-15);
    prev = dist;
  }
  CHECK(prev < head.norm());
}

TEST_CASE("bound estimates inside training") {
  auto cfg = default_config();
  cfg.num_uavs = 4;
  cfg.samples_per_device = 100;
  cfg.max_rounds = 3;
  cfg.diagnostics = true;
  cfg.diag_tracking_steps = 5;
  cfg.alpha = 1.0;
  const auto full = run_training(cfg);
  for (const auto& r : full.rounds) {
    REQUIRE(r.bounds.has_value());
    const auto& b = *r.bounds;
    CHECK(b.beta_sel <= 1e-12);
    CHECK(b.samp_var == 0.0);
    CHECK(b.tracking_err.size() == 8);
    CHECK(b.v_theta == compose_v_theta(b.sigma_theta, b.num_selected, b.samp_var, b.beta_sel));
    for (double x : {b.sigma_theta, b.samp_var, b.v_theta, b.grad_norm_sq}) CHECK(x >= 0.0);
  }

  std::vector<BoundSeries> series;
  for (double a : {0.25, 1.0}) {
    cfg.alpha = a;
    series.push_back(bound_series(run_training(cfg), cfg));
  }
  const auto report = bound_trend_report(series);
  REQUIRE(report.series.size() == 2);
  CHECK(report.series[0].label == "alpha=0.25");
  CHECK(report.series[0].rows.size() == 3);
  for (const auto& row : report.series[1].rows) CHECK(row.beta_sel <= 1e-12);
  for (const auto& row : report.series[0].rows) CHECK(row.beta_sel > 0.0);
  const auto js = to_json(report);
  CHECK(js.size() == 2);
  CHECK(js[0]["rows"].size() == 3);
  const auto& r0 = report.series[0].rows;
  CHECK(r0[1].running_grad_norm_sq ==
        doctest::Approx((series[0].estimates[0].grad_norm_sq + series[0].estimates[1].grad_norm_sq) / 2));
}
