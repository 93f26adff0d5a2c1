#include "uavpfl/federation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uavpfl/random.hpp"
#include "uavpfl/scheduling.hpp"

namespace uavpfl {

std::vector<Vector> intra_uav_aggregate(std::span<const Vector> device_grads,
                                        const RoundSchedule& schedule,
                                        std::span<const int> dataset_sizes) {
  const Eigen::Index dim = device_grads.empty() ? 0 : device_grads.front().size();
  std::vector<Vector> sums(static_cast<std::size_t>(schedule.num_uavs), Vector::Zero(dim));
  for (int k : schedule.selected) {
    for (int u = 0; u < schedule.num_uavs; ++u) {
      if (!schedule.device_uploads(k, u)) continue;
      sums[static_cast<std::size_t>(u)] +=
          static_cast<double>(dataset_sizes[static_cast<std::size_t>(k)]) *
          device_grads[static_cast<std::size_t>(k)];
    }
  }
  return sums;
}

Vector inter_uav_update(const Vector& theta, std::span<const Vector> uav_sums,
                        const RoundSchedule& schedule, std::span<const int> dataset_sizes,
                        double eta) {
  if (schedule.selected.empty()) return theta;
  double total = 0.0;
  for (int k : schedule.selected) total += dataset_sizes[static_cast<std::size_t>(k)];
  Vector acc = Vector::Zero(theta.size());
  for (const auto& g : uav_sums) acc += g;
  return theta - eta * (acc / total);
}

Vector flat_weighted_update(const Vector& theta, std::span<const Vector> device_grads,
                            std::span<const int> selected, std::span<const int> dataset_sizes,
                            double eta) {
  if (selected.empty()) return theta;
  Vector acc = Vector::Zero(theta.size());
  double total = 0.0;
  for (int k : selected) {
    const double w = dataset_sizes[static_cast<std::size_t>(k)];
    acc += w * device_grads[static_cast<std::size_t>(k)];
    total += w;
  }
  return theta - eta * (acc / total);
}

std::string_view to_string(Exchanged e) {
  switch (e) {
    case Exchanged::kGradients:
      return "gradients";
    case Exchanged::kModels:
      return "models";
    default:
      return "none";
  }
}

std::string_view to_string(StopReason r) {
  return r == StopReason::kBudget ? "budget" : "max_rounds";
}

Trainer::Trainer(const ScenarioConfig& cfg) : cfg_(cfg) {
  validate(cfg_);
  state_.topology = build_topology(cfg_);
  auto rng = make_rng(cfg_.seed, Stream::kData);
  data_ = generate_federated_data(cfg_, state_.topology.num_devices(), rng);
  init_model();
}

Trainer::Trainer(const ScenarioConfig& cfg, Topology topology, FederatedData data)
    : cfg_(cfg), data_(std::move(data)) {
  validate(cfg_);
  if (static_cast<int>(data_.devices.size()) != topology.num_devices()) {
    throw std::invalid_argument("one dataset per device is required");
  }
  state_.topology = std::move(topology);
  init_model();
}

void Trainer::init_model() {
  sizes_ = data_.train_sizes();
  auto rng = make_rng(cfg_.seed, Stream::kModelInit);
  state_.model = uavpfl::init_model(ModelShape::from(cfg_), state_.topology.num_devices(), rng);
  if (cfg_.policy == Policy::kIntraUavFedAvg) {
    state_.cluster_bases.assign(static_cast<std::size_t>(state_.topology.num_uavs()),
                                state_.model.base);
  }
}

const Vector& Trainer::device_base(int k) const {
  if (state_.cluster_bases.empty()) return state_.model.base;
  const int u = state_.topology.serving_uav[static_cast<std::size_t>(k)];
  return state_.cluster_bases[static_cast<std::size_t>(u)];
}

void Trainer::aggregate(const RoundSchedule& s, std::span<const LocalUpdate> updates) {
  auto& model = state_.model;
  const auto K = updates.size();

  if (!is_fedavg_family(s.policy)) {
    // Hierarchical gradient aggregation of the base, then the personal step
    // on every head. head_after is exactly phi - gamma * g_phi.
    if (!s.selected.empty()) {
      std::vector<Vector> grads(K);
      for (std::size_t k = 0; k < K; ++k) grads[k] = updates[k].g_theta;
      const auto sums = intra_uav_aggregate(grads, s, sizes_);
      model.base = inter_uav_update(model.base, sums, s, sizes_, cfg_.lr_base);
    }
    for (std::size_t k = 0; k < K; ++k) model.heads[k] = updates[k].head_after;
    return;
  }

  auto average = [&](std::span<const int> members, Vector& base, Vector& head) {
    base.setZero(model.shape.base_size());
    head.setZero(model.shape.head_size());
    double total = 0.0;
    for (int k : members) {
      const double w = sizes_[static_cast<std::size_t>(k)];
      base += w * updates[static_cast<std::size_t>(k)].base_after;
      head += w * updates[static_cast<std::size_t>(k)].head_after;
      total += w;
    }
    base /= total;
    head /= total;
  };

  if (s.per_uav_only) {
    const auto& topo = state_.topology;
    for (int u = 0; u < topo.num_uavs(); ++u) {
      std::vector<int> members;
      for (int k : s.selected) {
        if (s.device_uploads(k, u)) members.push_back(k);
      }
      if (members.empty()) continue;
      Vector base, head;
      average(members, base, head);
      state_.cluster_bases[static_cast<std::size_t>(u)] = std::move(base);
      for (int k : topo.served[static_cast<std::size_t>(u)]) model.heads[static_cast<std::size_t>(k)] = head;
    }
    return;
  }

  if (s.selected.empty()) return;
  Vector base, head;
  average(s.selected, base, head);
  model.base = std::move(base);
  for (auto& h : model.heads) h = head;
}

const RoundRecord& Trainer::run_round() {
  const int t = state_.round;
  const auto tag = static_cast<std::uint64_t>(t);
  if (t > 0 && cfg_.mobile_devices) {
    auto rng = make_rng(cfg_.seed, Stream::kMobility, {tag});
    state_.topology = remobilize_devices(state_.topology, cfg_, rng);
  }
  const auto& topo = state_.topology;
  const auto shape = state_.model.shape;
  const int K = topo.num_devices();

  std::vector<LocalUpdate> updates(static_cast<std::size_t>(K));
  std::vector<double> norms(static_cast<std::size_t>(K));
  double loss = 0.0;
  for (int k = 0; k < K; ++k) {
    auto rng = make_rng(cfg_.seed, Stream::kLocalTraining, {static_cast<std::uint64_t>(k), tag});
    auto& up = updates[static_cast<std::size_t>(k)];
    up = local_pass(shape, device_base(k), state_.model.heads[static_cast<std::size_t>(k)],
                    data_.devices[static_cast<std::size_t>(k)], cfg_, rng);
    norms[static_cast<std::size_t>(k)] = up.g_theta_l2;
    loss += up.mean_loss;
  }

  auto sched_rng = make_rng(cfg_.seed, Stream::kScheduling, {tag});
  const auto schedule = select_round({t, norms}, topo, cfg_, sched_rng);

  RoundRecord rec;
  rec.round = t;
  rec.selected = schedule.selected;
  rec.designated_uav = schedule.designated_uav;
  rec.active_uavs = schedule.active_uavs;
  rec.exchanged = schedule.selected.empty()            ? Exchanged::kNone
                  : is_fedavg_family(schedule.policy) ? Exchanged::kModels
                                                      : Exchanged::kGradients;
  rec.mean_train_loss = K > 0 ? loss / K : 0.0;

  if (cfg_.diagnostics) {
    std::vector<const Vector*> bases(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) bases[static_cast<std::size_t>(k)] = &device_base(k);
    auto rng = make_rng(cfg_.seed, Stream::kDiagnostics, {tag});
    const DiagnosticsRequest req{cfg_.diag_batches, cfg_.diag_subset_draws, cfg_.batch_size,
                                 cfg_.diag_tracking_steps};
    rec.bounds = estimate_bounds(shape, bases, state_.model.heads, data_, schedule.selected, req,
                                 rng);
  }

  aggregate(schedule, updates);

  rec.ledger = round_ledger(schedule, topo, sizes_, cfg_, state_.cumulative_energy);
  state_.cumulative_energy = rec.ledger.cumulative_energy;

  const bool last = t + 1 == cfg_.max_rounds || rec.ledger.budget_exceeded;
  if (t % cfg_.eval_interval == 0 || last) {
    std::vector<const Vector*> bases(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) bases[static_cast<std::size_t>(k)] = &device_base(k);
    state_.last_accuracy = evaluate(shape, bases, state_.model.heads, data_).mean;
    rec.evaluated = true;
  }
  rec.mean_accuracy = state_.last_accuracy;

  ++state_.round;
  state_.history.push_back(std::move(rec));
  return state_.history.back();
}

TrainingResult run_training(Trainer& trainer) {
  TrainingResult result;
  result.initial_topology = trainer.state().topology;
  while (trainer.state().round < trainer.config().max_rounds) {
    trainer.run_round();
    if (trainer.budget_exhausted()) {
      result.stop_reason = StopReason::kBudget;
      break;
    }
  }
  result.rounds = trainer.state().history;
  result.final_model = trainer.state().model;
  return result;
}

TrainingResult run_training(const ScenarioConfig& cfg) {
  Trainer trainer(cfg);
  return run_training(trainer);
}

}  // namespace uavpfl
