#include "uavpfl/scheduling.hpp"

#include <algorithm>
#include <numeric>

#include "uavpfl/channel.hpp"
#include "uavpfl/energetics.hpp"

namespace uavpfl {

namespace {

std::vector<int> by_descending_norm(std::span<const double> norms) {
  std::vector<int> order(norms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return norms[static_cast<std::size_t>(a)] > norms[static_cast<std::size_t>(b)];
  });
  return order;
}

void check_norms(std::span<const double> norms, const Topology& topo) {
  if (static_cast<int>(norms.size()) != topo.num_devices()) {
    throw SchedulingError("expected one gradient norm per device");
  }
}

// Delay part of Q for leader `lead` serving `devices`.
double candidate_delay(const Topology& topo, const ScenarioConfig& cfg, Policy policy,
                       const std::vector<int>& devices, int lead) {
  const auto s = make_schedule(topo, policy, devices, lead);
  const auto u2u = u2u_transmit_time(s, topo, cfg);
  const auto bc = broadcast_time(s, topo, cfg);
  return *std::max_element(u2u.begin(), u2u.end()) + bc[static_cast<std::size_t>(lead)];
}

}  // namespace

std::vector<int> top_count_select(std::span<const double> grad_norms, int count) {
  auto order = by_descending_norm(grad_norms);
  order.resize(static_cast<std::size_t>(std::clamp<int>(count, 0, static_cast<int>(order.size()))));
  return order;
}

std::vector<int> top_alpha_select(std::span<const double> grad_norms, double alpha) {
  return top_count_select(grad_norms, selection_size(alpha, static_cast<int>(grad_norms.size())));
}

std::vector<int> device_ranks(std::span<const double> grad_norms) {
  const auto order = by_descending_norm(grad_norms);
  std::vector<int> rank(grad_norms.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    rank[static_cast<std::size_t>(order[i])] = static_cast<int>(i) + 1;
  }
  return rank;
}

int random_designated_uav(const Topology& topo, std::span<const int> selected, Rng& rng) {
  std::vector<int> eligible;
  for (int u = 0; u < topo.num_uavs(); ++u) {
    for (int k : selected) {
      if (topo.serving_uav[static_cast<std::size_t>(k)] == u) {
        eligible.push_back(u);
        break;
      }
    }
  }
  if (eligible.empty()) throw SchedulingError("no aggregation this round");
  std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
  return eligible[pick(rng)];
}

std::vector<double> normalise_unit(std::span<const double> values, double floor) {
  std::vector<double> out(values.size(), 1.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = floor + (1.0 - floor) * (values[i] - *lo) / span;
  }
  return out;
}

std::vector<double> cumulative_importance(const Topology& topo, std::span<const int> ranks) {
  std::vector<double> importance(static_cast<std::size_t>(topo.num_uavs()), 0.0);
  for (int u = 0; u < topo.num_uavs(); ++u) {
    for (int k : topo.served[static_cast<std::size_t>(u)]) {
      importance[static_cast<std::size_t>(u)] += ranks[static_cast<std::size_t>(k)];
    }
  }
  return importance;
}

std::vector<LeaderCandidate> evaluate_leaders(std::span<const double> grad_norms,
                                              const Topology& topo, const ScenarioConfig& cfg,
                                              const SelectionWeights& weights) {
  check_norms(grad_norms, topo);
  const int U = topo.num_uavs();
  const int K = topo.num_devices();
  const int needed = cfg.num_selected(K);
  if (K < needed) throw SchedulingError("coverage infeasible: too few devices in total");

  const auto ranks = device_ranks(grad_norms);
  const auto rank_order = by_descending_norm(grad_norms);

  // Normalised importance over the UAVs that serve someone; empty UAVs never
  // join a set since they cover nothing.
  std::vector<int> serving_uavs;
  for (int u = 0; u < U; ++u) {
    if (!topo.served[static_cast<std::size_t>(u)].empty()) serving_uavs.push_back(u);
  }
  const auto raw_importance = cumulative_importance(topo, ranks);
  std::vector<double> importance_sub;
  for (int u : serving_uavs) importance_sub.push_back(raw_importance[static_cast<std::size_t>(u)]);
  const auto importance_norm_sub = normalise_unit(importance_sub);
  std::vector<double> importance(static_cast<std::size_t>(U), 1.0);
  for (std::size_t i = 0; i < serving_uavs.size(); ++i) {
    importance[static_cast<std::size_t>(serving_uavs[i])] = importance_norm_sub[i];
  }

  const Policy policy = weights.importance_in_priority ? Policy::kGradEnergyTradeoff
                                                       : Policy::kEnergyOptOnly;
  std::vector<LeaderCandidate> out;
  out.reserve(static_cast<std::size_t>(U));
  for (int lead = 0; lead < U; ++lead) {
    std::vector<int> others;
    std::vector<double> gains;
    for (int v : serving_uavs) {
      if (v == lead) continue;
      others.push_back(v);
      gains.push_back(u2u_gain(topo.u2u_distance(lead, v), cfg).gain_linear);
    }
    const auto gain_norm = normalise_unit(gains);
    std::vector<double> priority(others.size());
    for (std::size_t i = 0; i < others.size(); ++i) {
      priority[i] = gain_norm[i];
      if (weights.importance_in_priority) {
        priority[i] /= importance[static_cast<std::size_t>(others[i])];
      }
    }
    std::vector<std::size_t> order(others.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return priority[a] > priority[b]; });

    LeaderCandidate cand;
    cand.leader = lead;
    cand.uav_set.push_back(lead);
    int covered = static_cast<int>(topo.served[static_cast<std::size_t>(lead)].size());
    for (std::size_t i = 0; i < order.size() && covered < needed; ++i) {
      const int v = others[order[i]];
      cand.uav_set.push_back(v);
      covered += static_cast<int>(topo.served[static_cast<std::size_t>(v)].size());
    }
    if (covered < needed) {
      throw SchedulingError("coverage infeasible: all UAVs together cover fewer than " +
                            std::to_string(needed) + " devices");
    }

    std::vector<bool> in_set(static_cast<std::size_t>(U), false);
    for (int v : cand.uav_set) in_set[static_cast<std::size_t>(v)] = true;
    if (weights.devices_by_rank) {
      for (int k : rank_order) {
        if (static_cast<int>(cand.devices.size()) == needed) break;
        if (in_set[static_cast<std::size_t>(topo.serving_uav[static_cast<std::size_t>(k)])]) {
          cand.devices.push_back(k);
        }
      }
    } else {
      for (int k = 0; k < K && static_cast<int>(cand.devices.size()) < needed; ++k) {
        if (in_set[static_cast<std::size_t>(topo.serving_uav[static_cast<std::size_t>(k)])]) {
          cand.devices.push_back(k);
        }
      }
    }

    cand.delay = candidate_delay(topo, cfg, policy, cand.devices, lead);
    for (int v : cand.uav_set) cand.importance += importance[static_cast<std::size_t>(v)];
    cand.score = cand.delay + weights.importance_weight * cand.importance;
    out.push_back(std::move(cand));
  }
  return out;
}

namespace {

const LeaderCandidate& best_candidate(const std::vector<LeaderCandidate>& cands) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    if (cands[i].score < cands[best].score) best = i;
  }
  return cands[best];
}

RoundSchedule from_candidate(const Topology& topo, Policy policy, const LeaderCandidate& c) {
  auto s = make_schedule(topo, policy, c.devices, c.leader);
  s.active_uavs = c.uav_set;
  return s;
}

}  // namespace

RoundSchedule grad_energy_tradeoff_select(std::span<const double> grad_norms, const Topology& topo,
                                          const ScenarioConfig& cfg) {
  const auto cands = evaluate_leaders(grad_norms, topo, cfg,
                                      {cfg.delay_importance_weight, true, true});
  return from_candidate(topo, Policy::kGradEnergyTradeoff, best_candidate(cands));
}

RoundSchedule energy_opt_only_select(const Topology& topo, const ScenarioConfig& cfg) {
  // Norms are irrelevant here: importance is switched off and devices are
  // filled in index order.
  const std::vector<double> flat(static_cast<std::size_t>(topo.num_devices()), 0.0);
  const auto cands = evaluate_leaders(flat, topo, cfg, {0.0, false, false});
  return from_candidate(topo, Policy::kEnergyOptOnly, best_candidate(cands));
}

RoundSchedule max_grad_energy_opt_select(std::span<const double> grad_norms, const Topology& topo,
                                         const ScenarioConfig& cfg) {
  check_norms(grad_norms, topo);
  const auto selected = top_alpha_select(grad_norms, cfg.alpha);
  int best = 0;
  double best_delay = 0.0;
  for (int u = 0; u < topo.num_uavs(); ++u) {
    const double d = candidate_delay(topo, cfg, Policy::kMaxGradEnergyOpt, selected, u);
    if (u == 0 || d < best_delay) {
      best = u;
      best_delay = d;
    }
  }
  return make_schedule(topo, Policy::kMaxGradEnergyOpt, selected, best);
}

RoundSchedule baseline_select(Policy policy, const SchedulerState& state, const Topology& topo,
                              const ScenarioConfig& cfg, Rng& rng) {
  const int K = topo.num_devices();
  const int m = cfg.num_selected(K);
  auto hierarchical = [&](std::vector<int> selected, bool full_model) {
    const int lead = random_designated_uav(topo, selected, rng);
    return make_schedule(topo, policy, std::move(selected), lead, full_model);
  };
  std::vector<int> all(static_cast<std::size_t>(K));
  std::iota(all.begin(), all.end(), 0);

  switch (policy) {
    case Policy::kTopAlphaRandomUav:
      check_norms(state.grad_norms, topo);
      return hierarchical(top_count_select(state.grad_norms, m), false);
    case Policy::kRandomFedPer: {
      std::vector<int> picked;
      std::sample(all.begin(), all.end(), std::back_inserter(picked), m, rng);
      return hierarchical(std::move(picked), false);
    }
    case Policy::kSequentialFedPer: {
      std::vector<int> picked;
      const long start = (static_cast<long>(state.round) * m) % K;
      for (int i = 0; i < m; ++i) picked.push_back(static_cast<int>((start + i) % K));
      return hierarchical(std::move(picked), false);
    }
    case Policy::kGradBasedFedAvg: {
      check_norms(state.grad_norms, topo);
      const int half = (K + 1) / 2;
      return hierarchical(top_count_select(state.grad_norms, half), true);
    }
    case Policy::kInterUavFedAvg:
      return hierarchical(all, true);
    case Policy::kIntraUavFedAvg:
      return make_schedule(topo, policy, all, std::nullopt, true, true);
    case Policy::kLocalOnly:
      return make_schedule(topo, policy, {}, std::nullopt);
    default:
      throw SchedulingError("policy " + std::string(to_string(policy)) + " is not a baseline");
  }
}

RoundSchedule select_round(const SchedulerState& state, const Topology& topo,
                           const ScenarioConfig& cfg, Rng& rng) {
  switch (cfg.policy) {
    case Policy::kGradEnergyTradeoff:
      return grad_energy_tradeoff_select(state.grad_norms, topo, cfg);
    case Policy::kMaxGradEnergyOpt:
      return max_grad_energy_opt_select(state.grad_norms, topo, cfg);
    case Policy::kEnergyOptOnly:
      return energy_opt_only_select(topo, cfg);
    default:
      return baseline_select(cfg.policy, state, topo, cfg, rng);
  }
}

}  // namespace uavpfl
