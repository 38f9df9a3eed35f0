#include "dmd/delay.hpp"

#include <algorithm>
#include <string>

#include "dmd/errors.hpp"

namespace dmd {

std::vector<int> DelaySchedule::effective() const {
  std::vector<int> eff(raw.size());
  for (size_t t = 0; t < raw.size(); ++t)
    eff[t] = std::min(raw[t], horizon - static_cast<int>(t));
  return eff;
}

int DelaySchedule::per_iterate_budget() const {
  int d = 1;
  for (int dt : raw) d = std::max(d, dt);
  return d;
}

long long DelaySchedule::total_budget() const {
  long long total = 0;
  for (int dt : effective()) total += dt;
  return total;
}

void DelaySchedule::validate() const {
  if (static_cast<int>(raw.size()) != horizon)
    throw ValidationError("schedule length " + std::to_string(raw.size()) +
                          " != horizon " + std::to_string(horizon));
  for (size_t t = 0; t < raw.size(); ++t)
    if (raw[t] <= 0)
      throw ValidationError("nonpositive delay at round " + std::to_string(t + 1));
}

DelaySchedule make_schedule(const AttackSpec& attack, int horizon, Rng& rng) {
  if (horizon <= 0) throw ConfigError("horizon must be positive");
  DelaySchedule schedule;
  schedule.horizon = horizon;
  schedule.raw.assign(horizon, 1);
  switch (attack.kind) {
    case AttackKind::None:
      break;
    case AttackKind::Constant:
      if (attack.budget < 1 || attack.budget > horizon)
        throw ConfigError("constant attack budget must lie in 1..T");
      std::fill(schedule.raw.begin(), schedule.raw.end(), attack.budget);
      break;
    case AttackKind::UniformRandom:
      if (attack.budget < 1 || attack.budget > horizon)
        throw ConfigError("uniform-random attack budget must lie in 1..T");
      for (int t = 0; t < horizon; ++t) schedule.raw[t] = rng.uniform_int(1, attack.budget);
      // The requested ||d||_inf is part of the attack contract; pin it.
      schedule.raw[rng.uniform_int(0, horizon - 1)] = attack.budget;
      break;
    case AttackKind::Burst: {
      if (attack.budget < 1 || attack.budget > horizon)
        throw ConfigError("burst attack budget must lie in 1..T");
      if (attack.start < 0 || attack.start >= horizon || attack.length < 1)
        throw ConfigError("burst window out of range");
      const int end = std::min(horizon, attack.start + attack.length);
      for (int t = attack.start; t < end; ++t) schedule.raw[t] = attack.budget;
      break;
    }
  }
  return schedule;
}

DeliveryCalendar build_calendar(const DelaySchedule& schedule) {
  schedule.validate();
  const int T = schedule.horizon;
  DeliveryCalendar calendar;
  calendar.horizon = T;
  calendar.deliveries.assign(T, {});
  const std::vector<int> eff = schedule.effective();
  for (int k = 0; k < T; ++k) calendar.deliveries[k + eff[k] - 1].push_back(k);
  calendar.first_origin.resize(T);
  for (int t = 0; t < T; ++t) {
    auto& bundle = calendar.deliveries[t];
    std::sort(bundle.begin(), bundle.end());
    calendar.first_origin[t] = bundle.empty() ? t : bundle.front();
  }
  return calendar;
}

std::vector<int> DeliveryCalendar::window_union(int t) const {
  std::vector<int> origins;
  for (int s = first_origin[t]; s <= t; ++s)
    origins.insert(origins.end(), deliveries[s].begin(), deliveries[s].end());
  std::sort(origins.begin(), origins.end());
  return origins;
}

QTauCounts q_tau_counts(const DeliveryCalendar& calendar, const DelaySchedule& schedule,
                        int t, int tau) {
  const auto& bundle = calendar.deliveries[t];
  if (!std::binary_search(bundle.begin(), bundle.end(), tau))
    throw ValidationError("origin " + std::to_string(tau + 1) + " not delivered at round " +
                          std::to_string(t + 1));
  QTauCounts counts;
  auto tally = [&](int q) {
    ++counts.q_tau;
    if (q >= tau)
      ++counts.q_tau1;
    else
      ++counts.q_tau2;
  };
  for (int q : bundle)
    if (q < tau) tally(q);
  for (int s = tau; s < t; ++s)
    for (int q : calendar.deliveries[s]) tally(q);

  const int d = schedule.per_iterate_budget();
  if (counts.q_tau1 > schedule.raw[tau] || counts.q_tau2 > d)
    throw ValidationError("pigeonhole bound violated at (t=" + std::to_string(t + 1) +
                          ", tau=" + std::to_string(tau + 1) + ")");
  return counts;
}

}  // namespace dmd
