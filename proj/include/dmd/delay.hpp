#pragma once

#include <vector>

#include "dmd/rng.hpp"

namespace dmd {

// Rounds are 0-based internally; a raw delay d_t >= 1 means the round-t
// latency report arrives at round t + min(d_t, T - t) - 1. d_t = 1 is
// immediate delivery.
struct DelaySchedule {
  int horizon = 0;
  std::vector<int> raw;  // d_t, length horizon, all >= 1

  std::vector<int> effective() const;  // min(d_t, T - t), 1-based semantics
  int per_iterate_budget() const;      // ||d||_inf over raw delays
  long long total_budget() const;      // sum of effective delays

  void validate() const;
};

enum class AttackKind { None, Constant, UniformRandom, Burst };

struct AttackSpec {
  AttackKind kind = AttackKind::None;
  int budget = 1;  // c for constant, d_max for uniform-random/burst
  int start = 0;   // burst: first attacked round (0-based)
  int length = 0;  // burst: number of attacked rounds
};

DelaySchedule make_schedule(const AttackSpec& attack, int horizon, Rng& rng);

struct DeliveryCalendar {
  int horizon = 0;
  std::vector<std::vector<int>> deliveries;  // D_t: origin rounds arriving at t, sorted
  std::vector<int> first_origin;             // tau_t = min D_t, or t when D_t empty

  // Origins delivered over rounds tau_t..t; bounded by 2 * ||d||_inf.
  std::vector<int> window_union(int t) const;
};

DeliveryCalendar build_calendar(const DelaySchedule& schedule);

// Q_tau = |D_{t,tau}| + sum_{s=tau}^{t-1} |D_s| with D_{t,tau} = {r in D_t :
// r < tau}: deliveries other than tau's that land in [tau, t]. The split
// counts origins q >= tau (at most d_tau, pigeonhole) and q < tau (at most
// ||d||_inf).
struct QTauCounts {
  int q_tau = 0;
  int q_tau1 = 0;
  int q_tau2 = 0;
};

QTauCounts q_tau_counts(const DeliveryCalendar& calendar, const DelaySchedule& schedule,
                        int t, int tau);

}  // namespace dmd
