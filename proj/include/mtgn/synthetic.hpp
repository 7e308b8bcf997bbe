#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtgn/events.hpp"

namespace mtgn {

enum class SyntheticRegime { kPeriodicCommunities, kPreferentialBursty };

SyntheticRegime regime_from_string(const std::string& name);
std::string regime_to_string(SyntheticRegime regime);

/// Generator parameters; persisted alongside the stream so the true
/// statistics (mean inter-event gap, community assignment) stay checkable.
struct SyntheticMeta {
  SyntheticRegime regime;
  int n_nodes = 0;
  int n_events = 0;
  std::uint64_t seed = 0;
  double gap_mu = 0.0;
  double gap_sigma = 0.0;
  double true_mean_gap = 0.0;  // exp(mu + sigma^2 / 2)
  double community_bias = 0.0;
  int community_size = 0;
  std::vector<int> community_of;  // empty for the preferential regime

  std::string to_json() const;
};

struct SyntheticResult {
  EventStream stream;
  SyntheticMeta meta;
};

/// Recurring node pairs with log-normal inter-event gaps. The community
/// regime biases pair choice inside communities (learnable structure); the
/// preferential regime grows hub-heavy pairs with burstier timing.
SyntheticResult generate_synthetic(int n_nodes, int n_events, SyntheticRegime regime,
                                   std::uint64_t seed);

}  // namespace mtgn
