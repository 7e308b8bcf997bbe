#include "mtgn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <stdexcept>

#include "mtgn/rng.hpp"

namespace mtgn {

SyntheticRegime regime_from_string(const std::string& name) {
  if (name == "periodic-communities") return SyntheticRegime::kPeriodicCommunities;
  if (name == "preferential-bursty") return SyntheticRegime::kPreferentialBursty;
  throw std::runtime_error("unknown synthetic regime: " + name +
                           " (expected periodic-communities or preferential-bursty)");
}

std::string regime_to_string(SyntheticRegime regime) {
  return regime == SyntheticRegime::kPeriodicCommunities ? "periodic-communities"
                                                         : "preferential-bursty";
}

std::string SyntheticMeta::to_json() const {
  nlohmann::json j;
  j["regime"] = regime_to_string(regime);
  j["n_nodes"] = n_nodes;
  j["n_events"] = n_events;
  j["seed"] = seed;
  j["gap_mu"] = gap_mu;
  j["gap_sigma"] = gap_sigma;
  j["true_mean_gap"] = true_mean_gap;
  j["community_bias"] = community_bias;
  j["community_size"] = community_size;
  j["community_of"] = community_of;
  return j.dump(2);
}

namespace {

struct Pair {
  int u, v;
};

std::vector<Pair> community_pairs(int n_nodes, int community_size, double bias,
                                  std::vector<int>& community_of, Rng& rng) {
  const int n_comm = (n_nodes + community_size - 1) / community_size;
  community_of.assign(n_nodes, 0);
  for (int i = 0; i < n_nodes; ++i) community_of[i] = i / community_size;

  std::vector<Pair> intra;
  for (int c = 0; c < n_comm; ++c) {
    const int lo = c * community_size;
    const int hi = std::min(n_nodes, lo + community_size);
    const int sz = hi - lo;
    if (sz >= 2) intra.push_back({lo, lo + 1});
    if (sz >= 4) intra.push_back({lo + 2, lo + 3});
    if (sz >= 3) intra.push_back({lo, lo + 2});
  }
  // Cross-community pairs sized so roughly `bias` of pairs stay intra.
  const auto n_cross = static_cast<std::size_t>(
      std::llround(static_cast<double>(intra.size()) * (1.0 - bias) / bias));
  std::vector<Pair> pairs = intra;
  std::size_t added = 0;
  while (added < n_cross && n_comm > 1) {
    const int u = static_cast<int>(rng.uniform_int(n_nodes));
    const int v = static_cast<int>(rng.uniform_int(n_nodes));
    if (u == v || community_of[u] == community_of[v]) continue;
    pairs.push_back({u, v});
    ++added;
  }
  return pairs;
}

std::vector<Pair> preferential_pairs(int n_nodes, Rng& rng) {
  std::vector<double> degree(static_cast<std::size_t>(n_nodes), 1.0);
  std::vector<Pair> pairs;
  const int n_pairs = std::max(n_nodes, 8);
  pairs.reserve(static_cast<std::size_t>(n_pairs));
  while (static_cast<int>(pairs.size()) < n_pairs) {
    const int u = static_cast<int>(rng.categorical(degree));
    const int v = static_cast<int>(rng.categorical(degree));
    if (u == v) continue;
    pairs.push_back({u, v});
    degree[u] += 1.0;
    degree[v] += 1.0;
  }
  return pairs;
}

}  // namespace

SyntheticResult generate_synthetic(int n_nodes, int n_events, SyntheticRegime regime,
                                   std::uint64_t seed) {
  if (n_nodes < 4) throw std::runtime_error("generate_synthetic: need >= 4 nodes");
  if (n_events < n_nodes) {
    throw std::runtime_error("generate_synthetic: degenerate graph, n_events " +
                             std::to_string(n_events) + " < n_nodes " +
                             std::to_string(n_nodes));
  }

  SyntheticResult out;
  auto& meta = out.meta;
  meta.regime = regime;
  meta.n_nodes = n_nodes;
  meta.n_events = n_events;
  meta.seed = seed;

  Rng rng(seed);
  Rng structure_rng = rng.split(1);

  std::vector<Pair> pairs;
  if (regime == SyntheticRegime::kPeriodicCommunities) {
    meta.gap_mu = 2.2;
    meta.gap_sigma = 0.4;
    meta.community_bias = 0.9;
    meta.community_size = 4;
    pairs = community_pairs(n_nodes, meta.community_size, meta.community_bias,
                            meta.community_of, structure_rng);
  } else {
    meta.gap_mu = 1.2;
    meta.gap_sigma = 0.9;
    pairs = preferential_pairs(n_nodes, structure_rng);
  }
  meta.true_mean_gap = std::exp(meta.gap_mu + 0.5 * meta.gap_sigma * meta.gap_sigma);

  // Equal per-pair event budgets keep the gap sample free of horizon bias:
  // every generated gap survives into the stream.
  const auto n_pairs = pairs.size();
  std::vector<int> budget(n_pairs, n_events / static_cast<int>(n_pairs));
  for (std::size_t i = 0; i < n_events % n_pairs; ++i) ++budget[i];

  std::vector<Event> events;
  events.reserve(static_cast<std::size_t>(n_events));
  const auto stagger =
      std::max<std::int64_t>(2, std::llround(2.0 * meta.true_mean_gap));
  for (std::size_t p = 0; p < n_pairs; ++p) {
    Rng pair_rng = rng.split(100 + p);
    std::int64_t t = pair_rng.uniform_int(stagger);
    for (int k = 0; k < budget[p]; ++k) {
      Event e;
      e.u = pairs[p].u;
      e.v = pairs[p].v;
      e.t = static_cast<double>(t);
      events.push_back(e);
      const double gap = std::exp(meta.gap_mu + meta.gap_sigma * pair_rng.normal());
      t += std::max<std::int64_t>(1, std::llround(gap));
    }
  }

  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.t < b.t; });
  const double t0 = events.front().t;
  for (auto& e : events) e.t -= t0;

  out.stream.events = std::move(events);
  out.stream.node_count = n_nodes;
  out.stream.time_unit = "1 unit";
  return out;
}

}  // namespace mtgn
