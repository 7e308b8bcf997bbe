#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtgn/events.hpp"
#include "mtgn/nn.hpp"
#include "mtgn/tensor.hpp"

namespace mtgn {

/// Per-node evolving state: observed/missing hidden vectors plus the last
/// time each node was involved in an observed/generated event. Static
/// embeddings live in the parameter store, not here.
struct NodeStates {
  std::vector<TensorPtr> evolved_obs;   // [1,d] each
  std::vector<TensorPtr> evolved_miss;  // [1,d] each
  std::vector<double> last_obs;
  std::vector<double> last_miss;
  std::vector<char> seen_obs;   // involved in any observed event so far
  std::vector<char> seen_miss;  // involved in any generated missing event so far

  /// Fresh zero states; never-seen nodes get last times one unit before the
  /// stream start so every interval stays positive.
  void reset(int node_count, std::int64_t dim, double start_time);
  /// Cuts every state out of the live graph (BPTT window boundary).
  void detach_all();
};

/// Per-layer weights of one message-passing path: self term, neighbor term,
/// and the time-interval column vector.
struct PassWeights {
  TensorPtr w_self;   // [d, d]
  TensorPtr w_neigh;  // [d, d]
  TensorPtr w_time;   // [1, d]
};

std::vector<PassWeights> make_pass_weights(ParamStore& store, const std::string& prefix,
                                           std::int64_t dim, int layers);

struct MessagePassOptions {
  bool ablate_time = false;  // drop the interval term entirely
  bool log1p_time = true;    // log1p-scale the scalar interval
};

/// Layered aggregation over one step's events. Each undirected event feeds
/// both endpoints; per-target contributions are averaged, with the interval
/// term (event time minus the pair's last involvement) inside the mean.
/// Returns the layered output rows for `nodes` (sorted unique endpoints).
TensorPtr message_pass(const std::vector<PassWeights>& layers, const TensorPtr& statics,
                       const std::vector<Event>& events,
                       const std::vector<double>& last_times,
                       const MessagePassOptions& opts, std::vector<int>& nodes);

/// Elementwise max pool of [static; evolved] rows over a membership set;
/// empty sets pool to zeros.
TensorPtr pool_rows(const TensorPtr& statics, const std::vector<TensorPtr>& evolved,
                    const std::vector<char>& members);
/// Pool of [static_o; evolved_o; static_m; evolved_m] rows over the union set.
TensorPtr pool_rows_joint(const TensorPtr& statics_o,
                          const std::vector<TensorPtr>& evolved_o,
                          const TensorPtr& statics_m,
                          const std::vector<TensorPtr>& evolved_m,
                          const std::vector<char>& members_o,
                          const std::vector<char>& members_m);

/// State values and pooled readouts captured before a step runs; everything
/// a step's scoring and prior conditioning read comes from here.
struct StateSnapshot {
  std::vector<TensorPtr> evolved_obs;
  std::vector<TensorPtr> evolved_miss;
  std::vector<double> last_obs;
  std::vector<double> last_miss;
  std::vector<char> seen_obs;
  std::vector<char> seen_miss;
  TensorPtr pooled_obs;   // [1, 2d]
  TensorPtr pooled_miss;  // [1, 2d]
  TensorPtr pooled_all;   // [1, 4d]
};

}  // namespace mtgn
