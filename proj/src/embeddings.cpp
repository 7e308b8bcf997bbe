#include "mtgn/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "mtgn/ops.hpp"

namespace mtgn {

void NodeStates::reset(int node_count, std::int64_t dim, double start_time) {
  evolved_obs.assign(node_count, nullptr);
  evolved_miss.assign(node_count, nullptr);
  for (int u = 0; u < node_count; ++u) {
    evolved_obs[u] = Tensor::zeros(1, dim);
    evolved_miss[u] = Tensor::zeros(1, dim);
  }
  last_obs.assign(node_count, start_time - 1.0);
  last_miss.assign(node_count, start_time - 1.0);
  seen_obs.assign(node_count, 0);
  seen_miss.assign(node_count, 0);
}

void NodeStates::detach_all() {
  for (auto& t : evolved_obs) {
    if (t->backward_fn) t = detach(t);
  }
  for (auto& t : evolved_miss) {
    if (t->backward_fn) t = detach(t);
  }
}

std::vector<PassWeights> make_pass_weights(ParamStore& store, const std::string& prefix,
                                           std::int64_t dim, int layers) {
  std::vector<PassWeights> out;
  out.reserve(layers);
  for (int l = 0; l < layers; ++l) {
    PassWeights w;
    const std::string p = prefix + ".layer" + std::to_string(l);
    w.w_self = store.create(p + ".self", dim, dim, Init::kGaussianFanIn);
    w.w_neigh = store.create(p + ".neigh", dim, dim, Init::kGaussianFanIn);
    w.w_time = store.create(p + ".time", 1, dim, Init::kGaussianFanIn);
    out.push_back(std::move(w));
  }
  return out;
}

TensorPtr message_pass(const std::vector<PassWeights>& layers, const TensorPtr& statics,
                       const std::vector<Event>& events,
                       const std::vector<double>& last_times,
                       const MessagePassOptions& opts, std::vector<int>& nodes) {
  if (events.empty()) throw std::runtime_error("message_pass: no events");
  const auto node_count = statics->rows();

  nodes.clear();
  for (const auto& e : events) {
    if (e.u < 0 || e.v < 0 || e.u >= node_count || e.v >= node_count) {
      throw std::runtime_error("message_pass: event references unknown node " +
                               std::to_string(e.u) + "-" + std::to_string(e.v));
    }
    nodes.push_back(e.u);
    nodes.push_back(e.v);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::unordered_map<int, std::int64_t> local;
  for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = i;

  // Undirected: each event contributes both directions. The interval is the
  // event time minus the pair's last involvement, shared by both directions.
  const auto n_edges = static_cast<std::int64_t>(2 * events.size());
  std::vector<std::int64_t> src(n_edges), dst(n_edges);
  std::vector<double> interval(n_edges);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const double delta = e.t - std::max(last_times[e.u], last_times[e.v]);
    double scaled = 0.0;
    if (!opts.ablate_time) {
      scaled = opts.log1p_time ? std::log1p(std::max(0.0, delta)) : delta;
    }
    dst[2 * i] = local[e.u];
    src[2 * i] = local[e.v];
    dst[2 * i + 1] = local[e.v];
    src[2 * i + 1] = local[e.u];
    interval[2 * i] = interval[2 * i + 1] = scaled;
  }

  std::vector<std::int64_t> node_ids(nodes.begin(), nodes.end());
  TensorPtr h = gather_rows(statics, node_ids);
  const auto n_local = static_cast<std::int64_t>(nodes.size());
  for (const auto& layer : layers) {
    auto self = matmul(h, layer.w_self);
    auto msg = matmul(gather_rows(h, src), layer.w_neigh);
    if (!opts.ablate_time) {
      msg = add(msg, scale_rows(repeat_rows(layer.w_time, n_edges), interval));
    }
    h = add(self, segment_mean_rows(msg, dst, n_local));
  }
  return h;
}

TensorPtr pool_rows(const TensorPtr& statics, const std::vector<TensorPtr>& evolved,
                    const std::vector<char>& members) {
  const auto d = statics->cols();
  std::vector<std::int64_t> idx;
  std::vector<TensorPtr> rows;
  for (std::size_t u = 0; u < members.size(); ++u) {
    if (members[u]) {
      idx.push_back(static_cast<std::int64_t>(u));
      rows.push_back(evolved[u]);
    }
  }
  if (idx.empty()) return Tensor::zeros(1, 2 * d);
  return colwise_max(concat_cols({gather_rows(statics, idx), concat_rows(rows)}));
}

TensorPtr pool_rows_joint(const TensorPtr& statics_o,
                          const std::vector<TensorPtr>& evolved_o,
                          const TensorPtr& statics_m,
                          const std::vector<TensorPtr>& evolved_m,
                          const std::vector<char>& members_o,
                          const std::vector<char>& members_m) {
  const auto d = statics_o->cols();
  std::vector<std::int64_t> idx;
  std::vector<TensorPtr> rows_o, rows_m;
  for (std::size_t u = 0; u < members_o.size(); ++u) {
    if (members_o[u] || members_m[u]) {
      idx.push_back(static_cast<std::int64_t>(u));
      rows_o.push_back(evolved_o[u]);
      rows_m.push_back(evolved_m[u]);
    }
  }
  if (idx.empty()) return Tensor::zeros(1, 4 * d);
  return colwise_max(concat_cols({gather_rows(statics_o, idx), concat_rows(rows_o),
                                  gather_rows(statics_m, idx), concat_rows(rows_m)}));
}

}  // namespace mtgn
