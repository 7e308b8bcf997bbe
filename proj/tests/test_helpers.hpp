#pragma once

#include <vector>

#include "mtgn/config.hpp"
#include "mtgn/events.hpp"
#include "mtgn/model.hpp"

namespace mtgn::test {

inline TrainConfig tiny_config(int d = 4, int layers = 2, int k = 3) {
  TrainConfig cfg;
  cfg.embed_dim = d;
  cfg.gnn_layers = layers;
  cfg.mixture_k = k;
  cfg.mc_samples = 3;
  cfg.max_epochs = 1;
  cfg.seed = 7;
  return cfg;
}

inline EventStream stream_of(std::vector<Event> events, int node_count) {
  EventStream s;
  s.events = std::move(events);
  s.node_count = node_count;
  return s;
}

inline TimeStep step_of(std::vector<Event> observed, double t, double t_bar) {
  TimeStep ts;
  ts.t = t;
  ts.t_bar = t_bar;
  ts.observed = std::move(observed);
  return ts;
}

inline void zero_params(MtgnModel& model) {
  for (auto& p : model.params().all()) {
    std::fill(p->value->data.begin(), p->value->data.end(), 0.0);
  }
}

}  // namespace mtgn::test
