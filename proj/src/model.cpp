#include "mtgn/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "mtgn/ops.hpp"

namespace mtgn {

MtgnModel::MtgnModel(int node_count, const TrainConfig& cfg)
    : node_count_(node_count), cfg_(cfg), store_(cfg.seed ^ 0x6d74676eULL) {
  const std::int64_t d = cfg.embed_dim;
  const std::int64_t v = node_count;

  static_obs = store_.create("embed.static_obs", v, d, Init::kGaussianStd01);
  static_miss = store_.create("embed.static_miss", v, d, Init::kGaussianStd01);
  obs_layers = make_pass_weights(store_, "embed.obs", d, cfg.gnn_layers);
  miss_layers = make_pass_weights(store_, "embed.miss", d, cfg.gnn_layers);
  obs_gru = GruCell(store_, "embed.obs_gru", d, d);
  miss_gru = GruCell(store_, "embed.miss_gru", d, d);

  head_obs_subject = Mlp(store_, "head.obs_subject", 4 * d, d, v);
  head_obs_object = Mlp(store_, "head.obs_object", 8 * d, d, v);
  head_prior_subject = Mlp(store_, "head.prior_subject", 4 * d, d, v);
  head_prior_object = Mlp(store_, "head.prior_object", 8 * d, d, v);
  head_post_subject = Mlp(store_, "head.post_subject", 6 * d, d, v);
  head_post_object = Mlp(store_, "head.post_object", 12 * d, d, v);

  tpp_obs = MixtureHead(store_, "tpp.obs", 4 * d, d, cfg.mixture_k);
  tpp_prior = MixtureHead(store_, "tpp.prior", 4 * d, d, cfg.mixture_k);
  tpp_post = MixtureHead(store_, "tpp.post", 6 * d, d, cfg.mixture_k);
}

MtgnEngine::MtgnEngine(MtgnModel& model, NodeStates& states)
    : model_(model), states_(states) {}

StateSnapshot MtgnEngine::snapshot() const {
  StateSnapshot snap;
  snap.evolved_obs = states_.evolved_obs;
  snap.evolved_miss = states_.evolved_miss;
  snap.last_obs = states_.last_obs;
  snap.last_miss = states_.last_miss;
  snap.seen_obs = states_.seen_obs;
  snap.seen_miss = states_.seen_miss;
  snap.pooled_obs = pool_rows(model_.static_obs, snap.evolved_obs, snap.seen_obs);
  snap.pooled_miss = pool_rows(model_.static_miss, snap.evolved_miss, snap.seen_miss);
  snap.pooled_all =
      pool_rows_joint(model_.static_obs, snap.evolved_obs, model_.static_miss,
                      snap.evolved_miss, snap.seen_obs, snap.seen_miss);
  return snap;
}

MtgnEngine::ObservedUpdate MtgnEngine::apply_observed(const TimeStep& step) {
  if (step.observed.empty()) {
    throw std::runtime_error("apply_observed: empty step");
  }
  MessagePassOptions opts{model_.config().ablate_w_t, model_.config().log1p_time};
  std::vector<int> nodes;
  auto messages = message_pass(model_.obs_layers, model_.static_obs, step.observed,
                               states_.last_obs, opts, nodes);
  std::vector<TensorPtr> prev;
  prev.reserve(nodes.size());
  for (int u : nodes) prev.push_back(states_.evolved_obs[u]);
  auto evolved = model_.obs_gru.forward(messages, concat_rows(prev));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const int u = nodes[i];
    states_.evolved_obs[u] = take_row(evolved, static_cast<std::int64_t>(i));
    states_.last_obs[u] = step.t;
    states_.seen_obs[u] = 1;
  }
  ObservedUpdate upd;
  upd.nodes = std::move(nodes);
  upd.pooled_obs_t = pool_rows(model_.static_obs, states_.evolved_obs, states_.seen_obs);
  return upd;
}

MtgnEngine::Generation MtgnEngine::generate_missing(
    const TimeStep& step, const StateSnapshot& snap, const ObservedUpdate& upd,
    double q_ratio, int n_mc, Rng& rng, SampleTrace* trace, Process process,
    bool compute_kl) {
  if (q_ratio < 0.0) throw std::runtime_error("generate_missing: Q must be >= 0");
  if (!(step.t > step.t_bar)) {
    throw std::runtime_error("generate_missing: degenerate window, t == t_bar");
  }
  if (process == Process::kObserved) {
    throw std::runtime_error("generate_missing: process must be prior or posterior");
  }

  Generation gen;
  const auto n_draws = static_cast<std::int64_t>(
      std::llround(q_ratio * static_cast<double>(step.observed.size())));
  if (n_draws == 0) {
    gen.kl = Tensor::scalar(0.0);
    return gen;
  }
  const double upper = step.t - step.t_bar;
  const bool normalized = !model_.config().unnormalized_truncation;

  // Frozen-state draws: each draw owns a split stream, so outcomes are
  // independent of the number of sibling draws.
  std::vector<Rng> draw_rngs;
  draw_rngs.reserve(n_draws);
  for (std::int64_t i = 0; i < n_draws; ++i) draw_rngs.push_back(rng.split(i));

  auto prior_subject_lp =
      log_softmax_rows(model_.head_prior_subject.forward(snap.pooled_all));
  auto post_subject_lp = log_softmax_rows(model_.head_post_subject.forward(
      concat_cols({snap.pooled_all, upd.pooled_obs_t})));
  const auto& subject_lp =
      process == Process::kPrior ? prior_subject_lp : post_subject_lp;

  std::vector<int> us(n_draws);
  for (std::int64_t i = 0; i < n_draws; ++i) {
    int u = 0;
    if (!trace || !trace->replaying) {
      u = static_cast<int>(draw_rngs[i].categorical_from_logprobs(subject_lp->data));
    }
    if (trace) u = static_cast<int>(trace->record_or_replay(u));
    us[i] = u;
  }

  auto gbar_u = gbar_rows(us, snap.evolved_obs, snap.evolved_miss);
  auto pooled_all_rep = repeat_rows(snap.pooled_all, n_draws);
  auto prior_object_lp = log_softmax_rows(
      model_.head_prior_object.forward(concat_cols({gbar_u, pooled_all_rep})));
  auto post_object_lp = log_softmax_rows(model_.head_post_object.forward(concat_cols(
      {gbar_u, pooled_all_rep, obar_rows(us, states_.evolved_obs),
       repeat_rows(upd.pooled_obs_t, n_draws)})));
  const auto& object_lp = process == Process::kPrior ? prior_object_lp : post_object_lp;

  std::vector<int> vs(n_draws);
  for (std::int64_t i = 0; i < n_draws; ++i) {
    int v = 0;
    if (!trace || !trace->replaying) {
      const auto row = object_lp->data.begin() + i * model_.node_count();
      v = static_cast<int>(draw_rngs[i].categorical_from_logprobs(
          std::vector<double>(row, row + model_.node_count())));
    }
    if (trace) v = static_cast<int>(trace->record_or_replay(v));
    vs[i] = v;
  }

  // Interval heads. The posterior conditions on the current evolved observed
  // states of the sampled pair; the prior sees only the snapshot.
  auto evolved_of = [this](const std::vector<int>& nodes) {
    std::vector<TensorPtr> rows;
    rows.reserve(nodes.size());
    for (int u : nodes) rows.push_back(states_.evolved_obs[u]);
    return concat_rows(rows);
  };
  auto gstar_u = gstar_rows(us, snap.evolved_obs, snap.evolved_miss);
  auto gstar_v = gstar_rows(vs, snap.evolved_obs, snap.evolved_miss);
  auto prior_ctx = concat_cols({gstar_u, gstar_v});
  auto prior_node = model_.tpp_prior.forward(prior_ctx);
  auto post_node = model_.tpp_post.forward(
      concat_cols({gstar_u, gstar_v, evolved_of(us), evolved_of(vs)}));

  const MixtureNode& sample_node =
      process == Process::kPrior ? prior_node : post_node;
  std::vector<double> deltas(n_draws);
  for (std::int64_t i = 0; i < n_draws; ++i) {
    double d = 0.0;
    if (!trace || !trace->replaying) {
      d = sample_truncated(mixture_row(sample_node, i), upper, draw_rngs[i]);
    }
    if (trace) d = trace->record_or_replay(d);
    deltas[i] = d;
  }

  gen.events.reserve(n_draws);
  for (std::int64_t i = 0; i < n_draws; ++i) {
    Event e;
    e.u = us[i];
    e.v = vs[i];
    // Clip into the open interval: a tiny delta can be absorbed by t_bar in
    // floating point, and the window is strict on both sides.
    e.t = std::min(std::max(step.t_bar + deltas[i],
                            std::nextafter(step.t_bar, step.t)),
                   std::nextafter(step.t, step.t_bar));
    e.kind = EventKind::kMissing;
    gen.events.push_back(e);
  }

  if (compute_kl) {
    auto subject_kl = scale(categorical_kl_rows(post_subject_lp, prior_subject_lp),
                            static_cast<double>(n_draws));
    auto object_kl = sum_all(categorical_kl_rows(post_object_lp, prior_object_lp));
    // Per-draw Monte Carlo samples for the interval KL, drawn from the
    // truncated posterior with the draw's own stream.
    TensorPtr time_kl;
    for (int j = 0; j < n_mc; ++j) {
      std::vector<double> mc(n_draws);
      for (std::int64_t i = 0; i < n_draws; ++i) {
        double d = 0.0;
        if (!trace || !trace->replaying) {
          d = sample_truncated(mixture_row(post_node, i), upper, draw_rngs[i]);
        }
        if (trace) d = trace->record_or_replay(d);
        mc[i] = d;
      }
      auto term = sub(mixture_truncated_log_pdf(post_node, mc, upper, normalized),
                      mixture_log_pdf(prior_node, mc));
      time_kl = time_kl ? add(time_kl, term) : term;
    }
    time_kl = scale(sum_all(time_kl), 1.0 / static_cast<double>(n_mc));
    gen.kl = add(subject_kl, add(object_kl, time_kl));
    gen.kl_value = gen.kl->data[0];
  } else {
    gen.kl = Tensor::scalar(0.0);
  }
  return gen;
}

void MtgnEngine::apply_missing(const TimeStep& step,
                               const std::vector<Event>& generated) {
  if (generated.empty()) return;
  for (const auto& e : generated) {
    if (!(e.t > step.t_bar && e.t < step.t)) {
      throw std::runtime_error("apply_missing: generated time " + std::to_string(e.t) +
                               " outside (" + std::to_string(step.t_bar) + ", " +
                               std::to_string(step.t) + ")");
    }
  }
  MessagePassOptions opts{model_.config().ablate_w_t, model_.config().log1p_time};
  std::vector<int> nodes;
  auto messages = message_pass(model_.miss_layers, model_.static_miss, generated,
                               states_.last_miss, opts, nodes);
  std::vector<TensorPtr> prev;
  prev.reserve(nodes.size());
  for (int u : nodes) prev.push_back(states_.evolved_miss[u]);
  auto evolved = model_.miss_gru.forward(messages, concat_rows(prev));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const int u = nodes[i];
    states_.evolved_miss[u] = take_row(evolved, static_cast<std::int64_t>(i));
    states_.seen_miss[u] = 1;
  }
  for (const auto& e : generated) {
    states_.last_miss[e.u] = std::max(states_.last_miss[e.u], e.t);
    states_.last_miss[e.v] = std::max(states_.last_miss[e.v], e.t);
  }
}

TensorPtr MtgnEngine::pooled_all_for_loss(const StateSnapshot& snap) const {
  return pool_rows_joint(model_.static_obs, snap.evolved_obs, model_.static_miss,
                         states_.evolved_miss, snap.seen_obs, states_.seen_miss);
}

TensorPtr MtgnEngine::structure_loglik(const TimeStep& step,
                                       const StateSnapshot& snap) const {
  if (step.observed.empty()) {
    throw std::runtime_error("structure_loglik: empty step");
  }
  const auto m = static_cast<std::int64_t>(step.observed.size());
  std::vector<int> us(m);
  std::vector<std::int64_t> u_idx(m), v_idx(m);
  for (std::int64_t i = 0; i < m; ++i) {
    us[i] = step.observed[i].u;
    u_idx[i] = step.observed[i].u;
    v_idx[i] = step.observed[i].v;
  }
  auto pooled = pooled_all_for_loss(snap);
  auto subject_lp = log_softmax_rows(model_.head_obs_subject.forward(pooled));
  auto subject_sum = lastdim_sum(gather_cols(subject_lp, u_idx));

  auto gbar_u = gbar_rows(us, snap.evolved_obs, states_.evolved_miss);
  auto object_lp = log_softmax_rows(
      model_.head_obs_object.forward(concat_cols({gbar_u, repeat_rows(pooled, m)})));
  auto object_sum = sum_all(select_per_row(object_lp, v_idx));
  return add(subject_sum, object_sum);
}

TensorPtr MtgnEngine::time_loglik(const TimeStep& step,
                                  const StateSnapshot& snap) const {
  std::vector<int> us, vs;
  std::vector<double> taus;
  for (const auto& e : step.observed) {
    const double tau = step.t - std::max(snap.last_obs[e.u], snap.last_obs[e.v]);
    if (!(tau > 0.0)) {
      std::cerr << "[mtgn] warning: dropping non-positive interval for pair (" << e.u
                << "," << e.v << ") at t=" << step.t << "\n";
      continue;
    }
    us.push_back(e.u);
    vs.push_back(e.v);
    taus.push_back(tau);
  }
  if (taus.empty()) return Tensor::scalar(0.0);
  auto ctx = concat_cols({gstar_rows(us, snap.evolved_obs, states_.evolved_miss),
                          gstar_rows(vs, snap.evolved_obs, states_.evolved_miss)});
  auto node = model_.tpp_obs.forward(ctx);
  return sum_all(mixture_log_pdf(node, taus));
}

std::vector<double> MtgnEngine::object_scores(int u, const StateSnapshot& snap) const {
  if (u < 0 || u >= model_.node_count()) {
    throw std::runtime_error("object_scores: unknown node " + std::to_string(u));
  }
  auto gbar_u = gbar_rows({u}, snap.evolved_obs, snap.evolved_miss);
  auto lp = log_softmax_rows(
      model_.head_obs_object.forward(concat_cols({gbar_u, snap.pooled_all})));
  return lp->data;
}

double MtgnEngine::predict_interval(int u, int v, const StateSnapshot& snap) const {
  auto ctx = concat_cols({gstar_rows({u}, snap.evolved_obs, snap.evolved_miss),
                          gstar_rows({v}, snap.evolved_obs, snap.evolved_miss)});
  auto node = model_.tpp_obs.forward(ctx);
  return expectation_value(mixture_row(node, 0));
}

std::vector<double> MtgnEngine::node_embedding(int u, const StateSnapshot& snap) const {
  return gbar_rows({u}, snap.evolved_obs, snap.evolved_miss)->data;
}

TensorPtr MtgnEngine::gbar_rows(const std::vector<int>& nodes,
                                const std::vector<TensorPtr>& eo,
                                const std::vector<TensorPtr>& em) const {
  std::vector<std::int64_t> idx(nodes.begin(), nodes.end());
  std::vector<TensorPtr> ro, rm;
  ro.reserve(nodes.size());
  rm.reserve(nodes.size());
  for (int u : nodes) {
    ro.push_back(eo[u]);
    rm.push_back(em[u]);
  }
  return concat_cols({gather_rows(model_.static_obs, idx), concat_rows(ro),
                      gather_rows(model_.static_miss, idx), concat_rows(rm)});
}

TensorPtr MtgnEngine::obar_rows(const std::vector<int>& nodes,
                                const std::vector<TensorPtr>& eo) const {
  std::vector<std::int64_t> idx(nodes.begin(), nodes.end());
  std::vector<TensorPtr> ro;
  ro.reserve(nodes.size());
  for (int u : nodes) ro.push_back(eo[u]);
  return concat_cols({gather_rows(model_.static_obs, idx), concat_rows(ro)});
}

TensorPtr MtgnEngine::gstar_rows(const std::vector<int>& nodes,
                                 const std::vector<TensorPtr>& eo,
                                 const std::vector<TensorPtr>& em) const {
  std::vector<TensorPtr> ro, rm;
  ro.reserve(nodes.size());
  rm.reserve(nodes.size());
  for (int u : nodes) {
    ro.push_back(eo[u]);
    rm.push_back(em[u]);
  }
  return concat_cols({concat_rows(ro), concat_rows(rm)});
}

}  // namespace mtgn
