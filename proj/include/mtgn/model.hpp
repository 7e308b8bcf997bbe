#pragma once

#include <cstdint>
#include <vector>

#include "mtgn/config.hpp"
#include "mtgn/embeddings.hpp"
#include "mtgn/mixture.hpp"
#include "mtgn/nn.hpp"

namespace mtgn {

enum class Process { kObserved, kPrior, kPosterior };

/// All learnable pieces: static embeddings, two message-passing paths with
/// their GRUs, six structure heads and three mixture heads. Context widths
/// (with d = embed_dim, g* = 2d, ō = 2d, ḡ = 4d):
///   observed subject ḡ_t (4d)            observed object [ḡ_u; ḡ_t] (8d)
///   prior subject ḡ_t̄ (4d)               prior object [ḡ_u; ḡ_t̄] (8d)
///   posterior subject [ḡ_t̄; ō_t] (6d)    posterior object [ḡ_u; ḡ_t̄; ō_u; ō_t] (12d)
///   observed/prior TPP [g*_u; g*_v] (4d)  posterior TPP [g*_u; g*_v; o*_u; o*_v] (6d)
class MtgnModel {
 public:
  MtgnModel(int node_count, const TrainConfig& cfg);

  int node_count() const { return node_count_; }
  std::int64_t dim() const { return cfg_.embed_dim; }
  const TrainConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  TensorPtr static_obs;
  TensorPtr static_miss;
  std::vector<PassWeights> obs_layers;
  std::vector<PassWeights> miss_layers;
  GruCell obs_gru, miss_gru;

  Mlp head_obs_subject, head_obs_object;
  Mlp head_prior_subject, head_prior_object;
  Mlp head_post_subject, head_post_object;

  MixtureHead tpp_obs, tpp_prior, tpp_post;

 private:
  int node_count_;
  TrainConfig cfg_;
  ParamStore store_;
};

/// Drives one time step against live node states. A snapshot captured before
/// the step provides every t̄-conditioned input; the missing halves of the
/// training-loss inputs additionally see the current window's generated
/// events, matching the observed process' conditioning on M_t.
class MtgnEngine {
 public:
  MtgnEngine(MtgnModel& model, NodeStates& states);

  StateSnapshot snapshot() const;

  struct ObservedUpdate {
    std::vector<int> nodes;
    TensorPtr pooled_obs_t;  // refreshed observed readout after the update
  };
  /// Observed message pass + GRU evolve for the step's nodes; bumps their
  /// last-observed times to t.
  ObservedUpdate apply_observed(const TimeStep& step);

  struct Generation {
    std::vector<Event> events;
    TensorPtr kl;  // scalar graph node; zero constant when nothing generated
    double kl_value = 0.0;
  };
  /// Ancestral sampling of round(Q|O_t|) missing events, each drawn
  /// subject -> object -> interval, with the subject/object categorical KLs
  /// and the Monte Carlo interval KL accumulated per draw.
  Generation generate_missing(const TimeStep& step, const StateSnapshot& snap,
                              const ObservedUpdate& upd, double q_ratio, int n_mc,
                              Rng& rng, SampleTrace* trace = nullptr,
                              Process process = Process::kPosterior,
                              bool compute_kl = true);

  /// Missing message pass + GRU evolve. Every generated time must lie
  /// strictly inside (t_bar, t).
  void apply_missing(const TimeStep& step, const std::vector<Event>& generated);

  // Training losses (observed halves from the snapshot, missing halves live).
  TensorPtr structure_loglik(const TimeStep& step, const StateSnapshot& snap) const;
  /// Sum of log-densities at tau = t - last involvement of the pair; events
  /// with a non-positive interval are dropped with a warning.
  TensorPtr time_loglik(const TimeStep& step, const StateSnapshot& snap) const;

  // Evaluation-time scoring; conditions on the snapshot only.
  std::vector<double> object_scores(int u, const StateSnapshot& snap) const;
  double predict_interval(int u, int v, const StateSnapshot& snap) const;
  /// Assembled [static_o; o*; static_m; m*] row of one node, snapshot values.
  std::vector<double> node_embedding(int u, const StateSnapshot& snap) const;

 private:
  TensorPtr gbar_rows(const std::vector<int>& nodes,
                      const std::vector<TensorPtr>& eo,
                      const std::vector<TensorPtr>& em) const;
  TensorPtr obar_rows(const std::vector<int>& nodes,
                      const std::vector<TensorPtr>& eo) const;
  TensorPtr gstar_rows(const std::vector<int>& nodes,
                       const std::vector<TensorPtr>& eo,
                       const std::vector<TensorPtr>& em) const;
  /// Pooled ḡ for the observed heads: snapshot observed membership and
  /// values, current missing membership and values.
  TensorPtr pooled_all_for_loss(const StateSnapshot& snap) const;

  MtgnModel& model_;
  NodeStates& states_;
};

}  // namespace mtgn
