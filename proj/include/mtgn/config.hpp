#pragma once

#include <cstdint>
#include <string>

namespace mtgn {

enum class QStrategy { kFixed, kAdaptive1, kAdaptive2 };
enum class EvalMissing { kPosterior, kPrior, kOff };

QStrategy q_strategy_from_string(const std::string& s);
std::string q_strategy_to_string(QStrategy s);
EvalMissing eval_missing_from_string(const std::string& s);
std::string eval_missing_to_string(EvalMissing m);

/// Effective missing-events ratio under a masking fraction z.
double adaptive_q(QStrategy strategy, double fixed_q, double z);

/// Every knob of a run. Field defaults are the reference settings; a config
/// file may override any subset.
struct TrainConfig {
  int embed_dim = 64;          // d
  int gnn_layers = 2;          // L
  int mixture_k = 16;          // K
  double missing_ratio = 1.0;  // Q
  int bptt_steps = 5;          // b
  int mc_samples = 10;         // n
  double lr = 1e-3;
  double weight_decay = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int max_epochs = 1000;
  std::uint64_t seed = 42;

  bool ablate_wo_m = false;  // no missing events: graph reduces to observed only
  bool ablate_w_t = false;   // drop the interval term from message passing
  QStrategy q_strategy = QStrategy::kFixed;
  double mask_z = 0.0;

  bool log1p_time = true;
  bool unnormalized_truncation = false;
  double test_fraction = 0.15;
  bool dedup_test = true;
  EvalMissing eval_missing = EvalMissing::kPosterior;
  bool pessimistic_ties = false;
  int eval_every = 0;  // validation metrics every e epochs during fit; 0 = off

  /// Q after applying the adaptive strategy to the configured mask fraction.
  double effective_q() const;

  static TrainConfig from_json_text(const std::string& text);
  static TrainConfig from_json_file(const std::string& path);
  std::string to_json() const;

  /// Structural fields a checkpoint must agree on to be loadable.
  std::string fingerprint(int node_count) const;
  /// Returns the name of the first differing fingerprint field, or empty.
  static std::string fingerprint_mismatch(const std::string& ours,
                                          const std::string& theirs);
};

}  // namespace mtgn
