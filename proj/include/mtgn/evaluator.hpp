#pragma once

#include <map>
#include <string>
#include <vector>

#include "mtgn/config.hpp"
#include "mtgn/events.hpp"
#include "mtgn/model.hpp"

namespace mtgn {

struct EvalReport {
  std::map<int, double> hits_at;  // k in {3,5,10} -> percentage
  double mae = 0.0;
  std::size_t n_test = 0;
  double baseline_mae = 0.0;
  std::map<int, double> random_hits;  // 100 * k / |V|
  double mean_rank = 0.0;

  std::string to_json(const std::string& fingerprint, const std::string& run_id,
                      const TrainConfig& cfg) const;
};

/// Rank of the true node: 1 + number of strictly higher scores. The
/// pessimistic rule also counts ties against the prediction.
int rank_of(const std::vector<double>& scores, int true_node, bool pessimistic);
/// Percentage of ranks within the top k.
double hits_at_k(const std::vector<int>& ranks, int k);
double mean_absolute_error(const std::vector<double>& predicted,
                           const std::vector<double>& truth);

/// Prequential evaluation: the model state rolls through train and test in
/// time order; every test event is scored strictly before it (or anything
/// concurrent with it) enters the state. Missing-event generation during the
/// rollout follows config.eval_missing.
class Evaluator {
 public:
  explicit Evaluator(MtgnModel& model);

  EvalReport evaluate(const EventStream& train, const EventStream& test);

  /// Per-node assembled embeddings after rolling through a stream
  /// ("node_id,dim0,..." rows).
  std::vector<std::vector<double>> export_embeddings(const EventStream& stream);

 private:
  MtgnModel& model_;
};

}  // namespace mtgn
