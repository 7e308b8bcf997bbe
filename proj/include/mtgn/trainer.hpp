#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mtgn/config.hpp"
#include "mtgn/events.hpp"
#include "mtgn/model.hpp"
#include "mtgn/nn.hpp"

namespace mtgn {

struct StepLoss {
  double obs_structure = 0.0;
  double obs_time = 0.0;
  double missing_kl = 0.0;
  double total = 0.0;  // -(obs_structure + obs_time) + missing_kl
};

struct EpochStats {
  double loss_total = 0.0;
  double loss_obs_struct = 0.0;
  double loss_obs_time = 0.0;
  double loss_kl = 0.0;
};

struct FitResult {
  std::vector<EpochStats> history;
  std::int64_t optimizer_steps = 0;
  /// (step index, event) pairs generated during the final epoch, kept only
  /// when trace collection is on.
  std::vector<std::pair<int, Event>> final_epoch_missing;
};

struct StepOutcome {
  TensorPtr total;  // scalar loss node for the BPTT window
  StepLoss values;
  std::vector<Event> generated;
};

/// Window-truncated training loop: per step the observed pass runs first,
/// then missing-event generation with its KL, then the missing pass, then the
/// observed log-likelihood. Gradients flow within windows of b steps; states
/// detach at window boundaries.
class Trainer {
 public:
  Trainer(MtgnModel& model);

  StepOutcome step(MtgnEngine& engine, const TimeStep& ts, Rng& step_rng,
                   SampleTrace* trace = nullptr);

  using EpochHook = std::function<void(int epoch, MtgnModel& model)>;
  FitResult fit(const EventStream& train, const EpochHook& hook = {},
                bool collect_missing_trace = false);

  NodeStates& states() { return states_; }
  AdamW& optimizer() { return opt_; }

 private:
  MtgnModel& model_;
  NodeStates states_;
  AdamW opt_;
};

/// Header exactly "epoch,loss_total,loss_obs_struct,loss_obs_time,loss_kl".
void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);
void write_missing_trace_csv(const std::vector<std::pair<int, Event>>& rows,
                             const std::string& path);

}  // namespace mtgn
