#include "mtgn/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mtgn/ops.hpp"

namespace mtgn {

Trainer::Trainer(MtgnModel& model)
    : model_(model),
      opt_(model.params().all(), AdamWConfig{model.config().lr, model.config().beta1,
                                             model.config().beta2,
                                             model.config().adam_eps,
                                             model.config().weight_decay}) {}

StepOutcome Trainer::step(MtgnEngine& engine, const TimeStep& ts, Rng& step_rng,
                          SampleTrace* trace) {
  const auto& cfg = model_.config();
  StepOutcome out;

  auto snap = engine.snapshot();
  auto upd = engine.apply_observed(ts);

  TensorPtr kl;
  if (cfg.ablate_wo_m) {
    kl = Tensor::scalar(0.0);
  } else {
    auto gen = engine.generate_missing(ts, snap, upd, cfg.effective_q(),
                                       cfg.mc_samples, step_rng, trace);
    engine.apply_missing(ts, gen.events);
    kl = gen.kl;
    out.generated = std::move(gen.events);
  }

  auto structure = engine.structure_loglik(ts, snap);
  auto time = engine.time_loglik(ts, snap);
  out.total = add(neg(add(structure, time)), kl);

  out.values.obs_structure = structure->data[0];
  out.values.obs_time = time->data[0];
  out.values.missing_kl = kl->data[0];
  out.values.total = out.total->data[0];
  return out;
}

FitResult Trainer::fit(const EventStream& train, const EpochHook& hook,
                       bool collect_missing_trace) {
  if (train.events.empty()) throw std::runtime_error("fit: empty train stream");
  const auto& cfg = model_.config();
  const auto steps = batch_by_timestep(train);
  Rng master(cfg.seed);

  FitResult result;
  result.history.reserve(cfg.max_epochs);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    states_.reset(model_.node_count(), model_.dim(), steps.front().t);
    MtgnEngine engine(model_, states_);
    Rng epoch_rng = master.split(static_cast<std::uint64_t>(epoch));
    const bool trace_epoch = collect_missing_trace && epoch == cfg.max_epochs - 1;

    EpochStats stats;
    TensorPtr window;
    int in_window = 0;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      Rng step_rng = epoch_rng.split(s);
      StepOutcome outcome;
      try {
        outcome = step(engine, steps[s], step_rng);
      } catch (const std::exception& ex) {
        throw std::runtime_error("fit: failure at epoch " + std::to_string(epoch) +
                                 " step " + std::to_string(s) + ": " + ex.what());
      }
      if (!std::isfinite(outcome.values.total)) {
        throw std::runtime_error("fit: non-finite loss at epoch " +
                                 std::to_string(epoch) + " step " + std::to_string(s));
      }
      if (trace_epoch) {
        for (const auto& e : outcome.generated) {
          result.final_epoch_missing.emplace_back(static_cast<int>(s), e);
        }
      }
      stats.loss_total += outcome.values.total;
      stats.loss_obs_struct += outcome.values.obs_structure;
      stats.loss_obs_time += outcome.values.obs_time;
      stats.loss_kl += outcome.values.missing_kl;

      window = window ? add(window, outcome.total) : outcome.total;
      ++in_window;
      if (in_window == cfg.bptt_steps || s + 1 == steps.size()) {
        backward(window);
        opt_.step();
        opt_.zero_grad();
        states_.detach_all();
        window = nullptr;
        in_window = 0;
        ++result.optimizer_steps;
      }
    }
    const auto n = static_cast<double>(steps.size());
    stats.loss_total /= n;
    stats.loss_obs_struct /= n;
    stats.loss_obs_time /= n;
    stats.loss_kl /= n;
    result.history.push_back(stats);
    if (hook) hook(epoch, model_);
  }
  return result;
}

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "epoch,loss_total,loss_obs_struct,loss_obs_time,loss_kl\n";
  out.precision(12);
  for (std::size_t i = 0; i < history.size(); ++i) {
    out << i << ',' << history[i].loss_total << ',' << history[i].loss_obs_struct
        << ',' << history[i].loss_obs_time << ',' << history[i].loss_kl << '\n';
  }
}

void write_missing_trace_csv(const std::vector<std::pair<int, Event>>& rows,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "step,u,v,t_prime\n";
  out.precision(12);
  for (const auto& [step, e] : rows) {
    out << step << ',' << e.u << ',' << e.v << ',' << e.t << '\n';
  }
}

}  // namespace mtgn
