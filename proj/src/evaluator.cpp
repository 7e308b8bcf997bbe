#include "mtgn/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <stdexcept>

#include "mtgn/rng.hpp"

namespace mtgn {

int rank_of(const std::vector<double>& scores, int true_node, bool pessimistic) {
  const double s = scores[true_node];
  int higher = 0, ties = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > s) ++higher;
    if (pessimistic && scores[i] == s && static_cast<int>(i) != true_node) ++ties;
  }
  return 1 + higher + ties;
}

double hits_at_k(const std::vector<int>& ranks, int k) {
  if (ranks.empty()) return 0.0;
  std::size_t hits = 0;
  for (int r : ranks) {
    if (r <= k) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mean_absolute_error(const std::vector<double>& predicted,
                           const std::vector<double>& truth) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw std::runtime_error("mean_absolute_error: length mismatch or empty");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    acc += std::abs(predicted[i] - truth[i]);
  }
  return acc / static_cast<double>(predicted.size());
}

std::string EvalReport::to_json(const std::string& fingerprint,
                                const std::string& run_id,
                                const TrainConfig& cfg) const {
  nlohmann::json j;
  for (const auto& [k, v] : hits_at) j["hits_at"][std::to_string(k)] = v;
  j["mae"] = mae;
  j["n_test"] = n_test;
  j["baseline_mae"] = baseline_mae;
  for (const auto& [k, v] : random_hits) j["random_hits"][std::to_string(k)] = v;
  j["mean_rank"] = mean_rank;
  j["tie_rule"] = cfg.pessimistic_ties ? "pessimistic" : "optimistic";
  j["eval_missing"] = eval_missing_to_string(cfg.eval_missing);
  j["fingerprint"] = nlohmann::json::parse(fingerprint);
  j["run_id"] = run_id;
  return j.dump(2);
}

namespace {

std::pair<int, int> pair_key(int u, int v) { return {std::min(u, v), std::max(u, v)}; }

/// Per-pair mean inter-event gap from the train stream, with a global fallback.
struct NaivePredictor {
  std::map<std::pair<int, int>, double> mean_gap;
  std::map<std::pair<int, int>, double> last_seen;
  double global_mean = 1.0;

  explicit NaivePredictor(const EventStream& train) {
    std::map<std::pair<int, int>, double> last;
    std::map<std::pair<int, int>, std::pair<double, int>> acc;
    double total = 0.0;
    int count = 0;
    for (const auto& e : train.events) {
      const auto key = pair_key(e.u, e.v);
      auto it = last.find(key);
      if (it != last.end()) {
        const double gap = e.t - it->second;
        auto& [sum, n] = acc[key];
        sum += gap;
        ++n;
        total += gap;
        ++count;
        it->second = e.t;
      } else {
        last.emplace(key, e.t);
      }
    }
    if (count > 0) global_mean = total / count;
    for (const auto& [key, sn] : acc) mean_gap[key] = sn.first / sn.second;
    last_seen = std::move(last);
  }

  void consume(const Event& e) { last_seen[pair_key(e.u, e.v)] = e.t; }

  double predict(const Event& e, double fallback_anchor) const {
    const auto key = pair_key(e.u, e.v);
    auto anchor_it = last_seen.find(key);
    const double anchor =
        anchor_it != last_seen.end() ? anchor_it->second : fallback_anchor;
    auto gap_it = mean_gap.find(key);
    const double gap = gap_it != mean_gap.end() ? gap_it->second : global_mean;
    return anchor + gap;
  }
};

/// Timestep batches whose t_bar chain continues from `prev_t`.
std::vector<TimeStep> chained_steps(const EventStream& stream, double prev_t) {
  auto steps = batch_by_timestep(stream);
  if (!steps.empty()) {
    if (steps.front().t <= prev_t) {
      throw std::runtime_error("evaluate: test events do not start after train");
    }
    steps.front().t_bar = prev_t;
  }
  return steps;
}

}  // namespace

Evaluator::Evaluator(MtgnModel& model) : model_(model) {}

EvalReport Evaluator::evaluate(const EventStream& train, const EventStream& test) {
  if (train.events.empty() || test.events.empty()) {
    throw std::runtime_error("evaluate: empty train or test stream");
  }
  NoGradGuard ng;
  const auto& cfg = model_.config();
  const int v_count = model_.node_count();

  NodeStates states;
  MtgnEngine engine(model_, states);
  const auto train_steps = batch_by_timestep(train);
  states.reset(v_count, model_.dim(), train_steps.front().t);
  Rng rng = Rng(cfg.seed).split(0xE7A1);

  NaivePredictor naive(train);
  const bool generate = cfg.eval_missing != EvalMissing::kOff && !cfg.ablate_wo_m;
  const Process gen_process = cfg.eval_missing == EvalMissing::kPrior
                                  ? Process::kPrior
                                  : Process::kPosterior;

  auto consume_step = [&](const TimeStep& ts, std::size_t index) {
    if (generate) {
      auto snap = engine.snapshot();
      auto upd = engine.apply_observed(ts);
      Rng step_rng = rng.split(index);
      auto gen = engine.generate_missing(ts, snap, upd, cfg.effective_q(),
                                         cfg.mc_samples, step_rng, nullptr,
                                         gen_process, /*compute_kl=*/false);
      engine.apply_missing(ts, gen.events);
    } else {
      engine.apply_observed(ts);
    }
  };

  std::size_t step_index = 0;
  for (const auto& ts : train_steps) consume_step(ts, step_index++);

  std::vector<int> ranks;
  std::vector<double> predicted, truth, naive_predicted;
  const auto test_steps = chained_steps(test, train_steps.back().t);
  for (const auto& ts : test_steps) {
    auto snap = engine.snapshot();
    for (const auto& e : ts.observed) {
      const auto scores = engine.object_scores(e.u, snap);
      ranks.push_back(rank_of(scores, e.v, cfg.pessimistic_ties));
      const double anchor = std::max(snap.last_obs[e.u], snap.last_obs[e.v]);
      predicted.push_back(anchor + engine.predict_interval(e.u, e.v, snap));
      truth.push_back(e.t);
      naive_predicted.push_back(naive.predict(e, anchor));
    }
    consume_step(ts, step_index++);
    for (const auto& e : ts.observed) naive.consume(e);
  }

  EvalReport report;
  report.n_test = ranks.size();
  for (int k : {3, 5, 10}) {
    report.hits_at[k] = hits_at_k(ranks, k);
    report.random_hits[k] = 100.0 * static_cast<double>(k) / v_count;
  }
  report.mae = mean_absolute_error(predicted, truth);
  report.baseline_mae = mean_absolute_error(naive_predicted, truth);
  double rank_sum = 0.0;
  for (int r : ranks) rank_sum += r;
  report.mean_rank = rank_sum / static_cast<double>(ranks.size());
  return report;
}

std::vector<std::vector<double>> Evaluator::export_embeddings(
    const EventStream& stream) {
  NoGradGuard ng;
  const auto& cfg = model_.config();
  NodeStates states;
  MtgnEngine engine(model_, states);
  const auto steps = batch_by_timestep(stream);
  if (steps.empty()) throw std::runtime_error("export_embeddings: empty stream");
  states.reset(model_.node_count(), model_.dim(), steps.front().t);
  Rng rng = Rng(cfg.seed).split(0xE7A2);

  const bool generate = cfg.eval_missing != EvalMissing::kOff && !cfg.ablate_wo_m;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (generate) {
      auto snap = engine.snapshot();
      auto upd = engine.apply_observed(steps[i]);
      Rng step_rng = rng.split(i);
      auto gen = engine.generate_missing(
          steps[i], snap, upd, cfg.effective_q(), cfg.mc_samples, step_rng, nullptr,
          cfg.eval_missing == EvalMissing::kPrior ? Process::kPrior
                                                  : Process::kPosterior,
          false);
      engine.apply_missing(steps[i], gen.events);
    } else {
      engine.apply_observed(steps[i]);
    }
  }
  auto snap = engine.snapshot();
  std::vector<std::vector<double>> rows;
  rows.reserve(model_.node_count());
  for (int u = 0; u < model_.node_count(); ++u) {
    rows.push_back(engine.node_embedding(u, snap));
  }
  return rows;
}

}  // namespace mtgn
