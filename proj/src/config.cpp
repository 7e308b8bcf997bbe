#include "mtgn/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

namespace mtgn {

using nlohmann::json;

QStrategy q_strategy_from_string(const std::string& s) {
  if (s == "fixed") return QStrategy::kFixed;
  if (s == "adaptive1") return QStrategy::kAdaptive1;
  if (s == "adaptive2") return QStrategy::kAdaptive2;
  throw std::runtime_error("unknown q strategy: " + s +
                           " (expected fixed, adaptive1 or adaptive2)");
}

std::string q_strategy_to_string(QStrategy s) {
  switch (s) {
    case QStrategy::kFixed:
      return "fixed";
    case QStrategy::kAdaptive1:
      return "adaptive1";
    case QStrategy::kAdaptive2:
      return "adaptive2";
  }
  return "fixed";
}

EvalMissing eval_missing_from_string(const std::string& s) {
  if (s == "posterior") return EvalMissing::kPosterior;
  if (s == "prior") return EvalMissing::kPrior;
  if (s == "off") return EvalMissing::kOff;
  throw std::runtime_error("unknown eval_missing mode: " + s +
                           " (expected posterior, prior or off)");
}

std::string eval_missing_to_string(EvalMissing m) {
  switch (m) {
    case EvalMissing::kPosterior:
      return "posterior";
    case EvalMissing::kPrior:
      return "prior";
    case EvalMissing::kOff:
      return "off";
  }
  return "posterior";
}

double adaptive_q(QStrategy strategy, double fixed_q, double z) {
  if (z < 0.0 || z >= 1.0) {
    throw std::runtime_error("adaptive_q: mask fraction z outside [0,1)");
  }
  switch (strategy) {
    case QStrategy::kFixed:
      return fixed_q;
    case QStrategy::kAdaptive1:
      return z / (1.0 - z);
    case QStrategy::kAdaptive2:
      return (1.0 + z) / (1.0 - z);
  }
  return fixed_q;
}

double TrainConfig::effective_q() const {
  return adaptive_q(q_strategy, missing_ratio, mask_z);
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

TrainConfig TrainConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  TrainConfig c;
  read(j, "embed_dim", c.embed_dim);
  read(j, "gnn_layers", c.gnn_layers);
  read(j, "mixture_k", c.mixture_k);
  read(j, "missing_ratio", c.missing_ratio);
  read(j, "bptt_steps", c.bptt_steps);
  read(j, "mc_samples", c.mc_samples);
  read(j, "lr", c.lr);
  read(j, "weight_decay", c.weight_decay);
  read(j, "beta1", c.beta1);
  read(j, "beta2", c.beta2);
  read(j, "adam_eps", c.adam_eps);
  read(j, "max_epochs", c.max_epochs);
  read(j, "seed", c.seed);
  read(j, "ablate_wo_m", c.ablate_wo_m);
  read(j, "ablate_w_t", c.ablate_w_t);
  if (j.contains("q_strategy")) {
    c.q_strategy = q_strategy_from_string(j.at("q_strategy").get<std::string>());
  }
  read(j, "mask_z", c.mask_z);
  read(j, "log1p_time", c.log1p_time);
  read(j, "unnormalized_truncation", c.unnormalized_truncation);
  read(j, "test_fraction", c.test_fraction);
  read(j, "dedup_test", c.dedup_test);
  if (j.contains("eval_missing")) {
    c.eval_missing = eval_missing_from_string(j.at("eval_missing").get<std::string>());
  }
  read(j, "pessimistic_ties", c.pessimistic_ties);
  read(j, "eval_every", c.eval_every);

  if (c.embed_dim <= 0 || c.gnn_layers <= 0 || c.mixture_k <= 0 || c.bptt_steps <= 0 ||
      c.mc_samples <= 0 || c.max_epochs <= 0) {
    throw std::runtime_error("TrainConfig: sizes must be positive");
  }
  if (c.missing_ratio < 0.0) {
    throw std::runtime_error("TrainConfig: missing_ratio must be >= 0");
  }
  return c;
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return from_json_text(os.str());
}

std::string TrainConfig::to_json() const {
  json j;
  j["embed_dim"] = embed_dim;
  j["gnn_layers"] = gnn_layers;
  j["mixture_k"] = mixture_k;
  j["missing_ratio"] = missing_ratio;
  j["bptt_steps"] = bptt_steps;
  j["mc_samples"] = mc_samples;
  j["lr"] = lr;
  j["weight_decay"] = weight_decay;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["adam_eps"] = adam_eps;
  j["max_epochs"] = max_epochs;
  j["seed"] = seed;
  j["ablate_wo_m"] = ablate_wo_m;
  j["ablate_w_t"] = ablate_w_t;
  j["q_strategy"] = q_strategy_to_string(q_strategy);
  j["mask_z"] = mask_z;
  j["log1p_time"] = log1p_time;
  j["unnormalized_truncation"] = unnormalized_truncation;
  j["test_fraction"] = test_fraction;
  j["dedup_test"] = dedup_test;
  j["eval_missing"] = eval_missing_to_string(eval_missing);
  j["pessimistic_ties"] = pessimistic_ties;
  j["eval_every"] = eval_every;
  return j.dump(2);
}

std::string TrainConfig::fingerprint(int node_count) const {
  json j;
  j["node_count"] = node_count;
  j["embed_dim"] = embed_dim;
  j["gnn_layers"] = gnn_layers;
  j["mixture_k"] = mixture_k;
  j["log1p_time"] = log1p_time;
  j["ablate_wo_m"] = ablate_wo_m;
  j["ablate_w_t"] = ablate_w_t;
  j["unnormalized_truncation"] = unnormalized_truncation;
  return j.dump();
}

std::string TrainConfig::fingerprint_mismatch(const std::string& ours,
                                              const std::string& theirs) {
  json a = json::parse(ours);
  json b = json::parse(theirs);
  for (auto it = a.begin(); it != a.end(); ++it) {
    if (!b.contains(it.key()) || b.at(it.key()) != it.value()) return it.key();
  }
  for (auto it = b.begin(); it != b.end(); ++it) {
    if (!a.contains(it.key())) return it.key();
  }
  return "";
}

}  // namespace mtgn
