#include <doctest.h>

#include <fstream>

#include "mtgn/config.hpp"
#include "mtgn/manifest.hpp"

using namespace mtgn;

TEST_CASE("omitted config fields fall back to the reference defaults") {
  auto cfg = TrainConfig::from_json_text("{}");
  CHECK(cfg.embed_dim == 64);
  CHECK(cfg.gnn_layers == 2);
  CHECK(cfg.mixture_k == 16);
  CHECK(cfg.missing_ratio == 1.0);
  CHECK(cfg.bptt_steps == 5);
  CHECK(cfg.mc_samples == 10);
  CHECK(cfg.weight_decay == 5e-5);
  CHECK(cfg.max_epochs == 1000);
  CHECK(cfg.ablate_wo_m == false);
  CHECK(cfg.q_strategy == QStrategy::kFixed);
}

TEST_CASE("partial overrides keep the rest") {
  auto cfg = TrainConfig::from_json_text(
      R"({"embed_dim": 16, "lr": 0.01, "q_strategy": "adaptive2", "mask_z": 0.3})");
  CHECK(cfg.embed_dim == 16);
  CHECK(cfg.lr == 0.01);
  CHECK(cfg.mixture_k == 16);
  CHECK(cfg.q_strategy == QStrategy::kAdaptive2);
  CHECK(cfg.effective_q() == doctest::Approx(1.3 / 0.7));
}

TEST_CASE("invalid configs are rejected") {
  CHECK_THROWS_AS(TrainConfig::from_json_text(R"({"embed_dim": 0})"),
                  std::runtime_error);
  CHECK_THROWS_AS(TrainConfig::from_json_text(R"({"missing_ratio": -1})"),
                  std::runtime_error);
  CHECK_THROWS_WITH_AS(TrainConfig::from_json_text(R"({"q_strategy": "bogus"})"),
                       doctest::Contains("adaptive"), std::runtime_error);
}

TEST_CASE("config json round trip") {
  TrainConfig cfg;
  cfg.embed_dim = 12;
  cfg.q_strategy = QStrategy::kAdaptive1;
  cfg.mask_z = 0.25;
  cfg.eval_missing = EvalMissing::kPrior;
  auto back = TrainConfig::from_json_text(cfg.to_json());
  CHECK(back.embed_dim == 12);
  CHECK(back.q_strategy == QStrategy::kAdaptive1);
  CHECK(back.mask_z == 0.25);
  CHECK(back.eval_missing == EvalMissing::kPrior);
}

TEST_CASE("fingerprint mismatch names the differing field") {
  TrainConfig a, b;
  b.mixture_k = 8;
  CHECK(TrainConfig::fingerprint_mismatch(a.fingerprint(10), b.fingerprint(10)) ==
        "mixture_k");
  CHECK(TrainConfig::fingerprint_mismatch(a.fingerprint(10), a.fingerprint(11)) ==
        "node_count");
  CHECK(TrainConfig::fingerprint_mismatch(a.fingerprint(10), a.fingerprint(10)) == "");
}

TEST_CASE("manifest digests and run ids are deterministic") {
  const std::string path = "/tmp/mtgn_manifest_input.txt";
  {
    std::ofstream out(path);
    out << "0 1 5\n";
  }
  RunManifest m;
  m.command = "train";
  m.config_json = TrainConfig().to_json();
  m.inputs.emplace_back(path, file_digest(path));
  m.outputs.push_back("/tmp/out.bin");
  m.seed = 42;
  m.wall_seconds = 1.23;

  RunManifest same = m;
  same.wall_seconds = 99.0;  // wall clock must not affect the id
  CHECK(m.run_id() == same.run_id());
  CHECK(file_digest(path) == file_digest(path));

  const auto json = m.to_json();
  CHECK(json.find("run_id") != std::string::npos);
  CHECK(json.find(file_digest(path)) != std::string::npos);
}
