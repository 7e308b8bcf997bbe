// Command-line surface for the MTGN library: dataset preparation, synthetic
// generation, training, evaluation, parameter sweeps, scaling benchmarks and
// embedding export. Every artifact-producing command writes a manifest.

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "mtgn/checkpoint.hpp"
#include "mtgn/config.hpp"
#include "mtgn/evaluator.hpp"
#include "mtgn/events.hpp"
#include "mtgn/manifest.hpp"
#include "mtgn/synthetic.hpp"
#include "mtgn/trainer.hpp"

namespace fs = std::filesystem;
using namespace mtgn;

namespace {

int max_workers() {
  if (const char* env = std::getenv("MTGN_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct CommonArgs {
  std::string data;
  std::string config_path;
  std::string out_dir;
  std::int64_t time_unit = 1;
  std::string unit_label = "1 unit";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> ablate;
  std::string q_strategy;
  double mask_z = -1.0;
  double lr = 0.0;
  int epochs = 0;
};

TrainConfig load_config(const CommonArgs& args) {
  TrainConfig cfg = args.config_path.empty()
                        ? TrainConfig()
                        : TrainConfig::from_json_file(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  for (const auto& a : args.ablate) {
    if (a == "wo-m") {
      cfg.ablate_wo_m = true;
    } else if (a == "w-t") {
      cfg.ablate_w_t = true;
    } else {
      throw std::runtime_error("unknown ablation " + a + " (expected wo-m or w-t)");
    }
  }
  if (!args.q_strategy.empty()) cfg.q_strategy = q_strategy_from_string(args.q_strategy);
  if (args.mask_z >= 0.0) cfg.mask_z = args.mask_z;
  if (args.lr > 0.0) cfg.lr = args.lr;
  if (args.epochs > 0) cfg.max_epochs = args.epochs;
  return cfg;
}

EventStream load_stream(const std::string& path, std::int64_t unit,
                        const std::string& label) {
  return parse_events(path, unit, label).stream;
}

struct TrainedArtifacts {
  FitResult fit;
  std::string checkpoint_path;
  SplitResult split;
};

nlohmann::json checkpoint_meta(const TrainConfig& cfg, int node_count,
                               const std::string& data_digest) {
  nlohmann::json meta;
  meta["fingerprint"] = nlohmann::json::parse(cfg.fingerprint(node_count));
  meta["config"] = nlohmann::json::parse(cfg.to_json());
  meta["node_count"] = node_count;
  meta["data_digest"] = data_digest;
  return meta;
}

TrainedArtifacts run_training(const TrainConfig& cfg, const EventStream& full,
                              const std::string& data_digest, const fs::path& out,
                              bool trace_missing, bool quiet) {
  TrainedArtifacts art;
  art.split = split_train_test(full, cfg.test_fraction, cfg.dedup_test);
  EventStream train = art.split.train;
  if (cfg.mask_z > 0.0) {
    train = mask_events(train, cfg.mask_z, cfg.seed).kept;
  }

  MtgnModel model(full.node_count, cfg);
  Trainer trainer(model);
  fs::create_directories(out);

  std::ofstream val_log;
  if (cfg.eval_every > 0) {
    val_log.open((out / "val_history.csv").string());
    val_log << "epoch,hits@3,hits@5,hits@10,mae\n";
    val_log.precision(10);
  }
  const int report_every = std::max(1, cfg.max_epochs / 10);
  Trainer::EpochHook hook = [&](int epoch, MtgnModel& m) {
    if (!quiet && (epoch + 1) % report_every == 0) {
      std::cerr << "epoch " << epoch + 1 << "/" << cfg.max_epochs << "\n";
    }
    if (cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0) {
      Evaluator eval(m);
      auto rep = eval.evaluate(train, art.split.test);
      val_log << epoch << ',' << rep.hits_at.at(3) << ',' << rep.hits_at.at(5) << ','
              << rep.hits_at.at(10) << ',' << rep.mae << '\n'
              << std::flush;
    }
  };
  art.fit = trainer.fit(train, hook, trace_missing);
  art.checkpoint_path = (out / "checkpoint.bin").string();
  save_checkpoint(art.checkpoint_path, model.params(),
                  checkpoint_meta(cfg, full.node_count, data_digest).dump());
  write_history_csv(art.fit.history, (out / "history.csv").string());
  if (trace_missing) {
    write_missing_trace_csv(art.fit.final_epoch_missing,
                            (out / "missing_trace.csv").string());
  }
  return art;
}

EvalReport run_eval(const TrainConfig& cfg, int node_count, const EventStream& full,
                    const std::string& checkpoint_path) {
  MtgnModel model(node_count, cfg);
  load_checkpoint(checkpoint_path, model.params());
  auto split = split_train_test(full, cfg.test_fraction, cfg.dedup_test);
  EventStream train = split.train;
  if (cfg.mask_z > 0.0) train = mask_events(train, cfg.mask_z, cfg.seed).kept;
  Evaluator eval(model);
  return eval.evaluate(train, split.test);
}

int cmd_prepare(const CommonArgs& args) {
  const auto t0 = std::chrono::steady_clock::now();
  auto parsed = parse_events(args.data, args.time_unit, args.unit_label);
  fs::path out(args.out_dir);
  fs::create_directories(out);
  write_events(parsed.stream, (out / "events.txt").string());
  write_id_map(parsed.id_map, (out / "idmap.tsv").string());

  auto split = split_train_test(parsed.stream, TrainConfig().test_fraction);
  nlohmann::json stats;
  stats["node_count"] = parsed.stream.node_count;
  stats["events"] = parsed.stream.events.size();
  stats["time_unit"] = parsed.stream.time_unit;
  stats["span"] = parsed.stream.events.back().t - parsed.stream.events.front().t;
  stats["train_events"] = split.train.events.size();
  stats["test_events_dedup"] = split.test.events.size();
  stats["test_events_raw"] = split.test_raw;
  stats["inductive_pct"] = split.inductive_pct;
  std::ofstream((out / "stats.json").string()) << stats.dump(2) << '\n';

  RunManifest m;
  m.command = "prepare";
  m.inputs.emplace_back(args.data, file_digest(args.data));
  m.outputs = {(out / "events.txt").string(), (out / "idmap.tsv").string(),
               (out / "stats.json").string()};
  m.wall_seconds = seconds_since(t0);
  m.write((out / "manifest.json").string());
  std::cout << stats.dump(2) << '\n';
  return 0;
}

int cmd_synth(const std::string& regime, int nodes, int events, std::uint64_t seed,
              const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  auto res = generate_synthetic(nodes, events, regime_from_string(regime), seed);
  fs::path out(out_dir);
  fs::create_directories(out);
  write_events(res.stream, (out / "events.txt").string());
  std::ofstream((out / "meta.json").string()) << res.meta.to_json() << '\n';

  RunManifest m;
  m.command = "synth";
  m.config_json = res.meta.to_json();
  m.seed = seed;
  m.outputs = {(out / "events.txt").string(), (out / "meta.json").string()};
  m.wall_seconds = seconds_since(t0);
  m.write((out / "manifest.json").string());
  std::cout << "wrote " << res.stream.events.size() << " events for " << nodes
            << " nodes to " << out_dir << '\n';
  return 0;
}

int cmd_train(const CommonArgs& args, bool trace_missing) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig cfg = load_config(args);
  auto full = load_stream(args.data, args.time_unit, args.unit_label);
  const std::string digest = file_digest(args.data);

  auto art = run_training(cfg, full, digest, args.out_dir, trace_missing, false);

  RunManifest m;
  m.command = "train";
  m.config_json = cfg.to_json();
  m.inputs.emplace_back(args.data, digest);
  m.outputs = {art.checkpoint_path, (fs::path(args.out_dir) / "history.csv").string()};
  m.seed = cfg.seed;
  m.wall_seconds = seconds_since(t0);
  m.write((fs::path(args.out_dir) / "manifest.json").string());

  std::cout << "final epoch loss " << art.fit.history.back().loss_total << " ("
            << art.fit.history.size() << " epochs, " << art.fit.optimizer_steps
            << " optimizer steps)\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const CommonArgs& args, bool force) {
  const auto t0 = std::chrono::steady_clock::now();
  auto meta = nlohmann::json::parse(read_checkpoint_meta(checkpoint));
  TrainConfig cfg = TrainConfig::from_json_text(meta.at("config").dump());
  const int node_count = meta.at("node_count").get<int>();

  auto full = load_stream(args.data, args.time_unit, args.unit_label);
  const std::string digest = file_digest(args.data);
  if (digest != meta.at("data_digest").get<std::string>() && !force) {
    throw std::runtime_error(
        "eval: data digest does not match the checkpoint's training data "
        "(pass --force to evaluate anyway)");
  }
  if (full.node_count > node_count) {
    throw std::runtime_error("eval: stream has more nodes than the checkpoint");
  }
  const std::string mismatch = TrainConfig::fingerprint_mismatch(
      cfg.fingerprint(node_count), meta.at("fingerprint").dump());
  if (!mismatch.empty()) {
    throw std::runtime_error("eval: checkpoint fingerprint mismatch on " + mismatch);
  }

  auto report = run_eval(cfg, node_count, full, checkpoint);

  RunManifest m;
  m.command = "eval";
  m.config_json = cfg.to_json();
  m.inputs.emplace_back(args.data, digest);
  m.inputs.emplace_back(checkpoint, file_digest(checkpoint));
  m.seed = cfg.seed;
  const std::string report_json =
      report.to_json(cfg.fingerprint(node_count), m.run_id(), cfg);
  fs::create_directories(args.out_dir);
  const auto report_path = (fs::path(args.out_dir) / "report.json").string();
  std::ofstream(report_path) << report_json << '\n';
  m.outputs = {report_path};
  m.wall_seconds = seconds_since(t0);
  m.write((fs::path(args.out_dir) / "manifest.json").string());
  std::cout << report_json << '\n';
  return 0;
}

int cmd_export_embeddings(const std::string& checkpoint, const CommonArgs& args) {
  auto meta = nlohmann::json::parse(read_checkpoint_meta(checkpoint));
  TrainConfig cfg = TrainConfig::from_json_text(meta.at("config").dump());
  const int node_count = meta.at("node_count").get<int>();
  auto full = load_stream(args.data, args.time_unit, args.unit_label);
  auto split = split_train_test(full, cfg.test_fraction, cfg.dedup_test);

  MtgnModel model(node_count, cfg);
  load_checkpoint(checkpoint, model.params());
  Evaluator eval(model);
  auto rows = eval.export_embeddings(split.train);

  fs::create_directories(fs::path(args.out_dir));
  const auto path = (fs::path(args.out_dir) / "embeddings.csv").string();
  std::ofstream out(path);
  out << "node_id";
  for (std::size_t j = 0; j < rows[0].size(); ++j) out << ",dim" << j;
  out << '\n';
  out.precision(10);
  for (std::size_t u = 0; u < rows.size(); ++u) {
    out << u;
    for (double v : rows[u]) out << ',' << v;
    out << '\n';
  }
  std::cout << "wrote " << rows.size() << " embeddings to " << path << '\n';
  return 0;
}

struct SweepPoint {
  std::string param;
  double value;
  std::uint64_t seed;
};

TrainConfig apply_sweep_value(TrainConfig cfg, const std::string& param, double value) {
  if (param == "Q") {
    cfg.missing_ratio = value;
  } else if (param == "K") {
    cfg.mixture_k = static_cast<int>(value);
  } else if (param == "L") {
    cfg.gnn_layers = static_cast<int>(value);
  } else if (param == "dim") {
    cfg.embed_dim = static_cast<int>(value);
  } else if (param == "mask_z") {
    cfg.mask_z = value;
  } else {
    throw std::runtime_error("unknown sweep param " + param +
                             " (expected Q, K, L, dim or mask_z)");
  }
  return cfg;
}

std::vector<double> paper_grid(const std::string& param) {
  if (param == "Q") return {0.2, 0.5, 1, 2, 4, 6, 8, 10};
  if (param == "K") return {2, 4, 8, 16, 32, 64};
  if (param == "L") return {1, 2, 3, 4};
  if (param == "dim") return {8, 16, 32, 64, 128, 256};
  if (param == "mask_z") return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  throw std::runtime_error("unknown sweep param " + param);
}

int cmd_sweep(const CommonArgs& args, const std::string& param,
              std::vector<double> values, bool use_paper_grid, int n_seeds) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig base = load_config(args);
  if (use_paper_grid) values = paper_grid(param);
  if (values.empty()) throw std::runtime_error("sweep: no values given");

  auto full = load_stream(args.data, args.time_unit, args.unit_label);
  const std::string digest = file_digest(args.data);
  fs::path out(args.out_dir);
  fs::create_directories(out);

  std::vector<SweepPoint> points;
  for (double v : values) {
    for (int s = 0; s < n_seeds; ++s) {
      points.push_back({param, v, base.seed + static_cast<std::uint64_t>(s)});
    }
  }

  struct Row {
    SweepPoint point;
    EvalReport report;
    double final_loss;
  };
  std::vector<Row> rows(points.size());
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  const int workers =
      std::min<int>(max_workers(), static_cast<int>(points.size()));
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      TrainConfig cfg = apply_sweep_value(base, points[i].param, points[i].value);
      cfg.seed = points[i].seed;
      const fs::path point_dir =
          out / (param + "_" + std::to_string(points[i].value) + "_s" +
                 std::to_string(points[i].seed));
      auto art = run_training(cfg, full, digest, point_dir, false, true);
      rows[i].point = points[i];
      rows[i].report = run_eval(cfg, full.node_count, full,
                                (point_dir / "checkpoint.bin").string());
      rows[i].final_loss = art.fit.history.back().loss_total;
      std::lock_guard<std::mutex> lock(log_mutex);
      std::cerr << param << "=" << points[i].value << " seed=" << points[i].seed
                << " done\n";
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  const auto curve_path = (out / "curve.csv").string();
  std::ofstream curve(curve_path);
  curve << "param,value,seed,metric,score\n";
  curve.precision(10);
  for (const auto& r : rows) {
    for (int k : {3, 5, 10}) {
      curve << param << ',' << r.point.value << ',' << r.point.seed << ",hits@" << k
            << ',' << r.report.hits_at.at(k) << '\n';
    }
    curve << param << ',' << r.point.value << ',' << r.point.seed << ",mae,"
          << r.report.mae << '\n';
    curve << param << ',' << r.point.value << ',' << r.point.seed << ",final_loss,"
          << r.final_loss << '\n';
  }

  RunManifest m;
  m.command = "sweep";
  m.config_json = base.to_json();
  m.inputs.emplace_back(args.data, digest);
  m.outputs = {curve_path};
  m.seed = base.seed;
  m.wall_seconds = seconds_since(t0);
  m.write((out / "manifest.json").string());
  std::cout << "sweep finished: " << rows.size() << " points -> " << curve_path
            << '\n';
  return 0;
}

int cmd_bench(const CommonArgs& args, std::vector<int> sizes, int nodes, int epochs) {
  const auto t0 = std::chrono::steady_clock::now();
  if (sizes.empty()) sizes = {1000, 2000, 4000, 8000};
  std::sort(sizes.begin(), sizes.end());
  TrainConfig cfg = load_config(args);

  fs::path out(args.out_dir);
  fs::create_directories(out);
  std::vector<std::pair<int, double>> timings;
  for (int n_events : sizes) {
    auto res = generate_synthetic(nodes, n_events,
                                  SyntheticRegime::kPeriodicCommunities, cfg.seed);
    TrainConfig run_cfg = cfg;
    run_cfg.max_epochs = epochs;
    MtgnModel model(nodes, run_cfg);
    Trainer trainer(model);
    const auto start = std::chrono::steady_clock::now();
    trainer.fit(res.stream);
    const double per_epoch = seconds_since(start) / epochs;
    timings.emplace_back(n_events, per_epoch);
    std::cerr << n_events << " events: " << per_epoch << " s/epoch\n";
  }

  // Least-squares slope in log-log space.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [n, t] : timings) {
    const double x = std::log(static_cast<double>(n)), y = std::log(t);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n_pts = static_cast<double>(timings.size());
  const double slope = (n_pts * sxy - sx * sy) / (n_pts * sxx - sx * sx);

  const auto csv_path = (out / "scaling.csv").string();
  std::ofstream csv(csv_path);
  csv << "events,epoch_seconds\n";
  csv.precision(8);
  for (const auto& [n, t] : timings) csv << n << ',' << t << '\n';

  nlohmann::json summary;
  summary["sizes"] = sizes;
  summary["node_count"] = nodes;
  summary["epochs_timed"] = epochs;
  summary["loglog_slope"] = slope;
  std::ofstream((out / "scaling.json").string()) << summary.dump(2) << '\n';

  RunManifest m;
  m.command = "bench";
  m.config_json = cfg.to_json();
  m.outputs = {csv_path, (out / "scaling.json").string()};
  m.seed = cfg.seed;
  m.wall_seconds = seconds_since(t0);
  m.write((out / "manifest.json").string());
  std::cout << "log-log slope: " << slope << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MTGN: missing-event-aware temporal graph model"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string regime = "periodic-communities";
  int nodes = 100, events = 4000;
  bool trace_missing = false, force_eval = false, use_paper_grid = false;
  std::string checkpoint, sweep_param = "Q";
  std::vector<double> sweep_values;
  std::vector<int> bench_sizes;
  int n_seeds = 5, bench_nodes = 100, bench_epochs = 2;

  auto add_common = [&](CLI::App* cmd, bool needs_data, bool needs_out) {
    if (needs_data) cmd->add_option("--data", args.data, "edge list file")->required();
    if (needs_out) cmd->add_option("--out", args.out_dir, "output directory")->required();
    cmd->add_option("--time-unit", args.time_unit, "divide raw timestamps by this");
    cmd->add_option("--unit-label", args.unit_label, "human label for the unit");
    cmd->add_option("--config", args.config_path, "config JSON file");
    cmd->add_option("--seed", args.seed, "seed override")
        ->each([&](const std::string&) { args.seed_set = true; });
    cmd->add_option("--ablate", args.ablate, "ablations: wo-m, w-t");
    cmd->add_option("--q-strategy", args.q_strategy, "fixed, adaptive1 or adaptive2");
    cmd->add_option("--mask-z", args.mask_z, "fraction of train events to mask");
    cmd->add_option("--lr", args.lr, "learning rate override");
    cmd->add_option("--epochs", args.epochs, "max epochs override");
  };

  auto* prepare = app.add_subcommand("prepare", "normalize a raw edge list");
  add_common(prepare, true, true);

  auto* synth = app.add_subcommand("synth", "generate a synthetic event stream");
  synth->add_option("--regime", regime, "periodic-communities or preferential-bursty");
  synth->add_option("--nodes", nodes, "node count");
  synth->add_option("--events", events, "event count");
  synth->add_option("--seed", args.seed, "generator seed")
      ->each([&](const std::string&) { args.seed_set = true; });
  synth->add_option("--out", args.out_dir, "output directory")->required();

  auto* train = app.add_subcommand("train", "fit the model on a stream");
  add_common(train, true, true);
  train->add_flag("--trace-missing", trace_missing,
                  "write generated missing events of the final epoch");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  add_common(eval, true, true);
  eval->add_flag("--force", force_eval, "skip the data digest check");

  auto* sweep = app.add_subcommand("sweep", "grid over one hyperparameter");
  add_common(sweep, true, true);
  sweep->add_option("--param", sweep_param, "Q, K, L, dim or mask_z")->required();
  sweep->add_option("--values", sweep_values, "grid values");
  sweep->add_flag("--paper-grid", use_paper_grid, "use the reference grid");
  sweep->add_option("--seeds", n_seeds, "independent seeds per value");

  auto* bench = app.add_subcommand("bench", "epoch-time scaling benchmark");
  bench->add_option("--sizes", bench_sizes, "event counts");
  bench->add_option("--nodes", bench_nodes, "fixed node count");
  bench->add_option("--bench-epochs", bench_epochs, "epochs timed per size");
  bench->add_option("--config", args.config_path, "config JSON file");
  bench->add_option("--seed", args.seed, "seed")
      ->each([&](const std::string&) { args.seed_set = true; });
  bench->add_option("--out", args.out_dir, "output directory")->required();

  auto* exp = app.add_subcommand("export-embeddings", "per-node embedding CSV");
  exp->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  add_common(exp, true, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) return cmd_prepare(args);
    if (synth->parsed()) {
      return cmd_synth(regime, nodes, events, args.seed_set ? args.seed : 42,
                       args.out_dir);
    }
    if (train->parsed()) return cmd_train(args, trace_missing);
    if (eval->parsed()) return cmd_eval(checkpoint, args, force_eval);
    if (sweep->parsed()) {
      return cmd_sweep(args, sweep_param, sweep_values, use_paper_grid, n_seeds);
    }
    if (bench->parsed()) return cmd_bench(args, bench_sizes, bench_nodes, bench_epochs);
    if (exp->parsed()) return cmd_export_embeddings(checkpoint, args);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
