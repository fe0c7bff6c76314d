#include "partmotion/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "partmotion/model/checkpoint.hpp"
#include "partmotion/train/optimizer.hpp"
#include "partmotion/transport/assignment.hpp"
#include "partmotion/util/digest.hpp"
#include "partmotion/util/rng.hpp"

namespace partmotion::train {

namespace fs = std::filesystem;
using nlohmann::json;
using model::NetworkF;

void TrainConfig::validate() const {
  if (steps < 0) throw std::invalid_argument("TrainConfig: steps must be >= 0");
  if (batch_size <= 0) {
    throw std::invalid_argument("TrainConfig: batch_size must be positive");
  }
  if (learning_rate <= 0.0) {
    throw std::invalid_argument("TrainConfig: learning_rate must be positive");
  }
  if (jobs <= 0) throw std::invalid_argument("TrainConfig: jobs must be >= 1");
  if (eval_every < 0 || checkpoint_every < 0) {
    throw std::invalid_argument("TrainConfig: negative interval");
  }
  loss.validate();
}

json to_json(const TrainConfig& c) {
  return json{{"steps", c.steps},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"lr_schedule",
               c.lr_schedule == LrSchedule::cosine ? "cosine" : "constant"},
              {"seed", c.seed},
              {"eval_every", c.eval_every},
              {"checkpoint_every", c.checkpoint_every},
              {"jobs", c.jobs},
              {"loss",
               json{{"mode", transport::to_string(c.loss.mode)},
                    {"movable_weight", c.loss.movable_weight},
                    {"sinkhorn_epsilon", c.loss.sinkhorn_epsilon},
                    {"sinkhorn_iters", c.loss.sinkhorn_iters},
                    {"exact_size_cap", c.loss.exact_size_cap}}}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    c.steps = j.at("steps").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    const std::string sched = j.at("lr_schedule").get<std::string>();
    if (sched == "cosine") c.lr_schedule = LrSchedule::cosine;
    else if (sched == "constant") c.lr_schedule = LrSchedule::constant;
    else throw std::invalid_argument("unknown lr_schedule: " + sched);
    c.seed = j.at("seed").get<std::uint64_t>();
    c.eval_every = j.at("eval_every").get<int>();
    c.checkpoint_every = j.at("checkpoint_every").get<int>();
    c.jobs = j.at("jobs").get<int>();
    const json& l = j.at("loss");
    c.loss.mode = transport::loss_mode_from_string(
        l.at("mode").get<std::string>());
    c.loss.movable_weight = l.at("movable_weight").get<double>();
    c.loss.sinkhorn_epsilon = l.at("sinkhorn_epsilon").get<double>();
    c.loss.sinkhorn_iters = l.at("sinkhorn_iters").get<int>();
    c.loss.exact_size_cap = l.at("exact_size_cap").get<int>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad train config: ") + e.what());
  }
  c.validate();
  return c;
}

void RunRecord::write_jsonl(const fs::path& file) const {
  std::ofstream out(file);
  out << json{{"event", "run"},
              {"config_hash", config_hash},
              {"wall_clock_sec", wall_clock_sec}}
             .dump()
      << "\n";
  for (const auto& s : steps) {
    out << json{{"step", s.step}, {"loss", s.loss}, {"lr", s.lr}}.dump()
        << "\n";
  }
  for (const auto& e : evals) {
    out << json{{"step", e.step}, {"val_emd_median", e.val_emd_median}}.dump()
        << "\n";
  }
}

RunRecord RunRecord::read_jsonl(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("missing run record: " + file.string());
  RunRecord rec;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.contains("event")) {
      rec.config_hash = j.value("config_hash", "");
      rec.wall_clock_sec = j.value("wall_clock_sec", 0.0);
    } else if (j.contains("val_emd_median")) {
      rec.evals.push_back(
          {j.at("step").get<int>(), j.at("val_emd_median").get<double>()});
    } else {
      rec.steps.push_back({j.at("step").get<int>(), j.at("loss").get<double>(),
                           j.value("lr", 0.0)});
    }
  }
  return rec;
}

namespace {

double schedule_lr(const TrainConfig& cfg, int step) {
  if (cfg.lr_schedule == LrSchedule::constant || cfg.steps <= 1) {
    return cfg.learning_rate;
  }
  const double t = static_cast<double>(step) / static_cast<double>(cfg.steps);
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(M_PI * t));
}

void check_compat(const synthgen::Dataset& dataset,
                  const model::ModelConfig& cfg) {
  if (dataset.meta.n_points != cfg.n_points) {
    throw std::invalid_argument(
        "dataset n_points differs from ModelConfig.n_points");
  }
  if (dataset.meta.joints_per_object != cfg.num_joints) {
    throw std::invalid_argument(
        "dataset joints_per_object differs from ModelConfig.num_joints");
  }
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double val_emd_median(const NetworkF& net, const synthgen::Dataset& val,
                      int cap) {
  std::vector<double> emds;
  const int total = std::min(val.total_tuples(), cap);
  for (int i = 0; i < total; ++i) {
    const auto& tup = val.tuple(i);
    const PointCloud pred = net.forward(tup);
    emds.push_back(transport::emd_exact(pred, tup.i3).cost);
  }
  return median_of(std::move(emds));
}

struct BatchWork {
  double loss = 0.0;
  model::ParamStore<float> grads;  // value buffers unused
};

}  // namespace

TrainResult train(const synthgen::Dataset& dataset,
                  const model::ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, const fs::path& run_dir,
                  const NetworkF* initial, const synthgen::Dataset* val) {
  model_cfg.validate();
  train_cfg.validate();
  check_compat(dataset, model_cfg);
  if (dataset.total_tuples() == 0) {
    throw std::invalid_argument("train: dataset is empty");
  }
  const auto t_start = std::chrono::steady_clock::now();

  TrainResult result{initial != nullptr
                         ? *initial
                         : NetworkF::init(model_cfg, train_cfg.seed)};
  NetworkF& net = result.network;
  RunRecord& rec = result.record;
  {
    json resolved{{"model", to_json(model_cfg)}, {"train", to_json(train_cfg)}};
    rec.config_hash = to_hex(fnv1a64(resolved.dump()));
  }

  // Epoch order: reshuffled index stream, batches never straddle a reshuffle.
  std::vector<int> order(static_cast<std::size_t>(dataset.total_tuples()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng order_rng(mix_seed(train_cfg.seed, fnv1a64("batch-order")));
  const auto reshuffle = [&] {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[order_rng.uniform_int(i)]);
    }
  };
  reshuffle();
  std::size_t cursor = 0;

  Adam<float> opt;
  double best_loss = std::numeric_limits<double>::infinity();
  std::optional<model::ParamStore<float>> best_params;
  const int jobs = std::max(1, train_cfg.jobs);

  for (int step = 0; step < train_cfg.steps; ++step) {
    // Assemble the batch.
    std::vector<int> batch(static_cast<std::size_t>(train_cfg.batch_size));
    for (int b = 0; b < train_cfg.batch_size; ++b) {
      if (cursor >= order.size()) {
        reshuffle();
        cursor = 0;
      }
      batch[static_cast<std::size_t>(b)] = order[cursor++];
    }

    // Per-element forward/backward; workers accumulate into private grad
    // buffers that are merged in worker-index order.
    std::vector<BatchWork> work(static_cast<std::size_t>(jobs));
    const auto run_worker = [&](int w) {
      NetworkF local = net;  // shared values, private grads
      local.params().zero_grad();
      double loss_sum = 0.0;
      for (std::size_t b = static_cast<std::size_t>(w); b < batch.size();
           b += static_cast<std::size_t>(jobs)) {
        const auto& tup = dataset.tuple(batch[b]);
        model::ForwardContext<float> ctx;
        const PointCloud pred = local.forward(tup, ctx);
        model::GradCloud dpred;
        const auto lv = transport::training_loss_grad(
            pred, tup.i3, tup.movable_mask, train_cfg.loss, dpred);
        loss_sum += lv.value;
        local.backward(ctx, dpred);
      }
      work[static_cast<std::size_t>(w)].loss = loss_sum;
      work[static_cast<std::size_t>(w)].grads = std::move(local.params());
    };
    if (jobs == 1) {
      run_worker(0);
    } else {
      std::vector<std::thread> threads;
      threads.reserve(static_cast<std::size_t>(jobs));
      for (int w = 0; w < jobs; ++w) threads.emplace_back(run_worker, w);
      for (auto& t : threads) t.join();
    }

    double loss = 0.0;
    net.params().zero_grad();
    const float inv_batch = 1.0f / static_cast<float>(train_cfg.batch_size);
    for (int w = 0; w < jobs; ++w) {
      loss += work[static_cast<std::size_t>(w)].loss;
      net.params().accumulate_grads(work[static_cast<std::size_t>(w)].grads,
                                    inv_batch);
    }
    loss /= static_cast<double>(train_cfg.batch_size);

    const double lr = schedule_lr(train_cfg, step);
    rec.steps.push_back({step, loss, lr});
    if (!std::isfinite(loss)) throw TrainAbortError(step);

    opt.step(net.params(), lr);

    if (loss < best_loss) {
      best_loss = loss;
      best_params = net.params();
    }
    if (val != nullptr && train_cfg.eval_every > 0 &&
        (step + 1) % train_cfg.eval_every == 0) {
      rec.evals.push_back({step, val_emd_median(net, *val, 64)});
    }
    if (!run_dir.empty() && train_cfg.checkpoint_every > 0 &&
        (step + 1) % train_cfg.checkpoint_every == 0) {
      json extra{{"train", to_json(train_cfg)}, {"step", step}};
      save_checkpoint(net, run_dir / ("checkpoint_step_" +
                                      std::to_string(step + 1)),
                      &extra);
    }
  }

  rec.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();

  if (!run_dir.empty()) {
    fs::create_directories(run_dir);
    json extra{{"train", to_json(train_cfg)}};
    save_checkpoint(net, run_dir / "checkpoint_final", &extra);
    if (best_params.has_value()) {
      NetworkF best_net(net.config());
      best_net.params() = *best_params;
      save_checkpoint(best_net, run_dir / "checkpoint_best", &extra);
    } else {
      save_checkpoint(net, run_dir / "checkpoint_best", &extra);
    }
    rec.write_jsonl(run_dir / "records.jsonl");
    std::ofstream cfg_out(run_dir / "resolved_config.json");
    cfg_out << json{{"model", to_json(model_cfg)},
                    {"train", to_json(train_cfg)}}
                   .dump(2)
            << "\n";
  }
  return result;
}

TrainResult finetune(const fs::path& checkpoint_dir,
                     const synthgen::Dataset& dataset, double fraction,
                     const fs::path& run_dir, std::optional<std::uint64_t> seed,
                     int jobs) {
  if (fraction < 0.0) {
    throw std::invalid_argument("finetune: fraction must be >= 0");
  }
  model::LoadedCheckpoint loaded = model::load_checkpoint(checkpoint_dir);
  if (!loaded.manifest.contains("extra") ||
      !loaded.manifest["extra"].contains("train")) {
    throw std::invalid_argument(
        "finetune: checkpoint carries no training config echo");
  }
  TrainConfig cfg = train_config_from_json(loaded.manifest["extra"]["train"]);
  const int original_steps = cfg.steps;
  cfg.steps = static_cast<int>(
      std::ceil(fraction * static_cast<double>(original_steps)));
  if (seed.has_value()) cfg.seed = *seed;
  cfg.jobs = jobs;
  cfg.checkpoint_every = 0;
  return train(dataset, loaded.network.config(), cfg, run_dir,
               &loaded.network);
}

}  // namespace partmotion::train
