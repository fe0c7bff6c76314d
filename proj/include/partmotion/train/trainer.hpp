#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "partmotion/model/network.hpp"
#include "partmotion/synthgen/dataset.hpp"
#include "partmotion/transport/loss.hpp"

namespace partmotion::train {

enum class LrSchedule { constant, cosine };

struct TrainConfig {
  int steps = 2500;
  int batch_size = 8;
  double learning_rate = 1e-3;
  LrSchedule lr_schedule = LrSchedule::cosine;
  std::uint64_t seed = 1;
  transport::LossConfig loss;
  int eval_every = 0;        // 0 disables validation probes
  int checkpoint_every = 0;  // 0 keeps only final + best
  int jobs = 1;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct StepEvent {
  int step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct EvalEvent {
  int step = 0;
  double val_emd_median = 0.0;
};

// Append-only run log; serialized as line-delimited JSON events.
struct RunRecord {
  std::vector<StepEvent> steps;
  std::vector<EvalEvent> evals;
  double wall_clock_sec = 0.0;
  std::string config_hash;

  void write_jsonl(const std::filesystem::path& file) const;
  static RunRecord read_jsonl(const std::filesystem::path& file);
};

struct TrainAbortError : std::runtime_error {
  int step;
  explicit TrainAbortError(int s)
      : std::runtime_error("non-finite loss at step " + std::to_string(s)),
        step(s) {}
};

struct TrainResult {
  model::NetworkF network;
  RunRecord record;

  explicit TrainResult(model::NetworkF net) : network(std::move(net)) {}
};

// First-order training on training_loss. Deterministic for a fixed
// (seed, config, dataset) in single-threaded mode; with jobs > 1 the batch
// gradient reduction groups per worker, which can shift rounding. When
// run_dir is nonempty, writes records.jsonl, resolved train config, and
// checkpoint_final/ + checkpoint_best/ (plus periodic checkpoints when
// checkpoint_every > 0). `initial` (when given) replaces the fresh
// seed-initialized parameters; `val` enables eval_every probes.
TrainResult train(const synthgen::Dataset& dataset,
                  const model::ModelConfig& model_cfg,
                  const TrainConfig& train_cfg,
                  const std::filesystem::path& run_dir = {},
                  const model::NetworkF* initial = nullptr,
                  const synthgen::Dataset* val = nullptr);

// Resumes a checkpoint for `ceil(fraction * original steps)` steps with the
// learning rate and loss settings inherited from the checkpoint's training
// echo. All parameters stay trainable.
TrainResult finetune(const std::filesystem::path& checkpoint_dir,
                     const synthgen::Dataset& dataset, double fraction,
                     const std::filesystem::path& run_dir = {},
                     std::optional<std::uint64_t> seed = std::nullopt,
                     int jobs = 1);

}  // namespace partmotion::train
