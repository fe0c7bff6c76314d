// partmotion: generate articulated-object datasets, train and finetune the
// part-motion model, and run the evaluation suites.
//
// Exit codes: 0 success, 2 usage or missing input, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "partmotion/cli/config.hpp"
#include "partmotion/eval/evaluate.hpp"
#include "partmotion/eval/field.hpp"
#include "partmotion/eval/render.hpp"
#include "partmotion/eval/sweep.hpp"
#include "partmotion/model/checkpoint.hpp"
#include "partmotion/synthgen/dataset.hpp"
#include "partmotion/train/trainer.hpp"
#include "partmotion/util/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace partmotion;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_exists(const fs::path& p, const char* what) {
  if (!fs::exists(p)) {
    throw UsageError(std::string(what) + " not found: " + p.string());
  }
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("PARTMOTION_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::strtoull(v, nullptr, 10);
}

synthgen::Dataset load_dataset(const fs::path& dir) {
  require_exists(dir / "meta.json", "dataset");
  return synthgen::read_dataset(dir);
}

model::LoadedCheckpoint load_ckpt(const fs::path& dir) {
  // Accept either a checkpoint directory or a run directory containing one.
  if (fs::exists(dir / "manifest.json")) return model::load_checkpoint(dir);
  if (fs::exists(dir / "checkpoint_final" / "manifest.json")) {
    return model::load_checkpoint(dir / "checkpoint_final");
  }
  throw UsageError("checkpoint not found: " + dir.string());
}

fs::path resolve_ckpt_dir(const fs::path& dir) {
  if (fs::exists(dir / "manifest.json")) return dir;
  if (fs::exists(dir / "checkpoint_final" / "manifest.json")) {
    return dir / "checkpoint_final";
  }
  throw UsageError("checkpoint not found: " + dir.string());
}

void write_json(const json& j, const fs::path& file) {
  std::ofstream out(file);
  out << j.dump(2) << "\n";
}

// ---- gen-data ----

struct GenArgs {
  std::string category;
  int objects = 16;
  int tuples = 32;
  int points = 512;
  std::uint64_t seed = 7;
  bool seed_given = false;
  double delta_min = 0.0;
  std::string out;
  bool force = false;
};

int cmd_gen_data(const GenArgs& args) {
  const synthgen::Category category =
      synthgen::category_from_string(args.category);
  if (args.objects < 2) throw UsageError("--objects must be >= 2 for a split");
  const fs::path out(args.out);
  if (fs::exists(out) && !fs::is_empty(out) && !args.force) {
    throw UsageError("output directory exists and is not empty (use --force): " +
                     out.string());
  }
  std::uint64_t seed = args.seed;
  if (!args.seed_given) {
    if (auto env = env_seed()) seed = *env;
  }

  std::vector<synthgen::ArticulatedObject> all;
  for (int i = 0; i < args.objects; ++i) {
    all.push_back(synthgen::make_object(
        category, mix_seed(seed, static_cast<std::uint64_t>(i)), args.points));
  }
  // 7:1 split by objects.
  const int n_test = std::max(1, args.objects / 8);
  std::vector<synthgen::ArticulatedObject> train_objs(all.begin(),
                                                      all.end() - n_test);
  std::vector<synthgen::ArticulatedObject> test_objs(all.end() - n_test,
                                                     all.end());
  synthgen::write_dataset(train_objs, args.tuples, out / "train",
                          args.delta_min);
  synthgen::write_dataset(test_objs, args.tuples, out / "test",
                          args.delta_min);
  write_json(json{{"category", args.category},
                  {"objects", args.objects},
                  {"tuples", args.tuples},
                  {"points", args.points},
                  {"seed", seed},
                  {"delta_min", args.delta_min},
                  {"split", {{"train", args.objects - n_test},
                             {"test", n_test}}}},
             out / "gen_config.json");
  std::cout << "wrote " << (args.objects - n_test) << " train / " << n_test
            << " test objects to " << out.string() << "\n";
  return 0;
}

// ---- shared config plumbing for train / finetune ----

struct ConfigArgs {
  std::string config_file;
  std::vector<std::string> overrides;
  int steps = -1;
  int batch = -1;
  double lr = -1.0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = -1;
};

json resolve_with_flags(const ConfigArgs& args) {
  std::optional<fs::path> file;
  if (!args.config_file.empty()) {
    require_exists(args.config_file, "config file");
    file = fs::path(args.config_file);
  }
  json resolved;
  try {
    resolved = cli::resolve_config(file, args.overrides, env_seed());
  } catch (const cli::ConfigError& e) {
    throw UsageError(e.what());
  }
  if (args.steps >= 0) resolved["train"]["steps"] = args.steps;
  if (args.batch > 0) resolved["train"]["batch_size"] = args.batch;
  if (args.lr > 0.0) resolved["train"]["learning_rate"] = args.lr;
  if (args.seed_given) resolved["train"]["seed"] = args.seed;
  if (args.jobs > 0) resolved["train"]["jobs"] = args.jobs;
  return resolved;
}

// ---- train ----

struct TrainArgs {
  std::string data;
  std::string val_data;
  std::string out;
  ConfigArgs cfg;
};

int cmd_train(const TrainArgs& args) {
  require_exists(args.data, "dataset");
  const synthgen::Dataset dataset = load_dataset(args.data);
  std::optional<synthgen::Dataset> val;
  if (!args.val_data.empty()) val = load_dataset(args.val_data);

  json resolved = resolve_with_flags(args.cfg);
  // The dataset is the source of truth for input sizes.
  resolved["model"]["n_points"] = dataset.meta.n_points;
  resolved["model"]["num_joints"] = dataset.meta.joints_per_object;
  const cli::CliConfig cfg = cli::config_from_json(resolved);

  const fs::path run_dir(args.out);
  fs::create_directories(run_dir);
  write_json(resolved, run_dir / "resolved_config.json");

  const train::TrainResult result =
      train::train(dataset, cfg.model, cfg.train, run_dir, nullptr,
                   val ? &*val : nullptr);
  eval::render_loss_curve(result.record, run_dir);
  std::cout << "final loss "
            << (result.record.steps.empty() ? 0.0
                                            : result.record.steps.back().loss)
            << " after " << result.record.steps.size() << " steps ("
            << result.record.wall_clock_sec << " s)\n";
  return 0;
}

// ---- finetune ----

struct FinetuneArgs {
  std::string ckpt;
  std::string data;
  std::string out;
  double fraction = 0.05;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 1;
};

int cmd_finetune(const FinetuneArgs& args) {
  require_exists(args.data, "dataset");
  const fs::path ckpt_dir = resolve_ckpt_dir(args.ckpt);
  const synthgen::Dataset dataset = load_dataset(args.data);
  const fs::path run_dir(args.out);
  fs::create_directories(run_dir);

  std::optional<std::uint64_t> seed;
  if (args.seed_given) seed = args.seed;
  else if (auto env = env_seed()) seed = *env;

  const train::TrainResult result = train::finetune(
      ckpt_dir, dataset, args.fraction, run_dir, seed, args.jobs);
  eval::render_loss_curve(result.record, run_dir);
  std::cout << "finetuned for " << result.record.steps.size() << " steps ("
            << result.record.wall_clock_sec << " s)\n";
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string out;
  double min_dphi = 0.0;
  double min_dphi_deg = 0.0;
  int max_tuples = 0;
  int jobs = 1;
  bool per_joint_pae = false;
  std::string ablation;       // "no_nir" switches the forward-path expectation
  std::string ablation_ckpt;  // attach a no-NIR comparison block
};

int cmd_eval(const EvalArgs& args) {
  require_exists(args.data, "dataset");
  const model::LoadedCheckpoint loaded = load_ckpt(args.ckpt);
  if (args.ablation == "no_nir" &&
      loaded.network.config().variant != model::ModelVariant::no_nir) {
    throw UsageError(
        "--ablation no_nir expects a checkpoint of the no-NIR variant");
  }
  if (!args.ablation.empty() && args.ablation != "no_nir") {
    throw UsageError("unknown --ablation value: " + args.ablation);
  }
  const synthgen::Dataset dataset = load_dataset(args.data);

  eval::EvalOptions options;
  options.min_dphi = args.min_dphi;
  if (args.min_dphi_deg > 0.0) {
    options.min_dphi = args.min_dphi_deg * M_PI / 180.0;
  }
  options.max_tuples = args.max_tuples;
  options.jobs = args.jobs;
  options.per_joint_pae = args.per_joint_pae;

  eval::MetricsReport report =
      eval::evaluate(loaded.network, dataset, options);
  if (!args.ablation_ckpt.empty()) {
    const model::LoadedCheckpoint ab = load_ckpt(args.ablation_ckpt);
    eval::attach_ablation(report, ab.network, dataset, options);
  }
  eval::render_report(report, fs::path(args.out));
  std::cout << "evaluated " << report.count << " tuples: median EMD "
            << report.aggregates.at("emd").median << " (baseline "
            << report.baselines.at("emd").median << ")\n";
  return 0;
}

// ---- interp ----

struct InterpArgs {
  std::string ckpt;
  std::string data;
  std::string out;
  int object_index = 0;
  int tuple_index = 0;
  int joint = 0;
  int steps = 5;
  double extrap = 0.25;
  double phi1 = std::numeric_limits<double>::quiet_NaN();
  double phi2 = std::numeric_limits<double>::quiet_NaN();
};

int cmd_interp(const InterpArgs& args) {
  require_exists(args.data, "dataset");
  const model::LoadedCheckpoint loaded = load_ckpt(args.ckpt);
  const synthgen::Dataset dataset = load_dataset(args.data);
  if (args.object_index < 0 ||
      args.object_index >= static_cast<int>(dataset.objects.size())) {
    throw UsageError("--object-index out of range");
  }
  const auto& entry =
      dataset.objects[static_cast<std::size_t>(args.object_index)];
  if (args.tuple_index < 0 ||
      args.tuple_index >= static_cast<int>(entry.tuples.size())) {
    throw UsageError("--tuple-index out of range");
  }
  const auto& tup = entry.tuples[static_cast<std::size_t>(args.tuple_index)];
  PartPose phi1 = tup.phi1;
  PartPose phi2 = tup.phi2;
  if (!std::isnan(args.phi1)) phi1[args.joint] = args.phi1;
  if (!std::isnan(args.phi2)) phi2[args.joint] = args.phi2;

  std::vector<PartPose> grid = eval::default_sweep_grid(
      phi1, phi2, args.joint, args.steps, args.extrap);
  if (args.extrap <= 0.0) {
    grid.erase(grid.begin());
    grid.pop_back();
  }
  const eval::SweepCurve curve = eval::interp_extrap(
      loaded.network, entry.object, phi1, phi2, grid, args.joint);
  eval::render_report(curve, fs::path(args.out));
  std::cout << "sweep over " << curve.points.size() << " poses written to "
            << args.out << "\n";
  return 0;
}

// ---- gridviz ----

struct GridvizArgs {
  std::string ckpt;
  std::string data;
  std::string out;
  int object_index = 0;
  int tuple_index = 0;
  double phi3 = std::numeric_limits<double>::quiet_NaN();
};

int cmd_gridviz(const GridvizArgs& args) {
  require_exists(args.data, "dataset");
  const model::LoadedCheckpoint loaded = load_ckpt(args.ckpt);
  if (loaded.network.config().variant != model::ModelVariant::nir) {
    throw UsageError("gridviz requires a NIR-variant checkpoint");
  }
  const synthgen::Dataset dataset = load_dataset(args.data);
  if (args.object_index < 0 ||
      args.object_index >= static_cast<int>(dataset.objects.size())) {
    throw UsageError("--object-index out of range");
  }
  const auto& entry =
      dataset.objects[static_cast<std::size_t>(args.object_index)];
  if (args.tuple_index < 0 ||
      args.tuple_index >= static_cast<int>(entry.tuples.size())) {
    throw UsageError("--tuple-index out of range");
  }
  synthgen::TrainingTuple tup =
      entry.tuples[static_cast<std::size_t>(args.tuple_index)];
  if (!std::isnan(args.phi3)) {
    PartPose phi3 = tup.phi3;
    phi3[eval::dominant_joint(entry.object)] = args.phi3;
    tup = synthgen::make_tuple_at(entry.object, tup.phi1, tup.phi2, phi3);
  }
  const eval::FieldReport field =
      eval::grid_field_report(loaded.network, entry.object, tup);
  eval::render_report(field, fs::path(args.out));
  if (field.fittable) {
    std::cout << "fitted axis error " << field.axis_error_deg << " deg\n";
  } else {
    std::cout << "field not fittable (degenerate displacements)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"articulated part-motion generation at desk scale"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data",
                                     "generate a synthetic dataset with a "
                                     "7:1 train/test object split");
  gen_cmd->add_option("--category", gen.category,
                      "door|laptop|oven|refrigerator|microwave|table|storage")
      ->required();
  gen_cmd->add_option("--objects", gen.objects, "number of objects");
  gen_cmd->add_option("--tuples", gen.tuples, "tuples per object");
  gen_cmd->add_option("--points", gen.points, "points per cloud");
  auto* gen_seed = gen_cmd->add_option("--seed", gen.seed, "generation seed");
  gen_cmd->add_option("--delta-min", gen.delta_min,
                      "min |phi1-phi2| separation (0 = per-joint default)");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_flag("--force", gen.force, "overwrite non-empty output");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--data", tr.data, "training dataset dir")->required();
  train_cmd->add_option("--val-data", tr.val_data, "validation dataset dir");
  train_cmd->add_option("--out", tr.out, "run directory")->required();
  train_cmd->add_option("--config", tr.cfg.config_file, "JSON config file");
  train_cmd->add_option("--set", tr.cfg.overrides,
                        "dotted-path override, e.g. loss.movable_weight=0");
  train_cmd->add_option("--steps", tr.cfg.steps, "training steps");
  train_cmd->add_option("--batch", tr.cfg.batch, "batch size");
  train_cmd->add_option("--lr", tr.cfg.lr, "learning rate");
  auto* tr_seed = train_cmd->add_option("--seed", tr.cfg.seed, "seed");
  train_cmd->add_option("--jobs", tr.cfg.jobs, "parallel batch workers");

  FinetuneArgs ft;
  auto* ft_cmd = app.add_subcommand("finetune",
                                    "resume a checkpoint on a new dataset for "
                                    "a fraction of the original steps");
  ft_cmd->add_option("--ckpt", ft.ckpt, "checkpoint or run directory")
      ->required();
  ft_cmd->add_option("--data", ft.data, "dataset dir")->required();
  ft_cmd->add_option("--out", ft.out, "run directory")->required();
  ft_cmd->add_option("--fraction", ft.fraction,
                     "fraction of the original training steps");
  auto* ft_seed = ft_cmd->add_option("--seed", ft.seed, "seed");
  ft_cmd->add_option("--jobs", ft.jobs, "parallel batch workers");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--ckpt", ev.ckpt, "checkpoint or run directory")
      ->required();
  eval_cmd->add_option("--data", ev.data, "dataset dir")->required();
  eval_cmd->add_option("--out", ev.out, "report directory")->required();
  eval_cmd->add_option("--min-dphi", ev.min_dphi,
                       "skip tuples below this |phi3-phi1| (native units)");
  eval_cmd->add_option("--min-dphi-deg", ev.min_dphi_deg,
                       "same threshold in degrees (revolute)");
  eval_cmd->add_option("--max-tuples", ev.max_tuples, "cap tuple count");
  eval_cmd->add_option("--jobs", ev.jobs, "parallel evaluation workers");
  eval_cmd->add_flag("--per-joint-pae", ev.per_joint_pae,
                     "record PAE for every joint");
  eval_cmd->add_option("--ablation", ev.ablation,
                       "no_nir: checkpoint uses the ablated forward path");
  eval_cmd->add_option("--ablation-ckpt", ev.ablation_ckpt,
                       "attach a no-NIR comparison block");

  InterpArgs in;
  auto* interp_cmd =
      app.add_subcommand("interp", "EMD sweep between and beyond two frames");
  interp_cmd->add_option("--ckpt", in.ckpt, "checkpoint or run directory")
      ->required();
  interp_cmd->add_option("--data", in.data, "dataset dir")->required();
  interp_cmd->add_option("--out", in.out, "output directory")->required();
  interp_cmd->add_option("--object-index", in.object_index, "object index");
  interp_cmd->add_option("--tuple-index", in.tuple_index,
                         "tuple supplying the two frames");
  interp_cmd->add_option("--joint", in.joint, "swept joint");
  interp_cmd->add_option("--steps", in.steps, "interpolation points");
  interp_cmd->add_option("--extrap", in.extrap,
                         "extrapolation fraction beyond the frames (0 = off)");
  interp_cmd->add_option("--phi1", in.phi1, "override frame-1 pose value");
  interp_cmd->add_option("--phi2", in.phi2, "override frame-2 pose value");

  GridvizArgs gv;
  auto* gv_cmd = app.add_subcommand(
      "gridviz", "export the decoded transformation field at grid nodes");
  gv_cmd->add_option("--ckpt", gv.ckpt, "checkpoint or run directory")
      ->required();
  gv_cmd->add_option("--data", gv.data, "dataset dir")->required();
  gv_cmd->add_option("--out", gv.out, "output directory")->required();
  gv_cmd->add_option("--object-index", gv.object_index, "object index");
  gv_cmd->add_option("--tuple-index", gv.tuple_index, "tuple index");
  gv_cmd->add_option("--phi3", gv.phi3, "override target pose value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  gen.seed_given = gen_seed->count() > 0;
  tr.cfg.seed_given = tr_seed->count() > 0;
  ft.seed_given = ft_seed->count() > 0;

  try {
    if (gen_cmd->parsed()) return cmd_gen_data(gen);
    if (train_cmd->parsed()) return cmd_train(tr);
    if (ft_cmd->parsed()) return cmd_finetune(ft);
    if (eval_cmd->parsed()) return cmd_eval(ev);
    if (interp_cmd->parsed()) return cmd_interp(in);
    if (gv_cmd->parsed()) return cmd_gridviz(gv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const train::TrainAbortError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
