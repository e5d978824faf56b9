// SPDX-License-Identifier: Apache-2.0
#include "intruder/cli.hpp"

#include "intruder/checkpoint.hpp"
#include "intruder/error.hpp"
#include "intruder/intervention.hpp"
#include "intruder/io.hpp"
#include "intruder/report.hpp"
#include "intruder/spectral.hpp"
#include "intruder/toy/continual.hpp"
#include "intruder/toy/presets.hpp"
#include "intruder/toy/trainer.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace intruder::cli {
namespace {

/// Raised when a scan finds nothing to act on.
class EmptyResult : public Error {
 public:
  using Error::Error;
};

struct ScanFlags {
  double epsilon = 0.5;
  std::size_t k = 10;
  bool right = false;

  ScanConfig config() const {
    ScanConfig cfg{epsilon, k, right};
    cfg.validate();
    return cfg;
  }
};

struct PairFlags {
  std::string base;
  std::string tuned;
};

struct TrainerFlags {
  std::string mode = "full";
  std::size_t rank = 1;
  std::optional<double> alpha;
  double lr = toy::presets::kLearningRate;
  std::size_t steps = toy::presets::kSteps;
  std::size_t batch = 32;
  std::size_t snapshot_interval = 0;
  std::uint64_t seed = toy::presets::kTrainSeed;

  toy::TrainerConfig config() const {
    toy::TrainerConfig cfg = toy::presets::trainer(toy::parse_mode(mode), rank, lr, seed);
    if (alpha) cfg.alpha = *alpha;
    cfg.steps = steps;
    cfg.batch_size = batch;
    cfg.snapshot_interval = snapshot_interval;
    return cfg;
  }
};

const std::vector<std::string> kModes{"full", "lora", "lora-freeze-a"};

void add_pair(CLI::App* sub, PairFlags& p) {
  sub->add_option("--base", p.base, "Base checkpoint prefix (without .manifest.json)")->required();
  sub->add_option("--tuned", p.tuned, "Tuned checkpoint prefix")->required();
}

void add_scan(CLI::App* sub, ScanFlags& s) {
  sub->add_option("--epsilon", s.epsilon, "Cosine threshold in (0, 1)")->capture_default_str();
  sub->add_option("--k", s.k, "Number of top tuned singular vectors examined")->capture_default_str();
  sub->add_flag("--right", s.right, "Compare right singular vectors instead of left");
}

void add_trainer(CLI::App* sub, TrainerFlags& t) {
  sub->add_option("--mode", t.mode, "full | lora | lora-freeze-a")->check(CLI::IsMember(kModes))->capture_default_str();
  sub->add_option("--rank", t.rank, "Adapter rank")->capture_default_str();
  sub->add_option("--alpha", t.alpha, "Adapter alpha (default 2 * rank)");
  sub->add_option("--lr", t.lr, "Learning rate")->capture_default_str();
  sub->add_option("--steps", t.steps, "Gradient steps")->capture_default_str();
  sub->add_option("--batch", t.batch, "Batch size")->capture_default_str();
  sub->add_option("--snapshot-interval", t.snapshot_interval, "Steps between snapshots (0 = every 10%)");
  sub->add_option("--seed", t.seed, "Trainer seed")->capture_default_str();
}

CheckpointPair load_pair(const PairFlags& p) {
  return validate_pair(load_checkpoint(p.base), load_checkpoint(p.tuned));
}

void write_output(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string eps_label(const ScanConfig& cfg) {
  std::ostringstream s;
  s << "(epsilon=" << format_double(cfg.epsilon) << ", k=" << cfg.k << ")";
  return s.str();
}

// ---------------------------------------------------------------------------

int cmd_analyze(const PairFlags& pf, const ScanFlags& sf, const std::string& format, const std::string& out_path,
                std::ostream& out) {
  const ScanConfig cfg = sf.config();
  const ModelIntruderReport report = scan_model(load_pair(pf), cfg);
  write_output(out_path, format == "csv" ? to_csv(report) : dump(to_json(report)));
  out << "total=" << report.total() << '\n';
  return kOk;
}

int cmd_sweep(const PairFlags& pf, const ScanFlags& sf, const std::vector<double>& epsilons,
              const std::vector<std::size_t>& ks, const std::string& format, const std::string& out_path,
              std::ostream& out) {
  if (epsilons.empty() == ks.empty()) {
    throw InvalidInput("sweep needs exactly one of --epsilons or --ks");
  }
  const CheckpointPair pair = load_pair(pf);
  std::vector<SweepPoint> points;
  std::string param;
  if (!epsilons.empty()) {
    param = "epsilon";
    points = epsilon_sweep(pair, epsilons, sf.k);
  } else {
    param = "k";
    points = k_sweep(pair, ks, sf.epsilon);
  }
  write_output(out_path, format == "csv" ? sweep_to_csv(points, param) : dump(sweep_to_json(points, param)));
  std::size_t peak = 0;
  for (const auto& p : points) peak = std::max(peak, p.total);
  out << "points=" << points.size() << " max_total=" << peak << '\n';
  return kOk;
}

int cmd_grid(const PairFlags& pf, const std::string& tensor, std::size_t k0, std::size_t kt, const std::string& format,
             const std::string& out_path, std::ostream& out) {
  const CheckpointPair pair = load_pair(pf);
  const Matrix& base = pair.base.at(tensor);
  const auto p = static_cast<std::size_t>(std::min(base.rows(), base.cols()));
  const SimilarityGrid grid = similarity_grid(base, pair.tuned.at(tensor), std::min(k0, p), std::min(kt, p), tensor);
  write_output(out_path, format == "json" ? dump(to_json(grid)) : grid_to_csv(grid));
  out << "grid=" << grid.grid.rows() << "x" << grid.grid.cols() << '\n';
  return kOk;
}

int cmd_scale(const PairFlags& pf, const ScanFlags& sf, std::optional<double> lambda, std::vector<double> lambdas,
              const std::string& plan_path, const std::string& out_prefix, std::ostream& out) {
  const CheckpointPair pair = load_pair(pf);
  if (lambda && !lambdas.empty()) {
    throw InvalidInput("use either --lambda or --lambdas, not both");
  }
  if (lambda) lambdas = {*lambda};

  ScalingPlan plan;
  if (!plan_path.empty()) {
    plan = plan_from_json(Json::parse(read_text_file(plan_path)));
    if (!lambdas.empty()) {
      throw InvalidInput("--plan carries its own lambdas; drop --lambda/--lambdas");
    }
  } else {
    if (lambdas.empty()) lambdas = {kDefaultLambdaGrid.begin(), kDefaultLambdaGrid.end()};
    const ScanConfig cfg = sf.config();
    plan = select_top_intruders(scan_model(pair, cfg), 1.0);
    if (plan.empty()) {
      throw EmptyResult("no intruders at " + eps_label(cfg));
    }
  }

  auto emit = [&](const ScalingPlan& p, const fs::path& prefix) {
    save_checkpoint(apply_plan(pair.tuned, p), prefix);
    fs::path plan_file = prefix;
    plan_file += ".plan.json";
    write_output(plan_file, dump(plan_to_json(p)));
  };

  if (!plan_path.empty()) {
    emit(plan, out_prefix);
    out << "edited=" << plan.size() << '\n';
    return kOk;
  }
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    ScalingPlan p = plan;
    for (auto& [name, entry] : p) entry.lambda = lambdas[i];
    fs::path prefix = out_prefix;
    if (lambdas.size() > 1) prefix += ".lambda-" + format_double(lambdas[i]);
    emit(p, prefix);
  }
  out << "edited=" << plan.size() << " variants=" << lambdas.size() << '\n';
  return kOk;
}

std::string step_name(std::size_t step) {
  std::ostringstream s;
  s << "step-" << std::setw(6) << std::setfill('0') << step;
  return s.str();
}

int cmd_train(const TrainerFlags& tf, const std::string& base_path, std::uint64_t task_seed, const std::string& dir,
              std::ostream& out) {
  const toy::TrainerConfig cfg = tf.config();
  const toy::Body base_body =
      base_path.empty() ? toy::make_base(toy::presets::base_spec()) : toy::Body::from_checkpoint(load_checkpoint(base_path));
  const Checkpoint base = base_body.to_checkpoint();
  const toy::SyntheticTask task = toy::make_task(toy::presets::default_task(task_seed));
  const toy::ForgettingProbe probe =
      toy::make_forgetting_probe(base_body, toy::make_task(toy::presets::proxy_task(base_body)));

  const toy::ToyRun run = toy::train(base, task, cfg, &probe);

  const fs::path root(dir);
  save_checkpoint(base, root / "base");
  std::vector<std::string> paths;
  for (std::size_t i = 0; i < run.snapshots.size(); ++i) {
    const std::string rel = "snapshots/" + step_name(run.snapshot_steps[i]);
    save_checkpoint(run.snapshots[i], root / rel);
    paths.push_back(rel);
  }
  const ModelIntruderReport report = scan_model(validate_pair(base, run.final_snapshot()), ScanConfig{});
  Json summary = run_summary(run, paths);
  summary["forgetting_baseline"] = probe.baseline;
  summary["intruder_total"] = report.total();
  summary["scan"] = to_json(report.config);
  write_output(root / "summary.json", dump(summary));

  out << "final_accuracy=" << format_double(run.final_accuracy) << " forgetting=" << format_double(*run.forgetting)
      << " intruders=" << report.total() << '\n';
  return kOk;
}

int cmd_continual(const TrainerFlags& tf, std::size_t task_count, const ScanFlags& sf, const std::string& dir,
                  std::ostream& out) {
  if (task_count < 2) {
    throw InvalidInput("continual needs at least 2 tasks");
  }
  const toy::TrainerConfig cfg = tf.config();
  const ScanConfig scan = sf.config();
  const toy::Body base_body = toy::make_base(toy::presets::base_spec());
  const Checkpoint base = base_body.to_checkpoint();
  std::vector<toy::SyntheticTask> tasks;
  for (const auto& spec : toy::presets::continual_tasks(task_count)) tasks.push_back(toy::make_task(spec));

  const auto stages = toy::continual_run(base, tasks, cfg, scan);

  const fs::path root(dir);
  save_checkpoint(base, root / "base");
  Json stage_json = Json::array();
  for (const auto& s : stages) {
    const std::string rel = "stage-" + std::to_string(s.stage);
    save_checkpoint(s.body, root / rel);
    Json acc = Json::array();
    for (const auto& a : s.accuracy) acc.push_back(a ? Json(*a) : Json(nullptr));
    stage_json.push_back({{"stage", s.stage},
                          {"task", tasks[s.stage].spec.id},
                          {"checkpoint", rel},
                          {"accuracy", std::move(acc)},
                          {"intruder_total", s.intruder_total},
                          {"final_loss", s.final_loss}});
  }
  Json tasks_json = Json::array();
  for (const auto& t : tasks) tasks_json.push_back(t.spec.id);
  write_output(root / "accuracy.csv", accuracy_matrix_csv(stages));
  write_output(root / "summary.json",
               dump({{"config", to_json(cfg)}, {"scan", to_json(scan)}, {"tasks", tasks_json}, {"stages", stage_json}}));

  out << "intruder_totals=";
  for (std::size_t i = 0; i < stages.size(); ++i) out << (i ? "," : "") << stages[i].intruder_total;
  out << '\n';
  return kOk;
}

int cmd_report(const std::string& in_path, const std::string& format, const std::string& out_path, std::ostream& out) {
  Json doc;
  try {
    doc = Json::parse(read_text_file(in_path));
  } catch (const Json::parse_error& e) {
    throw InvalidInput(in_path + " is not valid JSON: " + e.what());
  }
  const ModelIntruderReport report = model_report_from_json(doc);
  write_output(out_path, format == "csv" ? to_csv(report) : dump(to_json(report)));
  out << "total=" << report.total() << '\n';
  return kOk;
}

int cmd_trace(const std::string& base_path, const std::vector<std::string>& snapshot_paths, const std::string& tensor,
              const std::vector<std::size_t>& ranks, const std::string& out_path, std::ostream& out) {
  const Checkpoint base = load_checkpoint(base_path);
  std::vector<Checkpoint> snaps;
  for (const auto& p : snapshot_paths) snaps.push_back(load_checkpoint(p));
  const EvolutionTrace trace = evolution_trace(snaps, tensor, ranks, base);
  write_output(out_path, dump(to_json(trace)));
  out << "snapshots=" << trace.steps.size() << '\n';
  return kOk;
}

int cmd_fixture(std::size_t size, double lambda, std::size_t injected, std::size_t plain, const std::string& dir,
                std::ostream& out) {
  if (size < 2 || injected + plain == 0) {
    throw InvalidInput("fixture needs size >= 2 and at least one tensor");
  }
  const Matrix eye = Matrix::Identity(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
  const Vector v = Vector::Constant(static_cast<Eigen::Index>(size), 1.0 / std::sqrt(static_cast<double>(size)));
  Checkpoint base;
  Checkpoint tuned;
  for (std::size_t i = 0; i < injected + plain; ++i) {
    const std::string name = "layer" + std::to_string(i) + ".weight";
    base.set(name, eye);
    tuned.set(name, i < injected ? inject_rank_one(eye, v, lambda) : eye);
  }
  const fs::path root(dir);
  save_checkpoint(base, root / "base");
  save_checkpoint(tuned, root / "tuned");
  out << "injected=" << injected << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral analysis of fine-tuned weight matrices", "intruder"};
  app.require_subcommand(1);

  PairFlags pair;
  ScanFlags scan;
  TrainerFlags trainer;
  std::string format = "json";
  std::string out_path;

  auto* analyze = app.add_subcommand("analyze", "Count intruder dimensions in every tensor of a checkpoint pair");
  add_pair(analyze, pair);
  add_scan(analyze, scan);
  analyze->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  analyze->add_option("--out", out_path, "Report file")->required();

  std::vector<double> epsilons;
  std::vector<std::size_t> ks;
  auto* sweep = app.add_subcommand("sweep", "Model intruder totals over an epsilon or k grid");
  add_pair(sweep, pair);
  add_scan(sweep, scan);
  sweep->add_option("--epsilons", epsilons, "Comma-separated increasing epsilons")->delimiter(',');
  sweep->add_option("--ks", ks, "Comma-separated increasing k values")->delimiter(',');
  sweep->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  sweep->add_option("--out", out_path, "Curve file")->required();

  std::string tensor;
  std::size_t k0 = 10;
  std::size_t kt = 10;
  auto* grid = app.add_subcommand("grid", "Absolute cosine grid between top base and tuned singular vectors");
  add_pair(grid, pair);
  grid->add_option("--tensor", tensor, "Tensor name")->required();
  grid->add_option("--k0", k0, "Base vectors (rows)")->capture_default_str();
  grid->add_option("--kt", kt, "Tuned vectors (columns)")->capture_default_str();
  std::string grid_format = "csv";
  grid->add_option("--format", grid_format, "csv | json")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  grid->add_option("--out", out_path, "Grid file")->required();

  std::optional<double> lambda;
  std::vector<double> lambdas;
  std::string plan_path;
  auto* scale = app.add_subcommand("scale", "Rescale the top intruder direction of each tensor");
  add_pair(scale, pair);
  add_scan(scale, scan);
  scale->add_option("--lambda", lambda, "Scale factor for the selected directions");
  scale->add_option("--lambdas", lambdas, "Comma-separated scale factors, one output per value")->delimiter(',');
  scale->add_option("--plan", plan_path, "Scaling plan JSON to apply instead of scanning");
  scale->add_option("--out", out_path, "Output checkpoint prefix")->required();

  std::string base_path;
  std::uint64_t task_seed = toy::presets::kTaskSeed;
  auto* train = app.add_subcommand("train", "Fine-tune the toy body on the default synthetic task");
  add_trainer(train, trainer);
  train->add_option("--base", base_path, "Base checkpoint prefix (default: built-in synthetic base)");
  train->add_option("--task-seed", task_seed, "Seed of the training task")->capture_default_str();
  train->add_option("--out", out_path, "Run directory")->required();

  std::size_t task_count = 3;
  auto* continual = app.add_subcommand("continual", "Sequential fine-tuning with merge-and-reinitialize between tasks");
  add_trainer(continual, trainer);
  add_scan(continual, scan);
  continual->add_option("--tasks", task_count, "Number of sequential tasks")->capture_default_str();
  continual->add_option("--out", out_path, "Run directory")->required();

  std::string in_path;
  auto* report = app.add_subcommand("report", "Validate a JSON intruder report and re-export it");
  report->add_option("--in", in_path, "JSON report written by analyze")->required();
  report->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  report->add_option("--out", out_path, "Output file")->required();

  std::vector<std::string> snapshot_paths;
  std::vector<std::size_t> ranks{0};
  auto* trace = app.add_subcommand("trace", "Follow tuned singular directions across training snapshots");
  trace->add_option("--base", base_path, "Base checkpoint prefix")->required();
  trace->add_option("--snapshots", snapshot_paths, "Snapshot prefixes in step order")->required()->delimiter(',');
  trace->add_option("--tensor", tensor, "Tensor name")->required();
  trace->add_option("--ranks", ranks, "Tuned ranks to follow")->delimiter(',')->capture_default_str();
  trace->add_option("--out", out_path, "Trace JSON file")->required();

  std::size_t fixture_size = 3;
  double fixture_lambda = 5.0;
  std::size_t injected = 2;
  std::size_t plain = 1;
  auto* fixture = app.add_subcommand("fixture", "Write identity base and rank-one injected tuned checkpoints");
  fixture->add_option("--size", fixture_size, "Matrix size n")->capture_default_str();
  fixture->add_option("--lambda", fixture_lambda, "Injection strength")->capture_default_str();
  fixture->add_option("--injected", injected, "Tensors with an injection")->capture_default_str();
  fixture->add_option("--plain", plain, "Tensors left equal to the base")->capture_default_str();
  fixture->add_option("--out", out_path, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const CLI::App* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return kUsageError;
  }

  try {
    if (*analyze) return cmd_analyze(pair, scan, format, out_path, out);
    if (*sweep) return cmd_sweep(pair, scan, epsilons, ks, format, out_path, out);
    if (*grid) return cmd_grid(pair, tensor, k0, kt, grid_format, out_path, out);
    if (*scale) return cmd_scale(pair, scan, lambda, lambdas, plan_path, out_path, out);
    if (*train) return cmd_train(trainer, base_path, task_seed, out_path, out);
    if (*continual) return cmd_continual(trainer, task_count, scan, out_path, out);
    if (*report) return cmd_report(in_path, format, out_path, out);
    if (*trace) return cmd_trace(base_path, snapshot_paths, tensor, ranks, out_path, out);
    if (*fixture) return cmd_fixture(fixture_size, fixture_lambda, injected, plain, out_path, out);
  } catch (const EmptyResult& e) {
    err << "error: " << e.what() << '\n';
    return kEmptyResult;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kDiverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kUsageError;
}

}  // namespace intruder::cli
