#include "satgan/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "satgan/config.hpp"
#include "satgan/csv.hpp"
#include "satgan/file_util.hpp"
#include "satgan/io.hpp"
#include "satgan/training.hpp"

namespace satgan {
namespace {

namespace fs = std::filesystem;

struct Loaded {
  RunConfig config;
  std::string text;  // echoed verbatim into run directories
};

Loaded load_config(const std::string& path) {
  if (path.empty()) return {};
  Loaded l;
  l.config = load_run_config(path);
  l.text = read_file(path);
  return l;
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path.string(), text); }

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

// ---- simulate / degrade / blank ------------------------------------------

struct SimulateArgs {
  std::string config, out;
  int count = 0;
  std::uint64_t seed = 0;
};

void simulate(const SimulateArgs& a, std::ostream& out) {
  const Loaded cfg = load_config(a.config);
  const Dataset data = simulate_dataset(cfg.config.scene, a.count, a.seed, Split::train);
  write_dataset_dir(a.out, data);
  out << "simulate: wrote " << data.size() << " images to " << a.out << '\n';
}

struct DegradeArgs {
  std::string config, in, out;
  std::uint64_t seed = 0;
};

void degrade(const DegradeArgs& a, std::ostream& out) {
  const Loaded cfg = load_config(a.config);
  const DatasetDir src = read_dataset_dir(a.in, Split::train);
  const Dataset noisy = degrade_dataset(src.data, cfg.config.sensor, a.seed);
  write_derived_dir(a.out, a.in, src.stems, noisy.images);
  out << "degrade: wrote " << noisy.size() << " images to " << a.out << '\n';
}

struct BlankArgs {
  std::string in, out;
  std::optional<double> mean;
};

void blank(const BlankArgs& a, std::ostream& out) {
  const DatasetDir src = read_dataset_dir(a.in, Split::train);
  const real mean = a.mean ? static_cast<real>(*a.mean) : mean_intensity(src.data.images);
  std::vector<Tensor> blanks;
  for (std::size_t i = 0; i < src.data.size(); ++i) {
    blanks.push_back(make_blank_context(src.data.images[i], src.data.labels[i], mean));
  }
  write_derived_dir(a.out, a.in, src.stems, blanks);
  out << "blank: wrote " << blanks.size() << " contexts (mean " << format_number(mean) << ") to " << a.out << '\n';
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string config, out, contexts, targets, validation;
  std::uint64_t seed = 0;
  bool unlabeled_targets = false;
  std::string command_line;
};

std::vector<std::pair<std::string, std::uint64_t>> seed_manifest(std::uint64_t seed, TrainMode mode) {
  std::vector<std::pair<std::string, std::uint64_t>> m{{"seed", seed}};
  std::vector<std::string> streams;
  if (mode == TrainMode::detector) {
    streams = {"task", "detector-batches"};
  } else {
    streams = {"generator", "discriminator", "task", "noise", "gan-batches"};
    if (mode == TrainMode::satgan) streams.push_back("task-pretrain");
  }
  for (const std::string& s : streams) m.emplace_back(s, mix_seed(seed, hash_name(s)));
  return m;
}

void train(const TrainArgs& a, std::ostream& out) {
  Loaded cfg = load_config(a.config);
  RunConfig& rc = cfg.config;
  rc.train.seed = a.seed;
  const TrainMode mode = rc.train.mode;
  if (a.targets.empty()) {
    throw std::invalid_argument(mode == TrainMode::detector ? "--targets (the labeled training set) is required"
                                                            : "--targets is required");
  }
  if (mode == TrainMode::satgan && a.contexts.empty()) throw std::invalid_argument("--contexts is required in satgan mode");
  if (mode != TrainMode::satgan && !a.contexts.empty()) {
    throw std::invalid_argument("--contexts is only used in satgan mode");
  }
  if (mode == TrainMode::detector && a.unlabeled_targets) {
    throw std::invalid_argument("detector training needs labeled targets");
  }

  const Dataset targets = read_dataset_dir(a.targets, Split::train, !a.unlabeled_targets).data;
  std::optional<Dataset> validation;
  if (!a.validation.empty()) validation = read_dataset_dir(a.validation, Split::validation).data;
  const Dataset* val = validation ? &*validation : nullptr;

  RunDirectory run(a.out);
  run.write_config(cfg.text);
  run.write_seeds(seed_manifest(a.seed, mode));
  write_text(fs::path(a.out) / "command.txt", a.command_line + "\n");

  std::vector<EpochReport> reports;
  auto log_epoch = [&](const EpochReport& r) {
    reports.push_back(r);
    run.write_epochs(reports);
    out << "epoch " << r.epoch << " L_G=" << format_number(r.l_g) << " L_D=" << format_number(r.l_d)
        << " L_T=" << format_number(r.l_t) << " f1_star=" << format_number(r.f1_star) << '\n';
  };
  const int interval = rc.train.checkpoint_interval;
  auto due = [&](int epoch) { return interval > 0 && epoch % interval == 0; };

  if (mode == TrainMode::detector) {
    TaskNetwork task(rc.task, mix_seed(a.seed, hash_name("task")));
    train_detector(task, rc.train, targets, val, [&](const EpochReport& r) {
      log_epoch(r);
      if (due(r.epoch)) save_checkpoint(run.checkpoint_path("task", r.epoch), task);
    });
    save_checkpoint(run.checkpoint_path("task", -1), task);
  } else {
    const Dataset contexts =
        mode == TrainMode::satgan ? read_dataset_dir(a.contexts, Split::train).data : Dataset{};
    GanTrainer trainer(rc.train, rc.generator, rc.discriminator, rc.task);
    auto save_all = [&](int epoch) {
      save_checkpoint(run.checkpoint_path("generator", epoch), trainer.generator());
      save_checkpoint(run.checkpoint_path("discriminator", epoch), trainer.discriminator());
      if (mode == TrainMode::satgan) save_checkpoint(run.checkpoint_path("task", epoch), trainer.task());
    };
    train_gan(trainer, mode == TrainMode::satgan ? contexts : targets, targets, val, [&](const EpochReport& r) {
      log_epoch(r);
      if (due(r.epoch)) save_all(r.epoch);
    });
    save_all(-1);
  }
  run.write_epochs(reports);
  out << "train: " << to_string(mode) << " run written to " << a.out << '\n';
}

// ---- generate -------------------------------------------------------------

struct GenerateArgs {
  std::string config, checkpoint, in, out, mode;
  std::uint64_t seed = 0;
};

void generate(const GenerateArgs& a, std::ostream& out) {
  const Loaded cfg = load_config(a.config);
  TrainMode mode = a.mode.empty() ? cfg.config.train.mode : parse_train_mode(a.mode);
  if (a.mode.empty() && mode == TrainMode::detector) mode = TrainMode::satgan;
  if (mode == TrainMode::detector) throw std::invalid_argument("--mode must be satgan or pix2pix");
  const CheckpointHeader header = read_checkpoint_header(a.checkpoint);
  if (header.kind != "generator") {
    throw std::invalid_argument(a.checkpoint + " holds a " + header.kind + ", not a generator");
  }
  Generator gen(generator_config_from_json(header.config_json));
  load_checkpoint(a.checkpoint, gen);
  const DatasetDir src = read_dataset_dir(a.in, Split::train);
  const Dataset fakes = generate_dataset(gen, src.data, mode, cfg.config.train.noise, a.seed);
  write_derived_dir(a.out, a.in, src.stems, fakes.images);
  out << "generate: wrote " << fakes.size() << " images to " << a.out << '\n';
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
  std::string config, data, out, checkpoint, detections;
  std::optional<double> iou;
};

void evaluate(const EvaluateArgs& a, std::ostream& out) {
  const Loaded cfg = load_config(a.config);
  if (a.checkpoint.empty() == a.detections.empty()) {
    throw std::invalid_argument("give exactly one of --checkpoint and --detections");
  }
  const real iou = a.iou ? static_cast<real>(*a.iou) : cfg.config.evaluation.iou_threshold;
  if (!(iou > 0 && iou <= 1)) throw std::invalid_argument("--iou must lie in (0,1]");
  const DatasetDir src = read_dataset_dir(a.data, Split::validation);

  std::vector<PRPoint> curve;
  DetectionSet detections;
  if (!a.checkpoint.empty()) {
    const CheckpointHeader header = read_checkpoint_header(a.checkpoint);
    if (header.kind != "task") throw std::invalid_argument(a.checkpoint + " holds a " + header.kind + ", not a task network");
    TaskNetwork task(task_config_from_json(header.config_json));
    load_checkpoint(a.checkpoint, task);
    DetectorEvaluation ev = evaluate_detector(task, src.data, iou);
    curve = std::move(ev.curve);
    detections = std::move(ev.detections);
  } else {
    for (const std::string& stem : src.stems) {
      const fs::path p = fs::path(a.detections) / (stem + ".json");
      try {
        detections.push_back(detections_from_json(read_file(p.string())));
      } catch (const std::exception& e) {
        throw IoError(p.string() + ": " + e.what());
      }
    }
    curve = pr_curve(detections, src.data.labels, iou, default_thresholds());
  }
  const PRPoint best = best_point(curve);
  const SceneSpec& scene = cfg.config.scene;
  const auto bins = recall_vs_magnitude(object_outcomes(detections, src.data.labels, iou, best.threshold),
                                        magnitude_bin_edges(scene.object_magnitude_bright, scene.object_magnitude_dim,
                                                            cfg.config.evaluation.magnitude_bin_width));
  fs::create_directories(a.out);
  std::ostringstream pr, mag;
  write_pr_curve_csv(pr, curve);
  write_recall_by_magnitude_csv(mag, bins);
  write_text(fs::path(a.out) / "pr_curve.csv", pr.str());
  write_text(fs::path(a.out) / "recall_by_magnitude.csv", mag.str());
  out << "evaluate: threshold=" << format_number(best.threshold) << " precision=" << format_number(best.precision)
      << " recall=" << format_number(best.recall) << " f1_star=" << format_number(f1_star(curve)) << '\n';
}

// ---- report ---------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out;
};

std::string run_name(const std::string& dir) {
  fs::path p = fs::path(dir).lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  return p.filename().string();
}

void report(const ReportArgs& a, std::ostream& out) {
  std::ostringstream csv;
  write_csv_row(csv, {"run", "epoch", "precision", "recall", "f1_star"});
  const std::vector<std::string> expected{"epoch", "L_G", "L_D", "L_T", "precision", "recall", "f1_star"};
  std::size_t rows = 0;
  for (const std::string& dir : a.runs) {
    const std::string path = (fs::path(dir) / "epochs.csv").string();
    if (!fs::exists(path)) throw IoError(path + ": no such file");
    const auto table = read_csv(path);
    if (table.empty() || table.front() != expected) throw IoError(path + ": unexpected header");
    for (std::size_t r = 1; r < table.size(); ++r) {
      const auto& row = table[r];
      if (row.size() != expected.size()) throw IoError(path + ": row " + std::to_string(r) + " has the wrong width");
      write_csv_row(csv, {run_name(dir), row[0], row[4], row[5], row[6]});
      ++rows;
    }
  }
  if (const fs::path parent = fs::path(a.out).parent_path(); !parent.empty()) fs::create_directories(parent);
  write_text(a.out, csv.str());
  out << "report: " << rows << " rows from " << a.runs.size() << " runs written to " << a.out << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned sensor-noise augmentation for point-source imagery", "satgan"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  std::function<void()> action;
  std::string command_line;
  for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Render noiseless contexts with annotation sidecars");
  s->add_option("--config", sim.config, "Configuration file")->check(CLI::ExistingFile);
  s->add_option("--out", sim.out, "Output directory")->required();
  s->add_option("--count", sim.count, "Number of images")->required()->check(CLI::NonNegativeNumber);
  s->add_option("--seed", sim.seed, "Random seed");
  s->callback([&] { action = [&] { simulate(sim, out); }; });

  DegradeArgs deg;
  auto* d = app.add_subcommand("degrade", "Apply the configured sensor noise model to a dataset");
  d->add_option("--config", deg.config, "Configuration file")->check(CLI::ExistingFile);
  d->add_option("--in", deg.in, "Input dataset directory")->required();
  d->add_option("--out", deg.out, "Output directory")->required();
  d->add_option("--seed", deg.seed, "Random seed");
  d->callback([&] { action = [&] { degrade(deg, out); }; });

  BlankArgs blk;
  auto* b = app.add_subcommand("blank", "Build blank contexts (object patches on a flat frame) from a dataset");
  b->add_option("--in", blk.in, "Input dataset directory")->required();
  b->add_option("--out", blk.out, "Output directory")->required();
  b->add_option("--mean", blk.mean, "Fill intensity (default: dataset mean)")->check(CLI::Range(0.0, 1.0));
  b->callback([&] { action = [&] { blank(blk, out); }; });

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a satgan, pix2pix or detector run (mode from [train] mode)");
  t->add_option("--config", tr.config, "Configuration file")->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "Run directory")->required();
  t->add_option("--contexts", tr.contexts, "Noiseless context dataset (satgan)");
  t->add_option("--targets", tr.targets, "Target-domain dataset (detector: the training set)");
  t->add_option("--validation", tr.validation, "Labeled validation dataset");
  t->add_flag("--unlabeled-targets", tr.unlabeled_targets, "Ignore target annotations");
  t->add_option("--seed", tr.seed, "Random seed");
  t->callback([&] {
    tr.command_line = command_line;
    action = [&] { train(tr, out); };
  });

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write x_hat = clip(c + G(z)) for every context");
  g->add_option("--config", gen.config, "Configuration file (noise settings)")->check(CLI::ExistingFile);
  g->add_option("--checkpoint", gen.checkpoint, "Generator checkpoint")->required()->check(CLI::ExistingFile);
  g->add_option("--in", gen.in, "Context dataset directory")->required();
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--mode", gen.mode, "satgan or pix2pix (default: [train] mode)")
      ->check(CLI::IsMember({"satgan", "pix2pix"}));
  g->add_option("--seed", gen.seed, "Random seed");
  g->callback([&] { action = [&] { generate(gen, out); }; });

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a detector and write pr_curve.csv and recall_by_magnitude.csv");
  e->add_option("--config", ev.config, "Configuration file")->check(CLI::ExistingFile);
  e->add_option("--data", ev.data, "Labeled dataset directory")->required();
  e->add_option("--out", ev.out, "Output directory")->required();
  e->add_option("--checkpoint", ev.checkpoint, "Task network checkpoint")->check(CLI::ExistingFile);
  e->add_option("--detections", ev.detections, "Directory of <stem>.json detection files")
      ->check(CLI::ExistingDirectory);
  e->add_option("--iou", ev.iou, "IoU threshold (default: [evaluation] iou_threshold)");
  e->callback([&] { action = [&] { evaluate(ev, out); }; });

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Collect per-epoch validation metrics of several runs");
  r->add_option("--runs", rep.runs, "Run directories")->required()->check(CLI::ExistingDirectory);
  r->add_option("--out", rep.out, "Output CSV (f1_by_epoch.csv)")->required();
  r->callback([&] { action = [&] { report(rep, out); }; });

  std::string dump_config;
  auto* c = app.add_subcommand("config", "Print the effective configuration with every default");
  c->add_option("--config", dump_config, "Configuration file")->check(CLI::ExistingFile);
  c->callback([&] { action = [&] { out << format_run_config(load_config(dump_config).config); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& h) {
    return app.exit(h, out, err);
  } catch (const CLI::CallForAllHelp& h) {
    return app.exit(h, out, err);
  } catch (const CLI::ParseError& pe) {
    err << "satgan: " << one_line(pe.what()) << '\n';
    return 2;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    action();
  } catch (const std::exception& ex) {
    err << "satgan " << name << ": " << one_line(ex.what()) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace satgan
