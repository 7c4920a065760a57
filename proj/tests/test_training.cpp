#include <cmath>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "satgan/file_util.hpp"
#include "satgan/ops.hpp"
#include "satgan/training.hpp"

using namespace satgan;

namespace {

SceneSpec small_scene() {
  SceneSpec s;
  s.height = s.width = 32;
  return s;
}

TaskConfig small_task() {
  TaskConfig t;
  t.image_size = 32;
  t.grid_size = 4;
  t.channels = {8, 16, 16};
  return t;
}

GeneratorConfig small_generator() {
  GeneratorConfig g;
  g.base_channels = 8;
  g.max_channels = 32;
  g.depth = 3;
  g.attention_after_layer = 2;
  return g;
}

TrainConfig small_train(TrainMode mode) {
  TrainConfig c;
  c.mode = mode;
  c.image_size = 32;
  c.batch_size = 2;
  c.steps_per_epoch = 5;
  c.epochs = 2;
  c.task_pretrain_steps = 3;
  c.seed = 11;
  if (mode == TrainMode::pix2pix) c.weights.gamma = 0.0f;
  return c;
}

DiscriminatorConfig disc(bool conditional) {
  DiscriminatorConfig d;
  d.conditional = conditional;
  d.layer_channels = {8, 16};
  return d;
}

SensorNoiseModel toy_sensor() {
  SensorNoiseModel m;
  m.bias_level = 0.1f;
  m.read_noise_sigma = 0.03f;
  return m;
}

struct Data {
  Dataset contexts, targets, validation;
};

Data small_data(std::uint64_t seed = 1) {
  const SceneSpec spec = small_scene();
  Data d;
  d.contexts = simulate_dataset(spec, 16, seed, Split::train);
  d.targets = degrade_dataset(simulate_dataset(spec, 16, seed + 1, Split::train), toy_sensor(), seed + 2);
  d.validation = degrade_dataset(simulate_dataset(spec, 8, seed + 3, Split::validation), toy_sensor(), seed + 4);
  return d;
}

std::vector<std::vector<real>> snapshot(const Model& m) {
  std::vector<std::vector<real>> out;
  for (const Tensor& t : m.parameters().tensors()) out.emplace_back(t.data().begin(), t.data().end());
  return out;
}

bool bit_equal(const std::vector<std::vector<real>>& a, const std::vector<std::vector<real>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size() || std::memcmp(a[i].data(), b[i].data(), a[i].size() * sizeof(real)) != 0) return false;
  }
  return true;
}

std::string csv_of(const std::vector<EpochReport>& r) {
  std::ostringstream out;
  write_epoch_csv(out, r);
  return out.str();
}

}  // namespace

TEST_CASE("satgan smoke: ten steps with finite losses") {
  const Data d = small_data();
  TrainConfig cfg = small_train(TrainMode::satgan);
  GanTrainer tr(cfg, small_generator(), disc(false), small_task());
  GanBatchSampler sampler(cfg, d.contexts, d.targets);
  for (int i = 0; i < 10; ++i) {
    const StepMetrics m = tr.step(sampler.next());
    CHECK(std::isfinite(m.l_g));
    CHECK(std::isfinite(m.l_d));
    CHECK(std::isfinite(m.l_t));
    CHECK(m.l_d > 0.0);
  }
}

TEST_CASE("pix2pix smoke with a conditional discriminator") {
  const Data d = small_data();
  TrainConfig cfg = small_train(TrainMode::pix2pix);
  GanTrainer tr(cfg, small_generator(), disc(true), small_task());
  CHECK(tr.discriminator().config().in_channels() == 2);
  CHECK(tr.discriminator().parameters().at("layer1.kernel").dim(1) == 2);
  GanBatchSampler sampler(cfg, d.contexts, d.targets);
  const auto task_before = snapshot(tr.task());
  for (int i = 0; i < 10; ++i) {
    const GanBatch b = sampler.next();
    // Paired: each blank context carries its target's labels.
    REQUIRE(b.target_labels.has_value());
    CHECK(b.context_labels.size() == b.target_labels->size());
    const StepMetrics m = tr.step(b);
    CHECK(std::isfinite(m.l_g));
    CHECK(std::isfinite(m.l_d));
    CHECK(m.l_t == 0.0);
  }
  CHECK(bit_equal(task_before, snapshot(tr.task())));
}

TEST_CASE("mode and discriminator flag must agree") {
  CHECK_THROWS_AS(GanTrainer(small_train(TrainMode::pix2pix), small_generator(), disc(false), small_task()),
                  std::invalid_argument);
  CHECK_THROWS_AS(GanTrainer(small_train(TrainMode::satgan), small_generator(), disc(true), small_task()),
                  std::invalid_argument);
  CHECK_THROWS_AS(GanTrainer(small_train(TrainMode::detector), small_generator(), disc(false), small_task()),
                  std::invalid_argument);
  CHECK_THROWS_AS(GanTrainer(small_train(TrainMode::satgan), small_generator(), disc(false), TaskConfig{}),
                  std::invalid_argument);
}

TEST_CASE("each sub-update touches only its own network") {
  const Data d = small_data();
  const TrainConfig cfg = small_train(TrainMode::satgan);
  GanTrainer tr(cfg, small_generator(), disc(false), small_task());
  GanBatchSampler sampler(cfg, d.contexts, d.targets);
  const GanBatch b = sampler.next();
  const Tensor z = tr.sample_noise(b.context);

  auto g0 = snapshot(tr.generator()), d0 = snapshot(tr.discriminator()), t0 = snapshot(tr.task());
  tr.discriminator_update(b, z);
  CHECK(bit_equal(g0, snapshot(tr.generator())));
  CHECK(bit_equal(t0, snapshot(tr.task())));
  CHECK_FALSE(bit_equal(d0, snapshot(tr.discriminator())));

  d0 = snapshot(tr.discriminator());
  Tensor x_hat;
  tr.generator_update(b, z, &x_hat);
  CHECK(bit_equal(d0, snapshot(tr.discriminator())));
  CHECK(bit_equal(t0, snapshot(tr.task())));
  CHECK_FALSE(bit_equal(g0, snapshot(tr.generator())));
  CHECK_FALSE(x_hat.requires_grad());

  g0 = snapshot(tr.generator());
  tr.task_update(b, x_hat);
  CHECK(bit_equal(g0, snapshot(tr.generator())));
  CHECK(bit_equal(d0, snapshot(tr.discriminator())));
  CHECK_FALSE(bit_equal(t0, snapshot(tr.task())));

  // Freezing is scoped to the sub-update.
  for (const Model* m : std::initializer_list<const Model*>{&tr.generator(), &tr.discriminator(), &tr.task()})
    for (const Tensor& t : m->parameters().tensors()) CHECK(t.requires_grad());
}

TEST_CASE("the task loss on fakes reaches every generator parameter") {
  const Data d = small_data();
  GeneratorConfig gc = small_generator();
  Generator g(gc, 3);
  Tensor gamma = g.parameters().at("attn.gamma");
  gamma.mutable_data()[0] = 0.3f;  // open the gate so attention weights are reachable
  TaskNetwork t(small_task(), 4);
  t.parameters().set_requires_grad(false);
  const Tensor c = stack_images(d.contexts, {0, 1});
  Rng rng(5);
  const Tensor z = rng.normal_tensor(c.shape(), 0.0f, 1.0f);
  g.parameters().zero_grad();
  {
    Tape tape;
    backward(yolo_task_loss(t.forward(compose_fake(c, g.forward(z))), gather_labels(d.contexts, {0, 1})), tape);
  }
  for (std::size_t i = 0; i < g.parameters().size(); ++i) {
    const Tensor& p = g.parameters().tensors()[i];
    INFO(g.parameters().names()[i]);
    REQUIRE(p.has_grad());
    double norm = 0;
    for (real v : p.grad()) norm += std::fabs(v);
    CHECK(norm > 0.0);
  }
}

TEST_CASE("training runs are bit-reproducible") {
  const Data d = small_data();
  auto run_gan = [&] {
    TrainConfig cfg = small_train(TrainMode::satgan);
    GanTrainer tr(cfg, small_generator(), disc(false), small_task());
    return csv_of(train_gan(tr, d.contexts, d.targets, &d.validation));
  };
  const std::string first = run_gan();
  CHECK(first == run_gan());
  CHECK(first.rfind("epoch,L_G,L_D,L_T,precision,recall,f1_star\n", 0) == 0);

  auto run_detector = [&](std::uint64_t seed) {
    TrainConfig cfg = small_train(TrainMode::detector);
    cfg.seed = seed;
    TaskNetwork t(small_task(), 9);
    return csv_of(train_detector(t, cfg, d.targets, &d.validation));
  };
  CHECK(run_detector(1) == run_detector(1));
  CHECK(run_detector(1) != run_detector(2));
}

TEST_CASE("epoch reports") {
  const Data d = small_data();
  TrainConfig cfg = small_train(TrainMode::detector);
  cfg.epochs = 3;
  TaskNetwork t(small_task(), 2);
  int calls = 0;
  const auto reports = train_detector(t, cfg, d.targets, &d.validation, [&](const EpochReport& r) { CHECK(r.epoch == ++calls); });
  REQUIRE(reports.size() == 3);
  CHECK(calls == 3);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    CHECK(reports[i].epoch == static_cast<int>(i) + 1);
    CHECK(reports[i].f1_star >= 0.0);
    CHECK(reports[i].f1_star <= 1.0);
    CHECK(reports[i].l_g == 0.0);
  }
}

TEST_CASE("validation data never trains") {
  const Data d = small_data();
  TrainConfig cfg = small_train(TrainMode::detector);
  TaskNetwork t(small_task(), 2);
  CHECK_THROWS_AS(train_detector(t, cfg, d.validation, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(train_detector(t, cfg, d.targets, &d.targets), std::invalid_argument);
  CHECK_THROWS_AS(train_detector(t, cfg, Dataset{}, nullptr), std::invalid_argument);

  TrainConfig gcfg = small_train(TrainMode::satgan);
  GanTrainer tr(gcfg, small_generator(), disc(false), small_task());
  CHECK_THROWS_AS(train_gan(tr, d.contexts, d.validation, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(train_gan(tr, d.validation, d.targets, nullptr), std::invalid_argument);

  // Scoring leaves parameters and gradients alone.
  t.parameters().zero_grad();
  const auto before = snapshot(t);
  evaluate_detector(t, d.validation, 0.5f);
  CHECK(bit_equal(before, snapshot(t)));
  for (const Tensor& p : t.parameters().tensors()) {
    if (!p.has_grad()) continue;
    for (real g : p.grad()) CHECK(g == 0.0f);
  }
}

TEST_CASE("satgan trains without target labels") {
  Data d = small_data();
  d.targets.labeled = false;
  d.targets.labels.clear();
  TrainConfig cfg = small_train(TrainMode::satgan);
  GanTrainer tr(cfg, small_generator(), disc(false), small_task());
  const auto reports = train_gan(tr, d.contexts, d.targets, &d.validation);
  CHECK(reports.size() == 2);
  for (const EpochReport& r : reports) CHECK(std::isfinite(r.l_t));
  GanBatchSampler sampler(cfg, d.contexts, d.targets);
  CHECK_FALSE(sampler.next().target_labels.has_value());
}

TEST_CASE("detector overfits a single image") {
  const SceneSpec spec = small_scene();
  Dataset one = simulate_dataset(spec, 1, 42, Split::train);
  REQUIRE_FALSE(one.labels[0].empty());
  TaskNetwork t(small_task(), 6);
  const Tensor x = stack_images(one, {0});
  const double initial = yolo_task_loss(t.forward(x), one.labels).item();
  TrainConfig cfg = small_train(TrainMode::detector);
  cfg.batch_size = 1;
  cfg.epochs = 1;
  cfg.steps_per_epoch = 300;
  train_detector(t, cfg, one, nullptr);
  const double final_loss = yolo_task_loss(t.forward(x), one.labels).item();
  MESSAGE("f_T " << initial << " -> " << final_loss);
  CHECK(final_loss < 0.1 * initial);
}

TEST_CASE("zero-noise target drives the generated noise to zero") {
  const SceneSpec spec = small_scene();
  const Dataset contexts = simulate_dataset(spec, 64, 1, Split::train);
  const Dataset targets = simulate_dataset(spec, 64, 2, Split::train);  // noiseless sensor
  TrainConfig cfg = small_train(TrainMode::satgan);
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.steps_per_epoch = 500;
  cfg.task_pretrain_steps = 50;
  GanTrainer tr(cfg, small_generator(), disc(false), small_task());
  train_gan(tr, contexts, targets, nullptr);
  const Dataset probe = simulate_dataset(spec, 16, 99, Split::validation);
  const Tensor c = stack_images(probe, {0, 1, 2, 3, 4, 5, 6, 7});
  Rng rng(3);
  const Tensor z = rng.normal_tensor(c.shape(), 0.0f, 1.0f);
  NoGradScope no_grad;
  const Tensor n = tr.generator().forward(z);
  double mean_abs = 0;
  for (real v : n.data()) mean_abs += std::fabs(v);
  mean_abs /= static_cast<double>(n.numel());
  MESSAGE("mean |n| = " << mean_abs);
  CHECK(mean_abs < 0.05);
}

TEST_CASE("pix2pix discriminator ends near chance on held-out pairs") {
  const SceneSpec spec = small_scene();
  const Dataset targets = degrade_dataset(simulate_dataset(spec, 64, 5, Split::train), toy_sensor(), 6);
  const Dataset held_out = degrade_dataset(simulate_dataset(spec, 32, 7, Split::validation), toy_sensor(), 8);
  TrainConfig cfg = small_train(TrainMode::pix2pix);
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.steps_per_epoch = 3000;
  GanTrainer tr(cfg, small_generator(), disc(true), small_task());
  train_gan(tr, Dataset{}, targets, nullptr);

  const real mean = mean_intensity(targets.images);
  std::vector<Tensor> blanks;
  for (std::size_t i = 0; i < held_out.size(); ++i) {
    blanks.push_back(make_blank_context(held_out.images[i], held_out.labels[i], mean));
  }
  Dataset blank_set;
  blank_set.images = std::move(blanks);
  std::vector<int> all(held_out.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  const Tensor c = stack_images(blank_set, all);
  const Tensor x = stack_images(held_out, all);
  const Tensor x_hat = tr.fake(c, tr.sample_noise(c));

  NoGradScope no_grad;
  const Tensor real_logits = tr.discriminator().forward(x, c), fake_logits = tr.discriminator().forward(x_hat, c);
  double correct = 0;
  for (real v : real_logits.data()) correct += v > 0;
  for (real v : fake_logits.data()) correct += v < 0;
  const double accuracy = correct / static_cast<double>(real_logits.numel() + fake_logits.numel());
  MESSAGE("held-out discriminator accuracy " << accuracy);
  CHECK(accuracy > 0.35);
  CHECK(accuracy < 0.65);
}

TEST_CASE("generate_dataset keeps labels and is batch-size independent") {
  const Data d = small_data();
  const Generator g(small_generator(), 8);
  const NoiseFieldSpec noise;
  const Dataset a = generate_dataset(g, d.contexts, TrainMode::satgan, noise, 5, 16);
  const Dataset b = generate_dataset(g, d.contexts, TrainMode::satgan, noise, 5, 3);
  REQUIRE(a.size() == d.contexts.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::equal(a.images[i].data().begin(), a.images[i].data().end(), b.images[i].data().begin()));
    REQUIRE(a.labels[i].size() == d.contexts.labels[i].size());
    for (std::size_t k = 0; k < a.labels[i].size(); ++k) {
      CHECK(std::memcmp(&a.labels[i][k], &d.contexts.labels[i][k], sizeof(Annotation)) == 0);
    }
  }
  CHECK_THROWS_AS(generate_dataset(g, d.contexts, TrainMode::detector, noise, 5), std::invalid_argument);
}

TEST_CASE("run directory layout") {
  const auto dir = std::filesystem::temp_directory_path() / "satgan_test_run";
  std::filesystem::remove_all(dir);
  const RunDirectory run(dir.string());
  run.write_config("[train]\nseed = 3\n");
  run.write_seeds({{"train", 3}, {"data", 7}});
  EpochReport r;
  r.epoch = 1;
  r.l_g = 0.5;
  run.write_epochs({r});
  CHECK(read_file((dir / "config.txt").string()) == "[train]\nseed = 3\n");
  CHECK(read_file((dir / "seeds.json").string()).find("\"data\": 7") != std::string::npos);
  CHECK(read_file((dir / "epochs.csv").string()) == "epoch,L_G,L_D,L_T,precision,recall,f1_star\n1,0.5,0,0,0,0,0\n");
  CHECK(run.checkpoint_path("generator", 12) == (dir / "checkpoints" / "generator_epoch0012.ckpt").string());
  CHECK(run.checkpoint_path("task", -1) == (dir / "checkpoints" / "task_final.ckpt").string());
  CHECK(std::filesystem::is_directory(dir / "checkpoints"));
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.epochs = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = TrainConfig{};
  c.task_optimizer.beta1 = 1.0f;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK(parse_train_mode("pix2pix") == TrainMode::pix2pix);
  CHECK(to_string(TrainMode::detector) == "detector");
  CHECK_THROWS_AS(parse_train_mode("cyclegan"), std::invalid_argument);
}
