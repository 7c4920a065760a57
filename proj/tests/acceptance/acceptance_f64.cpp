// Criteria that need exact arithmetic, built against double-precision tensors.
#include <algorithm>
#include <cmath>
#include <cstring>

#include "../test_util.hpp"
#include "satgan/losses.hpp"
#include "satgan/networks.hpp"
#include "satgan/ops.hpp"
#include "satgan/training.hpp"
#include "verdict.hpp"

using namespace satgan;
using namespace satgan::acceptance;
using satgan::testing::check_gradients;
using satgan::testing::GradCheck;

static_assert(sizeof(real) == sizeof(double));

namespace {

constexpr int kSamples = 30;

struct Setup {
  TrainConfig train;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TaskConfig task;
  Dataset contexts, targets;
};

Setup setup(TrainMode mode) {
  Setup s;
  s.train.mode = mode;
  s.train.image_size = 32;
  s.train.batch_size = 2;
  s.train.seed = 21;
  if (mode == TrainMode::pix2pix) s.train.weights.gamma = 0;
  s.generator.base_channels = 8;
  s.generator.max_channels = 32;
  s.generator.depth = 3;
  s.generator.attention_after_layer = 2;
  s.discriminator.conditional = mode == TrainMode::pix2pix;
  s.discriminator.layer_channels = {8, 16};
  s.task.image_size = 32;
  s.task.grid_size = 4;
  s.task.channels = {8, 16, 16};
  SceneSpec spec;
  spec.height = spec.width = 32;
  SensorNoiseModel sensor;
  sensor.bias_level = 0.04;
  sensor.read_noise_sigma = 0.025;
  s.contexts = simulate_dataset(spec, 8, 31, Split::train);
  s.targets = degrade_dataset(simulate_dataset(spec, 8, 32, Split::train), sensor, 33);
  return s;
}

std::string describe(const char* name, const GradCheck& g) {
  return std::string(name) + " " + std::to_string(g.checked) + " params max rel " + sci(g.max_relative_error);
}

Verdict gradient_suite() {
  Setup s = setup(TrainMode::satgan);
  GanTrainer tr(s.train, s.generator, s.discriminator, s.task);
  // Open the attention gate so its parameters carry gradient.
  Tensor gamma = tr.generator().parameters().at("attn.gamma");
  gamma.mutable_data()[0] = 0.5;
  GanBatchSampler sampler(s.train, s.contexts, s.targets);
  const GanBatch b = sampler.next();
  const Tensor z = tr.sample_noise(b.context);
  const Tensor x_hat = tr.fake(b.context, z);
  std::vector<real> frozen;
  GridTargets targets;
  {
    NoGradScope no_grad;
    const Tensor pred = tr.task().forward(x_hat);
    targets = encode_targets(b.context_labels, pred.dim(1));
    frozen = confidence_targets(pred, targets);
  }
  const auto& gp = tr.generator().parameters().tensors();
  const auto& dp = tr.discriminator().parameters().tensors();
  const auto& tp = tr.task().parameters().tensors();
  const std::vector<std::pair<const char*, GradCheck>> checks{
      {"generator_loss",
       check_gradients([&] { return tr.generator_objective(b, z).l_g; }, gp, kSamples, 1, 1e-5, 1e-6)},
      {"discriminator_loss",
       check_gradients([&] { return tr.discriminator_objective(b, x_hat); }, dp, kSamples, 2, 1e-5, 1e-6)},
      {"yolo_task_loss",
       check_gradients([&] { return yolo_task_loss(tr.task().forward(x_hat), targets, s.train.yolo, frozen); }, tp,
                       kSamples, 3, 1e-5, 1e-6)},
      {"composite step",
       check_gradients([&] { return tr.generator_objective(b, z, frozen).total; }, gp, kSamples, 4, 1e-5, 1e-6)},
  };
  Verdict v{true, ""};
  for (const auto& [name, g] : checks) {
    v.pass = v.pass && g.checked >= 20 && g.max_relative_error < 1e-2;
    v.detail += (v.detail.empty() ? "" : "; ") + describe(name, g);
  }
  return v;
}

double clamped_log(double p) { return std::log(std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp)); }
double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// The two-player objective written out with plain loops: z = c + w, the
// discriminator sees (sample, context), no task term.
Verdict pix2pix_degeneration() {
  Setup s = setup(TrainMode::pix2pix);
  GanTrainer tr(s.train, s.generator, s.discriminator, s.task);
  GanBatchSampler sampler(s.train, s.contexts, s.targets);
  double worst = 0.0;
  bool task_idle = true;
  constexpr int kSteps = 5;
  for (int step = 0; step < kSteps; ++step) {
    const GanBatch b = sampler.next();
    const Tensor w = tr.sample_noise(b.context);
    Generator g0(s.generator);
    Discriminator d0(s.discriminator), d1(s.discriminator);
    g0.parameters().copy_from(tr.generator().parameters());
    d0.parameters().copy_from(tr.discriminator().parameters());
    const StepMetrics m = tr.step(b, w);
    d1.parameters().copy_from(tr.discriminator().parameters());

    NoGradScope no_grad;
    const auto c = b.context.data(), x = b.target.data(), wv = w.data();
    Tensor z(b.context.shape());
    for (std::size_t i = 0; i < z.numel(); ++i) z.mutable_data()[i] = c[i] + wv[i];
    const Tensor n = g0.forward(z);
    Tensor fake(b.context.shape());
    for (std::size_t i = 0; i < fake.numel(); ++i) fake.mutable_data()[i] = std::clamp(c[i] + n.data()[i], 0.0, 1.0);

    const Tensor real_logits = d0.forward(b.target, b.context), fake_logits = d0.forward(fake, b.context);
    double l_d = 0;
    for (real v : real_logits.data()) l_d -= clamped_log(sigmoid(v)) / static_cast<double>(real_logits.numel());
    for (real v : fake_logits.data()) l_d -= clamped_log(1 - sigmoid(v)) / static_cast<double>(fake_logits.numel());

    const Tensor fooled = d1.forward(fake, b.context);
    double l1 = 0, adv = 0;
    for (std::size_t i = 0; i < fake.numel(); ++i) l1 += std::fabs(fake.data()[i] - x[i]) / static_cast<double>(fake.numel());
    for (real v : fooled.data()) adv -= clamped_log(sigmoid(v)) / static_cast<double>(fooled.numel());
    const double l_g = s.train.weights.alpha * l1 + adv;

    worst = std::max({worst, std::fabs(m.l_d - l_d), std::fabs(m.l_g - l_g)});
    task_idle = task_idle && m.l_t == 0.0;
  }
  return {worst < 1e-6 && task_idle, std::to_string(kSteps) + " steps, max |loss - reference| " + sci(worst) +
                                         (task_idle ? ", task network idle" : ", task network was updated")};
}

}  // namespace

int main(int argc, char** argv) {
  const bool only2 = argc > 1 && std::strcmp(argv[1], "2") == 0;
  const bool only4 = argc > 1 && std::strcmp(argv[1], "4") == 0;
  bool ok = true;
  if (!only4) ok &= run_criterion(2, "gradient suite", gradient_suite);
  if (!only2) ok &= run_criterion(4, "pix2pix degeneration", pix2pix_degeneration);
  return ok ? 0 : 1;
}
