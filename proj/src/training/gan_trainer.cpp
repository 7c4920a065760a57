#include <chrono>
#include <stdexcept>

#include "satgan/ops.hpp"
#include "satgan/training.hpp"

namespace satgan {

void TrainConfig::validate() const {
  weights.validate();
  noise.validate();
  if (epochs < 1 || batch_size < 1 || steps_per_epoch < 1) {
    throw std::invalid_argument("epochs, batch_size and steps_per_epoch must be >= 1");
  }
  if (image_size < 8) throw std::invalid_argument("image_size must be >= 8");
  if (checkpoint_interval < 0 || task_pretrain_steps < 0) {
    throw std::invalid_argument("checkpoint_interval and task_pretrain_steps must be >= 0");
  }
  if (!(iou_threshold > 0.0f && iou_threshold <= 1.0f)) throw std::invalid_argument("iou_threshold must lie in (0,1]");
  for (const AdamConfig* a : {&generator_optimizer, &discriminator_optimizer, &task_optimizer}) {
    if (!(a->lr > 0.0f) || a->beta1 < 0.0f || a->beta1 >= 1.0f || a->beta2 < 0.0f || a->beta2 >= 1.0f) {
      throw std::invalid_argument("optimizer needs lr > 0 and betas in [0,1)");
    }
  }
}

namespace {

void check_batch(const GanBatch& b) {
  if (!b.context.defined() || !b.target.defined()) throw std::invalid_argument("GAN batch needs contexts and targets");
  if (b.context.shape() != b.target.shape()) {
    throw std::invalid_argument("GAN batch: context " + shape_string(b.context.shape()) + " vs target " +
                                shape_string(b.target.shape()));
  }
  if (b.context_labels.size() != static_cast<std::size_t>(b.context.dim(0))) {
    throw std::invalid_argument("GAN batch: missing context labels");
  }
  if (b.target_labels && b.target_labels->size() != static_cast<std::size_t>(b.target.dim(0))) {
    throw std::invalid_argument("GAN batch: target label count does not match the batch");
  }
}

}  // namespace

GanTrainer::GanTrainer(TrainConfig config, GeneratorConfig generator, DiscriminatorConfig discriminator, TaskConfig task)
    : config_(std::move(config)),
      generator_(std::move(generator), mix_seed(config_.seed, hash_name("generator"))),
      discriminator_(std::move(discriminator), mix_seed(config_.seed, hash_name("discriminator"))),
      task_(std::move(task), mix_seed(config_.seed, hash_name("task"))),
      generator_opt_(generator_.parameters().tensors(), config_.generator_optimizer),
      discriminator_opt_(discriminator_.parameters().tensors(), config_.discriminator_optimizer),
      task_opt_(task_.parameters().tensors(), config_.task_optimizer),
      noise_rng_(mix_seed(config_.seed, hash_name("noise"))) {
  config_.validate();
  if (config_.mode == TrainMode::detector) throw std::invalid_argument("GanTrainer: mode must be satgan or pix2pix");
  const bool conditional = config_.mode == TrainMode::pix2pix;
  if (discriminator_.config().conditional != conditional) {
    throw std::invalid_argument(conditional ? "pix2pix mode needs a conditional discriminator"
                                            : "satgan mode needs an unconditional discriminator");
  }
  if (task_.config().image_size != config_.image_size) {
    throw std::invalid_argument("task network image_size differs from the training image_size");
  }
}

Tensor GanTrainer::sample_noise(const Tensor& context) {
  const bool satgan = config_.mode == TrainMode::satgan;
  return noise_rng_.normal_tensor(context.shape(), satgan ? config_.noise.mu_z : config_.noise.mu_w,
                                  satgan ? config_.noise.sigma_z : config_.noise.sigma_w);
}

Tensor GanTrainer::generator_input(const Tensor& context, const Tensor& noise) const {
  return config_.mode == TrainMode::pix2pix ? add(context, noise) : noise;
}

Tensor GanTrainer::fake(const Tensor& context, const Tensor& noise) const {
  NoGradScope no_grad;
  return compose_fake(context, generator_.forward(generator_input(context, noise)));
}

Tensor GanTrainer::discriminate(const Tensor& image, const Tensor& context) const {
  return config_.mode == TrainMode::pix2pix ? discriminator_.forward(image, context) : discriminator_.forward(image);
}

Tensor GanTrainer::discriminator_objective(const GanBatch& batch, const Tensor& x_hat) const {
  return discriminator_loss(discriminate(batch.target, batch.context), discriminate(x_hat, batch.context));
}

GeneratorObjective GanTrainer::generator_objective(const GanBatch& batch, const Tensor& noise,
                                                   std::span<const real> confidence_override) const {
  GeneratorObjective o;
  o.x_hat = compose_fake(batch.context, generator_.forward(generator_input(batch.context, noise)));
  o.l_g = generator_loss(discriminate(o.x_hat, batch.context), o.x_hat, batch.target, config_.weights);
  o.total = o.l_g;
  const real task_weight = config_.weights.gamma * config_.weights.beta;
  if (config_.mode == TrainMode::satgan && task_weight > 0.0f) {
    const Tensor pred = task_.forward(o.x_hat);
    const GridTargets targets = encode_targets(batch.context_labels, pred.dim(1));
    o.total = add(o.total, affine(yolo_task_loss(pred, targets, config_.yolo, confidence_override), task_weight));
  }
  return o;
}

double GanTrainer::discriminator_update(const GanBatch& batch, const Tensor& noise) {
  check_batch(batch);
  const Tensor x_hat = fake(batch.context, noise);
  FreezeGuard freeze({&generator_, &task_});
  discriminator_opt_.zero_grad();
  double value = 0.0;
  {
    Tape tape;
    const Tensor loss = discriminator_objective(batch, x_hat);
    value = loss.item();
    backward(loss, tape);
  }
  discriminator_opt_.step();
  return value;
}

double GanTrainer::generator_update(const GanBatch& batch, const Tensor& noise, Tensor* fake_out) {
  check_batch(batch);
  FreezeGuard freeze({&discriminator_, &task_});
  generator_opt_.zero_grad();
  double value = 0.0;
  {
    Tape tape;
    const GeneratorObjective o = generator_objective(batch, noise);
    value = o.l_g.item();
    backward(o.total, tape);
    if (fake_out) *fake_out = o.x_hat.detach();
  }
  generator_opt_.step();
  return value;
}

double GanTrainer::task_update(const GanBatch& batch, const Tensor& fake) {
  check_batch(batch);
  FreezeGuard freeze({&generator_, &discriminator_});
  task_opt_.zero_grad();
  double value = 0.0;
  {
    Tape tape;
    const Tensor real_pred = batch.target_labels ? task_.forward(batch.target) : Tensor{};
    const Tensor loss =
        task_loss(real_pred, batch.target_labels, task_.forward(fake), batch.context_labels, config_.weights, config_.yolo);
    value = loss.item();
    backward(loss, tape);
  }
  task_opt_.step();
  return value;
}

double GanTrainer::pretrain_task_step(const Tensor& context, const std::vector<Labels>& labels) {
  FreezeGuard freeze({&generator_, &discriminator_});
  task_opt_.zero_grad();
  double value = 0.0;
  {
    Tape tape;
    const Tensor loss = yolo_task_loss(task_.forward(context), labels, config_.yolo);
    value = loss.item();
    backward(loss, tape);
  }
  task_opt_.step();
  return value;
}

StepMetrics GanTrainer::step(const GanBatch& batch) { return step(batch, sample_noise(batch.context)); }

StepMetrics GanTrainer::step(const GanBatch& batch, const Tensor& noise) {
  StepMetrics m;
  m.l_d = discriminator_update(batch, noise);
  Tensor x_hat;
  m.l_g = generator_update(batch, noise, &x_hat);
  if (config_.mode == TrainMode::satgan) m.l_t = task_update(batch, x_hat);
  return m;
}

GanBatchSampler::GanBatchSampler(const TrainConfig& config, const Dataset& contexts, const Dataset& targets)
    : mode_(config.mode),
      batch_size_(config.batch_size),
      contexts_(contexts),
      targets_(targets),
      rng_(mix_seed(config.seed, hash_name("gan-batches"))) {
  require_training_split(targets, "GAN targets");
  if (mode_ == TrainMode::pix2pix) {
    if (!targets.labeled) throw std::invalid_argument("pix2pix needs labeled targets to build paired blank contexts");
    dataset_mean_ = mean_intensity(targets.images);
  } else {
    require_training_split(contexts, "GAN contexts");
    if (!contexts.labeled) throw std::invalid_argument("SATGAN contexts must carry labels");
    if (contexts.images.front().shape() != targets.images.front().shape()) {
      throw std::invalid_argument("contexts and targets differ in image shape");
    }
  }
}

GanBatch GanBatchSampler::next() {
  auto draw = [&](const Dataset& d) {
    std::vector<int> idx(static_cast<std::size_t>(batch_size_));
    for (int& i : idx) i = rng_.uniform_int(0, static_cast<int>(d.size()) - 1);
    return idx;
  };
  GanBatch b;
  const std::vector<int> t = draw(targets_);
  b.target = stack_images(targets_, t);
  if (targets_.labeled) b.target_labels = gather_labels(targets_, t);
  if (mode_ == TrainMode::pix2pix) {
    std::vector<Tensor> blanks;
    for (int i : t) {
      blanks.push_back(make_blank_context(targets_.images[static_cast<std::size_t>(i)],
                                          targets_.labels[static_cast<std::size_t>(i)], dataset_mean_));
    }
    Dataset tmp;
    tmp.images = std::move(blanks);
    std::vector<int> all(t.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    b.context = stack_images(tmp, all);
    b.context_labels = *b.target_labels;
  } else {
    const std::vector<int> c = draw(contexts_);
    b.context = stack_images(contexts_, c);
    b.context_labels = gather_labels(contexts_, c);
  }
  return b;
}

namespace {

void fill_validation(EpochReport& r, const TaskNetwork& task, const Dataset* validation, real iou_threshold) {
  if (!validation) return;
  const DetectorEvaluation ev = evaluate_detector(task, *validation, iou_threshold);
  r.precision = ev.best.precision;
  r.recall = ev.best.recall;
  r.f1_star = ev.best.f1;
}

void check_validation(const Dataset* validation) {
  if (!validation) return;
  if (validation->split != Split::validation) throw std::invalid_argument("validation data must be tagged as validation");
  if (!validation->labeled) throw std::invalid_argument("validation data must be labeled");
}

}  // namespace

std::vector<EpochReport> train_gan(GanTrainer& trainer, const Dataset& contexts, const Dataset& targets,
                                   const Dataset* validation, const EpochCallback& on_epoch) {
  const TrainConfig& cfg = trainer.config();
  check_validation(validation);
  GanBatchSampler sampler(cfg, contexts, targets);
  if (cfg.mode == TrainMode::satgan) {
    Rng rng(mix_seed(cfg.seed, hash_name("task-pretrain")));
    for (int s = 0; s < cfg.task_pretrain_steps; ++s) {
      std::vector<int> idx(static_cast<std::size_t>(cfg.batch_size));
      for (int& i : idx) i = rng.uniform_int(0, static_cast<int>(contexts.size()) - 1);
      trainer.pretrain_task_step(stack_images(contexts, idx), gather_labels(contexts, idx));
    }
  }
  std::vector<EpochReport> reports;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochReport r;
    r.epoch = epoch;
    for (int s = 0; s < cfg.steps_per_epoch; ++s) {
      const StepMetrics m = trainer.step(sampler.next());
      r.l_g += m.l_g;
      r.l_d += m.l_d;
      r.l_t += m.l_t;
    }
    r.l_g /= cfg.steps_per_epoch;
    r.l_d /= cfg.steps_per_epoch;
    r.l_t /= cfg.steps_per_epoch;
    if (cfg.mode == TrainMode::satgan) fill_validation(r, trainer.task(), validation, cfg.iou_threshold);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    reports.push_back(r);
    if (on_epoch) on_epoch(r);
  }
  return reports;
}

std::vector<EpochReport> train_detector(TaskNetwork& task, const TrainConfig& config, const Dataset& train,
                                        const Dataset* validation, const EpochCallback& on_epoch) {
  config.validate();
  require_training_split(train, "detector training");
  if (!train.labeled) throw std::invalid_argument("detector training data must be labeled");
  check_validation(validation);
  Adam opt(task.parameters().tensors(), config.task_optimizer);
  Rng rng(mix_seed(config.seed, hash_name("detector-batches")));
  std::vector<EpochReport> reports;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochReport r;
    r.epoch = epoch;
    for (int s = 0; s < config.steps_per_epoch; ++s) {
      std::vector<int> idx(static_cast<std::size_t>(config.batch_size));
      for (int& i : idx) i = rng.uniform_int(0, static_cast<int>(train.size()) - 1);
      opt.zero_grad();
      Tape tape;
      const Tensor loss = yolo_task_loss(task.forward(stack_images(train, idx)), gather_labels(train, idx), config.yolo);
      r.l_t += loss.item();
      backward(loss, tape);
      opt.step();
    }
    r.l_t /= config.steps_per_epoch;
    fill_validation(r, task, validation, config.iou_threshold);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    reports.push_back(r);
    if (on_epoch) on_epoch(r);
  }
  return reports;
}

DetectorEvaluation evaluate_detector(const TaskNetwork& task, const Dataset& data, real iou_threshold, int batch_size) {
  if (!data.labeled) throw std::invalid_argument("evaluate_detector: dataset must be labeled");
  if (data.images.empty()) throw std::invalid_argument("evaluate_detector: empty dataset");
  data.validate();
  NoGradScope no_grad;
  DetectorEvaluation ev;
  const int n = static_cast<int>(data.size());
  for (int start = 0; start < n; start += batch_size) {
    std::vector<int> idx;
    for (int i = start; i < std::min(n, start + batch_size); ++i) idx.push_back(i);
    auto dets = decode_detections(task.forward(stack_images(data, idx)), 0.0f);
    for (auto& d : dets) ev.detections.push_back(std::move(d));
  }
  ev.curve = pr_curve(ev.detections, data.labels, iou_threshold, default_thresholds());
  ev.best = best_point(ev.curve);
  return ev;
}

}  // namespace satgan
