#include <iostream>
#include <vector>

#include "CLI11.hpp"
#include "satgan/csv.hpp"
#include "satgan/experiment.hpp"

using namespace satgan;

int main(int argc, char** argv) {
  Sim2RealSetup s = default_sim2real_setup();
  std::vector<std::uint64_t> seeds{1, 2, 3};
  CLI::App app{"Miniature sim-to-real study: detectors trained on sensor-noised, noiseless and generator-noised data",
               "satgan_sim2real"};
  app.add_option("--seeds", seeds, "Experiment seeds");
  app.add_option("--train-count", s.train_count, "Images per detector training set");
  app.add_option("--validation-count", s.validation_count, "Held-out target-domain images");
  app.add_option("--gan-epochs", s.gan.epochs, "GAN epochs");
  app.add_option("--gan-steps-per-epoch", s.gan.steps_per_epoch, "GAN steps per epoch");
  app.add_option("--gan-batch", s.gan.batch_size, "GAN batch size");
  app.add_option("--pretrain-steps", s.gan.task_pretrain_steps, "Task pretraining steps");
  app.add_option("--alpha", s.gan.weights.alpha, "l1 weight");
  app.add_option("--gamma", s.gan.weights.gamma, "Task weight");
  app.add_option("--g-lr", s.gan.generator_optimizer.lr, "Generator learning rate");
  app.add_option("--d-lr", s.gan.discriminator_optimizer.lr, "Discriminator learning rate");
  app.add_option("--g-base", s.generator.base_channels, "Generator base channels");
  app.add_option("--d-channels", s.discriminator.layer_channels, "Discriminator layer channels");
  app.add_option("--det-epochs", s.detector.epochs, "Detector epochs");
  app.add_option("--det-steps-per-epoch", s.detector.steps_per_epoch, "Detector steps per epoch");
  app.add_option("--det-batch", s.detector.batch_size, "Detector batch size");
  CLI11_PARSE(app, argc, argv);

  write_csv_row(std::cout, {"seed", "f1_target", "f1_noiseless", "f1_satgan", "gen_mean", "gen_std", "flat_mean",
                            "flat_std", "seconds"});
  std::cout << std::flush;
  for (std::uint64_t seed : seeds) {
    const Sim2RealResult r = run_sim2real(s, seed, &std::cerr);
    write_csv_row(std::cout, {std::to_string(seed), format_number(r.f1_target), format_number(r.f1_noiseless),
                              format_number(r.f1_satgan), format_number(r.generated.mean),
                              format_number(r.generated.stddev), format_number(r.flat.mean),
                              format_number(r.flat.stddev), format_number(r.seconds)});
    std::cout << std::flush;
  }
}
