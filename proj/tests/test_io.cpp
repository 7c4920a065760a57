#include <png.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "satgan/config.hpp"
#include "satgan/file_util.hpp"
#include "satgan/io.hpp"
#include "satgan/random.hpp"
#include "scratch_dir.hpp"

using namespace satgan;
using satgan::testing::ScratchDir;

namespace {

// Non-16-bit-gray fixtures written through libpng's simplified API.
void write_foreign_png(const std::string& path, std::uint32_t format, int bytes_per_pixel) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = 4;
  img.height = 3;
  img.format = format;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(4 * 3 * bytes_per_pixel), 0x40);
  REQUIRE(png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), 0, nullptr) != 0);
}

double max_abs_delta(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(double(a.data()[i]) - double(b.data()[i])));
  return m;
}

}  // namespace

TEST_CASE("pixel codes map the endpoints exactly and reject out-of-range values") {
  CHECK(encode_pixel(0.0f) == 0);
  CHECK(encode_pixel(1.0f) == 65535);
  CHECK(encode_pixel(0.5f) == 32768);
  CHECK(decode_pixel(0) == 0.0f);
  CHECK(decode_pixel(65535) == 1.0f);
  CHECK_THROWS_AS(encode_pixel(-1e-3f), std::invalid_argument);
  CHECK_THROWS_AS(encode_pixel(1.001f), std::invalid_argument);
  CHECK_THROWS_AS(encode_pixel(std::nanf("")), std::invalid_argument);
}

TEST_CASE("every 16-bit code survives decode then encode") {
  for (int c = 0; c <= 65535; ++c) {
    const auto code = static_cast<std::uint16_t>(c);
    const real v = decode_pixel(code);
    REQUIRE(v == to_pixel_grid(v));
    REQUIRE(encode_pixel(v) == code);
  }
}

TEST_CASE("uniform 0.5 image roundtrips within one code") {
  ScratchDir dir("io_uniform");
  const Tensor img(Shape{1, 16, 24}, 0.5f);
  write_png16(dir / "u.png", img);
  const Tensor back = read_png16(dir / "u.png");
  REQUIRE(back.shape() == img.shape());
  CHECK(max_abs_delta(img, back) <= 1.0 / 65535);
}

TEST_CASE("random image roundtrip audit against the quantization bound") {
  ScratchDir dir("io_random");
  Rng rng(11);
  Tensor img(Shape{1, 37, 53});
  auto v = img.mutable_data();
  for (real& x : v) x = static_cast<real>(rng.uniform(0.0, 1.0));
  v[0] = 0.0f;
  v[1] = 1.0f;
  write_png16(dir / "r.png", img);
  const Tensor back = read_png16(dir / "r.png");
  REQUIRE(back.shape() == img.shape());
  std::size_t over = 0;
  for (std::size_t i = 0; i < img.numel(); ++i) {
    const double expected = std::round(double(img.data()[i]) * 65535.0) / 65535.0;
    if (std::abs(double(back.data()[i]) - double(img.data()[i])) > 1.0 / 65535) ++over;
    REQUIRE(std::abs(double(back.data()[i]) - expected) < 1e-7);
  }
  CHECK(over == 0);
  CHECK(max_abs_delta(img, back) <= 0.5 / 65535 + 1e-7);

  // Re-encoding decoded values is a fixed point.
  write_png16(dir / "r2.png", back);
  CHECK(read_file(dir / "r.png") == read_file(dir / "r2.png"));
}

TEST_CASE("png writer accepts [H,W] and rejects other shapes and values") {
  ScratchDir dir("io_shapes");
  write_png16(dir / "hw.png", Tensor(Shape{5, 7}, 0.25f));
  CHECK(read_png16(dir / "hw.png").shape() == Shape{1, 5, 7});
  CHECK_THROWS_AS(write_png16(dir / "bad.png", Tensor(Shape{2, 5, 7}, 0.25f)), std::invalid_argument);
  CHECK_THROWS_AS(write_png16(dir / "bad.png", Tensor(Shape{5, 7}, 1.5f)), std::invalid_argument);
}

TEST_CASE("png reader rejects missing, non-PNG, 8-bit and colour files") {
  ScratchDir dir("io_errors");
  CHECK_THROWS_AS(read_png16(dir / "missing.png"), IoError);
  write_file_atomic(dir / "text.png", "hello, not an image");
  CHECK_THROWS_AS(read_png16(dir / "text.png"), IoError);
  write_foreign_png(dir / "gray8.png", PNG_FORMAT_GRAY, 1);
  CHECK_THROWS_WITH_AS(read_png16(dir / "gray8.png"), doctest::Contains("16-bit grayscale"), IoError);
  write_foreign_png(dir / "rgb16.png", PNG_FORMAT_LINEAR_RGB, 6);
  CHECK_THROWS_AS(read_png16(dir / "rgb16.png"), IoError);

  write_png16(dir / "ok.png", Tensor(Shape{1, 8, 8}, 0.3f));
  const std::string bytes = read_file(dir / "ok.png");
  write_file_atomic(dir / "cut.png", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(read_png16(dir / "cut.png"), IoError);
}

TEST_CASE("annotation sidecars roundtrip and validate their schema") {
  AnnotationFile a{"img_000003.png", 64, 48, {}};
  a.objects.push_back({0.1f, 0.25f, 0.05f, 0.0625f, 11.3f});
  a.objects.push_back({1.0f, 0.0f, 0.2f, 0.2f, 9.0f});
  const std::string text = annotation_to_json(a);
  CHECK(text.find("\"cx\": 0.1,") != std::string::npos);
  const AnnotationFile b = annotation_from_json(text);
  CHECK(b.image == a.image);
  CHECK(b.height == 64);
  CHECK(b.width == 48);
  REQUIRE(b.objects.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(b.objects[i].cx == a.objects[i].cx);
    CHECK(b.objects[i].cy == a.objects[i].cy);
    CHECK(b.objects[i].w == a.objects[i].w);
    CHECK(b.objects[i].h == a.objects[i].h);
    CHECK(b.objects[i].magnitude == a.objects[i].magnitude);
  }
  CHECK(annotation_to_json(b) == text);

  const AnnotationFile empty = annotation_from_json(R"({"image":"x.png","height":4,"width":4,"objects":[]})");
  CHECK(empty.objects.empty());

  CHECK_THROWS_AS(annotation_from_json("{not json"), IoError);
  CHECK_THROWS_AS(annotation_from_json(R"({"height":4,"width":4,"objects":[]})"), IoError);
  CHECK_THROWS_AS(annotation_from_json(R"({"image":"x.png","height":0,"width":4,"objects":[]})"), IoError);
  CHECK_THROWS_AS(annotation_from_json(
                      R"({"image":"x.png","height":4,"width":4,"objects":[{"cx":1.2,"cy":0.5,"w":0.1,"h":0.1,"magnitude":10}]})"),
                  IoError);
  CHECK_THROWS_AS(annotation_from_json(
                      R"({"image":"x.png","height":4,"width":4,"objects":[{"cx":0.2,"cy":0.5,"w":0.1,"h":0.1}]})"),
                  IoError);
}

TEST_CASE("detection files sort by confidence and roundtrip") {
  std::vector<Detection> d{{{0.2f, 0.3f, 0.1f, 0.1f}, 0.4f}, {{0.6f, 0.7f, 0.05f, 0.05f}, 0.9f}};
  const auto back = detections_from_json(detections_to_json("a.png", d));
  REQUIRE(back.size() == 2);
  CHECK(back[0].confidence == 0.9f);
  CHECK(back[1].box.cx == 0.2f);
  CHECK_THROWS_AS(detections_from_json(R"({"detections":[{"cx":0.2,"cy":0.3,"w":0.1,"h":0.1}]})"), IoError);
}

TEST_CASE("dataset directories list stems in order and check image sizes") {
  ScratchDir dir("io_dataset");
  Dataset d;
  for (int i = 0; i < 3; ++i) {
    d.images.emplace_back(Shape{1, 8, 8}, decode_pixel(static_cast<std::uint16_t>(1000 * (i + 1))));
    d.labels.push_back(i == 1 ? Labels{} : Labels{{0.5f, 0.5f, 0.1f, 0.1f, 10.0f + i}});
  }
  write_dataset_dir(dir.str(), d);
  CHECK(list_stems(dir.str()) == std::vector<std::string>{"img_000000", "img_000001", "img_000002"});
  const DatasetDir back = read_dataset_dir(dir.str(), Split::validation);
  CHECK(back.data.split == Split::validation);
  REQUIRE(back.data.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(max_abs_delta(back.data.images[i], d.images[i]) == 0.0);
    CHECK(back.data.labels[i].size() == d.labels[i].size());
  }
  const DatasetDir unlabeled = read_dataset_dir(dir.str(), Split::train, false);
  CHECK_FALSE(unlabeled.data.labeled);
  CHECK(unlabeled.data.labels.empty());

  write_annotation_file(dir / "img_000001.json", AnnotationFile{"img_000001.png", 9, 8, {}});
  CHECK_THROWS_AS(read_dataset_dir(dir.str(), Split::train), IoError);
  CHECK_THROWS_AS(read_dataset_dir(dir / "nowhere", Split::train), IoError);
}

TEST_CASE("empty config yields the documented defaults") {
  const RunConfig c = parse_run_config("");
  CHECK(c.train.mode == TrainMode::satgan);
  CHECK(c.train.image_size == 64);
  CHECK(c.scene.height == 64);
  CHECK(c.train.weights.alpha == 100.0f);
  CHECK_FALSE(c.discriminator.conditional);
  CHECK(c.task.image_size == 64);
  CHECK(c.evaluation.iou_threshold == kDefaultIouThreshold);
}

TEST_CASE("config sections set the mirrored fields") {
  const RunConfig c = parse_run_config(R"(
; comment
[train]
mode = pix2pix
image_size = 32
batch_size = 4

[weights]
gamma = 0

[sensor]
read_noise_sigma = 0.025
hot_pixel_prob = 1e-4
structured_phase_seed = 18446744073709551615

[discriminator]
layer_channels = 8, 16

[task]
grid_size = 4
channels = 8,16,16

[scene]
height = 32
width = 32
)");
  CHECK(c.train.mode == TrainMode::pix2pix);
  CHECK(c.discriminator.conditional);
  CHECK(c.train.batch_size == 4);
  CHECK(c.train.weights.gamma == 0.0f);
  CHECK(c.sensor.read_noise_sigma == 0.025f);
  CHECK(c.sensor.hot_pixel_prob == 1e-4);
  CHECK(c.sensor.structured_phase_seed == 18446744073709551615ULL);
  CHECK(c.discriminator.layer_channels == std::vector<int>{8, 16});
  CHECK(c.task.image_size == 32);
  CHECK(c.task.channels == std::vector<int>{8, 16, 16});
}

TEST_CASE("explicit discriminator flag overrides the mode default") {
  const RunConfig c = parse_run_config("[train]\nmode = pix2pix\n[discriminator]\nconditional = false\n");
  CHECK_FALSE(c.discriminator.conditional);
}

TEST_CASE("config errors name the offending entry") {
  CHECK_THROWS_WITH_AS(parse_run_config("[train]\nbatchsize = 4\n"), doctest::Contains("batchsize"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config("[trian]\nbatch_size = 4\n"), doctest::Contains("[trian]"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config("[train]\nbatch_size = four\n"), doctest::Contains("train.batch_size"),
                       ConfigError);
  CHECK_THROWS_AS(parse_run_config("[train]\nbatch_size = 4x\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[train]\nmode = cyclegan\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[generator]\nattention = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("batch_size = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[train]\nbatch_size = 4\nbatch_size = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[train]\nbatch_size = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("[evaluation]\niou_threshold = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/satgan.cfg"), ConfigError);
}

TEST_CASE("formatted config parses back to the same config") {
  RunConfig c = parse_run_config("[train]\nmode = detector\nimage_size = 32\n[scene]\npsf_sigma = 0.9\n[task]\ngrid_size = 4\nchannels = 8,16,16\n");
  const std::string text = format_run_config(c);
  CHECK(text.find("[optimizer]") != std::string::npos);
  CHECK(format_run_config(parse_run_config(text)) == text);
  CHECK(parse_run_config(text).scene.psf_sigma == 0.9f);
}
