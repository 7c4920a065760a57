#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "satgan/boxes.hpp"
#include "satgan/scene.hpp"
#include "satgan/tensor.hpp"
#include "satgan/training.hpp"

namespace satgan {

/// Unreadable, malformed or unsupported files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// value * 65535 rounded to nearest; `v` must lie in [0,1].
std::uint16_t encode_pixel(real v);
/// code / 65535 snapped to the pixel grid.
real decode_pixel(std::uint16_t code);

/// 16-bit grayscale PNG of a [1,H,W] or [H,W] image with values in [0,1].
void write_png16(const std::string& path, const Tensor& image);
/// Reads a 16-bit grayscale PNG as [1,H,W]; any other format is an IoError.
Tensor read_png16(const std::string& path);

struct AnnotationFile {
  std::string image;
  int height = 0;
  int width = 0;
  Labels objects;
};

std::string annotation_to_json(const AnnotationFile& a);
AnnotationFile annotation_from_json(const std::string& text);
void write_annotation_file(const std::string& path, const AnnotationFile& a);
AnnotationFile read_annotation_file(const std::string& path);

/// Per-image detections for offline evaluation: {image, detections: [{cx, cy, w, h, confidence}]}.
std::vector<Detection> detections_from_json(const std::string& text);
std::string detections_to_json(const std::string& image, const std::vector<Detection>& detections);

/// A directory of <stem>.png images, each with a <stem>.json sidecar.
struct DatasetDir {
  Dataset data;
  std::vector<std::string> stems;
};

/// Sidecar stems of `dir` in lexicographic order.
std::vector<std::string> list_stems(const std::string& dir);
/// Loads every image/sidecar pair; `labeled = false` ignores the objects.
DatasetDir read_dataset_dir(const std::string& dir, Split split, bool labeled = true);
/// Writes img_NNNNNN.png/.json pairs, or `stems` when given.
void write_dataset_dir(const std::string& dir, const Dataset& data, const std::vector<std::string>& stems = {});
/// Writes images under the source stems and copies each source sidecar byte for byte.
void write_derived_dir(const std::string& dir, const std::string& source_dir, const std::vector<std::string>& stems,
                       const std::vector<Tensor>& images);

}  // namespace satgan
