#include <algorithm>
#include <filesystem>

#include "json.hpp"
#include "satgan/csv.hpp"
#include "satgan/file_util.hpp"
#include "satgan/io.hpp"

namespace satgan {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// Shortest decimal that reads back to the same float, instead of the widened double.
double tidy(real v) { return std::stod(format_number(v)); }

real unit_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number()) throw IoError(where + ": missing numeric '" + key + "'");
  const double v = obj[key].get<double>();
  if (!(v >= 0.0 && v <= 1.0)) throw IoError(where + ": '" + key + "' = " + std::to_string(v) + " outside [0,1]");
  return static_cast<real>(v);
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(what + ": " + e.what());
  }
}

std::string read_or_throw(const std::string& path) {
  try {
    return read_file(path);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
}

}  // namespace

std::string annotation_to_json(const AnnotationFile& a) {
  ordered_json j;
  j["image"] = a.image;
  j["height"] = a.height;
  j["width"] = a.width;
  j["objects"] = ordered_json::array();
  for (const Annotation& o : a.objects) {
    ordered_json e;
    e["cx"] = tidy(o.cx);
    e["cy"] = tidy(o.cy);
    e["w"] = tidy(o.w);
    e["h"] = tidy(o.h);
    e["magnitude"] = tidy(o.magnitude);
    j["objects"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

AnnotationFile annotation_from_json(const std::string& text) {
  const json j = parse_json(text, "annotation");
  if (!j.is_object()) throw IoError("annotation: expected a JSON object");
  AnnotationFile a;
  if (!j.contains("image") || !j["image"].is_string()) throw IoError("annotation: missing string 'image'");
  a.image = j["image"].get<std::string>();
  for (const char* key : {"height", "width"}) {
    if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<long long>() < 1) {
      throw IoError(std::string("annotation: '") + key + "' must be a positive integer");
    }
  }
  a.height = j["height"].get<int>();
  a.width = j["width"].get<int>();
  if (!j.contains("objects") || !j["objects"].is_array()) throw IoError("annotation: missing array 'objects'");
  int index = 0;
  for (const json& e : j["objects"]) {
    const std::string where = "annotation object " + std::to_string(index++);
    if (!e.is_object()) throw IoError(where + ": expected an object");
    Annotation o;
    o.cx = unit_field(e, "cx", where);
    o.cy = unit_field(e, "cy", where);
    o.w = unit_field(e, "w", where);
    o.h = unit_field(e, "h", where);
    if (!e.contains("magnitude") || !e["magnitude"].is_number()) throw IoError(where + ": missing numeric 'magnitude'");
    o.magnitude = e["magnitude"].get<real>();
    a.objects.push_back(o);
  }
  return a;
}

void write_annotation_file(const std::string& path, const AnnotationFile& a) {
  write_file_atomic(path, annotation_to_json(a));
}

AnnotationFile read_annotation_file(const std::string& path) {
  try {
    return annotation_from_json(read_or_throw(path));
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::vector<Detection> detections_from_json(const std::string& text) {
  const json j = parse_json(text, "detections");
  if (!j.is_object() || !j.contains("detections") || !j["detections"].is_array()) {
    throw IoError("detections: expected an object with array 'detections'");
  }
  std::vector<Detection> out;
  int index = 0;
  for (const json& e : j["detections"]) {
    const std::string where = "detection " + std::to_string(index++);
    if (!e.is_object()) throw IoError(where + ": expected an object");
    Detection d;
    d.box = {unit_field(e, "cx", where), unit_field(e, "cy", where), unit_field(e, "w", where), unit_field(e, "h", where)};
    d.confidence = unit_field(e, "confidence", where);
    out.push_back(d);
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
  return out;
}

std::string detections_to_json(const std::string& image, const std::vector<Detection>& detections) {
  ordered_json j;
  j["image"] = image;
  j["detections"] = ordered_json::array();
  for (const Detection& d : detections) {
    j["detections"].push_back(ordered_json{{"cx", tidy(d.box.cx)},
                                           {"cy", tidy(d.box.cy)},
                                           {"w", tidy(d.box.w)},
                                           {"h", tidy(d.box.h)},
                                           {"confidence", tidy(d.confidence)}});
  }
  return j.dump(2) + "\n";
}

std::vector<std::string> list_stems(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir + ": not a directory");
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") stems.push_back(entry.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

DatasetDir read_dataset_dir(const std::string& dir, Split split, bool labeled) {
  DatasetDir out;
  out.data.split = split;
  out.data.labeled = labeled;
  out.stems = list_stems(dir);
  if (out.stems.empty()) throw IoError(dir + ": no annotation files");
  for (const std::string& stem : out.stems) {
    const AnnotationFile a = read_annotation_file((fs::path(dir) / (stem + ".json")).string());
    const std::string image_path = (fs::path(dir) / a.image).string();
    Tensor img = read_png16(image_path);
    if (img.dim(1) != a.height || img.dim(2) != a.width) {
      throw IoError(image_path + ": size " + std::to_string(img.dim(1)) + "x" + std::to_string(img.dim(2)) +
                    " disagrees with its annotation");
    }
    out.data.images.push_back(std::move(img));
    if (labeled) out.data.labels.push_back(a.objects);
  }
  try {
    out.data.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(dir + ": " + e.what());
  }
  return out;
}

void write_dataset_dir(const std::string& dir, const Dataset& data, const std::vector<std::string>& stems) {
  if (!data.labeled) throw std::invalid_argument("write_dataset_dir: dataset has no labels to write");
  data.validate();
  if (!stems.empty() && stems.size() != data.size()) throw std::invalid_argument("write_dataset_dir: stem count mismatch");
  fs::create_directories(dir);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::string stem;
    if (stems.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "img_%06zu", i);
      stem = buf;
    } else {
      stem = stems[i];
    }
    const Tensor& img = data.images[i];
    write_png16((fs::path(dir) / (stem + ".png")).string(), img);
    write_annotation_file((fs::path(dir) / (stem + ".json")).string(),
                          AnnotationFile{stem + ".png", img.dim(1), img.dim(2), data.labels[i]});
  }
}

void write_derived_dir(const std::string& dir, const std::string& source_dir, const std::vector<std::string>& stems,
                       const std::vector<Tensor>& images) {
  if (stems.size() != images.size()) throw std::invalid_argument("write_derived_dir: stem count mismatch");
  if (fs::exists(dir) && fs::equivalent(dir, source_dir)) throw IoError(dir + ": output must differ from the input directory");
  fs::create_directories(dir);
  for (std::size_t i = 0; i < stems.size(); ++i) {
    const std::string sidecar = read_or_throw((fs::path(source_dir) / (stems[i] + ".json")).string());
    const AnnotationFile a = annotation_from_json(sidecar);
    write_png16((fs::path(dir) / a.image).string(), images[i]);
    write_file_atomic((fs::path(dir) / (stems[i] + ".json")).string(), sidecar);
  }
}

}  // namespace satgan
