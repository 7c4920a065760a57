#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>
#include <utility>
#include <vector>

#include "satgan/config.hpp"
#include "satgan/csv.hpp"
#include "satgan/file_util.hpp"

namespace satgan {
namespace {

struct Field {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

struct Section {
  std::string name;
  std::vector<Field> fields;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class T>
T parse_number(const std::string& text) {
  const std::string s = trim(text);
  T v{};
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) throw ConfigError("'" + text + "' is not a valid number");
  return v;
}

bool parse_bool(const std::string& text) {
  const std::string s = trim(text);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("'" + text + "' is not a boolean (true/false)");
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(item));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

template <class T>
Field field(std::string key, T& ref) {
  Field f{std::move(key), {}, {}};
  if constexpr (std::is_same_v<T, bool>) {
    f.set = [&ref](const std::string& s) { ref = parse_bool(s); };
    f.get = [&ref] { return std::string(ref ? "true" : "false"); };
  } else if constexpr (std::is_same_v<T, std::vector<int>>) {
    f.set = [&ref](const std::string& s) { ref = parse_int_list(s); };
    f.get = [&ref] {
      std::string out;
      for (std::size_t i = 0; i < ref.size(); ++i) out += (i ? "," : "") + std::to_string(ref[i]);
      return out;
    };
  } else if constexpr (std::is_same_v<T, TrainMode>) {
    f.set = [&ref](const std::string& s) {
      try {
        ref = parse_train_mode(trim(s));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    };
    f.get = [&ref] { return to_string(ref); };
  } else if constexpr (std::is_floating_point_v<T>) {
    f.set = [&ref](const std::string& s) { ref = parse_number<T>(s); };
    f.get = [&ref] { return format_number(ref); };
  } else {
    f.set = [&ref](const std::string& s) { ref = parse_number<T>(s); };
    f.get = [&ref] { return std::to_string(ref); };
  }
  return f;
}

std::vector<Section> sections(RunConfig& c) {
  SceneSpec& sc = c.scene;
  SensorNoiseModel& sn = c.sensor;
  TrainConfig& tr = c.train;
  GeneratorConfig& g = c.generator;
  DiscriminatorConfig& d = c.discriminator;
  TaskConfig& t = c.task;
  return {
      {"scene",
       {field("height", sc.height), field("width", sc.width), field("object_count_min", sc.object_count_min),
        field("object_count_max", sc.object_count_max), field("object_magnitude_bright", sc.object_magnitude_bright),
        field("object_magnitude_dim", sc.object_magnitude_dim), field("reference_magnitude", sc.reference_magnitude),
        field("reference_magnitude_flux", sc.reference_magnitude_flux), field("psf_sigma", sc.psf_sigma),
        field("star_count_min", sc.star_count_min), field("star_count_max", sc.star_count_max),
        field("star_magnitude_bright", sc.star_magnitude_bright), field("star_magnitude_dim", sc.star_magnitude_dim),
        field("background_level", sc.background_level)}},
      {"sensor",
       {field("bias_level", sn.bias_level), field("read_noise_sigma", sn.read_noise_sigma),
        field("shot_noise_gain", sn.shot_noise_gain), field("hot_pixel_prob", sn.hot_pixel_prob),
        field("dead_pixel_prob", sn.dead_pixel_prob), field("structured_amplitude", sn.structured_amplitude),
        field("structured_period", sn.structured_period), field("structured_phase_seed", sn.structured_phase_seed)}},
      {"train",
       {field("mode", tr.mode), field("image_size", tr.image_size), field("batch_size", tr.batch_size),
        field("steps_per_epoch", tr.steps_per_epoch), field("epochs", tr.epochs),
        field("checkpoint_interval", tr.checkpoint_interval), field("task_pretrain_steps", tr.task_pretrain_steps),
        field("iou_threshold", tr.iou_threshold)}},
      {"weights",
       {field("alpha", tr.weights.alpha), field("beta", tr.weights.beta), field("lambda", tr.weights.lambda),
        field("gamma", tr.weights.gamma)}},
      {"noise",
       {field("mu_z", tr.noise.mu_z), field("sigma_z", tr.noise.sigma_z), field("mu_w", tr.noise.mu_w),
        field("sigma_w", tr.noise.sigma_w)}},
      {"yolo", {field("coord_weight", tr.yolo.coord_weight), field("noobj_weight", tr.yolo.noobj_weight)}},
      {"optimizer",
       {field("generator_lr", tr.generator_optimizer.lr), field("generator_beta1", tr.generator_optimizer.beta1),
        field("generator_beta2", tr.generator_optimizer.beta2), field("generator_eps", tr.generator_optimizer.eps),
        field("discriminator_lr", tr.discriminator_optimizer.lr),
        field("discriminator_beta1", tr.discriminator_optimizer.beta1),
        field("discriminator_beta2", tr.discriminator_optimizer.beta2),
        field("discriminator_eps", tr.discriminator_optimizer.eps), field("task_lr", tr.task_optimizer.lr),
        field("task_beta1", tr.task_optimizer.beta1), field("task_beta2", tr.task_optimizer.beta2),
        field("task_eps", tr.task_optimizer.eps)}},
      {"generator",
       {field("base_channels", g.base_channels), field("max_channels", g.max_channels), field("depth", g.depth),
        field("attention", g.attention), field("attention_after_layer", g.attention_after_layer),
        field("attention_reduction", g.attention_reduction), field("kernel_size", g.kernel_size),
        field("stride", g.stride), field("output_scale", g.output_scale)}},
      {"discriminator",
       {field("conditional", d.conditional), field("layer_channels", d.layer_channels),
        field("kernel_size", d.kernel_size), field("leaky_slope", d.leaky_slope)}},
      {"task",
       {field("grid_size", t.grid_size), field("channels", t.channels), field("box_prior", t.box_prior),
        field("box_log_range", t.box_log_range), field("leaky_slope", t.leaky_slope),
        field("confidence_prior", t.confidence_prior)}},
      {"evaluation",
       {field("iou_threshold", c.evaluation.iou_threshold),
        field("magnitude_bin_width", c.evaluation.magnitude_bin_width)}},
  };
}

}  // namespace

void RunConfig::validate() const {
  try {
    scene.validate();
    sensor.validate();
    train.validate();
    generator.validate();
    discriminator.validate();
    task.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (task.image_size != train.image_size) throw ConfigError("task.image_size must equal train.image_size");
  if (!(evaluation.iou_threshold > 0 && evaluation.iou_threshold <= 1)) {
    throw ConfigError("evaluation.iou_threshold must lie in (0,1]");
  }
  if (!(evaluation.magnitude_bin_width > 0)) throw ConfigError("evaluation.magnitude_bin_width must be positive");
}

RunConfig parse_run_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig config;
  std::vector<Section> table = sections(config);
  bool conditional_given = false;
  for (const auto& [section_name, section] : tree) {
    if (section.empty() && !section.data().empty()) throw ConfigError("key '" + section_name + "' must be inside a [section]");
    auto sec = std::find_if(table.begin(), table.end(), [&](const Section& s) { return s.name == section_name; });
    if (sec == table.end()) throw ConfigError("unknown section [" + section_name + "]");
    for (const auto& [key, value] : section) {
      auto field = std::find_if(sec->fields.begin(), sec->fields.end(), [&](const Field& f) { return f.key == key; });
      if (field == sec->fields.end()) throw ConfigError("unknown key '" + key + "' in [" + section_name + "]");
      try {
        field->set(value.data());
      } catch (const ConfigError& e) {
        throw ConfigError(section_name + "." + key + ": " + e.what());
      }
      if (section_name == "discriminator" && key == "conditional") conditional_given = true;
    }
  }
  if (!conditional_given) config.discriminator.conditional = config.train.mode == TrainMode::pix2pix;
  config.task.image_size = config.train.image_size;
  config.validate();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  try {
    return parse_run_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string format_run_config(const RunConfig& config) {
  RunConfig copy = config;
  std::ostringstream out;
  bool first = true;
  for (const Section& s : sections(copy)) {
    out << (first ? "" : "\n") << '[' << s.name << "]\n";
    first = false;
    for (const Field& f : s.fields) out << f.key << " = " << f.get() << '\n';
  }
  return out.str();
}

}  // namespace satgan
