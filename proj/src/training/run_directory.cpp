#include <cstdio>
#include <filesystem>
#include <sstream>

#include "json.hpp"
#include "satgan/csv.hpp"
#include "satgan/file_util.hpp"
#include "satgan/training.hpp"

namespace satgan {

void write_epoch_csv(std::ostream& out, const std::vector<EpochReport>& reports) {
  write_csv_row(out, {"epoch", "L_G", "L_D", "L_T", "precision", "recall", "f1_star"});
  for (const EpochReport& r : reports) {
    write_csv_row(out, {std::to_string(r.epoch), format_number(r.l_g), format_number(r.l_d), format_number(r.l_t),
                        format_number(r.precision), format_number(r.recall), format_number(r.f1_star)});
  }
}

RunDirectory::RunDirectory(std::string path) : path_(std::move(path)) {
  std::filesystem::create_directories(std::filesystem::path(path_) / "checkpoints");
}

void RunDirectory::write_config(const std::string& text) const {
  write_file_atomic((std::filesystem::path(path_) / "config.txt").string(), text);
}

void RunDirectory::write_seeds(const std::vector<std::pair<std::string, std::uint64_t>>& seeds) const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, seed] : seeds) j[name] = seed;
  write_file_atomic((std::filesystem::path(path_) / "seeds.json").string(), j.dump(2) + "\n");
}

void RunDirectory::write_epochs(const std::vector<EpochReport>& reports) const {
  std::ostringstream out;
  write_epoch_csv(out, reports);
  write_file_atomic((std::filesystem::path(path_) / "epochs.csv").string(), out.str());
}

std::string RunDirectory::checkpoint_path(const std::string& kind, int epoch) const {
  char name[64];
  if (epoch < 0) {
    std::snprintf(name, sizeof name, "_final.ckpt");
  } else {
    std::snprintf(name, sizeof name, "_epoch%04d.ckpt", epoch);
  }
  return (std::filesystem::path(path_) / "checkpoints" / (kind + name)).string();
}

}  // namespace satgan
