#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "satgan/file_util.hpp"
#include "satgan/networks.hpp"

namespace satgan {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'S', 'A', 'T', 'G', 'A', 'N', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); }

void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  void take(void* dst, std::size_t n) {
    if (n > bytes_.size() - pos_) throw CheckpointError("corrupt checkpoint " + path_ + ": truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    take(&v, sizeof v);
    return v;
  }
  std::string string() {
    const std::uint32_t n = u32();
    std::string s(n, '\0');
    take(s.data(), n);
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  const std::string& path() const { return path_; }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
  std::string path_;
};

Reader open_checkpoint(const std::string& path, CheckpointHeader& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}), path);
  char magic[sizeof kMagic];
  try {
    r.take(magic, sizeof magic);
  } catch (const CheckpointError&) {
    throw CheckpointError("not a checkpoint (bad magic): " + path);
  }
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw CheckpointError("not a checkpoint (bad magic): " + path);
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " in " + path);
  }
  header.kind = r.string();
  header.config_json = r.string();
  return r;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_string(out, model.kind());
  put_string(out, model.config_json());
  const ParameterStore& params = model.parameters();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = params.tensors()[i];
    put_string(out, params.names()[i]);
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (real v : t.data()) {
      const float f = static_cast<float>(v);
      out.append(reinterpret_cast<const char*>(&f), sizeof f);
    }
  }
  write_file_atomic(path, out);
}

CheckpointHeader read_checkpoint_header(const std::string& path) {
  CheckpointHeader header;
  open_checkpoint(path, header);
  return header;
}

void load_checkpoint(const std::string& path, Model& model) {
  CheckpointHeader header;
  Reader r = open_checkpoint(path, header);
  if (header.kind != model.kind()) {
    throw CheckpointError("checkpoint " + path + " holds a " + header.kind + ", expected a " + model.kind());
  }
  struct Entry {
    std::string name;
    Shape shape;
    std::vector<float> values;
  };
  std::vector<Entry> entries(r.u32());
  for (Entry& e : entries) {
    e.name = r.string();
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw CheckpointError("corrupt checkpoint " + path + ": rank " + std::to_string(rank) + " for " + e.name);
    e.shape.resize(rank);
    std::size_t n = 1;
    for (int& d : e.shape) {
      d = static_cast<int>(r.u32());
      if (d < 1) throw CheckpointError("corrupt checkpoint " + path + ": bad shape for " + e.name);
      n *= static_cast<std::size_t>(d);
    }
    e.values.resize(n);
    r.take(e.values.data(), n * sizeof(float));
  }
  if (!r.done()) throw CheckpointError("corrupt checkpoint " + path + ": trailing bytes");

  ParameterStore& params = model.parameters();
  auto find = [&](const std::string& name) {
    return std::find_if(entries.begin(), entries.end(), [&](const Entry& e) { return e.name == name; });
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto it = find(params.names()[i]);
    if (it != entries.end() && it->shape != params.tensors()[i].shape()) {
      throw CheckpointError("shape mismatch for parameter " + it->name + ": checkpoint " + shape_string(it->shape) +
                            ", model " + shape_string(params.tensors()[i].shape()));
    }
  }
  for (const std::string& name : params.names()) {
    if (find(name) == entries.end()) throw CheckpointError("checkpoint " + path + " lacks parameter " + name);
  }
  if (entries.size() != params.size()) {
    for (const Entry& e : entries) {
      if (!params.contains(e.name)) throw CheckpointError("checkpoint parameter " + e.name + " does not exist in the model");
    }
    throw CheckpointError("corrupt checkpoint " + path + ": duplicate parameter names");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params.tensors()[i];
    const auto& src = find(params.names()[i])->values;
    std::copy(src.begin(), src.end(), t.mutable_data().begin());
  }
}

}  // namespace satgan
