#include "checkpoint.h"

#include <cstring>
#include <fstream>

#include "errors.h"

namespace uie {

namespace {

constexpr char kMagic[8] = {'U', 'I', 'E', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("truncated checkpoint: " + path);
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is, const std::string& path) {
  const uint64_t n = read_pod<uint64_t>(is, path);
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw IoError("truncated checkpoint: " + path);
  return s;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  write_pod<uint32_t>(os, static_cast<uint32_t>(t.ndim()));
  for (int i = 0; i < t.ndim(); ++i) write_pod<int64_t>(os, t.dim(i));
  os.write(reinterpret_cast<const char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& is, const std::string& path) {
  const uint32_t nd = read_pod<uint32_t>(is, path);
  std::vector<int> shape(nd);
  for (uint32_t i = 0; i < nd; ++i) shape[i] = static_cast<int>(read_pod<int64_t>(is, path));
  Tensor t(shape);
  is.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!is) throw IoError("truncated checkpoint: " + path);
  return t;
}

}  // namespace

void save_checkpoint(const std::string& path, Model& model, int64_t step,
                     const std::string& config_json, const AdamW* opt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write checkpoint: " + path);
  os.write(kMagic, sizeof(kMagic));
  write_pod<uint32_t>(os, kCheckpointSchemaVersion);
  write_pod<uint64_t>(os, model.seed());
  write_pod<int64_t>(os, step);
  write_string(os, config_json);

  ParamStore ps = model.named_params();
  write_pod<uint32_t>(os, static_cast<uint32_t>(ps.count()));
  for (const auto& [name, tensor] : ps.items()) {
    write_string(os, name);
    write_tensor(os, *tensor);
  }

  const bool with_opt = opt != nullptr && !opt->m().empty();
  write_pod<uint8_t>(os, with_opt ? 1 : 0);
  if (with_opt) {
    write_pod<int64_t>(os, opt->steps_done());
    for (const Tensor& t : opt->m()) write_tensor(os, t);
    for (const Tensor& t : opt->v()) write_tensor(os, t);
  }
  if (!os) throw IoError("failed writing checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError("not a checkpoint file: " + path);
  const uint32_t version = read_pod<uint32_t>(is, path);
  if (version != kCheckpointSchemaVersion)
    throw ConfigError("checkpoint schema version " + std::to_string(version) +
                      " unsupported (expected " + std::to_string(kCheckpointSchemaVersion) +
                      "): " + path);

  LoadedCheckpoint out;
  out.seed = read_pod<uint64_t>(is, path);
  out.step = read_pod<int64_t>(is, path);
  out.config_json = read_string(is, path);

  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(out.config_json);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint config snapshot unreadable: " + std::string(e.what()));
  }
  if (!cfg.contains("model")) throw ConfigError("checkpoint missing model config: " + path);
  ModelConfig mc = ModelConfig::from_json(cfg.at("model"));
  out.model = Model::build(mc, out.seed);

  ParamStore ps = out.model.named_params();
  const uint32_t n = read_pod<uint32_t>(is, path);
  if (n != ps.count())
    throw ConfigError("checkpoint has " + std::to_string(n) + " tensors but the model expects " +
                      std::to_string(ps.count()) + ": " + path);
  for (const auto& [name, tensor] : ps.items()) {
    const std::string got = read_string(is, path);
    if (got != name)
      throw ConfigError("checkpoint tensor order mismatch: expected '" + name + "', got '" + got +
                        "'");
    Tensor loaded = read_tensor(is, path);
    if (!loaded.same_shape(*tensor))
      throw ConfigError("checkpoint tensor '" + name + "' shape " + loaded.shape_str() +
                        " does not match model " + tensor->shape_str());
    *tensor = std::move(loaded);
  }

  const uint8_t has_opt = read_pod<uint8_t>(is, path);
  if (has_opt) {
    out.has_optimizer = true;
    out.opt_t = read_pod<int64_t>(is, path);
    out.opt_m.reserve(ps.count());
    out.opt_v.reserve(ps.count());
    for (size_t i = 0; i < ps.count(); ++i) out.opt_m.push_back(read_tensor(is, path));
    for (size_t i = 0; i < ps.count(); ++i) out.opt_v.push_back(read_tensor(is, path));
  }
  return out;
}

}  // namespace uie
