#include "hubscan/keras/model.hpp"

#include <hdf5.h>

#include <mutex>
#include <optional>

#include "hubscan/ingest/format.hpp"
#include "hubscan/ingest/zip_reader.hpp"

namespace hubscan::keras {

std::string_view layer_source_name(LayerSource s) {
  switch (s) {
    case LayerSource::Hdf5ModelConfig: return "Hdf5ModelConfig";
    case LayerSource::KerasZipConfig: return "KerasZipConfig";
    case LayerSource::SavedModelNode: return "SavedModelNode";
  }
  return "Hdf5ModelConfig";
}

std::string_view keras_error_name(KerasErrorCode code) {
  switch (code) {
    case KerasErrorCode::NotHdf5: return "NotHdf5";
    case KerasErrorCode::MissingModelConfig: return "MissingModelConfig";
    case KerasErrorCode::MalformedJson: return "MalformedJson";
    case KerasErrorCode::CorruptArchive: return "CorruptArchive";
    case KerasErrorCode::MissingConfigJson: return "MissingConfigJson";
  }
  return "MalformedJson";
}

namespace {

constexpr int kMaxNesting = 64;

void collect_layers(const nlohmann::json& layers, LayerSource source, int depth, KerasModel& out) {
  if (depth > kMaxNesting) {
    out.notes.push_back("model nesting deeper than " + std::to_string(kMaxNesting) + " levels not expanded");
    return;
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& entry = layers[i];
    const auto cls = entry.is_object() ? entry.find("class_name") : entry.end();
    if (!entry.is_object() || cls == entry.end() || !cls->is_string() || cls->get<std::string>().empty()) {
      out.notes.push_back("layer entry " + std::to_string(i) + " has no class_name");
      continue;
    }
    LayerConfig layer;
    layer.class_name = cls->get<std::string>();
    layer.config_json = entry;
    layer.source = source;
    const auto cfg = entry.find("config");
    if (cfg != entry.end() && cfg->is_object()) {
      const auto name = cfg->find("name");
      if (name != cfg->end() && name->is_string()) layer.name = name->get<std::string>();
    }
    if (layer.name.empty()) {
      const auto name = entry.find("name");
      if (name != entry.end() && name->is_string()) layer.name = name->get<std::string>();
    }
    out.layers.push_back(std::move(layer));
    if (cfg != entry.end() && cfg->is_object()) {
      const auto inner = cfg->find("layers");
      if (inner != cfg->end() && inner->is_array()) collect_layers(*inner, source, depth + 1, out);
    }
  }
}

}  // namespace

KerasModel parse_model_json(std::string_view text, LayerSource source) {
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw KerasError(KerasErrorCode::MalformedJson, "model config is not valid JSON");
  if (!doc.is_object()) throw KerasError(KerasErrorCode::MalformedJson, "model config is not a JSON object");
  KerasModel model;
  const auto cfg = doc.find("config");
  if (cfg == doc.end()) {
    model.notes.push_back("model config has no `config` member");
    return model;
  }
  // Keras 1.x Sequential stored the layer list directly under `config`.
  if (cfg->is_array()) {
    collect_layers(*cfg, source, 0, model);
    return model;
  }
  const auto layers = cfg->is_object() ? cfg->find("layers") : cfg->end();
  if (!cfg->is_object() || layers == cfg->end()) {
    model.notes.push_back("model config has no layer list");
    return model;
  }
  if (!layers->is_array()) throw KerasError(KerasErrorCode::MalformedJson, "config.layers is not an array");
  collect_layers(*layers, source, 0, model);
  return model;
}

namespace {

// The serial HDF5 build is not thread-safe.
std::mutex& hdf5_mutex() {
  static std::mutex m;
  return m;
}

class Handle {
 public:
  Handle(hid_t id, herr_t (*close)(hid_t)) : id_(id), close_(close) {}
  ~Handle() {
    if (id_ >= 0) close_(id_);
  }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  hid_t get() const { return id_; }
  bool ok() const { return id_ >= 0; }

 private:
  hid_t id_;
  herr_t (*close_)(hid_t);
};

// Reads a scalar or one-element string attribute of the root group.
std::optional<std::string> read_string_attr(hid_t file, const char* name) {
  if (H5Aexists(file, name) <= 0) return std::nullopt;
  Handle attr(H5Aopen(file, name, H5P_DEFAULT), H5Aclose);
  if (!attr.ok()) return std::nullopt;
  Handle type(H5Aget_type(attr.get()), H5Tclose);
  Handle space(H5Aget_space(attr.get()), H5Sclose);
  if (!type.ok() || !space.ok() || H5Tget_class(type.get()) != H5T_STRING) return std::nullopt;
  const hssize_t n = H5Sget_simple_extent_npoints(space.get());
  if (n < 1) return std::nullopt;

  if (H5Tis_variable_str(type.get()) > 0) {
    Handle mem(H5Tcopy(H5T_C_S1), H5Tclose);
    H5Tset_size(mem.get(), H5T_VARIABLE);
    H5Tset_cset(mem.get(), H5Tget_cset(type.get()));
    std::vector<char*> ptrs(static_cast<std::size_t>(n), nullptr);
    if (H5Aread(attr.get(), mem.get(), ptrs.data()) < 0) return std::nullopt;
    std::string out = ptrs[0] ? ptrs[0] : "";
    H5Dvlen_reclaim(mem.get(), space.get(), H5P_DEFAULT, ptrs.data());
    return out;
  }
  const std::size_t size = H5Tget_size(type.get());
  if (size == 0) return std::string{};
  std::vector<char> buf(size * static_cast<std::size_t>(n));
  Handle mem(H5Tcopy(type.get()), H5Tclose);
  if (H5Aread(attr.get(), mem.get(), buf.data()) < 0) return std::nullopt;
  std::string out(buf.data(), size);
  // Fixed-length strings are NUL padded (or NUL terminated).
  if (const auto nul = out.find('\0'); nul != std::string::npos) out.resize(nul);
  return out;
}

}  // namespace

KerasModel load_h5_model(ByteView bytes) {
  if (!as_chars(bytes).starts_with(ingest::kHdf5Magic)) {
    throw KerasError(KerasErrorCode::NotHdf5, "missing HDF5 signature");
  }
  std::optional<std::string> config, version, backend;
  {
    std::lock_guard<std::mutex> lock(hdf5_mutex());
    H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr);
    Handle fapl(H5Pcreate(H5P_FILE_ACCESS), H5Pclose);
    if (!fapl.ok() || H5Pset_fapl_core(fapl.get(), 64 * 1024, 0) < 0 ||
        H5Pset_file_image(fapl.get(), const_cast<std::uint8_t*>(bytes.data()), bytes.size()) < 0) {
      throw KerasError(KerasErrorCode::NotHdf5, "cannot prepare HDF5 file image");
    }
    Handle file(H5Fopen("hubscan-image.h5", H5F_ACC_RDONLY, fapl.get()), H5Fclose);
    if (!file.ok()) throw KerasError(KerasErrorCode::NotHdf5, "HDF5 signature present but the file does not open");
    config = read_string_attr(file.get(), "model_config");
    version = read_string_attr(file.get(), "keras_version");
    backend = read_string_attr(file.get(), "backend");
  }
  if (!config) {
    throw KerasError(KerasErrorCode::MissingModelConfig, "unparseable Keras container: no string model_config attribute");
  }
  auto model = parse_model_json(*config, LayerSource::Hdf5ModelConfig);
  model.keras_version = version.value_or("");
  model.backend = backend.value_or("");
  return model;
}

KerasModel load_keras_zip(ByteView bytes) {
  std::optional<ingest::ArchiveEntry> config, metadata;
  try {
    config = ingest::extract_member(bytes, "config.json");
    if (config) metadata = ingest::extract_member(bytes, "metadata.json");
  } catch (const ingest::ZipError& e) {
    throw KerasError(KerasErrorCode::CorruptArchive, e.what());
  }
  if (!config) throw KerasError(KerasErrorCode::MissingConfigJson, "archive has no config.json");
  auto model = parse_model_json(as_chars(config->bytes), LayerSource::KerasZipConfig);
  if (metadata) {
    const auto meta = nlohmann::json::parse(as_chars(metadata->bytes), nullptr, false);
    if (meta.is_object()) {
      if (const auto v = meta.find("keras_version"); v != meta.end() && v->is_string()) model.keras_version = *v;
      if (const auto b = meta.find("backend"); b != meta.end() && b->is_string()) model.backend = *b;
    } else {
      model.notes.push_back("metadata.json is not a JSON object");
    }
  }
  return model;
}

std::vector<LayerConfig> parse_h5_model_config(ByteView bytes) { return load_h5_model(bytes).layers; }

std::vector<LayerConfig> parse_keras_zip(ByteView bytes) { return load_keras_zip(bytes).layers; }

}  // namespace hubscan::keras
