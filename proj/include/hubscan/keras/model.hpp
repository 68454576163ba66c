#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hubscan/common.hpp"
#include "json.hpp"

namespace hubscan::keras {

enum class LayerSource { Hdf5ModelConfig, KerasZipConfig, SavedModelNode };

std::string_view layer_source_name(LayerSource s);

struct LayerConfig {
  std::string class_name;  // nonempty
  std::string name;
  nlohmann::json config_json;  // the whole layer entry, always an object
  LayerSource source = LayerSource::Hdf5ModelConfig;

  // Compact serialization, the text risky-operator matching runs over.
  std::string text() const { return config_json.dump(); }
};

enum class KerasErrorCode { NotHdf5, MissingModelConfig, MalformedJson, CorruptArchive, MissingConfigJson };

std::string_view keras_error_name(KerasErrorCode code);

class KerasError : public Error {
 public:
  KerasError(KerasErrorCode code, std::string message) : Error(std::move(message)), code_(code) {}
  KerasErrorCode code() const { return code_; }

 private:
  KerasErrorCode code_;
};

struct KerasModel {
  std::vector<LayerConfig> layers;
  std::string keras_version;  // empty when the container does not record it
  std::string backend;
  std::vector<std::string> notes;  // skipped entries and similar oddities
};

// Layers of a model-config JSON document (HDF5 `model_config` attribute or
// `.keras` config.json). `config.layers` entries are returned in order; an
// entry that is itself a model with its own `config.layers` is followed by
// its layers, depth first. Throws KerasError(MalformedJson).
KerasModel parse_model_json(std::string_view text, LayerSource source);

// Thread-safe; HDF5 access is serialized internally.
KerasModel load_h5_model(ByteView bytes);
KerasModel load_keras_zip(ByteView bytes);

std::vector<LayerConfig> parse_h5_model_config(ByteView bytes);
std::vector<LayerConfig> parse_keras_zip(ByteView bytes);

}  // namespace hubscan::keras
