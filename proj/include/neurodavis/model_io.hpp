#ifndef NEURODAVIS_MODEL_IO_HPP
#define NEURODAVIS_MODEL_IO_HPP

#include "neurodavis/model.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

namespace neurodavis {

inline constexpr const char* kCheckpointFormat = "neurodavis-checkpoint";
inline constexpr int kCheckpointVersion = 1;

nlohmann::json to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

/// 16 hex digits of FNV-1a over the compact JSON form of the config.
std::string config_hash(const ModelConfig& config);

nlohmann::json to_json(const TrainReport& report);

struct Checkpoint {
    ModelConfig config;
    Model model;
};

/// Layout documented in docs/formats.md.
nlohmann::json checkpoint_to_json(const ModelConfig& config, const Model& model);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config, const Model& model);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace neurodavis

#endif
