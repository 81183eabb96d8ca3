#pragma once

#include "holescope/channel.hpp"
#include "holescope/embed.hpp"
#include "holescope/evaluate.hpp"
#include "holescope/features.hpp"
#include "holescope/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace holescope {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EvalConfig {
    int tw_k = 1800;
    RasterConfig raster{};
};

/// Fully resolved run description: scenario, feature choice, embedding and
/// evaluation settings. Serializes canonically for the manifest hash.
struct PipelineConfig {
    GridSpec grid{};
    Geometry geometry{};
    std::vector<Rect> carve_regions;
    double rss0_db = -150.0;
    double snr_db = std::numeric_limits<double>::infinity();
    ArrayConfig array{};

    FeatureSpec features{};
    VirtualGridConfig vgrid{};
    UmapConfig umap{};
    std::vector<std::string> baselines;  // subset of {"pca", "spectral"}
    EvalConfig eval{};

    bool export_features = false;
    bool export_graph = false;

    std::uint64_t seed = 1;
    bool deterministic = true;  // forces single-threaded numeric paths
    int threads = 1;

    void validate() const;
};

/// Reads a scenario/pipeline JSON file (see docs/format.md for the schema).
/// Unknown keys inside known sections are rejected.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& json_text);

/// Canonical JSON of the resolved config (alphabetical keys), and the FNV-1a
/// hash of that serialization. The hash changes iff a config field changes.
std::string config_json(const PipelineConfig& cfg);
std::string config_hash(const PipelineConfig& cfg);

/// Applies one sweep override ("n", "dmin", "epochs", "lr", "neg", "tw_k",
/// "raster_g", "snr") to a config. Throws ConfigError for unknown names.
void apply_param(PipelineConfig& cfg, const std::string& name, double value);

}  // namespace holescope
