#pragma once

#include "holescope/config.hpp"
#include "holescope/dataset_io.hpp"
#include "holescope/evaluate.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace holescope {

inline constexpr const char* kToolVersion = "0.1.0";

/// Stage-named exit codes; a stage failure aborts the run with its code.
enum class Stage { kConfig = 1, kScene, kFeatures, kEmbed, kEval, kDetect, kRender, kManifest };

std::string stage_name(Stage s);

struct PipelineResult {
    int exit_code = 0;
    std::string failed_stage;  // empty on success
    std::string error;
    std::map<std::string, double> timings_ms;
    std::vector<std::string> artifacts;  // file names relative to the output dir
};

/// Runs scene -> features -> embed/eval/detect/render per algorithm ->
/// manifest, writing every artifact under out_dir. algos must be a subset of
/// {"umap", "pca", "spectral"}; an empty list means umap plus the configured
/// baselines. Never throws: failures come back as exit codes and are flagged
/// in the manifest.
PipelineResult run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out_dir,
                            const std::vector<std::string>& algos = {});

/// Individual stages, for the standalone subcommands. These throw on error.
Dataset scene_stage(const PipelineConfig& cfg, const std::filesystem::path& out_dir);
FeatureMatrix features_stage(const PipelineConfig& cfg, const Dataset& ds,
                             const std::filesystem::path& out_dir);
Embedding embed_stage(const PipelineConfig& cfg, const FeatureMatrix& features,
                      const std::string& algo, const std::filesystem::path& out_dir);
TrustworthinessReport eval_stage(const PipelineConfig& cfg, const FeatureMatrix& features,
                                 const Embedding& emb, const std::string& algo,
                                 const std::filesystem::path& out_dir);
HoleReport detect_stage(const PipelineConfig& cfg, const Embedding& emb,
                        const std::string& algo, const std::filesystem::path& out_dir);
void render_stage(const PipelineConfig& cfg, const Dataset& ds, const Embedding& emb,
                  const std::string& algo, const std::filesystem::path& out_dir);

/// Ground truth used for labeling and overlap scoring: threshold
/// classification when path lists are present, carved labels otherwise.
HoleGroundTruth pipeline_ground_truth(const PipelineConfig& cfg, const Dataset& ds);

}  // namespace holescope
