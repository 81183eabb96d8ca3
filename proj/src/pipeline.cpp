#include "holescope/pipeline.hpp"

#include "holescope/spectral.hpp"
#include "holescope/svg.hpp"
#include "holescope/threading.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

namespace holescope {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_features_csv(const FeatureMatrix& features, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "sample_id";
    for (int d = 0; d < features.dim(); ++d) out << ",f" << d;
    out << '\n';
    char buffer[64];
    for (int i = 0; i < features.num_rows(); ++i) {
        out << features.index_map[static_cast<std::size_t>(i)];
        for (int d = 0; d < features.dim(); ++d) {
            std::snprintf(buffer, sizeof(buffer), ",%.17g", features.values(i, d));
            out << buffer;
        }
        out << '\n';
    }
}

int resolved_threads(const PipelineConfig& cfg) {
    if (cfg.deterministic) return 1;
    return std::min(std::max(cfg.threads, 1), max_threads());
}

}  // namespace

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::kConfig: return "config";
        case Stage::kScene: return "scene";
        case Stage::kFeatures: return "features";
        case Stage::kEmbed: return "embed";
        case Stage::kEval: return "eval";
        case Stage::kDetect: return "detect";
        case Stage::kRender: return "render";
        case Stage::kManifest: return "manifest";
    }
    return "unknown";
}

HoleGroundTruth pipeline_ground_truth(const PipelineConfig& cfg, const Dataset& ds) {
    if (ds.mpcs) return classify_coverage(ds, cfg.rss0_db);
    HoleGroundTruth truth;
    if (!ds.ch_labels) return truth;
    // Rebuild the ring from persisted labels.
    const std::vector<std::uint8_t>& mask = *ds.ch_labels;
    const int rows = ds.grid.rows, cols = ds.grid.cols;
    for (int id = 0; id < static_cast<int>(mask.size()); ++id)
        if (mask[static_cast<std::size_t>(id)]) truth.ch_indices.push_back(id);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int id = r * cols + c;
            if (mask[static_cast<std::size_t>(id)]) continue;
            const bool adjacent = (r > 0 && mask[static_cast<std::size_t>(id - cols)]) ||
                                  (r + 1 < rows && mask[static_cast<std::size_t>(id + cols)]) ||
                                  (c > 0 && mask[static_cast<std::size_t>(id - 1)]) ||
                                  (c + 1 < cols && mask[static_cast<std::size_t>(id + 1)]);
            if (adjacent) truth.boundary_indices.push_back(id);
        }
    }
    return truth;
}

Dataset scene_stage(const PipelineConfig& cfg, const fs::path& out_dir) {
    const int threads = resolved_threads(cfg);
    Dataset ds = synth_dataset(cfg.grid, cfg.geometry, cfg.array, cfg.snr_db, cfg.seed, threads);
    if (!cfg.carve_regions.empty()) {
        auto [carved, truth] = carve_holes(std::move(ds), cfg.carve_regions);
        (void)truth;
        ds = std::move(carved);
    }
    // Persist full coverage labels (carved regions plus shadowed cells).
    const HoleGroundTruth truth = pipeline_ground_truth(cfg, ds);
    std::vector<std::uint8_t> labels(static_cast<std::size_t>(ds.num_samples()), 0);
    for (int id : truth.ch_indices) labels[static_cast<std::size_t>(id)] = 1;
    ds.ch_labels = std::move(labels);

    save_dataset(ds, out_dir / "dataset.chds");
    return ds;
}

FeatureMatrix features_stage(const PipelineConfig& cfg, const Dataset& ds,
                             const fs::path& out_dir) {
    FeatureMatrix features = assemble_features(ds, cfg.features, cfg.vgrid, resolved_threads(cfg));
    if (cfg.export_features) write_features_csv(features, out_dir / "features.csv");
    return features;
}

Embedding embed_stage(const PipelineConfig& cfg, const FeatureMatrix& features,
                      const std::string& algo, const fs::path& out_dir) {
    const int threads = resolved_threads(cfg);
    Embedding emb;
    if (algo == "umap") {
        UmapConfig ucfg = cfg.umap;
        ucfg.seed = cfg.seed;
        ucfg.threads = threads;
        if (cfg.export_graph) {
            const KnnResult knn = knn_exact(features, ucfg.n, threads);
            const NeighborGraph graph =
                symmetrize(fuzzy_weights(knn, local_scales(knn, ucfg.n)));
            write_graph_csv(graph, out_dir / "graph.csv");
        }
        emb = umap_embed(features, ucfg);
    } else if (algo == "pca") {
        emb = pca(features, cfg.umap.dim);
    } else if (algo == "spectral") {
        const KnnResult knn = knn_exact(features, cfg.umap.n, threads);
        const NeighborGraph graph =
            symmetrize(fuzzy_weights(knn, local_scales(knn, cfg.umap.n)));
        emb = spectral_layout(graph, cfg.umap.dim);
        emb.index_map = features.index_map;
    } else {
        throw std::invalid_argument("embed: unknown algorithm \"" + algo + "\"");
    }
    write_embedding_csv(emb, out_dir / ("embedding_" + algo + ".csv"));
    return emb;
}

TrustworthinessReport eval_stage(const PipelineConfig& cfg, const FeatureMatrix& features,
                                 const Embedding& emb, const std::string& algo,
                                 const fs::path& out_dir) {
    const TrustworthinessReport report =
        trustworthiness(features, emb, cfg.eval.tw_k, resolved_threads(cfg));
    write_text(out_dir / ("tw_" + algo + ".json"), trustworthiness_json(report));
    return report;
}

HoleReport detect_stage(const PipelineConfig& cfg, const Embedding& emb,
                        const std::string& algo, const fs::path& out_dir) {
    const HoleReport report = detect_holes(emb, cfg.eval.raster);
    write_text(out_dir / ("holes_" + algo + ".json"), hole_report_json(report));
    return report;
}

void render_stage(const PipelineConfig& cfg, const Dataset& ds, const Embedding& emb,
                  const std::string& algo, const fs::path& out_dir) {
    const HoleGroundTruth truth = pipeline_ground_truth(cfg, ds);
    std::vector<std::uint8_t> boundary(static_cast<std::size_t>(ds.num_samples()), 0);
    for (int id : truth.boundary_indices) boundary[static_cast<std::size_t>(id)] = 1;

    // Color by grid row so the service area reads as bands; boundary in black.
    std::vector<int> labels(static_cast<std::size_t>(emb.num_rows()), kDefaultLabel);
    for (int i = 0; i < emb.num_rows(); ++i) {
        const int id = emb.index_map[static_cast<std::size_t>(i)];
        labels[static_cast<std::size_t>(i)] =
            boundary[static_cast<std::size_t>(id)] ? kBoundaryLabel : id / ds.grid.cols;
    }
    RenderConfig rc;
    rc.palette_span = std::max(1, ds.grid.rows);
    write_text(out_dir / ("embedding_" + algo + ".svg"), render_svg(emb, labels, rc));
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const fs::path& out_dir,
                            const std::vector<std::string>& algos_in) {
    PipelineResult result;
    std::vector<std::string> algos = algos_in;
    if (algos.empty()) {
        algos.push_back("umap");
        for (const std::string& b : cfg.baselines) algos.push_back(b);
    }

    const auto fail = [&](Stage stage, const std::string& message) {
        result.exit_code = static_cast<int>(stage);
        result.failed_stage = stage_name(stage);
        result.error = message;
    };

    const auto record = [&](const std::string& key, Clock::time_point start) {
        result.timings_ms[key] = ms_since(start);
    };

    try {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        cfg.validate();
    } catch (const std::exception& e) {
        fail(Stage::kConfig, e.what());
        return result;
    }

    Dataset ds;
    FeatureMatrix features;
    bool features_ready = false;

    Stage current = Stage::kScene;
    try {
        auto t0 = Clock::now();
        ds = scene_stage(cfg, out_dir);
        result.artifacts.push_back("dataset.chds");
        record("scene", t0);

        for (const std::string& algo : algos) {
            current = Stage::kEmbed;
            t0 = Clock::now();
            if (!features_ready) {
                features = features_stage(cfg, ds, out_dir);
                features_ready = true;
                if (cfg.export_features) result.artifacts.push_back("features.csv");
            }
            const Embedding emb = embed_stage(cfg, features, algo, out_dir);
            if (algo == "umap" && cfg.export_graph) result.artifacts.push_back("graph.csv");
            result.artifacts.push_back("embedding_" + algo + ".csv");
            record("embed_" + algo, t0);

            current = Stage::kEval;
            t0 = Clock::now();
            eval_stage(cfg, features, emb, algo, out_dir);
            result.artifacts.push_back("tw_" + algo + ".json");
            record("eval_" + algo, t0);

            if (cfg.umap.dim == 2) {
                current = Stage::kDetect;
                t0 = Clock::now();
                detect_stage(cfg, emb, algo, out_dir);
                result.artifacts.push_back("holes_" + algo + ".json");
                record("detect_" + algo, t0);

                current = Stage::kRender;
                t0 = Clock::now();
                render_stage(cfg, ds, emb, algo, out_dir);
                result.artifacts.push_back("embedding_" + algo + ".svg");
                record("render_" + algo, t0);
            }
        }
    } catch (const std::exception& e) {
        fail(current, e.what());
    }

    // Manifest is written for successes and failures alike so partial runs
    // stay inspectable.
    try {
        nlohmann::ordered_json manifest;
        manifest["tool"] = "holescope";
        manifest["version"] = kToolVersion;
        manifest["status"] = result.exit_code == 0 ? "ok" : ("failed:" + result.failed_stage);
        if (!result.error.empty()) manifest["error"] = result.error;
        manifest["config"] = nlohmann::ordered_json::parse(config_json(cfg));
        manifest["config_hash"] = config_hash(cfg);
        manifest["seed"] = cfg.seed;
        manifest["deterministic"] = cfg.deterministic;
        manifest["threads"] = resolved_threads(cfg);
        manifest["algorithms"] = algos;
        manifest["artifacts"] = result.artifacts;
        manifest["timings_ms"] = result.timings_ms;
        write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
        if (result.exit_code == 0) fail(Stage::kManifest, e.what());
    }
    return result;
}

}  // namespace holescope
