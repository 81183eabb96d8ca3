#include "holescope/config.hpp"
#include "holescope/dataset_io.hpp"
#include "holescope/pipeline.hpp"
#include "holescope/threading.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace holescope;

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::string algo = "umap";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool deterministic = false;
    std::vector<std::string> params;  // "name=v[,v...]"
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool needs_config) {
    auto* config = cmd->add_option("--config", opt.config_path, "Scenario/pipeline JSON file");
    if (needs_config) config->required();
    cmd->add_option("--out", opt.out_dir, "Output directory");
    cmd->add_option("--seed", opt.seed, "Seed for every stochastic stage")
        ->each([&](const std::string&) { opt.seed_set = true; });
    cmd->add_flag("--deterministic", opt.deterministic,
                  "Force single-threaded numeric paths");
    cmd->add_option("--param", opt.params,
                    "Sweep override name=v[,v...] (repeatable; cartesian product)");
}

PipelineConfig resolve_config(const CommonOptions& opt) {
    PipelineConfig cfg = load_config(opt.config_path);
    if (opt.seed_set) cfg.seed = opt.seed;
    if (opt.deterministic) cfg.deterministic = true;
    cfg.threads = max_threads();
    return cfg;
}

struct SweepAxis {
    std::string name;
    std::vector<double> values;
};

std::vector<SweepAxis> parse_sweeps(const std::vector<std::string>& params) {
    std::vector<SweepAxis> axes;
    for (const std::string& p : params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--param expects name=v[,v...], got \"" + p + "\"");
        SweepAxis axis;
        axis.name = p.substr(0, eq);
        std::stringstream list(p.substr(eq + 1));
        std::string item;
        while (std::getline(list, item, ',')) axis.values.push_back(std::stod(item));
        if (axis.values.empty())
            throw ConfigError("--param \"" + p + "\" lists no values");
        axes.push_back(std::move(axis));
    }
    return axes;
}

std::string combo_dir_name(const std::vector<SweepAxis>& axes, const std::vector<std::size_t>& pick) {
    std::string name;
    for (std::size_t a = 0; a < axes.size(); ++a) {
        char value[32];
        std::snprintf(value, sizeof(value), "%g", axes[a].values[pick[a]]);
        if (!name.empty()) name += '_';
        name += axes[a].name + value;
    }
    return name;
}

/// Runs fn once per sweep combination (once total when no sweep is given).
int for_each_combo(const PipelineConfig& base, const std::vector<SweepAxis>& axes,
                   const fs::path& out_root,
                   const std::function<int(const PipelineConfig&, const fs::path&)>& fn) {
    if (axes.empty()) return fn(base, out_root);
    std::vector<std::size_t> pick(axes.size(), 0);
    while (true) {
        PipelineConfig cfg = base;
        for (std::size_t a = 0; a < axes.size(); ++a)
            apply_param(cfg, axes[a].name, axes[a].values[pick[a]]);
        const int rc = fn(cfg, out_root / combo_dir_name(axes, pick));
        if (rc != 0) return rc;
        std::size_t a = 0;
        for (; a < axes.size(); ++a) {
            if (++pick[a] < axes[a].values.size()) break;
            pick[a] = 0;
        }
        if (a == axes.size()) return 0;
    }
}

int report_result(const PipelineResult& result) {
    if (result.exit_code != 0) {
        std::cerr << "holescope: stage '" << result.failed_stage << "' failed: " << result.error
                  << "\n";
    }
    return result.exit_code;
}

int run_all(const CommonOptions& opt) {
    const PipelineConfig base = resolve_config(opt);
    return for_each_combo(base, parse_sweeps(opt.params), opt.out_dir,
                          [&](const PipelineConfig& cfg, const fs::path& dir) {
                              return report_result(run_pipeline(cfg, dir));
                          });
}

Dataset load_stage_dataset(const fs::path& out_dir) {
    const fs::path path = out_dir / "dataset.chds";
    if (!fs::exists(path))
        throw std::runtime_error("no dataset at " + path.string() + "; run 'scene gen' first");
    return load_dataset(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coverage-hole detection from unlabeled channel samples"};
    app.require_subcommand(1);

    CommonOptions opt;

    auto* scene = app.add_subcommand("scene", "Dataset synthesis");
    auto* scene_gen = scene->add_subcommand("gen", "Generate and persist the dataset");
    add_common(scene_gen, opt, true);

    auto* embed = app.add_subcommand("embed", "Embed a persisted dataset");
    add_common(embed, opt, true);
    embed->add_option("--algo", opt.algo, "umap|pca|spectral");

    auto* eval = app.add_subcommand("eval", "Trustworthiness of a persisted embedding");
    add_common(eval, opt, true);
    eval->add_option("--algo", opt.algo, "umap|pca|spectral");

    auto* detect = app.add_subcommand("detect", "Hole detection on a persisted embedding");
    add_common(detect, opt, true);
    detect->add_option("--algo", opt.algo, "umap|pca|spectral");

    auto* render = app.add_subcommand("render", "SVG scatter of a persisted embedding");
    add_common(render, opt, true);
    render->add_option("--algo", opt.algo, "umap|pca|spectral");

    auto* all = app.add_subcommand("all", "Full pipeline");
    add_common(all, opt, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (all->parsed()) return run_all(opt);

        const PipelineConfig base = resolve_config(opt);
        const auto sweeps = parse_sweeps(opt.params);

        const auto run_stage = [&](const PipelineConfig& cfg, const fs::path& dir) -> int {
            fs::create_directories(dir);
            if (scene_gen->parsed()) {
                scene_stage(cfg, dir);
                return 0;
            }
            const Dataset ds = load_stage_dataset(dir);
            const FeatureMatrix features = features_stage(cfg, ds, dir);
            if (embed->parsed()) {
                embed_stage(cfg, features, opt.algo, dir);
                return 0;
            }
            const fs::path emb_path = dir / ("embedding_" + opt.algo + ".csv");
            if (!fs::exists(emb_path))
                throw std::runtime_error("no embedding at " + emb_path.string() +
                                         "; run 'embed' first");
            const Embedding emb = read_embedding_csv(emb_path);
            if (eval->parsed()) {
                eval_stage(cfg, features, emb, opt.algo, dir);
            } else if (detect->parsed()) {
                detect_stage(cfg, emb, opt.algo, dir);
            } else if (render->parsed()) {
                render_stage(cfg, ds, emb, opt.algo, dir);
            }
            return 0;
        };

        return for_each_combo(base, sweeps, opt.out_dir, run_stage);
    } catch (const ConfigError& e) {
        std::cerr << "holescope: " << e.what() << "\n";
        return static_cast<int>(Stage::kConfig);
    } catch (const std::exception& e) {
        std::cerr << "holescope: " << e.what() << "\n";
        if (scene_gen->parsed()) return static_cast<int>(Stage::kScene);
        if (embed->parsed()) return static_cast<int>(Stage::kEmbed);
        if (eval->parsed()) return static_cast<int>(Stage::kEval);
        if (detect->parsed()) return static_cast<int>(Stage::kDetect);
        if (render->parsed()) return static_cast<int>(Stage::kRender);
        return 1;
    }
}
