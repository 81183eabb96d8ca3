#include "holescope/config.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace holescope {
namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ConfigError("config: unknown key \"" + key + "\" in " + where);
    }
}

Rect parse_rect(const json& j, const std::string& where) {
    reject_unknown_keys(j, where, {"x_min", "x_max", "y_min", "y_max"});
    Rect r;
    r.x_min = j.at("x_min").get<double>();
    r.x_max = j.at("x_max").get<double>();
    r.y_min = j.at("y_min").get<double>();
    r.y_max = j.at("y_max").get<double>();
    return r;
}

json rect_json(const Rect& r) {
    json j;
    j["x_min"] = r.x_min;
    j["x_max"] = r.x_max;
    j["y_min"] = r.y_min;
    j["y_max"] = r.y_max;
    return j;
}

Representation parse_representation(const std::string& s) {
    if (s == "virtual") return Representation::kVirtual;
    if (s == "element") return Representation::kElement;
    throw ConfigError("config: unknown representation \"" + s + "\"");
}

FeatureComponent parse_component(const std::string& s) {
    if (s == "abs") return FeatureComponent::kAbs;
    if (s == "angle") return FeatureComponent::kAngle;
    if (s == "real") return FeatureComponent::kReal;
    if (s == "imag") return FeatureComponent::kImag;
    throw ConfigError("config: unknown feature component \"" + s + "\"");
}

std::string representation_name(Representation r) {
    return r == Representation::kVirtual ? "virtual" : "element";
}

std::string component_name(FeatureComponent c) {
    switch (c) {
        case FeatureComponent::kAbs: return "abs";
        case FeatureComponent::kAngle: return "angle";
        case FeatureComponent::kReal: return "real";
        case FeatureComponent::kImag: return "imag";
    }
    return "abs";
}

}  // namespace

void PipelineConfig::validate() const {
    grid.validate();
    array.validate();
    vgrid.validate();
    eval.raster.validate();
    if (umap.dim < 1) throw ConfigError("config: umap.dim must be >= 1");
    if (umap.n < 1) throw ConfigError("config: umap.n must be >= 1");
    if (umap.d_min < 0.0) throw ConfigError("config: umap.d_min must be >= 0");
    if (umap.epochs < 1) throw ConfigError("config: umap.epochs must be >= 1");
    if (eval.tw_k < 1) throw ConfigError("config: eval.tw_k must be >= 1");
    for (const std::string& b : baselines) {
        if (b != "pca" && b != "spectral")
            throw ConfigError("config: unknown baseline \"" + b + "\"");
    }
    for (const Rect& r : geometry.blockers) {
        if (!(r.x_max > r.x_min) || !(r.y_max > r.y_min))
            throw ConfigError("config: degenerate blocker rectangle");
    }
    for (const Reflector& w : geometry.reflectors) {
        if (std::abs(w.gamma) > 1.0 + 1e-12)
            throw ConfigError("config: reflector gain magnitude exceeds 1");
    }
}

PipelineConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }

    reject_unknown_keys(doc, "top level",
                        {"grid", "bs", "blockers", "reflectors", "carve_regions", "rss0_db",
                         "snr_db", "array", "features", "virtual", "umap", "baselines", "eval",
                         "export_features", "export_graph", "seed"});

    PipelineConfig cfg;

    if (doc.contains("grid")) {
        const json& g = doc["grid"];
        reject_unknown_keys(g, "grid", {"rows", "cols", "spacing", "origin", "ue_height"});
        cfg.grid.rows = g.value("rows", cfg.grid.rows);
        cfg.grid.cols = g.value("cols", cfg.grid.cols);
        cfg.grid.spacing = g.value("spacing", cfg.grid.spacing);
        cfg.grid.ue_height = g.value("ue_height", cfg.grid.ue_height);
        if (g.contains("origin")) {
            const json& o = g["origin"];
            reject_unknown_keys(o, "grid.origin", {"x", "y", "z"});
            cfg.grid.origin.x = o.value("x", 0.0);
            cfg.grid.origin.y = o.value("y", 0.0);
            cfg.grid.origin.z = o.value("z", 0.0);
        }
    }

    if (doc.contains("bs")) {
        const json& b = doc["bs"];
        reject_unknown_keys(b, "bs", {"x", "y", "z"});
        cfg.geometry.bs_location.x = b.value("x", 0.0);
        cfg.geometry.bs_location.y = b.value("y", 0.0);
        cfg.geometry.bs_location.z = b.value("z", 0.0);
    }

    if (doc.contains("blockers")) {
        for (const json& j : doc["blockers"])
            cfg.geometry.blockers.push_back(parse_rect(j, "blockers[]"));
    }
    if (doc.contains("reflectors")) {
        for (const json& j : doc["reflectors"]) {
            reject_unknown_keys(j, "reflectors[]",
                                {"x1", "y1", "x2", "y2", "gamma_re", "gamma_im"});
            Reflector w;
            w.x1 = j.at("x1").get<double>();
            w.y1 = j.at("y1").get<double>();
            w.x2 = j.at("x2").get<double>();
            w.y2 = j.at("y2").get<double>();
            w.gamma = {j.value("gamma_re", -0.7), j.value("gamma_im", 0.0)};
            cfg.geometry.reflectors.push_back(w);
        }
    }
    if (doc.contains("carve_regions")) {
        for (const json& j : doc["carve_regions"])
            cfg.carve_regions.push_back(parse_rect(j, "carve_regions[]"));
    }

    cfg.rss0_db = doc.value("rss0_db", cfg.rss0_db);
    if (doc.contains("snr_db") && !doc["snr_db"].is_null())
        cfg.snr_db = doc["snr_db"].get<double>();

    if (doc.contains("array")) {
        const json& a = doc["array"];
        reject_unknown_keys(a, "array", {"n", "fc_hz", "w_hz", "f"});
        cfg.array.num_antennas = a.value("n", cfg.array.num_antennas);
        cfg.array.carrier_frequency_hz = a.value("fc_hz", cfg.array.carrier_frequency_hz);
        cfg.array.bandwidth_hz = a.value("w_hz", cfg.array.bandwidth_hz);
        cfg.array.num_subcarriers = a.value("f", cfg.array.num_subcarriers);
    }
    cfg.vgrid.bandwidth_hz = cfg.array.bandwidth_hz;

    if (doc.contains("features")) {
        const json& f = doc["features"];
        reject_unknown_keys(f, "features", {"representation", "component", "normalize"});
        if (f.contains("representation"))
            cfg.features.representation = parse_representation(f["representation"]);
        if (f.contains("component"))
            cfg.features.component = parse_component(f["component"]);
        cfg.features.normalize = f.value("normalize", cfg.features.normalize);
    }

    if (doc.contains("virtual")) {
        const json& v = doc["virtual"];
        reject_unknown_keys(v, "virtual", {"n_d", "t_d"});
        cfg.vgrid.num_angle_bins = v.value("n_d", cfg.vgrid.num_angle_bins);
        cfg.vgrid.num_delay_bins = v.value("t_d", cfg.vgrid.num_delay_bins);
    }

    if (doc.contains("umap")) {
        const json& u = doc["umap"];
        reject_unknown_keys(u, "umap",
                            {"dim", "n", "d_min", "epochs", "learning_rate", "neg_samples",
                             "random_init"});
        cfg.umap.dim = u.value("dim", cfg.umap.dim);
        cfg.umap.n = u.value("n", cfg.umap.n);
        cfg.umap.d_min = u.value("d_min", cfg.umap.d_min);
        cfg.umap.epochs = u.value("epochs", cfg.umap.epochs);
        cfg.umap.learning_rate = u.value("learning_rate", cfg.umap.learning_rate);
        cfg.umap.neg_samples = u.value("neg_samples", cfg.umap.neg_samples);
        cfg.umap.random_init = u.value("random_init", cfg.umap.random_init);
    }

    if (doc.contains("baselines")) {
        for (const json& b : doc["baselines"]) cfg.baselines.push_back(b.get<std::string>());
    }

    if (doc.contains("eval")) {
        const json& e = doc["eval"];
        reject_unknown_keys(e, "eval", {"tw_k", "raster"});
        cfg.eval.tw_k = e.value("tw_k", cfg.eval.tw_k);
        if (e.contains("raster")) {
            const json& r = e["raster"];
            reject_unknown_keys(r, "eval.raster",
                                {"grid_size", "closing_radius", "min_hole_area"});
            cfg.eval.raster.grid_size = r.value("grid_size", cfg.eval.raster.grid_size);
            cfg.eval.raster.closing_radius =
                r.value("closing_radius", cfg.eval.raster.closing_radius);
            cfg.eval.raster.min_hole_area =
                r.value("min_hole_area", cfg.eval.raster.min_hole_area);
        }
    }

    cfg.export_features = doc.value("export_features", cfg.export_features);
    cfg.export_graph = doc.value("export_graph", cfg.export_graph);
    cfg.seed = doc.value("seed", cfg.seed);

    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string config_json(const PipelineConfig& cfg) {
    json doc;  // std::map-backed: keys serialize alphabetically
    doc["grid"] = {{"rows", cfg.grid.rows},
                   {"cols", cfg.grid.cols},
                   {"spacing", cfg.grid.spacing},
                   {"origin", {{"x", cfg.grid.origin.x},
                               {"y", cfg.grid.origin.y},
                               {"z", cfg.grid.origin.z}}},
                   {"ue_height", cfg.grid.ue_height}};
    doc["bs"] = {{"x", cfg.geometry.bs_location.x},
                 {"y", cfg.geometry.bs_location.y},
                 {"z", cfg.geometry.bs_location.z}};
    doc["blockers"] = json::array();
    for (const Rect& r : cfg.geometry.blockers) doc["blockers"].push_back(rect_json(r));
    doc["reflectors"] = json::array();
    for (const Reflector& w : cfg.geometry.reflectors) {
        doc["reflectors"].push_back({{"x1", w.x1},
                                     {"y1", w.y1},
                                     {"x2", w.x2},
                                     {"y2", w.y2},
                                     {"gamma_re", w.gamma.real()},
                                     {"gamma_im", w.gamma.imag()}});
    }
    doc["carve_regions"] = json::array();
    for (const Rect& r : cfg.carve_regions) doc["carve_regions"].push_back(rect_json(r));
    doc["rss0_db"] = cfg.rss0_db;
    if (std::isfinite(cfg.snr_db)) {
        doc["snr_db"] = cfg.snr_db;
    } else {
        doc["snr_db"] = nullptr;
    }
    doc["array"] = {{"n", cfg.array.num_antennas},
                    {"fc_hz", cfg.array.carrier_frequency_hz},
                    {"w_hz", cfg.array.bandwidth_hz},
                    {"f", cfg.array.num_subcarriers}};
    doc["features"] = {{"representation", representation_name(cfg.features.representation)},
                       {"component", component_name(cfg.features.component)},
                       {"normalize", cfg.features.normalize}};
    doc["virtual"] = {{"n_d", cfg.vgrid.num_angle_bins}, {"t_d", cfg.vgrid.num_delay_bins}};
    doc["umap"] = {{"dim", cfg.umap.dim},
                   {"n", cfg.umap.n},
                   {"d_min", cfg.umap.d_min},
                   {"epochs", cfg.umap.epochs},
                   {"learning_rate", cfg.umap.learning_rate},
                   {"neg_samples", cfg.umap.neg_samples},
                   {"random_init", cfg.umap.random_init}};
    doc["baselines"] = cfg.baselines;
    doc["eval"] = {{"tw_k", cfg.eval.tw_k},
                   {"raster", {{"grid_size", cfg.eval.raster.grid_size},
                               {"closing_radius", cfg.eval.raster.closing_radius},
                               {"min_hole_area", cfg.eval.raster.min_hole_area}}}};
    doc["export_features"] = cfg.export_features;
    doc["export_graph"] = cfg.export_graph;
    doc["seed"] = cfg.seed;
    doc["deterministic"] = cfg.deterministic;
    doc["threads"] = cfg.threads;
    return doc.dump(2);
}

std::string config_hash(const PipelineConfig& cfg) {
    const std::string canonical = config_json(cfg);
    std::uint64_t hash = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : canonical) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

void apply_param(PipelineConfig& cfg, const std::string& name, double value) {
    if (name == "n") {
        cfg.umap.n = static_cast<int>(value);
    } else if (name == "dmin" || name == "d_min") {
        cfg.umap.d_min = value;
    } else if (name == "epochs") {
        cfg.umap.epochs = static_cast<int>(value);
    } else if (name == "lr" || name == "learning_rate") {
        cfg.umap.learning_rate = value;
    } else if (name == "neg" || name == "neg_samples") {
        cfg.umap.neg_samples = static_cast<int>(value);
    } else if (name == "tw_k") {
        cfg.eval.tw_k = static_cast<int>(value);
    } else if (name == "raster_g") {
        cfg.eval.raster.grid_size = static_cast<int>(value);
    } else if (name == "snr") {
        cfg.snr_db = value;
    } else {
        throw ConfigError("config: unknown sweep parameter \"" + name + "\"");
    }
}

}  // namespace holescope
