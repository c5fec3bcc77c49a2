#include "pipeline/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace como::pipeline {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v)
{
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

std::string fmt(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string resolve(const std::string& v, const std::string& base)
{
    if (v.empty() || base.empty() || fs::path(v).is_absolute()) return v;
    return (fs::path(base) / v).lexically_normal().string();
}

struct Entry {
    const char* key;
    const char* doc;
    std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

#define SIZE_ENTRY(name, field, doc)                                                                                   \
    Entry{name, doc, [](PipelineConfig& c, const std::string& v, const std::string&) {                                \
              c.field = parse_number<std::size_t>(name, v);                                                            \
          },                                                                                                           \
          [](const PipelineConfig& c) { return std::to_string(c.field); }}
#define REAL_ENTRY(name, field, doc)                                                                                   \
    Entry{name, doc, [](PipelineConfig& c, const std::string& v, const std::string&) {                                \
              c.field = parse_number<double>(name, v);                                                                 \
          },                                                                                                           \
          [](const PipelineConfig& c) { return fmt(c.field); }}
#define PATH_ENTRY(name, field, doc)                                                                                   \
    Entry{name, doc, [](PipelineConfig& c, const std::string& v, const std::string& base) {                           \
              c.field = resolve(v, base);                                                                              \
          },                                                                                                           \
          [](const PipelineConfig& c) { return c.field; }}

const std::vector<Entry>& entries()
{
    static const std::vector<Entry> table{
        PATH_ENTRY("buildings", buildings, "building footprints GeoJSON FeatureCollection (projected meters)"),
        PATH_ENTRY("blocks", blocks, "block polygons GeoJSON with a `function` property"),
        PATH_ENTRY("neighborhoods", neighborhoods, "optional neighborhood polygons GeoJSON (id, name)"),
        PATH_ENTRY("out", out, "output directory"),
        Entry{"center_x", "city centre easting, required for the analysis stage",
              [](PipelineConfig& c, const std::string& v, const std::string&) {
                  const double x = parse_number<double>("center_x", v);
                  c.center = geo::Point{x, c.center ? c.center->y : 0.0};
              },
              [](const PipelineConfig& c) { return c.center ? fmt(c.center->x) : std::string(); }},
        Entry{"center_y", "city centre northing, required for the analysis stage",
              [](PipelineConfig& c, const std::string& v, const std::string&) {
                  const double y = parse_number<double>("center_y", v);
                  c.center = geo::Point{c.center ? c.center->x : 0.0, y};
              },
              [](const PipelineConfig& c) { return c.center ? fmt(c.center->y) : std::string(); }},
        Entry{"seed", "global seed",
              [](PipelineConfig& c, const std::string& v, const std::string&) {
                  c.seed = parse_number<std::uint64_t>("seed", v);
              },
              [](const PipelineConfig& c) { return std::to_string(c.seed); }},
        Entry{"deterministic", "single-threaded, reproducible execution",
              [](PipelineConfig& c, const std::string& v, const std::string&) {
                  c.deterministic = parse_bool("deterministic", v);
              },
              [](const PipelineConfig& c) { return std::string(c.deterministic ? "true" : "false"); }},
        REAL_ENTRY("tessellation.spacing", tessellation.spacing, "boundary densification step in meters"),
        SIZE_ENTRY("model.conv_layers", model.conv_layers, "graph convolution + pooling rounds"),
        SIZE_ENTRY("model.hidden", model.hidden, "hidden width"),
        REAL_ENTRY("model.pool_rate", model.pool_rate, "fraction of nodes kept per pooling layer"),
        SIZE_ENTRY("model.batch_size", model.batch_size, "graphs per optimizer step"),
        REAL_ENTRY("model.lr", model.lr, "learning rate"),
        SIZE_ENTRY("model.max_epochs", model.max_epochs, "epoch cap"),
        SIZE_ENTRY("model.patience", model.patience, "epochs without validation gain before stopping"),
        REAL_ENTRY("model.split_train", model.split_train, "train share"),
        REAL_ENTRY("model.split_val", model.split_val, "validation share"),
        REAL_ENTRY("model.split_test", model.split_test, "test share"),
        SIZE_ENTRY("model.folds", model.folds, "cross-validation folds"),
        Entry{"model.optimizer", "adam or sgd",
              [](PipelineConfig& c, const std::string& v, const std::string&) { c.model.optimizer = v; },
              [](const PipelineConfig& c) { return c.model.optimizer; }},
        SIZE_ENTRY("explain.steps", explainer.steps, "mask optimisation steps"),
        REAL_ENTRY("explain.lr", explainer.lr, "mask learning rate"),
        REAL_ENTRY("explain.edge_size", explainer.edge_size, "edge mask size weight"),
        REAL_ENTRY("explain.feature_size", explainer.feature_size, "feature mask size weight"),
        REAL_ENTRY("explain.edge_entropy", explainer.edge_entropy, "edge mask entropy weight"),
        REAL_ENTRY("explain.feature_entropy", explainer.feature_entropy, "feature mask entropy weight"),
        REAL_ENTRY("explain.init_std", explainer.init_std, "std of initial mask logits"),
        REAL_ENTRY("explain.edge_threshold", explainer.edge_threshold, "core subgraph edge threshold"),
        REAL_ENTRY("explain.feature_threshold", explainer.feature_threshold, "key feature threshold"),
        Entry{"explain.mode", "threshold semantics: normalized or raw",
              [](PipelineConfig& c, const std::string& v, const std::string&) { c.explainer.mode = explain::parse_mode(v); },
              [](const PipelineConfig& c) { return std::string(explain::mode_name(c.explainer.mode)); }},
        REAL_ENTRY("dominance.general", dominance.general, "dominance share for non-residential blocks"),
        REAL_ENTRY("dominance.residential", dominance.residential, "dominance share for residential blocks"),
        SIZE_ENTRY("dominance.min_count", dominance.min_count, "minimum buildings of the dominant type"),
        SIZE_ENTRY("symbolic.clusters", clusters, "morphological types"),
        SIZE_ENTRY("symbolic.restarts", restarts, "k-means restarts"),
    };
    return table;
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value, const std::string& base_dir)
{
    for (const auto& e : entries())
        if (key == e.key) {
            e.set(*this, value, base_dir);
            return;
        }
    throw ConfigError("unknown config key '" + key + "'");
}

void PipelineConfig::validate() const
{
    model.validate();
    explainer.validate();
    for (double t : {explainer.edge_threshold, explainer.feature_threshold, dominance.general, dominance.residential})
        if (!(t > 0.0 && t <= 1.0)) throw ConfigError("thresholds must lie in (0, 1]");
    if (!(tessellation.spacing > 0.0)) throw ConfigError("tessellation.spacing must be positive");
    if (clusters == 0 || restarts == 0) throw ConfigError("symbolic.clusters and symbolic.restarts must be positive");
    if (model.in_features != morpho::kFeatureCount) throw ConfigError("the model reads exactly 22 features");
    if (out.empty()) throw ConfigError("out must name a directory");
}

std::string PipelineConfig::to_text() const
{
    std::string s;
    for (const auto& e : entries()) s += std::string(e.key) + " = " + e.get(*this) + "\n";
    return s;
}

PipelineConfig parse_config(std::istream& in, const std::string& base_dir)
{
    PipelineConfig c;
    bool has_x = false, has_y = false;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            c.set(key, value, base_dir);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(no) + ": " + e.what());
        }
        has_x |= key == "center_x";
        has_y |= key == "center_y";
    }
    if (has_x != has_y) throw ConfigError("center_x and center_y must be given together");
    return c;
}

PipelineConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_config(in, fs::path(path).parent_path().string());
}

std::string config_keys()
{
    std::ostringstream os;
    for (const auto& e : entries()) os << e.key << "\t" << e.doc << "\n";
    return os.str();
}

}  // namespace como::pipeline
