#include "pipeline/stages.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "analysis/efficiency.hpp"
#include "explain/explainer.hpp"
#include "geo/dataset.hpp"
#include "gnn/bundle.hpp"
#include "gnn/metrics.hpp"
#include "gnn/train.hpp"
#include "graph/morphograph.hpp"
#include "morpho/morphometrics.hpp"
#include "pipeline/digest.hpp"
#include "pipeline/svg.hpp"
#include "symbolic/symbolic.hpp"

namespace como::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kStageNames[] = {"ingest", "features", "graph", "train", "explain", "symbolize", "analyze"};

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else if (c != '\r') {
            out.back() += c;
        }
    }
    return out;
}

std::string real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fn_name(std::size_t f) { return std::string(geo::function_name(static_cast<geo::UrbanFunction>(f))); }

std::vector<Stage> upstream(Stage s)
{
    switch (s) {
    case Stage::ingest: return {};
    case Stage::features: return {Stage::ingest};
    case Stage::graph: return {Stage::ingest, Stage::features};
    case Stage::train: return {Stage::graph};
    case Stage::explain: return {Stage::graph, Stage::train};
    case Stage::symbolize: return {Stage::ingest, Stage::graph, Stage::explain};
    case Stage::analyze: return {Stage::ingest, Stage::explain, Stage::symbolize};
    }
    return {};
}

std::vector<std::string> config_prefixes(Stage s)
{
    switch (s) {
    case Stage::ingest: return {};
    case Stage::features: return {"tessellation."};
    case Stage::graph: return {};
    case Stage::train: return {"model.", "seed "};
    case Stage::explain: return {"explain.", "seed "};
    case Stage::symbolize: return {"symbolic.", "dominance.", "seed "};
    case Stage::analyze: return {"center_"};
    }
    return {};
}

json read_json_file(const std::string& path)
{
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw DataError(path + " is not valid JSON: " + e.what());
    }
}

std::vector<graph::MorphGraph> load_graphs(const std::string& path)
{
    std::vector<graph::MorphGraph> out;
    for (const auto& g : read_json_file(path)) out.push_back(graph::graph_from_json(g));
    return out;
}

struct Prediction {
    std::size_t label = 0, predicted = 0, fold = 0;
};

std::map<std::string, Prediction> load_predictions(const std::string& path)
{
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);
    std::map<std::string, Prediction> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() < 4) throw DataError("malformed row in " + path);
        const auto label = geo::parse_function(f[1]);
        const auto pred = geo::parse_function(f[2]);
        if (!label || !pred) throw DataError("unknown function label in " + path);
        out[f[0]] = {static_cast<std::size_t>(*label), static_cast<std::size_t>(*pred), std::stoul(f[3])};
    }
    return out;
}

ordered_json polygon_feature(ordered_json props, const geo::Polygon& p)
{
    ordered_json f;
    f["type"] = "Feature";
    f["properties"] = std::move(props);
    f["geometry"] = geo::polygon_to_geojson(p);
    return f;
}

geo::Dataset load_dataset(const Runner& r)
{
    std::ifstream b(r.path("ingest/buildings.geojson")), k(r.path("ingest/blocks.geojson"));
    if (!b || !k) throw StageError("ingest outputs are missing");
    return geo::parse_dataset(b, k);
}

}  // namespace

std::string_view stage_name(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

std::optional<Stage> parse_stage(std::string_view name)
{
    for (Stage s : kStages)
        if (stage_name(s) == name) return s;
    return std::nullopt;
}

std::string_view version() { return "0.1.0"; }

Runner::Runner(PipelineConfig cfg, RunOptions options) : cfg_(std::move(cfg)), opt_(std::move(options))
{
    cfg_.validate();
}

std::string Runner::path(const std::string& rel) const { return (fs::path(cfg_.out) / rel).string(); }

void Runner::note(const std::string& msg) const
{
    if (opt_.log) opt_.log(msg);
}

void Runner::emit(StageResult& r, const std::string& rel, const std::string& data) const
{
    write_file(path(rel), data);
    r.outputs[rel] = sha256_hex(data);
}

std::string Runner::cache_key(Stage s) const
{
    std::string material = "como " + std::string(version()) + "\nstage " + std::string(stage_name(s)) + "\n";
    std::istringstream text(cfg_.to_text());
    std::string line;
    while (std::getline(text, line))
        for (const auto& p : config_prefixes(s))
            if (line.rfind(p, 0) == 0) material += line + "\n";
    auto input = [&](const char* tag, const std::string& file) {
        if (!file.empty()) material += std::string(tag) + " " + sha256_file(file) + "\n";
    };
    if (s == Stage::ingest) {
        input("buildings", cfg_.buildings);
        input("blocks", cfg_.blocks);
        input("neighborhoods", cfg_.neighborhoods);
    }
    for (Stage u : upstream(s)) {
        const std::string rec = path(std::string(stage_name(u)) + "/stage.json");
        if (!fs::exists(rec))
            throw StageError("stage '" + std::string(stage_name(s)) + "' needs '" + std::string(stage_name(u)) +
                             "' to be run first");
        const json j = read_json_file(rec);
        material += "upstream " + std::string(stage_name(u)) + " " + j.value("key", "") + "\n";
        for (const auto& [file, digest] : j.at("outputs").items()) material += file + " " + digest.get<std::string>() + "\n";
    }
    return sha256_hex(material);
}

bool Runner::cache_valid(Stage s, const std::string& key) const
{
    const std::string rec = path(std::string(stage_name(s)) + "/stage.json");
    if (!fs::exists(rec)) return false;
    try {
        const json j = json::parse(read_file(rec));
        if (j.value("key", "") != key) return false;
        for (const auto& [file, digest] : j.at("outputs").items())
            if (!fs::exists(path(file)) || sha256_file(path(file)) != digest.get<std::string>()) return false;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

StageResult Runner::run(Stage s)
{
    const auto start = std::chrono::steady_clock::now();
    StageResult r;
    r.stage = s;
    const std::string name(stage_name(s));
    const std::string key = cache_key(s);
    if (opt_.resume && cache_valid(s, key)) {
        const json j = read_json_file(path(name + "/stage.json"));
        for (const auto& [file, digest] : j.at("outputs").items()) r.outputs[file] = digest.get<std::string>();
        for (const auto& n : j.value("notes", json::array())) r.notes.push_back(n.get<std::string>());
        r.cached = true;
        note(name + ": cached");
        return r;
    }
    note(name + ": running");
    std::error_code ec;
    fs::remove(path(name + "/stage.json"), ec);
    try {
        switch (s) {
        case Stage::ingest: run_ingest(r); break;
        case Stage::features: run_features(r); break;
        case Stage::graph: run_graph(r); break;
        case Stage::train: run_train(r); break;
        case Stage::explain: run_explain(r); break;
        case Stage::symbolize: run_symbolize(r); break;
        case Stage::analyze: run_analyze(r); break;
        }
    } catch (const Error& e) {
        throw Error(e.kind(), "stage '" + name + "': " + e.what());
    } catch (const std::exception& e) {
        throw StageError("stage '" + name + "': " + e.what());
    }
    ordered_json rec;
    rec["stage"] = name;
    rec["key"] = key;
    rec["outputs"] = r.outputs;
    rec["notes"] = r.notes;
    write_file(path(name + "/stage.json"), rec.dump(2) + "\n");
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    note(name + ": done");
    return r;
}

std::vector<StageResult> Runner::run_all()
{
    std::vector<StageResult> results;
    ordered_json timings = ordered_json::object();
    auto flush = [&] {
        write_manifest();
        write_file(path("timings.json"), timings.dump(2) + "\n");
    };
    for (Stage s : kStages) {
        try {
            results.push_back(run(s));
        } catch (...) {
            timings[std::string(stage_name(s))] = {{"status", "failed"}};
            flush();
            throw;
        }
        timings[std::string(stage_name(s))] = {{"seconds", results.back().seconds}, {"cached", results.back().cached}};
    }
    flush();
    return results;
}

void Runner::write_manifest() const
{
    ordered_json m;
    m["format"] = "como-manifest";
    m["software"] = "como " + std::string(version());
    std::string cfg_text;
    std::istringstream text(cfg_.to_text());
    std::string line;
    while (std::getline(text, line))
        if (line.rfind("buildings ", 0) != 0 && line.rfind("blocks ", 0) != 0 && line.rfind("neighborhoods ", 0) != 0 &&
            line.rfind("out ", 0) != 0)
            cfg_text += line + "\n";
    m["config_hash"] = sha256_hex(cfg_text);
    m["seed"] = cfg_.seed;
    m["deterministic"] = cfg_.deterministic;
    ordered_json inputs = ordered_json::object();
    if (!cfg_.buildings.empty() && fs::exists(cfg_.buildings)) inputs["buildings"] = sha256_file(cfg_.buildings);
    if (!cfg_.blocks.empty() && fs::exists(cfg_.blocks)) inputs["blocks"] = sha256_file(cfg_.blocks);
    if (!cfg_.neighborhoods.empty() && fs::exists(cfg_.neighborhoods))
        inputs["neighborhoods"] = sha256_file(cfg_.neighborhoods);
    m["inputs"] = inputs;
    auto stages = ordered_json::array();
    for (Stage s : kStages) {
        const std::string rec = path(std::string(stage_name(s)) + "/stage.json");
        ordered_json st;
        st["name"] = std::string(stage_name(s));
        if (!fs::exists(rec)) {
            st["status"] = "not run";
        } else {
            const json j = read_json_file(rec);
            st["status"] = "complete";
            st["key"] = j.value("key", "");
            st["outputs"] = j.at("outputs");
            st["notes"] = j.value("notes", json::array());
        }
        stages.push_back(st);
    }
    m["stages"] = stages;
    write_file(path("manifest.json"), m.dump(2) + "\n");
}

void Runner::run_ingest(StageResult& r)
{
    if (cfg_.buildings.empty() || cfg_.blocks.empty()) throw ConfigError("buildings and blocks inputs are required");
    std::ifstream b(cfg_.buildings), k(cfg_.blocks);
    if (!b) throw IoError("cannot open " + cfg_.buildings);
    if (!k) throw IoError("cannot open " + cfg_.blocks);
    const geo::Dataset ds = geo::parse_dataset(b, k);

    ordered_json bfc{{"type", "FeatureCollection"}, {"features", ordered_json::array()}};
    for (const auto& x : ds.buildings) bfc["features"].push_back(polygon_feature({{"id", x.id}, {"block_id", x.block_id}}, x.footprint));
    ordered_json kfc{{"type", "FeatureCollection"}, {"features", ordered_json::array()}};
    std::array<std::size_t, geo::kFunctionCount> eligible{};
    std::size_t n_eligible = 0;
    for (const auto& x : ds.blocks) {
        kfc["features"].push_back(polygon_feature({{"id", x.id},
                                                   {"function", std::string(geo::function_name(x.function))},
                                                   {"buildings", x.building_ids.size()},
                                                   {"eligible", x.eligible}},
                                                  x.boundary));
        if (x.eligible) {
            ++eligible[static_cast<std::size_t>(x.function)];
            ++n_eligible;
        }
    }
    emit(r, "ingest/buildings.geojson", bfc.dump() + "\n");
    emit(r, "ingest/blocks.geojson", kfc.dump() + "\n");

    std::string diag = "source,feature_index,feature_id,rejected,message\n";
    for (const auto& d : ds.diagnostics)
        diag += d.source + "," + std::to_string(d.feature_index) + "," + csv_field(d.feature_id) + "," +
                (d.rejected ? "1" : "0") + "," + csv_field(d.message) + "\n";
    emit(r, "ingest/diagnostics.csv", diag);

    if (!cfg_.neighborhoods.empty()) {
        std::ifstream n(cfg_.neighborhoods);
        if (!n) throw IoError("cannot open " + cfg_.neighborhoods);
        ordered_json nfc{{"type", "FeatureCollection"}, {"features", ordered_json::array()}};
        for (const auto& h : geo::parse_neighborhoods(n))
            nfc["features"].push_back(polygon_feature({{"id", h.id}, {"name", h.name}}, h.boundary));
        emit(r, "ingest/neighborhoods.geojson", nfc.dump() + "\n");
    } else {
        r.notes.push_back("no neighborhoods file; the neighborhood step will be skipped");
    }

    ordered_json summary;
    summary["buildings"] = ds.buildings.size();
    summary["blocks"] = ds.blocks.size();
    summary["eligible_blocks"] = n_eligible;
    ordered_json per = ordered_json::object();
    for (std::size_t f = 0; f < geo::kFunctionCount; ++f) per[fn_name(f)] = eligible[f];
    summary["eligible_by_function"] = per;
    summary["rejected_features"] = std::count_if(ds.diagnostics.begin(), ds.diagnostics.end(), [](const auto& d) { return d.rejected; });
    emit(r, "ingest/summary.json", summary.dump(2) + "\n");
    if (n_eligible == 0) throw DataError("no block has enough buildings to form a graph");
}

void Runner::run_features(StageResult& r)
{
    const geo::Dataset ds = load_dataset(*this);
    std::map<std::string, const geo::Building*> by_id;
    for (const auto& b : ds.buildings) by_id[b.id] = &b;
    std::vector<morpho::BuildingFeatures> rows;
    std::string skipped = "block_id,reason\n";
    std::size_t n_skipped = 0;
    for (const auto& block : ds.blocks) {
        if (!block.eligible) continue;
        std::vector<geo::Building> members;
        for (const auto& id : block.building_ids) members.push_back(*by_id.at(id));
        try {
            auto f = morpho::block_features(block, members, cfg_.tessellation);
            rows.insert(rows.end(), f.begin(), f.end());
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::data && e.kind() != ErrorKind::degenerate) throw;
            skipped += csv_field(block.id) + "," + csv_field(e.what()) + "\n";
            ++n_skipped;
        }
    }
    std::ostringstream csv;
    morpho::write_features_csv(csv, rows);
    emit(r, "features/features.csv", csv.str());
    emit(r, "features/skipped.csv", skipped);
    if (n_skipped) r.notes.push_back(std::to_string(n_skipped) + " blocks skipped during feature extraction");
}

void Runner::run_graph(StageResult& r)
{
    const geo::Dataset ds = load_dataset(*this);
    std::istringstream in(read_file(path("features/features.csv")));
    const auto features = morpho::read_features_csv(in);
    const auto set = graph::build_graphs(ds, features);
    auto arr = ordered_json::array();
    std::size_t collinear = 0;
    for (const auto& g : set.graphs) {
        arr.push_back(graph::to_json(g));
        collinear += g.collinear_fallback;
    }
    emit(r, "graph/graphs.json", arr.dump() + "\n");
    std::string skipped = "block_id,reason\n";
    for (const auto& s : set.skipped) skipped += csv_field(s.block_id) + "," + csv_field(s.reason) + "\n";
    emit(r, "graph/skipped.csv", skipped);
    if (collinear) r.notes.push_back(std::to_string(collinear) + " graphs used the collinear fallback");
    if (set.graphs.empty()) throw DataError("no graphs could be built");
}

void Runner::run_train(StageResult& r)
{
    const auto graphs = load_graphs(path("graph/graphs.json"));
    std::string history = "fold,epoch,train_loss,val_accuracy\n";
    auto cv = gnn::cross_validate(graphs, cfg_.model, cfg_.seed, [&](std::size_t f, const gnn::EpochRecord& e) {
        history += std::to_string(f) + "," + std::to_string(e.epoch) + "," + real(e.train_loss) + "," + real(e.val_accuracy) + "\n";
    });
    for (const auto& w : cv.warnings) r.notes.push_back(w);

    std::string preds = "block_id,label,predicted,fold";
    for (std::size_t c = 0; c < geo::kFunctionCount; ++c) preds += ",p_" + fn_name(c);
    preds += "\n";
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        preds += csv_field(graphs[i].block_id) + "," + fn_name(static_cast<std::size_t>(graphs[i].label)) + "," +
                 fn_name(cv.predicted[i]) + "," + std::to_string(cv.fold_of[i]);
        for (Eigen::Index c = 0; c < cv.probabilities[i].cols(); ++c) preds += "," + real(cv.probabilities[i](0, c));
        preds += "\n";
    }

    ordered_json metrics;
    metrics["aggregate"] = gnn::to_json(cv.aggregate);
    auto folds = ordered_json::array();
    std::string summary = "fold,train,val,test,best_epoch,epochs,early_stopped,best_val_accuracy,test_accuracy,macro_f1,weighted_f1\n";
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
        const auto& fo = cv.folds[f];
        std::ostringstream bundle;
        gnn::save_bundle(bundle, fo.model, fo.standardizer);
        char name[48];
        std::snprintf(name, sizeof name, "train/fold_%02zu.model.json", f);
        emit(r, name, bundle.str());
        folds.push_back({{"fold", f},
                         {"train", fo.split.train.size()},
                         {"val", fo.split.val.size()},
                         {"test", fo.split.test.size()},
                         {"best_epoch", fo.training.best_epoch},
                         {"epochs", fo.training.history.size()},
                         {"early_stopped", fo.training.early_stopped},
                         {"metrics", gnn::to_json(fo.metrics)}});
        summary += std::to_string(f) + "," + std::to_string(fo.split.train.size()) + "," + std::to_string(fo.split.val.size()) +
                   "," + std::to_string(fo.split.test.size()) + "," + std::to_string(fo.training.best_epoch) + "," +
                   std::to_string(fo.training.history.size()) + "," + (fo.training.early_stopped ? "1" : "0") + "," +
                   real(fo.training.best_val_accuracy) + "," + real(fo.metrics.accuracy) + "," + real(fo.metrics.macro_f1) +
                   "," + real(fo.metrics.weighted_f1) + "\n";
    }
    metrics["folds"] = folds;
    metrics["warnings"] = cv.warnings;
    emit(r, "train/predictions.csv", preds);
    emit(r, "train/history.csv", history);
    emit(r, "train/folds.csv", summary);
    emit(r, "train/metrics.json", metrics.dump(2) + "\n");
}

StageResult Runner::evaluate()
{
    StageResult r;
    r.stage = Stage::train;
    const auto preds = load_predictions(path("train/predictions.csv"));
    gnn::Confusion conf{};
    for (const auto& [id, p] : preds) ++conf[p.predicted][p.label];
    const auto report = gnn::evaluate(conf);
    emit(r, "evaluate/metrics.json", gnn::to_json(report).dump(2) + "\n");
    std::string csv = "predicted\\true";
    for (std::size_t c = 0; c < geo::kFunctionCount; ++c) csv += "," + fn_name(c);
    csv += "\n";
    for (std::size_t p = 0; p < geo::kFunctionCount; ++p) {
        csv += fn_name(p);
        for (std::size_t t = 0; t < geo::kFunctionCount; ++t) csv += "," + std::to_string(conf[p][t]);
        csv += "\n";
    }
    emit(r, "evaluate/confusion.csv", csv);
    return r;
}

void Runner::run_explain(StageResult& r)
{
    const auto graphs = load_graphs(path("graph/graphs.json"));
    const auto preds = load_predictions(path("train/predictions.csv"));
    std::map<std::size_t, gnn::Bundle> bundles;
    auto bundle = [&](std::size_t fold) -> gnn::Bundle& {
        auto it = bundles.find(fold);
        if (it == bundles.end()) {
            char name[48];
            std::snprintf(name, sizeof name, "train/fold_%02zu.model.json", fold);
            std::ifstream in(path(name));
            if (!in) throw StageError(std::string("missing model ") + name);
            it = bundles.emplace(fold, gnn::load_bundle(in)).first;
        }
        return it->second;
    };

    std::vector<explain::Explanation> all;
    auto dump = ordered_json::array();
    std::size_t not_converged = 0;
    for (const auto& g : graphs) {
        const auto p = preds.find(g.block_id);
        if (p == preds.end()) throw DataError("no prediction for block " + g.block_id);
        if (p->second.predicted != p->second.label) continue;
        auto& b = bundle(p->second.fold);
        const auto input = gnn::make_input(g, b.standardizer);
        auto e = explain::explain_graph(b.model, input, p->second.label, g.block_id, cfg_.explainer,
                                        explain::graph_seed(cfg_.seed, g.block_id));
        if (!e.converged) ++not_converged;
        auto j = explain::to_json(e, input.edges);
        j["fold"] = p->second.fold;
        j["node_ids"] = g.node_ids;
        auto core = ordered_json::array();
        for (std::size_t v : e.core_nodes) core.push_back(g.node_ids[v]);
        j["core_buildings"] = core;
        dump.push_back(std::move(j));
        all.push_back(std::move(e));
    }
    const auto sel = explain::select_key_features(all, cfg_.explainer.feature_threshold, cfg_.explainer.mode);

    std::ostringstream csv;
    explain::write_importance_csv(csv, sel, cfg_.explainer.mode);
    ordered_json keys;
    keys["mode"] = std::string(explain::mode_name(cfg_.explainer.mode));
    keys["feature_threshold"] = cfg_.explainer.feature_threshold;
    keys["edge_threshold"] = cfg_.explainer.edge_threshold;
    auto classes = ordered_json::array();
    std::vector<std::string> feature_labels;
    for (std::size_t f = 0; f < morpho::kFeatureCount; ++f) feature_labels.emplace_back(morpho::feature_name(f));
    for (const auto& c : sel.classes) {
        auto names = ordered_json::array();
        for (std::size_t f : c.key_features) names.push_back(feature_labels[f]);
        classes.push_back({{"function", fn_name(c.label)},
                           {"explained", c.explained},
                           {"key_features", c.key_features},
                           {"key_feature_names", names},
                           {"normalized", c.normalized},
                           {"mean", c.mean}});
        std::vector<bool> marked(morpho::kFeatureCount, false);
        for (std::size_t f : c.key_features) marked[f] = true;
        emit(r, "explain/importance_" + fn_name(c.label) + ".svg",
             svg::bar_chart("Mean feature mask: " + fn_name(c.label), feature_labels,
                            std::vector<double>(c.mean.begin(), c.mean.end()), marked));
    }
    keys["classes"] = classes;
    auto skipped = ordered_json::array();
    for (std::size_t c : sel.skipped) skipped.push_back(fn_name(c));
    keys["skipped"] = skipped;

    emit(r, "explain/explanations.json", dump.dump() + "\n");
    emit(r, "explain/importance.csv", csv.str());
    emit(r, "explain/key_features.json", keys.dump(2) + "\n");
    if (not_converged) r.notes.push_back(std::to_string(not_converged) + " explanations did not converge and were excluded");
    if (all.empty()) r.notes.push_back("no correctly predicted graph to explain");
}

void Runner::run_symbolize(StageResult& r)
{
    const geo::Dataset ds = load_dataset(*this);
    const auto graphs = load_graphs(path("graph/graphs.json"));
    const json expl = read_json_file(path("explain/explanations.json"));
    const json keys = read_json_file(path("explain/key_features.json"));

    std::map<std::string, Eigen::VectorXd> raw;
    for (const auto& g : graphs)
        for (std::size_t i = 0; i < g.node_ids.size(); ++i) raw[g.node_ids[i]] = g.features.row(static_cast<Eigen::Index>(i)).transpose();

    // Usable explanations only: correct and converged.
    std::map<std::size_t, std::vector<std::pair<std::string, std::vector<std::string>>>> core_by_class;
    for (const auto& e : expl) {
        if (!e.at("converged").get<bool>()) continue;
        const auto label = geo::parse_function(e.at("label").get<std::string>());
        core_by_class[static_cast<std::size_t>(*label)].emplace_back(e.at("graph_id").get<std::string>(),
                                                                     e.at("core_buildings").get<std::vector<std::string>>());
    }

    std::string types_csv = "building_id,block_id,function,type,x,y\n";
    std::vector<symbolic::BlockConfiguration> configs;
    std::map<std::string, std::size_t> config_function;
    ordered_json summary;
    auto class_notes = ordered_json::array();
    for (const auto& c : keys.at("classes")) {
        const auto label = static_cast<std::size_t>(*geo::parse_function(c.at("function").get<std::string>()));
        const std::string fname = fn_name(label);
        auto cols = c.at("key_features").get<std::vector<std::size_t>>();
        const auto norm = c.at("normalized").get<std::vector<double>>();
        bool padded = false;
        if (cols.size() < 2) {
            std::vector<std::size_t> order(norm.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norm[a] > norm[b]; });
            for (std::size_t f : order)
                if (cols.size() < 2 && std::find(cols.begin(), cols.end(), f) == cols.end()) cols.push_back(f);
            std::sort(cols.begin(), cols.end());
            padded = true;
        }
        std::vector<std::pair<std::string, std::string>> members;  // building, block
        for (const auto& [block, core] : core_by_class[label])
            for (const auto& b : core) members.emplace_back(b, block);
        ordered_json note{{"function", fname}, {"features", cols}, {"padded", padded}, {"core_buildings", members.size()}};
        if (members.size() < std::max<std::size_t>(cfg_.clusters, 2)) {
            note["skipped"] = "fewer core buildings than types";
            r.notes.push_back(fname + ": " + std::to_string(members.size()) + " core buildings, fewer than " +
                              std::to_string(cfg_.clusters) + " types; skipped");
            class_notes.push_back(note);
            continue;
        }
        Eigen::MatrixXd x(static_cast<Eigen::Index>(members.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t k = 0; k < cols.size(); ++k)
                x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = raw.at(members[i].first)(static_cast<Eigen::Index>(cols[k]));
        const Eigen::MatrixXd z = morpho::Standardizer::fit(x).apply(x);
        const auto emb = symbolic::reduce_2d(z);
        const auto cl = symbolic::cluster_types(emb.points, cfg_.clusters, gnn::derive_seed(cfg_.seed, 300 + label), cfg_.restarts);

        std::map<std::string, std::vector<int>> block_types;
        std::vector<double> ex, ey;
        for (std::size_t i = 0; i < members.size(); ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            types_csv += csv_field(members[i].first) + "," + csv_field(members[i].second) + "," + fname + "," +
                         std::to_string(cl.types[i]) + "," + real(emb.points(row, 0)) + "," + real(emb.points(row, 1)) + "\n";
            block_types[members[i].second].push_back(cl.types[i]);
            ex.push_back(emb.points(row, 0));
            ey.push_back(emb.points(row, 1));
        }
        for (const auto& [block_id, types] : block_types) {
            const geo::Block* block = ds.find_block(block_id);
            if (!block) throw DataError("explained block " + block_id + " is not in the dataset");
            auto cfg = symbolic::classify_configuration(types, block->function, cfg_.dominance);
            cfg.block_id = block_id;
            configs.push_back({cfg, block->boundary});
            config_function[block_id] = label;
        }
        note["explained_variance"] = {emb.explained[0], emb.explained[1]};
        note["rank_deficient"] = emb.rank_deficient;
        note["inertia"] = cl.inertia;
        std::vector<std::vector<double>> centroids;
        for (Eigen::Index t = 0; t < cl.centroids.rows(); ++t) centroids.push_back({cl.centroids(t, 0), cl.centroids(t, 1)});
        note["centroids"] = centroids;
        class_notes.push_back(note);
        emit(r, "symbolize/embedding_" + fname + ".svg",
             svg::scatter("Core building types: " + fname, ex, ey, cl.types, "axis 1", "axis 2"));
    }
    summary["classes"] = class_notes;

    // Neighborhood step over residential blocks.
    std::map<std::string, std::string> hood_of, representative_of;
    std::string hoods_csv = "neighborhood_id,name,representative,blocks,histogram\n";
    const bool have_hoods = fs::exists(path("ingest/neighborhoods.geojson"));
    if (have_hoods) {
        std::ifstream in(path("ingest/neighborhoods.geojson"));
        const auto hoods = geo::parse_neighborhoods(in);
        std::vector<symbolic::BlockConfiguration> residential;
        for (const auto& c : configs)
            if (config_function[c.config.block_id] == static_cast<std::size_t>(geo::UrbanFunction::residential)) residential.push_back(c);
        const auto reg = symbolic::regional_representative(hoods, residential);
        for (const auto& s : reg.neighborhoods) {
            std::string hist;
            for (const auto& [kind, n] : s.histogram) hist += (hist.empty() ? "" : ";") + kind + ":" + std::to_string(n);
            hoods_csv += csv_field(s.neighborhood_id) + "," + csv_field(s.name) + "," + s.representative + "," +
                         std::to_string(s.blocks) + "," + hist + "\n";
            representative_of[s.neighborhood_id] = s.representative;
        }
        for (const auto& c : residential) {
            const auto centre = geo::centroid(c.boundary);
            for (const auto& h : hoods)
                if (geo::point_in_polygon(centre, h.boundary)) {
                    hood_of[c.config.block_id] = h.id;
                    break;
                }
        }
        summary["neighborhoods"] = {{"status", "complete"},
                                    {"empty", reg.empty_neighborhoods},
                                    {"unassigned_blocks", reg.unassigned_blocks}};
        emit(r, "symbolize/neighborhoods.csv", hoods_csv);
    } else {
        summary["neighborhoods"] = {{"status", "skipped"}, {"reason", "no neighborhoods file"}};
        r.notes.push_back("neighborhood step skipped: no neighborhoods file");
    }

    ordered_json fc{{"type", "FeatureCollection"}, {"features", ordered_json::array()}};
    std::sort(configs.begin(), configs.end(), [](const auto& a, const auto& b) { return a.config.block_id < b.config.block_id; });
    for (const auto& c : configs) {
        ordered_json props{{"id", c.config.block_id},
                           {"function", fn_name(config_function[c.config.block_id])},
                           {"kind", c.config.kind()},
                           {"share", c.config.share},
                           {"core_buildings", c.config.core_count}};
        const auto h = hood_of.find(c.config.block_id);
        if (h != hood_of.end()) {
            props["neighborhood"] = h->second;
            props["representative"] = representative_of.count(h->second) ? representative_of[h->second] : "";
        }
        fc["features"].push_back(polygon_feature(props, c.boundary));
    }
    emit(r, "symbolize/building_types.csv", types_csv);
    emit(r, "symbolize/configurations.geojson", fc.dump() + "\n");
    emit(r, "symbolize/summary.json", summary.dump(2) + "\n");
}

void Runner::run_analyze(StageResult& r)
{
    if (!cfg_.center) throw ConfigError("center_x and center_y are required for the analysis stage");
    const geo::Dataset ds = load_dataset(*this);
    const json expl = read_json_file(path("explain/explanations.json"));
    const json configs = read_json_file(path("symbolize/configurations.geojson"));

    std::map<std::string, const geo::Building*> by_id;
    for (const auto& b : ds.buildings) by_id[b.id] = &b;
    std::map<std::string, std::vector<std::string>> core_of;
    for (const auto& e : expl)
        if (e.at("converged").get<bool>()) core_of[e.at("graph_id").get<std::string>()] = e.at("core_buildings").get<std::vector<std::string>>();
    std::set<std::string> representative_blocks;
    for (const auto& f : configs.at("features")) {
        const auto& p = f.at("properties");
        if (p.contains("representative") && p.at("representative") == p.at("kind"))
            representative_blocks.insert(p.at("id").get<std::string>());
    }

    std::vector<analysis::EfficiencyRecord> records;
    std::string skipped = "block_id,group,reason\n";
    auto footprints = [&](const std::vector<std::string>& ids) {
        std::vector<geo::Polygon> out;
        for (const auto& id : ids) out.push_back(by_id.at(id)->footprint);
        return out;
    };
    for (const auto& block : ds.blocks) {
        if (!block.eligible || block.function != geo::UrbanFunction::residential) continue;
        std::vector<std::pair<analysis::Group, std::vector<std::string>>> subsets{{analysis::Group::raw, block.building_ids}};
        const auto core = core_of.find(block.id);
        if (core != core_of.end()) {
            subsets.emplace_back(analysis::Group::core, core->second);
            if (representative_blocks.count(block.id)) subsets.emplace_back(analysis::Group::representative, core->second);
        }
        for (const auto& [group, ids] : subsets) {
            const auto fp = footprints(ids);
            const auto out = analysis::efficiency(block.id, block.boundary, fp, *cfg_.center, group);
            if (out.record)
                records.push_back(*out.record);
            else
                skipped += csv_field(block.id) + "," + std::string(analysis::group_name(group)) + "," + csv_field(out.skipped_reason) + "\n";
        }
    }
    std::ostringstream csv;
    analysis::write_records_csv(csv, records);
    emit(r, "analyze/efficiency.csv", csv.str());
    emit(r, "analyze/skipped.csv", skipped);

    ordered_json report;
    report["intercept_note"] = "ln_a is the natural-log intercept, log10_a the base-10 one";
    report["center"] = {cfg_.center->x, cfg_.center->y};
    auto indicators = ordered_json::array();
    auto missing = ordered_json::array();
    for (const char* indicator : {"e_area", "e_num"}) {
        std::array<std::optional<analysis::RegressionFit>, 3> fits;
        for (std::size_t g = 0; g < 3; ++g) {
            std::vector<double> x, y;
            for (const auto& rec : records)
                if (rec.group == analysis::kGroups[g]) {
                    x.push_back(rec.distance);
                    y.push_back(std::string(indicator) == "e_area" ? rec.e_area : rec.e_num);
                }
            const std::string gname(analysis::group_name(analysis::kGroups[g]));
            try {
                fits[g] = analysis::fit_power(x, y).fit;
                emit(r, "analyze/fit_" + std::string(indicator) + "_" + gname + ".svg",
                     svg::power_fit(std::string(indicator) + " vs distance (" + gname + ")", x, y, fits[g]->log_a, fits[g]->b,
                                    "distance to centre [m]", indicator));
            } catch (const DataError& e) {
                missing.push_back({{"indicator", indicator}, {"group", gname}, {"reason", e.what()}});
                r.notes.push_back(std::string(indicator) + "/" + gname + ": " + e.what());
            }
        }
        indicators.push_back(analysis::to_json(analysis::compare_groups(indicator, fits)));
    }
    report["indicators"] = indicators;
    report["missing"] = missing;
    emit(r, "analyze/regression.json", report.dump(2) + "\n");
}

}  // namespace como::pipeline
