#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pipeline/config.hpp"

namespace como::pipeline {

enum class Stage { ingest, features, graph, train, explain, symbolize, analyze };
inline constexpr std::array<Stage, 7> kStages{Stage::ingest, Stage::features, Stage::graph, Stage::train,
                                              Stage::explain, Stage::symbolize, Stage::analyze};

std::string_view stage_name(Stage s);
std::optional<Stage> parse_stage(std::string_view name);

std::string_view version();

struct StageResult {
    Stage stage = Stage::ingest;
    /// Served from a matching cache entry.
    bool cached = false;
    double seconds = 0.0;
    /// Output path (relative to the run directory) -> sha256.
    std::map<std::string, std::string> outputs;
    std::vector<std::string> notes;
};

struct RunOptions {
    /// Reuse a stage's outputs when its cache key and output digests match.
    bool resume = false;
    std::function<void(const std::string&)> log;
};

/// Runs stages against one output directory. Each stage reads only what
/// earlier stages wrote there, plus the configured inputs.
class Runner {
public:
    Runner(PipelineConfig cfg, RunOptions options = {});

    /// Throws StageError when an earlier stage has not been run. Errors
    /// raised inside a stage keep their kind and gain the stage name.
    StageResult run(Stage s);
    /// All seven stages in order; writes manifest.json and timings.json.
    std::vector<StageResult> run_all();

    /// Recomputes metrics from the training predictions into evaluate/.
    StageResult evaluate();

    /// Rebuilds manifest.json from the stage records on disk.
    void write_manifest() const;

    const PipelineConfig& config() const { return cfg_; }
    std::string path(const std::string& rel) const;

private:
    PipelineConfig cfg_;
    RunOptions opt_;

    std::string cache_key(Stage s) const;
    bool cache_valid(Stage s, const std::string& key) const;
    void note(const std::string& msg) const;

    void run_ingest(StageResult& r);
    void run_features(StageResult& r);
    void run_graph(StageResult& r);
    void run_train(StageResult& r);
    void run_explain(StageResult& r);
    void run_symbolize(StageResult& r);
    void run_analyze(StageResult& r);

    void emit(StageResult& r, const std::string& rel, const std::string& data) const;
};

}  // namespace como::pipeline
