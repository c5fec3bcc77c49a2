#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "como/como.h"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::string seed;
    bool deterministic = false;
    bool resume = false;
    bool quiet = false;
};

int exit_code(como_status s)
{
    switch (s) {
    case COMO_OK: return 0;
    case COMO_ERR_ARGUMENT:
    case COMO_ERR_CONFIG: return 2;
    case COMO_ERR_DATA:
    case COMO_ERR_DEGENERATE: return 3;
    default: return 4;
    }
}

int fail(como_status s)
{
    std::fprintf(stderr, "como: %s error: %s\n", como_status_name(s), como_last_error());
    return exit_code(s);
}

void log_line(const char* line, void*) { std::fprintf(stderr, "[como] %s\n", line); }

class Session {
public:
    ~Session()
    {
        como_runner_free(runner_);
        como_config_free(cfg_);
    }

    como_status open(const Options& o)
    {
        como_status s = o.config.empty() ? como_config_new(&cfg_) : como_config_load(o.config.c_str(), &cfg_);
        if (s != COMO_OK) return s;
        if (!o.out.empty() && (s = como_config_set(cfg_, "out", o.out.c_str())) != COMO_OK) return s;
        if (!o.seed.empty() && (s = como_config_set(cfg_, "seed", o.seed.c_str())) != COMO_OK) return s;
        if (o.deterministic && (s = como_config_set(cfg_, "deterministic", "true")) != COMO_OK) return s;
        return como_runner_new(cfg_, o.resume, o.quiet ? nullptr : log_line, nullptr, &runner_);
    }

    como_runner* runner() const { return runner_; }

private:
    como_config* cfg_ = nullptr;
    como_runner* runner_ = nullptr;
};

void common_flags(CLI::App* sub, Options& o, bool needs_config)
{
    auto* c = sub->add_option("-c,--config", o.config, "pipeline config file");
    if (needs_config) c->required();
    sub->add_option("-o,--out", o.out, "output directory (overrides the config)");
    sub->add_option("-s,--seed", o.seed, "master seed (overrides the config)");
    sub->add_flag("--deterministic", o.deterministic, "force deterministic execution");
    sub->add_flag("--resume", o.resume, "reuse stage outputs whose inputs are unchanged");
    sub->add_flag("-q,--quiet", o.quiet, "no progress lines");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Urban block morphology pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(como_version()));

    Options o;
    const std::vector<std::string> stages{"ingest", "features", "graph", "train", "explain", "symbolize", "analyze"};
    std::vector<CLI::App*> stage_cmds;
    for (const auto& s : stages) {
        auto* sub = app.add_subcommand(s, "run the " + s + " stage");
        common_flags(sub, o, true);
        stage_cmds.push_back(sub);
    }
    auto* eval = app.add_subcommand("evaluate", "recompute metrics from the training predictions");
    common_flags(eval, o, true);
    auto* all = app.add_subcommand("pipeline", "run every stage in order");
    common_flags(all, o, true);

    std::string synth_dir;
    unsigned classes = 3, per_class = 50;
    std::uint64_t synth_seed = 1;
    auto* synth = app.add_subcommand("synth", "write a synthetic dataset with a ready-to-run config");
    synth->add_option("-o,--out", synth_dir, "target directory")->required();
    synth->add_option("--classes", classes, "number of classes (2 or 3)");
    synth->add_option("--blocks-per-class", per_class, "blocks per class");
    synth->add_option("-s,--seed", synth_seed, "generator seed");

    auto* keys = app.add_subcommand("config-keys", "list the config keys");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (synth->parsed()) {
        const como_status s = como_synth_write(synth_dir.c_str(), classes, per_class, synth_seed);
        if (s != COMO_OK) return fail(s);
        std::printf("%s/pipeline.conf\n", synth_dir.c_str());
        return 0;
    }
    if (keys->parsed()) {
        size_t n = 0;
        como_config_keys(nullptr, 0, &n);
        std::string text(n + 1, '\0');
        como_config_keys(text.data(), text.size(), nullptr);
        text.resize(n);
        std::fputs(text.c_str(), stdout);
        return 0;
    }

    Session session;
    como_status s = session.open(o);
    if (s != COMO_OK) return fail(s);
    if (all->parsed()) {
        s = como_runner_run_all(session.runner());
    } else if (eval->parsed()) {
        s = como_runner_evaluate(session.runner());
    } else {
        for (std::size_t i = 0; i < stages.size(); ++i) {
            if (!stage_cmds[i]->parsed()) continue;
            s = como_runner_run_stage(session.runner(), stages[i].c_str(), nullptr);
            const como_status m = como_runner_write_manifest(session.runner());
            if (s == COMO_OK) s = m;
        }
    }
    return s == COMO_OK ? 0 : fail(s);
}
