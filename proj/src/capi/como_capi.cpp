#include "como/como.h"

#include <cstring>
#include <exception>
#include <memory>
#include <string>

#include "common/error.hpp"
#include "geo/geometry.hpp"
#include "pipeline/config.hpp"
#include "pipeline/stages.hpp"
#include "pipeline/synth.hpp"

struct como_config {
    como::pipeline::PipelineConfig cfg;
};

struct como_runner {
    std::unique_ptr<como::pipeline::Runner> runner;
};

namespace {

thread_local std::string last_error;

como_status status_of(como::ErrorKind k)
{
    switch (k) {
    case como::ErrorKind::config: return COMO_ERR_CONFIG;
    case como::ErrorKind::data: return COMO_ERR_DATA;
    case como::ErrorKind::degenerate: return COMO_ERR_DEGENERATE;
    case como::ErrorKind::stage: return COMO_ERR_STAGE;
    case como::ErrorKind::io: return COMO_ERR_IO;
    case como::ErrorKind::internal: return COMO_ERR_INTERNAL;
    }
    return COMO_ERR_INTERNAL;
}

template <class F>
como_status guard(F&& f) noexcept
{
    try {
        last_error.clear();
        f();
        return COMO_OK;
    } catch (const como::Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return COMO_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return COMO_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return COMO_ERR_INTERNAL;
    }
}

como_status bad_argument(const char* what)
{
    last_error = what;
    return COMO_ERR_ARGUMENT;
}

void copy_out(const std::string& s, char* buf, size_t cap, size_t* needed)
{
    if (needed) *needed = s.size();
    if (!buf || cap == 0) return;
    const size_t n = std::min(cap - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
}

}  // namespace

extern "C" {

const char* como_version(void)
{
    static const std::string v(como::pipeline::version());
    return v.c_str();
}

const char* como_status_name(como_status s)
{
    switch (s) {
    case COMO_OK: return "ok";
    case COMO_ERR_ARGUMENT: return "argument";
    case COMO_ERR_CONFIG: return "config";
    case COMO_ERR_DATA: return "data";
    case COMO_ERR_DEGENERATE: return "degenerate";
    case COMO_ERR_STAGE: return "stage";
    case COMO_ERR_IO: return "io";
    case COMO_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* como_last_error(void) { return last_error.c_str(); }

como_status como_config_new(como_config** out)
{
    if (!out) return bad_argument("out is null");
    return guard([&] { *out = new como_config{}; });
}

como_status como_config_load(const char* path, como_config** out)
{
    if (!path || !out) return bad_argument("path and out must be non-null");
    *out = nullptr;
    return guard([&] {
        auto c = std::make_unique<como_config>();
        c->cfg = como::pipeline::load_config(path);
        *out = c.release();
    });
}

como_status como_config_set(como_config* cfg, const char* key, const char* value)
{
    if (!cfg || !key || !value) return bad_argument("cfg, key and value must be non-null");
    return guard([&] { cfg->cfg.set(key, value); });
}

como_status como_config_validate(const como_config* cfg)
{
    if (!cfg) return bad_argument("cfg is null");
    return guard([&] { cfg->cfg.validate(); });
}

como_status como_config_text(const como_config* cfg, char* buf, size_t cap, size_t* needed)
{
    if (!cfg) return bad_argument("cfg is null");
    return guard([&] { copy_out(cfg->cfg.to_text(), buf, cap, needed); });
}

como_status como_config_keys(char* buf, size_t cap, size_t* needed)
{
    return guard([&] { copy_out(como::pipeline::config_keys(), buf, cap, needed); });
}

void como_config_free(como_config* cfg) { delete cfg; }

como_status como_runner_new(const como_config* cfg, int resume, como_log_fn log, void* user, como_runner** out)
{
    if (!cfg || !out) return bad_argument("cfg and out must be non-null");
    *out = nullptr;
    return guard([&] {
        como::pipeline::RunOptions opt;
        opt.resume = resume != 0;
        if (log) opt.log = [log, user](const std::string& line) { log(line.c_str(), user); };
        auto r = std::make_unique<como_runner>();
        r->runner = std::make_unique<como::pipeline::Runner>(cfg->cfg, opt);
        *out = r.release();
    });
}

como_status como_runner_run_stage(como_runner* r, const char* stage, int* cached)
{
    if (!r || !stage) return bad_argument("runner and stage must be non-null");
    const auto s = como::pipeline::parse_stage(stage);
    if (!s) return bad_argument("unknown stage name");
    return guard([&] {
        const auto res = r->runner->run(*s);
        if (cached) *cached = res.cached ? 1 : 0;
    });
}

como_status como_runner_run_all(como_runner* r)
{
    if (!r) return bad_argument("runner is null");
    return guard([&] { r->runner->run_all(); });
}

como_status como_runner_evaluate(como_runner* r)
{
    if (!r) return bad_argument("runner is null");
    return guard([&] { r->runner->evaluate(); });
}

como_status como_runner_write_manifest(como_runner* r)
{
    if (!r) return bad_argument("runner is null");
    return guard([&] { r->runner->write_manifest(); });
}

void como_runner_free(como_runner* r) { delete r; }

como_status como_synth_write(const char* dir, unsigned classes, unsigned blocks_per_class, uint64_t seed)
{
    if (!dir) return bad_argument("dir is null");
    return guard([&] {
        como::pipeline::SynthSpec spec;
        spec.classes = classes;
        spec.blocks_per_class = blocks_per_class;
        spec.seed = seed;
        como::pipeline::write_synthetic(como::pipeline::generate_synthetic(spec), dir, seed);
    });
}

}  // extern "C"
