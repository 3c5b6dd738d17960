#include "enkbf_capi.h"

#include "enkbf/config.hpp"
#include "enkbf/csv.hpp"
#include "enkbf/errors.hpp"
#include "enkbf/experiment.hpp"
#include "enkbf/parallel.hpp"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct enkbf_config {
    enkbf::ExperimentConfig cfg;
};

namespace {

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_err(char** err, const std::string& msg) {
    if (err) *err = dup_string(msg);
}

enkbf_config* parse_guarded(const char* text, char** err) {
    if (err) *err = nullptr;
    if (!text) {
        set_err(err, "null text");
        return nullptr;
    }
    try {
        auto* handle = new enkbf_config{enkbf::parse_config_text(text)};
        return handle;
    } catch (const std::exception& e) {
        set_err(err, e.what());
        return nullptr;
    }
}

} // namespace

extern "C" {

const char* enkbf_version(void) { return enkbf::library_version(); }

enkbf_config* enkbf_config_load(const char* path, char** err) {
    if (err) *err = nullptr;
    if (!path) {
        set_err(err, "null path");
        return nullptr;
    }
    std::string text;
    try {
        text = enkbf::io::read_text_file(path);
    } catch (const std::exception& e) {
        set_err(err, e.what());
        return nullptr;
    }
    return parse_guarded(text.c_str(), err);
}

enkbf_config* enkbf_config_parse(const char* text, char** err) {
    return parse_guarded(text, err);
}

void enkbf_config_free(enkbf_config* cfg) { delete cfg; }

enkbf_status enkbf_config_set_kind(enkbf_config* cfg, const char* kind) {
    if (!cfg || !kind) return ENKBF_ERR_INVALID;
    const enkbf::ExperimentKind k = enkbf::parse_kind(kind);
    if (k == enkbf::ExperimentKind::Unset) return ENKBF_ERR_INVALID;
    cfg->cfg.kind = k;
    return ENKBF_OK;
}

enkbf_status enkbf_config_set_seed(enkbf_config* cfg, uint64_t seed) {
    if (!cfg) return ENKBF_ERR_INVALID;
    cfg->cfg.seed = seed;
    return ENKBF_OK;
}

enkbf_status enkbf_config_set_out(enkbf_config* cfg, const char* dir) {
    if (!cfg || !dir || !*dir) return ENKBF_ERR_INVALID;
    cfg->cfg.out = dir;
    return ENKBF_OK;
}

char* enkbf_config_get_kind(const enkbf_config* cfg) {
    if (!cfg) return nullptr;
    return dup_string(enkbf::to_string(cfg->cfg.kind));
}

char* enkbf_config_get_out(const enkbf_config* cfg) {
    if (!cfg) return nullptr;
    return dup_string(cfg->cfg.out);
}

char* enkbf_config_canonical(const enkbf_config* cfg) {
    if (!cfg) return nullptr;
    try {
        return dup_string(enkbf::canonical_text(cfg->cfg));
    } catch (const std::exception&) {
        return nullptr;
    }
}

char* enkbf_config_hash(const enkbf_config* cfg) {
    if (!cfg) return nullptr;
    try {
        return dup_string(enkbf::config_hash(cfg->cfg));
    } catch (const std::exception&) {
        return nullptr;
    }
}

enkbf_status enkbf_validate(const enkbf_config* cfg, char** err) {
    if (err) *err = nullptr;
    if (!cfg) return ENKBF_ERR_INVALID;
    try {
        const std::vector<std::string> errs = enkbf::validate_config(cfg->cfg);
        if (errs.empty()) return ENKBF_OK;
        std::string joined;
        for (std::size_t i = 0; i < errs.size(); ++i) {
            if (i) joined += '\n';
            joined += errs[i];
        }
        set_err(err, joined);
        return ENKBF_ERR_VALIDATION;
    } catch (const std::exception& e) {
        set_err(err, e.what());
        return ENKBF_ERR_VALIDATION;
    }
}

enkbf_status enkbf_run(const enkbf_config* cfg, int threads, char** err) {
    if (err) *err = nullptr;
    if (!cfg) return ENKBF_ERR_INVALID;
    try {
        if (threads > 0) enkbf::set_thread_count(threads);
        const auto t0 = std::chrono::steady_clock::now();
        const enkbf::ExperimentResult result = enkbf::run_experiment(cfg->cfg);
        const double wall = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
        if (result.exit_code == 0) {
            enkbf::write_artifacts(result, cfg->cfg.out, cfg->cfg, wall);
            return ENKBF_OK;
        }
        set_err(err, result.message);
        return result.exit_code == 3 ? ENKBF_ERR_DIVERGED : ENKBF_ERR_VALIDATION;
    } catch (const enkbf::io_error& e) {
        set_err(err, e.what());
        return ENKBF_ERR_IO;
    } catch (const std::exception& e) {
        set_err(err, e.what());
        return ENKBF_ERR_VALIDATION;
    }
}

void enkbf_string_free(char* s) { std::free(s); }

} // extern "C"
