#include "nnemd.h"

#include <cstring>
#include <string>

#include "nnemd/config.hpp"
#include "nnemd/errors.hpp"
#include "nnemd/runner.hpp"
#include "nnemd/wire.hpp"

struct nnemd_config {
    nnemd::RunConfig cfg;
};

struct nnemd_run_report {
    double final_loss = 0;
    double accuracy = -1;
    std::uint64_t steps = 0;
    double total_ms = 0;
};

namespace {

thread_local std::string g_last_error = "ok";

nnemd_status fail(nnemd_status code, const std::string& what) {
    g_last_error = what;
    return code;
}

template <typename Fn>
nnemd_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const nnemd::ConfigError& e) {
        return fail(NNEMD_ERR_CONFIG, e.what());
    } catch (const nnemd::IoError& e) {
        return fail(NNEMD_ERR_IO, e.what());
    } catch (const nnemd::NetError& e) {
        return fail(NNEMD_ERR_NET, e.what());
    } catch (const nnemd::FilterRejected& e) {
        return fail(NNEMD_ERR_REFUSED, e.what());
    } catch (const nnemd::Error& e) {
        const std::string what = e.what();
        if (what.find("privacy guard") != std::string::npos)
            return fail(NNEMD_ERR_REFUSED, what);
        return fail(NNEMD_ERR_CRYPTO, what);
    } catch (const std::exception& e) {
        return fail(NNEMD_ERR_INTERNAL, e.what());
    }
}

}  // namespace

extern "C" {

const char* nnemd_version(void) { return "1.0.0"; }

const char* nnemd_last_error(void) { return g_last_error.c_str(); }

nnemd_status nnemd_config_load(const char* path, nnemd_config** out) {
    if (!path || !out) return fail(NNEMD_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        auto* handle = new nnemd_config{nnemd::load_config(path)};
        *out = handle;
        return NNEMD_OK;
    });
}

nnemd_status nnemd_config_new(nnemd_config** out) {
    if (!out) return fail(NNEMD_ERR_INVALID_ARGUMENT, "null argument");
    *out = new nnemd_config{};
    return NNEMD_OK;
}

nnemd_status nnemd_config_set(nnemd_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return fail(NNEMD_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        nnemd::apply_override(cfg->cfg, key, value);
        return NNEMD_OK;
    });
}

nnemd_status nnemd_config_get(const nnemd_config* cfg, const char* key, char* buf,
                              size_t buf_len) {
    if (!cfg || !key || !buf || buf_len == 0)
        return fail(NNEMD_ERR_INVALID_ARGUMENT, "null argument");
    const auto it = cfg->cfg.raw.find(key);
    if (it == cfg->cfg.raw.end()) return fail(NNEMD_ERR_CONFIG, "key not set");
    std::strncpy(buf, it->second.c_str(), buf_len - 1);
    buf[buf_len - 1] = '\0';
    return NNEMD_OK;
}

void nnemd_config_free(nnemd_config* cfg) { delete cfg; }

nnemd_status nnemd_run(const nnemd_config* cfg, nnemd_run_report** out_report) {
    if (!cfg) return fail(NNEMD_ERR_INVALID_ARGUMENT, "null config");
    return guarded([&] {
        nnemd::RunOutcome outcome = nnemd::run_all_in_one(cfg->cfg);
        if (out_report) {
            *out_report = new nnemd_run_report{
                outcome.train.final_loss, outcome.train.accuracy_test,
                outcome.train.total_steps, outcome.train.total_ms};
        }
        return NNEMD_OK;
    });
}

nnemd_status nnemd_run_role(const nnemd_config* cfg, int* out_exit_code) {
    if (!cfg) return fail(NNEMD_ERR_INVALID_ARGUMENT, "null config");
    return guarded([&] {
        int code = 0;
        switch (cfg->cfg.role) {
            case nnemd::Role::kTpa: code = nnemd::run_tpa(cfg->cfg); break;
            case nnemd::Role::kServer: code = nnemd::run_server(cfg->cfg); break;
            case nnemd::Role::kClient: code = nnemd::run_client(cfg->cfg); break;
            default:
                return fail(NNEMD_ERR_CONFIG, "role must be tpa, server, or client");
        }
        if (out_exit_code) *out_exit_code = code;
        return NNEMD_OK;
    });
}

nnemd_status nnemd_bench(const nnemd_config* cfg, char** out_report_text) {
    if (!cfg || !out_report_text) return fail(NNEMD_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const nnemd::BenchReport report = nnemd::run_bench(cfg->cfg);
        const std::string text = nnemd::format_bench(report);
        char* copy = new char[text.size() + 1];
        std::memcpy(copy, text.c_str(), text.size() + 1);
        *out_report_text = copy;
        return NNEMD_OK;
    });
}

void nnemd_string_free(char* s) { delete[] s; }

double nnemd_report_final_loss(const nnemd_run_report* r) { return r ? r->final_loss : 0; }
double nnemd_report_accuracy(const nnemd_run_report* r) { return r ? r->accuracy : -1; }
uint64_t nnemd_report_steps(const nnemd_run_report* r) { return r ? r->steps : 0; }
double nnemd_report_total_ms(const nnemd_run_report* r) { return r ? r->total_ms : 0; }
void nnemd_run_report_free(nnemd_run_report* r) { delete r; }

}  // extern "C"
