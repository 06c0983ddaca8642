// nn-emd command line: run | bench | tpa | server | client, all driven by a
// flat key = value config file. Thin shell over the C API in nnemd.h.

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <string>

#include "nnemd.h"

namespace {

struct ConfigDeleter {
    void operator()(nnemd_config* c) const { nnemd_config_free(c); }
};
using ConfigPtr = std::unique_ptr<nnemd_config, ConfigDeleter>;

ConfigPtr load(const std::string& path, const std::string& seed, bool unsafe_override,
               const std::string& role) {
    nnemd_config* raw = nullptr;
    if (nnemd_config_load(path.c_str(), &raw) != NNEMD_OK) {
        std::fprintf(stderr, "error: %s\n", nnemd_last_error());
        return nullptr;
    }
    ConfigPtr cfg(raw);
    if (!seed.empty() && nnemd_config_set(cfg.get(), "seed", seed.c_str()) != NNEMD_OK) {
        std::fprintf(stderr, "error: %s\n", nnemd_last_error());
        return nullptr;
    }
    if (unsafe_override &&
        nnemd_config_set(cfg.get(), "unsafe_override_privacy_guard", "true") != NNEMD_OK) {
        std::fprintf(stderr, "error: %s\n", nnemd_last_error());
        return nullptr;
    }
    if (!role.empty() && nnemd_config_set(cfg.get(), "role", role.c_str()) != NNEMD_OK) {
        std::fprintf(stderr, "error: %s\n", nnemd_last_error());
        return nullptr;
    }
    return cfg;
}

int do_run(const ConfigPtr& cfg) {
    nnemd_run_report* report = nullptr;
    const nnemd_status rc = nnemd_run(cfg.get(), &report);
    if (rc != NNEMD_OK) {
        std::fprintf(stderr, "error: %s\n", nnemd_last_error());
        return rc == NNEMD_ERR_REFUSED ? 3 : 1;
    }
    std::printf("steps=%llu final_loss=%.6f accuracy=%.4f total_ms=%.1f\n",
                static_cast<unsigned long long>(nnemd_report_steps(report)),
                nnemd_report_final_loss(report), nnemd_report_accuracy(report),
                nnemd_report_total_ms(report));
    nnemd_run_report_free(report);
    return 0;
}

int do_role(const ConfigPtr& cfg) {
    int exit_code = 0;
    if (nnemd_run_role(cfg.get(), &exit_code) != NNEMD_OK) {
        std::fprintf(stderr, "error: %s\n", nnemd_last_error());
        return 1;
    }
    return exit_code;
}

int do_bench(const ConfigPtr& cfg) {
    char* text = nullptr;
    if (nnemd_bench(cfg.get(), &text) != NNEMD_OK) {
        std::fprintf(stderr, "error: %s\n", nnemd_last_error());
        return 1;
    }
    std::printf("%s", text);
    nnemd_string_free(text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nn-emd: neural network training over encrypted multi-source datasets"};
    app.require_subcommand(1);

    std::string config_path;
    std::string seed;
    bool unsafe_override = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "path to a flat key = value config file")
            ->required();
        sub->add_option("--seed", seed, "override the run seed");
        sub->add_flag("--unsafe-override-privacy-guard", unsafe_override,
                      "run even when the privacy guard refuses");
    };

    CLI::App* run = app.add_subcommand("run", "all-in-one training run");
    CLI::App* bench = app.add_subcommand("bench", "per-mini-batch timing across depths");
    CLI::App* tpa = app.add_subcommand("tpa", "key authority role (TCP)");
    CLI::App* server = app.add_subcommand("server", "training server role (TCP)");
    CLI::App* client = app.add_subcommand("client", "data source role (TCP)");
    for (CLI::App* sub : {run, bench, tpa, server, client}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    std::string role;
    if (tpa->parsed()) role = "tpa";
    if (server->parsed()) role = "server";
    if (client->parsed()) role = "client";

    const ConfigPtr cfg = load(config_path, seed, unsafe_override, role);
    if (!cfg) return 2;

    if (run->parsed()) return do_run(cfg);
    if (bench->parsed()) return do_bench(cfg);
    return do_role(cfg);
}
