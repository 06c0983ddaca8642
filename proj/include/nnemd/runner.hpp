#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nnemd/authority.hpp"
#include "nnemd/config.hpp"
#include "nnemd/dataset.hpp"
#include "nnemd/trainer.hpp"

namespace nnemd {

/// Stirs a user seed before it feeds crypto or data synthesis streams.
std::uint64_t mix_seed(std::uint64_t seed);

/// Per-source dataset type layout for a run ('f'/'p' per source).
std::vector<char> source_layout(const RunConfig& cfg);

/// Loads the training dataset named by the config (or synthesizes one) and
/// slices it into per-source ClientSource states exactly the way a client
/// role process slices its own share.
Dataset load_train_dataset(const RunConfig& cfg);
std::optional<Dataset> load_test_dataset(const RunConfig& cfg);
std::vector<ClientSource> partition_sources(const RunConfig& cfg, const Dataset& full);
ClientSource client_slice(const RunConfig& cfg, std::size_t source_id);

/// Widths of the vertical group's slices, ascending id (empty when no
/// vertical sources).
std::vector<std::size_t> vertical_widths(const RunConfig& cfg);

/// SI vector length: rows of X and rows of X^T both flow through the
/// single-input scheme.
std::size_t si_eta_for(const TrainingPlan& plan);

struct SolverPair {
    std::unique_ptr<DlogSolver> ff;
    std::unique_ptr<DlogSolver> bp;
};
SolverPair build_solvers(const RunConfig& cfg, const GroupParams& params,
                         const TrainingPlan& plan);

std::unique_ptr<Authority> build_authority(const RunConfig& cfg, const GroupParams& params,
                                           const TrainingPlan& plan, RandomSource& rng);

struct RunOutcome {
    TrainResult train;
    double baseline_ms = 0;
    std::string checkpoint_path;
};

/// Executes TPA, clients, and server in one process. Deterministic given the
/// seed; writes metrics and a checkpoint when paths are configured.
RunOutcome run_all_in_one(const RunConfig& cfg);

struct BenchRow {
    std::string mode;
    std::size_t hidden_layers = 0;
    std::string arch;
    double t_batch_ms = 0;
    double t_keyreq_ms = 0;
    double t_decrypt_ms = 0;
    double t_plain_ms = 0;
};
struct BenchReport {
    std::vector<BenchRow> rows;
};

/// Per-mini-batch timing across a hidden-layer depth sweep.
BenchReport run_bench(const RunConfig& cfg);

std::string format_bench(const BenchReport& report);

}  // namespace nnemd
