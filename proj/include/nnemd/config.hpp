#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nnemd/dataset.hpp"
#include "nnemd/trainer.hpp"

namespace nnemd {

enum class Role { kAllInOne, kTpa, kServer, kClient };
enum class DlogChoice { kBsgs, kTable, kAuto };
enum class EngineChoice { kSecure, kFixed, kFloat };

/// Everything a run needs, parsed from a flat key = value config file.
/// Role-independent plan/crypto fields feed the run digest that every
/// connection handshake must present.
struct RunConfig {
    Role role = Role::kAllInOne;
    TrainMode mode = TrainMode::kHpt;
    EngineChoice engine = EngineChoice::kSecure;

    // crypto
    std::string group = "demo512";
    std::size_t tau = 2;
    unsigned eps_client = 2;
    unsigned eps_server = 2;
    DlogChoice dlog_mode = DlogChoice::kBsgs;
    std::uint64_t dlog_table_cap = 100'000'000;
    double value_bound = 1.0;

    // plan
    std::vector<std::size_t> arch;
    std::string hidden_activation = "sigmoid";
    double alpha = 1.0;
    double l2 = 0.0;
    std::size_t batch_size = 50;
    std::size_t epochs = 5;
    std::size_t shuffle_period = 1;
    std::uint64_t seed = 1;
    bool unsafe_override_privacy_guard = false;

    // sources / partitioning (all-in-one; client roles read their slice)
    std::size_t sources = 1;
    std::vector<char> source_types;  // 'f' | 'p' per source; empty -> by mode
    std::size_t label_source = 1;    // vertical group's label holder
    std::size_t source_id = 0;       // role = client

    // dataset
    std::string data_format = "synthetic";  // mnist-idx | csv | synthetic
    std::string train_images, train_labels, test_images, test_labels;
    std::string csv_train, csv_test, csv_label_column;
    std::size_t train_limit = 0;  // 0 = all
    std::size_t test_limit = 0;
    double normalize_divisor = 255.0;
    std::size_t synthetic_samples = 240;
    std::size_t synthetic_features = 12;
    std::size_t synthetic_classes = 3;

    // outputs
    std::string checkpoint_path;
    std::string metrics_path;
    std::string request_log_path;

    // wire
    std::string tpa_host = "127.0.0.1";
    std::uint16_t tpa_port = 47801;
    std::string server_host = "127.0.0.1";
    std::uint16_t server_port = 47802;
    std::string run_secret = "nn-emd-dev";
    std::size_t max_frame_mb = 256;

    // bench
    std::vector<std::size_t> bench_depths = {1, 3, 5};
    std::size_t bench_hidden = 64;
    std::size_t bench_batch = 60;
    std::size_t bench_measured = 2;
    std::size_t bench_warmup = 1;
    std::string bench_report_path;

    std::map<std::string, std::string> raw;

    TrainingPlan plan() const;

    /// Hex SHA-256 over the role-independent parameters plus the shared
    /// secret; wire peers abort on mismatch.
    std::string run_digest() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

/// Applies a single key = value override on top of a parsed config.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

std::string sha256_hex(const std::string& bytes);

std::vector<std::size_t> parse_size_list(const std::string& csv);

}  // namespace nnemd
