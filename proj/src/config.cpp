#include "nnemd/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nnemd/errors.hpp"

namespace nnemd {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config: boolean expected for '" + key + "', got '" + v + "'");
}

/// Full-precision, locale-independent float text for digest material.
std::string canon_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::vector<std::size_t> parse_size_list(const std::string& csv) {
    std::vector<std::size_t> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(std::stoul(item));
    }
    return out;
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
    cfg.raw[key] = value;
    if (key == "role") {
        if (value == "all" || value == "all-in-one") cfg.role = Role::kAllInOne;
        else if (value == "tpa") cfg.role = Role::kTpa;
        else if (value == "server") cfg.role = Role::kServer;
        else if (value == "client") cfg.role = Role::kClient;
        else throw ConfigError("config: unknown role '" + value + "'");
    } else if (key == "mode") {
        cfg.mode = train_mode_from_string(value);
    } else if (key == "engine") {
        if (value == "secure") cfg.engine = EngineChoice::kSecure;
        else if (value == "fixed") cfg.engine = EngineChoice::kFixed;
        else if (value == "float") cfg.engine = EngineChoice::kFloat;
        else throw ConfigError("config: unknown engine '" + value + "'");
    } else if (key == "group") {
        cfg.group = value;
    } else if (key == "tau") {
        cfg.tau = std::stoul(value);
    } else if (key == "eps_client") {
        cfg.eps_client = static_cast<unsigned>(std::stoul(value));
    } else if (key == "eps_server") {
        cfg.eps_server = static_cast<unsigned>(std::stoul(value));
    } else if (key == "dlog_mode") {
        if (value == "bsgs") cfg.dlog_mode = DlogChoice::kBsgs;
        else if (value == "table") cfg.dlog_mode = DlogChoice::kTable;
        else if (value == "auto") cfg.dlog_mode = DlogChoice::kAuto;
        else throw ConfigError("config: unknown dlog_mode '" + value + "'");
    } else if (key == "dlog_table_cap") {
        cfg.dlog_table_cap = std::stoull(value);
    } else if (key == "value_bound") {
        cfg.value_bound = std::stod(value);
    } else if (key == "arch") {
        cfg.arch = parse_size_list(value);
    } else if (key == "hidden_activation") {
        cfg.hidden_activation = value;
    } else if (key == "alpha") {
        cfg.alpha = std::stod(value);
    } else if (key == "l2") {
        cfg.l2 = std::stod(value);
    } else if (key == "batch_size") {
        cfg.batch_size = std::stoul(value);
    } else if (key == "epochs") {
        cfg.epochs = std::stoul(value);
    } else if (key == "shuffle_period") {
        cfg.shuffle_period = std::stoul(value);
    } else if (key == "seed") {
        cfg.seed = std::stoull(value);
    } else if (key == "unsafe_override_privacy_guard") {
        cfg.unsafe_override_privacy_guard = parse_bool(value, key);
    } else if (key == "sources") {
        cfg.sources = std::stoul(value);
    } else if (key == "source_types") {
        cfg.source_types.clear();
        for (char c : value) {
            if (c == 'f' || c == 'p') cfg.source_types.push_back(c);
            else if (c != ',' && c != ' ')
                throw ConfigError("config: source_types must list f/p entries");
        }
    } else if (key == "label_source") {
        cfg.label_source = std::stoul(value);
    } else if (key == "source_id") {
        cfg.source_id = std::stoul(value);
    } else if (key == "data_format") {
        cfg.data_format = value;
    } else if (key == "train_images") {
        cfg.train_images = value;
    } else if (key == "train_labels") {
        cfg.train_labels = value;
    } else if (key == "test_images") {
        cfg.test_images = value;
    } else if (key == "test_labels") {
        cfg.test_labels = value;
    } else if (key == "csv_train") {
        cfg.csv_train = value;
    } else if (key == "csv_test") {
        cfg.csv_test = value;
    } else if (key == "csv_label_column") {
        cfg.csv_label_column = value;
    } else if (key == "train_limit") {
        cfg.train_limit = std::stoul(value);
    } else if (key == "test_limit") {
        cfg.test_limit = std::stoul(value);
    } else if (key == "normalize_divisor") {
        cfg.normalize_divisor = std::stod(value);
    } else if (key == "synthetic_samples") {
        cfg.synthetic_samples = std::stoul(value);
    } else if (key == "synthetic_features") {
        cfg.synthetic_features = std::stoul(value);
    } else if (key == "synthetic_classes") {
        cfg.synthetic_classes = std::stoul(value);
    } else if (key == "checkpoint_path") {
        cfg.checkpoint_path = value;
    } else if (key == "metrics_path") {
        cfg.metrics_path = value;
    } else if (key == "request_log_path") {
        cfg.request_log_path = value;
    } else if (key == "tpa_host") {
        cfg.tpa_host = value;
    } else if (key == "tpa_port") {
        cfg.tpa_port = static_cast<std::uint16_t>(std::stoul(value));
    } else if (key == "server_host") {
        cfg.server_host = value;
    } else if (key == "server_port") {
        cfg.server_port = static_cast<std::uint16_t>(std::stoul(value));
    } else if (key == "run_secret") {
        cfg.run_secret = value;
    } else if (key == "max_frame_mb") {
        cfg.max_frame_mb = std::stoul(value);
    } else if (key == "bench_depths") {
        cfg.bench_depths = parse_size_list(value);
    } else if (key == "bench_hidden") {
        cfg.bench_hidden = std::stoul(value);
    } else if (key == "bench_batch") {
        cfg.bench_batch = std::stoul(value);
    } else if (key == "bench_measured") {
        cfg.bench_measured = std::stoul(value);
    } else if (key == "bench_warmup") {
        cfg.bench_warmup = std::stoul(value);
    } else if (key == "bench_report_path") {
        cfg.bench_report_path = value;
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) +
                              " is not a key = value pair");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        apply_override(cfg, key, value);
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

TrainingPlan RunConfig::plan() const {
    TrainingPlan plan;
    plan.mode = mode;
    plan.p_batch = batch_size;
    plan.epochs = epochs;
    plan.shuffle_period = shuffle_period == 0 ? epochs : shuffle_period;
    plan.eps_client = eps_client;
    plan.eps_server = eps_server;
    plan.value_bound = value_bound;
    plan.arch = arch;
    plan.hidden_activation = activation_from_string(hidden_activation);
    plan.alpha = alpha;
    plan.l2 = l2;
    plan.seed = seed;
    plan.unsafe_override_privacy_guard = unsafe_override_privacy_guard;
    plan.tau = tau;
    return plan;
}

std::string RunConfig::run_digest() const {
    std::ostringstream s;
    s << "group=" << group << ";tau=" << tau << ";eps_c=" << eps_client
      << ";eps_s=" << eps_server << ";bound=" << canon_double(value_bound) << ";arch=";
    for (std::size_t a : arch) s << a << ",";
    s << ";act=" << hidden_activation << ";alpha=" << canon_double(alpha)
      << ";l2=" << canon_double(l2) << ";batch=" << batch_size << ";epochs=" << epochs
      << ";period=" << shuffle_period << ";seed=" << seed << ";mode=" << to_string(mode)
      << ";sources=" << sources << ";types=";
    for (char c : source_types) s << c;
    s << ";label_source=" << label_source << ";secret=" << run_secret;
    return sha256_hex(s.str());
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    static const char* hexdigits = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hexdigits[digest[i] >> 4]);
        out.push_back(hexdigits[digest[i] & 0xf]);
    }
    return out;
}

}  // namespace nnemd
