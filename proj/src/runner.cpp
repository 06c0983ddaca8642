#include "nnemd/runner.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

#include "nnemd/errors.hpp"
#include "nnemd/prng.hpp"

namespace nnemd {

std::uint64_t mix_seed(std::uint64_t seed) { return seed * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15; }

namespace {

Dataset synthesize(std::size_t samples, std::size_t features, std::size_t classes,
                   std::uint64_t seed) {
    Dataset ds;
    Prng rng(mix_seed(seed));
    ds.X.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(features));
    for (Eigen::Index i = 0; i < ds.X.rows(); ++i)
        for (Eigen::Index j = 0; j < ds.X.cols(); ++j) ds.X(i, j) = rng.uniform();
    ds.labels.resize(samples);
    for (auto& l : ds.labels) l = static_cast<int>(rng.below(classes));
    ds.ids.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) ds.ids[i] = i;
    return ds;
}

Dataset apply_limit(Dataset ds, std::size_t limit) {
    if (limit == 0 || limit >= ds.size()) return ds;
    ds.X = ds.X.topRows(static_cast<Eigen::Index>(limit)).eval();
    ds.labels.resize(limit);
    ds.ids.resize(limit);
    return ds;
}

}  // namespace

std::vector<char> source_layout(const RunConfig& cfg) {
    if (!cfg.source_types.empty()) {
        if (cfg.source_types.size() != cfg.sources)
            throw ConfigError("source_types must list one entry per source");
        return cfg.source_types;
    }
    const char t = cfg.mode == TrainMode::kVpt ? 'p' : 'f';
    return std::vector<char>(cfg.sources, t);
}

Dataset load_train_dataset(const RunConfig& cfg) {
    Dataset ds;
    if (cfg.data_format == "mnist-idx")
        ds = load_mnist_idx(cfg.train_images, cfg.train_labels, cfg.normalize_divisor);
    else if (cfg.data_format == "csv")
        ds = load_csv(cfg.csv_train, cfg.csv_label_column);
    else if (cfg.data_format == "synthetic")
        ds = synthesize(cfg.synthetic_samples, cfg.synthetic_features, cfg.synthetic_classes,
                        cfg.seed);
    else
        throw ConfigError("unknown data_format '" + cfg.data_format + "'");
    return apply_limit(std::move(ds), cfg.train_limit);
}

std::optional<Dataset> load_test_dataset(const RunConfig& cfg) {
    if (cfg.data_format == "mnist-idx" && !cfg.test_images.empty())
        return apply_limit(load_mnist_idx(cfg.test_images, cfg.test_labels,
                                          cfg.normalize_divisor),
                           cfg.test_limit);
    if (cfg.data_format == "csv" && !cfg.csv_test.empty())
        return apply_limit(load_csv(cfg.csv_test, cfg.csv_label_column), cfg.test_limit);
    if (cfg.data_format == "synthetic")
        return synthesize(std::max<std::size_t>(cfg.synthetic_samples / 4, 8),
                          cfg.synthetic_features, cfg.synthetic_classes, cfg.seed ^ 0xbadc0de);
    return std::nullopt;
}

std::vector<ClientSource> partition_sources(const RunConfig& cfg, const Dataset& full) {
    const std::vector<char> layout = source_layout(cfg);
    std::vector<ClientSource> out;

    // Full-feature sources take contiguous sample blocks; partial-feature
    // sources share every sample and take contiguous feature slices.
    const std::size_t n_full = static_cast<std::size_t>(
        std::count(layout.begin(), layout.end(), 'f'));
    const std::size_t n_part = cfg.sources - n_full;
    const auto sample_blocks = n_full ? split_samples(full.size(), n_full)
                                      : std::vector<std::pair<std::size_t, std::size_t>>{};
    const auto feature_blocks = n_part ? split_features(full.features(), n_part)
                                       : std::vector<std::pair<std::size_t, std::size_t>>{};

    std::size_t fi = 0, pi = 0;
    for (std::size_t id = 1; id <= cfg.sources; ++id) {
        ClientSource src;
        src.source_id = id;
        if (layout[id - 1] == 'f') {
            auto [b, e] = sample_blocks[fi++];
            src.type = DatasetType::kFullFeatures;
            src.has_labels = true;
            src.data.X = full.X.middleRows(static_cast<Eigen::Index>(b),
                                           static_cast<Eigen::Index>(e - b));
            src.data.labels.assign(full.labels.begin() + static_cast<std::ptrdiff_t>(b),
                                   full.labels.begin() + static_cast<std::ptrdiff_t>(e));
            src.data.ids.assign(full.ids.begin() + static_cast<std::ptrdiff_t>(b),
                                full.ids.begin() + static_cast<std::ptrdiff_t>(e));
        } else {
            auto [b, e] = feature_blocks[pi++];
            src.type = DatasetType::kPartialFeatures;
            src.has_labels = id == cfg.label_source;
            src.data.X = full.X.middleCols(static_cast<Eigen::Index>(b),
                                           static_cast<Eigen::Index>(e - b));
            src.data.labels = full.labels;
            src.data.ids = full.ids;
        }
        out.push_back(std::move(src));
    }
    if (n_part > 0) {
        const bool holder_is_partial =
            cfg.label_source >= 1 && cfg.label_source <= cfg.sources &&
            layout[cfg.label_source - 1] == 'p';
        if (!holder_is_partial)
            throw ConfigError("label_source must name a partial-feature source in vpt/hybrid");
    }
    return out;
}

ClientSource client_slice(const RunConfig& cfg, std::size_t source_id) {
    if (source_id < 1 || source_id > cfg.sources)
        throw ConfigError("client source_id out of range");
    const Dataset full = load_train_dataset(cfg);
    return partition_sources(cfg, full)[source_id - 1];
}

std::vector<std::size_t> vertical_widths(const RunConfig& cfg) {
    const std::vector<char> layout = source_layout(cfg);
    const std::size_t n_part = static_cast<std::size_t>(
        std::count(layout.begin(), layout.end(), 'p'));
    if (n_part == 0) return {};
    // Slice widths depend only on the feature total and the partial count.
    std::size_t features = cfg.arch.empty() ? cfg.synthetic_features : cfg.arch.front();
    std::vector<std::size_t> widths;
    for (auto [b, e] : split_features(features, n_part)) widths.push_back(e - b);
    return widths;
}

std::size_t si_eta_for(const TrainingPlan& plan) {
    return std::max(plan.n_feature, plan.p_batch);
}

SolverPair build_solvers(const RunConfig& cfg, const GroupParams& params,
                         const TrainingPlan& plan) {
    const FixedPointCodec client_codec{plan.eps_client, plan.value_bound};
    const FixedPointCodec server_codec{plan.eps_server, plan.value_bound};
    const std::int64_t ff_bound =
        product_bound(client_codec, server_codec, static_cast<std::int64_t>(plan.n_feature));
    const std::int64_t bp_bound =
        product_bound(client_codec, server_codec, static_cast<std::int64_t>(plan.p_batch));

    auto choose = [&](std::int64_t bound) {
        DlogMode mode = DlogMode::kBsgs;
        if (cfg.dlog_mode == DlogChoice::kTable) mode = DlogMode::kFullTable;
        if (cfg.dlog_mode == DlogChoice::kAuto &&
            2 * static_cast<std::uint64_t>(bound) + 1 <= cfg.dlog_table_cap)
            mode = DlogMode::kFullTable;
        return std::make_unique<DlogSolver>(
            DlogSolver::build(params, bound, mode, cfg.dlog_table_cap));
    };
    return SolverPair{choose(ff_bound), choose(bp_bound)};
}

std::unique_ptr<Authority> build_authority(const RunConfig& cfg, const GroupParams& params,
                                           const TrainingPlan& plan, RandomSource& rng) {
    std::vector<std::size_t> eta_vec = vertical_widths(cfg);
    std::size_t n_mi = eta_vec.size();
    if (n_mi == 0) {
        eta_vec = {plan.n_feature};
        n_mi = 1;
    }
    auto authority = std::make_unique<Authority>(params, si_eta_for(plan), eta_vec, n_mi,
                                                 cfg.tau, rng);
    if (!cfg.request_log_path.empty()) authority->persist_log_to(cfg.request_log_path);
    return authority;
}

RunOutcome run_all_in_one(const RunConfig& cfg) {
    const Dataset train = load_train_dataset(cfg);
    std::vector<ClientSource> sources = partition_sources(cfg, train);

    TrainingPlan plan = cfg.plan();
    if (plan.arch.empty())
        throw ConfigError("run: arch must be configured");
    std::vector<SourceMeta> metas;
    for (const auto& s : sources) metas.push_back(s.meta());
    exchange_meta(plan, metas);

    const GuardVerdict guard = privacy_guard_check(plan, plan.n_feature);
    if (!guard.pass && !plan.unsafe_override_privacy_guard)
        throw Error("privacy guard refused: " + guard.reason);

    std::optional<ErAlignment> er;
    const bool has_vertical =
        std::any_of(plan.group_type.begin(), plan.group_type.end(),
                    [](DatasetType t) { return t == DatasetType::kPartialFeatures; });
    std::vector<std::size_t> vertical_ids;
    if (has_vertical) {
        for (std::size_t g = 0; g < plan.groups.size(); ++g)
            if (plan.group_type[g] == DatasetType::kPartialFeatures)
                vertical_ids = plan.groups[g];
        std::vector<std::vector<std::uint64_t>> hashes;
        for (std::size_t id : vertical_ids) {
            std::vector<std::uint64_t> h;
            for (std::uint64_t raw : sources[id - 1].data.ids)
                h.push_back(fnv1a64(&raw, sizeof(raw)));
            hashes.push_back(std::move(h));
        }
        er = entity_resolution_stub(hashes, mix_seed(plan.seed));
    }

    const std::optional<Dataset> test = load_test_dataset(cfg);
    const MatD* eval_X = test ? &test->X : nullptr;
    const std::vector<int>* eval_labels = test ? &test->labels : nullptr;

    std::ofstream metrics_file;
    std::ostream* metrics = nullptr;
    if (!cfg.metrics_path.empty()) {
        metrics_file.open(cfg.metrics_path, std::ios::trunc);
        if (!metrics_file) throw IoError("cannot open metrics path " + cfg.metrics_path);
        metrics = &metrics_file;
    }

    RunOutcome outcome;
    if (cfg.engine == EngineChoice::kFloat) {
        LocalClientPool pool(std::move(sources), plan, er);
        FloatEngine engine(pool);
        outcome.train = server_train(plan, engine, eval_X, eval_labels, metrics);
    } else if (cfg.engine == EngineChoice::kFixed) {
        LocalClientPool pool(std::move(sources), plan, er);
        FixedPointEngine engine(pool, plan.eps_client, plan.eps_server, plan.value_bound,
                                plan.tau);
        outcome.train = server_train(plan, engine, eval_X, eval_labels, metrics);
    } else {
        const GroupParams params = named_params(cfg.group);
        RandomSource crypto_rng(mix_seed(plan.seed));
        auto authority = build_authority(cfg, params, plan, crypto_rng);
        std::vector<MiPartyKey> mi_keys;
        for (std::size_t slot = 1; slot <= vertical_ids.size(); ++slot)
            mi_keys.push_back(authority->register_source(slot).mi_key);
        SolverPair solvers = build_solvers(cfg, params, plan);
        LocalKeyService keys(*authority);

        LocalClientPool pool(std::move(sources), plan, er, authority->si_public(), mi_keys,
                             crypto_rng);
        SecureEngineConfig ecfg;
        ecfg.eps_server = plan.eps_server;
        ecfg.value_bound = plan.value_bound;
        ecfg.tau = plan.tau;
        ecfg.ff_solver = solvers.ff.get();
        ecfg.bp_solver = solvers.bp.get();
        ecfg.keys = &keys;
        SecureEngine engine(pool, authority->si_public(), ecfg);
        outcome.train = server_train(plan, engine, eval_X, eval_labels, metrics);
    }

    if (!cfg.checkpoint_path.empty()) {
        save_checkpoint(outcome.train.model, cfg.checkpoint_path);
        outcome.checkpoint_path = cfg.checkpoint_path;
    }
    return outcome;
}

BenchReport run_bench(const RunConfig& cfg) {
    BenchReport report;
    RunConfig base = cfg;
    base.engine = EngineChoice::kSecure;
    if (base.data_format.empty()) base.data_format = "synthetic";
    if (base.data_format == "synthetic" && base.synthetic_features < 2)
        throw ConfigError("bench: synthetic_features too small");

    const std::size_t features =
        base.data_format == "synthetic" ? base.synthetic_features : 784;
    const std::size_t classes =
        base.data_format == "synthetic" ? base.synthetic_classes : 10;

    for (std::size_t depth : cfg.bench_depths) {
        RunConfig rc = base;
        rc.batch_size = cfg.bench_batch;
        rc.arch.clear();
        rc.arch.push_back(features);
        for (std::size_t d = 0; d < depth; ++d) rc.arch.push_back(cfg.bench_hidden);
        rc.arch.push_back(classes);
        // One wave, one epoch; measure the first warm+measured batches.
        rc.epochs = 1;
        rc.shuffle_period = 1;
        const std::size_t batches_needed = cfg.bench_warmup + cfg.bench_measured;
        const std::size_t samples = rc.batch_size * batches_needed;
        rc.synthetic_samples = samples;
        rc.train_limit = samples;

        const Dataset train = load_train_dataset(rc);
        std::vector<ClientSource> sources = partition_sources(rc, train);
        TrainingPlan plan = rc.plan();
        std::vector<SourceMeta> metas;
        for (const auto& s : sources) metas.push_back(s.meta());
        exchange_meta(plan, metas);

        std::optional<ErAlignment> er;
        std::vector<std::size_t> vertical_ids;
        for (std::size_t g = 0; g < plan.groups.size(); ++g)
            if (plan.group_type[g] == DatasetType::kPartialFeatures)
                vertical_ids = plan.groups[g];
        if (!vertical_ids.empty()) {
            std::vector<std::vector<std::uint64_t>> hashes;
            for (std::size_t id : vertical_ids) {
                std::vector<std::uint64_t> h;
                for (std::uint64_t raw : sources[id - 1].data.ids)
                    h.push_back(fnv1a64(&raw, sizeof(raw)));
                hashes.push_back(std::move(h));
            }
            er = entity_resolution_stub(hashes, mix_seed(plan.seed));
        }

        const GroupParams params = named_params(rc.group);
        RandomSource crypto_rng(mix_seed(plan.seed));
        auto authority = build_authority(rc, params, plan, crypto_rng);
        std::vector<MiPartyKey> mi_keys;
        for (std::size_t slot = 1; slot <= vertical_ids.size(); ++slot)
            mi_keys.push_back(authority->register_source(slot).mi_key);
        SolverPair solvers = build_solvers(rc, params, plan);
        LocalKeyService keys(*authority);
        LocalClientPool pool(std::move(sources), plan, er, authority->si_public(), mi_keys,
                             crypto_rng);
        SecureEngineConfig ecfg;
        ecfg.eps_server = plan.eps_server;
        ecfg.value_bound = plan.value_bound;
        ecfg.tau = plan.tau;
        ecfg.ff_solver = solvers.ff.get();
        ecfg.bp_solver = solvers.bp.get();
        ecfg.keys = &keys;
        SecureEngine engine(pool, authority->si_public(), ecfg);

        TrainResult tr = server_train(plan, engine, nullptr, nullptr, nullptr);
        if (tr.metrics.size() < batches_needed)
            throw Error("bench: not enough batches executed");

        BenchRow row;
        row.mode = to_string(rc.mode);
        row.hidden_layers = depth;
        std::ostringstream arch_s;
        for (std::size_t i = 0; i < rc.arch.size(); ++i)
            arch_s << (i ? "-" : "") << rc.arch[i];
        row.arch = arch_s.str();
        for (std::size_t b = cfg.bench_warmup; b < batches_needed; ++b) {
            const BatchMetric& m = tr.metrics[b];
            row.t_keyreq_ms += m.t_keyreq_ms;
            row.t_decrypt_ms += m.t_decrypt_ms;
            row.t_plain_ms += m.t_plain_ms;
            row.t_batch_ms += m.t_keyreq_ms + m.t_decrypt_ms + m.t_plain_ms;
        }
        const auto denom = static_cast<double>(cfg.bench_measured);
        row.t_keyreq_ms /= denom;
        row.t_decrypt_ms /= denom;
        row.t_plain_ms /= denom;
        row.t_batch_ms /= denom;
        report.rows.push_back(row);
    }
    return report;
}

std::string format_bench(const BenchReport& report) {
    std::ostringstream out;
    out << "mode  hidden  arch                     t_batch_ms  t_keyreq_ms  t_decrypt_ms  "
           "t_plain_ms\n";
    for (const BenchRow& r : report.rows) {
        out << r.mode << "  " << r.hidden_layers << "  " << r.arch;
        for (std::size_t pad = r.arch.size(); pad < 24; ++pad) out << ' ';
        char buf[128];
        std::snprintf(buf, sizeof(buf), "  %10.2f  %11.2f  %12.2f  %10.2f\n", r.t_batch_ms,
                      r.t_keyreq_ms, r.t_decrypt_ms, r.t_plain_ms);
        out << buf;
    }
    return out.str();
}

}  // namespace nnemd
