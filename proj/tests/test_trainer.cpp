#include <doctest.h>

#include <optional>
#include <set>
#include <sstream>

#include "nnemd/errors.hpp"
#include "nnemd/prng.hpp"
#include "nnemd/runner.hpp"
#include "nnemd/trainer.hpp"

using namespace nnemd;

namespace {

Dataset toy_dataset(std::size_t n, std::size_t features, std::size_t classes,
                    std::uint64_t seed) {
    Dataset ds;
    Prng rng(seed);
    ds.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(features));
    ds.labels.resize(n);
    ds.ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto cls = static_cast<int>(rng.below(classes));
        ds.labels[i] = cls;
        ds.ids[i] = i;
        for (std::size_t j = 0; j < features; ++j) {
            const double base = (j % classes) == static_cast<std::size_t>(cls) ? 0.7 : 0.2;
            ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                std::min(1.0, std::max(0.0, base + rng.uniform(-0.15, 0.15)));
        }
    }
    return ds;
}

TrainingPlan toy_plan(TrainMode mode, std::vector<std::size_t> arch, std::size_t batch,
                      std::size_t epochs, std::uint64_t seed) {
    TrainingPlan plan;
    plan.mode = mode;
    plan.p_batch = batch;
    plan.epochs = epochs;
    plan.shuffle_period = 1;
    plan.eps_client = 2;
    plan.eps_server = 2;
    plan.arch = std::move(arch);
    plan.alpha = 0.7;
    plan.seed = seed;
    plan.tau = 2;
    return plan;
}

std::vector<ClientSource> hpt_sources(const Dataset& full, std::size_t k) {
    std::vector<ClientSource> out;
    const auto blocks = split_samples(full.size(), k);
    for (std::size_t id = 1; id <= k; ++id) {
        auto [b, e] = blocks[id - 1];
        ClientSource src;
        src.source_id = id;
        src.type = DatasetType::kFullFeatures;
        src.has_labels = true;
        src.data.X = full.X.middleRows(static_cast<Eigen::Index>(b),
                                       static_cast<Eigen::Index>(e - b));
        src.data.labels.assign(full.labels.begin() + static_cast<std::ptrdiff_t>(b),
                               full.labels.begin() + static_cast<std::ptrdiff_t>(e));
        src.data.ids.assign(full.ids.begin() + static_cast<std::ptrdiff_t>(b),
                            full.ids.begin() + static_cast<std::ptrdiff_t>(e));
        out.push_back(std::move(src));
    }
    return out;
}

std::vector<ClientSource> vpt_sources(const Dataset& full, std::size_t k,
                                      std::size_t label_holder) {
    std::vector<ClientSource> out;
    const auto blocks = split_features(full.features(), k);
    for (std::size_t id = 1; id <= k; ++id) {
        auto [b, e] = blocks[id - 1];
        ClientSource src;
        src.source_id = id;
        src.type = DatasetType::kPartialFeatures;
        src.has_labels = id == label_holder;
        src.data.X = full.X.middleCols(static_cast<Eigen::Index>(b),
                                       static_cast<Eigen::Index>(e - b));
        src.data.labels = full.labels;
        src.data.ids = full.ids;
        out.push_back(std::move(src));
    }
    return out;
}

std::optional<ErAlignment> align_vertical(const TrainingPlan& plan,
                                          const std::vector<ClientSource>& sources) {
    std::vector<std::size_t> vertical;
    for (std::size_t g = 0; g < plan.groups.size(); ++g)
        if (plan.group_type[g] == DatasetType::kPartialFeatures) vertical = plan.groups[g];
    if (vertical.empty()) return std::nullopt;
    std::vector<std::vector<std::uint64_t>> hashes;
    for (std::size_t id : vertical) {
        std::vector<std::uint64_t> h;
        for (std::uint64_t raw : sources[id - 1].data.ids)
            h.push_back(fnv1a64(&raw, sizeof(raw)));
        hashes.push_back(std::move(h));
    }
    return entity_resolution_stub(hashes, mix_seed(plan.seed));
}

struct SecureRig {
    GroupParams params = named_params("test64");
    std::unique_ptr<Authority> authority;
    std::unique_ptr<LocalKeyService> keys;
    std::unique_ptr<DlogSolver> ff_solver;
    std::unique_ptr<DlogSolver> bp_solver;
    std::unique_ptr<RandomSource> rng;
    std::vector<MiPartyKey> mi_keys;
    std::unique_ptr<LocalClientPool> pool;
    std::unique_ptr<SecureEngine> engine;

    SecureRig(std::vector<ClientSource> sources, const TrainingPlan& plan,
              std::optional<ErAlignment> er, std::size_t vertical_count) {
        rng = std::make_unique<RandomSource>(mix_seed(plan.seed));
        std::vector<std::size_t> eta_vec;
        if (vertical_count) {
            for (auto [b, e] : split_features(plan.n_feature, vertical_count))
                eta_vec.push_back(e - b);
        } else {
            eta_vec = {plan.n_feature};
        }
        authority = std::make_unique<Authority>(
            params, std::max(plan.n_feature, plan.p_batch), eta_vec,
            std::max<std::size_t>(vertical_count, 1), plan.tau, *rng);
        for (std::size_t slot = 1; slot <= vertical_count; ++slot)
            mi_keys.push_back(authority->register_source(slot).mi_key);
        keys = std::make_unique<LocalKeyService>(*authority);
        const FixedPointCodec cc{plan.eps_client, plan.value_bound};
        const FixedPointCodec sc{plan.eps_server, plan.value_bound};
        ff_solver = std::make_unique<DlogSolver>(DlogSolver::build(
            params, product_bound(cc, sc, static_cast<std::int64_t>(plan.n_feature)),
            DlogMode::kBsgs));
        bp_solver = std::make_unique<DlogSolver>(DlogSolver::build(
            params, product_bound(cc, sc, static_cast<std::int64_t>(plan.p_batch)),
            DlogMode::kBsgs));
        pool = std::make_unique<LocalClientPool>(std::move(sources), plan, std::move(er),
                                                 authority->si_public(), mi_keys, *rng);
        SecureEngineConfig cfg;
        cfg.eps_server = plan.eps_server;
        cfg.value_bound = plan.value_bound;
        cfg.tau = plan.tau;
        cfg.ff_solver = ff_solver.get();
        cfg.bp_solver = bp_solver.get();
        cfg.keys = keys.get();
        engine = std::make_unique<SecureEngine>(*pool, authority->si_public(), cfg);
    }
};

bool same_weights(const MlpModel& a, const MlpModel& b) {
    if (a.weights.size() != b.weights.size()) return false;
    for (std::size_t l = 0; l < a.weights.size(); ++l)
        if (a.weights[l] != b.weights[l]) return false;
    return true;
}

}  // namespace

TEST_CASE("exchange_meta validates modes and geometry") {
    TrainingPlan plan = toy_plan(TrainMode::kHpt, {4, 3, 2}, 4, 2, 1);
    std::vector<SourceMeta> metas{{1, DatasetType::kFullFeatures, 12, 4, true},
                                  {2, DatasetType::kFullFeatures, 12, 4, true}};
    exchange_meta(plan, metas);
    CHECK(plan.groups.size() == 2);
    CHECK(plan.n_feature == 4);

    // width mismatch
    metas[1].feature_count = 5;
    CHECK_THROWS_AS(exchange_meta(plan, metas), ConfigError);

    // vpt: mixed types rejected
    TrainingPlan vplan = toy_plan(TrainMode::kVpt, {4, 3, 2}, 4, 2, 1);
    std::vector<SourceMeta> vmetas{{1, DatasetType::kPartialFeatures, 12, 2, true},
                                   {2, DatasetType::kFullFeatures, 12, 4, true}};
    CHECK_THROWS_AS(exchange_meta(vplan, vmetas), ConfigError);

    // vpt: sample-count mismatch rejected
    vmetas[1] = {2, DatasetType::kPartialFeatures, 11, 2, false};
    CHECK_THROWS_AS(exchange_meta(vplan, vmetas), ConfigError);

    // vpt: happy path groups all partial sources together
    vmetas[1].sample_count = 12;
    vmetas[0].has_labels = true;
    exchange_meta(vplan, vmetas);
    CHECK(vplan.groups.size() == 1);
    CHECK(vplan.groups[0] == std::vector<std::size_t>{1, 2});
    CHECK(vplan.n_feature == 4);

    // exactly one vertical label holder
    vmetas[1].has_labels = true;
    CHECK_THROWS_AS(exchange_meta(vplan, vmetas), ConfigError);

    // batch must fit the smallest source
    TrainingPlan bplan = toy_plan(TrainMode::kHpt, {4, 3, 2}, 13, 2, 1);
    std::vector<SourceMeta> bmetas{{1, DatasetType::kFullFeatures, 12, 4, true}};
    CHECK_THROWS_AS(exchange_meta(bplan, bmetas), ConfigError);
}

TEST_CASE("hybrid grouping covers matching feature sets") {
    TrainingPlan plan = toy_plan(TrainMode::kHybrid, {4, 3, 2}, 4, 2, 1);
    std::vector<SourceMeta> metas{{1, DatasetType::kFullFeatures, 8, 4, true},
                                  {2, DatasetType::kPartialFeatures, 8, 2, true},
                                  {3, DatasetType::kPartialFeatures, 8, 2, false}};
    exchange_meta(plan, metas);
    CHECK(plan.groups.size() == 2);
    CHECK(plan.groups[0] == std::vector<std::size_t>{1});
    CHECK(plan.groups[1] == std::vector<std::size_t>{2, 3});

    metas[2].feature_count = 3;  // 2 + 3 != 4
    CHECK_THROWS_AS(exchange_meta(plan, metas), ConfigError);
}

TEST_CASE("entity resolution stub") {
    // identical id sets -> bijections
    std::vector<std::uint64_t> a{10, 20, 30};
    const ErAlignment same = entity_resolution_stub({a, {30, 10, 20}}, 7);
    CHECK(same.count == 3);
    std::set<std::size_t> seen(same.per_source_rows[1].begin(), same.per_source_rows[1].end());
    CHECK(seen.size() == 3);

    // 10-id overlap of 12/15-id sets, against a set-intersection oracle
    std::vector<std::uint64_t> s1, s2;
    for (std::uint64_t i = 0; i < 12; ++i) s1.push_back(i);
    for (std::uint64_t i = 2; i < 17; ++i) s2.push_back(i);
    const ErAlignment overlap = entity_resolution_stub({s1, s2}, 7);
    CHECK(overlap.count == 10);
    for (std::size_t t = 0; t < overlap.count; ++t)
        CHECK(s1[overlap.per_source_rows[0][t]] == s2[overlap.per_source_rows[1][t]]);

    CHECK_THROWS_AS(entity_resolution_stub({{1, 2}, {3, 4}}, 7), Error);
}

TEST_CASE("privacy guard boundary table") {
    TrainingPlan plan = toy_plan(TrainMode::kHpt, {784, 10}, 4, 10, 1);
    plan.shuffle_period = 1;  // n_shuffle = 10
    CHECK(privacy_guard_check(plan, 784).pass);

    plan.epochs = 800;
    plan.shuffle_period = 800;  // n_shuffle = 1
    CHECK_FALSE(privacy_guard_check(plan, 784).pass);

    plan.epochs = 784;
    plan.shuffle_period = 784;  // equality case: strict
    CHECK_FALSE(privacy_guard_check(plan, 784).pass);

    plan.epochs = 783;
    plan.shuffle_period = 783;
    CHECK(privacy_guard_check(plan, 784).pass);
}

TEST_CASE("guard soundness: refused runs never request keys") {
    const Dataset data = toy_dataset(8, 4, 2, 3);
    TrainingPlan plan = toy_plan(TrainMode::kHpt, {4, 3, 2}, 4, 5, 3);
    plan.shuffle_period = 5;  // exposure 5 >= 4 features
    auto sources = hpt_sources(data, 1);
    std::vector<SourceMeta> metas;
    for (const auto& s : sources) metas.push_back(s.meta());
    exchange_meta(plan, metas);
    REQUIRE_FALSE(privacy_guard_check(plan, plan.n_feature).pass);

    SecureRig rig(sources, plan, std::nullopt, 0);
    CHECK_THROWS_WITH_AS(server_train(plan, *rig.engine), doctest::Contains("privacy guard"),
                         Error);
    CHECK(rig.authority->request_log().empty());

    plan.unsafe_override_privacy_guard = true;
    CHECK_NOTHROW(server_train(plan, *rig.engine));
    CHECK(rig.authority->request_log().size() > 0);
}

TEST_CASE("wave composition is deterministic and reshuffles between waves") {
    const Dataset data = toy_dataset(12, 4, 2, 5);
    TrainingPlan plan = toy_plan(TrainMode::kHpt, {4, 3, 2}, 4, 3, 9);
    auto sources = hpt_sources(data, 2);
    std::vector<SourceMeta> metas;
    for (const auto& s : sources) metas.push_back(s.meta());
    exchange_meta(plan, metas);

    const WavePlain w0a = compose_plain_wave(sources, plan, std::nullopt, 0, 2);
    const WavePlain w0b = compose_plain_wave(sources, plan, std::nullopt, 0, 2);
    REQUIRE(w0a.steps.size() == w0b.steps.size());
    CHECK(w0a.steps.size() == 4);  // two sources x 6/4-> 2 batches each
    for (std::size_t s = 0; s < w0a.steps.size(); ++s) {
        CHECK(w0a.steps[s].X == w0b.steps[s].X);
        CHECK(w0a.steps[s].Y == w0b.steps[s].Y);
    }
    const WavePlain w1 = compose_plain_wave(sources, plan, std::nullopt, 1, 2);
    CHECK(w0a.perm_digests != w1.perm_digests);

    // round robin alternates groups: src1 b0, src2 b0, src1 b1, src2 b1
    CHECK(w0a.steps[0].group_index == 0);
    CHECK(w0a.steps[1].group_index == 1);
    CHECK(w0a.steps[2].group_index == 0);
    CHECK(w0a.steps[3].group_index == 1);

    // tail batches are padded and masked
    CHECK(w0a.steps[0].X.rows() == 4);
    CHECK(w0a.steps[2].real_rows == 2);  // 6 = 4 + 2
    CHECK(w0a.steps[2].X.bottomRows(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("filter mask helper") {
    MatI enc(3, 3);
    enc << 1, 0, 5, 2, 0, 0, 0, 3, 0;
    const auto ok = columns_passing_filter(enc, 2);
    CHECK(ok == std::vector<char>{1, 0, 0});
}

TEST_CASE("bit-exact: secure and fixed-point reference produce identical models (hpt)") {
    const Dataset data = toy_dataset(16, 4, 2, 11);
    TrainingPlan plan = toy_plan(TrainMode::kHpt, {4, 3, 2}, 4, 2, 11);
    auto sources = hpt_sources(data, 2);
    std::vector<SourceMeta> metas;
    for (const auto& s : sources) metas.push_back(s.meta());
    exchange_meta(plan, metas);

    SecureRig rig(sources, plan, std::nullopt, 0);
    const TrainResult secure = server_train(plan, *rig.engine);

    LocalClientPool plain_pool(sources, plan, std::nullopt);
    FixedPointEngine fixed(plain_pool, plan.eps_client, plan.eps_server, plan.value_bound,
                           plan.tau);
    const TrainResult reference = server_train(plan, fixed);

    CHECK(same_weights(secure.model, reference.model));
    CHECK(secure.final_loss == reference.final_loss);
    CHECK(secure.distinct_orderings == plan.n_shuffle());
}

TEST_CASE("bit-exact holds for vpt and hybrid too") {
    const Dataset data = toy_dataset(12, 4, 2, 13);

    {
        TrainingPlan plan = toy_plan(TrainMode::kVpt, {4, 3, 2}, 4, 2, 13);
        auto sources = vpt_sources(data, 2, 1);
        std::vector<SourceMeta> metas;
        for (const auto& s : sources) metas.push_back(s.meta());
        exchange_meta(plan, metas);
        auto er = align_vertical(plan, sources);
        SecureRig rig(sources, plan, er, 2);
        const TrainResult secure = server_train(plan, *rig.engine);
        LocalClientPool plain_pool(sources, plan, er);
        FixedPointEngine fixed(plain_pool, plan.eps_client, plan.eps_server, plan.value_bound,
                               plan.tau);
        const TrainResult reference = server_train(plan, fixed);
        CHECK(same_weights(secure.model, reference.model));
    }

    {
        // hybrid: source 1 full, sources 2+3 vertical halves
        TrainingPlan plan = toy_plan(TrainMode::kHybrid, {4, 3, 2}, 4, 2, 17);
        auto full_part = hpt_sources(data, 1);
        auto vparts = vpt_sources(data, 2, 1);
        std::vector<ClientSource> sources;
        sources.push_back(full_part[0]);
        vparts[0].source_id = 2;
        vparts[1].source_id = 3;
        vparts[0].has_labels = true;
        sources.push_back(vparts[0]);
        sources.push_back(vparts[1]);
        std::vector<SourceMeta> metas;
        for (const auto& s : sources) metas.push_back(s.meta());
        exchange_meta(plan, metas);
        auto er = align_vertical(plan, sources);
        SecureRig rig(sources, plan, er, 2);
        const TrainResult secure = server_train(plan, *rig.engine);
        LocalClientPool plain_pool(sources, plan, er);
        FixedPointEngine fixed(plain_pool, plan.eps_client, plan.eps_server, plan.value_bound,
                               plan.tau);
        const TrainResult reference = server_train(plan, fixed);
        CHECK(same_weights(secure.model, reference.model));
    }
}

TEST_CASE("vpt run equals the hpt run on the concatenated data") {
    const Dataset data = toy_dataset(12, 4, 2, 19);

    TrainingPlan vplan = toy_plan(TrainMode::kVpt, {4, 3, 2}, 4, 2, 19);
    auto vsources = vpt_sources(data, 2, 1);
    std::vector<SourceMeta> vmetas;
    for (const auto& s : vsources) vmetas.push_back(s.meta());
    exchange_meta(vplan, vmetas);
    auto er = align_vertical(vplan, vsources);
    SecureRig vrig(vsources, vplan, er, 2);
    const TrainResult vpt = server_train(vplan, *vrig.engine);

    TrainingPlan hplan = toy_plan(TrainMode::kHpt, {4, 3, 2}, 4, 2, 19);
    auto hsources = hpt_sources(data, 1);
    std::vector<SourceMeta> hmetas;
    for (const auto& s : hsources) hmetas.push_back(s.meta());
    exchange_meta(hplan, hmetas);
    SecureRig hrig(hsources, hplan, std::nullopt, 0);
    const TrainResult hpt = server_train(hplan, *hrig.engine);

    CHECK(same_weights(vpt.model, hpt.model));
}

TEST_CASE("zero learning rate leaves weights at init") {
    const Dataset data = toy_dataset(8, 4, 2, 23);
    TrainingPlan plan = toy_plan(TrainMode::kHpt, {4, 3, 2}, 4, 2, 23);
    plan.alpha = 0.0;
    auto sources = hpt_sources(data, 1);
    std::vector<SourceMeta> metas;
    for (const auto& s : sources) metas.push_back(s.meta());
    exchange_meta(plan, metas);
    SecureRig rig(sources, plan, std::nullopt, 0);
    const TrainResult result = server_train(plan, *rig.engine);
    const MlpModel init = init_weights(plan.arch, plan.seed, plan.hidden_activation);
    CHECK(same_weights(result.model, init));
}

TEST_CASE("sub-filter sigma columns are dropped identically in both engines") {
    // One-class toy data drives sigma columns toward all-zero encodings.
    Dataset data = toy_dataset(8, 4, 2, 29);
    for (auto& l : data.labels) l = 0;
    TrainingPlan plan = toy_plan(TrainMode::kHpt, {4, 3, 2}, 4, 3, 29);
    auto sources = hpt_sources(data, 1);
    std::vector<SourceMeta> metas;
    for (const auto& s : sources) metas.push_back(s.meta());
    exchange_meta(plan, metas);

    SecureRig rig(sources, plan, std::nullopt, 0);
    const TrainResult secure = server_train(plan, *rig.engine);
    LocalClientPool plain_pool(sources, plan, std::nullopt);
    FixedPointEngine fixed(plain_pool, plan.eps_client, plan.eps_server, plan.value_bound,
                           plan.tau);
    const TrainResult reference = server_train(plan, fixed);
    CHECK(same_weights(secure.model, reference.model));
}

TEST_CASE("float engine trains the toy problem to high accuracy") {
    const Dataset data = toy_dataset(64, 6, 2, 31);
    TrainingPlan plan = toy_plan(TrainMode::kHpt, {6, 5, 2}, 8, 30, 31);
    plan.alpha = 1.0;
    auto sources = hpt_sources(data, 1);
    std::vector<SourceMeta> metas;
    for (const auto& s : sources) metas.push_back(s.meta());
    exchange_meta(plan, metas);
    LocalClientPool pool(sources, plan, std::nullopt);
    FloatEngine engine(pool);
    const Dataset test = toy_dataset(64, 6, 2, 32);
    const TrainResult result = server_train(plan, engine, &test.X, &test.labels);
    CHECK(result.accuracy_test > 0.9);
    CHECK(result.metrics.size() == plan.epochs * 8);
}

TEST_CASE("metrics stream carries the timing split") {
    const Dataset data = toy_dataset(8, 4, 2, 37);
    TrainingPlan plan = toy_plan(TrainMode::kHpt, {4, 3, 2}, 4, 1, 37);
    auto sources = hpt_sources(data, 1);
    std::vector<SourceMeta> metas;
    for (const auto& s : sources) metas.push_back(s.meta());
    exchange_meta(plan, metas);
    SecureRig rig(sources, plan, std::nullopt, 0);
    std::ostringstream out;
    const TrainResult result = server_train(plan, *rig.engine, nullptr, nullptr, &out);
    CHECK(result.metrics.size() == 2);
    CHECK(result.metrics[0].t_decrypt_ms > 0);
    CHECK(out.str().find("t_keyreq_ms") != std::string::npos);
    CHECK(out.str().find("summary") != std::string::npos);
}
