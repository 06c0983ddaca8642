#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nnemd/dataset.hpp"
#include "nnemd/nn.hpp"
#include "nnemd/protocols.hpp"

namespace nnemd {

enum class TrainMode { kHpt, kVpt, kHybrid };
enum class DatasetType { kFullFeatures, kPartialFeatures };  // T_f / T_p

TrainMode train_mode_from_string(const std::string& s);
std::string to_string(TrainMode m);

struct SourceMeta {
    std::size_t source_id = 0;
    DatasetType type = DatasetType::kFullFeatures;
    std::size_t sample_count = 0;
    std::size_t feature_count = 0;
    bool has_labels = false;
};

struct TrainingPlan {
    TrainMode mode = TrainMode::kHpt;
    std::size_t p_batch = 50;
    std::size_t epochs = 5;
    std::size_t shuffle_period = 1;  // epochs between encrypted-sample reshuffles
    unsigned eps_client = 2;
    unsigned eps_server = 2;
    double value_bound = 1.0;
    std::vector<std::size_t> arch;
    Activation hidden_activation = Activation::kSigmoid;
    double alpha = 1.0;
    double l2 = 0.0;
    std::uint64_t seed = 1;
    bool unsafe_override_privacy_guard = false;
    std::size_t tau = 2;

    std::size_t n_feature = 0;
    // Source ids per group. Full-feature sources form singleton groups;
    // partial-feature sources form one vertical group whose slices
    // concatenate in ascending id order.
    std::vector<std::vector<std::size_t>> groups;
    std::vector<DatasetType> group_type;  // per group

    std::size_t n_shuffle() const {
        return shuffle_period == 0 ? 1 : (epochs + shuffle_period - 1) / shuffle_period;
    }
};

/// Client-side state for one data source.
struct ClientSource {
    std::size_t source_id = 0;
    DatasetType type = DatasetType::kFullFeatures;
    bool has_labels = false;
    Dataset data;

    SourceMeta meta() const {
        return {source_id, type, data.size(), data.features(), has_labels};
    }
};

/// Validates the sources' meta against the requested mode and fills in the
/// group structure and feature total.
void exchange_meta(TrainingPlan& plan, const std::vector<SourceMeta>& metas);

/// Row alignment across vertically partitioned sources by hashed entity id:
/// deterministic inner join, aligned in the first source's local order.
/// Position unlinkability comes from the per-wave seeded shuffles applied
/// before any ciphertext leaves a client.
struct ErAlignment {
    std::size_t count = 0;
    std::vector<std::vector<std::size_t>> per_source_rows;  // aligned pos -> local row
};
ErAlignment entity_resolution_stub(const std::vector<std::vector<std::uint64_t>>& id_hashes,
                                   std::uint64_t coordinator_seed);

struct GuardVerdict {
    bool pass = false;
    std::string reason;
};

/// Lemma-style bound on per-position linear-equation exposure: refuse unless
/// n_epoch / n_shuffle < n_feature (strict).
GuardVerdict privacy_guard_check(const TrainingPlan& plan, std::size_t n_feature);

/// Seed of the shared shuffle for (group, wave); every source of a vertical
/// group derives the same permutation from it.
std::uint64_t wave_perm_seed(const TrainingPlan& plan, std::size_t group_index,
                             std::size_t wave);

/// One source's plain mini-batches for a wave: permuted, chunked to p_batch,
/// tail zero-padded. Labels present when this source supplies them.
struct SourceWaveBatches {
    std::vector<MatD> ff;  // each p_batch x local feature count
    std::vector<std::size_t> real_rows;
    std::vector<std::vector<int>> labels;  // per batch, length = real_rows (label holder)
    std::uint64_t perm_digest = 0;
};
SourceWaveBatches source_wave_batches(const ClientSource& src, const TrainingPlan& plan,
                                      std::size_t group_index,
                                      const std::vector<std::size_t>* er_rows,
                                      std::size_t wave);

/// One optimization step's payload.
struct StepPlain {
    std::size_t group_index = 0;
    MatD X;  // p_batch x n_feature (vertical slices concatenated)
    MatD Y;  // p_batch x classes, padded rows zero
    std::size_t real_rows = 0;
};
struct StepCipher {
    std::size_t group_index = 0;
    std::vector<EncryptedBatch> ff;  // 1 (full) or group size (vertical, asc id)
    std::vector<EncryptedBatch> bp;  // per source asc id, rows = features slice
    MatD Y;
    std::size_t real_rows = 0;
};
struct WavePlain {
    std::vector<StepPlain> steps;
    std::vector<std::uint64_t> perm_digests;  // one per group
};
struct WaveCipher {
    std::vector<StepCipher> steps;
    std::vector<std::uint64_t> perm_digests;
};

class PlainWaveSource {
public:
    virtual ~PlainWaveSource() = default;
    virtual const WavePlain& plain_wave(std::size_t wave) = 0;
};
class CipherWaveSource {
public:
    virtual ~CipherWaveSource() = default;
    virtual const WaveCipher& cipher_wave(std::size_t wave) = 0;
};

/// In-process client pool: composes (and for the secure path, encrypts)
/// waves on demand, holding only the current wave.
class LocalClientPool : public PlainWaveSource, public CipherWaveSource {
public:
    LocalClientPool(std::vector<ClientSource> sources, const TrainingPlan& plan,
                    std::optional<ErAlignment> er, const SiPublicKey& si_pk,
                    const std::vector<MiPartyKey>& mi_keys, RandomSource& rng);

    /// Plain-only variant for reference trainers (no keys needed).
    LocalClientPool(std::vector<ClientSource> sources, const TrainingPlan& plan,
                    std::optional<ErAlignment> er);

    const WavePlain& plain_wave(std::size_t wave) override;
    const WaveCipher& cipher_wave(std::size_t wave) override;

    const std::vector<ClientSource>& sources() const { return sources_; }

private:
    std::vector<ClientSource> sources_;
    TrainingPlan plan_;
    std::optional<ErAlignment> er_;
    const SiPublicKey* si_pk_ = nullptr;
    std::vector<MiPartyKey> mi_keys_;
    RandomSource* rng_ = nullptr;
    std::optional<std::pair<std::size_t, WavePlain>> plain_cache_;
    std::optional<std::pair<std::size_t, WaveCipher>> cipher_cache_;
};

/// Composes every group's batches for one wave into the round-robin step
/// stream shared by all engines.
WavePlain compose_plain_wave(const std::vector<ClientSource>& sources,
                             const TrainingPlan& plan, const std::optional<ErAlignment>& er,
                             std::size_t wave, std::size_t classes);

/// Builds Y for one batch: one-hot rows for the leading real labels, zeros
/// for padding.
MatD one_hot_padded(const std::vector<int>& labels, std::size_t classes, std::size_t p_batch);

/// The first-layer product engine: everything Algorithm-1-shaped above layer
/// 1 is plain; implementations differ only in how X*W and X^T*sigma are
/// obtained. The secure engine runs the FE protocols; the fixed-point engine
/// replays the identical encode/integer-product/decode pipeline on
/// plaintext, which is what makes encrypted and reference training
/// bit-identical; the float engine is the unencoded baseline.
class Layer1Engine {
public:
    virtual ~Layer1Engine() = default;
    virtual EvalResult eval_ff(std::size_t wave, std::size_t step, const MatD& W1) = 0;
    virtual EvalResult eval_bp(std::size_t wave, std::size_t step, const MatD& sigma) = 0;
    virtual const MatD& labels(std::size_t wave, std::size_t step) = 0;
    virtual std::size_t real_rows(std::size_t wave, std::size_t step) = 0;
    virtual std::size_t steps_in_wave(std::size_t wave) = 0;
    virtual std::uint64_t wave_digest(std::size_t wave) = 0;
};

struct SecureEngineConfig {
    unsigned eps_server = 2;
    double value_bound = 1.0;
    std::size_t tau = 2;
    const DlogSolver* ff_solver = nullptr;
    const DlogSolver* bp_solver = nullptr;
    KeyService* keys = nullptr;
};

class SecureEngine : public Layer1Engine {
public:
    SecureEngine(CipherWaveSource& source, const SiPublicKey& si_pk,
                 const SecureEngineConfig& cfg);
    EvalResult eval_ff(std::size_t wave, std::size_t step, const MatD& W1) override;
    EvalResult eval_bp(std::size_t wave, std::size_t step, const MatD& sigma) override;
    const MatD& labels(std::size_t wave, std::size_t step) override;
    std::size_t real_rows(std::size_t wave, std::size_t step) override;
    std::size_t steps_in_wave(std::size_t wave) override;
    std::uint64_t wave_digest(std::size_t wave) override;

    std::size_t dropped_columns() const { return dropped_columns_; }

private:
    CipherWaveSource* source_;
    const SiPublicKey* si_pk_;
    SecureEngineConfig cfg_;
    std::size_t dropped_columns_ = 0;
};

class FixedPointEngine : public Layer1Engine {
public:
    FixedPointEngine(PlainWaveSource& source, unsigned eps_client, unsigned eps_server,
                     double value_bound, std::size_t tau);
    EvalResult eval_ff(std::size_t wave, std::size_t step, const MatD& W1) override;
    EvalResult eval_bp(std::size_t wave, std::size_t step, const MatD& sigma) override;
    const MatD& labels(std::size_t wave, std::size_t step) override;
    std::size_t real_rows(std::size_t wave, std::size_t step) override;
    std::size_t steps_in_wave(std::size_t wave) override;
    std::uint64_t wave_digest(std::size_t wave) override;

private:
    PlainWaveSource* source_;
    FixedPointCodec client_codec_;
    FixedPointCodec server_codec_;
    std::size_t tau_;
};

class FloatEngine : public Layer1Engine {
public:
    explicit FloatEngine(PlainWaveSource& source) : source_(&source) {}
    EvalResult eval_ff(std::size_t wave, std::size_t step, const MatD& W1) override;
    EvalResult eval_bp(std::size_t wave, std::size_t step, const MatD& sigma) override;
    const MatD& labels(std::size_t wave, std::size_t step) override;
    std::size_t real_rows(std::size_t wave, std::size_t step) override;
    std::size_t steps_in_wave(std::size_t wave) override;
    std::uint64_t wave_digest(std::size_t wave) override;

private:
    PlainWaveSource* source_;
};

/// Encoded weight columns that clear the non-zero floor; the rest are
/// dropped from secure evaluation (their products are never requested) and
/// contribute zero, identically in every engine.
std::vector<char> columns_passing_filter(const MatI& encoded, std::size_t tau);

struct BatchMetric {
    std::size_t epoch = 0;
    std::size_t batch = 0;
    double loss = 0;
    double t_keyreq_ms = 0;
    double t_decrypt_ms = 0;
    double t_plain_ms = 0;
};

struct TrainResult {
    MlpModel model;
    std::vector<BatchMetric> metrics;
    double final_loss = 0;
    double accuracy_test = -1;
    std::size_t distinct_orderings = 0;
    std::size_t total_steps = 0;
    double total_ms = 0;
};

/// The server training loop: per step, first-layer products through the
/// engine, the rest in plain floats, SGD update with post-update clamp.
/// Refuses to run when the privacy guard fails unless the plan carries the
/// explicit override.
TrainResult server_train(const TrainingPlan& plan, Layer1Engine& engine,
                         const MatD* eval_X = nullptr,
                         const std::vector<int>* eval_labels = nullptr,
                         std::ostream* metrics_jsonl = nullptr);

}  // namespace nnemd
