#include "nnemd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <set>
#include <unordered_map>

#include "nnemd/errors.hpp"
#include "nnemd/prng.hpp"

namespace nnemd {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    a ^= b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2);
    return a;
}

std::uint64_t perm_digest_of(const std::vector<std::size_t>& perm) {
    return fnv1a64(perm.data(), perm.size() * sizeof(std::size_t));
}

}  // namespace

TrainMode train_mode_from_string(const std::string& s) {
    if (s == "hpt") return TrainMode::kHpt;
    if (s == "vpt") return TrainMode::kVpt;
    if (s == "hybrid") return TrainMode::kHybrid;
    throw ConfigError("unknown training mode '" + s + "'");
}

std::string to_string(TrainMode m) {
    switch (m) {
        case TrainMode::kHpt: return "hpt";
        case TrainMode::kVpt: return "vpt";
        default: return "hybrid";
    }
}

void exchange_meta(TrainingPlan& plan, const std::vector<SourceMeta>& metas) {
    if (metas.empty()) throw ConfigError("exchange_meta: no sources");
    for (std::size_t i = 0; i < metas.size(); ++i)
        if (metas[i].source_id != i + 1)
            throw ConfigError("exchange_meta: source ids must be dense 1..n in order");

    plan.groups.clear();
    plan.group_type.clear();
    std::vector<std::size_t> vertical;
    for (const SourceMeta& m : metas) {
        if (m.type == DatasetType::kFullFeatures) {
            plan.groups.push_back({m.source_id});
            plan.group_type.push_back(DatasetType::kFullFeatures);
        } else {
            vertical.push_back(m.source_id);
        }
    }
    if (!vertical.empty()) {
        plan.groups.push_back(vertical);
        plan.group_type.push_back(DatasetType::kPartialFeatures);
    }

    const bool any_full = std::any_of(metas.begin(), metas.end(), [](const SourceMeta& m) {
        return m.type == DatasetType::kFullFeatures;
    });
    const bool any_partial = !vertical.empty();

    switch (plan.mode) {
        case TrainMode::kHpt:
            if (any_partial) throw ConfigError("hpt plan: every source must have type T_f");
            break;
        case TrainMode::kVpt:
            if (any_full) throw ConfigError("vpt plan: every source must have type T_p");
            break;
        case TrainMode::kHybrid:
            break;
    }

    // Feature geometry: T_f sources carry the full feature set; the vertical
    // group's slices must concatenate to the same width.
    std::size_t full_width = 0;
    for (const SourceMeta& m : metas)
        if (m.type == DatasetType::kFullFeatures) {
            if (full_width == 0) full_width = m.feature_count;
            if (m.feature_count != full_width)
                throw ConfigError("exchange_meta: full-feature sources disagree on width");
        }
    std::size_t vertical_width = 0;
    for (std::size_t id : vertical) vertical_width += metas[id - 1].feature_count;
    if (any_partial && any_full && vertical_width != full_width)
        throw ConfigError("exchange_meta: vertical group covers " +
                          std::to_string(vertical_width) + " features, full sources have " +
                          std::to_string(full_width));
    plan.n_feature = any_full ? full_width : vertical_width;
    if (plan.n_feature == 0) throw ConfigError("exchange_meta: zero-width feature space");
    if (!plan.arch.empty() && plan.arch.front() != plan.n_feature)
        throw ConfigError("exchange_meta: arch input width " + std::to_string(plan.arch.front()) +
                          " does not match feature count " + std::to_string(plan.n_feature));

    // Vertical sources contribute aligned rows, so they must agree on sample
    // counts; labels come from exactly one member. Full-feature sources own
    // their rows and each supplies the labels for them.
    if (any_partial) {
        const std::size_t rows = metas[vertical.front() - 1].sample_count;
        std::size_t holders = 0;
        for (std::size_t id : vertical) {
            if (metas[id - 1].sample_count != rows)
                throw ConfigError("exchange_meta: vertical sources disagree on sample count");
            holders += metas[id - 1].has_labels;
        }
        if (holders != 1)
            throw ConfigError("exchange_meta: exactly one vertical source must hold labels, got " +
                              std::to_string(holders));
    }
    for (const SourceMeta& m : metas)
        if (m.type == DatasetType::kFullFeatures && !m.has_labels)
            throw ConfigError("exchange_meta: full-feature source " +
                              std::to_string(m.source_id) + " must supply labels for its rows");

    std::size_t min_count = SIZE_MAX;
    for (const SourceMeta& m : metas) min_count = std::min(min_count, m.sample_count);
    if (plan.p_batch == 0 || plan.p_batch > min_count)
        throw ConfigError("exchange_meta: p_batch must be in [1, min sample count]");
}

ErAlignment entity_resolution_stub(const std::vector<std::vector<std::uint64_t>>& id_hashes,
                                   std::uint64_t /*coordinator_seed*/) {
    if (id_hashes.empty()) throw Error("entity resolution: no sources");
    std::set<std::uint64_t> common(id_hashes.front().begin(), id_hashes.front().end());
    for (std::size_t k = 1; k < id_hashes.size(); ++k) {
        std::set<std::uint64_t> next;
        for (std::uint64_t h : id_hashes[k])
            if (common.count(h)) next.insert(h);
        common.swap(next);
    }
    if (common.empty()) throw Error("entity resolution: empty id intersection");

    ErAlignment out;
    out.per_source_rows.resize(id_hashes.size());
    // Aligned order follows the first source's local order of the matched
    // entities (join-left order); per-wave shuffles randomize positions
    // before anything is encrypted.
    std::vector<std::uint64_t> aligned_ids;
    for (std::uint64_t h : id_hashes.front())
        if (common.count(h)) aligned_ids.push_back(h);
    out.count = aligned_ids.size();
    for (std::size_t k = 0; k < id_hashes.size(); ++k) {
        std::unordered_map<std::uint64_t, std::size_t> where;
        for (std::size_t i = 0; i < id_hashes[k].size(); ++i) where[id_hashes[k][i]] = i;
        out.per_source_rows[k].reserve(out.count);
        for (std::uint64_t h : aligned_ids) out.per_source_rows[k].push_back(where.at(h));
    }
    return out;
}

GuardVerdict privacy_guard_check(const TrainingPlan& plan, std::size_t n_feature) {
    const std::size_t n_shuffle = plan.n_shuffle();
    // Strict inequality: n_epoch / n_shuffle < n_feature, compared in
    // integers as n_epoch < n_feature * n_shuffle.
    if (plan.epochs < n_feature * n_shuffle) return {true, ""};
    return {false, "per-position exposure " + std::to_string(plan.epochs) + "/" +
                       std::to_string(n_shuffle) + " epochs reaches the feature count " +
                       std::to_string(n_feature) +
                       "; lower epochs or shuffle more often"};
}

std::uint64_t wave_perm_seed(const TrainingPlan& plan, std::size_t group_index,
                             std::size_t wave) {
    return mix(mix(plan.seed, 0xe417u), mix(group_index + 1, wave + 1));
}

MatD one_hot_padded(const std::vector<int>& labels, std::size_t classes, std::size_t p_batch) {
    if (labels.size() > p_batch) throw Error("one_hot_padded: more labels than batch rows");
    MatD y = MatD::Zero(static_cast<Eigen::Index>(p_batch), static_cast<Eigen::Index>(classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
            throw Error("one_hot_padded: label out of range");
        y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return y;
}

SourceWaveBatches source_wave_batches(const ClientSource& src, const TrainingPlan& plan,
                                      std::size_t group_index,
                                      const std::vector<std::size_t>* er_rows,
                                      std::size_t wave) {
    const std::size_t count = er_rows ? er_rows->size() : src.data.size();
    Prng prng(wave_perm_seed(plan, group_index, wave));
    const std::vector<std::size_t> perm = prng.permutation(count);

    SourceWaveBatches out;
    out.perm_digest = perm_digest_of(perm);
    const std::size_t batches = (count + plan.p_batch - 1) / plan.p_batch;
    const auto feats = static_cast<Eigen::Index>(src.data.features());
    for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t begin = b * plan.p_batch;
        const std::size_t real = std::min(plan.p_batch, count - begin);
        MatD x = MatD::Zero(static_cast<Eigen::Index>(plan.p_batch), feats);
        std::vector<int> labels;
        labels.reserve(real);
        for (std::size_t i = 0; i < real; ++i) {
            const std::size_t aligned = perm[begin + i];
            const std::size_t local = er_rows ? (*er_rows)[aligned] : aligned;
            x.row(static_cast<Eigen::Index>(i)) = src.data.X.row(static_cast<Eigen::Index>(local));
            if (src.has_labels) labels.push_back(src.data.labels[local]);
        }
        out.ff.push_back(std::move(x));
        out.real_rows.push_back(real);
        if (src.has_labels) out.labels.push_back(std::move(labels));
    }
    return out;
}

WavePlain compose_plain_wave(const std::vector<ClientSource>& sources,
                             const TrainingPlan& plan, const std::optional<ErAlignment>& er,
                             std::size_t wave, std::size_t classes) {
    // Per group, gather every member's batches, then round-robin groups into
    // the step stream.
    struct GroupSteps {
        std::vector<StepPlain> steps;
        std::uint64_t digest = 0;
    };
    std::vector<GroupSteps> groups(plan.groups.size());

    for (std::size_t g = 0; g < plan.groups.size(); ++g) {
        const auto& ids = plan.groups[g];
        std::vector<SourceWaveBatches> parts;
        parts.reserve(ids.size());
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const ClientSource& src = sources[ids[k] - 1];
            const std::vector<std::size_t>* rows = nullptr;
            if (plan.group_type[g] == DatasetType::kPartialFeatures) {
                if (!er) throw Error("compose_plain_wave: vertical group without alignment");
                rows = &er->per_source_rows[k];
            }
            parts.push_back(source_wave_batches(src, plan, g, rows, wave));
        }
        const std::size_t batches = parts.front().ff.size();
        for (const auto& p : parts)
            if (p.ff.size() != batches)
                throw Error("compose_plain_wave: group members disagree on batch count");
        groups[g].digest = parts.front().perm_digest;

        for (std::size_t b = 0; b < batches; ++b) {
            StepPlain step;
            step.group_index = g;
            step.real_rows = parts.front().real_rows[b];
            Eigen::Index width = 0;
            for (const auto& p : parts) width += p.ff[b].cols();
            step.X.resize(static_cast<Eigen::Index>(plan.p_batch), width);
            Eigen::Index at = 0;
            for (const auto& p : parts) {
                step.X.middleCols(at, p.ff[b].cols()) = p.ff[b];
                at += p.ff[b].cols();
            }
            const std::vector<int>* labels = nullptr;
            for (std::size_t k = 0; k < ids.size(); ++k)
                if (sources[ids[k] - 1].has_labels) labels = &parts[k].labels[b];
            if (!labels) throw Error("compose_plain_wave: no label holder in group");
            step.Y = one_hot_padded(*labels, classes, plan.p_batch);
            groups[g].steps.push_back(std::move(step));
        }
    }

    WavePlain wave_out;
    for (const auto& g : groups) wave_out.perm_digests.push_back(g.digest);
    std::vector<std::size_t> cursor(groups.size(), 0);
    bool more = true;
    while (more) {
        more = false;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (cursor[g] < groups[g].steps.size()) {
                wave_out.steps.push_back(std::move(groups[g].steps[cursor[g]++]));
                more = true;
            }
        }
    }
    return wave_out;
}

LocalClientPool::LocalClientPool(std::vector<ClientSource> sources, const TrainingPlan& plan,
                                 std::optional<ErAlignment> er, const SiPublicKey& si_pk,
                                 const std::vector<MiPartyKey>& mi_keys, RandomSource& rng)
    : sources_(std::move(sources)),
      plan_(plan),
      er_(std::move(er)),
      si_pk_(&si_pk),
      mi_keys_(mi_keys),
      rng_(&rng) {}

LocalClientPool::LocalClientPool(std::vector<ClientSource> sources, const TrainingPlan& plan,
                                 std::optional<ErAlignment> er)
    : sources_(std::move(sources)), plan_(plan), er_(std::move(er)) {}

const WavePlain& LocalClientPool::plain_wave(std::size_t wave) {
    if (!plain_cache_ || plain_cache_->first != wave)
        plain_cache_.emplace(wave, compose_plain_wave(sources_, plan_, er_, wave,
                                                      plan_.arch.back()));
    return plain_cache_->second;
}

const WaveCipher& LocalClientPool::cipher_wave(std::size_t wave) {
    if (cipher_cache_ && cipher_cache_->first == wave) return cipher_cache_->second;
    if (si_pk_ == nullptr) throw Error("client pool: no keys for ciphertext waves");

    const FixedPointCodec codec{plan_.eps_client, plan_.value_bound};
    const SiEncryptor si_enc(*si_pk_);
    std::unordered_map<std::size_t, MiEncryptor> mi_encs;
    for (const MiPartyKey& k : mi_keys_) mi_encs.emplace(k.source_id, MiEncryptor(k));

    WaveCipher out;
    // Same composition as the plain path; each member then encrypts its own
    // slice (fresh randomness every wave, so ciphertexts cannot be tracked
    // across shuffles).
    struct GroupSteps {
        std::vector<StepCipher> steps;
        std::uint64_t digest = 0;
    };
    std::vector<GroupSteps> groups(plan_.groups.size());
    for (std::size_t g = 0; g < plan_.groups.size(); ++g) {
        const auto& ids = plan_.groups[g];
        std::vector<SourceWaveBatches> parts;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const ClientSource& src = sources_[ids[k] - 1];
            const std::vector<std::size_t>* rows = nullptr;
            if (plan_.group_type[g] == DatasetType::kPartialFeatures)
                rows = &er_->per_source_rows[k];
            parts.push_back(source_wave_batches(src, plan_, g, rows, wave));
        }
        groups[g].digest = parts.front().perm_digest;
        const std::size_t batches = parts.front().ff.size();
        for (std::size_t b = 0; b < batches; ++b) {
            StepCipher step;
            step.group_index = g;
            step.real_rows = parts.front().real_rows[b];
            for (std::size_t k = 0; k < ids.size(); ++k) {
                const std::size_t id = ids[k];
                const MatD& x = parts[k].ff[b];
                if (plan_.group_type[g] == DatasetType::kFullFeatures) {
                    step.ff.push_back(
                        s2phc_client_encrypt(codec, si_enc, si_pk_->eta(), x, id, *rng_));
                } else {
                    // Vertical sources address the MI scheme by their slot
                    // (position within the group), not the global id.
                    const std::size_t slot = k + 1;
                    auto it = mi_encs.find(slot);
                    if (it == mi_encs.end())
                        throw Error("client pool: no MI key for slot " + std::to_string(slot));
                    step.ff.push_back(s2pvc_client_encrypt(
                        codec, it->second, slot, static_cast<std::size_t>(x.cols()), x, *rng_));
                }
                step.bp.push_back(s2phc_client_encrypt(codec, si_enc, si_pk_->eta(),
                                                       x.transpose(), id, *rng_));
                if (sources_[id - 1].has_labels)
                    step.Y = one_hot_padded(parts[k].labels[b], plan_.arch.back(), plan_.p_batch);
            }
            if (step.Y.rows() == 0) throw Error("client pool: no label holder in group");
            groups[g].steps.push_back(std::move(step));
        }
    }
    for (const auto& g : groups) out.perm_digests.push_back(g.digest);
    std::vector<std::size_t> cursor(groups.size(), 0);
    bool more = true;
    while (more) {
        more = false;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (cursor[g] < groups[g].steps.size()) {
                out.steps.push_back(std::move(groups[g].steps[cursor[g]++]));
                more = true;
            }
        }
    }
    cipher_cache_.emplace(wave, std::move(out));
    return cipher_cache_->second;
}

std::vector<char> columns_passing_filter(const MatI& encoded, std::size_t tau) {
    std::vector<char> ok(static_cast<std::size_t>(encoded.cols()), 1);
    for (Eigen::Index j = 0; j < encoded.cols(); ++j) {
        std::size_t nonzero = 0;
        for (Eigen::Index i = 0; i < encoded.rows(); ++i) nonzero += (encoded(i, j) != 0);
        ok[static_cast<std::size_t>(j)] = nonzero >= tau;
    }
    return ok;
}

namespace {

/// Splits W into the filter-passing column subset, runs eval on it, and
/// scatters results back with zero columns for the dropped ones.
template <typename EvalFn>
EvalResult eval_with_column_filter(const MatD& W, const FixedPointCodec& server_codec,
                                   std::size_t tau, Eigen::Index out_rows, EvalFn&& eval,
                                   std::size_t* dropped) {
    const MatI Wint = server_codec.encode_matrix(W);
    const std::vector<char> ok = columns_passing_filter(Wint, tau);
    const auto passing =
        static_cast<Eigen::Index>(std::count(ok.begin(), ok.end(), char(1)));

    EvalResult out;
    out.decoded = MatD::Zero(out_rows, W.cols());
    out.integers = MatI::Zero(out_rows, W.cols());
    if (passing == 0) {
        if (dropped) *dropped += static_cast<std::size_t>(W.cols());
        return out;
    }
    MatD Wsub(W.rows(), passing);
    Eigen::Index at = 0;
    for (Eigen::Index j = 0; j < W.cols(); ++j)
        if (ok[static_cast<std::size_t>(j)]) Wsub.col(at++) = W.col(j);

    EvalResult sub = eval(Wsub);
    out.t_keyreq_ms = sub.t_keyreq_ms;
    out.t_decrypt_ms = sub.t_decrypt_ms;
    at = 0;
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
        if (ok[static_cast<std::size_t>(j)]) {
            out.decoded.col(j) = sub.decoded.col(at);
            out.integers.col(j) = sub.integers.col(at);
            ++at;
        } else if (dropped) {
            ++*dropped;
        }
    }
    return out;
}

}  // namespace

SecureEngine::SecureEngine(CipherWaveSource& source, const SiPublicKey& si_pk,
                           const SecureEngineConfig& cfg)
    : source_(&source), si_pk_(&si_pk), cfg_(cfg) {}

EvalResult SecureEngine::eval_ff(std::size_t wave, std::size_t step, const MatD& W1) {
    const StepCipher& s = source_->cipher_wave(wave).steps[step];
    const FixedPointCodec server_codec{cfg_.eps_server, cfg_.value_bound};
    ServerEvalConfig pcfg{server_codec, cfg_.ff_solver, cfg_.keys};
    const auto rows = static_cast<Eigen::Index>(s.ff.front().rows_r);
    return eval_with_column_filter(
        W1, server_codec, cfg_.tau, rows,
        [&](const MatD& Wsub) {
            if (s.ff.front().kind == BatchKind::kHptRowCipher)
                return s2phc_server_eval(*si_pk_, s.ff, Wsub, pcfg);
            return s2pvc_server_eval(si_pk_->params, s.ff, Wsub, pcfg);
        },
        &dropped_columns_);
}

EvalResult SecureEngine::eval_bp(std::size_t wave, std::size_t step, const MatD& sigma) {
    const StepCipher& s = source_->cipher_wave(wave).steps[step];
    const FixedPointCodec server_codec{cfg_.eps_server, cfg_.value_bound};
    ServerEvalConfig pcfg{server_codec, cfg_.bp_solver, cfg_.keys};
    std::size_t rows = 0;
    for (const EncryptedBatch& b : s.bp) rows += b.rows_r;
    return eval_with_column_filter(
        sigma, server_codec, cfg_.tau, static_cast<Eigen::Index>(rows),
        [&](const MatD& ssub) { return s2phc_server_eval(*si_pk_, s.bp, ssub, pcfg); },
        &dropped_columns_);
}

const MatD& SecureEngine::labels(std::size_t wave, std::size_t step) {
    return source_->cipher_wave(wave).steps[step].Y;
}
std::size_t SecureEngine::real_rows(std::size_t wave, std::size_t step) {
    return source_->cipher_wave(wave).steps[step].real_rows;
}
std::size_t SecureEngine::steps_in_wave(std::size_t wave) {
    return source_->cipher_wave(wave).steps.size();
}
std::uint64_t SecureEngine::wave_digest(std::size_t wave) {
    const auto& d = source_->cipher_wave(wave).perm_digests;
    return fnv1a64(d.data(), d.size() * sizeof(std::uint64_t));
}

FixedPointEngine::FixedPointEngine(PlainWaveSource& source, unsigned eps_client,
                                   unsigned eps_server, double value_bound, std::size_t tau)
    : source_(&source),
      client_codec_{eps_client, value_bound},
      server_codec_{eps_server, value_bound},
      tau_(tau) {}

EvalResult FixedPointEngine::eval_ff(std::size_t wave, std::size_t step, const MatD& W1) {
    const StepPlain& s = source_->plain_wave(wave).steps[step];
    const MatI Xint = client_codec_.encode_matrix(s.X);
    return eval_with_column_filter(
        W1, server_codec_, tau_, s.X.rows(),
        [&](const MatD& Wsub) {
            EvalResult r;
            r.integers = Xint * server_codec_.encode_matrix(Wsub);
            r.decoded.resize(r.integers.rows(), r.integers.cols());
            for (Eigen::Index i = 0; i < r.integers.rows(); ++i)
                for (Eigen::Index j = 0; j < r.integers.cols(); ++j)
                    r.decoded(i, j) = decode_product(r.integers(i, j),
                                                     client_codec_.precision_eps,
                                                     server_codec_.precision_eps);
            return r;
        },
        nullptr);
}

EvalResult FixedPointEngine::eval_bp(std::size_t wave, std::size_t step, const MatD& sigma) {
    const StepPlain& s = source_->plain_wave(wave).steps[step];
    const MatI XTint = client_codec_.encode_matrix(s.X).transpose();
    return eval_with_column_filter(
        sigma, server_codec_, tau_, s.X.cols(),
        [&](const MatD& ssub) {
            EvalResult r;
            r.integers = XTint * server_codec_.encode_matrix(ssub);
            r.decoded.resize(r.integers.rows(), r.integers.cols());
            for (Eigen::Index i = 0; i < r.integers.rows(); ++i)
                for (Eigen::Index j = 0; j < r.integers.cols(); ++j)
                    r.decoded(i, j) = decode_product(r.integers(i, j),
                                                     client_codec_.precision_eps,
                                                     server_codec_.precision_eps);
            return r;
        },
        nullptr);
}

const MatD& FixedPointEngine::labels(std::size_t wave, std::size_t step) {
    return source_->plain_wave(wave).steps[step].Y;
}
std::size_t FixedPointEngine::real_rows(std::size_t wave, std::size_t step) {
    return source_->plain_wave(wave).steps[step].real_rows;
}
std::size_t FixedPointEngine::steps_in_wave(std::size_t wave) {
    return source_->plain_wave(wave).steps.size();
}
std::uint64_t FixedPointEngine::wave_digest(std::size_t wave) {
    const auto& d = source_->plain_wave(wave).perm_digests;
    return fnv1a64(d.data(), d.size() * sizeof(std::uint64_t));
}

EvalResult FloatEngine::eval_ff(std::size_t wave, std::size_t step, const MatD& W1) {
    EvalResult r;
    r.decoded = source_->plain_wave(wave).steps[step].X * W1;
    return r;
}
EvalResult FloatEngine::eval_bp(std::size_t wave, std::size_t step, const MatD& sigma) {
    EvalResult r;
    r.decoded = source_->plain_wave(wave).steps[step].X.transpose() * sigma;
    return r;
}
const MatD& FloatEngine::labels(std::size_t wave, std::size_t step) {
    return source_->plain_wave(wave).steps[step].Y;
}
std::size_t FloatEngine::real_rows(std::size_t wave, std::size_t step) {
    return source_->plain_wave(wave).steps[step].real_rows;
}
std::size_t FloatEngine::steps_in_wave(std::size_t wave) {
    return source_->plain_wave(wave).steps.size();
}
std::uint64_t FloatEngine::wave_digest(std::size_t wave) {
    const auto& d = source_->plain_wave(wave).perm_digests;
    return fnv1a64(d.data(), d.size() * sizeof(std::uint64_t));
}

TrainResult server_train(const TrainingPlan& plan, Layer1Engine& engine, const MatD* eval_X,
                         const std::vector<int>* eval_labels, std::ostream* metrics_jsonl) {
    const GuardVerdict guard = privacy_guard_check(plan, plan.n_feature);
    if (!guard.pass && !plan.unsafe_override_privacy_guard)
        throw Error("privacy guard refused: " + guard.reason);

    const auto t_start = Clock::now();
    TrainResult result;
    result.model = init_weights(plan.arch, plan.seed, plan.hidden_activation);

    std::set<std::uint64_t> orderings;
    const std::size_t n_shuffle = plan.n_shuffle();
    std::size_t epoch = 0;
    for (std::size_t wave = 0; wave < n_shuffle && epoch < plan.epochs; ++wave) {
        orderings.insert(engine.wave_digest(wave));
        const std::size_t wave_epochs =
            std::min(plan.shuffle_period, plan.epochs - epoch);
        for (std::size_t we = 0; we < wave_epochs; ++we, ++epoch) {
            const std::size_t steps = engine.steps_in_wave(wave);
            for (std::size_t s = 0; s < steps; ++s) {
                BatchMetric metric;
                metric.epoch = epoch;
                metric.batch = s;

                EvalResult ff = engine.eval_ff(wave, s, result.model.weights[0]);
                metric.t_keyreq_ms += ff.t_keyreq_ms;
                metric.t_decrypt_ms += ff.t_decrypt_ms;

                auto t_plain = Clock::now();
                BatchActivations acts = feed_forward_from(ff.decoded, result.model);
                acts.labels = engine.labels(wave, s);
                acts.real_rows = engine.real_rows(wave, s);
                Gradients grads = gradients(acts, result.model, plan.l2);
                metric.loss = cross_entropy(acts.act.back(), acts.labels, acts.real_rows);
                // The first-layer error signal is encoded server-side; clamp
                // to the codec bound like any other encoded operand.
                MatD sigma = grads.sigma.cwiseMax(-plan.value_bound).cwiseMin(plan.value_bound);
                metric.t_plain_ms += ms_since(t_plain);

                EvalResult bp = engine.eval_bp(wave, s, sigma);
                metric.t_keyreq_ms += bp.t_keyreq_ms;
                metric.t_decrypt_ms += bp.t_decrypt_ms;

                t_plain = Clock::now();
                grads.by_layer[0] =
                    bp.decoded / static_cast<double>(acts.real_rows) +
                    plan.l2 * result.model.weights[0];
                apply_grads(result.model, grads.by_layer, plan.alpha, plan.value_bound);
                metric.t_plain_ms += ms_since(t_plain);

                result.final_loss = metric.loss;
                ++result.total_steps;
                if (metrics_jsonl) {
                    (*metrics_jsonl) << "{\"epoch\":" << metric.epoch
                                     << ",\"batch\":" << metric.batch
                                     << ",\"loss\":" << metric.loss
                                     << ",\"t_keyreq_ms\":" << metric.t_keyreq_ms
                                     << ",\"t_decrypt_ms\":" << metric.t_decrypt_ms
                                     << ",\"t_plain_ms\":" << metric.t_plain_ms << "}\n";
                }
                result.metrics.push_back(metric);
            }
        }
    }

    result.distinct_orderings = orderings.size();
    if (eval_X && eval_labels)
        result.accuracy_test = accuracy(result.model, *eval_X, *eval_labels);
    result.total_ms = ms_since(t_start);
    if (metrics_jsonl) {
        (*metrics_jsonl) << "{\"summary\":{\"final_loss\":" << result.final_loss
                         << ",\"accuracy_test\":" << result.accuracy_test
                         << ",\"steps\":" << result.total_steps
                         << ",\"orderings\":" << result.distinct_orderings
                         << ",\"total_ms\":" << result.total_ms << "}}\n";
    }
    return result;
}

}  // namespace nnemd
