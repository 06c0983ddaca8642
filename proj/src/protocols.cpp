#include "nnemd/protocols.hpp"

#include <chrono>
#include <map>

#include "nnemd/errors.hpp"

namespace nnemd {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::vector<std::int64_t> column_of(const MatI& m, Eigen::Index j) {
    std::vector<std::int64_t> col(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) col[static_cast<std::size_t>(i)] = m(i, j);
    return col;
}

std::vector<std::int64_t> row_of(const MatI& m, Eigen::Index i) {
    std::vector<std::int64_t> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    return row;
}

void check_solver_bound(const ServerEvalConfig& cfg, const FixedPointCodec& client_guess,
                        std::int64_t eta_effective) {
    if (cfg.solver == nullptr) throw ProtocolError("server eval: no dlog solver configured");
    const std::int64_t needed = product_bound(client_guess, cfg.server_codec, eta_effective);
    if (cfg.solver->bound() < needed)
        throw ProtocolError("server eval: dlog solver bound " +
                            std::to_string(cfg.solver->bound()) +
                            " below required product bound " + std::to_string(needed));
}

}  // namespace

EncryptedBatch s2phc_client_encrypt(const FixedPointCodec& codec, const SiPublicKey& pk,
                                    const MatD& X, std::size_t source_id, RandomSource& rng) {
    return s2phc_client_encrypt(codec, SiEncryptor(pk), pk.eta(), X, source_id, rng);
}

EncryptedBatch s2phc_client_encrypt(const FixedPointCodec& codec, const SiEncryptor& enc,
                                    std::size_t eta, const MatD& X, std::size_t source_id,
                                    RandomSource& rng) {
    if (static_cast<std::size_t>(X.cols()) > eta)
        throw ProtocolError("s2phc client: row length " + std::to_string(X.cols()) +
                            " exceeds eta = " + std::to_string(eta));
    const MatI Xint = codec.encode_matrix(X);  // aborts on any bound violation
    EncryptedBatch batch;
    batch.kind = BatchKind::kHptRowCipher;
    batch.source_id = source_id;
    batch.rows_r = static_cast<std::size_t>(X.rows());
    batch.cols_c = static_cast<std::size_t>(X.cols());
    batch.eps_client = codec.precision_eps;
    batch.si_rows.reserve(batch.rows_r);
    for (Eigen::Index i = 0; i < Xint.rows(); ++i)
        batch.si_rows.push_back(enc.encrypt(row_of(Xint, i), rng));
    return batch;
}

EvalResult s2phc_server_eval(const SiPublicKey& pk, const std::vector<EncryptedBatch>& batches,
                             const MatD& W, const ServerEvalConfig& cfg) {
    if (batches.empty()) throw ProtocolError("s2phc server: no batches");
    const std::size_t cols = batches.front().cols_c;
    const unsigned eps_client = batches.front().eps_client;
    std::size_t total_rows = 0;
    for (const EncryptedBatch& b : batches) {
        if (b.kind != BatchKind::kHptRowCipher)
            throw ProtocolError("s2phc server: batch is not SI row ciphertext");
        if (b.cols_c != cols)
            throw ProtocolError("s2phc server: batches disagree on column count");
        if (b.eps_client != eps_client)
            throw ProtocolError("s2phc server: batches disagree on client precision");
        if (b.si_rows.size() != b.rows_r)
            throw ProtocolError("s2phc server: row count does not match declared shape");
        total_rows += b.rows_r;
    }
    if (static_cast<std::size_t>(W.rows()) != cols)
        throw ProtocolError("s2phc server: W has " + std::to_string(W.rows()) +
                            " rows, ciphertext columns = " + std::to_string(cols));
    if (cols > pk.eta()) throw ProtocolError("s2phc server: column count exceeds eta");

    FixedPointCodec client_codec{eps_client, 1.0};
    check_solver_bound(cfg, client_codec, static_cast<std::int64_t>(cols));

    const MatI Wint = cfg.server_codec.encode_matrix(W);

    EvalResult result;
    auto t0 = Clock::now();
    // One functional key per weight column; identical columns share a key
    // within this call, never across calls (W changes every step).
    std::vector<SiFunctionalKey> keys;
    keys.reserve(static_cast<std::size_t>(Wint.cols()));
    std::map<std::vector<std::int64_t>, std::size_t> seen;
    for (Eigen::Index j = 0; j < Wint.cols(); ++j) {
        auto col = column_of(Wint, j);
        auto [it, fresh] = seen.try_emplace(col, keys.size());
        if (fresh) keys.push_back(cfg.keys->request_si_key(col));
    }
    result.t_keyreq_ms = ms_since(t0);

    t0 = Clock::now();
    result.integers.resize(static_cast<Eigen::Index>(total_rows), Wint.cols());
    result.decoded.resize(static_cast<Eigen::Index>(total_rows), Wint.cols());
    Eigen::Index out_row = 0;
    for (const EncryptedBatch& b : batches) {
        for (const SiCiphertext& ct : b.si_rows) {
            for (Eigen::Index j = 0; j < Wint.cols(); ++j) {
                const SiFunctionalKey& fk = keys[seen.at(column_of(Wint, j))];
                const std::int64_t v = si_decrypt(pk, ct, fk, *cfg.solver);
                result.integers(out_row, j) = v;
                result.decoded(out_row, j) =
                    decode_product(v, eps_client, cfg.server_codec.precision_eps);
            }
            ++out_row;
        }
    }
    result.t_decrypt_ms = ms_since(t0);
    return result;
}

EncryptedBatch s2pvc_client_encrypt(const FixedPointCodec& codec, const MiPartyKey& key,
                                    const MatD& X_slice, RandomSource& rng) {
    return s2pvc_client_encrypt(codec, MiEncryptor(key), key.source_id, key.eta(), X_slice, rng);
}

EncryptedBatch s2pvc_client_encrypt(const FixedPointCodec& codec, const MiEncryptor& enc,
                                    std::size_t source_id, std::size_t eta_i,
                                    const MatD& X_slice, RandomSource& rng) {
    if (static_cast<std::size_t>(X_slice.cols()) > eta_i)
        throw ProtocolError("s2pvc client: slice width " + std::to_string(X_slice.cols()) +
                            " exceeds eta_i = " + std::to_string(eta_i));
    // The scheme encrypts fixed-length vectors; narrower slices are
    // zero-padded up to eta_i.
    MatI Xint = MatI::Zero(X_slice.rows(), static_cast<Eigen::Index>(eta_i));
    Xint.leftCols(X_slice.cols()) = codec.encode_matrix(X_slice);
    EncryptedBatch batch;
    batch.kind = BatchKind::kVptSliceCipher;
    batch.source_id = source_id;
    batch.rows_r = static_cast<std::size_t>(X_slice.rows());
    batch.cols_c = eta_i;
    batch.eps_client = codec.precision_eps;
    batch.mi_rows.reserve(batch.rows_r);
    for (Eigen::Index i = 0; i < Xint.rows(); ++i)
        batch.mi_rows.push_back(enc.encrypt(row_of(Xint, i), rng));
    return batch;
}

EvalResult s2pvc_server_eval(const GroupParams& params,
                             const std::vector<EncryptedBatch>& per_source, const MatD& W,
                             const ServerEvalConfig& cfg) {
    if (per_source.empty()) throw ProtocolError("s2pvc server: no batches");
    const std::size_t n = per_source.size();
    const std::size_t rows = per_source.front().rows_r;
    const unsigned eps_client = per_source.front().eps_client;
    std::size_t total_cols = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const EncryptedBatch& b = per_source[i];
        if (b.kind != BatchKind::kVptSliceCipher)
            throw ProtocolError("s2pvc server: batch is not MI slice ciphertext");
        if (b.source_id != i + 1)
            throw ProtocolError("s2pvc server: missing batch for source " +
                                std::to_string(i + 1));
        if (b.rows_r != rows)
            throw ProtocolError("s2pvc server: sources disagree on row count");
        if (b.eps_client != eps_client)
            throw ProtocolError("s2pvc server: sources disagree on client precision");
        if (b.mi_rows.size() != b.rows_r)
            throw ProtocolError("s2pvc server: row count does not match declared shape");
        total_cols += b.cols_c;
    }
    if (static_cast<std::size_t>(W.rows()) != total_cols)
        throw ProtocolError("s2pvc server: W has " + std::to_string(W.rows()) +
                            " rows, concatenated slice width = " + std::to_string(total_cols));

    FixedPointCodec client_codec{eps_client, 1.0};
    check_solver_bound(cfg, client_codec, static_cast<std::int64_t>(total_cols));

    const MatI Wint = cfg.server_codec.encode_matrix(W);

    EvalResult result;
    auto t0 = Clock::now();
    std::vector<MiFunctionalKey> keys;
    keys.reserve(static_cast<std::size_t>(Wint.cols()));
    std::map<std::vector<std::int64_t>, std::size_t> seen;
    for (Eigen::Index j = 0; j < Wint.cols(); ++j) {
        auto col = column_of(Wint, j);
        auto [it, fresh] = seen.try_emplace(col, keys.size());
        if (fresh) keys.push_back(cfg.keys->request_mi_key(col));
    }
    result.t_keyreq_ms = ms_since(t0);

    t0 = Clock::now();
    result.integers.resize(static_cast<Eigen::Index>(rows), Wint.cols());
    result.decoded.resize(static_cast<Eigen::Index>(rows), Wint.cols());
    std::vector<MiCiphertext> aligned(n);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t k = 0; k < n; ++k) aligned[k] = per_source[k].mi_rows[i];
        for (Eigen::Index j = 0; j < Wint.cols(); ++j) {
            const MiFunctionalKey& fk = keys[seen.at(column_of(Wint, j))];
            const std::int64_t v = mi_decrypt(params, aligned, fk, *cfg.solver);
            result.integers(static_cast<Eigen::Index>(i), j) = v;
            result.decoded(static_cast<Eigen::Index>(i), j) =
                decode_product(v, eps_client, cfg.server_codec.precision_eps);
        }
    }
    result.t_decrypt_ms = ms_since(t0);
    return result;
}

}  // namespace nnemd
