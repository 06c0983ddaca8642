#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nnemd/authority.hpp"
#include "nnemd/encoding.hpp"
#include "nnemd/matrix.hpp"

namespace nnemd {

enum class BatchKind { kHptRowCipher, kVptSliceCipher };

/// One mini-batch of row-wise ciphertexts, the unit the client pool hands
/// the server. shape describes the underlying integer matrix; all rows of a
/// batch share one length (shape.c) and one client precision.
struct EncryptedBatch {
    BatchKind kind = BatchKind::kHptRowCipher;
    std::size_t source_id = 0;
    std::size_t rows_r = 0;
    std::size_t cols_c = 0;
    unsigned eps_client = 0;
    std::vector<SiCiphertext> si_rows;  // kHptRowCipher
    std::vector<MiCiphertext> mi_rows;  // kVptSliceCipher

    std::size_t row_count() const {
        return kind == BatchKind::kHptRowCipher ? si_rows.size() : mi_rows.size();
    }
};

struct ServerEvalConfig {
    FixedPointCodec server_codec;   // eps_server + weight bound
    const DlogSolver* solver = nullptr;
    KeyService* keys = nullptr;
};

struct EvalResult {
    MatD decoded;     // |Z - X*W| within the encoding tolerance
    MatI integers;    // exact fixed-point products, bit-equal to integer matmul
    double t_keyreq_ms = 0;
    double t_decrypt_ms = 0;
};

/// Client side of the horizontally partitioned protocol: one SI ciphertext
/// per row of X. Completes without any message from the server.
EncryptedBatch s2phc_client_encrypt(const FixedPointCodec& codec, const SiPublicKey& pk,
                                    const MatD& X, std::size_t source_id, RandomSource& rng);

/// Variant reusing a prepared encryptor (fixed-base tables) across batches.
EncryptedBatch s2phc_client_encrypt(const FixedPointCodec& codec, const SiEncryptor& enc,
                                    std::size_t eta, const MatD& X, std::size_t source_id,
                                    RandomSource& rng);

/// Server side: requests one functional key per encoded weight column,
/// decrypts every (row, column) cell, decodes. Rows concatenate across
/// batches in the order given (callers pass ascending source id).
EvalResult s2phc_server_eval(const SiPublicKey& pk, const std::vector<EncryptedBatch>& batches,
                             const MatD& W, const ServerEvalConfig& cfg);

/// Client side of the vertically partitioned protocol: one MI ciphertext per
/// row of this source's feature slice.
EncryptedBatch s2pvc_client_encrypt(const FixedPointCodec& codec, const MiPartyKey& key,
                                    const MatD& X_slice, RandomSource& rng);
EncryptedBatch s2pvc_client_encrypt(const FixedPointCodec& codec, const MiEncryptor& enc,
                                    std::size_t source_id, std::size_t eta_i, const MatD& X_slice,
                                    RandomSource& rng);

/// Server side: one batch per source (ascending id), equal row counts; row i
/// of the result decrypts the n aligned ciphertexts jointly.
EvalResult s2pvc_server_eval(const GroupParams& params,
                             const std::vector<EncryptedBatch>& per_source, const MatD& W,
                             const ServerEvalConfig& cfg);

}  // namespace nnemd
