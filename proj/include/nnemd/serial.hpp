#pragma once

#include <json.hpp>

#include "nnemd/protocols.hpp"

namespace nnemd {

using Json = nlohmann::json;

Json to_json(const GroupParams& p);
GroupParams group_params_from_json(const Json& j);

Json to_json(const SiPublicKey& pk);
SiPublicKey si_public_key_from_json(const Json& j);

Json to_json(const SiCiphertext& ct);
SiCiphertext si_ciphertext_from_json(const Json& j);

Json to_json(const SiFunctionalKey& fk);
SiFunctionalKey si_functional_key_from_json(const Json& j);

Json to_json(const MiPartyKey& k);
MiPartyKey mi_party_key_from_json(const Json& j);

Json to_json(const MiCiphertext& ct);
MiCiphertext mi_ciphertext_from_json(const Json& j);

Json to_json(const MiFunctionalKey& fk);
MiFunctionalKey mi_functional_key_from_json(const Json& j);

Json to_json(const EncryptedBatch& b);
EncryptedBatch encrypted_batch_from_json(const Json& j);

Json matrix_to_json(const MatD& m);
MatD matrix_from_json(const Json& j);

}  // namespace nnemd
