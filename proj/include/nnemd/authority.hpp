#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nnemd/feip_multi.hpp"
#include "nnemd/feip_single.hpp"

namespace nnemd {

enum class Scheme { kSi, kMi };

/// Key-issuance policy: a request vector must carry at least tau non-zero
/// entries (blocks unit-vector probes that would reveal single features) and
/// fit the length limits fixed at setup.
struct WeightsFilterPolicy {
    std::size_t tau = 2;  // >= 2
    std::size_t eta_limit = 0;
    std::vector<std::size_t> eta_vec_limit;
};

struct FilterVerdict {
    bool accepted = false;
    std::string reason;  // set when rejected
};

FilterVerdict filter_check(const WeightsFilterPolicy& policy,
                           const std::vector<std::int64_t>& y, Scheme scheme);

struct KeyRequestRecord {
    std::int64_t timestamp_ms = 0;
    Scheme scheme = Scheme::kSi;
    std::uint64_t y_digest = 0;
    bool issued = false;
    std::string reason;
};

struct RegistrationBundle {
    std::size_t source_id = 0;
    SiPublicKey si_public;
    MiPartyKey mi_key;
    std::size_t eta = 0;
    std::vector<std::size_t> eta_vec;
};

/// The trusted authority: owns both cryptosystems' master material,
/// registers sources, and serves functional keys behind the weights filter.
/// Key issuance is serialized by an internal mutex; read-only views of
/// public material are safe concurrently.
class Authority {
public:
    Authority(const GroupParams& params, std::size_t eta,
              const std::vector<std::size_t>& eta_vec, std::size_t n, std::size_t tau,
              RandomSource& rng);

    /// Delivers keys exactly once per id; ids are dense in [1, n].
    RegistrationBundle register_source(std::size_t source_id);

    SiFunctionalKey serve_si_key(const std::vector<std::int64_t>& y);
    MiFunctionalKey serve_mi_key(const std::vector<std::int64_t>& y);

    const SiPublicKey& si_public() const { return si_pk_; }
    const GroupParams& params() const { return si_pk_.params; }
    std::size_t eta() const { return si_pk_.eta(); }
    const std::vector<std::size_t>& eta_vec() const { return policy_.eta_vec_limit; }
    std::size_t capacity() const { return mi_keys_.sources(); }
    const WeightsFilterPolicy& policy() const { return policy_; }

    std::vector<KeyRequestRecord> request_log() const;
    std::size_t issued_count() const;

    /// Optional append-only persistence of the request log (one JSON line
    /// per request).
    void persist_log_to(const std::string& path);

    // Test-only views of master material; production callers use the
    // register/serve surface.
    const SiMasterSecret& si_master() const { return si_msk_; }
    const MiMasterKeys& mi_master() const { return mi_keys_; }

private:
    void log_request(Scheme scheme, const std::vector<std::int64_t>& y, bool issued,
                     const std::string& reason);

    SiPublicKey si_pk_;
    SiMasterSecret si_msk_;
    MiMasterKeys mi_keys_;
    WeightsFilterPolicy policy_;
    std::set<std::size_t> registered_;
    std::vector<KeyRequestRecord> log_;
    std::optional<std::string> log_path_;
    mutable std::mutex mu_;
};

/// Channel through which evaluators request functional keys. Implemented
/// in-process (below) and over the wire (net module).
class KeyService {
public:
    virtual ~KeyService() = default;
    virtual SiFunctionalKey request_si_key(const std::vector<std::int64_t>& y) = 0;
    virtual MiFunctionalKey request_mi_key(const std::vector<std::int64_t>& y) = 0;
};

class LocalKeyService : public KeyService {
public:
    explicit LocalKeyService(Authority& authority) : authority_(&authority) {}
    SiFunctionalKey request_si_key(const std::vector<std::int64_t>& y) override {
        return authority_->serve_si_key(y);
    }
    MiFunctionalKey request_mi_key(const std::vector<std::int64_t>& y) override {
        return authority_->serve_mi_key(y);
    }

private:
    Authority* authority_;
};

}  // namespace nnemd
