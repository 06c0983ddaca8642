#include "nnemd/authority.hpp"

#include <chrono>
#include <fstream>
#include <numeric>

#include "nnemd/errors.hpp"
#include "nnemd/prng.hpp"

namespace nnemd {

namespace {

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::uint64_t digest_vector(const std::vector<std::int64_t>& y) {
    return fnv1a64(y.data(), y.size() * sizeof(std::int64_t));
}

}  // namespace

FilterVerdict filter_check(const WeightsFilterPolicy& policy,
                           const std::vector<std::int64_t>& y, Scheme scheme) {
    if (scheme == Scheme::kSi) {
        if (y.size() > policy.eta_limit)
            return {false, "request length " + std::to_string(y.size()) +
                               " exceeds eta = " + std::to_string(policy.eta_limit)};
    } else {
        const std::size_t total = std::accumulate(policy.eta_vec_limit.begin(),
                                                  policy.eta_vec_limit.end(), std::size_t{0});
        if (y.size() != total)
            return {false, "request length " + std::to_string(y.size()) +
                               " does not match sum(eta_i) = " + std::to_string(total)};
    }
    std::size_t nonzero = 0;
    for (std::int64_t v : y) nonzero += (v != 0);
    if (nonzero < policy.tau)
        return {false, "only " + std::to_string(nonzero) +
                           " non-zero entries; the filter requires at least " +
                           std::to_string(policy.tau)};
    return {true, ""};
}

Authority::Authority(const GroupParams& params, std::size_t eta,
                     const std::vector<std::size_t>& eta_vec, std::size_t n, std::size_t tau,
                     RandomSource& rng) {
    if (tau < 2) throw Error("authority: tau must be >= 2");
    auto [pk, msk] = si_setup(params, eta, rng);
    si_pk_ = std::move(pk);
    si_msk_ = std::move(msk);
    mi_keys_ = mi_setup(params, eta_vec, n, rng);
    policy_.tau = tau;
    policy_.eta_limit = eta;
    policy_.eta_vec_limit = eta_vec;
}

RegistrationBundle Authority::register_source(std::size_t source_id) {
    std::lock_guard<std::mutex> lock(mu_);
    if (source_id < 1 || source_id > capacity())
        throw Error("authority: source id " + std::to_string(source_id) +
                    " outside capacity n = " + std::to_string(capacity()));
    if (registered_.count(source_id))
        throw Error("authority: source " + std::to_string(source_id) + " already registered");
    registered_.insert(source_id);
    return RegistrationBundle{source_id, si_pk_, mi_party_key(mi_keys_, source_id),
                              policy_.eta_limit, policy_.eta_vec_limit};
}

SiFunctionalKey Authority::serve_si_key(const std::vector<std::int64_t>& y) {
    std::lock_guard<std::mutex> lock(mu_);
    const FilterVerdict verdict = filter_check(policy_, y, Scheme::kSi);
    log_request(Scheme::kSi, y, verdict.accepted, verdict.reason);
    if (!verdict.accepted) throw FilterRejected("si key request rejected: " + verdict.reason);
    return si_derive_key(si_pk_.params, si_msk_, y);
}

MiFunctionalKey Authority::serve_mi_key(const std::vector<std::int64_t>& y) {
    std::lock_guard<std::mutex> lock(mu_);
    const FilterVerdict verdict = filter_check(policy_, y, Scheme::kMi);
    log_request(Scheme::kMi, y, verdict.accepted, verdict.reason);
    if (!verdict.accepted) throw FilterRejected("mi key request rejected: " + verdict.reason);
    return mi_derive_key(mi_keys_, y);
}

std::vector<KeyRequestRecord> Authority::request_log() const {
    std::lock_guard<std::mutex> lock(mu_);
    return log_;
}

std::size_t Authority::issued_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::size_t n = 0;
    for (const auto& rec : log_) n += rec.issued;
    return n;
}

void Authority::persist_log_to(const std::string& path) {
    std::lock_guard<std::mutex> lock(mu_);
    log_path_ = path;
}

void Authority::log_request(Scheme scheme, const std::vector<std::int64_t>& y, bool issued,
                            const std::string& reason) {
    KeyRequestRecord rec{now_ms(), scheme, digest_vector(y), issued, reason};
    log_.push_back(rec);
    if (log_path_) {
        std::ofstream out(*log_path_, std::ios::app);
        out << "{\"ts_ms\":" << rec.timestamp_ms << ",\"scheme\":\""
            << (scheme == Scheme::kSi ? "si" : "mi") << "\",\"y_digest\":\"" << std::hex
            << rec.y_digest << std::dec << "\",\"verdict\":\""
            << (issued ? "issued" : "rejected") << "\",\"reason\":\"" << reason << "\"}\n";
    }
}

}  // namespace nnemd
