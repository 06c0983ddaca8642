#include "nnemd/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include "nnemd/errors.hpp"
#include "nnemd/prng.hpp"
#include "nnemd/runner.hpp"

namespace nnemd {

namespace {

constexpr int kRecvTimeoutMs = 180000;

void send_all(int fd, const char* data, std::size_t len) {
    std::size_t sent = 0;
    while (sent < len) {
        const ssize_t n = ::send(fd, data + sent, len - sent, MSG_NOSIGNAL);
        if (n <= 0) throw NetError("send failed: " + std::string(std::strerror(errno)));
        sent += static_cast<std::size_t>(n);
    }
}

void recv_all(int fd, char* data, std::size_t len) {
    std::size_t got = 0;
    while (got < len) {
        pollfd pfd{fd, POLLIN, 0};
        const int pr = ::poll(&pfd, 1, kRecvTimeoutMs);
        if (pr <= 0) throw NetError("recv timed out");
        const ssize_t n = ::recv(fd, data + got, len - got, 0);
        if (n == 0) throw NetError("peer closed connection");
        if (n < 0) throw NetError("recv failed: " + std::string(std::strerror(errno)));
        got += static_cast<std::size_t>(n);
    }
}

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw NetError("bad host address '" + host + "'");
    return addr;
}

}  // namespace

std::string encode_frame(const WireMessage& msg) {
    Json j{{"type", msg.type}, {"run_digest", msg.run_digest}, {"payload", msg.payload}};
    return j.dump();
}

WireMessage decode_frame(const std::string& body) {
    Json j = Json::parse(body);
    WireMessage msg;
    msg.type = j.at("type").get<std::string>();
    msg.run_digest = j.at("run_digest").get<std::string>();
    msg.payload = j.value("payload", Json::object());
    return msg;
}

Conn::~Conn() {
    if (fd_ >= 0) ::close(fd_);
}

void Conn::send(const WireMessage& msg) {
    const std::string body = encode_frame(msg);
    unsigned char header[4] = {
        static_cast<unsigned char>((body.size() >> 24) & 0xff),
        static_cast<unsigned char>((body.size() >> 16) & 0xff),
        static_cast<unsigned char>((body.size() >> 8) & 0xff),
        static_cast<unsigned char>(body.size() & 0xff),
    };
    send_all(fd_, reinterpret_cast<const char*>(header), 4);
    send_all(fd_, body.data(), body.size());
}

WireMessage Conn::recv() {
    unsigned char header[4];
    recv_all(fd_, reinterpret_cast<char*>(header), 4);
    const std::size_t len = (std::size_t(header[0]) << 24) | (std::size_t(header[1]) << 16) |
                            (std::size_t(header[2]) << 8) | std::size_t(header[3]);
    if (len > max_frame_)
        throw NetError("frame of " + std::to_string(len) + " bytes exceeds the limit");
    std::string body(len, '\0');
    recv_all(fd_, body.data(), len);
    WireMessage msg = decode_frame(body);
    if (!digest_.empty() && msg.run_digest != digest_)
        throw NetError("run digest mismatch on '" + msg.type + "'");
    return msg;
}

Listener::Listener(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw NetError("socket failed");
    const int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = make_addr(host, port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
        throw NetError("bind to " + host + ":" + std::to_string(port) + " failed: " +
                       std::strerror(errno));
    if (::listen(fd_, 16) != 0) throw NetError("listen failed");
}

Listener::~Listener() {
    if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Conn> Listener::accept_conn(int timeout_ms) {
    pollfd pfd{fd_, POLLIN, 0};
    const int pr = ::poll(&pfd, 1, timeout_ms);
    if (pr <= 0) throw NetError("accept timed out");
    const int cfd = ::accept(fd_, nullptr, nullptr);
    if (cfd < 0) throw NetError("accept failed");
    const int one = 1;
    ::setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return std::make_unique<Conn>(cfd);
}

std::unique_ptr<Conn> connect_to(const std::string& host, std::uint16_t port, int retry_ms,
                                 int attempts) {
    sockaddr_in addr = make_addr(host, port);
    for (int i = 0; i < attempts; ++i) {
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw NetError("socket failed");
        if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
            const int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            return std::make_unique<Conn>(fd);
        }
        ::close(fd);
        std::this_thread::sleep_for(std::chrono::milliseconds(retry_ms));
    }
    throw NetError("cannot connect to " + host + ":" + std::to_string(port));
}

// ---------------------------------------------------------------------------
// TPA process: registrations up front, then functional-key service until the
// server reports Done.

int run_tpa(const RunConfig& cfg) {
    const std::string digest = cfg.run_digest();
    TrainingPlan plan = cfg.plan();
    // The TPA needs the feature total to size its schemes; it is derivable
    // from the shared arch.
    plan.n_feature = cfg.arch.empty() ? 0 : cfg.arch.front();
    if (plan.n_feature == 0) throw ConfigError("tpa: arch must be configured");

    const GroupParams params = named_params(cfg.group);
    RandomSource crypto_rng(mix_seed(plan.seed));
    auto authority = build_authority(cfg, params, plan, crypto_rng);

    Listener listener(cfg.tpa_host, cfg.tpa_port);
    std::cerr << "[tpa] listening on " << cfg.tpa_host << ":" << cfg.tpa_port << "\n";

    std::vector<std::unique_ptr<Conn>> conns;
    bool done = false;
    while (!done) {
        std::vector<pollfd> pfds;
        pfds.push_back({listener.fd(), POLLIN, 0});
        for (auto& c : conns) pfds.push_back({c->fd(), POLLIN, 0});
        if (::poll(pfds.data(), pfds.size(), kRecvTimeoutMs) <= 0)
            throw NetError("tpa: idle timeout");

        if (pfds[0].revents & POLLIN) {
            auto conn = listener.accept_conn();
            conn->expect_digest(digest);
            conn->set_max_frame(cfg.max_frame_mb << 20);
            conns.push_back(std::move(conn));
            continue;
        }
        for (std::size_t i = 1; i < pfds.size(); ++i) {
            if (!(pfds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            Conn& conn = *conns[i - 1];
            WireMessage msg;
            try {
                msg = conn.recv();
            } catch (const NetError&) {
                conns.erase(conns.begin() + static_cast<std::ptrdiff_t>(i) - 1);
                break;
            }
            if (msg.type == "Hello") {
                conn.send({"Hello", digest, Json{{"role", "tpa"}}});
            } else if (msg.type == "RegisterSource") {
                Json out;
                try {
                    out["si_pk"] = to_json(authority->si_public());
                    out["eta"] = authority->eta();
                    out["eta_vec"] = authority->eta_vec();
                    if (msg.payload.value("want_mi", false)) {
                        const auto slot = msg.payload.at("mi_slot").get<std::size_t>();
                        RegistrationBundle bundle = authority->register_source(slot);
                        out["mi_key"] = to_json(bundle.mi_key);
                    }
                    conn.send({"PublicKeyDelivery", digest, out});
                } catch (const Error& e) {
                    conn.send({"Abort", digest, Json{{"reason", e.what()}}});
                }
            } else if (msg.type == "SiKeyRequest") {
                try {
                    auto y = msg.payload.at("y").get<std::vector<std::int64_t>>();
                    conn.send({"SiKeyResponse", digest,
                               Json{{"ok", true}, {"key", to_json(authority->serve_si_key(y))}}});
                } catch (const Error& e) {
                    conn.send({"SiKeyResponse", digest,
                               Json{{"ok", false}, {"reason", e.what()}}});
                }
            } else if (msg.type == "MiKeyRequest") {
                try {
                    auto y = msg.payload.at("y").get<std::vector<std::int64_t>>();
                    conn.send({"MiKeyResponse", digest,
                               Json{{"ok", true}, {"key", to_json(authority->serve_mi_key(y))}}});
                } catch (const Error& e) {
                    conn.send({"MiKeyResponse", digest,
                               Json{{"ok", false}, {"reason", e.what()}}});
                }
            } else if (msg.type == "Done") {
                done = true;
            } else if (msg.type == "Abort") {
                std::cerr << "[tpa] peer abort: " << msg.payload.value("reason", "") << "\n";
                done = true;
            } else {
                conn.send({"Abort", digest, Json{{"reason", "unknown type " + msg.type}}});
                done = true;
            }
            break;
        }
    }
    std::cerr << "[tpa] issued " << authority->issued_count() << " keys, exiting\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Server process.

namespace {

class RemoteKeyService : public KeyService {
public:
    RemoteKeyService(Conn& conn, std::string digest) : conn_(&conn), digest_(std::move(digest)) {}

    SiFunctionalKey request_si_key(const std::vector<std::int64_t>& y) override {
        conn_->send({"SiKeyRequest", digest_, Json{{"y", y}}});
        const WireMessage resp = conn_->recv();
        if (resp.type != "SiKeyResponse") throw NetError("unexpected reply " + resp.type);
        if (!resp.payload.at("ok").get<bool>())
            throw FilterRejected(resp.payload.value("reason", "rejected"));
        return si_functional_key_from_json(resp.payload.at("key"));
    }

    MiFunctionalKey request_mi_key(const std::vector<std::int64_t>& y) override {
        conn_->send({"MiKeyRequest", digest_, Json{{"y", y}}});
        const WireMessage resp = conn_->recv();
        if (resp.type != "MiKeyResponse") throw NetError("unexpected reply " + resp.type);
        if (!resp.payload.at("ok").get<bool>())
            throw FilterRejected(resp.payload.value("reason", "rejected"));
        return mi_functional_key_from_json(resp.payload.at("key"));
    }

private:
    Conn* conn_;
    std::string digest_;
};

/// All waves as collected from the client pool, keyed by the shared batch
/// composition the server derives from the plan.
class CollectedWaves : public CipherWaveSource {
public:
    CollectedWaves(std::vector<WaveCipher> waves) : waves_(std::move(waves)) {}
    const WaveCipher& cipher_wave(std::size_t wave) override { return waves_.at(wave); }

private:
    std::vector<WaveCipher> waves_;
};

struct GroupLayout {
    // group index and position-within-group per source id
    std::vector<std::size_t> group_of;
    std::vector<std::size_t> slot_of;
    std::vector<std::size_t> batches_per_group;
    std::vector<std::vector<std::size_t>> step_of;  // [group][batch] -> step index
};

GroupLayout compute_layout(const TrainingPlan& plan,
                           const std::vector<SourceMeta>& metas,
                           const std::optional<ErAlignment>& er) {
    GroupLayout lay;
    lay.group_of.resize(metas.size() + 1);
    lay.slot_of.resize(metas.size() + 1);
    lay.batches_per_group.resize(plan.groups.size());
    for (std::size_t g = 0; g < plan.groups.size(); ++g) {
        for (std::size_t k = 0; k < plan.groups[g].size(); ++k) {
            lay.group_of[plan.groups[g][k]] = g;
            lay.slot_of[plan.groups[g][k]] = k;
        }
        const std::size_t count = plan.group_type[g] == DatasetType::kPartialFeatures
                                      ? er->count
                                      : metas[plan.groups[g][0] - 1].sample_count;
        lay.batches_per_group[g] = (count + plan.p_batch - 1) / plan.p_batch;
    }
    // Round-robin step order across groups.
    lay.step_of.resize(plan.groups.size());
    for (std::size_t g = 0; g < plan.groups.size(); ++g)
        lay.step_of[g].resize(lay.batches_per_group[g]);
    std::size_t step = 0;
    bool more = true;
    std::vector<std::size_t> cursor(plan.groups.size(), 0);
    while (more) {
        more = false;
        for (std::size_t g = 0; g < plan.groups.size(); ++g) {
            if (cursor[g] < lay.batches_per_group[g]) {
                lay.step_of[g][cursor[g]++] = step++;
                more = true;
            }
        }
    }
    return lay;
}

}  // namespace

int run_server(const RunConfig& cfg) {
    const std::string digest = cfg.run_digest();

    auto tpa = connect_to(cfg.tpa_host, cfg.tpa_port);
    tpa->expect_digest(digest);
    tpa->set_max_frame(cfg.max_frame_mb << 20);
    tpa->send({"Hello", digest, Json{{"role", "server"}}});
    if (tpa->recv().type != "Hello") throw NetError("server: bad tpa hello");
    tpa->send({"RegisterSource", digest, Json{{"want_mi", false}}});
    const WireMessage delivery = tpa->recv();
    if (delivery.type != "PublicKeyDelivery")
        throw NetError("server: expected key delivery, got " + delivery.type);
    const SiPublicKey si_pk = si_public_key_from_json(delivery.payload.at("si_pk"));

    Listener listener(cfg.server_host, cfg.server_port);
    std::cerr << "[server] listening on " << cfg.server_host << ":" << cfg.server_port << "\n";

    // Phase 1: every client says hello and ships its meta.
    std::map<std::size_t, std::unique_ptr<Conn>> clients;
    std::vector<SourceMeta> metas(cfg.sources);
    std::map<std::size_t, std::vector<std::uint64_t>> id_hashes;
    for (std::size_t i = 0; i < cfg.sources; ++i) {
        auto conn = listener.accept_conn();
        conn->expect_digest(digest);
        conn->set_max_frame(cfg.max_frame_mb << 20);
        const WireMessage hello = conn->recv();
        if (hello.type != "Hello") throw NetError("server: expected Hello");
        conn->send({"Hello", digest, Json{{"role", "server"}}});
        const WireMessage meta_msg = conn->recv();
        if (meta_msg.type != "MetaInfo") throw NetError("server: expected MetaInfo");
        SourceMeta meta;
        const Json& m = meta_msg.payload.at("meta");
        meta.source_id = m.at("source_id").get<std::size_t>();
        meta.type = m.at("type").get<std::string>() == "p" ? DatasetType::kPartialFeatures
                                                           : DatasetType::kFullFeatures;
        meta.sample_count = m.at("samples").get<std::size_t>();
        meta.feature_count = m.at("features").get<std::size_t>();
        meta.has_labels = m.at("has_labels").get<bool>();
        if (meta.source_id < 1 || meta.source_id > cfg.sources)
            throw NetError("server: source id out of range");
        metas[meta.source_id - 1] = meta;
        if (meta_msg.payload.contains("id_hashes"))
            id_hashes[meta.source_id] =
                meta_msg.payload.at("id_hashes").get<std::vector<std::uint64_t>>();
        clients[meta.source_id] = std::move(conn);
    }

    TrainingPlan plan = cfg.plan();
    exchange_meta(plan, metas);

    const GuardVerdict guard = privacy_guard_check(plan, plan.n_feature);
    if (!guard.pass && !plan.unsafe_override_privacy_guard) {
        for (auto& [id, conn] : clients)
            conn->send({"Abort", digest, Json{{"reason", "privacy guard refused: " + guard.reason}}});
        tpa->send({"Done", digest, {}});
        std::cerr << "[server] privacy guard refused: " << guard.reason << "\n";
        return 3;
    }

    std::optional<ErAlignment> er;
    std::vector<std::size_t> vertical_ids;
    for (std::size_t g = 0; g < plan.groups.size(); ++g)
        if (plan.group_type[g] == DatasetType::kPartialFeatures) vertical_ids = plan.groups[g];
    if (!vertical_ids.empty()) {
        std::vector<std::vector<std::uint64_t>> hashes;
        for (std::size_t id : vertical_ids) hashes.push_back(id_hashes.at(id));
        er = entity_resolution_stub(hashes, mix_seed(plan.seed));
    }

    const GroupLayout layout = compute_layout(plan, metas, er);

    // Phase 2: acknowledge the plan; vertical members receive their aligned
    // row order.
    for (auto& [id, conn] : clients) {
        Json ack{{"n_feature", plan.n_feature},
                 {"classes", plan.arch.back()},
                 {"group_index", layout.group_of[id]},
                 {"group_slot", layout.slot_of[id]}};
        if (er && metas[id - 1].type == DatasetType::kPartialFeatures)
            ack["er_rows"] = er->per_source_rows[layout.slot_of[id]];
        conn->send({"MetaInfo", digest, ack});
    }

    // Phase 3: collect every wave from every client.
    const std::size_t n_waves = plan.n_shuffle();
    std::vector<WaveCipher> waves(n_waves);
    for (std::size_t w = 0; w < n_waves; ++w) {
        std::size_t total = 0;
        for (std::size_t g = 0; g < plan.groups.size(); ++g) total += layout.batches_per_group[g];
        waves[w].steps.resize(total);
        waves[w].perm_digests.resize(plan.groups.size());
        for (std::size_t g = 0; g < plan.groups.size(); ++g)
            for (std::size_t b = 0; b < layout.batches_per_group[g]; ++b) {
                StepCipher& s = waves[w].steps[layout.step_of[g][b]];
                s.group_index = g;
                s.ff.resize(plan.groups[g].size());
                s.bp.resize(plan.groups[g].size());
            }
    }

    std::size_t done_clients = 0;
    while (done_clients < clients.size()) {
        for (auto& [id, conn] : clients) {
            if (!conn) continue;
            const WireMessage msg = conn->recv();
            if (msg.type == "Done") {
                ++done_clients;
                conn.reset();
                break;
            }
            if (msg.type == "Abort")
                throw NetError("client " + std::to_string(id) +
                               " aborted: " + msg.payload.value("reason", ""));
            const std::size_t w = msg.payload.at("wave").get<std::size_t>();
            const std::size_t b = msg.payload.at("batch").get<std::size_t>();
            const std::size_t g = layout.group_of[id];
            StepCipher& step = waves.at(w).steps.at(layout.step_of[g][b]);
            if (msg.type == "CiphertextBatch") {
                EncryptedBatch batch = encrypted_batch_from_json(msg.payload.at("data"));
                step.real_rows = msg.payload.at("real_rows").get<std::size_t>();
                const std::string role = msg.payload.at("role").get<std::string>();
                if (role == "ff")
                    step.ff[layout.slot_of[id]] = std::move(batch);
                else
                    step.bp[layout.slot_of[id]] = std::move(batch);
                if (msg.payload.contains("perm_digest"))
                    waves[w].perm_digests[g] = msg.payload.at("perm_digest").get<std::uint64_t>();
            } else if (msg.type == "LabelBlock") {
                const auto labels = msg.payload.at("labels").get<std::vector<int>>();
                step.Y = one_hot_padded(labels, plan.arch.back(), plan.p_batch);
            } else {
                throw NetError("server: unexpected message " + msg.type);
            }
        }
    }

    // Phase 4: train.
    const GroupParams params = si_pk.params;
    SolverPair solvers = build_solvers(cfg, params, plan);
    RemoteKeyService keys(*tpa, digest);
    CollectedWaves source(std::move(waves));
    SecureEngineConfig ecfg;
    ecfg.eps_server = plan.eps_server;
    ecfg.value_bound = plan.value_bound;
    ecfg.tau = plan.tau;
    ecfg.ff_solver = solvers.ff.get();
    ecfg.bp_solver = solvers.bp.get();
    ecfg.keys = &keys;
    SecureEngine engine(source, si_pk, ecfg);

    const std::optional<Dataset> test = load_test_dataset(cfg);
    std::ofstream metrics_file;
    std::ostream* metrics = nullptr;
    if (!cfg.metrics_path.empty()) {
        metrics_file.open(cfg.metrics_path, std::ios::trunc);
        metrics = &metrics_file;
    }
    TrainResult result = server_train(plan, engine, test ? &test->X : nullptr,
                                      test ? &test->labels : nullptr, metrics);
    if (!cfg.checkpoint_path.empty()) save_checkpoint(result.model, cfg.checkpoint_path);

    tpa->send({"Done", digest, {}});
    std::cerr << "[server] trained " << result.total_steps << " steps, final loss "
              << result.final_loss << ", test accuracy " << result.accuracy_test << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// Client process.

int run_client(const RunConfig& cfg) {
    if (cfg.source_id == 0) throw ConfigError("client: source_id must be set");
    const std::string digest = cfg.run_digest();
    const ClientSource src = client_slice(cfg, cfg.source_id);

    auto tpa = connect_to(cfg.tpa_host, cfg.tpa_port);
    tpa->expect_digest(digest);
    tpa->set_max_frame(cfg.max_frame_mb << 20);
    tpa->send({"Hello", digest, Json{{"role", "client"}, {"source_id", cfg.source_id}}});
    if (tpa->recv().type != "Hello") throw NetError("client: bad tpa hello");

    // Vertical sources register for an MI identity; the slot is the position
    // among partial sources in ascending id order.
    Json reg{{"want_mi", src.type == DatasetType::kPartialFeatures}};
    if (src.type == DatasetType::kPartialFeatures) {
        const std::vector<char> layout = source_layout(cfg);
        std::size_t slot = 0;
        for (std::size_t id = 1; id <= cfg.source_id; ++id)
            if (layout[id - 1] == 'p') ++slot;
        reg["mi_slot"] = slot;
    }
    tpa->send({"RegisterSource", digest, reg});
    const WireMessage delivery = tpa->recv();
    if (delivery.type == "Abort")
        throw NetError("client: registration rejected: " +
                       delivery.payload.value("reason", ""));
    if (delivery.type != "PublicKeyDelivery")
        throw NetError("client: expected key delivery");
    const SiPublicKey si_pk = si_public_key_from_json(delivery.payload.at("si_pk"));
    std::optional<MiPartyKey> mi_key;
    if (delivery.payload.contains("mi_key"))
        mi_key = mi_party_key_from_json(delivery.payload.at("mi_key"));
    tpa.reset();

    auto server = connect_to(cfg.server_host, cfg.server_port);
    server->expect_digest(digest);
    server->set_max_frame(cfg.max_frame_mb << 20);
    server->send({"Hello", digest, Json{{"role", "client"}, {"source_id", cfg.source_id}}});
    if (server->recv().type != "Hello") throw NetError("client: bad server hello");

    Json meta{{"meta", Json{{"source_id", src.source_id},
                            {"type", src.type == DatasetType::kPartialFeatures ? "p" : "f"},
                            {"samples", src.data.size()},
                            {"features", src.data.features()},
                            {"has_labels", src.has_labels}}}};
    if (src.type == DatasetType::kPartialFeatures) {
        std::vector<std::uint64_t> hashes;
        for (std::uint64_t raw : src.data.ids) hashes.push_back(fnv1a64(&raw, sizeof(raw)));
        meta["id_hashes"] = hashes;
    }
    server->send({"MetaInfo", digest, meta});
    const WireMessage ack = server->recv();
    if (ack.type == "Abort")
        throw NetError("client: server abort: " + ack.payload.value("reason", ""));
    if (ack.type != "MetaInfo") throw NetError("client: expected plan ack");
    const auto group_index = ack.payload.at("group_index").get<std::size_t>();
    std::optional<std::vector<std::size_t>> er_rows;
    if (ack.payload.contains("er_rows"))
        er_rows = ack.payload.at("er_rows").get<std::vector<std::size_t>>();

    TrainingPlan plan = cfg.plan();
    plan.n_feature = cfg.arch.front();
    const FixedPointCodec codec{plan.eps_client, plan.value_bound};
    RandomSource rng;  // encryption nonces: system entropy; results don't depend on them
    const SiEncryptor si_enc(si_pk);
    std::optional<MiEncryptor> mi_enc;
    if (mi_key) mi_enc.emplace(*mi_key);

    const std::size_t n_waves = plan.n_shuffle();
    for (std::size_t w = 0; w < n_waves; ++w) {
        const SourceWaveBatches batches = source_wave_batches(
            src, plan, group_index, er_rows ? &*er_rows : nullptr, w);
        for (std::size_t b = 0; b < batches.ff.size(); ++b) {
            const MatD& x = batches.ff[b];
            EncryptedBatch ff =
                src.type == DatasetType::kPartialFeatures
                    ? s2pvc_client_encrypt(codec, *mi_enc, mi_key->source_id,
                                           static_cast<std::size_t>(x.cols()), x, rng)
                    : s2phc_client_encrypt(codec, si_enc, si_pk.eta(), x, src.source_id, rng);
            EncryptedBatch bp = s2phc_client_encrypt(codec, si_enc, si_pk.eta(), x.transpose(),
                                                     src.source_id, rng);
            server->send({"CiphertextBatch", digest,
                          Json{{"wave", w},
                               {"batch", b},
                               {"role", "ff"},
                               {"real_rows", batches.real_rows[b]},
                               {"perm_digest", batches.perm_digest},
                               {"data", to_json(ff)}}});
            server->send({"CiphertextBatch", digest,
                          Json{{"wave", w},
                               {"batch", b},
                               {"role", "bp"},
                               {"real_rows", batches.real_rows[b]},
                               {"perm_digest", batches.perm_digest},
                               {"data", to_json(bp)}}});
            if (src.has_labels)
                server->send({"LabelBlock", digest,
                              Json{{"wave", w}, {"batch", b}, {"labels", batches.labels[b]}}});
        }
    }
    server->send({"Done", digest, {}});
    return 0;
}

}  // namespace nnemd
