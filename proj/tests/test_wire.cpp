#include <doctest.h>

#include <thread>

#include "nnemd/errors.hpp"
#include "nnemd/prng.hpp"
#include "nnemd/wire.hpp"

using namespace nnemd;

namespace {

std::uint16_t pick_port() {
    static std::uint16_t next = static_cast<std::uint16_t>(20000 + (getpid() % 20000));
    return next += 7;
}

}  // namespace

TEST_CASE("frame encode/decode is the identity for every message type") {
    Prng rng(3);
    const GroupParams params = named_params("test64");
    RandomSource crng(5);
    auto [pk, msk] = si_setup(params, 3, crng);
    const MiMasterKeys mi = mi_setup(params, {2, 2}, 2, crng);

    std::vector<WireMessage> messages;
    messages.push_back({"Hello", "digest", Json{{"role", "client"}, {"source_id", 2}}});
    messages.push_back({"RegisterSource", "digest", Json{{"want_mi", true}, {"mi_slot", 1}}});
    messages.push_back({"PublicKeyDelivery", "digest",
                        Json{{"si_pk", to_json(pk)},
                             {"mi_key", to_json(mi_party_key(mi, 1))},
                             {"eta", 3}}});
    messages.push_back({"MetaInfo", "digest",
                        Json{{"meta", Json{{"source_id", 1},
                                           {"type", "p"},
                                           {"samples", 10},
                                           {"features", 2},
                                           {"has_labels", true}}},
                             {"id_hashes", std::vector<std::uint64_t>{1, 2, 3}}}});
    const SiCiphertext ct = si_encrypt(pk, {1, -2, 3}, crng);
    EncryptedBatch batch;
    batch.kind = BatchKind::kHptRowCipher;
    batch.source_id = 1;
    batch.rows_r = 1;
    batch.cols_c = 3;
    batch.eps_client = 2;
    batch.si_rows.push_back(ct);
    messages.push_back({"CiphertextBatch", "digest",
                        Json{{"wave", 0}, {"batch", 1}, {"role", "ff"}, {"real_rows", 1},
                             {"data", to_json(batch)}}});
    messages.push_back({"SiKeyRequest", "digest", Json{{"y", std::vector<std::int64_t>{1, 2, 3}}}});
    messages.push_back(
        {"SiKeyResponse", "digest",
         Json{{"ok", true}, {"key", to_json(si_derive_key(params, msk, {1, 2, 3}))}}});
    messages.push_back(
        {"MiKeyRequest", "digest", Json{{"y", std::vector<std::int64_t>{1, 2, 3, 4}}}});
    messages.push_back(
        {"MiKeyResponse", "digest",
         Json{{"ok", true}, {"key", to_json(mi_derive_key(mi, {1, 2, 3, 4}))}}});
    messages.push_back({"LabelBlock", "digest",
                        Json{{"wave", 0}, {"batch", 1}, {"labels", std::vector<int>{0, 1}}}});
    messages.push_back({"Abort", "digest", Json{{"reason", "nope"}}});
    messages.push_back({"Done", "digest", Json::object()});

    for (const WireMessage& m : messages) {
        const WireMessage back = decode_frame(encode_frame(m));
        CHECK(back.type == m.type);
        CHECK(back.run_digest == m.run_digest);
        CHECK(back.payload == m.payload);
    }
}

TEST_CASE("ciphertext serialization survives the wire exactly") {
    const GroupParams params = named_params("test64");
    RandomSource rng(7);
    auto [pk, msk] = si_setup(params, 4, rng);
    const DlogSolver solver = DlogSolver::build(params, 1000, DlogMode::kFullTable);
    const SiCiphertext ct = si_encrypt(pk, {3, -1, 4, -1}, rng);
    const SiCiphertext back = si_ciphertext_from_json(to_json(ct));
    CHECK(back.ct0 == ct.ct0);
    const SiFunctionalKey fk = si_derive_key(params, msk, {2, 2, 1, 1});
    CHECK(si_decrypt(pk, back, fk, solver) == 3 * 2 - 2 + 4 - 1);
}

TEST_CASE("tcp round trip with digest validation") {
    const std::uint16_t port = pick_port();
    Listener listener("127.0.0.1", port);

    std::thread server([&] {
        auto conn = listener.accept_conn(5000);
        conn->expect_digest("good");
        const WireMessage m = conn->recv();
        conn->send({"Hello", "good", Json{{"echo", m.payload}}});
        // second message carries a wrong digest
        CHECK_THROWS_AS(conn->recv(), NetError);
    });

    auto client = connect_to("127.0.0.1", port);
    client->send({"Hello", "good", Json{{"n", 42}}});
    const WireMessage reply = client->recv();
    CHECK(reply.payload.at("echo").at("n") == 42);
    client->send({"Hello", "evil", Json::object()});
    server.join();
}

TEST_CASE("oversized frames are refused") {
    const std::uint16_t port = pick_port();
    Listener listener("127.0.0.1", port);
    std::thread server([&] {
        auto conn = listener.accept_conn(5000);
        conn->set_max_frame(64);
        CHECK_THROWS_AS(conn->recv(), NetError);
    });
    auto client = connect_to("127.0.0.1", port);
    client->send({"Hello", "digest", Json{{"blob", std::string(1024, 'x')}}});
    server.join();
}

TEST_CASE("connect_to eventually fails against a dead port") {
    CHECK_THROWS_AS(connect_to("127.0.0.1", 1, 1, 3), NetError);
}
