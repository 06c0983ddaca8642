#include "nnemd/serial.hpp"

#include "nnemd/errors.hpp"

namespace nnemd {

namespace {

Json elems_to_json(const std::vector<GroupElement>& v) {
    Json arr = Json::array();
    for (const auto& e : v) arr.push_back(to_hex(e.value));
    return arr;
}

std::vector<GroupElement> elems_from_json(const Json& arr) {
    std::vector<GroupElement> v;
    v.reserve(arr.size());
    for (const auto& s : arr) v.push_back(GroupElement{from_hex(s.get<std::string>())});
    return v;
}

Json scalars_to_json(const std::vector<Scalar>& v) {
    Json arr = Json::array();
    for (const auto& s : v) arr.push_back(to_hex(s.value));
    return arr;
}

std::vector<Scalar> scalars_from_json(const Json& arr) {
    std::vector<Scalar> v;
    v.reserve(arr.size());
    for (const auto& s : arr) v.push_back(Scalar{from_hex(s.get<std::string>())});
    return v;
}

}  // namespace

Json to_json(const GroupParams& p) {
    return Json{{"P", to_hex(p.modulus_P)},
                {"p", to_hex(p.order_p)},
                {"g", to_hex(p.generator_g)},
                {"lambda", p.security_lambda}};
}

GroupParams group_params_from_json(const Json& j) {
    return params_from_values(from_hex(j.at("P").get<std::string>()),
                              from_hex(j.at("p").get<std::string>()),
                              from_hex(j.at("g").get<std::string>()),
                              j.at("lambda").get<unsigned>());
}

Json to_json(const SiPublicKey& pk) {
    return Json{{"params", to_json(pk.params)}, {"h", elems_to_json(pk.h)}};
}

SiPublicKey si_public_key_from_json(const Json& j) {
    SiPublicKey pk;
    pk.params = group_params_from_json(j.at("params"));
    pk.h = elems_from_json(j.at("h"));
    return pk;
}

Json to_json(const SiCiphertext& ct) {
    return Json{{"ct0", to_hex(ct.ct0.value)}, {"cts", elems_to_json(ct.cts)}};
}

SiCiphertext si_ciphertext_from_json(const Json& j) {
    SiCiphertext ct;
    ct.ct0 = GroupElement{from_hex(j.at("ct0").get<std::string>())};
    ct.cts = elems_from_json(j.at("cts"));
    return ct;
}

Json to_json(const SiFunctionalKey& fk) {
    return Json{{"sk", to_hex(fk.sk.value)}, {"y", fk.y}};
}

SiFunctionalKey si_functional_key_from_json(const Json& j) {
    SiFunctionalKey fk;
    fk.sk = Scalar{from_hex(j.at("sk").get<std::string>())};
    fk.y = j.at("y").get<std::vector<std::int64_t>>();
    return fk;
}

Json to_json(const MiPartyKey& k) {
    return Json{{"source_id", k.source_id},
                {"params", to_json(k.params)},
                {"g_pow_a", Json::array({to_hex(k.g_pow_a[0].value), to_hex(k.g_pow_a[1].value)})},
                {"g_pow_wa", elems_to_json(k.g_pow_Wa_i)},
                {"u", scalars_to_json(k.u_i)}};
}

MiPartyKey mi_party_key_from_json(const Json& j) {
    MiPartyKey k;
    k.source_id = j.at("source_id").get<std::size_t>();
    k.params = group_params_from_json(j.at("params"));
    k.g_pow_a = {GroupElement{from_hex(j.at("g_pow_a")[0].get<std::string>())},
                 GroupElement{from_hex(j.at("g_pow_a")[1].get<std::string>())}};
    k.g_pow_Wa_i = elems_from_json(j.at("g_pow_wa"));
    k.u_i = scalars_from_json(j.at("u"));
    return k;
}

Json to_json(const MiCiphertext& ct) {
    return Json{{"source_id", ct.source_id},
                {"t", Json::array({to_hex(ct.t[0].value), to_hex(ct.t[1].value)})},
                {"c", elems_to_json(ct.c)}};
}

MiCiphertext mi_ciphertext_from_json(const Json& j) {
    MiCiphertext ct;
    ct.source_id = j.at("source_id").get<std::size_t>();
    ct.t = {GroupElement{from_hex(j.at("t")[0].get<std::string>())},
            GroupElement{from_hex(j.at("t")[1].get<std::string>())}};
    ct.c = elems_from_json(j.at("c"));
    return ct;
}

Json to_json(const MiFunctionalKey& fk) {
    Json d = Json::array();
    for (const auto& di : fk.d_list)
        d.push_back(Json::array({to_hex(di[0].value), to_hex(di[1].value)}));
    return Json{{"d", d}, {"z", to_hex(fk.z.value)}, {"y", fk.y}, {"eta_vec", fk.eta_vec}};
}

MiFunctionalKey mi_functional_key_from_json(const Json& j) {
    MiFunctionalKey fk;
    for (const auto& di : j.at("d"))
        fk.d_list.push_back({Scalar{from_hex(di[0].get<std::string>())},
                             Scalar{from_hex(di[1].get<std::string>())}});
    fk.z = Scalar{from_hex(j.at("z").get<std::string>())};
    fk.y = j.at("y").get<std::vector<std::int64_t>>();
    fk.eta_vec = j.at("eta_vec").get<std::vector<std::size_t>>();
    return fk;
}

Json to_json(const EncryptedBatch& b) {
    Json j{{"kind", b.kind == BatchKind::kHptRowCipher ? "hpt-row" : "vpt-slice"},
           {"source_id", b.source_id},
           {"shape", Json::array({b.rows_r, b.cols_c})},
           {"eps_client", b.eps_client}};
    Json rows = Json::array();
    if (b.kind == BatchKind::kHptRowCipher)
        for (const auto& ct : b.si_rows) rows.push_back(to_json(ct));
    else
        for (const auto& ct : b.mi_rows) rows.push_back(to_json(ct));
    j["rows"] = std::move(rows);
    return j;
}

EncryptedBatch encrypted_batch_from_json(const Json& j) {
    EncryptedBatch b;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "hpt-row")
        b.kind = BatchKind::kHptRowCipher;
    else if (kind == "vpt-slice")
        b.kind = BatchKind::kVptSliceCipher;
    else
        throw Error("encrypted batch: unknown kind '" + kind + "'");
    b.source_id = j.at("source_id").get<std::size_t>();
    b.rows_r = j.at("shape")[0].get<std::size_t>();
    b.cols_c = j.at("shape")[1].get<std::size_t>();
    b.eps_client = j.at("eps_client").get<unsigned>();
    for (const auto& row : j.at("rows")) {
        if (b.kind == BatchKind::kHptRowCipher)
            b.si_rows.push_back(si_ciphertext_from_json(row));
        else
            b.mi_rows.push_back(mi_ciphertext_from_json(row));
    }
    return b;
}

Json matrix_to_json(const MatD& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

MatD matrix_from_json(const Json& j) {
    const auto r = j.at("rows").get<Eigen::Index>();
    const auto c = j.at("cols").get<Eigen::Index>();
    MatD m(r, c);
    const Json& data = j.at("data");
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = data[i][k].get<double>();
    return m;
}

}  // namespace nnemd
