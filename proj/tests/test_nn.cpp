#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "nnemd/nn.hpp"
#include "nnemd/prng.hpp"

using namespace nnemd;

namespace {

// Straightforward second implementation of the forward pass, kept free of
// Eigen expression tricks.
MatD reference_forward(const MatD& a1_pre, const MlpModel& m) {
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    MatD a = a1_pre;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = sig(a(i, j));
    for (std::size_t l = 1; l < m.layer_count(); ++l) {
        MatD z = a * m.weights[l];
        if (l + 1 == m.layer_count()) {
            for (Eigen::Index i = 0; i < z.rows(); ++i) {
                double mx = z.row(i).maxCoeff(), sum = 0;
                for (Eigen::Index j = 0; j < z.cols(); ++j) {
                    z(i, j) = std::exp(z(i, j) - mx);
                    sum += z(i, j);
                }
                z.row(i) /= sum;
            }
        } else {
            for (Eigen::Index i = 0; i < z.rows(); ++i)
                for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = sig(z(i, j));
        }
        a = z;
    }
    return a;
}

double loss_of(const MlpModel& m, const MatD& a1_pre, const MatD& y) {
    BatchActivations acts = feed_forward_from(a1_pre, m);
    return cross_entropy(acts.act.back(), y, static_cast<std::size_t>(a1_pre.rows()));
}

MatD random_matrix(Prng& rng, Eigen::Index r, Eigen::Index c, double lo = -1, double hi = 1) {
    MatD m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
    return m;
}

}  // namespace

TEST_CASE("init is deterministic, correctly shaped, and inside the unit box") {
    const MlpModel a = init_weights({4, 3, 2}, 7);
    const MlpModel b = init_weights({4, 3, 2}, 7);
    REQUIRE(a.weights.size() == 2);
    CHECK(a.weights[0].rows() == 4);
    CHECK(a.weights[0].cols() == 3);
    CHECK(a.weights[1].rows() == 3);
    CHECK(a.weights[1].cols() == 2);
    CHECK(a.weights[0] == b.weights[0]);
    CHECK(a.weights[1] == b.weights[1]);
    for (const MatD& w : a.weights) CHECK(w.cwiseAbs().maxCoeff() <= 1.0);
    const MlpModel c = init_weights({4, 3, 2}, 8);
    CHECK(a.weights[0] != c.weights[0]);
}

TEST_CASE("sigmoid(0) = 0.5 and softmax rows normalize") {
    const MlpModel m = init_weights({4, 3, 2}, 1);
    const BatchActivations acts = feed_forward_from(MatD::Zero(5, 3), m);
    CHECK(acts.act[0].cwiseAbs().minCoeff() == 0.5);
    for (Eigen::Index i = 0; i < 5; ++i)
        CHECK(std::fabs(acts.act.back().row(i).sum() - 1.0) < 1e-9);
}

TEST_CASE("single-layer model is softmax of the pre-activation") {
    const MlpModel m = init_weights({4, 2}, 3);
    Prng rng(5);
    const MatD pre = random_matrix(rng, 6, 2);
    const BatchActivations acts = feed_forward_from(pre, m);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(std::fabs(acts.act[0].row(i).sum() - 1.0) < 1e-9);
}

TEST_CASE("forward pass equals an independent implementation") {
    Prng rng(11);
    const MlpModel m = init_weights({6, 5, 4, 3}, 21);
    const MatD pre = random_matrix(rng, 7, 5, -2, 2);
    const BatchActivations acts = feed_forward_from(pre, m);
    const MatD expect = reference_forward(pre, m);
    CHECK((acts.act.back() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("perfect fit gives zero gradients and zero sigma") {
    MlpModel m = init_weights({4, 3, 2}, 2);
    const MatD pre = MatD::Zero(3, 3);
    BatchActivations acts = feed_forward_from(pre, m);
    acts.labels = acts.act.back();  // pretend the outputs are the labels
    acts.real_rows = 3;
    const Gradients g = gradients(acts, m, 0.0);
    CHECK(g.by_layer[1].cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g.sigma.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("analytic gradients match central finite differences") {
    Prng rng(31);
    MlpModel m = init_weights({5, 4, 3}, 33);
    const MatD x = random_matrix(rng, 4, 5);
    MatD y = MatD::Zero(4, 3);
    for (Eigen::Index i = 0; i < 4; ++i) y(i, static_cast<Eigen::Index>(rng.below(3))) = 1.0;

    BatchActivations acts = feed_forward_from(x * m.weights[0], m);
    acts.labels = y;
    acts.real_rows = 4;
    Gradients g = gradients(acts, m, 0.0);
    const MatD g1 = x.transpose() * g.sigma / 4.0;

    const double h = 1e-6;
    for (std::size_t l = 0; l < 2; ++l) {
        const MatD& analytic = l == 0 ? g1 : g.by_layer[l];
        for (Eigen::Index i = 0; i < m.weights[l].rows(); ++i)
            for (Eigen::Index j = 0; j < m.weights[l].cols(); ++j) {
                MlpModel up = m, dn = m;
                up.weights[l](i, j) += h;
                dn.weights[l](i, j) -= h;
                const double fd =
                    (loss_of(up, x * up.weights[0], y) - loss_of(dn, x * dn.weights[0], y)) /
                    (2 * h);
                CHECK(analytic(i, j) == doctest::Approx(fd).epsilon(1e-4));
            }
    }
}

TEST_CASE("relu hidden activation also passes finite differences") {
    Prng rng(41);
    MlpModel m = init_weights({4, 3, 2}, 55, Activation::kRelu);
    const MatD x = random_matrix(rng, 5, 4);
    MatD y = MatD::Zero(5, 2);
    for (Eigen::Index i = 0; i < 5; ++i) y(i, static_cast<Eigen::Index>(rng.below(2))) = 1.0;
    BatchActivations acts = feed_forward_from(x * m.weights[0], m);
    acts.labels = y;
    acts.real_rows = 5;
    Gradients g = gradients(acts, m, 0.0);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) {
            MlpModel up = m, dn = m;
            up.weights[1](i, j) += h;
            dn.weights[1](i, j) -= h;
            const double fd =
                (loss_of(up, x * up.weights[0], y) - loss_of(dn, x * dn.weights[0], y)) / (2 * h);
            CHECK(g.by_layer[1](i, j) == doctest::Approx(fd).epsilon(1e-3));
        }
}

TEST_CASE("l2 shifts gradients by exactly l2 * W") {
    Prng rng(51);
    MlpModel m = init_weights({4, 3, 2}, 5);
    const MatD x = random_matrix(rng, 3, 4);
    MatD y = MatD::Zero(3, 2);
    y.col(0).setOnes();
    BatchActivations acts = feed_forward_from(x * m.weights[0], m);
    acts.labels = y;
    acts.real_rows = 3;
    const Gradients g0 = gradients(acts, m, 0.0);
    const Gradients g1 = gradients(acts, m, 0.1);
    CHECK((g1.by_layer[1] - g0.by_layer[1] - 0.1 * m.weights[1]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("padded rows contribute nothing") {
    MlpModel m = init_weights({4, 3, 2}, 9);
    Prng rng(61);
    const MatD x_real = random_matrix(rng, 2, 4);
    MatD x_padded = MatD::Zero(4, 4);
    x_padded.topRows(2) = x_real;
    MatD y_real = MatD::Zero(2, 2);
    y_real(0, 0) = y_real(1, 1) = 1.0;
    MatD y_padded = MatD::Zero(4, 2);
    y_padded.topRows(2) = y_real;

    BatchActivations a1 = feed_forward_from(x_real * m.weights[0], m);
    a1.labels = y_real;
    a1.real_rows = 2;
    BatchActivations a2 = feed_forward_from(x_padded * m.weights[0], m);
    a2.labels = y_padded;
    a2.real_rows = 2;
    const Gradients g1 = gradients(a1, m, 0.0);
    const Gradients g2 = gradients(a2, m, 0.0);
    CHECK((g1.by_layer[1] - g2.by_layer[1]).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((x_real.transpose() * g1.sigma - x_padded.transpose() * g2.sigma)
              .cwiseAbs()
              .maxCoeff() < 1e-15);
    CHECK(cross_entropy(a1.act.back(), y_real, 2) ==
          cross_entropy(a2.act.back(), y_padded, 2));
}

TEST_CASE("apply_grads: zero gradients and zero alpha leave the model unchanged") {
    MlpModel m = init_weights({4, 3, 2}, 3);
    const MlpModel before = m;
    std::vector<MatD> zeros{MatD::Zero(4, 3), MatD::Zero(3, 2)};
    apply_grads(m, zeros, 0.5, 1.0);
    CHECK(m.weights[0] == before.weights[0]);

    std::vector<MatD> ones{MatD::Ones(4, 3), MatD::Ones(3, 2)};
    apply_grads(m, ones, 0.0, 1.0);
    CHECK(m.weights[0] == before.weights[0]);
}

TEST_CASE("apply_grads clamps to the encodable range") {
    MlpModel m = init_weights({2, 2}, 4);
    std::vector<MatD> grads{MatD::Constant(2, 2, -10.0)};
    apply_grads(m, grads, 1.0, 1.0);
    CHECK(m.weights[0].maxCoeff() == 1.0);
}

TEST_CASE("one step on a separable toy set decreases loss") {
    MlpModel m = init_weights({2, 4, 2}, 17);
    MatD x(4, 2);
    x << 0.9, 0.1, 0.8, 0.2, 0.1, 0.9, 0.2, 0.8;
    MatD y = MatD::Zero(4, 2);
    y(0, 0) = y(1, 0) = y(2, 1) = y(3, 1) = 1.0;

    BatchActivations acts = feed_forward_from(x * m.weights[0], m);
    acts.labels = y;
    acts.real_rows = 4;
    const double before = cross_entropy(acts.act.back(), y, 4);
    Gradients g = gradients(acts, m, 0.0);
    g.by_layer[0] = x.transpose() * g.sigma / 4.0;
    apply_grads(m, g.by_layer, 0.5, 1.0);
    BatchActivations after_acts = feed_forward_from(x * m.weights[0], m);
    CHECK(cross_entropy(after_acts.act.back(), y, 4) < before);
}

TEST_CASE("accuracy on an obvious problem") {
    MlpModel m = init_weights({2, 2}, 1);
    m.weights[0] << 5, -5, -5, 5;
    MatD x(2, 2);
    x << 1, 0, 0, 1;
    CHECK(accuracy(m, x, {0, 1}) == 1.0);
    CHECK(accuracy(m, x, {1, 0}) == 0.0);
}

TEST_CASE("checkpoint round trip is byte-stable") {
    MlpModel m = init_weights({3, 4, 2}, 123);
    m.step = 42;
    const std::string path = "/tmp/nnemd_test_ckpt.bin";
    save_checkpoint(m, path);
    const MlpModel r = load_checkpoint(path);
    CHECK(r.arch == m.arch);
    CHECK(r.seed == m.seed);
    CHECK(r.step == 42);
    CHECK(r.hidden_activation == m.hidden_activation);
    for (std::size_t l = 0; l < m.weights.size(); ++l) CHECK(r.weights[l] == m.weights[l]);

    // Same model saved twice produces identical bytes.
    const std::string path2 = "/tmp/nnemd_test_ckpt2.bin";
    save_checkpoint(m, path2);
    std::FILE* f1 = std::fopen(path.c_str(), "rb");
    std::FILE* f2 = std::fopen(path2.c_str(), "rb");
    REQUIRE(f1);
    REQUIRE(f2);
    int c1, c2;
    do {
        c1 = std::fgetc(f1);
        c2 = std::fgetc(f2);
        CHECK(c1 == c2);
    } while (c1 != EOF);
    std::fclose(f1);
    std::fclose(f2);
}

TEST_CASE("one_hot validates labels") {
    CHECK(one_hot({0, 2}, 3).rows() == 2);
    CHECK_THROWS(one_hot({3}, 3));
}
