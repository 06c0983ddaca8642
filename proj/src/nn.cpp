#include "nnemd/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "nnemd/errors.hpp"
#include "nnemd/prng.hpp"

namespace nnemd {

namespace {

constexpr char kCheckpointMagic[8] = {'N', 'N', 'E', 'M', 'D', 'W', '0', '1'};

MatD sigmoid(const MatD& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

MatD relu(const MatD& z) { return z.array().max(0.0).matrix(); }

MatD activation_apply(Activation a, const MatD& z) {
    return a == Activation::kSigmoid ? sigmoid(z) : relu(z);
}

// Derivative expressed through the activation value where possible.
MatD activation_deriv(Activation a, const MatD& z, const MatD& act) {
    if (a == Activation::kSigmoid) return (act.array() * (1.0 - act.array())).matrix();
    return (z.array() > 0.0).cast<double>().matrix();
}

MatD softmax_rows(const MatD& z) {
    MatD out(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double m = z.row(i).maxCoeff();
        Eigen::ArrayXd e = (z.row(i).array() - m).exp();
        out.row(i) = (e / e.sum()).matrix();
    }
    return out;
}

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("checkpoint: truncated file");
    return v;
}

}  // namespace

Activation activation_from_string(const std::string& s) {
    if (s == "sigmoid") return Activation::kSigmoid;
    if (s == "relu") return Activation::kRelu;
    throw ConfigError("unknown activation '" + s + "'");
}

std::string to_string(Activation a) {
    return a == Activation::kSigmoid ? "sigmoid" : "relu";
}

MlpModel init_weights(const std::vector<std::size_t>& arch, std::uint64_t seed,
                      Activation hidden) {
    if (arch.size() < 2) throw Error("init_weights: arch needs at least input and output sizes");
    for (std::size_t n : arch)
        if (n == 0) throw Error("init_weights: zero-width layer");
    MlpModel model;
    model.arch = arch;
    model.hidden_activation = hidden;
    model.seed = seed;
    Prng rng(seed);
    for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(arch[l]));
        MatD w(static_cast<Eigen::Index>(arch[l]), static_cast<Eigen::Index>(arch[l + 1]));
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
        model.weights.push_back(std::move(w));
    }
    return model;
}

BatchActivations feed_forward_from(const MatD& a1_pre, const MlpModel& model) {
    const std::size_t layers = model.layer_count();
    if (static_cast<std::size_t>(a1_pre.cols()) != model.arch[1])
        throw Error("feed_forward_from: pre-activation width " + std::to_string(a1_pre.cols()) +
                    " does not match layer 1 width " + std::to_string(model.arch[1]));
    BatchActivations acts;
    acts.real_rows = static_cast<std::size_t>(a1_pre.rows());
    acts.pre.resize(layers);
    acts.act.resize(layers);
    acts.pre[0] = a1_pre;
    acts.act[0] = layers == 1 ? softmax_rows(a1_pre)
                              : activation_apply(model.hidden_activation, a1_pre);
    for (std::size_t l = 1; l < layers; ++l) {
        acts.pre[l] = acts.act[l - 1] * model.weights[l];
        acts.act[l] = l + 1 == layers
                          ? softmax_rows(acts.pre[l])
                          : activation_apply(model.hidden_activation, acts.pre[l]);
    }
    return acts;
}

Gradients gradients(const BatchActivations& acts, const MlpModel& model, double l2) {
    const std::size_t layers = model.layer_count();
    if (acts.labels.rows() != acts.act.back().rows())
        throw Error("gradients: labels missing or shaped wrong");
    const auto batch = static_cast<double>(acts.real_rows);

    // Softmax + cross-entropy collapse to delta_L = A_L - Y. Padded rows are
    // zeroed so they contribute nothing downstream.
    MatD delta = acts.act.back() - acts.labels;
    for (Eigen::Index i = static_cast<Eigen::Index>(acts.real_rows); i < delta.rows(); ++i)
        delta.row(i).setZero();

    Gradients out;
    out.by_layer.resize(layers);
    for (std::size_t l = layers; l-- > 0;) {
        if (l > 0) {
            out.by_layer[l] = acts.act[l - 1].transpose() * delta / batch + l2 * model.weights[l];
            delta = (delta * model.weights[l].transpose()).cwiseProduct(
                activation_deriv(model.hidden_activation, acts.pre[l - 1], acts.act[l - 1]));
        } else {
            out.sigma = delta;
        }
    }
    return out;
}

void apply_grads(MlpModel& model, const std::vector<MatD>& grads, double alpha,
                 double clamp_bound) {
    if (grads.size() != model.layer_count())
        throw Error("apply_grads: gradient count mismatch");
    for (std::size_t l = 0; l < grads.size(); ++l) {
        model.weights[l] -= alpha * grads[l];
        model.weights[l] =
            model.weights[l].cwiseMax(-clamp_bound).cwiseMin(clamp_bound);
    }
    ++model.step;
}

double cross_entropy(const MatD& probs, const MatD& labels, std::size_t real_rows) {
    double loss = 0;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(real_rows); ++i)
        for (Eigen::Index j = 0; j < probs.cols(); ++j)
            if (labels(i, j) != 0.0)
                loss -= labels(i, j) * std::log(std::max(probs(i, j), 1e-300));
    return loss / static_cast<double>(real_rows);
}

MatD forward_plain(const MlpModel& model, const MatD& X) {
    return feed_forward_from(X * model.weights[0], model).act.back();
}

double accuracy(const MlpModel& model, const MatD& X, const std::vector<int>& labels) {
    const MatD probs = forward_plain(model, X);
    std::size_t hits = 0;
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index best;
        probs.row(i).maxCoeff(&best);
        hits += (static_cast<int>(best) == labels[static_cast<std::size_t>(i)]);
    }
    return probs.rows() == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(probs.rows());
}

MatD one_hot(const std::vector<int>& labels, std::size_t classes) {
    MatD y = MatD::Zero(static_cast<Eigen::Index>(labels.size()),
                        static_cast<Eigen::Index>(classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
            throw Error("one_hot: label out of range");
        y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return y;
}

void save_checkpoint(const MlpModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot open " + path + " for writing");
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_pod(out, static_cast<std::uint32_t>(model.arch.size()));
    for (std::size_t n : model.arch) write_pod(out, static_cast<std::uint32_t>(n));
    write_pod(out, static_cast<std::uint8_t>(model.hidden_activation));
    write_pod(out, model.seed);
    write_pod(out, model.step);
    for (const MatD& w : model.weights)
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) write_pod(out, w(i, j));
    if (!out) throw IoError("checkpoint: write failed for " + path);
}

MlpModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw IoError("checkpoint: bad magic in " + path);
    const auto levels = read_pod<std::uint32_t>(in);
    MlpModel model;
    model.arch.resize(levels);
    for (auto& n : model.arch) n = read_pod<std::uint32_t>(in);
    model.hidden_activation = static_cast<Activation>(read_pod<std::uint8_t>(in));
    model.seed = read_pod<std::uint64_t>(in);
    model.step = read_pod<std::uint64_t>(in);
    for (std::size_t l = 0; l + 1 < model.arch.size(); ++l) {
        MatD w(static_cast<Eigen::Index>(model.arch[l]),
               static_cast<Eigen::Index>(model.arch[l + 1]));
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = read_pod<double>(in);
        model.weights.push_back(std::move(w));
    }
    return model;
}

}  // namespace nnemd
