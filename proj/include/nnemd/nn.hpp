#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nnemd/matrix.hpp"

namespace nnemd {

enum class Activation { kSigmoid, kRelu };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

/// Plain multi-layer perceptron: arch [n_0 .. n_L], weight W_l of shape
/// n_{l-1} x n_l per layer, no bias terms (the secure first-layer product
/// has no affine slot). Hidden layers use hidden_activation, the output
/// layer softmax.
struct MlpModel {
    std::vector<std::size_t> arch;
    std::vector<MatD> weights;
    Activation hidden_activation = Activation::kSigmoid;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;

    std::size_t layer_count() const { return weights.size(); }
    std::size_t n_features() const { return arch.front(); }
    std::size_t n_classes() const { return arch.back(); }
};

struct Hyperparams {
    double learning_rate_alpha = 1.0;
    double l2 = 0.0;
    std::size_t batch_size = 50;
    std::size_t epochs = 5;
    std::uint64_t seed = 1;
};

/// Forward state of one mini-batch, starting from the first layer's
/// pre-activation (the quantity a secure protocol evaluation delivers).
/// Padded tail rows are tracked via real_rows and excluded from loss and
/// gradient averaging.
struct BatchActivations {
    std::vector<MatD> pre;   // Z_1..Z_L
    std::vector<MatD> act;   // A_1..A_L
    MatD labels;             // one-hot, batch x n_L
    std::size_t real_rows = 0;
};

struct Gradients {
    std::vector<MatD> by_layer;  // index 0 (layer 1) left empty by gradients()
    MatD sigma;                  // first-layer error signal delta_1
};

/// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], deterministic per seed.
MlpModel init_weights(const std::vector<std::size_t>& arch, std::uint64_t seed,
                      Activation hidden = Activation::kSigmoid);

BatchActivations feed_forward_from(const MatD& a1_pre, const MlpModel& model);

/// Backpropagation given a completed forward pass with labels attached.
/// sigma is delta_1: the product X^T * sigma (delegated to the secure
/// protocol) plus regularization completes the first-layer gradient.
Gradients gradients(const BatchActivations& acts, const MlpModel& model, double l2);

/// Elementwise W <- W - alpha * grad with a post-update clamp, keeping every
/// weight inside the fixed-point encodable range.
void apply_grads(MlpModel& model, const std::vector<MatD>& grads, double alpha,
                 double clamp_bound);

double cross_entropy(const MatD& probs, const MatD& labels, std::size_t real_rows);

/// Plaintext evaluation path: full float forward pass.
MatD forward_plain(const MlpModel& model, const MatD& X);
double accuracy(const MlpModel& model, const MatD& X, const std::vector<int>& labels);

MatD one_hot(const std::vector<int>& labels, std::size_t classes);

/// Checkpoint format: magic + arch + activations + seed + step, then
/// row-major float64 little-endian weight matrices.
void save_checkpoint(const MlpModel& model, const std::string& path);
MlpModel load_checkpoint(const std::string& path);

}  // namespace nnemd
