#pragma once

#include "v2p/geometry.hpp"
#include "v2p/linalg.hpp"

#include <cstdint>
#include <vector>

namespace v2p {

/// M feature vectors of dimension `dim`, row-major.
struct PatchFeatures {
    std::size_t count = 0;
    std::size_t dim = 0;
    std::vector<double> data;

    PatchFeatures() = default;
    PatchFeatures(std::size_t count, std::size_t dim)
        : count(count), dim(dim), data(count * dim, 0.0) {}

    const double* row(std::size_t i) const { return data.data() + i * dim; }
    double* row(std::size_t i) { return data.data() + i * dim; }
};

using QueryEmbedding = std::vector<double>;

/// Two-layer perceptron, tanh hidden activation, linear output.
struct Mlp {
    Matrix w1; // hidden x in
    std::vector<double> b1;
    Matrix w2; // out x hidden
    std::vector<double> b2;

    std::size_t in_dim() const { return w1.cols; }
    std::size_t hidden_dim() const { return w1.rows; }
    std::size_t out_dim() const { return w2.rows; }
};

struct HeadConfig {
    std::size_t feature_dim = 16; // d_v
    std::size_t query_dim = 16;   // d_q
    std::size_t hidden_dim = 32;  // MLP hidden width
    std::size_t embed_dim = 32;   // shared embedding dimension d
    std::uint64_t seed = 0;
};

/// Trainable state: one self-attention head (no biases) plus twin projection
/// MLPs into the shared embedding space.
struct HeadParameters {
    HeadConfig config;
    Matrix w_q, w_k, w_v; // d_v x d_v
    Mlp mlp_t;            // d_q -> d_h -> d
    Mlp mlp_v;            // d_v -> d_h -> d

    std::size_t parameter_count() const;
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& flat);
};

/// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], seeded.
HeadParameters init_head(const HeadConfig& config);

/// Probability distribution over the sample's patches.
struct AttentionMap {
    PatchGrid grid;
    std::vector<double> probs;
};

/// Everything the backward pass needs from the forward pass.
struct ForwardTrace {
    PatchFeatures contextualized;         // v~_i
    Matrix attn_rows;                     // M x M self-attention weights
    std::vector<double> proj_q;           // W_Q v_i, M x d_v
    std::vector<double> proj_k;           // W_K v_j, M x d_v
    std::vector<double> proj_v;           // W_V v_j, M x d_v
    std::vector<double> z;                // d
    std::vector<double> z_rows;           // M x d
    std::vector<double> mlp_t_hidden;     // tanh activations, d_h
    std::vector<double> mlp_v_hidden;     // M x d_h
    std::vector<double> logits;           // alpha_i
    std::vector<double> probs;            // a_i
};

/// Single-head scaled dot-product self-attention with residual connection:
/// output_i = v_i + sum_j softmax_j(<W_Q v_i, W_K v_j>/sqrt(d_v)) W_V v_j.
PatchFeatures contextualize(const HeadParameters& params, const PatchFeatures& feats);

/// Full head: contextualize, project query and patches through the twin
/// MLPs, score z^T z_i / sqrt(d), softmax with max subtraction.
/// Throws NumericError if any intermediate is non-finite.
AttentionMap attention_forward(const HeadParameters& params, const PatchFeatures& feats,
                               const QueryEmbedding& query, const PatchGrid& grid);

AttentionMap attention_forward_traced(const HeadParameters& params,
                                      const PatchFeatures& feats,
                                      const QueryEmbedding& query, const PatchGrid& grid,
                                      ForwardTrace& trace);

/// Gradients mirror HeadParameters layout.
struct HeadGradients {
    Matrix w_q, w_k, w_v;
    Mlp mlp_t;
    Mlp mlp_v;

    void accumulate(const HeadGradients& other);
    void scale(double factor);
    std::vector<double> flatten() const;
};

HeadGradients zero_gradients(const HeadConfig& config);

/// Exact gradients of the composed forward map w.r.t. every parameter, given
/// the upstream gradient on the attention probabilities.
HeadGradients backward(const HeadParameters& params, const PatchFeatures& feats,
                       const QueryEmbedding& query, const ForwardTrace& trace,
                       const std::vector<double>& dprobs);

/// theta -= lr * grad, in flatten() order.
void sgd_step(HeadParameters& params, const HeadGradients& grads, double lr);

} // namespace v2p
