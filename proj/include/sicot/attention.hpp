#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "sicot/tape.hpp"
#include "sicot/tensor.hpp"

namespace sicot {

// A record reached the semantic stream with no usable tokens. Training is
// supposed to drop such records; inference never builds a semantic embedding.
struct EmptyTitleError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class SemanticMode { bilinear_attention, mean_pooling };

inline SemanticMode parse_semantic_mode(const std::string& s) {
    if (s == "bilinear_attention") return SemanticMode::bilinear_attention;
    if (s == "mean_pooling") return SemanticMode::mean_pooling;
    throw std::invalid_argument("mode must be bilinear_attention or mean_pooling, got '" +
                                s + "'");
}

struct SemanticStreamConfig {
    std::size_t dim = 0;  // must equal the visual feature width
    SemanticMode mode = SemanticMode::bilinear_attention;
    // Optional learned d -> 1 projection applied to the feature map instead
    // of plain averaging. Undefined tensor = parameter-free default.
    Tensor score_projection;
};

// Per-title result: convex attention weights over tokens, their
// pre-normalization scores, and the weighted-sum semantic embedding.
struct AttentionOutput {
    Tensor alpha;      // length T, nonnegative, sums to 1
    Tensor scores;     // length T, input of the normalizer
    Tensor embedding;  // length d
};

// g = (1/T) sum_j w_j: order-free context over the title's word embeddings.
inline Tensor global_context(Tape& tape, const Tensor& word_embeddings) {
    if (word_embeddings.rank() != 2)
        throw DimensionError("global_context: expected T x d embeddings, got " +
                             shape_str(word_embeddings.shape()));
    if (word_embeddings.dim(0) == 0)
        throw EmptyTitleError("global_context: empty title");
    return tape.mean_over_axis(word_embeddings, 0);
}

// Second-order feature map F[j] = g ⊙ w_j, bilinear in (g, w_j).
inline Tensor bilinear_feature_map(Tape& tape, const Tensor& g,
                                   const Tensor& word_embeddings) {
    return tape.rowwise_mul(word_embeddings, g);
}

// s[j] = tanh(mean_k F[j,k]).
inline Tensor attention_scores(Tape& tape, const Tensor& feature_map) {
    if (feature_map.dim(0) == 0)
        throw EmptyTitleError("attention_scores: empty feature map");
    return tape.tanh(tape.mean_over_axis(feature_map, 1));
}

// alpha = softmax(s), so the embedding below is a convex combination.
inline Tensor attention_weights(Tape& tape, const Tensor& scores) {
    return tape.softmax(scores);
}

// x^s = sum_j alpha_j w_j, differentiable through both factors.
inline Tensor semantic_embedding(Tape& tape, const Tensor& alpha,
                                 const Tensor& word_embeddings) {
    return tape.weighted_sum_rows(alpha, word_embeddings);
}

// Full semantic stream over one tokenized title. In mean_pooling mode the
// embedding is exactly the global context and alpha is the uniform constant.
inline AttentionOutput semantic_forward(Tape& tape,
                                        const std::vector<std::size_t>& tokens,
                                        const Tensor& table,
                                        const SemanticStreamConfig& config) {
    if (tokens.empty())
        throw EmptyTitleError("semantic_forward: empty title");
    const std::size_t t = tokens.size();
    Tensor rows = tape.gather_rows(table, tokens);

    AttentionOutput out;
    if (config.mode == SemanticMode::mean_pooling) {
        out.alpha = Tensor::filled({t}, 1.0 / static_cast<double>(t));
        out.scores = Tensor::zeros({t});
        out.embedding = global_context(tape, rows);
        return out;
    }

    Tensor g = global_context(tape, rows);
    Tensor fmap = bilinear_feature_map(tape, g, rows);
    if (config.score_projection.defined()) {
        Tensor zero_bias = Tensor::zeros({t});
        out.scores = tape.tanh(tape.linear(fmap, zero_bias, config.score_projection));
    } else {
        out.scores = attention_scores(tape, fmap);
    }
    out.alpha = attention_weights(tape, out.scores);
    out.embedding = semantic_embedding(tape, out.alpha, rows);
    return out;
}

}  // namespace sicot
