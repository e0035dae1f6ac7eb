#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "sicot/attention.hpp"
#include "sicot/optim.hpp"
#include "sicot/rng.hpp"
#include "sicot/tape.hpp"
#include "sicot/tensor.hpp"

namespace sicot {

// Small multilayer extractor standing in for the backbone network: raw
// feature vectors in, width-d visual features out, tanh between layers.
struct VisualExtractorConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_dims;
    std::size_t output_dim = 0;
};

struct LossBreakdown {
    double total = 0.0;
    double visual_term = 0.0;
    double mixed_term = 0.0;
};

enum class TrainStream { cotrain, visual_only };

// One training example after encoding.
struct TrainSample {
    std::vector<double> features;
    std::vector<std::size_t> tokens;
    std::size_t label = 0;
};

// All weights of the co-training system. The classifier weight exists once;
// both the visual and the mixed stream classify through these same tensors.
struct CoTrainParams {
    VisualExtractorConfig visual_config;
    std::vector<Tensor> visual_weights;
    std::vector<Tensor> visual_biases;
    Tensor embeddings;        // shared with the EmbeddingTable
    Tensor classifier_weight; // C x d
    Tensor classifier_bias;   // C; zero constant when use_classifier_bias is off
    double lambda = 1.0;
    bool use_classifier_bias = true;
    std::size_t num_classes = 0;

    static CoTrainParams init(const VisualExtractorConfig& vis,
                              std::size_t num_classes, const Tensor& embeddings,
                              double lambda, bool classifier_bias, Rng& rng) {
        if (vis.input_dim == 0 || vis.output_dim == 0)
            throw std::invalid_argument("extractor: zero layer width");
        CoTrainParams p;
        p.visual_config = vis;
        p.embeddings = embeddings;
        p.lambda = lambda;
        p.use_classifier_bias = classifier_bias;
        p.num_classes = num_classes;

        std::vector<std::size_t> widths;
        widths.push_back(vis.input_dim);
        for (std::size_t h : vis.hidden_dims) widths.push_back(h);
        widths.push_back(vis.output_dim);
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            Tensor w = Tensor::zeros({fan_out, fan_in}, true);
            for (std::size_t i = 0; i < fan_out * fan_in; ++i)
                w.data()[i] = rng.uniform(-bound, bound);
            p.visual_weights.push_back(w);
            p.visual_biases.push_back(Tensor::zeros({fan_out}, true));
        }

        const double cbound = 1.0 / std::sqrt(static_cast<double>(vis.output_dim));
        p.classifier_weight = Tensor::zeros({num_classes, vis.output_dim}, true);
        for (std::size_t i = 0; i < num_classes * vis.output_dim; ++i)
            p.classifier_weight.data()[i] = rng.uniform(-cbound, cbound);
        p.classifier_bias = Tensor::zeros({num_classes}, classifier_bias);
        return p;
    }

    std::size_t feature_dim() const { return visual_config.output_dim; }

    // Named tensors in canonical order, for checkpoints and optimizers.
    ParamSet named_params() const {
        ParamSet set;
        for (std::size_t l = 0; l < visual_weights.size(); ++l) {
            set.push_back({"visual." + std::to_string(l) + ".weight",
                           visual_weights[l]});
            set.push_back({"visual." + std::to_string(l) + ".bias",
                           visual_biases[l]});
        }
        set.push_back({"classifier.weight", classifier_weight});
        set.push_back({"classifier.bias", classifier_bias});
        set.push_back({"embeddings", embeddings});
        return set;
    }

    // The subset the optimizer updates.
    ParamSet trainable_params() const {
        ParamSet set;
        for (const auto& p : named_params())
            if (p.tensor.requires_grad()) set.push_back(p);
        return set;
    }

    // Deep copy for a data-parallel worker: fresh storage, zero grads.
    CoTrainParams replicate() const {
        CoTrainParams p = *this;
        p.visual_weights.clear();
        p.visual_biases.clear();
        for (const auto& w : visual_weights) p.visual_weights.push_back(w.clone());
        for (const auto& b : visual_biases) p.visual_biases.push_back(b.clone());
        p.embeddings = embeddings.clone();
        p.classifier_weight = classifier_weight.clone();
        p.classifier_bias = classifier_bias.clone();
        return p;
    }
};

inline Tensor visual_forward(Tape& tape, const CoTrainParams& params,
                             const Tensor& raw) {
    if (raw.rank() != 1 || raw.dim(0) != params.visual_config.input_dim)
        throw DimensionError("visual_forward: input " + shape_str(raw.shape()) +
                             " != expected [" +
                             std::to_string(params.visual_config.input_dim) + "]");
    Tensor h = raw;
    for (std::size_t l = 0; l < params.visual_weights.size(); ++l) {
        h = tape.linear(params.visual_weights[l], params.visual_biases[l], h);
        if (l + 1 < params.visual_weights.size()) h = tape.tanh(h);
    }
    return h;
}

inline Tensor visual_forward(Tape& tape, const CoTrainParams& params,
                             const std::vector<double>& raw) {
    return visual_forward(tape, params,
                          Tensor::from_data({raw.size()},
                                            std::vector<double>(raw)));
}

// x^m = coordinate-wise max of the visual feature and the semantic embedding.
inline Tensor mixed_feature(Tape& tape, const Tensor& x_v, const Tensor& x_s) {
    return tape.elementwise_max(x_v, x_s);
}

// Logits through the single shared classifier.
inline Tensor classify(Tape& tape, const CoTrainParams& params, const Tensor& x) {
    return tape.linear(params.classifier_weight, params.classifier_bias, x);
}

// Per-sample loss subgraph, pre-scaled by 1/batch so per-sample backward
// passes accumulate exactly the batch-mean gradient.
struct SampleLoss {
    Tensor total;
    double visual_ce = 0.0;
    double mixed_ce = 0.0;
};

inline SampleLoss sample_loss(Tape& tape, const CoTrainParams& params,
                              const SemanticStreamConfig& sem,
                              const TrainSample& sample, TrainStream stream,
                              double inv_batch) {
    SampleLoss out;
    Tensor x_v = visual_forward(tape, params, sample.features);
    Tensor ce_v = tape.cross_entropy_from_logits(classify(tape, params, x_v),
                                                 sample.label);
    out.visual_ce = ce_v.value();
    if (stream == TrainStream::visual_only) {
        out.total = tape.scale(ce_v, inv_batch);
        return out;
    }
    AttentionOutput att = semantic_forward(tape, sample.tokens, params.embeddings, sem);
    Tensor x_m = mixed_feature(tape, x_v, att.embedding);
    Tensor ce_m = tape.cross_entropy_from_logits(classify(tape, params, x_m),
                                                 sample.label);
    out.mixed_ce = ce_m.value();
    out.total = tape.add(tape.scale(ce_v, inv_batch),
                         tape.scale(ce_m, params.lambda * inv_batch));
    return out;
}

// Whole-batch objective on one tape:
//   total = (1/N) sum CE(classify(x_v)) + lambda * (1/N) sum CE(classify(x_m))
inline std::pair<Tensor, LossBreakdown> cotrain_loss(
    Tape& tape, const CoTrainParams& params, const SemanticStreamConfig& sem,
    const std::vector<TrainSample>& batch) {
    if (batch.empty())
        throw std::invalid_argument("cotrain_loss: empty batch");
    const double inv = 1.0 / static_cast<double>(batch.size());
    Tensor visual_sum, mixed_sum;
    for (const auto& sample : batch) {
        Tensor x_v = visual_forward(tape, params, sample.features);
        Tensor ce_v = tape.cross_entropy_from_logits(classify(tape, params, x_v),
                                                     sample.label);
        AttentionOutput att =
            semantic_forward(tape, sample.tokens, params.embeddings, sem);
        Tensor x_m = mixed_feature(tape, x_v, att.embedding);
        Tensor ce_m = tape.cross_entropy_from_logits(classify(tape, params, x_m),
                                                     sample.label);
        visual_sum = visual_sum.defined() ? tape.add(visual_sum, ce_v) : ce_v;
        mixed_sum = mixed_sum.defined() ? tape.add(mixed_sum, ce_m) : ce_m;
    }
    Tensor visual_term = tape.scale(visual_sum, inv);
    Tensor mixed_term = tape.scale(mixed_sum, inv);
    Tensor total = tape.add(visual_term, tape.scale(mixed_term, params.lambda));
    LossBreakdown breakdown{total.value(), visual_term.value(), mixed_term.value()};
    return {total, breakdown};
}

// Classes sorted by descending logit, ties by ascending class index.
// Visual-only path: titles are unavailable at inference and never consulted.
inline std::vector<std::size_t> infer(const CoTrainParams& params,
                                      const std::vector<double>& features) {
    Tape tape(false);
    Tensor logits = classify(tape, params, visual_forward(tape, params, features));
    std::vector<std::size_t> order(params.num_classes);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (logits.at(a) != logits.at(b)) return logits.at(a) > logits.at(b);
        return a < b;
    });
    return order;
}

}  // namespace sicot
