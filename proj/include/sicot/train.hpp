#pragma once

#include <numeric>
#include <thread>
#include <vector>

#include "sicot/model.hpp"
#include "sicot/optim.hpp"
#include "sicot/rng.hpp"

namespace sicot {

struct EpochStats {
    LossBreakdown mean;       // loss means over the epoch
    std::size_t samples = 0;
    double learning_rate = 0.0;
};

namespace detail {

// Gradients of one worker chunk, accumulated on a parameter replica in
// sample order. Runs on its own thread; touches nothing shared.
struct WorkerResult {
    CoTrainParams replica;
    double visual_sum = 0.0;
    double mixed_sum = 0.0;
};

inline void run_chunk(const std::vector<TrainSample>& data,
                      const std::vector<std::size_t>& order, std::size_t begin,
                      std::size_t end, const SemanticStreamConfig& sem,
                      TrainStream stream, double inv_batch, WorkerResult& out) {
    for (std::size_t i = begin; i < end; ++i) {
        const TrainSample& sample = data[order[i]];
        Tape tape;
        SampleLoss loss =
            sample_loss(tape, out.replica, sem, sample, stream, inv_batch);
        tape.backward(loss.total);
        out.visual_sum += loss.visual_ce;
        out.mixed_sum += loss.mixed_ce;
    }
}

}  // namespace detail

// One pass over the dataset: seeded shuffle, mini-batches, backward, SGD
// step at the epoch's decayed learning rate. Bit-deterministic for a fixed
// (params, dataset, seed, workers): worker chunks are contiguous and their
// gradients are merged in worker-index order before the update.
inline EpochStats train_epoch(CoTrainParams& params,
                              const SemanticStreamConfig& sem,
                              const std::vector<TrainSample>& data,
                              const SgdConfig& sgd, std::size_t epoch,
                              std::uint64_t shuffle_seed, std::size_t workers,
                              TrainStream stream) {
    if (data.empty()) throw std::invalid_argument("train_epoch: empty dataset");
    sgd.validate();
    if (workers == 0) workers = 1;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(shuffle_seed);
    rng.shuffle(order);

    ParamSet trainables = params.trainable_params();
    EpochStats stats;
    stats.learning_rate = effective_lr(sgd, epoch);
    double visual_sum = 0.0, mixed_sum = 0.0;

    for (std::size_t start = 0; start < order.size(); start += sgd.batch_size) {
        const std::size_t n = std::min(sgd.batch_size, order.size() - start);
        const double inv_batch = 1.0 / static_cast<double>(n);

        if (workers == 1 || n == 1) {
            for (std::size_t i = 0; i < n; ++i) {
                const TrainSample& sample = data[order[start + i]];
                Tape tape;
                SampleLoss loss =
                    sample_loss(tape, params, sem, sample, stream, inv_batch);
                tape.backward(loss.total);
                visual_sum += loss.visual_ce;
                mixed_sum += loss.mixed_ce;
            }
        } else {
            const std::size_t w = std::min(workers, n);
            std::vector<detail::WorkerResult> results;
            results.reserve(w);
            for (std::size_t i = 0; i < w; ++i)
                results.push_back({params.replicate()});

            // Contiguous chunks: the first n % w workers take one extra.
            std::vector<std::thread> threads;
            std::size_t chunk_begin = start;
            for (std::size_t i = 0; i < w; ++i) {
                std::size_t len = n / w + (i < n % w ? 1 : 0);
                threads.emplace_back(detail::run_chunk, std::cref(data),
                                     std::cref(order), chunk_begin,
                                     chunk_begin + len, std::cref(sem), stream,
                                     inv_batch, std::ref(results[i]));
                chunk_begin += len;
            }
            for (auto& t : threads) t.join();

            ParamSet master = params.named_params();
            for (std::size_t i = 0; i < w; ++i) {
                ParamSet replica = results[i].replica.named_params();
                for (std::size_t p = 0; p < master.size(); ++p) {
                    if (!master[p].tensor.requires_grad()) continue;
                    double* dst = master[p].tensor.grad_data();
                    const double* src = replica[p].tensor.grad_data();
                    for (std::size_t k = 0; k < master[p].tensor.size(); ++k)
                        dst[k] += src[k];
                }
                visual_sum += results[i].visual_sum;
                mixed_sum += results[i].mixed_sum;
            }
        }
        sgd_step(trainables, sgd, epoch);
    }

    stats.samples = data.size();
    const double inv = 1.0 / static_cast<double>(data.size());
    stats.mean.visual_term = visual_sum * inv;
    stats.mean.mixed_term = mixed_sum * inv;
    stats.mean.total = stats.mean.visual_term + params.lambda * stats.mean.mixed_term;
    if (stream == TrainStream::visual_only) stats.mean.total = stats.mean.visual_term;
    return stats;
}

// Records with no in-vocabulary tokens cannot reach the semantic stream;
// they are removed from training up front (mirrored by the baseline run so
// both streams see identical batches).
inline std::vector<TrainSample> drop_empty_titles(std::vector<TrainSample> data) {
    std::vector<TrainSample> kept;
    kept.reserve(data.size());
    for (auto& s : data)
        if (!s.tokens.empty()) kept.push_back(std::move(s));
    return kept;
}

}  // namespace sicot
