#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "sicot/io_util.hpp"
#include "sicot/tape.hpp"
#include "sicot/tensor.hpp"

namespace sicot {

// Simulated model-parallel classifier head: the last FC layer row-partitioned
// into M logical shards. No shard ever materializes logits outside its class
// range; cross-shard state flows only through the small reduction messages
// below, so an actual transport could replace the in-process coordinator.

struct ClassRange {
    std::size_t lo = 0, hi = 0;
    std::size_t count() const { return hi - lo; }
    bool operator==(const ClassRange&) const = default;
};

// Contiguous ranges in shard order; the first C mod M shards hold
// ceil(C/M) classes, the rest floor(C/M).
inline std::vector<ClassRange> partition(std::size_t num_classes,
                                         std::size_t num_shards) {
    if (num_shards < 1 || num_shards > num_classes)
        throw std::invalid_argument("partition: need 1 <= M <= C, got M=" +
                                    std::to_string(num_shards) + " C=" +
                                    std::to_string(num_classes));
    std::vector<ClassRange> ranges;
    const std::size_t base = num_classes / num_shards;
    const std::size_t extra = num_classes % num_shards;
    std::size_t lo = 0;
    for (std::size_t s = 0; s < num_shards; ++s) {
        std::size_t len = base + (s < extra ? 1 : 0);
        ranges.push_back({lo, lo + len});
        lo += len;
    }
    return ranges;
}

struct Shard {
    std::size_t shard_id = 0;
    ClassRange range;
    std::size_t dim = 0;
    std::vector<double> weight;  // count() x dim, row-major
    std::vector<double> bias;    // count()

    std::vector<double> local_logits(const std::vector<double>& x) const {
        std::vector<double> z(range.count());
        for (std::size_t r = 0; r < range.count(); ++r) {
            double acc = 0.0;
            const double* row = weight.data() + r * dim;
            for (std::size_t k = 0; k < dim; ++k) acc += row[k] * x[k];
            z[r] = acc + bias[r];
        }
        return z;
    }
};

struct ShardSet {
    std::vector<Shard> shards;
    std::size_t num_classes = 0;
    std::size_t dim = 0;

    // Row-partitions a dense C x d weight (plus bias) into M shards.
    static ShardSet split(const Tensor& weight, const Tensor& bias,
                          std::size_t num_shards) {
        if (weight.rank() != 2 || bias.rank() != 1 ||
            weight.dim(0) != bias.dim(0))
            throw DimensionError("shard split: weight " + shape_str(weight.shape()) +
                                 " and bias " + shape_str(bias.shape()) +
                                 " do not conform");
        ShardSet set;
        set.num_classes = weight.dim(0);
        set.dim = weight.dim(1);
        for (const ClassRange& range : partition(set.num_classes, num_shards)) {
            Shard shard;
            shard.shard_id = set.shards.size();
            shard.range = range;
            shard.dim = set.dim;
            shard.weight.assign(weight.data() + range.lo * set.dim,
                                weight.data() + range.hi * set.dim);
            shard.bias.assign(bias.data() + range.lo, bias.data() + range.hi);
            set.shards.push_back(std::move(shard));
        }
        return set;
    }
};

// Reduction messages: the only data that crosses shard boundaries.
struct LocalMaxMsg {
    std::size_t shard_id = 0;
    double local_max = 0.0;
};

struct ExpSumMsg {
    std::size_t shard_id = 0;
    double exp_sum = 0.0;
};

struct ReductionSummary {
    double global_max = 0.0;
    double global_expsum = 0.0;
    std::vector<LocalMaxMsg> max_msgs;
    std::vector<ExpSumMsg> sum_msgs;

    // One "shard_id\tlocal_max\texp_sum" line per shard, in shard order.
    std::string debug_dump() const {
        std::string out;
        for (std::size_t s = 0; s < max_msgs.size(); ++s) {
            out += std::to_string(max_msgs[s].shard_id);
            out += '\t';
            out += fmt_double(max_msgs[s].local_max);
            out += '\t';
            out += fmt_double(sum_msgs[s].exp_sum);
            out += '\n';
        }
        return out;
    }
};

struct ShardedCeResult {
    double loss = 0.0;
    std::vector<std::vector<double>> logit_grads;  // per shard, local coords
    ReductionSummary summary;
};

// Two-phase distributed softmax cross entropy.
// Phase 1 reduces shard-local maxima to the global max mu; phase 2 reduces
// shard-local sums of exp(z - mu) to Z. Both reductions run in ascending
// shard_id order, which makes repeated runs bit-identical.
// loss = mu + log Z - z_label; d/dz = exp(z - mu)/Z - onehot(label).
inline ShardedCeResult sharded_ce(const std::vector<double>& x, std::size_t label,
                                  const ShardSet& set) {
    if (label >= set.num_classes)
        throw DimensionError("sharded_ce: label " + std::to_string(label) +
                             " outside [0, " + std::to_string(set.num_classes) +
                             ")");
    ShardedCeResult result;

    std::vector<std::vector<double>> local(set.shards.size());
    double label_logit = 0.0;
    for (const Shard& shard : set.shards) {
        local[shard.shard_id] = shard.local_logits(x);
        double m = local[shard.shard_id][0];
        for (double z : local[shard.shard_id]) m = std::max(m, z);
        result.summary.max_msgs.push_back({shard.shard_id, m});
        if (label >= shard.range.lo && label < shard.range.hi)
            label_logit = local[shard.shard_id][label - shard.range.lo];
    }
    double mu = result.summary.max_msgs[0].local_max;
    for (const auto& msg : result.summary.max_msgs)
        mu = std::max(mu, msg.local_max);
    result.summary.global_max = mu;

    for (const Shard& shard : set.shards) {
        double s = 0.0;
        for (double z : local[shard.shard_id]) s += std::exp(z - mu);
        result.summary.sum_msgs.push_back({shard.shard_id, s});
    }
    double expsum = 0.0;
    for (const auto& msg : result.summary.sum_msgs) expsum += msg.exp_sum;
    result.summary.global_expsum = expsum;

    result.loss = mu + std::log(expsum) - label_logit;
    result.logit_grads.resize(set.shards.size());
    for (const Shard& shard : set.shards) {
        auto& g = result.logit_grads[shard.shard_id];
        g.resize(shard.range.count());
        for (std::size_t r = 0; r < g.size(); ++r) {
            g[r] = std::exp(local[shard.shard_id][r] - mu) / expsum;
            if (shard.range.lo + r == label) g[r] -= 1.0;
        }
    }
    return result;
}

// Global top-k under sharding: every shard reports its local top-k, the
// coordinator merges. Ties break toward the smaller class index.
inline std::vector<std::pair<std::size_t, double>> sharded_topk(
    const std::vector<double>& x, std::size_t k, const ShardSet& set) {
    if (k > set.num_classes)
        throw std::invalid_argument("sharded_topk: k > number of classes");
    auto better = [](const std::pair<std::size_t, double>& a,
                     const std::pair<std::size_t, double>& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    };
    std::vector<std::pair<std::size_t, double>> candidates;
    for (const Shard& shard : set.shards) {
        std::vector<double> z = shard.local_logits(x);
        std::vector<std::pair<std::size_t, double>> local;
        local.reserve(z.size());
        for (std::size_t r = 0; r < z.size(); ++r)
            local.emplace_back(shard.range.lo + r, z[r]);
        std::size_t take = std::min(k, local.size());
        std::partial_sort(local.begin(), local.begin() + take, local.end(), better);
        local.resize(take);
        candidates.insert(candidates.end(), local.begin(), local.end());
    }
    std::sort(candidates.begin(), candidates.end(), better);
    candidates.resize(k);
    return candidates;
}

// Per-M comparison of the sharded path against the dense cross-entropy route
// from the tensor engine.
struct EquivalenceRow {
    std::size_t num_shards = 0;
    double loss_delta = 0.0;
    double max_grad_delta = 0.0;
    bool pass = false;
};

struct EquivalenceReport {
    std::vector<EquivalenceRow> rows;
    bool all_pass = true;
};

inline EquivalenceReport equivalence_check(const Tensor& weight, const Tensor& bias,
                                           const std::vector<double>& x,
                                           std::size_t label,
                                           const std::vector<std::size_t>& m_list) {
    Tape tape;
    Tensor input = Tensor::from_data({x.size()}, std::vector<double>(x), true);
    Tensor logits = tape.linear(weight, bias, input);
    logits.set_requires_grad(true);
    Tensor dense_loss = tape.cross_entropy_from_logits(logits, label);
    tape.backward(dense_loss);
    const std::vector<double>& dense_grad = logits.grad();
    const double dense = dense_loss.value();

    EquivalenceReport report;
    for (std::size_t m : m_list) {
        ShardSet set = ShardSet::split(weight, bias, m);
        ShardedCeResult sharded = sharded_ce(x, label, set);
        EquivalenceRow row;
        row.num_shards = m;
        row.loss_delta = std::fabs(sharded.loss - dense);
        for (const Shard& shard : set.shards)
            for (std::size_t r = 0; r < shard.range.count(); ++r)
                row.max_grad_delta = std::max(
                    row.max_grad_delta,
                    std::fabs(sharded.logit_grads[shard.shard_id][r] -
                              dense_grad[shard.range.lo + r]));
        row.pass = row.loss_delta <= 1e-12 * (1.0 + std::fabs(dense)) &&
                   row.max_grad_delta <= 1e-12;
        report.all_pass &= row.pass;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace sicot
