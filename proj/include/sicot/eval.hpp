#pragma once

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "sicot/io_util.hpp"

namespace sicot {

// Head/tail partition by training count: head iff train_count > threshold.
struct HeadTailSplit {
    std::size_t threshold = 0;
    std::vector<std::size_t> head_classes;
    std::vector<std::size_t> tail_classes;
    std::vector<char> is_head;  // indexed by class

    std::size_t num_classes() const { return is_head.size(); }
};

inline HeadTailSplit head_tail_split(const std::vector<std::size_t>& train_counts,
                                     std::size_t threshold) {
    HeadTailSplit split;
    split.threshold = threshold;
    split.is_head.resize(train_counts.size());
    for (std::size_t c = 0; c < train_counts.size(); ++c) {
        split.is_head[c] = train_counts[c] > threshold;
        (split.is_head[c] ? split.head_classes : split.tail_classes).push_back(c);
    }
    return split;
}

// True iff the label appears among the first k ranked classes.
inline bool topk_hit(const std::vector<std::size_t>& ranked_classes,
                     std::size_t label, std::size_t k) {
    if (k < 1) throw std::invalid_argument("topk_hit: k must be >= 1");
    k = std::min(k, ranked_classes.size());
    for (std::size_t i = 0; i < k; ++i)
        if (ranked_classes[i] == label) return true;
    return false;
}

// One evaluated sample: full class ranking plus the true label.
struct Prediction {
    std::vector<std::size_t> ranking;
    std::size_t label = 0;
};

// All percentages in [0, 100]. Macro values are unweighted means of
// per-class accuracies over the class set; a side with no evaluated classes
// reports 0.
struct EvalReport {
    double micro_top1 = 0, micro_top3 = 0;
    double macro_top1 = 0, macro_top3 = 0;
    double head_macro_top1 = 0, head_macro_top3 = 0;
    double tail_macro_top1 = 0, tail_macro_top3 = 0;
    std::size_t num_test = 0;
    std::size_t head_classes_evaluated = 0;
    std::size_t tail_classes_evaluated = 0;
};

inline EvalReport evaluate(const std::vector<Prediction>& predictions,
                           const HeadTailSplit& split) {
    if (predictions.empty())
        throw std::invalid_argument("evaluate: empty test set");
    const std::size_t c_total = split.num_classes();
    std::vector<std::size_t> hits1(c_total, 0), hits3(c_total, 0), count(c_total, 0);
    for (const auto& p : predictions) {
        if (p.label >= c_total)
            throw std::invalid_argument("evaluate: class " +
                                        std::to_string(p.label) +
                                        " absent from the head/tail split");
        ++count[p.label];
        if (topk_hit(p.ranking, p.label, 1)) ++hits1[p.label];
        if (topk_hit(p.ranking, p.label, 3)) ++hits3[p.label];
    }

    EvalReport report;
    report.num_test = predictions.size();
    std::size_t total1 = 0, total3 = 0;
    double macro1 = 0, macro3 = 0, head1 = 0, head3 = 0, tail1 = 0, tail3 = 0;
    std::size_t classes_seen = 0;
    for (std::size_t c = 0; c < c_total; ++c) {
        total1 += hits1[c];
        total3 += hits3[c];
        if (count[c] == 0) continue;
        ++classes_seen;
        double acc1 = 100.0 * double(hits1[c]) / double(count[c]);
        double acc3 = 100.0 * double(hits3[c]) / double(count[c]);
        macro1 += acc1;
        macro3 += acc3;
        if (split.is_head[c]) {
            ++report.head_classes_evaluated;
            head1 += acc1;
            head3 += acc3;
        } else {
            ++report.tail_classes_evaluated;
            tail1 += acc1;
            tail3 += acc3;
        }
    }
    report.micro_top1 = 100.0 * double(total1) / double(predictions.size());
    report.micro_top3 = 100.0 * double(total3) / double(predictions.size());
    report.macro_top1 = macro1 / double(classes_seen);
    report.macro_top3 = macro3 / double(classes_seen);
    if (report.head_classes_evaluated) {
        report.head_macro_top1 = head1 / double(report.head_classes_evaluated);
        report.head_macro_top3 = head3 / double(report.head_classes_evaluated);
    }
    if (report.tail_classes_evaluated) {
        report.tail_macro_top1 = tail1 / double(report.tail_classes_evaluated);
        report.tail_macro_top3 = tail3 / double(report.tail_classes_evaluated);
    }
    return report;
}

// Convenience wrapper running a ranking function over raw test samples.
struct EvalSample {
    std::vector<double> features;
    std::size_t label = 0;
};

using RankFn = std::function<std::vector<std::size_t>(const std::vector<double>&)>;

inline EvalReport evaluate(const RankFn& rank, const std::vector<EvalSample>& samples,
                           const HeadTailSplit& split) {
    std::vector<Prediction> predictions;
    predictions.reserve(samples.size());
    for (const auto& s : samples) predictions.push_back({rank(s.features), s.label});
    return evaluate(predictions, split);
}

// "57.29 (83.77)" style cell: top1 with top3 in parentheses, two decimals.
inline std::string render_accuracy(double top1, double top3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", top1, top3);
    return buf;
}

// Stable key=value lines followed by a commented human-readable table.
inline std::string report_to_text(const EvalReport& r) {
    std::string out;
    auto kv = [&out](const char* key, double v) {
        out += key;
        out += '=';
        out += fmt_double(v);
        out += '\n';
    };
    kv("micro_top1", r.micro_top1);
    kv("micro_top3", r.micro_top3);
    kv("macro_top1", r.macro_top1);
    kv("macro_top3", r.macro_top3);
    kv("head_macro_top1", r.head_macro_top1);
    kv("head_macro_top3", r.head_macro_top3);
    kv("tail_macro_top1", r.tail_macro_top1);
    kv("tail_macro_top3", r.tail_macro_top3);
    out += "num_test=" + std::to_string(r.num_test) + "\n";
    out += "head_classes_evaluated=" + std::to_string(r.head_classes_evaluated) + "\n";
    out += "tail_classes_evaluated=" + std::to_string(r.tail_classes_evaluated) + "\n";
    out += "#\n#              top1 (top3)\n";
    out += "# overall      " + render_accuracy(r.micro_top1, r.micro_top3) + "\n";
    out += "# macro        " + render_accuracy(r.macro_top1, r.macro_top3) + "\n";
    out += "# head macro   " + render_accuracy(r.head_macro_top1, r.head_macro_top3) + "\n";
    out += "# tail macro   " + render_accuracy(r.tail_macro_top1, r.tail_macro_top3) + "\n";
    return out;
}

// Unique-visitor conversion bookkeeping.
struct UvStats {
    std::uint64_t trading_uv = 0;
    std::uint64_t visiting_uv = 0;
};

inline double uv_conversion_rate(const UvStats& stats) {
    if (stats.visiting_uv == 0)
        throw std::invalid_argument("uv_conversion_rate: zero visiting UV");
    if (stats.trading_uv > stats.visiting_uv)
        throw std::invalid_argument("uv_conversion_rate: trading exceeds visiting");
    return double(stats.trading_uv) / double(stats.visiting_uv);
}

inline double relative_gain(double old_value, double new_value) {
    if (old_value == 0.0)
        throw std::invalid_argument("relative_gain: zero baseline");
    return (new_value - old_value) / old_value;
}

}  // namespace sicot
