#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sicot/io_util.hpp"
#include "sicot/rng.hpp"
#include "sicot/text.hpp"

namespace sicot {

// Synthetic long-tailed multimodal dataset: exponential class imbalance on
// the image side, while the title side stays comparatively balanced and the
// head and tail classes share part of the vocabulary. Tail classes are
// perturbed copies of head classes and draw title words from their parent's
// family pool, so title-mediated knowledge transfer is physically present.
struct LongTailSpec {
    std::size_t num_classes = 100;
    std::size_t n_max = 500;           // samples in the largest class
    double imbalance_factor = 50.0;    // n_max / n_min
    std::size_t head_tail_threshold = 200;
    std::size_t feature_dim = 32;
    std::size_t test_per_class = 20;

    // title composition
    std::size_t signature_words_per_class = 6;
    double target_shared_fraction = 0.12;  // >0 derives the pool size
    std::size_t shared_pool_size = 0;      // explicit pool size when target is 0
    std::size_t promo_vocab_size = 80;     // global promotion/noise words
    std::size_t shared_words_per_title = 3;
    std::size_t noise_words_per_title = 4;
    double junk_title_fraction = 0.05;     // unique junk token per k-th title
    double max_word_freq_ratio = 5.0;      // signature-word balance bound

    // feature geometry
    double feature_noise_sigma = 0.12;
    double prototype_perturbation = 0.35;  // tail offset from its parent head

    std::uint64_t rng_seed = 1;
};

// n_c = max(1, round(n_max * IF^(-c / (C-1)))), nonincreasing in c.
inline std::vector<std::size_t> class_counts(const LongTailSpec& spec) {
    if (spec.num_classes < 2)
        throw std::invalid_argument("longtail: need at least 2 classes");
    if (spec.imbalance_factor < 1.0)
        throw std::invalid_argument("longtail: imbalance_factor must be >= 1");
    if (spec.n_max < 1)
        throw std::invalid_argument("longtail: n_max must be >= 1");
    std::vector<std::size_t> counts(spec.num_classes);
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        double exponent = -static_cast<double>(c) /
                          static_cast<double>(spec.num_classes - 1);
        double n = static_cast<double>(spec.n_max) *
                   std::pow(spec.imbalance_factor, exponent);
        counts[c] = static_cast<std::size_t>(
            std::max<long long>(1, std::llround(n)));
    }
    return counts;
}

struct ManifestRecord {
    std::string sample_id;
    std::string split;  // "train" | "test"
    std::size_t label = 0;
    std::vector<double> features;
    std::string title;
};

struct DatasetManifest {
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;
    std::vector<ManifestRecord> records;
};

// Ground truth the generator worked from; tests and tools can inspect it.
struct GeneratorTruth {
    std::vector<std::size_t> train_counts;
    std::vector<long> parent;  // parent head class, -1 for roots
    std::vector<std::vector<double>> prototypes;
    std::vector<std::vector<std::string>> signature_words;  // per class
    std::vector<std::string> pool_words;
    std::vector<std::string> promo_words;
    std::size_t num_head_classes = 0;
    double expected_shared_fraction = 0.0;
};

namespace detail {

inline std::string pseudo_word(Rng& rng, std::unordered_set<std::string>& used) {
    static const char* consonants = "bcdfgklmnprstvz";
    static const char* vowels = "aeiou";
    while (true) {
        std::string w;
        std::size_t syllables = 2 + rng.below(2);
        for (std::size_t s = 0; s < syllables; ++s) {
            w.push_back(consonants[rng.below(15)]);
            w.push_back(vowels[rng.below(5)]);
        }
        if (rng.below(4) == 0) w += std::to_string(rng.below(100));
        if (used.insert(w).second) return w;
    }
}

// k distinct draws from [0, n), order randomized.
inline std::vector<std::size_t> sample_distinct(Rng& rng, std::size_t n,
                                                std::size_t k) {
    k = std::min(k, n);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

inline std::vector<double> unit_vector(Rng& rng, std::size_t d) {
    std::vector<double> v(d);
    double norm2 = 0.0;
    for (auto& x : v) {
        x = rng.normal();
        norm2 += x * x;
    }
    double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v) x *= inv;
    return v;
}

}  // namespace detail

// Pool size that realizes the target head/tail shared-vocabulary fraction,
// given that signature words are class-exclusive while pool and promotion
// words appear on both sides:
//   (S + P) / (C*k_sig + J + S + P) = target
inline std::size_t solve_pool_size(const LongTailSpec& spec,
                                   std::size_t junk_words) {
    if (spec.target_shared_fraction <= 0.0) return spec.shared_pool_size;
    if (spec.target_shared_fraction >= 1.0)
        throw std::invalid_argument(
            "longtail: target_shared_fraction must be < 1");
    const double t = spec.target_shared_fraction;
    const double exclusive =
        static_cast<double>(spec.num_classes * spec.signature_words_per_class +
                            junk_words);
    const double needed = t / (1.0 - t) * exclusive;
    const double pool = needed - static_cast<double>(spec.promo_vocab_size);
    if (pool < -0.5) {
        double lower = static_cast<double>(spec.promo_vocab_size) /
                       (exclusive + static_cast<double>(spec.promo_vocab_size));
        throw std::invalid_argument(
            "longtail: target_shared_fraction " + fmt_double(t) +
            " infeasible; promotion words alone give " + fmt_double(lower) +
            " (lower the promo vocab or raise the target)");
    }
    return static_cast<std::size_t>(std::max(0.0, std::round(pool)));
}

inline std::pair<DatasetManifest, GeneratorTruth> generate(const LongTailSpec& spec) {
    if (spec.feature_dim < 1)
        throw std::invalid_argument("longtail: feature_dim must be >= 1");
    if (spec.signature_words_per_class < 1)
        throw std::invalid_argument("longtail: need signature words");
    if (spec.max_word_freq_ratio < 1.0)
        throw std::invalid_argument("longtail: max_word_freq_ratio must be >= 1");
    if (spec.test_per_class < 1)
        throw std::invalid_argument("longtail: test_per_class must be >= 1");

    GeneratorTruth truth;
    truth.train_counts = class_counts(spec);
    const std::size_t c_total = spec.num_classes;
    const std::size_t n_min = truth.train_counts.back();
    std::size_t total_train = 0;
    for (std::size_t n : truth.train_counts) total_train += n;

    // Heads are a prefix because counts are nonincreasing.
    std::size_t n_head = 0;
    while (n_head < c_total &&
           truth.train_counts[n_head] > spec.head_tail_threshold)
        ++n_head;
    truth.num_head_classes = n_head;
    truth.parent.assign(c_total, -1);
    for (std::size_t c = n_head; c < c_total && n_head > 0; ++c)
        truth.parent[c] = static_cast<long>((c - n_head) % n_head);

    // Every junk_stride-th train title carries a unique junk token; these
    // occupy the rare end of the corpus the frequency filter trims away.
    std::size_t junk_stride = 0, junk_words = 0;
    if (spec.junk_title_fraction > 0.0) {
        junk_stride = static_cast<std::size_t>(
            std::max(1.0, std::floor(1.0 / spec.junk_title_fraction)));
        junk_words = total_train / junk_stride +
                     (total_train % junk_stride != 0 ? 1 : 0);
    }

    const std::size_t pool_size = solve_pool_size(spec, junk_words);
    const std::size_t promo_size = spec.promo_vocab_size;
    truth.expected_shared_fraction =
        static_cast<double>(pool_size + promo_size) /
        static_cast<double>(c_total * spec.signature_words_per_class +
                            junk_words + pool_size + promo_size);

    Rng rng(spec.rng_seed);
    Rng word_rng = rng.fork(1);
    Rng proto_rng = rng.fork(2);
    Rng record_rng = rng.fork(3);

    std::unordered_set<std::string> used_words;
    for (std::size_t i = 0; i < promo_size; ++i)
        truth.promo_words.push_back(detail::pseudo_word(word_rng, used_words));
    truth.signature_words.resize(c_total);
    for (std::size_t c = 0; c < c_total; ++c)
        for (std::size_t k = 0; k < spec.signature_words_per_class; ++k)
            truth.signature_words[c].push_back(
                detail::pseudo_word(word_rng, used_words));
    for (std::size_t i = 0; i < pool_size; ++i)
        truth.pool_words.push_back(detail::pseudo_word(word_rng, used_words));

    // Family pools: pool word i belongs to family i % n_families.
    const std::size_t n_families = std::max<std::size_t>(1, n_head);
    std::vector<std::vector<std::size_t>> family_pool(n_families);
    for (std::size_t i = 0; i < pool_size; ++i)
        family_pool[i % n_families].push_back(i);
    auto family_of = [&](std::size_t c) -> std::size_t {
        if (n_head == 0) return 0;
        return c < n_head ? c : static_cast<std::size_t>(truth.parent[c]);
    };

    // Prototypes: heads are random unit vectors, tails perturb their parent.
    truth.prototypes.resize(c_total);
    for (std::size_t c = 0; c < c_total; ++c) {
        if (truth.parent[c] < 0) {
            truth.prototypes[c] = detail::unit_vector(proto_rng, spec.feature_dim);
        } else {
            const auto& base = truth.prototypes[truth.parent[c]];
            std::vector<double> v(spec.feature_dim);
            double norm2 = 0.0;
            for (std::size_t k = 0; k < spec.feature_dim; ++k) {
                v[k] = base[k] + spec.prototype_perturbation * proto_rng.normal();
                norm2 += v[k] * v[k];
            }
            double inv = 1.0 / std::sqrt(norm2);
            for (auto& x : v) x *= inv;
            truth.prototypes[c] = std::move(v);
        }
    }

    // Signature-word occurrence budget per class: m_c = min(n_c, floor(kappa))
    // with kappa = ratio_bound * n_min caps the most/least frequent signature
    // word ratio at the bound exactly.
    const std::size_t kappa = static_cast<std::size_t>(
        std::max(1.0, std::floor(spec.max_word_freq_ratio *
                                 static_cast<double>(n_min))));

    DatasetManifest manifest;
    manifest.feature_dim = spec.feature_dim;
    manifest.num_classes = c_total;

    std::size_t train_index = 0;  // global train title counter for junk stride
    auto make_record = [&](std::size_t c, std::size_t i, bool train) {
        ManifestRecord rec;
        rec.split = train ? "train" : "test";
        rec.sample_id = (train ? "tr-" : "te-") + std::to_string(c) + "-" +
                        std::to_string(i);
        rec.label = c;

        rec.features = truth.prototypes[c];
        if (spec.feature_noise_sigma > 0.0)
            for (auto& f : rec.features)
                f += spec.feature_noise_sigma * record_rng.normal();

        std::vector<std::string> words;
        const std::size_t n_c = truth.train_counts[c];
        const std::size_t m_c = std::min(n_c, kappa);
        for (std::size_t k = 0; k < spec.signature_words_per_class; ++k) {
            if (train) {
                // Deterministic stratified inclusion: exactly m_c of the n_c
                // titles carry word k, phase-shifted per word.
                std::size_t phase = k * n_c / spec.signature_words_per_class;
                if ((i + phase) % n_c < m_c)
                    words.push_back(truth.signature_words[c][k]);
            } else {
                words.push_back(truth.signature_words[c][k]);
            }
        }
        const auto& pool = family_pool[family_of(c)];
        for (std::size_t j : detail::sample_distinct(
                 record_rng, pool.size(), spec.shared_words_per_title))
            words.push_back(truth.pool_words[pool[j]]);
        for (std::size_t j : detail::sample_distinct(
                 record_rng, truth.promo_words.size(), spec.noise_words_per_title))
            words.push_back(truth.promo_words[j]);
        if (train && junk_stride > 0 && train_index % junk_stride == 0)
            words.push_back(detail::pseudo_word(record_rng, used_words));
        if (train) ++train_index;

        record_rng.shuffle(words);
        for (std::size_t w = 0; w < words.size(); ++w) {
            if (w) rec.title += ' ';
            rec.title += words[w];
        }
        manifest.records.push_back(std::move(rec));
    };

    for (std::size_t c = 0; c < c_total; ++c)
        for (std::size_t i = 0; i < truth.train_counts[c]; ++i)
            make_record(c, i, true);
    for (std::size_t c = 0; c < c_total; ++c)
        for (std::size_t i = 0; i < spec.test_per_class; ++i)
            make_record(c, i, false);

    return {std::move(manifest), std::move(truth)};
}

// |words in head titles ∩ words in tail titles| / |all title words|,
// measured over the train split's raw titles.
inline double shared_vocab_fraction(const DatasetManifest& manifest,
                                    std::size_t head_tail_threshold) {
    std::unordered_map<std::size_t, std::size_t> counts;
    for (const auto& rec : manifest.records)
        if (rec.split == "train") ++counts[rec.label];
    bool any_tail = false;
    for (const auto& [label, n] : counts)
        if (n <= head_tail_threshold) any_tail = true;
    if (!any_tail)
        throw std::invalid_argument(
            "shared_vocab_fraction: no tail classes under threshold " +
            std::to_string(head_tail_threshold));

    std::unordered_set<std::string> head_words, tail_words, all_words;
    for (const auto& rec : manifest.records) {
        if (rec.split != "train") continue;
        bool head = counts[rec.label] > head_tail_threshold;
        for (auto& w : tokenize(rec.title)) {
            all_words.insert(w);
            (head ? head_words : tail_words).insert(std::move(w));
        }
    }
    if (all_words.empty()) return 0.0;
    std::size_t shared = 0;
    for (const auto& w : head_words)
        if (tail_words.count(w)) ++shared;
    return static_cast<double>(shared) / static_cast<double>(all_words.size());
}

// Manifest file: "#sicot-manifest v1 dim=<d> classes=<C>" header, then one
// tab-separated record per line: sample_id, split, label, comma-separated
// features (shortest round-trip decimals), raw title.
inline std::string manifest_to_text(const DatasetManifest& manifest) {
    std::string out = "#sicot-manifest v1 dim=" +
                      std::to_string(manifest.feature_dim) + " classes=" +
                      std::to_string(manifest.num_classes) + "\n";
    for (const auto& rec : manifest.records) {
        if (rec.title.find('\t') != std::string::npos ||
            rec.title.find('\n') != std::string::npos)
            throw FormatError("manifest: title of " + rec.sample_id +
                              " contains a tab or newline");
        out += rec.sample_id;
        out += '\t';
        out += rec.split;
        out += '\t';
        out += std::to_string(rec.label);
        out += '\t';
        for (std::size_t k = 0; k < rec.features.size(); ++k) {
            if (k) out += ',';
            out += fmt_double(rec.features[k]);
        }
        out += '\t';
        out += rec.title;
        out += '\n';
    }
    return out;
}

inline DatasetManifest manifest_from_text(const std::string& text) {
    auto lines = split_lines(text);
    if (lines.empty() || lines[0].rfind("#sicot-manifest v1 ", 0) != 0)
        throw FormatError("manifest line 1: missing '#sicot-manifest v1' header");
    DatasetManifest manifest;
    {
        auto fields = split_view(lines[0], ' ');
        if (fields.size() != 4 || fields[2].rfind("dim=", 0) != 0 ||
            fields[3].rfind("classes=", 0) != 0)
            throw FormatError("manifest line 1: expected dim=<d> classes=<C>");
        manifest.feature_dim = parse_u64(fields[2].substr(4), "manifest line 1");
        manifest.num_classes = parse_u64(fields[3].substr(8), "manifest line 1");
    }
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const std::string ctx = "manifest line " + std::to_string(ln + 1);
        auto fields = split_view(lines[ln], '\t');
        if (fields.size() != 5)
            throw FormatError(ctx + ": expected 5 tab-separated fields, got " +
                              std::to_string(fields.size()));
        ManifestRecord rec;
        rec.sample_id = std::string(fields[0]);
        rec.split = std::string(fields[1]);
        if (rec.split != "train" && rec.split != "test")
            throw FormatError(ctx + ": split must be train or test");
        rec.label = parse_u64(fields[2], ctx);
        if (rec.label >= manifest.num_classes)
            throw FormatError(ctx + ": label " + std::to_string(rec.label) +
                              " outside declared classes");
        for (auto f : split_view(fields[3], ','))
            rec.features.push_back(parse_double(f, ctx));
        if (rec.features.size() != manifest.feature_dim)
            throw FormatError(ctx + ": expected " +
                              std::to_string(manifest.feature_dim) +
                              " features, got " +
                              std::to_string(rec.features.size()));
        rec.title = std::string(fields[4]);
        manifest.records.push_back(std::move(rec));
    }
    return manifest;
}

inline void write_manifest(const DatasetManifest& manifest,
                           const std::string& path) {
    write_text_file(path, manifest_to_text(manifest));
}

inline DatasetManifest read_manifest(const std::string& path) {
    return manifest_from_text(read_text_file(path));
}

}  // namespace sicot
