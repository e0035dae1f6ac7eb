#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <map>
#include <unordered_map>

#include "sicot/synth.hpp"
#include "sicot/text.hpp"

using namespace sicot;

namespace {

LongTailSpec tiny_spec() {
    LongTailSpec spec;
    spec.num_classes = 12;
    spec.n_max = 60;
    spec.imbalance_factor = 20.0;
    spec.head_tail_threshold = 20;
    spec.feature_dim = 6;
    spec.test_per_class = 4;
    spec.signature_words_per_class = 4;
    spec.promo_vocab_size = 10;
    spec.noise_words_per_title = 2;
    spec.shared_words_per_title = 2;
    spec.target_shared_fraction = 0.2;  // small vocab needs a higher target
    spec.rng_seed = 5;
    return spec;
}

}  // namespace

TEST_CASE("class counts follow the imbalance law") {
    SECTION("worked example") {
        LongTailSpec spec;
        spec.num_classes = 3;
        spec.n_max = 100;
        spec.imbalance_factor = 100.0;
        CHECK(class_counts(spec) == std::vector<std::size_t>{100, 10, 1});
    }
    SECTION("imbalance factor 1 is balanced") {
        LongTailSpec spec;
        spec.num_classes = 5;
        spec.n_max = 17;
        spec.imbalance_factor = 1.0;
        CHECK(class_counts(spec) ==
              std::vector<std::size_t>(5, 17));
    }
    SECTION("counts are nonincreasing and hit the factor within rounding") {
        for (double factor : {1.0, 3.0, 50.0, 400.0}) {
            LongTailSpec spec;
            spec.num_classes = 37;
            spec.n_max = 500;
            spec.imbalance_factor = factor;
            auto counts = class_counts(spec);
            for (std::size_t c = 1; c < counts.size(); ++c)
                CHECK(counts[c] <= counts[c - 1]);
            CHECK(counts.front() == 500);
            CHECK(std::llround(500.0 / factor) ==
                  static_cast<long long>(counts.back()));
        }
    }
    SECTION("invalid specs") {
        LongTailSpec spec;
        spec.num_classes = 1;
        CHECK_THROWS_AS(class_counts(spec), std::invalid_argument);
        spec.num_classes = 4;
        spec.imbalance_factor = 0.5;
        CHECK_THROWS_AS(class_counts(spec), std::invalid_argument);
    }
}

TEST_CASE("generation is a pure function of the spec") {
    LongTailSpec spec = tiny_spec();
    auto [m1, t1] = generate(spec);
    auto [m2, t2] = generate(spec);
    CHECK(manifest_to_text(m1) == manifest_to_text(m2));

    spec.rng_seed = 6;
    auto [m3, t3] = generate(spec);
    CHECK(manifest_to_text(m1) != manifest_to_text(m3));
}

TEST_CASE("zero noise reproduces class prototypes") {
    LongTailSpec spec = tiny_spec();
    spec.feature_noise_sigma = 0.0;
    auto [manifest, truth] = generate(spec);
    for (const auto& rec : manifest.records)
        CHECK(rec.features == truth.prototypes[rec.label]);
}

TEST_CASE("generated corpus statistics") {
    LongTailSpec spec = tiny_spec();
    auto [manifest, truth] = generate(spec);

    SECTION("train counts match the imbalance law") {
        std::unordered_map<std::size_t, std::size_t> counts;
        for (const auto& rec : manifest.records)
            if (rec.split == "train") ++counts[rec.label];
        auto expected = class_counts(spec);
        for (std::size_t c = 0; c < spec.num_classes; ++c)
            CHECK(counts[c] == expected[c]);
    }
    SECTION("test split is balanced within one sample") {
        std::map<std::size_t, std::size_t> counts;
        for (const auto& rec : manifest.records)
            if (rec.split == "test") ++counts[rec.label];
        REQUIRE(counts.size() == spec.num_classes);
        std::size_t lo = counts.begin()->second, hi = lo;
        for (const auto& [c, n] : counts) {
            lo = std::min(lo, n);
            hi = std::max(hi, n);
        }
        CHECK(hi - lo <= 1);
    }
    SECTION("tail prototypes stay close to their parents") {
        for (std::size_t c = truth.num_head_classes; c < spec.num_classes; ++c) {
            REQUIRE(truth.parent[c] >= 0);
            const auto& tail = truth.prototypes[c];
            const auto& head = truth.prototypes[truth.parent[c]];
            double dot = 0.0;
            for (std::size_t k = 0; k < spec.feature_dim; ++k)
                dot += tail[k] * head[k];
            CHECK(dot > 0.5);  // perturbation keeps family geometry
        }
    }
    SECTION("signature word frequency ratio respects the bound") {
        std::unordered_map<std::string, std::size_t> freq;
        for (const auto& rec : manifest.records)
            if (rec.split == "train")
                for (const auto& w : tokenize(rec.title)) ++freq[w];
        std::size_t lo = SIZE_MAX, hi = 0;
        for (const auto& sig : truth.signature_words)
            for (const auto& w : sig) {
                REQUIRE(freq.count(w));  // every signature word is realized
                lo = std::min(lo, freq[w]);
                hi = std::max(hi, freq[w]);
            }
        CHECK(static_cast<double>(hi) <=
              spec.max_word_freq_ratio * static_cast<double>(lo) + 1e-9);
    }
}

TEST_CASE("shared vocabulary fraction") {
    SECTION("disjoint vocabularies give zero") {
        DatasetManifest m;
        m.feature_dim = 1;
        m.num_classes = 2;
        m.records = {{"a", "train", 0, {0.0}, "apple banana"},
                     {"h", "train", 0, {0.0}, "apple"},
                     {"b", "train", 1, {0.0}, "cherry plum"}};
        CHECK(shared_vocab_fraction(m, 1) == 0.0);
    }
    SECTION("identical vocabularies give one") {
        DatasetManifest m;
        m.feature_dim = 1;
        m.num_classes = 2;
        m.records = {{"a", "train", 0, {0.0}, "apple banana"},
                     {"h", "train", 0, {0.0}, "apple banana"},
                     {"b", "train", 1, {0.0}, "apple banana"}};
        CHECK(shared_vocab_fraction(m, 1) == 1.0);
    }
    SECTION("no tail classes is an error") {
        DatasetManifest m;
        m.feature_dim = 1;
        m.num_classes = 1;
        m.records = {{"a", "train", 0, {0.0}, "x"}, {"b", "train", 0, {0.0}, "y"}};
        CHECK_THROWS_AS(shared_vocab_fraction(m, 1), std::invalid_argument);
    }
    SECTION("default-style spec lands within two points of the target") {
        LongTailSpec spec = tiny_spec();
        spec.num_classes = 40;
        spec.n_max = 200;
        spec.imbalance_factor = 25.0;
        spec.head_tail_threshold = 60;
        spec.target_shared_fraction = 0.12;
        auto [manifest, truth] = generate(spec);
        double measured = shared_vocab_fraction(manifest, spec.head_tail_threshold);
        INFO("expected " << truth.expected_shared_fraction << " measured "
                         << measured);
        CHECK(std::fabs(measured - 0.12) <= 0.02);
    }
    SECTION("infeasible target reports the achievable bound") {
        LongTailSpec spec = tiny_spec();
        spec.target_shared_fraction = 0.001;  // below what promo words force
        CHECK_THROWS_MATCHES(generate(spec), std::invalid_argument,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("infeasible")));
    }
}

TEST_CASE("manifest io") {
    auto dir = std::filesystem::temp_directory_path() / "sicot_synth_tests";
    std::filesystem::create_directories(dir);

    SECTION("round trip of a generated manifest") {
        LongTailSpec spec = tiny_spec();
        spec.n_max = 250;  // ~1000 records
        auto [manifest, truth] = generate(spec);
        REQUIRE(manifest.records.size() >= 1000);
        std::string path = (dir / "roundtrip.tsv").string();
        write_manifest(manifest, path);
        DatasetManifest r = read_manifest(path);
        CHECK(manifest_to_text(r) == manifest_to_text(manifest));
        REQUIRE(r.records.size() == manifest.records.size());
        CHECK(r.records[7].features == manifest.records[7].features);
    }
    SECTION("empty title survives the round trip") {
        DatasetManifest m;
        m.feature_dim = 2;
        m.num_classes = 1;
        m.records = {{"a", "train", 0, {1.5, -0.25}, ""}};
        std::string path = (dir / "empty_title.tsv").string();
        write_manifest(m, path);
        DatasetManifest r = read_manifest(path);
        REQUIRE(r.records.size() == 1);
        CHECK(r.records[0].title.empty());
        CHECK(r.records[0].features == m.records[0].features);
    }
    SECTION("truncated record names its line") {
        std::string text =
            "#sicot-manifest v1 dim=2 classes=1\n"
            "a\ttrain\t0\t1,2\tok title\n"
            "b\ttrain\t0\t1,2\n";  // missing the title field
        CHECK_THROWS_MATCHES(manifest_from_text(text), FormatError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("line 3")));
    }
    SECTION("feature width mismatch names its line") {
        std::string text =
            "#sicot-manifest v1 dim=3 classes=1\n"
            "a\ttrain\t0\t1,2\ttitle\n";
        CHECK_THROWS_MATCHES(manifest_from_text(text), FormatError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("line 2")));
    }
    SECTION("missing header") {
        CHECK_THROWS_AS(manifest_from_text("a\ttrain\t0\t1\tt\n"), FormatError);
    }
}
