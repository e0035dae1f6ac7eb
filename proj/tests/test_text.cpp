#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "sicot/embeddings.hpp"
#include "sicot/rng.hpp"
#include "sicot/text.hpp"
#include "test_support.hpp"

using namespace sicot;

namespace {

std::string temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "sicot_text_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

}  // namespace

TEST_CASE("tokenize strips punctuation and lowercases") {
    CHECK(tokenize("Fresh Soft Drink, 330ml!") ==
          std::vector<std::string>{"fresh", "soft", "drink", "330ml"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("  \t ,,!?  ").empty());
    CHECK(tokenize("A-B_c") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("tokenize handles scripts without word boundaries") {
    // Non-ASCII codepoints become character unigrams; ASCII runs inside a
    // mixed chunk stay whole.
    CHECK(tokenize("苹果iphone手机") ==
          std::vector<std::string>{"苹", "果", "iphone", "手", "机"});
    CHECK(tokenize("新品！包邮，热卖") ==
          std::vector<std::string>{"新", "品", "包", "邮", "热", "卖"});
}

TEST_CASE("tokenize is idempotent under join") {
    Rng rng(21);
    const std::string alphabet = "abcXYZ019 ,.!?-_\t";
    std::vector<std::string> cjk = {"苹", "果", "，", "。", "机"};
    for (int it = 0; it < 200; ++it) {
        std::string s;
        std::size_t len = rng.below(30);
        for (std::size_t i = 0; i < len; ++i) {
            if (rng.below(5) == 0)
                s += cjk[rng.below(cjk.size())];
            else
                s += alphabet[rng.below(alphabet.size())];
        }
        auto tokens = tokenize(s);
        CHECK(tokenize(join(tokens)) == tokens);
    }
}

TEST_CASE("build_vocab drop counts") {
    SECTION("40 unique words at 5 percent drops 2 from each end") {
        std::vector<std::vector<std::string>> corpus;
        // word w<i> appears in i+1 documents
        for (int doc = 0; doc < 40; ++doc) {
            std::vector<std::string> d;
            for (int w = doc; w < 40; ++w) d.push_back("w" + std::to_string(w));
            corpus.push_back(d);
        }
        Vocab v = Vocab::build(corpus, 0.05);
        CHECK(v.size() == 36);
        CHECK(v.dropped_frequent().size() == 2);
        CHECK(v.dropped_infrequent().size() == 2);
        // w39 appears in 40 docs... frequency of w<i> is i+1, so the top two
        // are w39, w38 and the bottom two are w0, w1.
        CHECK(v.dropped_frequent() == std::vector<std::string>{"w39", "w38"});
        CHECK(v.dropped_infrequent() == std::vector<std::string>{"w0", "w1"});
        CHECK_FALSE(v.contains("w39"));
        CHECK(v.contains("w20"));
    }
    SECTION("drop_fraction zero keeps everything") {
        std::vector<std::vector<std::string>> corpus = {{"a", "b"}, {"b", "c"}};
        Vocab v = Vocab::build(corpus, 0.0);
        CHECK(v.size() == 3);
        // index order is frequency-descending, ties lexicographic
        CHECK(v.word(0) == "b");
        CHECK(v.word(1) == "a");
        CHECK(v.word(2) == "c");
        CHECK(v.doc_frequency(0) == 2);
    }
    SECTION("tie at the cut boundary drops the lexicographically earlier word") {
        // five words, all frequency 1; drop 1 from each end
        std::vector<std::vector<std::string>> corpus = {{"c"}, {"a"}, {"e"}, {"b"}, {"d"}};
        Vocab v = Vocab::build(corpus, 0.2);
        CHECK(v.dropped_frequent() == std::vector<std::string>{"a"});
        CHECK(v.dropped_infrequent() == std::vector<std::string>{"b"});
        CHECK(v.size() == 3);
    }
    SECTION("empty corpus is an error") {
        std::vector<std::vector<std::string>> corpus;
        CHECK_THROWS_AS(Vocab::build(corpus, 0.05), std::invalid_argument);
        corpus.push_back({});
        CHECK_THROWS_AS(Vocab::build(corpus, 0.05), std::invalid_argument);
    }
    SECTION("property: exactly 2*ceil(f*V) dropped, no word twice") {
        Rng rng(31);
        for (int it = 0; it < 30; ++it) {
            std::size_t n_words = 8 + rng.below(40);
            std::vector<std::vector<std::string>> corpus;
            for (std::size_t w = 0; w < n_words; ++w) {
                std::size_t docs = 1 + rng.below(6);
                for (std::size_t d = 0; d < docs; ++d)
                    corpus.push_back({"t" + std::to_string(w)});
            }
            double f = rng.uniform(0.0, 0.3);
            std::size_t k = static_cast<std::size_t>(
                std::ceil(f * static_cast<double>(n_words)));
            if (2 * k >= n_words) continue;
            Vocab v = Vocab::build(corpus, f);
            CHECK(v.size() == n_words - 2 * k);
            std::unordered_set<std::string> all;
            for (const auto& w : v.words()) CHECK(all.insert(w).second);
            for (const auto& w : v.dropped_frequent()) CHECK(all.insert(w).second);
            for (const auto& w : v.dropped_infrequent()) CHECK(all.insert(w).second);
            CHECK(all.size() == n_words);
        }
    }
}

TEST_CASE("encode maps kept words in order and flags empty results") {
    std::vector<std::vector<std::string>> corpus = {
        {"fresh", "soft", "drink"}, {"fresh", "soda"}, {"fresh"}};
    Vocab v = Vocab::build(corpus, 0.0);

    SECTION("all words kept") {
        TitleRecord r = encode("s1", "Fresh soft drink", v);
        REQUIRE(r.tokens.size() == 3);
        CHECK(v.word(r.tokens[0]) == "fresh");
        CHECK(v.word(r.tokens[1]) == "soft");
        CHECK(v.word(r.tokens[2]) == "drink");
        CHECK_FALSE(r.droppable);
    }
    SECTION("everything out of vocabulary") {
        TitleRecord r = encode("s2", "unrelated words here", v);
        CHECK(r.tokens.empty());
        CHECK(r.droppable);
    }
    SECTION("mixed keeps order of survivors") {
        TitleRecord r = encode("s3", "big fresh new soda", v);
        REQUIRE(r.tokens.size() == 2);
        CHECK(v.word(r.tokens[0]) == "fresh");
        CHECK(v.word(r.tokens[1]) == "soda");
    }
    SECTION("encode is deterministic") {
        TitleRecord a = encode("s", "Fresh! soft-drink soda", v);
        TitleRecord b = encode("s", "Fresh! soft-drink soda", v);
        CHECK(a.tokens == b.tokens);
    }
}

TEST_CASE("vocab file round trip") {
    std::vector<std::vector<std::string>> corpus = {
        {"alpha", "beta"}, {"beta"}, {"gamma", "beta", "alpha"}};
    Vocab v = Vocab::build(corpus, 0.0);
    std::string path = temp_path("vocab.tsv");
    v.save(path);
    Vocab r = Vocab::load(path);
    REQUIRE(r.size() == v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(r.word(i) == v.word(i));
        CHECK(r.doc_frequency(i) == v.doc_frequency(i));
        CHECK(r.index_of(v.word(i)) == i);
    }
    // Second save is byte-identical.
    CHECK(r.to_file_text() == v.to_file_text());
}

TEST_CASE("embedding table") {
    std::vector<std::vector<std::string>> corpus = {{"red", "blue", "green"}};
    Vocab v = Vocab::build(corpus, 0.0);

    SECTION("random init is reproducible and bounded") {
        Rng r1(77), r2(77);
        EmbeddingTable a = EmbeddingTable::random(v.size(), 8, r1);
        EmbeddingTable b = EmbeddingTable::random(v.size(), 8, r2);
        CHECK(a.matrix().values() == b.matrix().values());
        for (double x : a.matrix().values()) {
            CHECK(x >= -0.5 / 8);
            CHECK(x < 0.5 / 8);
        }
        CHECK(a.matrix().requires_grad());
    }
    SECTION("file covering the whole vocab leaves nothing random") {
        std::string path = temp_path("emb_full.txt");
        write_text_file(path,
                        "3 2\n"
                        "blue 1.5 -2.25\n"
                        "green 0.125 3\n"
                        "red -1 0.5\n");
        Rng rng(1);
        EmbeddingTable t = EmbeddingTable::load_word2vec(path, v, 2, rng);
        std::size_t blue = v.index_of("blue");
        CHECK(t.matrix().at(blue, 0) == 1.5);
        CHECK(t.matrix().at(blue, 1) == -2.25);
        std::size_t red = v.index_of("red");
        CHECK(t.matrix().at(red, 0) == -1.0);
    }
    SECTION("missing words are seeded deterministically") {
        std::string path = temp_path("emb_partial.txt");
        write_text_file(path, "1 2\nblue 1 2\n");
        Rng r1(5), r2(5);
        EmbeddingTable a = EmbeddingTable::load_word2vec(path, v, 2, r1);
        EmbeddingTable b = EmbeddingTable::load_word2vec(path, v, 2, r2);
        CHECK(a.matrix().values() == b.matrix().values());
        std::size_t blue = v.index_of("blue");
        CHECK(a.matrix().at(blue, 0) == 1.0);
    }
    SECTION("dimension mismatch names the line") {
        std::string path = temp_path("emb_dim.txt");
        write_text_file(path, "1 50\nblue 1 2\n");
        Rng rng(1);
        CHECK_THROWS_MATCHES(
            EmbeddingTable::load_word2vec(path, v, 64, rng), FormatError,
            Catch::Matchers::MessageMatches(
                Catch::Matchers::ContainsSubstring("line 1") &&
                Catch::Matchers::ContainsSubstring("50")));
    }
    SECTION("malformed row names the line") {
        std::string path = temp_path("emb_row.txt");
        write_text_file(path, "2 2\nblue 1 2\nred 3\n");
        Rng rng(1);
        CHECK_THROWS_MATCHES(EmbeddingTable::load_word2vec(path, v, 2, rng),
                             FormatError,
                             Catch::Matchers::MessageMatches(
                                 Catch::Matchers::ContainsSubstring("line 3")));
    }
    SECTION("word2vec text round trip is bit exact") {
        Rng rng(123);
        EmbeddingTable t = EmbeddingTable::random(v.size(), 5, rng);
        // Make values irregular so shortest round-trip formatting is exercised.
        t.matrix().data()[0] = 0.1 + 0.2;
        t.matrix().data()[1] = -1.0 / 3.0;
        std::string path = temp_path("emb_rt.txt");
        t.save_word2vec(path, v);
        Rng rng2(9);
        EmbeddingTable r = EmbeddingTable::load_word2vec(path, v, 5, rng2);
        CHECK(r.matrix().values() == t.matrix().values());
    }
}
