#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sicot/io_util.hpp"

namespace sicot {

namespace detail {

// Separator codepoints beyond ASCII: general punctuation, CJK symbols and
// punctuation, fullwidth punctuation blocks, vertical/compat forms.
inline bool is_wide_punct(char32_t cp) {
    return (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x3000 && cp <= 0x303F) ||
           (cp >= 0xFE30 && cp <= 0xFE4F) || (cp >= 0xFF01 && cp <= 0xFF0F) ||
           (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) ||
           (cp >= 0xFF5B && cp <= 0xFF65);
}

// Decodes one UTF-8 codepoint; returns its byte length, 0 on malformed input.
inline std::size_t decode_utf8(std::string_view s, std::size_t pos, char32_t& cp) {
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    unsigned char b0 = byte(pos);
    std::size_t len;
    if (b0 < 0x80) {
        cp = b0;
        return 1;
    } else if ((b0 >> 5) == 0x6) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 >> 4) == 0xE) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 >> 3) == 0x1E) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return 0;
    }
    if (pos + len > s.size()) return 0;
    for (std::size_t i = 1; i < len; ++i) {
        if ((byte(pos + i) >> 6) != 0x2) return 0;
        cp = (cp << 6) | (byte(pos + i) & 0x3F);
    }
    return len;
}

}  // namespace detail

// Lowercased words with punctuation discarded. ASCII alphanumeric runs form
// words; any other non-ASCII codepoint becomes a single-character token, so
// scripts without word boundaries degrade to character unigrams without a
// segmenter. Deterministic, and idempotent under join-with-spaces.
inline std::vector<std::string> tokenize(std::string_view raw) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    std::size_t pos = 0;
    while (pos < raw.size()) {
        char32_t cp = 0;
        std::size_t len = detail::decode_utf8(raw, pos, cp);
        if (len == 0) {  // malformed byte acts as a separator
            flush();
            ++pos;
            continue;
        }
        if (cp < 0x80) {
            char c = static_cast<char>(cp);
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
                current.push_back(c);
            } else {
                flush();
            }
        } else if (detail::is_wide_punct(cp)) {
            flush();
        } else {
            flush();
            tokens.emplace_back(raw.substr(pos, len));
        }
        pos += len;
    }
    flush();
    return tokens;
}

// A title reduced to vocabulary indices. Records whose token list is empty
// after filtering carry the droppable flag: training skips them, inference
// never needs titles in the first place.
struct TitleRecord {
    std::string sample_id;
    std::string raw_title;
    std::vector<std::size_t> tokens;
    bool droppable = false;
};

// Frequency-filtered vocabulary. Words are ranked by document frequency
// (ties broken lexicographically); the top and bottom ceil(f*V) words are
// dropped and the survivors get dense indices in rank order.
class Vocab {
public:
    static Vocab build(const std::vector<std::vector<std::string>>& corpus,
                       double drop_fraction) {
        if (drop_fraction < 0.0 || drop_fraction >= 0.5)
            throw std::invalid_argument(
                "build_vocab: drop_fraction must be in [0, 0.5)");
        std::unordered_map<std::string, std::size_t> freq;
        for (const auto& doc : corpus) {
            std::unordered_set<std::string_view> seen;
            for (const auto& w : doc)
                if (seen.insert(w).second) ++freq[w];
        }
        if (freq.empty()) throw std::invalid_argument("build_vocab: empty corpus");

        std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(),
                                                                freq.end());
        // Most frequent first; lexicographically earlier first among ties.
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });

        const std::size_t v = ranked.size();
        const std::size_t k = static_cast<std::size_t>(
            std::ceil(drop_fraction * static_cast<double>(v)));
        if (k > 0 && 2 * k >= v)
            throw std::invalid_argument(
                "build_vocab: drop_fraction removes the whole vocabulary (V=" +
                std::to_string(v) + ", 2*ceil(f*V)=" + std::to_string(2 * k) + ")");

        Vocab vocab;
        std::vector<char> is_dropped(v, 0);
        for (std::size_t i = 0; i < k; ++i) {
            is_dropped[i] = 1;
            vocab.dropped_frequent_.push_back(ranked[i].first);
        }
        // Least frequent first for the bottom cut, same tie rule; words
        // already removed at the top are skipped so nothing drops twice.
        std::vector<std::size_t> asc(v);
        for (std::size_t i = 0; i < v; ++i) asc[i] = i;
        std::sort(asc.begin(), asc.end(), [&](std::size_t a, std::size_t b) {
            if (ranked[a].second != ranked[b].second)
                return ranked[a].second < ranked[b].second;
            return ranked[a].first < ranked[b].first;
        });
        for (std::size_t i = 0; i < v && vocab.dropped_infrequent_.size() < k; ++i) {
            if (is_dropped[asc[i]]) continue;
            is_dropped[asc[i]] = 1;
            vocab.dropped_infrequent_.push_back(ranked[asc[i]].first);
        }

        for (std::size_t i = 0; i < v; ++i) {
            if (is_dropped[i]) continue;
            vocab.index_.emplace(ranked[i].first, vocab.words_.size());
            vocab.words_.push_back(ranked[i].first);
            vocab.doc_frequency_.push_back(ranked[i].second);
        }
        return vocab;
    }

    std::size_t size() const { return words_.size(); }
    const std::string& word(std::size_t i) const { return words_.at(i); }
    std::size_t doc_frequency(std::size_t i) const { return doc_frequency_.at(i); }
    const std::vector<std::string>& words() const { return words_; }
    const std::vector<std::string>& dropped_frequent() const {
        return dropped_frequent_;
    }
    const std::vector<std::string>& dropped_infrequent() const {
        return dropped_infrequent_;
    }

    bool contains(const std::string& w) const { return index_.count(w) != 0; }
    // Index of a kept word, or npos when filtered/unknown.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t index_of(const std::string& w) const {
        auto it = index_.find(w);
        return it == index_.end() ? npos : it->second;
    }

    // One "<word>\t<doc_frequency>" line per kept word, in index order.
    // Dropped-word sets are construction metadata and are not serialized.
    std::string to_file_text() const {
        std::string out;
        for (std::size_t i = 0; i < words_.size(); ++i) {
            out += words_[i];
            out += '\t';
            out += std::to_string(doc_frequency_[i]);
            out += '\n';
        }
        return out;
    }

    void save(const std::string& path) const { write_text_file(path, to_file_text()); }

    static Vocab from_file_text(const std::string& text) {
        Vocab vocab;
        auto lines = split_lines(text);
        for (std::size_t ln = 0; ln < lines.size(); ++ln) {
            if (lines[ln].empty()) continue;
            auto parts = split_view(lines[ln], '\t');
            if (parts.size() != 2)
                throw FormatError("vocab file line " + std::to_string(ln + 1) +
                                  ": expected <word>\\t<count>");
            std::string word(parts[0]);
            std::size_t count = parse_u64(
                parts[1], "vocab file line " + std::to_string(ln + 1));
            vocab.index_.emplace(word, vocab.words_.size());
            vocab.words_.push_back(std::move(word));
            vocab.doc_frequency_.push_back(count);
        }
        return vocab;
    }

    static Vocab load(const std::string& path) {
        return from_file_text(read_text_file(path));
    }

private:
    std::vector<std::string> words_;
    std::vector<std::size_t> doc_frequency_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> dropped_frequent_;
    std::vector<std::string> dropped_infrequent_;
};

// Maps a raw title onto vocabulary indices, silently skipping filtered and
// unknown words while preserving the order of the survivors.
inline TitleRecord encode(const std::string& sample_id,
                          const std::string& raw_title, const Vocab& vocab) {
    TitleRecord rec;
    rec.sample_id = sample_id;
    rec.raw_title = raw_title;
    for (const auto& w : tokenize(raw_title)) {
        std::size_t idx = vocab.index_of(w);
        if (idx != Vocab::npos) rec.tokens.push_back(idx);
    }
    rec.droppable = rec.tokens.empty();
    return rec;
}

}  // namespace sicot
