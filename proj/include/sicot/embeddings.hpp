#pragma once

#include <string>
#include <vector>

#include "sicot/io_util.hpp"
#include "sicot/rng.hpp"
#include "sicot/tensor.hpp"
#include "sicot/text.hpp"

namespace sicot {

// The word-embedding matrix E (V x d), one row per kept vocabulary word.
// Rows come from a word2vec-text file where available; the rest are drawn
// uniformly from [-0.5/d, 0.5/d] with a seeded generator.
class EmbeddingTable {
public:
    EmbeddingTable() = default;

    static EmbeddingTable random(std::size_t vocab_size, std::size_t dim,
                                 Rng& rng, bool trainable = true) {
        EmbeddingTable table;
        table.matrix_ = Tensor::zeros({vocab_size, dim}, trainable);
        table.trainable_ = trainable;
        const double half = 0.5 / static_cast<double>(dim);
        for (std::size_t i = 0; i < vocab_size * dim; ++i)
            table.matrix_.data()[i] = rng.uniform(-half, half);
        return table;
    }

    // word2vec text format: header "<V> <d>", then "<word> <f1> ... <fd>".
    // Vocabulary words present in the file keep their vectors; missing words
    // are drawn from rng in index order, independent of the file's ordering.
    static EmbeddingTable load_word2vec(const std::string& path,
                                        const Vocab& vocab, std::size_t dim,
                                        Rng& rng, bool trainable = true) {
        auto lines = split_lines(read_text_file(path));
        if (lines.empty())
            throw FormatError("embedding file line 1: missing header");
        auto header = split_view(lines[0], ' ');
        if (header.size() != 2)
            throw FormatError("embedding file line 1: expected '<V> <d>' header");
        std::size_t file_rows = parse_u64(header[0], "embedding file line 1");
        std::size_t file_dim = parse_u64(header[1], "embedding file line 1");
        if (file_dim != dim)
            throw FormatError("embedding file line 1: dimension " +
                              std::to_string(file_dim) + " != requested " +
                              std::to_string(dim));

        EmbeddingTable table;
        table.matrix_ = Tensor::zeros({vocab.size(), dim}, trainable);
        table.trainable_ = trainable;
        std::vector<char> filled(vocab.size(), 0);

        std::size_t rows_seen = 0;
        for (std::size_t ln = 1; ln < lines.size(); ++ln) {
            if (lines[ln].empty()) continue;
            ++rows_seen;
            const std::string ctx = "embedding file line " + std::to_string(ln + 1);
            auto parts = split_view(lines[ln], ' ');
            if (parts.size() != dim + 1)
                throw FormatError(ctx + ": expected 1 word + " +
                                  std::to_string(dim) + " floats, got " +
                                  std::to_string(parts.size()) + " fields");
            std::size_t idx = vocab.index_of(std::string(parts[0]));
            if (idx == Vocab::npos) continue;
            for (std::size_t k = 0; k < dim; ++k)
                table.matrix_.data()[idx * dim + k] = parse_double(parts[1 + k], ctx);
            filled[idx] = 1;
        }
        if (rows_seen != file_rows)
            throw FormatError("embedding file: header declares " +
                              std::to_string(file_rows) + " rows, found " +
                              std::to_string(rows_seen));

        const double half = 0.5 / static_cast<double>(dim);
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            if (filled[i]) continue;
            for (std::size_t k = 0; k < dim; ++k)
                table.matrix_.data()[i * dim + k] = rng.uniform(-half, half);
        }
        return table;
    }

    std::string to_word2vec_text(const Vocab& vocab) const {
        std::string out = std::to_string(vocab.size()) + " " +
                          std::to_string(dim()) + "\n";
        for (std::size_t i = 0; i < vocab.size(); ++i) {
            out += vocab.word(i);
            for (std::size_t k = 0; k < dim(); ++k) {
                out += ' ';
                out += fmt_double(matrix_.at(i, k));
            }
            out += '\n';
        }
        return out;
    }

    void save_word2vec(const std::string& path, const Vocab& vocab) const {
        write_text_file(path, to_word2vec_text(vocab));
    }

    const Tensor& matrix() const { return matrix_; }
    Tensor& matrix() { return matrix_; }
    std::size_t rows() const { return matrix_.dim(0); }
    std::size_t dim() const { return matrix_.dim(1); }
    bool trainable() const { return trainable_; }

private:
    Tensor matrix_;
    bool trainable_ = true;
};

}  // namespace sicot
