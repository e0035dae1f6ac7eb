#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "sicot/io_util.hpp"
#include "sicot/optim.hpp"
#include "sicot/tensor.hpp"
#include "sicot/text.hpp"

namespace sicot {

// Self-contained training snapshot: the effective config, the vocabulary and
// every named parameter tensor. Doubles are stored as raw little-endian bit
// patterns, so save/load round-trips are bit-exact by construction.
struct Checkpoint {
    std::string config_text;
    Vocab vocab;
    ParamSet tensors;
};

namespace detail {

constexpr char kCkptMagic[8] = {'S', 'I', 'C', 'O', 'T', 'C', 'K', '1'};

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline void put_str(std::string& out, const std::string& s) {
    put_u64(out, s.size());
    out += s;
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size())
            throw FormatError("checkpoint: truncated at byte " +
                              std::to_string(pos));
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(
                     static_cast<unsigned char>(buf[pos + i]))
                 << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        std::uint64_t n = u64();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace detail

inline std::string checkpoint_to_bytes(const Checkpoint& ckpt) {
    using namespace detail;
    std::string out(kCkptMagic, sizeof(kCkptMagic));
    put_u64(out, 1);  // format version
    put_str(out, ckpt.config_text);

    put_u64(out, ckpt.vocab.size());
    for (std::size_t i = 0; i < ckpt.vocab.size(); ++i) {
        put_str(out, ckpt.vocab.word(i));
        put_u64(out, ckpt.vocab.doc_frequency(i));
    }

    put_u64(out, ckpt.tensors.size());
    for (const auto& named : ckpt.tensors) {
        put_str(out, named.name);
        put_u64(out, named.tensor.rank());
        for (std::size_t d : named.tensor.shape()) put_u64(out, d);
        for (std::size_t i = 0; i < named.tensor.size(); ++i)
            put_f64(out, named.tensor.at(i));
    }
    return out;
}

inline Checkpoint checkpoint_from_bytes(const std::string& bytes) {
    using namespace detail;
    if (bytes.size() < sizeof(kCkptMagic) ||
        std::memcmp(bytes.data(), kCkptMagic, sizeof(kCkptMagic)) != 0)
        throw FormatError("checkpoint: bad magic");
    Reader r{bytes, sizeof(kCkptMagic)};
    std::uint64_t version = r.u64();
    if (version != 1)
        throw FormatError("checkpoint: unsupported version " +
                          std::to_string(version));

    Checkpoint ckpt;
    ckpt.config_text = r.str();

    std::string vocab_text;
    std::uint64_t words = r.u64();
    for (std::uint64_t i = 0; i < words; ++i) {
        std::string w = r.str();
        std::uint64_t freq = r.u64();
        vocab_text += w + "\t" + std::to_string(freq) + "\n";
    }
    ckpt.vocab = Vocab::from_file_text(vocab_text);

    std::uint64_t count = r.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string name = r.str();
        std::uint64_t rank = r.u64();
        Shape shape;
        for (std::uint64_t d = 0; d < rank; ++d)
            shape.push_back(static_cast<std::size_t>(r.u64()));
        std::vector<double> data(shape_numel(shape));
        for (auto& v : data) v = r.f64();
        ckpt.tensors.push_back(
            {std::move(name), Tensor::from_data(shape, std::move(data))});
    }
    return ckpt;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    write_text_file(path, checkpoint_to_bytes(ckpt));
}

inline Checkpoint load_checkpoint(const std::string& path) {
    return checkpoint_from_bytes(read_text_file(path));
}

inline const Tensor& find_tensor(const Checkpoint& ckpt, const std::string& name) {
    for (const auto& named : ckpt.tensors)
        if (named.name == name) return named.tensor;
    throw FormatError("checkpoint: missing tensor '" + name + "'");
}

}  // namespace sicot
