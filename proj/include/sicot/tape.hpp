#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "sicot/tensor.hpp"

namespace sicot {

// Define-by-run recording tape. Each op computes its output eagerly and, when
// the output carries gradient, records a closure implementing its backward
// rule. backward() replays the closures in reverse recording order, which is a
// valid reverse-topological order by construction. A tape is single-use:
// backward() consumes it and reset() must be called before recording again.
class Tape {
public:
    Tape() = default;
    // recording=false evaluates forward only: outputs carry no gradient and
    // nothing is recorded, which keeps inference free of tape bookkeeping.
    explicit Tape(bool recording) : recording_(recording) {}

    // out[c] = sum_k W[c,k] * x[k] + b[c]
    Tensor linear(const Tensor& weight, const Tensor& bias, const Tensor& input) {
        if (weight.rank() != 2 || input.rank() != 1 || bias.rank() != 1 ||
            weight.dim(1) != input.dim(0) || weight.dim(0) != bias.dim(0)) {
            throw DimensionError("linear: weight " + shape_str(weight.shape()) +
                                 ", bias " + shape_str(bias.shape()) + " and input " +
                                 shape_str(input.shape()) + " do not conform");
        }
        const std::size_t rows = weight.dim(0), cols = weight.dim(1);
        Tensor out = make_output({rows}, {weight, bias, input});
        for (std::size_t c = 0; c < rows; ++c) {
            double acc = 0.0;
            const double* wrow = weight.data() + c * cols;
            for (std::size_t k = 0; k < cols; ++k) acc += wrow[k] * input.at(k);
            out.data()[c] = acc + bias.at(c);
        }
        record(out, [weight, bias, input, out, rows, cols]() {
            const double* g = out.grad_data();
            if (weight.requires_grad()) {
                double* dw = weight.grad_data();
                for (std::size_t c = 0; c < rows; ++c)
                    for (std::size_t k = 0; k < cols; ++k)
                        dw[c * cols + k] += g[c] * input.at(k);
            }
            if (bias.requires_grad()) {
                double* db = bias.grad_data();
                for (std::size_t c = 0; c < rows; ++c) db[c] += g[c];
            }
            if (input.requires_grad()) {
                double* dx = input.grad_data();
                for (std::size_t k = 0; k < cols; ++k) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < rows; ++c)
                        acc += weight.at(c, k) * g[c];
                    dx[k] += acc;
                }
            }
        });
        return out;
    }

    // Coordinate-wise max. On exact ties the gradient routes to `a`.
    Tensor elementwise_max(const Tensor& a, const Tensor& b) {
        require_same_shape("elementwise_max", a, b);
        Tensor out = make_output(a.shape(), {a, b});
        for (std::size_t i = 0; i < a.size(); ++i)
            out.data()[i] = std::max(a.at(i), b.at(i));
        record(out, [a, b, out]() {
            const double* g = out.grad_data();
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (a.at(i) >= b.at(i)) {
                    if (a.requires_grad()) a.grad_data()[i] += g[i];
                } else {
                    if (b.requires_grad()) b.grad_data()[i] += g[i];
                }
            }
        });
        return out;
    }

    // Arithmetic mean along one axis; that axis is removed from the shape.
    Tensor mean_over_axis(const Tensor& t, std::size_t axis) {
        if (axis >= t.rank()) {
            throw DimensionError("mean_over_axis: axis " + std::to_string(axis) +
                                 " out of range for shape " + shape_str(t.shape()));
        }
        const std::size_t n = t.dim(axis);
        Shape out_shape;
        std::size_t outer = 1, inner = 1;
        for (std::size_t i = 0; i < t.rank(); ++i) {
            if (i < axis) outer *= t.dim(i);
            if (i > axis) inner *= t.dim(i);
            if (i != axis) out_shape.push_back(t.dim(i));
        }
        if (out_shape.empty()) out_shape = {1};
        Tensor out = make_output(out_shape, {t});
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t k = 0; k < inner; ++k) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    acc += t.at((o * n + j) * inner + k);
                out.data()[o * inner + k] = acc / static_cast<double>(n);
            }
        record(out, [t, out, outer, inner, n]() {
            if (!t.requires_grad()) return;
            const double* g = out.grad_data();
            double* dt = t.grad_data();
            const double scale = 1.0 / static_cast<double>(n);
            for (std::size_t o = 0; o < outer; ++o)
                for (std::size_t j = 0; j < n; ++j)
                    for (std::size_t k = 0; k < inner; ++k)
                        dt[(o * n + j) * inner + k] += g[o * inner + k] * scale;
        });
        return out;
    }

    Tensor tanh(const Tensor& t) {
        Tensor out = make_output(t.shape(), {t});
        for (std::size_t i = 0; i < t.size(); ++i)
            out.data()[i] = std::tanh(t.at(i));
        record(out, [t, out]() {
            if (!t.requires_grad()) return;
            const double* g = out.grad_data();
            double* dt = t.grad_data();
            for (std::size_t i = 0; i < t.size(); ++i) {
                double y = out.at(i);
                dt[i] += g[i] * (1.0 - y * y);
            }
        });
        return out;
    }

    // Max-shifted softmax over a rank-1 tensor.
    Tensor softmax(const Tensor& logits) {
        if (logits.rank() != 1 || logits.size() == 0)
            throw DimensionError("softmax: expects a non-empty vector, got " +
                                 shape_str(logits.shape()));
        if (!logits.all_finite())
            throw NumericError("softmax: non-finite input");
        Tensor out = make_output(logits.shape(), {logits});
        const double mu = *std::max_element(logits.values().begin(),
                                            logits.values().end());
        double z = 0.0;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            out.data()[i] = std::exp(logits.at(i) - mu);
            z += out.at(i);
        }
        for (std::size_t i = 0; i < logits.size(); ++i) out.data()[i] /= z;
        record(out, [logits, out]() {
            if (!logits.requires_grad()) return;
            const double* g = out.grad_data();
            double* dz = logits.grad_data();
            double dot = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) dot += g[i] * out.at(i);
            for (std::size_t i = 0; i < out.size(); ++i)
                dz[i] += out.at(i) * (g[i] - dot);
        });
        return out;
    }

    // Stable log-sum-exp cross entropy; gradient is softmax(logits) - onehot.
    Tensor cross_entropy_from_logits(const Tensor& logits, std::size_t label) {
        if (logits.rank() != 1 || logits.size() == 0)
            throw DimensionError("cross_entropy: expects a non-empty vector, got " +
                                 shape_str(logits.shape()));
        if (label >= logits.size())
            throw DimensionError("cross_entropy: label " + std::to_string(label) +
                                 " out of range for " + std::to_string(logits.size()) +
                                 " classes");
        if (!logits.all_finite())
            throw NumericError("cross_entropy: non-finite input");
        const double mu = *std::max_element(logits.values().begin(),
                                            logits.values().end());
        double expsum = 0.0;
        for (std::size_t i = 0; i < logits.size(); ++i)
            expsum += std::exp(logits.at(i) - mu);
        Tensor out = make_output({1}, {logits});
        out.data()[0] = mu + std::log(expsum) - logits.at(label);
        record(out, [logits, out, label, mu, expsum]() {
            if (!logits.requires_grad()) return;
            const double g = out.grad_data()[0];
            double* dz = logits.grad_data();
            for (std::size_t i = 0; i < logits.size(); ++i) {
                double p = std::exp(logits.at(i) - mu) / expsum;
                dz[i] += g * (p - (i == label ? 1.0 : 0.0));
            }
        });
        return out;
    }

    Tensor add(const Tensor& a, const Tensor& b) {
        require_same_shape("add", a, b);
        Tensor out = make_output(a.shape(), {a, b});
        for (std::size_t i = 0; i < a.size(); ++i)
            out.data()[i] = a.at(i) + b.at(i);
        record(out, [a, b, out]() {
            const double* g = out.grad_data();
            if (a.requires_grad())
                for (std::size_t i = 0; i < a.size(); ++i) a.grad_data()[i] += g[i];
            if (b.requires_grad())
                for (std::size_t i = 0; i < b.size(); ++i) b.grad_data()[i] += g[i];
        });
        return out;
    }

    Tensor scale(const Tensor& t, double c) {
        Tensor out = make_output(t.shape(), {t});
        for (std::size_t i = 0; i < t.size(); ++i) out.data()[i] = t.at(i) * c;
        record(out, [t, out, c]() {
            if (!t.requires_grad()) return;
            const double* g = out.grad_data();
            double* dt = t.grad_data();
            for (std::size_t i = 0; i < t.size(); ++i) dt[i] += g[i] * c;
        });
        return out;
    }

    Tensor mul(const Tensor& a, const Tensor& b) {
        require_same_shape("mul", a, b);
        Tensor out = make_output(a.shape(), {a, b});
        for (std::size_t i = 0; i < a.size(); ++i)
            out.data()[i] = a.at(i) * b.at(i);
        record(out, [a, b, out]() {
            const double* g = out.grad_data();
            if (a.requires_grad())
                for (std::size_t i = 0; i < a.size(); ++i)
                    a.grad_data()[i] += g[i] * b.at(i);
            if (b.requires_grad())
                for (std::size_t i = 0; i < b.size(); ++i)
                    b.grad_data()[i] += g[i] * a.at(i);
        });
        return out;
    }

    Tensor sum(const Tensor& t) {
        Tensor out = make_output({1}, {t});
        double acc = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) acc += t.at(i);
        out.data()[0] = acc;
        record(out, [t, out]() {
            if (!t.requires_grad()) return;
            const double g = out.grad_data()[0];
            double* dt = t.grad_data();
            for (std::size_t i = 0; i < t.size(); ++i) dt[i] += g;
        });
        return out;
    }

    // Stacks rows of a V x d table into a T x d tensor. Repeated indices
    // accumulate their gradients into the same table row.
    Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& rows) {
        if (table.rank() != 2)
            throw DimensionError("gather_rows: table must be rank 2, got " +
                                 shape_str(table.shape()));
        const std::size_t d = table.dim(1);
        for (std::size_t r : rows)
            if (r >= table.dim(0))
                throw DimensionError("gather_rows: row " + std::to_string(r) +
                                     " out of range for table " +
                                     shape_str(table.shape()));
        Tensor out = make_output({rows.size(), d}, {table});
        for (std::size_t j = 0; j < rows.size(); ++j)
            std::copy_n(table.data() + rows[j] * d, d, out.data() + j * d);
        record(out, [table, out, rows, d]() {
            if (!table.requires_grad()) return;
            const double* g = out.grad_data();
            double* dt = table.grad_data();
            for (std::size_t j = 0; j < rows.size(); ++j)
                for (std::size_t k = 0; k < d; ++k)
                    dt[rows[j] * d + k] += g[j * d + k];
        });
        return out;
    }

    // out[j] = m[j] ⊙ v for a T x d matrix and a length-d vector.
    Tensor rowwise_mul(const Tensor& m, const Tensor& v) {
        if (m.rank() != 2 || v.rank() != 1 || m.dim(1) != v.dim(0))
            throw DimensionError("rowwise_mul: matrix " + shape_str(m.shape()) +
                                 " and vector " + shape_str(v.shape()) +
                                 " do not conform");
        const std::size_t t = m.dim(0), d = m.dim(1);
        Tensor out = make_output(m.shape(), {m, v});
        for (std::size_t j = 0; j < t; ++j)
            for (std::size_t k = 0; k < d; ++k)
                out.data()[j * d + k] = m.at(j, k) * v.at(k);
        record(out, [m, v, out, t, d]() {
            const double* g = out.grad_data();
            if (m.requires_grad()) {
                double* dm = m.grad_data();
                for (std::size_t j = 0; j < t; ++j)
                    for (std::size_t k = 0; k < d; ++k)
                        dm[j * d + k] += g[j * d + k] * v.at(k);
            }
            if (v.requires_grad()) {
                double* dv = v.grad_data();
                for (std::size_t j = 0; j < t; ++j)
                    for (std::size_t k = 0; k < d; ++k)
                        dv[k] += g[j * d + k] * m.at(j, k);
            }
        });
        return out;
    }

    // out = sum_j w[j] * m[j] for weights of length T and a T x d matrix.
    Tensor weighted_sum_rows(const Tensor& w, const Tensor& m) {
        if (m.rank() != 2 || w.rank() != 1 || m.dim(0) != w.dim(0))
            throw DimensionError("weighted_sum_rows: weights " +
                                 shape_str(w.shape()) + " and matrix " +
                                 shape_str(m.shape()) + " do not conform");
        const std::size_t t = m.dim(0), d = m.dim(1);
        Tensor out = make_output({d}, {w, m});
        for (std::size_t k = 0; k < d; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < t; ++j) acc += w.at(j) * m.at(j, k);
            out.data()[k] = acc;
        }
        record(out, [w, m, out, t, d]() {
            const double* g = out.grad_data();
            if (w.requires_grad()) {
                double* dw = w.grad_data();
                for (std::size_t j = 0; j < t; ++j) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < d; ++k) acc += m.at(j, k) * g[k];
                    dw[j] += acc;
                }
            }
            if (m.requires_grad()) {
                double* dm = m.grad_data();
                for (std::size_t j = 0; j < t; ++j)
                    for (std::size_t k = 0; k < d; ++k)
                        dm[j * d + k] += w.at(j) * g[k];
            }
        });
        return out;
    }

    // Seeds d(loss)/d(loss) = 1 and replays all recorded backward rules in
    // reverse order. Consumes the tape.
    void backward(const Tensor& loss) {
        if (consumed_)
            throw TapeError("backward: tape already consumed, reset() first");
        if (!loss.defined() || loss.size() != 1)
            throw TapeError("backward: loss must be a scalar tensor");
        consumed_ = true;
        if (!loss.requires_grad()) return;  // nothing reaches any parameter
        loss.ensure_grad();
        loss.grad()[0] += 1.0;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    }

    void reset() {
        nodes_.clear();
        consumed_ = false;
    }

    std::size_t node_count() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

private:
    static void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
        if (a.shape() != b.shape())
            throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) +
                                 " and " + shape_str(b.shape()) + " differ");
    }

    Tensor make_output(Shape shape, std::initializer_list<Tensor> inputs) {
        bool needs_grad = false;
        for (const Tensor& t : inputs) needs_grad |= t.requires_grad();
        return Tensor::zeros(std::move(shape), needs_grad && recording_);
    }

    void record(const Tensor& out, std::function<void()> backprop) {
        if (consumed_)
            throw TapeError("record: tape already consumed, reset() first");
        if (out.requires_grad()) nodes_.push_back(std::move(backprop));
    }

    std::vector<std::function<void()>> nodes_;
    bool recording_ = true;
    bool consumed_ = false;
};

}  // namespace sicot
