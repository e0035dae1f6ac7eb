#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace sicot {

// Shape or index mismatch between tensors.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Non-finite values where finite input is required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Misuse of the recording tape (double backward, non-scalar loss, ...).
struct TapeError : std::logic_error {
    using std::logic_error::logic_error;
};

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// Dense row-major tensor of 64-bit floats with an optional gradient buffer.
// Value-semantic handle: copies share the underlying storage, so a parameter
// captured by several graph nodes is a single accumulation target.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        std::size_t n = shape_numel(shape);
        return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
    }

    static Tensor filled(Shape shape, double value, bool requires_grad = false) {
        std::size_t n = shape_numel(shape);
        return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
    }

    static Tensor from_data(Shape shape, std::vector<double> data,
                            bool requires_grad = false) {
        if (shape_numel(shape) != data.size()) {
            throw DimensionError("tensor: shape " + shape_str(shape) + " expects " +
                                 std::to_string(shape_numel(shape)) +
                                 " values, got " + std::to_string(data.size()));
        }
        return Tensor(std::move(shape), std::move(data), requires_grad);
    }

    static Tensor scalar(double value, bool requires_grad = false) {
        return Tensor(Shape{1}, std::vector<double>{value}, requires_grad);
    }

    bool defined() const { return impl_ != nullptr; }

    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t size() const { return impl_->data.size(); }
    std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }

    // Handle semantics: a const Tensor& pins the handle, not the storage,
    // so accessors below are shallow-const like shared_ptr's.
    std::vector<double>& values() const { return impl_->data; }
    double* data() const { return impl_->data.data(); }

    double at(std::size_t i) const { return impl_->data[i]; }
    double at(std::size_t i, std::size_t j) const {
        return impl_->data[i * impl_->shape[1] + j];
    }

    // Extracts the sole element of a scalar tensor.
    double value() const {
        if (size() != 1) {
            throw DimensionError("tensor: value() needs a scalar, shape is " +
                                 shape_str(shape()));
        }
        return impl_->data[0];
    }

    bool requires_grad() const { return impl_ && impl_->requires_grad; }

    void set_requires_grad(bool on) const {
        impl_->requires_grad = on;
        if (on) ensure_grad();
    }

    bool has_grad() const { return impl_ && !impl_->grad.empty(); }

    void ensure_grad() const {
        if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
    }

    std::vector<double>& grad() const {
        if (!has_grad()) throw TapeError("tensor: gradient buffer is absent");
        return impl_->grad;
    }
    double* grad_data() const { return grad().data(); }

    void zero_grad() const {
        if (has_grad()) impl_->grad.assign(impl_->grad.size(), 0.0);
    }

    // Deep copy with a fresh (zero) gradient buffer.
    Tensor clone() const {
        Tensor t(impl_->shape, impl_->data, impl_->requires_grad);
        return t;
    }

    // True when two handles point at the same storage.
    bool shares_storage(const Tensor& other) const { return impl_ == other.impl_; }

    bool all_finite() const {
        for (double v : impl_->data)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    struct Impl {
        Shape shape;
        std::vector<double> data;
        std::vector<double> grad;  // empty = absent
        bool requires_grad = false;
    };

    Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
        impl_ = std::make_shared<Impl>();
        impl_->shape = std::move(shape);
        impl_->data = std::move(data);
        impl_->requires_grad = requires_grad;
        if (requires_grad) ensure_grad();
    }

    std::shared_ptr<Impl> impl_;
};

}  // namespace sicot
