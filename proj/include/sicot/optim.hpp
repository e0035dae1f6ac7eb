#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sicot/tensor.hpp"

namespace sicot {

// SGD with step decay: lr(e) = learning_rate * gamma^floor(e / step_epochs).
struct SgdConfig {
    double learning_rate = 0.1;
    double gamma = 0.8;
    std::size_t step_epochs = 1;
    std::size_t batch_size = 256;

    void validate() const {
        if (learning_rate <= 0.0)
            throw std::invalid_argument("sgd: learning_rate must be positive");
        if (gamma <= 0.0 || gamma > 1.0)
            throw std::invalid_argument("sgd: gamma must be in (0, 1]");
        if (step_epochs == 0)
            throw std::invalid_argument("sgd: step_epochs must be >= 1");
        if (batch_size == 0)
            throw std::invalid_argument("sgd: batch_size must be >= 1");
    }
};

inline double effective_lr(const SgdConfig& cfg, std::size_t epoch) {
    return cfg.learning_rate *
           std::pow(cfg.gamma, static_cast<double>(epoch / cfg.step_epochs));
}

struct NamedParam {
    std::string name;
    Tensor tensor;
};

using ParamSet = std::vector<NamedParam>;

inline void zero_grads(ParamSet& params) {
    for (auto& p : params) p.tensor.zero_grad();
}

// w <- w - lr(epoch) * grad(w), then grads are zeroed. Coordinates with an
// exactly-zero gradient are left untouched (including their sign bit).
inline void sgd_step(ParamSet& params, const SgdConfig& cfg, std::size_t epoch) {
    cfg.validate();
    const double lr = effective_lr(cfg, epoch);
    for (auto& p : params) {
        if (!p.tensor.has_grad())
            throw TapeError("sgd_step: parameter '" + p.name + "' has no gradient");
        double* w = p.tensor.data();
        double* g = p.tensor.grad_data();
        for (std::size_t i = 0; i < p.tensor.size(); ++i) {
            if (g[i] != 0.0) w[i] -= lr * g[i];
        }
        p.tensor.zero_grad();
    }
}

}  // namespace sicot
