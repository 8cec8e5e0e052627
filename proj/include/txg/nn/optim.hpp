#pragma once

#include <string>
#include <vector>

#include "txg/nn/tensor.hpp"

namespace txg::nn {

/// Named parameter registry; iteration order is registration order, which
/// fixes both the checkpoint layout and the optimizer update order.
class ParamStore {
public:
    Tensor add(const std::string& name, Tensor t);
    Tensor get(const std::string& name) const;
    bool has(const std::string& name) const;

    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    std::vector<Tensor> tensors() const;
    size_t parameter_count() const;
    void zero_grad();

private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

class AdamW {
public:
    AdamW(std::vector<Tensor> params, AdamWConfig cfg = {});

    /// One update from the gradients currently stored on the parameters.
    void step();
    void zero_grad();
    const AdamWConfig& config() const { return cfg_; }

private:
    std::vector<Tensor> params_;
    AdamWConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    long t_ = 0;
};

} // namespace txg::nn
