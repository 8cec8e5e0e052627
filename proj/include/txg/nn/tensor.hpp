#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "txg/rng.hpp"

namespace txg::nn {

/// Dense double-precision tensor with reverse-mode autodiff. Up to 4 axes.
/// Graphs are dynamic: ops record parents and a backward closure; backward()
/// on a scalar walks the graph once in reverse topological order.
class Tensor {
public:
    struct Node {
        std::vector<int> shape;
        std::vector<double> value;
        std::vector<double> grad;
        bool requires_grad = false;
        std::vector<std::shared_ptr<Node>> parents;
        std::function<void(Node&)> backward_fn;

        size_t numel() const { return value.size(); }
        void ensure_grad() {
            if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
        }
    };

    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double v, bool requires_grad = false);
    static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    /// uniform(-scale, scale)
    static Tensor uniform(std::vector<int> shape, Rng& rng, double scale,
                          bool requires_grad = true);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[size_t(i)]; }
    size_t numel() const { return node_->numel(); }
    size_t rank() const { return node_->shape.size(); }

    std::vector<double>& values() { return node_->value; }
    const std::vector<double>& values() const { return node_->value; }
    std::vector<double>& grad() {
        node_->ensure_grad();
        return node_->grad;
    }
    double item() const;

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool v) { node_->requires_grad = v; }
    void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

    /// Backprop from this scalar tensor.
    void backward();

    std::shared_ptr<Node> node() const { return node_; }
    Node* raw() const { return node_.get(); }

    /// Detached copy sharing no graph history.
    Tensor detach() const;

private:
    std::shared_ptr<Node> node_;
};

// --- elementwise and shape ops -------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor abs_t(const Tensor& a);
Tensor square(const Tensor& a);
/// Gradient passes only where lo < x < hi.
Tensor clamp_t(const Tensor& a, double lo, double hi);

Tensor relu(const Tensor& a);
Tensor gelu(const Tensor& a); // tanh approximation
Tensor sigmoid(const Tensor& a);
Tensor tanh_t(const Tensor& a);

// --- linear algebra -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b); // [m,k]x[k,n]
Tensor transpose(const Tensor& a);               // 2D
/// x[n,din] * W[din,dout] + b[dout]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
/// Broadcast-add a row vector b[1,d] or [d] to every row of x[n,d].
Tensor add_rowvec(const Tensor& x, const Tensor& b);

// --- normalization / attention pieces ------------------------------------

/// Row-wise layer norm over the last axis with affine gamma/beta.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 double eps = 1e-5);
/// Row-stable softmax over the last axis.
Tensor softmax(const Tensor& x);

// --- reductions and losses -------------------------------------------------

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor mse_loss(const Tensor& pred, const Tensor& target);
Tensor l1_loss(const Tensor& pred, const Tensor& target);
/// sum(w .* |a-b|) / sum(w); weights are constants.
Tensor weighted_l1(const Tensor& pred, const Tensor& target,
                   const std::vector<double>& weights);
/// Mean of -[y log sigma(s) + (1-y) log sigma(-s)], numerically stable.
Tensor bce_with_logits(const Tensor& logits, const Tensor& labels);

// --- indexing --------------------------------------------------------------

Tensor slice_cols(const Tensor& x, int start, int count);
Tensor concat_cols(const std::vector<Tensor>& xs);
Tensor concat_rows(const std::vector<Tensor>& xs);
/// out[i,:] = x[idx[i],:]; backward scatter-adds.
Tensor gather_rows(const Tensor& x, const std::vector<int>& idx);

/// out[i,:] = sum_j taps[i][j].second * x[taps[i][j].first, :]
/// Rows gathered through a fixed sparse weight stencil (weights constant).
Tensor weighted_row_gather(const Tensor& x,
                           const std::vector<std::vector<std::pair<int, double>>>& taps);

/// out[i, t*din:(t+1)*din] = x[table[i][t], :] (zero where table entry < 0).
Tensor stencil_gather(const Tensor& x, const std::vector<std::vector<int>>& table);

// --- gradient checking ------------------------------------------------------

/// Max over parameter elements of |g_ad - g_fd| / max(1, |g_fd|), central
/// differences at step h. f rebuilds the scalar graph from current values.
double grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                  double h = 1e-4);

} // namespace txg::nn
