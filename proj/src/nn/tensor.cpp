#include "txg/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace txg::nn {

namespace {

size_t shape_numel(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor axis must be positive");
        n *= size_t(d);
    }
    return n;
}

using NodePtr = std::shared_ptr<Tensor::Node>;

NodePtr make_node(std::vector<int> shape) {
    if (shape.size() > 4) throw std::invalid_argument("tensors support up to 4 axes");
    auto n = std::make_shared<Tensor::Node>();
    n->shape = std::move(shape);
    n->value.assign(shape_numel(n->shape), 0.0);
    return n;
}

bool any_requires(const std::vector<Tensor>& parents) {
    for (const auto& p : parents)
        if (p.requires_grad()) return true;
    return false;
}

Tensor make_op(std::vector<int> shape, const std::vector<Tensor>& parents,
               std::function<void(Tensor::Node&)> backward_fn) {
    auto n = make_node(std::move(shape));
    n->requires_grad = any_requires(parents);
    if (n->requires_grad) {
        for (const auto& p : parents) n->parents.push_back(p.node());
        n->backward_fn = std::move(backward_fn);
    }
    return Tensor(n);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

int last_dim(const Tensor& x) { return x.shape().back(); }

int rows_of(const Tensor& x) { return int(x.numel()) / last_dim(x); }

} // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    auto n = make_node(std::move(shape));
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::full(std::vector<int> shape, double v, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    std::fill(t.values().begin(), t.values().end(), v);
    return t;
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values,
                           bool requires_grad) {
    auto n = make_node(std::move(shape));
    if (values.size() != n->value.size())
        throw std::invalid_argument("from_values: size mismatch");
    n->value = std::move(values);
    n->requires_grad = requires_grad;
    return Tensor(n);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_values({1}, {v}, requires_grad);
}

Tensor Tensor::uniform(std::vector<int> shape, Rng& rng, double scale, bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    for (double& v : t.values()) v = rng.uniform(-scale, scale);
    return t;
}

double Tensor::item() const {
    if (numel() != 1) throw std::logic_error("item() on non-scalar tensor");
    return node_->value[0];
}

Tensor Tensor::detach() const {
    auto n = make_node(node_->shape);
    n->value = node_->value;
    return Tensor(n);
}

void Tensor::backward() {
    if (numel() != 1) throw std::logic_error("backward() requires a scalar loss");
    // iterative post-order DFS
    std::vector<Node*> topo;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, i] = stack.back();
        if (i < n->parents.size()) {
            Node* p = n->parents[i++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            topo.push_back(n);
            stack.pop_back();
        }
    }
    node_->ensure_grad();
    node_->grad[0] = 1.0;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn) {
            n->ensure_grad();
            n->backward_fn(*n);
        }
    }
}

// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    auto an = a.raw();
    auto bn = b.raw();
    Tensor out = make_op(a.shape(), {a, b}, [an, bn](Tensor::Node& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] += n.grad[i];
        }
    });
    for (size_t i = 0; i < out.numel(); ++i)
        out.values()[i] = a.values()[i] + b.values()[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    auto an = a.raw();
    auto bn = b.raw();
    Tensor out = make_op(a.shape(), {a, b}, [an, bn](Tensor::Node& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] -= n.grad[i];
        }
    });
    for (size_t i = 0; i < out.numel(); ++i)
        out.values()[i] = a.values()[i] - b.values()[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    auto an = a.raw();
    auto bn = b.raw();
    Tensor out = make_op(a.shape(), {a, b}, [an, bn](Tensor::Node& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (size_t i = 0; i < n.grad.size(); ++i)
                an->grad[i] += n.grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (size_t i = 0; i < n.grad.size(); ++i)
                bn->grad[i] += n.grad[i] * an->value[i];
        }
    });
    for (size_t i = 0; i < out.numel(); ++i)
        out.values()[i] = a.values()[i] * b.values()[i];
    return out;
}

Tensor scale(const Tensor& a, double s) {
    auto an = a.raw();
    Tensor out = make_op(a.shape(), {a}, [an, s](Tensor::Node& n) {
        an->ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] * s;
    });
    for (size_t i = 0; i < out.numel(); ++i) out.values()[i] = a.values()[i] * s;
    return out;
}

Tensor add_scalar(const Tensor& a, double s) {
    auto an = a.raw();
    Tensor out = make_op(a.shape(), {a}, [an](Tensor::Node& n) {
        an->ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
    });
    for (size_t i = 0; i < out.numel(); ++i) out.values()[i] = a.values()[i] + s;
    return out;
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor exp_t(const Tensor& a) {
    auto an = a.raw();
    Tensor out = make_op(a.shape(), {a}, [an](Tensor::Node& n) {
        an->ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i)
            an->grad[i] += n.grad[i] * n.value[i];
    });
    for (size_t i = 0; i < out.numel(); ++i) out.values()[i] = std::exp(a.values()[i]);
    return out;
}

Tensor abs_t(const Tensor& a) {
    auto an = a.raw();
    Tensor out = make_op(a.shape(), {a}, [an](Tensor::Node& n) {
        an->ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i) {
            double s = an->value[i] > 0 ? 1.0 : (an->value[i] < 0 ? -1.0 : 0.0);
            an->grad[i] += n.grad[i] * s;
        }
    });
    for (size_t i = 0; i < out.numel(); ++i) out.values()[i] = std::fabs(a.values()[i]);
    return out;
}

Tensor square(const Tensor& a) { return mul(a, a); }

Tensor clamp_t(const Tensor& a, double lo, double hi) {
    auto an = a.raw();
    Tensor out = make_op(a.shape(), {a}, [an, lo, hi](Tensor::Node& n) {
        an->ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i)
            if (an->value[i] > lo && an->value[i] < hi) an->grad[i] += n.grad[i];
    });
    for (size_t i = 0; i < out.numel(); ++i)
        out.values()[i] = std::clamp(a.values()[i], lo, hi);
    return out;
}

Tensor relu(const Tensor& a) {
    auto an = a.raw();
    Tensor out = make_op(a.shape(), {a}, [an](Tensor::Node& n) {
        an->ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i)
            if (an->value[i] > 0) an->grad[i] += n.grad[i];
    });
    for (size_t i = 0; i < out.numel(); ++i)
        out.values()[i] = std::max(0.0, a.values()[i]);
    return out;
}

Tensor gelu(const Tensor& a) {
    // tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi)(x + 0.044715 x^3)))
    constexpr double kC = 0.7978845608028654; // sqrt(2/pi)
    constexpr double kA = 0.044715;
    auto an = a.raw();
    Tensor out = make_op(a.shape(), {a}, [an](Tensor::Node& n) {
        an->ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i) {
            double x = an->value[i];
            double u = kC * (x + kA * x * x * x);
            double t = std::tanh(u);
            double du = kC * (1.0 + 3.0 * kA * x * x);
            double d = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
            an->grad[i] += n.grad[i] * d;
        }
    });
    for (size_t i = 0; i < out.numel(); ++i) {
        double x = a.values()[i];
        out.values()[i] = 0.5 * x * (1.0 + std::tanh(kC * (x + kA * x * x * x)));
    }
    return out;
}

Tensor sigmoid(const Tensor& a) {
    auto an = a.raw();
    Tensor out = make_op(a.shape(), {a}, [an](Tensor::Node& n) {
        an->ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i) {
            double s = n.value[i];
            an->grad[i] += n.grad[i] * s * (1.0 - s);
        }
    });
    for (size_t i = 0; i < out.numel(); ++i) {
        double x = a.values()[i];
        out.values()[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                                 : std::exp(x) / (1.0 + std::exp(x));
    }
    return out;
}

Tensor tanh_t(const Tensor& a) {
    auto an = a.raw();
    Tensor out = make_op(a.shape(), {a}, [an](Tensor::Node& n) {
        an->ensure_grad();
        for (size_t i = 0; i < n.grad.size(); ++i)
            an->grad[i] += n.grad[i] * (1.0 - n.value[i] * n.value[i]);
    });
    for (size_t i = 0; i < out.numel(); ++i) out.values()[i] = std::tanh(a.values()[i]);
    return out;
}

// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw std::invalid_argument("matmul: incompatible shapes");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    auto an = a.raw();
    auto bn = b.raw();
    Tensor out = make_op({m, n}, {a, b}, [an, bn, m, k, n](Tensor::Node& nd) {
        // dA = dC * B^T ; dB = A^T * dC
        if (an->requires_grad) {
            an->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    double g = nd.grad[size_t(i) * n + j];
                    if (g == 0) continue;
                    for (int p = 0; p < k; ++p)
                        an->grad[size_t(i) * k + p] += g * bn->value[size_t(p) * n + j];
                }
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    double av = an->value[size_t(i) * k + p];
                    if (av == 0) continue;
                    for (int j = 0; j < n; ++j)
                        bn->grad[size_t(p) * n + j] += av * nd.grad[size_t(i) * n + j];
                }
        }
    });
    // ikj loop order for contiguous access
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& cv = out.values();
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            double x = av[size_t(i) * k + p];
            if (x == 0) continue;
            const double* brow = bv.data() + size_t(p) * n;
            double* crow = cv.data() + size_t(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += x * brow[j];
        }
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw std::invalid_argument("transpose: 2D only");
    const int m = a.dim(0), n = a.dim(1);
    auto an = a.raw();
    Tensor out = make_op({n, m}, {a}, [an, m, n](Tensor::Node& nd) {
        an->ensure_grad();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                an->grad[size_t(j) * n + i] += nd.grad[size_t(i) * m + j];
    });
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out.values()[size_t(j) * m + i] = a.values()[size_t(i) * n + j];
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    return add_rowvec(matmul(x, w), b);
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
    const int d = last_dim(x);
    if (int(b.numel()) != d) throw std::invalid_argument("add_rowvec: width mismatch");
    const int rows = rows_of(x);
    auto xn = x.raw();
    auto bn = b.raw();
    Tensor out = make_op(x.shape(), {x, b}, [xn, bn, rows, d](Tensor::Node& nd) {
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (size_t i = 0; i < nd.grad.size(); ++i) xn->grad[i] += nd.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < d; ++c)
                    bn->grad[size_t(c)] += nd.grad[size_t(r) * d + c];
        }
    });
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < d; ++c)
            out.values()[size_t(r) * d + c] = x.values()[size_t(r) * d + c] + b.values()[size_t(c)];
    return out;
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const int d = last_dim(x);
    if (int(gamma.numel()) != d || int(beta.numel()) != d)
        throw std::invalid_argument("layernorm: affine width mismatch");
    const int rows = rows_of(x);
    auto xn = x.raw();
    auto gn = gamma.raw();
    auto bn = beta.raw();

    Tensor out = make_op(x.shape(), {x, gamma, beta}, [xn, gn, bn, rows, d,
                                                       eps](Tensor::Node& nd) {
        for (int r = 0; r < rows; ++r) {
            const double* xv = xn->value.data() + size_t(r) * d;
            const double* go = nd.grad.data() + size_t(r) * d;
            double mu = 0, var = 0;
            for (int c = 0; c < d; ++c) mu += xv[c];
            mu /= d;
            for (int c = 0; c < d; ++c) var += (xv[c] - mu) * (xv[c] - mu);
            var /= d;
            double inv = 1.0 / std::sqrt(var + eps);

            if (gn->requires_grad || bn->requires_grad) {
                if (gn->requires_grad) gn->ensure_grad();
                if (bn->requires_grad) bn->ensure_grad();
                for (int c = 0; c < d; ++c) {
                    double xhat = (xv[c] - mu) * inv;
                    if (gn->requires_grad) gn->grad[size_t(c)] += go[c] * xhat;
                    if (bn->requires_grad) bn->grad[size_t(c)] += go[c];
                }
            }
            if (xn->requires_grad) {
                xn->ensure_grad();
                double* xg = xn->grad.data() + size_t(r) * d;
                double sum_gy = 0, sum_gyx = 0;
                for (int c = 0; c < d; ++c) {
                    double gy = go[c] * gn->value[size_t(c)];
                    double xhat = (xv[c] - mu) * inv;
                    sum_gy += gy;
                    sum_gyx += gy * xhat;
                }
                for (int c = 0; c < d; ++c) {
                    double gy = go[c] * gn->value[size_t(c)];
                    double xhat = (xv[c] - mu) * inv;
                    xg[c] += inv * (gy - sum_gy / d - xhat * sum_gyx / d);
                }
            }
        }
    });
    for (int r = 0; r < rows; ++r) {
        const double* xv = x.values().data() + size_t(r) * d;
        double* ov = out.values().data() + size_t(r) * d;
        double mu = 0, var = 0;
        for (int c = 0; c < d; ++c) mu += xv[c];
        mu /= d;
        for (int c = 0; c < d; ++c) var += (xv[c] - mu) * (xv[c] - mu);
        var /= d;
        double inv = 1.0 / std::sqrt(var + eps);
        for (int c = 0; c < d; ++c)
            ov[c] = (xv[c] - mu) * inv * gamma.values()[size_t(c)] + beta.values()[size_t(c)];
    }
    return out;
}

Tensor softmax(const Tensor& x) {
    const int d = last_dim(x);
    const int rows = rows_of(x);
    auto xn = x.raw();
    Tensor out = make_op(x.shape(), {x}, [xn, rows, d](Tensor::Node& nd) {
        xn->ensure_grad();
        for (int r = 0; r < rows; ++r) {
            const double* y = nd.value.data() + size_t(r) * d;
            const double* gy = nd.grad.data() + size_t(r) * d;
            double dot = 0;
            for (int c = 0; c < d; ++c) dot += y[c] * gy[c];
            double* xg = xn->grad.data() + size_t(r) * d;
            for (int c = 0; c < d; ++c) xg[c] += y[c] * (gy[c] - dot);
        }
    });
    for (int r = 0; r < rows; ++r) {
        const double* xv = x.values().data() + size_t(r) * d;
        double* ov = out.values().data() + size_t(r) * d;
        double mx = xv[0];
        for (int c = 1; c < d; ++c) mx = std::max(mx, xv[c]);
        double z = 0;
        for (int c = 0; c < d; ++c) {
            ov[c] = std::exp(xv[c] - mx);
            z += ov[c];
        }
        for (int c = 0; c < d; ++c) ov[c] /= z;
    }
    return out;
}

// ---------------------------------------------------------------------------

Tensor sum(const Tensor& a) {
    auto an = a.raw();
    Tensor out = make_op({1}, {a}, [an](Tensor::Node& nd) {
        an->ensure_grad();
        for (size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += nd.grad[0];
    });
    double s = 0;
    for (double v : a.values()) s += v;
    out.values()[0] = s;
    return out;
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / double(a.numel())); }

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    return mean(square(sub(pred, target)));
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
    return mean(abs_t(sub(pred, target)));
}

Tensor weighted_l1(const Tensor& pred, const Tensor& target,
                   const std::vector<double>& weights) {
    if (weights.size() != pred.numel())
        throw std::invalid_argument("weighted_l1: weight size mismatch");
    double wsum = 0;
    for (double w : weights) wsum += w;
    if (wsum <= 0) throw std::invalid_argument("weighted_l1: nonpositive weight sum");
    Tensor diff = abs_t(sub(pred, target));
    Tensor w = Tensor::from_values(pred.shape(), std::vector<double>(weights));
    return scale(sum(mul(diff, w)), 1.0 / wsum);
}

Tensor bce_with_logits(const Tensor& logits, const Tensor& labels) {
    check_same_shape(logits, labels, "bce_with_logits");
    auto ln = logits.raw();
    auto yn = labels.raw();
    const size_t n = logits.numel();
    Tensor out = make_op({1}, {logits, labels}, [ln, yn, n](Tensor::Node& nd) {
        // d/ds mean(...) = (sigma(s) - y) / n
        ln->ensure_grad();
        for (size_t i = 0; i < n; ++i) {
            double s = ln->value[i];
            double sig = s >= 0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
            ln->grad[i] += nd.grad[0] * (sig - yn->value[i]) / double(n);
        }
    });
    // stable: max(s,0) - s*y + log(1 + exp(-|s|))
    double acc = 0;
    for (size_t i = 0; i < n; ++i) {
        double s = logits.values()[i], y = labels.values()[i];
        acc += std::max(s, 0.0) - s * y + std::log1p(std::exp(-std::fabs(s)));
    }
    out.values()[0] = acc / double(n);
    return out;
}

// ---------------------------------------------------------------------------

Tensor slice_cols(const Tensor& x, int start, int count) {
    if (x.rank() != 2) throw std::invalid_argument("slice_cols: 2D only");
    const int rows = x.dim(0), d = x.dim(1);
    if (start < 0 || count <= 0 || start + count > d)
        throw std::invalid_argument("slice_cols: range out of bounds");
    auto xn = x.raw();
    Tensor out = make_op({rows, count}, {x}, [xn, rows, d, start, count](Tensor::Node& nd) {
        xn->ensure_grad();
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < count; ++c)
                xn->grad[size_t(r) * d + start + c] += nd.grad[size_t(r) * count + c];
    });
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < count; ++c)
            out.values()[size_t(r) * count + c] = x.values()[size_t(r) * d + start + c];
    return out;
}

Tensor concat_cols(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_cols: empty input");
    const int rows = xs[0].dim(0);
    int total = 0;
    for (const auto& x : xs) {
        if (x.rank() != 2 || x.dim(0) != rows)
            throw std::invalid_argument("concat_cols: row mismatch");
        total += x.dim(1);
    }
    std::vector<Tensor::Node*> raws;
    std::vector<int> widths;
    for (const auto& x : xs) {
        raws.push_back(x.raw());
        widths.push_back(x.dim(1));
    }
    Tensor out = make_op({rows, total}, xs, [raws, widths, rows, total](Tensor::Node& nd) {
        int off = 0;
        for (size_t k = 0; k < raws.size(); ++k) {
            auto* p = raws[k];
            int w = widths[k];
            if (p->requires_grad) {
                p->ensure_grad();
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < w; ++c)
                        p->grad[size_t(r) * w + c] += nd.grad[size_t(r) * total + off + c];
            }
            off += w;
        }
    });
    int off = 0;
    for (const auto& x : xs) {
        int w = x.dim(1);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < w; ++c)
                out.values()[size_t(r) * total + off + c] = x.values()[size_t(r) * w + c];
        off += w;
    }
    return out;
}

Tensor concat_rows(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_rows: empty input");
    const int d = xs[0].dim(1);
    int total = 0;
    for (const auto& x : xs) {
        if (x.rank() != 2 || x.dim(1) != d)
            throw std::invalid_argument("concat_rows: width mismatch");
        total += x.dim(0);
    }
    std::vector<Tensor::Node*> raws;
    std::vector<int> counts;
    for (const auto& x : xs) {
        raws.push_back(x.raw());
        counts.push_back(x.dim(0));
    }
    Tensor out = make_op({total, d}, xs, [raws, counts, d](Tensor::Node& nd) {
        int off = 0;
        for (size_t k = 0; k < raws.size(); ++k) {
            auto* p = raws[k];
            int rows = counts[k];
            if (p->requires_grad) {
                p->ensure_grad();
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < d; ++c)
                        p->grad[size_t(r) * d + c] += nd.grad[size_t(off + r) * d + c];
            }
            off += rows;
        }
    });
    int off = 0;
    for (const auto& x : xs) {
        std::copy(x.values().begin(), x.values().end(),
                  out.values().begin() + size_t(off) * d);
        off += x.dim(0);
    }
    return out;
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& idx) {
    if (x.rank() != 2) throw std::invalid_argument("gather_rows: 2D only");
    const int d = x.dim(1), n = x.dim(0);
    for (int i : idx)
        if (i < 0 || i >= n) throw std::out_of_range("gather_rows: index out of range");
    auto xn = x.raw();
    auto indices = idx;
    Tensor out = make_op({int(idx.size()), d}, {x}, [xn, indices, d](Tensor::Node& nd) {
        xn->ensure_grad();
        for (size_t r = 0; r < indices.size(); ++r)
            for (int c = 0; c < d; ++c)
                xn->grad[size_t(indices[r]) * d + c] += nd.grad[r * size_t(d) + c];
    });
    for (size_t r = 0; r < idx.size(); ++r)
        std::copy(x.values().begin() + size_t(idx[r]) * d,
                  x.values().begin() + size_t(idx[r] + 1) * d,
                  out.values().begin() + r * size_t(d));
    return out;
}

Tensor weighted_row_gather(const Tensor& x,
                           const std::vector<std::vector<std::pair<int, double>>>& taps) {
    if (x.rank() != 2) throw std::invalid_argument("weighted_row_gather: 2D only");
    const int d = x.dim(1), n = x.dim(0);
    auto xn = x.raw();
    auto local = taps;
    Tensor out = make_op({int(taps.size()), d}, {x}, [xn, local, d](Tensor::Node& nd) {
        xn->ensure_grad();
        for (size_t r = 0; r < local.size(); ++r)
            for (const auto& [row, w] : local[r])
                for (int c = 0; c < d; ++c)
                    xn->grad[size_t(row) * d + c] += w * nd.grad[r * size_t(d) + c];
    });
    for (size_t r = 0; r < taps.size(); ++r) {
        double* ov = out.values().data() + r * size_t(d);
        for (const auto& [row, w] : taps[r]) {
            if (row < 0 || row >= n)
                throw std::out_of_range("weighted_row_gather: row out of range");
            const double* xv = x.values().data() + size_t(row) * d;
            for (int c = 0; c < d; ++c) ov[c] += w * xv[c];
        }
    }
    return out;
}

Tensor stencil_gather(const Tensor& x, const std::vector<std::vector<int>>& table) {
    if (x.rank() != 2) throw std::invalid_argument("stencil_gather: 2D only");
    if (table.empty()) throw std::invalid_argument("stencil_gather: empty table");
    const int d = x.dim(1), n = x.dim(0);
    const int taps = int(table[0].size());
    for (const auto& row : table)
        if (int(row.size()) != taps)
            throw std::invalid_argument("stencil_gather: ragged table");
    auto xn = x.raw();
    auto local = table;
    Tensor out = make_op({int(table.size()), taps * d}, {x},
                         [xn, local, d, taps](Tensor::Node& nd) {
        xn->ensure_grad();
        for (size_t r = 0; r < local.size(); ++r)
            for (int t = 0; t < taps; ++t) {
                int src = local[r][size_t(t)];
                if (src < 0) continue;
                const double* g = nd.grad.data() + (r * size_t(taps) + t) * d;
                double* xg = xn->grad.data() + size_t(src) * d;
                for (int c = 0; c < d; ++c) xg[c] += g[c];
            }
    });
    for (size_t r = 0; r < table.size(); ++r)
        for (int t = 0; t < taps; ++t) {
            int src = table[r][size_t(t)];
            if (src < 0) continue;
            if (src >= n) throw std::out_of_range("stencil_gather: row out of range");
            std::copy(x.values().begin() + size_t(src) * d,
                      x.values().begin() + size_t(src + 1) * d,
                      out.values().begin() + (r * size_t(taps) + t) * d);
        }
    return out;
}

// ---------------------------------------------------------------------------

double grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                  double h) {
    for (const auto& p : params) const_cast<Tensor&>(p).zero_grad();
    Tensor loss = f();
    loss.backward();
    std::vector<std::vector<double>> ad;
    for (auto p : params) ad.push_back(p.grad());

    double max_rel = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi];
        for (size_t i = 0; i < p.numel(); ++i) {
            double orig = p.values()[i];
            p.values()[i] = orig + h;
            double up = f().item();
            p.values()[i] = orig - h;
            double down = f().item();
            p.values()[i] = orig;
            double fd = (up - down) / (2 * h);
            double rel = std::fabs(ad[pi][i] - fd) / std::max(1.0, std::fabs(fd));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

} // namespace txg::nn
