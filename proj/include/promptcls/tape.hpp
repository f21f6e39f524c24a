#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "promptcls/rng.hpp"

namespace promptcls {

// Dense row-major matrix of doubles.
struct Tensor {
    int rows = 0, cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return v.size(); }
    void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

// Model parameter: value plus persistent gradient accumulator.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string n, int r, int c) : name(std::move(n)), value(r, c), grad(r, c) {}
    void zero_grad() { grad.fill(0.0); }
};

// Reverse-mode autodiff over a per-step graph of Tensor ops. Parameters are
// referenced directly (never copied into the tape); their gradients
// accumulate into Param::grad during backward().
class Tape {
public:
    using Ref = std::int32_t;

    Ref constant(Tensor t);

    // Gather rows of `table` at `ids`. Backward scatters into table.grad.
    Ref embed(Param& table, std::vector<int> ids);

    // y = x * w + b, x:[n,din], w:[din,dout], b:[1,dout].
    Ref linear(Ref x, Param& w, Param& b);

    Ref matmul(Ref a, Ref b);     // [n,k] x [k,m]
    Ref matmul_nt(Ref a, Ref b);  // [n,k] x [m,k]^T -> [n,m]
    Ref add(Ref a, Ref b);        // same shape
    Ref scale(Ref a, double c);
    Ref slice_cols(Ref a, int c0, int c1);
    Ref concat_cols(const std::vector<Ref>& parts);
    Ref row(Ref a, int r);  // [1, cols]

    // Row-wise layer norm with learned gain/bias (both [1, cols]).
    Ref layer_norm(Ref x, Param& gain, Param& bias, double eps = 1e-5);

    Ref gelu(Ref x);  // exact erf form

    // Inverted dropout. rate <= 0 returns x unchanged.
    Ref dropout(Ref x, double rate, Rng& rng);

    Ref softmax_rows(Ref x);  // stable, max-subtracted

    // logits = h * emb^T + out_bias, h:[1,d], emb:[V,d], out_bias:[1,V].
    Ref tied_vocab_logits(Ref h, Param& emb, Param& out_bias);

    // out[0,g] = mean of p[0,i] over ids in groups[g]. `groups` must outlive
    // the tape.
    Ref group_mean(Ref p, const std::vector<std::vector<int>>* groups);

    Ref normalize_row(Ref s);  // q = s / sum(s), single row

    // -log(max(q[0,index], eps)) as a [1,1] scalar. Gradient is zero in the
    // clamped region, matching the flat loss there.
    Ref pick_neg_log(Ref q, int index, double eps = 1e-12);

    // 0.5*(KL(p||q) + KL(q||p)) over single-row distributions, eps-clamped
    // logs, exact zero when p == q.
    Ref bidirectional_kl(Ref p, Ref q, double eps = 1e-12);

    // c * (x1 + x2 + ...), all same shape.
    Ref add_scaled(const std::vector<Ref>& xs, double c);

    const Tensor& value(Ref r) const { return nodes_[static_cast<std::size_t>(r)].val; }
    double scalar(Ref r) const;
    const Tensor& grad(Ref r) const { return nodes_[static_cast<std::size_t>(r)].grad; }

    // Seeds d(loss)=1 and runs all recorded backward steps in reverse order.
    void backward(Ref loss);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor val;
        Tensor grad;
        std::function<void()> back;  // empty for leaves
    };
    std::vector<Node> nodes_;

    Ref push(Tensor val, std::function<void()> back = nullptr);
    Tensor& val_at(Ref r) { return nodes_[static_cast<std::size_t>(r)].val; }
    Tensor& grad_at(Ref r) { return nodes_[static_cast<std::size_t>(r)].grad; }
};

}  // namespace promptcls
