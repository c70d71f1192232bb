#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ppm/errors.hpp"
#include "ppm/nn/rng.hpp"

namespace ppm::nn {

// One node of the computation graph. Tensors are rank-2 only (scalars are
// 1x1, vectors 1xn), stored row-major as 64-bit floats. Gradients are
// allocated lazily and accumulate additively, so a value used twice
// receives the sum of both path gradients.
struct Node {
    int rows = 0;
    int cols = 0;
    std::vector<double> value;
    std::vector<double> grad;  // empty until first needed
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    std::size_t size() const { return value.size(); }
    std::vector<double>& ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
        return grad;
    }
};

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(int rows, int cols, bool requires_grad = false);
    static Tensor from(int rows, int cols, std::vector<double> v, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor wrap(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }

    bool defined() const { return static_cast<bool>(n_); }
    int rows() const { return n_->rows; }
    int cols() const { return n_->cols; }
    int size() const { return static_cast<int>(n_->value.size()); }
    bool requires_grad() const { return n_->requires_grad; }

    double at(int r, int c) const { return n_->value[std::size_t(r) * n_->cols + c]; }
    double item() const;

    std::vector<double>& values() { return n_->value; }
    const std::vector<double>& values() const { return n_->value; }
    std::vector<double>& grad() { return n_->ensure_grad(); }
    bool has_grad() const { return !n_->grad.empty(); }
    void zero_grad() {
        if (!n_->grad.empty()) std::fill(n_->grad.begin(), n_->grad.end(), 0.0);
    }

    std::shared_ptr<Node> node() const { return n_; }

private:
    explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}
    std::shared_ptr<Node> n_;
};

// Reverse-mode sweep from a 1x1 loss. Seeds d(loss)=1 and calls each node's
// backward_fn in reverse topological order; leaf gradients accumulate until
// explicitly zeroed.
void backward(const Tensor& loss);

// ---- core ops ----------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& x, double c);
Tensor add_const(const Tensor& x, double c);
Tensor add_rowwise(const Tensor& x, const Tensor& v);  // v is 1 x cols
Tensor sub_rowwise(const Tensor& x, const Tensor& v);
Tensor mul_rowwise(const Tensor& x, const Tensor& v);
Tensor sub_colwise(const Tensor& x, const Tensor& v);  // v is rows x 1
Tensor mul_colwise(const Tensor& x, const Tensor& v);
Tensor concat_rows(const std::vector<Tensor>& xs);
Tensor concat_cols(const std::vector<Tensor>& xs);
Tensor slice_rows(const Tensor& x, int r0, int r1);
Tensor slice_cols(const Tensor& x, int c0, int c1);
Tensor sum_all(const Tensor& x);   // 1x1
Tensor mean_all(const Tensor& x);  // 1x1
Tensor row_mean(const Tensor& x);  // rows x 1
Tensor col_mean(const Tensor& x);  // 1 x cols
Tensor relu(const Tensor& x);
Tensor tanh_op(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp_op(const Tensor& x);
Tensor sqrt_op(const Tensor& x);
Tensor reciprocal(const Tensor& x);
Tensor neg(const Tensor& x);

// Row softmax. The masked variant treats columns < valid_from as absent:
// their output weight is exactly 0.0 and no gradient flows through them.
Tensor softmax_rows(const Tensor& x);
Tensor softmax_rows_masked(const Tensor& x, int valid_from);

// Inverted dropout; identity in evaluation mode and for p == 0.
Tensor dropout(const Tensor& x, double p, bool training, Rng& rng);

// Gathers rows of table; gradient scatter-adds into the table rows.
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& indices);

// Mean over rows [valid_from, rows), 1 x cols. valid_from = 0 pools everything.
Tensor mean_pool_over_sequence(const Tensor& x, int valid_from = 0);

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// ---- losses ------------------------------------------------------------
// Mean over rows of -log softmax(row)[target]; numerically stable.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets);
// Mean squared componentwise error over all elements; target carries no grad.
Tensor mse(const Tensor& pred, const Tensor& target);

}  // namespace ppm::nn
