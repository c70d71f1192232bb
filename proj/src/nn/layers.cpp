#include "ppm/nn/layers.hpp"

#include <cmath>

namespace ppm::nn {

void init_xavier_uniform(Tensor& w, Rng& rng) {
    double limit = std::sqrt(6.0 / (w.rows() + w.cols()));
    for (auto& v : w.values()) v = rng.uniform(-limit, limit);
}

void init_embedding(Tensor& table, Rng& rng) {
    double stddev = 1.0 / std::sqrt(static_cast<double>(table.cols()));
    for (auto& v : table.values()) v = rng.normal(0.0, stddev);
}

Tensor make_linear_weight(ParamStore& store, const std::string& name, int in, int out, Rng& rng) {
    Tensor w = store.create(name, in, out);
    init_xavier_uniform(w, rng);
    return w;
}

Tensor make_bias(ParamStore& store, const std::string& name, int out) {
    return store.create(name, 1, out);
}

Tensor make_embedding(ParamStore& store, const std::string& name, int vocab, int dim, Rng& rng) {
    Tensor t = store.create(name, vocab, dim);
    init_embedding(t, rng);
    return t;
}

Tensor make_positional_encoding(int seq, int dim) {
    Tensor pe = Tensor::zeros(seq, dim);
    auto& v = pe.values();
    for (int pos = 0; pos < seq; ++pos)
        for (int i = 0; i < dim; ++i) {
            double angle = pos / std::pow(10000.0, 2.0 * (i / 2) / dim);
            v[std::size_t(pos) * dim + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    return pe;
}

MhaWeights make_mha_weights(ParamStore& store, const std::string& prefix, int d_model, Rng& rng) {
    MhaWeights w;
    w.d_model = d_model;
    w.wq = make_linear_weight(store, prefix + "/wq", d_model, d_model, rng);
    w.bq = make_bias(store, prefix + "/bq", d_model);
    w.wk = make_linear_weight(store, prefix + "/wk", d_model, d_model, rng);
    w.bk = make_bias(store, prefix + "/bk", d_model);
    w.wv = make_linear_weight(store, prefix + "/wv", d_model, d_model, rng);
    w.bv = make_bias(store, prefix + "/bv", d_model);
    w.wo = make_linear_weight(store, prefix + "/wo", d_model, d_model, rng);
    w.bo = make_bias(store, prefix + "/bo", d_model);
    return w;
}

Tensor multi_head_attention(const Tensor& x, const MhaWeights& w, int heads, int valid_from) {
    int d = w.d_model;
    if (x.cols() != d)
        throw ShapeMismatch("multi_head_attention", std::to_string(x.cols()) + " cols",
                            std::to_string(d));
    if (heads <= 0 || d % heads != 0) throw IndivisibleHeads(d, heads);
    int dh = d / heads;
    double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor q = linear(x, w.wq, w.bq);
    Tensor k = linear(x, w.wk, w.bk);
    Tensor v = linear(x, w.wv, w.bv);

    std::vector<Tensor> ctx;
    ctx.reserve(heads);
    for (int h = 0; h < heads; ++h) {
        Tensor qh = heads == 1 ? q : slice_cols(q, h * dh, (h + 1) * dh);
        Tensor kh = heads == 1 ? k : slice_cols(k, h * dh, (h + 1) * dh);
        Tensor vh = heads == 1 ? v : slice_cols(v, h * dh, (h + 1) * dh);
        Tensor scores = scale(matmul(qh, transpose(kh)), inv_scale);
        Tensor att = softmax_rows_masked(scores, valid_from);
        ctx.push_back(matmul(att, vh));
    }
    Tensor merged = heads == 1 ? ctx[0] : concat_cols(ctx);
    return linear(merged, w.wo, w.bo);
}

LayerNormWeights make_layer_norm(ParamStore& store, const std::string& prefix, int dim) {
    LayerNormWeights w;
    w.gamma = store.create(prefix + "/gamma", 1, dim);
    std::fill(w.gamma.values().begin(), w.gamma.values().end(), 1.0);
    w.beta = store.create(prefix + "/beta", 1, dim);
    return w;
}

Tensor layer_norm(const Tensor& x, const LayerNormWeights& w, double eps) {
    Tensor mu = row_mean(x);
    Tensor xc = sub_colwise(x, mu);
    Tensor var = row_mean(mul(xc, xc));
    Tensor inv = reciprocal(sqrt_op(add_const(var, eps)));
    Tensor xn = mul_colwise(xc, inv);
    return add_rowwise(mul_rowwise(xn, w.gamma), w.beta);
}

BatchNormLayer make_batch_norm(ParamStore& params, ParamStore& buffers, const std::string& prefix, int dim) {
    BatchNormLayer bn;
    bn.gamma = params.create(prefix + "/gamma", 1, dim);
    std::fill(bn.gamma.values().begin(), bn.gamma.values().end(), 1.0);
    bn.beta = params.create(prefix + "/beta", 1, dim);
    bn.running_mean = buffers.create(prefix + "/running_mean", 1, dim, /*requires_grad=*/false);
    bn.running_var = buffers.create(prefix + "/running_var", 1, dim, /*requires_grad=*/false);
    std::fill(bn.running_var.values().begin(), bn.running_var.values().end(), 1.0);
    return bn;
}

Tensor batch_norm(const Tensor& x, BatchNormLayer& bn, bool training) {
    if (training) {
        Tensor mu = col_mean(x);
        Tensor xc = sub_rowwise(x, mu);
        Tensor var = col_mean(mul(xc, xc));
        // running stats update is outside the graph
        auto& rm = bn.running_mean.values();
        auto& rv = bn.running_var.values();
        for (int j = 0; j < x.cols(); ++j) {
            rm[j] = bn.momentum * rm[j] + (1.0 - bn.momentum) * mu.values()[j];
            rv[j] = bn.momentum * rv[j] + (1.0 - bn.momentum) * var.values()[j];
        }
        Tensor xn = mul_rowwise(xc, reciprocal(sqrt_op(add_const(var, bn.eps))));
        return add_rowwise(mul_rowwise(xn, bn.gamma), bn.beta);
    }
    int d = x.cols();
    std::vector<double> inv(d);
    for (int j = 0; j < d; ++j)
        inv[j] = 1.0 / std::sqrt(bn.running_var.values()[j] + bn.eps);
    Tensor mean_c = Tensor::from(1, d, bn.running_mean.values());
    Tensor inv_c = Tensor::from(1, d, std::move(inv));
    Tensor xn = mul_rowwise(sub_rowwise(x, mean_c), inv_c);
    return add_rowwise(mul_rowwise(xn, bn.gamma), bn.beta);
}

LstmWeights make_lstm_weights(ParamStore& store, const std::string& prefix, int d_in, int hidden, Rng& rng) {
    LstmWeights w;
    w.hidden = hidden;
    w.w = make_linear_weight(store, prefix + "/w", d_in, 4 * hidden, rng);
    w.u = make_linear_weight(store, prefix + "/u", hidden, 4 * hidden, rng);
    w.b = make_bias(store, prefix + "/b", 4 * hidden);
    return w;
}

LstmResult lstm_run(const std::vector<Tensor>& steps, const LstmWeights& w) {
    if (steps.empty()) throw ShapeMismatch("lstm_run", "0 steps", ">=1");
    int b = steps[0].rows();
    int h = w.hidden;
    Tensor hs = Tensor::zeros(b, h);
    Tensor cs = Tensor::zeros(b, h);
    LstmResult out;
    out.states.reserve(steps.size());
    for (const Tensor& x_t : steps) {
        Tensor z = add_rowwise(add(matmul(x_t, w.w), matmul(hs, w.u)), w.b);
        Tensor gi = sigmoid(slice_cols(z, 0, h));
        Tensor gf = sigmoid(slice_cols(z, h, 2 * h));
        Tensor gc = tanh_op(slice_cols(z, 2 * h, 3 * h));
        Tensor go = sigmoid(slice_cols(z, 3 * h, 4 * h));
        cs = add(mul(gf, cs), mul(gi, gc));
        hs = mul(go, tanh_op(cs));
        out.states.push_back(hs);
    }
    out.last = hs;
    return out;
}

LstmLayerOut lstm_layer(const Tensor& x, const LstmWeights& w) {
    std::vector<Tensor> steps;
    steps.reserve(x.rows());
    for (int t = 0; t < x.rows(); ++t) steps.push_back(slice_rows(x, t, t + 1));
    LstmResult r = lstm_run(steps, w);
    return {concat_rows(r.states), r.last};
}

}  // namespace ppm::nn
