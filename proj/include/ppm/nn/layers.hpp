#pragma once

#include <string>
#include <vector>

#include "ppm/nn/param_store.hpp"
#include "ppm/nn/rng.hpp"
#include "ppm/nn/tensor.hpp"

namespace ppm::nn {

// Initialization: Xavier-uniform for weight matrices, N(0, 1/sqrt(d)) for
// embedding tables, zeros for biases. All draws go through the given Rng in
// parameter creation order, so a seed pins the full initialization.
void init_xavier_uniform(Tensor& w, Rng& rng);
void init_embedding(Tensor& table, Rng& rng);

Tensor make_linear_weight(ParamStore& store, const std::string& name, int in, int out, Rng& rng);
Tensor make_bias(ParamStore& store, const std::string& name, int out);
Tensor make_embedding(ParamStore& store, const std::string& name, int vocab, int dim, Rng& rng);

// Fixed sinusoidal position encoding, shape seq x dim, no parameters.
Tensor make_positional_encoding(int seq, int dim);

struct MhaWeights {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    int d_model = 0;
};
MhaWeights make_mha_weights(ParamStore& store, const std::string& prefix, int d_model, Rng& rng);

// Self-attention over a seq x d_model input. Rows/keys below valid_from are
// treated as padding: they get exactly zero attention weight everywhere.
Tensor multi_head_attention(const Tensor& x, const MhaWeights& w, int heads, int valid_from = 0);

struct LayerNormWeights {
    Tensor gamma, beta;
};
LayerNormWeights make_layer_norm(ParamStore& store, const std::string& prefix, int dim);
Tensor layer_norm(const Tensor& x, const LayerNormWeights& w, double eps = 1e-9);

struct BatchNormLayer {
    Tensor gamma, beta;              // trainable
    Tensor running_mean, running_var;  // buffers
    double momentum = 0.9;
    double eps = 1e-5;
};
BatchNormLayer make_batch_norm(ParamStore& params, ParamStore& buffers, const std::string& prefix, int dim);
// Training mode normalizes by batch statistics (population variance) and
// updates running stats as r = momentum*r + (1-momentum)*batch; evaluation
// mode uses the running stats as constants.
Tensor batch_norm(const Tensor& x, BatchNormLayer& bn, bool training);

struct LstmWeights {
    Tensor w;  // d_in x 4h, gate order (input, forget, cell, output)
    Tensor u;  // h x 4h
    Tensor b;  // 1 x 4h
    int hidden = 0;
};
LstmWeights make_lstm_weights(ParamStore& store, const std::string& prefix, int d_in, int hidden, Rng& rng);

// One recurrence over per-step inputs (each b x d_in); rows are independent
// lanes. Initial hidden and cell states are zero.
struct LstmResult {
    std::vector<Tensor> states;  // per-step hidden, each b x h
    Tensor last;                 // b x h
};
LstmResult lstm_run(const std::vector<Tensor>& steps, const LstmWeights& w);

// Sequence-matrix convenience: x is seq x d_in, returns (seq x h, 1 x h).
struct LstmLayerOut {
    Tensor sequence;
    Tensor last;
};
LstmLayerOut lstm_layer(const Tensor& x, const LstmWeights& w);

}  // namespace ppm::nn
