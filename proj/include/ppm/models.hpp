#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppm/features.hpp"
#include "ppm/nn/layers.hpp"
#include "ppm/nn/param_store.hpp"

namespace ppm::models {

enum class ModelType { mtlformer, mtlformer_light, transformer_simple, lstm, lstm_light };

const char* to_string(ModelType type);
ModelType model_type_from_string(const std::string& name);
bool is_transformer_family(ModelType type);
std::vector<ModelType> all_model_types();

struct ModelConfig {
    ModelType model_type = ModelType::mtlformer;
    // transformer family
    int embed_dim = 16;
    int heads = 1;
    int ff_dim = 32;
    int encoder_layers = 1;
    double dropout = 0.1;
    std::vector<int> head_mlp_dims = {128, 64};  // full mtlformer heads
    // lstm family (embed_dim is reused for its embeddings, dropout for the
    // backbone dropout)
    int hidden_size = 50;
    int ngram = 5;

    void validate() const;  // throws ConfigViolation
    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

struct ModelOutput {
    std::vector<double> activity_logits;
    std::vector<double> role_logits;
    std::array<double, 3> time_preds{};  // (waiting, duration, remaining), normalized
};

// Stacked per-sample rows, still attached to the graph for training.
struct BatchTensors {
    nn::Tensor activity_logits;  // b x A
    nn::Tensor role_logits;      // b x R
    nn::Tensor time_preds;       // b x 3
};

class Model {
public:
    // max_len sizes the Transformer input; the LSTM family takes its width
    // from config.ngram instead.
    static Model build(const ModelConfig& config, int activity_vocab_size, int role_vocab_size,
                       int max_len, std::uint64_t seed);

    BatchTensors forward(std::span<const features::Sample> batch, bool training);
    std::vector<ModelOutput> predict(std::span<const features::Sample> batch);

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }
    nn::ParamStore& buffers() { return buffers_; }
    const nn::ParamStore& buffers() const { return buffers_; }

    const ModelConfig& config() const { return cfg_; }
    int activity_vocab_size() const { return act_vocab_; }
    int role_vocab_size() const { return role_vocab_; }
    int input_width() const { return width_; }
    std::uint64_t seed() const { return seed_; }
    nn::Rng& rng() { return rng_; }

    // per-layer parameter table (name, shape, count) plus a total line
    std::string describe() const;

    // copies values for every parameter/buffer name present in this model
    void load_state(const nn::ParamStore& params, const nn::ParamStore& buffers);

private:
    Model() = default;

    struct EncoderLayer {
        nn::MhaWeights mha;
        nn::LayerNormWeights ln1, ln2;
        nn::Tensor ff_w1, ff_b1, ff_w2, ff_b2;
    };
    struct Encoder {
        std::vector<EncoderLayer> layers;
    };
    struct MlpHead {
        std::vector<std::pair<nn::Tensor, nn::Tensor>> hidden;  // (w, b)
        nn::Tensor out_w, out_b;
    };
    struct LstmHead {
        nn::LstmWeights lstm;          // full model only
        nn::Tensor mlp_w, mlp_b;       // full model only
        nn::Tensor out_w, out_b;
        bool deep = false;
    };

    Encoder make_encoder(const std::string& prefix, int d_model, nn::Rng& init_rng);
    nn::Tensor run_encoder(const nn::Tensor& x, Encoder& enc, bool training, int valid_from);
    MlpHead make_mlp_head(const std::string& prefix, int in_dim, int out_dim, bool deep, nn::Rng& init_rng);
    nn::Tensor run_mlp_head(const nn::Tensor& x, MlpHead& head);
    LstmHead make_lstm_head(const std::string& prefix, int out_dim, bool deep, nn::Rng& init_rng);
    nn::Tensor run_lstm_head(const nn::Tensor& x, LstmHead& head);

    nn::Tensor stream_pool(const nn::Tensor& input, Encoder& enc, bool training, int valid_from);
    nn::Tensor transformer_features(const features::Sample& s, bool training);
    BatchTensors forward_transformer(std::span<const features::Sample> batch, bool training);
    BatchTensors forward_lstm(std::span<const features::Sample> batch, bool training);

    ModelConfig cfg_;
    int act_vocab_ = 0;
    int role_vocab_ = 0;
    int width_ = 0;
    std::uint64_t seed_ = 0;
    nn::ParamStore params_;
    nn::ParamStore buffers_;
    nn::Rng rng_{0};

    // five-stream backbone (mtlformer, mtlformer_light)
    nn::Tensor act1_emb_, act2_emb_, role1_emb_, role2_emb_;
    nn::Tensor temp_w_, temp_b_;
    Encoder enc_act1_, enc_act2_, enc_role1_, enc_role2_, enc_temp_;
    nn::Tensor fusion_w_, fusion_b_;
    // single-encoder backbone (transformer_simple)
    nn::Tensor s_act_emb_, s_role_emb_;
    Encoder enc_single_;
    nn::Tensor s_temp_w_, s_temp_b_, shallow_w_, shallow_b_;
    // transformer heads
    MlpHead head_act_, head_role_, head_time_;
    // lstm family
    nn::Tensor l_act_emb_, l_role_emb_;
    nn::LstmWeights shared_lstm_;
    nn::BatchNormLayer bn_;
    LstmHead lhead_act_, lhead_role_, lhead_time_;
    // fixed position encodings
    nn::Tensor pe_;
};

// Model checkpoints via the nn checkpoint container. extra_meta is merged
// into the header's meta object (vocab labels, normalizer, run info).
void save_model_checkpoint(const std::string& path, const Model& model,
                           const nlohmann::json& extra_meta = {});
Model load_model_checkpoint(const std::string& path, nlohmann::json* meta_out = nullptr);

}  // namespace ppm::models
