#include "ppm/models.hpp"

#include <algorithm>
#include <sstream>

#include "ppm/nn/checkpoint.hpp"

namespace ppm::models {

using nn::Tensor;

const char* to_string(ModelType type) {
    switch (type) {
        case ModelType::mtlformer: return "mtlformer";
        case ModelType::mtlformer_light: return "mtlformer_light";
        case ModelType::transformer_simple: return "transformer_simple";
        case ModelType::lstm: return "lstm";
        case ModelType::lstm_light: return "lstm_light";
    }
    throw InternalError("unknown model type");
}

ModelType model_type_from_string(const std::string& name) {
    for (ModelType t : all_model_types())
        if (name == to_string(t)) return t;
    throw ConfigViolation("unknown model type: " + name);
}

bool is_transformer_family(ModelType type) {
    return type == ModelType::mtlformer || type == ModelType::mtlformer_light ||
           type == ModelType::transformer_simple;
}

std::vector<ModelType> all_model_types() {
    return {ModelType::mtlformer, ModelType::mtlformer_light, ModelType::transformer_simple,
            ModelType::lstm, ModelType::lstm_light};
}

namespace {
bool one_of(int v, std::initializer_list<int> allowed) {
    return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
}
}  // namespace

void ModelConfig::validate() const {
    if (is_transformer_family(model_type)) {
        if (!one_of(embed_dim, {16, 32}))
            throw ConfigViolation("embed_dim must be 16 or 32, got " + std::to_string(embed_dim));
        if (!one_of(heads, {1, 2, 4}))
            throw ConfigViolation("heads must be 1, 2 or 4, got " + std::to_string(heads));
        if (embed_dim % heads != 0)
            throw ConfigViolation("embed_dim " + std::to_string(embed_dim) +
                                  " not divisible by heads " + std::to_string(heads));
        if (!one_of(ff_dim, {32, 64, 128}))
            throw ConfigViolation("ff_dim must be 32, 64 or 128, got " + std::to_string(ff_dim));
        if (dropout != 0.1)
            throw ConfigViolation("dropout is fixed at 0.1 for the transformer family");
        if (!one_of(encoder_layers, {1, 2, 4}))
            throw ConfigViolation("encoder_layers must be 1, 2 or 4, got " +
                                  std::to_string(encoder_layers));
        if (model_type == ModelType::mtlformer && head_mlp_dims.empty())
            throw ConfigViolation("mtlformer requires non-empty head_mlp_dims");
    } else {
        if (!one_of(hidden_size, {10, 25, 50}))
            throw ConfigViolation("hidden_size must be 10, 25 or 50, got " +
                                  std::to_string(hidden_size));
        if (!one_of(ngram, {5, 10, 15}))
            throw ConfigViolation("ngram must be 5, 10 or 15, got " + std::to_string(ngram));
    }
}

nlohmann::json ModelConfig::to_json() const {
    return {{"model_type", to_string(model_type)}, {"embed_dim", embed_dim},
            {"heads", heads},                      {"ff_dim", ff_dim},
            {"encoder_layers", encoder_layers},    {"dropout", dropout},
            {"head_mlp_dims", head_mlp_dims},      {"hidden_size", hidden_size},
            {"ngram", ngram}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.model_type = model_type_from_string(j.at("model_type").get<std::string>());
    c.embed_dim = j.at("embed_dim").get<int>();
    c.heads = j.at("heads").get<int>();
    c.ff_dim = j.at("ff_dim").get<int>();
    c.encoder_layers = j.at("encoder_layers").get<int>();
    c.dropout = j.at("dropout").get<double>();
    c.head_mlp_dims = j.at("head_mlp_dims").get<std::vector<int>>();
    c.hidden_size = j.at("hidden_size").get<int>();
    c.ngram = j.at("ngram").get<int>();
    return c;
}

// ---- construction ---------------------------------------------------------

Model::Encoder Model::make_encoder(const std::string& prefix, int d_model, nn::Rng& init_rng) {
    Encoder enc;
    enc.layers.resize(cfg_.encoder_layers);
    for (int l = 0; l < cfg_.encoder_layers; ++l) {
        std::string lp = prefix + "/enc" + std::to_string(l);
        EncoderLayer& layer = enc.layers[l];
        layer.mha = nn::make_mha_weights(params_, lp + "/mha", d_model, init_rng);
        layer.ln1 = nn::make_layer_norm(params_, lp + "/ln1", d_model);
        layer.ff_w1 = nn::make_linear_weight(params_, lp + "/ff/w1", d_model, cfg_.ff_dim, init_rng);
        layer.ff_b1 = nn::make_bias(params_, lp + "/ff/b1", cfg_.ff_dim);
        layer.ff_w2 = nn::make_linear_weight(params_, lp + "/ff/w2", cfg_.ff_dim, d_model, init_rng);
        layer.ff_b2 = nn::make_bias(params_, lp + "/ff/b2", d_model);
        layer.ln2 = nn::make_layer_norm(params_, lp + "/ln2", d_model);
    }
    return enc;
}

Tensor Model::run_encoder(const Tensor& x_in, Encoder& enc, bool training, int valid_from) {
    Tensor x = x_in;
    for (EncoderLayer& layer : enc.layers) {
        Tensor a = nn::multi_head_attention(x, layer.mha, cfg_.heads, valid_from);
        x = nn::layer_norm(nn::add(x, nn::dropout(a, cfg_.dropout, training, rng_)), layer.ln1);
        Tensor f =
            nn::linear(nn::relu(nn::linear(x, layer.ff_w1, layer.ff_b1)), layer.ff_w2, layer.ff_b2);
        x = nn::layer_norm(nn::add(x, nn::dropout(f, cfg_.dropout, training, rng_)), layer.ln2);
    }
    return x;
}

Model::MlpHead Model::make_mlp_head(const std::string& prefix, int in_dim, int out_dim, bool deep,
                                    nn::Rng& init_rng) {
    MlpHead head;
    int cur = in_dim;
    if (deep) {
        for (std::size_t i = 0; i < cfg_.head_mlp_dims.size(); ++i) {
            int dim = cfg_.head_mlp_dims[i];
            std::string mp = prefix + "/mlp" + std::to_string(i);
            head.hidden.emplace_back(nn::make_linear_weight(params_, mp + "/w", cur, dim, init_rng),
                                     nn::make_bias(params_, mp + "/b", dim));
            cur = dim;
        }
    }
    head.out_w = nn::make_linear_weight(params_, prefix + "/out/w", cur, out_dim, init_rng);
    head.out_b = nn::make_bias(params_, prefix + "/out/b", out_dim);
    return head;
}

Tensor Model::run_mlp_head(const Tensor& x, MlpHead& head) {
    Tensor h = x;
    for (auto& [w, b] : head.hidden) h = nn::relu(nn::linear(h, w, b));
    return nn::linear(h, head.out_w, head.out_b);
}

Model::LstmHead Model::make_lstm_head(const std::string& prefix, int out_dim, bool deep,
                                      nn::Rng& init_rng) {
    LstmHead head;
    head.deep = deep;
    int h = cfg_.hidden_size;
    if (deep) {
        head.lstm = nn::make_lstm_weights(params_, prefix + "/lstm", h, h, init_rng);
        head.mlp_w = nn::make_linear_weight(params_, prefix + "/mlp/w", h, h, init_rng);
        head.mlp_b = nn::make_bias(params_, prefix + "/mlp/b", h);
    }
    head.out_w = nn::make_linear_weight(params_, prefix + "/out/w", h, out_dim, init_rng);
    head.out_b = nn::make_bias(params_, prefix + "/out/b", out_dim);
    return head;
}

Tensor Model::run_lstm_head(const Tensor& x, LstmHead& head) {
    if (!head.deep) return nn::linear(x, head.out_w, head.out_b);
    // the backbone's final state enters the head LSTM as a one-step sequence
    Tensor r = nn::lstm_run({x}, head.lstm).last;
    Tensor m = nn::tanh_op(nn::linear(r, head.mlp_w, head.mlp_b));
    return nn::linear(m, head.out_w, head.out_b);
}

Model Model::build(const ModelConfig& config, int activity_vocab_size, int role_vocab_size,
                   int max_len, std::uint64_t seed) {
    config.validate();
    if (activity_vocab_size < 1 || role_vocab_size < 1)
        throw ConfigViolation("vocabulary sizes must be positive");

    Model m;
    m.cfg_ = config;
    m.act_vocab_ = activity_vocab_size;
    m.role_vocab_ = role_vocab_size;
    m.seed_ = seed;
    m.rng_ = nn::Rng(nn::derive_seed(seed, 0xD0));  // dropout stream
    nn::Rng init(seed);

    int e = config.embed_dim;
    int a = activity_vocab_size, r = role_vocab_size;

    switch (config.model_type) {
        case ModelType::mtlformer:
        case ModelType::mtlformer_light: {
            if (max_len < 1) throw ConfigViolation("max_len must be >= 1");
            m.width_ = max_len;
            m.pe_ = nn::make_positional_encoding(max_len, e);
            m.act1_emb_ = nn::make_embedding(m.params_, "backbone/act1/embed", a, e, init);
            m.enc_act1_ = m.make_encoder("backbone/act1", e, init);
            m.act2_emb_ = nn::make_embedding(m.params_, "backbone/act2/embed", a, e, init);
            m.enc_act2_ = m.make_encoder("backbone/act2", e, init);
            m.role1_emb_ = nn::make_embedding(m.params_, "backbone/role1/embed", r, e, init);
            m.enc_role1_ = m.make_encoder("backbone/role1", e, init);
            m.role2_emb_ = nn::make_embedding(m.params_, "backbone/role2/embed", r, e, init);
            m.enc_role2_ = m.make_encoder("backbone/role2", e, init);
            m.temp_w_ = nn::make_linear_weight(m.params_, "backbone/temporal/proj/w", 3, e, init);
            m.temp_b_ = nn::make_bias(m.params_, "backbone/temporal/proj/b", e);
            m.enc_temp_ = m.make_encoder("backbone/temporal", e, init);
            m.fusion_w_ = nn::make_linear_weight(m.params_, "backbone/fusion/w", 3 * e, e, init);
            m.fusion_b_ = nn::make_bias(m.params_, "backbone/fusion/b", e);
            bool deep = config.model_type == ModelType::mtlformer;
            m.head_act_ = m.make_mlp_head("heads/activity", 3 * e, a, deep, init);
            m.head_role_ = m.make_mlp_head("heads/role", 3 * e, r, deep, init);
            m.head_time_ = m.make_mlp_head("heads/time", 3 * e, 3, deep, init);
            break;
        }
        case ModelType::transformer_simple: {
            if (max_len < 1) throw ConfigViolation("max_len must be >= 1");
            m.width_ = max_len;
            m.pe_ = nn::make_positional_encoding(max_len, 2 * e);
            m.s_act_emb_ = nn::make_embedding(m.params_, "backbone/act/embed", a, e, init);
            m.s_role_emb_ = nn::make_embedding(m.params_, "backbone/role/embed", r, e, init);
            m.enc_single_ = m.make_encoder("backbone", 2 * e, init);
            m.s_temp_w_ = nn::make_linear_weight(m.params_, "backbone/temporal/proj/w", 3, e, init);
            m.s_temp_b_ = nn::make_bias(m.params_, "backbone/temporal/proj/b", e);
            m.shallow_w_ = nn::make_linear_weight(m.params_, "backbone/shallow/w", 3 * e, 3 * e, init);
            m.shallow_b_ = nn::make_bias(m.params_, "backbone/shallow/b", 3 * e);
            m.head_act_ = m.make_mlp_head("heads/activity", 3 * e, a, false, init);
            m.head_role_ = m.make_mlp_head("heads/role", 3 * e, r, false, init);
            m.head_time_ = m.make_mlp_head("heads/time", 3 * e, 3, false, init);
            break;
        }
        case ModelType::lstm:
        case ModelType::lstm_light: {
            m.width_ = config.ngram;
            int h = config.hidden_size;
            m.l_act_emb_ = nn::make_embedding(m.params_, "backbone/act/embed", a, e, init);
            m.l_role_emb_ = nn::make_embedding(m.params_, "backbone/role/embed", r, e, init);
            m.shared_lstm_ = nn::make_lstm_weights(m.params_, "backbone/shared_lstm", 2 * e + 3, h, init);
            m.bn_ = nn::make_batch_norm(m.params_, m.buffers_, "backbone/bn", h);
            bool deep = config.model_type == ModelType::lstm;
            m.lhead_act_ = m.make_lstm_head("heads/activity", a, deep, init);
            m.lhead_role_ = m.make_lstm_head("heads/role", r, deep, init);
            m.lhead_time_ = m.make_lstm_head("heads/time", 3, deep, init);
            break;
        }
    }
    return m;
}

// ---- forward --------------------------------------------------------------

namespace {

Tensor time_matrix(const features::Sample& s) {
    int w = s.width();
    std::vector<double> v(std::size_t(w) * 3);
    for (int p = 0; p < w; ++p)
        for (int c = 0; c < 3; ++c) v[std::size_t(p) * 3 + c] = s.time_prefix[p][c];
    return Tensor::from(w, 3, std::move(v));
}

}  // namespace

Tensor Model::stream_pool(const Tensor& input, Encoder& enc, bool training, int valid_from) {
    return nn::mean_pool_over_sequence(run_encoder(input, enc, training, valid_from), valid_from);
}

Tensor Model::transformer_features(const features::Sample& s, bool training) {
    int vf = width_ - s.valid_len;
    Tensor time_in = time_matrix(s);

    if (cfg_.model_type == ModelType::transformer_simple) {
        Tensor x = nn::add(nn::concat_cols({nn::embedding_lookup(s_act_emb_, s.activity_prefix),
                                            nn::embedding_lookup(s_role_emb_, s.role_prefix)}),
                           pe_);
        Tensor pooled = stream_pool(x, enc_single_, training, vf);
        Tensor t_last = nn::slice_rows(time_in, width_ - 1, width_);
        Tensor t_proj = nn::linear(t_last, s_temp_w_, s_temp_b_);
        return nn::relu(nn::linear(nn::concat_cols({pooled, t_proj}), shallow_w_, shallow_b_));
    }

    Tensor a1 = stream_pool(nn::add(nn::embedding_lookup(act1_emb_, s.activity_prefix), pe_),
                            enc_act1_, training, vf);
    Tensor a2 = stream_pool(nn::add(nn::embedding_lookup(act2_emb_, s.activity_prefix), pe_),
                            enc_act2_, training, vf);
    Tensor r1 = stream_pool(nn::add(nn::embedding_lookup(role1_emb_, s.role_prefix), pe_),
                            enc_role1_, training, vf);
    Tensor r2 = stream_pool(nn::add(nn::embedding_lookup(role2_emb_, s.role_prefix), pe_),
                            enc_role2_, training, vf);
    Tensor tp = stream_pool(nn::add(nn::linear(time_in, temp_w_, temp_b_), pe_), enc_temp_,
                            training, vf);
    Tensor fused = nn::linear(nn::concat_cols({a1, r1, tp}), fusion_w_, fusion_b_);
    return nn::concat_cols({fused, a2, r2});
}

BatchTensors Model::forward_transformer(std::span<const features::Sample> batch, bool training) {
    std::vector<Tensor> feats;
    feats.reserve(batch.size());
    for (const auto& s : batch) feats.push_back(transformer_features(s, training));
    Tensor f = feats.size() == 1 ? feats[0] : nn::concat_rows(feats);
    return {run_mlp_head(f, head_act_), run_mlp_head(f, head_role_), run_mlp_head(f, head_time_)};
}

BatchTensors Model::forward_lstm(std::span<const features::Sample> batch, bool training) {
    int b = static_cast<int>(batch.size());
    int g = width_;
    std::vector<Tensor> steps;
    steps.reserve(g);
    std::vector<int> act_idx(b), role_idx(b);
    for (int t = 0; t < g; ++t) {
        std::vector<double> tv(std::size_t(b) * 3);
        for (int i = 0; i < b; ++i) {
            act_idx[i] = batch[i].activity_prefix[t];
            role_idx[i] = batch[i].role_prefix[t];
            for (int c = 0; c < 3; ++c) tv[std::size_t(i) * 3 + c] = batch[i].time_prefix[t][c];
        }
        steps.push_back(nn::concat_cols({nn::embedding_lookup(l_act_emb_, act_idx),
                                         nn::embedding_lookup(l_role_emb_, role_idx),
                                         Tensor::from(b, 3, std::move(tv))}));
    }
    Tensor shared = nn::lstm_run(steps, shared_lstm_).last;
    Tensor normed = nn::batch_norm(shared, bn_, training);
    Tensor dp = nn::dropout(normed, cfg_.dropout, training, rng_);
    return {run_lstm_head(dp, lhead_act_), run_lstm_head(dp, lhead_role_),
            run_lstm_head(dp, lhead_time_)};
}

BatchTensors Model::forward(std::span<const features::Sample> batch, bool training) {
    if (batch.empty()) throw ShapeMismatch("forward", "empty batch", ">=1 sample");
    for (const auto& s : batch)
        if (s.width() != width_)
            throw ShapeMismatch("forward", "sample width " + std::to_string(s.width()),
                                std::to_string(width_));
    return is_transformer_family(cfg_.model_type) ? forward_transformer(batch, training)
                                                  : forward_lstm(batch, training);
}

std::vector<ModelOutput> Model::predict(std::span<const features::Sample> batch) {
    constexpr std::size_t kChunk = 256;
    std::vector<ModelOutput> outs;
    outs.reserve(batch.size());
    for (std::size_t from = 0; from < batch.size(); from += kChunk) {
        std::size_t n = std::min(kChunk, batch.size() - from);
        BatchTensors bt = forward(batch.subspan(from, n), /*training=*/false);
        for (std::size_t i = 0; i < n; ++i) {
            ModelOutput o;
            o.activity_logits.assign(bt.activity_logits.values().begin() + i * act_vocab_,
                                     bt.activity_logits.values().begin() + (i + 1) * act_vocab_);
            o.role_logits.assign(bt.role_logits.values().begin() + i * role_vocab_,
                                 bt.role_logits.values().begin() + (i + 1) * role_vocab_);
            for (int c = 0; c < 3; ++c) o.time_preds[c] = bt.time_preds.values()[i * 3 + c];
            outs.push_back(std::move(o));
        }
    }
    return outs;
}

std::string Model::describe() const {
    std::ostringstream os;
    auto table = [&os](const nn::ParamStore& store, const char* title) {
        os << title << "\n";
        for (const auto& [name, t] : store.entries())
            os << "  " << name << "  " << t.rows() << "x" << t.cols() << "  " << t.size() << "\n";
    };
    table(params_, "parameters");
    if (buffers_.size() > 0) table(buffers_, "buffers");
    os << "total trainable: " << params_.count_params() << "\n";
    return os.str();
}

void Model::load_state(const nn::ParamStore& params, const nn::ParamStore& buffers) {
    for (auto& [name, t] : params_.entries()) {
        if (!params.contains(name)) throw DataError("checkpoint is missing parameter " + name);
        const auto& src = params.at(name).values();
        if (src.size() != t.values().size())
            throw DataError("checkpoint parameter " + name + " has wrong size");
        t.values() = src;
    }
    for (const auto& [name, src] : params.entries()) {
        if (!params_.contains(name)) {
            Tensor clone = Tensor::from(src.rows(), src.cols(), src.values(), /*requires_grad=*/true);
            params_.put(name, std::move(clone));
        }
    }
    for (auto& [name, t] : buffers_.entries()) {
        if (!buffers.contains(name)) throw DataError("checkpoint is missing buffer " + name);
        const auto& src = buffers.at(name).values();
        if (src.size() != t.values().size())
            throw DataError("checkpoint buffer " + name + " has wrong size");
        t.values() = src;
    }
}

void save_model_checkpoint(const std::string& path, const Model& model,
                           const nlohmann::json& extra_meta) {
    nlohmann::json meta{{"model_type", to_string(model.config().model_type)},
                        {"config", model.config().to_json()},
                        {"activity_vocab_size", model.activity_vocab_size()},
                        {"role_vocab_size", model.role_vocab_size()},
                        {"input_width", model.input_width()},
                        {"seed", model.seed()}};
    if (extra_meta.is_object())
        for (const auto& [k, v] : extra_meta.items()) meta[k] = v;
    nn::save_checkpoint(path, meta, model.params(), model.buffers());
}

Model load_model_checkpoint(const std::string& path, nlohmann::json* meta_out) {
    nn::Checkpoint ck = nn::load_checkpoint(path);
    ModelConfig cfg = ModelConfig::from_json(ck.meta.at("config"));
    Model model = Model::build(cfg, ck.meta.at("activity_vocab_size").get<int>(),
                               ck.meta.at("role_vocab_size").get<int>(),
                               ck.meta.at("input_width").get<int>(),
                               ck.meta.at("seed").get<std::uint64_t>());
    model.load_state(ck.params, ck.buffers);
    if (meta_out) *meta_out = ck.meta;
    return model;
}

}  // namespace ppm::models
