#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "ppm/models.hpp"
#include "ppm/nn/checkpoint.hpp"
#include "support/synthetic.hpp"

using namespace ppm::models;
using ppm::features::Sample;

namespace {

ModelConfig tiny_config(ModelType type) {
    ModelConfig c;
    c.model_type = type;
    c.embed_dim = 16;
    c.heads = 1;
    c.ff_dim = 32;
    c.encoder_layers = 1;
    c.hidden_size = 10;
    c.ngram = 5;
    return c;
}

std::vector<Sample> samples_for(ModelType type, int count, ppm::features::Normalizer* norm = nullptr) {
    bool ngram = !is_transformer_family(type);
    return testsupport::fixture_samples(count, ngram ? 5 : 7, ngram, norm);
}

int fixture_vocab_activity() { return 4 + 6; }  // reserved + six process activities
int fixture_vocab_role() { return 4 + 4; }

}  // namespace

TEST_CASE("build + forward: finite logits of the right lengths for every type") {
    for (ModelType type : all_model_types()) {
        Model m = Model::build(tiny_config(type), fixture_vocab_activity(), fixture_vocab_role(), 7, 1);
        auto batch = samples_for(type, 1);
        auto out = m.predict(batch);
        REQUIRE(out.size() == 1);
        CHECK(static_cast<int>(out[0].activity_logits.size()) == fixture_vocab_activity());
        CHECK(static_cast<int>(out[0].role_logits.size()) == fixture_vocab_role());
        for (double v : out[0].activity_logits) CHECK(std::isfinite(v));
        for (double v : out[0].role_logits) CHECK(std::isfinite(v));
        for (double v : out[0].time_preds) CHECK(std::isfinite(v));
    }
}

TEST_CASE("transformer_simple parameter count equals the hand-summed tally") {
    ModelConfig c = tiny_config(ModelType::transformer_simple);
    Model m = Model::build(c, 21, 27, 10, 7);

    // independent per-layer tally, embed=16, heads=1, ff=32, layers=1
    long long act_embed = 21 * 16;
    long long role_embed = 27 * 16;
    long long d_model = 32;  // activity and role embeddings concatenated
    long long mha = 4 * (d_model * d_model + d_model);
    long long ln = 2 * (2 * d_model);
    long long ff = (d_model * 32 + 32) + (32 * d_model + d_model);
    long long encoder = mha + ln + ff;
    long long temporal_proj = 3 * 16 + 16;
    long long shallow = 48 * 48 + 48;
    long long heads = (48 * 21 + 21) + (48 * 27 + 27) + (48 * 3 + 3);
    long long expected = act_embed + role_embed + encoder + temporal_proj + shallow + heads;

    CHECK(expected == 12147);  // frozen once, from the spreadsheet-style sum
    CHECK(m.params().count_params() == expected);
}

TEST_CASE("parameter-count monotonicity: light < full for every grid configuration") {
    SUBCASE("transformer family") {
        for (int embed : {16, 32})
            for (int heads : {1, 2, 4})
                for (int ff : {32, 64, 128})
                    for (int layers : {1, 2, 4}) {
                        ModelConfig c;
                        c.embed_dim = embed;
                        c.heads = heads;
                        c.ff_dim = ff;
                        c.encoder_layers = layers;
                        c.model_type = ModelType::mtlformer;
                        Model full = Model::build(c, 25, 31, 8, 3);
                        c.model_type = ModelType::mtlformer_light;
                        Model light = Model::build(c, 25, 31, 8, 3);
                        CHECK(light.params().count_params() < full.params().count_params());
                    }
    }
    SUBCASE("lstm family") {
        for (int hidden : {10, 25, 50})
            for (int g : {5, 10, 15}) {
                ModelConfig c;
                c.hidden_size = hidden;
                c.ngram = g;
                c.model_type = ModelType::lstm;
                Model full = Model::build(c, 25, 31, 8, 3);
                c.model_type = ModelType::lstm_light;
                Model light = Model::build(c, 25, 31, 8, 3);
                CHECK(light.params().count_params() < full.params().count_params());
            }
    }
}

TEST_CASE("lstm and lstm_light share the backbone parameter names and sizes") {
    ModelConfig c = tiny_config(ModelType::lstm);
    c.hidden_size = 50;
    Model full = Model::build(c, 25, 31, 8, 3);
    c.model_type = ModelType::lstm_light;
    Model light = Model::build(c, 25, 31, 8, 3);

    auto backbone = [](const Model& m) {
        std::map<std::string, int> out;
        for (const auto& [name, t] : m.params().entries())
            if (name.rfind("backbone/", 0) == 0) out[name] = t.size();
        return out;
    };
    CHECK(backbone(full) == backbone(light));

    // the variants differ in head parameters only
    auto heads = [](const Model& m) {
        std::set<std::string> out;
        for (const auto& [name, t] : m.params().entries())
            if (name.rfind("heads/", 0) == 0) out.insert(name);
        return out;
    };
    CHECK(heads(full) != heads(light));
}

TEST_CASE("mask correctness: padded positions cannot influence the output") {
    for (ModelType type :
         {ModelType::mtlformer, ModelType::mtlformer_light, ModelType::transformer_simple}) {
        Model m = Model::build(tiny_config(type), fixture_vocab_activity(), fixture_vocab_role(), 7, 11);
        auto batch = samples_for(type, 3);
        // pick a sample with padding
        Sample padded = batch[0];
        REQUIRE(padded.valid_len < padded.width());
        auto before = m.predict(std::vector<Sample>{padded});

        Sample corrupted = padded;
        int pad_region = corrupted.width() - corrupted.valid_len;
        for (int p = 0; p < pad_region; ++p) {
            corrupted.activity_prefix[p] = 5;
            corrupted.role_prefix[p] = 6;
            corrupted.time_prefix[p] = {3.0, -7.0, 11.0};
        }
        auto after = m.predict(std::vector<Sample>{corrupted});

        INFO("model ", to_string(type));
        REQUIRE(before[0].activity_logits == after[0].activity_logits);  // bit-exact
        REQUIRE(before[0].role_logits == after[0].role_logits);
        REQUIRE(before[0].time_preds == after[0].time_preds);
    }
}

TEST_CASE("evaluation mode is per-sample independent: permuting a batch permutes outputs") {
    for (ModelType type : all_model_types()) {
        Model m = Model::build(tiny_config(type), fixture_vocab_activity(), fixture_vocab_role(), 7, 23);
        auto batch = samples_for(type, 5);
        REQUIRE(batch.size() == 5);
        auto out = m.predict(batch);

        std::vector<Sample> reversed(batch.rbegin(), batch.rend());
        auto rev_out = m.predict(reversed);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto& a = out[i];
            const auto& b = rev_out[batch.size() - 1 - i];
            INFO("model ", to_string(type));
            REQUIRE(a.activity_logits == b.activity_logits);
            REQUIRE(a.role_logits == b.role_logits);
            REQUIRE(a.time_preds == b.time_preds);
        }
    }
}

TEST_CASE("two models built from the same seed produce identical outputs") {
    for (ModelType type : all_model_types()) {
        Model m1 = Model::build(tiny_config(type), fixture_vocab_activity(), fixture_vocab_role(), 7, 99);
        Model m2 = Model::build(tiny_config(type), fixture_vocab_activity(), fixture_vocab_role(), 7, 99);
        auto batch = samples_for(type, 4);
        auto o1 = m1.predict(batch);
        auto o2 = m2.predict(batch);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            REQUIRE(o1[i].activity_logits == o2[i].activity_logits);
            REQUIRE(o1[i].time_preds == o2[i].time_preds);
        }
    }
}

TEST_CASE("a combined loss reaches every backbone parameter with nonzero gradient") {
    for (ModelType type : all_model_types()) {
        Model m = Model::build(tiny_config(type), fixture_vocab_activity(), fixture_vocab_role(), 7, 31);
        auto batch = samples_for(type, 6);
        BatchTensors bt = m.forward(batch, /*training=*/false);

        std::vector<int> act_t, role_t;
        std::vector<double> times;
        for (const auto& s : batch) {
            act_t.push_back(s.target_activity);
            role_t.push_back(s.target_role);
            for (double v : s.target_times) times.push_back(v);
        }
        ppm::nn::Tensor target = ppm::nn::Tensor::from(static_cast<int>(batch.size()), 3, times);
        ppm::nn::Tensor loss = ppm::nn::add(
            ppm::nn::add(ppm::nn::cross_entropy(bt.activity_logits, act_t),
                         ppm::nn::cross_entropy(bt.role_logits, role_t)),
            ppm::nn::mse(bt.time_preds, target));
        ppm::nn::backward(loss);

        for (const auto& [name, t] : m.params().entries()) {
            if (name.rfind("backbone/", 0) != 0) continue;
            INFO("model ", to_string(type), " param ", name);
            REQUIRE(t.has_grad());
            double mx = 0;
            for (double g : m.params().at(name).grad()) mx = std::max(mx, std::abs(g));
            CHECK(mx > 0.0);
        }
    }
}

TEST_CASE("config validation rejects off-grid values") {
    ModelConfig c = tiny_config(ModelType::mtlformer);
    c.embed_dim = 20;
    CHECK_THROWS_AS(Model::build(c, 5, 5, 4, 1), ppm::ConfigViolation);
    c = tiny_config(ModelType::mtlformer);
    c.heads = 3;
    CHECK_THROWS_AS(Model::build(c, 5, 5, 4, 1), ppm::ConfigViolation);
    c = tiny_config(ModelType::mtlformer);
    c.dropout = 0.5;
    CHECK_THROWS_AS(Model::build(c, 5, 5, 4, 1), ppm::ConfigViolation);
    c = tiny_config(ModelType::lstm);
    c.hidden_size = 33;
    CHECK_THROWS_AS(Model::build(c, 5, 5, 4, 1), ppm::ConfigViolation);
    c = tiny_config(ModelType::lstm);
    c.ngram = 7;
    CHECK_THROWS_AS(Model::build(c, 5, 5, 4, 1), ppm::ConfigViolation);
}

TEST_CASE("checkpoint round trip preserves behaviour and bytes") {
    Model m = Model::build(tiny_config(ModelType::transformer_simple), fixture_vocab_activity(),
                           fixture_vocab_role(), 7, 5);
    auto batch = samples_for(ModelType::transformer_simple, 3);
    auto before = m.predict(batch);

    auto dir = std::filesystem::temp_directory_path();
    std::string p1 = (dir / "ppm_ckpt_a.ppmt").string();
    std::string p2 = (dir / "ppm_ckpt_b.ppmt").string();
    save_model_checkpoint(p1, m, {{"note", "test"}});

    nlohmann::json meta;
    Model loaded = load_model_checkpoint(p1, &meta);
    CHECK(meta.at("note") == "test");
    auto after = loaded.predict(batch);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        REQUIRE(before[i].activity_logits == after[i].activity_logits);
        REQUIRE(before[i].time_preds == after[i].time_preds);
    }

    // identical state serializes to identical bytes
    save_model_checkpoint(p2, loaded, {{"note", "test"}});
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    REQUIRE(b1 == b2);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("transformer_simple with encoder_layers=1 contains exactly one encoder stack") {
    Model m = Model::build(tiny_config(ModelType::transformer_simple), 8, 8, 5, 2);
    bool has_enc0 = false, has_enc1 = false;
    for (const auto& [name, t] : m.params().entries()) {
        if (name.rfind("backbone/enc0/", 0) == 0) has_enc0 = true;
        if (name.rfind("backbone/enc1/", 0) == 0) has_enc1 = true;
    }
    CHECK(has_enc0);
    CHECK(!has_enc1);

    ModelConfig two = tiny_config(ModelType::transformer_simple);
    two.encoder_layers = 2;
    Model m2 = Model::build(two, 8, 8, 5, 2);
    bool has_enc1_now = false;
    for (const auto& [name, t] : m2.params().entries())
        if (name.rfind("backbone/enc1/", 0) == 0) has_enc1_now = true;
    CHECK(has_enc1_now);
}

TEST_CASE("describe lists per-layer parameters and the total") {
    Model m = Model::build(tiny_config(ModelType::lstm_light), 8, 8, 5, 2);
    std::string d = m.describe();
    CHECK(d.find("backbone/shared_lstm/w") != std::string::npos);
    CHECK(d.find("heads/activity/out/w") != std::string::npos);
    CHECK(d.find("total trainable: " + std::to_string(m.params().count_params())) != std::string::npos);
}
