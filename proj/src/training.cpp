#include "ppm/training.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>

#include "ppm/nn/adam.hpp"
#include "ppm/text.hpp"

namespace ppm::training {

using features::Sample;
using models::Model;
using nn::Tensor;

UncertaintyWeights attach_uncertainty_weights(Model& model) {
    auto get = [&model](const char* name) {
        if (!model.params().contains(name)) return model.params().create(name, 1, 1);
        return model.params().at(name);
    };
    return {get("uncertainty/s_activity"), get("uncertainty/s_role"), get("uncertainty/s_time")};
}

Tensor combined_loss(const Tensor& l_activity, const Tensor& l_role, const Tensor& l_time,
                     const UncertaintyWeights& weights) {
    auto term = [](const Tensor& l, const Tensor& s) {
        return nn::add(nn::mul(nn::exp_op(nn::neg(s)), l), s);
    };
    return nn::add(nn::add(term(l_activity, weights.s_activity), term(l_role, weights.s_role)),
                   term(l_time, weights.s_time));
}

double combined_loss_value(double l_activity, double l_role, double l_time, double s_activity,
                           double s_role, double s_time) {
    return std::exp(-s_activity) * l_activity + s_activity + std::exp(-s_role) * l_role + s_role +
           std::exp(-s_time) * l_time + s_time;
}

namespace {

void batch_targets(std::span<const Sample> batch, std::vector<int>& act, std::vector<int>& role,
                   Tensor& times) {
    int b = static_cast<int>(batch.size());
    act.resize(b);
    role.resize(b);
    std::vector<double> tv(std::size_t(b) * 3);
    for (int i = 0; i < b; ++i) {
        act[i] = batch[i].target_activity;
        role[i] = batch[i].target_role;
        for (int c = 0; c < 3; ++c) tv[std::size_t(i) * 3 + c] = batch[i].target_times[c];
    }
    times = Tensor::from(b, 3, std::move(tv));
}

struct HeadLosses {
    double activity = 0.0, role = 0.0, time = 0.0;
};

// sample-weighted mean of the three head losses in evaluation mode
HeadLosses evaluation_losses(Model& model, const std::vector<Sample>& samples) {
    constexpr std::size_t kChunk = 256;
    HeadLosses acc;
    std::vector<int> act, role;
    Tensor times;
    for (std::size_t from = 0; from < samples.size(); from += kChunk) {
        std::size_t n = std::min(kChunk, samples.size() - from);
        std::span<const Sample> chunk(samples.data() + from, n);
        models::BatchTensors bt = model.forward(chunk, /*training=*/false);
        batch_targets(chunk, act, role, times);
        acc.activity += nn::cross_entropy(bt.activity_logits, act).item() * n;
        acc.role += nn::cross_entropy(bt.role_logits, role).item() * n;
        acc.time += nn::mse(bt.time_preds, times).item() * n;
    }
    acc.activity /= samples.size();
    acc.role /= samples.size();
    acc.time /= samples.size();
    return acc;
}

struct StateSnapshot {
    std::map<std::string, std::vector<double>> params, buffers;

    static StateSnapshot take(const Model& model) {
        StateSnapshot s;
        for (const auto& [name, t] : model.params().entries()) s.params[name] = t.values();
        for (const auto& [name, t] : model.buffers().entries()) s.buffers[name] = t.values();
        return s;
    }
    void restore(Model& model) const {
        for (auto& [name, t] : model.params().entries()) t.values() = params.at(name);
        for (auto& [name, t] : model.buffers().entries()) t.values() = buffers.at(name);
    }
};

}  // namespace

TrainHistory train(Model& model, const std::vector<Sample>& train_samples,
                   const std::vector<Sample>& val_samples, const TrainConfig& config) {
    if (train_samples.empty()) throw DataError("training set is empty");
    if (val_samples.empty()) throw DataError("validation set is empty");

    UncertaintyWeights uw = attach_uncertainty_weights(model);
    nn::AdamOptimizer optimizer(config.learning_rate);
    nn::Rng shuffle_rng(nn::derive_seed(config.seed, 0x5F));

    TrainHistory history;
    StateSnapshot best;
    int since_best = 0;

    std::vector<std::size_t> order(train_samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<Sample> permuted(train_samples.size());

    std::vector<int> act, role;
    Tensor times;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);
        for (std::size_t i = 0; i < order.size(); ++i) permuted[i] = train_samples[order[i]];

        double loss_sum = 0.0;
        int batch_index = 0;
        for (std::size_t from = 0; from < permuted.size(); from += config.batch_size, ++batch_index) {
            std::size_t n = std::min<std::size_t>(config.batch_size, permuted.size() - from);
            std::span<const Sample> batch(permuted.data() + from, n);
            models::BatchTensors bt = model.forward(batch, /*training=*/true);
            batch_targets(batch, act, role, times);
            Tensor l_act = nn::cross_entropy(bt.activity_logits, act);
            Tensor l_role = nn::cross_entropy(bt.role_logits, role);
            Tensor l_time = nn::mse(bt.time_preds, times);
            Tensor loss = combined_loss(l_act, l_role, l_time, uw);
            double lv = loss.item();
            if (!std::isfinite(lv)) throw NonFiniteLoss(epoch, batch_index);
            nn::backward(loss);
            optimizer.step(model.params());
            model.params().zero_grad();
            loss_sum += lv * n;
        }

        EpochStats es;
        es.train_loss = loss_sum / train_samples.size();
        HeadLosses vl = evaluation_losses(model, val_samples);
        es.val_activity_loss = vl.activity;
        es.val_role_loss = vl.role;
        es.val_time_loss = vl.time;
        es.val_loss = combined_loss_value(vl.activity, vl.role, vl.time,
                                          uw.s_activity.values()[0], uw.s_role.values()[0],
                                          uw.s_time.values()[0]);
        if (!std::isfinite(es.val_loss)) throw NonFiniteLoss(epoch, -1);
        es.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.epochs.push_back(es);

        if (es.val_loss < history.best_validation_loss) {
            history.best_validation_loss = es.val_loss;
            history.best_epoch = epoch;
            best = StateSnapshot::take(model);
            since_best = 0;
        } else {
            ++since_best;
            if (since_best > config.patience) break;
        }
    }

    if (history.best_epoch >= 0) best.restore(model);
    return history;
}

// ---- grid search ----------------------------------------------------------

std::vector<GridCandidate> enumerate_grid(models::ModelType type, const GridOptions& options) {
    std::vector<GridCandidate> out;
    auto push = [&](models::ModelConfig mc, double lr, int batch) {
        GridCandidate c;
        c.index = static_cast<int>(out.size());
        mc.model_type = type;
        c.model_config = mc;
        c.train_config.learning_rate = lr;
        c.train_config.batch_size = batch;
        c.train_config.max_epochs = options.max_epochs;
        c.train_config.patience = options.patience;
        c.train_config.seed = nn::derive_seed(options.seed, static_cast<std::uint64_t>(c.index));
        out.push_back(std::move(c));
    };

    if (models::is_transformer_family(type)) {
        for (int embed : {16, 32})
            for (int heads : {1, 2, 4}) {
                if (embed % heads != 0) continue;
                for (int ff : {32, 64, 128})
                    for (double lr : {3e-4, 6e-4})
                        for (int batch : {8, 16, 32})
                            for (int layers : {1, 2, 4}) {
                                models::ModelConfig mc;
                                mc.embed_dim = embed;
                                mc.heads = heads;
                                mc.ff_dim = ff;
                                mc.encoder_layers = layers;
                                push(mc, lr, batch);
                            }
            }
    } else {
        for (double lr : {5e-4, 1e-3, 5e-3, 3e-4, 6e-4})
            for (int batch : {8, 16, 32, 64})
                for (int g : {5, 10, 15})
                    for (int hidden : {50, 25, 10}) {
                        models::ModelConfig mc;
                        mc.ngram = g;
                        mc.hidden_size = hidden;
                        push(mc, lr, batch);
                    }
    }

    if (options.grid_limit >= 0 && static_cast<int>(out.size()) > options.grid_limit)
        out.resize(options.grid_limit);
    return out;
}

std::vector<GridResultRow> run_grid_candidates(const std::vector<GridCandidate>& candidates,
                                               const eventlog::SplitLog& split,
                                               const GridOptions& options,
                                               const CandidateSink& sink) {
    std::vector<GridResultRow> results(candidates.size());
    if (candidates.empty()) return results;

    eventlog::EventLog aug_train = features::augment_with_boundaries(split.train);
    eventlog::EventLog aug_val = features::augment_with_boundaries(split.validation);
    features::Normalizer norm = features::fit_normalizer(aug_train);
    int a_vocab = split.train.activity_vocab->size();
    int r_vocab = split.train.role_vocab->size();
    int max_len = features::compute_max_len(aug_train);

    // one sample set per distinct input width, shared across candidates
    std::map<int, std::pair<std::vector<Sample>, std::vector<Sample>>> by_width;
    for (const auto& c : candidates) {
        if (models::is_transformer_family(c.model_config.model_type)) {
            if (!by_width.count(max_len))
                by_width[max_len] = {
                    features::build_prefix_samples(aug_train, norm, max_len, nullptr,
                                                   options.time_channel),
                    features::build_prefix_samples(aug_val, norm, max_len, nullptr,
                                                   options.time_channel)};
        } else {
            int g = c.model_config.ngram;
            if (!by_width.count(g))
                by_width[g] = {
                    features::build_ngram_samples(aug_train, norm, g, nullptr, options.time_channel),
                    features::build_ngram_samples(aug_val, norm, g, nullptr, options.time_channel)};
        }
    }

    auto run_candidate = [&](std::size_t i) {
        const GridCandidate& cand = candidates[i];
        GridResultRow row;
        row.candidate = cand;
        int width = models::is_transformer_family(cand.model_config.model_type)
                        ? max_len
                        : cand.model_config.ngram;
        const auto& [tr, va] = by_width.at(width);
        Model model = Model::build(cand.model_config, a_vocab, r_vocab, width,
                                   cand.train_config.seed);
        try {
            row.history = train(model, tr, va, cand.train_config);
            row.status = CandidateStatus::ok;
        } catch (const TrainingError& e) {
            row.status = CandidateStatus::failed;
            row.message = e.what();
        }
        row.param_count = model.params().count_params();
        results[i] = std::move(row);
        if (sink && results[i].status == CandidateStatus::ok) sink(results[i], model);
    };

    int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        for (std::size_t i = 0; i < candidates.size(); ++i) run_candidate(i);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t i = next++; i < candidates.size(); i = next++) run_candidate(i);
        };
        std::vector<std::thread> pool;
        for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
    }
    return results;
}

std::vector<GridResultRow> grid_search(models::ModelType type, const eventlog::SplitLog& split,
                                       const GridOptions& options, const CandidateSink& sink) {
    return run_grid_candidates(enumerate_grid(type, options), split, options, sink);
}

std::string grid_results_csv(const std::vector<GridResultRow>& rows) {
    std::string out =
        "candidate_index,model_type,embed_dim,heads,ff_dim,encoder_layers,dropout,hidden_size,"
        "ngram,learning_rate,batch_size,max_epochs,patience,seed,status,param_count,epochs_run,"
        "best_epoch,best_val_loss,val_activity_loss,val_role_loss,val_time_loss,message\n";
    using text::format_double;
    for (const auto& r : rows) {
        const auto& mc = r.candidate.model_config;
        const auto& tc = r.candidate.train_config;
        bool ok = r.status == CandidateStatus::ok;
        const EpochStats* best =
            ok && r.history.best_epoch >= 0 ? &r.history.epochs[r.history.best_epoch] : nullptr;
        out += std::to_string(r.candidate.index) + ',' + to_string(mc.model_type) + ',' +
               std::to_string(mc.embed_dim) + ',' + std::to_string(mc.heads) + ',' +
               std::to_string(mc.ff_dim) + ',' + std::to_string(mc.encoder_layers) + ',' +
               format_double(mc.dropout) + ',' + std::to_string(mc.hidden_size) + ',' +
               std::to_string(mc.ngram) + ',' + format_double(tc.learning_rate) + ',' +
               std::to_string(tc.batch_size) + ',' + std::to_string(tc.max_epochs) + ',' +
               std::to_string(tc.patience) + ',' + std::to_string(tc.seed) + ',' +
               (ok ? "ok" : "failed") + ',' + std::to_string(r.param_count) + ',' +
               std::to_string(r.history.epochs.size()) + ',' +
               std::to_string(r.history.best_epoch) + ',' +
               (best ? format_double(r.history.best_validation_loss) : "") + ',' +
               (best ? format_double(best->val_activity_loss) : "") + ',' +
               (best ? format_double(best->val_role_loss) : "") + ',' +
               (best ? format_double(best->val_time_loss) : "") + ',' +
               text::csv_escape(r.message) + '\n';
    }
    return out;
}

std::string history_csv(const TrainHistory& history) {
    using text::format_double;
    std::string out = "epoch,train_loss,val_loss,val_activity_loss,val_role_loss,val_time_loss,seconds\n";
    for (std::size_t e = 0; e < history.epochs.size(); ++e) {
        const auto& s = history.epochs[e];
        out += std::to_string(e) + ',' + format_double(s.train_loss) + ',' +
               format_double(s.val_loss) + ',' + format_double(s.val_activity_loss) + ',' +
               format_double(s.val_role_loss) + ',' + format_double(s.val_time_loss) + ',' +
               format_double(s.seconds) + '\n';
    }
    return out;
}

}  // namespace ppm::training
