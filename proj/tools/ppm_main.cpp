// ppm: preprocessing, training, grid search, model selection, evaluation and
// reporting for next-event prediction on business-process event logs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ppm/errors.hpp"
#include "ppm/evaluation.hpp"
#include "ppm/eventlog.hpp"
#include "ppm/features.hpp"
#include "ppm/models.hpp"
#include "ppm/report.hpp"
#include "ppm/text.hpp"
#include "ppm/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// exit codes, one per error family
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitTraining = 4;
constexpr int kExitInternal = 5;

struct InputOptions {
    std::string input;
    std::string config_file;
    ppm::eventlog::ColumnMap columns;
};

void add_input_options(CLI::App* cmd, InputOptions& io, bool required = true) {
    auto* opt = cmd->add_option("--input", io.input, "event log CSV file");
    if (required) opt->required();
    cmd->add_option("--col-case", io.columns.case_id, "case id column name");
    cmd->add_option("--col-activity", io.columns.activity, "activity column name");
    cmd->add_option("--col-role", io.columns.role, "role column name");
    cmd->add_option("--col-start", io.columns.start, "start timestamp column name");
    cmd->add_option("--col-end", io.columns.end, "end timestamp column name");
}

ppm::features::TimeChannel parse_channel(const std::string& name) {
    if (name == "full") return ppm::features::TimeChannel::full;
    if (name == "causal") return ppm::features::TimeChannel::causal;
    throw ppm::ConfigError("--time-channel must be full or causal, got " + name);
}

ppm::evaluation::F1Mode parse_f1_mode(const std::string& name) {
    if (name == "weighted") return ppm::evaluation::F1Mode::weighted;
    if (name == "macro") return ppm::evaluation::F1Mode::macro;
    throw ppm::ConfigError("--f1-mode must be weighted or macro, got " + name);
}

std::string dataset_name(const std::string& input) { return fs::path(input).stem().string(); }

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec) throw ppm::DataError("cannot create directory " + path + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ppm::DataError("cannot write " + path);
    out << content;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ppm::DataError("cannot open " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// every run directory gets the resolved configuration plus a verbatim copy
// of the --config file when one was used
void persist_run_config(const std::string& outdir, const json& resolved,
                        const std::string& config_file) {
    write_text(outdir + "/run_config.json", resolved.dump(2) + "\n");
    if (!config_file.empty()) {
        std::error_code ec;
        fs::copy_file(config_file,
                      fs::path(outdir) / ("config_copy" + fs::path(config_file).extension().string()),
                      fs::copy_options::overwrite_existing, ec);
        if (ec) throw ppm::DataError("cannot copy config file: " + ec.message());
    }
}

json columns_to_json(const ppm::eventlog::ColumnMap& c) {
    return {{"case_id", c.case_id},
            {"activity", c.activity},
            {"role", c.role},
            {"start", c.start},
            {"end", c.end}};
}

struct Pipeline {
    ppm::eventlog::EventLog log;
    ppm::eventlog::ParseReport report;
    ppm::eventlog::SplitLog split;
};

Pipeline load_and_split(const InputOptions& io) {
    Pipeline p;
    p.log = ppm::eventlog::parse_csv(io.input, io.columns, &p.report);
    p.split = ppm::eventlog::split_chronological(p.log);
    return p;
}

json checkpoint_extra_meta(const std::string& dataset, const ppm::eventlog::EventLog& log,
                           const ppm::features::Normalizer& norm, const std::string& time_channel) {
    return {{"dataset", dataset},
            {"activity_vocab", log.activity_vocab->labels()},
            {"role_vocab", log.role_vocab->labels()},
            {"activity_vocab_hash", log.activity_vocab->hash()},
            {"role_vocab_hash", log.role_vocab->hash()},
            {"normalizer", ppm::features::normalizer_to_json(norm)},
            {"time_channel", time_channel}};
}

std::string metrics_csv(const ppm::evaluation::TaskMetrics& m, long long params) {
    using ppm::text::format_double;
    return "nap_f1,nrp_f1,nwtp_mae_days,ndp_mae_days,rtp_mae_days,parameters\n" +
           format_double(m.nap_f1) + ',' + format_double(m.nrp_f1) + ',' +
           format_double(m.nwtp_mae) + ',' + format_double(m.ndp_mae) + ',' +
           format_double(m.rtp_mae) + ',' + std::to_string(params) + '\n';
}

std::string selection_csv(const ppm::evaluation::Selection& sel, int chosen_candidate) {
    using ppm::text::format_double;
    std::string out = "candidate_index,params,val_loss,p_ratio,loss_excess,score,selected\n";
    for (const auto& s : sel.scores) {
        out += std::to_string(s.candidate_index) + ',' + std::to_string(s.params) + ',' +
               format_double(s.val_loss) + ',' + format_double(s.p_ratio) + ',' +
               format_double(s.loss_excess) + ',' + format_double(s.score) + ',' +
               (s.candidate_index == chosen_candidate ? "1" : "0") + '\n';
    }
    return out;
}

// ---- subcommands -----------------------------------------------------------

int cmd_validate(const InputOptions& io) {
    Pipeline p = load_and_split(io);
    const auto& r = p.report;
    std::cout << "dataset: " << dataset_name(io.input) << "\n"
              << "rows: " << r.rows << "\n"
              << "traces: " << r.traces << "\n"
              << "events: " << r.events << "\n"
              << "activities: " << r.activities << "\n"
              << "roles: " << r.roles << "\n"
              << "dropped_negative_duration: " << r.dropped_negative_duration << "\n"
              << "activity_vocab_size: " << p.log.activity_vocab->size() << "\n"
              << "role_vocab_size: " << p.log.role_vocab->size() << "\n"
              << "split_train_cases: " << p.split.train.traces.size() << "\n"
              << "split_validation_cases: " << p.split.validation.traces.size() << "\n"
              << "split_test_cases: " << p.split.test.traces.size() << "\n";
    return kExitOk;
}

struct PreprocessArgs {
    InputOptions io;
    std::string out;
    std::string mode = "prefix";
    int ngram = 5;
    std::string time_channel = "full";
};

int cmd_preprocess(const PreprocessArgs& a) {
    Pipeline p = load_and_split(a.io);
    auto channel = parse_channel(a.time_channel);
    auto aug_train = ppm::features::augment_with_boundaries(p.split.train);
    auto aug_val = ppm::features::augment_with_boundaries(p.split.validation);
    auto aug_test = ppm::features::augment_with_boundaries(p.split.test);
    auto norm = ppm::features::fit_normalizer(aug_train);

    ppm::features::SampleCache cache;
    cache.mode = a.mode;
    cache.channel = channel;
    cache.norm = norm;
    cache.dataset = dataset_name(a.io.input);
    cache.activity_labels = p.log.activity_vocab->labels();
    cache.role_labels = p.log.role_vocab->labels();
    cache.activity_vocab_hash = p.log.activity_vocab->hash();
    cache.role_vocab_hash = p.log.role_vocab->hash();
    cache.activity_vocab_size = p.log.activity_vocab->size();
    cache.role_vocab_size = p.log.role_vocab->size();

    ppm::features::BuildStats stats;
    if (a.mode == "prefix") {
        cache.width = ppm::features::compute_max_len(aug_train);
        cache.train = ppm::features::build_prefix_samples(aug_train, norm, cache.width, &stats, channel);
        cache.validation =
            ppm::features::build_prefix_samples(aug_val, norm, cache.width, &stats, channel);
        cache.test = ppm::features::build_prefix_samples(aug_test, norm, cache.width, &stats, channel);
    } else if (a.mode == "ngram") {
        cache.width = a.ngram;
        cache.train = ppm::features::build_ngram_samples(aug_train, norm, cache.width, &stats, channel);
        cache.validation =
            ppm::features::build_ngram_samples(aug_val, norm, cache.width, &stats, channel);
        cache.test = ppm::features::build_ngram_samples(aug_test, norm, cache.width, &stats, channel);
    } else {
        throw ppm::ConfigError("--mode must be prefix or ngram, got " + a.mode);
    }

    ensure_dir(a.out);
    ppm::features::save_sample_cache(a.out + "/samples.cache", cache);
    json resolved{{"command", "preprocess"},
                  {"input", a.io.input},
                  {"columns", columns_to_json(a.io.columns)},
                  {"mode", a.mode},
                  {"width", cache.width},
                  {"time_channel", a.time_channel}};
    persist_run_config(a.out, resolved, a.io.config_file);
    write_text(a.out + "/normalizer.json", ppm::features::normalizer_to_json(norm).dump(2) + "\n");

    std::cout << "samples: train " << cache.train.size() << ", validation "
              << cache.validation.size() << ", test " << cache.test.size() << "\n"
              << "width: " << cache.width << "\n"
              << "truncated_prefixes: " << stats.truncated_prefixes << "\n"
              << "clamped_waits: " << stats.clamped_waits << "\n"
              << "cache: " << a.out << "/samples.cache\n";
    return kExitOk;
}

struct TrainArgs {
    InputOptions io;
    std::string out;
    std::string cache_path;
    std::string model = "mtlformer";
    ppm::models::ModelConfig config;
    ppm::training::TrainConfig tcfg;
    std::string time_channel = "full";
};

int cmd_train(const TrainArgs& a) {
    auto type = ppm::models::model_type_from_string(a.model);
    ppm::models::ModelConfig mcfg = a.config;
    mcfg.model_type = type;

    int width = 0;
    std::string dataset, time_channel = a.time_channel;
    std::vector<std::string> act_labels, role_labels;
    std::string act_hash, role_hash;
    ppm::features::Normalizer norm;
    std::vector<ppm::features::Sample> train_s, val_s;

    if (!a.cache_path.empty()) {
        auto cache = ppm::features::load_sample_cache(a.cache_path);
        bool want_prefix = ppm::models::is_transformer_family(type);
        if (want_prefix != (cache.mode == "prefix"))
            throw ppm::ConfigError("cache mode '" + cache.mode + "' does not fit model " + a.model);
        if (!want_prefix && cache.width != mcfg.ngram)
            throw ppm::ConfigError("cache window " + std::to_string(cache.width) +
                                   " does not match --ngram " + std::to_string(mcfg.ngram));
        width = cache.width;
        norm = cache.norm;
        dataset = cache.dataset.empty() ? dataset_name(a.cache_path) : cache.dataset;
        act_labels = cache.activity_labels;
        role_labels = cache.role_labels;
        act_hash = cache.activity_vocab_hash;
        role_hash = cache.role_vocab_hash;
        time_channel = cache.channel == ppm::features::TimeChannel::full ? "full" : "causal";
        train_s = std::move(cache.train);
        val_s = std::move(cache.validation);
    } else {
        if (a.io.input.empty()) throw ppm::ConfigError("train needs --input or --cache");
        auto channel = parse_channel(a.time_channel);
        Pipeline p = load_and_split(a.io);
        auto aug_train = ppm::features::augment_with_boundaries(p.split.train);
        auto aug_val = ppm::features::augment_with_boundaries(p.split.validation);
        norm = ppm::features::fit_normalizer(aug_train);
        if (ppm::models::is_transformer_family(type)) {
            width = ppm::features::compute_max_len(aug_train);
            train_s = ppm::features::build_prefix_samples(aug_train, norm, width, nullptr, channel);
            val_s = ppm::features::build_prefix_samples(aug_val, norm, width, nullptr, channel);
        } else {
            width = mcfg.ngram;
            train_s = ppm::features::build_ngram_samples(aug_train, norm, width, nullptr, channel);
            val_s = ppm::features::build_ngram_samples(aug_val, norm, width, nullptr, channel);
        }
        dataset = dataset_name(a.io.input);
        act_labels = p.log.activity_vocab->labels();
        role_labels = p.log.role_vocab->labels();
        act_hash = p.log.activity_vocab->hash();
        role_hash = p.log.role_vocab->hash();
    }

    auto model = ppm::models::Model::build(mcfg, static_cast<int>(act_labels.size()),
                                           static_cast<int>(role_labels.size()), width, a.tcfg.seed);
    auto history = ppm::training::train(model, train_s, val_s, a.tcfg);

    ensure_dir(a.out);
    json extra{{"dataset", dataset},
               {"activity_vocab", act_labels},
               {"role_vocab", role_labels},
               {"activity_vocab_hash", act_hash},
               {"role_vocab_hash", role_hash},
               {"normalizer", ppm::features::normalizer_to_json(norm)},
               {"time_channel", time_channel}};
    ppm::models::save_model_checkpoint(a.out + "/checkpoint.ppmt", model, extra);
    write_text(a.out + "/history.csv", ppm::training::history_csv(history));
    json resolved{{"command", "train"},
                  {"input", a.io.input},
                  {"cache", a.cache_path},
                  {"columns", columns_to_json(a.io.columns)},
                  {"dataset", dataset},
                  {"model", a.model},
                  {"model_config", mcfg.to_json()},
                  {"learning_rate", a.tcfg.learning_rate},
                  {"batch_size", a.tcfg.batch_size},
                  {"max_epochs", a.tcfg.max_epochs},
                  {"patience", a.tcfg.patience},
                  {"seed", a.tcfg.seed},
                  {"time_channel", time_channel}};
    persist_run_config(a.out, resolved, a.io.config_file);
    write_text(a.out + "/normalizer.json", ppm::features::normalizer_to_json(norm).dump(2) + "\n");
    json vocabs{{"activity", act_labels}, {"role", role_labels}};
    write_text(a.out + "/vocab.json", vocabs.dump(2) + "\n");

    std::cout << "trained " << a.model << " on " << dataset << "\n"
              << "parameters: " << model.params().count_params() << "\n"
              << "epochs: " << history.epochs.size() << ", best epoch " << history.best_epoch << "\n"
              << "best validation loss: " << ppm::text::format_double(history.best_validation_loss)
              << "\n"
              << "checkpoint: " << a.out << "/checkpoint.ppmt\n";
    return kExitOk;
}

struct GridArgs {
    InputOptions io;
    std::string out;
    std::string model = "mtlformer";
    ppm::training::GridOptions opts;
    std::string time_channel = "full";
};

int cmd_gridsearch(const GridArgs& a) {
    auto type = ppm::models::model_type_from_string(a.model);
    ppm::training::GridOptions opts = a.opts;
    opts.time_channel = parse_channel(a.time_channel);

    Pipeline p = load_and_split(a.io);
    auto norm = ppm::features::fit_normalizer(ppm::features::augment_with_boundaries(p.split.train));
    std::string dataset = dataset_name(a.io.input);

    ensure_dir(a.out);
    ensure_dir(a.out + "/candidates");
    ensure_dir(a.out + "/histories");

    std::mutex sink_mutex;
    auto sink = [&](const ppm::training::GridResultRow& row, const ppm::models::Model& model) {
        std::lock_guard<std::mutex> lock(sink_mutex);
        char name[32];
        std::snprintf(name, sizeof name, "cand_%04d", row.candidate.index);
        ppm::models::save_model_checkpoint(a.out + "/candidates/" + name + ".ppmt", model,
                                           checkpoint_extra_meta(dataset, p.log, norm, a.time_channel));
        write_text(a.out + "/histories/" + name + ".csv", ppm::training::history_csv(row.history));
    };

    auto rows = ppm::training::grid_search(type, p.split, opts, sink);
    write_text(a.out + "/grid_results.csv", ppm::training::grid_results_csv(rows));

    json jrows = json::array();
    for (const auto& r : rows)
        jrows.push_back({{"index", r.candidate.index},
                         {"model_config", r.candidate.model_config.to_json()},
                         {"learning_rate", r.candidate.train_config.learning_rate},
                         {"batch_size", r.candidate.train_config.batch_size},
                         {"seed", r.candidate.train_config.seed},
                         {"param_count", r.param_count},
                         {"best_val_loss", r.status == ppm::training::CandidateStatus::ok
                                               ? json(r.history.best_validation_loss)
                                               : json()},
                         {"status", r.status == ppm::training::CandidateStatus::ok ? "ok" : "failed"},
                         {"message", r.message}});
    json grid_meta{{"command", "gridsearch"},
                   {"model", a.model},
                   {"dataset", dataset},
                   {"seed", a.opts.seed},
                   {"grid_limit", a.opts.grid_limit},
                   {"jobs", a.opts.jobs},
                   {"max_epochs", a.opts.max_epochs},
                   {"patience", a.opts.patience},
                   {"time_channel", a.time_channel},
                   {"results", jrows}};
    write_text(a.out + "/grid_results.json", grid_meta.dump(2) + "\n");
    persist_run_config(a.out, grid_meta, a.io.config_file);

    int ok = 0, failed = 0;
    for (const auto& r : rows) (r.status == ppm::training::CandidateStatus::ok ? ok : failed) += 1;
    std::cout << "grid candidates: " << rows.size() << " (ok " << ok << ", failed " << failed << ")\n"
              << "results: " << a.out << "/grid_results.csv\n";
    return kExitOk;
}

struct SelectArgs {
    std::string grid_dir;
    std::string out;
    double lambda = 2.0;
};

int cmd_select(const SelectArgs& a) {
    json grid = json::parse(read_text(a.grid_dir + "/grid_results.json"));
    std::vector<ppm::training::GridResultRow> rows;
    for (const auto& jr : grid.at("results")) {
        ppm::training::GridResultRow r;
        r.candidate.index = jr.at("index").get<int>();
        r.param_count = jr.at("param_count").get<long long>();
        r.status = jr.at("status").get<std::string>() == "ok"
                       ? ppm::training::CandidateStatus::ok
                       : ppm::training::CandidateStatus::failed;
        if (r.status == ppm::training::CandidateStatus::ok) {
            r.history.best_validation_loss = jr.at("best_val_loss").get<double>();
            r.history.best_epoch = 0;
        }
        rows.push_back(std::move(r));
    }

    auto selection = ppm::evaluation::select_model(rows, a.lambda);
    int chosen_index = rows[selection.candidate_index].candidate.index;

    std::string outdir = a.out.empty() ? a.grid_dir : a.out;
    ensure_dir(outdir);
    write_text(outdir + "/selection.csv", selection_csv(selection, chosen_index));

    char name[32];
    std::snprintf(name, sizeof name, "cand_%04d", chosen_index);
    fs::path src = fs::path(a.grid_dir) / "candidates" / (std::string(name) + ".ppmt");
    if (!fs::exists(src)) throw ppm::DataError("missing candidate checkpoint " + src.string());
    fs::copy_file(src, fs::path(outdir) / "best.ppmt", fs::copy_options::overwrite_existing);

    json resolved{{"command", "select"},
                  {"grid_dir", a.grid_dir},
                  {"lambda", a.lambda},
                  {"selected_candidate", chosen_index}};
    write_text(outdir + "/selection.json", resolved.dump(2) + "\n");

    std::cout << "selected candidate " << chosen_index << " (lambda "
              << ppm::text::format_double(a.lambda) << ")\n"
              << "checkpoint: " << outdir << "/best.ppmt\n";
    return kExitOk;
}

struct EvaluateArgs {
    InputOptions io;
    std::string checkpoint;
    std::string cache_path;
    std::string out;
    std::string split = "test";
    std::string f1_mode = "weighted";
    std::string dataset_override;
};

int cmd_evaluate(const EvaluateArgs& a) {
    json meta;
    auto model = ppm::models::load_model_checkpoint(a.checkpoint, &meta);
    auto norm = ppm::features::normalizer_from_json(meta.at("normalizer"));
    auto channel = parse_channel(meta.value("time_channel", "full"));

    std::vector<ppm::features::Sample> samples;
    if (!a.cache_path.empty()) {
        auto cache = ppm::features::load_sample_cache(a.cache_path);
        // staleness check: the cache must encode with the training vocabularies
        if (cache.activity_vocab_hash != meta.at("activity_vocab_hash").get<std::string>() ||
            cache.role_vocab_hash != meta.at("role_vocab_hash").get<std::string>())
            throw ppm::DataError("stale cache: vocabulary hashes differ from the checkpoint");
        if (cache.width != model.input_width())
            throw ppm::DataError("stale cache: width " + std::to_string(cache.width) +
                                 " vs model input width " + std::to_string(model.input_width()));
        if (a.split == "test")
            samples = std::move(cache.test);
        else if (a.split == "validation")
            samples = std::move(cache.validation);
        else if (a.split == "train")
            samples = std::move(cache.train);
        else
            throw ppm::ConfigError("--split must be train, validation or test with --cache");
    } else {
        if (a.io.input.empty()) throw ppm::ConfigError("evaluate needs --input or --cache");
        // encode the input with the checkpoint's vocabularies; labels unseen
        // at training time map to «unk»
        ppm::eventlog::EventLog log = ppm::eventlog::parse_csv(a.io.input, a.io.columns);
        log.activity_vocab =
            std::make_shared<ppm::eventlog::Vocabulary>(ppm::eventlog::Vocabulary::from_labels(
                meta.at("activity_vocab").get<std::vector<std::string>>()));
        log.role_vocab =
            std::make_shared<ppm::eventlog::Vocabulary>(ppm::eventlog::Vocabulary::from_labels(
                meta.at("role_vocab").get<std::vector<std::string>>()));

        auto split = ppm::eventlog::split_chronological(log);
        const ppm::eventlog::EventLog* part = nullptr;
        if (a.split == "test")
            part = &split.test;
        else if (a.split == "validation")
            part = &split.validation;
        else if (a.split == "train")
            part = &split.train;
        else if (a.split == "all")
            part = &log;
        else
            throw ppm::ConfigError("--split must be train, validation, test or all");

        auto aug = ppm::features::augment_with_boundaries(*part);
        if (ppm::models::is_transformer_family(model.config().model_type))
            samples =
                ppm::features::build_prefix_samples(aug, norm, model.input_width(), nullptr, channel);
        else
            samples =
                ppm::features::build_ngram_samples(aug, norm, model.config().ngram, nullptr, channel);
    }

    auto result = ppm::evaluation::evaluate(model, samples, norm, parse_f1_mode(a.f1_mode));

    ensure_dir(a.out);
    long long params = model.params().count_params();
    write_text(a.out + "/metrics.csv", metrics_csv(result.metrics, params));
    write_text(a.out + "/predictions.csv", ppm::evaluation::predictions_csv(result.records));
    std::string dataset = !a.dataset_override.empty() ? a.dataset_override
                                                      : meta.value("dataset", dataset_name(a.io.input));
    json jm{{"dataset", dataset},
            {"model", meta.at("model_type").get<std::string>()},
            {"split", a.split},
            {"f1_mode", a.f1_mode},
            {"parameters", params},
            {"samples", samples.size()},
            {"metrics",
             {{"nap_f1", result.metrics.nap_f1},
              {"nrp_f1", result.metrics.nrp_f1},
              {"nwtp_mae_days", result.metrics.nwtp_mae},
              {"ndp_mae_days", result.metrics.ndp_mae},
              {"rtp_mae_days", result.metrics.rtp_mae}}}};
    write_text(a.out + "/metrics.json", jm.dump(2) + "\n");
    json resolved{{"command", "evaluate"}, {"checkpoint", a.checkpoint}, {"input", a.io.input},
                  {"split", a.split},      {"f1_mode", a.f1_mode},       {"dataset", dataset}};
    persist_run_config(a.out, resolved, a.io.config_file);

    using ppm::text::format_double;
    std::cout << "dataset: " << dataset << ", model: " << meta.at("model_type").get<std::string>()
              << ", split: " << a.split << "\n"
              << "NAP F1: " << format_double(result.metrics.nap_f1) << "\n"
              << "NRP F1: " << format_double(result.metrics.nrp_f1) << "\n"
              << "NWTP MAE (days): " << format_double(result.metrics.nwtp_mae) << "\n"
              << "NDP MAE (days): " << format_double(result.metrics.ndp_mae) << "\n"
              << "RTP MAE (days): " << format_double(result.metrics.rtp_mae) << "\n"
              << "parameters: " << params << "\n";
    return kExitOk;
}

struct ReportArgs {
    std::vector<std::string> runs;
    std::string out;
};

int cmd_report(const ReportArgs& a) {
    std::vector<ppm::report::RunSummary> summaries;
    ensure_dir(a.out);
    for (const auto& dir : a.runs) {
        fs::path metrics = fs::path(dir) / "metrics.json";
        if (fs::exists(metrics)) {
            json j = json::parse(read_text(metrics.string()));
            ppm::report::RunSummary s;
            s.dataset = j.at("dataset").get<std::string>();
            s.model = j.at("model").get<std::string>();
            s.params = j.at("parameters").get<long long>();
            s.metrics.nap_f1 = j.at("metrics").at("nap_f1").get<double>();
            s.metrics.nrp_f1 = j.at("metrics").at("nrp_f1").get<double>();
            s.metrics.nwtp_mae = j.at("metrics").at("nwtp_mae_days").get<double>();
            s.metrics.ndp_mae = j.at("metrics").at("ndp_mae_days").get<double>();
            s.metrics.rtp_mae = j.at("metrics").at("rtp_mae_days").get<double>();
            summaries.push_back(std::move(s));
        }
        fs::path history = fs::path(dir) / "history.csv";
        if (fs::exists(history)) {
            std::string base = fs::path(dir).filename().string();
            if (base.empty()) base = fs::path(dir).parent_path().filename().string();
            fs::copy_file(history, fs::path(a.out) / ("loss_curve_" + base + ".csv"),
                          fs::copy_options::overwrite_existing);
        }
    }
    if (summaries.empty()) throw ppm::DataError("no metrics.json found in the given run directories");

    write_text(a.out + "/metrics_table.csv", ppm::report::metrics_table_csv(summaries));
    auto reductions = ppm::report::parameter_reductions(summaries);
    write_text(a.out + "/parameter_reduction.csv", ppm::report::reduction_summary_csv(reductions));

    std::cout << "runs: " << summaries.size() << "\n"
              << "metrics table: " << a.out << "/metrics_table.csv\n"
              << "parameter reduction summary: " << a.out << "/parameter_reduction.csv\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"next-event prediction pipeline for business-process event logs"};
    app.require_subcommand(1);
    CLI::Option* config_opt = app.set_config(
        "--config", "",
        "INI configuration: one [subcommand] section with key=value lines; flags win");

    InputOptions validate_io;
    auto* c_validate = app.add_subcommand("validate", "parse a log and print dataset statistics");
    add_input_options(c_validate, validate_io);

    PreprocessArgs pre;
    auto* c_pre = app.add_subcommand("preprocess", "encode samples and write a reusable cache");
    add_input_options(c_pre, pre.io);
    c_pre->add_option("--out", pre.out, "output directory")->required();
    c_pre->add_option("--mode", pre.mode, "prefix (transformer) or ngram (lstm)");
    c_pre->add_option("--ngram", pre.ngram, "window size for ngram mode");
    c_pre->add_option("--time-channel", pre.time_channel, "full or causal input time features");

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "train one model configuration");
    add_input_options(c_train, tr.io, /*required=*/false);
    c_train->add_option("--cache", tr.cache_path, "sample cache from preprocess (replaces --input)");
    c_train->add_option("--out", tr.out, "output directory")->required();
    c_train
        ->add_option("--model", tr.model,
                     "mtlformer | mtlformer_light | transformer_simple | lstm | lstm_light")
        ->required();
    c_train->add_option("--embed-dim", tr.config.embed_dim, "embedding size (16 or 32)");
    c_train->add_option("--heads", tr.config.heads, "attention heads (1, 2 or 4)");
    c_train->add_option("--ff-dim", tr.config.ff_dim, "feed-forward size (32, 64 or 128)");
    c_train->add_option("--encoder-layers", tr.config.encoder_layers, "encoder layers (1, 2 or 4)");
    c_train->add_option("--hidden-size", tr.config.hidden_size, "lstm hidden size (10, 25 or 50)");
    c_train->add_option("--ngram", tr.config.ngram, "lstm window size (5, 10 or 15)");
    c_train->add_option("--learning-rate", tr.tcfg.learning_rate, "adam learning rate");
    c_train->add_option("--batch-size", tr.tcfg.batch_size, "minibatch size");
    c_train->add_option("--max-epochs", tr.tcfg.max_epochs, "epoch budget");
    c_train->add_option("--patience", tr.tcfg.patience, "early-stopping patience");
    c_train->add_option("--seed", tr.tcfg.seed, "random seed");
    c_train->add_option("--time-channel", tr.time_channel, "full or causal input time features");

    GridArgs gr;
    auto* c_grid = app.add_subcommand("gridsearch", "train every candidate of the family grid");
    add_input_options(c_grid, gr.io);
    c_grid->add_option("--out", gr.out, "output directory")->required();
    c_grid->add_option("--model", gr.model, "model type (fixes the family grid)")->required();
    c_grid->add_option("--grid-limit", gr.opts.grid_limit, "run only the first N candidates");
    c_grid->add_option("--jobs", gr.opts.jobs, "train up to N candidates concurrently");
    c_grid->add_option("--max-epochs", gr.opts.max_epochs, "epoch budget per candidate");
    c_grid->add_option("--patience", gr.opts.patience, "early-stopping patience");
    c_grid->add_option("--seed", gr.opts.seed, "global seed; candidates derive their own");
    c_grid->add_option("--time-channel", gr.time_channel, "full or causal input time features");

    SelectArgs sel;
    auto* c_select = app.add_subcommand("select", "pick the best grid candidate by composite score");
    c_select->add_option("--grid", sel.grid_dir, "gridsearch output directory")->required();
    c_select->add_option("--out", sel.out, "output directory (defaults to the grid directory)");
    c_select->add_option("--lambda", sel.lambda, "loss-excess weight in the composite score");

    EvaluateArgs ev;
    auto* c_eval = app.add_subcommand("evaluate", "score a checkpoint on a log split");
    add_input_options(c_eval, ev.io, /*required=*/false);
    c_eval->add_option("--cache", ev.cache_path, "sample cache from preprocess (replaces --input)");
    c_eval->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
    c_eval->add_option("--out", ev.out, "output directory")->required();
    c_eval->add_option("--split", ev.split, "train | validation | test | all");
    c_eval->add_option("--f1-mode", ev.f1_mode, "weighted | macro");
    c_eval->add_option("--dataset", ev.dataset_override, "dataset name for reports");

    ReportArgs rep;
    auto* c_report = app.add_subcommand("report", "merge run outputs into summary tables");
    c_report->add_option("--runs", rep.runs, "run directories")->required()->expected(-1);
    c_report->add_option("--out", rep.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    std::string config_path = config_opt->count() > 0 ? config_opt->as<std::string>() : "";
    validate_io.config_file = config_path;
    pre.io.config_file = config_path;
    tr.io.config_file = config_path;
    gr.io.config_file = config_path;
    ev.io.config_file = config_path;

    try {
        if (app.got_subcommand(c_validate)) return cmd_validate(validate_io);
        if (app.got_subcommand(c_pre)) return cmd_preprocess(pre);
        if (app.got_subcommand(c_train)) return cmd_train(tr);
        if (app.got_subcommand(c_grid)) return cmd_gridsearch(gr);
        if (app.got_subcommand(c_select)) return cmd_select(sel);
        if (app.got_subcommand(c_eval)) return cmd_evaluate(ev);
        if (app.got_subcommand(c_report)) return cmd_report(rep);
        return kExitConfig;
    } catch (const ppm::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ppm::TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return kExitTraining;
    } catch (const ppm::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
