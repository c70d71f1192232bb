#pragma once

#include <array>
#include <string>
#include <vector>

#include "ppm/features.hpp"
#include "ppm/models.hpp"
#include "ppm/training.hpp"

namespace ppm::evaluation {

struct TaskMetrics {
    double nap_f1 = 0.0;
    double nrp_f1 = 0.0;
    double nwtp_mae = 0.0;  // days
    double ndp_mae = 0.0;
    double rtp_mae = 0.0;
};

enum class F1Mode { weighted, macro };

// Per-class one-vs-rest F1 over classes present in the targets; weighted
// averages by target support, macro averages uniformly.
double f1_score(const std::vector<int>& predictions, const std::vector<int>& targets, int classes,
                F1Mode mode = F1Mode::weighted);

// mean |invert(pred) - invert(target)| / 86400 under the given feature's
// z-score parameters
double mae_days(const std::vector<double>& preds_normalized,
                const std::vector<double>& targets_normalized, const features::Normalizer::Stat& stat);

struct CandidateScore {
    int candidate_index = 0;
    long long params = 0;
    double val_loss = 0.0;
    double p_ratio = 0.0;      // params / params(M*)
    double loss_excess = 0.0;  // (loss - loss(M*)) / loss(M*)
    double score = 0.0;        // p + lambda * excess
};

// M* is the argmin of val_loss (ties: smaller params, then lower index);
// scores follow S = p + lambda * excess. Losses must be positive.
std::vector<CandidateScore> composite_scores(
    const std::vector<std::pair<long long, double>>& candidates, double lambda);

// argmin score with the same deterministic tie-breaking
int select_best(const std::vector<CandidateScore>& scores);

struct Selection {
    int candidate_index = 0;  // into the grid rows
    std::vector<CandidateScore> scores;  // over successful candidates only
};

// Composite-score selection over successful grid rows of one model type.
Selection select_model(const std::vector<training::GridResultRow>& grid_results, double lambda = 2.0);

// One line per test sample; times are denormalized days.
struct PredictionRecord {
    std::string case_id;
    int k = 0;
    int predicted_activity = 0;
    int true_activity = 0;
    int predicted_role = 0;
    int true_role = 0;
    std::array<double, 3> predicted_days{};  // (waiting, duration, remaining)
    std::array<double, 3> true_days{};
};

struct EvalOutput {
    TaskMetrics metrics;
    std::vector<PredictionRecord> records;
};

// Frozen-model scoring: argmax over logits for the categorical tasks, the
// three MAEs from the time head components.
EvalOutput evaluate(models::Model& model, const std::vector<features::Sample>& test_samples,
                    const features::Normalizer& norm, F1Mode mode = F1Mode::weighted);

// The same metrics computed from prediction records (the dump round-trip path).
TaskMetrics metrics_from_records(const std::vector<PredictionRecord>& records, int activity_classes,
                                 int role_classes, F1Mode mode = F1Mode::weighted);

std::string predictions_csv(const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> parse_predictions_csv(const std::string& content);

}  // namespace ppm::evaluation
