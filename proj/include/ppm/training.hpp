#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ppm/eventlog.hpp"
#include "ppm/features.hpp"
#include "ppm/models.hpp"

namespace ppm::training {

// Trainable log-variance scalars, one per head; they live in the model's
// ParamStore under uncertainty/ and are counted as trainable parameters.
struct UncertaintyWeights {
    nn::Tensor s_activity, s_role, s_time;
};
UncertaintyWeights attach_uncertainty_weights(models::Model& model);

// Combined loss: sum_i exp(-s_i) * L_i + s_i. Gradients flow both into the
// per-head losses and into the s_i.
nn::Tensor combined_loss(const nn::Tensor& l_activity, const nn::Tensor& l_role,
                         const nn::Tensor& l_time, const UncertaintyWeights& weights);
double combined_loss_value(double l_activity, double l_role, double l_time, double s_activity,
                           double s_role, double s_time);

struct TrainConfig {
    double learning_rate = 3e-4;
    int batch_size = 16;
    int max_epochs = 100;
    int patience = 10;
    std::uint64_t seed = 42;
};

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_activity_loss = 0.0;
    double val_role_loss = 0.0;
    double val_time_loss = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;  // 0-based
    double best_validation_loss = std::numeric_limits<double>::infinity();
};

// Per-epoch: seeded shuffle, minibatch forward, three head losses
// (cross-entropy x2, joint MSE), uncertainty-combined scalar, Adam step.
// Validation runs in evaluation mode with the same combination formula and
// the current s_i. Stops after `patience` epochs without improvement and
// leaves the model at its best-validation-epoch state. Non-finite losses
// raise NonFiniteLoss.
TrainHistory train(models::Model& model, const std::vector<features::Sample>& train_samples,
                   const std::vector<features::Sample>& val_samples, const TrainConfig& config);

// ---- grid search ----------------------------------------------------------

struct GridCandidate {
    int index = 0;
    models::ModelConfig model_config;
    TrainConfig train_config;
};

enum class CandidateStatus { ok, failed };

struct GridResultRow {
    GridCandidate candidate;
    long long param_count = 0;
    TrainHistory history;
    CandidateStatus status = CandidateStatus::ok;
    std::string message;
};

struct GridOptions {
    std::uint64_t seed = 42;
    int grid_limit = -1;  // <0 runs the full grid
    int jobs = 1;
    int max_epochs = 100;
    int patience = 10;
    features::TimeChannel time_channel = features::TimeChannel::full;
};

// Full family grid in its documented order. Transformer: embed {16,32} x
// heads {1,2,4 | dividing embed} x ff {32,64,128} x lr {3e-4,6e-4} x batch
// {8,16,32} x layers {1,2,4}. LSTM: lr {5e-4,1e-3,5e-3,3e-4,6e-4} x batch
// {8,16,32,64} x ngram {5,10,15} x hidden {50,25,10}. Candidate seeds derive
// from (seed, index).
std::vector<GridCandidate> enumerate_grid(models::ModelType type, const GridOptions& options);

// Hook for persisting per-candidate artifacts; called once per finished
// candidate, possibly from worker threads (serialize externally if needed).
using CandidateSink = std::function<void(const GridResultRow&, const models::Model&)>;

// Trains an explicit candidate list (grid_search passes the enumerated
// grid); failures are recorded as rows rather than thrown. Results are
// ordered by candidate position regardless of jobs.
std::vector<GridResultRow> run_grid_candidates(const std::vector<GridCandidate>& candidates,
                                               const eventlog::SplitLog& split,
                                               const GridOptions& options,
                                               const CandidateSink& sink = nullptr);

std::vector<GridResultRow> grid_search(models::ModelType type, const eventlog::SplitLog& split,
                                       const GridOptions& options,
                                       const CandidateSink& sink = nullptr);

// Grid results as a flat CSV table (no timing columns, so identical runs
// serialize identically).
std::string grid_results_csv(const std::vector<GridResultRow>& rows);
std::string history_csv(const TrainHistory& history);

}  // namespace ppm::training
