#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"
#include "ppm/eventlog.hpp"

namespace ppm::features {

// Per-event temporal features, seconds. waiting is clamped at 0 and is 0
// for the first event; remaining is 0 for the last event.
struct TimeFeatures {
    double duration = 0.0;
    double waiting = 0.0;
    double remaining = 0.0;
};

// z-score parameters fitted on the training split only and applied
// identically to every split and both pipelines.
struct Normalizer {
    struct Stat {
        double mean = 0.0;
        double stddev = 1.0;
        double apply(double x) const { return (x - mean) / stddev; }
        double invert(double z) const { return z * stddev + mean; }
    };
    Stat duration;
    Stat waiting;
    Stat remaining;
};

// One encoded prefix (or n-gram window). All three channels share width and
// alignment; padding sits on the LEFT so position width-1 is event e_k.
// time_prefix entries are (duration, waiting, remaining), normalized;
// target_times is (waiting_{k+1}, duration_{k+1}, remaining_k), normalized.
struct Sample {
    std::string case_id;
    int k = 0;          // prefix length within the boundary-augmented trace
    int valid_len = 0;  // non-pad positions, min(k, width)
    std::vector<int> activity_prefix;
    std::vector<int> role_prefix;
    std::vector<std::array<double, 3>> time_prefix;
    int target_activity = 0;
    int target_role = 0;
    std::array<double, 3> target_times{};

    int width() const { return static_cast<int>(activity_prefix.size()); }
    int pad_positions() const { return width() - valid_len; }
};

// Indices of the target_times / ModelOutput time triple.
inline constexpr int kTimeWaiting = 0;
inline constexpr int kTimeDuration = 1;
inline constexpr int kTimeRemaining = 2;

// Raw (unnormalized) five-task targets for prefix length k, 1 <= k <= n-1.
struct TaskTargets {
    std::string activity;  // of e_{k+1}
    std::string role;
    double duration = 0.0;   // t_e(e_{k+1}) - t_s(e_{k+1})
    double waiting = 0.0;    // t_s(e_{k+1}) - t_e(e_k)
    double remaining = 0.0;  // t_e(e_n) - t_e(e_k)
};
TaskTargets compute_targets(const eventlog::Trace& trace, int k);

// Synthetic «start» before e_1 (both timestamps = t_s(e_1)) and «end» after
// e_n (both = t_e(e_n)); activity and role carry the reserved labels.
eventlog::Trace add_boundary_events(const eventlog::Trace& trace);
eventlog::EventLog augment_with_boundaries(const eventlog::EventLog& log);

// clamped (when given) counts negative waits clamped to 0.
std::vector<TimeFeatures> compute_time_features(const eventlog::Trace& trace, long* clamped = nullptr);

// Population mean/stddev over all events of the given (boundary-augmented)
// log; a stddev below 1e-12 is replaced by 1.
Normalizer fit_normalizer(const eventlog::EventLog& train);

// The Transformer input width: longest boundary-augmented trace length in
// the training split, minus 1.
int compute_max_len(const eventlog::EventLog& augmented_train);

// The input time channel carries (duration, waiting, remaining) per event.
// remaining at position k equals the remaining-time target by definition;
// causal mode zeroes that component so inputs only contain quantities
// observable while the case is still running.
enum class TimeChannel { full, causal };

struct BuildStats {
    long truncated_prefixes = 0;
    long clamped_waits = 0;
};

// Emits n'-1 samples per boundary-augmented trace of length n', left-padded
// to max_len; prefixes longer than max_len keep the most recent events.
std::vector<Sample> build_prefix_samples(const eventlog::EventLog& augmented_log, const Normalizer& norm,
                                         int max_len, BuildStats* stats = nullptr,
                                         TimeChannel channel = TimeChannel::full);

// Same targets per (trace, k); the input is the window of the last
// min(k, g) events, left-padded to exactly g.
std::vector<Sample> build_ngram_samples(const eventlog::EventLog& augmented_log, const Normalizer& norm,
                                        int g, BuildStats* stats = nullptr,
                                        TimeChannel channel = TimeChannel::full);

// ---- sample cache ---------------------------------------------------------
// Columnar binary cache of the three encoded splits, with enough header
// metadata (width, normalizer, vocab hashes) to detect staleness.
struct SampleCache {
    std::string mode;  // "prefix" | "ngram"
    int width = 0;
    TimeChannel channel = TimeChannel::full;
    Normalizer norm;
    std::string dataset;
    std::vector<std::string> activity_labels;
    std::vector<std::string> role_labels;
    std::string activity_vocab_hash;
    std::string role_vocab_hash;
    int activity_vocab_size = 0;
    int role_vocab_size = 0;
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<Sample> test;
};

void save_sample_cache(const std::string& path, const SampleCache& cache);
SampleCache load_sample_cache(const std::string& path);

// json helpers shared by the cache, checkpoints and the CLI
nlohmann::json normalizer_to_json(const Normalizer& norm);
Normalizer normalizer_from_json(const nlohmann::json& j);

}  // namespace ppm::features
