#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ppm/eventlog.hpp"
#include "ppm/features.hpp"
#include "ppm/nn/rng.hpp"

namespace testsupport {

using ppm::eventlog::Event;
using ppm::eventlog::EventLog;
using ppm::eventlog::Trace;
using ppm::eventlog::Vocabulary;

// Random log: trace count in [min_traces, max_traces], lengths 1..8,
// activities/roles from small pools, occasional overlapping events (so wait
// clamping is exercised) but nondecreasing ends within a trace.
inline EventLog random_log(ppm::nn::Rng& rng, int min_traces, int max_traces) {
    int n_traces = min_traces + static_cast<int>(rng.below(max_traces - min_traces + 1));
    auto act_vocab = std::make_shared<Vocabulary>(Vocabulary::with_reserved());
    auto role_vocab = std::make_shared<Vocabulary>(Vocabulary::with_reserved());

    EventLog log;
    for (int t = 0; t < n_traces; ++t) {
        Trace trace;
        trace.case_id = "case" + std::to_string(t);
        int len = 1 + static_cast<int>(rng.below(8));
        double start = 1.6e9 + t * 7200.0 + std::floor(rng.uniform(0, 3600));
        double prev_end = start;
        for (int i = 0; i < len; ++i) {
            Event e;
            e.case_id = trace.case_id;
            e.activity = "a" + std::to_string(rng.below(6));
            e.role = "r" + std::to_string(rng.below(4));
            if (i == 0) {
                e.start = start;
            } else {
                // sometimes overlap the previous event to produce negative waits
                double gap = rng.uniform() < 0.3 ? -rng.uniform(0, 600) : rng.uniform(0, 1800);
                e.start = std::max(trace.events.back().start, prev_end + std::floor(gap));
            }
            double dur = std::floor(rng.uniform(0, 3600));
            e.end = std::max(prev_end, e.start + dur);  // ends stay nondecreasing
            prev_end = e.end;
            act_vocab->add(e.activity);
            role_vocab->add(e.role);
            trace.events.push_back(std::move(e));
        }
        log.traces.push_back(std::move(trace));
    }
    log.activity_vocab = std::move(act_vocab);
    log.role_vocab = std::move(role_vocab);
    return log;
}

// Deterministic 6-activity process: every case runs the same fixed activity
// sequence, roles are a fixed function of the activity, durations and waits
// are fixed per position. Fully predictable next activity/role/time.
inline EventLog deterministic_process_log(int n_traces) {
    static const char* acts[6] = {"register", "check", "approve", "pack", "ship", "bill"};
    static const char* roles[6] = {"clerk", "clerk", "manager", "warehouse", "warehouse", "finance"};
    static const double durations[6] = {600, 900, 300, 1200, 450, 750};

    auto act_vocab = std::make_shared<Vocabulary>(Vocabulary::with_reserved());
    auto role_vocab = std::make_shared<Vocabulary>(Vocabulary::with_reserved());
    for (int i = 0; i < 6; ++i) {
        act_vocab->add(acts[i]);
        role_vocab->add(roles[i]);
    }

    EventLog log;
    for (int t = 0; t < n_traces; ++t) {
        Trace trace;
        trace.case_id = "case" + std::to_string(t);
        double clock = 1.6e9 + t * 3600.0;
        for (int i = 0; i < 6; ++i) {
            Event e;
            e.case_id = trace.case_id;
            e.activity = acts[i];
            e.role = roles[i];
            e.start = clock;
            e.end = clock + durations[i];
            clock = e.end + 300.0;  // fixed wait
            trace.events.push_back(std::move(e));
        }
        log.traces.push_back(std::move(trace));
    }
    log.activity_vocab = std::move(act_vocab);
    log.role_vocab = std::move(role_vocab);
    return log;
}

// Small encoded fixture for overfit/wiring tests.
inline std::vector<ppm::features::Sample> fixture_samples(int count, int width, bool for_ngram,
                                                          ppm::features::Normalizer* norm_out = nullptr) {
    EventLog log = deterministic_process_log(8);
    EventLog aug = ppm::features::augment_with_boundaries(log);
    ppm::features::Normalizer norm = ppm::features::fit_normalizer(aug);
    if (norm_out) *norm_out = norm;
    std::vector<ppm::features::Sample> samples =
        for_ngram ? ppm::features::build_ngram_samples(aug, norm, width)
                  : ppm::features::build_prefix_samples(aug, norm, width);
    if (static_cast<int>(samples.size()) > count) samples.resize(count);
    return samples;
}

}  // namespace testsupport
