#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ppm/eventlog.hpp"
#include "ppm/features.hpp"

namespace testsupport {

// Independent brute-force prefix enumerator. Re-implements boundary
// insertion and the five target definitions directly from the event tuples;
// deliberately shares no code with the feature pipeline it checks.
struct EnumeratedSample {
    std::string case_id;
    int k = 0;
    int activity_idx = 0;
    int role_idx = 0;
    double waiting_norm = 0.0;
    double duration_norm = 0.0;
    double remaining_norm = 0.0;
};

inline std::vector<EnumeratedSample> enumerate_prefix_targets(const ppm::eventlog::EventLog& raw_log,
                                                              const ppm::features::Normalizer& norm) {
    using ppm::eventlog::Event;
    std::vector<EnumeratedSample> out;
    for (const auto& trace : raw_log.traces) {
        // boundary-augmented copy, built by hand
        std::vector<Event> ev;
        ev.push_back({trace.case_id, ppm::eventlog::Vocabulary::kStart,
                      ppm::eventlog::Vocabulary::kStart, trace.events.front().start,
                      trace.events.front().start});
        for (const auto& e : trace.events) ev.push_back(e);
        ev.push_back({trace.case_id, ppm::eventlog::Vocabulary::kEnd, ppm::eventlog::Vocabulary::kEnd,
                      trace.events.back().end, trace.events.back().end});

        int n = static_cast<int>(ev.size());
        for (int k = 1; k <= n - 1; ++k) {
            const Event& nxt = ev[k];      // e_{k+1}, 0-based
            const Event& cur = ev[k - 1];  // e_k
            EnumeratedSample s;
            s.case_id = trace.case_id;
            s.k = k;
            s.activity_idx = raw_log.activity_vocab->index_of(nxt.activity);
            s.role_idx = raw_log.role_vocab->index_of(nxt.role);
            double waiting = nxt.start - cur.end;
            if (waiting < 0.0) waiting = 0.0;  // pipeline clamp rule
            double duration = nxt.end - nxt.start;
            double remaining = ev[n - 1].end - cur.end;
            s.waiting_norm = (waiting - norm.waiting.mean) / norm.waiting.stddev;
            s.duration_norm = (duration - norm.duration.mean) / norm.duration.stddev;
            s.remaining_norm = (remaining - norm.remaining.mean) / norm.remaining.stddev;
            out.push_back(std::move(s));
        }
    }
    return out;
}

// Confusion-matrix F1 oracle: builds the full C x C matrix first, then
// derives per-class precision/recall/F1 from its rows and columns.
inline double f1_oracle(const std::vector<int>& preds, const std::vector<int>& targets, int classes,
                        bool weighted) {
    std::vector<std::vector<long>> cm(classes, std::vector<long>(classes, 0));
    for (std::size_t i = 0; i < preds.size(); ++i) ++cm[targets[i]][preds[i]];

    double sum = 0.0;
    long total = 0;
    int present = 0;
    for (int c = 0; c < classes; ++c) {
        long support = 0, predicted = 0;
        for (int j = 0; j < classes; ++j) {
            support += cm[c][j];
            predicted += cm[j][c];
        }
        if (support == 0) continue;
        ++present;
        total += support;
        long tp = cm[c][c];
        long fp = predicted - tp;
        long fn = support - tp;
        double denom = 2.0 * tp + fp + fn;
        double f1 = denom == 0.0 ? 0.0 : 2.0 * tp / denom;
        sum += weighted ? f1 * support : f1;
    }
    return weighted ? sum / total : sum / present;
}

inline double mae_days_oracle(const std::vector<double>& preds, const std::vector<double>& targets,
                              double mean, double stddev) {
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        double p = preds[i] * stddev + mean;
        double t = targets[i] * stddev + mean;
        acc += std::abs(p - t);
    }
    return acc / preds.size() / 86400.0;
}

// Exhaustive composite-score selection: computes S for every candidate from
// scratch and scans for the minimum with the documented tie rules.
inline int composite_select_oracle(const std::vector<std::pair<long long, double>>& candidates,
                                   double lambda, std::vector<double>* scores_out = nullptr) {
    std::size_t star = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        if (candidates[i].second < candidates[star].second ||
            (candidates[i].second == candidates[star].second &&
             candidates[i].first < candidates[star].first))
            star = i;
    }
    std::vector<double> scores(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double p = static_cast<double>(candidates[i].first) / candidates[star].first;
        double l = (candidates[i].second - candidates[star].second) / candidates[star].second;
        scores[i] = p + lambda * l;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] < scores[best] ||
            (scores[i] == scores[best] && candidates[i].first < candidates[best].first))
            best = i;
    }
    if (scores_out) *scores_out = scores;
    return static_cast<int>(best);
}

}  // namespace testsupport
