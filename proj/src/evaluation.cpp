#include "ppm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ppm/text.hpp"

namespace ppm::evaluation {

double f1_score(const std::vector<int>& predictions, const std::vector<int>& targets, int classes,
                F1Mode mode) {
    if (predictions.size() != targets.size())
        throw LengthMismatch("f1_score: " + std::to_string(predictions.size()) + " predictions vs " +
                             std::to_string(targets.size()) + " targets");
    if (predictions.empty()) throw LengthMismatch("f1_score: empty input");
    for (std::size_t i = 0; i < targets.size(); ++i)
        if (predictions[i] < 0 || predictions[i] >= classes || targets[i] < 0 || targets[i] >= classes)
            throw IndexOutOfRange("f1_score: label outside [0," + std::to_string(classes) + ")");

    std::vector<long> tp(classes, 0), fp(classes, 0), fn(classes, 0), support(classes, 0);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        ++support[targets[i]];
        if (predictions[i] == targets[i]) {
            ++tp[targets[i]];
        } else {
            ++fp[predictions[i]];
            ++fn[targets[i]];
        }
    }

    double sum = 0.0;
    long total_support = 0;
    int present = 0;
    for (int c = 0; c < classes; ++c) {
        if (support[c] == 0) continue;
        ++present;
        total_support += support[c];
        double denom = 2.0 * tp[c] + fp[c] + fn[c];
        double f1 = denom == 0.0 ? 0.0 : 2.0 * tp[c] / denom;
        sum += mode == F1Mode::weighted ? f1 * support[c] : f1;
    }
    return mode == F1Mode::weighted ? sum / total_support : sum / present;
}

double mae_days(const std::vector<double>& preds_normalized,
                const std::vector<double>& targets_normalized,
                const features::Normalizer::Stat& stat) {
    if (preds_normalized.size() != targets_normalized.size())
        throw LengthMismatch("mae_days: " + std::to_string(preds_normalized.size()) + " vs " +
                             std::to_string(targets_normalized.size()));
    if (preds_normalized.empty()) throw LengthMismatch("mae_days: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < preds_normalized.size(); ++i)
        sum += std::abs(stat.invert(preds_normalized[i]) - stat.invert(targets_normalized[i]));
    return sum / preds_normalized.size() / 86400.0;
}

std::vector<CandidateScore> composite_scores(
    const std::vector<std::pair<long long, double>>& candidates, double lambda) {
    if (candidates.empty()) throw EmptyCandidateSet();
    for (const auto& [params, loss] : candidates)
        if (!(loss > 0.0)) throw NonPositiveLoss(loss);

    // M* = argmin loss; ties by smaller params, then lower index
    int star = 0;
    for (int i = 1; i < static_cast<int>(candidates.size()); ++i) {
        const auto& [pi, li] = candidates[i];
        const auto& [ps, ls] = candidates[star];
        if (li < ls || (li == ls && (pi < ps || (pi == ps && i < star)))) star = i;
    }
    double star_params = static_cast<double>(candidates[star].first);
    double star_loss = candidates[star].second;

    std::vector<CandidateScore> out(candidates.size());
    for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
        CandidateScore& s = out[i];
        s.candidate_index = i;
        s.params = candidates[i].first;
        s.val_loss = candidates[i].second;
        s.p_ratio = static_cast<double>(s.params) / star_params;
        s.loss_excess = (s.val_loss - star_loss) / star_loss;
        s.score = s.p_ratio + lambda * s.loss_excess;
    }
    return out;
}

int select_best(const std::vector<CandidateScore>& scores) {
    if (scores.empty()) throw EmptyCandidateSet();
    int best = 0;
    for (int i = 1; i < static_cast<int>(scores.size()); ++i) {
        const CandidateScore& a = scores[i];
        const CandidateScore& b = scores[best];
        if (a.score < b.score || (a.score == b.score && (a.params < b.params ||
                                                         (a.params == b.params && i < best))))
            best = i;
    }
    return best;
}

Selection select_model(const std::vector<training::GridResultRow>& grid_results, double lambda) {
    std::vector<std::pair<long long, double>> ok_candidates;
    std::vector<int> row_of;  // position in grid_results per ok candidate
    for (int i = 0; i < static_cast<int>(grid_results.size()); ++i) {
        const auto& r = grid_results[i];
        if (r.status != training::CandidateStatus::ok) continue;
        ok_candidates.emplace_back(r.param_count, r.history.best_validation_loss);
        row_of.push_back(i);
    }
    if (ok_candidates.empty()) throw AllCandidatesFailed();

    Selection sel;
    sel.scores = composite_scores(ok_candidates, lambda);
    // keep the original candidate indices visible in the score table
    for (std::size_t i = 0; i < sel.scores.size(); ++i)
        sel.scores[i].candidate_index = grid_results[row_of[i]].candidate.index;
    int best = select_best(sel.scores);
    sel.candidate_index = row_of[best];
    return sel;
}

EvalOutput evaluate(models::Model& model, const std::vector<features::Sample>& test_samples,
                    const features::Normalizer& norm, F1Mode mode) {
    if (test_samples.empty()) throw EmptyTestSet();
    std::vector<models::ModelOutput> outputs = model.predict(test_samples);

    EvalOutput out;
    out.records.reserve(test_samples.size());
    for (std::size_t i = 0; i < test_samples.size(); ++i) {
        const auto& s = test_samples[i];
        const auto& o = outputs[i];
        PredictionRecord rec;
        rec.case_id = s.case_id;
        rec.k = s.k;
        rec.predicted_activity = static_cast<int>(
            std::max_element(o.activity_logits.begin(), o.activity_logits.end()) -
            o.activity_logits.begin());
        rec.true_activity = s.target_activity;
        rec.predicted_role = static_cast<int>(
            std::max_element(o.role_logits.begin(), o.role_logits.end()) - o.role_logits.begin());
        rec.true_role = s.target_role;
        const features::Normalizer::Stat* stats[3] = {&norm.waiting, &norm.duration, &norm.remaining};
        for (int c = 0; c < 3; ++c) {
            rec.predicted_days[c] = stats[c]->invert(o.time_preds[c]) / 86400.0;
            rec.true_days[c] = stats[c]->invert(s.target_times[c]) / 86400.0;
        }
        out.records.push_back(std::move(rec));
    }
    out.metrics = metrics_from_records(out.records, model.activity_vocab_size(),
                                       model.role_vocab_size(), mode);
    return out;
}

TaskMetrics metrics_from_records(const std::vector<PredictionRecord>& records, int activity_classes,
                                 int role_classes, F1Mode mode) {
    if (records.empty()) throw EmptyTestSet();
    std::vector<int> pa, ta, pr, tr;
    pa.reserve(records.size());
    std::array<double, 3> mae_sum{0.0, 0.0, 0.0};
    for (const auto& r : records) {
        pa.push_back(r.predicted_activity);
        ta.push_back(r.true_activity);
        pr.push_back(r.predicted_role);
        tr.push_back(r.true_role);
        for (int c = 0; c < 3; ++c) mae_sum[c] += std::abs(r.predicted_days[c] - r.true_days[c]);
    }
    TaskMetrics m;
    m.nap_f1 = f1_score(pa, ta, activity_classes, mode);
    m.nrp_f1 = f1_score(pr, tr, role_classes, mode);
    m.nwtp_mae = mae_sum[features::kTimeWaiting] / records.size();
    m.ndp_mae = mae_sum[features::kTimeDuration] / records.size();
    m.rtp_mae = mae_sum[features::kTimeRemaining] / records.size();
    return m;
}

std::string predictions_csv(const std::vector<PredictionRecord>& records) {
    using text::format_double;
    std::string out =
        "case_id,k,predicted_activity,true_activity,predicted_role,true_role,"
        "predicted_waiting_days,true_waiting_days,predicted_duration_days,true_duration_days,"
        "predicted_remaining_days,true_remaining_days\n";
    for (const auto& r : records) {
        out += text::csv_escape(r.case_id) + ',' + std::to_string(r.k) + ',' +
               std::to_string(r.predicted_activity) + ',' + std::to_string(r.true_activity) + ',' +
               std::to_string(r.predicted_role) + ',' + std::to_string(r.true_role);
        for (int c = 0; c < 3; ++c)
            out += ',' + format_double(r.predicted_days[c]) + ',' + format_double(r.true_days[c]);
        out += '\n';
    }
    return out;
}

std::vector<PredictionRecord> parse_predictions_csv(const std::string& content) {
    std::vector<PredictionRecord> records;
    std::istringstream in(content);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    field += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else {
                field += c;
            }
        }
        fields.push_back(std::move(field));
        if (fields.size() != 12) throw DataError("prediction dump: malformed row");
        PredictionRecord r;
        r.case_id = fields[0];
        r.k = std::stoi(fields[1]);
        r.predicted_activity = std::stoi(fields[2]);
        r.true_activity = std::stoi(fields[3]);
        r.predicted_role = std::stoi(fields[4]);
        r.true_role = std::stoi(fields[5]);
        for (int c = 0; c < 3; ++c) {
            r.predicted_days[c] = std::stod(fields[6 + 2 * c]);
            r.true_days[c] = std::stod(fields[7 + 2 * c]);
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace ppm::evaluation
