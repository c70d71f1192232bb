#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "ppm/evaluation.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace ppm::evaluation;
using ppm::features::Normalizer;

TEST_CASE("f1_score examples") {
    SUBCASE("perfect predictions") {
        CHECK(f1_score({0, 1, 2, 1}, {0, 1, 2, 1}, 3) == 1.0);
    }
    SUBCASE("all predictions one class, targets uniform over two classes") {
        // per-class F1 {2/3, 0}, supports equal -> weighted 1/3
        std::vector<int> preds(10, 0);
        std::vector<int> targets;
        for (int i = 0; i < 5; ++i) targets.push_back(0);
        for (int i = 0; i < 5; ++i) targets.push_back(1);
        CHECK(f1_score(preds, targets, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("binary case agrees with the confusion-matrix oracle on 100 random vectors") {
        ppm::nn::Rng rng(7);
        for (int rep = 0; rep < 100; ++rep) {
            int n = 5 + static_cast<int>(rng.below(60));
            int classes = 2 + static_cast<int>(rng.below(5));
            std::vector<int> preds(n), targets(n);
            for (int i = 0; i < n; ++i) {
                preds[i] = static_cast<int>(rng.below(classes));
                targets[i] = static_cast<int>(rng.below(classes));
            }
            REQUIRE(f1_score(preds, targets, classes, F1Mode::weighted) ==
                    testsupport::f1_oracle(preds, targets, classes, true));
            REQUIRE(f1_score(preds, targets, classes, F1Mode::macro) ==
                    testsupport::f1_oracle(preds, targets, classes, false));
        }
    }
    SUBCASE("bounds and permutation invariance") {
        ppm::nn::Rng rng(9);
        std::vector<int> preds, targets;
        for (int i = 0; i < 40; ++i) {
            preds.push_back(static_cast<int>(rng.below(4)));
            targets.push_back(static_cast<int>(rng.below(4)));
        }
        double f = f1_score(preds, targets, 4);
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        std::vector<int> p2(preds.rbegin(), preds.rend()), t2(targets.rbegin(), targets.rend());
        CHECK(f1_score(p2, t2, 4) == f);
    }
    SUBCASE("length mismatch") {
        CHECK_THROWS_AS(f1_score({0, 1}, {0}, 2), ppm::LengthMismatch);
    }
}

TEST_CASE("mae_days examples") {
    Normalizer::Stat stat{0.0, 86400.0};
    SUBCASE("pred == target") {
        CHECK(mae_days({0.5, -1.0}, {0.5, -1.0}, stat) == 0.0);
    }
    SUBCASE("one pair off by exactly 86400 seconds -> 1 day") {
        CHECK(mae_days({1.0}, {0.0}, stat) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("random batches match the independent oracle within 1e-12") {
        ppm::nn::Rng rng(11);
        Normalizer::Stat s{1234.5, 777.25};
        for (int rep = 0; rep < 50; ++rep) {
            int n = 1 + static_cast<int>(rng.below(40));
            std::vector<double> p(n), t(n);
            for (int i = 0; i < n; ++i) {
                p[i] = rng.uniform(-5, 5);
                t[i] = rng.uniform(-5, 5);
            }
            double got = mae_days(p, t, s);
            double expected = testsupport::mae_days_oracle(p, t, s.mean, s.stddev);
            CHECK(std::abs(got - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
            CHECK(got >= 0.0);
        }
    }
    SUBCASE("length mismatch") {
        CHECK_THROWS_AS(mae_days({0.1}, {0.1, 0.2}, stat), ppm::LengthMismatch);
    }
}

TEST_CASE("composite_scores examples") {
    SUBCASE("single candidate scores exactly 1") {
        auto scores = composite_scores({{12345, 0.5}}, 2.0);
        REQUIRE(scores.size() == 1);
        CHECK(scores[0].p_ratio == 1.0);
        CHECK(scores[0].loss_excess == 0.0);
        CHECK(scores[0].score == 1.0);
    }
    SUBCASE("the 100k/1.0 vs 50k/1.1 fixture at lambda=2") {
        auto scores = composite_scores({{100000, 1.0}, {50000, 1.1}}, 2.0);
        CHECK(scores[0].score == 1.0);  // M*
        CHECK(scores[1].p_ratio == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(scores[1].loss_excess == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(scores[1].score == doctest::Approx(0.7).epsilon(1e-12));
        CHECK(select_best(scores) == 1);  // the smaller model wins
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(composite_scores({}, 2.0), ppm::EmptyCandidateSet);
        CHECK_THROWS_AS(composite_scores({{10, 0.0}}, 2.0), ppm::NonPositiveLoss);
        CHECK_THROWS_AS(composite_scores({{10, -1.0}}, 2.0), ppm::NonPositiveLoss);
    }
    SUBCASE("selection agrees with the exhaustive oracle on random sets") {
        ppm::nn::Rng rng(13);
        for (int rep = 0; rep < 100; ++rep) {
            int n = 1 + static_cast<int>(rng.below(50));
            std::vector<std::pair<long long, double>> cands(n);
            for (auto& [p, l] : cands) {
                p = 100 + static_cast<long long>(rng.below(200000));
                l = rng.uniform(0.01, 5.0);
            }
            double lambda = rng.uniform(0.0, 4.0);
            auto scores = composite_scores(cands, lambda);
            std::vector<double> oracle_scores;
            int oracle = testsupport::composite_select_oracle(cands, lambda, &oracle_scores);
            for (int i = 0; i < n; ++i)
                CHECK(scores[i].score == doctest::Approx(oracle_scores[i]).epsilon(1e-12));
            CHECK(select_best(scores) == oracle);
        }
    }
    SUBCASE("scale invariance: doubling every loss changes nothing") {
        ppm::nn::Rng rng(17);
        std::vector<std::pair<long long, double>> cands(20);
        for (auto& [p, l] : cands) {
            p = 100 + static_cast<long long>(rng.below(100000));
            l = rng.uniform(0.1, 3.0);
        }
        auto base = composite_scores(cands, 2.0);
        auto scaled_cands = cands;
        for (auto& [p, l] : scaled_cands) l *= 2.0;  // exact in floating point
        auto scaled = composite_scores(scaled_cands, 2.0);
        for (std::size_t i = 0; i < cands.size(); ++i) {
            REQUIRE(base[i].p_ratio == scaled[i].p_ratio);
            REQUIRE(base[i].loss_excess == scaled[i].loss_excess);
            REQUIRE(base[i].score == scaled[i].score);
        }
        CHECK(select_best(base) == select_best(scaled));
    }
    SUBCASE("dominated candidates are never selected") {
        ppm::nn::Rng rng(19);
        for (int rep = 0; rep < 50; ++rep) {
            int n = 2 + static_cast<int>(rng.below(30));
            std::vector<std::pair<long long, double>> cands(n);
            for (auto& [p, l] : cands) {
                p = 100 + static_cast<long long>(rng.below(100000));
                l = rng.uniform(0.01, 5.0);
            }
            auto scores = composite_scores(cands, rng.uniform(0.1, 4.0));
            int chosen = select_best(scores);
            for (int i = 0; i < n; ++i) {
                bool dominates = cands[i].first < cands[chosen].first &&
                                 cands[i].second < cands[chosen].second;
                CHECK(!dominates);
            }
        }
    }
    SUBCASE("S of M* is always 1") {
        ppm::nn::Rng rng(23);
        for (int rep = 0; rep < 50; ++rep) {
            int n = 1 + static_cast<int>(rng.below(20));
            std::vector<std::pair<long long, double>> cands(n);
            for (auto& [p, l] : cands) {
                p = 1 + static_cast<long long>(rng.below(1000));
                l = rng.uniform(0.5, 2.0);
            }
            auto scores = composite_scores(cands, 2.0);
            int star = 0;
            for (int i = 1; i < n; ++i)
                if (scores[i].loss_excess == 0.0 && scores[i].p_ratio == 1.0) star = i;
            CHECK(scores[star].score == 1.0);
        }
    }
}

namespace {

ppm::training::GridResultRow make_row(int index, long long params, double loss, bool ok = true) {
    ppm::training::GridResultRow r;
    r.candidate.index = index;
    r.param_count = params;
    r.history.best_validation_loss = loss;
    r.history.best_epoch = 0;
    r.history.epochs.push_back({loss, loss, loss / 3, loss / 3, loss / 3, 0.0});
    r.status = ok ? ppm::training::CandidateStatus::ok : ppm::training::CandidateStatus::failed;
    return r;
}

}  // namespace

TEST_CASE("select_model") {
    SUBCASE("equal params: picks the lowest validation loss") {
        std::vector rows = {make_row(0, 500, 1.2), make_row(1, 500, 0.9), make_row(2, 500, 1.0)};
        CHECK(select_model(rows, 2.0).candidate_index == 1);
    }
    SUBCASE("equal losses: picks the smallest model") {
        std::vector rows = {make_row(0, 900, 1.0), make_row(1, 300, 1.0), make_row(2, 700, 1.0)};
        CHECK(select_model(rows, 2.0).candidate_index == 1);
    }
    SUBCASE("lambda=0 reduces the score to the parameter ratio") {
        std::vector rows = {make_row(0, 900, 0.1), make_row(1, 200, 5.0), make_row(2, 700, 0.2)};
        CHECK(select_model(rows, 0.0).candidate_index == 1);
    }
    SUBCASE("failed rows are excluded; all failed is an error") {
        std::vector rows = {make_row(0, 100, 0.5, false), make_row(1, 900, 1.0)};
        CHECK(select_model(rows, 2.0).candidate_index == 1);
        std::vector all_failed = {make_row(0, 100, 0.5, false)};
        CHECK_THROWS_AS(select_model(all_failed, 2.0), ppm::AllCandidatesFailed);
    }
}

TEST_CASE("oracle records: perfect predictions give F1=1 and MAE=0") {
    std::vector<PredictionRecord> records;
    ppm::nn::Rng rng(29);
    for (int i = 0; i < 30; ++i) {
        PredictionRecord r;
        r.case_id = "c" + std::to_string(i % 5);
        r.k = i % 4 + 1;
        r.true_activity = static_cast<int>(rng.below(6));
        r.predicted_activity = r.true_activity;
        r.true_role = static_cast<int>(rng.below(4));
        r.predicted_role = r.true_role;
        for (int c = 0; c < 3; ++c) {
            r.true_days[c] = rng.uniform(-3, 3);
            r.predicted_days[c] = r.true_days[c];
        }
        records.push_back(std::move(r));
    }
    TaskMetrics m = metrics_from_records(records, 6, 4);
    CHECK(m.nap_f1 == 1.0);
    CHECK(m.nrp_f1 == 1.0);
    CHECK(m.nwtp_mae == 0.0);
    CHECK(m.ndp_mae == 0.0);
    CHECK(m.rtp_mae == 0.0);
}

TEST_CASE("evaluate: idempotent, and the prediction dump reproduces the metrics") {
    using namespace ppm::models;
    auto raw = testsupport::deterministic_process_log(10);
    auto aug = ppm::features::augment_with_boundaries(raw);
    auto norm = ppm::features::fit_normalizer(aug);
    auto samples = ppm::features::build_ngram_samples(aug, norm, 5);

    ModelConfig c;
    c.model_type = ModelType::lstm_light;
    c.hidden_size = 10;
    c.ngram = 5;
    Model m = Model::build(c, raw.activity_vocab->size(), raw.role_vocab->size(), 5, 3);

    EvalOutput a = evaluate(m, samples, norm);
    EvalOutput b = evaluate(m, samples, norm);
    REQUIRE(a.metrics.nap_f1 == b.metrics.nap_f1);
    REQUIRE(a.metrics.nwtp_mae == b.metrics.nwtp_mae);
    REQUIRE(a.metrics.rtp_mae == b.metrics.rtp_mae);

    // round trip through the CSV dump
    std::string csv = predictions_csv(a.records);
    auto parsed = parse_predictions_csv(csv);
    REQUIRE(parsed.size() == a.records.size());
    TaskMetrics again =
        metrics_from_records(parsed, raw.activity_vocab->size(), raw.role_vocab->size());
    CHECK(again.nap_f1 == a.metrics.nap_f1);
    CHECK(again.nrp_f1 == a.metrics.nrp_f1);
    CHECK(again.nwtp_mae == a.metrics.nwtp_mae);
    CHECK(again.ndp_mae == a.metrics.ndp_mae);
    CHECK(again.rtp_mae == a.metrics.rtp_mae);

    CHECK_THROWS_AS(evaluate(m, {}, norm), ppm::EmptyTestSet);
}
