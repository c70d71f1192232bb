#pragma once

#include <string>
#include <vector>

#include "ppm/evaluation.hpp"

namespace ppm::report {

struct RunSummary {
    std::string dataset;
    std::string model;
    evaluation::TaskMetrics metrics;
    long long params = 0;
};

// Rows (log, model), columns (NAP, NRP, NWTP, NDP, RTP, Parameters),
// sorted by dataset then model for stable output.
std::string metrics_table_csv(std::vector<RunSummary> runs);

struct ReductionRow {
    std::string dataset;
    std::string full_model;
    std::string light_model;
    long long full_params = 0;
    long long light_params = 0;
    double reduction_percent = 0.0;  // 100 * (1 - light/full)
};

// Pairs each full model with its reduced variants present in the same
// dataset: mtlformer -> {mtlformer_light, transformer_simple},
// lstm -> {lstm_light}.
std::vector<ReductionRow> parameter_reductions(const std::vector<RunSummary>& runs);
std::string reduction_summary_csv(const std::vector<ReductionRow>& rows);

}  // namespace ppm::report
