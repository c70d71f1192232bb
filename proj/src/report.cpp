#include "ppm/report.hpp"

#include <algorithm>

#include "ppm/text.hpp"

namespace ppm::report {

std::string metrics_table_csv(std::vector<RunSummary> runs) {
    std::sort(runs.begin(), runs.end(), [](const RunSummary& a, const RunSummary& b) {
        return a.dataset != b.dataset ? a.dataset < b.dataset : a.model < b.model;
    });
    using text::format_double;
    std::string out = "log,model,nap_f1,nrp_f1,nwtp_mae_days,ndp_mae_days,rtp_mae_days,parameters\n";
    for (const auto& r : runs) {
        out += text::csv_escape(r.dataset) + ',' + text::csv_escape(r.model) + ',' +
               format_double(r.metrics.nap_f1) + ',' + format_double(r.metrics.nrp_f1) + ',' +
               format_double(r.metrics.nwtp_mae) + ',' + format_double(r.metrics.ndp_mae) + ',' +
               format_double(r.metrics.rtp_mae) + ',' + std::to_string(r.params) + '\n';
    }
    return out;
}

std::vector<ReductionRow> parameter_reductions(const std::vector<RunSummary>& runs) {
    static const std::vector<std::pair<std::string, std::string>> pairs = {
        {"mtlformer", "mtlformer_light"},
        {"mtlformer", "transformer_simple"},
        {"lstm", "lstm_light"},
    };
    std::vector<std::string> datasets;
    for (const auto& r : runs)
        if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end())
            datasets.push_back(r.dataset);
    std::sort(datasets.begin(), datasets.end());

    auto find = [&runs](const std::string& dataset, const std::string& model) -> const RunSummary* {
        for (const auto& r : runs)
            if (r.dataset == dataset && r.model == model) return &r;
        return nullptr;
    };

    std::vector<ReductionRow> rows;
    for (const auto& dataset : datasets)
        for (const auto& [full, light] : pairs) {
            const RunSummary* f = find(dataset, full);
            const RunSummary* l = find(dataset, light);
            if (!f || !l || f->params <= 0) continue;
            ReductionRow row;
            row.dataset = dataset;
            row.full_model = full;
            row.light_model = light;
            row.full_params = f->params;
            row.light_params = l->params;
            row.reduction_percent =
                100.0 * (1.0 - static_cast<double>(l->params) / static_cast<double>(f->params));
            rows.push_back(std::move(row));
        }
    return rows;
}

std::string reduction_summary_csv(const std::vector<ReductionRow>& rows) {
    std::string out = "log,full_model,light_model,full_parameters,light_parameters,reduction_percent\n";
    for (const auto& r : rows) {
        out += text::csv_escape(r.dataset) + ',' + r.full_model + ',' + r.light_model + ',' +
               std::to_string(r.full_params) + ',' + std::to_string(r.light_params) + ',' +
               text::format_double(r.reduction_percent) + '\n';
    }
    return out;
}

}  // namespace ppm::report
