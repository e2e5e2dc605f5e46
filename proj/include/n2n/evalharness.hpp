#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "n2n/models/student.hpp"
#include "n2n/pipeline.hpp"
#include "n2n/sim/dataset.hpp"

namespace n2n::evalh {

struct MetricRow {
    std::string scenario;  // scenario name or "All"
    std::string method;
    double aoe = 0.0;
    double ade = 0.0;
    double fde = 0.0;
    int64_t n = 0;
};

struct MetricsReport {
    std::vector<MetricRow> rows;
    std::string method;
    std::string dataset_hash;
    std::string checkpoint_id;
    uint64_t seed = 0;
};

// Per-step offline evaluation of a policy over a split: infer with the true
// goal, score aoe/ade/fde against labels, aggregate per scenario plus a
// pooled "All" row (never the mean of the per-scenario rows).
MetricsReport eval_offline(const models::StudentModel& student, const sim::DatasetManifest& data,
                           const std::string& split, const std::string& method, int threads);

struct ComparisonTable {
    std::vector<MetricRow> rows;
    double improvement_pct = 0.0;  // designated (first) method vs best other, All-ADE
    std::string designated_method;
    std::string best_other_method;
};

// The first report is the designated method. All reports must share a
// dataset hash. Improvement = (best_other - ours) / best_other on "All" ADE.
ComparisonTable compare_methods(const std::vector<MetricsReport>& reports);

// CSV emission; eval_offline reports also get a provenance JSON sidecar.
void write_report_csv(const MetricsReport& report, const std::string& path);
void write_comparison_csv(const ComparisonTable& table, const std::string& path);

struct ActivationMap {
    int h = 0;
    int w = 0;
    std::vector<double> grid;  // row-major, min-max normalized into [0, 1]
    std::string source;        // "conv-channel-mean" | "ctx-attention"
};

struct ActivationExport {
    std::vector<ActivationMap> maps;        // one per input frame
    std::vector<double> ctx_attention;      // one weight per state token
};

// Channel-mean of the vision encoder's last feature map per input frame
// (min-max normalized; constant maps become all-zeros) plus the final-layer
// head-averaged ctx->state attention weights.
ActivationExport export_activations(const models::StudentModel& student, const sim::Episode& ep,
                                    int step);

void write_pgm(const ActivationMap& map, const std::string& path);

// Trains {full, no_text, no_pretrain} per seed with otherwise identical
// configs, evaluates each on the eval split, and emits per-seed rows, seed
// means, and the published reference rows.
ComparisonTable run_ablation_suite(const sim::DatasetManifest& data,
                                   const std::vector<uint64_t>& seeds, const Config& cfg,
                                   int threads, std::ostream* progress = nullptr);

}  // namespace n2n::evalh
