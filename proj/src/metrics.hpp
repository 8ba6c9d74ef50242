#pragma once

#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "dataset.hpp"

namespace lc {

/// MAE = (1/N) sum |t_i - c_i|.
double mae(const std::vector<double>& truths, const std::vector<double>& preds);

/// MSE = sqrt((1/N) sum (t_i - c_i)^2). By formula this is a root mean
/// squared error; the conventional name from the counting literature is kept.
double mse(const std::vector<double>& truths, const std::vector<double>& preds);

struct EvalRow {
    std::string sequence;
    int n = 0;
    double mae = 0.0;
    double mse = 0.0;
};

struct EvalResult {
    std::vector<EvalRow> per_sequence;  // first-appearance order of the manifest
    EvalRow overall;                    // all test images pooled
    std::vector<double> truths, preds;  // pooled, in record order
};

/// Runs whole-image prediction over the manifest's test records. Ground truth
/// is the total of the rendered density map (fractional near borders), not
/// the raw dot count, matching how the regression targets are defined.
EvalResult evaluate(NetworkModel& model, const CheckpointMeta& meta,
                    const DatasetManifest& manifest, int s_e);

/// Machine-readable report: header "sequence,n,mae,mse", one row per
/// sequence, then an "overall" row. Full precision; rounding happens only in
/// the display table.
void write_eval_report(const EvalResult& result, const std::string& path);

/// Display table with one decimal, like the usual benchmark tables.
std::string format_eval_table(const EvalResult& result);

}  // namespace lc
