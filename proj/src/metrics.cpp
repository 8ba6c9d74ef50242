#include "metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "infer.hpp"

namespace lc {

double mae(const std::vector<double>& truths, const std::vector<double>& preds) {
    if (truths.empty()) raise_usage("mae: empty input");
    if (truths.size() != preds.size())
        raise_usage("mae: " + std::to_string(truths.size()) + " truths vs " +
                    std::to_string(preds.size()) + " predictions");
    double s = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) s += std::fabs(truths[i] - preds[i]);
    return s / double(truths.size());
}

double mse(const std::vector<double>& truths, const std::vector<double>& preds) {
    if (truths.empty()) raise_usage("mse: empty input");
    if (truths.size() != preds.size())
        raise_usage("mse: " + std::to_string(truths.size()) + " truths vs " +
                    std::to_string(preds.size()) + " predictions");
    double s = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const double d = truths[i] - preds[i];
        s += d * d;
    }
    return std::sqrt(s / double(truths.size()));
}

EvalResult evaluate(NetworkModel& model, const CheckpointMeta& meta,
                    const DatasetManifest& manifest, int s_e) {
    std::vector<const ImageRecord*> test_records;
    for (const auto& rec : manifest.records)
        if (rec.split == Split::test) test_records.push_back(&rec);
    if (test_records.empty()) raise_data("evaluate: manifest has no test records");

    SamplingConfig prep;
    prep.r = meta.r;
    prep.sigma = meta.sigma;
    prep.resize_factor = meta.resize_factor;

    EvalResult result;
    std::vector<std::string> seq_order;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_seq;

    for (const ImageRecord* rec : test_records) {
        const PreparedImage prepared = prepare_image(*rec, prep);
        const DensityMap density =
            render_density(prepared.dots, prepared.image.h, prepared.image.w, meta.sigma);
        const double truth = total_count(density);

        Image original = read_ppm(rec->image_path);
        const double pred = predict_image(model, meta, original, s_e).count;

        if (by_seq.find(rec->sequence) == by_seq.end()) seq_order.push_back(rec->sequence);
        by_seq[rec->sequence].first.push_back(truth);
        by_seq[rec->sequence].second.push_back(pred);
        result.truths.push_back(truth);
        result.preds.push_back(pred);
    }

    for (const auto& seq : seq_order) {
        const auto& [t, p] = by_seq[seq];
        result.per_sequence.push_back({seq, int(t.size()), mae(t, p), mse(t, p)});
    }
    result.overall = {"overall", int(result.truths.size()), mae(result.truths, result.preds),
                      mse(result.truths, result.preds)};
    return result;
}

void write_eval_report(const EvalResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise_data("cannot write evaluation report " + path);
    out << "sequence,n,mae,mse\n";
    char buf[128];
    for (const auto& row : result.per_sequence) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.9g,%.9g\n", row.sequence.c_str(), row.n, row.mae,
                      row.mse);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "overall,%d,%.9g,%.9g\n", result.overall.n, result.overall.mae,
                  result.overall.mse);
    out << buf;
    if (!out) raise_data("failed writing evaluation report " + path);
}

std::string format_eval_table(const EvalResult& result) {
    std::string s = "sequence          n     MAE     MSE\n";
    char buf[128];
    for (const auto& row : result.per_sequence) {
        std::snprintf(buf, sizeof(buf), "%-15s %4d %7.1f %7.1f\n", row.sequence.c_str(), row.n,
                      row.mae, row.mse);
        s += buf;
    }
    std::snprintf(buf, sizeof(buf), "%-15s %4d %7.1f %7.1f\n", "overall", result.overall.n,
                  result.overall.mae, result.overall.mse);
    s += buf;
    return s;
}

}  // namespace lc
