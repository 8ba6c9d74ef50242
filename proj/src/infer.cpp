#include "infer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace lc {

namespace {

std::vector<int> axis_offsets(int extent, int r, int s_e) {
    std::vector<int> offs;
    for (int o = 0; o + r <= extent; o += s_e) offs.push_back(o);
    if (offs.back() != extent - r) offs.push_back(extent - r);  // edge-aligned extra
    return offs;
}

}  // namespace

WindowSet enumerate_windows(int h, int w, int r, int s_e) {
    if (r < 1) raise_usage("enumerate_windows: window side must be >= 1");
    if (s_e < 1) raise_usage("enumerate_windows: stride must be >= 1");
    if (h < r || w < r)
        raise_usage("enumerate_windows: image " + std::to_string(h) + "x" + std::to_string(w) +
                    " is smaller than the window side " + std::to_string(r));
    WindowSet ws;
    ws.r = r;
    ws.h = h;
    ws.w = w;
    const auto rows = axis_offsets(h, r, s_e);
    const auto cols = axis_offsets(w, r, s_e);
    ws.offsets.reserve(rows.size() * cols.size());
    for (int y : rows)
        for (int x : cols) ws.offsets.emplace_back(y, x);
    return ws;
}

std::vector<float> predict_local_counts(NetworkModel& model, const Image& image,
                                        const WindowSet& windows, const ChannelMeans& means,
                                        int batch_size) {
    if (batch_size < 1) raise_usage("predict_local_counts: batch size must be >= 1");
    const int r = windows.r;
    if (r != model.spec.input_side)
        raise_usage("predict_local_counts: window side " + std::to_string(r) +
                    " != model input side " + std::to_string(model.spec.input_side));
    const int ow = model.spec.output_width;
    std::vector<float> counts(windows.offsets.size(), 0.0f);
    const std::size_t stride = std::size_t(3) * r * r;

    for (std::size_t first = 0; first < windows.offsets.size(); first += std::size_t(batch_size)) {
        const std::size_t count = std::min(std::size_t(batch_size), windows.offsets.size() - first);
        Tensor x(int(count), 3, r, r);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < (long long)count; ++i) {
            const auto [row0, col0] = windows.offsets[first + i];
            materialize_window(image, row0, col0, r, means, x.data.data() + std::size_t(i) * stride);
        }
        Tensor out = forward(model, x, BnMode::infer);
        for (std::size_t i = 0; i < count; ++i) {
            double pred = 0.0;
            for (int j = 0; j < ow; ++j) pred += out.data[i * std::size_t(ow) + j];
            counts[first + i] = float(std::max(0.0, pred));
        }
    }
    return counts;
}

std::pair<CountMap, NormalizationMap> merge_counts(const WindowSet& windows,
                                                   const std::vector<float>& counts) {
    if (counts.size() != windows.offsets.size())
        raise_usage("merge_counts: " + std::to_string(counts.size()) + " counts for " +
                    std::to_string(windows.offsets.size()) + " windows");
    CountMap C;
    C.h = windows.h;
    C.w = windows.w;
    C.values.assign(std::size_t(C.h) * C.w, 0.0f);
    NormalizationMap P;
    P.h = windows.h;
    P.w = windows.w;
    P.values.assign(std::size_t(P.h) * P.w, 0);

    const int r = windows.r;
    const float inv_rr = 1.0f / (float(r) * float(r));
    for (std::size_t k = 0; k < windows.offsets.size(); ++k) {
        const auto [row0, col0] = windows.offsets[k];
        const float share = counts[k] * inv_rr;
        for (int y = row0; y < row0 + r; ++y) {
            float* crow = &C.values[std::size_t(y) * C.w + col0];
            std::int32_t* prow = &P.values[std::size_t(y) * P.w + col0];
            for (int x = 0; x < r; ++x) {
                crow[x] += share;
                prow[x] += 1;
            }
        }
    }
    return {std::move(C), std::move(P)};
}

double final_count(const CountMap& C, const NormalizationMap& P) {
    if (C.h != P.h || C.w != P.w)
        raise_usage("final_count: count map " + std::to_string(C.h) + "x" + std::to_string(C.w) +
                    " vs normalization map " + std::to_string(P.h) + "x" + std::to_string(P.w));
    double sum = 0.0;
    for (std::size_t i = 0; i < C.values.size(); ++i)
        if (P.values[i] > 0) sum += double(C.values[i]) / double(P.values[i]);
    return sum;
}

Prediction predict_image(NetworkModel& model, const CheckpointMeta& meta, const Image& original,
                         int s_e) {
    const Image working = resize_bilinear(original, meta.resize_factor);
    Prediction pred;

    if (meta.target_mode == TargetMode::global_count) {
        const int r = model.spec.input_side;
        const Image square = resize_bilinear_to(working, r, r);
        Tensor x(1, 3, r, r);
        materialize_window(square, 0, 0, r, meta.means, x.data.data());
        Tensor out = forward(model, x, BnMode::infer);
        double c = 0.0;
        for (float v : out.data) c += v;
        pred.count = std::max(0.0, c);
        pred.count_map.h = working.h;
        pred.count_map.w = working.w;
        pred.count_map.values.assign(std::size_t(working.h) * working.w,
                                     float(pred.count / (double(working.h) * working.w)));
        pred.norm_map.h = working.h;
        pred.norm_map.w = working.w;
        pred.norm_map.values.assign(std::size_t(working.h) * working.w, 1);
        return pred;
    }

    const WindowSet windows = enumerate_windows(working.h, working.w, model.spec.input_side, s_e);
    const std::vector<float> counts =
        predict_local_counts(model, working, windows, meta.means, meta.batch_size);
    auto [C, P] = merge_counts(windows, counts);
    pred.count = final_count(C, P);
    pred.count_map = std::move(C);
    pred.norm_map = std::move(P);
    return pred;
}

void export_count_map_csv(const Prediction& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise_data("cannot write count map " + path);
    char buf[32];
    for (int y = 0; y < p.count_map.h; ++y) {
        for (int x = 0; x < p.count_map.w; ++x) {
            const std::size_t i = std::size_t(y) * p.count_map.w + x;
            const double v =
                p.norm_map.values[i] > 0 ? double(p.count_map.values[i]) / p.norm_map.values[i] : 0.0;
            std::snprintf(buf, sizeof(buf), "%.6g", v);
            out << (x ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) raise_data("failed writing count map " + path);
}

void export_count_map_pgm(const Prediction& p, const std::string& path) {
    double maxv = 0.0;
    std::vector<double> norm(p.count_map.values.size(), 0.0);
    for (std::size_t i = 0; i < norm.size(); ++i) {
        if (p.norm_map.values[i] > 0)
            norm[i] = double(p.count_map.values[i]) / p.norm_map.values[i];
        maxv = std::max(maxv, norm[i]);
    }
    std::vector<unsigned char> gray(norm.size(), 0);
    if (maxv > 0.0)
        for (std::size_t i = 0; i < norm.size(); ++i)
            gray[i] = (unsigned char)(std::lround(255.0 * norm[i] / maxv));
    write_pgm(gray, p.count_map.h, p.count_map.w, path);
}

}  // namespace lc
