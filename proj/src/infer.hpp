#pragma once

#include <string>
#include <utility>
#include <vector>

#include "arch.hpp"
#include "checkpoint.hpp"
#include "dataset.hpp"
#include "image.hpp"

namespace lc {

/// Sliding windows over an h x w image: r x r windows at offsets on the
/// stride lattice, plus one edge-aligned window per axis when the lattice
/// does not reach the far edge, so every pixel is covered.
struct WindowSet {
    std::vector<std::pair<int, int>> offsets;  // (row0, col0), row-major order
    int r = 0;
    int h = 0, w = 0;
};

WindowSet enumerate_windows(int h, int w, int r, int s_e);

/// Per-window network outputs, clamped below at 0 (counts are non-negative).
/// Windows are evaluated in fixed-size batches; batch composition does not
/// change the per-window result.
std::vector<float> predict_local_counts(NetworkModel& model, const Image& image,
                                        const WindowSet& windows, const ChannelMeans& means,
                                        int batch_size);

struct CountMap {
    int h = 0, w = 0;
    std::vector<float> values;
};

struct NormalizationMap {
    int h = 0, w = 0;
    std::vector<std::int32_t> values;  // how many windows cover each pixel
};

/// Window k spreads its count uniformly: adds counts[k]/r^2 to every covered
/// pixel of C and increments P there. Accumulation runs in window order.
std::pair<CountMap, NormalizationMap> merge_counts(const WindowSet& windows,
                                                   const std::vector<float>& counts);

/// c = sum over covered pixels of C(x,y)/P(x,y). Pixels with P = 0 (possible
/// only with caller-supplied window sets) are skipped.
double final_count(const CountMap& C, const NormalizationMap& P);

struct Prediction {
    double count = 0.0;
    CountMap count_map;
    NormalizationMap norm_map;
};

/// Whole-image prediction with the checkpoint's preprocessing: resize by the
/// recorded factor, subtract the recorded means, slide windows at stride s_e,
/// merge and normalize. Global-count checkpoints regress the whole image
/// (resized to the network input side) and report a uniform map.
Prediction predict_image(NetworkModel& model, const CheckpointMeta& meta, const Image& original,
                         int s_e);

/// Normalized count map C/P as a text matrix (one row per line, comma
/// separated) and optionally as an 8-bit grayscale heat image scaled by the
/// maximum value.
void export_count_map_csv(const Prediction& p, const std::string& path);
void export_count_map_pgm(const Prediction& p, const std::string& path);

}  // namespace lc
