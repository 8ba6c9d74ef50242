#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "density.hpp"
#include "image.hpp"

namespace lc {

enum class Split { train, val, test };

const char* split_name(Split s);
Split parse_split(const std::string& text, const std::string& context);

struct ImageRecord {
    std::string image_path;       // absolute, resolved at load time
    std::string annotation_path;  // absolute, resolved at load time
    std::string sequence;
    Split split = Split::train;
};

struct DatasetManifest {
    std::vector<ImageRecord> records;
};

/// Text manifest: header line, then one
///   image_path,annotation_path,sequence,split
/// row per record. Relative paths are resolved against the manifest's
/// directory and must exist. Split names are case-insensitive.
DatasetManifest load_manifest(const std::string& path);

/// Dot annotation file: header line "x,y", then one "x,y" pair per dot in
/// pixel coordinates of the original-resolution image.
DotAnnotation load_annotation(const std::string& path);
void write_annotation(const DotAnnotation& dots, const std::string& path);

enum class TargetMode { local_count, local_density, global_count };

const char* target_mode_name(TargetMode m);
TargetMode parse_target_mode(const std::string& text);

/// Patch sampling parameters (defaults follow the project's standard setup:
/// r=32, training and evaluation strides r/4, sigma=8, 1/8 resize).
struct SamplingConfig {
    int r = 32;
    int s_r = 8;
    int s_e = 8;
    float sigma = 8.0f;
    double resize_factor = 0.125;
    TargetMode target_mode = TargetMode::local_count;

    /// pool_factor is the architecture's total downsampling (2^#pools).
    void validate(int pool_factor) const;
};

/// Image at working resolution with coordinates scaled to match.
struct PreparedImage {
    Image image;
    DotAnnotation dots;
};

/// Decode, resize by resize_factor (bilinear) and scale dot coordinates by
/// the same factor (rounded). Errors name the offending record.
PreparedImage prepare_image(const ImageRecord& record, const SamplingConfig& config);

/// One training sample. Pixels are materialized on demand from the source
/// image (2e5 patches of raw floats would not fit in memory); target is the
/// mode-dependent regression value: the local count, or (local_density mode)
/// the sum of the density window with the window itself re-read from density.
struct PatchSample {
    const Image* image = nullptr;        // not owned; r x r window at (row0, col0)
    const DensityMap* density = nullptr; // not owned; local_density targets only
    int record_index = 0;
    int row0 = 0, col0 = 0;
    float target = 0.0f;
};

struct PatchExtraction {
    std::vector<PatchSample> samples;
    bool image_too_small = false;
};

/// Dense r x r windows on the stride lattice {0, s_r, 2*s_r, ...} wherever a
/// full window fits; remainder pixels at the right/bottom edge are excluded
/// (inference covers edges separately). An image smaller than r yields an
/// empty list with the warning flag set.
PatchExtraction extract_training_patches(const Image& image, const DensityMap& density,
                                         const SamplingConfig& config, int record_index = 0);

struct ChannelMeans {
    float rgb[3] = {0.0f, 0.0f, 0.0f};
};

/// Per-channel mean over the pixels of the given r x r patches (training
/// subset only, by contract of the callers).
ChannelMeans compute_channel_mean(const std::vector<PatchSample>& samples, int r);

/// Copy one patch into dst (length 3*r*r) in (channel, row, col) order with
/// the channel means subtracted. This is the single preprocessing path used
/// by both training and prediction.
void materialize_patch(const PatchSample& sample, int r, const ChannelMeans& means, float* dst);

/// Window pixels of an arbitrary image location, mean-subtracted, (c,h,w)
/// order; shared by sliding-window inference.
void materialize_window(const Image& image, int row0, int col0, int r, const ChannelMeans& means,
                        float* dst);

struct SplitSamples {
    std::vector<PatchSample> train, val;
};

/// Deterministic shuffle from the seed, then the first ceil(fraction*N)
/// samples go to train, the rest to validation.
SplitSamples shuffle_split(std::vector<PatchSample> samples, double train_fraction,
                           std::uint64_t seed);

}  // namespace lc
