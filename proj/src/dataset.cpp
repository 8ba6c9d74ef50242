#include "dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rng.hpp"

namespace fs = std::filesystem;

namespace lc {

namespace {

std::string lower(std::string s) {
    for (auto& ch : s) ch = char(std::tolower((unsigned char)ch));
    return s;
}

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(strip(line.substr(start)));
            break;
        }
        out.push_back(strip(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

}  // namespace

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split parse_split(const std::string& text, const std::string& context) {
    const std::string t = lower(text);
    if (t == "train") return Split::train;
    if (t == "val") return Split::val;
    if (t == "test") return Split::test;
    raise_data(context + ": unknown split '" + text + "' (expected train, val or test)");
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise_data("cannot open manifest " + path);
    const fs::path base = fs::path(path).parent_path();

    DatasetManifest m;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = strip(line);
        if (t.empty() || t[0] == '#') continue;
        if (!header_seen) {  // header row: image_path,annotation_path,sequence,split
            header_seen = true;
            continue;
        }
        const auto fields = split_csv(t);
        if (fields.size() != 4)
            raise_data(path + ":" + std::to_string(lineno) + ": expected 4 comma-separated fields, got " +
                       std::to_string(fields.size()));
        ImageRecord rec;
        rec.image_path = (base / fields[0]).lexically_normal().string();
        rec.annotation_path = (base / fields[1]).lexically_normal().string();
        rec.sequence = fields[2];
        rec.split = parse_split(fields[3], path + ":" + std::to_string(lineno));
        for (const std::string* p : {&rec.image_path, &rec.annotation_path}) {
            std::ifstream probe(*p);
            if (!probe)
                raise_data(path + ":" + std::to_string(lineno) + ": file does not exist or is not readable: " + *p);
        }
        m.records.push_back(std::move(rec));
    }
    if (!header_seen && !m.records.empty())
        raise_data(path + ": missing header line");
    return m;
}

DotAnnotation load_annotation(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise_data("cannot open annotation file " + path);
    DotAnnotation dots;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = strip(line);
        if (t.empty() || t[0] == '#') continue;
        if (!header_seen) {  // header row: x,y
            header_seen = true;
            continue;
        }
        const auto fields = split_csv(t);
        if (fields.size() != 2)
            raise_data(path + ":" + std::to_string(lineno) + ": expected 'x,y', got '" + t + "'");
        char* end = nullptr;
        const double x = std::strtod(fields[0].c_str(), &end);
        if (end == fields[0].c_str() || *end != '\0')
            raise_data(path + ":" + std::to_string(lineno) + ": bad x coordinate '" + fields[0] + "'");
        const double y = std::strtod(fields[1].c_str(), &end);
        if (end == fields[1].c_str() || *end != '\0')
            raise_data(path + ":" + std::to_string(lineno) + ": bad y coordinate '" + fields[1] + "'");
        dots.points.push_back({float(x), float(y)});
    }
    return dots;
}

void write_annotation(const DotAnnotation& dots, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise_data("cannot write annotation file " + path);
    out << "x,y\n";
    char buf[64];
    for (const auto& p : dots.points) {
        std::snprintf(buf, sizeof(buf), "%.3f,%.3f\n", double(p.x), double(p.y));
        out << buf;
    }
    if (!out) raise_data("failed writing annotation file " + path);
}

const char* target_mode_name(TargetMode m) {
    switch (m) {
        case TargetMode::local_count: return "local_count";
        case TargetMode::local_density: return "local_density";
        case TargetMode::global_count: return "global_count";
    }
    return "?";
}

TargetMode parse_target_mode(const std::string& text) {
    const std::string t = lower(text);
    if (t == "local_count") return TargetMode::local_count;
    if (t == "local_density") return TargetMode::local_density;
    if (t == "global_count") return TargetMode::global_count;
    raise_usage("unknown target mode '" + text +
                "' (expected local_count, local_density or global_count)");
}

void SamplingConfig::validate(int pool_factor) const {
    if (r < 8) raise_usage("sampling: patch size r must be >= 8, got " + std::to_string(r));
    if (pool_factor > 0 && r % pool_factor != 0)
        raise_usage("sampling: patch size " + std::to_string(r) +
                    " is not divisible by the architecture's pooling factor " +
                    std::to_string(pool_factor));
    if (s_r < 1 || s_e < 1) raise_usage("sampling: strides must be >= 1");
    if (!(sigma > 0.0f)) raise_usage("sampling: sigma must be > 0");
    if (!(resize_factor > 0.0)) raise_usage("sampling: resize factor must be > 0");
}

PreparedImage prepare_image(const ImageRecord& record, const SamplingConfig& config) {
    PreparedImage out;
    Image original;
    try {
        original = read_ppm(record.image_path);
    } catch (const Error& e) {
        raise_data("record '" + record.image_path + "': " + e.what());
    }
    DotAnnotation dots = load_annotation(record.annotation_path);
    for (const auto& p : dots.points)
        if (p.x < 0.0f || p.y < 0.0f || p.x >= float(original.w) || p.y >= float(original.h))
            raise_data("record '" + record.image_path + "': dot (" + std::to_string(p.x) + "," +
                       std::to_string(p.y) + ") outside image bounds " + std::to_string(original.w) +
                       "x" + std::to_string(original.h));

    out.image = resize_bilinear(original, config.resize_factor);
    out.dots.points.reserve(dots.points.size());
    for (const auto& p : dots.points) {
        // Same scale factor as the image; rounding can graze the upper edge.
        const float x = std::min(float(p.x * config.resize_factor), float(out.image.w - 1));
        const float y = std::min(float(p.y * config.resize_factor), float(out.image.h - 1));
        out.dots.points.push_back({x, y});
    }
    return out;
}

PatchExtraction extract_training_patches(const Image& image, const DensityMap& density,
                                         const SamplingConfig& config, int record_index) {
    if (density.h != image.h || density.w != image.w)
        raise_usage("extract_training_patches: density map " + std::to_string(density.h) + "x" +
                    std::to_string(density.w) + " does not match image " + std::to_string(image.h) +
                    "x" + std::to_string(image.w));
    PatchExtraction out;
    const int r = config.r;
    if (image.h < r || image.w < r) {
        out.image_too_small = true;
        return out;
    }
    for (int y = 0; y + r <= image.h; y += config.s_r)
        for (int x = 0; x + r <= image.w; x += config.s_r) {
            PatchSample s;
            s.image = &image;
            s.record_index = record_index;
            s.row0 = y;
            s.col0 = x;
            s.target = float(local_count(density, y, x, r));
            if (config.target_mode == TargetMode::local_density) s.density = &density;
            out.samples.push_back(s);
        }
    return out;
}

ChannelMeans compute_channel_mean(const std::vector<PatchSample>& samples, int r) {
    if (samples.empty()) raise_usage("compute_channel_mean: no samples");
    double acc[3] = {0.0, 0.0, 0.0};
    for (const auto& s : samples) {
        const Image& img = *s.image;
        for (int y = 0; y < r; ++y) {
            const float* src = img.px(s.row0 + y, s.col0);
            double row[3] = {0.0, 0.0, 0.0};
            for (int x = 0; x < r; ++x) {
                row[0] += src[3 * x + 0];
                row[1] += src[3 * x + 1];
                row[2] += src[3 * x + 2];
            }
            for (int ch = 0; ch < 3; ++ch) acc[ch] += row[ch];
        }
    }
    const double denom = double(samples.size()) * r * r;
    ChannelMeans m;
    for (int ch = 0; ch < 3; ++ch) m.rgb[ch] = float(acc[ch] / denom);
    return m;
}

void materialize_patch(const PatchSample& sample, int r, const ChannelMeans& means, float* dst) {
    materialize_window(*sample.image, sample.row0, sample.col0, r, means, dst);
}

void materialize_window(const Image& image, int row0, int col0, int r, const ChannelMeans& means,
                        float* dst) {
    const std::size_t rr = std::size_t(r) * r;
    for (int y = 0; y < r; ++y) {
        const float* src = image.px(row0 + y, col0);
        float* d0 = dst + 0 * rr + std::size_t(y) * r;
        float* d1 = dst + 1 * rr + std::size_t(y) * r;
        float* d2 = dst + 2 * rr + std::size_t(y) * r;
        for (int x = 0; x < r; ++x) {
            d0[x] = src[3 * x + 0] - means.rgb[0];
            d1[x] = src[3 * x + 1] - means.rgb[1];
            d2[x] = src[3 * x + 2] - means.rgb[2];
        }
    }
}

SplitSamples shuffle_split(std::vector<PatchSample> samples, double train_fraction,
                           std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        raise_usage("shuffle_split: train fraction must be in (0, 1)");
    Rng rng(seed);
    rng.shuffle(samples);
    const std::size_t n_train =
        std::min(samples.size(), std::size_t(std::ceil(train_fraction * double(samples.size()))));
    SplitSamples out;
    out.train.assign(samples.begin(), samples.begin() + n_train);
    out.val.assign(samples.begin() + n_train, samples.end());
    return out;
}

}  // namespace lc
