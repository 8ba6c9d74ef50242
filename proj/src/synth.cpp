#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dataset.hpp"
#include "image.hpp"
#include "rng.hpp"

namespace fs = std::filesystem;

namespace lc {

namespace {

// Coarse per-channel value noise upsampled bilinearly: cheap low-frequency
// texture that keeps the counting task from degenerating into thresholding.
void paint_background(Image& img, Rng& rng) {
    constexpr int kCell = 32;
    const int gh = img.h / kCell + 2, gw = img.w / kCell + 2;
    std::vector<float> grid(std::size_t(gh) * gw * 3);
    const float base[3] = {float(50.0 + rng.uniform(-12.0, 12.0)),
                           float(72.0 + rng.uniform(-12.0, 12.0)),
                           float(44.0 + rng.uniform(-12.0, 12.0))};
    for (int g = 0; g < gh * gw; ++g) {
        const float lum = float(rng.uniform(-22.0, 22.0));
        for (int ch = 0; ch < 3; ++ch)
            grid[std::size_t(g) * 3 + ch] = base[ch] + lum + float(rng.uniform(-6.0, 6.0));
    }
    for (int y = 0; y < img.h; ++y) {
        const float fy = float(y) / kCell;
        const int gy = int(fy);
        const float wy = fy - gy;
        for (int x = 0; x < img.w; ++x) {
            const float fx = float(x) / kCell;
            const int gx = int(fx);
            const float wx = fx - gx;
            float* q = img.px(y, x);
            for (int ch = 0; ch < 3; ++ch) {
                const float a = grid[(std::size_t(gy) * gw + gx) * 3 + ch];
                const float b = grid[(std::size_t(gy) * gw + gx + 1) * 3 + ch];
                const float c = grid[(std::size_t(gy + 1) * gw + gx) * 3 + ch];
                const float d = grid[(std::size_t(gy + 1) * gw + gx + 1) * 3 + ch];
                q[ch] = (a + (b - a) * wx) + ((c + (d - c) * wx) - (a + (b - a) * wx)) * wy;
            }
        }
    }
}

// Rotated anisotropic Gaussian blob with a whitish-yellow tint.
void paint_blob(Image& img, Rng& rng, float cx, float cy) {
    const double major = rng.uniform(4.0, 9.0);
    const double ratio = rng.uniform(2.0, 4.0);
    const double minor = major / ratio;
    const double theta = rng.uniform(0.0, M_PI);
    const double peak = rng.uniform(95.0, 165.0);
    const double tint[3] = {1.0, 0.93, 0.70};
    const double ct = std::cos(theta), st = std::sin(theta);
    const int reach = int(std::ceil(3.0 * major));
    const int y0 = std::max(0, int(cy) - reach), y1 = std::min(img.h - 1, int(cy) + reach);
    const int x0 = std::max(0, int(cx) - reach), x1 = std::min(img.w - 1, int(cx) + reach);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double u = ct * dx + st * dy;
            const double v = -st * dx + ct * dy;
            const double g = std::exp(-0.5 * (u * u / (major * major) + v * v / (minor * minor)));
            if (g < 1e-4) continue;
            float* q = img.px(y, x);
            for (int ch = 0; ch < 3; ++ch) q[ch] = float(q[ch] + peak * tint[ch] * g);
        }
}

}  // namespace

void SynthConfig::validate() const {
    if (images < 1) raise_usage("synth: images must be >= 1");
    if (width < 16 || height < 16) raise_usage("synth: image dimensions must be >= 16");
    if (min_objects < 0 || max_objects < min_objects)
        raise_usage("synth: need 0 <= min-objects <= max-objects");
    if (sequences < 1 || test_sequences < 0 || test_sequences >= sequences + 1)
        raise_usage("synth: need sequences >= 1 and 0 <= test-sequences <= sequences");
    if (test_sequences > sequences) raise_usage("synth: test-sequences exceeds sequences");
    if (margin < 0 || 2 * margin >= std::min(width, height))
        raise_usage("synth: margin leaves no room for object centers");
    if (noise_stddev < 0.0) raise_usage("synth: noise stddev must be >= 0");
}

SynthSummary synth_generate(const SynthConfig& config, const std::string& out_dir) {
    config.validate();
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "images", ec);
    fs::create_directories(fs::path(out_dir) / "annotations", ec);
    if (ec) raise_data("synth: cannot create output directory " + out_dir + ": " + ec.message());

    Rng rng(config.seed);
    SynthSummary summary;
    std::string manifest_text = "image_path,annotation_path,sequence,split\n";

    for (int i = 0; i < config.images; ++i) {
        const int seq = int(std::size_t(i) * config.sequences / config.images);
        const bool is_test = seq >= config.sequences - config.test_sequences;

        Image img(config.height, config.width);
        paint_background(img, rng);

        const int n_objects = rng.uniform_int(config.min_objects, config.max_objects);
        DotAnnotation dots;
        for (int o = 0; o < n_objects; ++o) {
            const float cx = float(rng.uniform(config.margin, config.width - 1 - config.margin));
            const float cy = float(rng.uniform(config.margin, config.height - 1 - config.margin));
            paint_blob(img, rng, cx, cy);
            dots.points.push_back({cx, cy});
        }
        if (config.noise_stddev > 0.0)
            for (auto& v : img.pixels) v = float(v + rng.gaussian(0.0, config.noise_stddev));

        char name[64];
        std::snprintf(name, sizeof(name), "seq%02d_%04d", seq + 1, i);
        const std::string img_rel = std::string("images/") + name + ".ppm";
        const std::string ann_rel = std::string("annotations/") + name + ".csv";
        write_ppm(img, (fs::path(out_dir) / img_rel).string());
        write_annotation(dots, (fs::path(out_dir) / ann_rel).string());

        char seqname[32];
        std::snprintf(seqname, sizeof(seqname), "seq%02d", seq + 1);
        manifest_text += img_rel + "," + ann_rel + "," + seqname + "," +
                         (is_test ? "test" : "train") + "\n";

        summary.total_objects += n_objects;
        summary.objects_per_image.push_back(n_objects);
        if (is_test)
            ++summary.test_images;
        else
            ++summary.train_images;
    }
    summary.images = config.images;

    const std::string manifest_path = (fs::path(out_dir) / "manifest.csv").string();
    std::ofstream mf(manifest_path, std::ios::binary);
    if (!mf) raise_data("synth: cannot write manifest " + manifest_path);
    mf << manifest_text;
    if (!mf) raise_data("synth: failed writing manifest " + manifest_path);
    summary.manifest_path = manifest_path;
    return summary;
}

}  // namespace lc
