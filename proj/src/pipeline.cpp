#include "pipeline.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "infer.hpp"

namespace fs = std::filesystem;

namespace lc {

namespace {

const std::map<std::string, std::string>& default_config() {
    static const std::map<std::string, std::string> defaults = {
        // Table-style training defaults: alexnet_like with l1 loss, r = 32,
        // strides r/4, sigma = 8, 25 epochs with 0.01 -> 0.001 -> 0.0001.
        {"arch", "alexnet_like"},
        {"loss", "l1"},
        {"delta", "1"},
        {"r", "32"},
        {"s_r", ""},  // empty = r/4
        {"s_e", ""},  // empty = r/4
        {"sigma", "8"},
        {"resize_factor", "0.125"},
        {"target_mode", "local_count"},
        {"epochs", "25"},
        {"base_lr", "0.01"},
        {"decay_epochs", "5,15"},
        {"decay_factor", "0.1"},
        {"momentum", "0.9"},
        {"batch_size", "256"},
        {"train_fraction", "0.9"},
        {"seed", "1"},
        {"threads", "0"},
        // Synthetic dataset generation.
        {"images", "250"},
        {"width", "256"},
        {"height", "256"},
        {"min_objects", "10"},
        {"max_objects", "50"},
        {"sequences", "5"},
        {"test_sequences", "1"},
        {"margin", "72"},
        {"noise_stddev", "5"},
    };
    return defaults;
}

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
    std::vector<int> out;
    std::size_t start = 0;
    const std::string t = strip(text);
    if (t.empty()) return out;
    while (start <= t.size()) {
        std::size_t pos = t.find(',', start);
        const std::string item = strip(t.substr(start, pos == std::string::npos ? pos : pos - start));
        try {
            out.push_back(std::stoi(item));
        } catch (...) {
            raise_usage("config key '" + key + "': bad integer '" + item + "'");
        }
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

RunConfig::RunConfig() : values_(default_config()) {}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise_data("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const std::string t = strip(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            raise_data(path + ":" + std::to_string(lineno) + ": expected key=value, got '" + t + "'");
        try {
            set(strip(t.substr(0, eq)), strip(t.substr(eq + 1)));
        } catch (const Error& e) {
            raise_data(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (values_.find(key) == values_.end()) raise_usage("unknown configuration key '" + key + "'");
    values_[key] = value;
    set_keys_.insert(key);
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) raise_usage("unknown configuration key '" + key + "'");
    return it->second;
}

bool RunConfig::was_set(const std::string& key) const { return set_keys_.count(key) > 0; }

int RunConfig::get_int(const std::string& key) const {
    try {
        return std::stoi(get(key));
    } catch (const Error&) {
        throw;
    } catch (...) {
        raise_usage("config key '" + key + "': bad integer '" + get(key) + "'");
    }
}

double RunConfig::get_double(const std::string& key) const {
    try {
        return std::stod(get(key));
    } catch (const Error&) {
        throw;
    } catch (...) {
        raise_usage("config key '" + key + "': bad number '" + get(key) + "'");
    }
}

ArchKind RunConfig::arch() const { return parse_arch_kind(get("arch")); }
LossKind RunConfig::loss() const { return parse_loss_kind(get("loss")); }
float RunConfig::delta() const { return float(get_double("delta")); }

SamplingConfig RunConfig::sampling() const {
    SamplingConfig s;
    s.r = get_int("r");
    s.s_r = get("s_r").empty() ? std::max(1, s.r / 4) : get_int("s_r");
    s.s_e = get("s_e").empty() ? std::max(1, s.r / 4) : get_int("s_e");
    s.sigma = float(get_double("sigma"));
    s.resize_factor = get_double("resize_factor");
    s.target_mode = parse_target_mode(get("target_mode"));
    return s;
}

OptimizerConfig RunConfig::optimizer() const {
    OptimizerConfig o;
    o.base_lr = float(get_double("base_lr"));
    o.decay_epochs = parse_int_list(get("decay_epochs"), "decay_epochs");
    o.decay_factor = float(get_double("decay_factor"));
    o.momentum = float(get_double("momentum"));
    o.total_epochs = get_int("epochs");
    o.batch_size = get_int("batch_size");
    o.seed = seed();
    o.validate();
    return o;
}

double RunConfig::train_fraction() const {
    const double f = get_double("train_fraction");
    if (!(f > 0.0 && f < 1.0)) raise_usage("train_fraction must be in (0, 1)");
    return f;
}

std::uint64_t RunConfig::seed() const {
    try {
        return std::stoull(get("seed"));
    } catch (...) {
        raise_usage("config key 'seed': bad integer '" + get("seed") + "'");
    }
}

int RunConfig::threads() const { return get_int("threads"); }

SynthConfig RunConfig::synth() const {
    SynthConfig s;
    s.images = get_int("images");
    s.width = get_int("width");
    s.height = get_int("height");
    s.min_objects = get_int("min_objects");
    s.max_objects = get_int("max_objects");
    s.sequences = get_int("sequences");
    s.test_sequences = get_int("test_sequences");
    s.margin = get_int("margin");
    s.noise_stddev = get_double("noise_stddev");
    s.seed = seed();
    s.validate();
    return s;
}

std::string RunConfig::echo() const {
    std::string s;
    for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
    return s;
}

void RunConfig::write_log(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise_data("cannot write run log " + path);
    out << echo();
    if (!out) raise_data("failed writing run log " + path);
}

void apply_threads(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

namespace {

void write_train_report_csv(const TrainReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise_data("cannot write training report " + path);
    out << "epoch,lr,train_loss,val_mae\n";
    char buf[128];
    for (const auto& e : report.epochs) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", e.epoch, double(e.lr), e.train_loss,
                      e.val_mae);
        out << buf;
    }
    if (!out) raise_data("failed writing training report " + path);
}

}  // namespace

TrainOutcome run_train(const RunConfig& config, const std::string& manifest_path,
                       const std::string& out_dir, const ProgressFn& progress) {
    apply_threads(config.threads());
    const ArchKind arch = config.arch();
    const LossKind loss = config.loss();
    const float delta = config.delta();
    const SamplingConfig sampling = config.sampling();
    const OptimizerConfig optim = config.optimizer();
    const double fraction = config.train_fraction();

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) raise_data("cannot create output directory " + out_dir + ": " + ec.message());

    TrainOutcome outcome;
    outcome.runlog_path = (fs::path(out_dir) / "run_config.log").string();
    config.write_log(outcome.runlog_path);

    const int output_width =
        sampling.target_mode == TargetMode::local_density ? sampling.r * sampling.r : 1;
    const ArchitectureSpec spec = ArchitectureSpec::make(arch, sampling.r, output_width);
    sampling.validate(spec.pool_factor());

    const DatasetManifest manifest = load_manifest(manifest_path);
    std::vector<const ImageRecord*> records;
    for (const auto& rec : manifest.records)
        if (rec.split == Split::train || rec.split == Split::val) records.push_back(&rec);
    if (records.empty()) raise_data("train: manifest has no train/val records");

    // Working-resolution images (and density maps where still needed) must
    // stay alive for the whole run: patches reference them.
    std::vector<Image> images(records.size());
    std::vector<DensityMap> densities(records.size());
    std::vector<PatchSample> all_samples;

    for (std::size_t i = 0; i < records.size(); ++i) {
        PreparedImage prepared = prepare_image(*records[i], sampling);
        DensityMap density =
            render_density(prepared.dots, prepared.image.h, prepared.image.w, sampling.sigma);

        if (sampling.target_mode == TargetMode::global_count) {
            images[i] = resize_bilinear_to(prepared.image, sampling.r, sampling.r);
            PatchSample s;
            s.image = &images[i];
            s.record_index = int(i);
            s.row0 = 0;
            s.col0 = 0;
            s.target = float(total_count(density));
            all_samples.push_back(s);
            continue;
        }

        images[i] = std::move(prepared.image);
        densities[i] = std::move(density);
        PatchExtraction ex =
            extract_training_patches(images[i], densities[i], sampling, int(i));
        if (ex.image_too_small)
            outcome.warnings.push_back("image smaller than patch size, skipped: " +
                                       records[i]->image_path);
        all_samples.insert(all_samples.end(), ex.samples.begin(), ex.samples.end());
        if (sampling.target_mode != TargetMode::local_density) densities[i] = DensityMap{};
    }
    if (all_samples.empty()) raise_data("train: no usable training samples");

    SplitSamples split =
        shuffle_split(std::move(all_samples), fraction, mix_seed(config.seed() ^ 0x53504C49ull));
    const ChannelMeans means = compute_channel_mean(split.train, sampling.r);

    Rng init_rng(mix_seed(config.seed() ^ 0x494E4954ull));
    NetworkModel model = build_network(spec, init_rng);

    TrainResult trained =
        train(std::move(model), split.train, split.val, means, optim, loss, delta, progress);

    CheckpointMeta meta;
    meta.arch = arch;
    meta.r = sampling.r;
    meta.sigma = sampling.sigma;
    meta.s_r = sampling.s_r;
    meta.s_e = sampling.s_e;
    meta.resize_factor = sampling.resize_factor;
    meta.target_mode = sampling.target_mode;
    meta.loss = loss;
    meta.delta = delta;
    meta.means = means;
    meta.seed = config.seed();
    meta.epochs_completed = optim.total_epochs;
    meta.base_lr = optim.base_lr;
    meta.momentum = optim.momentum;
    meta.batch_size = optim.batch_size;

    outcome.checkpoint_path = (fs::path(out_dir) / "model.ckpt").string();
    save_checkpoint(trained.model, meta, outcome.checkpoint_path);
    outcome.report_path = (fs::path(out_dir) / "train_report.csv").string();
    write_train_report_csv(trained.report, outcome.report_path);

    outcome.meta = meta;
    outcome.report = std::move(trained.report);
    outcome.train_patches = split.train.size();
    outcome.val_patches = split.val.size();
    return outcome;
}

SynthSummary run_synth(const RunConfig& config, const std::string& out_dir) {
    return synth_generate(config.synth(), out_dir);
}

PredictOutcome run_predict(const std::string& checkpoint_path, const std::string& image_path,
                           int s_e_override, int patch_size_override, const std::string& out_dir) {
    LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);
    if (patch_size_override > 0 && patch_size_override != ckpt.meta.r)
        raise_usage("patch size " + std::to_string(patch_size_override) +
                    " conflicts with checkpoint (r=" + std::to_string(ckpt.meta.r) + ")");
    const int s_e = s_e_override > 0 ? s_e_override : ckpt.meta.s_e;

    const Image original = read_ppm(image_path);
    const Prediction pred = predict_image(ckpt.model, ckpt.meta, original, s_e);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) raise_data("cannot create output directory " + out_dir + ": " + ec.message());

    PredictOutcome out;
    out.count = pred.count;
    out.map_csv_path = (fs::path(out_dir) / "count_map.csv").string();
    out.map_pgm_path = (fs::path(out_dir) / "count_map.pgm").string();
    export_count_map_csv(pred, out.map_csv_path);
    export_count_map_pgm(pred, out.map_pgm_path);
    return out;
}

EvaluateOutcome run_evaluate(const std::string& checkpoint_path, const std::string& manifest_path,
                             int s_e_override, int patch_size_override, const std::string& out_dir) {
    LoadedCheckpoint ckpt = load_checkpoint(checkpoint_path);
    if (patch_size_override > 0 && patch_size_override != ckpt.meta.r)
        raise_usage("patch size " + std::to_string(patch_size_override) +
                    " conflicts with checkpoint (r=" + std::to_string(ckpt.meta.r) + ")");
    const int s_e = s_e_override > 0 ? s_e_override : ckpt.meta.s_e;

    const DatasetManifest manifest = load_manifest(manifest_path);
    EvaluateOutcome out;
    out.result = evaluate(ckpt.model, ckpt.meta, manifest, s_e);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) raise_data("cannot create output directory " + out_dir + ": " + ec.message());
    out.report_path = (fs::path(out_dir) / "eval_report.csv").string();
    write_eval_report(out.result, out.report_path);
    return out;
}

}  // namespace lc
