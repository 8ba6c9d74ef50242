// localcount CLI: synthetic data generation, training, prediction and
// evaluation over the C API of the core library.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "localcount/localcount.h"

namespace {

// One --flag <-> config-key binding; only flags the user actually passed are
// forwarded, so the precedence stays flags > config file > defaults.
struct Binding {
    std::string flag;
    std::string key;
    std::string value;
};

void add_train_options(CLI::App* cmd, std::vector<Binding>& bindings) {
    bindings.reserve(bindings.size() + 16);  // CLI11 keeps references into the vector
    auto bind = [&](const std::string& flag, const std::string& key, const std::string& help,
                    CLI::Validator validator = CLI::Validator()) {
        bindings.push_back({flag, key, ""});
        auto* opt = cmd->add_option(flag, bindings.back().value, help);
        if (!validator.get_name().empty()) opt->check(validator);
    };
    bind("--arch", "arch", "network architecture",
         CLI::IsMember({"lenet_like", "alexnet_like", "vgg16_like"}));
    bind("--loss", "loss", "training loss", CLI::IsMember({"l1", "l2", "huber"}));
    bind("--delta", "delta", "huber loss delta");
    bind("--patch-size", "r", "sub-image side r");
    bind("--train-stride", "s_r", "training sampling stride (default r/4)");
    bind("--eval-stride", "s_e", "prediction sampling stride (default r/4)");
    bind("--sigma", "sigma", "Gaussian kernel parameter");
    bind("--resize-factor", "resize_factor", "working-resolution scale factor");
    bind("--target-mode", "target_mode", "regression target",
         CLI::IsMember({"local_count", "local_density", "global_count"}));
    bind("--epochs", "epochs", "training epochs");
    bind("--base-lr", "base_lr", "initial learning rate");
    bind("--decay-epochs", "decay_epochs", "comma-separated decay boundaries");
    bind("--decay-factor", "decay_factor", "learning-rate decay factor");
    bind("--momentum", "momentum", "SGD momentum");
    bind("--batch-size", "batch_size", "mini-batch size");
    bind("--train-fraction", "train_fraction", "patch share used for training");
}

void add_synth_options(CLI::App* cmd, std::vector<Binding>& bindings) {
    bindings.reserve(bindings.size() + 16);  // CLI11 keeps references into the vector
    auto bind = [&](const std::string& flag, const std::string& key, const std::string& help) {
        bindings.push_back({flag, key, ""});
        cmd->add_option(flag, bindings.back().value, help);
    };
    bind("--images", "images", "number of images to generate");
    bind("--width", "width", "image width");
    bind("--height", "height", "image height");
    bind("--min-objects", "min_objects", "minimum objects per image");
    bind("--max-objects", "max_objects", "maximum objects per image");
    bind("--seqs", "sequences", "number of sequences");
    bind("--test-seqs", "test_sequences", "sequences reserved for the test split");
    bind("--margin", "margin", "border margin for object centers");
    bind("--noise", "noise_stddev", "pixel noise standard deviation");
}

struct ConfigHandle {
    lc_config* cfg = nullptr;
    ConfigHandle() : cfg(lc_config_create()) {}
    ~ConfigHandle() { lc_config_free(cfg); }
    ConfigHandle(const ConfigHandle&) = delete;
    ConfigHandle& operator=(const ConfigHandle&) = delete;
};

int fail(lc_status st, const char* what) {
    std::fprintf(stderr, "error: %s: %s\n", what, lc_last_error());
    return int(st);
}

int build_config(lc_config* cfg, const std::string& config_path, const CLI::App* cmd,
                 const std::vector<Binding>& bindings, const std::string& seed,
                 const std::string& threads) {
    if (!config_path.empty()) {
        const lc_status st = lc_config_load_file(cfg, config_path.c_str());
        if (st != LC_OK) return fail(st, "loading config file");
    }
    for (const auto& b : bindings) {
        if (cmd->count(b.flag) == 0) continue;
        const lc_status st = lc_config_set(cfg, b.key.c_str(), b.value.c_str());
        if (st != LC_OK) return fail(st, b.key.c_str());
    }
    if (!seed.empty()) {
        const lc_status st = lc_config_set(cfg, "seed", seed.c_str());
        if (st != LC_OK) return fail(st, "seed");
    }
    if (!threads.empty()) {
        const lc_status st = lc_config_set(cfg, "threads", threads.c_str());
        if (st != LC_OK) return fail(st, "threads");
    }
    return -1;  // ok
}

void progress_printer(int epoch, float lr, double train_loss, double val_mae, void* user) {
    const int total = *static_cast<int*>(user);
    std::printf("epoch %3d/%d  lr %.5g  train_loss %.6g  val_mae %.6g\n", epoch + 1, total,
                double(lr), train_loss, val_mae);
    std::fflush(stdout);
}

int run_train_cmd(lc_config* cfg, const std::string& manifest, const std::string& out) {
    char epochs_text[32] = "25";
    lc_config_get(cfg, "epochs", epochs_text, sizeof(epochs_text));
    int total_epochs = std::atoi(epochs_text);

    lc_train_summary summary{};
    const lc_status st =
        lc_train(cfg, manifest.c_str(), out.c_str(), progress_printer, &total_epochs, &summary);
    if (st != LC_OK) return fail(st, "train");
    std::printf("trained on %zu patches (%zu validation), final val_mae %.6g\n",
                summary.train_patches, summary.val_patches, summary.final_val_mae);
    std::printf("checkpoint: %s/model.ckpt\nreport: %s/train_report.csv\n", out.c_str(),
                out.c_str());
    return 0;
}

// Patch size recorded in the checkpoint, read back through lc_model_info.
int model_patch_size(const lc_model* model) {
    char info[512] = "";
    if (lc_model_info(model, info, sizeof(info)) != LC_OK) return -1;
    std::istringstream is(info);
    std::string line;
    while (std::getline(is, line))
        if (line.rfind("r=", 0) == 0) return std::atoi(line.c_str() + 2);
    return -1;
}

// The eval report is the machine-readable artifact; the display table is
// rendered from it with one decimal.
int print_eval_table(const std::string& report_path) {
    std::ifstream in(report_path);
    if (!in) {
        std::fprintf(stderr, "error: cannot reopen report %s\n", report_path.c_str());
        return 2;
    }
    std::string line;
    std::getline(in, line);  // header
    std::printf("%-16s %5s %8s %8s\n", "sequence", "n", "MAE", "MSE");
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string seq, n, mae, mse;
        std::getline(ls, seq, ',');
        std::getline(ls, n, ',');
        std::getline(ls, mae, ',');
        std::getline(ls, mse, ',');
        if (seq.empty()) continue;
        std::printf("%-16s %5s %8.1f %8.1f\n", seq.c_str(), n.c_str(), std::atof(mae.c_str()),
                    std::atof(mse.c_str()));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"counting by local count regression"};
    app.require_subcommand(1);

    std::string config_path, out_dir, manifest, image, checkpoint, seed, threads;
    std::string sweep_param, sweep_values;
    int eval_stride = 0, patch_size = 0;

    // synth ----------------------------------------------------------------
    std::vector<Binding> synth_bindings;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dot-annotated dataset");
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--config", config_path, "key=value config file");
    synth->add_option("--seed", seed, "random seed");
    synth->add_option("--threads", threads, "worker threads (0 = auto)");
    add_synth_options(synth, synth_bindings);

    // train ----------------------------------------------------------------
    std::vector<Binding> train_bindings;
    CLI::App* train = app.add_subcommand("train", "train a counting model from a manifest");
    train->add_option("--manifest", manifest, "dataset manifest")->required();
    train->add_option("--out", out_dir, "output directory")->required();
    train->add_option("--config", config_path, "key=value config file");
    train->add_option("--seed", seed, "random seed");
    train->add_option("--threads", threads, "worker threads (0 = auto)");
    add_train_options(train, train_bindings);

    // predict ----------------------------------------------------------------
    CLI::App* predict = app.add_subcommand("predict", "count objects in one image");
    predict->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    predict->add_option("--image", image, "input image (binary PPM)")->required();
    predict->add_option("--out", out_dir, "output directory for count maps")->required();
    predict->add_option("--eval-stride", eval_stride, "prediction stride (default: checkpoint)");
    predict->add_option("--patch-size", patch_size, "must match the checkpoint when given");
    predict->add_option("--threads", threads, "worker threads (0 = auto)");

    // evaluate ---------------------------------------------------------------
    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on test records");
    evaluate->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    evaluate->add_option("--manifest", manifest, "dataset manifest")->required();
    evaluate->add_option("--out", out_dir, "output directory for the report")->required();
    evaluate->add_option("--eval-stride", eval_stride, "prediction stride (default: checkpoint)");
    evaluate->add_option("--patch-size", patch_size, "must match the checkpoint when given");
    evaluate->add_option("--threads", threads, "worker threads (0 = auto)");

    // sweep ------------------------------------------------------------------
    std::vector<Binding> sweep_bindings;
    CLI::App* sweep = app.add_subcommand(
        "sweep", "train (and evaluate) once per value of one configuration key");
    sweep->add_option("--param", sweep_param, "configuration key to sweep")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep->add_option("--manifest", manifest, "dataset manifest")->required();
    sweep->add_option("--out", out_dir, "output directory (one subdirectory per cell)")->required();
    sweep->add_option("--config", config_path, "key=value config file");
    sweep->add_option("--seed", seed, "random seed");
    sweep->add_option("--threads", threads, "worker threads (0 = auto)");
    add_train_options(sweep, sweep_bindings);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // 1 = usage error
    }

    if (!threads.empty()) lc_set_threads(std::atoi(threads.c_str()));

    if (synth->parsed()) {
        ConfigHandle cfg;
        const int rc = build_config(cfg.cfg, config_path, synth, synth_bindings, seed, threads);
        if (rc >= 0) return rc;
        lc_synth_summary summary{};
        const lc_status st = lc_synth(cfg.cfg, out_dir.c_str(), &summary);
        if (st != LC_OK) return fail(st, "synth");
        std::printf("generated %d images (%lld objects): %d train, %d test\n", summary.images,
                    summary.total_objects, summary.train_images, summary.test_images);
        std::printf("manifest: %s/manifest.csv\n", out_dir.c_str());
        return 0;
    }

    if (train->parsed()) {
        ConfigHandle cfg;
        const int rc = build_config(cfg.cfg, config_path, train, train_bindings, seed, threads);
        if (rc >= 0) return rc;
        return run_train_cmd(cfg.cfg, manifest, out_dir);
    }

    if (predict->parsed()) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        lc_model* model = nullptr;
        lc_status st = lc_model_load(checkpoint.c_str(), &model);
        if (st != LC_OK) return fail(st, "loading checkpoint");
        if (patch_size > 0 && patch_size != model_patch_size(model)) {
            std::fprintf(stderr, "error: patch size %d conflicts with checkpoint (r=%d)\n",
                         patch_size, model_patch_size(model));
            lc_model_free(model);
            return 1;
        }
        const std::string map_csv = out_dir + "/count_map.csv";
        const std::string map_pgm = out_dir + "/count_map.pgm";
        double count = 0.0;
        st = lc_predict_image(model, image.c_str(), eval_stride, patch_size, &count,
                              map_csv.c_str(), map_pgm.c_str());
        lc_model_free(model);
        if (st != LC_OK) return fail(st, "predict");
        std::printf("count: %.6f\n", count);
        std::printf("count map: %s\nheat image: %s\n", map_csv.c_str(), map_pgm.c_str());
        return 0;
    }

    if (evaluate->parsed()) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        lc_model* model = nullptr;
        lc_status st = lc_model_load(checkpoint.c_str(), &model);
        if (st != LC_OK) return fail(st, "loading checkpoint");
        if (patch_size > 0 && patch_size != model_patch_size(model)) {
            std::fprintf(stderr, "error: patch size %d conflicts with checkpoint (r=%d)\n",
                         patch_size, model_patch_size(model));
            lc_model_free(model);
            return 1;
        }
        const std::string report = out_dir + "/eval_report.csv";
        double overall_mae = 0.0, overall_mse = 0.0;
        st = lc_evaluate(model, manifest.c_str(), eval_stride, report.c_str(), &overall_mae,
                         &overall_mse);
        lc_model_free(model);
        if (st != LC_OK) return fail(st, "evaluate");
        print_eval_table(report);
        std::printf("overall MAE %.6g  MSE %.6g\n", overall_mae, overall_mse);
        return 0;
    }

    if (sweep->parsed()) {
        std::vector<std::string> values;
        std::istringstream vs(sweep_values);
        std::string item;
        while (std::getline(vs, item, ',')) values.push_back(item);
        if (values.empty()) {
            std::fprintf(stderr, "error: --values is empty\n");
            return 1;
        }
        for (const auto& value : values) {
            ConfigHandle cfg;
            const int rc = build_config(cfg.cfg, config_path, sweep, sweep_bindings, seed, threads);
            if (rc >= 0) return rc;
            lc_status st = lc_config_set(cfg.cfg, sweep_param.c_str(), value.c_str());
            if (st != LC_OK) return fail(st, "sweep parameter");
            const std::string cell_dir = out_dir + "/" + sweep_param + "=" + value;
            std::printf("== %s = %s ==\n", sweep_param.c_str(), value.c_str());
            const int trc = run_train_cmd(cfg.cfg, manifest, cell_dir);
            if (trc != 0) return trc;

            lc_model* model = nullptr;
            st = lc_model_load((cell_dir + "/model.ckpt").c_str(), &model);
            if (st != LC_OK) return fail(st, "loading checkpoint");
            const std::string report = cell_dir + "/eval_report.csv";
            double overall_mae = 0.0, overall_mse = 0.0;
            st = lc_evaluate(model, manifest.c_str(), eval_stride, report.c_str(), &overall_mae,
                             &overall_mse);
            lc_model_free(model);
            if (st == LC_OK) {
                std::printf("cell MAE %.6g  MSE %.6g\n", overall_mae, overall_mse);
            } else {
                std::printf("evaluation skipped: %s\n", lc_last_error());
            }
        }
        return 0;
    }

    return 1;
}
