#include "localcount/localcount.h"

#include <cstring>
#include <string>

#include "checkpoint.hpp"
#include "image.hpp"
#include "infer.hpp"
#include "pipeline.hpp"

namespace {

thread_local std::string g_last_error;

template <typename Fn>
lc_status wrap(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return LC_OK;
    } catch (const lc::Error& e) {
        g_last_error = e.what();
        return lc_status(int(e.kind()));
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return LC_ERR_DATA;
    } catch (...) {
        g_last_error = "unknown error";
        return LC_ERR_DATA;
    }
}

lc_status fail_usage(const char* msg) {
    g_last_error = msg;
    return LC_ERR_USAGE;
}

lc_status copy_out(const std::string& s, char* buf, size_t bufsize) {
    if (!buf || bufsize == 0) return fail_usage("output buffer is null");
    const size_t n = std::min(bufsize - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
    return s.size() < bufsize ? LC_OK : fail_usage("output buffer too small");
}

}  // namespace

struct lc_config {
    lc::RunConfig impl;
};

struct lc_model {
    lc::LoadedCheckpoint impl;
};

extern "C" {

const char* lc_last_error(void) { return g_last_error.c_str(); }

const char* lc_version(void) { return "0.1.0"; }

void lc_set_threads(int n) { lc::apply_threads(n); }

lc_config* lc_config_create(void) { return new (std::nothrow) lc_config(); }

void lc_config_free(lc_config* config) { delete config; }

lc_status lc_config_load_file(lc_config* config, const char* path) {
    if (!config || !path) return fail_usage("lc_config_load_file: null argument");
    return wrap([&] { config->impl.load_file(path); });
}

lc_status lc_config_set(lc_config* config, const char* key, const char* value) {
    if (!config || !key || !value) return fail_usage("lc_config_set: null argument");
    return wrap([&] { config->impl.set(key, value); });
}

lc_status lc_config_get(const lc_config* config, const char* key, char* buf, size_t bufsize) {
    if (!config || !key) return fail_usage("lc_config_get: null argument");
    std::string v;
    const lc_status st = wrap([&] { v = config->impl.get(key); });
    if (st != LC_OK) return st;
    return copy_out(v, buf, bufsize);
}

lc_status lc_synth(const lc_config* config, const char* out_dir, lc_synth_summary* summary) {
    if (!config || !out_dir) return fail_usage("lc_synth: null argument");
    return wrap([&] {
        const lc::SynthSummary s = lc::run_synth(config->impl, out_dir);
        if (summary) {
            summary->images = s.images;
            summary->total_objects = s.total_objects;
            summary->train_images = s.train_images;
            summary->test_images = s.test_images;
        }
    });
}

lc_status lc_train(const lc_config* config, const char* manifest_path, const char* out_dir,
                   lc_train_progress_fn progress, void* user, lc_train_summary* summary) {
    if (!config || !manifest_path || !out_dir) return fail_usage("lc_train: null argument");
    return wrap([&] {
        lc::ProgressFn cb;
        if (progress)
            cb = [&](const lc::TrainReport::Epoch& e) {
                progress(e.epoch, e.lr, e.train_loss, e.val_mae, user);
            };
        const lc::TrainOutcome out = lc::run_train(config->impl, manifest_path, out_dir, cb);
        if (summary) {
            summary->train_patches = out.train_patches;
            summary->val_patches = out.val_patches;
            summary->final_val_mae =
                out.report.epochs.empty() ? 0.0 : out.report.epochs.back().val_mae;
        }
    });
}

lc_status lc_model_load(const char* checkpoint_path, lc_model** out) {
    if (!checkpoint_path || !out) return fail_usage("lc_model_load: null argument");
    return wrap([&] {
        auto* m = new lc_model();
        try {
            m->impl = lc::load_checkpoint(checkpoint_path);
        } catch (...) {
            delete m;
            throw;
        }
        *out = m;
    });
}

void lc_model_free(lc_model* model) { delete model; }

lc_status lc_model_info(const lc_model* model, char* buf, size_t bufsize) {
    if (!model) return fail_usage("lc_model_info: null argument");
    const lc::CheckpointMeta& m = model->impl.meta;
    std::string s;
    s += "arch=" + std::string(lc::arch_kind_name(m.arch)) + "\n";
    s += "r=" + std::to_string(m.r) + "\n";
    s += "sigma=" + std::to_string(m.sigma) + "\n";
    s += "s_e=" + std::to_string(m.s_e) + "\n";
    s += "target_mode=" + std::string(lc::target_mode_name(m.target_mode)) + "\n";
    s += "epochs_completed=" + std::to_string(m.epochs_completed) + "\n";
    s += "params=" + std::to_string(lc::count_params(model->impl.model)) + "\n";
    return copy_out(s, buf, bufsize);
}

lc_status lc_predict_image(lc_model* model, const char* image_path, int eval_stride,
                           int patch_size, double* count, const char* map_csv_path,
                           const char* map_pgm_path) {
    if (!model || !image_path) return fail_usage("lc_predict_image: null argument");
    return wrap([&] {
        if (patch_size > 0 && patch_size != model->impl.meta.r)
            lc::raise_usage("patch size " + std::to_string(patch_size) +
                            " conflicts with checkpoint (r=" + std::to_string(model->impl.meta.r) +
                            ")");
        const int s_e = eval_stride > 0 ? eval_stride : model->impl.meta.s_e;
        const lc::Image original = lc::read_ppm(image_path);
        const lc::Prediction pred =
            lc::predict_image(model->impl.model, model->impl.meta, original, s_e);
        if (count) *count = pred.count;
        if (map_csv_path) lc::export_count_map_csv(pred, map_csv_path);
        if (map_pgm_path) lc::export_count_map_pgm(pred, map_pgm_path);
    });
}

lc_status lc_evaluate(lc_model* model, const char* manifest_path, int eval_stride,
                      const char* report_csv_path, double* overall_mae, double* overall_mse) {
    if (!model || !manifest_path) return fail_usage("lc_evaluate: null argument");
    return wrap([&] {
        const int s_e = eval_stride > 0 ? eval_stride : model->impl.meta.s_e;
        const lc::DatasetManifest manifest = lc::load_manifest(manifest_path);
        const lc::EvalResult result =
            lc::evaluate(model->impl.model, model->impl.meta, manifest, s_e);
        if (report_csv_path) lc::write_eval_report(result, report_csv_path);
        if (overall_mae) *overall_mae = result.overall.mae;
        if (overall_mse) *overall_mse = result.overall.mse;
    });
}

}  // extern "C"
