/*
 * localcount - counting-by-regression toolkit.
 *
 * C API over the core library: a small convolutional network regresses
 * per-patch object counts from dot-annotated images; whole-image counts are
 * reconstructed by merging and normalizing overlapping window predictions.
 *
 * All functions return lc_status; on failure, lc_last_error() gives a
 * human-readable message for the calling thread. Handles are opaque and are
 * released with their matching _free function.
 */
#ifndef LOCALCOUNT_H
#define LOCALCOUNT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lc_status {
    LC_OK = 0,
    LC_ERR_USAGE = 1,   /* bad arguments or configuration */
    LC_ERR_DATA = 2,    /* missing or malformed files */
    LC_ERR_NUMERIC = 3, /* non-finite values during optimization */
} lc_status;

/* Message for the most recent failure on this thread ("" if none). */
const char* lc_last_error(void);

const char* lc_version(void);

/* Worker threads for linear algebra (0 = library default). */
void lc_set_threads(int n);

/* ------------------------------------------------------------------ */
/* Configuration: key=value pairs with defaults. Values set here       */
/* override values loaded from a file, which override the defaults.    */
/* Keys: arch, loss, delta, r, s_r, s_e, sigma, resize_factor,         */
/* target_mode, epochs, base_lr, decay_epochs, decay_factor, momentum, */
/* batch_size, train_fraction, seed, threads, and the synth keys       */
/* images, width, height, min_objects, max_objects, sequences,         */
/* test_sequences, margin, noise_stddev.                               */
/* ------------------------------------------------------------------ */

typedef struct lc_config lc_config;

lc_config* lc_config_create(void);
void lc_config_free(lc_config* config);
lc_status lc_config_load_file(lc_config* config, const char* path);
lc_status lc_config_set(lc_config* config, const char* key, const char* value);
lc_status lc_config_get(const lc_config* config, const char* key, char* buf, size_t bufsize);

/* ------------------------------------------------------------------ */
/* Synthetic dataset generation (images/, annotations/, manifest.csv). */
/* ------------------------------------------------------------------ */

typedef struct lc_synth_summary {
    int images;
    long long total_objects;
    int train_images;
    int test_images;
} lc_synth_summary;

lc_status lc_synth(const lc_config* config, const char* out_dir, lc_synth_summary* summary);

/* ------------------------------------------------------------------ */
/* Training. Writes model.ckpt, train_report.csv and run_config.log    */
/* into out_dir; no partial checkpoint is left behind on failure.      */
/* ------------------------------------------------------------------ */

typedef void (*lc_train_progress_fn)(int epoch, float lr, double train_loss, double val_mae,
                                     void* user);

typedef struct lc_train_summary {
    size_t train_patches;
    size_t val_patches;
    double final_val_mae;
} lc_train_summary;

lc_status lc_train(const lc_config* config, const char* manifest_path, const char* out_dir,
                   lc_train_progress_fn progress, void* user, lc_train_summary* summary);

/* ------------------------------------------------------------------ */
/* Prediction and evaluation with a trained checkpoint.                */
/* ------------------------------------------------------------------ */

typedef struct lc_model lc_model;

lc_status lc_model_load(const char* checkpoint_path, lc_model** out);
void lc_model_free(lc_model* model);

/* Checkpoint metadata as key=value text. */
lc_status lc_model_info(const lc_model* model, char* buf, size_t bufsize);

/* Whole-image count. eval_stride/patch_size of 0 take the checkpoint's
 * values; a nonzero patch_size that disagrees with the checkpoint is an
 * error. map_csv_path/map_pgm_path may be NULL to skip the exports. */
lc_status lc_predict_image(lc_model* model, const char* image_path, int eval_stride,
                           int patch_size, double* count, const char* map_csv_path,
                           const char* map_pgm_path);

/* Evaluates the manifest's test records; writes the per-sequence report
 * ("sequence,n,mae,mse" rows plus "overall") when report_csv_path is not
 * NULL. overall_mae/overall_mse may be NULL. */
lc_status lc_evaluate(lc_model* model, const char* manifest_path, int eval_stride,
                      const char* report_csv_path, double* overall_mae, double* overall_mse);

#ifdef __cplusplus
}
#endif

#endif /* LOCALCOUNT_H */
