#pragma once

#include <map>
#include <set>
#include <string>

#include "metrics.hpp"
#include "synth.hpp"
#include "train.hpp"

namespace lc {

/// Run configuration as key=value pairs: defaults, overlaid by a config file,
/// overlaid by explicit sets (the command line), in that order. Every key is
/// validated against the known set. The effective configuration is echoed to
/// a run-log file before execution so any run can be reconstructed.
class RunConfig {
public:
    RunConfig();

    /// key=value lines; '#' starts a comment. Unknown keys are errors.
    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    const std::string& get(const std::string& key) const;
    bool was_set(const std::string& key) const;

    // Typed views (validated on access).
    ArchKind arch() const;
    LossKind loss() const;
    float delta() const;
    SamplingConfig sampling() const;  // s_r/s_e default to r/4 when never set
    OptimizerConfig optimizer() const;
    double train_fraction() const;
    std::uint64_t seed() const;
    int threads() const;
    SynthConfig synth() const;

    std::string echo() const;  // sorted key=value lines
    void write_log(const std::string& path) const;

private:
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;

    std::map<std::string, std::string> values_;
    std::set<std::string> set_keys_;
};

/// Applies the configured thread count to the process (0 = library default).
void apply_threads(int threads);

struct TrainOutcome {
    CheckpointMeta meta;
    TrainReport report;
    std::size_t train_patches = 0, val_patches = 0;
    std::vector<std::string> warnings;
    std::string checkpoint_path, report_path, runlog_path;
};

/// Full training pipeline: manifest -> working images -> density maps ->
/// patches -> 90/10 shuffle split -> channel means -> SGD -> checkpoint +
/// per-epoch report. Records marked train or val both feed patch extraction
/// (the patch-level split decides), test records are ignored here. In
/// global_count mode each whole image, resized to the network input side,
/// becomes one sample whose target is its density total.
TrainOutcome run_train(const RunConfig& config, const std::string& manifest_path,
                       const std::string& out_dir, const ProgressFn& progress = {});

SynthSummary run_synth(const RunConfig& config, const std::string& out_dir);

struct PredictOutcome {
    double count = 0.0;
    std::string map_csv_path, map_pgm_path;
};

/// s_e_override/patch_size_override of -1 mean "use the checkpoint's value";
/// a patch-size override that disagrees with the checkpoint is an error.
PredictOutcome run_predict(const std::string& checkpoint_path, const std::string& image_path,
                           int s_e_override, int patch_size_override, const std::string& out_dir);

struct EvaluateOutcome {
    EvalResult result;
    std::string report_path;
};

EvaluateOutcome run_evaluate(const std::string& checkpoint_path, const std::string& manifest_path,
                             int s_e_override, int patch_size_override, const std::string& out_dir);

}  // namespace lc
