// Experiment runner: configuration text, the best-practice preset, the
// quantize/sweep/eval entry points behind the CLI, and CSV reporting. The
// config echo written next to each run replays to a byte-identical run.

#pragma once

#include "gptq/calib.hpp"
#include "gptq/mixedprec.hpp"
#include "gptq/reconstruct.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace gptq {

struct ExperimentConfig {
    std::string model_path;
    std::string out_dir;
    uint64_t seed = 1;

    std::string calib_path; // dataset directory; empty = generate
    DataKind calib_kind = DataKind::train_split;
    int calib_n = 256;
    uint64_t calib_seed = 1;

    GptqConfig gptq;

    bool mixed_precision = false;
    std::string mixed_precision_import; // allocation csv to replay
};

/// Desk-scale defaults: 2000 iterations, calibration 256, batch 32.
ExperimentConfig default_experiment();

/// The published defaults: 10000 iterations over 1024 calibration samples.
void apply_paper_defaults(ExperimentConfig& cfg);

/// The combined best-practice preset: no masks, no augmentation, standard
/// calibration, l2 loss, no bias optimization, adamax, real-domain rounding,
/// mixed precision on.
void apply_best_practice(ExperimentConfig& cfg);

/// Assign one `key = value` pair; unknown keys are rejected.
void set_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);

std::string config_to_text(const ExperimentConfig& cfg);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::filesystem::path& file);

struct RunOutputs {
    std::filesystem::path out_dir;
    std::filesystem::path model_dir;
    std::filesystem::path report_csv;
    std::filesystem::path config_echo;
    QuantizeReport report;
    double mean_assigned_bits = 0.0; // mixed precision only
};

/// Quantize per config and write model + report + traces + config echo.
/// Any failure removes partial outputs and rethrows.
RunOutputs run_quantize(const ExperimentConfig& cfg);

/// Top-1 accuracy of a saved model (quantized simulation when the model
/// carries quantization metadata).
double run_eval(const std::filesystem::path& model_dir, const CalibrationSet& dataset);
double run_eval(const std::filesystem::path& model_dir, const std::filesystem::path& dataset_dir);

struct SweepRow {
    std::string level;
    std::vector<double> accuracy; // one per seed
    std::vector<double> unit_final_l2;
};

struct SweepResult {
    std::string factor;
    std::vector<uint64_t> seeds;
    std::vector<SweepRow> rows;
    std::filesystem::path csv;
};

const std::vector<std::string>& sweep_factors();

/// One quantize+eval run per (level, seed); rows share everything except the
/// swept factor. Results land under out_dir/<factor>/.
SweepResult run_sweep(const ExperimentConfig& base, const std::string& factor,
                      const std::vector<std::string>& levels, const std::vector<uint64_t>& seeds);

/// Apply one sweep level to a config (exposed for the isolation test).
void apply_sweep_level(ExperimentConfig& cfg, const std::string& factor,
                       const std::string& level);

/// The dataset a config's quantize run calibrates on.
CalibrationSet calibration_for(const ExperimentConfig& cfg, const NetworkRecord& net);
/// The held-out evaluation split paired with a config.
CalibrationSet eval_set_for(const ExperimentConfig& cfg, const NetworkRecord& net, int n = 256);

} // namespace gptq
