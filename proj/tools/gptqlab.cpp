// gptqlab: train toy fixtures, quantize them with learned rounding, sweep the
// ablation axes, evaluate accuracy, inspect reports, and run the exhaustive
// rounding oracle.

#include "gptq/experiment.hpp"
#include "gptq/intsim.hpp"
#include "gptq/model_io.hpp"
#include "gptq/train.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace gptq;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

struct CommonFlags {
    std::string config_file;
    std::string model, calib, out;
    std::string scheme, eps_domain, optimizer, loss, mask, augment, granularity;
    int bits = -1, act_bits = -1, iters = -1, batch = -1;
    double beta = -1.0, mask_fraction = -1.0, bias_alpha = -1.0;
    long long seed = -1;
    bool mixed_precision = false;
    std::string preset;
    bool paper_defaults = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_file, "configuration file (flags override it)");
    cmd->add_option("--model", f.model, "model directory");
    cmd->add_option("--calib", f.calib,
                    "calibration: dataset directory or kind "
                    "(train_split|test_split|shifted|cross_domain|white_noise)");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--scheme", f.scheme, "uniform|log|float|power");
    cmd->add_option("--bits", f.bits, "weight bit-width");
    cmd->add_option("--act-bits", f.act_bits, "activation bit-width (0 = off)");
    cmd->add_option("--eps-domain", f.eps_domain, "unit|real");
    cmd->add_option("--beta", f.beta, "soft-rounding steepness (0 = per-scheme default)");
    cmd->add_option("--optimizer", f.optimizer,
                    "sgd|nesterov|adam|adamw|adamax|adagrad|adadelta|rmsprop");
    cmd->add_option("--loss", f.loss, "l1|l2|cosine|kl");
    cmd->add_option("--mask", f.mask,
                    "none|ambiguity_most|ambiguity_least|magnitude_low|magnitude_high");
    cmd->add_option("--mask-fraction", f.mask_fraction, "trainable fraction for the mask");
    cmd->add_option("--bias-alpha", f.bias_alpha, "bias perturbation box size (0 = off)");
    cmd->add_option("--augment", f.augment, "none|dropout|mixup|cutout|noise");
    cmd->add_flag("--mixed-precision", f.mixed_precision, "per-neuron bit allocation");
    cmd->add_option("--granularity", f.granularity, "layer|block");
    cmd->add_option("--iters", f.iters, "optimization steps per unit");
    cmd->add_option("--batch", f.batch, "mini-batch size");
    cmd->add_option("--seed", f.seed, "master seed");
    cmd->add_option("--preset", f.preset, "best-practice");
    cmd->add_flag("--paper-defaults", f.paper_defaults,
                  "10000 iterations over 1024 calibration samples");
}

ExperimentConfig build_config(const CommonFlags& f) {
    ExperimentConfig cfg =
        f.config_file.empty() ? default_experiment() : parse_config_file(f.config_file);
    if (f.paper_defaults) apply_paper_defaults(cfg);
    if (!f.preset.empty()) {
        if (f.preset == "best-practice") apply_best_practice(cfg);
        else throw Error("unknown preset '" + f.preset + "' (expected best-practice)");
    }
    if (!f.model.empty()) cfg.model_path = f.model;
    if (!f.out.empty()) cfg.out_dir = f.out;
    if (!f.calib.empty()) {
        if (std::filesystem::exists(std::filesystem::path(f.calib) / "manifest.txt"))
            cfg.calib_path = f.calib;
        else {
            cfg.calib_path.clear();
            cfg.calib_kind = data_kind_from_string(f.calib);
        }
    }
    if (f.seed >= 0) {
        cfg.seed = static_cast<uint64_t>(f.seed);
        cfg.gptq.seed = cfg.seed;
    }
    if (!f.scheme.empty()) cfg.gptq.scheme = scheme_from_string(f.scheme);
    if (f.bits >= 0) cfg.gptq.bits = f.bits;
    if (f.act_bits >= 0) cfg.gptq.act_bits = f.act_bits;
    if (!f.eps_domain.empty()) cfg.gptq.domain = eps_domain_from_string(f.eps_domain);
    if (f.beta >= 0.0) cfg.gptq.beta = f.beta;
    if (!f.optimizer.empty()) cfg.gptq.optimizer = opt_kind_from_string(f.optimizer);
    if (!f.loss.empty()) cfg.gptq.loss = loss_kind_from_string(f.loss);
    if (!f.mask.empty()) cfg.gptq.mask.strategy = mask_strategy_from_string(f.mask);
    if (f.mask_fraction >= 0.0) cfg.gptq.mask.fraction = f.mask_fraction;
    if (f.bias_alpha >= 0.0) cfg.gptq.bias_alpha = f.bias_alpha;
    if (!f.augment.empty()) cfg.gptq.augment = augment_kind_from_string(f.augment);
    if (f.mixed_precision) cfg.mixed_precision = true;
    if (!f.granularity.empty()) cfg.gptq.granularity = granularity_from_string(f.granularity);
    if (f.iters >= 0) cfg.gptq.iterations = f.iters;
    if (f.batch > 0) cfg.gptq.batch_size = f.batch;
    cfg.gptq.calib_size = cfg.calib_n;
    return cfg;
}

int cmd_train_toy(const std::string& fixture, const std::string& out, int epochs, int n,
                  uint64_t seed) {
    NetworkRecord net;
    DatasetOptions opts;
    if (fixture == "mlp") {
        net = make_mlp_fixture(8, {16, 16}, 2, seed);
        opts.shape = {8};
        opts.classes = 2;
    } else if (fixture == "cnn") {
        net = make_cnn_fixture(3, seed);
        opts.shape = {1, 8, 8};
        opts.classes = 3;
    } else {
        throw Error("unknown fixture '" + fixture + "' (expected mlp|cnn)");
    }
    CalibrationSet train = make_dataset(DataKind::train_split, n, seed, opts);
    TrainResult tr = train_toy(net, train, epochs, seed);
    if (tr.diverged)
        std::fprintf(stderr, "training diverged; keeping epoch %d\n", tr.epochs_run);
    save_model(out, tr.net);
    CalibrationSet test = make_dataset(DataKind::test_split, n, seed, opts);
    std::printf("fixture %s: train accuracy %.4f, test accuracy %.4f, saved to %s\n",
                fixture.c_str(), tr.final_accuracy, top1_accuracy(tr.net, test), out.c_str());
    return 0;
}

int cmd_report(const std::string& dir) {
    std::ifstream is(std::filesystem::path(dir) / "report.csv");
    require(is.good(), "no report.csv under " + dir);
    std::string line;
    while (std::getline(is, line)) std::printf("%s\n", line.c_str());
    return 0;
}

int cmd_oracle(const std::string& weights_s, const std::string& x_s, double target,
               const std::string& offsets_s, double scale, const std::string& csv) {
    std::vector<double> w, x;
    std::vector<int64_t> offs;
    for (const std::string& s : split_list(weights_s)) w.push_back(std::stod(s));
    for (const std::string& s : split_list(x_s)) x.push_back(std::stod(s));
    for (const std::string& s : split_list(offsets_s)) offs.push_back(std::stoll(s));
    OracleResult res = oracle_uniform(w, x, offs, scale, target);
    std::printf("value %.17g, abs_error %.17g, enumerated %lld\n", res.value, res.abs_error,
                static_cast<long long>(res.enumerated));
    for (size_t i = 0; i < res.levels.size(); i++)
        std::printf("  weight %zu: level %.17g (offset %+lld from floor)\n", i, res.levels[i],
                    static_cast<long long>(res.offsets[i]));
    if (!csv.empty()) {
        std::ofstream os(csv);
        os << "weight,level,offset\n";
        for (size_t i = 0; i < res.levels.size(); i++)
            os << i << "," << res.levels[i] << "," << res.offsets[i] << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gptqlab: a desk-scale learned-rounding quantization laboratory"};
    app.require_subcommand(1);

    // train-toy
    auto* train_cmd = app.add_subcommand("train-toy", "train a full-precision fixture");
    std::string fixture = "cnn", train_out = "fixture";
    int epochs = 40, train_n = 512;
    long long train_seed = 1;
    train_cmd->add_option("--fixture", fixture, "mlp|cnn");
    train_cmd->add_option("--out", train_out, "output model directory")->required();
    train_cmd->add_option("--epochs", epochs, "training epochs");
    train_cmd->add_option("--n", train_n, "training samples");
    train_cmd->add_option("--seed", train_seed, "seed");

    // quantize
    auto* quant_cmd = app.add_subcommand("quantize", "learned-rounding quantization");
    CommonFlags qf;
    add_common_flags(quant_cmd, qf);

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "one run per factor level");
    CommonFlags sf;
    add_common_flags(sweep_cmd, sf);
    std::string factor, levels_s, seeds_s = "1";
    sweep_cmd->add_option("--factor", factor,
                          "loss|optimizer|mask|bias_alpha|eps_domain|scheme|calib_kind|augmentation")
        ->required();
    sweep_cmd->add_option("--levels", levels_s, "comma-separated levels")->required();
    sweep_cmd->add_option("--seeds", seeds_s, "comma-separated seeds");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "top-1 accuracy of a saved model");
    std::string eval_model, eval_calib;
    int eval_n = 256;
    long long eval_seed = 1;
    eval_cmd->add_option("--model", eval_model, "model directory")->required();
    eval_cmd->add_option("--calib", eval_calib, "dataset directory or kind")->required();
    eval_cmd->add_option("--n", eval_n, "samples when generating");
    eval_cmd->add_option("--seed", eval_seed, "seed when generating");

    // report
    auto* report_cmd = app.add_subcommand("report", "print a run's report");
    std::string report_dir;
    report_cmd->add_option("--in", report_dir, "run output directory")->required();

    // oracle
    auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive rounding search");
    std::string o_weights, o_x, o_offsets = "-1,0,1,2", o_csv;
    double o_target = 0.0, o_scale = 1.0;
    oracle_cmd->add_option("--weights", o_weights, "comma-separated real weights")->required();
    oracle_cmd->add_option("--x", o_x, "comma-separated input codes")->required();
    oracle_cmd->add_option("--target", o_target, "target value")->required();
    oracle_cmd->add_option("--offsets", o_offsets, "searched offsets from floor");
    oracle_cmd->add_option("--scale", o_scale, "weight grid scale");
    oracle_cmd->add_option("--csv", o_csv, "write the result as CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed())
            return cmd_train_toy(fixture, train_out, epochs, train_n,
                                 static_cast<uint64_t>(train_seed));
        if (quant_cmd->parsed()) {
            ExperimentConfig cfg = build_config(qf);
            RunOutputs ro = run_quantize(cfg);
            std::printf("quantized model: %s\n", ro.model_dir.string().c_str());
            std::printf("report: %s\n", ro.report_csv.string().c_str());
            for (const UnitReport& ur : ro.report.units)
                if (ur.has_weights)
                    std::printf("unit %d: nearest_l2 %.6g -> final_l2 %.6g%s\n", ur.unit_index,
                                ur.result.nearest_l2, ur.result.final_l2,
                                ur.result.fell_back ? " (fell back)" : "");
            return 0;
        }
        if (sweep_cmd->parsed()) {
            ExperimentConfig cfg = build_config(sf);
            std::vector<uint64_t> seeds;
            for (const std::string& s : split_list(seeds_s)) seeds.push_back(std::stoull(s));
            SweepResult sr = run_sweep(cfg, factor, split_list(levels_s), seeds);
            std::printf("sweep table: %s\n", sr.csv.string().c_str());
            for (const SweepRow& row : sr.rows) {
                std::printf("%-16s", row.level.c_str());
                for (double a : row.accuracy) std::printf(" %.4f", a);
                std::printf("\n");
            }
            return 0;
        }
        if (eval_cmd->parsed()) {
            LoadedModel lm = load_model(eval_model);
            CalibrationSet set;
            if (std::filesystem::exists(std::filesystem::path(eval_calib) / "manifest.txt")) {
                set = load_dataset(eval_calib);
            } else {
                DatasetOptions opts;
                require(!lm.net.input_shape.empty(), "model lacks an input shape");
                opts.shape = lm.net.input_shape;
                const LayerRecord& head =
                    lm.net.layers[static_cast<size_t>(weighted_layers(lm.net).back())];
                opts.classes = std::max<int>(2, static_cast<int>(head.weights.shape[0]));
                set = make_dataset(data_kind_from_string(eval_calib), eval_n,
                                   static_cast<uint64_t>(eval_seed), opts);
            }
            double acc = lm.quantized ? quantized_top1_accuracy(lm.net, lm.quant, set)
                                      : top1_accuracy(lm.net, set);
            std::printf("accuracy %.6f\n", acc);
            return 0;
        }
        if (report_cmd->parsed()) return cmd_report(report_dir);
        if (oracle_cmd->parsed())
            return cmd_oracle(o_weights, o_x, o_target, o_offsets, o_scale, o_csv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
