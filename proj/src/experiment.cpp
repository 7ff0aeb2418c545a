#include "gptq/experiment.hpp"

#include "gptq/model_io.hpp"
#include "gptq/train.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace gptq {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw Error("expected a boolean, got '" + v + "'");
}

} // namespace

ExperimentConfig default_experiment() {
    ExperimentConfig cfg;
    cfg.gptq.iterations = 2000;
    cfg.gptq.calib_size = 256;
    cfg.gptq.batch_size = 32;
    cfg.calib_n = 256;
    return cfg;
}

void apply_paper_defaults(ExperimentConfig& cfg) {
    cfg.gptq.iterations = 10000;
    cfg.gptq.calib_size = 1024;
    cfg.gptq.batch_size = 32;
    cfg.calib_n = 1024;
}

void apply_best_practice(ExperimentConfig& cfg) {
    cfg.gptq.loss = LossKind::l2;
    cfg.gptq.mask = MaskSpec{};
    cfg.gptq.augment = AugmentKind::none;
    cfg.gptq.bias_alpha = 0.0;
    cfg.gptq.optimizer = OptKind::adamax;
    cfg.gptq.domain = EpsDomain::real_line;
    cfg.calib_kind = DataKind::train_split;
    cfg.mixed_precision = true;
}

void set_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "model") cfg.model_path = value;
    else if (key == "out") cfg.out_dir = value;
    else if (key == "seed") {
        cfg.seed = std::stoull(value);
        cfg.gptq.seed = cfg.seed;
    } else if (key == "calib.path") cfg.calib_path = value;
    else if (key == "calib.kind") cfg.calib_kind = data_kind_from_string(value);
    else if (key == "calib.n") cfg.calib_n = std::stoi(value);
    else if (key == "calib.seed") cfg.calib_seed = std::stoull(value);
    else if (key == "gptq.loss") cfg.gptq.loss = loss_kind_from_string(value);
    else if (key == "gptq.granularity") cfg.gptq.granularity = granularity_from_string(value);
    else if (key == "gptq.iterations") cfg.gptq.iterations = std::stoi(value);
    else if (key == "gptq.batch") cfg.gptq.batch_size = std::stoi(value);
    else if (key == "gptq.optimizer") cfg.gptq.optimizer = opt_kind_from_string(value);
    else if (key == "gptq.scheme") cfg.gptq.scheme = scheme_from_string(value);
    else if (key == "gptq.bits") cfg.gptq.bits = std::stoi(value);
    else if (key == "gptq.act_bits") cfg.gptq.act_bits = std::stoi(value);
    else if (key == "gptq.power_exponent") cfg.gptq.power_exponent = std::stod(value);
    else if (key == "gptq.eps_domain") cfg.gptq.domain = eps_domain_from_string(value);
    else if (key == "gptq.beta") cfg.gptq.beta = std::stod(value);
    else if (key == "gptq.mask") cfg.gptq.mask.strategy = mask_strategy_from_string(value);
    else if (key == "gptq.mask_fraction") cfg.gptq.mask.fraction = std::stod(value);
    else if (key == "gptq.bias_alpha") cfg.gptq.bias_alpha = std::stod(value);
    else if (key == "gptq.augment") cfg.gptq.augment = augment_kind_from_string(value);
    else if (key == "gptq.augment_magnitude") cfg.gptq.augment_magnitude = std::stod(value);
    else if (key == "mixed_precision") cfg.mixed_precision = parse_bool(value);
    else if (key == "mixed_precision.import") cfg.mixed_precision_import = value;
    else throw Error("unknown configuration key: " + key);
}

std::string config_to_text(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "model = " << cfg.model_path << "\n";
    os << "out = " << cfg.out_dir << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "calib.path = " << cfg.calib_path << "\n";
    os << "calib.kind = " << data_kind_name(cfg.calib_kind) << "\n";
    os << "calib.n = " << cfg.calib_n << "\n";
    os << "calib.seed = " << cfg.calib_seed << "\n";
    os << "gptq.loss = " << loss_kind_name(cfg.gptq.loss) << "\n";
    os << "gptq.granularity = " << granularity_name(cfg.gptq.granularity) << "\n";
    os << "gptq.iterations = " << cfg.gptq.iterations << "\n";
    os << "gptq.batch = " << cfg.gptq.batch_size << "\n";
    os << "gptq.optimizer = " << opt_kind_name(cfg.gptq.optimizer) << "\n";
    os << "gptq.scheme = " << scheme_name(cfg.gptq.scheme) << "\n";
    os << "gptq.bits = " << cfg.gptq.bits << "\n";
    os << "gptq.act_bits = " << cfg.gptq.act_bits << "\n";
    os << "gptq.power_exponent = " << fmt_double(cfg.gptq.power_exponent) << "\n";
    os << "gptq.eps_domain = " << eps_domain_name(cfg.gptq.domain) << "\n";
    os << "gptq.beta = " << fmt_double(cfg.gptq.beta) << "\n";
    os << "gptq.mask = " << mask_strategy_name(cfg.gptq.mask.strategy) << "\n";
    os << "gptq.mask_fraction = " << fmt_double(cfg.gptq.mask.fraction) << "\n";
    os << "gptq.bias_alpha = " << fmt_double(cfg.gptq.bias_alpha) << "\n";
    os << "gptq.augment = " << augment_kind_name(cfg.gptq.augment) << "\n";
    os << "gptq.augment_magnitude = " << fmt_double(cfg.gptq.augment_magnitude) << "\n";
    os << "mixed_precision = " << (cfg.mixed_precision ? "true" : "false") << "\n";
    os << "mixed_precision.import = " << cfg.mixed_precision_import << "\n";
    return os.str();
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg = default_experiment();
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        lineno++;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        require(eq != std::string::npos,
                "config line " + std::to_string(lineno) + " is not 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        set_config_key(cfg, key, value);
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& file) {
    std::ifstream is(file);
    require(is.good(), "cannot open config file " + file.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

CalibrationSet calibration_for(const ExperimentConfig& cfg, const NetworkRecord& net) {
    if (!cfg.calib_path.empty()) return load_dataset(cfg.calib_path);
    DatasetOptions opts;
    require(!net.input_shape.empty(), "model does not declare its input shape");
    opts.shape = net.input_shape;
    const LayerRecord& head = net.layers[static_cast<size_t>(weighted_layers(net).back())];
    opts.classes = std::max<int>(2, static_cast<int>(head.weights.shape[0]));
    return make_dataset(cfg.calib_kind, cfg.calib_n, cfg.calib_seed, opts);
}

CalibrationSet eval_set_for(const ExperimentConfig& cfg, const NetworkRecord& net, int n) {
    DatasetOptions opts;
    require(!net.input_shape.empty(), "model does not declare its input shape");
    opts.shape = net.input_shape;
    const LayerRecord& head = net.layers[static_cast<size_t>(weighted_layers(net).back())];
    opts.classes = std::max<int>(2, static_cast<int>(head.weights.shape[0]));
    return make_dataset(DataKind::test_split, n, cfg.calib_seed, opts);
}

namespace {

void write_trace_csv(const std::filesystem::path& file, const std::vector<UnitTracePoint>& trace) {
    std::ofstream os(file);
    require(os.good(), "cannot write trace " + file.string());
    os << "step,train_loss,val_loss\n";
    for (const UnitTracePoint& p : trace)
        os << p.step << "," << fmt_double(p.train_loss) << "," << fmt_double(p.val_loss) << "\n";
}

} // namespace

RunOutputs run_quantize(const ExperimentConfig& cfg) {
    require(!cfg.model_path.empty(), "no model path configured");
    require(std::filesystem::exists(std::filesystem::path(cfg.model_path) / "manifest.txt"),
            "model not found at " + cfg.model_path);
    require(!cfg.out_dir.empty(), "no output directory configured");

    std::filesystem::path out(cfg.out_dir);
    bool created = !std::filesystem::exists(out);
    std::filesystem::create_directories(out);
    try {
        LoadedModel lm = load_model(cfg.model_path);
        require(!lm.quantized, "model is already quantized");
        CalibrationSet calib = calibration_for(cfg, lm.net);
        require(calib.size() >= cfg.gptq.batch_size,
                "calibration set smaller than the batch size");

        RunOutputs ro;
        ro.out_dir = out;

        std::vector<std::vector<int>> channel_bits;
        const std::vector<std::vector<int>>* bits_ptr = nullptr;
        if (cfg.mixed_precision) {
            std::vector<int> wl = weighted_layers(lm.net);
            std::vector<int> middle(wl.begin() + 1, wl.end());
            if (!middle.empty()) middle.pop_back();
            if (!middle.empty()) {
                SensitivityStats stats;
                BitAllocation alloc;
                if (!cfg.mixed_precision_import.empty()) {
                    alloc = read_allocation_csv(cfg.mixed_precision_import, &stats);
                    alloc.target_bits = cfg.gptq.bits;
                } else {
                    stats = neuron_sensitivity(lm.net, calib, middle);
                    alloc = normalize_allocation(allocate_bits(stats, cfg.gptq.bits),
                                                 cfg.gptq.bits);
                }
                channel_bits = alloc.per_layer(lm.net.num_layers());
                bits_ptr = &channel_bits;
                ro.mean_assigned_bits = alloc.mean_bits();
                write_allocation_csv(out / "allocation.csv", stats, alloc);
            }
        }

        QuantizedNetwork qn = quantize_network(lm.net, calib, cfg.gptq, bits_ptr, &ro.report);

        ro.model_dir = out / "model";
        save_model(ro.model_dir, qn.net, &qn.meta);

        ro.config_echo = out / "config.echo";
        {
            std::ofstream os(ro.config_echo);
            os << config_to_text(cfg);
        }

        ro.report_csv = out / "report.csv";
        {
            std::ofstream os(ro.report_csv);
            require(os.good(), "cannot write report");
            std::istringstream echo(config_to_text(cfg));
            std::string line;
            while (std::getline(echo, line)) os << "# " << line << "\n";
            os << "# scale_fallback = " << (ro.report.scale_fallback ? 1 : 0) << "\n";
            os << "# boundary_inits = " << ro.report.boundary_inits << "\n";
            if (cfg.mixed_precision)
                os << "# mean_assigned_bits = " << fmt_double(ro.mean_assigned_bits) << "\n";
            os << "unit,layers,weighted,nearest_l2,final_l2,fell_back,aborted,trace\n";
            for (const UnitReport& ur : ro.report.units) {
                std::string trace_name = "trace_unit" + std::to_string(ur.unit_index) + ".csv";
                if (ur.has_weights) write_trace_csv(out / trace_name, ur.result.trace);
                os << ur.unit_index << ",";
                for (size_t i = 0; i < ur.layer_indices.size(); i++)
                    os << (i ? ";" : "") << ur.layer_indices[i];
                os << "," << (ur.has_weights ? 1 : 0) << "," << fmt_double(ur.result.nearest_l2)
                   << "," << fmt_double(ur.result.final_l2) << "," << (ur.result.fell_back ? 1 : 0)
                   << "," << (ur.result.aborted ? 1 : 0) << ","
                   << (ur.has_weights ? trace_name : "") << "\n";
            }
        }

        // wall-clock lives apart from the deterministic outputs
        {
            std::ofstream os(out / "timing.csv");
            os << "unit,wall_seconds\n";
            for (const UnitReport& ur : ro.report.units)
                os << ur.unit_index << "," << fmt_double(ur.wall_seconds) << "\n";
        }
        return ro;
    } catch (...) {
        if (created) std::filesystem::remove_all(out);
        throw;
    }
}

double run_eval(const std::filesystem::path& model_dir, const CalibrationSet& dataset) {
    LoadedModel lm = load_model(model_dir);
    return lm.quantized ? quantized_top1_accuracy(lm.net, lm.quant, dataset)
                        : top1_accuracy(lm.net, dataset);
}

double run_eval(const std::filesystem::path& model_dir, const std::filesystem::path& dataset_dir) {
    return run_eval(model_dir, load_dataset(dataset_dir));
}

const std::vector<std::string>& sweep_factors() {
    static const std::vector<std::string> factors = {
        "loss",       "optimizer", "mask",       "bias_alpha",
        "eps_domain", "scheme",    "calib_kind", "augmentation"};
    return factors;
}

void apply_sweep_level(ExperimentConfig& cfg, const std::string& factor,
                       const std::string& level) {
    if (factor == "loss") cfg.gptq.loss = loss_kind_from_string(level);
    else if (factor == "optimizer") cfg.gptq.optimizer = opt_kind_from_string(level);
    else if (factor == "mask") {
        cfg.gptq.mask.strategy = mask_strategy_from_string(level);
        switch (cfg.gptq.mask.strategy) {
        case MaskStrategy::ambiguity_most:
        case MaskStrategy::ambiguity_least: cfg.gptq.mask.fraction = 0.005; break;
        case MaskStrategy::magnitude_low:
        case MaskStrategy::magnitude_high: cfg.gptq.mask.fraction = 0.10; break;
        default: cfg.gptq.mask.fraction = 1.0; break;
        }
    } else if (factor == "bias_alpha") cfg.gptq.bias_alpha = std::stod(level);
    else if (factor == "eps_domain") cfg.gptq.domain = eps_domain_from_string(level);
    else if (factor == "scheme") cfg.gptq.scheme = scheme_from_string(level);
    else if (factor == "calib_kind") cfg.calib_kind = data_kind_from_string(level);
    else if (factor == "augmentation") cfg.gptq.augment = augment_kind_from_string(level);
    else {
        std::string valid;
        for (const std::string& f : sweep_factors()) valid += (valid.empty() ? "" : "|") + f;
        throw Error("unknown sweep factor '" + factor + "' (expected " + valid + ")");
    }
}

SweepResult run_sweep(const ExperimentConfig& base, const std::string& factor,
                      const std::vector<std::string>& levels, const std::vector<uint64_t>& seeds) {
    require(!levels.empty() && !seeds.empty(), "sweep needs levels and seeds");
    {
        ExperimentConfig probe = base; // reject unknown factors before running
        apply_sweep_level(probe, factor, levels.front());
    }
    SweepResult sr;
    sr.factor = factor;
    sr.seeds = seeds;
    std::filesystem::path root = std::filesystem::path(base.out_dir) / ("sweep_" + factor);
    std::filesystem::create_directories(root);
    LoadedModel lm = load_model(base.model_path);
    for (const std::string& level : levels) {
        SweepRow row;
        row.level = level;
        for (uint64_t seed : seeds) {
            ExperimentConfig cfg = base;
            apply_sweep_level(cfg, factor, level);
            cfg.seed = seed;
            cfg.gptq.seed = seed;
            cfg.out_dir =
                (root / (level + "_seed" + std::to_string(seed))).string();
            RunOutputs ro = run_quantize(cfg);
            CalibrationSet eval_set = eval_set_for(cfg, lm.net);
            row.accuracy.push_back(run_eval(ro.model_dir, eval_set));
            for (const UnitReport& ur : ro.report.units)
                if (ur.has_weights) row.unit_final_l2.push_back(ur.result.final_l2);
        }
        sr.rows.push_back(std::move(row));
    }
    sr.csv = root / "sweep.csv";
    std::ofstream os(sr.csv);
    require(os.good(), "cannot write sweep csv");
    os << "factor,level";
    for (uint64_t s : seeds) os << ",acc_seed" << s;
    os << "\n";
    for (const SweepRow& row : sr.rows) {
        os << factor << "," << row.level;
        for (double a : row.accuracy) os << "," << fmt_double(a);
        os << "\n";
    }
    return sr;
}

} // namespace gptq
