#include "gptq/calib.hpp"

#include "gptq/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace gptq {

const char* data_kind_name(DataKind k) {
    switch (k) {
    case DataKind::train_split: return "train_split";
    case DataKind::test_split: return "test_split";
    case DataKind::shifted: return "shifted";
    case DataKind::cross_domain: return "cross_domain";
    case DataKind::white_noise: return "white_noise";
    }
    return "?";
}

DataKind data_kind_from_string(const std::string& s) {
    if (s == "train_split") return DataKind::train_split;
    if (s == "test_split") return DataKind::test_split;
    if (s == "shifted") return DataKind::shifted;
    if (s == "cross_domain") return DataKind::cross_domain;
    if (s == "white_noise") return DataKind::white_noise;
    throw Error("unknown calibration kind: " + s);
}

Tensor CalibrationSet::stacked() const {
    std::vector<const Tensor*> ptrs;
    ptrs.reserve(inputs.size());
    for (const Tensor& t : inputs) ptrs.push_back(&t);
    return stack(ptrs);
}

Tensor CalibrationSet::stacked(const std::vector<int64_t>& rows) const {
    std::vector<const Tensor*> ptrs;
    ptrs.reserve(rows.size());
    for (int64_t r : rows) ptrs.push_back(&inputs[static_cast<size_t>(r)]);
    return stack(ptrs);
}

namespace {

constexpr uint64_t kTestIndexBase = 1ull << 20; // keeps test indices disjoint from train

// Deterministic class mean pattern: smooth per-class structure over the flat
// index so both image and vector shapes get separable blobs.
double class_pattern(int cls, int64_t flat, int64_t numel) {
    double t = static_cast<double>(flat) / static_cast<double>(numel);
    switch (cls % 3) {
    case 0: return 1.6 * std::sin(2.0 * 3.14159265358979323846 * t);
    case 1: return 1.6 * std::cos(2.0 * 3.14159265358979323846 * t);
    default: return 1.6 * (2.0 * t - 1.0);
    }
}

Tensor blob_sample(const DatasetOptions& opts, uint64_t seed, uint64_t global_index, int cls) {
    Tensor x(opts.shape);
    Rng rng(seed, hash_keys({0xb10bull, global_index}));
    int64_t n = x.numel();
    for (int64_t i = 0; i < n; i++)
        x[i] = class_pattern(cls, i, n) + 0.45 * rng.next_gaussian();
    return x;
}

Tensor stripe_sample(const DatasetOptions& opts, uint64_t seed, uint64_t global_index, int* label,
                     int classes) {
    Tensor x(opts.shape);
    Rng rng(seed, hash_keys({0x57e1ull, global_index}));
    int orient = static_cast<int>(rng.next_below(static_cast<uint64_t>(classes)));
    double freq = 1.0 + 2.0 * rng.next_uniform();
    double phase = rng.next_uniform(0.0, 6.28318530717958648);
    int64_t n = x.numel();
    // stripes along a direction chosen by the label bucket
    if (x.rank() == 3) {
        int64_t h = x.shape[1], w = x.shape[2];
        for (int64_t c = 0; c < x.shape[0]; c++)
            for (int64_t i = 0; i < h; i++)
                for (int64_t j = 0; j < w; j++) {
                    double u = orient % 2 == 0 ? static_cast<double>(i) : static_cast<double>(j);
                    if (orient == 2) u = static_cast<double>(i + j) * 0.5;
                    x[(c * h + i) * w + j] = std::sin(freq * u + phase);
                }
    } else {
        for (int64_t i = 0; i < n; i++)
            x[i] = std::sin(freq * static_cast<double>((orient + 1)) * 0.37 *
                                static_cast<double>(i) +
                            phase);
    }
    *label = orient;
    return x;
}

} // namespace

CalibrationSet make_dataset(DataKind kind, int n, uint64_t seed, DatasetOptions opts) {
    require(n >= 1, "dataset size must be at least 1");
    require(opts.classes >= 2, "need at least two classes");
    CalibrationSet set;
    set.kind = kind;
    set.seed = seed;
    set.sample_shape = opts.shape;
    set.inputs.reserve(static_cast<size_t>(n));
    bool labeled = kind != DataKind::white_noise;
    for (int i = 0; i < n; i++) {
        uint64_t gidx = kind == DataKind::test_split ? kTestIndexBase + static_cast<uint64_t>(i)
                                                     : static_cast<uint64_t>(i);
        set.sample_index.push_back(static_cast<int64_t>(gidx));
        switch (kind) {
        case DataKind::train_split:
        case DataKind::test_split: {
            int cls = static_cast<int>(gidx % static_cast<uint64_t>(opts.classes));
            set.inputs.push_back(blob_sample(opts, seed, gidx, cls));
            set.labels.push_back(cls);
            break;
        }
        case DataKind::shifted: {
            int cls = static_cast<int>(gidx % static_cast<uint64_t>(opts.classes));
            Tensor x = blob_sample(opts, seed, gidx, cls);
            if (opts.shift_magnitude > 0.0) {
                Rng rng(seed, hash_keys({0x5f1full, gidx}));
                double contrast = 1.0 + opts.shift_magnitude * (2.0 * rng.next_uniform() - 1.0);
                double brightness = opts.shift_magnitude * (2.0 * rng.next_uniform() - 1.0);
                for (double& v : x.data) v = contrast * v + brightness;
            }
            set.inputs.push_back(std::move(x));
            set.labels.push_back(cls);
            break;
        }
        case DataKind::cross_domain: {
            int label = 0;
            set.inputs.push_back(stripe_sample(opts, seed, gidx, &label, opts.classes));
            set.labels.push_back(label);
            break;
        }
        case DataKind::white_noise: {
            Tensor x(opts.shape);
            Rng rng(seed, hash_keys({0x3015eull, gidx}));
            for (double& v : x.data) v = rng.next_uniform(-1.0, 1.0);
            set.inputs.push_back(std::move(x));
            break;
        }
        }
    }
    if (!labeled) set.labels.clear();
    return set;
}

const char* augment_kind_name(AugmentKind k) {
    switch (k) {
    case AugmentKind::none: return "none";
    case AugmentKind::dropout: return "dropout";
    case AugmentKind::mixup: return "mixup";
    case AugmentKind::cutout: return "cutout";
    case AugmentKind::noise: return "noise";
    }
    return "?";
}

AugmentKind augment_kind_from_string(const std::string& s) {
    if (s == "none") return AugmentKind::none;
    if (s == "dropout") return AugmentKind::dropout;
    if (s == "mixup") return AugmentKind::mixup;
    if (s == "cutout") return AugmentKind::cutout;
    if (s == "noise") return AugmentKind::noise;
    throw Error("unknown augmentation: " + s);
}

double default_augment_magnitude(AugmentKind k) {
    switch (k) {
    case AugmentKind::dropout: return 0.1;
    case AugmentKind::mixup: return 0.4;
    case AugmentKind::cutout: return 0.25;
    case AugmentKind::noise: return 0.05;
    default: return 0.0;
    }
}

namespace {

double beta_draw(Rng& rng, double a) {
    // Johnk's method; fine for the small shape parameters used here
    for (int tries = 0; tries < 1000; tries++) {
        double u = std::pow(rng.next_uniform(), 1.0 / a);
        double v = std::pow(rng.next_uniform(), 1.0 / a);
        if (u + v > 0.0 && u + v <= 1.0) return u / (u + v);
    }
    return 0.5;
}

} // namespace

Tensor augment_features(const Tensor& x, AugmentKind kind, double magnitude, Rng& rng) {
    require(magnitude >= 0.0, "augmentation magnitude must be non-negative");
    if (kind == AugmentKind::none || magnitude == 0.0) return x;
    require(x.rank() >= 2, "augmentation expects a batched tensor");
    Tensor out = x;
    int64_t batch = x.shape[0];
    int64_t per = x.numel() / batch;
    switch (kind) {
    case AugmentKind::dropout: {
        require(magnitude < 1.0, "dropout rate must be below 1");
        double keep = 1.0 - magnitude;
        for (int64_t i = 0; i < out.numel(); i++)
            out[i] = rng.next_uniform() < keep ? out[i] / keep : 0.0;
        break;
    }
    case AugmentKind::mixup: {
        double lam = beta_draw(rng, magnitude);
        std::vector<int64_t> perm(static_cast<size_t>(batch));
        for (int64_t i = 0; i < batch; i++) perm[static_cast<size_t>(i)] = i;
        for (int64_t i = batch - 1; i > 0; i--) {
            int64_t j = static_cast<int64_t>(rng.next_below(static_cast<uint64_t>(i + 1)));
            std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(j)]);
        }
        for (int64_t b = 0; b < batch; b++) {
            const double* partner = x.data.data() + perm[static_cast<size_t>(b)] * per;
            double* row = out.data.data() + b * per;
            for (int64_t i = 0; i < per; i++) row[i] = lam * row[i] + (1.0 - lam) * partner[i];
        }
        break;
    }
    case AugmentKind::cutout: {
        if (x.rank() == 4) {
            int64_t h = x.shape[2], w = x.shape[3];
            int64_t side = static_cast<int64_t>(std::llround(
                magnitude * static_cast<double>(std::min(h, w))));
            if (side < 1) side = 1;
            for (int64_t b = 0; b < batch; b++) {
                int64_t i0 = static_cast<int64_t>(rng.next_below(
                    static_cast<uint64_t>(std::max<int64_t>(1, h - side + 1))));
                int64_t j0 = static_cast<int64_t>(rng.next_below(
                    static_cast<uint64_t>(std::max<int64_t>(1, w - side + 1))));
                for (int64_t c = 0; c < x.shape[1]; c++)
                    for (int64_t i = i0; i < std::min(h, i0 + side); i++)
                        for (int64_t j = j0; j < std::min(w, j0 + side); j++)
                            out.at4(b, c, i, j) = 0.0;
            }
        } else {
            // flat features: zero out a contiguous span
            int64_t span = static_cast<int64_t>(std::llround(magnitude * static_cast<double>(per)));
            if (span < 1) span = 1;
            for (int64_t b = 0; b < batch; b++) {
                int64_t i0 = static_cast<int64_t>(rng.next_below(
                    static_cast<uint64_t>(std::max<int64_t>(1, per - span + 1))));
                double* row = out.data.data() + b * per;
                for (int64_t i = i0; i < std::min(per, i0 + span); i++) row[i] = 0.0;
            }
        }
        break;
    }
    case AugmentKind::noise: {
        double sum = 0.0, sum2 = 0.0;
        for (double v : x.data) {
            sum += v;
            sum2 += v * v;
        }
        double nelem = static_cast<double>(x.numel());
        double var = sum2 / nelem - (sum / nelem) * (sum / nelem);
        double sd = var > 0.0 ? std::sqrt(var) : 0.0;
        for (int64_t i = 0; i < out.numel(); i++)
            out[i] += magnitude * sd * rng.next_gaussian();
        break;
    }
    case AugmentKind::none: break;
    }
    return out;
}

void save_dataset(const std::filesystem::path& dir, const CalibrationSet& set) {
    std::filesystem::create_directories(dir);
    std::ofstream mf(dir / "manifest.txt");
    require(mf.good(), "cannot write dataset manifest");
    mf << "gptq-dataset v1\n";
    mf << "kind " << data_kind_name(set.kind) << "\n";
    mf << "n " << set.size() << "\n";
    mf << "seed " << set.seed << "\n";
    mf << "shape";
    for (int64_t d : set.sample_shape) mf << " " << d;
    mf << "\n";
    mf << "labeled " << (set.labeled() ? 1 : 0) << "\n";
    mf.close();
    write_f64_blob(dir / "inputs.bin", set.stacked());
    if (set.labeled()) {
        std::vector<double> lab(set.labels.begin(), set.labels.end());
        Tensor lt({set.size()}, std::move(lab));
        write_f64_blob(dir / "labels.bin", lt);
    }
    std::ofstream ix(dir / "indices.txt");
    for (int64_t v : set.sample_index) ix << v << "\n";
}

CalibrationSet load_dataset(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.txt");
    require(mf.good(), "cannot open dataset manifest in " + dir.string());
    std::string magic, version;
    mf >> magic >> version;
    require(magic == "gptq-dataset", "not a dataset directory: " + dir.string());
    CalibrationSet set;
    int64_t n = 0;
    bool labeled = false;
    std::string key;
    while (mf >> key) {
        if (key == "kind") {
            std::string v;
            mf >> v;
            set.kind = data_kind_from_string(v);
        } else if (key == "n") {
            mf >> n;
        } else if (key == "seed") {
            mf >> set.seed;
        } else if (key == "shape") {
            std::string rest;
            std::getline(mf, rest);
            std::istringstream ss(rest);
            int64_t d;
            while (ss >> d) set.sample_shape.push_back(d);
        } else if (key == "labeled") {
            int v;
            mf >> v;
            labeled = v != 0;
        } else {
            throw Error("unknown dataset manifest key: " + key);
        }
    }
    require(n >= 1 && !set.sample_shape.empty(), "dataset manifest incomplete");
    int64_t per = Tensor::numel_of(set.sample_shape);
    Tensor all = read_f64_blob(dir / "inputs.bin", {n, per});
    for (int64_t i = 0; i < n; i++) {
        Tensor s(set.sample_shape);
        std::copy(all.data.begin() + i * per, all.data.begin() + (i + 1) * per, s.data.begin());
        set.inputs.push_back(std::move(s));
        set.sample_index.push_back(i);
    }
    if (labeled) {
        Tensor lt = read_f64_blob(dir / "labels.bin", {n});
        for (int64_t i = 0; i < n; i++) set.labels.push_back(static_cast<int>(lt[i]));
    }
    std::ifstream ix(dir / "indices.txt");
    if (ix.good()) {
        set.sample_index.clear();
        int64_t v;
        while (ix >> v) set.sample_index.push_back(v);
    }
    return set;
}

} // namespace gptq
