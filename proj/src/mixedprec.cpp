#include "gptq/mixedprec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace gptq {

SensitivityStats neuron_sensitivity(const NetworkRecord& net, const CalibrationSet& calib,
                                    const std::vector<int>& layer_indices) {
    require(calib.size() >= 1, "neuron_sensitivity: empty calibration set");
    SensitivityStats stats;
    std::vector<std::vector<double>> sums(layer_indices.size());
    std::vector<int64_t> denom(layer_indices.size(), 0);
    const int64_t chunk = 64;
    int64_t n = calib.size();
    for (int64_t start = 0; start < n; start += chunk) {
        int64_t stop = std::min(n, start + chunk);
        std::vector<int64_t> rows;
        for (int64_t i = start; i < stop; i++) rows.push_back(i);
        Tensor x = calib.stacked(rows);
        Tensor y = network_forward(net, x);
        Tensor seed(y.shape);
        for (int64_t i = 0; i < y.numel(); i++) seed[i] = 2.0 * y[i]; // d||y||^2/dy
        Gradients g = network_backward(net, x, seed);
        for (size_t li = 0; li < layer_indices.size(); li++) {
            const Tensor& pg = g.pre_act[static_cast<size_t>(layer_indices[li])];
            int64_t ch = pg.shape[1];
            int64_t per = pg.numel() / (pg.shape[0] * ch);
            if (sums[li].empty()) sums[li].assign(static_cast<size_t>(ch), 0.0);
            for (int64_t b = 0; b < pg.shape[0]; b++)
                for (int64_t c = 0; c < ch; c++) {
                    const double* base = pg.data.data() + (b * ch + c) * per;
                    for (int64_t i = 0; i < per; i++)
                        sums[li][static_cast<size_t>(c)] += std::fabs(base[i]);
                }
            denom[li] += pg.shape[0] * per;
        }
    }
    for (size_t li = 0; li < layer_indices.size(); li++)
        for (size_t c = 0; c < sums[li].size(); c++) {
            stats.neurons.push_back({layer_indices[li], static_cast<int>(c)});
            stats.g.push_back(sums[li][c] / static_cast<double>(denom[li]));
        }
    double mean = 0.0;
    for (double v : stats.g) mean += v;
    mean /= static_cast<double>(stats.g.size());
    double var = 0.0;
    for (double v : stats.g) var += (v - mean) * (v - mean);
    var /= static_cast<double>(stats.g.size()); // population variance
    stats.mu = mean;
    stats.sigma = std::sqrt(var);
    return stats;
}

double BitAllocation::mean_bits() const {
    double s = 0.0;
    for (int b : bits) s += b;
    return s / static_cast<double>(bits.size());
}

std::vector<std::vector<int>> BitAllocation::per_layer(int num_layers) const {
    std::vector<std::vector<int>> out(static_cast<size_t>(num_layers));
    for (size_t i = 0; i < neurons.size(); i++) {
        std::vector<int>& lay = out[static_cast<size_t>(neurons[i].layer)];
        if (static_cast<size_t>(neurons[i].channel) >= lay.size())
            lay.resize(static_cast<size_t>(neurons[i].channel) + 1, target_bits);
        lay[static_cast<size_t>(neurons[i].channel)] = bits[i];
    }
    return out;
}

BitAllocation allocate_bits(const SensitivityStats& stats, int target_bits) {
    require(target_bits >= kBitsFloor && target_bits <= kBitsCeil,
            "target bits out of the [2, 8] range");
    BitAllocation alloc;
    alloc.target_bits = target_bits;
    alloc.neurons = stats.neurons;
    bool degenerate = stats.sigma < 1e-12;
    for (double gv : stats.g) {
        double zi = degenerate ? 0.0 : (gv - stats.mu) / stats.sigma;
        int bi = target_bits + static_cast<int>(std::trunc(zi));
        bi = std::clamp(bi, kBitsFloor, kBitsCeil);
        alloc.z.push_back(zi);
        alloc.bits.push_back(bi);
    }
    return alloc;
}

namespace {

// trunc-toward-zero steps sit at every integer except zero: the cell (-1, 1)
// is twice as wide as the rest. Adjustment priority is the distance to the
// next step in the needed direction.
double next_step_up(double z) {
    double c = std::floor(z) + 1.0;
    return c <= -1.0 ? c : std::max(c, 1.0);
}

double next_step_down(double z) {
    double f = std::ceil(z) - 1.0;
    return f >= 1.0 ? f : std::min(f, -1.0);
}

} // namespace

BitAllocation normalize_allocation(BitAllocation alloc, int target_bits) {
    int64_t n = static_cast<int64_t>(alloc.bits.size());
    require(n > 0, "normalize_allocation: empty allocation");
    require(alloc.z.size() == alloc.bits.size(), "normalize_allocation: missing z-scores");
    auto residual = [&]() {
        int64_t sum = 0;
        for (int b : alloc.bits) sum += b;
        return static_cast<int64_t>(n) * target_bits - sum;
    };
    // clamp-saturated neurons are pinned: their width is already a compromise
    // in the opposite direction
    auto pinned_high = [&](int64_t i) {
        return target_bits + static_cast<int>(std::trunc(alloc.z[static_cast<size_t>(i)])) >
               kBitsCeil;
    };
    auto pinned_low = [&](int64_t i) {
        return target_bits + static_cast<int>(std::trunc(alloc.z[static_cast<size_t>(i)])) <
               kBitsFloor;
    };
    int64_t r = residual();
    while (r != 0) {
        bool increment = r > 0;
        std::vector<double> gap(static_cast<size_t>(n));
        for (int64_t i = 0; i < n; i++) {
            double z = alloc.z[static_cast<size_t>(i)];
            gap[static_cast<size_t>(i)] = increment ? next_step_up(z) - z : z - next_step_down(z);
        }
        std::vector<int64_t> order(static_cast<size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
            double ga = gap[static_cast<size_t>(a)], gb = gap[static_cast<size_t>(b)];
            if (ga != gb) return ga < gb; // closest to the next step first
            return a < b;
        });
        int64_t want = std::llabs(r);
        int64_t adjusted = 0;
        for (int64_t i = 0; i < n && adjusted < want; i++) {
            int64_t id = order[static_cast<size_t>(i)];
            int& b = alloc.bits[static_cast<size_t>(id)];
            if (increment && b < kBitsCeil && !pinned_low(id)) {
                b++;
                adjusted++;
            } else if (!increment && b > kBitsFloor && !pinned_high(id)) {
                b--;
                adjusted++;
            }
        }
        if (adjusted == 0) {
            alloc.infeasible = true;
            break;
        }
        r = residual();
    }
    return alloc;
}

void write_allocation_csv(const std::filesystem::path& file, const SensitivityStats& stats,
                          const BitAllocation& alloc) {
    require(stats.g.size() == alloc.bits.size(), "allocation/stats size mismatch");
    std::ofstream os(file);
    require(os.good(), "cannot write allocation csv " + file.string());
    os << "layer,neuron,g,bits\n";
    char buf[64];
    for (size_t i = 0; i < alloc.bits.size(); i++) {
        std::snprintf(buf, sizeof(buf), "%.17g", stats.g[i]);
        os << alloc.neurons[i].layer << "," << alloc.neurons[i].channel << "," << buf << ","
           << alloc.bits[i] << "\n";
    }
}

BitAllocation read_allocation_csv(const std::filesystem::path& file, SensitivityStats* stats) {
    std::ifstream is(file);
    require(is.good(), "cannot read allocation csv " + file.string());
    std::string line;
    std::getline(is, line);
    require(line == "layer,neuron,g,bits", "unexpected allocation csv header");
    BitAllocation alloc;
    if (stats) *stats = SensitivityStats{};
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        NeuronRef ref;
        std::getline(ss, cell, ',');
        ref.layer = std::stoi(cell);
        std::getline(ss, cell, ',');
        ref.channel = std::stoi(cell);
        std::getline(ss, cell, ',');
        double gv = std::stod(cell);
        std::getline(ss, cell, ',');
        int b = std::stoi(cell);
        alloc.neurons.push_back(ref);
        alloc.bits.push_back(b);
        alloc.z.push_back(0.0);
        if (stats) {
            stats->neurons.push_back(ref);
            stats->g.push_back(gv);
        }
    }
    require(!alloc.bits.empty(), "allocation csv has no rows");
    return alloc;
}

} // namespace gptq
