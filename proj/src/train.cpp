#include "gptq/train.hpp"

#include "gptq/optim.hpp"
#include "gptq/rng.hpp"

#include <cmath>

namespace gptq {

namespace {

Tensor he_init(std::vector<int64_t> shape, int64_t fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : t.data) v = sd * rng.next_gaussian();
    return t;
}

} // namespace

NetworkRecord make_mlp_fixture(int in_dim, const std::vector<int>& hidden, int classes,
                               uint64_t seed) {
    Rng rng(seed, 0x1417ull);
    NetworkRecord net;
    int prev = in_dim;
    for (int hsize : hidden) {
        LayerRecord l;
        l.kind = LayerKind::linear;
        l.weights = he_init({hsize, prev}, prev, rng);
        l.bias = Tensor({hsize});
        l.activation = FusedAct::relu;
        net.layers.push_back(std::move(l));
        prev = hsize;
    }
    LayerRecord head;
    head.kind = LayerKind::linear;
    head.weights = he_init({classes, prev}, prev, rng);
    head.bias = Tensor({classes});
    net.layers.push_back(std::move(head));
    for (int i = 1; i <= net.num_layers(); i++) net.block_ends.push_back(i);
    net.input_shape = {in_dim};
    net.validate();
    return net;
}

NetworkRecord make_cnn_fixture(int classes, uint64_t seed) {
    Rng rng(seed, 0xc44ull);
    NetworkRecord net;
    LayerRecord c1;
    c1.kind = LayerKind::conv2d;
    c1.weights = he_init({6, 1, 3, 3}, 9, rng);
    c1.bias = Tensor({6});
    c1.stride = 1;
    c1.padding = 1;
    c1.activation = FusedAct::relu;
    net.layers.push_back(std::move(c1));

    LayerRecord c2;
    c2.kind = LayerKind::conv2d;
    c2.weights = he_init({8, 6, 3, 3}, 54, rng);
    c2.bias = Tensor({8});
    c2.stride = 2;
    c2.padding = 1;
    c2.activation = FusedAct::relu;
    net.layers.push_back(std::move(c2));

    LayerRecord pool;
    pool.kind = LayerKind::global_avg_pool;
    net.layers.push_back(std::move(pool));

    LayerRecord flat;
    flat.kind = LayerKind::flatten;
    net.layers.push_back(std::move(flat));

    LayerRecord head;
    head.kind = LayerKind::linear;
    head.weights = he_init({classes, 8}, 8, rng);
    head.bias = Tensor({classes});
    net.layers.push_back(std::move(head));

    net.block_ends = {1, 2, 5};
    net.input_shape = {1, 8, 8};
    net.validate();
    return net;
}

namespace {

// softmax cross-entropy over rows; fills dlogits with softmax(y) - onehot
double softmax_ce(const Tensor& logits, const std::vector<int>& labels,
                  const std::vector<int64_t>& rows, Tensor* dlogits) {
    int64_t batch = logits.shape[0], classes = logits.shape[1];
    if (dlogits) *dlogits = Tensor(logits.shape);
    double total = 0.0;
    for (int64_t b = 0; b < batch; b++) {
        const double* lr = logits.data.data() + b * classes;
        double mx = lr[0];
        for (int64_t c = 1; c < classes; c++) mx = std::max(mx, lr[c]);
        double z = 0.0;
        for (int64_t c = 0; c < classes; c++) z += std::exp(lr[c] - mx);
        int y = labels[static_cast<size_t>(rows[static_cast<size_t>(b)])];
        total += -(lr[y] - mx - std::log(z));
        if (dlogits) {
            double* dr = dlogits->data.data() + b * classes;
            for (int64_t c = 0; c < classes; c++) {
                double p = std::exp(lr[c] - mx) / z;
                dr[c] = (p - (c == y ? 1.0 : 0.0)) / static_cast<double>(batch);
            }
        }
    }
    return total / static_cast<double>(batch);
}

} // namespace

TrainResult train_toy(const NetworkRecord& init, const CalibrationSet& dataset, int epochs,
                      uint64_t seed, int batch_size, double lr) {
    require(dataset.labeled(), "train_toy needs a labeled dataset");
    TrainResult res;
    res.net = init;
    if (epochs == 0) {
        res.final_accuracy = top1_accuracy(res.net, dataset);
        return res;
    }
    NetworkRecord& net = res.net;
    std::vector<int> learnable;
    for (int l = 0; l < net.num_layers(); l++)
        if (net.layers[static_cast<size_t>(l)].has_weights()) learnable.push_back(l);

    OptHyper hp;
    hp.lr = lr;
    std::vector<Optimizer> wopt, bopt;
    for (int l : learnable) {
        wopt.emplace_back(OptKind::adam, net.layers[static_cast<size_t>(l)].weights.numel(), hp);
        if (net.layers[static_cast<size_t>(l)].has_bias())
            bopt.emplace_back(OptKind::adam, net.layers[static_cast<size_t>(l)].bias.numel(), hp);
        else
            bopt.emplace_back(OptKind::adam, 1, hp); // placeholder, never stepped
    }

    int64_t n = dataset.size();
    NetworkRecord last_finite = net;
    int last_finite_epoch = 0;
    for (int ep = 0; ep < epochs; ep++) {
        // seeded shuffle, independent of memory layout
        std::vector<int64_t> order(static_cast<size_t>(n));
        for (int64_t i = 0; i < n; i++) order[static_cast<size_t>(i)] = i;
        Rng shuffle_rng(seed, hash_keys({0x0e0cull, static_cast<uint64_t>(ep)}));
        for (int64_t i = n - 1; i > 0; i--) {
            int64_t j = static_cast<int64_t>(shuffle_rng.next_below(static_cast<uint64_t>(i + 1)));
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
        }
        for (int64_t start = 0; start < n; start += batch_size) {
            int64_t stop = std::min(n, start + batch_size);
            std::vector<int64_t> rows(order.begin() + start, order.begin() + stop);
            Tensor xb = dataset.stacked(rows);
            Tensor logits, dlogits;
            double loss;
            Gradients g;
            try {
                logits = network_forward(net, xb);
                loss = softmax_ce(logits, dataset.labels, rows, &dlogits);
                if (!std::isfinite(loss)) throw Error("non-finite training loss");
                g = network_backward(net, xb, dlogits);
            } catch (const Error&) {
                // divergence: report the last epoch that stayed finite
                res.net = last_finite;
                res.epochs_run = last_finite_epoch;
                res.diverged = true;
                res.final_accuracy = top1_accuracy(res.net, dataset);
                return res;
            }
            for (size_t k = 0; k < learnable.size(); k++) {
                int l = learnable[k];
                LayerRecord& lrec = net.layers[static_cast<size_t>(l)];
                wopt[k].step(lrec.weights.data, g.weight[static_cast<size_t>(l)].data);
                if (lrec.has_bias()) bopt[k].step(lrec.bias.data, g.bias[static_cast<size_t>(l)].data);
            }
        }
        last_finite = net;
        last_finite_epoch = ep + 1;
    }
    res.epochs_run = epochs;
    res.final_accuracy = top1_accuracy(net, dataset);
    return res;
}

double top1_accuracy(const NetworkRecord& net, const CalibrationSet& dataset) {
    require(dataset.labeled(), "accuracy needs labels");
    int64_t n = dataset.size();
    int64_t correct = 0;
    const int64_t chunk = 64;
    for (int64_t start = 0; start < n; start += chunk) {
        int64_t stop = std::min(n, start + chunk);
        std::vector<int64_t> rows;
        for (int64_t i = start; i < stop; i++) rows.push_back(i);
        Tensor logits = network_forward(net, dataset.stacked(rows));
        int64_t classes = logits.shape[1];
        for (int64_t b = 0; b < stop - start; b++) {
            const double* lr = logits.data.data() + b * classes;
            int64_t arg = 0;
            for (int64_t c = 1; c < classes; c++)
                if (lr[c] > lr[arg]) arg = c;
            if (arg == dataset.labels[static_cast<size_t>(start + b)]) correct++;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

} // namespace gptq
