#include "gptq/model_io.hpp"

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gptq {

namespace {

// %.17g round-trips doubles exactly and keeps the manifest readable
std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_f64_blob(const std::filesystem::path& file, const Tensor& t) {
    std::ofstream os(file, std::ios::binary);
    require(os.good(), "cannot write blob " + file.string());
    for (double v : t.data) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        unsigned char raw[8];
        for (int i = 0; i < 8; i++) raw[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
        os.write(reinterpret_cast<const char*>(raw), 8);
    }
    require(os.good(), "write failed for blob " + file.string());
}

Tensor read_f64_blob(const std::filesystem::path& file, const std::vector<int64_t>& shape) {
    std::ifstream is(file, std::ios::binary);
    require(is.good(), "cannot read blob " + file.string());
    Tensor t(shape);
    for (double& v : t.data) {
        unsigned char raw[8];
        is.read(reinterpret_cast<char*>(raw), 8);
        require(is.good(), "blob " + file.string() + " truncated");
        uint64_t bits = 0;
        for (int i = 0; i < 8; i++) bits |= static_cast<uint64_t>(raw[i]) << (8 * i);
        std::memcpy(&v, &bits, sizeof(v));
    }
    return t;
}

void save_model(const std::filesystem::path& dir, const NetworkRecord& net,
                const std::vector<LayerQuantMeta>* quant) {
    net.validate();
    std::filesystem::create_directories(dir);
    std::ostringstream mf;
    mf << "gptq-model v1\n";
    mf << "layers " << net.num_layers() << "\n";
    mf << "blocks";
    for (int e : net.block_ends) mf << " " << e;
    mf << "\n";
    if (!net.input_shape.empty()) {
        mf << "input";
        for (int64_t d : net.input_shape) mf << " " << d;
        mf << "\n";
    }
    for (int l = 0; l < net.num_layers(); l++) {
        const LayerRecord& lr = net.layers[static_cast<size_t>(l)];
        mf << "layer " << l << " " << layer_kind_name(lr.kind);
        if (lr.kind == LayerKind::conv2d)
            mf << " stride " << lr.stride << " padding " << lr.padding;
        if (lr.kind == LayerKind::residual_add) mf << " skip " << lr.skip_from;
        if (lr.activation == FusedAct::relu) mf << " act relu";
        if (lr.has_weights()) {
            mf << " weights";
            for (int64_t d : lr.weights.shape) mf << " " << d;
        }
        if (lr.has_bias()) mf << " bias " << lr.bias.shape[0];
        mf << "\n";
        if (lr.has_weights())
            write_f64_blob(dir / ("w" + std::to_string(l) + ".bin"), lr.weights);
        if (lr.has_bias()) write_f64_blob(dir / ("b" + std::to_string(l) + ".bin"), lr.bias);
    }
    if (quant) {
        require(quant->size() == net.layers.size(), "quant metadata count mismatch");
        for (int l = 0; l < net.num_layers(); l++) {
            const LayerQuantMeta& qm = (*quant)[static_cast<size_t>(l)];
            if (!qm.quantized && qm.act_bits == 0) continue;
            mf << "quant " << l << " scheme " << scheme_name(qm.scheme);
            mf << " wbits";
            for (int b : qm.wbits) mf << " " << b;
            mf << " power_exponent " << fmt_double(qm.power_exponent);
            mf << " float_layout " << qm.float_layout.exponent_bits << " "
               << qm.float_layout.mantissa_bits;
            mf << " act_bits " << qm.act_bits << " act_scale " << fmt_double(qm.act_scale)
               << "\n";
            if (!qm.wscales.empty()) {
                Tensor sc({static_cast<int64_t>(qm.wscales.size())},
                          std::vector<double>(qm.wscales));
                write_f64_blob(dir / ("s" + std::to_string(l) + ".bin"), sc);
            }
        }
    }
    std::ofstream out(dir / "manifest.txt");
    require(out.good(), "cannot write manifest in " + dir.string());
    out << mf.str();
    require(out.good(), "manifest write failed");
}

LoadedModel load_model(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.txt");
    require(is.good(), "cannot open model manifest in " + dir.string());
    std::string magic, version;
    is >> magic >> version;
    require(magic == "gptq-model", "not a model directory: " + dir.string());
    LoadedModel lm;
    std::string key;
    int nlayers = 0;
    is >> key >> nlayers;
    require(key == "layers" && nlayers > 0, "bad manifest: expected layer count");
    is >> key;
    require(key == "blocks", "bad manifest: expected block list");
    {
        std::string rest;
        std::getline(is, rest);
        std::istringstream ss(rest);
        int e;
        while (ss >> e) lm.net.block_ends.push_back(e);
    }
    lm.net.layers.resize(static_cast<size_t>(nlayers));
    lm.quant.resize(static_cast<size_t>(nlayers));
    struct Pending {
        std::vector<int64_t> wshape;
        int64_t blen = 0;
    };
    std::vector<Pending> pending(static_cast<size_t>(nlayers));
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "input") {
            int64_t d;
            while (ss >> d) lm.net.input_shape.push_back(d);
        } else if (tag == "layer") {
            int l;
            std::string kind;
            ss >> l >> kind;
            require(l >= 0 && l < nlayers, "layer index out of range in manifest");
            LayerRecord& lr = lm.net.layers[static_cast<size_t>(l)];
            lr.kind = layer_kind_from_string(kind);
            std::string field;
            while (ss >> field) {
                if (field == "stride") ss >> lr.stride;
                else if (field == "padding") ss >> lr.padding;
                else if (field == "skip") ss >> lr.skip_from;
                else if (field == "act") {
                    std::string a;
                    ss >> a;
                    require(a == "relu", "unknown fused activation: " + a);
                    lr.activation = FusedAct::relu;
                } else if (field == "weights") {
                    int64_t d;
                    int rank = lr.kind == LayerKind::conv2d ? 4 : 2;
                    for (int i = 0; i < rank; i++) {
                        require(static_cast<bool>(ss >> d), "truncated weight shape");
                        pending[static_cast<size_t>(l)].wshape.push_back(d);
                    }
                } else if (field == "bias") {
                    ss >> pending[static_cast<size_t>(l)].blen;
                } else {
                    throw Error("unknown layer field in manifest: " + field);
                }
            }
        } else if (tag == "quant") {
            int l;
            ss >> l;
            require(l >= 0 && l < nlayers, "quant layer index out of range");
            LayerQuantMeta& qm = lm.quant[static_cast<size_t>(l)];
            lm.quantized = true;
            std::string field;
            while (ss >> field) {
                if (field == "scheme") {
                    std::string v;
                    ss >> v;
                    qm.scheme = scheme_from_string(v);
                } else if (field == "wbits") {
                    // integers up to the next non-numeric field
                    while (true) {
                        ss >> std::ws;
                        int c = ss.peek();
                        if (c == EOF || !std::isdigit(static_cast<unsigned char>(c))) break;
                        int b;
                        ss >> b;
                        qm.wbits.push_back(b);
                    }
                    qm.quantized = !qm.wbits.empty();
                } else if (field == "power_exponent") {
                    ss >> qm.power_exponent;
                } else if (field == "float_layout") {
                    ss >> qm.float_layout.exponent_bits >> qm.float_layout.mantissa_bits;
                } else if (field == "act_bits") {
                    ss >> qm.act_bits;
                } else if (field == "act_scale") {
                    ss >> qm.act_scale;
                } else {
                    throw Error("unknown quant field in manifest: " + field);
                }
            }
        } else {
            throw Error("unknown manifest entry: " + tag);
        }
    }
    for (int l = 0; l < nlayers; l++) {
        LayerRecord& lr = lm.net.layers[static_cast<size_t>(l)];
        const Pending& p = pending[static_cast<size_t>(l)];
        if (!p.wshape.empty())
            lr.weights = read_f64_blob(dir / ("w" + std::to_string(l) + ".bin"), p.wshape);
        if (p.blen > 0) lr.bias = read_f64_blob(dir / ("b" + std::to_string(l) + ".bin"), {p.blen});
        LayerQuantMeta& qm = lm.quant[static_cast<size_t>(l)];
        if (qm.quantized && !qm.wbits.empty()) {
            std::filesystem::path sp = dir / ("s" + std::to_string(l) + ".bin");
            if (std::filesystem::exists(sp)) {
                Tensor sc = read_f64_blob(sp, {static_cast<int64_t>(qm.wbits.size())});
                qm.wscales = sc.data;
            }
        }
    }
    lm.net.validate();
    return lm;
}

} // namespace gptq
