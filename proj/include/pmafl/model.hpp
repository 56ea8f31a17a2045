#pragma once

// MLP classifier: spec, Glorot-uniform init, forward pass to logits, the
// frozen teacher with an optional prediction cache, and a self-describing
// binary checkpoint format (magic, spec dims, named tensors, trailing CRC32).

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pmafl/attacks.hpp"
#include "pmafl/data.hpp"
#include "pmafl/errors.hpp"
#include "pmafl/rng.hpp"
#include "pmafl/tensor.hpp"

namespace pmafl {

struct ModelSpec {
    std::vector<int64_t> layer_dims;  // input dim, hidden dims..., class count

    void validate() const {
        if (layer_dims.size() < 2) throw ValueError("model spec: need at least 2 layer dims");
        for (int64_t d : layer_dims) {
            if (d < 1) throw ValueError("model spec: all dims must be >= 1");
        }
    }

    int64_t input_dim() const { return layer_dims.front(); }
    int64_t num_classes() const { return layer_dims.back(); }
    size_t num_layers() const { return layer_dims.size() - 1; }

    bool operator==(const ModelSpec&) const = default;
};

inline int64_t param_count(const ModelSpec& spec) {
    int64_t n = 0;
    for (size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
        n += spec.layer_dims[l] * spec.layer_dims[l + 1] + spec.layer_dims[l + 1];
    }
    return n;
}

struct ModelParams {
    ModelSpec spec;
    std::vector<Tensor> weights;  // W_l, [dims[l] x dims[l+1]]
    std::vector<Tensor> biases;   // b_l, [dims[l+1]]

    // Same values without grad tracking; for frozen snapshots (teacher,
    // broadcast global, attack targets).
    ModelParams detached() const {
        ModelParams out;
        out.spec = spec;
        for (const auto& w : weights) out.weights.push_back(w.detach());
        for (const auto& b : biases) out.biases.push_back(b.detach());
        return out;
    }
};

// Glorot-uniform weights, zero biases; deterministic in seed.
inline ModelParams init_params(const ModelSpec& spec, uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    ModelParams p;
    p.spec = spec;
    for (size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
        const int64_t fan_in = spec.layer_dims[l];
        const int64_t fan_out = spec.layer_dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::vector<double> w(static_cast<size_t>(fan_in * fan_out));
        for (auto& v : w) v = uniform_in(rng, -bound, bound);
        p.weights.push_back(Tensor::from({fan_in, fan_out}, std::move(w), true));
        p.biases.push_back(Tensor::zeros({fan_out}, true));
    }
    return p;
}

// Logits (pre-softmax); differentiable w.r.t. both params and batch when
// either is tracked.
inline Tensor forward(const ModelParams& params, const Tensor& batch) {
    if (batch.rank() != 2 || batch.dim(1) != params.spec.input_dim()) {
        throw ShapeError("forward: batch " + shape_str(batch.shape()) + " vs input dim " +
                         std::to_string(params.spec.input_dim()));
    }
    Tensor h = batch;
    for (size_t l = 0; l < params.weights.size(); ++l) {
        h = bias_add(matmul(h, params.weights[l]), params.biases[l]);
        if (l + 1 < params.weights.size()) h = relu(h);
    }
    return h;
}

// One vanilla SGD step; returns new params, inputs untouched.
inline ModelParams sgd_step(const ModelParams& params, const GradMap& grads, double lr) {
    ModelParams out;
    out.spec = params.spec;
    auto stepped = [&](const Tensor& t) {
        Tensor g = grads.get(t);
        std::vector<double> v(t.data().size());
        for (size_t i = 0; i < v.size(); ++i) v[i] = t.data()[i] - lr * g.data()[i];
        return Tensor::from(t.shape(), std::move(v), true);
    };
    for (const auto& w : params.weights) out.weights.push_back(stepped(w));
    for (const auto& b : params.biases) out.biases.push_back(stepped(b));
    return out;
}

// ---------------------------------------------------------------------------
// Teacher

// Frozen pre-trained model serving softened class probabilities. The cache
// maps example id -> probability row computed at `temperature`; blended or
// otherwise id-less inputs always take a fresh forward pass.
class Teacher {
public:
    Teacher() = default;
    Teacher(ModelParams params, double temperature = 1.0)
        : params_(params.detached()), temperature_(temperature) {}

    const ModelParams& params() const { return params_; }
    double temperature() const { return temperature_; }

    void build_cache(const Dataset& ds) {
        cache_.clear();
        const int64_t n = ds.size();
        const int64_t chunk = 256;
        for (int64_t start = 0; start < n; start += chunk) {
            std::vector<int64_t> idx;
            for (int64_t i = start; i < std::min(n, start + chunk); ++i) idx.push_back(i);
            auto [x, y] = ds.batch(idx);
            Tensor probs = fresh_probs(x);
            const int64_t c = probs.dim(1);
            for (size_t k = 0; k < idx.size(); ++k) {
                std::vector<double> row(static_cast<size_t>(c));
                for (int64_t j = 0; j < c; ++j) row[static_cast<size_t>(j)] = probs.at(static_cast<int64_t>(k), j);
                cache_.emplace(idx[k], std::move(row));
            }
        }
    }

    void set_cache_only(bool v) { cache_only_ = v; }
    bool has_cache() const { return !cache_.empty(); }

    // Probabilities for id-addressed examples; served from the cache on hit.
    Tensor predict_rows(const Tensor& batch, const std::vector<int64_t>& ids) const {
        const int64_t bsz = batch.dim(0);
        if (static_cast<int64_t>(ids.size()) != bsz) {
            throw ShapeError("teacher: " + std::to_string(ids.size()) + " ids for batch " +
                             std::to_string(bsz));
        }
        if (cache_.empty()) {
            if (cache_only_) throw CacheMissError("teacher: cache-only mode with empty cache");
            return fresh_probs(batch);
        }
        const int64_t c = params_.spec.num_classes();
        std::vector<double> out(static_cast<size_t>(bsz * c));
        std::optional<Tensor> fresh;
        for (int64_t i = 0; i < bsz; ++i) {
            auto it = cache_.find(ids[static_cast<size_t>(i)]);
            if (it != cache_.end()) {
                std::copy(it->second.begin(), it->second.end(),
                          out.begin() + static_cast<size_t>(i * c));
            } else {
                if (cache_only_) {
                    throw CacheMissError("teacher: cache miss for example id " +
                                         std::to_string(ids[static_cast<size_t>(i)]));
                }
                if (!fresh) fresh = fresh_probs(batch);
                for (int64_t j = 0; j < c; ++j) {
                    out[static_cast<size_t>(i * c + j)] = fresh->at(i, j);
                }
            }
        }
        return Tensor::from({bsz, c}, std::move(out));
    }

    // Fresh probabilities for inputs with no identity (mixup blends).
    Tensor predict(const Tensor& batch) const { return fresh_probs(batch); }

private:
    Tensor fresh_probs(const Tensor& batch) const {
        return softmax_t(forward(params_, batch), temperature_).detach();
    }

    ModelParams params_;
    double temperature_ = 1.0;
    std::unordered_map<int64_t, std::vector<double>> cache_;
    bool cache_only_ = false;
};

// ---------------------------------------------------------------------------
// Checkpoint format

namespace detail {

inline uint32_t crc32_update(uint32_t crc, const unsigned char* data, size_t n) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    crc ^= 0xFFFFFFFFu;
    for (size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

struct CheckpointWriter {
    std::ofstream out;
    uint32_t crc = 0;

    void bytes(const void* p, size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        crc = crc32_update(crc, static_cast<const unsigned char*>(p), n);
    }
    void u32(uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
        bytes(b, 4);
    }
    void u64(uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 8);
    }
    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
};

struct CheckpointReader {
    std::ifstream in;
    uint32_t crc = 0;
    std::string path;

    void bytes(void* p, size_t n) {
        if (!in.read(static_cast<char*>(p), static_cast<std::streamsize>(n))) {
            throw IoError("checkpoint: truncated file " + path);
        }
        crc = crc32_update(crc, static_cast<const unsigned char*>(p), n);
    }
    uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
               (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    }
    uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

}  // namespace detail

constexpr char kCheckpointMagic[4] = {'P', 'M', 'A', 'F'};
constexpr uint32_t kCheckpointVersion = 1;

inline void save_params(const ModelParams& params, const std::string& path) {
    detail::CheckpointWriter w;
    w.out.open(path, std::ios::binary);
    if (!w.out) throw IoError("checkpoint: cannot write " + path);

    w.bytes(kCheckpointMagic, 4);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<uint32_t>(params.spec.layer_dims.size()));
    for (int64_t d : params.spec.layer_dims) w.u64(static_cast<uint64_t>(d));
    w.u64(static_cast<uint64_t>(param_count(params.spec)));

    auto tensor_record = [&](const std::string& name, const Tensor& t) {
        w.u32(static_cast<uint32_t>(name.size()));
        w.bytes(name.data(), name.size());
        w.u32(static_cast<uint32_t>(t.rank()));
        for (int64_t d : t.shape()) w.u64(static_cast<uint64_t>(d));
        for (double v : t.data()) w.f64(v);
    };
    w.u32(static_cast<uint32_t>(2 * params.weights.size()));
    for (size_t l = 0; l < params.weights.size(); ++l) {
        tensor_record("W" + std::to_string(l), params.weights[l]);
        tensor_record("b" + std::to_string(l), params.biases[l]);
    }

    const uint32_t crc = w.crc;
    // CRC trails the payload and is not folded into itself.
    unsigned char b[4] = {static_cast<unsigned char>(crc), static_cast<unsigned char>(crc >> 8),
                          static_cast<unsigned char>(crc >> 16),
                          static_cast<unsigned char>(crc >> 24)};
    w.out.write(reinterpret_cast<char*>(b), 4);
    if (!w.out) throw IoError("checkpoint: write failed for " + path);
}

inline ModelParams load_params(const std::string& path) {
    detail::CheckpointReader r;
    r.path = path;
    r.in.open(path, std::ios::binary);
    if (!r.in) throw IoError("checkpoint: cannot open " + path);

    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw IoError("checkpoint: bad magic in " + path);
    }
    if (r.u32() != kCheckpointVersion) throw IoError("checkpoint: unsupported version in " + path);

    ModelSpec spec;
    const uint32_t ndims = r.u32();
    for (uint32_t i = 0; i < ndims; ++i) spec.layer_dims.push_back(static_cast<int64_t>(r.u64()));
    spec.validate();
    const auto declared_count = static_cast<int64_t>(r.u64());
    if (declared_count != param_count(spec)) {
        throw IoError("checkpoint: header param count " + std::to_string(declared_count) +
                      " != spec count " + std::to_string(param_count(spec)) + " in " + path);
    }

    const uint32_t ntensors = r.u32();
    if (ntensors != 2 * (spec.layer_dims.size() - 1)) {
        throw IoError("checkpoint: tensor count mismatch in " + path);
    }

    ModelParams params;
    params.spec = spec;
    for (size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
        auto read_tensor = [&](const std::string& want_name, const Shape& want_shape) {
            const uint32_t name_len = r.u32();
            std::string name(name_len, '\0');
            r.bytes(name.data(), name_len);
            if (name != want_name) {
                throw IoError("checkpoint: expected tensor '" + want_name + "', found '" + name +
                              "' in " + path);
            }
            const uint32_t rank = r.u32();
            Shape shape;
            for (uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<int64_t>(r.u64()));
            if (shape != want_shape) {
                throw IoError("checkpoint: tensor '" + name + "' shape " + shape_str(shape) +
                              " inconsistent with spec " + shape_str(want_shape) + " in " + path);
            }
            std::vector<double> values(static_cast<size_t>(shape_numel(shape)));
            for (auto& v : values) v = r.f64();
            return Tensor::from(shape, std::move(values), true);
        };
        params.weights.push_back(
            read_tensor("W" + std::to_string(l), {spec.layer_dims[l], spec.layer_dims[l + 1]}));
        params.biases.push_back(read_tensor("b" + std::to_string(l), {spec.layer_dims[l + 1]}));
    }

    const uint32_t payload_crc = r.crc;
    unsigned char b[4];
    if (!r.in.read(reinterpret_cast<char*>(b), 4)) {
        throw IoError("checkpoint: truncated file " + path);
    }
    const uint32_t stored = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                            (static_cast<uint32_t>(b[2]) << 16) |
                            (static_cast<uint32_t>(b[3]) << 24);
    if (stored != payload_crc) throw IoError("checkpoint: CRC mismatch in " + path);
    return params;
}

// ---------------------------------------------------------------------------
// Teacher pretraining: centralized PGD adversarial training.

struct PretrainOptions {
    int epochs = 20;
    double lr = 0.1;
    int batch_size = 32;
};

inline Teacher pretrain_teacher(const Dataset& train, const ModelSpec& spec,
                                const AdvBudget& budget, const PretrainOptions& opt,
                                uint64_t seed, double teacher_temperature = 1.0) {
    ModelParams params = init_params(spec, mix_seed(seed, 0x7E));
    Rng rng(mix_seed(seed, 0xA7));

    std::vector<int64_t> order(static_cast<size_t>(train.size()));
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        shuffle_inplace(order, rng);
        int batch_index = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(opt.batch_size), ++batch_index) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(opt.batch_size));
            std::vector<int64_t> idx(order.begin() + static_cast<int64_t>(start),
                                     order.begin() + static_cast<int64_t>(end));
            auto [x, y] = train.batch(idx);

            ModelParams frozen = params.detached();
            Tensor x_adv = pgd_attack(
                [&](const Tensor& xin, const std::vector<int>& yin) {
                    return cross_entropy(forward(frozen, xin), yin);
                },
                x, y, budget, rng);

            Tensor loss = cross_entropy(forward(params, x_adv), y);
            if (!std::isfinite(loss.item())) {
                throw DivergenceError("teacher pretraining: loss is not finite at epoch " +
                                          std::to_string(epoch) + ", batch " +
                                          std::to_string(batch_index),
                                      epoch, batch_index);
            }
            params = sgd_step(params, backward(loss), opt.lr);
        }
    }
    return Teacher(params, teacher_temperature);
}

}  // namespace pmafl
