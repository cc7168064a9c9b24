#include "longsiam/model.hpp"

#include <bit>
#include <cstring>

#include "longsiam/io_util.hpp"

namespace longsiam {

namespace {

constexpr char kMagic[8] = {'L', 'S', 'I', 'A', 'M', 'C', 'K', '1'};
constexpr uint32_t kVersion = 1;

// Checkpoint tensor enumeration: struct declaration order.
std::vector<Tensor<float>*> checkpoint_tensors(SiameseNet<float>& net) {
    std::vector<Tensor<float>*> v;
    for (int i = 0; i < 3; ++i) {
        v.push_back(&net.branch[i].conv.kernels);
        v.push_back(&net.branch[i].conv.bias);
        v.push_back(&net.branch[i].bn.gamma);
        v.push_back(&net.branch[i].bn.beta);
        v.push_back(&net.branch[i].bn.running_mean);
        v.push_back(&net.branch[i].bn.running_var);
    }
    for (DenseParams<float>* d : {&net.dense1, &net.dense2, &net.dense3}) {
        v.push_back(&d->weights);
        v.push_back(&d->bias);
    }
    for (BatchNormParams<float>* b : {&net.head_bn1, &net.head_bn2}) {
        v.push_back(&b->gamma);
        v.push_back(&b->beta);
        v.push_back(&b->running_mean);
        v.push_back(&b->running_var);
    }
    return v;
}

template <typename U>
void append_le(std::string& out, U value) {
    for (int i = 0; i < static_cast<int>(sizeof(U)); ++i)
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void append_u32(std::string& out, uint32_t v) { append_le(out, v); }
void append_i64(std::string& out, int64_t v) { append_le(out, static_cast<uint64_t>(v)); }
void append_u64(std::string& out, uint64_t v) { append_le(out, v); }
void append_f32(std::string& out, float v) { append_le(out, std::bit_cast<uint32_t>(v)); }
void append_f64(std::string& out, double v) { append_le(out, std::bit_cast<uint64_t>(v)); }

struct Reader {
    const uint8_t* p;
    size_t remaining;
    std::string path;

    void need(size_t n) const {
        if (remaining < n) throw std::runtime_error("checkpoint truncated: " + path);
    }
    template <typename U>
    U take_le() {
        need(sizeof(U));
        U v = 0;
        for (int i = 0; i < static_cast<int>(sizeof(U)); ++i)
            v |= static_cast<U>(p[i]) << (8 * i);
        p += sizeof(U);
        remaining -= sizeof(U);
        return v;
    }
    uint32_t u32() { return take_le<uint32_t>(); }
    int64_t i64() { return static_cast<int64_t>(take_le<uint64_t>()); }
    uint64_t u64() { return take_le<uint64_t>(); }
    float f32() { return std::bit_cast<float>(take_le<uint32_t>()); }
    double f64() { return std::bit_cast<double>(take_le<uint64_t>()); }
};

}  // namespace

void save_checkpoint(SiameseNet<float>& net, const std::string& path) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    append_u32(out, kVersion);
    const ModelConfig& c = net.config;
    for (int i = 0; i < 3; ++i) append_i64(out, c.input_shape[i]);
    for (int64_t f : c.block_filters) append_i64(out, f);
    for (int64_t w : c.dense_widths) append_i64(out, w);
    append_f64(out, c.leaky_alpha);
    append_f64(out, c.dropout_rate);
    append_f64(out, c.l2_coeff);
    append_f64(out, c.bn_epsilon);
    append_f64(out, c.bn_momentum);
    append_u64(out, c.seed);

    const std::vector<Tensor<float>*> tensors = checkpoint_tensors(net);
    append_u32(out, static_cast<uint32_t>(tensors.size()));
    for (const Tensor<float>* t : tensors) {
        append_u32(out, static_cast<uint32_t>(t->shape().rank()));
        for (int64_t d : t->shape().dims()) append_i64(out, d);
        for (const float& v : *t) append_f32(out, v);
    }
    atomic_write_file(path, out);
}

SiameseNet<float> load_checkpoint(const std::string& path) {
    const std::vector<uint8_t> bytes = read_file_bytes(path);
    Reader r{bytes.data(), bytes.size(), path};
    r.need(sizeof(kMagic));
    if (std::memcmp(r.p, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a model checkpoint: " + path);
    r.p += sizeof(kMagic);
    r.remaining -= sizeof(kMagic);
    const uint32_t version = r.u32();
    if (version != kVersion)
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) +
                                 " in " + path);

    ModelConfig c;
    const int64_t i0 = r.i64(), i1 = r.i64(), i2 = r.i64();
    c.input_shape = Shape{i0, i1, i2};
    for (int64_t& f : c.block_filters) f = r.i64();
    for (int64_t& w : c.dense_widths) w = r.i64();
    c.leaky_alpha = r.f64();
    c.dropout_rate = r.f64();
    c.l2_coeff = r.f64();
    c.bn_epsilon = r.f64();
    c.bn_momentum = r.f64();
    c.seed = r.u64();

    SiameseNet<float> net = build<float>(c);
    const std::vector<Tensor<float>*> tensors = checkpoint_tensors(net);
    const uint32_t count = r.u32();
    if (count != tensors.size())
        throw std::runtime_error("checkpoint tensor count mismatch in " + path);
    for (Tensor<float>* t : tensors) {
        const uint32_t rank = r.u32();
        std::vector<int64_t> dims(rank);
        for (uint32_t i = 0; i < rank; ++i) dims[i] = r.i64();
        if (Shape(dims) != t->shape())
            throw std::runtime_error("checkpoint tensor shape mismatch in " + path);
        for (float& v : *t) v = r.f32();
    }
    if (r.remaining != 0)
        throw std::runtime_error("checkpoint has trailing bytes: " + path);
    return net;
}

}  // namespace longsiam
