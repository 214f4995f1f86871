#include "vtdl/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace vtdl {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {
    for (std::size_t d : shape_) {
        if (d == 0) throw Error("Tensor: zero-length dimension");
    }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size())
        throw Error("Tensor: shape does not match data length");
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

namespace {

void put_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(const unsigned char* b) {
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint32_t f32_bits_le(float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    return u;
}

} // namespace

void save_tensor(const Tensor& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("save_tensor: cannot open " + path);
    out.write("VTDL", 4);
    unsigned char version = 1;
    unsigned char rank = static_cast<unsigned char>(t.rank());
    if (t.rank() > 255) throw Error("save_tensor: rank exceeds format limit");
    out.write(reinterpret_cast<const char*>(&version), 1);
    out.write(reinterpret_cast<const char*>(&rank), 1);
    for (std::size_t d : t.shape()) {
        if (d > 0xffffffffull) throw Error("save_tensor: dimension exceeds u32");
        put_u32_le(out, static_cast<std::uint32_t>(d));
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        put_u32_le(out, f32_bits_le(static_cast<float>(t[i])));
    }
    if (!out) throw Error("save_tensor: write failed for " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("load_tensor: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "VTDL", 4) != 0)
        throw BadMagic("load_tensor: bad magic in " + path);
    unsigned char version = 0, rank = 0;
    in.read(reinterpret_cast<char*>(&version), 1);
    in.read(reinterpret_cast<char*>(&rank), 1);
    if (!in) throw TruncatedPayload("load_tensor: truncated header in " + path);
    if (version != 1)
        throw VersionMismatch("load_tensor: unsupported format version " +
                              std::to_string(int(version)));
    std::vector<std::size_t> shape(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (in.gcount() != 4) throw TruncatedPayload("load_tensor: truncated dims in " + path);
        shape[i] = get_u32_le(b);
    }
    std::size_t n = shape_product(shape);
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (in.gcount() != 4) throw TruncatedPayload("load_tensor: truncated payload in " + path);
        std::uint32_t u = get_u32_le(b);
        float f;
        std::memcpy(&f, &u, 4);
        data[i] = static_cast<double>(f);
    }
    return Tensor(std::move(shape), std::move(data));
}

Tensor forward_difference(const Tensor& t, std::size_t order) {
    if (t.rank() == 0) throw Error("forward_difference: rank-0 tensor");
    if (order == 0) return t;
    std::size_t d0 = t.shape()[0];
    if (order >= d0) throw Error("forward_difference: order too large");
    std::size_t inner = t.size() / d0;
    Tensor cur = t;
    for (std::size_t k = 0; k < order; ++k) {
        std::size_t len = d0 - k;
        std::vector<std::size_t> shape = cur.shape();
        shape[0] = len - 1;
        Tensor next(shape);
        const double* src = cur.data();
        double* dst = next.data();
        for (std::size_t j = 0; j + 1 < len; ++j) {
            const double* a = src + j * inner;
            const double* b = src + (j + 1) * inner;
            double* o = dst + j * inner;
            for (std::size_t i = 0; i < inner; ++i) o[i] = b[i] - a[i];
        }
        cur = std::move(next);
    }
    return cur;
}

} // namespace vtdl
