#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vtdl {

// Base class for all library errors so callers can catch vtdl failures
// separately from generic std exceptions.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BadMagic : Error {
    using Error::Error;
};
struct VersionMismatch : Error {
    using Error::Error;
};
struct TruncatedPayload : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};

/// Dense n-dimensional tensor of doubles, row-major.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double value);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    // Flat offset for a rank-4 tensor; the video-clip layout [T,H,W,C].
    std::size_t offset4(std::size_t t, std::size_t y, std::size_t x, std::size_t c) const {
        return ((t * shape_[1] + y) * shape_[2] + x) * shape_[3] + c;
    }
    double& at4(std::size_t t, std::size_t y, std::size_t x, std::size_t c) {
        return data_[offset4(t, y, x, c)];
    }
    double at4(std::size_t t, std::size_t y, std::size_t x, std::size_t c) const {
        return data_[offset4(t, y, x, c)];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

// Binary tensor file format: magic "VTDL", version u8 = 1, rank u8,
// little-endian u32 per dim, then little-endian f32 payload, row-major.
// Doubles are narrowed to f32 on write.
void save_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path);

// k-th forward difference along axis 0. Shape [d0-k, ...]; requires k < d0.
Tensor forward_difference(const Tensor& t, std::size_t order);

} // namespace vtdl
