#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vtdl/tensor.hpp"

namespace vtdl {

struct PngError : Error {
    using Error::Error;
};

// 8-bit image, row-major [H,W,C] with C = 1 (gray) or 3 (RGB).
struct ImageU8 {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<std::uint8_t> pixels;
};

ImageU8 read_png(const std::string& path);
void write_png(const ImageU8& image, const std::string& path);

} // namespace vtdl
