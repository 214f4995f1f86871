#include "vtdl/png_io.hpp"

#include <cstdio>
#include <memory>

#include <png.h>

namespace vtdl {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

ImageU8 read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw PngError("read_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw PngError("read_png: failed to allocate reader");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw PngError("read_png: failed to allocate info");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw PngError("read_png: libpng failure reading " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 width = png_get_image_width(png, info);
    png_uint_32 height = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    // Normalize everything to 8-bit gray or RGB.
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    color_type = png_get_color_type(png, info);
    std::size_t channels = (color_type == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
    if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw PngError("read_png: unsupported color type in " + path);
    }

    ImageU8 img;
    img.height = height;
    img.width = width;
    img.channels = channels;
    img.pixels.resize(std::size_t(height) * width * channels);

    std::vector<png_bytep> rows(height);
    std::size_t stride = std::size_t(width) * channels;
    for (std::size_t y = 0; y < height; ++y) rows[y] = img.pixels.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const ImageU8& image, const std::string& path) {
    if (image.channels != 1 && image.channels != 3)
        throw PngError("write_png: channels must be 1 or 3");
    if (image.pixels.size() != image.height * image.width * image.channels)
        throw PngError("write_png: pixel buffer does not match dimensions");

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw PngError("write_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw PngError("write_png: failed to allocate writer");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw PngError("write_png: failed to allocate info");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw PngError("write_png: libpng failure writing " + path);
    }

    png_init_io(png, fp.get());
    int color_type = image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::size_t stride = image.width * image.channels;
    std::vector<png_bytep> rows(image.height);
    for (std::size_t y = 0; y < image.height; ++y)
        rows[y] = const_cast<png_bytep>(image.pixels.data() + y * stride);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace vtdl
