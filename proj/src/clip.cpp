#include "vtdl/clip.hpp"

#include <algorithm>
#include <filesystem>

#include "vtdl/png_io.hpp"

namespace vtdl {

namespace fs = std::filesystem;

void validate_clip(const VideoClip& clip) {
    if (clip.frames.rank() != 4) throw Error("VideoClip: frames must be rank 4 [T,H,W,C]");
    if (clip.length() < 2) throw Error("VideoClip: need at least 2 frames");
    std::size_t c = clip.channels();
    if (c != 1 && c != 3) throw Error("VideoClip: channels must be 1 or 3");
    for (std::size_t i = 0; i < clip.frames.size(); ++i) {
        double v = clip.frames[i];
        if (!(v >= 0.0 && v <= 1.0)) throw Error("VideoClip: pixel value outside [0,1]");
    }
}

VideoClip load_frame_dir(const std::string& path) {
    std::vector<std::string> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(path, ec)) {
        if (entry.is_regular_file()) files.push_back(entry.path().string());
    }
    if (ec) throw Error("load_frame_dir: cannot read directory " + path);
    std::sort(files.begin(), files.end());

    std::vector<ImageU8> images;
    for (const auto& f : files) {
        if (fs::path(f).extension() != ".png") continue;
        images.push_back(read_png(f));
    }
    if (images.size() < 2)
        throw MissingFrames("load_frame_dir: fewer than 2 readable frames in " + path);

    std::size_t h = images[0].height, w = images[0].width, c = images[0].channels;
    for (const auto& img : images) {
        if (img.height != h || img.width != w || img.channels != c)
            throw InconsistentDimensions("load_frame_dir: frame dimensions differ in " + path);
    }

    std::size_t t_len = images.size();
    Tensor frames({t_len, h, w, c});
    double* out = frames.data();
    std::size_t frame_elems = h * w * c;
    for (std::size_t t = 0; t < t_len; ++t) {
        const std::uint8_t* px = images[t].pixels.data();
        double* dst = out + t * frame_elems;
        for (std::size_t i = 0; i < frame_elems; ++i) dst[i] = px[i] / 255.0;
    }

    VideoClip clip;
    clip.frames = std::move(frames);
    clip.source_id = fs::path(path).filename().string();
    clip.start_timestep = 0;
    clip.temporal_stride = 1;
    clip.crop_box = CropBox{0, 0, h, w};
    return clip;
}

Tensor frame_difference(const VideoClip& clip, std::size_t order) {
    if (order == 0) throw OrderTooLarge("frame_difference: order must be positive");
    if (order >= clip.length())
        throw OrderTooLarge("frame_difference: order " + std::to_string(order) +
                            " >= clip length " + std::to_string(clip.length()));
    return forward_difference(clip.frames, order);
}

} // namespace vtdl
