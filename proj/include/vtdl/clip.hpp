#pragma once

#include <string>

#include "vtdl/tensor.hpp"

namespace vtdl {

struct MissingFrames : Error {
    using Error::Error;
};
struct InconsistentDimensions : Error {
    using Error::Error;
};
struct OrderTooLarge : Error {
    using Error::Error;
};

struct CropBox {
    std::size_t top = 0;
    std::size_t left = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    bool operator==(const CropBox&) const = default;
};

/// A video clip: frames [T,H,W,C] in [0,1] plus provenance.
/// start_timestep and temporal_stride are in source-video frame units.
struct VideoClip {
    Tensor frames;
    std::string source_id;
    std::size_t start_timestep = 0;
    std::size_t temporal_stride = 1;
    CropBox crop_box;

    std::size_t length() const { return frames.dim(0); }
    std::size_t height() const { return frames.dim(1); }
    std::size_t width() const { return frames.dim(2); }
    std::size_t channels() const { return frames.dim(3); }
};

// Validates T >= 2, C in {1,3} and the [0,1] pixel range.
void validate_clip(const VideoClip& clip);

// Stacks the PNG images of a directory, lexicographic filename order,
// pixel values scaled by 1/255.
VideoClip load_frame_dir(const std::string& path);

// k-th forward difference along the time axis; output [T-k,H,W,C].
Tensor frame_difference(const VideoClip& clip, std::size_t order);

} // namespace vtdl
