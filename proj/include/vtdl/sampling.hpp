#pragma once

#include <cstdint>
#include <vector>

#include "vtdl/aug_record.hpp"
#include "vtdl/clip.hpp"
#include "vtdl/rng.hpp"

namespace vtdl {

struct VideoTooShort : Error {
    using Error::Error;
};
struct FrameTooSmall : Error {
    using Error::Error;
};
struct CropOutOfBounds : Error {
    using Error::Error;
};

struct SamplingConfig {
    std::size_t clip_len = 16;
    std::size_t temporal_stride = 4;
    std::size_t tau = 2;              // minimum start-timestep gap, exclusive
    std::size_t crop_size = 24;
    std::size_t min_crop_offset = 6;  // anchor/positive crop displacement floor
};

struct TemporalTriplet {
    VideoClip anchor;
    VideoClip positive;
    VideoClip negative;
    std::size_t t_a = 0;
    std::size_t t_p = 0;
    std::size_t t_n = 0;
    TripletAugRecord augmentation_record;
};

/// Frames at (t_start + i*stride) mod L, spatially cropped. Short videos wrap.
VideoClip sample_clip(const VideoClip& video, std::size_t t_start, const SamplingConfig& cfg,
                      const CropBox& crop);

/// All start timesteps t in [0,L) with |t_a - t| > tau.
std::vector<std::size_t> negative_start_candidates(std::size_t video_len, std::size_t t_a,
                                                   std::size_t tau);

/// Uniform draw from negative_start_candidates; VideoTooShort when empty.
std::size_t draw_negative_start(Rng& rng, std::size_t video_len, std::size_t t_a,
                                std::size_t tau);

/// Anchor at a random feasible start and crop; positive at the same start with
/// a crop displaced by at least min_crop_offset; negative more than tau away.
TemporalTriplet sample_triplet(const VideoClip& video, const SamplingConfig& cfg, Rng& rng);

} // namespace vtdl
