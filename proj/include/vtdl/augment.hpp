#pragma once

#include <optional>
#include <utility>

#include "vtdl/aug_record.hpp"
#include "vtdl/rng.hpp"
#include "vtdl/sampling.hpp"

namespace vtdl {

struct CropTooLarge : Error {
    using Error::Error;
};
struct RegionOutOfBounds : Error {
    using Error::Error;
};
struct MissingDonor : Error {
    using Error::Error;
};

struct BasicAugConfig {
    double resize_lo = 1.0;
    double resize_hi = 1.15;
    std::size_t crop_size = 24;
    double brightness_jitter = 0.2;
    double contrast_jitter = 0.2;
    double max_rotation_deg = 10.0; // flips excluded, rotation kept small
};

struct TCAConfig {
    double alpha_lo = 0.5;
    double alpha_hi = 1.0;
    double cutout_frac_lo = 0.2;
    double cutout_frac_hi = 0.4;
    bool enable_cutout = true;
    bool enable_internal_mix = true;
    bool enable_external_mix = true;
    bool tca_on_negative = false;
};

/// One scale / crop / color / rotation draw per clip, applied to every frame.
/// Per-frame draws would corrupt the temporal structure the pipeline is built
/// to preserve.
VideoClip basic_augment(const VideoClip& clip, const BasicAugConfig& cfg, Rng& rng,
                        AugEntry* entry = nullptr);

/// Zeroes `region` in every frame; the mask is constant across time.
VideoClip video_cutout(const VideoClip& clip, const CropBox& region);

/// Every frame becomes alpha*frame + (1-alpha)*mix_frame.
VideoClip tca_mix(const VideoClip& clip, const Tensor& mix_frame, double alpha);

/// Cascade: internal mix, external mix, cutout. Donor is required only when
/// external mix is enabled and must come from a different source video.
std::pair<VideoClip, ClipAugRecord> apply_tca(const VideoClip& clip, const VideoClip* donor,
                                              const TCAConfig& cfg, Rng& rng);

/// Anchor and negative get basic augmentation; the positive additionally goes
/// through the TCA cascade (the negative too when cfg.tca_on_negative).
TemporalTriplet augment_triplet(TemporalTriplet triplet, const VideoClip& donor,
                                const BasicAugConfig& ba, const TCAConfig& tca, Rng& rng);

} // namespace vtdl
