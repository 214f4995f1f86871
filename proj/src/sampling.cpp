#include "vtdl/sampling.hpp"

#include <cstdlib>

namespace vtdl {

VideoClip sample_clip(const VideoClip& video, std::size_t t_start, const SamplingConfig& cfg,
                      const CropBox& crop) {
    std::size_t len = video.length();
    if (len < 2) throw VideoTooShort("sample_clip: source has fewer than 2 frames");
    if (crop.top + crop.height > video.height() || crop.left + crop.width > video.width() ||
        crop.height == 0 || crop.width == 0)
        throw CropOutOfBounds("sample_clip: crop box outside frame bounds");

    std::size_t c = video.channels();
    Tensor frames({cfg.clip_len, crop.height, crop.width, c});
    for (std::size_t i = 0; i < cfg.clip_len; ++i) {
        std::size_t src_t = (t_start + i * cfg.temporal_stride) % len;
        for (std::size_t y = 0; y < crop.height; ++y) {
            const double* src = video.frames.data() +
                                video.frames.offset4(src_t, crop.top + y, crop.left, 0);
            double* dst = frames.data() + frames.offset4(i, y, 0, 0);
            std::copy(src, src + crop.width * c, dst);
        }
    }

    VideoClip out;
    out.frames = std::move(frames);
    out.source_id = video.source_id;
    out.start_timestep = t_start;
    out.temporal_stride = cfg.temporal_stride;
    out.crop_box = crop;
    return out;
}

std::vector<std::size_t> negative_start_candidates(std::size_t video_len, std::size_t t_a,
                                                   std::size_t tau) {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < video_len; ++t) {
        std::size_t gap = t > t_a ? t - t_a : t_a - t;
        if (gap > tau) out.push_back(t);
    }
    return out;
}

std::size_t draw_negative_start(Rng& rng, std::size_t video_len, std::size_t t_a,
                                std::size_t tau) {
    auto candidates = negative_start_candidates(video_len, t_a, tau);
    if (candidates.empty())
        throw VideoTooShort("draw_negative_start: no start satisfies |t_a - t| > tau");
    return candidates[rng.below(candidates.size())];
}

namespace {

// Crop boxes displaced from `anchor` by at least min_offset in some axis.
std::vector<CropBox> displaced_crop_boxes(std::size_t frame_h, std::size_t frame_w,
                                          std::size_t crop, std::size_t min_offset,
                                          const CropBox& anchor) {
    std::vector<CropBox> out;
    for (std::size_t top = 0; top + crop <= frame_h; ++top) {
        for (std::size_t left = 0; left + crop <= frame_w; ++left) {
            std::size_t dy = top > anchor.top ? top - anchor.top : anchor.top - top;
            std::size_t dx = left > anchor.left ? left - anchor.left : anchor.left - left;
            if (dy >= min_offset || dx >= min_offset) out.push_back({top, left, crop, crop});
        }
    }
    return out;
}

} // namespace

TemporalTriplet sample_triplet(const VideoClip& video, const SamplingConfig& cfg, Rng& rng) {
    std::size_t len = video.length();
    std::size_t crop = cfg.crop_size;
    if (crop > video.height() || crop > video.width())
        throw FrameTooSmall("sample_triplet: crop_size exceeds frame size of video '" +
                            video.source_id + "'");

    // Anchor starts are restricted to those admitting at least one negative.
    // Candidates below t_a exist iff t_a > tau; above iff t_a + tau < len - 1.
    std::vector<std::size_t> feasible;
    for (std::size_t t = 0; t < len; ++t) {
        if (t > cfg.tau || t + cfg.tau + 1 < len) feasible.push_back(t);
    }
    if (feasible.empty())
        throw VideoTooShort("sample_triplet: no anchor start admits a valid negative in video '" +
                            video.source_id + "'");

    std::size_t t_a = feasible[rng.below(feasible.size())];
    std::size_t max_top = video.height() - crop;
    std::size_t max_left = video.width() - crop;

    // The anchor crop is likewise restricted to positions admitting at least
    // one displaced partner; central positions on small frames may admit none.
    std::vector<CropBox> anchor_candidates;
    for (std::size_t top = 0; top <= max_top; ++top) {
        bool ok_y = top >= cfg.min_crop_offset || top + cfg.min_crop_offset <= max_top;
        for (std::size_t left = 0; left <= max_left; ++left) {
            bool ok_x = left >= cfg.min_crop_offset || left + cfg.min_crop_offset <= max_left;
            if (ok_y || ok_x) anchor_candidates.push_back({top, left, crop, crop});
        }
    }
    if (anchor_candidates.empty())
        throw FrameTooSmall("sample_triplet: no crop box displaced by min_crop_offset exists in video '" +
                            video.source_id + "'");
    CropBox anchor_crop = anchor_candidates[rng.below(anchor_candidates.size())];

    auto boxes = displaced_crop_boxes(video.height(), video.width(), crop, cfg.min_crop_offset,
                                      anchor_crop);
    if (boxes.empty())
        throw FrameTooSmall("sample_triplet: no crop box displaced by min_crop_offset exists in video '" +
                            video.source_id + "'");
    CropBox positive_crop = boxes[rng.below(boxes.size())];

    std::size_t t_n = draw_negative_start(rng, len, t_a, cfg.tau);
    CropBox negative_crop{rng.below(max_top + 1), rng.below(max_left + 1), crop, crop};

    TemporalTriplet triplet;
    triplet.anchor = sample_clip(video, t_a, cfg, anchor_crop);
    triplet.positive = sample_clip(video, t_a, cfg, positive_crop);
    triplet.negative = sample_clip(video, t_n, cfg, negative_crop);
    triplet.t_a = t_a;
    triplet.t_p = t_a;
    triplet.t_n = t_n;
    return triplet;
}

} // namespace vtdl
