#include "vtdl/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vtdl/faults.hpp"

namespace vtdl {

const char* aug_kind_name(AugEntry::Kind kind) {
    switch (kind) {
    case AugEntry::Kind::Basic: return "basic";
    case AugEntry::Kind::InternalMix: return "internal_mix";
    case AugEntry::Kind::ExternalMix: return "external_mix";
    case AugEntry::Kind::Cutout: return "cutout";
    }
    return "unknown";
}

namespace {

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Bilinear sample of frame t at fractional (y,x), clamped to the frame edge.
inline double sample_bilinear(const Tensor& frames, std::size_t t, double y, double x,
                              std::size_t c) {
    std::size_t h = frames.dim(1), w = frames.dim(2);
    if (y < 0.0) y = 0.0;
    if (x < 0.0) x = 0.0;
    if (y > double(h - 1)) y = double(h - 1);
    if (x > double(w - 1)) x = double(w - 1);
    std::size_t y0 = static_cast<std::size_t>(y);
    std::size_t x0 = static_cast<std::size_t>(x);
    std::size_t y1 = y0 + 1 < h ? y0 + 1 : y0;
    std::size_t x1 = x0 + 1 < w ? x0 + 1 : x0;
    double fy = y - double(y0);
    double fx = x - double(x0);
    double v00 = frames.at4(t, y0, x0, c);
    double v01 = frames.at4(t, y0, x1, c);
    double v10 = frames.at4(t, y1, x0, c);
    double v11 = frames.at4(t, y1, x1, c);
    double top = v00 + fx * (v01 - v00);
    double bot = v10 + fx * (v11 - v10);
    return top + fy * (bot - top);
}

} // namespace

VideoClip basic_augment(const VideoClip& clip, const BasicAugConfig& cfg, Rng& rng,
                        AugEntry* entry) {
    std::size_t src_h = clip.height(), src_w = clip.width(), channels = clip.channels();
    std::size_t t_len = clip.length();
    std::size_t crop = cfg.crop_size;

    // All parameters are drawn once per clip and applied to every frame.
    double scale = rng.uniform(cfg.resize_lo, cfg.resize_hi);
    double angle = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg);
    std::size_t rh = static_cast<std::size_t>(std::llround(double(src_h) * scale));
    std::size_t rw = static_cast<std::size_t>(std::llround(double(src_w) * scale));
    if (rh < crop || rw < crop)
        throw CropTooLarge("basic_augment: resized frame smaller than crop_size");
    std::size_t top = rng.below(rh - crop + 1);
    std::size_t left = rng.below(rw - crop + 1);
    double brightness = rng.uniform(1.0 - cfg.brightness_jitter, 1.0 + cfg.brightness_jitter);
    double contrast = rng.uniform(1.0 - cfg.contrast_jitter, 1.0 + cfg.contrast_jitter);

    Tensor out({t_len, crop, crop, channels});
    bool identity_geometry = (angle == 0.0 && rh == src_h && rw == src_w);

    double rad = angle * std::numbers::pi / 180.0;
    double cos_a = std::cos(rad), sin_a = std::sin(rad);
    double cy = double(rh - 1) / 2.0, cx = double(rw - 1) / 2.0;
    double y_factor = rh > 1 ? double(src_h - 1) / double(rh - 1) : 0.0;
    double x_factor = rw > 1 ? double(src_w - 1) / double(rw - 1) : 0.0;

    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t y = 0; y < crop; ++y) {
            for (std::size_t x = 0; x < crop; ++x) {
                for (std::size_t c = 0; c < channels; ++c) {
                    double v;
                    if (identity_geometry) {
                        v = clip.frames.at4(t, top + y, left + x, c);
                    } else {
                        // Inverse map: crop offset, rotation about the resized
                        // center, then the resize itself; one resample total.
                        double ry = double(top + y), rx = double(left + x);
                        double sy = cy - sin_a * (rx - cx) + cos_a * (ry - cy);
                        double sx = cx + cos_a * (rx - cx) + sin_a * (ry - cy);
                        v = sample_bilinear(clip.frames, t, sy * y_factor, sx * x_factor, c);
                    }
                    if (contrast != 1.0) v = clamp01((v - 0.5) * contrast + 0.5);
                    if (brightness != 1.0) v = clamp01(v * brightness);
                    out.at4(t, y, x, c) = v;
                }
            }
        }
    }

    if (entry) {
        entry->kind = AugEntry::Kind::Basic;
        entry->scale = scale;
        entry->angle_deg = angle;
        entry->brightness = brightness;
        entry->contrast = contrast;
        entry->region = CropBox{top, left, crop, crop};
    }

    VideoClip result = clip;
    result.frames = std::move(out);
    return result;
}

VideoClip video_cutout(const VideoClip& clip, const CropBox& region) {
    if (region.top + region.height > clip.height() ||
        region.left + region.width > clip.width())
        throw RegionOutOfBounds("video_cutout: region outside frame bounds");

    VideoClip out = clip;
    std::size_t channels = clip.channels();
    for (std::size_t t = 0; t < clip.length(); ++t) {
        for (std::size_t y = region.top; y < region.top + region.height; ++y) {
            double* row = out.frames.data() + out.frames.offset4(t, y, region.left, 0);
            std::fill(row, row + region.width * channels, 0.0);
        }
    }
    return out;
}

VideoClip tca_mix(const VideoClip& clip, const Tensor& mix_frame, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("tca_mix: alpha outside [0,1]");
    if (mix_frame.rank() != 3 || mix_frame.dim(0) != clip.height() ||
        mix_frame.dim(1) != clip.width() || mix_frame.dim(2) != clip.channels())
        throw ShapeMismatch("tca_mix: mix frame shape does not match clip frames");

    std::size_t t_len = clip.length();
    std::size_t frame_elems = clip.height() * clip.width() * clip.channels();
    VideoClip out = clip;
    const double* n = mix_frame.data();
    for (std::size_t t = 0; t < t_len; ++t) {
        double a = alpha;
        if (faults::active() == faults::Fault::PerFrameAlpha && t_len > 1) {
            a = clamp01(alpha * (0.85 + 0.3 * double(t) / double(t_len - 1)));
        }
        double* f = out.frames.data() + t * frame_elems;
        for (std::size_t i = 0; i < frame_elems; ++i) f[i] = a * f[i] + (1.0 - a) * n[i];
    }
    return out;
}

namespace {

Tensor copy_frame(const VideoClip& clip, std::size_t t) {
    std::size_t h = clip.height(), w = clip.width(), c = clip.channels();
    Tensor frame({h, w, c});
    const double* src = clip.frames.data() + clip.frames.offset4(t, 0, 0, 0);
    std::copy(src, src + h * w * c, frame.data());
    return frame;
}

Tensor donor_frame(const VideoClip& donor, std::size_t h, std::size_t w, Rng& rng,
                   AugEntry* entry) {
    std::size_t idx = rng.below(donor.length());
    entry->frame_index = idx;
    if (donor.height() == h && donor.width() == w) {
        entry->region = CropBox{0, 0, h, w};
        return copy_frame(donor, idx);
    }
    if (donor.height() < h || donor.width() < w)
        throw ShapeMismatch("apply_tca: donor frames smaller than clip frames");
    std::size_t top = rng.below(donor.height() - h + 1);
    std::size_t left = rng.below(donor.width() - w + 1);
    entry->region = CropBox{top, left, h, w};
    std::size_t c = donor.channels();
    Tensor frame({h, w, c});
    for (std::size_t y = 0; y < h; ++y) {
        const double* src = donor.frames.data() + donor.frames.offset4(idx, top + y, left, 0);
        std::copy(src, src + w * c, frame.data() + (y * w) * c);
    }
    return frame;
}

} // namespace

std::pair<VideoClip, ClipAugRecord> apply_tca(const VideoClip& clip, const VideoClip* donor,
                                              const TCAConfig& cfg, Rng& rng) {
    if (cfg.enable_external_mix) {
        if (!donor) throw MissingDonor("apply_tca: external mix enabled but no donor given");
        if (donor->source_id == clip.source_id)
            throw MissingDonor("apply_tca: donor must come from a different source video");
        if (donor->channels() != clip.channels())
            throw ShapeMismatch("apply_tca: donor channel count differs");
    }

    VideoClip working = clip;
    ClipAugRecord record;

    auto run_mixes = [&]() {
        if (cfg.enable_internal_mix) {
            AugEntry entry;
            entry.kind = AugEntry::Kind::InternalMix;
            entry.frame_index = rng.below(working.length());
            entry.alpha = rng.uniform(cfg.alpha_lo, cfg.alpha_hi);
            Tensor frame = copy_frame(working, entry.frame_index);
            working = tca_mix(working, frame, entry.alpha);
            record.push_back(entry);
        }
        if (cfg.enable_external_mix) {
            AugEntry entry;
            entry.kind = AugEntry::Kind::ExternalMix;
            entry.donor_id = donor->source_id;
            Tensor frame = donor_frame(*donor, working.height(), working.width(), rng, &entry);
            entry.alpha = rng.uniform(cfg.alpha_lo, cfg.alpha_hi);
            working = tca_mix(working, frame, entry.alpha);
            record.push_back(entry);
        }
    };

    auto run_cutout = [&]() {
        if (!cfg.enable_cutout) return;
        AugEntry entry;
        entry.kind = AugEntry::Kind::Cutout;
        std::size_t h = working.height(), w = working.width();
        double fh = rng.uniform(cfg.cutout_frac_lo, cfg.cutout_frac_hi);
        double fw = rng.uniform(cfg.cutout_frac_lo, cfg.cutout_frac_hi);
        std::size_t rh = std::min<std::size_t>(h, std::size_t(std::llround(fh * double(h))));
        std::size_t rw = std::min<std::size_t>(w, std::size_t(std::llround(fw * double(w))));
        std::size_t top = rng.below(h - rh + 1);
        std::size_t left = rng.below(w - rw + 1);
        entry.region = CropBox{top, left, rh, rw};
        working = video_cutout(working, entry.region);
        record.push_back(entry);
    };

    // Cutout runs last so the zeroed region survives the cascade.
    if (faults::active() == faults::Fault::CutoutBeforeMix) {
        run_cutout();
        run_mixes();
    } else {
        run_mixes();
        run_cutout();
    }
    return {std::move(working), std::move(record)};
}

TemporalTriplet augment_triplet(TemporalTriplet triplet, const VideoClip& donor,
                                const BasicAugConfig& ba, const TCAConfig& tca, Rng& rng) {
    AugEntry entry;

    triplet.anchor = basic_augment(triplet.anchor, ba, rng, &entry);
    triplet.augmentation_record.anchor.push_back(entry);

    triplet.negative = basic_augment(triplet.negative, ba, rng, &entry);
    triplet.augmentation_record.negative.push_back(entry);

    triplet.positive = basic_augment(triplet.positive, ba, rng, &entry);
    triplet.augmentation_record.positive.push_back(entry);

    auto [mixed, record] = apply_tca(triplet.positive, &donor, tca, rng);
    triplet.positive = std::move(mixed);
    for (auto& e : record) triplet.augmentation_record.positive.push_back(e);

    if (tca.tca_on_negative) {
        auto [neg_mixed, neg_record] = apply_tca(triplet.negative, &donor, tca, rng);
        triplet.negative = std::move(neg_mixed);
        for (auto& e : neg_record) triplet.augmentation_record.negative.push_back(e);
    }
    return triplet;
}

} // namespace vtdl
