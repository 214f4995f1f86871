#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "vtdl/clip.hpp"
#include "vtdl/rng.hpp"
#include "vtdl/tensor.hpp"

namespace vtdl::testing {

inline VideoClip random_clip(Rng& rng, std::size_t t, std::size_t h, std::size_t w,
                             std::size_t c = 3, const std::string& id = "test-clip") {
    VideoClip clip;
    clip.frames = Tensor({t, h, w, c});
    for (std::size_t i = 0; i < clip.frames.size(); ++i) clip.frames[i] = rng.uniform();
    clip.source_id = id;
    clip.crop_box = {0, 0, h, w};
    return clip;
}

// Independent k-th forward difference along axis 0, written as the plain
// recurrence rather than through the library.
inline std::vector<double> naive_diff(const std::vector<double>& data, std::size_t frames,
                                      std::size_t frame_elems, std::size_t order) {
    std::vector<double> cur(data);
    std::size_t t = frames;
    for (std::size_t k = 0; k < order; ++k) {
        std::vector<double> next((t - 1) * frame_elems);
        for (std::size_t i = 0; i + 1 < t; ++i)
            for (std::size_t j = 0; j < frame_elems; ++j)
                next[i * frame_elems + j] =
                    cur[(i + 1) * frame_elems + j] - cur[i * frame_elems + j];
        cur = std::move(next);
        --t;
    }
    return cur;
}

inline std::vector<double> random_unit(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm = 0.0;
    for (double& x : v) {
        x = rng.normal();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

} // namespace vtdl::testing
