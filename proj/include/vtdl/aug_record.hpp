#pragma once

#include <string>
#include <vector>

#include "vtdl/clip.hpp"

namespace vtdl {

/// One applied transform, with the parameters that were drawn for it.
struct AugEntry {
    enum class Kind { Basic, InternalMix, ExternalMix, Cutout };

    Kind kind = Kind::Basic;

    // mixes
    double alpha = 1.0;
    std::size_t frame_index = 0;
    std::string donor_id;

    // cutout region, or the spatial crop for Basic / ExternalMix
    CropBox region;

    // basic augmentation draws
    double scale = 1.0;
    double angle_deg = 0.0;
    double brightness = 1.0;
    double contrast = 1.0;
};

using ClipAugRecord = std::vector<AugEntry>;

struct TripletAugRecord {
    ClipAugRecord anchor;
    ClipAugRecord positive;
    ClipAugRecord negative;
};

const char* aug_kind_name(AugEntry::Kind kind);

} // namespace vtdl
