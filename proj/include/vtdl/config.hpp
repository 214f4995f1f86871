#pragma once

#include <filesystem>
#include <string>

#include "vtdl/evaluation.hpp"
#include "vtdl/training.hpp"

namespace vtdl {

/// Everything the CLI commands need, assembled from one JSON document with
/// sections {sampling, basic_aug, tca, model, objective, train, synth,
/// probe}. Absent sections and keys keep their defaults; unknown keys are
/// rejected.
struct FullConfig {
    TrainConfig train; // carries sampling/basic_aug/tca/model/objective too
    SynthConfig synth;
    ProbeConfig probe;
    std::string echo; // the normalized document, stored in checkpoints
};

FullConfig parse_config_text(const std::string& text, const std::string& origin = "config");
FullConfig parse_config_file(const std::filesystem::path& path);
FullConfig default_config();

} // namespace vtdl
