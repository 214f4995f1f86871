#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vtdl/model.hpp"
#include "vtdl/sampling.hpp"

namespace vtdl {

struct ConfigInfeasible : Error {
    using Error::Error;
};

/// Moving-square motion dataset: the class is the motion direction, while
/// background and square color are drawn independently of it, so appearance
/// carries no label information by construction.
struct SynthConfig {
    std::size_t n_classes = 4; // up / down / left / right
    std::size_t n_train = 128; // per class
    std::size_t n_test = 32;   // per class
    std::size_t frame_size = 32;
    std::size_t clip_len_source = 64;
    std::size_t square_size = 8;
    std::vector<std::size_t> speeds = {1, 2}; // pixels per frame, drawn per video
    std::uint64_t seed = 0;
};

struct LabeledVideo {
    VideoClip video;
    std::size_t label = 0;
};

struct LabeledDataset {
    std::vector<LabeledVideo> train;
    std::vector<LabeledVideo> test;
    std::vector<std::string> class_names;
};

LabeledDataset generate_synthetic(const SynthConfig& cfg);

/// PNG frame directories plus labels.json. Byte-stable for a fixed dataset.
void write_synth_dataset(const LabeledDataset& dataset, const std::filesystem::path& dir);
LabeledDataset load_labeled_dataset(const std::filesystem::path& dir);

/// All frame directories under `dir` in name order, labels ignored.
std::vector<VideoClip> load_video_dirs(const std::filesystem::path& dir);

struct ProbeConfig {
    double lr = 0.1;
    std::size_t epochs = 100;
    double momentum = 0.9;
    // how the fixed evaluation clip is cut from each source video
    std::size_t clip_len = 16;
    std::size_t temporal_stride = 4;
};

struct ProbeResult {
    double top1 = 0.0;
    std::vector<double> per_class;
    std::vector<std::vector<std::size_t>> confusion; // [true][predicted]
};

/// Affine classifier on frozen pre-projection features, trained full-batch by
/// the shared SGD op (no weight decay). Never touches the encoder parameters.
ProbeResult linear_probe(const Encoder& encoder, const Params& params,
                         const LabeledDataset& dataset, const ProbeConfig& cfg = {});

/// Same probe on motion-destroyed clips: every clip is its first frame
/// repeated, so any accuracy above chance would be appearance leakage.
ProbeResult appearance_control(const Encoder& encoder, const Params& params,
                               const LabeledDataset& dataset, const ProbeConfig& cfg = {});

/// Probe core operating on prepared feature vectors; exposed so tests and the
/// CLI hook can inject features (e.g. one-hot) directly.
ProbeResult probe_on_features(const std::vector<std::vector<double>>& train_x,
                              const std::vector<std::size_t>& train_y,
                              const std::vector<std::vector<double>>& test_x,
                              const std::vector<std::size_t>& test_y, std::size_t n_classes,
                              const ProbeConfig& cfg = {});

std::vector<std::vector<double>> one_hot_features(const std::vector<std::size_t>& labels,
                                                  std::size_t n_classes);

/// The deterministic evaluation clip for a video (t_start 0, full frame).
VideoClip probe_clip(const VideoClip& video, const ProbeConfig& cfg);

} // namespace vtdl
