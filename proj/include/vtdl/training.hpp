#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vtdl/augment.hpp"
#include "vtdl/model.hpp"
#include "vtdl/objective.hpp"
#include "vtdl/sampling.hpp"

namespace vtdl {

struct ConfigError : Error {
    using Error::Error;
};
struct NonFiniteGradient : Error {
    using Error::Error;
};
struct CheckpointCorrupt : Error {
    using Error::Error;
};

struct TrainConfig {
    double lr0 = 0.01;
    double sgd_momentum = 0.9;
    double weight_decay = 5e-4;
    std::size_t epochs = 50;
    std::size_t lr_decay_every = 10; // lr multiplied by lr_decay_factor every N epochs
    double lr_decay_factor = 0.1;
    std::size_t batch_size = 16;
    double m = 0.99; // history-network smoothing
    std::uint64_t seed = 0;
    std::size_t bank_capacity = 1024;
    BatchReduction reduction = BatchReduction::Mean;
    SamplingConfig sampling;
    BasicAugConfig basic_aug;
    TCAConfig tca;
    SimilarityConfig similarity;
    EncoderSpec model;
};

struct TrainState {
    EncoderPair pair;
    Params velocity;
    MemoryBank bank;
    std::size_t epoch = 0;
    std::size_t step = 0;
    Rng shuffle_rng{0};
};

struct StepMetrics {
    std::size_t step = 0;
    std::size_t epoch = 0;
    double loss = 0.0;
    double lr = 0.0;
    double mean_pos_sim = 0.0;
    double mean_neg_sim = 0.0;
};

struct Checkpoint {
    EncoderSpec spec;
    TrainState state;
    std::uint64_t seed = 0;
    std::string config_echo;
};

/// lr0 scaled down by lr_decay_factor once per lr_decay_every epochs.
double lr_at(std::size_t epoch, const TrainConfig& cfg);

/// g' = grad + wd*param; v <- momentum*v + g'; param <- param - lr*v.
void sgd_update(Params& params, const Params& grads, Params& velocity, double lr,
                double momentum, double wd);

TrainState init_train_state(const TrainConfig& cfg, const Encoder& encoder);

/// One Algorithm-1 step over a batch: sample and augment triplets, anchors
/// through the history network (detached), positive/negative through the
/// online network, loss, SGD update, bank push, momentum update.
StepMetrics train_step(const std::vector<const VideoClip*>& videos,
                       const std::vector<const VideoClip*>& donors, TrainState& state,
                       const TrainConfig& cfg, const Encoder& encoder);

/// Full epoch loop with seeded per-epoch shuffling, per-epoch checkpoints to
/// `out_dir` and an NDJSON metrics log next to it. Returns the checkpoint
/// path. Resuming from an earlier checkpoint of the same run reproduces the
/// uninterrupted run bit-exactly.
std::filesystem::path run_pretrain(const std::vector<VideoClip>& dataset,
                                   const TrainConfig& cfg,
                                   const std::filesystem::path& out_dir,
                                   const std::optional<std::filesystem::path>& resume = {},
                                   const std::string& config_echo = "{}");

void save_checkpoint(const TrainState& state, const EncoderSpec& spec, std::uint64_t seed,
                     const std::string& config_echo, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Rounds every parameter, velocity and bank value through f32, matching what
/// a reload of the on-disk checkpoint would produce.
void quantize_state(TrainState& state);

} // namespace vtdl
