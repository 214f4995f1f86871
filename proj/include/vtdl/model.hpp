#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vtdl/clip.hpp"
#include "vtdl/rng.hpp"
#include "vtdl/tensor.hpp"

namespace vtdl {

struct ShapeIncompatible : Error {
    using Error::Error;
};
struct ZeroNorm : Error {
    using Error::Error;
};

struct BlockSpec {
    std::size_t out_channels;
    std::size_t spatial_stride;
    std::size_t temporal_stride;
};

struct EncoderSpec {
    std::vector<BlockSpec> blocks{{16, 2, 1}, {32, 2, 2}, {64, 2, 2}};
    std::size_t in_channels = 3;
    std::size_t embed_dim = 128;

    std::size_t backbone_dim() const { return blocks.back().out_channels; }
};

/// Named tensors in a fixed order. Iteration order is creation order, which
/// the optimizer, the momentum update and the checkpoint format all rely on.
class Params {
public:
    Tensor& add(const std::string& name, Tensor t);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool has(const std::string& name) const;

    std::size_t size() const { return items_.size(); }
    std::pair<std::string, Tensor>& item(std::size_t i) { return items_[i]; }
    const std::pair<std::string, Tensor>& item(std::size_t i) const { return items_[i]; }

    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    bool same_layout(const Params& other) const;
    std::size_t total_elements() const;

    /// Same names and shapes, all values zero.
    Params zeros_like() const;

private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

using Embedding = std::vector<double>;

struct EncoderPair {
    Params online;
    Params history;
    double m = 0.99;
};

/// Per-channel normalization statistics, one mean/sd pair per block. A batch
/// forward fills these in; passing them back freezes them, which is how the
/// history network reuses the online network's statistics and how evaluation
/// featurizes held-out clips with training-split statistics.
struct NormStats {
    std::vector<std::vector<double>> mean; // [block][channel]
    std::vector<std::vector<double>> sd;   // [block][channel], sqrt(var + eps)
};

/// Opaque per-clip activation record kept by the forward pass for backward.
struct ForwardCache {
    struct Block {
        std::vector<double> cols;       // im2col patches, [positions x 27*Cin]
        std::vector<double> normalized; // pre-affine normalized conv output
        std::vector<double> activated;  // post-ReLU block output
        std::vector<double> sigma;      // per-channel sqrt(var + eps)
        std::size_t t, h, w;            // output grid
        std::size_t in_t, in_h, in_w;   // input grid
    };
    std::vector<Block> blocks;
    std::vector<double> pooled;   // GAP output, backbone_dim
    std::vector<double> pre_norm; // projection output before L2
    double norm = 0.0;
    bool frozen_stats = false; // statistics were injected, not computed
};

/// The 3-block 3D CNN with projection head. Stateless apart from the spec;
/// parameters travel separately so the online/history pair can share one
/// encoder object.
class Encoder {
public:
    explicit Encoder(EncoderSpec spec = {});

    const EncoderSpec& spec() const { return spec_; }

    /// Conv kernels and the projection weight are uniform in [-b, b] with
    /// b = sqrt(6 / fan_in); biases and shifts start at 0, scales at 1.
    Params init_params(Rng& rng) const;

    /// Same names and shapes as init_params, every value 0. Used for gradient
    /// buffers, optimizer state and checkpoint loading.
    Params zero_params() const;

    /// Unit-norm embed_dim vector for one clip; normalization statistics come
    /// from the clip itself. Pass a cache to enable backward() afterwards.
    Embedding encode_one(const Params& params, const VideoClip& clip,
                         ForwardCache* cache = nullptr) const;
    std::vector<Embedding> encode(const Params& params,
                                  const std::vector<VideoClip>& clips) const;

    /// Unit-norm embeddings for a batch of same-shape clips. Per-channel
    /// statistics pool over the whole batch unless `frozen` supplies them;
    /// `stats_out` receives whichever statistics were applied. With one clip
    /// and no frozen statistics this matches encode_one exactly.
    std::vector<Embedding> encode_batch(const Params& params,
                                        const std::vector<const VideoClip*>& clips,
                                        const NormStats* frozen = nullptr,
                                        NormStats* stats_out = nullptr,
                                        std::vector<ForwardCache>* caches = nullptr) const;

    /// Pre-projection global-average-pooled activations (not normalized).
    std::vector<double> backbone_one(const Params& params, const VideoClip& clip) const;
    std::vector<std::vector<double>> backbone_features(const Params& params,
                                                       const std::vector<VideoClip>& clips) const;

    /// Batch variant of backbone_features with pooled (or frozen) statistics,
    /// mirroring encode_batch.
    std::vector<std::vector<double>> backbone_batch(const Params& params,
                                                    const std::vector<const VideoClip*>& clips,
                                                    const NormStats* frozen = nullptr,
                                                    NormStats* stats_out = nullptr) const;

    /// Accumulates d(loss)/d(param) into grads given d(loss)/d(embedding).
    void backward(const Params& params, const ForwardCache& cache,
                  const std::vector<double>& d_embedding, Params& grads) const;

    /// Joint backward over the caches of one encode_batch call. When that call
    /// computed its own statistics the gradient flows through them, coupling
    /// every clip in the batch; frozen statistics are treated as constants.
    void backward_batch(const Params& params, const std::vector<const ForwardCache*>& caches,
                        const std::vector<std::vector<double>>& d_embeddings,
                        Params& grads) const;

private:
    void run_batch(const Params& params, const std::vector<const VideoClip*>& clips,
                   const NormStats* frozen, NormStats* stats_out,
                   std::vector<ForwardCache>* caches,
                   std::vector<std::vector<double>>* pooled_out,
                   std::vector<Embedding>* embeddings_out) const;

    EncoderSpec spec_;
};

/// history <- m*history + (1-m)*online on every tensor.
void momentum_update(Params& history, const Params& online, double m);
void momentum_update(EncoderPair& pair);

} // namespace vtdl
