#include "vtdl/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace vtdl {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConst = Eigen::Map<const RowMat>;

constexpr double kNormEps = 1e-5;  // inside the per-channel variance sqrt
constexpr double kZeroNorm = 1e-12;

std::size_t conv_out(std::size_t in, std::size_t stride) {
    // kernel 3, padding 1
    return (in - 1) / stride + 1;
}

std::string block_name(std::size_t i, const char* leaf) {
    return "block" + std::to_string(i) + "." + leaf;
}

// Gathers 3x3x3 patches (padding 1) into a [positions x 27*Cin] matrix.
void im2col(const double* in, std::size_t it, std::size_t ih, std::size_t iw, std::size_t cin,
            std::size_t st, std::size_t ss, std::size_t ot, std::size_t oh, std::size_t ow,
            std::vector<double>& cols) {
    std::size_t patch = 27 * cin;
    cols.assign(ot * oh * ow * patch, 0.0);
    for (std::size_t t = 0; t < ot; ++t) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                double* row = cols.data() + ((t * oh + y) * ow + x) * patch;
                for (std::size_t dt = 0; dt < 3; ++dt) {
                    std::size_t src_t = t * st + dt;
                    if (src_t < 1 || src_t > it) continue; // padded slice
                    --src_t;
                    for (std::size_t dy = 0; dy < 3; ++dy) {
                        std::size_t src_y = y * ss + dy;
                        if (src_y < 1 || src_y > ih) continue;
                        --src_y;
                        for (std::size_t dx = 0; dx < 3; ++dx) {
                            std::size_t src_x = x * ss + dx;
                            if (src_x < 1 || src_x > iw) continue;
                            --src_x;
                            const double* src = in + ((src_t * ih + src_y) * iw + src_x) * cin;
                            double* dst = row + ((dt * 3 + dy) * 3 + dx) * cin;
                            std::copy(src, src + cin, dst);
                        }
                    }
                }
            }
        }
    }
}

// Scatters patch-space gradients back onto the input grid (transpose of im2col).
void col2im(const std::vector<double>& cols, std::size_t it, std::size_t ih, std::size_t iw,
            std::size_t cin, std::size_t st, std::size_t ss, std::size_t ot, std::size_t oh,
            std::size_t ow, std::vector<double>& din) {
    std::size_t patch = 27 * cin;
    din.assign(it * ih * iw * cin, 0.0);
    for (std::size_t t = 0; t < ot; ++t) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                const double* row = cols.data() + ((t * oh + y) * ow + x) * patch;
                for (std::size_t dt = 0; dt < 3; ++dt) {
                    std::size_t src_t = t * st + dt;
                    if (src_t < 1 || src_t > it) continue;
                    --src_t;
                    for (std::size_t dy = 0; dy < 3; ++dy) {
                        std::size_t src_y = y * ss + dy;
                        if (src_y < 1 || src_y > ih) continue;
                        --src_y;
                        for (std::size_t dx = 0; dx < 3; ++dx) {
                            std::size_t src_x = x * ss + dx;
                            if (src_x < 1 || src_x > iw) continue;
                            --src_x;
                            double* dst = din.data() + ((src_t * ih + src_y) * iw + src_x) * cin;
                            const double* src = row + ((dt * 3 + dy) * 3 + dx) * cin;
                            for (std::size_t c = 0; c < cin; ++c) dst[c] += src[c];
                        }
                    }
                }
            }
        }
    }
}

} // namespace

Tensor& Params::add(const std::string& name, Tensor t) {
    items_.emplace_back(name, std::move(t));
    return items_.back().second;
}

Tensor& Params::at(const std::string& name) {
    for (auto& [n, t] : items_)
        if (n == name) return t;
    throw Error("Params: no tensor named '" + name + "'");
}

const Tensor& Params::at(const std::string& name) const {
    for (const auto& [n, t] : items_)
        if (n == name) return t;
    throw Error("Params: no tensor named '" + name + "'");
}

bool Params::has(const std::string& name) const {
    for (const auto& [n, t] : items_)
        if (n == name) return true;
    return false;
}

bool Params::same_layout(const Params& other) const {
    if (items_.size() != other.items_.size()) return false;
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].first != other.items_[i].first) return false;
        if (!items_[i].second.same_shape(other.items_[i].second)) return false;
    }
    return true;
}

std::size_t Params::total_elements() const {
    std::size_t n = 0;
    for (const auto& [name, t] : items_) n += t.size();
    return n;
}

Params Params::zeros_like() const {
    Params out;
    for (const auto& [name, t] : items_) out.add(name, Tensor::zeros(t.shape()));
    return out;
}

Encoder::Encoder(EncoderSpec spec) : spec_(std::move(spec)) {
    if (spec_.blocks.empty()) throw Error("EncoderSpec: needs at least one block");
    if (spec_.embed_dim == 0 || spec_.in_channels == 0)
        throw Error("EncoderSpec: zero embed_dim or in_channels");
    for (const auto& b : spec_.blocks)
        if (b.out_channels == 0 || b.spatial_stride == 0 || b.temporal_stride == 0)
            throw Error("EncoderSpec: zero channel count or stride");
}

Params Encoder::zero_params() const {
    Params params;
    std::size_t cin = spec_.in_channels;
    for (std::size_t i = 0; i < spec_.blocks.size(); ++i) {
        std::size_t cout = spec_.blocks[i].out_channels;
        params.add(block_name(i, "conv.weight"), Tensor::zeros({3, 3, 3, cin, cout}));
        params.add(block_name(i, "conv.bias"), Tensor::zeros({cout}));
        params.add(block_name(i, "norm.scale"), Tensor::zeros({cout}));
        params.add(block_name(i, "norm.shift"), Tensor::zeros({cout}));
        cin = cout;
    }
    params.add("proj.weight", Tensor::zeros({cin, spec_.embed_dim}));
    params.add("proj.bias", Tensor::zeros({spec_.embed_dim}));
    return params;
}

Params Encoder::init_params(Rng& rng) const {
    Params params;
    std::size_t cin = spec_.in_channels;
    for (std::size_t i = 0; i < spec_.blocks.size(); ++i) {
        std::size_t cout = spec_.blocks[i].out_channels;
        double bound = std::sqrt(6.0 / double(27 * cin));
        Tensor w({3, 3, 3, cin, cout});
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = rng.uniform(-bound, bound);
        params.add(block_name(i, "conv.weight"), std::move(w));
        params.add(block_name(i, "conv.bias"), Tensor::zeros({cout}));
        params.add(block_name(i, "norm.scale"), Tensor::full({cout}, 1.0));
        params.add(block_name(i, "norm.shift"), Tensor::zeros({cout}));
        cin = cout;
    }
    double bound = std::sqrt(6.0 / double(cin));
    Tensor w({cin, spec_.embed_dim});
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = rng.uniform(-bound, bound);
    params.add("proj.weight", std::move(w));
    params.add("proj.bias", Tensor::zeros({spec_.embed_dim}));
    return params;
}

void Encoder::run_batch(const Params& params, const std::vector<const VideoClip*>& clips,
                        const NormStats* frozen, NormStats* stats_out,
                        std::vector<ForwardCache>* caches,
                        std::vector<std::vector<double>>* pooled_out,
                        std::vector<Embedding>* embeddings_out) const {
    std::size_t batch = clips.size();
    if (batch == 0) throw ShapeIncompatible("encode: empty batch");
    for (std::size_t b = 0; b < batch; ++b) {
        if (clips[b]->channels() != spec_.in_channels)
            throw ShapeIncompatible("encode: clip has " +
                                    std::to_string(clips[b]->channels()) +
                                    " channels, encoder expects " +
                                    std::to_string(spec_.in_channels));
        if (b > 0 && !clips[b]->frames.same_shape(clips[0]->frames))
            throw ShapeIncompatible("encode: clips in a batch must share one shape");
    }
    if (frozen &&
        (frozen->mean.size() != spec_.blocks.size() || frozen->sd.size() != spec_.blocks.size()))
        throw ShapeMismatch("encode: frozen statistics do not cover every block");

    std::size_t it = clips[0]->length(), ih = clips[0]->height(), iw = clips[0]->width();
    std::size_t cin = spec_.in_channels;

    if (caches) {
        caches->assign(batch, ForwardCache{});
        for (auto& c : *caches) {
            c.blocks.resize(spec_.blocks.size());
            c.frozen_stats = frozen != nullptr;
        }
    }
    if (stats_out) {
        stats_out->mean.assign(spec_.blocks.size(), {});
        stats_out->sd.assign(spec_.blocks.size(), {});
    }

    std::vector<std::vector<double>> acts(batch); // per-clip activations between blocks
    std::vector<const double*> inputs(batch);
    for (std::size_t b = 0; b < batch; ++b) inputs[b] = clips[b]->frames.data();

    std::vector<double> cols;
    for (std::size_t bi = 0; bi < spec_.blocks.size(); ++bi) {
        const BlockSpec& blk = spec_.blocks[bi];
        std::size_t ot = conv_out(it, blk.temporal_stride);
        std::size_t oh = conv_out(ih, blk.spatial_stride);
        std::size_t ow = conv_out(iw, blk.spatial_stride);
        std::size_t rows = ot * oh * ow;
        std::size_t cout = blk.out_channels;

        const Tensor& w = params.at(block_name(bi, "conv.weight"));
        const Tensor& bias = params.at(block_name(bi, "conv.bias"));
        const Tensor& scale = params.at(block_name(bi, "norm.scale"));
        const Tensor& shift = params.at(block_name(bi, "norm.shift"));

        std::vector<std::vector<double>> conv(batch);
        for (std::size_t b = 0; b < batch; ++b) {
            im2col(inputs[b], it, ih, iw, cin, blk.temporal_stride, blk.spatial_stride, ot, oh,
                   ow, cols);
            conv[b].resize(rows * cout);
            MapConst cmat(cols.data(), Eigen::Index(rows), Eigen::Index(27 * cin));
            MapConst wmat(w.data(), Eigen::Index(27 * cin), Eigen::Index(cout));
            MapMat omat(conv[b].data(), Eigen::Index(rows), Eigen::Index(cout));
            omat.noalias() = cmat * wmat;
            omat.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data(),
                                                                   Eigen::Index(cout));
            if (caches) (*caches)[b].blocks[bi].cols = cols;
        }

        // Per-channel statistics pooled over every clip's (T,H,W) positions,
        // unless a frozen set overrides them. Computed statistics are
        // recomputed every forward; the backward pass differentiates through
        // them, which couples the clips of a batch.
        std::vector<double> mean(cout), sd(cout);
        if (frozen) {
            if (frozen->mean[bi].size() != cout || frozen->sd[bi].size() != cout)
                throw ShapeMismatch("encode: frozen statistics do not match block " +
                                    std::to_string(bi));
            mean = frozen->mean[bi];
            sd = frozen->sd[bi];
        } else {
            std::fill(mean.begin(), mean.end(), 0.0);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cout; ++c) mean[c] += conv[b][r * cout + c];
            for (std::size_t c = 0; c < cout; ++c) mean[c] /= double(batch * rows);
            std::vector<double> var(cout, 0.0);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < cout; ++c) {
                        double d = conv[b][r * cout + c] - mean[c];
                        var[c] += d * d;
                    }
            for (std::size_t c = 0; c < cout; ++c) {
                var[c] /= double(batch * rows);
                sd[c] = std::sqrt(var[c] + kNormEps);
            }
        }
        if (stats_out) {
            stats_out->mean[bi] = mean;
            stats_out->sd[bi] = sd;
        }

        for (std::size_t b = 0; b < batch; ++b) {
            std::vector<double>& v = conv[b];
            std::vector<double>* norm_store = nullptr;
            if (caches) {
                norm_store = &(*caches)[b].blocks[bi].normalized;
                norm_store->resize(rows * cout);
            }
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cout; ++c) {
                    std::size_t idx = r * cout + c;
                    double y = (v[idx] - mean[c]) / sd[c];
                    if (norm_store) (*norm_store)[idx] = y;
                    v[idx] = std::max(scale[c] * y + shift[c], 0.0);
                }
            if (caches) {
                ForwardCache::Block& cb = (*caches)[b].blocks[bi];
                cb.activated = v;
                cb.sigma = sd;
                cb.t = ot;
                cb.h = oh;
                cb.w = ow;
                cb.in_t = it;
                cb.in_h = ih;
                cb.in_w = iw;
            }
            acts[b] = std::move(conv[b]);
            inputs[b] = acts[b].data();
        }

        it = ot;
        ih = oh;
        iw = ow;
        cin = cout;
    }

    if (pooled_out) pooled_out->assign(batch, {});
    if (embeddings_out) embeddings_out->assign(batch, {});

    std::size_t rows = it * ih * iw;
    std::size_t embed = spec_.embed_dim;
    const Tensor& pw = params.at("proj.weight");
    const Tensor& pb = params.at("proj.bias");
    for (std::size_t b = 0; b < batch; ++b) {
        std::vector<double> pooled(cin, 0.0);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cin; ++c) pooled[c] += inputs[b][r * cin + c];
        for (double& v : pooled) v /= double(rows);
        if (pooled_out) (*pooled_out)[b] = pooled;
        if (!embeddings_out && !caches) continue;

        std::vector<double> pre(embed);
        for (std::size_t j = 0; j < embed; ++j) pre[j] = pb[j];
        for (std::size_t i = 0; i < cin; ++i) {
            double h = pooled[i];
            const double* wr = pw.data() + i * embed;
            for (std::size_t j = 0; j < embed; ++j) pre[j] += h * wr[j];
        }

        double norm_sq = 0.0;
        for (double v : pre) norm_sq += v * v;
        double norm = std::sqrt(norm_sq);
        if (norm < kZeroNorm)
            throw ZeroNorm("encode: pre-normalization vector has near-zero norm");

        if (embeddings_out) {
            Embedding& out = (*embeddings_out)[b];
            out.resize(embed);
            for (std::size_t j = 0; j < embed; ++j) out[j] = pre[j] / norm;
        }
        if (caches) {
            ForwardCache& cache = (*caches)[b];
            cache.pooled = std::move(pooled);
            cache.pre_norm = std::move(pre);
            cache.norm = norm;
        }
    }
}

Embedding Encoder::encode_one(const Params& params, const VideoClip& clip,
                              ForwardCache* cache) const {
    std::vector<Embedding> out;
    if (cache) {
        std::vector<ForwardCache> caches;
        run_batch(params, {&clip}, nullptr, nullptr, &caches, nullptr, &out);
        *cache = std::move(caches[0]);
    } else {
        run_batch(params, {&clip}, nullptr, nullptr, nullptr, nullptr, &out);
    }
    return std::move(out[0]);
}

std::vector<Embedding> Encoder::encode_batch(const Params& params,
                                             const std::vector<const VideoClip*>& clips,
                                             const NormStats* frozen, NormStats* stats_out,
                                             std::vector<ForwardCache>* caches) const {
    std::vector<Embedding> out;
    run_batch(params, clips, frozen, stats_out, caches, nullptr, &out);
    return out;
}

std::vector<std::vector<double>> Encoder::backbone_batch(
    const Params& params, const std::vector<const VideoClip*>& clips, const NormStats* frozen,
    NormStats* stats_out) const {
    std::vector<std::vector<double>> pooled;
    run_batch(params, clips, frozen, stats_out, nullptr, &pooled, nullptr);
    return pooled;
}

std::vector<Embedding> Encoder::encode(const Params& params,
                                       const std::vector<VideoClip>& clips) const {
    std::vector<Embedding> out;
    out.reserve(clips.size());
    for (std::size_t i = 0; i < clips.size(); ++i) {
        if (i > 0 && !clips[i].frames.same_shape(clips[0].frames))
            throw ShapeIncompatible("encode: clips in a batch must share one shape");
        out.push_back(encode_one(params, clips[i]));
    }
    return out;
}

std::vector<double> Encoder::backbone_one(const Params& params, const VideoClip& clip) const {
    std::vector<std::vector<double>> pooled;
    run_batch(params, {&clip}, nullptr, nullptr, nullptr, &pooled, nullptr);
    return std::move(pooled[0]);
}

std::vector<std::vector<double>> Encoder::backbone_features(
    const Params& params, const std::vector<VideoClip>& clips) const {
    std::vector<std::vector<double>> out;
    out.reserve(clips.size());
    for (std::size_t i = 0; i < clips.size(); ++i) {
        if (i > 0 && !clips[i].frames.same_shape(clips[0].frames))
            throw ShapeIncompatible("backbone_features: clips in a batch must share one shape");
        out.push_back(backbone_one(params, clips[i]));
    }
    return out;
}

void Encoder::backward(const Params& params, const ForwardCache& cache,
                       const std::vector<double>& d_embedding, Params& grads) const {
    backward_batch(params, {&cache}, {d_embedding}, grads);
}

void Encoder::backward_batch(const Params& params,
                             const std::vector<const ForwardCache*>& caches,
                             const std::vector<std::vector<double>>& d_embeddings,
                             Params& grads) const {
    std::size_t batch = caches.size();
    if (batch == 0) throw ShapeMismatch("backward: empty batch");
    if (d_embeddings.size() != batch)
        throw ShapeMismatch("backward: one embedding gradient per cache required");
    std::size_t embed = spec_.embed_dim;
    for (std::size_t b = 0; b < batch; ++b) {
        if (d_embeddings[b].size() != embed)
            throw ShapeMismatch("backward: embedding gradient has wrong dimension");
        if (caches[b]->blocks.size() != spec_.blocks.size())
            throw ShapeMismatch("backward: cache does not match the encoder spec");
    }
    // Statistics were shared across the batch, so gradients only make sense
    // for caches born in one forward call; frozen statistics are constants.
    bool frozen = caches[0]->frozen_stats;

    std::size_t backbone = spec_.backbone_dim();
    const Tensor& pw = params.at("proj.weight");
    Tensor& dpw = grads.at("proj.weight");
    Tensor& dpb = grads.at("proj.bias");

    std::vector<std::vector<double>> dacts(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        const ForwardCache& cache = *caches[b];
        const std::vector<double>& d_embedding = d_embeddings[b];

        // L2 normalization: v = e/n, so de = (g - (g.v) v)/n.
        double n = cache.norm;
        double gv = 0.0;
        for (std::size_t j = 0; j < embed; ++j) gv += d_embedding[j] * cache.pre_norm[j] / n;
        std::vector<double> de(embed);
        for (std::size_t j = 0; j < embed; ++j)
            de[j] = (d_embedding[j] - gv * cache.pre_norm[j] / n) / n;

        std::vector<double> dpooled(backbone, 0.0);
        for (std::size_t i = 0; i < backbone; ++i) {
            const double* wr = pw.data() + i * embed;
            double* dwr = dpw.data() + i * embed;
            double h = cache.pooled[i];
            double acc = 0.0;
            for (std::size_t j = 0; j < embed; ++j) {
                dwr[j] += h * de[j];
                acc += wr[j] * de[j];
            }
            dpooled[i] = acc;
        }
        for (std::size_t j = 0; j < embed; ++j) dpb[j] += de[j];

        // GAP spreads the gradient uniformly over positions.
        const ForwardCache::Block& last = cache.blocks.back();
        std::size_t rows = last.t * last.h * last.w;
        dacts[b].resize(rows * backbone);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < backbone; ++c)
                dacts[b][r * backbone + c] = dpooled[c] / double(rows);
    }

    for (std::size_t bi = spec_.blocks.size(); bi-- > 0;) {
        const BlockSpec& blk = spec_.blocks[bi];
        std::size_t cout = blk.out_channels;
        std::size_t cin = bi == 0 ? spec_.in_channels : spec_.blocks[bi - 1].out_channels;
        std::size_t brows = caches[0]->blocks[bi].t * caches[0]->blocks[bi].h *
                            caches[0]->blocks[bi].w;

        const Tensor& scale = params.at(block_name(bi, "norm.scale"));
        Tensor& dscale = grads.at(block_name(bi, "norm.scale"));
        Tensor& dshift = grads.at(block_name(bi, "norm.shift"));
        Tensor& dbias = grads.at(block_name(bi, "conv.bias"));
        const Tensor& w = params.at(block_name(bi, "conv.weight"));
        Tensor& dw = grads.at(block_name(bi, "conv.weight"));

        // ReLU, affine, then the shared normalization statistics: batch-wide
        // means enter the centering terms, so each clip's gradient feels every
        // other clip. dconv holds dy per clip until the second sweep.
        std::vector<std::vector<double>> dconv(batch);
        std::vector<double> sum_dz(cout, 0.0), sum_dzy(cout, 0.0);
        for (std::size_t b = 0; b < batch; ++b) {
            const ForwardCache::Block& cb = caches[b]->blocks[bi];
            dconv[b].resize(brows * cout);
            for (std::size_t c = 0; c < cout; ++c) {
                double g = scale[c];
                for (std::size_t r = 0; r < brows; ++r) {
                    std::size_t idx = r * cout + c;
                    double dz = cb.activated[idx] > 0.0 ? dacts[b][idx] : 0.0;
                    sum_dz[c] += dz;
                    sum_dzy[c] += dz * cb.normalized[idx];
                    dconv[b][idx] = dz * g;
                }
            }
        }
        for (std::size_t c = 0; c < cout; ++c) {
            dscale[c] += sum_dzy[c];
            dshift[c] += sum_dz[c];
        }

        std::size_t total = batch * brows;
        for (std::size_t c = 0; c < cout; ++c) {
            double g = scale[c];
            double mean_dy = frozen ? 0.0 : g * sum_dz[c] / double(total);
            double mean_dyy = frozen ? 0.0 : g * sum_dzy[c] / double(total);
            double inv_sd = 1.0 / caches[0]->blocks[bi].sigma[c];
            double db = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const ForwardCache::Block& cb = caches[b]->blocks[bi];
                for (std::size_t r = 0; r < brows; ++r) {
                    std::size_t idx = r * cout + c;
                    double v = (dconv[b][idx] - mean_dy - cb.normalized[idx] * mean_dyy) *
                               inv_sd;
                    dconv[b][idx] = v;
                    db += v;
                }
            }
            dbias[c] += db;
        }

        std::size_t patch = 27 * cin;
        for (std::size_t b = 0; b < batch; ++b) {
            const ForwardCache::Block& cb = caches[b]->blocks[bi];
            {
                MapConst cmat(cb.cols.data(), Eigen::Index(brows), Eigen::Index(patch));
                MapConst dmat(dconv[b].data(), Eigen::Index(brows), Eigen::Index(cout));
                MapMat dwmat(dw.data(), Eigen::Index(patch), Eigen::Index(cout));
                dwmat.noalias() += cmat.transpose() * dmat;
            }
            if (bi == 0) continue; // input gradient not needed
            std::vector<double> dcols(brows * patch);
            {
                MapConst dmat(dconv[b].data(), Eigen::Index(brows), Eigen::Index(cout));
                MapConst wmat(w.data(), Eigen::Index(patch), Eigen::Index(cout));
                MapMat dcmat(dcols.data(), Eigen::Index(brows), Eigen::Index(patch));
                dcmat.noalias() = dmat * wmat.transpose();
            }
            col2im(dcols, cb.in_t, cb.in_h, cb.in_w, cin, blk.temporal_stride,
                   blk.spatial_stride, cb.t, cb.h, cb.w, dacts[b]);
        }
    }
}

void momentum_update(Params& history, const Params& online, double m) {
    if (!history.same_layout(online))
        throw ShapeMismatch("momentum_update: online and history layouts differ");
    for (std::size_t i = 0; i < history.size(); ++i) {
        Tensor& h = history.item(i).second;
        const Tensor& o = online.item(i).second;
        for (std::size_t j = 0; j < h.size(); ++j) h[j] = m * h[j] + (1.0 - m) * o[j];
    }
}

void momentum_update(EncoderPair& pair) { momentum_update(pair.history, pair.online, pair.m); }

} // namespace vtdl
