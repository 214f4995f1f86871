#pragma once

#include <vector>

#include "vtdl/model.hpp"
#include "vtdl/rng.hpp"
#include "vtdl/tensor.hpp"

namespace vtdl {

struct EmptyBatch : Error {
    using Error::Error;
};
struct BatchExceedsCapacity : Error {
    using Error::Error;
};

struct SimilarityConfig {
    double temperature = 0.07;
};

enum class BatchReduction { Mean, Sum };

/// d(u,v) = exp(u.v / T). Strictly positive, so the -log ratio in the loss is
/// always defined.
double similarity(const Embedding& u, const Embedding& v, const SimilarityConfig& cfg);

/// Fixed-capacity FIFO ring of unit-norm embeddings holding past anchors.
class MemoryBank {
public:
    MemoryBank() = default;
    MemoryBank(std::size_t capacity, std::size_t dim)
        : capacity_(capacity), dim_(dim), slots_(capacity * dim, 0.0) {}

    std::size_t capacity() const { return capacity_; }
    std::size_t dim() const { return dim_; }
    std::size_t cursor() const { return cursor_; }
    void set_cursor(std::size_t c) { cursor_ = capacity_ ? c % capacity_ : 0; }

    const double* slot(std::size_t i) const { return slots_.data() + i * dim_; }
    double* slot(std::size_t i) { return slots_.data() + i * dim_; }

    Tensor to_tensor() const;
    static MemoryBank from_tensor(const Tensor& t, std::size_t cursor);

private:
    std::size_t capacity_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> slots_;
    std::size_t cursor_ = 0;
};

/// K uniform-on-sphere vectors (Gaussian draw, then normalize); cursor 0.
MemoryBank bank_init(std::size_t capacity, Rng& rng, std::size_t dim = 128);

/// Writes the anchors at cursor, cursor+1, ... (mod K) and advances the
/// cursor, so the oldest entries are the ones overwritten.
void bank_push(MemoryBank& bank, const std::vector<Embedding>& anchors);

struct TripletEmbedding {
    Embedding v_a; // detached: gradient never flows to the anchor
    Embedding v_p;
    Embedding v_n;
};

struct TdLossResult {
    double loss = 0.0;
    std::vector<double> per_sample;
    std::vector<Embedding> grad_p;
    std::vector<Embedding> grad_n;
    double mean_pos_sim = 0.0; // mean anchor-positive inner product
    double mean_neg_sim = 0.0; // mean anchor-negative inner product
};

/// Per sample: l_i = -log[ d(a,p) / (d(a,p) + d(a,n) + sum_j d(a, B_j)) ].
/// The scalar is the batch mean (or sum); gradients flow through v_p and v_n
/// only and are already scaled by the reduction.
TdLossResult td_loss(const std::vector<TripletEmbedding>& batch, const MemoryBank& bank,
                     const SimilarityConfig& cfg,
                     BatchReduction reduction = BatchReduction::Mean);

} // namespace vtdl
