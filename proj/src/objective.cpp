#include "vtdl/objective.hpp"

#include <algorithm>
#include <cmath>

#include "vtdl/faults.hpp"

namespace vtdl {

double similarity(const Embedding& u, const Embedding& v, const SimilarityConfig& cfg) {
    if (u.size() != v.size()) throw ShapeMismatch("similarity: dimension mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
    return std::exp(dot / cfg.temperature);
}

Tensor MemoryBank::to_tensor() const {
    if (!capacity_ || !dim_) throw Error("MemoryBank::to_tensor: bank has no slots");
    return Tensor({capacity_, dim_}, slots_);
}

MemoryBank MemoryBank::from_tensor(const Tensor& t, std::size_t cursor) {
    if (t.rank() != 2) throw ShapeMismatch("MemoryBank: expected a rank-2 tensor");
    MemoryBank bank(t.dim(0), t.dim(1));
    std::copy(t.data(), t.data() + t.size(), bank.slots_.data());
    bank.set_cursor(cursor);
    return bank;
}

MemoryBank bank_init(std::size_t capacity, Rng& rng, std::size_t dim) {
    MemoryBank bank(capacity, dim);
    for (std::size_t i = 0; i < capacity; ++i) {
        double* s = bank.slot(i);
        double norm = 0.0;
        do {
            norm = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                s[j] = rng.normal();
                norm += s[j] * s[j];
            }
            norm = std::sqrt(norm);
        } while (norm < 1e-12);
        for (std::size_t j = 0; j < dim; ++j) s[j] /= norm;
    }
    return bank;
}

void bank_push(MemoryBank& bank, const std::vector<Embedding>& anchors) {
    if (anchors.size() > bank.capacity())
        throw BatchExceedsCapacity("bank_push: batch larger than bank capacity");
    if (anchors.empty()) return;
    std::size_t k = bank.capacity();
    std::size_t c = bank.cursor();
    for (const Embedding& a : anchors) {
        if (a.size() != bank.dim()) throw ShapeMismatch("bank_push: embedding dim mismatch");
        std::copy(a.begin(), a.end(), bank.slot(c));
        c = (c + 1) % k;
    }
    if (faults::active() != faults::Fault::BankNoAdvance) bank.set_cursor(c);
}

TdLossResult td_loss(const std::vector<TripletEmbedding>& batch, const MemoryBank& bank,
                     const SimilarityConfig& cfg, BatchReduction reduction) {
    if (batch.empty()) throw EmptyBatch("td_loss: empty batch");

    std::size_t n = batch.size();
    double inv_t = 1.0 / cfg.temperature;
    double grad_scale = reduction == BatchReduction::Mean ? 1.0 / double(n) : 1.0;

    TdLossResult res;
    res.per_sample.resize(n);
    res.grad_p.resize(n);
    res.grad_n.resize(n);

    double total = 0.0, pos_sim = 0.0, neg_sim = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const TripletEmbedding& t = batch[i];
        std::size_t dim = t.v_a.size();
        if (t.v_p.size() != dim || t.v_n.size() != dim)
            throw ShapeMismatch("td_loss: triplet embedding dims differ");
        if (bank.capacity() && bank.dim() != dim)
            throw ShapeMismatch("td_loss: bank dim differs from embeddings");

        double dot_p = 0.0, dot_n = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            dot_p += t.v_a[j] * t.v_p[j];
            dot_n += t.v_a[j] * t.v_n[j];
        }
        double s_p = std::exp(dot_p * inv_t);
        double s_n = std::exp(dot_n * inv_t);
        double bank_sum = 0.0;
        for (std::size_t k = 0; k < bank.capacity(); ++k) {
            const double* b = bank.slot(k);
            double dot = 0.0;
            for (std::size_t j = 0; j < dim; ++j) dot += t.v_a[j] * b[j];
            bank_sum += std::exp(dot * inv_t);
        }
        double denom = s_p + s_n + bank_sum;
        double li = std::log(denom) - std::log(s_p);
        res.per_sample[i] = li;
        total += li;
        pos_sim += dot_p;
        neg_sim += dot_n;

        double cp = (s_p / denom - 1.0) * inv_t * grad_scale;
        double cn = (s_n / denom) * inv_t * grad_scale;
        res.grad_p[i].resize(dim);
        res.grad_n[i].resize(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            res.grad_p[i][j] = cp * t.v_a[j];
            res.grad_n[i][j] = cn * t.v_a[j];
        }
    }

    res.loss = reduction == BatchReduction::Mean ? total / double(n) : total;
    res.mean_pos_sim = pos_sim / double(n);
    res.mean_neg_sim = neg_sim / double(n);
    return res;
}

} // namespace vtdl
