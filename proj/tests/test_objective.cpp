#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <deque>
#include <numbers>

#include "helpers.hpp"
#include "vtdl/objective.hpp"

using namespace vtdl;
using vtdl::testing::random_unit;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Straight-line re-implementation of the per-sample loss, no shared code.
double loss_oracle(const Embedding& a, const Embedding& p, const Embedding& n,
                   const MemoryBank& bank, double temp) {
    auto d = [&](const Embedding& u, const Embedding& v) {
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
        return std::exp(s / temp);
    };
    double denom = d(a, p) + d(a, n);
    for (std::size_t k = 0; k < bank.capacity(); ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * bank.slot(k)[i];
        denom += std::exp(s / temp);
    }
    return -std::log(d(a, p) / denom);
}

} // namespace

TEST_CASE("similarity is the exponentiated scaled inner product") {
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        Embedding u = random_unit(rng, 16), v = random_unit(rng, 16);
        double got = similarity(u, v, {0.07});
        CHECK(got == doctest::Approx(std::exp(dot(u, v) / 0.07)).epsilon(1e-13));
        CHECK(got > 0.0);
    }
    Embedding short_v(8);
    Embedding long_v(16);
    CHECK_THROWS_AS(similarity(short_v, long_v, {0.07}), ShapeMismatch);
}

TEST_CASE("bank initialization fills unit-norm slots") {
    Rng rng(2);
    MemoryBank bank = bank_init(64, rng, 128);
    REQUIRE(bank.capacity() == 64);
    REQUIRE(bank.dim() == 128);
    CHECK(bank.cursor() == 0);
    for (std::size_t i = 0; i < 64; ++i) {
        double norm = 0.0;
        for (std::size_t j = 0; j < 128; ++j) norm += bank.slot(i)[j] * bank.slot(i)[j];
        CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-12);
    }
}

TEST_CASE("random unit vectors are near-orthogonal in high dimension") {
    // E|cos| for the uniform sphere in d dims is sqrt(2/(pi d)); for d = 128
    // that is about 0.0705. The sample mean over all pairs must land nearby.
    Rng rng(3);
    MemoryBank bank = bank_init(64, rng, 128);
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < 64; ++i)
        for (std::size_t j = i + 1; j < 64; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < 128; ++k) s += bank.slot(i)[k] * bank.slot(j)[k];
            sum += std::abs(s);
            ++pairs;
        }
    double mean = sum / double(pairs);
    double expect = std::sqrt(2.0 / (std::numbers::pi * 128.0));
    CHECK(std::abs(mean - expect) <= 0.01);
}

TEST_CASE("bank push matches a FIFO reference model through wraparound") {
    const std::size_t k = 5, dim = 3;
    Rng rng(4);
    MemoryBank bank = bank_init(k, rng, dim);

    // reference: a deque of the last k pushed embeddings plus initial content
    std::deque<Embedding> ref;
    for (std::size_t i = 0; i < k; ++i)
        ref.emplace_back(bank.slot(i), bank.slot(i) + dim);

    std::size_t pushed = 0;
    Rng vec_rng(5);
    for (std::size_t round = 0; round < 12; ++round) {
        std::size_t batch = 1 + round % 4;
        std::vector<Embedding> anchors;
        for (std::size_t i = 0; i < batch; ++i) anchors.push_back(random_unit(vec_rng, dim));
        bank_push(bank, anchors);
        for (const auto& a : anchors) {
            ref.pop_front();
            ref.push_back(a);
        }
        pushed += batch;
        CHECK(bank.cursor() == pushed % k);

        // oldest-first order of the ring starting at the cursor equals the deque
        for (std::size_t i = 0; i < k; ++i) {
            const double* slot = bank.slot((bank.cursor() + i) % k);
            for (std::size_t j = 0; j < dim; ++j) CHECK(slot[j] == ref[i][j]);
        }
    }
}

TEST_CASE("bank push rejects oversized batches and wrong dims") {
    Rng rng(6);
    MemoryBank bank = bank_init(4, rng, 8);
    std::vector<Embedding> too_many(5, random_unit(rng, 8));
    CHECK_THROWS_AS(bank_push(bank, too_many), BatchExceedsCapacity);
    std::vector<Embedding> wrong_dim(1, random_unit(rng, 7));
    CHECK_THROWS_AS(bank_push(bank, wrong_dim), ShapeMismatch);
    std::vector<Embedding> none;
    CHECK_NOTHROW(bank_push(bank, none));
    CHECK(bank.cursor() == 0);
}

TEST_CASE("bank tensor round trip") {
    Rng rng(7);
    MemoryBank bank = bank_init(6, rng, 4);
    bank.set_cursor(3);
    Tensor t = bank.to_tensor();
    REQUIRE(t.shape() == std::vector<std::size_t>{6, 4});
    MemoryBank back = MemoryBank::from_tensor(t, 3);
    CHECK(back.cursor() == 3);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(back.slot(i)[j] == bank.slot(i)[j]);
    MemoryBank empty;
    CHECK_THROWS_AS(empty.to_tensor(), Error);
}

TEST_CASE("loss equals the straight-line oracle on random instances") {
    Rng rng(8);
    for (int inst = 0; inst < 200; ++inst) {
        std::size_t n = 1 + rng.below(6);
        std::size_t dim = 4 + rng.below(60);
        std::size_t cap = rng.below(20);
        MemoryBank bank = cap ? bank_init(cap, rng, dim) : MemoryBank(0, dim);

        std::vector<TripletEmbedding> batch(n);
        for (auto& t : batch) {
            t.v_a = random_unit(rng, dim);
            t.v_p = random_unit(rng, dim);
            t.v_n = random_unit(rng, dim);
        }
        TdLossResult res = td_loss(batch, bank, {0.07});

        double total = 0.0, pos = 0.0, neg = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double want = loss_oracle(batch[i].v_a, batch[i].v_p, batch[i].v_n, bank, 0.07);
            CHECK(std::abs(res.per_sample[i] - want) <= 1e-10 * std::max(1.0, std::abs(want)));
            total += want;
            pos += dot(batch[i].v_a, batch[i].v_p);
            neg += dot(batch[i].v_a, batch[i].v_n);
        }
        CHECK(res.loss ==
              doctest::Approx(total / double(n)).epsilon(1e-12));
        CHECK(res.mean_pos_sim == doctest::Approx(pos / double(n)).epsilon(1e-12));
        CHECK(res.mean_neg_sim == doctest::Approx(neg / double(n)).epsilon(1e-12));

        TdLossResult sum_res = td_loss(batch, bank, {0.07}, BatchReduction::Sum);
        CHECK(sum_res.loss == doctest::Approx(total).epsilon(1e-12));
    }
}

TEST_CASE("symmetric empty-bank case collapses to log 2") {
    // v_a orthogonal to both v_p and v_n with equal similarity: the ratio is
    // exactly 1/2 regardless of temperature.
    std::size_t dim = 8;
    TripletEmbedding t;
    t.v_a.assign(dim, 0.0);
    t.v_p.assign(dim, 0.0);
    t.v_n.assign(dim, 0.0);
    t.v_a[0] = 1.0;
    t.v_p[1] = 1.0;
    t.v_n[2] = 1.0;
    MemoryBank empty(0, dim);
    for (double temp : {0.07, 0.5, 1.0}) {
        TdLossResult res = td_loss({t}, empty, {temp});
        CHECK(std::abs(res.loss - std::log(2.0)) <= 1e-12);
    }
}

TEST_CASE("gradients match finite differences of the loss") {
    Rng rng(9);
    std::size_t n = 3, dim = 12;
    MemoryBank bank = bank_init(7, rng, dim);
    std::vector<TripletEmbedding> batch(n);
    for (auto& t : batch) {
        t.v_a = random_unit(rng, dim);
        t.v_p = random_unit(rng, dim);
        t.v_n = random_unit(rng, dim);
    }

    for (auto reduction : {BatchReduction::Mean, BatchReduction::Sum}) {
        TdLossResult res = td_loss(batch, bank, {0.07}, reduction);
        const double eps = 1e-7;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                auto fd = [&](std::vector<double>& v) {
                    double keep = v[j];
                    v[j] = keep + eps;
                    double up = td_loss(batch, bank, {0.07}, reduction).loss;
                    v[j] = keep - eps;
                    double down = td_loss(batch, bank, {0.07}, reduction).loss;
                    v[j] = keep;
                    return (up - down) / (2.0 * eps);
                };
                CHECK(res.grad_p[i][j] ==
                      doctest::Approx(fd(batch[i].v_p)).epsilon(1e-5));
                CHECK(res.grad_n[i][j] ==
                      doctest::Approx(fd(batch[i].v_n)).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("loss input validation") {
    MemoryBank bank(0, 4);
    CHECK_THROWS_AS(td_loss({}, bank, {0.07}), EmptyBatch);
    TripletEmbedding bad;
    bad.v_a.assign(4, 0.5);
    bad.v_p.assign(3, 0.5);
    bad.v_n.assign(4, 0.5);
    CHECK_THROWS_AS(td_loss({bad}, bank, {0.07}), ShapeMismatch);
    Rng rng(10);
    MemoryBank wrong = bank_init(2, rng, 5);
    TripletEmbedding ok;
    ok.v_a.assign(4, 0.5);
    ok.v_p.assign(4, 0.5);
    ok.v_n.assign(4, 0.5);
    CHECK_THROWS_AS(td_loss({ok}, wrong, {0.07}), ShapeMismatch);
}
